use std::path::{Path, PathBuf};

use anyhow::Context;
use c2v_core::ingestion::{rating_warnings, write_ev_csv, write_household_csv};
use c2v_core::report::{
    emit_comparison_json, emit_hourly_trace_csv, emit_pv_split_csv, emit_report_json,
    emit_sweep_csv, emit_sweep_json, write_text,
};
use c2v_core::{
    compare_s1_s2, run_s1, run_sweep, settle_year_s2, ChargerSpec, ProfileBundle, Regime,
    ScenarioReport, SweepGrid,
};

use crate::config::{Invalid, RunConfig};

/// Fails with every static configuration problem at once.
fn check(cfg: &RunConfig) -> anyhow::Result<()> {
    let problems = cfg.problems();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Invalid(problems).into())
    }
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<&Path> {
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

/// File-name friendly form of a label.
fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

fn write(path: PathBuf, text: &str) -> anyhow::Result<()> {
    write_text(&path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn warn_ratings(cfg: &RunConfig, bundle: &ProfileBundle) {
    let Some(port) = cfg
        .chargers
        .iter()
        .filter(|c| c.n_cp > 0)
        .map(|c| c.p_max_kw)
        .reduce(f64::min)
    else {
        return;
    };
    let warnings = rating_warnings(bundle.ev_profiles(), port);
    for w in &warnings {
        log::debug!("{w}");
    }
    if let Some(first) = warnings.first() {
        log::warn!(
            "{} of {} EV profiles exceed the {port} kW port rating (first: {first})",
            warnings.len(),
            bundle.ev_profiles().len()
        );
    }
}

pub fn validate(cfg: &RunConfig) -> anyhow::Result<()> {
    check(cfg)?;
    let bundle = cfg.load_bundle()?;
    warn_ratings(cfg, &bundle);
    let spec = cfg.sweep_spec(&bundle);
    spec.validate()
        .map_err(|e| Invalid(vec![format!("sweep: {e}")]))?;
    say!(
        "ok: {} households, {} EV profiles, {} steps of {} h, {} scenario(s), {} charger option(s)",
        bundle.households().len(),
        bundle.ev_profiles().len(),
        bundle.axis().steps(),
        bundle.axis().dt_hours(),
        spec.scenarios.len(),
        spec.charger_options.len()
    );
    Ok(())
}

fn print_report(r: &ScenarioReport) {
    let m = &r.metrics;
    let absorption = m
        .m1_absorption_ratio
        .map(|a| format!("{:.1}%", a * 100.0))
        .unwrap_or_else(|| "n/a".into());
    let class = r
        .classification
        .map(|c| format!(" [{} {:.2}]", c.label, c.utilization_ratio))
        .unwrap_or_default();
    let payback = m
        .m4_revenue
        .payback_years
        .map(|y| format!("{y:.2} yr"))
        .unwrap_or_else(|| "none".into());
    say!(
        "{} {} {}{class}: absorption {absorption}, peak import {:.1} kW, peak export {:.1} kW, \
         EV savings {:.2} CHF, revenue {:.2} CHF, payback {payback}",
        r.regime,
        r.label,
        r.chargers,
        m.m2_peak_import_kw,
        m.m2_peak_export_kw,
        m.m3_ev_savings_chf,
        m.m4_revenue.total_chf,
    );
}

pub fn run(cfg: &RunConfig, regime: Regime) -> anyhow::Result<()> {
    check(cfg)?;
    let bundle = cfg.load_bundle()?;
    warn_ratings(cfg, &bundle);
    let dir = out_dir(cfg)?;
    match regime {
        Regime::S1 => {
            let year = run_s1(&bundle, &cfg.prices, &cfg.settlement)?;
            let report = ScenarioReport::from_year(
                "s1",
                &year,
                &cfg.prices,
                &cfg.settlement,
                &cfg.thresholds,
            );
            write(dir.join("report_s1.json"), &emit_report_json(&report)?)?;
            write(
                dir.join("trace_s1.csv"),
                &emit_hourly_trace_csv(&year, bundle.axis()),
            )?;
            print_report(&report);
        }
        Regime::S2 => {
            for scenario in cfg.scenarios_or_default(&bundle) {
                let demand = scenario.demand(&bundle)?;
                for chargers in &cfg.chargers {
                    let year =
                        settle_year_s2(&bundle, &cfg.prices, &cfg.settlement, chargers, &demand)?;
                    let report = ScenarioReport::from_year(
                        &scenario.label,
                        &year,
                        &cfg.prices,
                        &cfg.settlement,
                        &cfg.thresholds,
                    );
                    let stem = format!("s2_{}_{}", slug(&scenario.label), slug(&chargers.label()));
                    write(
                        dir.join(format!("report_{stem}.json")),
                        &emit_report_json(&report)?,
                    )?;
                    write(
                        dir.join(format!("trace_{stem}.csv")),
                        &emit_hourly_trace_csv(&year, bundle.axis()),
                    )?;
                    print_report(&report);
                }
            }
        }
    }
    Ok(())
}

fn print_sweep(grid: &SweepGrid, chargers: &[ChargerSpec]) {
    say!(
        "{:<16} {:<10} {:>6} {:>12} {:>12} {:>10}",
        "scenario",
        "chargers",
        "price",
        "revenue_chf",
        "savings_chf",
        "payback_yr"
    );
    let mut scenarios: Vec<&str> = Vec::new();
    for p in &grid.points {
        if !scenarios.contains(&p.scenario.as_str()) {
            scenarios.push(&p.scenario);
        }
    }
    for s in scenarios {
        for c in chargers {
            let label = c.label();
            let mut revenues = Vec::new();
            for p in grid
                .points
                .iter()
                .filter(|p| p.scenario == s && p.charger_option == label)
            {
                match &p.report {
                    Some(r) => {
                        let rev = &r.metrics.m4_revenue;
                        revenues.push(rev.total_chf);
                        say!(
                            "{:<16} {:<10} {:>6.2} {:>12.2} {:>12.2} {:>10}",
                            s,
                            label,
                            p.ev_price_chf_kwh,
                            rev.total_chf,
                            r.metrics.m3_ev_savings_chf,
                            rev.payback_years
                                .map(|y| format!("{y:.2}"))
                                .unwrap_or_else(|| "-".into())
                        );
                    }
                    None => say!(
                        "{:<16} {:<10} {:>6.2} {:>12} ({})",
                        s,
                        label,
                        p.ev_price_chf_kwh,
                        "infeasible",
                        p.infeasibility.as_deref().unwrap_or("")
                    ),
                }
            }
            if let (Some(lo), Some(hi)) = (
                revenues.iter().copied().reduce(f64::min),
                revenues.iter().copied().reduce(f64::max),
            ) {
                say!(
                    "{:<16} {:<10} revenue range {lo:.2} .. {hi:.2} CHF",
                    s,
                    label
                );
            }
        }
    }
}

pub fn sweep(cfg: &RunConfig) -> anyhow::Result<()> {
    check(cfg)?;
    let bundle = cfg.load_bundle()?;
    warn_ratings(cfg, &bundle);
    let spec = cfg.sweep_spec(&bundle);
    let grid = run_sweep(&bundle, &cfg.prices, &cfg.settlement, &spec)?;
    let dir = out_dir(cfg)?;
    write(dir.join("sweep.csv"), &emit_sweep_csv(&grid)?)?;
    write(dir.join("sweep.json"), &emit_sweep_json(&grid)?)?;
    print_sweep(&grid, &spec.charger_options);
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.synth.clone().unwrap_or_default();
    let problems = params.validate();
    if !problems.is_empty() {
        return Err(Invalid(problems).into());
    }
    let axis = cfg
        .time_axis()
        .map_err(|e| Invalid(vec![format!("axis: {e}")]))?;
    let bundle = params.generate(cfg.seed, &axis)?;
    let dir = out_dir(cfg)?;
    write_household_csv(dir.join("households.csv"), &axis, bundle.households())?;
    write_ev_csv(dir.join("ev.csv"), &axis, bundle.ev_profiles())?;
    let dt = axis.dt_hours();
    let kwh = |v: &[f64]| v.iter().sum::<f64>() * dt;
    say!("{:<8} {:>12} {:>12}", "series", "load_kwh", "pv_kwh");
    for h in bundle.households() {
        say!(
            "{:<8} {:>12.1} {:>12.1}",
            h.id(),
            kwh(h.load()),
            kwh(h.pv_gen())
        );
    }
    say!("{:<8} {:>12}", "series", "ev_kwh");
    for p in bundle.ev_profiles() {
        say!("{:<8} {:>12.1}", p.id(), kwh(p.demand()));
    }
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> anyhow::Result<()> {
    check(cfg)?;
    let bundle = cfg.load_bundle()?;
    warn_ratings(cfg, &bundle);
    let dir = out_dir(cfg)?;
    let mut split_rows = Vec::new();
    for scenario in cfg.scenarios_or_default(&bundle) {
        let demand = scenario.demand(&bundle)?;
        for chargers in &cfg.chargers {
            let c = compare_s1_s2(
                &scenario.label,
                &bundle,
                &cfg.prices,
                &cfg.settlement,
                chargers,
                &demand,
                &cfg.thresholds,
            )?;
            let stem = format!("{}_{}", slug(&scenario.label), slug(&chargers.label()));
            write(
                dir.join(format!("comparison_{stem}.json")),
                &emit_comparison_json(&c)?,
            )?;
            let d = &c.deltas;
            say!(
                "{} {}: absorption {:+.1} pp, peak import {:+.1} kW, peak export {:+.1} kW, \
                 revenue {:.2} CHF, EV savings {:.2} CHF",
                scenario.label,
                chargers,
                d.absorption_gain.unwrap_or(0.0) * 100.0,
                d.peak_import_change_kw,
                d.peak_export_change_kw,
                d.revenue_chf,
                d.ev_savings_chf
            );
            for (id, v) in &d.m5_per_household_chf {
                say!("  {id}: +{v:.2} CHF");
            }
            if split_rows.is_empty() {
                let mut s1 = c.s1.clone();
                s1.label = "s1".into();
                split_rows.push(s1);
            }
            let mut s2 = c.s2;
            s2.label = format!("{} {}", scenario.label, chargers.label());
            split_rows.push(s2);
        }
    }
    write(dir.join("pv_split.csv"), &emit_pv_split_csv(&split_rows))?;
    Ok(())
}
