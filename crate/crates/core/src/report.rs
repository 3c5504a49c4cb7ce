//! Scenario reports and their JSON/CSV renderings.
//!
//! Engine values stay at full precision; rounding happens here, at
//! emission: CHF to 2 decimals, kWh to 1, kW to 3, ratios to 4.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::c2v::{CommunityYear, Regime, RevenueAccount};
use crate::domain::{ChargerSpec, PriceSet, TimeAxis};
use crate::error::{Error, Result};
use crate::ingestion::TIMESTAMP_FORMAT;
use crate::metrics::{ev_savings_from_energy, EnergyTotals, MetricsReport};
use crate::settlement::{MemberStatement, SettlementOptions};
use crate::sweep::{classify_scenario, ClassThresholds, ScenarioClass, SweepGrid};

pub const SCHEMA_VERSION: u32 = 1;

fn round_to(v: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    let r = (v * k).round() / k;
    // Avoid emitting "-0.0".
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn round_chf(v: f64) -> f64 {
    round_to(v, 2)
}

pub fn round_kwh(v: f64) -> f64 {
    round_to(v, 1)
}

pub fn round_kw(v: f64) -> f64 {
    round_to(v, 3)
}

pub fn round_ratio(v: f64) -> f64 {
    round_to(v, 4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub label: String,
    pub regime: Regime,
    pub prices: PriceSet,
    pub settlement: SettlementOptions,
    pub chargers: ChargerSpec,
    pub classification: Option<ScenarioClass>,
    pub metrics: MetricsReport,
    pub totals: EnergyTotals,
    pub statements: Vec<MemberStatement>,
}

impl ScenarioReport {
    pub fn from_year(
        label: &str,
        year: &CommunityYear,
        prices: &PriceSet,
        options: &SettlementOptions,
        thresholds: &ClassThresholds,
    ) -> Self {
        let totals = EnergyTotals::from_year(year);
        let classification = match year.regime {
            Regime::S1 => None,
            Regime::S2 => classify_scenario(
                totals.pv2ev_kwh,
                totals.surplus_after_sharing_kwh,
                thresholds,
            )
            .ok(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            label: label.to_string(),
            regime: year.regime,
            prices: *prices,
            settlement: *options,
            chargers: year.chargers,
            classification,
            metrics: MetricsReport::compute(year, prices),
            totals,
            statements: year.statements.clone(),
        }
    }

    /// Report for a different EV price from the same flows. Only the EV
    /// savings and the revenue account depend on that price.
    pub fn reprice_ev(&self, ev_price: f64) -> Result<Self> {
        let prices = self.prices.with_ev(ev_price);
        prices.validate()?;
        let mut out = self.clone();
        out.prices = prices;
        out.metrics.m3_ev_savings_chf = ev_savings_from_energy(self.totals.ev_demand_kwh, &prices);
        out.metrics.m4_revenue = if self.regime == Regime::S2 && self.chargers.capacity_kw() > 0.0 {
            RevenueAccount::from_energy(
                self.totals.pv2ev_kwh,
                self.totals.grid2ev_kwh,
                &prices,
                self.chargers.capex_chf,
            )
        } else {
            RevenueAccount::none(self.chargers.capex_chf)
        };
        Ok(out)
    }

    /// Copy with emission rounding applied to every derived number.
    pub fn rounded(&self) -> Self {
        let m = &self.metrics;
        let t = &self.totals;
        Self {
            classification: self.classification.map(|c| ScenarioClass {
                utilization_ratio: round_ratio(c.utilization_ratio),
                ..c
            }),
            metrics: MetricsReport {
                m1_absorption_ratio: m.m1_absorption_ratio.map(round_ratio),
                m2_peak_import_kw: round_kw(m.m2_peak_import_kw),
                m2_peak_export_kw: round_kw(m.m2_peak_export_kw),
                m3_ev_savings_chf: round_chf(m.m3_ev_savings_chf),
                m4_revenue: rounded_revenue(&m.m4_revenue),
                m5_per_household_chf: m
                    .m5_per_household_chf
                    .iter()
                    .map(|(k, v)| (k.clone(), round_chf(*v)))
                    .collect(),
                pv_split: m.pv_split.map(|s| s.rounded(4)),
            },
            totals: EnergyTotals {
                pv_gen_kwh: round_kwh(t.pv_gen_kwh),
                load_kwh: round_kwh(t.load_kwh),
                self_consumed_kwh: round_kwh(t.self_consumed_kwh),
                local_shared_kwh: round_kwh(t.local_shared_kwh),
                surplus_after_sharing_kwh: round_kwh(t.surplus_after_sharing_kwh),
                ev_demand_kwh: round_kwh(t.ev_demand_kwh),
                pv2ev_kwh: round_kwh(t.pv2ev_kwh),
                grid2ev_kwh: round_kwh(t.grid2ev_kwh),
                export_kwh: round_kwh(t.export_kwh),
                household_import_kwh: round_kwh(t.household_import_kwh),
            },
            statements: self.statements.iter().map(rounded_statement).collect(),
            ..self.clone()
        }
    }
}

fn rounded_revenue(r: &RevenueAccount) -> RevenueAccount {
    RevenueAccount {
        pv2ev_kwh: round_kwh(r.pv2ev_kwh),
        grid2ev_kwh: round_kwh(r.grid2ev_kwh),
        surplus_component_chf: round_chf(r.surplus_component_chf),
        passthrough_component_chf: round_chf(r.passthrough_component_chf),
        total_chf: round_chf(r.total_chf),
        capex_chf: round_chf(r.capex_chf),
        payback_years: r.payback_years.map(round_chf),
    }
}

fn rounded_statement(s: &MemberStatement) -> MemberStatement {
    MemberStatement {
        household_id: s.household_id.clone(),
        load_kwh: round_kwh(s.load_kwh),
        pv_gen_kwh: round_kwh(s.pv_gen_kwh),
        surplus_kwh: round_kwh(s.surplus_kwh),
        self_consumed_kwh: round_kwh(s.self_consumed_kwh),
        local_sold_kwh: round_kwh(s.local_sold_kwh),
        ev_sold_kwh: round_kwh(s.ev_sold_kwh),
        local_bought_kwh: round_kwh(s.local_bought_kwh),
        grid_import_kwh: round_kwh(s.grid_import_kwh),
        grid_export_kwh: round_kwh(s.grid_export_kwh),
        local_sales_revenue_chf: round_chf(s.local_sales_revenue_chf),
        export_revenue_chf: round_chf(s.export_revenue_chf),
        local_purchase_cost_chf: round_chf(s.local_purchase_cost_chf),
        grid_purchase_cost_chf: round_chf(s.grid_purchase_cost_chf),
        net_cost_chf: round_chf(s.net_cost_chf),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Pretty JSON of the rounded report; keys in declaration order.
pub fn emit_report_json(report: &ScenarioReport) -> Result<String> {
    to_json(&report.rounded())
}

pub fn parse_report_json(text: &str) -> Result<ScenarioReport> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit_sweep_json(grid: &SweepGrid) -> Result<String> {
    to_json(&grid.rounded())
}

pub fn emit_comparison_json(comparison: &crate::sweep::Comparison) -> Result<String> {
    to_json(&comparison.rounded())
}

pub const SWEEP_CSV_HEADER: &str = "scenario,ev_price_chf_kwh,charger_option,revenue_chf,surplus_component_chf,passthrough_component_chf,savings_chf,payback_years,feasible";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per grid point in grid order. Infeasible points keep their row
/// with empty numeric cells; a never-paying account has an empty payback.
pub fn emit_sweep_csv(grid: &SweepGrid) -> Result<String> {
    if grid.points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for p in &grid.points {
        let head = format!(
            "{},{:.4},{}",
            csv_field(&p.scenario),
            p.ev_price_chf_kwh,
            csv_field(&p.charger_option)
        );
        match &p.report {
            Some(r) => {
                let rev = &r.metrics.m4_revenue;
                let payback = rev
                    .payback_years
                    .map(|y| format!("{y:.2}"))
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{head},{:.2},{:.2},{:.2},{:.2},{payback},{}",
                    round_chf(rev.total_chf),
                    round_chf(rev.surplus_component_chf),
                    round_chf(rev.passthrough_component_chf),
                    round_chf(r.metrics.m3_ev_savings_chf),
                    p.feasible
                )
                .expect("write to string");
            }
            None => writeln!(out, "{head},,,,,,{}", p.feasible).expect("write to string"),
        }
    }
    Ok(out)
}

pub const PV_SPLIT_CSV_HEADER: &str = "scenario,regime,self_frac,local_share_frac,pv2ev_frac,export_frac,pv_gen_kwh,self_kwh,local_share_kwh,pv2ev_kwh,export_kwh";

/// Annual PV split per report, as fractions of generation and in kWh.
/// Reports without generation are skipped.
pub fn emit_pv_split_csv(reports: &[ScenarioReport]) -> String {
    let mut out = String::from(PV_SPLIT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let Some(split) = r.metrics.pv_split else {
            continue;
        };
        let f = split.rounded(4);
        let t = &r.totals;
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.1},{:.1},{:.1},{:.1},{:.1}",
            csv_field(&r.label),
            r.regime,
            f.self_consumption,
            f.local_share,
            f.pv2ev,
            f.export,
            t.pv_gen_kwh,
            t.self_consumed_kwh,
            t.local_shared_kwh,
            t.pv2ev_kwh,
            t.export_kwh
        )
        .expect("write to string");
    }
    out
}

pub const TRACE_CSV_HEADER: &str = "step,timestamp,pv_gen_kw,load_kw,self_kw,loc_kw,surplus_after_sharing_kw,ev_demand_kw,pv2ev_kw,grid2ev_kw,export_kw,household_import_kw,community_import_kw";

/// Community-level hourly trace of a settled year.
pub fn emit_hourly_trace_csv(year: &CommunityYear, axis: &TimeAxis) -> String {
    let mut out = String::with_capacity(year.steps() * 96);
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for (t, (lec, c2v)) in year.lec.iter().zip(&year.c2v).enumerate() {
        writeln!(
            out,
            "{t},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
            axis.timestamp(t).format(TIMESTAMP_FORMAT),
            round_kw(lec.pv_gen_kw()),
            round_kw(lec.load_kw()),
            round_kw(lec.self_kw()),
            round_kw(lec.loc_kw),
            round_kw(lec.surplus_after_sharing_kw),
            round_kw(c2v.ev_demand_kw),
            round_kw(c2v.pv2ev_kw),
            round_kw(c2v.grid2ev_kw),
            round_kw(c2v.export_kw),
            round_kw(lec.grid_import_kw()),
            round_kw(year.community_import_kw(t)),
        )
        .expect("write to string");
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
