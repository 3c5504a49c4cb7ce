//! Scenario orchestration: S1/S2 comparison, EV price sweeps over charger
//! options, and Low/Medium/High classification by PV-to-EV utilization.
//!
//! Energy flows do not depend on the EV price, so each (scenario, charger)
//! pair is simulated once and every price point is obtained by repricing
//! the annual totals.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::c2v::{run_s1, settle_year_s2};
use crate::domain::{ChargerSpec, EvDemandSeries, PriceSet};
use crate::error::{Error, Result};
use crate::ingestion::ProfileBundle;
use crate::report::{ScenarioReport, SCHEMA_VERSION};
use crate::settlement::SettlementOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Low,
    Medium,
    High,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioClass {
    pub label: ClassLabel,
    /// Annual PV-to-EV energy over annual surplus after member sharing.
    pub utilization_ratio: f64,
}

/// Upper bounds of the Low and Medium utilization classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds {
    pub low_max: f64,
    pub med_max: f64,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self {
            low_max: 1.0 / 3.0,
            med_max: 2.0 / 3.0,
        }
    }
}

impl ClassThresholds {
    pub fn new(low_max: f64, med_max: f64) -> Result<Self, ClassifyError> {
        let t = Self { low_max, med_max };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        if 0.0 < self.low_max && self.low_max < self.med_max && self.med_max < 1.0 {
            Ok(())
        } else {
            Err(ClassifyError::BadThresholds {
                low_max: self.low_max,
                med_max: self.med_max,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("no surplus after member sharing; utilization is undefined")]
    NoSurplus,
    #[error("thresholds must satisfy 0 < low_max < med_max < 1, got ({low_max}, {med_max})")]
    BadThresholds { low_max: f64, med_max: f64 },
}

pub fn classify_scenario(
    annual_pv2ev_kwh: f64,
    annual_surplus_kwh: f64,
    thresholds: &ClassThresholds,
) -> Result<ScenarioClass, ClassifyError> {
    thresholds.validate()?;
    if annual_surplus_kwh <= 0.0 {
        return Err(ClassifyError::NoSurplus);
    }
    let utilization_ratio = (annual_pv2ev_kwh / annual_surplus_kwh).clamp(0.0, 1.0);
    let label = if utilization_ratio <= thresholds.low_max {
        ClassLabel::Low
    } else if utilization_ratio <= thresholds.med_max {
        ClassLabel::Medium
    } else {
        ClassLabel::High
    };
    Ok(ScenarioClass {
        label,
        utilization_ratio,
    })
}

/// Inclusive EV price range in CHF/kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl PriceRange {
    pub fn validate(&self) -> Result<()> {
        let finite = self.min.is_finite() && self.max.is_finite() && self.step.is_finite();
        if !(finite && self.min < self.max && self.step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "price range needs min < max and step > 0, got {} to {} step {}",
                self.min, self.max, self.step
            )));
        }
        Ok(())
    }

    /// `min, min + step, ...` up to and including `max` (to 1e-9 of a step).
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|k| ((self.min + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileWeight {
    pub profile: String,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

/// A named EV demand scenario: a weighted sum of ingested profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDef {
    pub label: String,
    pub profiles: Vec<ProfileWeight>,
}

impl ScenarioDef {
    pub fn demand(&self, bundle: &ProfileBundle) -> Result<EvDemandSeries> {
        let parts = self
            .profiles
            .iter()
            .map(|w| {
                bundle
                    .ev_profile(&w.profile)
                    .map(|p| (p, w.scale))
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "scenario {}: unknown EV profile `{}`",
                            self.label, w.profile
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        EvDemandSeries::aggregate(self.label.clone(), bundle.axis().steps(), parts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub ev_price_range: PriceRange,
    pub scenarios: Vec<ScenarioDef>,
    pub charger_options: Vec<ChargerSpec>,
    #[serde(default)]
    pub thresholds: ClassThresholds,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.ev_price_range.validate()?;
        if self.scenarios.is_empty() {
            return Err(Error::InvalidInput(
                "sweep needs at least one scenario".into(),
            ));
        }
        if self.charger_options.is_empty() {
            return Err(Error::InvalidInput(
                "sweep needs at least one charger option".into(),
            ));
        }
        for c in &self.charger_options {
            c.validate()?;
        }
        self.thresholds
            .validate()
            .map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scenario: String,
    pub ev_price_chf_kwh: f64,
    pub charger_option: String,
    pub chargers: ChargerSpec,
    pub feasible: bool,
    /// Broken ladder condition for infeasible points.
    pub infeasibility: Option<String>,
    /// Absent for infeasible points, which are never evaluated.
    pub report: Option<ScenarioReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub schema_version: u32,
    /// Sorted by scenario, then price, then charger option (definition order).
    pub points: Vec<SweepPoint>,
}

impl SweepGrid {
    pub fn rounded(&self) -> Self {
        Self {
            schema_version: self.schema_version,
            points: self
                .points
                .iter()
                .map(|p| SweepPoint {
                    report: p.report.as_ref().map(ScenarioReport::rounded),
                    ..p.clone()
                })
                .collect(),
        }
    }
}

pub fn run_sweep(
    bundle: &ProfileBundle,
    base_prices: &PriceSet,
    options: &SettlementOptions,
    spec: &SweepSpec,
) -> Result<SweepGrid> {
    spec.validate()?;
    base_prices.validate()?;
    let prices = spec.ev_price_range.points()?;
    let demands = spec
        .scenarios
        .iter()
        .map(|s| s.demand(bundle))
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(usize, usize)> = (0..spec.scenarios.len())
        .flat_map(|s| (0..spec.charger_options.len()).map(move |c| (s, c)))
        .collect();
    let base_reports = pairs
        .par_iter()
        .map(|&(s, c)| {
            let chargers = &spec.charger_options[c];
            let year = settle_year_s2(bundle, base_prices, options, chargers, &demands[s])?;
            Ok((
                (s, c),
                ScenarioReport::from_year(
                    &spec.scenarios[s].label,
                    &year,
                    base_prices,
                    options,
                    &spec.thresholds,
                ),
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;

    let mut points = Vec::with_capacity(pairs.len() * prices.len());
    for (s, scenario) in spec.scenarios.iter().enumerate() {
        for &price in &prices {
            for (c, chargers) in spec.charger_options.iter().enumerate() {
                let candidate = base_prices.with_ev(price);
                let (feasible, infeasibility, report) = match candidate.validate() {
                    Ok(()) => (true, None, Some(base_reports[&(s, c)].reprice_ev(price)?)),
                    Err(v) => (false, Some(v.to_string()), None),
                };
                points.push(SweepPoint {
                    scenario: scenario.label.clone(),
                    ev_price_chf_kwh: price,
                    charger_option: chargers.label(),
                    chargers: *chargers,
                    feasible,
                    infeasibility,
                    report,
                });
            }
        }
    }
    Ok(SweepGrid {
        schema_version: SCHEMA_VERSION,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDeltas {
    pub absorption_gain: Option<f64>,
    pub peak_import_change_kw: f64,
    pub peak_export_change_kw: f64,
    pub revenue_chf: f64,
    pub ev_savings_chf: f64,
    pub m5_per_household_chf: BTreeMap<String, f64>,
    pub net_cost_change_per_household_chf: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub s1: ScenarioReport,
    pub s2: ScenarioReport,
    pub deltas: ComparisonDeltas,
}

impl Comparison {
    pub fn new(s1: ScenarioReport, s2: ScenarioReport) -> Self {
        let (m1, m2) = (&s1.metrics, &s2.metrics);
        let absorption_gain = match (m1.m1_absorption_ratio, m2.m1_absorption_ratio) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        let m5_per_household_chf = m2
            .m5_per_household_chf
            .iter()
            .map(|(id, v)| {
                (
                    id.clone(),
                    v - m1.m5_per_household_chf.get(id).copied().unwrap_or(0.0),
                )
            })
            .collect();
        let net_cost_change_per_household_chf = s2
            .statements
            .iter()
            .zip(&s1.statements)
            .map(|(b, a)| (b.household_id.clone(), b.net_cost_chf - a.net_cost_chf))
            .collect();
        let deltas = ComparisonDeltas {
            absorption_gain,
            peak_import_change_kw: m2.m2_peak_import_kw - m1.m2_peak_import_kw,
            peak_export_change_kw: m2.m2_peak_export_kw - m1.m2_peak_export_kw,
            revenue_chf: m2.m4_revenue.total_chf - m1.m4_revenue.total_chf,
            ev_savings_chf: m2.m3_ev_savings_chf - m1.m3_ev_savings_chf,
            m5_per_household_chf,
            net_cost_change_per_household_chf,
        };
        Self {
            schema_version: SCHEMA_VERSION,
            s1,
            s2,
            deltas,
        }
    }

    pub fn rounded(&self) -> Self {
        let r2 = crate::report::round_chf;
        let d = &self.deltas;
        Self {
            schema_version: self.schema_version,
            s1: self.s1.rounded(),
            s2: self.s2.rounded(),
            deltas: ComparisonDeltas {
                absorption_gain: d.absorption_gain.map(crate::report::round_ratio),
                peak_import_change_kw: crate::report::round_kw(d.peak_import_change_kw),
                peak_export_change_kw: crate::report::round_kw(d.peak_export_change_kw),
                revenue_chf: r2(d.revenue_chf),
                ev_savings_chf: r2(d.ev_savings_chf),
                m5_per_household_chf: d
                    .m5_per_household_chf
                    .iter()
                    .map(|(k, v)| (k.clone(), r2(*v)))
                    .collect(),
                net_cost_change_per_household_chf: d
                    .net_cost_change_per_household_chf
                    .iter()
                    .map(|(k, v)| (k.clone(), r2(*v)))
                    .collect(),
            },
        }
    }
}

/// S1 and S2 reports for the same community and EV demand, with deltas.
pub fn compare_s1_s2(
    label: &str,
    bundle: &ProfileBundle,
    prices: &PriceSet,
    options: &SettlementOptions,
    chargers: &ChargerSpec,
    ev_demand: &EvDemandSeries,
    thresholds: &ClassThresholds,
) -> Result<Comparison> {
    let s1 = run_s1(bundle, prices, options)?;
    let s2 = settle_year_s2(bundle, prices, options, chargers, ev_demand)?;
    Ok(Comparison::new(
        ScenarioReport::from_year(label, &s1, prices, options, thresholds),
        ScenarioReport::from_year(label, &s2, prices, options, thresholds),
    ))
}
