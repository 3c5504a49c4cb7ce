//! Shared domain types: the hourly time axis, tariffs, household and EV
//! series, and charger ratings.
//!
//! Every series stores average power (kW) per interval. Energy is always
//! `power * dt_hours`, so the interval length appears explicitly wherever
//! money is computed.

use std::fmt;

use chrono::{Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// Hourly simulation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    start: NaiveDateTime,
    steps: usize,
    dt_hours: f64,
}

impl TimeAxis {
    pub fn new(start: NaiveDateTime, steps: usize, dt_hours: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput(
                "time axis needs at least one step".into(),
            ));
        }
        if !(dt_hours.is_finite() && dt_hours > 0.0) {
            return Err(Error::InvalidInput(format!(
                "interval length must be positive, got {dt_hours} h"
            )));
        }
        Ok(Self {
            start,
            steps,
            dt_hours,
        })
    }

    /// `steps` one-hour intervals starting at `start`.
    pub fn hourly(start: NaiveDateTime, steps: usize) -> Result<Self> {
        Self::new(start, steps, 1.0)
    }

    /// 8760 hours starting 1 January of `year` at midnight.
    pub fn year(year: i32) -> Self {
        let start = chrono::NaiveDate::from_ymd_opt(year, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid calendar year");
        Self {
            start,
            steps: 8760,
            dt_hours: 1.0,
        }
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt_hours(&self) -> f64 {
        self.dt_hours
    }

    pub fn total_hours(&self) -> f64 {
        self.steps as f64 * self.dt_hours
    }

    /// Start time of interval `step`.
    pub fn timestamp(&self, step: usize) -> NaiveDateTime {
        let seconds = (step as f64 * self.dt_hours * 3600.0).round() as i64;
        self.start + Duration::seconds(seconds)
    }

    /// Fractional local hour of day at the middle of interval `step`.
    pub fn hour_of_day(&self, step: usize) -> f64 {
        let start = self.start.time();
        let offset = start.num_seconds_from_midnight() as f64 / 3600.0;
        (offset + (step as f64 + 0.5) * self.dt_hours).rem_euclid(24.0)
    }

    /// Zero-based day index since the start of the calendar year of `start`.
    pub fn day_of_year(&self, step: usize) -> f64 {
        use chrono::Datelike;
        let ts = self.timestamp(step);
        ts.ordinal0() as f64 + ts.time().num_seconds_from_midnight() as f64 / 86_400.0
    }
}

/// The five tariffs of the price ladder plus network fee and the LEC
/// network-fee reduction factor `gamma`. All prices in CHF/kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceSet {
    /// Feed-in tariff for grid exports.
    pub sell: f64,
    /// Internal local sharing price.
    pub loc: f64,
    /// Retail grid tariff, network fee included.
    pub buy: f64,
    /// Community charging price paid by EV users.
    pub ev: f64,
    /// Commercial public charging price.
    pub public: f64,
    /// Volumetric network usage fee.
    pub network_fee: f64,
    /// Fraction of the network fee waived for internally shared energy.
    pub gamma: f64,
}

impl PriceSet {
    /// Network fee actually charged on internally shared energy.
    pub fn discounted_network_fee(&self) -> f64 {
        (1.0 - self.gamma) * self.network_fee
    }

    /// Cost to the community of one kWh of member PV routed to EV charging.
    pub fn pv_sourced_cost(&self) -> f64 {
        self.loc + self.discounted_network_fee()
    }

    pub fn with_ev(&self, ev: f64) -> Self {
        Self { ev, ..*self }
    }

    pub fn validate(&self) -> Result<(), LadderViolation> {
        validate_price_set(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LadderViolation {
    #[error("{0} must be finite and nonnegative")]
    Negative(&'static str),
    #[error("gamma must lie in [0, 1]")]
    GammaOutOfRange,
    #[error("{lower} < {upper} fails")]
    Order {
        lower: &'static str,
        upper: &'static str,
    },
}

/// Checks nonnegativity, `gamma` in [0, 1] and the strict ladder
/// `sell < loc < buy < ev < public`. Reports the first broken condition.
pub fn validate_price_set(p: &PriceSet) -> Result<(), LadderViolation> {
    let fields = [
        ("sell", p.sell),
        ("loc", p.loc),
        ("buy", p.buy),
        ("ev", p.ev),
        ("public", p.public),
        ("network_fee", p.network_fee),
        ("gamma", p.gamma),
    ];
    for (name, v) in fields {
        if !(v.is_finite() && v >= 0.0) {
            return Err(LadderViolation::Negative(name));
        }
    }
    if p.gamma > 1.0 {
        return Err(LadderViolation::GammaOutOfRange);
    }
    for pair in fields[..5].windows(2) {
        let ((lower, a), (upper, b)) = (pair[0], pair[1]);
        if a >= b {
            return Err(LadderViolation::Order { lower, upper });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("series `{name}` has {len} values, time axis has {steps} steps")]
pub struct SeriesMismatch {
    pub name: String,
    pub len: usize,
    pub steps: usize,
}

/// Checks that every named series has exactly `axis.steps()` values.
pub fn align_series(axis: &TimeAxis, series: &[(&str, &[f64])]) -> Result<(), SeriesMismatch> {
    for (name, values) in series {
        if values.len() != axis.steps() {
            return Err(SeriesMismatch {
                name: (*name).to_string(),
                len: values.len(),
                steps: axis.steps(),
            });
        }
    }
    Ok(())
}

fn check_nonnegative(what: &str, values: &[f64]) -> Result<()> {
    if let Some((t, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::InvalidInput(format!(
            "{what}[{t}] = {v} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Hourly load and PV generation of one household.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdSeries {
    id: String,
    load: Vec<f64>,
    pv_gen: Vec<f64>,
}

impl HouseholdSeries {
    pub fn new(id: impl Into<String>, load: Vec<f64>, pv_gen: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if load.len() != pv_gen.len() {
            return Err(Error::InvalidInput(format!(
                "household {id}: load has {} values, pv has {}",
                load.len(),
                pv_gen.len()
            )));
        }
        check_nonnegative(&format!("{id} load"), &load)?;
        check_nonnegative(&format!("{id} pv"), &pv_gen)?;
        Ok(Self { id, load, pv_gen })
    }

    /// Household without PV.
    pub fn consumer(id: impl Into<String>, load: Vec<f64>) -> Result<Self> {
        let n = load.len();
        Self::new(id, load, vec![0.0; n])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn pv_gen(&self) -> &[f64] {
        &self.pv_gen
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn has_pv(&self) -> bool {
        self.pv_gen.iter().any(|&v| v > 0.0)
    }
}

/// Aggregate hourly EV charging demand at the community charging points.
#[derive(Debug, Clone, PartialEq)]
pub struct EvDemandSeries {
    id: String,
    demand: Vec<f64>,
}

impl EvDemandSeries {
    pub fn new(id: impl Into<String>, demand: Vec<f64>) -> Result<Self> {
        let id = id.into();
        check_nonnegative(&format!("{id} demand"), &demand)?;
        Ok(Self { id, demand })
    }

    pub fn zeros(id: impl Into<String>, steps: usize) -> Self {
        Self {
            id: id.into(),
            demand: vec![0.0; steps],
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    /// Weighted sum of several profiles of equal length.
    pub fn aggregate<'a, I>(id: impl Into<String>, steps: usize, parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a EvDemandSeries, f64)>,
    {
        let mut demand = vec![0.0; steps];
        for (series, scale) in parts {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "scale for profile {} must be nonnegative, got {scale}",
                    series.id
                )));
            }
            if series.len() != steps {
                return Err(SeriesMismatch {
                    name: series.id.clone(),
                    len: series.len(),
                    steps,
                }
                .into());
            }
            for (d, v) in demand.iter_mut().zip(&series.demand) {
                *d += scale * v;
            }
        }
        Self::new(id, demand)
    }
}

/// Community charging infrastructure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargerSpec {
    pub n_cp: u32,
    pub p_max_kw: f64,
    pub capex_chf: f64,
}

impl ChargerSpec {
    pub fn new(n_cp: u32, p_max_kw: f64, capex_chf: f64) -> Result<Self> {
        let spec = Self {
            n_cp,
            p_max_kw,
            capex_chf,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// No charging points: S2 collapses onto S1.
    pub fn none() -> Self {
        Self {
            n_cp: 0,
            p_max_kw: 0.0,
            capex_chf: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_max_kw.is_finite() && self.p_max_kw >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "charger rating must be nonnegative, got {} kW",
                self.p_max_kw
            )));
        }
        if !(self.capex_chf.is_finite() && self.capex_chf >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "charger capex must be nonnegative, got {} CHF",
                self.capex_chf
            )));
        }
        Ok(())
    }

    /// Combined port rating `n_cp * p_max_kw`.
    pub fn capacity_kw(&self) -> f64 {
        self.n_cp as f64 * self.p_max_kw
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ChargerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}kW", self.n_cp, self.p_max_kw)
    }
}
