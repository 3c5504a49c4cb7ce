//! Seeded synthetic household and EV profiles.
//!
//! Generators are pure functions of `(seed, axis, params)`. Values are rounded
//! to 0.1 W so that a written CSV reads back to identical series.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use crate::domain::{EvDemandSeries, HouseholdSeries, TimeAxis};
use crate::error::{Error, Result};
use crate::sum::csum;

/// Generic central-European rooftop yield.
pub const DEFAULT_PV_YIELD_KWH_PER_KWP: f64 = 950.0;
/// Site yield of the reference community: 22 238 kWh from 36 kWp.
pub const NEST_PV_YIELD_KWH_PER_KWP: f64 = 22_238.0 / 36.0;

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdSynthParams {
    /// Energy drawn over a full 8760 h year; shorter horizons get the pro-rata share.
    pub annual_load_kwh: f64,
    pub pv_kwp: f64,
    pub pv_yield_kwh_per_kwp: f64,
}

impl HouseholdSynthParams {
    pub fn new(annual_load_kwh: f64, pv_kwp: f64) -> Self {
        Self {
            annual_load_kwh,
            pv_kwp,
            pv_yield_kwh_per_kwp: DEFAULT_PV_YIELD_KWH_PER_KWP,
        }
    }

    pub fn with_yield(self, pv_yield_kwh_per_kwp: f64) -> Self {
        Self {
            pv_yield_kwh_per_kwp,
            ..self
        }
    }
}

fn gaussian_bump(hour: f64, centre: f64, width: f64) -> f64 {
    let d = hour - centre;
    (-(d * d) / (2.0 * width * width)).exp()
}

/// Scales `shape` so that its energy over the axis equals `target_kwh`.
fn scale_to_energy(shape: &[f64], dt: f64, target_kwh: f64) -> Vec<f64> {
    let energy = csum(shape.iter().copied()) * dt;
    if energy <= 0.0 || target_kwh <= 0.0 {
        return vec![0.0; shape.len()];
    }
    let k = target_kwh / energy;
    shape.iter().map(|v| round4(v * k)).collect()
}

/// Residential load with morning and evening peaks, winter uplift and
/// lognormal hourly noise; PV as a seasonal diurnal bell with daily
/// cloudiness. Both are scaled exactly to their annual targets.
pub fn synth_household(
    id: impl Into<String>,
    seed: u64,
    axis: &TimeAxis,
    params: &HouseholdSynthParams,
) -> Result<HouseholdSeries> {
    let HouseholdSynthParams {
        annual_load_kwh,
        pv_kwp,
        pv_yield_kwh_per_kwp,
    } = *params;
    for (name, v) in [
        ("annual_load_kwh", annual_load_kwh),
        ("pv_kwp", pv_kwp),
        ("pv_yield_kwh_per_kwp", pv_yield_kwh_per_kwp),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = LogNormal::new(0.0, 0.15).expect("valid lognormal");
    let steps = axis.steps();
    let dt = axis.dt_hours();
    let year_fraction = axis.total_hours() / 8760.0;

    let load_shape: Vec<f64> = (0..steps)
        .map(|t| {
            let h = axis.hour_of_day(t);
            let season = 1.0 + 0.2 * (2.0 * PI * axis.day_of_year(t) / 365.0).cos();
            let daily = 0.45 + 0.6 * gaussian_bump(h, 7.5, 1.2) + 1.0 * gaussian_bump(h, 19.0, 1.8);
            daily * season * noise.sample(&mut rng)
        })
        .collect();
    let load = scale_to_energy(&load_shape, dt, annual_load_kwh * year_fraction);

    let mut cloud_day = usize::MAX;
    let mut cloudiness = 1.0;
    let pv_shape: Vec<f64> = (0..steps)
        .map(|t| {
            let doy = axis.day_of_year(t);
            let day = doy.floor() as usize;
            if day != cloud_day {
                cloud_day = day;
                cloudiness = rng.random_range(0.15..1.0);
            }
            let season = (2.0 * PI * (doy - 80.0) / 365.0).sin();
            let day_length = 12.0 + 4.0 * season;
            let sunrise = 12.5 - day_length / 2.0;
            let x = (axis.hour_of_day(t) - sunrise) / day_length;
            if !(0.0..=1.0).contains(&x) {
                return 0.0;
            }
            let amplitude = 0.65 + 0.35 * season;
            amplitude * (PI * x).sin().powf(1.5) * cloudiness
        })
        .collect();
    let pv = scale_to_energy(&pv_shape, dt, pv_kwp * pv_yield_kwh_per_kwp * year_fraction);

    HouseholdSeries::new(id, load, pv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvSynthParams {
    /// Mean number of session arrivals per day (Poisson).
    pub sessions_per_day: f64,
    pub energy_per_session_kwh: f64,
    pub port_kw: f64,
    /// Relative arrival weight for each hour of day.
    pub arrival_weights: [f64; 24],
}

impl EvSynthParams {
    /// Arrivals concentrated in working hours, tapering off in the evening.
    pub const DAYTIME_WEIGHTS: [f64; 24] = [
        0.1, 0.05, 0.05, 0.05, 0.1, 0.3, 0.8, 1.5, 2.5, 3.0, 3.0, 2.8, 2.6, 2.8, 3.0, 2.8, 2.4,
        2.0, 1.6, 1.2, 0.8, 0.5, 0.3, 0.2,
    ];

    pub fn new(sessions_per_day: f64, energy_per_session_kwh: f64, port_kw: f64) -> Self {
        Self {
            sessions_per_day,
            energy_per_session_kwh,
            port_kw,
            arrival_weights: Self::DAYTIME_WEIGHTS,
        }
    }
}

/// Power drawn in consecutive intervals by one session: the port rating
/// until the remaining energy no longer fills an interval.
pub fn session_profile(energy_kwh: f64, port_kw: f64, dt_hours: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(energy_kwh > 0.0 && port_kw > 0.0 && dt_hours > 0.0) {
        return out;
    }
    let mut remaining = energy_kwh;
    while remaining > 1e-9 {
        let p = port_kw.min(remaining / dt_hours);
        out.push(p);
        remaining -= p * dt_hours;
    }
    out
}

pub fn synth_ev_profile(
    id: impl Into<String>,
    seed: u64,
    axis: &TimeAxis,
    params: &EvSynthParams,
) -> Result<EvDemandSeries> {
    for (name, v) in [
        ("sessions_per_day", params.sessions_per_day),
        ("energy_per_session_kwh", params.energy_per_session_kwh),
        ("port_kw", params.port_kw),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let steps = axis.steps();
    let dt = axis.dt_hours();
    let mut demand = vec![0.0; steps];
    let session = session_profile(params.energy_per_session_kwh, params.port_kw, dt);
    if params.sessions_per_day > 0.0 && !session.is_empty() {
        let arrivals = WeightedIndex::new(params.arrival_weights)
            .map_err(|e| Error::InvalidInput(format!("arrival weights: {e}")))?;
        let count = Poisson::new(params.sessions_per_day).expect("positive rate");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let days = (axis.total_hours() / 24.0).ceil() as usize;
        for day in 0..days {
            let n = count.sample(&mut rng) as usize;
            for _ in 0..n {
                let hour = arrivals.sample(&mut rng);
                let start = ((day * 24 + hour) as f64 / dt).floor() as usize;
                for (slot, p) in demand.iter_mut().skip(start).zip(&session) {
                    *slot += p;
                }
            }
        }
    }
    EvDemandSeries::new(id, demand.into_iter().map(round4).collect())
}
