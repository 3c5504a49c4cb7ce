#![allow(dead_code)]

pub mod oracle;

use c2v_core::{ChargerSpec, EvDemandSeries, HouseholdSeries, PriceSet, ProfileBundle, TimeAxis};
use rand::Rng;

pub fn table_prices() -> PriceSet {
    PriceSet {
        sell: 0.06,
        loc: 0.10,
        buy: 0.241,
        ev: 0.40,
        public: 0.57,
        network_fee: 0.0859,
        gamma: 0.5,
    }
}

pub fn axis(steps: usize) -> TimeAxis {
    TimeAxis::hourly(TimeAxis::year(2025).start(), steps).unwrap()
}

/// Raw per-household series, indexed `[household][step]`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub loads: Vec<Vec<f64>>,
    pub pvs: Vec<Vec<f64>>,
    pub ev: Vec<f64>,
    pub chargers: ChargerSpec,
    pub prices: PriceSet,
}

impl Instance {
    pub fn steps(&self) -> usize {
        self.ev.len()
    }

    pub fn bundle(&self) -> ProfileBundle {
        let households = self
            .loads
            .iter()
            .zip(&self.pvs)
            .enumerate()
            .map(|(i, (l, p))| HouseholdSeries::new(format!("h{i}"), l.clone(), p.clone()).unwrap())
            .collect();
        ProfileBundle::new(axis(self.steps()), households, vec![self.ev_series()]).unwrap()
    }

    pub fn ev_series(&self) -> EvDemandSeries {
        EvDemandSeries::new("ev", self.ev.clone()).unwrap()
    }
}

/// A valid price ladder with random gaps, fee and gamma.
pub fn random_prices(rng: &mut impl Rng) -> PriceSet {
    let sell = rng.random_range(0.0..0.1);
    let loc = sell + rng.random_range(0.005..0.1);
    let buy = loc + rng.random_range(0.005..0.2);
    let ev = buy + rng.random_range(0.005..0.2);
    let public = ev + rng.random_range(0.005..0.3);
    PriceSet {
        sell,
        loc,
        buy,
        ev,
        public,
        network_fee: rng.random_range(0.0..0.15),
        gamma: rng.random_range(0.0..=1.0),
    }
}

/// Value that is exactly zero some of the time, so ties and idle hours
/// are exercised.
fn sparse(rng: &mut impl Rng, max: f64, p_zero: f64) -> f64 {
    if rng.random_bool(p_zero) {
        0.0
    } else {
        rng.random_range(0.0..max)
    }
}

/// Random community. With `within_cap` the EV demand never exceeds the
/// charging capacity.
pub fn random_instance(
    rng: &mut impl Rng,
    max_households: usize,
    max_steps: usize,
    within_cap: bool,
) -> Instance {
    let n = rng.random_range(1..=max_households);
    let steps = rng.random_range(1..=max_steps);
    let n_cp = rng.random_range(1..=4u32);
    let p_max = [3.7, 7.4, 11.0, 22.0][rng.random_range(0..4)];
    let chargers = ChargerSpec::new(n_cp, p_max, rng.random_range(0.0..20_000.0)).unwrap();
    let cap = chargers.capacity_kw();
    let mut loads = Vec::with_capacity(n);
    let mut pvs = Vec::with_capacity(n);
    for _ in 0..n {
        let has_pv = rng.random_bool(0.6);
        let pv_peak = rng.random_range(1.0..25.0);
        let load_peak = rng.random_range(0.5..12.0);
        loads.push((0..steps).map(|_| sparse(rng, load_peak, 0.05)).collect());
        pvs.push(
            (0..steps)
                .map(|_| {
                    if has_pv {
                        sparse(rng, pv_peak, 0.3)
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
    }
    let ev_max = if within_cap { cap } else { cap * 2.0 };
    let ev = (0..steps)
        .map(|_| {
            let v = sparse(rng, ev_max, 0.3);
            if within_cap {
                v.min(cap)
            } else {
                v
            }
        })
        .collect();
    Instance {
        loads,
        pvs,
        ev,
        chargers,
        prices: random_prices(rng),
    }
}

/// `|a - b| <= rel * max(|a|, |b|, 1)`. The unit floor keeps quantities
/// that should vanish (one rounding step away from zero) comparable.
pub fn close_rel(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Evening-heavy arrivals, mostly outside PV hours.
pub const EVENING_WEIGHTS: [f64; 24] = [
    0.2, 0.1, 0.05, 0.05, 0.05, 0.1, 0.3, 0.5, 0.4, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.4, 0.8, 1.5,
    2.5, 3.0, 2.5, 1.5, 0.8, 0.4,
];

pub const TABLE1_PV_KWH: f64 = 22_238.0;
pub const TABLE1_LOAD_KWH: f64 = 44_075.0;

/// One synthetic year at the reference community's magnitudes: seven
/// households, three of them with 12 kWp each, and EV profiles `day1`,
/// `day2` (daytime arrivals) and `evening`, each for one 11 kW port.
pub fn table1_community(seed: u64) -> ProfileBundle {
    use c2v_core::ingestion::{
        synth_ev_profile, synth_household, EvSynthParams, HouseholdSynthParams,
        NEST_PV_YIELD_KWH_PER_KWP,
    };
    let axis = TimeAxis::year(2025);
    let households = (0..7)
        .map(|i| {
            let kwp = if i < 3 { 12.0 } else { 0.0 };
            let params = HouseholdSynthParams::new(TABLE1_LOAD_KWH / 7.0, kwp)
                .with_yield(NEST_PV_YIELD_KWH_PER_KWP);
            synth_household(format!("hh{}", i + 1), seed + i as u64, &axis, &params).unwrap()
        })
        .collect();
    let day = EvSynthParams::new(1.5, 18.0, 11.0);
    let evening = EvSynthParams {
        arrival_weights: EVENING_WEIGHTS,
        ..day.clone()
    };
    let ev = vec![
        synth_ev_profile("day1", seed + 100, &axis, &day).unwrap(),
        synth_ev_profile("day2", seed + 101, &axis, &day).unwrap(),
        synth_ev_profile("evening", seed + 102, &axis, &evening).unwrap(),
    ];
    ProfileBundle::new(axis, households, ev).unwrap()
}
