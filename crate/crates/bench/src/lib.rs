//! Benchmark inputs: a synthetic community year at reference magnitudes.

use c2v_core::ingestion::{
    synth_ev_profile, synth_household, EvSynthParams, HouseholdSynthParams,
    NEST_PV_YIELD_KWH_PER_KWP,
};
use c2v_core::sweep::{PriceRange, ProfileWeight, ScenarioDef};
use c2v_core::{ChargerSpec, ClassThresholds, PriceSet, ProfileBundle, SweepSpec, TimeAxis};

pub fn prices() -> PriceSet {
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

/// `households` members (the first three with 12 kWp) and `ev_profiles`
/// single-port EV profiles over one hourly year.
pub fn community(households: usize, ev_profiles: usize) -> ProfileBundle {
    let axis = TimeAxis::year(2025);
    let hh = (0..households)
        .map(|i| {
            let kwp = if i < 3 { 12.0 } else { 0.0 };
            let p = HouseholdSynthParams::new(6296.4, kwp).with_yield(NEST_PV_YIELD_KWH_PER_KWP);
            synth_household(format!("hh{i}"), i as u64, &axis, &p).expect("valid params")
        })
        .collect();
    let ev_params = EvSynthParams::new(1.2, 15.0, 11.0);
    let ev = (0..ev_profiles)
        .map(|k| {
            synth_ev_profile(format!("ev{k}"), 1000 + k as u64, &axis, &ev_params)
                .expect("valid params")
        })
        .collect();
    ProfileBundle::new(axis, hh, ev).expect("consistent bundle")
}

/// Default price range, one scenario per pair of profiles, two charger
/// options.
pub fn sweep_spec(bundle: &ProfileBundle) -> SweepSpec {
    let scenarios = bundle
        .ev_profiles()
        .chunks(2)
        .enumerate()
        .map(|(k, pair)| ScenarioDef {
            label: format!("s{k}"),
            profiles: pair
                .iter()
                .map(|p| ProfileWeight {
                    profile: p.id().to_string(),
                    scale: 1.0,
                })
                .collect(),
        })
        .collect();
    SweepSpec {
        ev_price_range: PriceRange {
            min: 0.30,
            max: 0.55,
            step: 0.05,
        },
        scenarios,
        charger_options: vec![
            ChargerSpec::new(2, 11.0, 6000.0).expect("valid"),
            ChargerSpec::new(4, 22.0, 20000.0).expect("valid"),
        ],
        thresholds: ClassThresholds::default(),
    }
}
