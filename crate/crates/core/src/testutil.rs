use crate::domain::{HouseholdSeries, PriceSet};

/// Table prices of the reference case with gamma = 0.5 (gamma is an assumption).
pub(crate) fn table_prices() -> PriceSet {
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

pub(crate) fn household(id: &str, load: &[f64], pv: &[f64]) -> HouseholdSeries {
    HouseholdSeries::new(id, load.to_vec(), pv.to_vec()).unwrap()
}
