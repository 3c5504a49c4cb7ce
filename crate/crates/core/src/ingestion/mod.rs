//! Household and EV profile ingestion from CSV, plus seeded synthetic
//! generators for fixtures and desk-scale experiments.

mod csv_io;
mod synth;

pub use csv_io::{
    rating_warnings, read_ev_csv, read_ev_csv_from, read_household_csv, read_household_csv_from,
    write_ev_csv, write_ev_csv_to, write_household_csv, write_household_csv_to, RatingWarning,
    TIMESTAMP_FORMAT,
};
pub use synth::{
    session_profile, synth_ev_profile, synth_household, EvSynthParams, HouseholdSynthParams,
    DEFAULT_PV_YIELD_KWH_PER_KWP, NEST_PV_YIELD_KWH_PER_KWP,
};

use crate::domain::{align_series, EvDemandSeries, HouseholdSeries, TimeAxis};
use crate::error::{Error, Result};

/// Everything a simulation run needs from the outside world.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBundle {
    axis: TimeAxis,
    households: Vec<HouseholdSeries>,
    ev_profiles: Vec<EvDemandSeries>,
}

impl ProfileBundle {
    pub fn new(
        axis: TimeAxis,
        households: Vec<HouseholdSeries>,
        ev_profiles: Vec<EvDemandSeries>,
    ) -> Result<Self> {
        if households.is_empty() {
            return Err(Error::InvalidInput(
                "a community needs at least one household".into(),
            ));
        }
        for h in &households {
            align_series(
                &axis,
                &[
                    (&format!("{}_load_kw", h.id()), h.load()),
                    (&format!("{}_pv_kw", h.id()), h.pv_gen()),
                ],
            )?;
        }
        for e in &ev_profiles {
            align_series(&axis, &[(e.id(), e.demand())])?;
        }
        let mut ids: Vec<&str> = households.iter().map(HouseholdSeries::id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "duplicate household id `{}`",
                w[0]
            )));
        }
        Ok(Self {
            axis,
            households,
            ev_profiles,
        })
    }

    pub fn axis(&self) -> &TimeAxis {
        &self.axis
    }

    pub fn households(&self) -> &[HouseholdSeries] {
        &self.households
    }

    pub fn ev_profiles(&self) -> &[EvDemandSeries] {
        &self.ev_profiles
    }

    pub fn ev_profile(&self, id: &str) -> Option<&EvDemandSeries> {
        self.ev_profiles.iter().find(|e| e.id() == id)
    }

    pub fn household_ids(&self) -> Vec<String> {
        self.households.iter().map(|h| h.id().to_string()).collect()
    }
}
