//! Hourly simulation of a local energy community that sells PV surplus to
//! electric vehicles through community-owned chargers.
//!
//! Two regimes are modelled: `S1`, pure peer-to-peer sharing inside the
//! community, and `S2`, where residual surplus first serves a public EV
//! charging station before the rest is exported.

pub mod c2v;
pub mod domain;
pub mod error;
pub mod ingestion;
pub mod metrics;
pub mod report;
pub mod settlement;
pub mod sum;
pub mod sweep;

#[cfg(test)]
mod testutil;

pub use c2v::{run_s1, settle_year_s2, CommunityYear, Regime, RevenueAccount};
pub use domain::{
    ChargerSpec, EvDemandSeries, HouseholdSeries, LadderViolation, PriceSet, TimeAxis,
};
pub use error::{Error, Result};
pub use ingestion::ProfileBundle;
pub use metrics::{EnergyTotals, MetricsReport, PvSplit};
pub use report::{ScenarioReport, SCHEMA_VERSION};
pub use settlement::{MemberStatement, SettlementOptions};
pub use sweep::{
    compare_s1_s2, run_sweep, ClassLabel, ClassThresholds, Comparison, ScenarioClass, SweepGrid,
    SweepSpec,
};
