//! TOML run configuration.

use std::path::{Path, PathBuf};

use anyhow::Context;
use c2v_core::ingestion::{
    read_ev_csv, read_household_csv, synth_ev_profile, synth_household, EvSynthParams,
    HouseholdSynthParams, NEST_PV_YIELD_KWH_PER_KWP,
};
use c2v_core::sweep::{PriceRange, ProfileWeight, ScenarioDef};
use c2v_core::{
    ChargerSpec, ClassThresholds, EvDemandSeries, HouseholdSeries, PriceSet, ProfileBundle,
    SettlementOptions, SweepSpec, TimeAxis,
};
use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub axis: AxisConfig,
    pub data: Option<DataConfig>,
    pub synth: Option<SynthConfig>,
    #[serde(default = "default_prices")]
    pub prices: PriceSet,
    #[serde(default)]
    pub settlement: SettlementOptions,
    #[serde(default = "default_chargers")]
    pub chargers: Vec<ChargerSpec>,
    #[serde(default = "default_range")]
    pub sweep: PriceRange,
    #[serde(default)]
    pub scenarios: Vec<ScenarioDef>,
    #[serde(default)]
    pub thresholds: ClassThresholds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub start: NaiveDateTime,
    pub steps: usize,
    pub dt_hours: f64,
}

impl Default for AxisConfig {
    fn default() -> Self {
        let year = TimeAxis::year(2025);
        Self {
            start: year.start(),
            steps: year.steps(),
            dt_hours: year.dt_hours(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub households: PathBuf,
    pub ev: PathBuf,
}

/// Parameters of the synthetic community. Defaults reproduce the
/// reference community's annual magnitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub households: usize,
    pub pv_households: usize,
    pub pv_kwp_each: f64,
    pub pv_yield_kwh_per_kwp: f64,
    pub annual_load_kwh_each: f64,
    pub ev_profiles: usize,
    pub sessions_per_day: f64,
    pub energy_per_session_kwh: f64,
    pub port_kw: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            households: 7,
            pv_households: 3,
            pv_kwp_each: 12.0,
            pv_yield_kwh_per_kwp: NEST_PV_YIELD_KWH_PER_KWP,
            annual_load_kwh_each: 44_075.0 / 7.0,
            ev_profiles: 20,
            sessions_per_day: 1.2,
            energy_per_session_kwh: 15.0,
            port_kw: 11.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.households == 0 {
            out.push("synth.households must be at least 1".into());
        }
        if self.pv_households > self.households {
            out.push(format!(
                "synth.pv_households ({}) exceeds synth.households ({})",
                self.pv_households, self.households
            ));
        }
        for (name, v) in [
            ("pv_kwp_each", self.pv_kwp_each),
            ("pv_yield_kwh_per_kwp", self.pv_yield_kwh_per_kwp),
            ("annual_load_kwh_each", self.annual_load_kwh_each),
            ("sessions_per_day", self.sessions_per_day),
            ("energy_per_session_kwh", self.energy_per_session_kwh),
            ("port_kw", self.port_kw),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!(
                    "synth.{name} must be a nonnegative number, got {v}"
                ));
            }
        }
        out
    }

    /// Household `i` gets seed `seed + i`, EV profile `k` gets
    /// `seed + 1000 + k`.
    pub fn generate(&self, seed: u64, axis: &TimeAxis) -> anyhow::Result<ProfileBundle> {
        let width = self.households.to_string().len().max(1);
        let households = (0..self.households)
            .map(|i| {
                let kwp = if i < self.pv_households {
                    self.pv_kwp_each
                } else {
                    0.0
                };
                let params = HouseholdSynthParams::new(self.annual_load_kwh_each, kwp)
                    .with_yield(self.pv_yield_kwh_per_kwp);
                synth_household(
                    format!("hh{:0width$}", i + 1),
                    seed + i as u64,
                    axis,
                    &params,
                )
            })
            .collect::<c2v_core::Result<Vec<HouseholdSeries>>>()?;
        let ev_params = EvSynthParams::new(
            self.sessions_per_day,
            self.energy_per_session_kwh,
            self.port_kw,
        );
        let width = self.ev_profiles.to_string().len().max(2);
        let ev = (0..self.ev_profiles)
            .map(|k| {
                synth_ev_profile(
                    format!("ev{:0width$}", k + 1),
                    seed + 1000 + k as u64,
                    axis,
                    &ev_params,
                )
            })
            .collect::<c2v_core::Result<Vec<EvDemandSeries>>>()?;
        Ok(ProfileBundle::new(*axis, households, ev)?)
    }
}

fn default_seed() -> u64 {
    42
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub fn default_prices() -> PriceSet {
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

fn default_chargers() -> Vec<ChargerSpec> {
    vec![ChargerSpec {
        n_cp: 2,
        p_max_kw: 11.0,
        capex_chf: 6000.0,
    }]
}

fn default_range() -> PriceRange {
    PriceRange {
        min: 0.30,
        max: 0.55,
        step: 0.05,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out: default_out(),
            axis: AxisConfig::default(),
            data: None,
            synth: None,
            prices: default_prices(),
            settlement: SettlementOptions::default(),
            chargers: default_chargers(),
            sweep: default_range(),
            scenarios: Vec::new(),
            thresholds: ClassThresholds::default(),
        }
    }
}

/// A configuration problem found before any simulation runs.
#[derive(Debug)]
pub struct Invalid(pub Vec<String>);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, line) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{line}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Invalid {}

impl RunConfig {
    /// Reads a config file. Relative data paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Invalid(vec![format!("{}: {}", path.display(), e.message())]))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(data) = &mut cfg.data {
            data.households = base.join(&data.households);
            data.ev = base.join(&data.ev);
        }
        Ok(cfg)
    }

    pub fn time_axis(&self) -> c2v_core::Result<TimeAxis> {
        TimeAxis::new(self.axis.start, self.axis.steps, self.axis.dt_hours)
    }

    pub fn sweep_spec(&self, bundle: &ProfileBundle) -> SweepSpec {
        SweepSpec {
            ev_price_range: self.sweep,
            scenarios: self.scenarios_or_default(bundle),
            charger_options: self.chargers.clone(),
            thresholds: self.thresholds,
        }
    }

    /// Configured scenarios, or consecutive groups of profiles with one
    /// profile per charging point of the first charger option.
    pub fn scenarios_or_default(&self, bundle: &ProfileBundle) -> Vec<ScenarioDef> {
        if !self.scenarios.is_empty() {
            return self.scenarios.clone();
        }
        let per_scenario = self.chargers.first().map_or(1, |c| c.n_cp.max(1) as usize);
        bundle
            .ev_profiles()
            .chunks(per_scenario)
            .map(|group| ScenarioDef {
                label: group.iter().map(|p| p.id()).collect::<Vec<_>>().join("+"),
                profiles: group
                    .iter()
                    .map(|p| ProfileWeight {
                        profile: p.id().to_string(),
                        scale: 1.0,
                    })
                    .collect(),
            })
            .collect()
    }

    /// Every static problem with the configuration: price ladder, charger
    /// specs, sweep range, thresholds and the data source.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.time_axis() {
            out.push(format!("axis: {e}"));
        }
        if let Err(v) = self.prices.validate() {
            out.push(format!("prices: {v}"));
        }
        if self.chargers.is_empty() {
            out.push("chargers: at least one charger option is required".into());
        }
        for (k, c) in self.chargers.iter().enumerate() {
            if let Err(e) = c.validate() {
                out.push(format!("chargers[{k}]: {e}"));
            }
        }
        if let Err(e) = self.sweep.validate() {
            out.push(format!("sweep: {e}"));
        }
        if let Err(e) = self.thresholds.validate() {
            out.push(format!("thresholds: {e}"));
        }
        for (k, s) in self.scenarios.iter().enumerate() {
            if s.profiles.is_empty() {
                out.push(format!("scenarios[{k}] `{}`: no profiles", s.label));
            }
        }
        match (&self.data, &self.synth) {
            (Some(data), _) => {
                for p in [&data.households, &data.ev] {
                    if !p.is_file() {
                        out.push(format!("data: file not found: {}", p.display()));
                    }
                }
            }
            (None, Some(s)) => out.extend(s.validate()),
            (None, None) => out.push("config needs a [data] or a [synth] section".into()),
        }
        out
    }

    /// Reads or generates the profiles. Content problems (bad cells,
    /// misaligned series, unknown scenario profiles) are reported as
    /// [`Invalid`].
    pub fn load_bundle(&self) -> anyhow::Result<ProfileBundle> {
        let axis = self
            .time_axis()
            .map_err(|e| Invalid(vec![format!("axis: {e}")]))?;
        let bundle = match (&self.data, &self.synth) {
            (Some(data), _) => {
                let households =
                    read_household_csv(&data.households, &axis).map_err(input_error)?;
                let ev = read_ev_csv(&data.ev, &axis).map_err(input_error)?;
                ProfileBundle::new(axis, households, ev).map_err(input_error)?
            }
            (None, Some(s)) => s.generate(self.seed, &axis)?,
            (None, None) => SynthConfig::default().generate(self.seed, &axis)?,
        };
        let mut bad = Vec::new();
        for s in self.scenarios_or_default(&bundle) {
            if let Err(e) = s.demand(&bundle) {
                bad.push(format!("scenario `{}`: {e}", s.label));
            }
        }
        if !bad.is_empty() {
            return Err(Invalid(bad).into());
        }
        Ok(bundle)
    }
}

/// I/O failures stay runtime errors; anything wrong with the content of
/// the inputs is a validation failure.
fn input_error(e: c2v_core::Error) -> anyhow::Error {
    match e {
        c2v_core::Error::Io { .. } => e.into(),
        other => Invalid(vec![other.to_string()]).into(),
    }
}

/// `--thresholds a,b`
pub fn parse_thresholds(s: &str) -> Result<ClassThresholds, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected two comma-separated numbers, got `{s}`"));
    };
    let a: f64 = a.parse().map_err(|_| format!("`{a}` is not a number"))?;
    let b: f64 = b.parse().map_err(|_| format!("`{b}` is not a number"))?;
    ClassThresholds::new(a, b).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig {
            synth: Some(SynthConfig::default()),
            ..RunConfig::default()
        };
        assert!(cfg.problems().is_empty(), "{:?}", cfg.problems());
    }

    #[test]
    fn empty_file_parses_to_defaults() {
        let cfg: RunConfig = toml::from_str("[synth]\n").unwrap();
        assert_eq!(cfg.prices, default_prices());
        assert_eq!(cfg.chargers.len(), 1);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn ladder_violation_is_reported() {
        let cfg = RunConfig {
            prices: PriceSet {
                ev: 0.60,
                ..default_prices()
            },
            synth: Some(SynthConfig::default()),
            ..RunConfig::default()
        };
        let p = cfg.problems();
        assert_eq!(p.len(), 1);
        assert!(p[0].starts_with("prices:"), "{p:?}");
    }

    #[test]
    fn thresholds_flag() {
        assert_eq!(
            parse_thresholds("0.2, 0.5").unwrap(),
            ClassThresholds::new(0.2, 0.5).unwrap()
        );
        assert!(parse_thresholds("0.5").is_err());
        assert!(parse_thresholds("0.6,0.5").is_err());
        assert!(parse_thresholds("a,0.5").is_err());
    }
}
