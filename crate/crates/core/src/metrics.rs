//! Annual metrics of a settled year: absorption ratio (M1), grid peaks
//! (M2), EV user savings (M3), infrastructure revenue (M4) and the PV
//! household revenue increase (M5).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::c2v::{CommunityYear, RevenueAccount};
use crate::domain::PriceSet;
use crate::sum::csum;

/// Annual energy per flow category, in kWh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyTotals {
    pub pv_gen_kwh: f64,
    pub load_kwh: f64,
    pub self_consumed_kwh: f64,
    pub local_shared_kwh: f64,
    pub surplus_after_sharing_kwh: f64,
    pub ev_demand_kwh: f64,
    pub pv2ev_kwh: f64,
    pub grid2ev_kwh: f64,
    pub export_kwh: f64,
    pub household_import_kwh: f64,
}

impl EnergyTotals {
    pub fn from_year(year: &CommunityYear) -> Self {
        let dt = year.dt_hours;
        let lec = &year.lec;
        let c2v = &year.c2v;
        Self {
            pv_gen_kwh: csum(lec.iter().flat_map(|h| h.members.iter().map(|m| m.pv_kw))) * dt,
            load_kwh: csum(lec.iter().flat_map(|h| h.members.iter().map(|m| m.load_kw))) * dt,
            self_consumed_kwh: csum(lec.iter().flat_map(|h| h.members.iter().map(|m| m.self_kw)))
                * dt,
            local_shared_kwh: csum(lec.iter().map(|h| h.loc_kw)) * dt,
            surplus_after_sharing_kwh: csum(lec.iter().map(|h| h.surplus_after_sharing_kw)) * dt,
            ev_demand_kwh: csum(c2v.iter().map(|h| h.ev_demand_kw)) * dt,
            pv2ev_kwh: csum(c2v.iter().map(|h| h.pv2ev_kw)) * dt,
            grid2ev_kwh: csum(c2v.iter().map(|h| h.grid2ev_kw)) * dt,
            export_kwh: csum(c2v.iter().map(|h| h.export_kw)) * dt,
            household_import_kwh: csum(
                lec.iter()
                    .flat_map(|h| h.members.iter().map(|m| m.grid_import_kw)),
            ) * dt,
        }
    }
}

/// Annual PV generation split into its four destinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvSplit {
    pub self_consumption: f64,
    pub local_share: f64,
    pub pv2ev: f64,
    pub export: f64,
}

impl PvSplit {
    pub fn from_totals(t: &EnergyTotals) -> Option<Self> {
        (t.pv_gen_kwh > 0.0).then(|| Self {
            self_consumption: t.self_consumed_kwh / t.pv_gen_kwh,
            local_share: t.local_shared_kwh / t.pv_gen_kwh,
            pv2ev: t.pv2ev_kwh / t.pv_gen_kwh,
            export: t.export_kwh / t.pv_gen_kwh,
        })
    }

    pub fn sum(&self) -> f64 {
        self.self_consumption + self.local_share + self.pv2ev + self.export
    }

    /// Rounds to `decimals` places so that the rounded shares still add up
    /// to one (largest-remainder apportionment).
    pub fn rounded(&self, decimals: i32) -> Self {
        let unit = 10f64.powi(decimals);
        let shares = [
            self.self_consumption,
            self.local_share,
            self.pv2ev,
            self.export,
        ];
        let total = unit.round() as i64;
        let scaled: Vec<f64> = shares.iter().map(|s| s / self.sum() * unit).collect();
        let mut units: Vec<i64> = scaled.iter().map(|s| s.floor() as i64).collect();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let missing = total - units.iter().sum::<i64>();
        for &k in order.iter().take(missing.max(0) as usize) {
            units[k] += 1;
        }
        let f = |u: i64| u as f64 / unit;
        Self {
            self_consumption: f(units[0]),
            local_share: f(units[1]),
            pv2ev: f(units[2]),
            export: f(units[3]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPeaks {
    pub import_kw: f64,
    pub export_kw: f64,
}

/// Share of PV generation absorbed inside the community; `None` when the
/// community generates nothing.
pub fn m1_absorption(year: &CommunityYear) -> Option<f64> {
    absorption_from_totals(&EnergyTotals::from_year(year))
}

fn absorption_from_totals(t: &EnergyTotals) -> Option<f64> {
    (t.pv_gen_kwh > 0.0)
        .then(|| (t.self_consumed_kwh + t.local_shared_kwh + t.pv2ev_kwh) / t.pv_gen_kwh)
}

/// Peak import and export at the community meter. Import includes
/// grid-sourced EV charging.
pub fn m2_peaks(year: &CommunityYear) -> GridPeaks {
    (0..year.steps()).fold(
        GridPeaks {
            import_kw: 0.0,
            export_kw: 0.0,
        },
        |acc, t| GridPeaks {
            import_kw: acc.import_kw.max(year.community_import_kw(t)),
            export_kw: acc.export_kw.max(year.export_kw(t)),
        },
    )
}

pub fn m3_ev_savings(ev_demand_kw: &[f64], prices: &PriceSet, dt_hours: f64) -> f64 {
    ev_savings_from_energy(csum(ev_demand_kw.iter().copied()) * dt_hours, prices)
}

pub fn ev_savings_from_energy(ev_energy_kwh: f64, prices: &PriceSet) -> f64 {
    (prices.public - prices.ev) * ev_energy_kwh
}

/// Revenue increase of each household from surplus credited at the local
/// price instead of the feed-in tariff.
pub fn m5_household_delta(pv2ev_kwh: &[f64], prices: &PriceSet) -> Vec<f64> {
    pv2ev_kwh
        .iter()
        .map(|e| (prices.loc - prices.sell) * e)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub m1_absorption_ratio: Option<f64>,
    pub m2_peak_import_kw: f64,
    pub m2_peak_export_kw: f64,
    pub m3_ev_savings_chf: f64,
    pub m4_revenue: RevenueAccount,
    /// Keyed by household id; PV-owning households only.
    pub m5_per_household_chf: BTreeMap<String, f64>,
    pub pv_split: Option<PvSplit>,
}

impl MetricsReport {
    pub fn compute(year: &CommunityYear, prices: &PriceSet) -> Self {
        let totals = EnergyTotals::from_year(year);
        let peaks = m2_peaks(year);
        let ev_sold: Vec<f64> = year.statements.iter().map(|s| s.ev_sold_kwh).collect();
        let m5 = m5_household_delta(&ev_sold, prices);
        let m5_per_household_chf = year
            .statements
            .iter()
            .zip(m5)
            .filter(|(s, _)| s.pv_gen_kwh > 0.0)
            .map(|(s, d)| (s.household_id.clone(), d))
            .collect();
        Self {
            m1_absorption_ratio: absorption_from_totals(&totals),
            m2_peak_import_kw: peaks.import_kw,
            m2_peak_export_kw: peaks.export_kw,
            m3_ev_savings_chf: ev_savings_from_energy(totals.ev_demand_kwh, prices),
            m4_revenue: year.revenue,
            m5_per_household_chf,
            pv_split: PvSplit::from_totals(&totals),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c2v::{run_s1, settle_year_s2};
    use crate::domain::{ChargerSpec, EvDemandSeries, TimeAxis};
    use crate::ingestion::ProfileBundle;
    use crate::settlement::SettlementOptions;
    use crate::testutil::{household, table_prices};

    fn axis(steps: usize) -> TimeAxis {
        TimeAxis::hourly(TimeAxis::year(2025).start(), steps).unwrap()
    }

    fn s1(households: Vec<crate::domain::HouseholdSeries>) -> CommunityYear {
        let steps = households[0].len();
        let b = ProfileBundle::new(axis(steps), households, vec![]).unwrap();
        run_s1(&b, &table_prices(), &SettlementOptions::default()).unwrap()
    }

    #[test]
    fn full_self_consumption_is_one() {
        let y = s1(vec![household("a", &[2.0, 3.0], &[2.0, 1.0])]);
        assert_eq!(m1_absorption(&y), Some(1.0));
    }

    #[test]
    fn half_exported_is_half() {
        let y = s1(vec![household("a", &[1.0, 1.0], &[2.0, 2.0])]);
        assert_eq!(m1_absorption(&y), Some(0.5));
        let split = MetricsReport::compute(&y, &table_prices())
            .pv_split
            .unwrap();
        assert_eq!(split.export, 0.5);
        assert_eq!(split.pv2ev, 0.0);
    }

    #[test]
    fn no_generation_not_applicable() {
        let y = s1(vec![household("a", &[1.0], &[0.0])]);
        assert_eq!(m1_absorption(&y), None);
    }

    #[test]
    fn flat_load_peak() {
        let hs = (0..7)
            .map(|i| household(&format!("h{i}"), &[5.0; 24], &[0.0; 24]))
            .collect();
        let p = m2_peaks(&s1(hs));
        assert_eq!(p.import_kw, 35.0);
        assert_eq!(p.export_kw, 0.0);
    }

    #[test]
    fn export_peak_unchanged_when_ev_absent_at_peak() {
        let b = ProfileBundle::new(
            axis(3),
            vec![household("a", &[1.0, 1.0, 1.0], &[9.0, 4.0, 0.0])],
            vec![],
        )
        .unwrap();
        let p = table_prices();
        let o = SettlementOptions::default();
        let ev = EvDemandSeries::new("ev", vec![0.0, 5.0, 5.0]).unwrap();
        let a = m2_peaks(&run_s1(&b, &p, &o).unwrap());
        let c = ChargerSpec::new(2, 11.0, 0.0).unwrap();
        let bpk = m2_peaks(&settle_year_s2(&b, &p, &o, &c, &ev).unwrap());
        assert_eq!(a.export_kw, bpk.export_kw);
        assert_eq!(bpk.import_kw, 6.0);
    }

    #[test]
    fn ev_savings() {
        let p = table_prices();
        assert!((ev_savings_from_energy(10_000.0, &p) - 1700.0).abs() < 1e-9);
        assert!((ev_savings_from_energy(10_000.0, &p.with_ev(0.55)) - 200.0).abs() < 1e-9);
        assert_eq!(m3_ev_savings(&[0.0; 10], &p, 1.0), 0.0);
        assert!((m3_ev_savings(&[5.0, 5.0], &p, 0.5) - 0.17 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn household_delta() {
        let d = m5_household_delta(&[1000.0, 0.0, 250.0], &table_prices());
        assert!((d[0] - 40.0).abs() < 1e-9);
        assert_eq!(d[1], 0.0);
        assert!((d[2] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn equal_prosumers_equal_deltas() {
        let b = ProfileBundle::new(
            axis(4),
            vec![
                household("a", &[1.0; 4], &[0.0, 6.0, 4.0, 0.0]),
                household("b", &[1.0; 4], &[0.0, 6.0, 4.0, 0.0]),
                household("c", &[2.0; 4], &[0.0; 4]),
            ],
            vec![],
        )
        .unwrap();
        let ev = EvDemandSeries::new("ev", vec![3.0; 4]).unwrap();
        let c = ChargerSpec::new(1, 11.0, 0.0).unwrap();
        let p = table_prices();
        let y = settle_year_s2(&b, &p, &SettlementOptions::default(), &c, &ev).unwrap();
        let m = MetricsReport::compute(&y, &p);
        assert_eq!(m.m5_per_household_chf.len(), 2);
        assert!(m.m5_per_household_chf["a"] > 0.0);
        assert_eq!(m.m5_per_household_chf["a"], m.m5_per_household_chf["b"]);
        let total: f64 = m.m5_per_household_chf.values().sum();
        let expected = (p.loc - p.sell) * EnergyTotals::from_year(&y).pv2ev_kwh;
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn rounded_split_sums_to_one() {
        let s = PvSplit {
            self_consumption: 1.0 / 3.0,
            local_share: 1.0 / 3.0,
            pv2ev: 1.0 / 6.0,
            export: 1.0 / 6.0,
        };
        let r = s.rounded(4);
        assert!((r.sum() - 1.0).abs() < 1e-9);
        assert_eq!(r.self_consumption, 0.3333);
        assert_eq!(r.export, 0.1667);
    }
}
