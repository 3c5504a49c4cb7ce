//! Community charging: surplus-priority dispatch of post-sharing PV to the
//! community charging points, grid pass-through for the rest of the EV
//! demand, and the infrastructure revenue account.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{align_series, ChargerSpec, EvDemandSeries, PriceSet};
use crate::error::{Error, Result};
use crate::ingestion::ProfileBundle;
use crate::settlement::{
    member_statements, settle_hours, HourlyLecFlows, MemberStatement, SettlementOptions,
};
use crate::sum::csum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Institutional separation: EV users charge at a commercial operator.
    S1,
    /// Community-operated charging with surplus-priority dispatch.
    S2,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::S1 => "s1",
            Regime::S2 => "s2",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Regime::S1),
            "s2" => Ok(Regime::S2),
            other => Err(Error::InvalidInput(format!(
                "unknown scenario `{other}`, expected s1 or s2"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispatch {
    pub pv2ev_kw: f64,
    pub grid2ev_kw: f64,
    pub export_kw: f64,
}

/// Surplus-priority dispatch for one interval. The port rating caps only
/// the PV share; demand beyond it is still served from the grid.
pub fn dispatch_hour(surplus_kw: f64, ev_demand_kw: f64, chargers: &ChargerSpec) -> Dispatch {
    debug_assert!(surplus_kw >= 0.0 && ev_demand_kw >= 0.0);
    let pv2ev_kw = surplus_kw.min(ev_demand_kw).min(chargers.capacity_kw());
    Dispatch {
        pv2ev_kw,
        grid2ev_kw: ev_demand_kw - pv2ev_kw,
        export_kw: surplus_kw - pv2ev_kw,
    }
}

/// Splits `pv2ev_kw` among prosumers in proportion to their surplus.
pub fn attribute_pv2ev(pv2ev_kw: f64, prosumer_surpluses: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = prosumer_surpluses.iter().sum();
    if pv2ev_kw > total * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::Attribution {
            pv2ev_kw,
            surplus_kw: total,
        });
    }
    if pv2ev_kw <= 0.0 || total <= 0.0 {
        return Ok(vec![0.0; prosumer_surpluses.len()]);
    }
    let ratio = pv2ev_kw / total;
    Ok(prosumer_surpluses.iter().map(|s| s * ratio).collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HourlyC2vFlows {
    /// EV demand served at the community charging points.
    pub ev_demand_kw: f64,
    pub pv2ev_kw: f64,
    pub grid2ev_kw: f64,
    pub export_kw: f64,
    /// Per-member share of `pv2ev_kw`, in household order.
    pub pv2ev_contrib_kw: Vec<f64>,
}

/// Annual infrastructure account of the community charging operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueAccount {
    pub pv2ev_kwh: f64,
    pub grid2ev_kwh: f64,
    /// Premium of the EV price over the PV-sourced cost (local price plus
    /// discounted network fee).
    pub surplus_component_chf: f64,
    /// Margin of the EV price over the retail tariff on grid-sourced charging.
    pub passthrough_component_chf: f64,
    pub total_chf: f64,
    pub capex_chf: f64,
    /// Simple payback; `None` when the account never turns positive.
    pub payback_years: Option<f64>,
}

impl RevenueAccount {
    pub fn from_energy(
        pv2ev_kwh: f64,
        grid2ev_kwh: f64,
        prices: &PriceSet,
        capex_chf: f64,
    ) -> Self {
        let surplus_component_chf = (prices.ev - prices.pv_sourced_cost()) * pv2ev_kwh;
        let passthrough_component_chf = (prices.ev - prices.buy) * grid2ev_kwh;
        let total_chf = surplus_component_chf + passthrough_component_chf;
        Self {
            pv2ev_kwh,
            grid2ev_kwh,
            surplus_component_chf,
            passthrough_component_chf,
            total_chf,
            capex_chf,
            payback_years: payback_years(capex_chf, total_chf),
        }
    }

    /// Institutional separation: the community runs no charging account.
    pub fn none(capex_chf: f64) -> Self {
        Self {
            pv2ev_kwh: 0.0,
            grid2ev_kwh: 0.0,
            surplus_component_chf: 0.0,
            passthrough_component_chf: 0.0,
            total_chf: 0.0,
            capex_chf,
            payback_years: None,
        }
    }
}

pub fn payback_years(capex_chf: f64, annual_revenue_chf: f64) -> Option<f64> {
    (annual_revenue_chf > 0.0).then(|| capex_chf / annual_revenue_chf)
}

pub fn revenue_year(
    hourly: &[HourlyC2vFlows],
    prices: &PriceSet,
    dt_hours: f64,
    capex_chf: f64,
) -> RevenueAccount {
    let pv2ev_kwh = csum(hourly.iter().map(|h| h.pv2ev_kw)) * dt_hours;
    let grid2ev_kwh = csum(hourly.iter().map(|h| h.grid2ev_kw)) * dt_hours;
    RevenueAccount::from_energy(pv2ev_kwh, grid2ev_kwh, prices, capex_chf)
}

/// One settled year under either regime.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityYear {
    pub regime: Regime,
    pub dt_hours: f64,
    pub household_ids: Vec<String>,
    pub chargers: ChargerSpec,
    pub lec: Vec<HourlyLecFlows>,
    pub c2v: Vec<HourlyC2vFlows>,
    pub statements: Vec<MemberStatement>,
    pub revenue: RevenueAccount,
}

impl CommunityYear {
    pub fn steps(&self) -> usize {
        self.lec.len()
    }

    /// Grid import at the community meter in interval `t`: member imports
    /// plus grid-sourced EV charging.
    pub fn community_import_kw(&self, t: usize) -> f64 {
        self.lec[t].grid_import_kw() + self.c2v[t].grid2ev_kw
    }

    pub fn export_kw(&self, t: usize) -> f64 {
        self.c2v[t].export_kw
    }
}

/// Institutional separation as a [`CommunityYear`]: no community charging,
/// all post-sharing surplus exported.
pub fn run_s1(
    bundle: &ProfileBundle,
    prices: &PriceSet,
    options: &SettlementOptions,
) -> Result<CommunityYear> {
    prices.validate()?;
    let lec = settle_hours(bundle)?;
    let n = bundle.households().len();
    let c2v = lec
        .iter()
        .map(|h| HourlyC2vFlows {
            ev_demand_kw: 0.0,
            pv2ev_kw: 0.0,
            grid2ev_kw: 0.0,
            export_kw: h.surplus_after_sharing_kw,
            pv2ev_contrib_kw: vec![0.0; n],
        })
        .collect();
    let ids = bundle.household_ids();
    let dt = bundle.axis().dt_hours();
    let statements = member_statements(&ids, &lec, None, prices, options, dt);
    Ok(CommunityYear {
        regime: Regime::S1,
        dt_hours: dt,
        household_ids: ids,
        chargers: ChargerSpec::none(),
        lec,
        c2v,
        statements,
        revenue: RevenueAccount::none(0.0),
    })
}

/// Community charging year: LEC settlement, then dispatch of the
/// post-sharing surplus, pro-rata attribution and the revenue account.
///
/// Without any charging capacity the community serves no EV demand and the
/// year reproduces [`run_s1`] flow for flow.
pub fn settle_year_s2(
    bundle: &ProfileBundle,
    prices: &PriceSet,
    options: &SettlementOptions,
    chargers: &ChargerSpec,
    ev_demand: &EvDemandSeries,
) -> Result<CommunityYear> {
    prices.validate()?;
    chargers.validate()?;
    align_series(bundle.axis(), &[(ev_demand.id(), ev_demand.demand())])?;
    let lec = settle_hours(bundle)?;
    let serves_ev = chargers.capacity_kw() > 0.0;
    let capacity = chargers.capacity_kw();
    if serves_ev {
        let over = ev_demand.demand().iter().filter(|&&d| d > capacity).count();
        if over > 0 {
            log::warn!(
                "EV demand `{}` exceeds the {capacity} kW port rating in {over} intervals; \
                 the excess is supplied from the grid",
                ev_demand.id()
            );
        }
    }
    let c2v: Vec<HourlyC2vFlows> = lec
        .par_iter()
        .zip(ev_demand.demand().par_iter())
        .map(|(hour, &demand)| {
            let served = if serves_ev { demand } else { 0.0 };
            let d = dispatch_hour(hour.surplus_after_sharing_kw, served, chargers);
            let surpluses: Vec<f64> = hour.members.iter().map(|m| m.surplus_contrib_kw).collect();
            let contrib = attribute_pv2ev(d.pv2ev_kw, &surpluses)?;
            Ok(HourlyC2vFlows {
                ev_demand_kw: served,
                pv2ev_kw: d.pv2ev_kw,
                grid2ev_kw: d.grid2ev_kw,
                export_kw: d.export_kw,
                pv2ev_contrib_kw: contrib,
            })
        })
        .collect::<Result<_>>()?;

    let ids = bundle.household_ids();
    let dt = bundle.axis().dt_hours();
    let contrib: Vec<Vec<f64>> = c2v.iter().map(|h| h.pv2ev_contrib_kw.clone()).collect();
    let statements = member_statements(&ids, &lec, Some(&contrib), prices, options, dt);
    let revenue = if serves_ev {
        revenue_year(&c2v, prices, dt, chargers.capex_chf)
    } else {
        RevenueAccount::none(chargers.capex_chf)
    };
    Ok(CommunityYear {
        regime: Regime::S2,
        dt_hours: dt,
        household_ids: ids,
        chargers: *chargers,
        lec,
        c2v,
        statements,
        revenue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TimeAxis;
    use crate::testutil::{household, table_prices};
    use proptest::prelude::*;

    fn two_by_eleven() -> ChargerSpec {
        ChargerSpec::new(2, 11.0, 6000.0).unwrap()
    }

    #[test]
    fn surplus_below_demand() {
        let d = dispatch_hour(15.0, 30.0, &two_by_eleven());
        assert_eq!((d.pv2ev_kw, d.grid2ev_kw, d.export_kw), (15.0, 15.0, 0.0));
    }

    #[test]
    fn no_surplus_all_grid() {
        let d = dispatch_hour(0.0, 7.0, &two_by_eleven());
        assert_eq!((d.pv2ev_kw, d.grid2ev_kw, d.export_kw), (0.0, 7.0, 0.0));
    }

    #[test]
    fn port_rating_binds() {
        let d = dispatch_hour(40.0, 40.0, &two_by_eleven());
        assert_eq!((d.pv2ev_kw, d.grid2ev_kw, d.export_kw), (22.0, 18.0, 18.0));
    }

    #[test]
    fn no_ports_no_pv2ev() {
        let d = dispatch_hour(10.0, 10.0, &ChargerSpec::none());
        assert_eq!(d.pv2ev_kw, 0.0);
        assert_eq!(d.export_kw, 10.0);
    }

    #[test]
    fn attribution_cases() {
        assert_eq!(attribute_pv2ev(6.0, &[2.0, 4.0]).unwrap(), vec![2.0, 4.0]);
        assert_eq!(attribute_pv2ev(3.0, &[2.0, 4.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(attribute_pv2ev(0.0, &[2.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(attribute_pv2ev(0.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            attribute_pv2ev(7.0, &[2.0, 4.0]),
            Err(Error::Attribution { .. })
        ));
    }

    #[test]
    fn revenue_surplus_component() {
        let p = table_prices();
        let r = RevenueAccount::from_energy(1000.0, 0.0, &p, 6000.0);
        assert!((r.surplus_component_chf - 257.05).abs() < 1e-9);
        assert_eq!(r.passthrough_component_chf, 0.0);
        assert!((r.payback_years.unwrap() - 6000.0 / 257.05).abs() < 1e-9);
    }

    #[test]
    fn revenue_passthrough_component() {
        let r = RevenueAccount::from_energy(0.0, 1000.0, &table_prices(), 6000.0);
        assert!((r.total_chf - 159.0).abs() < 1e-9);
    }

    #[test]
    fn revenue_zero_flows() {
        let hourly = vec![HourlyC2vFlows::default(); 5];
        let r = revenue_year(&hourly, &table_prices(), 1.0, 6000.0);
        assert_eq!(r.total_chf, 0.0);
        assert_eq!(r.payback_years, None);
    }

    #[test]
    fn negative_surplus_component_is_reported() {
        let p = PriceSet {
            network_fee: 0.5,
            gamma: 0.0,
            ..table_prices()
        };
        let r = RevenueAccount::from_energy(100.0, 0.0, &p, 1.0);
        assert!(r.surplus_component_chf < 0.0);
        assert_eq!(r.payback_years, None);
    }

    fn axis(steps: usize) -> TimeAxis {
        TimeAxis::hourly(TimeAxis::year(2025).start(), steps).unwrap()
    }

    fn toy_bundle(pro_pv: &[f64]) -> ProfileBundle {
        ProfileBundle::new(
            axis(3),
            vec![
                household("pro", &[2.0, 2.0, 2.0], pro_pv),
                household("con", &[4.0, 1.0, 0.0], &[0.0; 3]),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn zero_ports_reproduce_s1() {
        let b = toy_bundle(&[8.0, 0.0, 6.0]);
        let p = table_prices();
        let opts = SettlementOptions::default();
        let ev = EvDemandSeries::new("ev", vec![10.0; 3]).unwrap();
        let s1 = run_s1(&b, &p, &opts).unwrap();
        let s2 =
            settle_year_s2(&b, &p, &opts, &ChargerSpec::new(0, 11.0, 0.0).unwrap(), &ev).unwrap();
        assert_eq!(s1.lec, s2.lec);
        assert_eq!(s1.c2v, s2.c2v);
        assert_eq!(s1.statements, s2.statements);
        assert_eq!(s2.revenue.total_chf, 0.0);
    }

    #[test]
    fn toy_case_with_charging() {
        // h0: S = 6, U = 4 -> loc 4, surplus 2 -> pv2ev 2, grid2ev 8.
        // h1: no surplus -> grid2ev 10.
        // h2: S = 4, U = 0 -> surplus 4 -> pv2ev 4, grid2ev 6.
        let b = toy_bundle(&[8.0, 0.0, 6.0]);
        let p = table_prices();
        let opts = SettlementOptions::default();
        let ev = EvDemandSeries::new("ev", vec![10.0; 3]).unwrap();
        let charger = ChargerSpec::new(1, 11.0, 3000.0).unwrap();
        let y = settle_year_s2(&b, &p, &opts, &charger, &ev).unwrap();
        let pv2ev: Vec<f64> = y.c2v.iter().map(|h| h.pv2ev_kw).collect();
        let grid2ev: Vec<f64> = y.c2v.iter().map(|h| h.grid2ev_kw).collect();
        assert_eq!(pv2ev, vec![2.0, 0.0, 4.0]);
        assert_eq!(grid2ev, vec![8.0, 10.0, 6.0]);
        assert!(y.c2v.iter().all(|h| h.export_kw == 0.0));
        let expected = (0.40 - 0.14295) * 6.0 + (0.40 - 0.241) * 24.0;
        assert!((y.revenue.total_chf - expected).abs() < 1e-9);
        let pro = &y.statements[0];
        assert_eq!(pro.local_sold_kwh, 10.0);
        assert_eq!(pro.ev_sold_kwh, 6.0);
        assert_eq!(pro.grid_export_kwh, 0.0);

        let s1 = run_s1(&b, &p, &opts).unwrap();
        assert_eq!(s1.statements[0].grid_export_kwh, 6.0);
        let gain = s1.statements[0].net_cost_chf - pro.net_cost_chf;
        assert!((gain - (0.10 - 0.06) * 6.0).abs() < 1e-12);
    }

    #[test]
    fn idle_chargers_change_nothing() {
        let b = toy_bundle(&[8.0, 0.0, 6.0]);
        let p = table_prices();
        let opts = SettlementOptions::default();
        let ev = EvDemandSeries::zeros("ev", 3);
        let s1 = run_s1(&b, &p, &opts).unwrap();
        let s2 = settle_year_s2(&b, &p, &opts, &two_by_eleven(), &ev).unwrap();
        assert_eq!(s2.revenue.total_chf, 0.0);
        let e1: Vec<f64> = s1.c2v.iter().map(|h| h.export_kw).collect();
        let e2: Vec<f64> = s2.c2v.iter().map(|h| h.export_kw).collect();
        assert_eq!(e1, e2);
    }

    #[test]
    fn regime_parsing() {
        assert_eq!("S2".parse::<Regime>().unwrap(), Regime::S2);
        assert!("s3".parse::<Regime>().is_err());
    }

    proptest! {
        #[test]
        fn dispatch_identities(s in 0.0f64..50.0, d in 0.0f64..50.0, n in 0u32..4, p in 0.0f64..22.0) {
            let c = ChargerSpec::new(n, p, 0.0).unwrap();
            let x = dispatch_hour(s, d, &c);
            prop_assert_eq!(x.pv2ev_kw, s.min(d).min(c.capacity_kw()));
            prop_assert!(x.pv2ev_kw <= c.capacity_kw());
            prop_assert!(x.grid2ev_kw >= 0.0 && x.export_kw >= 0.0);
            prop_assert!((x.pv2ev_kw + x.export_kw - s).abs() <= 1e-9 * s.max(1.0));
            prop_assert!((x.pv2ev_kw + x.grid2ev_kw - d).abs() <= 1e-9 * d.max(1.0));
        }

        #[test]
        fn attribution_is_proportional(
            surpluses in prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..10.0], 1..6),
            frac in 0.0f64..=1.0,
        ) {
            let total: f64 = surpluses.iter().sum();
            let pv2ev = total * frac;
            let c = attribute_pv2ev(pv2ev, &surpluses).unwrap();
            let sum: f64 = c.iter().sum();
            prop_assert!((sum - pv2ev).abs() <= 1e-9 * pv2ev.max(1.0));
            for (ci, si) in c.iter().zip(&surpluses) {
                prop_assert!(*ci <= si * (1.0 + 1e-12));
                if *si > 0.0 && pv2ev > 0.0 {
                    prop_assert!((ci / si - pv2ev / total).abs() <= 1e-9);
                }
            }
        }
    }
}
