//! LEC settlement: per-hour self-consumption, pro-rata sharing of member
//! surplus with members that still have unmet demand, and grid exchange of
//! whatever remains.
//!
//! Shared energy is split symmetrically on both sides of the trade:
//! receivers get `loc * unmet_i / U`, sellers are credited
//! `loc * surplus_i / S`, with `loc = min(S, U)`. When one side is fully
//! served its ratio is exactly one, so no member ever ends up with a
//! negative residual.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::PriceSet;
use crate::error::{Error, Result};
use crate::ingestion::ProfileBundle;
use crate::sum::CompensatedSum;

/// Load and generation of one household in one interval, in kW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdHour {
    pub load_kw: f64,
    pub pv_kw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MemberFlow {
    pub load_kw: f64,
    pub pv_kw: f64,
    pub self_kw: f64,
    /// PV left after own consumption, `pv - self`.
    pub surplus_contrib_kw: f64,
    /// Part of the surplus consumed by other members.
    pub local_sold_kw: f64,
    /// Shared energy received from other members.
    pub local_recv_kw: f64,
    pub grid_import_kw: f64,
}

impl MemberFlow {
    /// Surplus left after member sharing; feeds EV charging or export.
    pub fn residual_surplus_kw(&self) -> f64 {
        self.surplus_contrib_kw - self.local_sold_kw
    }

    pub fn unmet_kw(&self) -> f64 {
        self.load_kw - self.self_kw
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HourlyLecFlows {
    pub members: Vec<MemberFlow>,
    /// Total member surplus `S` before sharing.
    pub surplus_kw: f64,
    /// Total unmet member demand `U` before sharing.
    pub unmet_kw: f64,
    /// Energy shared among members, `min(S, U)`.
    pub loc_kw: f64,
    /// `S - loc`, available for EV charging or export.
    pub surplus_after_sharing_kw: f64,
    /// Export when nothing else absorbs the remaining surplus.
    pub export_kw: f64,
}

impl HourlyLecFlows {
    pub fn pv_gen_kw(&self) -> f64 {
        self.members.iter().map(|m| m.pv_kw).sum()
    }

    pub fn load_kw(&self) -> f64 {
        self.members.iter().map(|m| m.load_kw).sum()
    }

    pub fn self_kw(&self) -> f64 {
        self.members.iter().map(|m| m.self_kw).sum()
    }

    pub fn grid_import_kw(&self) -> f64 {
        self.members.iter().map(|m| m.grid_import_kw).sum()
    }
}

/// Settles one interval among all members.
pub fn settle_hour(households: &[HouseholdHour]) -> Result<HourlyLecFlows> {
    let mut members = Vec::with_capacity(households.len());
    for (i, h) in households.iter().enumerate() {
        if !(h.load_kw >= 0.0 && h.pv_kw >= 0.0 && h.load_kw.is_finite() && h.pv_kw.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "household {i}: load {} kW, pv {} kW must be nonnegative",
                h.load_kw, h.pv_kw
            )));
        }
        let self_kw = h.load_kw.min(h.pv_kw);
        members.push(MemberFlow {
            load_kw: h.load_kw,
            pv_kw: h.pv_kw,
            self_kw,
            surplus_contrib_kw: h.pv_kw - self_kw,
            ..MemberFlow::default()
        });
    }
    let surplus: f64 = members.iter().map(|m| m.surplus_contrib_kw).sum();
    let unmet: f64 = members.iter().map(MemberFlow::unmet_kw).sum();
    let loc = surplus.min(unmet);

    if loc > 0.0 {
        let sold_ratio = loc / surplus;
        let recv_ratio = loc / unmet;
        for m in &mut members {
            m.local_sold_kw = m.surplus_contrib_kw * sold_ratio;
            m.local_recv_kw = m.unmet_kw() * recv_ratio;
        }
    }
    for m in &mut members {
        m.grid_import_kw = m.unmet_kw() - m.local_recv_kw;
    }
    let surplus_after_sharing = surplus - loc;
    Ok(HourlyLecFlows {
        members,
        surplus_kw: surplus,
        unmet_kw: unmet,
        loc_kw: loc,
        surplus_after_sharing_kw: surplus_after_sharing,
        export_kw: surplus_after_sharing,
    })
}

/// How members buying shared energy are charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementOptions {
    /// Add the discounted network fee `(1 - gamma) * network_fee` on top of
    /// the local price for shared energy. When off, buyers pay the local
    /// price alone.
    pub local_fee_on_top: bool,
}

impl Default for SettlementOptions {
    fn default() -> Self {
        Self {
            local_fee_on_top: true,
        }
    }
}

impl SettlementOptions {
    pub fn local_buy_price(&self, prices: &PriceSet) -> f64 {
        if self.local_fee_on_top {
            prices.loc + prices.discounted_network_fee()
        } else {
            prices.loc
        }
    }
}

/// Annual energy and money position of one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberStatement {
    pub household_id: String,
    pub load_kwh: f64,
    pub pv_gen_kwh: f64,
    pub surplus_kwh: f64,
    pub self_consumed_kwh: f64,
    /// Surplus sold within the community, EV charging included.
    pub local_sold_kwh: f64,
    /// Part of `local_sold_kwh` routed to the community charging points.
    pub ev_sold_kwh: f64,
    pub local_bought_kwh: f64,
    pub grid_import_kwh: f64,
    pub grid_export_kwh: f64,
    pub local_sales_revenue_chf: f64,
    pub export_revenue_chf: f64,
    pub local_purchase_cost_chf: f64,
    pub grid_purchase_cost_chf: f64,
    pub net_cost_chf: f64,
}

/// Aggregates hourly member flows into annual statements.
///
/// `ev_contrib_kw[t][i]` is member `i`'s share of PV-to-EV energy in
/// interval `t`; it is credited at the local price and removed from export.
pub fn member_statements(
    household_ids: &[String],
    hours: &[HourlyLecFlows],
    ev_contrib_kw: Option<&[Vec<f64>]>,
    prices: &PriceSet,
    options: &SettlementOptions,
    dt_hours: f64,
) -> Vec<MemberStatement> {
    let n = household_ids.len();
    #[derive(Default, Clone)]
    struct Acc {
        load: CompensatedSum,
        pv: CompensatedSum,
        surplus: CompensatedSum,
        self_consumed: CompensatedSum,
        member_sold: CompensatedSum,
        ev_sold: CompensatedSum,
        bought: CompensatedSum,
        import: CompensatedSum,
        export: CompensatedSum,
    }
    let mut acc = vec![Acc::default(); n];
    for (t, hour) in hours.iter().enumerate() {
        let ev = ev_contrib_kw.map(|c| c[t].as_slice());
        for (i, (m, a)) in hour.members.iter().zip(acc.iter_mut()).enumerate() {
            let ev_i = ev.map_or(0.0, |e| e[i]);
            a.load += m.load_kw;
            a.pv += m.pv_kw;
            a.surplus += m.surplus_contrib_kw;
            a.self_consumed += m.self_kw;
            a.member_sold += m.local_sold_kw;
            a.ev_sold += ev_i;
            a.bought += m.local_recv_kw;
            a.import += m.grid_import_kw;
            a.export += (m.residual_surplus_kw() - ev_i).max(0.0);
        }
    }
    let local_buy = options.local_buy_price(prices);
    household_ids
        .iter()
        .zip(acc)
        .map(|(id, a)| {
            let ev_sold = a.ev_sold.value() * dt_hours;
            let local_sold = a.member_sold.value() * dt_hours + ev_sold;
            let local_bought = a.bought.value() * dt_hours;
            let grid_import = a.import.value() * dt_hours;
            let grid_export = a.export.value() * dt_hours;
            let local_sales_revenue = prices.loc * local_sold;
            let export_revenue = prices.sell * grid_export;
            let local_purchase_cost = local_buy * local_bought;
            let grid_purchase_cost = prices.buy * grid_import;
            MemberStatement {
                household_id: id.clone(),
                load_kwh: a.load.value() * dt_hours,
                pv_gen_kwh: a.pv.value() * dt_hours,
                surplus_kwh: a.surplus.value() * dt_hours,
                self_consumed_kwh: a.self_consumed.value() * dt_hours,
                local_sold_kwh: local_sold,
                ev_sold_kwh: ev_sold,
                local_bought_kwh: local_bought,
                grid_import_kwh: grid_import,
                grid_export_kwh: grid_export,
                local_sales_revenue_chf: local_sales_revenue,
                export_revenue_chf: export_revenue,
                local_purchase_cost_chf: local_purchase_cost,
                grid_purchase_cost_chf: grid_purchase_cost,
                net_cost_chf: grid_purchase_cost + local_purchase_cost
                    - local_sales_revenue
                    - export_revenue,
            }
        })
        .collect()
}

/// Settles every interval of the bundle. Intervals are independent and
/// evaluated in parallel; the output keeps interval order.
pub fn settle_hours(bundle: &ProfileBundle) -> Result<Vec<HourlyLecFlows>> {
    let households = bundle.households();
    (0..bundle.axis().steps())
        .into_par_iter()
        .map(|t| {
            let hour: Vec<HouseholdHour> = households
                .iter()
                .map(|h| HouseholdHour {
                    load_kw: h.load()[t],
                    pv_kw: h.pv_gen()[t],
                })
                .collect();
            settle_hour(&hour)
        })
        .collect()
}

/// Result of a year of LEC settlement without community charging.
#[derive(Debug, Clone, PartialEq)]
pub struct LecYear {
    pub hours: Vec<HourlyLecFlows>,
    pub statements: Vec<MemberStatement>,
}

/// Institutional separation: member sharing, then all remaining surplus
/// is exported at the feed-in tariff.
pub fn settle_year_s1(
    bundle: &ProfileBundle,
    prices: &PriceSet,
    options: &SettlementOptions,
) -> Result<LecYear> {
    prices.validate()?;
    let hours = settle_hours(bundle)?;
    let statements = member_statements(
        &bundle.household_ids(),
        &hours,
        None,
        prices,
        options,
        bundle.axis().dt_hours(),
    );
    Ok(LecYear { hours, statements })
}
