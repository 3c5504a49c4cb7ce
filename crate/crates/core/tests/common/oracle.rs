//! Brute-force reference evaluation of a community year.
//!
//! Written from the settlement and dispatch rules directly, one hour and
//! one household at a time with plain loops and naive sums. It shares no
//! code with the engine beyond the `PriceSet` data type.

use c2v_core::PriceSet;

#[derive(Debug, Clone, Default)]
pub struct OracleHour {
    pub self_kw: Vec<f64>,
    pub sold_kw: Vec<f64>,
    pub recv_kw: Vec<f64>,
    pub import_kw: Vec<f64>,
    pub contrib_kw: Vec<f64>,
    pub member_export_kw: Vec<f64>,
    pub loc_kw: f64,
    pub residual_kw: f64,
    pub ev_served_kw: f64,
    pub pv2ev_kw: f64,
    pub grid2ev_kw: f64,
    pub export_kw: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OracleMember {
    pub load: f64,
    pub pv: f64,
    pub surplus: f64,
    pub self_consumed: f64,
    pub local_sold: f64,
    pub ev_sold: f64,
    pub bought: f64,
    pub import: f64,
    pub export: f64,
    pub sales_revenue: f64,
    pub export_revenue: f64,
    pub purchase_cost: f64,
    pub grid_cost: f64,
    pub net_cost: f64,
}

#[derive(Debug, Clone)]
pub struct OracleYear {
    pub hours: Vec<OracleHour>,
    pub members: Vec<OracleMember>,
    pub surplus_component: f64,
    pub passthrough_component: f64,
    pub revenue: f64,
    pub payback: Option<f64>,
    pub m1: Option<f64>,
    pub peak_import: f64,
    pub peak_export: f64,
    pub m3: f64,
    pub m5: Vec<f64>,
}

pub struct OracleInput<'a> {
    pub loads: &'a [Vec<f64>],
    pub pvs: &'a [Vec<f64>],
    pub ev: &'a [f64],
    pub n_cp: u32,
    pub p_max: f64,
    pub capex: f64,
    pub prices: PriceSet,
    pub fee_on_top: bool,
    pub dt: f64,
    /// false: institutional separation, no community charging at all.
    pub community_charging: bool,
}

pub fn evaluate(inp: &OracleInput) -> OracleYear {
    let n = inp.loads.len();
    let steps = inp.ev.len();
    let p = &inp.prices;
    let cap = inp.n_cp as f64 * inp.p_max;
    let charging = inp.community_charging && cap > 0.0;

    let mut hours = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut h = OracleHour::default();
        let mut sur = vec![0.0; n];
        let mut unmet = vec![0.0; n];
        let mut s_tot = 0.0;
        let mut u_tot = 0.0;
        for i in 0..n {
            let load = inp.loads[i][t];
            let pv = inp.pvs[i][t];
            let own = if load < pv { load } else { pv };
            h.self_kw.push(own);
            sur[i] = pv - own;
            unmet[i] = load - own;
            s_tot += sur[i];
            u_tot += unmet[i];
        }
        h.loc_kw = if s_tot < u_tot { s_tot } else { u_tot };
        let mut residual = vec![0.0; n];
        for i in 0..n {
            let sold = if s_tot > 0.0 {
                h.loc_kw * sur[i] / s_tot
            } else {
                0.0
            };
            let recv = if u_tot > 0.0 {
                h.loc_kw * unmet[i] / u_tot
            } else {
                0.0
            };
            h.sold_kw.push(sold);
            h.recv_kw.push(recv);
            h.import_kw.push(unmet[i] - recv);
            residual[i] = sur[i] - sold;
        }
        h.residual_kw = s_tot - h.loc_kw;

        h.ev_served_kw = if charging { inp.ev[t] } else { 0.0 };
        h.pv2ev_kw = if charging {
            let mut m = h.residual_kw;
            if h.ev_served_kw < m {
                m = h.ev_served_kw;
            }
            if cap < m {
                m = cap;
            }
            m
        } else {
            0.0
        };
        h.grid2ev_kw = h.ev_served_kw - h.pv2ev_kw;
        h.export_kw = h.residual_kw - h.pv2ev_kw;
        let res_tot: f64 = residual.iter().sum();
        for r in &residual {
            let c = if res_tot > 0.0 && h.pv2ev_kw > 0.0 {
                h.pv2ev_kw * r / res_tot
            } else {
                0.0
            };
            h.contrib_kw.push(c);
            h.member_export_kw.push((r - c).max(0.0));
        }
        hours.push(h);
    }

    let local_buy = if inp.fee_on_top {
        p.loc + (1.0 - p.gamma) * p.network_fee
    } else {
        p.loc
    };
    let dt = inp.dt;
    let mut members = Vec::with_capacity(n);
    for i in 0..n {
        let mut m = OracleMember::default();
        for (t, h) in hours.iter().enumerate() {
            m.load += inp.loads[i][t] * dt;
            m.pv += inp.pvs[i][t] * dt;
            m.surplus += (inp.pvs[i][t] - h.self_kw[i]) * dt;
            m.self_consumed += h.self_kw[i] * dt;
            m.local_sold += (h.sold_kw[i] + h.contrib_kw[i]) * dt;
            m.ev_sold += h.contrib_kw[i] * dt;
            m.bought += h.recv_kw[i] * dt;
            m.import += h.import_kw[i] * dt;
            m.export += h.member_export_kw[i] * dt;
        }
        m.sales_revenue = m.local_sold * p.loc;
        m.export_revenue = m.export * p.sell;
        m.purchase_cost = m.bought * local_buy;
        m.grid_cost = m.import * p.buy;
        m.net_cost = m.grid_cost + m.purchase_cost - m.sales_revenue - m.export_revenue;
        members.push(m);
    }

    let mut pv2ev = 0.0;
    let mut grid2ev = 0.0;
    let mut ev_energy = 0.0;
    let mut gen = 0.0;
    let mut absorbed = 0.0;
    let mut peak_import: f64 = 0.0;
    let mut peak_export: f64 = 0.0;
    for (t, h) in hours.iter().enumerate() {
        pv2ev += h.pv2ev_kw * dt;
        grid2ev += h.grid2ev_kw * dt;
        ev_energy += h.ev_served_kw * dt;
        for i in 0..n {
            gen += inp.pvs[i][t] * dt;
            absorbed += h.self_kw[i] * dt;
        }
        absorbed += (h.loc_kw + h.pv2ev_kw) * dt;
        let imp: f64 = h.import_kw.iter().sum::<f64>() + h.grid2ev_kw;
        peak_import = peak_import.max(imp);
        peak_export = peak_export.max(h.export_kw);
    }
    let (surplus_component, passthrough_component) = if charging {
        (
            (p.ev - p.loc - (1.0 - p.gamma) * p.network_fee) * pv2ev,
            (p.ev - p.buy) * grid2ev,
        )
    } else {
        (0.0, 0.0)
    };
    let revenue = surplus_component + passthrough_component;
    OracleYear {
        surplus_component,
        passthrough_component,
        revenue,
        payback: (revenue > 0.0).then(|| inp.capex / revenue),
        m1: (gen > 0.0).then(|| absorbed / gen),
        peak_import,
        peak_export,
        m3: (p.public - p.ev) * ev_energy,
        m5: members
            .iter()
            .map(|m| (p.loc - p.sell) * m.ev_sold)
            .collect(),
        hours,
        members,
    }
}
