//! Summary statistics over a finished trace.
//!
//! A steady value is the mean over the last 10 % of a segment; a segment is
//! settled when `v_c` stays inside the settle band over that window.

use zsource_core::sim::energy_audit;
use zsource_core::sim::sweep::{SETTLE_BAND, SETTLE_WINDOW};
use zsource_core::F64::{Scenario, Trace};

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub d_s: f64,
    pub v_c: f64,
    pub v_c_ref: f64,
    pub v_dc: f64,
    pub omega: f64,
    pub p_grid: f64,
    pub settled: bool,
}

/// Times at which any reference or stepped wind input changes.
pub fn breakpoints(sc: &Scenario) -> Vec<f64> {
    let mut ts: Vec<f64> = sc
        .vc_ref_schedule
        .iter()
        .chain(&sc.omega_ref_schedule)
        .map(|p| p[0])
        .collect();
    if let zsource_core::sim::WindProfile::Steps { points } = &sc.wind_profile {
        ts.extend(points.iter().map(|p| p[0]));
    }
    ts.retain(|t| *t > 0.0 && *t < sc.duration);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut out = vec![0.0];
    out.extend(ts);
    out.push(sc.duration);
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn segments(sc: &Scenario, tr: &Trace) -> Vec<Segment> {
    let b = breakpoints(sc);
    b.windows(2)
        .filter_map(|w| {
            let (t0, t1) = (w[0], w[1]);
            let r = tr.window(t1 - SETTLE_WINDOW * (t1 - t0), t1);
            if r.is_empty() {
                return None;
            }
            let m = |c: &str| mean(&tr.col(c)[r.clone()]);
            let v_c = m("v_c");
            let settled = tr.col("v_c")[r.clone()].iter().all(|v| (v - v_c).abs() <= SETTLE_BAND * v_c.abs());
            Some(Segment {
                t0,
                t1,
                d_s: m("d_s"),
                v_c,
                v_c_ref: m("v_c_ref"),
                v_dc: m("v_dc"),
                omega: m("omega"),
                p_grid: m("p_grid"),
                settled,
            })
        })
        .collect()
}

/// Largest `|v_c / v_c_ref - 1|` after the first 5 % of the run.
pub fn max_vc_deviation(sc: &Scenario, tr: &Trace) -> f64 {
    let r = tr.window(0.05 * sc.duration, sc.duration);
    tr.col("v_c")[r.clone()]
        .iter()
        .zip(&tr.col("v_c_ref")[r])
        .map(|(v, r)| (v / r - 1.0).abs())
        .fold(0.0, f64::max)
}

pub fn summary(sc: &Scenario, tr: &Trace) -> String {
    let mut s = format!("scenario {} ({} samples, {} s)\n", sc.name, tr.len(), sc.duration);
    if tr.is_empty() {
        return s;
    }
    s += "  segment            d_s      V_C [V]  V_C* [V]  v_dc [V]  omega [rad/s]  P_grid [W]  settled\n";
    for g in segments(sc, tr) {
        s += &format!(
            "  {:>6.3} - {:<6.3}  {:.4}  {:>7.2}  {:>8.2}  {:>8.2}  {:>13.3}  {:>10.1}  {}\n",
            g.t0,
            g.t1,
            g.d_s,
            g.v_c,
            g.v_c_ref,
            g.v_dc,
            g.omega,
            g.p_grid,
            if g.settled { "yes" } else { "no" }
        );
    }
    let audit = energy_audit(tr, &sc.params);
    s += &format!("  max V_C deviation from reference after {:.3} s: {:.2}%\n", 0.05 * sc.duration, 100.0 * max_vc_deviation(sc, tr));
    s += &format!("  max energy residual: {:.3e} W", audit.max_residual);
    if sc.params.is_lossless() {
        s += &format!(" ({:.1e} of rated)\n", audit.max_residual / audit.rated_power);
    } else {
        s += &format!(", after modeled losses: {:.3e} W (peak loss {:.1} W)\n", audit.max_loss_mismatch, audit.max_loss);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig8_breakpoints() {
        let sc = Scenario::bundled("fig8").unwrap().unwrap();
        assert_eq!(breakpoints(&sc), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn fig7_breakpoints_merge_wind_and_speed() {
        let sc = Scenario::bundled("fig7").unwrap().unwrap();
        assert_eq!(breakpoints(&sc), vec![0.0, 1.0, 2.5, 4.0]);
    }
}
