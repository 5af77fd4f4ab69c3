//! Parallel closed-loop MPPT sweep over wind speed.

use rayon::prelude::*;

use crate::scalar::Scalar;
use crate::sim::kernel::run;
use crate::sim::scenario::{Scenario, WindProfile};
use crate::turbine::{opt_power, speed_ref};

/// Fraction of the run treated as settled.
pub const SETTLE_WINDOW: f64 = 0.1;
/// Relative band the speed must stay inside over the settled window.
pub const SETTLE_BAND: f64 = 5e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct MpptRow<T> {
    pub v_w: T,
    pub omega_settled: T,
    pub lambda_settled: T,
    /// Mean turbine shaft power over the settled window, W.
    pub p_settled: T,
    /// Cubic-law power at the wind speed, W.
    pub p_opt: T,
    /// `(λ - λ_opt) / λ_opt`.
    pub lambda_error: T,
    pub power_ratio: T,
    pub settled: bool,
    /// Simulation failure, if any.
    pub error: Option<String>,
}

/// One MPPT run: wind starts at `start_fraction · v_w`, steps to `v_w` at
/// `step_time`, and the speed reference follows the wind.
pub fn mppt_scenario<T: Scalar>(base: &Scenario<T>, v_w: T, step_time: T, start_fraction: T) -> Scenario<T> {
    let mut sc = base.clone();
    sc.wind_profile = WindProfile::Steps { points: vec![[T::zero(), start_fraction * v_w], [step_time, v_w]] };
    sc.omega_ref_schedule.clear();
    sc
}

fn settle_row<T: Scalar>(sc: &Scenario<T>, v_w: T) -> MpptRow<T> {
    let p = &sc.params.turbine;
    let p_opt = opt_power(speed_ref(v_w, p), p);
    let nan = T::nan();
    let mut row = MpptRow {
        v_w,
        omega_settled: nan,
        lambda_settled: nan,
        p_settled: nan,
        p_opt,
        lambda_error: nan,
        power_ratio: nan,
        settled: false,
        error: None,
    };
    let trace = match run(sc) {
        Ok(t) => t,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    if trace.is_empty() {
        row.error = Some("empty trace".into());
        return row;
    }
    let omega = trace.tail_mean("omega", SETTLE_WINDOW).unwrap();
    let n = ((trace.len() as f64 * SETTLE_WINDOW).ceil() as usize).clamp(1, trace.len());
    let tail = &trace.col("omega")[trace.len() - n..];
    let band = T::lit(SETTLE_BAND) * omega.abs();
    row.settled = tail.iter().all(|&w| (w - omega).abs() <= band);
    row.omega_settled = omega;
    row.lambda_settled = p.blade_radius * omega / v_w;
    row.lambda_error = (row.lambda_settled - p.lambda_opt) / p.lambda_opt;
    row.p_settled = trace.tail_mean("p_turbine", SETTLE_WINDOW).unwrap();
    row.power_ratio = row.p_settled / p_opt;
    row
}

/// Runs one settling simulation per wind speed in parallel; rows keep input order.
pub fn mppt_sweep<T: Scalar>(base: &Scenario<T>, winds: &[T], step_time: T, start_fraction: T) -> Vec<MpptRow<T>> {
    winds
        .par_iter()
        .map(|&v| settle_row(&mppt_scenario(base, v, step_time, start_fraction), v))
        .collect()
}
