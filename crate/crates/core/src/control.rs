//! Speed regulator, DC-side cascade and P+resonant AC current controller.
//!
//! All controllers run at a fixed period and are pure functions of their
//! inputs and the mutable [`ControllerState`]. Powers use the
//! amplitude-invariant Clarke convention `p = 1.5 (v_α i_α + v_β i_β)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{clamp, Scalar};
use crate::tf::{poly_add, poly_mul, RationalTF};
use crate::znetwork::{tf_vc_ilref, OperatingPoint, ZNetworkParams};

/// Below this `|v_grid|²` (V²) the grid is considered lost.
pub const GRID_LOSS_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonantForm {
    /// `2 k_i ω_c s / (s² + 2 ω_c s + ω₀²)`.
    #[default]
    Damped,
    /// `2 k_i s / (s² + ω₀²)`.
    Ideal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar"))]
pub struct ControlGains<T> {
    pub kp_speed: T,
    pub ki_speed: T,
    /// Upper limit on the power reference, W.
    pub p_max: T,
    pub kp_vc: T,
    pub ki_vc: T,
    /// Fraction of the reference seen by the proportional V_C term.
    pub vc_setpoint_weight: T,
    /// Gain on the bridge-current feedforward into the inductor-current reference.
    pub k_ff: T,
    pub k_lp: T,
    pub d_s_max: T,
    pub kp_pr: T,
    pub ki_pr: T,
    pub omega_res: T,
    pub omega_cut: T,
    pub resonant_form: ResonantForm,
}

impl<T: Scalar> Default for ControlGains<T> {
    fn default() -> Self {
        Self {
            kp_speed: T::lit(185.0),
            ki_speed: T::lit(662.0),
            p_max: T::lit(6000.0),
            kp_vc: T::lit(0.3),
            ki_vc: T::lit(5.0),
            vc_setpoint_weight: T::zero(),
            k_ff: T::one(),
            k_lp: T::lit(0.01),
            d_s_max: T::lit(0.45),
            kp_pr: T::one(),
            ki_pr: T::lit(100.0),
            omega_res: T::lit(2.0 * std::f64::consts::PI * 50.0),
            omega_cut: T::lit(5.0),
            resonant_form: ResonantForm::Damped,
        }
    }
}

impl<T: Scalar> ControlGains<T> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("kp_speed", self.kp_speed),
            ("ki_speed", self.ki_speed),
            ("kp_vc", self.kp_vc),
            ("ki_vc", self.ki_vc),
            ("k_ff", self.k_ff),
            ("kp_pr", self.kp_pr),
            ("ki_pr", self.ki_pr),
        ];
        for (name, v) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("gains.{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("p_max", self.p_max), ("k_lp", self.k_lp), ("omega_res", self.omega_res), ("omega_cut", self.omega_cut)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("gains.{name} must be > 0, got {v}")));
            }
        }
        if !(self.d_s_max >= T::zero() && self.d_s_max <= T::lit(0.45)) {
            return Err(Error::InvalidParams(format!("gains.d_s_max must lie in [0, 0.45], got {}", self.d_s_max)));
        }
        if !(self.vc_setpoint_weight >= T::zero() && self.vc_setpoint_weight <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "gains.vc_setpoint_weight must lie in [0, 1], got {}",
                self.vc_setpoint_weight
            )));
        }
        Ok(())
    }
}

/// Direct-form-II-transposed states of one resonant filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResonantState<T> {
    pub x1: T,
    pub x2: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerState<T> {
    pub int_speed: T,
    pub int_vc: T,
    pub pr_alpha: ResonantState<T>,
    pub pr_beta: ResonantState<T>,
    pub last_ds: T,
    pub last_m: [T; 2],
    /// Latest inductor-current reference, A.
    pub last_il_ref: T,
    pub grid_fault: bool,
}

/// Speed PI producing the power reference. A positive error (shaft too fast)
/// raises the exported power.
pub fn speed_regulator<T: Scalar>(omega: T, omega_ref: T, state: &mut ControllerState<T>, gains: &ControlGains<T>, dt: T) -> T {
    let e = omega - omega_ref;
    let raw = gains.kp_speed * e + gains.ki_speed * state.int_speed;
    let p = clamp(raw, T::zero(), gains.p_max);
    let winding_up = (raw > gains.p_max && e > T::zero()) || (raw < T::zero() && e < T::zero());
    if !winding_up {
        state.int_speed = state.int_speed + e * dt;
    }
    if gains.ki_speed > T::zero() {
        state.int_speed = clamp(state.int_speed, T::zero(), gains.p_max / gains.ki_speed);
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentReference<T> {
    pub i_alpha: T,
    pub i_beta: T,
    /// Set when the grid voltage vanished and the reference was forced to zero.
    pub grid_fault: bool,
}

/// Unity-power-factor current reference delivering `p_ref`.
pub fn current_reference<T: Scalar>(p_ref: T, v_grid_alpha: T, v_grid_beta: T) -> CurrentReference<T> {
    let g = v_grid_alpha * v_grid_alpha + v_grid_beta * v_grid_beta;
    if !(g > T::lit(GRID_LOSS_EPS)) {
        return CurrentReference { i_alpha: T::zero(), i_beta: T::zero(), grid_fault: true };
    }
    let k = T::lit(2.0 / 3.0) * p_ref / g;
    CurrentReference { i_alpha: k * v_grid_alpha, i_beta: k * v_grid_beta, grid_fault: false }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DcMeasurement<T> {
    pub v_c: T,
    pub v_c_ref: T,
    pub i_l: T,
    /// Bridge DC current estimate used for feedforward, A.
    pub i_dc: T,
    /// Modulation magnitude that the shoot-through must fit around.
    pub m_mag: T,
}

/// Outer PI on `V_C` producing `I_L*`, inner proportional loop producing `d_s`.
pub fn dc_cascade<T: Scalar>(meas: &DcMeasurement<T>, state: &mut ControllerState<T>, gains: &ControlGains<T>, dt: T) -> T {
    let e = meas.v_c_ref - meas.v_c;
    let d_prev = state.last_ds;
    let d_a = T::one() - d_prev;
    let i_ff = gains.k_ff * d_a * meas.i_dc / (d_a - d_prev);
    let prop = gains.kp_vc * (gains.vc_setpoint_weight * meas.v_c_ref - meas.v_c);
    let i_l_ref = prop + gains.ki_vc * state.int_vc + i_ff;
    let d_lim = gains.d_s_max.min(T::one() - meas.m_mag).max(T::zero());
    let raw = gains.k_lp * (i_l_ref - meas.i_l);
    let d_s = clamp(raw, T::zero(), d_lim);
    let winding_up = (raw > d_lim && e > T::zero()) || (raw < T::zero() && e < T::zero());
    if !winding_up {
        state.int_vc = state.int_vc + e * dt;
    }
    if gains.ki_vc > T::zero() {
        // integrator values that put the inner loop exactly on d = 0 and d = d_lim
        let base = meas.i_l - prop - i_ff;
        let lo = base / gains.ki_vc;
        let hi = (base + d_lim / gains.k_lp) / gains.ki_vc;
        state.int_vc = clamp(state.int_vc, lo, hi);
    }
    state.last_il_ref = i_l_ref;
    state.last_ds = d_s;
    d_s
}

/// Discrete resonant filter coefficients `(b0, a1, a2)`; `b1 = 0`, `b2 = -b0`.
pub fn resonant_coefficients<T: Scalar>(gains: &ControlGains<T>, dt: T) -> (T, T, T) {
    let w0 = gains.omega_res;
    let (beta, alpha) = match gains.resonant_form {
        ResonantForm::Damped => (T::lit(2.0) * gains.ki_pr * gains.omega_cut, T::lit(2.0) * gains.omega_cut),
        ResonantForm::Ideal => (T::lit(2.0) * gains.ki_pr, T::zero()),
    };
    // bilinear map prewarped at the resonance
    let c = w0 / (w0 * dt / T::lit(2.0)).tan();
    let a0 = c * c + alpha * c + w0 * w0;
    let b0 = beta * c / a0;
    let a1 = (T::lit(2.0) * w0 * w0 - T::lit(2.0) * c * c) / a0;
    let a2 = (c * c - alpha * c + w0 * w0) / a0;
    (b0, a1, a2)
}

fn resonant_step<T: Scalar>(e: T, s: &mut ResonantState<T>, (b0, a1, a2): (T, T, T)) -> T {
    let y = b0 * e + s.x1;
    s.x1 = s.x2 - a1 * y;
    s.x2 = -b0 * e - a2 * y;
    y
}

/// Proportional plus resonant controller on both stationary-frame axes.
pub fn pr_current_controller<T: Scalar>(
    i_err_alpha: T,
    i_err_beta: T,
    state: &mut ControllerState<T>,
    gains: &ControlGains<T>,
    dt: T,
) -> (T, T) {
    let coeffs = resonant_coefficients(gains, dt);
    let ya = resonant_step(i_err_alpha, &mut state.pr_alpha, coeffs);
    let yb = resonant_step(i_err_beta, &mut state.pr_beta, coeffs);
    (gains.kp_pr * i_err_alpha + ya, gains.kp_pr * i_err_beta + yb)
}

/// Continuous-time P+R controller as a transfer function.
pub fn pr_tf<T: Scalar>(gains: &ControlGains<T>) -> RationalTF<T> {
    let w2 = gains.omega_res * gains.omega_res;
    let (beta, alpha) = match gains.resonant_form {
        ResonantForm::Damped => (T::lit(2.0) * gains.ki_pr * gains.omega_cut, T::lit(2.0) * gains.omega_cut),
        ResonantForm::Ideal => (T::lit(2.0) * gains.ki_pr, T::zero()),
    };
    let den = vec![w2, alpha, T::one()];
    let num = poly_add(&poly_mul(&[gains.kp_pr], &den), &[T::zero(), beta]);
    RationalTF::new(num, den).expect("monic denominator")
}

/// L-filter grid interface: `L_f di/dt = v_inv - v_grid - r_f i` per axis.
pub fn grid_plant_derivatives<T: Scalar>(i: [T; 2], v_inv: [T; 2], v_grid: [T; 2], l_f: T, r_f: T) -> [T; 2] {
    [(v_inv[0] - v_grid[0] - r_f * i[0]) / l_f, (v_inv[1] - v_grid[1] - r_f * i[1]) / l_f]
}

/// Closed AC current loop `i / i*` for the P+R controller on the L filter.
pub fn ac_loop_tf<T: Scalar>(gains: &ControlGains<T>, l_f: T, r_f: T) -> RationalTF<T> {
    let plant = RationalTF::new(vec![T::one()], vec![r_f, l_f]).expect("l_f > 0");
    pr_tf(gains).series(&plant).feedback_unity()
}

/// Closed outer V_C loop `ṽ_c / ṽ_c*` around the closed inner current loop,
/// with the setpoint-weighted PI.
pub fn vc_loop_tf<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>, gains: &ControlGains<T>) -> Result<RationalTF<T>> {
    let inner = tf_vc_ilref(op, params, gains.k_lp)?;
    let (n, d) = (inner.num(), inner.den());
    // reference path b kp s + ki, feedback path kp s + ki, both over s
    let r_path = [gains.ki_vc, gains.vc_setpoint_weight * gains.kp_vc];
    let y_path = [gains.ki_vc, gains.kp_vc];
    let num = poly_mul(&r_path, n);
    let den = poly_add(&poly_mul(&[T::zero(), T::one()], d), &poly_mul(&y_path, n));
    RationalTF::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dt() -> f64 {
        1e-4
    }

    #[test]
    fn speed_regulator_examples() {
        let g = ControlGains { kp_speed: 100.0, ..ControlGains::default() };
        let mut s = ControllerState::default();
        assert_eq!(speed_regulator(50.0, 50.0, &mut s, &g, dt()), 0.0);
        let mut s = ControllerState::default();
        assert_relative_eq!(speed_regulator(53.0, 50.0, &mut s, &g, dt()), 300.0, max_relative = 1e-12);
    }

    #[test]
    fn speed_regulator_rises_until_limit() {
        let g = ControlGains::<f64>::default();
        let mut s = ControllerState::default();
        let mut last = 0.0;
        let mut out = 0.0;
        for _ in 0..200_000 {
            out = speed_regulator(51.0, 50.0, &mut s, &g, dt());
            assert!(out >= last);
            last = out;
        }
        assert_eq!(out, g.p_max);
        assert!(g.ki_speed * s.int_speed <= g.p_max * (1.0 + 1e-12));
    }

    #[test]
    fn current_reference_examples() {
        let r = current_reference(1500.0, 100.0, 0.0);
        assert_relative_eq!(r.i_alpha, 10.0, max_relative = 1e-12);
        assert_eq!(r.i_beta, 0.0);
        let r = current_reference(0.0, 30.0, 40.0);
        assert_eq!((r.i_alpha, r.i_beta), (0.0, 0.0));
        let r = current_reference(800.0, 30.0, -40.0);
        assert_relative_eq!(1.5 * (30.0 * r.i_alpha - 40.0 * r.i_beta), 800.0, max_relative = 1e-12);
        let r = current_reference(800.0, 0.0, 0.0);
        assert!(r.grid_fault);
        assert_eq!((r.i_alpha, r.i_beta), (0.0, 0.0));
    }

    #[test]
    fn dc_cascade_idle() {
        let g = ControlGains::<f64>::default();
        let mut s = ControllerState::default();
        let m = DcMeasurement { v_c: 0.0, v_c_ref: 0.0, i_l: 0.0, i_dc: 0.0, m_mag: 0.3 };
        assert_eq!(dc_cascade(&m, &mut s, &g, dt()), 0.0);
    }

    #[test]
    fn dc_cascade_respects_zero_state_budget() {
        let g = ControlGains::<f64>::default();
        let mut s = ControllerState::default();
        for _ in 0..1000 {
            let m = DcMeasurement { v_c: 100.0, v_c_ref: 200.0, i_l: 0.0, i_dc: 0.0, m_mag: 0.8 };
            let d = dc_cascade(&m, &mut s, &g, dt());
            assert!((0.0..=0.2 + 1e-15).contains(&d));
        }
        // integrator parked on the saturation boundary
        let base = 0.0 - g.kp_vc * (g.vc_setpoint_weight * 200.0 - 100.0);
        assert!(g.ki_vc * s.int_vc <= base + 0.2 / g.k_lp + 1e-9);
    }

    #[test]
    fn pr_zero_input_gives_zero() {
        let g = ControlGains::<f64>::default();
        let mut s = ControllerState::default();
        for _ in 0..100 {
            assert_eq!(pr_current_controller(0.0, 0.0, &mut s, &g, dt()), (0.0, 0.0));
        }
    }

    #[test]
    fn ideal_resonator_grows_at_resonance() {
        let g = ControlGains { resonant_form: ResonantForm::Ideal, kp_pr: 0.0, ..ControlGains::default() };
        let mut s = ControllerState::default();
        let w0 = g.omega_res;
        let mut peak_early: f64 = 0.0;
        let mut peak_late: f64 = 0.0;
        let n = 20_000;
        for k in 0..n {
            let e = (w0 * k as f64 * dt()).sin();
            let (u, _) = pr_current_controller(e, 0.0, &mut s, &g, dt());
            if k < 2000 {
                peak_early = peak_early.max(u.abs());
            }
            if k >= n - 2000 {
                peak_late = peak_late.max(u.abs());
            }
        }
        assert!(peak_late > 5.0 * peak_early, "{peak_early} {peak_late}");
    }

    #[test]
    fn discrete_resonator_matches_continuous_peak() {
        let g = ControlGains::<f64>::default();
        let tf = pr_tf(&g);
        let h = tf.eval(num_complex::Complex::new(0.0, g.omega_res));
        assert_relative_eq!(h.re, g.kp_pr + g.ki_pr, max_relative = 1e-12);
        assert!(h.im.abs() < 1e-9);
    }

    #[test]
    fn grid_plant_examples() {
        assert_eq!(grid_plant_derivatives([0.0, 0.0], [10.0, 5.0], [10.0, 5.0], 1e-3, 0.1), [0.0, 0.0]);
        let d = grid_plant_derivatives([0.0, 0.0], [20.0, 0.0], [10.0, 0.0], 10e-3, 0.1);
        assert_relative_eq!(d[0], 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn gains_validation() {
        assert!(ControlGains::<f64>::default().validate().is_ok());
        assert!(ControlGains { d_s_max: 0.5, ..ControlGains::<f64>::default() }.validate().is_err());
        assert!(ControlGains { kp_vc: -1.0, ..ControlGains::<f64>::default() }.validate().is_err());
        assert!(ControlGains { omega_cut: 0.0, ..ControlGains::<f64>::default() }.validate().is_err());
    }
}
