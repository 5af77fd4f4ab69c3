//! Symmetric Z-source impedance network: averaged model, steady state,
//! closed-form small-signal transfer functions and numerical linearization.
//!
//! States are the common inductor current `i_l` and capacitor voltage `v_c`.
//! Over a switching period the network spends `d_s` in shoot-through (inductor
//! across capacitor, input diode blocking) and `d_a = 1 - d_s` with the source
//! feeding the network through `r_source` while the bridge draws `i_dc`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tf::RationalTF;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZNetworkParams<T> {
    /// Per-inductor inductance, H.
    pub l_z: T,
    /// Per-capacitor capacitance, F.
    pub c_z: T,
    /// Inductor series resistance, Ω.
    pub r_ind: T,
    /// Source-side series resistance, Ω.
    pub r_source: T,
}

impl<T: Scalar> Default for ZNetworkParams<T> {
    fn default() -> Self {
        Self { l_z: T::lit(1e-3), c_z: T::lit(1e-3), r_ind: T::lit(0.2), r_source: T::lit(0.2) }
    }
}

impl<T: Scalar> ZNetworkParams<T> {
    pub fn lossless(l_z: T, c_z: T) -> Self {
        Self { l_z, c_z, r_ind: T::zero(), r_source: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_z > T::zero()) || !(self.c_z > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "znetwork.l_z and znetwork.c_z must be > 0, got {} and {}",
                self.l_z, self.c_z
            )));
        }
        if !(self.r_ind >= T::zero()) || !(self.r_source >= T::zero()) {
            return Err(Error::InvalidParams("znetwork resistances must be >= 0".into()));
        }
        Ok(())
    }

    /// Small-signal series damping `2 d_a r_source + r_ind` seen by the
    /// inductor current at duty `d_s`.
    pub fn series_damping(&self, d_s: T) -> T {
        T::lit(2.0) * (T::one() - d_s) * self.r_source + self.r_ind
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZNetworkState<T> {
    pub i_l: T,
    pub v_c: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZDerivatives<T> {
    pub dil_dt: T,
    pub dvc_dt: T,
    /// Averaged current drawn from the DC link through the input diode.
    pub i_source: T,
}

fn check_duty<T: Scalar>(d_s: T) -> Result<()> {
    if d_s < T::zero() || d_s.is_nan() {
        return Err(Error::domain("shoot-through duty", d_s.as_f64()));
    }
    if !(T::one() - T::lit(2.0) * d_s > T::zero()) {
        return Err(Error::Singularity { d_s: d_s.as_f64() });
    }
    Ok(())
}

/// Voltage at the network input terminals after the source resistance.
pub fn input_voltage<T: Scalar>(state: &ZNetworkState<T>, v_dc: T, i_dc: T, params: &ZNetworkParams<T>) -> T {
    v_dc - params.r_source * (T::lit(2.0) * state.i_l - i_dc)
}

/// Averaged network equations.
pub fn averaged_derivatives<T: Scalar>(
    state: &ZNetworkState<T>,
    d_s: T,
    v_dc: T,
    i_dc: T,
    params: &ZNetworkParams<T>,
) -> Result<ZDerivatives<T>> {
    check_duty(d_s)?;
    Ok(derivatives_unchecked(state, d_s, v_dc, i_dc, params))
}

#[inline]
pub(crate) fn derivatives_unchecked<T: Scalar>(
    state: &ZNetworkState<T>,
    d_s: T,
    v_dc: T,
    i_dc: T,
    params: &ZNetworkParams<T>,
) -> ZDerivatives<T> {
    let d_a = T::one() - d_s;
    let v_in = input_voltage(state, v_dc, i_dc, params);
    let dil_dt = (d_s * state.v_c + d_a * (v_in - state.v_c) - params.r_ind * state.i_l) / params.l_z;
    let dvc_dt = ((d_a - d_s) * state.i_l - d_a * i_dc) / params.c_z;
    ZDerivatives { dil_dt, dvc_dt, i_source: d_a * (T::lit(2.0) * state.i_l - i_dc) }
}

/// Steady-state (DC) operating point of the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    pub v_c: T,
    pub i_l: T,
    pub v_dc: T,
    pub i_dc: T,
    pub d_s: T,
    pub d_a: T,
    /// Sensitivity of the inductor equation to `d_s`: `2V_C - V_DC + R(2I_L - I_DC)`.
    pub v_i1: T,
    /// Sensitivity of the capacitor equation to `d_s` (negated): `2I_L - I_DC`.
    pub i_i1: T,
}

impl<T: Scalar> OperatingPoint<T> {
    /// Builds the record for a given state and inputs; it need not be stationary.
    pub fn from_state(state: &ZNetworkState<T>, d_s: T, v_dc: T, i_dc: T, params: &ZNetworkParams<T>) -> Self {
        let i_i1 = T::lit(2.0) * state.i_l - i_dc;
        Self {
            v_c: state.v_c,
            i_l: state.i_l,
            v_dc,
            i_dc,
            d_s,
            d_a: T::one() - d_s,
            v_i1: T::lit(2.0) * state.v_c - v_dc + params.r_source * i_i1,
            i_i1,
        }
    }

    pub fn state(&self) -> ZNetworkState<T> {
        ZNetworkState { i_l: self.i_l, v_c: self.v_c }
    }

    /// `D_A - D_S`.
    pub fn delta(&self) -> T {
        self.d_a - self.d_s
    }

    /// Equation residuals `(L di/dt, C dv/dt)` in volts and amperes.
    pub fn residual(&self, params: &ZNetworkParams<T>) -> (T, T) {
        let d = derivatives_unchecked(&self.state(), self.d_s, self.v_dc, self.i_dc, params);
        (d.dil_dt * params.l_z, d.dvc_dt * params.c_z)
    }

    /// True when both residuals vanish to within round-off of the operating
    /// point's own magnitude.
    pub fn is_stationary(&self, params: &ZNetworkParams<T>) -> bool {
        let (a, b) = self.residual(params);
        let scale = T::one() + self.v_c.abs() + self.v_dc.abs() + self.i_l.abs() + self.i_dc.abs();
        a.abs().max(b.abs()) <= T::zero_tol() * scale
    }
}

/// Unique stationary point of the averaged model for fixed inputs.
pub fn steady_state<T: Scalar>(d_s: T, v_dc: T, i_dc: T, params: &ZNetworkParams<T>) -> Result<OperatingPoint<T>> {
    check_duty(d_s)?;
    let d_a = T::one() - d_s;
    let k = T::one() - T::lit(2.0) * d_s;
    let i_l = d_a * i_dc / k;
    let v_in = v_dc - params.r_source * (T::lit(2.0) * i_l - i_dc);
    let v_c = (d_a * v_in - params.r_ind * i_l) / k;
    Ok(OperatingPoint::from_state(&ZNetworkState { i_l, v_c }, d_s, v_dc, i_dc, params))
}

/// Lossless boost ratio `V_C / V_DC = (1 - D_S) / (1 - 2 D_S)`.
pub fn boost_ratio<T: Scalar>(d_s: T) -> T {
    (T::one() - d_s) / (T::one() - T::lit(2.0) * d_s)
}

/// `L C s² + ρ C s + (D_A - D_S)²`, ascending.
fn characteristic<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>) -> Vec<T> {
    let delta = op.delta();
    vec![delta * delta, params.series_damping(op.d_s) * params.c_z, params.l_z * params.c_z]
}

/// Control-to-capacitor-voltage transfer function `ṽ_c / d̃_s`.
pub fn tf_vc_ds<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>) -> RationalTF<T> {
    let rho = params.series_damping(op.d_s);
    let num = vec![op.v_i1 * op.delta() - op.i_i1 * rho, -params.l_z * op.i_i1];
    RationalTF::new(num, characteristic(op, params)).expect("positive L C keeps the denominator nonzero")
}

/// Finite zero of [`tf_vc_ds`], present when the network carries load.
pub fn vc_ds_zero<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>) -> Option<T> {
    if op.i_i1 == T::zero() {
        return None;
    }
    let rho = params.series_damping(op.d_s);
    Some((op.v_i1 * op.delta() - op.i_i1 * rho) / (params.l_z * op.i_i1))
}

/// Control-to-inductor-current transfer function `ĩ_L / d̃_s`.
pub fn tf_il_ds<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>) -> RationalTF<T> {
    let num = vec![op.i_i1 * op.delta(), op.v_i1 * params.c_z];
    RationalTF::new(num, characteristic(op, params)).expect("positive L C keeps the denominator nonzero")
}

/// Capacitor voltage response to the inductor-current reference with the
/// proportional inner loop `d̃_s = K_Lp (ĩ_L* - ĩ_L)` closed.
pub fn tf_vc_ilref<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>, k_lp: T) -> Result<RationalTF<T>> {
    if !(k_lp > T::zero()) {
        return Err(Error::domain("k_lp", k_lp.as_f64()));
    }
    let gv = tf_vc_ds(op, params);
    let gi = tf_il_ds(op, params);
    let num: Vec<T> = gv.num().iter().map(|&c| c * k_lp).collect();
    let ni = gi.num();
    let mut den = gv.den().to_vec();
    for (k, &c) in ni.iter().enumerate() {
        den[k] = den[k] + k_lp * c;
    }
    RationalTF::new(num, den)
}

/// State-space model `ẋ = A x + B d̃_s`, `x = (ĩ_L, ṽ_c)`, both states measured.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization<T> {
    pub a: [[T; 2]; 2],
    pub b: [T; 2],
    pub c: [[T; 2]; 2],
    pub d: [T; 2],
    pub vc_ds: RationalTF<T>,
    pub il_ds: RationalTF<T>,
}

/// Output `row` of `C (sI - A)⁻¹ B` for a 2-state system.
fn ss2tf<T: Scalar>(a: &[[T; 2]; 2], b: &[T; 2], row: usize) -> RationalTF<T> {
    let den = vec![a[0][0] * a[1][1] - a[0][1] * a[1][0], -(a[0][0] + a[1][1]), T::one()];
    let num = if row == 0 {
        vec![-a[1][1] * b[0] + a[0][1] * b[1], b[0]]
    } else {
        vec![a[1][0] * b[0] - a[0][0] * b[1], b[1]]
    };
    RationalTF::new(num, den).expect("monic denominator")
}

/// Central-difference Jacobians of [`averaged_derivatives`] at a stationary point.
pub fn linearize<T: Scalar>(op: &OperatingPoint<T>, params: &ZNetworkParams<T>) -> Result<Linearization<T>> {
    check_duty(op.d_s)?;
    if !op.is_stationary(params) {
        let (a, b) = op.residual(params);
        return Err(Error::NotStationary { residual: a.abs().max(b.abs()).as_f64() });
    }
    let f = |x: [T; 2], d: T| {
        let z = derivatives_unchecked(&ZNetworkState { i_l: x[0], v_c: x[1] }, d, op.v_dc, op.i_dc, params);
        [z.dil_dt, z.dvc_dt]
    };
    let x0 = [op.i_l, op.v_c];
    let rel = T::fd_step();
    let two = T::lit(2.0);
    let mut a = [[T::zero(); 2]; 2];
    for j in 0..2 {
        let h = rel * (T::one() + x0[j].abs());
        let (mut xp, mut xm) = (x0, x0);
        xp[j] = xp[j] + h;
        xm[j] = xm[j] - h;
        let (fp, fm) = (f(xp, op.d_s), f(xm, op.d_s));
        for i in 0..2 {
            a[i][j] = (fp[i] - fm[i]) / (two * h);
        }
    }
    let h = rel * (T::one() + op.d_s.abs());
    let (fp, fm) = (f(x0, op.d_s + h), f(x0, op.d_s - h));
    let b = [(fp[0] - fm[0]) / (two * h), (fp[1] - fm[1]) / (two * h)];
    Ok(Linearization {
        a,
        b,
        c: [[T::one(), T::zero()], [T::zero(), T::one()]],
        d: [T::zero(); 2],
        vc_ds: ss2tf(&a, &b, 1),
        il_ds: ss2tf(&a, &b, 0),
    })
}

impl<T: Scalar> Linearization<T> {
    /// `ṽ_c / ĩ_L*` with the proportional inner loop closed numerically.
    pub fn inner_loop_vc(&self, k_lp: T) -> RationalTF<T> {
        let mut a = self.a;
        for (i, row) in a.iter_mut().enumerate() {
            row[0] = row[0] - k_lp * self.b[i];
        }
        let b = [k_lp * self.b[0], k_lp * self.b[1]];
        ss2tf(&a, &b, 1)
    }
}
