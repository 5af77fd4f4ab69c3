//! Fixed-pitch wind turbine: aerodynamic power, tip-speed ratio and the
//! maximum-power-point speed reference.
//!
//! The shaft power is `P = 0.5 ρ A V³ C_p(λ)` with `λ = R ω / V`. Holding
//! `λ = λ_opt` gives the cubic law `P_opt = 0.5 ρ A ω³ R³ C_p,opt / λ_opt³`
//! and the proportional speed reference `ω_ref = (λ_opt / R) V`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Betz limit on the power coefficient.
pub const BETZ_LIMIT: f64 = 16.0 / 27.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurbineParams<T> {
    /// Air density, kg/m³.
    pub rho: T,
    /// Blade radius, m.
    pub blade_radius: T,
    /// Swept area, m².
    pub swept_area: T,
    pub lambda_opt: T,
    pub cp_opt: T,
    /// Speed-to-wind gain `λ_opt / R`, (rad/s)/(m/s).
    pub k_omega: T,
}

impl<T: Scalar> TurbineParams<T> {
    /// Builds the record from the blade radius, deriving the swept area and `k_omega`.
    pub fn from_radius(rho: T, blade_radius: T, lambda_opt: T, cp_opt: T) -> Result<Self> {
        let p = Self {
            rho,
            blade_radius,
            swept_area: T::PI() * blade_radius * blade_radius,
            lambda_opt,
            cp_opt,
            k_omega: lambda_opt / blade_radius,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("blade_radius", self.blade_radius),
            ("swept_area", self.swept_area),
            ("lambda_opt", self.lambda_opt),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("turbine.{name} must be > 0, got {v}")));
            }
        }
        if !(self.cp_opt > T::zero() && self.cp_opt < T::lit(BETZ_LIMIT)) {
            return Err(Error::InvalidParams(format!(
                "turbine.cp_opt must lie in (0, {BETZ_LIMIT:.4}), got {}",
                self.cp_opt
            )));
        }
        let k = self.lambda_opt / self.blade_radius;
        if (self.k_omega - k).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) * k {
            return Err(Error::InvalidParams(format!(
                "turbine.k_omega must equal lambda_opt / blade_radius = {k}, got {}",
                self.k_omega
            )));
        }
        Ok(())
    }

    /// `0.5 ρ A`, the common prefactor of every power expression.
    fn half_rho_area(&self) -> T {
        T::lit(0.5) * self.rho * self.swept_area
    }
}

impl<T: Scalar> Default for TurbineParams<T> {
    /// Desk-scale defaults: ρ = 1.225 kg/m³, R = 1.5 m, λ_opt = 7, C_p,opt = 0.45.
    fn default() -> Self {
        Self::from_radius(T::lit(1.225), T::lit(1.5), T::lit(7.0), T::lit(0.45))
            .expect("default turbine parameters are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpKind {
    /// `C_p = C_p,opt (2u - u²)` with `u = λ / λ_opt`, floored at zero.
    AnalyticParabolic,
    /// Piecewise-linear through `table`, zero outside it.
    Tabulated,
}

/// Power coefficient as a function of tip-speed ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct CpCurve<T> {
    pub kind: CpKind,
    pub lambda_opt: T,
    pub cp_opt: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[T; 2]>>,
}

impl<T: Scalar> CpCurve<T> {
    pub fn parabolic(lambda_opt: T, cp_opt: T) -> Self {
        Self { kind: CpKind::AnalyticParabolic, lambda_opt, cp_opt, table: None }
    }

    /// Parabolic curve peaking at the turbine's own `(λ_opt, C_p,opt)`.
    pub fn for_turbine(params: &TurbineParams<T>) -> Self {
        Self::parabolic(params.lambda_opt, params.cp_opt)
    }

    /// Tabulated curve. The peak knot becomes `(lambda_opt, cp_opt)`.
    pub fn tabulated(table: Vec<[T; 2]>) -> Result<Self> {
        let peak = table
            .iter()
            .copied()
            .fold(None::<[T; 2]>, |best, p| match best {
                Some(b) if b[1] >= p[1] => Some(b),
                _ => Some(p),
            })
            .ok_or_else(|| Error::InvalidParams("cp table is empty".into()))?;
        let curve = Self { kind: CpKind::Tabulated, lambda_opt: peak[0], cp_opt: peak[1], table: Some(table) };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_opt > T::zero()) {
            return Err(Error::InvalidParams("cp_curve.lambda_opt must be > 0".into()));
        }
        if !(self.cp_opt > T::zero() && self.cp_opt < T::lit(BETZ_LIMIT)) {
            return Err(Error::InvalidParams("cp_curve.cp_opt must lie in (0, Betz limit)".into()));
        }
        match self.kind {
            CpKind::AnalyticParabolic => Ok(()),
            CpKind::Tabulated => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParams("tabulated cp_curve needs a table".into()))?;
                if table.len() < 3 {
                    return Err(Error::InvalidParams("cp table needs at least 3 knots".into()));
                }
                if table[0] != [T::zero(), T::zero()] {
                    return Err(Error::InvalidParams("cp table must start at (0, 0)".into()));
                }
                if table[table.len() - 1][1] != T::zero() {
                    return Err(Error::InvalidParams("cp table must end with C_p = 0".into()));
                }
                let mut max_gap = T::zero();
                for w in table.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return Err(Error::InvalidParams("cp table λ values must be strictly increasing".into()));
                    }
                    max_gap = max_gap.max(w[1][0] - w[0][0]);
                }
                if table.iter().any(|p| p[1] < T::zero() || p[1] >= T::lit(BETZ_LIMIT)) {
                    return Err(Error::InvalidParams("cp table values must lie in [0, Betz limit)".into()));
                }
                let peak = table.iter().fold(table[0], |b, p| if p[1] > b[1] { *p } else { b });
                if (peak[0] - self.lambda_opt).abs() > max_gap || (peak[1] - self.cp_opt).abs() > T::zero_tol() {
                    return Err(Error::InvalidParams(format!(
                        "cp table peak ({}, {}) disagrees with lambda_opt/cp_opt ({}, {})",
                        peak[0], peak[1], self.lambda_opt, self.cp_opt
                    )));
                }
                Ok(())
            }
        }
    }

    /// Ratio `C_p(λ) / λ`, continuous at `λ = 0`. Drives the shaft torque.
    pub fn torque_coefficient(&self, lambda: T) -> Result<T> {
        if lambda > T::lit(1e-6) {
            return Ok(cp_eval(self, lambda)? / lambda);
        }
        if lambda < T::zero() {
            return Err(Error::domain("lambda", lambda.as_f64()));
        }
        Ok(match self.kind {
            CpKind::AnalyticParabolic => {
                let u = lambda / self.lambda_opt;
                self.cp_opt * (T::lit(2.0) - u) / self.lambda_opt
            }
            CpKind::Tabulated => {
                let t = self.table.as_ref().expect("validated");
                t[1][1] / t[1][0]
            }
        })
    }
}

/// `λ = R ω / V`.
pub fn tip_speed_ratio<T: Scalar>(omega_w: T, v_w: T, params: &TurbineParams<T>) -> Result<T> {
    if !(v_w > T::zero()) {
        return Err(Error::domain("wind speed", v_w.as_f64()));
    }
    if omega_w < T::zero() {
        return Err(Error::domain("shaft speed", omega_w.as_f64()));
    }
    Ok(params.blade_radius * omega_w / v_w)
}

pub fn cp_eval<T: Scalar>(curve: &CpCurve<T>, lambda: T) -> Result<T> {
    if lambda < T::zero() || lambda.is_nan() {
        return Err(Error::domain("lambda", lambda.as_f64()));
    }
    match curve.kind {
        CpKind::AnalyticParabolic => {
            let u = lambda / curve.lambda_opt;
            Ok((curve.cp_opt * (T::lit(2.0) * u - u * u)).max(T::zero()))
        }
        CpKind::Tabulated => {
            let table = curve
                .table
                .as_deref()
                .ok_or_else(|| Error::InvalidParams("tabulated cp_curve needs a table".into()))?;
            Ok(interpolate(table, lambda))
        }
    }
}

fn interpolate<T: Scalar>(table: &[[T; 2]], x: T) -> T {
    let (first, last) = (table[0], table[table.len() - 1]);
    if x < first[0] || x > last[0] {
        return T::zero();
    }
    // Index of the first knot strictly greater than x.
    let hi = table.partition_point(|p| p[0] <= x);
    if hi == 0 {
        return first[1];
    }
    if hi == table.len() {
        return last[1];
    }
    let (a, b) = (table[hi - 1], table[hi]);
    if x == a[0] {
        return a[1];
    }
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}

/// Mechanical shaft power `0.5 ρ A V³ C_p(λ)`, W.
pub fn wind_power<T: Scalar>(v_w: T, omega_w: T, params: &TurbineParams<T>, curve: &CpCurve<T>) -> Result<T> {
    let lambda = tip_speed_ratio(omega_w, v_w, params)?;
    Ok(params.half_rho_area() * v_w.powi(3) * cp_eval(curve, lambda)?)
}

/// Aerodynamic shaft torque `P / ω`, finite at standstill.
pub fn shaft_torque<T: Scalar>(v_w: T, omega_w: T, params: &TurbineParams<T>, curve: &CpCurve<T>) -> Result<T> {
    let lambda = tip_speed_ratio(omega_w, v_w, params)?;
    Ok(params.half_rho_area() * v_w * v_w * params.blade_radius * curve.torque_coefficient(lambda)?)
}

/// Power extracted along the optimal-λ locus: `0.5 ρ A ω³ R³ C_p,opt / λ_opt³`.
pub fn opt_power<T: Scalar>(omega_w: T, params: &TurbineParams<T>) -> T {
    params.half_rho_area() * (omega_w * params.blade_radius / params.lambda_opt).powi(3) * params.cp_opt
}

/// MPPT speed reference `k_omega · V`.
pub fn speed_ref<T: Scalar>(v_w: T, params: &TurbineParams<T>) -> T {
    params.k_omega * v_w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> TurbineParams<f64> {
        TurbineParams::default()
    }

    #[test]
    fn default_params_satisfy_invariants() {
        let p = params();
        assert_relative_eq!(p.swept_area, std::f64::consts::PI * 2.25, max_relative = 1e-15);
        assert_relative_eq!(p.k_omega, 7.0 / 1.5, max_relative = 1e-15);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn tip_speed_ratio_examples() {
        let p = params();
        assert_relative_eq!(tip_speed_ratio(46.667, 10.0, &p).unwrap(), 7.0, epsilon = 1e-4);
        assert_eq!(tip_speed_ratio(0.0, 10.0, &p).unwrap(), 0.0);
        let unit = TurbineParams::from_radius(1.225, 1.0, 7.0, 0.45).unwrap();
        assert_eq!(tip_speed_ratio(7.0, 1.0, &unit).unwrap(), 7.0);
    }

    #[test]
    fn tip_speed_ratio_rejects_calm_air() {
        assert!(matches!(tip_speed_ratio(10.0, 0.0, &params()), Err(Error::Domain { .. })));
        assert!(tip_speed_ratio(10.0, -2.0, &params()).is_err());
    }

    #[test]
    fn parabolic_curve_examples() {
        let c = CpCurve::parabolic(7.0, 0.45);
        assert_eq!(cp_eval(&c, 7.0).unwrap(), 0.45);
        assert_eq!(cp_eval(&c, 0.0).unwrap(), 0.0);
        assert_relative_eq!(cp_eval(&c, 3.5).unwrap(), 0.3375, max_relative = 1e-15);
        // floored beyond the second root
        assert_eq!(cp_eval(&c, 20.0).unwrap(), 0.0);
        assert!(cp_eval(&c, -0.1).is_err());
    }

    #[test]
    fn tabulated_curve_hits_knots_and_clamps() {
        let c = CpCurve::tabulated(vec![[0.0, 0.0], [4.0, 0.3], [7.0, 0.45], [10.0, 0.2], [14.0, 0.0]]).unwrap();
        assert_eq!(c.lambda_opt, 7.0);
        assert_eq!(cp_eval(&c, 4.0).unwrap(), 0.3);
        assert_eq!(cp_eval(&c, 10.0).unwrap(), 0.2);
        assert_relative_eq!(cp_eval(&c, 5.5).unwrap(), 0.375, max_relative = 1e-15);
        assert_eq!(cp_eval(&c, 15.0).unwrap(), 0.0);
        assert_relative_eq!(c.torque_coefficient(0.0).unwrap(), 0.3 / 4.0);
    }

    #[test]
    fn tabulated_curve_rejects_bad_tables() {
        assert!(CpCurve::tabulated(vec![[0.0, 0.0], [4.0, 0.3], [3.0, 0.1], [9.0, 0.0]]).is_err());
        assert!(CpCurve::tabulated(vec![[0.5, 0.0], [4.0, 0.3], [9.0, 0.0]]).is_err());
        assert!(CpCurve::tabulated(vec![[0.0, 0.0], [4.0, 0.7], [9.0, 0.0]]).is_err());
    }

    #[test]
    fn wind_power_examples() {
        let p = params();
        let c = CpCurve::for_turbine(&p);
        // 0.5 * 1.225 * (π 1.5²) * 10³ * C_p(7.00005)
        let expected = 0.5 * 1.225 * std::f64::consts::PI * 2.25 * 1000.0 * 0.45 * (1.0 - ((46.667f64 * 1.5 / 10.0 - 7.0) / 7.0).powi(2));
        let got = wind_power(10.0, 46.667, &p, &c).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-9);
        assert_relative_eq!(got, 1948.3, epsilon = 0.05);
        assert_eq!(wind_power(10.0, 0.0, &p, &c).unwrap(), 0.0);
        assert_relative_eq!(wind_power(5.0, 23.333, &p, &c).unwrap(), 243.5, epsilon = 0.05);
    }

    #[test]
    fn opt_power_examples() {
        let p = params();
        assert_relative_eq!(opt_power(46.667, &p), 1948.3, epsilon = 0.1);
        assert_eq!(opt_power(0.0, &p), 0.0);
        assert_relative_eq!(opt_power(93.333, &p), 15586.0, epsilon = 1.0);
        assert_relative_eq!(opt_power(93.333, &p), 8.0 * opt_power(46.6665, &p), max_relative = 1e-12);
    }

    #[test]
    fn speed_ref_examples() {
        let p = params();
        assert_relative_eq!(speed_ref(10.0, &p), 46.6667, epsilon = 1e-4);
        assert_eq!(speed_ref(0.0, &p), 0.0);
        assert_relative_eq!(speed_ref(11.357, &p), 53.0, epsilon = 0.001);
    }

    #[test]
    fn torque_is_continuous_at_standstill() {
        let p = params();
        let c = CpCurve::for_turbine(&p);
        let t0 = shaft_torque(8.0, 0.0, &p, &c).unwrap();
        let t1 = shaft_torque(8.0, 1e-3, &p, &c).unwrap();
        assert_relative_eq!(t0, t1, max_relative = 1e-4);
        let w = 30.0;
        assert_relative_eq!(
            shaft_torque(8.0, w, &p, &c).unwrap() * w,
            wind_power(8.0, w, &p, &c).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn works_in_single_precision() {
        let p = TurbineParams::<f32>::default();
        let c = CpCurve::for_turbine(&p);
        let got = wind_power(10.0f32, 46.667, &p, &c).unwrap();
        assert!((got - 1948.3).abs() < 0.5);
    }
}
