//! Rational transfer functions in the Laplace variable.
//!
//! Coefficients are stored in ascending powers of `s`, so `num[k]` multiplies
//! `s^k`. Both lists are trimmed of trailing (highest-power) zeros.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalTF<T> {
    num: Vec<T>,
    den: Vec<T>,
}

fn trim<T: Scalar>(mut c: Vec<T>) -> Vec<T> {
    while c.len() > 1 && c[c.len() - 1] == T::zero() {
        c.pop();
    }
    if c.is_empty() {
        c.push(T::zero());
    }
    c
}

/// Evaluates a polynomial (ascending coefficients) by Horner's rule.
pub fn poly_eval<T: Scalar>(coeffs: &[T], s: Complex<T>) -> Complex<T> {
    coeffs.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * s + Complex::new(c, T::zero()))
}

pub fn poly_mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

pub fn poly_add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_else(T::zero) + b.get(k).copied().unwrap_or_else(T::zero))
        .collect()
}

/// Roots of a real polynomial given in ascending coefficients.
///
/// Degrees one and two use closed forms; higher degrees use Durand-Kerner
/// iteration, which is adequate for the low-order loops analysed here.
pub fn poly_roots<T: Scalar>(coeffs: &[T]) -> Vec<Complex<T>> {
    let c = trim(coeffs.to_vec());
    let deg = c.len() - 1;
    let zero = T::zero();
    match deg {
        0 => vec![],
        1 => vec![Complex::new(-c[0] / c[1], zero)],
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - T::lit(4.0) * a * cc;
            if disc >= zero {
                // cancellation-free form
                let q = -T::lit(0.5) * (b + b.signum() * disc.sqrt());
                if q == zero {
                    return vec![Complex::new(zero, zero); 2];
                }
                let mut r = [q / a, cc / q];
                r.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
                r.iter().map(|&x| Complex::new(x, zero)).collect()
            } else {
                let re = -b / (T::lit(2.0) * a);
                let im = (-disc).sqrt() / (T::lit(2.0) * a);
                vec![Complex::new(re, -im.abs()), Complex::new(re, im.abs())]
            }
        }
        _ => durand_kerner(&c),
    }
}

fn durand_kerner<T: Scalar>(c: &[T]) -> Vec<Complex<T>> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<T> = c.iter().map(|&x| x / lead).collect();
    let radius = T::one() + monic[..n].iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let seed = Complex::new(T::lit(0.4), T::lit(0.9));
    let mut z: Vec<Complex<T>> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut delta = T::zero();
        for i in 0..n {
            let p = poly_eval(&monic, z[i]);
            let denom = (0..n).filter(|&j| j != i).fold(Complex::new(T::one(), T::zero()), |acc, j| acc * (z[i] - z[j]));
            if denom.norm() == T::zero() {
                continue;
            }
            let step = p / denom;
            z[i] = z[i] - step;
            delta = delta.max(step.norm());
        }
        if delta < T::epsilon() * radius * T::lit(8.0) {
            break;
        }
    }
    z
}

impl<T: Scalar> RationalTF<T> {
    /// Builds `num / den` from ascending coefficient lists.
    pub fn new(num: Vec<T>, den: Vec<T>) -> Result<Self> {
        let num = trim(num);
        let den = trim(den);
        if den.iter().all(|&d| d == T::zero()) {
            return Err(Error::InvalidParams("transfer function denominator is identically zero".into()));
        }
        if num.iter().chain(den.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("transfer function coefficients must be finite".into()));
        }
        Ok(Self { num, den })
    }

    pub fn constant(k: T) -> Self {
        Self { num: vec![k], den: vec![T::one()] }
    }

    pub fn num(&self) -> &[T] {
        &self.num
    }

    pub fn den(&self) -> &[T] {
        &self.den
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Value at `s = 0`; infinite when the denominator has a root there.
    pub fn dc_gain(&self) -> T {
        if self.den[0] == T::zero() {
            if self.num[0] == T::zero() {
                T::nan()
            } else {
                T::infinity() * self.num[0].signum()
            }
        } else {
            self.num[0] / self.den[0]
        }
    }

    pub fn zeros(&self) -> Vec<Complex<T>> {
        poly_roots(&self.num)
    }

    pub fn poles(&self) -> Vec<Complex<T>> {
        poly_roots(&self.den)
    }

    /// Same transfer function with a monic denominator.
    pub fn normalized(&self) -> Self {
        let lead = self.den[self.den.len() - 1];
        Self {
            num: self.num.iter().map(|&x| x / lead).collect(),
            den: self.den.iter().map(|&x| x / lead).collect(),
        }
    }

    pub fn series(&self, other: &Self) -> Self {
        Self { num: trim(poly_mul(&self.num, &other.num)), den: trim(poly_mul(&self.den, &other.den)) }
    }

    /// Unity negative feedback around `self`: `G / (1 + G)`.
    pub fn feedback_unity(&self) -> Self {
        Self { num: self.num.clone(), den: trim(poly_add(&self.den, &self.num)) }
    }

    pub fn is_proper(&self) -> bool {
        self.num.len() <= self.den.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodePoint<T> {
    pub omega: T,
    pub mag_db: T,
    pub phase_deg: T,
}

/// Evaluates `tf` at `s = jω` on a strictly positive ascending grid.
///
/// A pole on the imaginary axis yields `+∞` dB and an undefined (NaN) phase
/// rather than an error.
pub fn freq_response<T: Scalar>(tf: &RationalTF<T>, omega_grid: &[T]) -> Result<Vec<BodePoint<T>>> {
    if omega_grid.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::domain("frequency grid point", f64::NAN));
    }
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("frequency grid must be strictly ascending".into()));
    }
    Ok(omega_grid
        .iter()
        .map(|&omega| {
            let s = Complex::new(T::zero(), omega);
            let d = poly_eval(&tf.den, s);
            if d.norm() == T::zero() {
                return BodePoint { omega, mag_db: T::infinity(), phase_deg: T::nan() };
            }
            let h = poly_eval(&tf.num, s) / d;
            BodePoint { omega, mag_db: T::lit(20.0) * h.norm().log10(), phase_deg: h.arg().to_degrees() }
        })
        .collect())
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (a, b) = (lo.log10(), hi.log10());
    if n < 2 {
        return vec![lo];
    }
    let step = (b - a) / T::from_usize(n - 1).unwrap();
    (0..n).map(|k| T::lit(10.0).powf(a + step * T::from_usize(k).unwrap())).collect()
}

/// Wraps a phase difference into (-180°, 180°].
pub fn wrap_degrees<T: Scalar>(d: T) -> T {
    let full = T::lit(360.0);
    let mut x = d % full;
    if x > T::lit(180.0) {
        x = x - full;
    } else if x <= T::lit(-180.0) {
        x = x + full;
    }
    x
}

/// Largest magnitude (dB) and phase (deg) disagreement between two transfer
/// functions over a grid.
pub fn max_discrepancy<T: Scalar>(a: &RationalTF<T>, b: &RationalTF<T>, omega_grid: &[T]) -> Result<(T, T)> {
    let ra = freq_response(a, omega_grid)?;
    let rb = freq_response(b, omega_grid)?;
    Ok(ra.iter().zip(&rb).fold((T::zero(), T::zero()), |(dm, dp), (x, y)| {
        (dm.max((x.mag_db - y.mag_db).abs()), dp.max(wrap_degrees(x.phase_deg - y.phase_deg).abs()))
    }))
}

/// Closed-loop bandwidth: the first frequency at which `|T(jω)|` falls
/// 3 dB below its low-frequency value, searched on `[lo, hi]`.
pub fn bandwidth<T: Scalar>(tf: &RationalTF<T>, lo: T, hi: T) -> Option<T> {
    let mag = |w: T| tf.eval(Complex::new(T::zero(), w)).norm();
    let reference = mag(lo);
    let threshold = reference / T::lit(2.0).sqrt();
    let grid = log_grid(lo, hi, 2000);
    let idx = grid.iter().position(|&w| mag(w) < threshold)?;
    if idx == 0 {
        return Some(lo);
    }
    let (mut a, mut b) = (grid[idx - 1].ln(), grid[idx].ln());
    for _ in 0..60 {
        let m = T::lit(0.5) * (a + b);
        if mag(m.exp()) < threshold {
            b = m;
        } else {
            a = m;
        }
    }
    Some((T::lit(0.5) * (a + b)).exp())
}

/// Unit-step response of a proper transfer function, sampled every `dt`
/// up to `t_end`, using a controllable canonical realization and RK4.
pub fn step_response<T: Scalar>(tf: &RationalTF<T>, t_end: T, dt: T) -> Result<Vec<(T, T)>> {
    if !tf.is_proper() {
        return Err(Error::InvalidParams("step response needs a proper transfer function".into()));
    }
    let tf = tf.normalized();
    let n = tf.den.len() - 1;
    let mut b = tf.num.clone();
    b.resize(n + 1, T::zero());
    let d = b[n];
    // strictly proper remainder: b_k - d a_k
    let c: Vec<T> = (0..n).map(|k| b[k] - d * tf.den[k]).collect();
    let a = &tf.den;
    let f = |x: &[T]| -> Vec<T> {
        let mut dx = vec![T::zero(); n];
        if n > 0 {
            dx[..n - 1].copy_from_slice(&x[1..n]);
            dx[n - 1] = T::one() - (0..n).map(|k| a[k] * x[k]).sum::<T>();
        }
        dx
    };
    let output = |x: &[T]| (0..n).map(|k| c[k] * x[k]).sum::<T>() + d;
    let steps = (t_end / dt).round().to_usize().unwrap_or(0);
    let mut x = vec![T::zero(); n];
    let mut out = Vec::with_capacity(steps + 1);
    out.push((T::zero(), output(&x)));
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for k in 1..=steps {
        let k1 = f(&x);
        let x2: Vec<T> = x.iter().zip(&k1).map(|(&xi, &ki)| xi + half * dt * ki).collect();
        let k2 = f(&x2);
        let x3: Vec<T> = x.iter().zip(&k2).map(|(&xi, &ki)| xi + half * dt * ki).collect();
        let k3 = f(&x3);
        let x4: Vec<T> = x.iter().zip(&k3).map(|(&xi, &ki)| xi + dt * ki).collect();
        let k4 = f(&x4);
        for i in 0..n {
            x[i] = x[i] + dt * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        out.push((dt * T::from_usize(k).unwrap(), output(&x)));
    }
    Ok(out)
}
