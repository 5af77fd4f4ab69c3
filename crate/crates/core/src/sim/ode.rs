//! Classical fixed-step Runge-Kutta integration.

use crate::scalar::Scalar;

/// One RK4 step of `ẋ = f(t, x)` of size `h`.
pub fn rk4_step<T: Scalar, const N: usize>(mut f: impl FnMut(T, &[T; N]) -> [T; N], t: T, x: &[T; N], h: T) -> [T; N] {
    let half = h * T::lit(0.5);
    let axpy = |a: T, k: &[T; N]| -> [T; N] { std::array::from_fn(|i| x[i] + a * k[i]) };
    let k1 = f(t, x);
    let k2 = f(t + half, &axpy(half, &k1));
    let k3 = f(t + half, &axpy(half, &k2));
    let k4 = f(t + h, &axpy(h, &k3));
    let sixth = h / T::lit(6.0);
    std::array::from_fn(|i| x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
}
