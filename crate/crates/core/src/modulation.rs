//! Simple-boost PWM for the Z-source bridge.
//!
//! Shoot-through replaces part of the zero-state time only, so the active
//! volt-seconds of the space-vector pattern are unchanged and the averaged
//! inverter voltage is `m v̂ / 2` with `v̂ = 2 v_c - v_dc`.

use std::f64::consts::FRAC_PI_3;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationCommand<T> {
    pub m_alpha: T,
    pub m_beta: T,
    pub d_s: T,
    /// Carrier frequency, Hz.
    pub carrier_freq: T,
}

impl<T: Scalar> ModulationCommand<T> {
    pub fn new(m_alpha: T, m_beta: T, d_s: T) -> Self {
        Self { m_alpha, m_beta, d_s, carrier_freq: T::lit(10e3) }
    }

    pub fn m_mag(&self) -> T {
        self.m_alpha.hypot(self.m_beta)
    }

    /// Largest shoot-through duty compatible with the modulation magnitude.
    pub fn d_s_limit(&self) -> T {
        T::one() - self.m_mag()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m_mag();
        if !(m <= T::one()) {
            return Err(Error::domain("modulation magnitude", m.as_f64()));
        }
        if !(self.d_s >= T::zero()) {
            return Err(Error::domain("shoot-through duty", self.d_s.as_f64()));
        }
        if self.d_s > self.d_s_limit() {
            return Err(Error::ConstraintViolation { d_s: self.d_s.as_f64(), limit: self.d_s_limit().as_f64() });
        }
        if !(self.carrier_freq > T::zero()) {
            return Err(Error::domain("carrier frequency", self.carrier_freq.as_f64()));
        }
        Ok(())
    }
}

/// Peak bridge input voltage during non-shoot-through, `2 v_c - v_dc`.
pub fn peak_dclink<T: Scalar>(v_c: T, v_dc: T) -> T {
    T::lit(2.0) * v_c - v_dc
}

/// Cycle-averaged αβ inverter terminal voltage.
pub fn averaged_inverter_voltage<T: Scalar>(cmd: &ModulationCommand<T>, v_c: T, v_dc: T) -> Result<[T; 2]> {
    cmd.validate()?;
    let half = peak_dclink(v_c, v_dc) / T::lit(2.0);
    Ok([cmd.m_alpha * half, cmd.m_beta * half])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchState {
    Active1,
    Active2,
    Zero,
    ShootThrough,
}

impl fmt::Display for SwitchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwitchState::Active1 => "active-1",
            SwitchState::Active2 => "active-2",
            SwitchState::Zero => "zero",
            SwitchState::ShootThrough => "shoot-through",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub state: SwitchState,
    /// Fraction of the carrier period.
    pub fraction: T,
}

/// One carrier period of the simple-boost pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct CarrierPattern<T> {
    /// Space-vector sector, 1..=6.
    pub sector: usize,
    pub intervals: Vec<Interval<T>>,
}

impl<T: Scalar> CarrierPattern<T> {
    pub fn total(&self, state: SwitchState) -> T {
        self.intervals.iter().filter(|i| i.state == state).map(|i| i.fraction).sum()
    }

    /// Bridge output voltage vector applied during `state`.
    pub fn vector(&self, state: SwitchState, v_hat: T) -> [T; 2] {
        let k = match state {
            SwitchState::Active1 => self.sector - 1,
            SwitchState::Active2 => self.sector,
            SwitchState::Zero | SwitchState::ShootThrough => return [T::zero(); 2],
        };
        let ang = T::lit(FRAC_PI_3) * T::from_usize(k).unwrap();
        let r = T::lit(2.0 / 3.0) * v_hat;
        [r * ang.cos(), r * ang.sin()]
    }
}

/// `[zero, ST, A1, A2, ST, zero]`, with zero-length entries dropped.
pub fn carrier_cycle_intervals<T: Scalar>(cmd: &ModulationCommand<T>) -> Result<CarrierPattern<T>> {
    cmd.validate()?;
    let m = cmd.m_mag();
    let sixty = T::lit(FRAC_PI_3);
    let mut theta = cmd.m_beta.atan2(cmd.m_alpha);
    if theta < T::zero() {
        theta = theta + T::TAU();
    }
    let sector = ((theta / sixty).floor().to_usize().unwrap_or(0)).min(5) + 1;
    let local = theta - sixty * T::from_usize(sector - 1).unwrap();
    let k = T::lit(3.0).sqrt() / T::lit(2.0) * m;
    let t1 = k * (sixty - local).sin();
    let t2 = k * local.sin();
    let t0 = T::one() - t1 - t2 - cmd.d_s;
    let half = T::lit(0.5);
    let seq = [
        (SwitchState::Zero, t0 * half),
        (SwitchState::ShootThrough, cmd.d_s * half),
        (SwitchState::Active1, t1),
        (SwitchState::Active2, t2),
        (SwitchState::ShootThrough, cmd.d_s * half),
        (SwitchState::Zero, t0 * half),
    ];
    let intervals = seq
        .into_iter()
        .filter(|&(_, f)| f > T::zero())
        .map(|(state, fraction)| Interval { state, fraction })
        .collect();
    Ok(CarrierPattern { sector, intervals })
}

/// Distance between the pattern's average output voltage and the averaged model.
pub fn volt_second_check<T: Scalar>(cmd: &ModulationCommand<T>, v_c: T, v_dc: T) -> Result<T> {
    let pattern = carrier_cycle_intervals(cmd)?;
    let v_hat = peak_dclink(v_c, v_dc);
    let mut avg = [T::zero(); 2];
    for iv in &pattern.intervals {
        let v = pattern.vector(iv.state, v_hat);
        avg[0] = avg[0] + iv.fraction * v[0];
        avg[1] = avg[1] + iv.fraction * v[1];
    }
    let want = averaged_inverter_voltage(cmd, v_c, v_dc)?;
    Ok((avg[0] - want[0]).hypot(avg[1] - want[1]))
}
