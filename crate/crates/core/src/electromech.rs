//! Averaged PMSG + diode bridge + DC-link capacitor, and the rigid shaft.
//!
//! The rectified machine is a Thévenin source `k_v ω` behind `r_gen` with an
//! ideal blocking diode. Electromagnetic torque is taken from air-gap power,
//! `t_e = k_v i_rect`, so nothing divides by the shaft speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineParams<T> {
    /// Rectified open-circuit EMF constant, V·s/rad.
    pub k_v: T,
    /// Lumped generator + rectifier series resistance, Ω.
    pub r_gen: T,
    /// Combined turbine and rotor inertia, kg·m².
    pub j_shaft: T,
    /// Viscous friction, N·m·s/rad.
    pub b_fric: T,
    /// DC-link capacitance, F.
    pub c_dclink: T,
}

impl<T: Scalar> Default for MachineParams<T> {
    /// `k_v = 3` puts the open-circuit EMF at 159 V for 53 rad/s; `r_gen` is
    /// sized so the loaded link sits near 140 V at that speed.
    fn default() -> Self {
        Self {
            k_v: T::lit(3.0),
            r_gen: T::lit(1.06),
            j_shaft: T::lit(0.5),
            b_fric: T::lit(0.005),
            c_dclink: T::lit(2200e-6),
        }
    }
}

impl<T: Scalar> MachineParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_v", self.k_v), ("r_gen", self.r_gen), ("j_shaft", self.j_shaft), ("c_dclink", self.c_dclink)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("machine.{name} must be > 0, got {v}")));
            }
        }
        if !(self.b_fric >= T::zero()) {
            return Err(Error::InvalidParams(format!("machine.b_fric must be >= 0, got {}", self.b_fric)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MachineState<T> {
    /// Shaft speed, rad/s (direct drive).
    pub omega: T,
    /// DC-link voltage, V.
    pub v_dc: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MachineDerivatives<T> {
    pub domega_dt: T,
    pub dvdc_dt: T,
    /// Diode-bridge output current the derivatives were computed with.
    pub i_rect: T,
}

/// Diode-bridge output current `max(0, (k_v ω - v_dc) / r_gen)`.
pub fn rectifier_current<T: Scalar>(state: &MachineState<T>, params: &MachineParams<T>) -> T {
    ((params.k_v * state.omega - state.v_dc) / params.r_gen).max(T::zero())
}

/// Shaft and DC-link node equations.
///
/// `t_wind` is the aerodynamic torque, `i_source` the averaged current drawn
/// by the Z-network input diode.
pub fn machine_derivatives<T: Scalar>(
    state: &MachineState<T>,
    t_wind: T,
    i_source: T,
    params: &MachineParams<T>,
) -> MachineDerivatives<T> {
    let i_rect = rectifier_current(state, params);
    let t_e = params.k_v * i_rect;
    MachineDerivatives {
        domega_dt: (t_wind - t_e - params.b_fric * state.omega) / params.j_shaft,
        dvdc_dt: (i_rect - i_source) / params.c_dclink,
        i_rect,
    }
}

/// Copper loss `r_gen i_rect²` inside the generator/rectifier block, W.
pub fn generator_loss<T: Scalar>(state: &MachineState<T>, params: &MachineParams<T>) -> T {
    let i = rectifier_current(state, params);
    params.r_gen * i * i
}
