//! Averaged simulation and small-signal analysis of a variable-speed PMSG
//! wind chain feeding the grid through a Z-source inverter.
//!
//! Every model is generic over [`Scalar`] (`f32` or `f64`). The `F64` and
//! `F32` modules re-export the common records with the scalar fixed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod electromech;
pub mod error;
pub mod modulation;
pub mod scalar;
pub mod sim;
pub mod tf;
pub mod turbine;
pub mod znetwork;

pub use error::{Error, Result};
pub use scalar::Scalar;

macro_rules! aliases {
    ($modname:ident, $t:ty) => {
        pub mod $modname {
            pub type TurbineParams = crate::turbine::TurbineParams<$t>;
            pub type CpCurve = crate::turbine::CpCurve<$t>;
            pub type MachineParams = crate::electromech::MachineParams<$t>;
            pub type MachineState = crate::electromech::MachineState<$t>;
            pub type ZNetworkParams = crate::znetwork::ZNetworkParams<$t>;
            pub type ZNetworkState = crate::znetwork::ZNetworkState<$t>;
            pub type OperatingPoint = crate::znetwork::OperatingPoint<$t>;
            pub type RationalTF = crate::tf::RationalTF<$t>;
            pub type ControlGains = crate::control::ControlGains<$t>;
            pub type ControllerState = crate::control::ControllerState<$t>;
            pub type ModulationCommand = crate::modulation::ModulationCommand<$t>;
            pub type Scenario = crate::sim::Scenario<$t>;
            pub type PlantParams = crate::sim::PlantParams<$t>;
            pub type Trace = crate::sim::Trace<$t>;
        }
    };
}

aliases!(f64_types, f64);
aliases!(f32_types, f32);

pub use f32_types as F32;
pub use f64_types as F64;
