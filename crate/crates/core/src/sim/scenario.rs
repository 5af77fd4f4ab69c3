//! Scenario description: timing, reference schedules, wind input and all
//! plant and controller parameters. Serialized as JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::ControlGains;
use crate::electromech::MachineParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::trace::TRACE_COLUMNS;
use crate::turbine::{CpCurve, TurbineParams};
use crate::znetwork::ZNetworkParams;

/// Ideal balanced grid behind an L filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams<T> {
    /// Phase voltage amplitude, V.
    pub v_peak: T,
    /// Hz.
    pub freq: T,
    pub l_f: T,
    pub r_f: T,
}

impl<T: Scalar> Default for GridParams<T> {
    fn default() -> Self {
        Self { v_peak: T::lit(40.0), freq: T::lit(50.0), l_f: T::lit(0.5e-3), r_f: T::lit(0.02) }
    }
}

impl<T: Scalar> GridParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_peak", self.v_peak), ("freq", self.freq), ("l_f", self.l_f)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("grid.{name} must be > 0, got {v}")));
            }
        }
        if !(self.r_f >= T::zero()) {
            return Err(Error::InvalidParams(format!("grid.r_f must be >= 0, got {}", self.r_f)));
        }
        Ok(())
    }

    pub fn omega(&self) -> T {
        T::TAU() * self.freq
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct PlantParams<T> {
    pub turbine: TurbineParams<T>,
    pub cp_curve: CpCurve<T>,
    pub machine: MachineParams<T>,
    pub znetwork: ZNetworkParams<T>,
    pub grid: GridParams<T>,
    pub gains: ControlGains<T>,
    /// Constant bridge conduction loss drawn from the DC side, W.
    pub bridge_loss: T,
    /// Only used for switching-pattern dumps, Hz.
    pub carrier_freq: T,
    /// Power scale for the energy audit, W.
    pub rated_power: T,
}

impl<T: Scalar> Default for PlantParams<T> {
    fn default() -> Self {
        let turbine = TurbineParams::default();
        Self {
            cp_curve: CpCurve::for_turbine(&turbine),
            turbine,
            machine: MachineParams::default(),
            znetwork: ZNetworkParams::default(),
            grid: GridParams::default(),
            gains: ControlGains::default(),
            bridge_loss: T::zero(),
            carrier_freq: T::lit(10e3),
            rated_power: T::lit(3000.0),
        }
    }
}

impl<T: Scalar> PlantParams<T> {
    pub fn validate(&self) -> Result<()> {
        self.turbine.validate()?;
        self.cp_curve.validate()?;
        self.machine.validate()?;
        self.znetwork.validate()?;
        self.grid.validate()?;
        self.gains.validate()?;
        if !(self.bridge_loss >= T::zero()) {
            return Err(Error::InvalidParams(format!("bridge_loss must be >= 0, got {}", self.bridge_loss)));
        }
        if !(self.carrier_freq > T::zero()) || !(self.rated_power > T::zero()) {
            return Err(Error::InvalidParams("carrier_freq and rated_power must be > 0".into()));
        }
        Ok(())
    }

    /// Zeroes every dissipative element downstream of the generator.
    /// The generator resistance stays, since it defines the rectifier current.
    pub fn make_lossless(&mut self) {
        self.machine.b_fric = T::zero();
        self.znetwork.r_ind = T::zero();
        self.znetwork.r_source = T::zero();
        self.grid.r_f = T::zero();
        self.bridge_loss = T::zero();
    }

    pub fn is_lossless(&self) -> bool {
        self.machine.b_fric == T::zero()
            && self.znetwork.r_ind == T::zero()
            && self.znetwork.r_source == T::zero()
            && self.grid.r_f == T::zero()
            && self.bridge_loss == T::zero()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindProfile<T> {
    /// Piecewise constant: each `[t, v]` holds from `t` until the next point.
    Steps { points: Vec<[T; 2]> },
    /// Linear interpolation between samples, held flat outside them.
    Sampled { points: Vec<[T; 2]> },
}

impl<T: Scalar> WindProfile<T> {
    pub fn constant(v: T) -> Self {
        WindProfile::Steps { points: vec![[T::zero(), v]] }
    }

    pub fn points(&self) -> &[[T; 2]] {
        match self {
            WindProfile::Steps { points } | WindProfile::Sampled { points } => points,
        }
    }
}

/// Number of `dt` ticks after which an event at `t_event` is active.
pub(crate) fn event_tick<T: Scalar>(t_event: T, dt: T) -> i64 {
    (t_event / dt - T::lit(1e-6)).ceil().to_i64().unwrap_or(i64::MAX)
}

/// Value of a step schedule at tick `k`; before the first event the first value holds.
pub(crate) fn step_value<T: Scalar>(points: &[[T; 2]], k: i64, dt: T) -> T {
    let n = points.partition_point(|p| event_tick(p[0], dt) <= k);
    points[n.saturating_sub(1)][1]
}

fn interpolate<T: Scalar>(points: &[[T; 2]], t: T) -> T {
    let n = points.partition_point(|p| p[0] <= t);
    if n == 0 {
        return points[0][1];
    }
    if n == points.len() {
        return points[n - 1][1];
    }
    let (a, b) = (points[n - 1], points[n]);
    a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct Scenario<T> {
    #[serde(default)]
    pub name: String,
    /// Simulated time, s.
    pub duration: T,
    pub dt_physics: T,
    pub dt_control: T,
    /// Trace sampling period; defaults to `dt_control`.
    #[serde(default)]
    pub trace_period: Option<T>,
    pub wind_profile: WindProfile<T>,
    /// `[t, ω_ref]` steps. Empty means MPPT: `ω_ref = k_omega · V_w`.
    #[serde(default)]
    pub omega_ref_schedule: Vec<[T; 2]>,
    /// `[t, V_C*]` steps.
    pub vc_ref_schedule: Vec<[T; 2]>,
    #[serde(default)]
    pub params: PlantParams<T>,
    /// Columns written to CSV; empty selects the standard set.
    #[serde(default)]
    pub trace_columns: Vec<String>,
    #[serde(default)]
    pub seed: u64,
}

const BUNDLED: [(&str, &str); 3] = [
    ("fig7", include_str!("../../scenarios/fig7.json")),
    ("fig8", include_str!("../../scenarios/fig8.json")),
    ("mppt", include_str!("../../scenarios/mppt.json")),
];

/// Source text of a built-in scenario, with or without a `.json` suffix.
pub fn bundled_json(name: &str) -> Option<&'static str> {
    let key = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == key).map(|(_, s)| *s)
}

fn nonempty_sorted<T: Scalar>(what: &str, pts: &[[T; 2]]) -> Result<()> {
    if pts.is_empty() {
        return Err(Error::Validation(format!("{what} must not be empty")));
    }
    for (i, p) in pts.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::Validation(format!("{what}[{i}] is not finite")));
        }
        if p[0] < T::zero() {
            return Err(Error::Validation(format!("{what}[{i}] has negative time {}", p[0])));
        }
    }
    if pts.windows(2).any(|w| !(w[1][0] > w[0][0])) {
        return Err(Error::Validation(format!("{what} times must be strictly increasing")));
    }
    Ok(())
}

impl<T: Scalar> Scenario<T> {
    /// Names accepted by [`Scenario::bundled`].
    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    /// Built-in scenario by name, with or without a `.json` suffix.
    pub fn bundled(name: &str) -> Option<Result<Self>> {
        bundled_json(name).map(Self::from_json_str)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        let sc: Self = serde_json::from_value(v)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact JSON form, lower-case hex.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= T::zero()) || !self.duration.is_finite() {
            return Err(Error::Validation(format!("duration must be >= 0, got {}", self.duration)));
        }
        if !(self.dt_physics > T::zero()) || !(self.dt_control > T::zero()) {
            return Err(Error::Validation("dt_physics and dt_control must be > 0".into()));
        }
        if self.dt_physics > self.dt_control {
            return Err(Error::Validation(format!(
                "dt_physics ({}) must not exceed dt_control ({})",
                self.dt_physics, self.dt_control
            )));
        }
        let ratio = self.dt_control / self.dt_physics;
        if (ratio - ratio.round()).abs() > T::lit(1e-6) * ratio {
            return Err(Error::Validation(format!("dt_control / dt_physics must be an integer, got {ratio}")));
        }
        if let Some(tp) = self.trace_period {
            let r = tp / self.dt_control;
            if !(r >= T::one() - T::lit(1e-9)) || (r - r.round()).abs() > T::lit(1e-6) * r {
                return Err(Error::Validation(format!("trace_period must be a multiple of dt_control, got {tp}")));
            }
        }
        let wind = self.wind_profile.points();
        nonempty_sorted("wind_profile.points", wind)?;
        if let Some(p) = wind.iter().find(|p| !(p[1] > T::zero())) {
            return Err(Error::Validation(format!("wind speed must be > 0, got {}", p[1])));
        }
        if !self.omega_ref_schedule.is_empty() {
            nonempty_sorted("omega_ref_schedule", &self.omega_ref_schedule)?;
            if let Some(p) = self.omega_ref_schedule.iter().find(|p| !(p[1] > T::zero())) {
                return Err(Error::Validation(format!("omega_ref must be > 0, got {}", p[1])));
            }
        }
        nonempty_sorted("vc_ref_schedule", &self.vc_ref_schedule)?;
        if let Some(p) = self.vc_ref_schedule.iter().find(|p| !(p[1] > T::zero())) {
            return Err(Error::Validation(format!("V_C reference must be > 0, got {}", p[1])));
        }
        for c in &self.trace_columns {
            if !TRACE_COLUMNS.contains(&c.as_str()) {
                return Err(Error::Validation(format!("unknown trace column '{c}'")));
            }
        }
        self.params.validate().map_err(|e| match e {
            Error::InvalidParams(m) => Error::Validation(format!("params: {m}")),
            other => other,
        })
    }

    /// Physics steps per control period.
    pub fn substeps(&self) -> usize {
        (self.dt_control / self.dt_physics).round().to_usize().unwrap_or(1).max(1)
    }

    /// Number of control periods in the run.
    pub fn control_ticks(&self) -> usize {
        (self.duration / self.dt_control - T::lit(1e-6)).ceil().to_usize().unwrap_or(0)
    }

    /// Control periods per trace sample.
    pub fn trace_decimation(&self) -> usize {
        self.trace_period.map_or(1, |tp| (tp / self.dt_control).round().to_usize().unwrap_or(1).max(1))
    }

    /// Wind speed for the physics step `j` (steps) or at time `t` (sampled).
    pub fn wind_at(&self, physics_step: i64, t: T) -> T {
        match &self.wind_profile {
            WindProfile::Steps { points } => step_value(points, physics_step, self.dt_physics),
            WindProfile::Sampled { points } => interpolate(points, t),
        }
    }

    /// Wind speed seen by the controller at control tick `k`.
    pub fn wind_at_tick(&self, k: i64) -> T {
        let j = k * self.substeps() as i64;
        self.wind_at(j, self.dt_control * T::from_i64(k).unwrap())
    }

    pub fn omega_ref_at_tick(&self, k: i64) -> T {
        if self.omega_ref_schedule.is_empty() {
            crate::turbine::speed_ref(self.wind_at_tick(k), &self.params.turbine)
        } else {
            step_value(&self.omega_ref_schedule, k, self.dt_control)
        }
    }

    pub fn vc_ref_at_tick(&self, k: i64) -> T {
        step_value(&self.vc_ref_schedule, k, self.dt_control)
    }

    /// Same scenario with another physics step.
    pub fn with_dt_physics(&self, dt_physics: T) -> Self {
        Self { dt_physics, ..self.clone() }
    }
}
