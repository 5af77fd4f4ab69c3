//! Coupled plant ODE, zero-order-hold controller scheduling and trace recording.
//!
//! Continuous states: shaft speed, DC-link voltage, network inductor current and
//! capacitor voltage, αβ grid currents, plus four energy accumulators (turbine
//! input, grid output, chain losses, generator copper loss) integrated alongside
//! so the audit sees exactly what the integrator saw.

use crate::control::{current_reference, dc_cascade, pr_current_controller, speed_regulator, ControllerState, DcMeasurement};
use crate::electromech::{machine_derivatives, MachineState};
use crate::error::{Error, Result};
use crate::modulation::{peak_dclink, ModulationCommand};
use crate::scalar::Scalar;
use crate::sim::audit::residual_series;
use crate::sim::ode::rk4_step;
use crate::sim::scenario::{PlantParams, Scenario};
use crate::sim::trace::{Trace, TRACE_COLUMNS};
use crate::turbine::{shaft_torque, wind_power};
use crate::znetwork::{derivatives_unchecked, input_voltage, steady_state, ZNetworkState};

const NX: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlantState<T> {
    pub omega: T,
    pub v_dc: T,
    pub i_l: T,
    pub v_c: T,
    pub i_alpha: T,
    pub i_beta: T,
    /// Energy delivered by the turbine shaft, J.
    pub w_turbine: T,
    /// Energy delivered to the grid, J.
    pub w_grid: T,
    /// Energy dissipated between the DC link and the grid, J.
    pub w_loss: T,
    /// Generator and rectifier copper loss, J.
    pub w_gen_loss: T,
}

impl<T: Scalar> PlantState<T> {
    fn to_array(self) -> [T; NX] {
        [
            self.omega,
            self.v_dc,
            self.i_l,
            self.v_c,
            self.i_alpha,
            self.i_beta,
            self.w_turbine,
            self.w_grid,
            self.w_loss,
            self.w_gen_loss,
        ]
    }

    fn from_array(x: &[T; NX]) -> Self {
        Self {
            omega: x[0],
            v_dc: x[1],
            i_l: x[2],
            v_c: x[3],
            i_alpha: x[4],
            i_beta: x[5],
            w_turbine: x[6],
            w_grid: x[7],
            w_loss: x[8],
            w_gen_loss: x[9],
        }
    }

    /// Physical states only, for convergence comparisons.
    pub fn physical(&self) -> [T; 6] {
        [self.omega, self.v_dc, self.i_l, self.v_c, self.i_alpha, self.i_beta]
    }

    /// Energy held in inertia, capacitors and inductors, J.
    pub fn stored_energy(&self, params: &PlantParams<T>) -> T {
        stored_energy(&self.physical(), params)
    }
}

pub(crate) fn stored_energy<T: Scalar>(x: &[T; 6], params: &PlantParams<T>) -> T {
    let half = T::lit(0.5);
    let (m, z, g) = (&params.machine, &params.znetwork, &params.grid);
    half * m.j_shaft * x[0] * x[0]
        + half * m.c_dclink * x[1] * x[1]
        + z.l_z * x[2] * x[2]
        + z.c_z * x[3] * x[3]
        + T::lit(0.75) * g.l_f * (x[4] * x[4] + x[5] * x[5])
}

/// Quantities held constant over one physics step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Inputs<T> {
    pub d_s: T,
    pub m: [T; 2],
    pub v_w: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub plant: PlantState<T>,
    pub ctrl: ControllerState<T>,
}

/// Instantaneous algebraic signals of the plant.
#[derive(Clone, Copy, Debug, Default)]
struct Signals<T> {
    i_dc: T,
    i_rect: T,
    p_turbine: T,
    p_grid: T,
    p_loss: T,
    p_gen_loss: T,
}

pub(crate) fn grid_voltage<T: Scalar>(t: T, params: &PlantParams<T>) -> [T; 2] {
    let th = params.grid.omega() * t;
    [params.grid.v_peak * th.cos(), params.grid.v_peak * th.sin()]
}

/// Bridge DC current drawn by the inverter, conserving energy between
/// `d_a v̂ i_dc` and the AC-side power.
fn bridge_current<T: Scalar>(u: &Inputs<T>, i: [T; 2], v_hat: T, params: &PlantParams<T>) -> T {
    let d_a = T::one() - u.d_s;
    let mut i_dc = T::lit(0.75) * (u.m[0] * i[0] + u.m[1] * i[1]) / d_a;
    if params.bridge_loss > T::zero() && v_hat > T::lit(1e-6) {
        i_dc = i_dc + params.bridge_loss / (d_a * v_hat);
    }
    i_dc
}

fn evaluate<T: Scalar>(t: T, x: &[T; NX], u: &Inputs<T>, params: &PlantParams<T>) -> ([T; NX], Signals<T>) {
    let (m, z, g) = (&params.machine, &params.znetwork, &params.grid);
    let ms = MachineState { omega: x[0], v_dc: x[1] };
    let zs = ZNetworkState { i_l: x[2], v_c: x[3] };
    let i = [x[4], x[5]];
    let omega = x[0].max(T::zero());
    let t_wind = shaft_torque(u.v_w, omega, &params.turbine, &params.cp_curve).unwrap_or(T::nan());

    let i_dc0 = bridge_current(u, i, T::zero(), params);
    let v_hat0 = peak_dclink(x[3], input_voltage(&zs, x[1], i_dc0, z));
    let i_dc = bridge_current(u, i, v_hat0, params);
    let v_hat = peak_dclink(x[3], input_voltage(&zs, x[1], i_dc, z));

    let zd = derivatives_unchecked(&zs, u.d_s, x[1], i_dc, z);
    let md = machine_derivatives(&ms, t_wind, zd.i_source, m);
    let v_inv = [u.m[0] * v_hat / T::lit(2.0), u.m[1] * v_hat / T::lit(2.0)];
    let v_grid = grid_voltage(t, params);
    let di = crate::control::grid_plant_derivatives(i, v_inv, v_grid, g.l_f, g.r_f);

    let d_a = T::one() - u.d_s;
    let i_src = T::lit(2.0) * x[2] - i_dc;
    let p_turbine = t_wind * x[0];
    let p_grid = T::lit(1.5) * (v_grid[0] * i[0] + v_grid[1] * i[1]);
    let bridge_loss = d_a * v_hat * i_dc - T::lit(1.5) * (v_inv[0] * i[0] + v_inv[1] * i[1]);
    let p_loss = m.b_fric * x[0] * x[0]
        + T::lit(2.0) * z.r_ind * x[2] * x[2]
        + z.r_source * d_a * i_src * i_src
        + T::lit(1.5) * g.r_f * (i[0] * i[0] + i[1] * i[1])
        + bridge_loss;
    let p_gen_loss = m.r_gen * md.i_rect * md.i_rect;
    let dx = [md.domega_dt, md.dvdc_dt, zd.dil_dt, zd.dvc_dt, di[0], di[1], p_turbine, p_grid, p_loss, p_gen_loss];
    (dx, Signals { i_dc, i_rect: md.i_rect, p_turbine, p_grid, p_loss, p_gen_loss })
}

/// Advances the plant by `h` from time `t` with the inputs held.
pub fn step<T: Scalar>(plant: &PlantState<T>, inputs: &Inputs<T>, params: &PlantParams<T>, t: T, h: T) -> Result<PlantState<T>> {
    let x = rk4_step(|tt, x: &[T; NX]| evaluate(tt, x, inputs, params).0, t, &plant.to_array(), h);
    if let Some(k) = x.iter().position(|v| !v.is_finite()) {
        let names = ["omega", "v_dc", "i_l", "v_c", "i_alpha", "i_beta", "w_turbine", "w_grid", "w_loss", "w_gen_loss"];
        return Err(Error::NonFinite { t: (t + h).as_f64(), what: names[k].to_string() });
    }
    Ok(PlantState::from_array(&x))
}

/// Outputs of one controller update.
#[derive(Clone, Copy, Debug, Default)]
struct ControlOutput<T> {
    inputs: Inputs<T>,
    omega_ref: T,
    v_c_ref: T,
    p_ref: T,
    i_dc_meas: T,
    v_grid: [T; 2],
}

fn control_update<T: Scalar>(sc: &Scenario<T>, x: &PlantState<T>, ctrl: &mut ControllerState<T>, k: i64) -> Result<ControlOutput<T>> {
    let p = &sc.params;
    let g = &p.gains;
    let dt = sc.dt_control;
    let t = dt * T::from_i64(k).unwrap();
    let v_w = sc.wind_at_tick(k);
    let omega_ref = sc.omega_ref_at_tick(k);
    let v_c_ref = sc.vc_ref_at_tick(k);

    let p_ref = speed_regulator(x.omega, omega_ref, ctrl, g, dt);
    let v_grid = grid_voltage(t, p);
    let iref = current_reference(p_ref, v_grid[0], v_grid[1]);
    ctrl.grid_fault = iref.grid_fault;
    let (ua, ub) = pr_current_controller(iref.i_alpha - x.i_alpha, iref.i_beta - x.i_beta, ctrl, g, dt);
    let (ua, ub) = (ua + v_grid[0], ub + v_grid[1]);

    let v_hat = peak_dclink(x.v_c, x.v_dc);
    let mut m = if v_hat > T::lit(1e-6) { [ua * T::lit(2.0) / v_hat, ub * T::lit(2.0) / v_hat] } else { [T::zero(); 2] };
    let mag = m[0].hypot(m[1]);
    if mag > T::one() {
        let s = (T::one() - T::lit(4.0) * T::epsilon()) / mag;
        m = [m[0] * s, m[1] * s];
    }
    let m_mag = m[0].hypot(m[1]);

    let d_a = T::one() - ctrl.last_ds;
    let i_dc_meas = T::lit(0.75) * (m[0] * x.i_alpha + m[1] * x.i_beta) / d_a;
    let d_s = dc_cascade(&DcMeasurement { v_c: x.v_c, v_c_ref, i_l: x.i_l, i_dc: i_dc_meas, m_mag }, ctrl, g, dt);
    ctrl.last_m = m;

    let mut cmd = ModulationCommand::new(m[0], m[1], d_s);
    cmd.carrier_freq = p.carrier_freq;
    cmd.validate()?;
    Ok(ControlOutput { inputs: Inputs { d_s, m, v_w }, omega_ref, v_c_ref, p_ref, i_dc_meas, v_grid })
}

/// Warm start on the steady operating point implied by the initial wind and
/// references, with controller integrators preset to hold it.
pub fn initial_state<T: Scalar>(sc: &Scenario<T>) -> Result<SimState<T>> {
    let p = &sc.params;
    let (m, z, g, gains) = (&p.machine, &p.znetwork, &p.grid, &p.gains);
    let v_w = sc.wind_at_tick(0);
    let omega = sc.omega_ref_at_tick(0);
    let v_c_ref = sc.vc_ref_at_tick(0);
    let p_shaft = (wind_power(v_w, omega, &p.turbine, &p.cp_curve)? - m.b_fric * omega * omega).max(T::zero());
    let emf = m.k_v * omega;
    let i_rect = if emf > T::zero() { p_shaft / emf } else { T::zero() };
    let v_dc = emf - m.r_gen * i_rect;

    let op_at = |d: T| steady_state(d, v_dc, (T::one() - T::lit(2.0) * d) * i_rect / (T::one() - d), z);
    let d_max = gains.d_s_max;
    let d_s = if op_at(T::zero())?.v_c >= v_c_ref {
        T::zero()
    } else if op_at(d_max)?.v_c <= v_c_ref {
        d_max
    } else {
        let (mut lo, mut hi) = (T::zero(), d_max);
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if op_at(mid)?.v_c < v_c_ref {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        T::lit(0.5) * (lo + hi)
    };
    let op = op_at(d_s)?;
    let d_a = T::one() - d_s;
    let v_hat = peak_dclink(op.v_c, input_voltage(&op.state(), v_dc, op.i_dc, z));
    let p_bridge = (d_a * v_hat * op.i_dc - p.bridge_loss).max(T::zero());
    // 1.5 r_f I² + 1.5 V I = p_bridge
    let amp = if g.r_f > T::zero() {
        let (a, b) = (T::lit(1.5) * g.r_f, T::lit(1.5) * g.v_peak);
        (-b + (b * b + T::lit(4.0) * a * p_bridge).sqrt()) / (T::lit(2.0) * a)
    } else {
        p_bridge / (T::lit(1.5) * g.v_peak)
    };
    let p_grid = T::lit(1.5) * g.v_peak * amp;

    let mut ctrl = ControllerState { last_ds: d_s, ..ControllerState::default() };
    if gains.ki_speed > T::zero() {
        ctrl.int_speed = p_grid / gains.ki_speed;
    }
    if gains.ki_vc > T::zero() {
        let v_hat_ctrl = peak_dclink(op.v_c, v_dc);
        let i_dc_meas = if v_hat_ctrl > T::zero() { p_grid / (d_a * v_hat_ctrl) } else { T::zero() };
        let i_ff = gains.k_ff * d_a * i_dc_meas / (d_a - d_s);
        let prop = gains.kp_vc * (gains.vc_setpoint_weight * v_c_ref - op.v_c);
        ctrl.int_vc = (op.i_l + d_s / gains.k_lp - i_ff - prop) / gains.ki_vc;
    }
    let plant = PlantState { omega, v_dc, i_l: op.i_l, v_c: op.v_c, i_alpha: amp, ..PlantState::default() };
    Ok(SimState { plant, ctrl })
}

pub struct RunOutput<T> {
    pub trace: Trace<T>,
    /// State after the last physics step.
    pub final_state: SimState<T>,
}

/// Runs the scenario and returns the trace.
pub fn run<T: Scalar>(sc: &Scenario<T>) -> Result<Trace<T>> {
    run_full(sc).map(|o| o.trace)
}

/// Runs the scenario from the warm start, returning trace and final state.
pub fn run_full<T: Scalar>(sc: &Scenario<T>) -> Result<RunOutput<T>> {
    sc.validate()?;
    let init = initial_state(sc)?;
    run_from(sc, init)
}

/// Runs the scenario from a given state.
pub fn run_from<T: Scalar>(sc: &Scenario<T>, init: SimState<T>) -> Result<RunOutput<T>> {
    let p = &sc.params;
    let sub = sc.substeps();
    let ticks = sc.control_ticks();
    let decim = sc.trace_decimation();
    let h = sc.dt_physics;
    let mut trace = Trace::new(sc.dt_control * T::from_usize(decim).unwrap());
    let SimState { plant: mut x, mut ctrl } = init;

    for k in 0..ticks as i64 {
        let out = control_update(sc, &x, &mut ctrl, k)?;
        if (k as usize).is_multiple_of(decim) {
            let t = sc.dt_control * T::from_i64(k).unwrap();
            let (_, s) = evaluate(t, &x.to_array(), &out.inputs, p);
            let lambda = if out.inputs.v_w > T::zero() { p.turbine.blade_radius * x.omega / out.inputs.v_w } else { T::zero() };
            let flag = if ctrl.grid_fault { T::one() } else { T::zero() };
            let row: [T; TRACE_COLUMNS.len()] = [
                t,
                out.inputs.v_w,
                x.omega,
                out.omega_ref,
                x.v_dc,
                x.v_c,
                out.v_c_ref,
                x.i_l,
                out.inputs.d_s,
                out.inputs.m[0].hypot(out.inputs.m[1]),
                out.p_ref,
                s.p_grid,
                x.i_alpha,
                x.i_beta,
                out.v_grid[0],
                T::zero(),
                out.inputs.m[0],
                out.inputs.m[1],
                ctrl.last_il_ref,
                out.i_dc_meas,
                s.i_rect,
                lambda,
                s.p_turbine,
                s.p_loss,
                s.p_gen_loss,
                out.v_grid[1],
                x.w_turbine,
                x.w_grid,
                x.w_loss,
                x.w_gen_loss,
                flag,
            ];
            debug_assert!(s.i_dc.is_finite());
            trace.push(&row);
        }
        let base = k * sub as i64;
        for j in 0..sub as i64 {
            let js = base + j;
            let t = h * T::from_i64(js).unwrap();
            let inputs = Inputs { v_w: sc.wind_at(js, t), ..out.inputs };
            x = step(&x, &inputs, p, t, h)?;
        }
    }
    let res = residual_series(&trace, p);
    *trace.column_mut("energy_residual") = res;
    Ok(RunOutput { trace, final_state: SimState { plant: x, ctrl } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::WindProfile;

    fn short(duration: f64) -> Scenario<f64> {
        let mut s = Scenario::<f64>::bundled("fig8").unwrap().unwrap();
        s.duration = duration;
        s.vc_ref_schedule = vec![[0.0, 140.0]];
        s
    }

    #[test]
    fn zero_duration_gives_empty_trace() {
        let t = run(&short(0.0)).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn idle_plant_stays_idle() {
        let mut p = PlantParams::<f64>::default();
        p.make_lossless();
        p.grid.v_peak = 0.0;
        let x = PlantState::default();
        let u = Inputs { d_s: 0.0, m: [0.0, 0.0], v_w: 1e-12 };
        let y = step(&x, &u, &p, 0.0, 1e-5).unwrap();
        for v in y.physical() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_dc_node_holds_voltage() {
        // source current tracks the rectifier current while the shaft coasts down
        let p = PlantParams::<f64>::default();
        let mut s = MachineState { omega: 60.0, v_dc: 140.0 };
        for _ in 0..1000 {
            let i = crate::electromech::rectifier_current(&s, &p.machine);
            let d = machine_derivatives(&s, 0.0, i, &p.machine);
            s.v_dc += 1e-4 * d.dvdc_dt;
            s.omega += 1e-4 * d.domega_dt;
        }
        assert_eq!(s.v_dc, 140.0);
        assert!(s.omega < 60.0);
    }

    #[test]
    fn warm_start_is_near_equilibrium() {
        let sc = short(0.05);
        let init = initial_state(&sc).unwrap();
        let out = run_full(&sc).unwrap();
        let a = init.plant;
        let b = out.final_state.plant;
        assert!((a.omega - b.omega).abs() < 0.05, "{} {}", a.omega, b.omega);
        assert!((a.v_c - b.v_c).abs() < 1.0, "{} {}", a.v_c, b.v_c);
        assert!((a.v_dc - b.v_dc).abs() < 1.0, "{} {}", a.v_dc, b.v_dc);
    }

    #[test]
    fn sampled_wind_is_interpolated() {
        let mut sc = short(0.01);
        sc.wind_profile = WindProfile::Sampled { points: vec![[0.0, 11.0], [0.01, 12.0]] };
        assert!((sc.wind_at(0, 0.005) - 11.5).abs() < 1e-12);
        run(&sc).unwrap();
    }

    #[test]
    fn runs_in_single_precision() {
        let s64 = short(0.02);
        let s32: Scenario<f32> = serde_json::from_str(&serde_json::to_string(&s64).unwrap()).unwrap();
        let t = run(&s32).unwrap();
        assert!(t.col("v_c").iter().all(|v| v.is_finite()));
    }
}
