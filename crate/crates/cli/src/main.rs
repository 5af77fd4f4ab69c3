//! `zsource`: simulate, linearize and sweep the Z-source wind energy system.

mod load;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use zsource_core::control::{ac_loop_tf, vc_loop_tf};
use zsource_core::modulation::{carrier_cycle_intervals, volt_second_check, ModulationCommand};
use zsource_core::sim::{mppt_sweep, run_full};
use zsource_core::tf::{freq_response, log_grid, max_discrepancy, RationalTF};
use zsource_core::znetwork::{linearize, steady_state, tf_il_ds, tf_vc_ds, tf_vc_ilref, vc_ds_zero};
use zsource_core::F64::{OperatingPoint, Scenario};

use load::{load, LoadOptions};

/// Input problem reported with exit status 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(name = "zsource", version, about = "Z-source inverter wind energy system simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, write its trace and print a steady-state summary.
    Simulate(SimulateArgs),
    /// Small-signal model of the impedance network at an operating point.
    Linearize(LinearizeArgs),
    /// Frequency response of a transfer function as CSV.
    Bode(BodeArgs),
    /// Closed-loop settling runs across wind speeds.
    MpptSweep(SweepArgs),
    /// Parse, apply overrides and validate a scenario.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file, or a bundled name (fig7, fig8, mppt).
    #[arg(long, default_value = "fig8")]
    scenario: String,
    /// Override a scenario field, e.g. `params.gains.kp_vc=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Zero every chain loss before running.
    #[arg(long)]
    lossless: bool,
    /// Physics integration step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Suppress the report on stdout.
    #[arg(long)]
    quiet: bool,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        load(&LoadOptions {
            scenario: self.scenario.clone(),
            overrides: self.overrides.clone(),
            lossless: self.lossless,
            dt: self.dt,
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    /// Trace CSV path; defaults to `<scenario name>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the carrier-cycle switching pattern at the final operating point.
    #[arg(long)]
    dump_pattern: bool,
}

#[derive(Args)]
struct OpArgs {
    /// Shoot-through duty of the operating point.
    #[arg(long, conflicts_with = "at")]
    d_s: Option<f64>,
    /// DC-link voltage, V.
    #[arg(long, default_value_t = 140.0)]
    v_dc: f64,
    /// Bridge DC current, A.
    #[arg(long, default_value_t = 0.0)]
    i_dc: f64,
    /// Take the operating point from the scenario state at this time, s.
    #[arg(long)]
    at: Option<f64>,
    /// Inner current-loop gain; defaults to the scenario's.
    #[arg(long)]
    k_lp: Option<f64>,
}

#[derive(Args)]
struct LinearizeArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[command(flatten)]
    op: OpArgs,
    /// Coefficient CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TfKind {
    /// Capacitor voltage over shoot-through duty.
    VcDs,
    /// Inductor current over shoot-through duty.
    IlDs,
    /// Capacitor voltage over inductor-current reference, inner loop closed.
    VcIlref,
    /// Closed capacitor-voltage loop.
    VcLoop,
    /// Closed AC current loop.
    AcLoop,
}

#[derive(Args)]
struct BodeArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[command(flatten)]
    op: OpArgs,
    #[arg(long = "tf", value_enum, default_value = "vc-ds")]
    kind: TfKind,
    #[arg(long, default_value_t = 0.1)]
    omega_min: f64,
    #[arg(long, default_value_t = 1e4)]
    omega_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[arg(long, default_value_t = 6.0)]
    wind_min: f64,
    #[arg(long, default_value_t = 12.0)]
    wind_max: f64,
    #[arg(long, default_value_t = 1.0)]
    wind_step: f64,
    /// Time of the wind step in each run, s.
    #[arg(long, default_value_t = 0.1)]
    step_time: f64,
    /// Initial wind as a fraction of the target.
    #[arg(long, default_value_t = 0.9)]
    start_fraction: f64,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    /// Print the resolved scenario as JSON.
    #[arg(long)]
    print: bool,
}

fn provenance(sc: &Scenario) -> String {
    format!("zsource {} scenario={} sha256={}", env!("CARGO_PKG_VERSION"), sc.name, sc.digest())
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let sc = a.common.load()?;
    let out = run_full(&sc)?;
    let path = a.out.clone().unwrap_or_else(|| {
        let stem = if sc.name.is_empty() { "trace" } else { sc.name.as_str() };
        PathBuf::from(format!("{stem}.csv"))
    });
    let mut w = open_out(Some(&path))?;
    out.trace.write_csv(&mut w, &sc.trace_columns, &provenance(&sc))?;
    w.flush()?;
    if !a.common.quiet {
        print!("{}", report::summary(&sc, &out.trace));
        println!("  trace written to {}", path.display());
    }
    if a.dump_pattern {
        let st = &out.final_state;
        let cmd = ModulationCommand::new(st.ctrl.last_m[0], st.ctrl.last_m[1], st.ctrl.last_ds);
        let pat = carrier_cycle_intervals(&cmd)?;
        let err = volt_second_check(&cmd, st.plant.v_c, st.plant.v_dc)?;
        println!("carrier pattern (sector {}, |m| = {:.4}, d_s = {:.4}):", pat.sector, cmd.m_mag(), cmd.d_s);
        for iv in &pat.intervals {
            println!("  {:<14} {:.6}", iv.state.to_string(), iv.fraction);
        }
        println!("  volt-second error: {err:.3e} V");
    }
    Ok(())
}

fn operating_point(sc: &Scenario, op: &OpArgs) -> Result<OperatingPoint> {
    let z = &sc.params.znetwork;
    if let Some(d) = op.d_s {
        return Ok(steady_state(d, op.v_dc, op.i_dc, z)?);
    }
    let Some(t) = op.at else {
        return Err(Invalid("give an operating point with --d-s (and --v-dc, --i-dc) or a scenario time with --at".into()).into());
    };
    if t.is_nan() || t <= 0.0 {
        return Err(Invalid(format!("--at must be > 0, got {t}")).into());
    }
    let mut cut = sc.clone();
    cut.duration = t;
    let out = run_full(&cut)?;
    let tr = &out.trace;
    let i_dc = *tr.col("i_dc").last().context("empty trace")?;
    let (plant, d) = (&out.final_state.plant, out.final_state.ctrl.last_ds);
    let recent = tr.window(t - 0.01, t);
    let spread = |c: &str| {
        let xs = &tr.col(c)[recent.clone()];
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        hi - lo
    };
    let drifting = spread("d_s") > 1e-3 || spread("v_dc") > 1e-2 * plant.v_dc.abs().max(1.0) || spread("i_dc") > 1e-2 * i_dc.abs().max(1.0);
    let ss = steady_state(d, plant.v_dc, i_dc, z)?;
    let off_v = (plant.v_c - ss.v_c).abs() / ss.v_c.abs().max(1.0);
    let off_i = (plant.i_l - ss.i_l).abs() / ss.i_l.abs().max(1.0);
    if drifting || off_v > 1e-2 || off_i > 1e-2 {
        return Err(Invalid(format!(
            "state at t = {t} s is not settled (inputs moving over the last 10 ms: {drifting}; V_C off by {:.2}%, I_L off by {:.2}% from the steady state); pick a time late in a constant-reference segment",
            100.0 * off_v,
            100.0 * off_i
        ))
        .into());
    }
    Ok(ss)
}

fn coeffs(c: &[f64]) -> String {
    c.iter().map(|x| format!("{x:.9e}")).collect::<Vec<_>>().join(", ")
}

fn linearize_cmd(a: &LinearizeArgs) -> Result<()> {
    let sc = a.common.load()?;
    let z = &sc.params.znetwork;
    let k_lp = a.op.k_lp.unwrap_or(sc.params.gains.k_lp);
    let op = operating_point(&sc, &a.op)?;
    let lin = linearize(&op, z)?;
    let pairs: [(&str, RationalTF<f64>, RationalTF<f64>); 3] = [
        ("vc_ds", tf_vc_ds(&op, z), lin.vc_ds.clone()),
        ("il_ds", tf_il_ds(&op, z), lin.il_ds.clone()),
        ("vc_ilref", tf_vc_ilref(&op, z, k_lp)?, lin.inner_loop_vc(k_lp)),
    ];
    let grid = log_grid(0.1, 1e4, 400);
    if !a.common.quiet {
        println!(
            "operating point: d_s = {:.6}, v_dc = {:.4} V, i_dc = {:.4} A -> V_C = {:.4} V, I_L = {:.4} A, V_I1 = {:.4} V, I_I1 = {:.4} A",
            op.d_s, op.v_dc, op.i_dc, op.v_c, op.i_l, op.v_i1, op.i_i1
        );
        println!("transfer functions, ascending powers of s, monic denominators:");
        for (name, sym, num) in &pairs {
            let (db, deg) = max_discrepancy(sym, num, &grid)?;
            let (sym, num) = (sym.normalized(), num.normalized());
            println!("{name}:");
            println!("  symbolic num [{}]  den [{}]", coeffs(sym.num()), coeffs(sym.den()));
            println!("  numeric  num [{}]  den [{}]", coeffs(num.num()), coeffs(num.den()));
            println!("  max discrepancy over [0.1, 1e4] rad/s: {db:.3e} dB, {deg:.3e} deg");
        }
        match vc_ds_zero(&op, z) {
            Some(s) if s > 0.0 => println!("right-half-plane zero at s = +{s:.3} rad/s"),
            Some(s) => println!("zero at s = {s:.3} rad/s"),
            None => println!("no finite zero (network unloaded)"),
        }
    }
    if let Some(path) = &a.out {
        let mut w = open_out(Some(path))?;
        writeln!(w, "# {}", provenance(&sc))?;
        writeln!(w, "tf,source,part,power,coefficient")?;
        for (name, sym, num) in &pairs {
            for (source, tf) in [("symbolic", sym.normalized()), ("numeric", num.normalized())] {
                for (part, c) in [("num", tf.num()), ("den", tf.den())] {
                    for (k, x) in c.iter().enumerate() {
                        writeln!(w, "{name},{source},{part},{k},{x:.9e}")?;
                    }
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn bode(a: &BodeArgs) -> Result<()> {
    let sc = a.common.load()?;
    if !(a.omega_min > 0.0 && a.omega_max > a.omega_min && a.points >= 2) {
        return Err(Invalid("need 0 < omega-min < omega-max and at least 2 points".into()).into());
    }
    let g = &sc.params.gains;
    let z = &sc.params.znetwork;
    let tf = match a.kind {
        TfKind::AcLoop => ac_loop_tf(g, sc.params.grid.l_f, sc.params.grid.r_f),
        kind => {
            let op = operating_point(&sc, &a.op)?;
            let k_lp = a.op.k_lp.unwrap_or(g.k_lp);
            match kind {
                TfKind::VcDs => tf_vc_ds(&op, z),
                TfKind::IlDs => tf_il_ds(&op, z),
                TfKind::VcIlref => tf_vc_ilref(&op, z, k_lp)?,
                _ => vc_loop_tf(&op, z, &zsource_core::F64::ControlGains { k_lp, ..g.clone() })?,
            }
        }
    };
    let pts = freq_response(&tf, &log_grid(a.omega_min, a.omega_max, a.points))?;
    let mut w = open_out(a.out.as_ref())?;
    writeln!(w, "# {}", provenance(&sc))?;
    writeln!(w, "omega_rad_s,mag_db,phase_deg")?;
    for p in pts {
        writeln!(w, "{:.9e},{:.9e},{:.9e}", p.omega, p.mag_db, p.phase_deg)?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let sc = a.common.load()?;
    if !(a.wind_min > 0.0 && a.wind_max >= a.wind_min && a.wind_step > 0.0) {
        return Err(Invalid("need 0 < wind-min <= wind-max and wind-step > 0".into()).into());
    }
    let n = ((a.wind_max - a.wind_min) / a.wind_step + 1e-9).floor() as usize + 1;
    let winds: Vec<f64> = (0..n).map(|k| a.wind_min + k as f64 * a.wind_step).collect();
    let rows = mppt_sweep(&sc, &winds, a.step_time, a.start_fraction);
    let mut w = open_out(a.out.as_ref())?;
    writeln!(w, "# {}", provenance(&sc))?;
    writeln!(w, "v_w,omega_settled,lambda_settled,p_settled,p_opt,lambda_error,power_ratio,settled")?;
    for r in &rows {
        writeln!(
            w,
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{}",
            r.v_w,
            r.omega_settled,
            r.lambda_settled,
            r.p_settled,
            r.p_opt,
            r.lambda_error,
            r.power_ratio,
            u8::from(r.settled)
        )?;
        if !r.settled {
            eprintln!("warning: run at {} m/s did not settle{}", r.v_w, r.error.as_ref().map(|e| format!(": {e}")).unwrap_or_default());
        }
    }
    w.flush()?;
    Ok(())
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let sc = a.common.load()?;
    if a.print {
        println!("{}", sc.to_json_string()?);
    } else if !a.common.quiet {
        println!("ok: {}", provenance(&sc));
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Invalid>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    match err.downcast_ref::<zsource_core::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    #[cfg(unix)]
    // SAFETY: runs before any other thread exists.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Linearize(a) => linearize_cmd(a),
        Command::Bode(a) => bode(a),
        Command::MpptSweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
