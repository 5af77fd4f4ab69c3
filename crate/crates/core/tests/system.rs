use zsource_core::sim::{mppt_sweep, run, run_full, Scenario, Trace, TRACE_COLUMNS};

fn bundled(name: &str) -> Scenario<f64> {
    Scenario::bundled(name).unwrap().unwrap()
}

fn tail(tr: &Trace<f64>, col: &str, t0: f64, t1: f64) -> f64 {
    let r = tr.window(t0, t1);
    tr.col(col)[r.clone()].iter().sum::<f64>() / r.len() as f64
}

#[test]
fn replays_are_bit_identical() {
    let sc = bundled("fig7");
    let (a, b) = (run(&sc).unwrap(), run(&sc).unwrap());
    for c in TRACE_COLUMNS {
        let same = a.col(c).iter().zip(b.col(c)).all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(same, "column {c} differs");
    }
}

#[test]
fn halving_the_physics_step_converges() {
    let mut sc = bundled("fig7");
    sc.duration = 0.6;
    sc.wind_profile = zsource_core::sim::WindProfile::constant(11.0);
    sc.omega_ref_schedule = vec![[0.0, 52.0]];
    let coarse = run_full(&sc).unwrap().final_state.plant.physical();
    let fine = run_full(&sc.with_dt_physics(1e-5)).unwrap().final_state.plant.physical();
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
    }
}

#[test]
fn wind_step_closes_on_optimal_tip_speed() {
    let rows = mppt_sweep(&bundled("mppt"), &[10.0], 0.1, 0.8);
    let r = &rows[0];
    assert!(r.settled && r.error.is_none(), "{r:?}");
    assert!(r.lambda_error.abs() < 0.01, "{r:?}");
    assert!((r.power_ratio - 1.0).abs() < 0.02, "{r:?}");
}

#[test]
fn constraints_hold_at_every_sample() {
    for name in ["fig7", "fig8", "mppt"] {
        for lossless in [false, true] {
            let mut sc = bundled(name);
            if lossless {
                sc.params.make_lossless();
            }
            let tr = run(&sc).unwrap();
            let cap = sc.params.gains.d_s_max;
            for ((d, m), t) in tr.col("d_s").iter().zip(tr.col("m_mag")).zip(tr.time()) {
                assert!(*m <= 1.0 && *d >= 0.0 && *d <= 1.0 - m && *d <= cap, "{name} t={t}: d={d} m={m}");
            }
            assert!(tr.col("p_ref").iter().all(|p| (0.0..=sc.params.gains.p_max).contains(p)));
        }
    }
}

#[test]
fn lossless_boost_ratio_in_closed_loop() {
    let mut sc = bundled("fig8");
    sc.params.make_lossless();
    let tr = run(&sc).unwrap();
    let d = tail(&tr, "d_s", 1.9, 2.0);
    let ratio = tail(&tr, "v_c", 1.9, 2.0) / tail(&tr, "v_dc", 1.9, 2.0);
    assert!((ratio - (1.0 - d) / (1.0 - 2.0 * d)).abs() < 1e-3, "{ratio} at d={d}");
}

#[test]
fn single_precision_agrees_with_double() {
    let s64 = bundled("fig8");
    let s32: Scenario<f32> = Scenario::bundled("fig8").unwrap().unwrap();
    let (a, b) = (run(&s64).unwrap(), run(&s32).unwrap());
    assert_eq!(a.len(), b.len());
    let d64 = tail(&a, "d_s", 1.9, 2.0);
    let r = b.window(1.9, 2.0);
    let d32 = b.col("d_s")[r.clone()].iter().map(|&x| f64::from(x)).sum::<f64>() / r.len() as f64;
    assert!((d64 - d32).abs() < 1e-3, "{d64} vs {d32}");
}

#[test]
fn scenarios_round_trip() {
    for name in Scenario::<f64>::bundled_names() {
        let sc = bundled(name);
        let text = sc.to_json_string().unwrap();
        let back = Scenario::<f64>::from_json_str(&text).unwrap();
        assert_eq!(back, sc);
        assert_eq!(back.to_json_string().unwrap(), text);
        assert_eq!(back.digest(), sc.digest());
    }
}

#[test]
fn digest_tracks_content() {
    let a = bundled("fig8");
    let mut b = a.clone();
    b.params.gains.kp_vc *= 1.0 + 1e-12;
    assert_ne!(a.digest(), b.digest());
    assert_eq!(a.digest().len(), 64);
}

#[test]
fn malformed_scenarios_are_validation_errors() {
    let base = serde_json::to_value(bundled("fig8")).unwrap();
    let cases: [(&str, serde_json::Value); 5] = [
        ("/dt_physics", 3e-5.into()),
        ("/duration", (-1.0).into()),
        ("/vc_ref_schedule", serde_json::json!([[0.0, 140.0], [0.0, 150.0]])),
        ("/trace_columns", serde_json::json!(["v_c", "nope"])),
        ("/params/gains/d_s_max", 0.6.into()),
    ];
    for (ptr, v) in cases {
        let mut doc = base.clone();
        *doc.pointer_mut(ptr).unwrap() = v;
        let err = Scenario::<f64>::from_json_value(doc).unwrap_err();
        assert!(err.is_validation(), "{ptr}: {err}");
    }
    let mut doc = base;
    doc["bogus"] = 1.into();
    assert!(Scenario::<f64>::from_json_value(doc).unwrap_err().is_validation());
}

#[test]
fn trace_csv_has_header_and_comment() {
    let mut sc = bundled("fig8");
    sc.duration = 0.01;
    let tr = run(&sc).unwrap();
    let cols: Vec<String> = ["t", "v_c", "d_s"].map(String::from).to_vec();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, &cols, "digest=abc").unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# digest=abc"));
    assert_eq!(lines.next(), Some("t,v_c,d_s"));
    assert_eq!(lines.count(), tr.len());
}
