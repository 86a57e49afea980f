use stockflow::integrate::{euler_step, rk4_step};
use stockflow::modelfmt::parse_model;
use stockflow::{simulate, IntegratorKind, TimeGrid};

fn decay_error(kind: IntegratorKind, dt: f64) -> f64 {
    let m = parse_model("stock y = 1 { out: f }\nflow f = y").unwrap();
    let grid = TimeGrid::new(0.0, 1.0, dt, dt).unwrap();
    let traj = simulate(&m, &grid, kind, &[]).unwrap();
    (traj.values("y").unwrap().last().unwrap() - (-1.0f64).exp()).abs()
}

#[test]
fn convergence_orders() {
    for (kind, lo, hi) in [
        (IntegratorKind::Euler, 1.8, 2.2),
        (IntegratorKind::Rk4, 14.0, 18.0),
    ] {
        let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&dt| decay_error(kind, dt))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((lo..=hi).contains(&ratio), "{kind}: {ratio}");
        }
    }
}

#[test]
fn single_steps_by_hand() {
    let m = parse_model("stock y = 1 { in: f }\nflow f = y").unwrap();
    let s = m.initial_state(0.0, 1.0).unwrap();
    let e = euler_step(&m, &s, 1.0).unwrap();
    assert_eq!(e.stock(&m, "y"), Some(2.0));
    let r = rk4_step(&m, &s, 1.0).unwrap();
    assert!((r.stock(&m, "y").unwrap() - 65.0 / 24.0).abs() < 1e-12);
    assert_eq!(r.time(), 1.0);
}

#[test]
fn time_dependent_rate_is_exact_for_rk4() {
    // dy/dt = 3 t^2 integrates to t^3
    let m = parse_model("stock y = 0 { in: f }\nflow f = 3 * t * t").unwrap();
    let grid = TimeGrid::new(0.0, 2.0, 0.25, 0.25).unwrap();
    let traj = simulate(&m, &grid, IntegratorKind::Rk4, &[]).unwrap();
    for (t, y) in traj.times().iter().zip(traj.values("y").unwrap()) {
        assert!((y - t * t * t).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn delay_shifts_a_step_by_its_lag() {
    let src = "const u = 1\nstock y = 0 { in: f }\nflow f = d\naux x = select(t >= 1, u, 0)\ndelay d = x by 2";
    let m = parse_model(src).unwrap();
    let grid = TimeGrid::new(0.0, 6.0, 0.25, 1.0).unwrap();
    let traj = simulate(&m, &grid, IntegratorKind::Euler, &["d", "x"]).unwrap();
    let (x, d) = (traj.values("x").unwrap(), traj.values("d").unwrap());
    let lag = 8;
    for k in 0..x.len() {
        let expected = if k >= lag { x[k - lag] } else { 0.0 };
        assert_eq!(d[k], expected, "step {k}");
    }
    // Euler integrates the delayed step from t = 3
    assert!((traj.values("y").unwrap().last().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn runtime_errors_name_element_and_step() {
    let m =
        parse_model("const z = 0\nstock y = 1 { in: f }\nflow f = 1 / (z - select(t > 0.5, 0, 1))")
            .unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 0.125, 0.125).unwrap();
    let err = simulate(&m, &grid, IntegratorKind::Rk4, &[]).unwrap_err();
    assert_eq!(err.element(), Some("f"));
    let text = err.to_string();
    assert!(text.contains("step") && text.contains('f'), "{text}");
}

#[test]
fn lag_off_the_grid_is_rejected() {
    let m = parse_model("stock y = 1 { in: f }\nflow f = d\ndelay d = y by 0.3").unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 0.25, 0.25).unwrap();
    let err = simulate(&m, &grid, IntegratorKind::Euler, &[]).unwrap_err();
    assert_eq!(err.element(), Some("d"));
}
