use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stockflow::oilmarket::{
    build_oil_model, run_scenario, scenario_a, scenario_b, OilMarketParams,
};
use stockflow::{IntegratorKind, ScenarioDoc, TimeGrid};

fn prices(
    p: &OilMarketParams,
    doc: &ScenarioDoc,
    grid: &TimeGrid,
    kind: IntegratorKind,
) -> Vec<f64> {
    let model = build_oil_model(p).unwrap();
    let traj = run_scenario(&model, doc, grid, kind).unwrap();
    traj.values("OilPrice").unwrap().to_vec()
}

fn rates(p: &OilMarketParams, doc: &ScenarioDoc, grid: &TimeGrid) -> Vec<f64> {
    let model = build_oil_model(p).unwrap();
    let traj = run_scenario(&model, doc, grid, IntegratorKind::Rk4).unwrap();
    traj.values("dPrice").unwrap().to_vec()
}

fn scenario_b_prices(p: &OilMarketParams, decision: u8) -> (Vec<f64>, TimeGrid) {
    let (doc, grid) = scenario_b(p, decision).unwrap();
    (prices(p, &doc, &grid, IntegratorKind::Rk4), grid)
}

fn neutral() -> OilMarketParams {
    OilMarketParams {
        supply_growth: 0.0,
        ..Default::default()
    }
}

#[test]
fn balanced_market_is_stationary() {
    let p = OilMarketParams {
        alpha1: -0.4,
        beta1: 0.4,
        base_tos: 90.0,
        base_tod: 90.0,
        supply_growth: 0.0,
        ..Default::default()
    };
    let grid = TimeGrid::days(30.0).unwrap();
    for kind in [IntegratorKind::Euler, IntegratorKind::Rk4] {
        let path = prices(&p, &ScenarioDoc::new(), &grid, kind);
        assert!(path.iter().all(|&v| v == 100.0), "{kind}");
    }
}

#[test]
fn balanced_market_moves_at_alpha_plus_beta() {
    // per-quarter coefficients on a one-quarter grid
    let p = OilMarketParams {
        alpha1: -50.0,
        beta1: 51.45,
        base_tos: 90.0,
        base_tod: 90.0,
        supply_growth: 0.0,
        ..Default::default()
    };
    let grid = TimeGrid::new(0.0, 4.0, 0.25, 1.0).unwrap();
    let path = prices(&p, &ScenarioDoc::new(), &grid, IntegratorKind::Euler);
    for (k, v) in path.iter().enumerate() {
        let expected = 100.0 + 1.45 * 0.25 * k as f64;
        assert!((v - expected).abs() < 1e-9, "step {k}: {v} vs {expected}");
    }
}

#[test]
fn scenario_a_shape() {
    let p = OilMarketParams::default();
    let (doc, grid) = scenario_a(&p).unwrap();
    assert_eq!(grid.steps(), 43 * 16);
    let path = prices(&p, &doc, &grid, IntegratorKind::Rk4);
    assert_eq!(path[0], 100.0);
    assert!(path.windows(2).all(|w| w[1] <= w[0]));
    // the price is quadratic in t, which RK4 integrates exactly
    assert!(
        (path.last().unwrap() - 99.16).abs() < 1e-9,
        "{}",
        path.last().unwrap()
    );
}

#[test]
fn scenario_b_branches() {
    let p = OilMarketParams::default();
    let (hold, grid) = scenario_b_prices(&p, 0);
    let (spare, _) = scenario_b_prices(&p, 1);
    let idx = |t: f64| grid.index_of(t).unwrap();
    let (upset, meeting, arrival) = (idx(10.0), idx(30.0), idx(40.0));

    assert!(hold[upset..].windows(2).all(|w| w[1] > w[0]));
    assert!(hold[grid.steps()] > hold[meeting] && hold[meeting] > hold[upset]);

    assert!(spare[upset + 1..].iter().all(|&v| v > spare[upset]));
    for k in arrival..=grid.steps() {
        assert!(hold[k] >= spare[k], "t = {}", grid.time_at(k));
    }

    let (doc, _) = scenario_b(&p, 1).unwrap();
    let r = rates(&p, &doc, &grid);
    let peak = r[upset..arrival]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let after = r[arrival..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(after < 0.1 * peak, "{after} vs {peak}");
}

#[test]
fn scenario_b_matches_the_baseline_before_the_upset() {
    let p = OilMarketParams::default();
    let (doc, grid) = scenario_b(&p, 1).unwrap();
    let mut baseline = ScenarioDoc::new();
    baseline.params = doc.params.clone();
    let base = prices(&p, &baseline, &grid, IntegratorKind::Rk4);
    let with_events = prices(&p, &doc, &grid, IntegratorKind::Rk4);
    let upset = grid.index_of(p.upset_time).unwrap();
    assert_eq!(base[..=upset], with_events[..=upset]);
    assert_ne!(base[upset + 1], with_events[upset + 1]);
}

#[test]
fn common_expectation_scale_cancels_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = OilMarketParams::default();
    let reference: Vec<_> = (0..2).map(|d| scenario_b_prices(&base, d).0).collect();
    for _ in 0..10 {
        let c: f64 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let p = OilMarketParams {
            exs_path: vec![(0.0, c)],
            exd_path: vec![(0.0, c)],
            ..base.clone()
        };
        for d in 0..2u8 {
            assert_eq!(scenario_b_prices(&p, d).0, reference[d as usize], "c = {c}");
        }
    }
}

#[test]
fn shaped_paths_scaled_by_powers_of_two() {
    let shaped = OilMarketParams {
        exs_path: vec![(0.0, 1.0), (20.0, 1.1), (60.0, 0.95)],
        exd_path: vec![(0.0, 0.9), (50.0, 1.2)],
        ..Default::default()
    };
    let reference = scenario_b_prices(&shaped, 1).0;
    for k in [-8, -1, 1, 5] {
        let c = 2f64.powi(k);
        let scale = |path: &[(f64, f64)]| path.iter().map(|&(t, v)| (t, v * c)).collect();
        let p = OilMarketParams {
            exs_path: scale(&shaped.exs_path),
            exd_path: scale(&shaped.exd_path),
            ..shaped.clone()
        };
        assert_eq!(scenario_b_prices(&p, 1).0, reference);
    }
}

#[test]
fn expected_demand_acts_like_demand() {
    let grid = TimeGrid::days(30.0).unwrap();
    for m in [0.9, 1.03, 1.25] {
        let with_multiplier = OilMarketParams {
            exd_path: vec![(0.0, m)],
            ..neutral()
        };
        let with_demand = OilMarketParams {
            base_tod: neutral().base_tod * m,
            ..neutral()
        };
        let a = prices(
            &with_multiplier,
            &ScenarioDoc::new(),
            &grid,
            IntegratorKind::Rk4,
        );
        let b = prices(
            &with_demand,
            &ScenarioDoc::new(),
            &grid,
            IntegratorKind::Rk4,
        );
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs(), "{x} vs {y}");
        }
    }
}

#[test]
fn arrow_signs() {
    let p = OilMarketParams::default();
    let (doc, grid) = scenario_b(&p, 1).unwrap();
    let base = prices(&p, &doc, &grid, IntegratorKind::Rk4);
    let bump = |f: &dyn Fn(&mut OilMarketParams)| {
        let mut q = p.clone();
        f(&mut q);
        prices(&q, &doc, &grid, IntegratorKind::Rk4)
    };
    let more_demand = bump(&|q| q.base_tod *= 1.01);
    let more_expected_demand = bump(&|q| q.exd_path = vec![(0.0, 1.0), (50.0, 1.02)]);
    let more_supply = bump(&|q| q.base_tos *= 1.01);
    let more_expected_supply = bump(&|q| q.exs_path = vec![(0.0, 1.0), (50.0, 1.02)]);
    for k in 0..base.len() {
        assert!(more_demand[k] >= base[k]);
        assert!(more_expected_demand[k] >= base[k]);
        assert!(more_supply[k] <= base[k]);
        assert!(more_expected_supply[k] <= base[k]);
    }
    assert!(more_demand.last() > base.last());
    assert!(more_supply.last() < base.last());
}

#[test]
fn integrators_agree_on_the_scenarios() {
    let p = OilMarketParams::default();
    let (doc, grid) = scenario_b(&p, 1).unwrap();
    let rk4 = prices(&p, &doc, &grid, IntegratorKind::Rk4);
    let euler = prices(&p, &doc, &grid, IntegratorKind::Euler);
    let worst = rk4
        .iter()
        .zip(&euler)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.01, "{worst}");
}
