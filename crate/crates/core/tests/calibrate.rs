use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stockflow::calibrate::{
    describe, fit_polynomial, integrate_pcr, ols_fit, pcr_series, FitError, StatError,
};
use stockflow::TimeSeries;

/// Textbook formulas written independently of the library: z-scores against
/// the sample standard deviation.
fn oracle(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let s = var.sqrt();
    let z3: f64 = x.iter().map(|v| ((v - mean) / s).powi(3)).sum();
    let z4: f64 = x.iter().map(|v| ((v - mean) / s).powi(4)).sum();
    let skew = n / ((n - 1.0) * (n - 2.0)) * z3;
    let kurt = n * (n + 1.0) / ((n - 1.0) * (n - 2.0) * (n - 3.0)) * z4
        - 3.0 * (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
    (mean, s, skew, kurt)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn stats_match_oracle_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(2010);
    for _ in 0..1000 {
        let n = rng.gen_range(4..60);
        let scale = 10f64.powf(rng.gen_range(-2.0..3.0));
        let x: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-1.0..1.0) * scale + 50.0)
            .collect();
        let row = describe("x", &x).unwrap();
        let (mean, s, skew, kurt) = oracle(&x);
        assert!(close(row.mean, mean, 1e-12));
        assert!(close(row.std.unwrap(), s, 1e-9));
        assert!(
            close(row.skewness.unwrap(), skew, 1e-9),
            "{:?} vs {skew}",
            row.skewness
        );
        assert!(
            close(row.kurtosis.unwrap(), kurt, 1e-9),
            "{:?} vs {kurt}",
            row.kurtosis
        );
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(row.min <= row.median && row.median <= row.max);
        assert_eq!((row.min, row.max), (sorted[0], sorted[n - 1]));
    }
}

proptest! {
    #[test]
    fn stats_shift_and_scale(
        x in prop::collection::vec(-100.0f64..100.0, 5..40),
        a in prop_oneof![-20.0f64..-0.1, 0.1f64..20.0],
        b in -1000.0f64..1000.0,
    ) {
        let r = describe("x", &x).unwrap();
        prop_assume!(r.std.unwrap() > 1e-3);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let s = describe("y", &y).unwrap();
        let tol = 1e-9 * (a.abs() * r.mean.abs() + b.abs() + 1.0);
        prop_assert!((s.mean - (a * r.mean + b)).abs() <= tol);
        prop_assert!(close(s.std.unwrap(), a.abs() * r.std.unwrap(), 1e-9));
        prop_assert!((s.skewness.unwrap() - a.signum() * r.skewness.unwrap()).abs() <= 1e-7);
        prop_assert!((s.kurtosis.unwrap() - r.kurtosis.unwrap()).abs() <= 1e-7);
        prop_assert!((s.median - (a * r.median + b)).abs() <= tol);
    }

    #[test]
    fn pcr_then_cumulate_is_identity(
        p in prop::collection::vec(1.0f64..200.0, 2..80),
        dt in prop_oneof![Just(1.0), Just(0.25), Just(91.3125)],
    ) {
        let price = TimeSeries::new("p", "USD", 0.0, dt, p.clone()).unwrap();
        let pcr = pcr_series(&price, dt).unwrap();
        prop_assert_eq!(pcr.len(), p.len() - 1);
        let back = integrate_pcr(&pcr, p[0]);
        for (a, b) in back.iter().zip(&p) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn ols_residuals_are_orthogonal(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        match fit_polynomial(&x, &y, 1) {
            Ok(fit) => {
                let n = x.len() as f64;
                let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
                let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
                prop_assert!((fit.predict(mx) - my).abs() <= 1e-9 * scale);
                let res: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - fit.predict(*a)).collect();
                prop_assert!(res.iter().sum::<f64>().abs() <= 1e-9 * scale * n);
                let xr: f64 = res.iter().zip(&x).map(|(r, a)| r * a).sum();
                prop_assert!(xr.abs() <= 1e-8 * scale * n * 50.0);
                prop_assert!(fit.r_squared <= 1.0 + 1e-12);
            }
            Err(e) => prop_assert_eq!(e, FitError::DegenerateX),
        }
    }
}

#[test]
fn linear_ramp_has_constant_pcr() {
    for m in [-3.5, 0.0, 0.125, 7.0] {
        let p: Vec<f64> = (0..30).map(|k| 90.0 + m * k as f64 * 0.5).collect();
        let pcr = pcr_series(&TimeSeries::new("p", "USD", 0.0, 0.5, p).unwrap(), 0.5).unwrap();
        assert!(pcr.values.iter().all(|v| (v - m).abs() < 1e-12), "{m}");
    }
}

/// Normal equations for a straight line solved by Cramer's rule.
fn cramer(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

#[test]
fn noisy_line_recovers_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..200).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| {
            // Box-Muller with sigma 0.01
            let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
            -3.0 * v + 5.0 + 0.01 * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect();
    let fit = fit_polynomial(&x, &y, 1).unwrap();
    assert!((fit.alpha1() + 3.0).abs() < 0.01 && (fit.beta1() - 5.0).abs() < 0.01);
    let (a, b) = cramer(&x, &y);
    assert!((fit.alpha1() - a).abs() < 1e-9 && (fit.beta1() - b).abs() < 1e-9);
    assert!(
        fit.residual_std > 0.005 && fit.residual_std < 0.02,
        "{}",
        fit.residual_std
    );
}

#[test]
fn higher_degree_leaves_residual_on_noisy_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = (0..17).map(|_| rng.gen_range(0.99..1.02)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|r| -50.0 * r + 51.45 + rng.gen_range(-10.0..10.0))
        .collect();
    let xs = TimeSeries::new("ratio", "", 0.0, 1.0, x).unwrap();
    let ys = TimeSeries::new("pcr", "USD/period", 0.0, 1.0, y).unwrap();
    let linear = ols_fit(&xs, &ys, 1).unwrap();
    let cubic = ols_fit(&xs, &ys, 3).unwrap();
    assert!(cubic.r_squared >= linear.r_squared - 1e-12);
    assert!(cubic.residual_std > 1.0);
}

#[test]
fn short_series_report_per_field_errors() {
    let row = describe("x", &[1.0, 2.0]).unwrap();
    assert!(row.std.is_ok());
    assert_eq!(row.skewness, Err(StatError::TooFew { needed: 3, got: 2 }));
}
