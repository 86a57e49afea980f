//! Price-change-rate regression and descriptive statistics for historical
//! supply, demand and price data.

mod ols;
mod stats;

use thiserror::Error;

use crate::series::TimeSeries;

pub use ols::{fit_polynomial, ols_fit, FitError, RegressionFit};
pub use stats::{describe, descriptive_stats, StatError, StatsError, StatsRow};

/// Mean calendar quarter, 365.25 / 4.
pub const DAYS_PER_QUARTER: f64 = 91.3125;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrateError {
    #[error("need at least 2 price samples, got {0}")]
    TooShort(usize),
    #[error("price series `{name}` has spacing {step}, expected {dt_data}")]
    Spacing {
        name: String,
        step: f64,
        dt_data: f64,
    },
    #[error("need ≥ 3 quarters, got {0}")]
    NeedQuarters(usize),
    #[error("column lengths differ: {0}")]
    Ragged(String),
    #[error("bad quarter label `{0}` (expected e.g. 2010Q1)")]
    BadLabel(String),
    #[error("quarter `{0}` does not follow the previous one")]
    NotIncreasing(String),
    #[error("{column} at {label} must be finite{extra}")]
    BadValue {
        column: &'static str,
        label: String,
        extra: &'static str,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Parses `YYYYQn` into a running quarter count.
pub fn parse_quarter(label: &str) -> Option<i64> {
    let (year, q) = label.trim().split_once(['Q', 'q'])?;
    let year: i64 = year.parse().ok()?;
    let q: i64 = q.parse().ok()?;
    (1..=4).contains(&q).then_some(year * 4 + q - 1)
}

/// Aligned quarterly demand, supply and price columns.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterlySeries {
    labels: Vec<String>,
    demand: Vec<f64>,
    supply: Vec<f64>,
    price: Vec<f64>,
}

impl QuarterlySeries {
    pub fn new(
        labels: Vec<String>,
        demand: Vec<f64>,
        supply: Vec<f64>,
        price: Vec<f64>,
    ) -> Result<Self, CalibrateError> {
        let k = labels.len();
        if demand.len() != k || supply.len() != k || price.len() != k {
            return Err(CalibrateError::Ragged(format!(
                "{k} labels, {} demand, {} supply, {} price",
                demand.len(),
                supply.len(),
                price.len()
            )));
        }
        let mut prev = None;
        for label in &labels {
            let q = parse_quarter(label).ok_or_else(|| CalibrateError::BadLabel(label.clone()))?;
            if prev.is_some_and(|p| q <= p) {
                return Err(CalibrateError::NotIncreasing(label.clone()));
            }
            prev = Some(q);
        }
        for (i, label) in labels.iter().enumerate() {
            let bad = |column, extra| CalibrateError::BadValue {
                column,
                label: label.clone(),
                extra,
            };
            if !(demand[i].is_finite() && demand[i] > 0.0) {
                return Err(bad("demand", " and positive"));
            }
            if !(supply[i].is_finite() && supply[i] > 0.0) {
                return Err(bad("supply", " and positive"));
            }
            if !price[i].is_finite() {
                return Err(bad("price", ""));
            }
        }
        Ok(QuarterlySeries {
            labels,
            demand,
            supply,
            price,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn price(&self) -> &[f64] {
        &self.price
    }

    /// Supply over demand, one value per quarter.
    pub fn ratio(&self) -> Vec<f64> {
        self.supply
            .iter()
            .zip(&self.demand)
            .map(|(s, d)| s / d)
            .collect()
    }

    /// Price as a series in quarter units (step 1).
    pub fn price_series(&self) -> TimeSeries {
        TimeSeries::new("price", "USD/barrel", 0.0, 1.0, self.price.clone()).expect("unit step")
    }
}

/// Forward differences `(P[k+1] - P[k]) / dt_data`.
pub fn pcr_series(price: &TimeSeries, dt_data: f64) -> Result<TimeSeries, CalibrateError> {
    if price.len() < 2 {
        return Err(CalibrateError::TooShort(price.len()));
    }
    if dt_data.is_nan() || dt_data <= 0.0 || (price.step - dt_data).abs() > 1e-9 * dt_data {
        return Err(CalibrateError::Spacing {
            name: price.name.clone(),
            step: price.step,
            dt_data,
        });
    }
    let values = price
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]) / dt_data)
        .collect();
    let units = if price.units.is_empty() {
        "per period".to_string()
    } else {
        format!(
            "{}/period",
            price.units.split('/').next().unwrap_or_default()
        )
    };
    Ok(TimeSeries::new("PCR", units, price.start, dt_data, values).expect("positive step"))
}

/// Euler cumulation of a rate series from `p0`; inverse of [`pcr_series`].
pub fn integrate_pcr(pcr: &TimeSeries, p0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(pcr.len() + 1);
    let mut p = p0;
    out.push(p);
    for r in &pcr.values {
        p += r * pcr.step;
        out.push(p);
    }
    out
}

/// Fits `PCR = alpha1 * TOS/TOD + beta1` per quarter, pairing each quarter's
/// ratio with the price change to the next one.
pub fn calibrate_price_law(data: &QuarterlySeries) -> Result<RegressionFit, CalibrateError> {
    if data.len() < 3 {
        return Err(CalibrateError::NeedQuarters(data.len()));
    }
    let pcr = pcr_series(&data.price_series(), 1.0)?;
    let ratio = data.ratio();
    Ok(fit_polynomial(&ratio[..pcr.len()], &pcr.values, 1)?)
}

/// Rescales a per-quarter fit to per-day coefficients.
pub fn per_day(fit: &RegressionFit) -> (f64, f64) {
    (
        fit.alpha1() / DAYS_PER_QUARTER,
        fit.beta1() / DAYS_PER_QUARTER,
    )
}

/// Statistics for demand, supply, ratio, price and PCR, in that order.
pub fn summary_table(
    data: &QuarterlySeries,
) -> Result<Vec<(&'static str, StatsRow)>, CalibrateError> {
    let pcr = pcr_series(&data.price_series(), 1.0)?;
    Ok(vec![
        ("Demand", describe("demand", data.demand())?),
        ("Supply", describe("supply", data.supply())?),
        ("Ratio", describe("ratio", &data.ratio())?),
        ("Price", describe("price", data.price())?),
        ("PCR", describe("PCR", &pcr.values)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarters(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| format!("{}Q{}", 2010 + i / 4, i % 4 + 1))
            .collect()
    }

    #[test]
    fn pcr_examples() {
        let flat = TimeSeries::new("p", "USD", 0.0, 1.0, vec![100.0; 3]).unwrap();
        assert_eq!(pcr_series(&flat, 1.0).unwrap().values, vec![0.0, 0.0]);
        let jump = TimeSeries::new("p", "USD", 0.0, 1.0, vec![100.0, 107.23]).unwrap();
        assert!((pcr_series(&jump, 1.0).unwrap().values[0] - 7.23).abs() < 1e-12);
        let short = TimeSeries::new("p", "USD", 0.0, 1.0, vec![1.0]).unwrap();
        assert_eq!(pcr_series(&short, 1.0), Err(CalibrateError::TooShort(1)));
        assert!(matches!(
            pcr_series(&jump, 0.5),
            Err(CalibrateError::Spacing { .. })
        ));
    }

    #[test]
    fn quarter_labels() {
        assert_eq!(parse_quarter("2010Q1"), Some(8040));
        assert_eq!(
            parse_quarter("2014Q2").unwrap() - parse_quarter("2010Q1").unwrap(),
            17
        );
        assert_eq!(parse_quarter("2010Q5"), None);
        let err = QuarterlySeries::new(
            vec!["2010Q2".into(), "2010Q1".into()],
            vec![1.0; 2],
            vec![1.0; 2],
            vec![1.0; 2],
        );
        assert_eq!(err, Err(CalibrateError::NotIncreasing("2010Q1".into())));
    }

    #[test]
    fn needs_three_quarters() {
        let q = QuarterlySeries::new(
            quarters(2),
            vec![90.0; 2],
            vec![91.0; 2],
            vec![100.0, 101.0],
        )
        .unwrap();
        let err = calibrate_price_law(&q).unwrap_err();
        assert_eq!(err.to_string(), "need ≥ 3 quarters, got 2");
    }

    #[test]
    fn constant_ratio_is_degenerate() {
        let q = QuarterlySeries::new(
            quarters(5),
            vec![90.0; 5],
            vec![90.0; 5],
            vec![100.0, 103.0, 99.0, 104.0, 101.0],
        )
        .unwrap();
        assert_eq!(
            calibrate_price_law(&q),
            Err(CalibrateError::Fit(FitError::DegenerateX))
        );
    }

    #[test]
    fn recovers_synthetic_law() {
        let ratios = [1.02, 0.98, 1.0, 1.05, 0.97, 1.01, 0.99, 1.03];
        let demand = vec![90.0; ratios.len()];
        let supply: Vec<f64> = ratios.iter().map(|r| r * 90.0).collect();
        let mut price = vec![100.0];
        for k in 0..ratios.len() - 1 {
            let r = supply[k] / demand[k];
            price.push(price[k] + (-50.0 * r + 51.45));
        }
        let q = QuarterlySeries::new(quarters(ratios.len()), demand, supply, price).unwrap();
        let fit = calibrate_price_law(&q).unwrap();
        assert!((fit.alpha1() + 50.0).abs() < 1e-8, "{fit:?}");
        assert!((fit.beta1() - 51.45).abs() < 1e-8, "{fit:?}");
        let (a, b) = per_day(&fit);
        assert!((a * DAYS_PER_QUARTER + 50.0).abs() < 1e-8);
        assert!((b * DAYS_PER_QUARTER - 51.45).abs() < 1e-8);
    }

    #[test]
    fn summary_has_five_rows() {
        let q = QuarterlySeries::new(
            quarters(4),
            vec![88.0, 89.0, 90.0, 91.0],
            vec![89.0, 90.0, 90.5, 92.0],
            vec![80.0, 90.0, 85.0, 95.0],
        )
        .unwrap();
        let table = summary_table(&q).unwrap();
        let names: Vec<_> = table.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, ["Demand", "Supply", "Ratio", "Price", "PCR"]);
        assert_eq!(table[4].1.count, 3);
    }
}
