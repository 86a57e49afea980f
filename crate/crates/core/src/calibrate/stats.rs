use thiserror::Error;

use crate::series::TimeSeries;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StatError {
    #[error("needs at least {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("undefined for a series with zero variance")]
    ZeroVariance,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series `{0}` is empty")]
    Empty(String),
    #[error("series `{name}` has a non-finite value at sample {index}")]
    NonFinite { name: String, index: usize },
}

/// One row of a descriptive statistics table.
///
/// `std` uses the n-1 divisor. `skewness` is the adjusted Fisher-Pearson
/// coefficient `G1 = sqrt(n(n-1))/(n-2) * m3/m2^1.5` and `kurtosis` is the
/// sample excess kurtosis
/// `G2 = (n-1)/((n-2)(n-3)) * ((n+1) * (m4/m2^2 - 3) + 6)`,
/// with `mk` the central moments about the mean (divisor n). These match the
/// spreadsheet `SKEW` and `KURT` functions.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub std: Result<f64, StatError>,
    pub kurtosis: Result<f64, StatError>,
    pub skewness: Result<f64, StatError>,
}

pub fn descriptive_stats(series: &TimeSeries) -> Result<StatsRow, StatsError> {
    describe(&series.name, &series.values)
}

/// Statistics of a plain slice; `name` only labels errors.
pub fn describe(name: &str, values: &[f64]) -> Result<StatsRow, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty(name.to_string()));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite {
            name: name.to_string(),
            index,
        });
    }

    let n = values.len();
    let nf = n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let std = if n < 2 {
        Err(StatError::TooFew { needed: 2, got: n })
    } else {
        Ok((m2 * nf / (nf - 1.0)).sqrt())
    };
    // relative to the data scale so a constant series with rounding noise
    // still counts as degenerate
    let scale = sorted[n - 1].abs().max(sorted[0].abs());
    let flat = m2.sqrt() <= 1e-14 * scale || m2 == 0.0;

    let skewness = if n < 3 {
        Err(StatError::TooFew { needed: 3, got: n })
    } else if flat {
        Err(StatError::ZeroVariance)
    } else {
        Ok((nf * (nf - 1.0)).sqrt() / (nf - 2.0) * m3 / m2.powf(1.5))
    };
    let kurtosis = if n < 4 {
        Err(StatError::TooFew { needed: 4, got: n })
    } else if flat {
        Err(StatError::ZeroVariance)
    } else {
        let g2 = m4 / (m2 * m2) - 3.0;
        Ok((nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0))
    };

    Ok(StatsRow {
        count: n,
        min: sorted[0],
        max: sorted[n - 1],
        mean,
        median,
        std,
        kurtosis,
        skewness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_two_three() {
        let row = describe("x", &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            (row.min, row.max, row.mean, row.median),
            (1.0, 3.0, 2.0, 2.0)
        );
        assert_eq!(row.std, Ok(1.0));
        assert_eq!(row.skewness, Ok(0.0));
        assert_eq!(row.kurtosis, Err(StatError::TooFew { needed: 4, got: 3 }));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let row = describe("c", &[4.2; 4]).unwrap();
        assert_eq!(row.std, Ok(0.0));
        assert_eq!(row.skewness, Err(StatError::ZeroVariance));
        assert_eq!(row.kurtosis, Err(StatError::ZeroVariance));
    }

    #[test]
    fn even_median_and_known_values() {
        // spreadsheet reference: SKEW(1,2,3,10) = 1.76363..., KURT = 3.228
        let row = describe("x", &[10.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(row.median, 2.5);
        let n = 4.0_f64;
        let mean = 4.0;
        let s = ((9.0 + 4.0 + 1.0 + 36.0) / (n - 1.0)).sqrt();
        let z: Vec<f64> = [1.0, 2.0, 3.0, 10.0]
            .iter()
            .map(|v| (v - mean) / s)
            .collect();
        let skew = n / ((n - 1.0) * (n - 2.0)) * z.iter().map(|z| z.powi(3)).sum::<f64>();
        assert!((row.skewness.unwrap() - skew).abs() < 1e-12);
        assert!((row.skewness.unwrap() - 1.763_632_614_8).abs() < 1e-9);
        assert!((row.kurtosis.unwrap() - 3.228).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(describe("e", &[]), Err(StatsError::Empty(_))));
        assert!(matches!(
            describe("e", &[1.0, f64::NAN]),
            Err(StatsError::NonFinite { index: 1, .. })
        ));
        let row = describe("one", &[5.0]).unwrap();
        assert_eq!(row.std, Err(StatError::TooFew { needed: 2, got: 1 }));
    }
}
