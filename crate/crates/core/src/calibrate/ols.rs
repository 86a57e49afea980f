use thiserror::Error;

use crate::series::TimeSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("x has {x} samples but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("degree {degree} needs at least {needed} samples, got {got}")]
    TooFew {
        degree: usize,
        needed: usize,
        got: usize,
    },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("regressor has zero variance")]
    DegenerateX,
    #[error("normal equations are rank deficient")]
    RankDeficient,
}

/// Least-squares polynomial fit `y = c0 + c1*x + ... + cn*x^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// `c0..=cn`, lowest power first.
    pub coefficients: Vec<f64>,
    /// Square root of the residual sum of squares over `n - (degree + 1)`.
    pub residual_std: f64,
    /// 1 when `y` is constant.
    pub r_squared: f64,
    pub samples: usize,
}

impl RegressionFit {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Slope of a degree-1 fit.
    pub fn alpha1(&self) -> f64 {
        self.coefficients.get(1).copied().unwrap_or(0.0)
    }

    /// Intercept.
    pub fn beta1(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

pub fn ols_fit(x: &TimeSeries, y: &TimeSeries, degree: usize) -> Result<RegressionFit, FitError> {
    fit_polynomial(&x.values, &y.values, degree)
}

/// Fits on `z = (x - mean) / scale` for conditioning, then expands back to
/// powers of `x`.
pub fn fit_polynomial(x: &[f64], y: &[f64], degree: usize) -> Result<RegressionFit, FitError> {
    let n = x.len();
    if n != y.len() {
        return Err(FitError::LengthMismatch { x: n, y: y.len() });
    }
    if n < degree + 2 {
        return Err(FitError::TooFew {
            degree,
            needed: degree + 2,
            got: n,
        });
    }
    if let Some(i) = (0..n).find(|&i| !x[i].is_finite() || !y[i].is_finite()) {
        return Err(FitError::NonFinite(i));
    }

    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let scale = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if scale == 0.0 || scale <= 1e-14 * mean.abs() {
        return Err(FitError::DegenerateX);
    }
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / scale).collect();

    let m = degree + 1;
    // power sums of z up to 2*degree, and moments of y against z^k
    let mut pow_sums = vec![0.0; 2 * degree + 1];
    let mut rhs = vec![0.0; m];
    for (&zi, &yi) in z.iter().zip(y) {
        let mut p = 1.0;
        for (k, s) in pow_sums.iter_mut().enumerate() {
            *s += p;
            if k < m {
                rhs[k] += p * yi;
            }
            p *= zi;
        }
    }
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| pow_sums[i + j]).collect())
        .collect();
    let coef_z = solve(&mut a, rhs).ok_or(FitError::RankDeficient)?;

    // expand sum_k a_k ((x - mean)/scale)^k into powers of x
    let mut coefficients = vec![0.0; m];
    for (k, &ak) in coef_z.iter().enumerate() {
        let ck = ak / scale.powi(k as i32);
        let mut binom = 1.0;
        for (j, c) in coefficients.iter_mut().enumerate().take(k + 1) {
            // term C(k, j) x^j (-mean)^(k-j)
            *c += ck * binom * (-mean).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }

    let y_mean = y.iter().sum::<f64>() / nf;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&zi, &yi) in z.iter().zip(y) {
        let fitted = coef_z.iter().rev().fold(0.0, |acc, c| acc * zi + c);
        ss_res += (yi - fitted).powi(2);
        ss_tot += (yi - y_mean).powi(2);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    let residual_std = (ss_res / (n - m) as f64).sqrt();

    Ok(RegressionFit {
        coefficients,
        residual_std,
        r_squared,
        samples: n,
    })
}

/// Gaussian elimination with partial pivoting. `None` when a pivot vanishes
/// relative to the matrix scale.
fn solve(a: &mut [Vec<f64>], mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    let norm = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * norm {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (top, rest) = a.split_at_mut(row);
                for (x, p) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}
