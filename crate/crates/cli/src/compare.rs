//! Simulated versus reference trajectories.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("{0} series is empty")]
    Empty(&'static str),
    #[error(
        "simulation [{sim_start}, {sim_end}] and reference [{ref_start}, {ref_end}] do not overlap"
    )]
    NoOverlap {
        sim_start: f64,
        sim_end: f64,
        ref_start: f64,
        ref_end: f64,
    },
    #[error("{0} times and values differ in length")]
    Ragged(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rmse: f64,
    pub max_abs_error: f64,
    /// Share of reference intervals over which both series move the same way.
    pub trend_sign_agreement: f64,
    /// Simulation samples compared.
    pub samples: usize,
    /// Reference intervals used for the trend agreement.
    pub intervals: usize,
}

impl ComparisonReport {
    pub fn rows(&self) -> [(&'static str, String); 5] {
        [
            ("rmse", self.rmse.to_string()),
            ("max_abs_error", self.max_abs_error.to_string()),
            (
                "trend_sign_agreement",
                self.trend_sign_agreement.to_string(),
            ),
            ("samples", self.samples.to_string()),
            ("intervals", self.intervals.to_string()),
        ]
    }
}

const EPS: f64 = 1e-9;

/// Index of the last sample at or before `t`.
fn preceding(times: &[f64], t: f64) -> Option<usize> {
    times.partition_point(|&s| s <= t + EPS).checked_sub(1)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Errors are taken at every simulation time inside the reference's span,
/// reading the reference as a step function (nearest preceding sample).
/// Trend agreement walks consecutive reference samples and compares their
/// change with the simulated change over the same interval.
pub fn compare(
    sim_t: &[f64],
    sim: &[f64],
    ref_t: &[f64],
    reference: &[f64],
) -> Result<ComparisonReport, CompareError> {
    if sim_t.len() != sim.len() {
        return Err(CompareError::Ragged("simulation"));
    }
    if ref_t.len() != reference.len() {
        return Err(CompareError::Ragged("reference"));
    }
    let (Some(&s0), Some(&s1)) = (sim_t.first(), sim_t.last()) else {
        return Err(CompareError::Empty("simulation"));
    };
    let (Some(&r0), Some(&r1)) = (ref_t.first(), ref_t.last()) else {
        return Err(CompareError::Empty("reference"));
    };
    let no_overlap = CompareError::NoOverlap {
        sim_start: s0,
        sim_end: s1,
        ref_start: r0,
        ref_end: r1,
    };

    let mut sq = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut samples = 0;
    for (&t, &v) in sim_t.iter().zip(sim) {
        if t < r0 - EPS || t > r1 + EPS {
            continue;
        }
        let r = reference[preceding(ref_t, t).expect("t is past the first reference time")];
        let e = v - r;
        sq += e * e;
        max_abs = max_abs.max(e.abs());
        samples += 1;
    }
    if samples == 0 {
        return Err(no_overlap);
    }

    let mut agree = 0;
    let mut intervals = 0;
    for i in 0..ref_t.len() - 1 {
        let (a, b) = (ref_t[i], ref_t[i + 1]);
        if a < s0 - EPS || b > s1 + EPS {
            continue;
        }
        let (Some(ia), Some(ib)) = (preceding(sim_t, a), preceding(sim_t, b)) else {
            continue;
        };
        intervals += 1;
        if sign(sim[ib] - sim[ia]) == sign(reference[i + 1] - reference[i]) {
            agree += 1;
        }
    }
    let trend_sign_agreement = if intervals == 0 {
        1.0
    } else {
        agree as f64 / intervals as f64
    };

    Ok(ComparisonReport {
        rmse: (sq / samples as f64).sqrt(),
        max_abs_error: max_abs,
        trend_sign_agreement,
        samples,
        intervals,
    })
}
