use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series `{0}` needs a finite, positive sample spacing")]
    BadStep(String),
    #[error("series `{name}` is not uniformly spaced (sample {index})")]
    NonUniform { name: String, index: usize },
    #[error("series `{name}` has {times} timestamps but {values} values")]
    LengthMismatch {
        name: String,
        times: usize,
        values: usize,
    },
}

/// Uniformly sampled, named numeric sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub units: String,
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        units: impl Into<String>,
        start: f64,
        step: f64,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let name = name.into();
        if !(step.is_finite() && step > 0.0) {
            return Err(SeriesError::BadStep(name));
        }
        Ok(TimeSeries {
            name,
            units: units.into(),
            start,
            step,
            values,
        })
    }

    /// Builds a series from explicit timestamps, which must be evenly spaced.
    pub fn from_samples(
        name: impl Into<String>,
        units: impl Into<String>,
        times: &[f64],
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let name = name.into();
        if times.len() != values.len() {
            return Err(SeriesError::LengthMismatch {
                name,
                times: times.len(),
                values: values.len(),
            });
        }
        let step = match times {
            [a, b, ..] => b - a,
            _ => 1.0,
        };
        let start = times.first().copied().unwrap_or(0.0);
        for (i, pair) in times.windows(2).enumerate() {
            let gap = pair[1] - pair[0];
            if (gap - step).abs() > 1e-9 * step.abs().max(1.0) {
                return Err(SeriesError::NonUniform { name, index: i + 1 });
            }
        }
        TimeSeries::new(name, units, start, step, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.time_at(k))
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_samples() {
        let s =
            TimeSeries::from_samples("p", "USD", &[0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.step, 0.5);
        assert_eq!(s.times().collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn non_uniform_rejected() {
        let err = TimeSeries::from_samples("p", "USD", &[0.0, 1.0, 3.0], vec![1.0; 3]).unwrap_err();
        assert_eq!(
            err,
            SeriesError::NonUniform {
                name: "p".into(),
                index: 2
            }
        );
    }
}
