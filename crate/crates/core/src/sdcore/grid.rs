use thiserror::Error;

/// Default internal simulation step, in days.
pub const DEFAULT_TIME_STEP: f64 = 0.0625;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("{name} must be finite and positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("t0 must be finite, got {0}")]
    BadStart(f64),
    #[error("{what} ({numerator}) is not an integer multiple of the time step ({step})")]
    NotMultiple {
        what: &'static str,
        numerator: f64,
        step: f64,
    },
}

/// Simulation clock: start, horizon, internal step and data resolution (days).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    horizon: f64,
    dt_internal: f64,
    dt_data: f64,
    steps: usize,
    data_stride: usize,
}

/// Returns `n` when `value / step` is within round-off of the positive integer `n`.
pub(crate) fn whole_multiple(value: f64, step: f64) -> Option<usize> {
    let ratio = value / step;
    let n = ratio.round();
    if n >= 0.0 && (ratio - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

impl TimeGrid {
    pub fn new(t0: f64, horizon: f64, dt_internal: f64, dt_data: f64) -> Result<Self, GridError> {
        if !t0.is_finite() {
            return Err(GridError::BadStart(t0));
        }
        for (name, value) in [
            ("horizon", horizon),
            ("dt_internal", dt_internal),
            ("dt_data", dt_data),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GridError::NotPositive { name, value });
            }
        }
        let steps = whole_multiple(horizon, dt_internal).ok_or(GridError::NotMultiple {
            what: "horizon",
            numerator: horizon,
            step: dt_internal,
        })?;
        let data_stride = whole_multiple(dt_data, dt_internal)
            .filter(|&n| n > 0)
            .ok_or(GridError::NotMultiple {
                what: "data resolution",
                numerator: dt_data,
                step: dt_internal,
            })?;
        Ok(TimeGrid {
            t0,
            horizon,
            dt_internal,
            dt_data,
            steps,
            data_stride,
        })
    }

    /// Grid starting at 0 with the default step and a one-day data resolution.
    pub fn days(horizon: f64) -> Result<Self, GridError> {
        TimeGrid::new(0.0, horizon, DEFAULT_TIME_STEP, 1.0)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt_internal(&self) -> f64 {
        self.dt_internal
    }

    pub fn dt_data(&self) -> f64 {
        self.dt_data
    }

    /// Number of internal steps; a trajectory has `steps() + 1` samples.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Internal steps per data sample (δt / Δt).
    pub fn data_stride(&self) -> usize {
        self.data_stride
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt_internal
    }

    pub fn end(&self) -> f64 {
        self.time_at(self.steps)
    }

    /// Step index of `t` when it lies on the grid (not necessarily within the horizon).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        whole_multiple(t - self.t0, self.dt_internal)
    }
}
