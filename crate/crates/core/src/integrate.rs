//! Fixed-step Euler and classical fourth-order Runge-Kutta integration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scenario::Overlay;
use crate::sdcore::{ElementKind, EvalError, Model, SimState, TimeGrid};
use crate::series::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum IntegratorKind {
    Euler,
    #[default]
    Rk4,
}

impl FromStr for IntegratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(IntegratorKind::Euler),
            "rk4" => Ok(IntegratorKind::Rk4),
            other => Err(format!(
                "unknown integrator `{other}` (expected euler or rk4)"
            )),
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntegratorKind::Euler => "euler",
            IntegratorKind::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("step {step} (t = {time}): {error}")]
    Eval {
        step: usize,
        time: f64,
        error: EvalError,
    },
    #[error("cannot record `{0}`: no such variable")]
    UnknownVariable(String),
    #[error("step size must be finite and positive, got {0}")]
    BadStep(f64),
    #[error("overlay was compiled for a different model or grid")]
    OverlayMismatch,
}

impl SimError {
    /// Name of the model element that failed to evaluate, if any.
    pub fn element(&self) -> Option<&str> {
        match self {
            SimError::Eval {
                error:
                    EvalError::DivisionByZero { element }
                    | EvalError::NonFinite { element, .. }
                    | EvalError::LagNotOnGrid { element, .. },
                ..
            } => Some(element),
            _ => None,
        }
    }
}

/// Recorded series of a run; sample `k` of each series is at `t0 + k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub series: BTreeMap<String, TimeSeries>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.grid.steps())
            .map(|k| self.grid.time_at(k))
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&TimeSeries> {
        self.series.get(name)
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.series.get(name).map(|s| s.values.as_slice())
    }
}

fn check_dt(dt: f64) -> Result<(), EvalError> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(EvalError::StepMismatch {
            step: dt,
            resolution: f64::NAN,
        })
    }
}

/// Moves each delay line forward one sample, appending the current inputs.
fn advance_delays(model: &Model, state: &mut SimState, values: &[f64]) -> Result<(), EvalError> {
    if state.delays.iter().all(|d| d.samples.is_empty()) {
        return Ok(());
    }
    let inputs = model.delay_inputs(state.t, values)?;
    for (line, u) in state.delays.iter_mut().zip(inputs) {
        if !line.samples.is_empty() {
            line.samples.pop_front();
            line.samples.push_back(u);
        }
    }
    Ok(())
}

fn euler_from(
    model: &Model,
    state: &SimState,
    values: &[f64],
    dt: f64,
) -> Result<SimState, EvalError> {
    let rates = model.net_rates(values);
    let mut next = state.clone();
    for (y, r) in next.stocks.iter_mut().zip(rates) {
        *y += dt * r;
    }
    advance_delays(model, &mut next, values)?;
    next.t = state.t + dt;
    Ok(next)
}

fn rk4_from(
    model: &Model,
    state: &SimState,
    values: &[f64],
    dt: f64,
) -> Result<SimState, EvalError> {
    let y = &state.stocks;
    let t = state.t;
    let shifted =
        |r: &[f64], w: f64| -> Vec<f64> { y.iter().zip(r).map(|(y, r)| y + w * r).collect() };
    let scaled = |rates: Vec<f64>| -> Vec<f64> { rates.into_iter().map(|f| dt * f).collect() };

    // delay lines stay frozen at their step-start contents for every stage
    let r1 = scaled(model.net_rates(values));
    let r2 = scaled(model.net_rates(&model.evaluate(state, t + 0.5 * dt, &shifted(&r1, 0.5))?));
    let r3 = scaled(model.net_rates(&model.evaluate(state, t + 0.5 * dt, &shifted(&r2, 0.5))?));
    let r4 = scaled(model.net_rates(&model.evaluate(state, t + dt, &shifted(&r3, 1.0))?));

    let mut next = state.clone();
    for (i, yi) in next.stocks.iter_mut().enumerate() {
        *yi += (r1[i] + 2.0 * r2[i] + 2.0 * r3[i] + r4[i]) / 6.0;
    }
    advance_delays(model, &mut next, values)?;
    next.t = t + dt;
    Ok(next)
}

/// One explicit Euler step: `y + dt * f(t, y)`.
pub fn euler_step(model: &Model, state: &SimState, dt: f64) -> Result<SimState, EvalError> {
    check_dt(dt)?;
    state.check_step(dt)?;
    let values = model.evaluate(state, state.t, &state.stocks)?;
    euler_from(model, state, &values, dt)
}

/// One classical Runge-Kutta step with stage weights 1, 2, 2, 1 over 6.
pub fn rk4_step(model: &Model, state: &SimState, dt: f64) -> Result<SimState, EvalError> {
    check_dt(dt)?;
    state.check_step(dt)?;
    let values = model.evaluate(state, state.t, &state.stocks)?;
    rk4_from(model, state, &values, dt)
}

/// Runs `model` over `grid`, recording every stock plus the names in `record`.
pub fn simulate(
    model: &Model,
    grid: &TimeGrid,
    kind: IntegratorKind,
    record: &[&str],
) -> Result<Trajectory, SimError> {
    Simulation::new(model, *grid)
        .integrator(kind)
        .record(record)
        .run()
}

/// Configurable run of one model on one grid.
pub struct Simulation<'a> {
    model: &'a Model,
    grid: TimeGrid,
    kind: IntegratorKind,
    record: Vec<String>,
    overlay: Option<&'a Overlay>,
}

impl<'a> Simulation<'a> {
    pub fn new(model: &'a Model, grid: TimeGrid) -> Self {
        Simulation {
            model,
            grid,
            kind: IntegratorKind::default(),
            record: Vec::new(),
            overlay: None,
        }
    }

    pub fn integrator(mut self, kind: IntegratorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn record<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.record = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn overlay(mut self, overlay: &'a Overlay) -> Self {
        self.overlay = Some(overlay);
        self
    }

    pub fn run(self) -> Result<Trajectory, SimError> {
        let model = self.model;
        let grid = self.grid;
        let dt = grid.dt_internal();

        let mut names: Vec<String> = model.stock_names().iter().map(|s| s.to_string()).collect();
        for name in &self.record {
            if !model.is_variable(name) {
                return Err(SimError::UnknownVariable(name.clone()));
            }
            if !names.contains(name) {
                names.push(name.clone());
            }
        }
        let slots: Vec<usize> = names.iter().map(|n| model.index[n]).collect();

        let at_step = |k: usize, error: EvalError| SimError::Eval {
            step: k,
            time: grid.time_at(k),
            error,
        };

        let constants = match self.overlay {
            Some(ov) => {
                if !ov.fits(model, &grid) {
                    return Err(SimError::OverlayMismatch);
                }
                ov.constants_at(0)
            }
            None => model
                .constants
                .iter()
                .map(|&i| match model.elements[i].kind {
                    ElementKind::Const(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        };
        let mut state = model
            .initial_state_with(grid.t0(), dt, constants)
            .map_err(|e| at_step(0, e))?;

        let n = grid.steps();
        let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n + 1); names.len()];
        for k in 0..=n {
            if let Some(ov) = self.overlay {
                if k > 0 {
                    state.constants = ov.constants_at(k);
                }
            }
            let values = model
                .evaluate(&state, state.t, &state.stocks)
                .map_err(|e| at_step(k, e))?;
            for (col, &slot) in columns.iter_mut().zip(&slots) {
                col.push(values[slot]);
            }
            if k == n {
                break;
            }
            let mut next = match self.kind {
                IntegratorKind::Euler => euler_from(model, &state, &values, dt),
                IntegratorKind::Rk4 => rk4_from(model, &state, &values, dt),
            }
            .map_err(|e| at_step(k, e))?;
            next.t = grid.time_at(k + 1);
            state = next;
        }

        let series = names
            .into_iter()
            .zip(columns)
            .map(|(name, values)| {
                let units = match &model.get(&name).map(|e| &e.kind) {
                    Some(ElementKind::Flow(r)) | Some(ElementKind::Aux(r)) => {
                        r.units.clone().unwrap_or_default()
                    }
                    _ => String::new(),
                };
                let ts = TimeSeries::new(name.clone(), units, grid.t0(), dt, values)
                    .expect("grid step is positive");
                (name, ts)
            })
            .collect();
        Ok(Trajectory { grid, series })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LipschitzError {
    #[error("need at least 2 samples and a positive span")]
    BadSampling,
    #[error("`{0}` is not a stock")]
    NotAStock(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Largest observed `|f(y') - f(y)| / |y' - y|` over `samples` evenly spaced
/// perturbations `y'` in `[y - span, y + span]` of one stock, all other state
/// held fixed. A lower bound on the local Lipschitz constant.
pub fn estimate_lipschitz(
    model: &Model,
    state: &SimState,
    stock: &str,
    span: f64,
    samples: usize,
) -> Result<f64, LipschitzError> {
    if samples < 2 || !(span.is_finite() && span > 0.0) {
        return Err(LipschitzError::BadSampling);
    }
    let pos = model
        .index
        .get(stock)
        .and_then(|idx| model.stocks.iter().position(|s| s == idx))
        .ok_or_else(|| LipschitzError::NotAStock(stock.to_string()))?;

    let rate_at = |y: &[f64]| -> Result<f64, EvalError> {
        let values = model.evaluate(state, state.t, y)?;
        Ok(model.net_rates(&values)[pos])
    };
    let base = rate_at(&state.stocks)?;
    let y0 = state.stocks[pos];
    let mut best = 0.0_f64;
    let mut y = state.stocks.clone();
    for i in 0..samples {
        let offset = -span + 2.0 * span * i as f64 / (samples - 1) as f64;
        y[pos] = y0 + offset;
        let dy = y[pos] - y0;
        if dy == 0.0 {
            continue;
        }
        let df = rate_at(&y)? - base;
        best = best.max((df / dy).abs());
    }
    Ok(best)
}
