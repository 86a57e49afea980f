use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use super::expr::BinOp;
use super::grid::whole_multiple;
use super::model::{ElementKind, Model, Node};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero while evaluating `{element}`")]
    DivisionByZero { element: String },
    #[error("`{element}` evaluated to a non-finite value ({value})")]
    NonFinite { element: String, value: f64 },
    #[error("delay `{element}` lag {lag} is not a multiple of the time step {dt}")]
    LagNotOnGrid { element: String, lag: f64, dt: f64 },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("`{0}` cannot be overridden")]
    NotOverridable(String),
    #[error("step size {step} does not match the delay resolution {resolution} of this state")]
    StepMismatch { step: f64, resolution: f64 },
}

/// Past inputs of one delay block, oldest first; length is lag / Δt.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct DelayLine {
    pub(crate) samples: VecDeque<f64>,
}

/// Mutable state of one run: clock, stock levels, current constant values
/// and delay buffers. Owned by exactly one run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub(crate) t: f64,
    pub(crate) stocks: Vec<f64>,
    pub(crate) constants: Vec<f64>,
    pub(crate) delays: Vec<DelayLine>,
    pub(crate) delay_step: f64,
}

impl SimState {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn stock(&self, model: &Model, name: &str) -> Option<f64> {
        let idx = *model.index.get(name)?;
        let pos = model.stocks.iter().position(|&s| s == idx)?;
        Some(self.stocks[pos])
    }

    pub fn stocks<'m>(&self, model: &'m Model) -> BTreeMap<&'m str, f64> {
        model
            .stocks
            .iter()
            .zip(&self.stocks)
            .map(|(&i, &v)| (model.name(i), v))
            .collect()
    }

    pub fn constant(&self, model: &Model, name: &str) -> Option<f64> {
        let idx = *model.index.get(name)?;
        let pos = model.constants.iter().position(|&c| c == idx)?;
        Some(self.constants[pos])
    }

    /// Sets the current value of a model constant (scenario overlays use this).
    pub fn set_constant(&mut self, model: &Model, name: &str, value: f64) -> Result<(), EvalError> {
        let idx = *model
            .index
            .get(name)
            .ok_or_else(|| EvalError::UnknownName(name.to_string()))?;
        let pos = model
            .constants
            .iter()
            .position(|&c| c == idx)
            .ok_or_else(|| EvalError::NotOverridable(name.to_string()))?;
        self.constants[pos] = value;
        Ok(())
    }

    pub(crate) fn set_stock(
        &mut self,
        model: &Model,
        name: &str,
        value: f64,
    ) -> Result<(), EvalError> {
        let idx = *model
            .index
            .get(name)
            .ok_or_else(|| EvalError::UnknownName(name.to_string()))?;
        let pos = model
            .stocks
            .iter()
            .position(|&s| s == idx)
            .ok_or_else(|| EvalError::NotOverridable(name.to_string()))?;
        self.stocks[pos] = value;
        Ok(())
    }

    /// Number of buffered samples held for the named delay.
    pub fn delay_len(&self, model: &Model, name: &str) -> Option<usize> {
        let idx = *model.index.get(name)?;
        let pos = model.delays.iter().position(|&d| d == idx)?;
        Some(self.delays[pos].samples.len())
    }

    /// Step size the delay buffers were laid out for.
    pub fn delay_step(&self) -> f64 {
        self.delay_step
    }

    pub(crate) fn check_step(&self, dt: f64) -> Result<(), EvalError> {
        let same = (dt - self.delay_step).abs() <= 1e-12 * self.delay_step.abs();
        if self.delays.iter().any(|d| !d.samples.is_empty()) && !same {
            return Err(EvalError::StepMismatch {
                step: dt,
                resolution: self.delay_step,
            });
        }
        Ok(())
    }
}

impl Model {
    /// Initial state at `t0`: constants at their declared values, stocks from
    /// their initial expressions, delay buffers filled with the t0 input.
    /// `dt` fixes the delay buffer resolution.
    pub fn initial_state(&self, t0: f64, dt: f64) -> Result<SimState, EvalError> {
        let constants = self
            .constants
            .iter()
            .map(|&i| match self.elements[i].kind {
                ElementKind::Const(v) => v,
                _ => unreachable!(),
            })
            .collect();
        self.initial_state_with(t0, dt, constants)
    }

    pub(crate) fn initial_state_with(
        &self,
        t0: f64,
        dt: f64,
        constants: Vec<f64>,
    ) -> Result<SimState, EvalError> {
        let mut lags = Vec::with_capacity(self.delays.len());
        for &d in &self.delays {
            let ElementKind::Delay(def) = &self.elements[d].kind else {
                unreachable!()
            };
            let n = if def.lag == 0.0 {
                0
            } else {
                whole_multiple(def.lag, dt).ok_or_else(|| EvalError::LagNotOnGrid {
                    element: self.name(d).to_string(),
                    lag: def.lag,
                    dt,
                })?
            };
            lags.push(n);
        }

        let mut values = vec![f64::NAN; self.elements.len()];
        for (&c, &v) in self.constants.iter().zip(&constants) {
            values[c] = v;
        }
        for &i in &self.init_order {
            values[i] = self.eval_element(i, t0, &values)?;
        }

        let stocks = self.stocks.iter().map(|&s| values[s]).collect();
        let delays = self
            .delays
            .iter()
            .zip(lags)
            .map(|(&d, n)| DelayLine {
                samples: std::iter::repeat_n(values[d], n).collect(),
            })
            .collect();
        Ok(SimState {
            t: t0,
            stocks,
            constants,
            delays,
            delay_step: dt,
        })
    }

    /// Evaluates every variable at the given clock and stock levels, reading
    /// delays from the state's buffers. Returns values indexed like `elements`.
    pub(crate) fn evaluate(
        &self,
        state: &SimState,
        t: f64,
        stocks: &[f64],
    ) -> Result<Vec<f64>, EvalError> {
        let mut values = vec![f64::NAN; self.elements.len()];
        for (&c, &v) in self.constants.iter().zip(&state.constants) {
            values[c] = v;
        }
        for (&s, &v) in self.stocks.iter().zip(stocks) {
            values[s] = v;
        }
        for (&d, line) in self.delays.iter().zip(&state.delays) {
            if let Some(&front) = line.samples.front() {
                values[d] = front;
            }
        }
        for &i in &self.run_order {
            values[i] = self.eval_element(i, t, &values)?;
        }
        Ok(values)
    }

    /// Net rate per stock (inflows minus outflows) from evaluated values.
    pub(crate) fn net_rates(&self, values: &[f64]) -> Vec<f64> {
        self.stock_flows
            .iter()
            .map(|(ins, outs)| {
                let inflow: f64 = ins.iter().map(|&f| values[f]).sum();
                let outflow: f64 = outs.iter().map(|&f| values[f]).sum();
                inflow - outflow
            })
            .collect()
    }

    /// Current input value of every delay, in `delays` order, given values
    /// from [`Model::evaluate`] at the same instant.
    pub(crate) fn delay_inputs(&self, t: f64, values: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.delays
            .iter()
            .map(|&d| match &self.elements[d].kind {
                // zero-lag delays were evaluated in run order
                ElementKind::Delay(def) if def.lag == 0.0 => Ok(values[d]),
                _ => self.eval_element(d, t, values),
            })
            .collect()
    }

    fn eval_element(&self, i: usize, t: f64, values: &[f64]) -> Result<f64, EvalError> {
        let node = self.nodes[i].as_ref().expect("element has an expression");
        let v = self.eval_node(node, t, values, i)?;
        if !v.is_finite() {
            return Err(EvalError::NonFinite {
                element: self.name(i).to_string(),
                value: v,
            });
        }
        Ok(v)
    }

    fn eval_node(
        &self,
        node: &Node,
        t: f64,
        values: &[f64],
        owner: usize,
    ) -> Result<f64, EvalError> {
        let ev = |n: &Node| self.eval_node(n, t, values, owner);
        Ok(match node {
            Node::Num(v) => *v,
            Node::Slot(i) => values[*i],
            Node::Time => t,
            Node::Neg(a) => -ev(a)?,
            Node::Bin(op, a, b) => {
                let (a, b) = (ev(a)?, ev(b)?);
                let flag = |c: bool| if c { 1.0 } else { 0.0 };
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero {
                                element: self.name(owner).to_string(),
                            });
                        }
                        a / b
                    }
                    BinOp::Lt => flag(a < b),
                    BinOp::Le => flag(a <= b),
                    BinOp::Gt => flag(a > b),
                    BinOp::Ge => flag(a >= b),
                    BinOp::Eq => flag(a == b),
                    BinOp::Ne => flag(a != b),
                }
            }
            Node::Lookup(table, a) => {
                let ElementKind::Lookup(tbl) = &self.elements[*table].kind else {
                    unreachable!()
                };
                tbl.eval(ev(a)?)
            }
            Node::Min(a, b) => ev(a)?.min(ev(b)?),
            Node::Max(a, b) => ev(a)?.max(ev(b)?),
            Node::Clamp(x, lo, hi) => {
                let (x, lo, hi) = (ev(x)?, ev(lo)?, ev(hi)?);
                x.max(lo).min(hi)
            }
            Node::Select(c, a, b) => {
                if ev(c)? != 0.0 {
                    ev(a)?
                } else {
                    ev(b)?
                }
            }
        })
    }
}

/// Net rate of every stock at the state's time and levels.
///
/// `overrides` may replace stock levels, constants, or the clock (`t`) for
/// this evaluation only.
pub fn eval_rhs(
    model: &Model,
    state: &SimState,
    overrides: Option<&HashMap<String, f64>>,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let mut shifted;
    let mut st = state;
    if let Some(over) = overrides.filter(|o| !o.is_empty()) {
        shifted = state.clone();
        for (name, &value) in over {
            if name == "t" {
                shifted.t = value;
            } else if shifted.set_stock(model, name, value).is_err() {
                shifted.set_constant(model, name, value)?;
            }
        }
        st = &shifted;
    }
    let values = model.evaluate(st, st.t, &st.stocks)?;
    let rates = model.net_rates(&values);
    Ok(model
        .stocks
        .iter()
        .zip(rates)
        .map(|(&i, r)| (model.name(i).to_string(), r))
        .collect())
}

/// Current value of any non-lookup element (stocks, constants, auxiliaries,
/// flows, delays) at the state's time.
pub fn eval_variable(model: &Model, state: &SimState, name: &str) -> Result<f64, EvalError> {
    let idx = *model
        .index
        .get(name)
        .ok_or_else(|| EvalError::UnknownName(name.to_string()))?;
    if matches!(model.elements[idx].kind, ElementKind::Lookup(_)) {
        return Err(EvalError::UnknownName(name.to_string()));
    }
    let values = model.evaluate(state, state.t, &state.stocks)?;
    Ok(values[idx])
}

/// Output of a delay block: its input lagged by `lag`, or the t0 input while
/// `t < t0 + lag`.
pub fn delay_read(model: &Model, name: &str, state: &SimState) -> Result<f64, EvalError> {
    match model.get(name).map(|e| &e.kind) {
        Some(ElementKind::Delay(_)) => eval_variable(model, state, name),
        _ => Err(EvalError::UnknownName(name.to_string())),
    }
}
