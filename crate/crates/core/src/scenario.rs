//! Scenario documents and their compiled form, an overlay of timed constant
//! changes applied to a model during a run.

use std::fmt;

use crate::diag::{Diagnostic, Diagnostics, SourceSpan};
use crate::sdcore::{format_number, GridError, Model, TimeGrid};

#[derive(Clone, Debug, PartialEq)]
pub enum EventAction {
    /// From `at` onward the constant takes `value`.
    SetConstant,
    /// Like `SetConstant`, restricted to 0 or 1.
    SwitchDecision,
    /// From `at` onward `value` is added to the constant.
    StepInput,
    /// `value` is added for `duration` days starting at `at`.
    PulseInput { duration: f64 },
}

#[derive(Clone, Debug)]
pub struct Event {
    pub at: f64,
    pub action: EventAction,
    pub target: String,
    pub value: f64,
    pub span: Option<SourceSpan>,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at
            && self.action == other.action
            && self.target == other.target
            && self.value == other.value
    }
}

impl Event {
    pub fn new(at: f64, action: EventAction, target: impl Into<String>, value: f64) -> Self {
        Event {
            at,
            action,
            target: target.into(),
            value,
            span: None,
        }
    }
}

/// Grid settings a scenario may pin; unset fields fall back to the caller's grid.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GridOverrides {
    pub t0: Option<f64>,
    pub horizon: Option<f64>,
    pub dt_internal: Option<f64>,
    pub dt_data: Option<f64>,
}

impl GridOverrides {
    pub fn apply(&self, base: &TimeGrid) -> Result<TimeGrid, GridError> {
        TimeGrid::new(
            self.t0.unwrap_or(base.t0()),
            self.horizon.unwrap_or(base.horizon()),
            self.dt_internal.unwrap_or(base.dt_internal()),
            self.dt_data.unwrap_or(base.dt_data()),
        )
    }

    pub fn is_empty(&self) -> bool {
        *self == GridOverrides::default()
    }
}

/// Constant override applied from the start of the run.
#[derive(Clone, Debug)]
pub struct ParamOverride {
    pub name: String,
    pub value: f64,
    pub span: Option<SourceSpan>,
}

impl PartialEq for ParamOverride {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value
    }
}

/// Event overlay on a model. Events are kept sorted by time (stable).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioDoc {
    pub model: Option<String>,
    pub grid: GridOverrides,
    pub params: Vec<ParamOverride>,
    events: Vec<Event>,
}

impl ScenarioDoc {
    pub fn new() -> Self {
        ScenarioDoc::default()
    }

    pub fn with_model(mut self, path: impl Into<String>) -> Self {
        self.model = Some(path.into());
        self
    }

    pub fn with_grid(mut self, grid: GridOverrides) -> Self {
        self.grid = grid;
        self
    }

    pub fn param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.push(ParamOverride {
            name: name.into(),
            value,
            span: None,
        });
        self
    }

    pub fn event(mut self, event: Event) -> Self {
        self.push_event(event);
        self
    }

    pub fn push_event(&mut self, event: Event) {
        // insert after any event with the same time to keep file order stable
        let pos = self.events.partition_point(|e| e.at <= event.at);
        self.events.insert(pos, event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_identity(&self) -> bool {
        self.params.is_empty() && self.events.is_empty()
    }

    /// Validates the scenario against `model` and `grid` and compiles it.
    pub fn compile(&self, model: &Model, grid: &TimeGrid) -> Result<Overlay, Diagnostics> {
        Overlay::compile(self, model, grid)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Change {
    Set(f64),
    Add(f64),
    Pulse { value: f64, end: usize },
}

/// Scenario compiled against one model and grid: per-step constant values.
#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    base: Vec<f64>,
    /// Per model constant: (first step index, change), sorted by step.
    changes: Vec<Vec<(usize, Change)>>,
    grid: TimeGrid,
    constant_names: Vec<String>,
}

impl Overlay {
    pub fn compile(
        doc: &ScenarioDoc,
        model: &Model,
        grid: &TimeGrid,
    ) -> Result<Overlay, Diagnostics> {
        let mut diags = Vec::new();
        let constant_names: Vec<String> = model
            .constants
            .iter()
            .map(|&i| model.name(i).to_string())
            .collect();
        let slot = |name: &str, span: &Option<SourceSpan>, diags: &mut Vec<Diagnostic>| {
            let pos = constant_names.iter().position(|c| c == name);
            if pos.is_none() {
                let why = if model.contains(name) {
                    format!("`{name}` is not a constant and cannot be changed by a scenario")
                } else {
                    format!("unknown scenario target `{name}`")
                };
                diags.push(
                    Diagnostic::error(why)
                        .with_elements([name])
                        .with_span(span.clone()),
                );
            }
            pos
        };

        let mut base: Vec<f64> = model
            .constants
            .iter()
            .map(|&i| model.constant(model.name(i)).expect("constant"))
            .collect();
        for p in &doc.params {
            if !p.value.is_finite() {
                diags.push(
                    Diagnostic::error(format!("parameter `{}` must be finite", p.name))
                        .with_span(p.span.clone()),
                );
            }
            if let Some(pos) = slot(&p.name, &p.span, &mut diags) {
                base[pos] = p.value;
            }
        }

        let end = grid.t0() + grid.horizon();
        let on_grid = |t: f64| grid.index_of(t).filter(|_| t >= grid.t0() - 1e-9);
        let mut changes: Vec<Vec<(usize, Change)>> = vec![Vec::new(); base.len()];
        for ev in &doc.events {
            let err = |msg: String| Diagnostic::error(msg).with_span(ev.span.clone());
            let pos = slot(&ev.target, &ev.span, &mut diags);
            if !ev.value.is_finite() {
                diags.push(err(format!(
                    "event value for `{}` must be finite",
                    ev.target
                )));
            }
            let Some(k) = on_grid(ev.at) else {
                diags.push(err(format!(
                    "event time {} is not on the simulation grid (t0 = {}, dt = {})",
                    ev.at,
                    grid.t0(),
                    grid.dt_internal()
                )));
                continue;
            };
            if ev.at > end + 1e-9 {
                diags.push(err(format!(
                    "event time {} lies beyond the horizon end {end}",
                    ev.at
                )));
                continue;
            }
            let change = match &ev.action {
                EventAction::SetConstant => Change::Set(ev.value),
                EventAction::SwitchDecision => {
                    if ev.value != 0.0 && ev.value != 1.0 {
                        diags.push(err(format!(
                            "decision switch `{}` must be 0 or 1, got {}",
                            ev.target, ev.value
                        )));
                    }
                    Change::Set(ev.value)
                }
                EventAction::StepInput => Change::Add(ev.value),
                EventAction::PulseInput { duration } => {
                    match grid.index_of(ev.at + duration).filter(|_| *duration >= 0.0) {
                        Some(stop) => Change::Pulse {
                            value: ev.value,
                            end: stop,
                        },
                        None => {
                            diags.push(err(format!(
                                "pulse duration {duration} is not a non-negative multiple of the time step"
                            )));
                            continue;
                        }
                    }
                }
            };
            if let Some(pos) = pos {
                changes[pos].push((k, change));
            }
        }

        if !diags.is_empty() {
            return Err(Diagnostics(diags));
        }
        for list in &mut changes {
            list.sort_by_key(|(k, _)| *k);
        }
        Ok(Overlay {
            base,
            changes,
            grid: *grid,
            constant_names,
        })
    }

    /// Constant values in effect during step `k`, in model constant order.
    pub fn constants_at(&self, k: usize) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.changes)
            .map(|(&base, list)| {
                let mut level = base;
                let mut pulses = 0.0;
                for (_, change) in list.iter().take_while(|(start, _)| *start <= k) {
                    match *change {
                        Change::Set(v) => {
                            level = v;
                            pulses = 0.0;
                        }
                        Change::Add(v) => level += v,
                        Change::Pulse { value, end } if k < end => pulses += value,
                        Change::Pulse { .. } => {}
                    }
                }
                level + pulses
            })
            .collect()
    }

    /// Value of one constant during step `k`.
    pub fn constant_at(&self, name: &str, k: usize) -> Option<f64> {
        let pos = self.constant_names.iter().position(|c| c == name)?;
        Some(self.constants_at(k)[pos])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub(crate) fn fits(&self, model: &Model, grid: &TimeGrid) -> bool {
        self.grid == *grid
            && self.constant_names.len() == model.constants.len()
            && self
                .constant_names
                .iter()
                .zip(&model.constants)
                .all(|(n, &i)| n == model.name(i))
    }
}

impl fmt::Display for EventAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventAction::SetConstant => "set",
            EventAction::SwitchDecision => "switch",
            EventAction::StepInput => "step",
            EventAction::PulseInput { .. } => "pulse",
        })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = format_number(self.at);
        let v = format_number(self.value);
        match &self.action {
            EventAction::SetConstant | EventAction::SwitchDecision => {
                write!(f, "at {at} {} {} = {v}", self.action, self.target)
            }
            EventAction::StepInput => write!(f, "at {at} step {} by {v}", self.target),
            EventAction::PulseInput { duration } => write!(
                f,
                "at {at} pulse {} by {v} for {}",
                self.target,
                format_number(*duration)
            ),
        }
    }
}
