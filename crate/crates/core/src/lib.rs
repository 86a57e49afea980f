//! Stock-and-flow simulation toolkit.
//!
//! - [`sdcore`]: model graph, expressions, evaluation.
//! - [`integrate`]: fixed-step Euler and RK4 runs.
//! - [`modelfmt`]: `.sfm` model and `.sfs` scenario text formats.
//! - [`scenario`]: timed constant overlays.
//! - [`calibrate`]: price-change-rate regression and descriptive statistics.
//! - [`oilmarket`]: the oil-price main loop and its scenario experiments.

pub mod calibrate;
pub mod diag;
pub mod integrate;
pub mod modelfmt;
pub mod oilmarket;
pub mod scenario;
pub mod sdcore;
pub mod series;

pub use diag::{Diagnostic, Diagnostics, Severity, SourceSpan};
pub use integrate::{simulate, IntegratorKind, SimError, Simulation, Trajectory};
pub use scenario::{Event, EventAction, Overlay, ScenarioDoc};
pub use sdcore::{build_model, Expr, Model, SimState, TimeGrid};
pub use series::TimeSeries;
