//! Model representation and the expression evaluator the integrators call.
//!
//! A [`Model`] is an immutable graph of stocks, flows, auxiliaries,
//! constants, lookup tables and pipeline delays. Evaluation order is fixed
//! at build time; cycles are only allowed through stocks or delays with a
//! positive lag.

mod expr;
mod grid;
mod model;
mod state;

pub use expr::{format_number, BinOp, Expr};
pub use grid::{GridError, TimeGrid, DEFAULT_TIME_STEP};
pub use model::{
    build_model, is_valid_identifier, Category, DelayDef, ElementDef, ElementKind, LookupTable,
    Model, RateDef, StockDef, RESERVED_WORDS,
};
pub use state::{delay_read, eval_rhs, eval_variable, EvalError, SimState};
