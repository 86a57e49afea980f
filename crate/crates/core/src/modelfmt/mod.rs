//! Text formats: `.sfm` model files and `.sfs` scenario files.
//!
//! Model grammar:
//!
//! ```text
//! model      := { decl }
//! decl       := stock | flow | aux | const | lookup | delay
//! stock      := "stock" IDENT "=" expr "{" ["in:" idents] ["out:" idents] "}"
//! flow       := "flow" IDENT "=" expr ["[" units "]"]
//! aux        := "aux" IDENT "=" expr ["[" units "]"]
//! const      := "const" IDENT "=" NUMBER
//! lookup     := "lookup" IDENT "=" "[" pair {"," pair} "]"
//! pair       := "(" NUMBER "," NUMBER ")"
//! delay      := "delay" IDENT "=" expr "by" NUMBER
//! ```
//!
//! Expressions use `+ - * /`, comparisons (`< <= > >= == !=`, yielding 1 or
//! 0), unary minus, `t`, `min(a, b)`, `max(a, b)`, `clamp(x, lo, hi)`,
//! `select(cond, a, b)` and lookup application `Table(x)`. `#` starts a
//! comment that runs to the end of the line.
//!
//! Scenario grammar:
//!
//! ```text
//! scenario   := { stmt }
//! stmt       := "model" STRING
//!             | "grid" { ("t0" | "horizon" | "dt" | "data") "=" NUMBER }
//!             | "param" IDENT "=" NUMBER
//!             | "at" NUMBER ("set" | "switch") IDENT "=" NUMBER
//!             | "at" NUMBER "step" IDENT "by" NUMBER
//!             | "at" NUMBER "pulse" IDENT "by" NUMBER "for" NUMBER
//! ```

mod lexer;
mod parser;
mod serialize;

pub use parser::{
    parse_model, parse_model_named, parse_scenario, parse_scenario_named, MAX_EXPR_DEPTH,
};
pub use serialize::{serialize_model, serialize_scenario};
