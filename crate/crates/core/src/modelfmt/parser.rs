use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use crate::diag::{Diagnostic, Diagnostics, SourceSpan};
use crate::scenario::{Event, EventAction, ParamOverride, ScenarioDoc};
use crate::sdcore::{
    build_model, is_valid_identifier, BinOp, DelayDef, ElementDef, ElementKind, Expr, LookupTable,
    Model, RateDef, StockDef,
};

/// Deepest expression tree the parser accepts.
pub const MAX_EXPR_DEPTH: usize = 200;

const DECL_KEYWORDS: &[&str] = &["stock", "flow", "aux", "const", "lookup", "delay"];
const SCENARIO_KEYWORDS: &[&str] = &["model", "grid", "param", "at"];

struct Parser<'s> {
    src: &'s str,
    file: Arc<str>,
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

/// Marker for a diagnostic already recorded; the caller resynchronizes.
struct Reported;

type PResult<T> = Result<T, Reported>;

impl<'s> Parser<'s> {
    fn new(src: &'s str, file: &str) -> Self {
        let file: Arc<str> = Arc::from(file);
        let (toks, diags) = tokenize(src, &file);
        Parser {
            src,
            file,
            toks,
            pos: 0,
            diags,
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek().tok, Tok::Punct(q) if q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    /// Records an error about the current token. When the token is the end
    /// of input or sits on a later line, the error points just past the
    /// previous token instead.
    fn error_here(&mut self, msg: impl Into<String>) -> Reported {
        let cur = self.peek();
        let span = match self.pos.checked_sub(1).map(|p| &self.toks[p]) {
            Some(prev) if cur.tok == Tok::Eof || cur.line > prev.line => prev.after(&self.file),
            _ => cur.span(&self.file),
        };
        self.diags
            .push(Diagnostic::error(msg.into()).with_span(Some(span)));
        Reported
    }

    fn expected(&mut self, what: &str) -> Reported {
        let found = self.peek().describe();
        self.error_here(format!("expected {what}, found {found}"))
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        if self.is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.expected(&format!("`{p}`")))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<Token> {
        if self.is_word(w) {
            Ok(self.bump())
        } else {
            Err(self.expected(&format!("`{w}`")))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Ident(name) if is_valid_identifier(name) => {
                let name = name.clone();
                let t = self.bump();
                Ok((name, t.span(&self.file)))
            }
            Tok::Ident(name) => {
                let msg = format!("`{name}` is a reserved word and cannot be used as a name");
                Err(self.error_here(msg))
            }
            _ => Err(self.expected("identifier")),
        }
    }

    /// Number with an optional leading minus sign.
    fn expect_number(&mut self) -> PResult<f64> {
        let negative = self.is_punct("-");
        if negative {
            self.bump();
        }
        match self.peek().tok {
            Tok::Number(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.expected("number")),
        }
    }

    fn skip_to(&mut self, keywords: &[&str]) {
        while !self.at_eof() {
            if let Tok::Ident(w) = &self.peek().tok {
                if keywords.contains(&w.as_str()) {
                    return;
                }
            }
            self.bump();
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<(Expr, usize)> {
        self.nested(0)
    }

    fn combine(
        &mut self,
        op: BinOp,
        lhs: (Expr, usize),
        rhs: (Expr, usize),
    ) -> PResult<(Expr, usize)> {
        let depth = 1 + lhs.1.max(rhs.1);
        if depth > MAX_EXPR_DEPTH {
            return Err(self.error_here(format!(
                "expression is nested more than {MAX_EXPR_DEPTH} levels deep"
            )));
        }
        Ok((Expr::binary(op, lhs.0, rhs.0), depth))
    }

    fn unary(&mut self, nesting: usize) -> PResult<(Expr, usize)> {
        if nesting > MAX_EXPR_DEPTH {
            return Err(self.error_here(format!(
                "expression is nested more than {MAX_EXPR_DEPTH} levels deep"
            )));
        }
        if self.is_punct("-") {
            self.bump();
            let (inner, depth) = self.unary(nesting + 1)?;
            return Ok(match inner {
                Expr::Num(v) => (Expr::Num(-v), depth),
                other => (Expr::Neg(Box::new(other)), depth + 1),
            });
        }
        self.primary(nesting)
    }

    fn nested(&mut self, nesting: usize) -> PResult<(Expr, usize)> {
        if nesting > MAX_EXPR_DEPTH {
            return Err(self.error_here(format!(
                "expression is nested more than {MAX_EXPR_DEPTH} levels deep"
            )));
        }
        let mut lhs = self.additive(nesting)?;
        loop {
            let op = match self.peek().tok {
                Tok::Punct("<") => BinOp::Lt,
                Tok::Punct("<=") => BinOp::Le,
                Tok::Punct(">") => BinOp::Gt,
                Tok::Punct(">=") => BinOp::Ge,
                Tok::Punct("==") => BinOp::Eq,
                Tok::Punct("!=") => BinOp::Ne,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.additive(nesting)?;
            lhs = self.combine(op, lhs, rhs)?;
        }
    }

    fn additive(&mut self, nesting: usize) -> PResult<(Expr, usize)> {
        let mut lhs = self.multiplicative(nesting)?;
        loop {
            let op = match self.peek().tok {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative(nesting)?;
            lhs = self.combine(op, lhs, rhs)?;
        }
    }

    fn multiplicative(&mut self, nesting: usize) -> PResult<(Expr, usize)> {
        let mut lhs = self.unary(nesting)?;
        loop {
            let op = match self.peek().tok {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary(nesting)?;
            lhs = self.combine(op, lhs, rhs)?;
        }
    }

    fn args(&mut self, n: usize, nesting: usize) -> PResult<(Vec<Expr>, usize)> {
        self.expect_punct("(")?;
        let mut out = Vec::with_capacity(n);
        let mut depth = 0;
        for i in 0..n {
            if i > 0 {
                self.expect_punct(",")?;
            }
            let (e, d) = self.nested(nesting + 1)?;
            depth = depth.max(d);
            out.push(e);
        }
        self.expect_punct(")")?;
        Ok((out, depth + 1))
    }

    fn primary(&mut self, nesting: usize) -> PResult<(Expr, usize)> {
        let tok = self.peek().tok.clone();
        match tok {
            Tok::Number(v) => {
                self.bump();
                Ok((Expr::Num(v), 1))
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.nested(nesting + 1)?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let arity = match name.as_str() {
                    "t" => {
                        self.bump();
                        return Ok((Expr::Time, 1));
                    }
                    "min" | "max" => 2,
                    "clamp" | "select" => 3,
                    _ if is_valid_identifier(&name) => {
                        self.bump();
                        if self.is_punct("(") {
                            let (mut a, d) = self.args(1, nesting)?;
                            return Ok((Expr::Lookup(name, Box::new(a.remove(0))), d));
                        }
                        return Ok((Expr::Var(name), 1));
                    }
                    _ => return Err(self.expected("expression")),
                };
                self.bump();
                let (a, d) = self.args(arity, nesting)?;
                let mut it = a.into_iter().map(Box::new);
                let mut next = || it.next().expect("arity checked");
                let e = match name.as_str() {
                    "min" => Expr::Min(next(), next()),
                    "max" => Expr::Max(next(), next()),
                    "clamp" => Expr::Clamp(next(), next(), next()),
                    _ => Expr::Select(next(), next(), next()),
                };
                Ok((e, d))
            }
            _ => Err(self.expected("expression")),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.expect_ident()?.0];
        while self.is_punct(",") {
            self.bump();
            out.push(self.expect_ident()?.0);
        }
        Ok(out)
    }

    // ---- model declarations ----

    fn declaration(&mut self) -> PResult<ElementDef> {
        let kw = match &self.peek().tok {
            Tok::Ident(w) if DECL_KEYWORDS.contains(&w.as_str()) => w.clone(),
            _ => {
                return Err(self.expected("declaration (stock, flow, aux, const, lookup or delay)"))
            }
        };
        self.bump();
        let (name, span) = self.expect_ident()?;
        self.expect_punct("=")?;
        let kind = match kw.as_str() {
            "stock" => {
                let (initial, _) = self.expr()?;
                self.expect_punct("{")?;
                let mut inflows = Vec::new();
                let mut outflows = Vec::new();
                if self.is_word("in") {
                    self.bump();
                    self.expect_punct(":")?;
                    inflows = self.ident_list()?;
                }
                if self.is_word("out") {
                    self.bump();
                    self.expect_punct(":")?;
                    outflows = self.ident_list()?;
                }
                self.expect_punct("}")?;
                ElementKind::Stock(StockDef {
                    initial,
                    inflows,
                    outflows,
                })
            }
            "flow" | "aux" => {
                let (expr, _) = self.expr()?;
                let units = if self.is_punct("[") {
                    let open = self.bump();
                    while !self.is_punct("]") && !self.at_eof() && self.peek().line == open.line {
                        self.bump();
                    }
                    let close = self.expect_punct("]")?;
                    Some(self.src[open.end..close.start].trim().to_string())
                } else {
                    None
                };
                let def = RateDef { expr, units };
                if kw == "flow" {
                    ElementKind::Flow(def)
                } else {
                    ElementKind::Aux(def)
                }
            }
            "const" => ElementKind::Const(self.expect_number()?),
            "lookup" => {
                let open = self.expect_punct("[")?;
                let mut points = Vec::new();
                loop {
                    self.expect_punct("(")?;
                    let x = self.expect_number()?;
                    self.expect_punct(",")?;
                    let y = self.expect_number()?;
                    self.expect_punct(")")?;
                    points.push((x, y));
                    if self.is_punct(",") {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect_punct("]")?;
                match LookupTable::new(points) {
                    Ok(table) => ElementKind::Lookup(table),
                    Err(msg) => {
                        self.diags.push(
                            Diagnostic::error(format!("{msg} (`{name}`)"))
                                .with_elements([name.clone()])
                                .with_span(Some(open.span(&self.file))),
                        );
                        return Err(Reported);
                    }
                }
            }
            _ => {
                let (input, _) = self.expr()?;
                self.expect_word("by")?;
                let lag = self.expect_number()?;
                ElementKind::Delay(DelayDef { input, lag })
            }
        };
        Ok(ElementDef {
            name,
            kind,
            span: Some(span),
        })
    }

    fn model(mut self) -> Result<Model, Diagnostics> {
        let mut defs = Vec::new();
        while !self.at_eof() {
            let start = self.pos;
            match self.declaration() {
                Ok(def) => defs.push(def),
                Err(Reported) => {
                    if self.pos == start {
                        self.bump();
                    }
                    self.skip_to(DECL_KEYWORDS);
                }
            }
        }
        if !self.diags.is_empty() {
            return Err(Diagnostics(self.diags));
        }
        build_model(defs)
    }

    // ---- scenarios ----

    fn scenario_line(&mut self, doc: &mut ScenarioDoc) -> PResult<()> {
        let kw = match &self.peek().tok {
            Tok::Ident(w) if SCENARIO_KEYWORDS.contains(&w.as_str()) => w.clone(),
            _ => return Err(self.expected("scenario statement (model, grid, param or at)")),
        };
        self.bump();
        match kw.as_str() {
            "model" => match self.peek().tok.clone() {
                Tok::Str(path) => {
                    self.bump();
                    doc.model = Some(path);
                }
                _ => return Err(self.expected("quoted model path")),
            },
            "grid" => {
                let mut any = false;
                while let (Tok::Ident(key), Tok::Punct("=")) =
                    (self.peek().tok.clone(), self.peek_at(1))
                {
                    let slot = match key.as_str() {
                        "t0" => &mut doc.grid.t0,
                        "horizon" => &mut doc.grid.horizon,
                        "dt" => &mut doc.grid.dt_internal,
                        "data" => &mut doc.grid.dt_data,
                        _ => break,
                    };
                    self.bump();
                    self.bump();
                    let v = self.expect_number()?;
                    *slot = Some(v);
                    any = true;
                }
                if !any {
                    return Err(self.expected("grid setting (t0, horizon, dt or data)"));
                }
            }
            "param" => {
                let (name, span) = self.expect_ident()?;
                self.expect_punct("=")?;
                let value = self.expect_number()?;
                doc.params.push(ParamOverride {
                    name,
                    value,
                    span: Some(span),
                });
            }
            _ => {
                let at_tok = self.toks[self.pos - 1].clone();
                let at = self.expect_number()?;
                let verb = match &self.peek().tok {
                    Tok::Ident(w) => w.clone(),
                    _ => return Err(self.expected("event action (set, switch, step or pulse)")),
                };
                let action = match verb.as_str() {
                    "set" => EventAction::SetConstant,
                    "switch" => EventAction::SwitchDecision,
                    "step" => EventAction::StepInput,
                    "pulse" => EventAction::PulseInput { duration: 0.0 },
                    _ => return Err(self.expected("event action (set, switch, step or pulse)")),
                };
                self.bump();
                let (target, _) = self.expect_ident()?;
                let (action, value) = match action {
                    EventAction::SetConstant | EventAction::SwitchDecision => {
                        self.expect_punct("=")?;
                        (action, self.expect_number()?)
                    }
                    EventAction::StepInput => {
                        self.expect_word("by")?;
                        (action, self.expect_number()?)
                    }
                    EventAction::PulseInput { .. } => {
                        self.expect_word("by")?;
                        let value = self.expect_number()?;
                        self.expect_word("for")?;
                        let duration = self.expect_number()?;
                        (EventAction::PulseInput { duration }, value)
                    }
                };
                let mut ev = Event::new(at, action, target, value);
                ev.span = Some(at_tok.span(&self.file));
                doc.push_event(ev);
            }
        }
        Ok(())
    }

    fn scenario(mut self) -> Result<ScenarioDoc, Diagnostics> {
        let mut doc = ScenarioDoc::new();
        while !self.at_eof() {
            let start = self.pos;
            if self.scenario_line(&mut doc).is_err() {
                if self.pos == start {
                    self.bump();
                }
                self.skip_to(SCENARIO_KEYWORDS);
            }
        }
        if self.diags.is_empty() {
            Ok(doc)
        } else {
            Err(Diagnostics(self.diags))
        }
    }
}

/// Parses `.sfm` model text and validates it.
pub fn parse_model(text: &str) -> Result<Model, Diagnostics> {
    parse_model_named(text, "<input>")
}

/// Like [`parse_model`], with `file` used in diagnostic spans.
pub fn parse_model_named(text: &str, file: &str) -> Result<Model, Diagnostics> {
    Parser::new(text, file).model()
}

/// Parses `.sfs` scenario text. Targets are resolved when the scenario is
/// compiled against a model.
pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, Diagnostics> {
    parse_scenario_named(text, "<input>")
}

pub fn parse_scenario_named(text: &str, file: &str) -> Result<ScenarioDoc, Diagnostics> {
    Parser::new(text, file).scenario()
}
