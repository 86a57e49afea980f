use std::collections::{BTreeSet, HashMap};

use petgraph::algo::{tarjan_scc, toposort};
use petgraph::graph::{DiGraph, NodeIndex};

use super::expr::{BinOp, Expr};
use crate::diag::{Diagnostic, Diagnostics, SourceSpan};

/// Words that cannot be used as element names.
pub const RESERVED_WORDS: &[&str] = &[
    "stock", "flow", "aux", "const", "lookup", "delay", "by", "in", "out", "t", "min", "max",
    "clamp", "select",
];

pub fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !RESERVED_WORDS.contains(&name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StockDef {
    pub initial: Expr,
    pub inflows: Vec<String>,
    pub outflows: Vec<String>,
}

/// Definition shared by flows and auxiliaries.
#[derive(Clone, Debug, PartialEq)]
pub struct RateDef {
    pub expr: Expr,
    pub units: Option<String>,
}

/// Pure transport delay: output at `t` is the input at `max(t0, t - lag)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayDef {
    pub input: Expr,
    pub lag: f64,
}

/// Piecewise-linear table, clamped at both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupTable {
    points: Vec<(f64, f64)>,
}

impl LookupTable {
    /// Points must be finite with strictly increasing x; at least one point.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, String> {
        if points.is_empty() {
            return Err("lookup table needs at least one point".into());
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err("lookup table points must be finite".into());
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("lookup table x values must be strictly increasing".into());
        }
        Ok(LookupTable { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        // first index whose x exceeds the argument; 1 <= hi < len here
        let hi = pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = pts[hi - 1];
        let (x1, y1) = pts[hi];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementKind {
    Stock(StockDef),
    Flow(RateDef),
    Aux(RateDef),
    Const(f64),
    Lookup(LookupTable),
    Delay(DelayDef),
}

impl ElementKind {
    pub fn category(&self) -> Category {
        match self {
            ElementKind::Const(_) => Category::Const,
            ElementKind::Lookup(_) => Category::Lookup,
            ElementKind::Stock(_) => Category::Stock,
            ElementKind::Flow(_) => Category::Flow,
            ElementKind::Aux(_) => Category::Aux,
            ElementKind::Delay(_) => Category::Delay,
        }
    }
}

/// Element categories, in canonical serialization order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Const,
    Lookup,
    Stock,
    Flow,
    Aux,
    Delay,
}

impl Category {
    pub fn keyword(self) -> &'static str {
        match self {
            Category::Const => "const",
            Category::Lookup => "lookup",
            Category::Stock => "stock",
            Category::Flow => "flow",
            Category::Aux => "aux",
            Category::Delay => "delay",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ElementDef {
    pub name: String,
    pub kind: ElementKind,
    pub span: Option<SourceSpan>,
}

impl ElementDef {
    pub fn new(name: impl Into<String>, kind: ElementKind) -> Self {
        ElementDef {
            name: name.into(),
            kind,
            span: None,
        }
    }

    pub fn stock(name: &str, initial: Expr, inflows: &[&str], outflows: &[&str]) -> Self {
        Self::new(
            name,
            ElementKind::Stock(StockDef {
                initial,
                inflows: inflows.iter().map(|s| s.to_string()).collect(),
                outflows: outflows.iter().map(|s| s.to_string()).collect(),
            }),
        )
    }

    pub fn flow(name: &str, expr: Expr) -> Self {
        Self::new(name, ElementKind::Flow(RateDef { expr, units: None }))
    }

    pub fn aux(name: &str, expr: Expr) -> Self {
        Self::new(name, ElementKind::Aux(RateDef { expr, units: None }))
    }

    pub fn constant(name: &str, value: f64) -> Self {
        Self::new(name, ElementKind::Const(value))
    }

    pub fn delay(name: &str, input: Expr, lag: f64) -> Self {
        Self::new(name, ElementKind::Delay(DelayDef { input, lag }))
    }

    /// Panics on an invalid table; use `LookupTable::new` to handle the error.
    pub fn lookup(name: &str, points: &[(f64, f64)]) -> Self {
        let table = LookupTable::new(points.to_vec()).expect("invalid lookup table");
        Self::new(name, ElementKind::Lookup(table))
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    fn expressions(&self) -> Vec<&Expr> {
        match &self.kind {
            ElementKind::Stock(s) => vec![&s.initial],
            ElementKind::Flow(r) | ElementKind::Aux(r) => vec![&r.expr],
            ElementKind::Delay(d) => vec![&d.input],
            ElementKind::Const(_) | ElementKind::Lookup(_) => vec![],
        }
    }
}

/// Expression compiled against element indices.
#[derive(Clone, Debug)]
pub(crate) enum Node {
    Num(f64),
    Slot(usize),
    Time,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Lookup(usize, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
    Clamp(Box<Node>, Box<Node>, Box<Node>),
    Select(Box<Node>, Box<Node>, Box<Node>),
}

/// A validated, immutable stock/flow model.
#[derive(Clone, Debug)]
pub struct Model {
    pub(crate) elements: Vec<ElementDef>,
    pub(crate) index: HashMap<String, usize>,
    pub(crate) stocks: Vec<usize>,
    pub(crate) constants: Vec<usize>,
    pub(crate) delays: Vec<usize>,
    /// Compiled expression per element (initial value for stocks, input for delays).
    pub(crate) nodes: Vec<Option<Node>>,
    /// Inflow and outflow element indices per entry of `stocks`.
    pub(crate) stock_flows: Vec<(Vec<usize>, Vec<usize>)>,
    /// Flows, auxiliaries and zero-lag delays in dependency order.
    pub(crate) run_order: Vec<usize>,
    /// Everything but constants and lookups, in dependency order at t0.
    pub(crate) init_order: Vec<usize>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.elements.len() == other.elements.len()
            && self
                .elements
                .iter()
                .zip(&other.elements)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }
}

impl Model {
    /// Elements sorted by name.
    pub fn elements(&self) -> &[ElementDef] {
        &self.elements
    }

    pub fn get(&self, name: &str) -> Option<&ElementDef> {
        self.index.get(name).map(|&i| &self.elements[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn names_of(&self, category: Category) -> Vec<&str> {
        self.elements
            .iter()
            .filter(|e| e.kind.category() == category)
            .map(|e| e.name.as_str())
            .collect()
    }

    pub fn stock_names(&self) -> Vec<&str> {
        self.stocks
            .iter()
            .map(|&i| self.elements[i].name.as_str())
            .collect()
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        match self.get(name)?.kind {
            ElementKind::Const(v) => Some(v),
            _ => None,
        }
    }

    /// True for names whose value can be recorded in a trajectory.
    pub fn is_variable(&self, name: &str) -> bool {
        self.get(name)
            .is_some_and(|e| !matches!(e.kind, ElementKind::Lookup(_)))
    }

    pub(crate) fn name(&self, idx: usize) -> &str {
        &self.elements[idx].name
    }
}

/// Validates element definitions into a [`Model`], or reports every problem found.
pub fn build_model(defs: Vec<ElementDef>) -> Result<Model, Diagnostics> {
    let mut diags = Vec::new();

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut elements: Vec<ElementDef> = Vec::with_capacity(defs.len());
    let mut sorted = defs;
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for def in sorted {
        if !is_valid_identifier(&def.name) {
            diags.push(
                Diagnostic::error(format!("invalid element name `{}`", def.name))
                    .with_elements([def.name.clone()])
                    .with_span(def.span.clone()),
            );
        }
        if let Some(&prev) = index.get(&def.name) {
            let first = &elements[prev];
            diags.push(
                Diagnostic::error(format!(
                    "duplicate name `{}` (already declared as {})",
                    def.name,
                    first.kind.category().keyword()
                ))
                .with_elements([def.name.clone()])
                .with_span(def.span.clone()),
            );
            continue;
        }
        index.insert(def.name.clone(), elements.len());
        elements.push(def);
    }

    for def in &elements {
        check_element(def, &index, &elements, &mut diags);
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }

    let nodes: Vec<Option<Node>> = elements
        .iter()
        .map(|e| e.expressions().first().map(|x| compile(x, &index)))
        .collect();

    let of = |cat: Category| -> Vec<usize> {
        (0..elements.len())
            .filter(|&i| elements[i].kind.category() == cat)
            .collect()
    };
    let stocks = of(Category::Stock);
    let constants = of(Category::Const);
    let delays = of(Category::Delay);
    let stock_flows = stocks
        .iter()
        .map(|&i| match &elements[i].kind {
            ElementKind::Stock(s) => (
                s.inflows.iter().map(|n| index[n]).collect(),
                s.outflows.iter().map(|n| index[n]).collect(),
            ),
            _ => unreachable!(),
        })
        .collect();

    let is_instant = |e: &ElementDef| match &e.kind {
        ElementKind::Flow(_) | ElementKind::Aux(_) => true,
        ElementKind::Delay(d) => d.lag == 0.0,
        _ => false,
    };
    let run_order = match dependency_order(&elements, &index, is_instant, "cycle among auxiliaries")
    {
        Ok(order) => order,
        Err(mut cycles) => {
            diags.append(&mut cycles);
            Vec::new()
        }
    };
    let init_order = if diags.is_empty() {
        let is_init =
            |e: &ElementDef| !matches!(e.kind, ElementKind::Const(_) | ElementKind::Lookup(_));
        match dependency_order(&elements, &index, is_init, "cycle in initial values") {
            Ok(order) => order,
            Err(mut cycles) => {
                diags.append(&mut cycles);
                Vec::new()
            }
        }
    } else {
        Vec::new()
    };
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    let init_order = prune_to_needed(&elements, &index, init_order);

    Ok(Model {
        elements,
        index,
        stocks,
        constants,
        delays,
        nodes,
        stock_flows,
        run_order,
        init_order,
    })
}

/// Keeps only stocks, delays and what their initial values depend on.
fn prune_to_needed(
    elements: &[ElementDef],
    index: &HashMap<String, usize>,
    order: Vec<usize>,
) -> Vec<usize> {
    let mut needed = vec![false; elements.len()];
    let mut stack: Vec<usize> = (0..elements.len())
        .filter(|&i| {
            matches!(
                elements[i].kind,
                ElementKind::Stock(_) | ElementKind::Delay(_)
            )
        })
        .collect();
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut needed[i], true) {
            continue;
        }
        for expr in elements[i].expressions() {
            for var in expr.variables() {
                if let Some(&j) = index.get(var) {
                    if !needed[j] {
                        stack.push(j);
                    }
                }
            }
        }
    }
    order.into_iter().filter(|&i| needed[i]).collect()
}

fn check_element(
    def: &ElementDef,
    index: &HashMap<String, usize>,
    elements: &[ElementDef],
    diags: &mut Vec<Diagnostic>,
) {
    let err = |msg: String| {
        Diagnostic::error(msg)
            .with_elements([def.name.clone()])
            .with_span(def.span.clone())
    };
    let kind_of = |name: &str| index.get(name).map(|&i| &elements[i].kind);

    for expr in def.expressions() {
        for var in expr.variables() {
            match kind_of(var) {
                None => diags.push(err(format!("unresolved reference {var} in `{}`", def.name))),
                Some(ElementKind::Lookup(_)) => diags.push(err(format!(
                    "lookup table `{var}` used without an argument in `{}`",
                    def.name
                ))),
                Some(_) => {}
            }
        }
        for table in expr.tables() {
            match kind_of(table) {
                None => diags.push(err(format!(
                    "unresolved reference {table} in `{}`",
                    def.name
                ))),
                Some(ElementKind::Lookup(_)) => {}
                Some(_) => diags.push(err(format!(
                    "`{table}` is applied like a lookup table in `{}` but is not one",
                    def.name
                ))),
            }
        }
        if let Some(v) = first_non_finite(expr) {
            diags.push(err(format!("non-finite literal {v} in `{}`", def.name)));
        }
    }

    match &def.kind {
        ElementKind::Stock(s) => {
            for flow in s.inflows.iter().chain(&s.outflows) {
                match kind_of(flow) {
                    None => diags.push(err(format!(
                        "unresolved reference {flow} in flows of stock `{}`",
                        def.name
                    ))),
                    Some(ElementKind::Flow(_)) => {}
                    Some(_) => diags.push(err(format!(
                        "`{flow}` is attached to stock `{}` but is not a flow",
                        def.name
                    ))),
                }
            }
        }
        ElementKind::Const(v) if !v.is_finite() => {
            diags.push(err(format!("constant `{}` is not finite", def.name)))
        }
        ElementKind::Delay(d) if !(d.lag.is_finite() && d.lag >= 0.0) => diags.push(err(format!(
            "delay `{}` needs a finite, non-negative lag",
            def.name
        ))),
        ElementKind::Lookup(table) => {
            if let Err(msg) = LookupTable::new(table.points().to_vec()) {
                diags.push(err(format!("{msg} (`{}`)", def.name)));
            }
        }
        _ => {}
    }
}

fn first_non_finite(expr: &Expr) -> Option<f64> {
    match expr {
        Expr::Num(v) if !v.is_finite() => Some(*v),
        Expr::Num(_) | Expr::Var(_) | Expr::Time => None,
        Expr::Neg(a) | Expr::Lookup(_, a) => first_non_finite(a),
        Expr::Binary(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
            first_non_finite(a).or_else(|| first_non_finite(b))
        }
        Expr::Clamp(a, b, c) | Expr::Select(a, b, c) => first_non_finite(a)
            .or_else(|| first_non_finite(b))
            .or_else(|| first_non_finite(c)),
    }
}

/// Topologically orders the elements selected by `include`, following only
/// references between selected elements. Reports every cycle.
fn dependency_order(
    elements: &[ElementDef],
    index: &HashMap<String, usize>,
    include: impl Fn(&ElementDef) -> bool,
    what: &str,
) -> Result<Vec<usize>, Vec<Diagnostic>> {
    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let mut node_of: HashMap<usize, NodeIndex> = HashMap::new();
    for (i, e) in elements.iter().enumerate() {
        if include(e) {
            node_of.insert(i, graph.add_node(i));
        }
    }
    let mut self_loops = BTreeSet::new();
    for (i, e) in elements.iter().enumerate() {
        let Some(&to) = node_of.get(&i) else { continue };
        for expr in e.expressions() {
            for var in expr.variables() {
                let dep = index[var];
                if let Some(&from) = node_of.get(&dep) {
                    if dep == i {
                        self_loops.insert(i);
                    }
                    graph.update_edge(from, to, ());
                }
            }
        }
    }

    let mut diags = Vec::new();
    for scc in tarjan_scc(&graph) {
        let is_cycle = scc.len() > 1 || self_loops.contains(&graph[scc[0]]);
        if !is_cycle {
            continue;
        }
        let mut members: Vec<&str> = scc
            .iter()
            .map(|&n| elements[graph[n]].name.as_str())
            .collect();
        members.sort_unstable();
        let first = &elements[index[members[0]]];
        diags.push(
            Diagnostic::error(format!("{what}: {}", members.join(" -> ")))
                .with_elements(members.iter().copied())
                .with_span(first.span.clone()),
        );
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let order = toposort(&graph, None).expect("acyclic after scc check");
    Ok(order.into_iter().map(|n| graph[n]).collect())
}

fn compile(expr: &Expr, index: &HashMap<String, usize>) -> Node {
    let c = |e: &Expr| Box::new(compile(e, index));
    match expr {
        Expr::Num(v) => Node::Num(*v),
        Expr::Var(name) => Node::Slot(index[name]),
        Expr::Time => Node::Time,
        Expr::Neg(a) => Node::Neg(c(a)),
        Expr::Binary(op, a, b) => Node::Bin(*op, c(a), c(b)),
        Expr::Lookup(name, a) => Node::Lookup(index[name], c(a)),
        Expr::Min(a, b) => Node::Min(c(a), c(b)),
        Expr::Max(a, b) => Node::Max(c(a), c(b)),
        Expr::Clamp(a, b, x) => Node::Clamp(c(a), c(b), c(x)),
        Expr::Select(a, b, x) => Node::Select(c(a), c(b), c(x)),
    }
}
