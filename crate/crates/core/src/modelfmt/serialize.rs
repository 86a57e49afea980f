use std::fmt::Write;

use crate::scenario::ScenarioDoc;
use crate::sdcore::{format_number, ElementKind, Model};

/// Canonical text for a model: one declaration per line, sorted by category
/// then name, numbers in shortest round-trip form, LF line endings.
pub fn serialize_model(model: &Model) -> String {
    let mut elements: Vec<_> = model.elements().iter().collect();
    elements.sort_by(|a, b| (a.kind.category(), &a.name).cmp(&(b.kind.category(), &b.name)));

    let mut out = String::new();
    for e in elements {
        let kw = e.kind.category().keyword();
        let name = &e.name;
        match &e.kind {
            ElementKind::Const(v) => writeln!(out, "{kw} {name} = {}", format_number(*v)),
            ElementKind::Lookup(table) => {
                let pts: Vec<String> = table
                    .points()
                    .iter()
                    .map(|(x, y)| format!("({}, {})", format_number(*x), format_number(*y)))
                    .collect();
                writeln!(out, "{kw} {name} = [{}]", pts.join(", "))
            }
            ElementKind::Stock(s) => {
                let mut body = String::new();
                if !s.inflows.is_empty() {
                    write!(body, " in: {}", s.inflows.join(", ")).unwrap();
                }
                if !s.outflows.is_empty() {
                    write!(body, " out: {}", s.outflows.join(", ")).unwrap();
                }
                if !body.is_empty() {
                    body.push(' ');
                }
                writeln!(out, "{kw} {name} = {} {{{body}}}", s.initial)
            }
            ElementKind::Flow(r) | ElementKind::Aux(r) => match &r.units {
                Some(u) => writeln!(out, "{kw} {name} = {} [{u}]", r.expr),
                None => writeln!(out, "{kw} {name} = {}", r.expr),
            },
            ElementKind::Delay(d) => {
                writeln!(out, "{kw} {name} = {} by {}", d.input, format_number(d.lag))
            }
        }
        .expect("writing to a String cannot fail");
    }
    out
}

/// Text form of a scenario; events are written in time order.
pub fn serialize_scenario(doc: &ScenarioDoc) -> String {
    let mut out = String::new();
    if let Some(path) = &doc.model {
        writeln!(out, "model \"{path}\"").unwrap();
    }
    if !doc.grid.is_empty() {
        out.push_str("grid");
        let g = &doc.grid;
        for (key, v) in [
            ("t0", g.t0),
            ("horizon", g.horizon),
            ("dt", g.dt_internal),
            ("data", g.dt_data),
        ] {
            if let Some(v) = v {
                write!(out, " {key} = {}", format_number(v)).unwrap();
            }
        }
        out.push('\n');
    }
    for p in &doc.params {
        writeln!(out, "param {} = {}", p.name, format_number(p.value)).unwrap();
    }
    for e in doc.events() {
        writeln!(out, "{e}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelfmt::{parse_model, parse_scenario};

    #[test]
    fn single_stock_line() {
        let text = serialize_model(&parse_model("stock y = 5 {}").unwrap());
        assert_eq!(text.lines().filter(|l| *l == "stock y = 5 {}").count(), 1);
        assert_eq!(text, "stock y = 5 {}\n");
    }

    #[test]
    fn canonical_order_and_form() {
        let m = parse_model(
            "aux b = a*2\r\nstock s = 1 {in: f out: g}\nflow g = 1\nflow f = b [u/d]\nconst a = 0.10\n\
             lookup L = [(0,1),(2,3)]\ndelay d = s by 1.5\n",
        )
        .unwrap();
        assert_eq!(
            serialize_model(&m),
            "const a = 0.1\n\
             lookup L = [(0, 1), (2, 3)]\n\
             stock s = 1 { in: f out: g }\n\
             flow f = b [u/d]\n\
             flow g = 1\n\
             aux b = a * 2\n\
             delay d = s by 1.5\n"
        );
    }

    #[test]
    fn equal_graphs_serialize_identically() {
        let a = parse_model("const k = 2\nstock y = k {}\n").unwrap();
        let b = parse_model("stock y = (k) {} # same\nconst k = 2.0").unwrap();
        assert_eq!(serialize_model(&a), serialize_model(&b));
    }

    #[test]
    fn scenario_round_trip() {
        let src = "model \"m.sfm\"\ngrid horizon = 43 dt = 0.0625\nparam g = 0.5\n\
                   at 10 step U by 0.1\nat 30 switch D = 1\nat 30 pulse S by 0.1 for 90\n";
        let doc = parse_scenario(src).unwrap();
        assert_eq!(serialize_scenario(&doc), src);
        assert_eq!(parse_scenario(&serialize_scenario(&doc)).unwrap(), doc);
    }
}
