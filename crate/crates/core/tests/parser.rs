use proptest::prelude::*;
use stockflow::modelfmt::{
    parse_model, parse_scenario, serialize_model, serialize_scenario, MAX_EXPR_DEPTH,
};
use stockflow::oilmarket::{
    OIL_MODEL_SFM, SCENARIO_A_SFS, SCENARIO_B_HOLD_SFS, SCENARIO_B_SPARE_SFS,
};

fn number() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..1000).prop_map(|n| n.to_string()),
        (0u32..1000, 1u32..9999).prop_map(|(a, b)| format!("{a}.{b}")),
        (1u32..99, -30i32..30).prop_map(|(a, e)| format!("{a}e{e}")),
        any::<f64>()
            .prop_filter("finite", |v| v.is_finite())
            .prop_map(|v| format!("{:e}", v.abs())),
    ]
}

/// Expression text over variables `c0`, `a0` and lookup `L`.
fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        number(),
        Just("c0".to_string()),
        Just("a0".to_string()),
        Just("t".to_string()),
    ];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop_oneof![
                    Just("+"),
                    Just("-"),
                    Just("*"),
                    Just("/"),
                    Just("<"),
                    Just(">="),
                    Just("==")
                ],
                inner.clone()
            )
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("({a})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("L({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("min({a}, {b})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, c)| format!("select({a}, {b}, {c})")),
            (inner.clone(), inner.clone(), inner)
                .prop_map(|(a, b, c)| format!("clamp({a},{b},{c})")),
        ]
    })
}

fn model_text() -> impl Strategy<Value = String> {
    (expr(), expr(), expr(), number(), proptest::bool::ANY).prop_map(|(f, a, init, c, crlf)| {
        let src = format!(
            "# generated\nconst c0 = -{c}\nlookup L = [(0, 1), (1, 2.5)]\naux a0 = {a}\n\
             stock s = {init} {{ in: f }}\nflow f = {f} [u/d]\ndelay d = s by 0.5\n"
        );
        if crlf {
            src.replace('\n', "\r\n")
        } else {
            src
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip_is_idempotent(src in model_text()) {
        match parse_model(&src) {
            Ok(m) => {
                let once = serialize_model(&m);
                let again = parse_model(&once).expect("canonical text parses");
                prop_assert_eq!(&again, &m);
                prop_assert_eq!(serialize_model(&again), once);
            }
            Err(diags) => {
                prop_assert!(!diags.is_empty());
                prop_assert!(diags.iter().all(|d| d.span.is_some()), "{}", diags);
            }
        }
    }

    #[test]
    fn arbitrary_text_never_panics(src in ".{0,200}") {
        if let Err(diags) = parse_model(&src) {
            prop_assert!(diags.has_errors());
        }
        if let Err(diags) = parse_scenario(&src) {
            prop_assert!(diags.has_errors());
        }
    }

    #[test]
    fn mangled_models_report_errors(src in model_text(), cut in 0usize..400, junk in "[-+*/(){}\\[\\],:=a-z0-9 ]{0,4}") {
        let cut = cut.min(src.len());
        let cut = (0..=cut).rev().find(|&i| src.is_char_boundary(i)).unwrap_or(0);
        let mangled = format!("{}{}{}", &src[..cut], junk, &src[cut..]);
        if let Err(diags) = parse_model(&mangled) {
            prop_assert!(!diags.is_empty());
        }
    }
}

#[test]
fn bundled_fixtures_parse_and_round_trip() {
    let m = parse_model(OIL_MODEL_SFM).unwrap();
    assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
    for src in [SCENARIO_A_SFS, SCENARIO_B_HOLD_SFS, SCENARIO_B_SPARE_SFS] {
        let doc = parse_scenario(src).unwrap();
        assert_eq!(parse_scenario(&serialize_scenario(&doc)).unwrap(), doc);
    }
}

#[test]
fn deep_nesting_is_an_error_not_a_crash() {
    let deep = format!("aux a = {}1{}", "(".repeat(50_000), ")".repeat(50_000));
    let err = parse_model(&deep).unwrap_err();
    assert!(err.to_string().contains("nested"), "{err}");

    let minus = format!("aux a = {}x\nconst x = 1", "-".repeat(50_000));
    assert!(parse_model(&minus).is_err());

    let ok = format!(
        "aux a = {}1{}",
        "(".repeat(MAX_EXPR_DEPTH / 2),
        ")".repeat(MAX_EXPR_DEPTH / 2)
    );
    parse_model(&ok).unwrap();
}

#[test]
fn long_inputs() {
    let sum = vec!["1"; 20_000].join(" + ");
    // left-nested trees are as deep as they are long
    assert!(parse_model(&format!("aux a = {sum}")).is_err());
    let body: String = (0..5_000).map(|i| format!("const k{i} = {i}\n")).collect();
    assert_eq!(parse_model(&body).unwrap().elements().len(), 5_000);
}

#[test]
fn diagnostics_point_at_the_problem() {
    let err = parse_model("const a = 1\nflow f = a +\n").unwrap_err();
    let d = &err.0[0];
    let span = d.span.as_ref().unwrap();
    assert_eq!((span.line, span.column), (2, 13));

    let err = parse_model("stock s = 0 { in: g }\nflow f = 1").unwrap_err();
    assert!(err.to_string().contains("g"), "{err}");

    let err = parse_model("aux a = b\naux b = a").unwrap_err();
    assert!(err.to_string().contains("cycle"), "{err}");

    let err = parse_model("aux t = 1").unwrap_err();
    assert!(err.to_string().contains("reserved"), "{err}");
}

#[test]
fn several_errors_in_one_pass() {
    let err = parse_model("aux a = )\naux b = 1 +\nconst c = x\nstock s = 1 {}").unwrap_err();
    assert!(err.len() >= 3, "{err}");
}
