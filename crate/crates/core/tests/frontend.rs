mod common;

use common::*;
use monweaver::frontend::{desugar, load, monitor_to_string, parse_monitor, predicate_rw, read_write_sets, stmt_to_string, Expr, ParseError, Stmt};

fn paths(set: &std::collections::BTreeSet<monweaver::frontend::AccessPath>) -> Vec<String> {
    set.iter().map(|p| p.to_string()).collect()
}

#[test]
fn queue_shape() {
    let ast = parse_monitor(&read_corpus("queue.imon")).unwrap();
    assert_eq!(ast.name, "Queue");
    let fields: Vec<&str> = ast.fields.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(fields, ["queue", "first", "last", "count"]);
    assert!(ast.fields[0].ty.is_array());
    assert_eq!(ast.methods.len(), 2);
    assert_eq!(ast.method("put").unwrap().body.len(), 1);
    assert_eq!(ast.method("take").unwrap().body.len(), 1);
}

#[test]
fn empty_monitor() {
    let ast = load("monitor M {}").unwrap();
    assert!(ast.fields.is_empty() && ast.methods.is_empty());
}

#[test]
fn waituntil_only_at_ccr_head() {
    let err = parse_monitor("monitor M { int[0..1] x := 0; m() { x := 1; waituntil(x > 0); } }").unwrap_err();
    assert!(matches!(err, ParseError::MisplacedWaituntil { .. }), "{err}");
    assert!(err.to_string().contains("waituntil only heads a CCR"));
}

#[test]
fn error_positions() {
    let err = parse_monitor("monitor M {\n  int[0..1] x := 0;\n  m() { y := x + z; }\n}").unwrap_err();
    assert!(matches!(err, ParseError::Undeclared { ref name, .. } if name == "z"), "{err}");
    assert_eq!(err.position().0, 3);
    let err = parse_monitor("monitor M { int[0..1] x := 5; }").unwrap_err();
    assert!(matches!(err, ParseError::InitOutOfDomain { value: 5, .. }));
    let err = parse_monitor("monitor M { int[0..1] x := 0; int[0..1] x := 0; }").unwrap_err();
    assert!(matches!(err, ParseError::Duplicate { .. }));
    assert!(matches!(parse_monitor("monitor M { m() { goto nowhere; } }").unwrap_err(), ParseError::UnresolvedLabel { .. }));
    assert!(matches!(parse_monitor("monitor M {").unwrap_err(), ParseError::Syntax { .. }));
}

#[test]
fn desugar_guards_and_increments() {
    let ast = load("monitor M { int[0..3] count := 0; m() { count++; } }").unwrap();
    let ccr = &ast.methods[0].body[0];
    assert_eq!(ccr.guard, Some(Expr::Bool(true)));
    assert_eq!(stmt_to_string(&ccr.body[0]), "count := count + 1;");
    assert_eq!(desugar(&ast), ast);
}

#[test]
fn desugared_bodies_are_core() {
    let ast = load(&read_corpus("buffer.imon")).unwrap();
    for m in &ast.methods {
        for c in &m.body {
            assert!(c.body.iter().all(Stmt::is_core), "{}", m.name);
        }
    }
}

#[test]
fn access_sets() {
    let ast = load(&read_corpus("queue.imon")).unwrap();
    let put = &ast.method("put").unwrap().body[0];
    let stores: Vec<&Stmt> = put.body.iter().filter(|s| matches!(s, Stmt::Store { .. })).collect();
    let rw = read_write_sets(&ast, stores[0]);
    assert_eq!(paths(&rw.reads), ["last"]);
    assert_eq!(paths(&rw.writes), ["queue[last]"]);
    let rw = read_write_sets(&ast, stores[2]);
    assert_eq!(paths(&rw.reads), ["count"]);
    assert_eq!(paths(&rw.writes), ["count"]);
    let take = &ast.method("take").unwrap().body[0];
    let rw = predicate_rw(&ast, take.guard.as_ref().unwrap());
    assert_eq!(paths(&rw.reads), ["count"]);
    assert!(rw.writes.is_empty());
}

#[test]
fn pretty_print_round_trip() {
    for b in BENCHMARKS {
        let ast = load(&read_corpus(&format!("{b}.imon"))).unwrap();
        let text = monitor_to_string(&ast);
        let back = load(&text).unwrap_or_else(|e| panic!("{b}: {e}\n{text}"));
        assert_eq!(back, ast, "{b}");
        assert_eq!(monitor_to_string(&back), text, "{b}");
    }
}

mod props {
    use monweaver::frontend::{load, monitor_to_string};
    use proptest::prelude::*;

    fn expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![(0i64..4).prop_map(|v| v.to_string()), Just("x".to_string()), Just("y".to_string()), Just("a[x]".to_string())];
        leaf.prop_recursive(3, 12, 2, |inner| {
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "%"]), inner).prop_map(|(a, op, b)| format!("({a} {op} {b})"))
        })
    }

    fn cond() -> impl Strategy<Value = String> {
        (expr(), prop::sample::select(vec!["<", "<=", "==", "!=", ">"]), expr()).prop_map(|(a, op, b)| format!("{a} {op} {b}"))
    }

    proptest! {
        #[test]
        fn random_monitors_round_trip(g in cond(), e1 in expr(), e2 in expr(), c in cond()) {
            let src = format!(
                "monitor P {{ int[0..3] x := 0; int[0..3] y := 1; array[2] of int[0..3] a := 0;
                  m(int[0..1] p) {{ waituntil({g}); x := {e1}; if ({c}) {{ y := {e2}; }} else {{ a[p] := 1; }} }}
                  n() {{ ccr {{ y++; }} ccr {{ waituntil(x > 0); t := y; x := t; }} }} }}"
            );
            let ast = load(&src).unwrap();
            let text = monitor_to_string(&ast);
            prop_assert_eq!(load(&text).unwrap(), ast);
        }
    }
}
