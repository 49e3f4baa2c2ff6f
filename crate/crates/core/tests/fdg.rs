mod common;

use common::*;
use monweaver::fdg::{build_cfg, construct, Fdg, FragmentKind, PartitionMode};
use monweaver::frontend::{load, monitor_to_string};

fn queue() -> Fdg {
    construct(&load(&read_corpus("queue.imon")).unwrap(), PartitionMode::Paper).unwrap()
}

fn names(fdg: &Fdg, fs: &[usize]) -> Vec<String> {
    fs.iter().map(|f| fdg.fragments[*f].name()).collect()
}

#[test]
fn put_cfg_is_straight_line() {
    let ast = load(&read_corpus("queue.imon")).unwrap();
    let cfg = build_cfg(ast.method("put").unwrap()).unwrap();
    assert_eq!(cfg.len(), 4);
    assert_eq!(cfg.edge_count(), 3);
    assert!(cfg.blocks[0].instr.is_wait());
    assert!(cfg.blocks[1..].iter().all(|b| b.instr.is_store()));
}

#[test]
fn single_statement_and_branch() {
    let ast = load("monitor M { int[0..1] x := 0; m() { x := 1; } k() { if (x == 0) goto out; x := 0; out: } }").unwrap();
    let m = build_cfg(ast.method("m").unwrap()).unwrap();
    assert_eq!((m.len(), m.edge_count()), (2, 1));
    let k = build_cfg(ast.method("k").unwrap()).unwrap();
    assert!(k.succs.iter().any(|s| s.len() == 2));
}

#[test]
fn queue_fragments() {
    let fdg = queue();
    assert_eq!(fdg.len(), 8);
    let text: Vec<Vec<String>> = (0..8).map(|f| fdg.text(f)).collect();
    assert_eq!(text[0], ["waituntil(count < 3);"]);
    assert_eq!(text[1], ["queue[last] := o;"]);
    assert_eq!(text[2], ["last := (last + 1) % 3;"]);
    assert_eq!(text[3], ["count := count + 1;"]);
    assert_eq!(text[4], ["waituntil(count > 0);"]);
    assert_eq!(text[5], ["r := queue[first];", "queue[first] := 0;"]);
    assert_eq!(text[6], ["first := (first + 1) % 3;"]);
    assert_eq!(text[7], ["count := count - 1;"]);
    assert_eq!(fdg.fragments[0].kind, FragmentKind::Waituntil);
    assert_eq!(fdg.fragments[1].kind, FragmentKind::Plain);
}

#[test]
fn queue_edges_are_two_chains() {
    let fdg = queue();
    assert_eq!(fdg.edge_list(), [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)]);
    assert_eq!(names(&fdg, &fdg.succs(4)), ["f6"]);
    let reach = fdg.closure();
    assert!(reach[4][7] && !reach[0][4] && !reach[4][0]);
}

#[test]
fn loops_stay_in_one_fragment() {
    let ast = load(&read_corpus("buffer.imon")).unwrap();
    let fdg = construct(&ast, PartitionMode::Paper).unwrap();
    let clear: Vec<usize> = (0..fdg.len()).filter(|f| fdg.method_names[fdg.fragments[*f].method] == "clear").collect();
    let looping: Vec<usize> = clear.iter().copied().filter(|f| fdg.text(*f).iter().any(|s| s.contains("buf[i]"))).collect();
    assert_eq!(looping.len(), 1);
    assert!(fdg.text(looping[0]).iter().any(|s| s.contains("i := i + 1")));
    let reach = fdg.closure();
    assert!((0..fdg.len()).all(|f| !fdg.succs(f).iter().any(|g| reach[*g][f])), "FDG must be acyclic");
}

#[test]
fn empty_monitor_has_empty_fdg() {
    let fdg = construct(&load("monitor E {}").unwrap(), PartitionMode::Paper).unwrap();
    assert!(fdg.is_empty() && fdg.edges.is_empty());
}

#[test]
fn partition_modes() {
    let ast = load(&read_corpus("queue.imon")).unwrap();
    assert_eq!(construct(&ast, PartitionMode::Ccr).unwrap().len(), 4);
    assert_eq!(construct(&ast, PartitionMode::Stmt).unwrap().len(), 9);
}

#[test]
fn reparse_gives_isomorphic_fdg() {
    for b in BENCHMARKS {
        let ast = load(&read_corpus(&format!("{b}.imon"))).unwrap();
        let again = load(&monitor_to_string(&ast)).unwrap();
        let (x, y) = (construct(&ast, PartitionMode::Paper).unwrap(), construct(&again, PartitionMode::Paper).unwrap());
        assert_eq!(x.edge_list(), y.edge_list(), "{b}");
        assert_eq!((0..x.len()).map(|f| x.text(f)).collect::<Vec<_>>(), (0..y.len()).map(|f| y.text(f)).collect::<Vec<_>>(), "{b}");
    }
}

#[test]
fn json_and_dot() {
    let fdg = queue();
    let j = fdg.to_json();
    assert_eq!(j["vertices"].as_array().unwrap().len(), 8);
    assert_eq!(j["edges"][0], serde_json::json!(["f1", "f2"]));
    assert!(fdg.to_dot().starts_with("digraph fdg"));
}
