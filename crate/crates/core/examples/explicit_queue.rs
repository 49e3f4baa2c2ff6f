//! Full pipeline on a monitor: signals, analysis, locks, explicit code.
use monweaver::analysis::{analyze, AnalysisConfig};
use monweaver::codegen::{emit, instrument, parse_explicit, place_signals, scan_locks};
use monweaver::fdg::{construct, PartitionMode};
use monweaver::frontend::load;
use monweaver::maxsat::{synthesize, Problem, SynthOptions};
use monweaver::simulator::{check_correctness, Workload};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/queue.imon").into());
    let ast = place_signals(&load(&std::fs::read_to_string(&path).expect("read")).expect("parse"));
    let fdg = construct(&ast, PartitionMode::Paper).expect("fdg");
    let res = analyze(&ast, &fdg, &AnalysisConfig::default());
    let problem = Problem::from_analysis(&ast, &fdg, &res);
    let s = synthesize(&problem, &SynthOptions::default()).expect("synthesis");
    for it in &s.iterations {
        eprintln!("bound {}: cost {} ({:?})", it.bound, it.cost, it.status);
    }
    let out = instrument(&ast, &fdg, &s.protocol).expect("instrument");
    let text = emit(&out.monitor);
    print!("{text}");
    let back = parse_explicit(&text).expect("reparse");
    assert_eq!(emit(&back), text);
    match scan_locks(&back) {
        Ok(_) => eprintln!("lock discipline ok"),
        Err(v) => eprintln!("violation: {v}"),
    }
    if let Some(w) = std::env::args().nth(2) {
        let w = Workload::parse(&std::fs::read_to_string(w).expect("read")).expect("workload");
        let t = std::time::Instant::now();
        let report = check_correctness(&ast, &back, &w).expect("check");
        eprintln!("pass {} ({:?}), verdicts {:?}", report.pass, t.elapsed(), report.verdicts);
    }
}
