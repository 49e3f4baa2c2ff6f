//! Lock bound iteration and the resulting protocol for a monitor.
use monweaver::analysis::{analyze, AnalysisConfig};
use monweaver::fdg::{construct, PartitionMode};
use monweaver::frontend::load;
use monweaver::maxsat::{synthesize, Problem, SynthOptions};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/queue.imon").into());
    let max_locks = std::env::args().nth(2).map(|s| s.parse().expect("lock count"));
    let ast = load(&std::fs::read_to_string(&path).expect("read")).expect("parse");
    let fdg = construct(&ast, PartitionMode::Paper).expect("fdg");
    let res = analyze(&ast, &fdg, &AnalysisConfig::default());
    let problem = Problem::from_analysis(&ast, &fdg, &res);
    let opts = SynthOptions { max_locks, ..Default::default() };
    let s = synthesize(&problem, &opts).expect("synthesis");
    for it in &s.iterations {
        println!("bound {}: cost {} satisfied {} ({:?})", it.bound, it.cost, it.satisfied, it.status);
    }
    for (f, held) in s.protocol.held.iter().enumerate() {
        let locks: Vec<String> = held.iter().map(|j| format!("l{}", j + 1)).collect();
        println!("{:<4} {:?}", problem.names[f], locks);
    }
    println!("atomics {:?}", s.protocol.atomics);
    for (p, l) in problem.preds.iter().zip(&s.protocol.cv_lock) {
        println!("cv {p} on {:?}", l.map(|j| format!("l{}", j + 1)));
    }
    let (free, disjoint) = s.protocol.parallel_pairs(&problem);
    println!("race-free pairs {free}, disjoint {disjoint}");
}
