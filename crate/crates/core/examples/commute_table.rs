//! Left-commutativity matrix and safe interleavings of a monitor.
use monweaver::analysis::{analyze, AnalysisConfig};
use monweaver::fdg::{construct, PartitionMode};
use monweaver::frontend::load;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/queue.imon").into());
    let src = std::fs::read_to_string(&path).expect("read monitor");
    let ast = load(&src).expect("parse");
    let fdg = construct(&ast, PartitionMode::Paper).expect("fdg");
    let t = std::time::Instant::now();
    let res = analyze(&ast, &fdg, &AnalysisConfig::default());
    let n = fdg.len();
    print!("LC   ");
    for w in 0..n {
        print!("{:>4}", fdg.fragments[w].name());
    }
    println!();
    for v in 0..n {
        print!("{:<5}", fdg.fragments[v].name());
        for w in 0..n {
            print!("{:>4}", if res.left_commutes(v, w) { "T" } else { "." });
        }
        println!();
    }
    println!("atomics: {:?}", res.atomics);
    for ((a, b), ps) in &res.races.races {
        if a <= b {
            let ps: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
            println!("race {} {} {:?}", fdg.fragments[*a].name(), fdg.fragments[*b].name(), ps);
        }
    }
    for (v, (s, t)) in &res.safe {
        println!("safe {} ({}, {})", fdg.fragments[*v].name(), fdg.fragments[*s].name(), fdg.fragments[*t].name());
    }
    eprintln!("{} base states, {:?}", res.states.unwrap_or(0), t.elapsed());
}
