//! Explore every schedule of a hand-written explicit monitor.
use monweaver::codegen::parse_explicit;
use monweaver::simulator::{explore, Machine, Outcome};

const SRC: &str = "monitor Pair {
  lock l1; lock l2;
  int[0..3] x := 0;
  ab() { l1.lock(); l2.lock(); x := (x + 1) % 4; l2.unlock(); l1.unlock(); }
  ba() { l2.lock(); l1.lock(); x := (x + 2) % 4; l1.unlock(); l2.unlock(); }
}";

fn main() {
    let em = parse_explicit(SRC).expect("parse");
    let mut m = Machine::new(&em).expect("machine");
    m.set_workload(&[vec![("ab".into(), vec![])], vec![("ba".into(), vec![])]]).expect("workload");
    let ex = explore(&m, &m.start(&[0]), 100_000);
    println!("{:?}", ex.counts);
    for w in &ex.failures {
        if let Outcome::Deadlock { cycle } = &w.outcome {
            println!("deadlock, wait-for cycle {cycle:?}:");
            for e in &w.trace {
                println!("  {e}");
            }
            break;
        }
    }
}
