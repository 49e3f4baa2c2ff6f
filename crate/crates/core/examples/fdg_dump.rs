//! Print the fragment dependency graph of a monitor as JSON and DOT.
//!
//! `cargo run --example fdg_dump -- corpus/queue.imon`

use monweaver::fdg::{construct, PartitionMode};
use monweaver::frontend::load;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/queue.imon").into());
    let src = std::fs::read_to_string(&path).expect("read monitor");
    let ast = load(&src).unwrap_or_else(|e| panic!("{path}: {e}"));
    let fdg = construct(&ast, PartitionMode::Paper).expect("fdg");
    println!("{}", serde_json::to_string_pretty(&fdg.to_json()).unwrap());
    print!("{}", fdg.to_dot());
}
