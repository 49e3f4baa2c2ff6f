//! One PASS/FAIL line per acceptance criterion.
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::*;
use monweaver::analysis::{analyze, AnalysisConfig};
use monweaver::cli::{synth, Opts, SynthOutput};
use monweaver::codegen::{drop_last_unlock, parse_explicit, scan_locks, swap_first_acquire, ExplicitMonitor};
use monweaver::fdg::{construct, FragmentKind, PartitionMode};
use monweaver::frontend::{expr_to_string, load, MonitorAst};
use monweaver::maxsat::{compute_max_locks, encode, solve, Weights};
use monweaver::simulator::{check_correctness, Mode, Report, Workload};

type Verdict = Result<String, String>;

struct Bench {
    name: &'static str,
    ast: MonitorAst,
    out: SynthOutput,
    emitted: ExplicitMonitor,
    work: Workload,
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("took {t:.1?}, limit {limit:?}"));
    }
    Ok(())
}

fn load_benchmarks() -> Result<Vec<Bench>, String> {
    BENCHMARKS
        .iter()
        .map(|&name| {
            let ast = load(&read_corpus(&format!("{name}.imon"))).map_err(|e| format!("{name}: {e}"))?;
            let out = synth(&ast, &Opts::default()).map_err(|e| format!("{name}: {e}"))?;
            let emitted = parse_explicit(&out.text).map_err(|e| format!("{name}: reparse: {e}"))?;
            let work = Workload::parse(&read_corpus(&format!("{name}.work"))).map_err(|e| format!("{name}: {e}"))?;
            Ok(Bench { name, ast, out, emitted, work })
        })
        .collect()
}

fn criterion1(queue: &SynthOutput, elapsed: Duration) -> Verdict {
    if elapsed > Duration::from_secs(120) {
        return Err(format!("synth took {elapsed:.1?}"));
    }
    let p = &queue.synthesis.protocol;
    if p.locks != 2 {
        return Err(format!("{} locks", p.locks));
    }
    if p.atomics.iter().collect::<Vec<_>>() != ["count"] {
        return Err(format!("atomics {:?}", p.atomics));
    }
    let fdg = &queue.fdg;
    let sets = |method: &str| -> BTreeSet<BTreeSet<usize>> {
        fdg.fragments
            .iter()
            .filter(|f| fdg.method_names[f.method] == method && f.kind != FragmentKind::Signal)
            .map(|f| p.held[f.id].clone())
            .collect()
    };
    let (put, take) = (sets("put"), sets("take"));
    let one = |s: &BTreeSet<BTreeSet<usize>>| -> Option<usize> {
        let v: Vec<_> = s.iter().collect();
        match v.as_slice() {
            [only] if only.len() == 1 => only.iter().next().copied(),
            _ => None,
        }
    };
    let (Some(lp), Some(lt)) = (one(&put), one(&take)) else {
        return Err(format!("put holds {put:?}, take holds {take:?}"));
    };
    if lp == lt {
        return Err("put and take share their lock".into());
    }
    let cvs = &queue.explicit.monitor.condvars;
    let cv_lock = |pred: &str| cvs.iter().find(|c| expr_to_string(&c.pred).replace(".get()", "") == pred).map(|c| c.lock);
    if cv_lock("count < 3") != Some(lp) || cv_lock("count > 0") != Some(lt) {
        return Err(format!("condvars {cvs:?}"));
    }
    Ok(format!("locks l{} (put) / l{} (take), atomic count, {elapsed:.1?}", lp + 1, lt + 1))
}

fn criteria2_3() -> (Verdict, Verdict) {
    let start = Instant::now();
    let ast = load(&read_corpus("queue.imon")).unwrap();
    let fdg = construct(&ast, PartitionMode::Paper).unwrap();
    let res = analyze(&ast, &fdg, &AnalysisConfig::default());
    let elapsed = start.elapsed();
    let c2 = (|| {
        let lc = |a: usize, b: usize| res.left_commutes(a - 1, b - 1);
        let rc = |a: usize, b: usize| res.right_commutes(a - 1, b - 1);
        let got = [lc(4, 5), lc(4, 1), rc(4, 6), rc(4, 7), rc(4, 8)];
        if got != [true, false, true, true, true] {
            return Err(format!("LC(4,5) LC(4,1) RC(4,6..8) = {got:?}"));
        }
        within(Duration::from_secs(10), start)?;
        Ok(format!("LC(f4,f5)=T LC(f4,f1)=F RC(f4,f6..f8)=T, {elapsed:.1?}"))
    })();
    let c3 = (|| {
        let mut cross = BTreeSet::new();
        for v in 0..fdg.len() {
            for &(s, t) in &fdg.edges {
                if !fdg.same_method(v, s) {
                    cross.insert((v, (s, t)));
                }
            }
        }
        if res.safe != cross {
            let extra: Vec<_> = res.safe.difference(&cross).collect();
            let missing: Vec<_> = cross.difference(&res.safe).collect();
            return Err(format!("extra {extra:?}, missing {missing:?}"));
        }
        within(Duration::from_secs(60), start)?;
        Ok(format!("{} cross-method interleavings, none within a method", cross.len()))
    })();
    (c2, c3)
}

fn workload_in_bounds(b: &Bench) -> Result<(), String> {
    let w = &b.work;
    if w.threads.len() > 3 || w.threads.iter().any(|t| t.len() > 2) || w.mode != Mode::Exhaustive {
        return Err(format!("{}: workload exceeds 3 threads x 2 ops or is not exhaustive", b.name));
    }
    let mut values: BTreeMap<(&str, usize), BTreeSet<i64>> = BTreeMap::new();
    for op in w.threads.iter().flatten() {
        for (i, a) in op.args.iter().enumerate() {
            values.entry((op.method.as_str(), i)).or_default().insert(*a);
        }
    }
    if let Some(((m, i), vs)) = values.iter().find(|(_, vs)| vs.len() > 4) {
        return Err(format!("{}: {m} argument {i} takes {} values", b.name, vs.len()));
    }
    Ok(())
}

fn criterion4(benches: &[Bench], reports: &[Report], elapsed: Duration) -> Verdict {
    if elapsed > Duration::from_secs(600) {
        return Err(format!("took {elapsed:.1?}"));
    }
    let mut histories = 0;
    let mut finals = 0;
    for (b, r) in benches.iter().zip(reports) {
        workload_in_bounds(b)?;
        if r.truncated {
            return Err(format!("{}: exploration truncated", b.name));
        }
        if !r.sequential.pass || !r.interleaved.pass || !r.implicit.errors.is_empty() {
            let ce = r.sequential.counterexamples.first().or(r.interleaved.counterexamples.first());
            return Err(format!("{}: {:?}", b.name, ce.map(|c| &c.reason)));
        }
        histories += r.sequential.checked;
        finals += r.interleaved.checked;
    }
    Ok(format!("{} benchmarks, {histories} concretized histories, {finals} explicit end states matched, {elapsed:.1?}", benches.len()))
}

fn failures_on(ast: &MonitorAst, em: &ExplicitMonitor, w: &Workload) -> Result<usize, String> {
    let r = check_correctness(ast, em, w).map_err(|e| e.to_string())?;
    Ok(r.verdicts.deadlock + r.verdicts.stuck)
}

fn criterion5(benches: &[Bench], reports: &[Report]) -> Verdict {
    for (b, r) in benches.iter().zip(reports) {
        if r.verdicts.deadlock + r.verdicts.stuck > 0 {
            return Err(format!("{}: {} deadlock, {} stuck", b.name, r.verdicts.deadlock, r.verdicts.stuck));
        }
    }
    let find = |n: &str| benches.iter().find(|b| b.name == n).unwrap();
    let q = find("queue");
    let dropped = drop_last_unlock(&q.emitted).ok_or("queue has no unlock")?;
    let a = failures_on(&q.ast, &dropped, &q.work)?;
    let c = find("crossing");
    let swapped = swap_first_acquire(&c.emitted).ok_or("crossing has no nested acquisition")?;
    let s = failures_on(&c.ast, &swapped, &c.work)?;
    if a == 0 || s == 0 {
        return Err(format!("mutations undetected: removed unlock {a}, inverted order {s}"));
    }
    Ok(format!("0 DEADLOCK/STUCK on {} outputs; mutations flagged: removed unlock {a}, inverted order {s}", benches.len()))
}

fn criterion6() -> Verdict {
    let start = Instant::now();
    let wt = Weights::default();
    let mut r = rng(7);
    for i in 0..50 {
        let p = random_problem(&mut r);
        let locks = (p.len() % 3) + 1;
        let out = solve(&encode(&p, locks, &wt).wcnf, None, 0);
        let bf = brute_force_objective(&p, locks, &wt);
        if out.cost != bf {
            return Err(format!("instance {i}: solver {} vs enumeration {bf}", out.cost));
        }
    }
    let mut graphs = 0;
    for n in 1..=6 {
        for g in nonisomorphic(n) {
            graphs += 1;
            let p = race_only(&g);
            let ecc = min_edge_clique_cover(&g);
            let got = solver_min_locks(&p, compute_max_locks(&p));
            if got != Some(ecc) {
                return Err(format!("{g:?}: solver {got:?}, clique cover {ecc}"));
            }
        }
    }
    within(Duration::from_secs(300), start)?;
    Ok(format!("50/50 objectives, {graphs}/{graphs} graphs, {:.1?}", start.elapsed()))
}

fn criterion7(benches: &[Bench]) -> Verdict {
    for b in benches {
        scan_locks(&b.emitted).map_err(|v| format!("{}: {v}", b.name))?;
    }
    Ok(format!("{} emitted monitors", benches.len()))
}

fn criterion8(queue: &SynthOutput) -> Verdict {
    let ast = load(&read_corpus("queue.imon")).unwrap();
    let single = synth(&ast, &Opts { max_locks: Some(1), ..Opts::default() }).map_err(|e| e.to_string())?;
    let pairs = |o: &SynthOutput| o.protocol_json()["parallelism"]["disjoint_lock_pairs"].as_u64().unwrap();
    let (fine, one) = (pairs(queue), pairs(&single));
    if fine < 12 || one != 0 {
        return Err(format!("{fine} disjoint pairs vs {one} with one lock"));
    }
    Ok(format!("{fine} disjoint race-free pairs vs {one} with --max-locks 1"))
}

fn main() {
    let mut results: Vec<(usize, Verdict)> = Vec::new();
    let start = Instant::now();
    let benches = load_benchmarks();
    let synth_time = start.elapsed();
    let (c2, c3) = criteria2_3();
    match benches {
        Err(e) => {
            for n in [1, 4, 5, 7, 8] {
                results.push((n, Err(e.clone())));
            }
        }
        Ok(benches) => {
            let queue = &benches.iter().find(|b| b.name == "queue").unwrap().out;
            results.push((1, criterion1(queue, synth_time)));
            let t = Instant::now();
            let reports: Result<Vec<Report>, String> =
                benches.iter().map(|b| check_correctness(&b.ast, &b.emitted, &b.work).map_err(|e| format!("{}: {e}", b.name))).collect();
            let elapsed = t.elapsed();
            match reports {
                Ok(reports) => {
                    results.push((4, criterion4(&benches, &reports, elapsed)));
                    results.push((5, criterion5(&benches, &reports)));
                }
                Err(e) => {
                    results.push((4, Err(e.clone())));
                    results.push((5, Err(e)));
                }
            }
            results.push((7, criterion7(&benches)));
            results.push((8, criterion8(queue)));
        }
    }
    results.push((2, c2));
    results.push((3, c3));
    results.push((6, criterion6()));
    results.sort_by_key(|(n, _)| *n);
    let mut failed = 0;
    for (n, v) in &results {
        match v {
            Ok(msg) => println!("criterion {n}: PASS - {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL - {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
