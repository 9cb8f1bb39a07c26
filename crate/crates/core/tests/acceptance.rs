//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported but do not fail the
//! process unless `ARGOS_ACCEPT_STRICT=1` is set.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use argos::engine::{solve, DecidedBy, EngineConfig, Event, Trace};
use argos::harness::{
    generate_kinship, generate_kinship_between, render_reports, run_suite, Problem, SuiteReport, System,
};
use argos::llm::{OracleBackend, OracleConfig, OracleKb};
use argos::logic::{ground, to_clause_set, Implication};
use argos::sat::{check_sat, compute_backbone, sat_solve, SatLimits};
use argos::seed::rng_for;
use common::*;
use rand::Rng;

const KNOWN_FAILURES: &[u32] = &[5];
const SEED: u64 = 7;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn backbone_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_for(SEED, "accept|backbone");
    let (mut sat, mut mismatches) = (0, 0);
    for _ in 0..200 {
        let n = rng.random_range(1..=16);
        let m = rng.random_range(0..=(n * 5));
        let clauses = random_3cnf(&mut rng, n, m);
        let Some(expected) = brute_backbone(&clauses) else {
            continue;
        };
        sat += 1;
        let bb = compute_backbone(&clause_set(&clauses), &SatLimits::default()).expect("satisfiable");
        mismatches += usize::from(bb.literals != expected);
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!(
            "{sat} satisfiable of 200, {mismatches} mismatches, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn grounding_oracle() -> Outcome {
    let mut rng = rng_for(SEED, "accept|ground");
    let (mut mismatches, mut sat, mut out_of_bounds) = (0, 0, 0);
    for _ in 0..200 {
        let universe = entities(rng.random_range(1..=3));
        let quantifiers = rng.random_range(0..=3);
        let atoms = rng.random_range(1..=10);
        let f = FormulaGen::new(&mut rng, &universe, quantifiers, atoms).generate();
        let (q, a) = shape(&f);
        out_of_bounds += usize::from(q > 3 || a > 10);
        // The negation too, so valid formulas exercise the unsatisfiable side.
        for f in [f.clone(), argos::logic::Formula::not(f)] {
            let g = ground(&f, &universe, 8).expect("closed formula grounds");
            let got = check_sat(&to_clause_set(&[g]).expect("encodes"), &[], &SatLimits::default())
                .expect("within budget")
                .is_sat();
            let expected = brute_satisfiable(&f, &universe);
            sat += usize::from(expected);
            mismatches += usize::from(got != expected);
        }
    }
    outcome(
        mismatches == 0 && out_of_bounds == 0,
        format!("200 formulas and their negations: {sat} of 400 satisfiable, {mismatches} mismatches"),
    )
}

fn winter_fox() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/winter_fox");
    let problem = Problem::parse_json(&fs::read_to_string(dir.join("winter_fox.json")).unwrap()).unwrap();
    let kb = OracleKb::load(&dir.join("kb.json")).unwrap();
    let r = solve(
        &problem,
        &EngineConfig::default(),
        &OracleBackend::new(kb, OracleConfig::default()),
    )
    .unwrap();
    let clauses: Vec<String> = r.commonsense.iter().map(|c| c.text()).collect();
    let expected = [
        "turns_white(fox, winter) -> reflects(fox, sun)",
        "reflects(fox, sun) -> ~absorbs(fox, sun)",
        "~absorbs(fox, sun) & turns_white(fox, winter) -> ~absorbs(white, sun)",
    ];
    let golden = fs::read_to_string(dir.join("trace.jsonl")).unwrap();
    let trace_ok = r.trace.to_jsonl() == golden;
    outcome(
        !r.verdict && r.decided_by == DecidedBy::Sat && clauses == expected && trace_ok,
        format!("{r}, golden trace {}", if trace_ok { "matches" } else { "differs" }),
    )
}

struct Kinship {
    problems: Vec<Problem>,
    kb: OracleKb,
    report: SuiteReport,
    elapsed: Duration,
}

fn kinship_run() -> Kinship {
    let start = Instant::now();
    let (problems, kb) = generate_kinship(100, 4, SEED).expect("generator succeeds");
    let oracle = OracleBackend::new(kb.clone(), OracleConfig::default());
    let report = run_suite(
        &problems,
        &EngineConfig::default(),
        &oracle,
        &[System::Argos, System::PureSat],
        jobs(),
    );
    Kinship {
        problems,
        kb,
        report,
        elapsed: start.elapsed(),
    }
}

fn end_to_end(k: &Kinship) -> Outcome {
    let argos = &k.report.runs[0];
    let sat = &k.report.runs[1];
    let unknown = sat
        .records
        .iter()
        .filter(|r| r.decided_by == "coin" && !r.inconsistent)
        .count();
    let by_sat = argos.records.iter().filter(|r| r.decided_by == "sat").count();
    let clean = argos.records.iter().filter(|r| r.corrupted == Some(false)).count();
    let n = k.problems.len();
    outcome(
        unknown == n && argos.accuracy == 1.0 && by_sat * 100 >= 95 * n && clean == n && k.elapsed < Duration::from_secs(300),
        format!(
            "pure SAT unknown {unknown}/{n}, ARGOS accuracy {:.2}, by sat {by_sat}/{n}, uncorrupted {clean}/{n}, {:.1}s",
            argos.accuracy,
            k.elapsed.as_secs_f64()
        ),
    )
}

fn cost_bound(k: &Kinship) -> Outcome {
    let argos = &k.report.runs[0];
    let cfg = EngineConfig::default();
    let bound = (cfg.k as f64 * (cfg.gamma0 - 0.5) / cfg.alpha).round() as usize;
    let over_cot: Vec<&str> = argos
        .records
        .iter()
        .filter(|r| r.cot_calls > bound)
        .map(|r| r.id.as_str())
        .collect();
    let over_iter = argos.records.iter().filter(|r| r.iterations > 10).count();
    let max_cot = argos.records.iter().map(|r| r.cot_calls).max().unwrap_or(0);
    let max_iter = argos.records.iter().map(|r| r.iterations).max().unwrap_or(0);
    outcome(
        over_cot.is_empty() && over_iter == 0,
        format!(
            "max cot {max_cot} (bound {bound}), max iterations {max_iter}; over cot bound: {} {:?}",
            over_cot.len(),
            over_cot
        ),
    )
}

fn flip_direction() -> Outcome {
    let (problems, kb) = generate_kinship_between(100, 4, 4, SEED).expect("generator succeeds");
    let oracle = OracleBackend::new(
        kb,
        OracleConfig {
            reasoning_depth: 2,
            ..OracleConfig::default()
        },
    );
    let report = run_suite(
        &problems,
        &EngineConfig::default(),
        &oracle,
        &[System::Argos, System::Sc(5)],
        jobs(),
    );
    let Some(flips) = report.flips else {
        return outcome(false, "no flip table");
    };
    let rows: Vec<_> = flips.rows.iter().filter(|r| r.problems > 0).collect();
    let sc: Vec<f64> = rows.iter().filter_map(|r| r.sc_accuracy()).collect();
    let inversions = sc.windows(2).filter(|w| w[1] > w[0]).count();
    let argos_ge = rows.iter().all(|r| r.argos_correct >= r.sc_correct);
    let table: Vec<String> = flips
        .rows
        .iter()
        .map(|r| match (r.argos_accuracy(), r.sc_accuracy()) {
            (Some(a), Some(s)) => format!("{}: n={} argos {a:.2} sc {s:.2}", r.bucket, r.problems),
            _ => format!("{}: empty", r.bucket),
        })
        .collect();
    outcome(
        inversions <= 1 && argos_ge && flips.correct_flips > flips.incorrect_flips,
        format!(
            "flips {} correct / {} incorrect; {}",
            flips.correct_flips,
            flips.incorrect_flips,
            table.join("; ")
        ),
    )
}

fn commonsense_independence() -> Outcome {
    let mut rng = rng_for(SEED, "accept|app-a");
    let (mut pairs, mut decided_subsets, mut violations) = (0, 0, 0);
    while pairs < 100 {
        let n = rng.random_range(3..=12);
        let m = rng.random_range(0..=n * 2);
        let clauses = random_3cnf(&mut rng, n, m);
        let star: Vec<Implication> = (0..rng.random_range(1..=6))
            .map(|_| random_implication(&mut rng, n))
            .collect();
        let mut joint = clauses.clone();
        joint.extend(star.iter().map(Implication::clause));
        if brute_backbone(&joint).is_none() {
            continue;
        }
        pairs += 1;
        let premises: Vec<_> = clauses
            .iter()
            .map(|c| argos::logic::Formula::disjunction(c.iter().map(|l| l.to_formula())).unwrap())
            .collect();
        let query = lit(rng.random_range(0..n), true).to_formula();
        let mut verdicts = BTreeSet::new();
        for mask in 0u32..1 << star.len() {
            let subset: Vec<Implication> = star
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, c)| c.clone())
                .collect();
            let r = sat_solve(&premises, &subset, &query, &SatLimits::default()).unwrap();
            if let Some(v) = r.conclusion.verdict() {
                decided_subsets += 1;
                verdicts.insert(v);
            }
        }
        violations += usize::from(verdicts.len() > 1);
    }
    outcome(
        violations == 0,
        format!("{pairs} pairs, {decided_subsets} decided subsets, {violations} violations"),
    )
}

fn routed_to_fallback(trace: &Trace) -> bool {
    let inconsistent = trace.events.iter().position(|e| matches!(e.event, Event::Inconsistent));
    let Some(at) = inconsistent else { return true };
    let voted = trace.events.iter().any(|e| matches!(e.event, Event::Vote { .. }));
    let result = trace.events[at..].iter().find_map(|e| match e.event {
        Event::Result { decided_by, .. } => Some(decided_by),
        _ => None,
    });
    voted && result == Some(DecidedBy::Fallback)
}

fn noise(k: &Kinship) -> Outcome {
    let oracle = OracleBackend::new(
        k.kb.clone(),
        OracleConfig {
            noise: 0.2,
            seed: SEED,
            ..OracleConfig::default()
        },
    );
    let report = run_suite(
        &k.problems,
        &EngineConfig::default(),
        &oracle,
        &[System::Argos, System::PureSat],
        jobs(),
    );
    let (argos, sat) = (&report.runs[0], &report.runs[1]);
    let inconsistent = argos.records.iter().filter(|r| r.inconsistent).count();
    let misrouted = report.traces.values().filter(|t| !routed_to_fallback(t)).count()
        + argos
            .records
            .iter()
            .filter(|r| r.inconsistent && r.decided_by != "fallback")
            .count();
    outcome(
        argos.errors == 0 && misrouted == 0 && argos.accuracy > sat.accuracy,
        format!(
            "errors {}, inconsistent {inconsistent} (misrouted {misrouted}), ARGOS {:.2} vs pure SAT {:.2}",
            argos.errors, argos.accuracy, sat.accuracy
        ),
    )
}

fn determinism(k: &Kinship) -> Outcome {
    let again = kinship_run();
    let a = render_reports(&k.report).expect("renders");
    let b = render_reports(&again.report).expect("renders");
    let csv_same = a == b;
    let jsonl = |r: &SuiteReport| {
        r.traces
            .iter()
            .map(|(id, t)| (id.clone(), t.to_jsonl()))
            .collect::<Vec<_>>()
    };
    let traces_same = jsonl(&k.report) == jsonl(&again.report);
    outcome(
        csv_same && traces_same && !k.report.traces.is_empty(),
        format!(
            "{} CSV files {}, {} traces {}",
            a.len(),
            if csv_same { "identical" } else { "differ" },
            k.report.traces.len(),
            if traces_same { "identical" } else { "differ" }
        ),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("ARGOS_ACCEPT_STRICT").is_ok_and(|v| v == "1");
    let kinship = kinship_run();
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "backbone oracle equivalence", Box::new(backbone_oracle)),
        (2, "grounding oracle", Box::new(grounding_oracle)),
        (3, "winter-fox golden trace", Box::new(winter_fox)),
        (4, "end-to-end abduction", Box::new(|| end_to_end(&kinship))),
        (5, "cost bound", Box::new(|| cost_bound(&kinship))),
        (6, "flip direction", Box::new(flip_direction)),
        (7, "commonsense-set independence", Box::new(commonsense_independence)),
        (8, "noise robustness", Box::new(|| noise(&kinship))),
        (9, "determinism", Box::new(|| determinism(&kinship))),
    ];
    let mut failed = Vec::new();
    for (n, name, check) in &criteria {
        let o = check();
        let known = KNOWN_FAILURES.contains(n);
        let status = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {n} {status}: {name} — {}", o.detail);
        if !o.pass && (strict || !known) {
            failed.push(*n);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
