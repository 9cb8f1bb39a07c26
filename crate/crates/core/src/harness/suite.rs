//! Running systems over a corpus and the quantities reported about the runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use rand::Rng;
use serde::Serialize;

use super::Problem;
use crate::engine::{solve, EngineConfig, Trace};
use crate::llm::{llm_solve, Context, CotCounter, LlmBackend};
use crate::logic::{ground_all, Entity, Formula, Implication, LogicError};
use crate::sat::{sat_solve, SatConclusion};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    Argos,
    /// SAT alone; an undecided query gets a seeded coin flip.
    PureSat,
    /// Self-consistency vote over `n` samples.
    Sc(usize),
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::Argos => f.write_str("argos"),
            System::PureSat => f.write_str("sat"),
            System::Sc(n) => write!(f, "sc{n}"),
        }
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "argos" => Ok(System::Argos),
            "sat" => Ok(System::PureSat),
            _ => s
                .strip_prefix("sc")
                .and_then(|n| n.parse().ok())
                .filter(|n| *n >= 1)
                .map(System::Sc)
                .ok_or_else(|| format!("unknown system `{s}` (expected argos, sat or scN)")),
        }
    }
}

/// One system's outcome on one problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub id: String,
    pub system: String,
    pub verdict: Option<bool>,
    pub label: Option<bool>,
    pub correct: Option<bool>,
    /// `sat`, `self-consistency`, `fallback`, `coin` or `vote`.
    pub decided_by: String,
    pub iterations: usize,
    pub cot_calls: usize,
    pub clauses: usize,
    /// Accepted clauses whose removal changes the SAT verdict.
    pub useful_clauses: usize,
    pub inconsistent: bool,
    pub corrupted: Option<bool>,
    pub error: Option<String>,
}

impl Record {
    fn new(p: &Problem, system: System) -> Self {
        Record {
            id: p.id.clone(),
            system: system.to_string(),
            verdict: None,
            label: p.label,
            correct: None,
            decided_by: String::new(),
            iterations: 0,
            cot_calls: 0,
            clauses: 0,
            useful_clauses: 0,
            inconsistent: false,
            corrupted: None,
            error: None,
        }
    }

    fn set_verdict(&mut self, v: bool) {
        self.verdict = Some(v);
        self.correct = self.label.map(|l| l == v);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub bucket: &'static str,
    pub problems: usize,
    pub correct: usize,
}

impl BucketRow {
    pub fn accuracy(&self) -> Option<f64> {
        (self.problems > 0).then(|| self.correct as f64 / self.problems as f64)
    }
}

pub const BUCKETS: [(&str, usize, usize); 3] = [("0-2", 0, 2), ("3-5", 3, 5), ("6+", 6, usize::MAX)];

pub fn bucket_of(iterations: usize) -> usize {
    BUCKETS
        .iter()
        .position(|(_, lo, hi)| (*lo..=*hi).contains(&iterations))
        .expect("buckets cover all counts")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub system: System,
    pub records: Vec<Record>,
    pub accuracy: f64,
    /// Problems with a label.
    pub labelled: usize,
    pub correct: usize,
    pub corrupted: usize,
    pub errors: usize,
    /// Accuracy by this system's iteration count.
    pub buckets: Vec<BucketRow>,
    /// `(correct, incorrect)` flips against the suite's SC baseline.
    pub flips: Option<(usize, usize)>,
}

impl RunMetrics {
    pub fn from_records(system: System, records: Vec<Record>) -> Self {
        let labelled = records.iter().filter(|r| r.correct.is_some()).count();
        let correct = records.iter().filter(|r| r.correct == Some(true)).count();
        let mut buckets: Vec<BucketRow> = BUCKETS
            .iter()
            .map(|(name, _, _)| BucketRow {
                bucket: name,
                problems: 0,
                correct: 0,
            })
            .collect();
        for r in records.iter().filter(|r| r.correct.is_some()) {
            let b = &mut buckets[bucket_of(r.iterations)];
            b.problems += 1;
            b.correct += usize::from(r.correct == Some(true));
        }
        RunMetrics {
            system,
            accuracy: if labelled == 0 {
                0.0
            } else {
                correct as f64 / labelled as f64
            },
            labelled,
            correct,
            corrupted: records.iter().filter(|r| r.corrupted == Some(true)).count(),
            errors: records.iter().filter(|r| r.error.is_some()).count(),
            buckets,
            flips: None,
            records,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub runs: Vec<RunMetrics>,
    /// ARGOS traces by problem id.
    pub traces: BTreeMap<String, Trace>,
    pub flips: Option<FlipTable>,
}

fn universe_with(p: &Problem, clauses: &[Implication]) -> BTreeSet<Entity> {
    let mut u = p.universe();
    for c in clauses {
        u.extend(c.entities());
    }
    u
}

fn ground(fs: &[Formula], universe: &BTreeSet<Entity>, depth: usize) -> Result<Vec<Formula>, LogicError> {
    if fs.iter().all(Formula::is_quantifier_free) {
        Ok(fs.to_vec())
    } else {
        ground_all(fs, universe, depth)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CorruptionError {
    #[error("problem has no withheld rules to restore")]
    NoRules,
    #[error("restored problem does not decide the query ({0})")]
    Undecided(SatConclusion),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Whether `accepted` changes the verdict of the problem with its withheld
/// rules restored, or makes it inconsistent.
pub fn corruption_check(p: &Problem, accepted: &[Implication], config: &EngineConfig) -> Result<bool, CorruptionError> {
    if p.withheld_rules.is_empty() {
        return Err(CorruptionError::NoRules);
    }
    let universe = universe_with(p, accepted);
    let mut all = p.premises.clone();
    all.extend(p.withheld_rules.iter().cloned());
    let full = ground(&all, &universe, config.grounding_depth)?;
    let query = ground(std::slice::from_ref(&p.query), &universe, config.grounding_depth)?.remove(0);
    let base = sat_solve(&full, &[], &query, &config.sat)?;
    if !base.conclusion.is_decided() {
        return Err(CorruptionError::Undecided(base.conclusion));
    }
    let with = sat_solve(&full, accepted, &query, &config.sat)?;
    Ok(with.conclusion != base.conclusion)
}

/// Accepted clauses without which `𝒫 ∪ 𝒞` no longer reaches the same
/// verdict.
pub fn useful_clauses(p: &Problem, accepted: &[Implication], config: &EngineConfig) -> Result<usize, LogicError> {
    let universe = universe_with(p, accepted);
    let premises = ground(&p.premises, &universe, config.grounding_depth)?;
    let query = ground(std::slice::from_ref(&p.query), &universe, config.grounding_depth)?.remove(0);
    let full = sat_solve(&premises, accepted, &query, &config.sat)?.conclusion;
    let mut useful = 0;
    for i in 0..accepted.len() {
        let mut rest = accepted.to_vec();
        rest.remove(i);
        if sat_solve(&premises, &rest, &query, &config.sat)?.conclusion != full {
            useful += 1;
        }
    }
    Ok(useful)
}

fn run_argos(p: &Problem, config: &EngineConfig, backend: &dyn LlmBackend) -> (Record, Option<Trace>) {
    let mut rec = Record::new(p, System::Argos);
    match solve(p, config, backend) {
        Ok(r) => {
            rec.set_verdict(r.verdict);
            rec.decided_by = r.decided_by.to_string();
            rec.iterations = r.iterations;
            rec.cot_calls = r.cot_calls;
            rec.clauses = r.commonsense.len();
            rec.inconsistent = r.inconsistent;
            rec.error = r.error.clone();
            let accepted: Vec<Implication> = r.commonsense.iter().filter_map(|c| c.implication.clone()).collect();
            if !p.withheld_rules.is_empty() {
                match corruption_check(p, &accepted, config) {
                    Ok(c) => rec.corrupted = Some(c),
                    Err(e) => rec.error = Some(format!("corruption check: {e}")),
                }
            }
            match useful_clauses(p, &accepted, config) {
                Ok(n) => rec.useful_clauses = n,
                Err(e) => rec.error = Some(format!("usefulness: {e}")),
            }
            (rec, Some(r.trace))
        }
        Err(e) => {
            rec.error = Some(e.to_string());
            (rec, None)
        }
    }
}

fn run_sat(p: &Problem, config: &EngineConfig) -> Record {
    let mut rec = Record::new(p, System::PureSat);
    let universe = p.universe();
    let outcome = ground(&p.premises, &universe, config.grounding_depth).and_then(|premises| {
        let query = ground(std::slice::from_ref(&p.query), &universe, config.grounding_depth)?.remove(0);
        sat_solve(&premises, &[], &query, &config.sat)
    });
    match outcome {
        Ok(report) => match report.conclusion.verdict() {
            Some(v) => {
                rec.set_verdict(v);
                rec.decided_by = "sat".into();
            }
            None => {
                rec.inconsistent = report.conclusion == SatConclusion::InconsistentPremises;
                rec.set_verdict(rng_for(config.seed, &format!("coin|{}", p.id)).random_bool(0.5));
                rec.decided_by = "coin".into();
            }
        },
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn run_sc(p: &Problem, n: usize, config: &EngineConfig, backend: &dyn LlmBackend) -> Record {
    let mut rec = Record::new(p, System::Sc(n));
    let universe = p.universe();
    let grounded = ground(&p.premises, &universe, config.grounding_depth).and_then(|premises| {
        let query = ground(std::slice::from_ref(&p.query), &universe, config.grounding_depth)?.remove(0);
        Ok((premises, query))
    });
    let (premises, query) = match grounded {
        Ok(g) => g,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let ctx = Context::new(
        &p.premises,
        &premises,
        &[],
        &query,
        config.prompt_style.unwrap_or(p.style),
    )
    .with_exemplars(&p.exemplars);
    let counter = CotCounter::new();
    match llm_solve(backend, &ctx, n, &counter) {
        Ok(v) => {
            rec.set_verdict(v.answer);
            rec.decided_by = "vote".into();
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.cot_calls = counter.get();
    rec
}

/// Run every system on every problem using `jobs` worker threads. Records
/// come back in problem order whatever the interleaving.
pub fn run_suite(
    problems: &[Problem],
    config: &EngineConfig,
    backend: &dyn LlmBackend,
    systems: &[System],
    jobs: usize,
) -> SuiteReport {
    let tasks: Vec<(usize, System)> = systems
        .iter()
        .enumerate()
        .flat_map(|(s, _)| (0..problems.len()).map(move |i| (s, i)))
        .map(|(s, i)| (i, systems[s]))
        .collect();
    type Slot = Mutex<Option<(Record, Option<Trace>)>>;
    let slots: Vec<Slot> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let t = next.fetch_add(1, Ordering::SeqCst);
        let Some(&(i, system)) = tasks.get(t) else { break };
        let p = &problems[i];
        log::debug!("{system} on {}", p.id);
        let out = match system {
            System::Argos => run_argos(p, config, backend),
            System::PureSat => (run_sat(p, config), None),
            System::Sc(n) => (run_sc(p, n, config, backend), None),
        };
        *slots[t].lock().expect("result slot") = Some(out);
    };
    thread::scope(|s| {
        for _ in 1..jobs.max(1) {
            s.spawn(worker);
        }
        worker();
    });

    let mut by_system: Vec<Vec<Record>> = vec![Vec::new(); systems.len()];
    let mut traces = BTreeMap::new();
    for (t, slot) in slots.into_iter().enumerate() {
        let (rec, trace) = slot.into_inner().expect("result slot").expect("every task ran");
        if let Some(trace) = trace {
            traces.insert(rec.id.clone(), trace);
        }
        by_system[t / problems.len().max(1)].push(rec);
    }
    let mut runs: Vec<RunMetrics> = systems
        .iter()
        .zip(by_system)
        .map(|(s, recs)| RunMetrics::from_records(*s, recs))
        .collect();

    let argos = runs.iter().position(|r| r.system == System::Argos);
    let sc = runs.iter().position(|r| matches!(r.system, System::Sc(_)));
    let flips = match (argos, sc) {
        (Some(a), Some(s)) => flip_analysis(&runs[a].records, &runs[s].records).ok(),
        _ => None,
    };
    if let (Some(a), Some(f)) = (argos, &flips) {
        runs[a].flips = Some((f.correct_flips, f.incorrect_flips));
    }
    SuiteReport { runs, traces, flips }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipRow {
    pub bucket: &'static str,
    pub problems: usize,
    pub argos_correct: usize,
    pub sc_correct: usize,
    pub correct_flips: usize,
    pub incorrect_flips: usize,
}

impl FlipRow {
    pub fn argos_accuracy(&self) -> Option<f64> {
        (self.problems > 0).then(|| self.argos_correct as f64 / self.problems as f64)
    }

    pub fn sc_accuracy(&self) -> Option<f64> {
        (self.problems > 0).then(|| self.sc_correct as f64 / self.problems as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipTable {
    pub rows: Vec<FlipRow>,
    /// SC wrong, ARGOS right.
    pub correct_flips: usize,
    /// SC right, ARGOS wrong.
    pub incorrect_flips: usize,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("problem ids differ between runs: {0}")]
pub struct IdMismatch(pub String);

/// Compare ARGOS with an SC baseline, bucketed by ARGOS iteration count.
/// Only labelled problems answered by both systems count.
pub fn flip_analysis(argos: &[Record], sc: &[Record]) -> Result<FlipTable, IdMismatch> {
    let sc_by_id: BTreeMap<&str, &Record> = sc.iter().map(|r| (r.id.as_str(), r)).collect();
    let argos_ids: BTreeSet<&str> = argos.iter().map(|r| r.id.as_str()).collect();
    if let Some(id) = argos_ids
        .symmetric_difference(&sc_by_id.keys().copied().collect())
        .next()
    {
        return Err(IdMismatch((*id).to_string()));
    }
    let mut rows: Vec<FlipRow> = BUCKETS
        .iter()
        .map(|(name, _, _)| FlipRow {
            bucket: name,
            problems: 0,
            argos_correct: 0,
            sc_correct: 0,
            correct_flips: 0,
            incorrect_flips: 0,
        })
        .collect();
    for a in argos {
        let s = sc_by_id[a.id.as_str()];
        let (Some(ac), Some(sc)) = (a.correct, s.correct) else {
            continue;
        };
        let row = &mut rows[bucket_of(a.iterations)];
        row.problems += 1;
        row.argos_correct += usize::from(ac);
        row.sc_correct += usize::from(sc);
        row.correct_flips += usize::from(ac && !sc);
        row.incorrect_flips += usize::from(!ac && sc);
    }
    Ok(FlipTable {
        correct_flips: rows.iter().map(|r| r.correct_flips).sum(),
        incorrect_flips: rows.iter().map(|r| r.incorrect_flips).sum(),
        rows,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn fmt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

/// Metrics files written by [`write_reports`], with their columns.
pub const REPORT_FILES: [(&str, &str); 5] = [
    (
        "accuracy.csv",
        "system,problems,labelled,correct,accuracy,decided_by_sat,inconsistent,corrupted,errors,mean_cot_calls,mean_iterations,correct_flips,incorrect_flips",
    ),
    ("records.csv", "system,id,label,verdict,correct,decided_by,iterations,cot_calls,clauses,useful_clauses,inconsistent,corrupted,error"),
    ("buckets.csv", "system,bucket,problems,correct,accuracy"),
    ("flips.csv", "bucket,problems,argos_correct,sc_correct,argos_accuracy,sc_accuracy,correct_flips,incorrect_flips"),
    ("cost.csv", "system,cot_calls,problems"),
];

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn header(name: &str) -> Vec<&'static str> {
    REPORT_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, h)| h.split(',').collect())
        .expect("known report")
}

/// CSV text of each report, keyed by file name.
pub fn render_reports(report: &SuiteReport) -> io::Result<Vec<(&'static str, String)>> {
    let mut out = Vec::new();
    let finish = |w: csv::Writer<Vec<u8>>| -> io::Result<String> {
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        String::from_utf8(bytes).map_err(io::Error::other)
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header("accuracy.csv")).map_err(csv_err)?;
    for run in &report.runs {
        let n = run.records.len();
        let mean = |f: fn(&Record) -> usize| {
            if n == 0 {
                0.0
            } else {
                run.records.iter().map(f).sum::<usize>() as f64 / n as f64
            }
        };
        let (cf, icf) = run
            .flips
            .map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        w.write_record([
            run.system.to_string(),
            n.to_string(),
            run.labelled.to_string(),
            run.correct.to_string(),
            format!("{:.6}", run.accuracy),
            run.records.iter().filter(|r| r.decided_by == "sat").count().to_string(),
            run.records.iter().filter(|r| r.inconsistent).count().to_string(),
            run.corrupted.to_string(),
            run.errors.to_string(),
            format!("{:.6}", mean(|r| r.cot_calls)),
            format!("{:.6}", mean(|r| r.iterations)),
            cf,
            icf,
        ])
        .map_err(csv_err)?;
    }
    out.push(("accuracy.csv", finish(w)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header("records.csv")).map_err(csv_err)?;
    for run in &report.runs {
        for r in &run.records {
            w.write_record([
                r.system.clone(),
                r.id.clone(),
                fmt_bool(r.label),
                fmt_bool(r.verdict),
                fmt_bool(r.correct),
                r.decided_by.clone(),
                r.iterations.to_string(),
                r.cot_calls.to_string(),
                r.clauses.to_string(),
                r.useful_clauses.to_string(),
                r.inconsistent.to_string(),
                fmt_bool(r.corrupted),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.push(("records.csv", finish(w)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header("buckets.csv")).map_err(csv_err)?;
    for run in &report.runs {
        for b in &run.buckets {
            w.write_record([
                run.system.to_string(),
                b.bucket.to_string(),
                b.problems.to_string(),
                b.correct.to_string(),
                fmt_opt(b.accuracy()),
            ])
            .map_err(csv_err)?;
        }
    }
    out.push(("buckets.csv", finish(w)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header("flips.csv")).map_err(csv_err)?;
    if let Some(f) = &report.flips {
        for r in &f.rows {
            w.write_record([
                r.bucket.to_string(),
                r.problems.to_string(),
                r.argos_correct.to_string(),
                r.sc_correct.to_string(),
                fmt_opt(r.argos_accuracy()),
                fmt_opt(r.sc_accuracy()),
                r.correct_flips.to_string(),
                r.incorrect_flips.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.push(("flips.csv", finish(w)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header("cost.csv")).map_err(csv_err)?;
    for run in &report.runs {
        let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &run.records {
            *hist.entry(r.cot_calls).or_default() += 1;
        }
        for (cot, count) in hist {
            w.write_record([run.system.to_string(), cot.to_string(), count.to_string()])
                .map_err(csv_err)?;
        }
    }
    out.push(("cost.csv", finish(w)?));
    Ok(out)
}

/// Write the CSV reports and one `traces/<id>.jsonl` per ARGOS run.
pub fn write_reports(report: &SuiteReport, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in render_reports(report)? {
        std::fs::write(dir.join(name), text)?;
    }
    if !report.traces.is_empty() {
        let tdir = dir.join("traces");
        std::fs::create_dir_all(&tdir)?;
        for (id, trace) in &report.traces {
            std::fs::write(tdir.join(format!("{id}.jsonl")), trace.to_jsonl())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, iterations: usize, correct: bool) -> Record {
        Record {
            id: id.into(),
            system: "x".into(),
            verdict: Some(correct),
            label: Some(true),
            correct: Some(correct),
            decided_by: "sat".into(),
            iterations,
            cot_calls: 0,
            clauses: 0,
            useful_clauses: 0,
            inconsistent: false,
            corrupted: None,
            error: None,
        }
    }

    #[test]
    fn system_names() {
        assert_eq!("sc20".parse::<System>(), Ok(System::Sc(20)));
        assert_eq!("sat".parse::<System>(), Ok(System::PureSat));
        assert!("sc0".parse::<System>().is_err());
        assert!("gpt".parse::<System>().is_err());
        assert_eq!(System::Sc(5).to_string(), "sc5");
    }

    #[test]
    fn one_flip_each_way() {
        let argos = [
            rec("a", 0, true),
            rec("b", 1, false),
            rec("c", 4, true),
            rec("d", 7, true),
        ];
        let sc = [
            rec("a", 0, true),
            rec("b", 0, true),
            rec("c", 0, false),
            rec("d", 0, true),
        ];
        let t = flip_analysis(&argos, &sc).unwrap();
        assert_eq!((t.correct_flips, t.incorrect_flips), (1, 1));
        assert_eq!(t.rows.iter().map(|r| r.problems).sum::<usize>(), 4);
        assert_eq!(t.rows[1].correct_flips, 1);
        assert_eq!(t.rows[0].incorrect_flips, 1);
    }

    #[test]
    fn identical_runs_have_no_flips() {
        let a = [rec("a", 0, true), rec("b", 3, false)];
        let t = flip_analysis(&a, &a).unwrap();
        assert_eq!((t.correct_flips, t.incorrect_flips), (0, 0));
    }

    #[test]
    fn mismatched_ids() {
        assert!(flip_analysis(&[rec("a", 0, true)], &[rec("b", 0, true)]).is_err());
    }

    #[test]
    fn buckets_conserve_counts() {
        let recs = vec![rec("a", 0, true), rec("b", 3, false), rec("c", 9, true)];
        let m = RunMetrics::from_records(System::Argos, recs);
        assert_eq!(m.buckets.iter().map(|b| b.problems).sum::<usize>(), 3);
        assert_eq!(m.buckets.iter().map(|b| b.correct).sum::<usize>(), m.correct);
        assert!((m.accuracy - 2.0 / 3.0).abs() < 1e-12);
    }
}
