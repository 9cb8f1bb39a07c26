//! Conflict-driven clause learning with two watched literals, first-UIP
//! learning, VSIDS, Luby restarts, phase saving and MiniSat-style
//! assumptions.

use std::fmt;
use std::ops::Not;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn new(index: usize) -> Self {
        Var(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `var << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Self {
        Lit(var.0 << 1 | negated as u32)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(x: i64) -> Self {
        assert!(x != 0, "0 is the DIMACS clause terminator");
        Lit::new(Var::new(x.unsigned_abs() as usize - 1), x < 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted {
    pub conflicts: u64,
}

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

type CRef = u32;

#[derive(Debug, Clone, Copy)]
struct Watch {
    cref: CRef,
    blocker: Lit,
}

#[derive(Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

#[inline]
fn value_in(assigns: &[i8], l: Lit) -> i8 {
    let v = assigns[l.var().index()];
    if l.is_neg() {
        -v
    } else {
        v
    }
}

/// Max-heap of variables ordered by activity.
#[derive(Debug, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v as usize] = Some(self.heap.len() - 1);
        self.up(self.heap.len() - 1, act);
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len() && act[self.heap[right] as usize] > act[self.heap[left] as usize] {
                right
            } else {
                left
            };
            let c = self.heap[child];
            if act[c as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = c;
            self.pos[c as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

enum Search {
    Sat,
    Unsat,
    Restart,
    Budget,
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_BASE: f64 = 100.0;

#[derive(Debug)]
pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<CRef>,
    num_original: usize,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<CRef>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    max_learnts: f64,
    conflict_budget: u64,
    total_conflicts: u64,
}

impl Solver {
    pub fn new(conflict_budget: u64) -> Self {
        Solver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            num_original: 0,
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            max_learnts: 0.0,
            conflict_budget,
            total_conflicts: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn total_conflicts(&self) -> u64 {
        self.total_conflicts
    }

    pub fn ensure_vars(&mut self, n: usize) {
        while self.num_vars() < n {
            let v = self.num_vars() as u32;
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(None);
            self.activity.push(0.0);
            self.phase.push(false);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.grow(self.num_vars());
            self.heap.insert(v, &self.activity);
        }
    }

    /// Add a clause at decision level 0. Returns `false` once the clause
    /// database is known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert!(self.trail_lim.is_empty());
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut kept = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                TRUE => return true,
                FALSE => {}
                _ => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(kept[0], None);
                self.ok = self.propagate().is_none();
                self.ok
            }
            _ => {
                self.attach(kept, false);
                self.num_original += 1;
                true
            }
        }
    }

    /// Decide satisfiability under `assumptions`. The model of the last
    /// satisfiable call is available through [`Solver::model_value`].
    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<bool, BudgetExhausted> {
        if !self.ok {
            return Ok(false);
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        self.max_learnts = (self.num_original as f64 / 3.0).max(100.0);
        let mut spent = 0u64;
        let mut restarts = 0u64;
        let result = loop {
            let limit = (luby(2.0, restarts) * RESTART_BASE) as u64;
            match self.search(limit, assumptions, &mut spent) {
                Search::Sat => break Ok(true),
                Search::Unsat => break Ok(false),
                Search::Budget => break Err(BudgetExhausted { conflicts: spent }),
                Search::Restart => {
                    restarts += 1;
                    self.max_learnts *= 1.1;
                }
            }
        };
        self.cancel_until(0);
        result
    }

    pub fn model_value(&self, v: Var) -> bool {
        self.model.get(v.index()).copied().unwrap_or(false)
    }

    pub fn model(&self) -> &[bool] {
        &self.model
    }

    fn value(&self, l: Lit) -> i8 {
        value_in(&self.assigns, l)
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: Option<CRef>) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = if l.is_neg() { FALSE } else { TRUE };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> CRef {
        let cref = self.clauses.len() as CRef;
        self.watches[(!lits[0]).code()].push(Watch { cref, blocker: lits[1] });
        self.watches[(!lits[1]).code()].push(Watch { cref, blocker: lits[0] });
        self.clauses.push(Clause {
            lits,
            learnt,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let keep = self.trail_lim[level];
        for i in (keep..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.phase[v] = !l.is_neg();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(level);
        self.qhead = keep;
    }

    fn propagate(&mut self) -> Option<CRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if value_in(&self.assigns, w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let lits = &mut self.clauses[w.cref as usize].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let nw = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && value_in(&self.assigns, first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..lits.len() {
                    if value_in(&self.assigns, lits[k]) != FALSE {
                        lits.swap(1, k);
                        self.watches[(!lits[1]).code()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if value_in(&self.assigns, first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[p.code()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: CRef) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &r in &self.learnts {
                self.clauses[r as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut conflict: CRef) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            self.bump_clause(conflict);
            let start = usize::from(p.is_some());
            let len = self.clauses[conflict as usize].lits.len();
            for k in start..len {
                let q = self.clauses[conflict as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var().index()] = false;
            pending -= 1;
            if pending == 0 {
                break;
            }
            conflict = self.reason[lit.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict has a UIP");

        // Drop literals whose reason is subsumed by the rest of the clause.
        let before = learnt.clone();
        let mut k = 1;
        while k < learnt.len() {
            let v = learnt[k].var().index();
            let redundant = self.reason[v].is_some_and(|r| {
                self.clauses[r as usize].lits[1..].iter().all(|q| {
                    let u = q.var().index();
                    self.seen[u] || self.level[u] == 0
                })
            });
            if redundant {
                learnt.swap_remove(k);
            } else {
                k += 1;
            }
        }
        for l in &before {
            self.seen[l.var().index()] = false;
        }

        let backjump = if learnt.len() == 1 {
            0
        } else {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var().index()] > self.level[learnt[best].var().index()] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            self.level[learnt[1].var().index()] as usize
        };
        (learnt, backjump)
    }

    fn locked(&self, cref: CRef) -> bool {
        let l = self.clauses[cref as usize].lits[0];
        self.value(l) == TRUE && self.reason[l.var().index()] == Some(cref)
    }

    fn reduce_db(&mut self) {
        let mut refs = std::mem::take(&mut self.learnts);
        refs.sort_by(|a, b| {
            self.clauses[*a as usize]
                .activity
                .total_cmp(&self.clauses[*b as usize].activity)
        });
        let half = refs.len() / 2;
        let mut removed = vec![false; self.clauses.len()];
        let mut kept = Vec::with_capacity(refs.len());
        for (i, &r) in refs.iter().enumerate() {
            if i < half && self.clauses[r as usize].lits.len() > 2 && !self.locked(r) {
                removed[r as usize] = true;
                self.clauses[r as usize].lits = Vec::new();
            } else {
                kept.push(r);
            }
        }
        for ws in &mut self.watches {
            ws.retain(|w| !removed[w.cref as usize]);
        }
        self.learnts = kept;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(Var(v), !self.phase[v as usize]));
            }
        }
        None
    }

    fn search(&mut self, limit: u64, assumptions: &[Lit], spent: &mut u64) -> Search {
        let mut local = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                local += 1;
                *spent += 1;
                self.total_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Search::Unsat;
                }
                let (learnt, backjump) = self.analyze(conflict);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                if *spent >= self.conflict_budget {
                    return Search::Budget;
                }
                continue;
            }
            if local >= limit {
                self.cancel_until(0);
                return Search::Restart;
            }
            if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                self.reduce_db();
            }
            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.value(a) {
                    TRUE => self.trail_lim.push(self.trail.len()),
                    FALSE => return Search::Unsat,
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let decision = match next.or_else(|| self.pick_branch()) {
                Some(l) => l,
                None => {
                    self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                    return Search::Sat;
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(decision, None);
        }
    }
}
