//! Depth-first search over pattern prefixes.
//!
//! Steps are placed in a fixed order; each placement either joins an
//! existing block or opens a new one. A node survives while every residual
//! user-independent constraint can still be satisfied by some completion and
//! at least one member of the pattern-independent family admits a matching
//! that saturates the blocks built so far. Matchings are repaired
//! incrementally with augmenting paths.
//!
//! A member that loses its saturating matching stays dead in the whole
//! subtree: descendants only add blocks or shrink block neighbourhoods.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::absorption::{absorb, CdaInstance};
use crate::error::Result;
use crate::instance::{Constraint, Instance, Plan, UserId};
use crate::matching::authorised_plan_for;
use crate::patterns::{enumerate_patterns, Pattern};

use super::{Clock, SolveOptions, SolveResult, Stats, Verdict};

const NONE: u32 = u32::MAX;
const CHECK_EVERY: u64 = 1024;

pub fn solve_backtracking(inst: &Instance) -> Result<SolveResult> {
    solve_backtracking_with(inst, &SolveOptions::default())
}

pub fn solve_backtracking_with(inst: &Instance, opts: &SolveOptions) -> Result<SolveResult> {
    let clock = Clock::start(&opts.budget);
    if inst.k() == 0 {
        let stats = Stats {
            wall_time: clock.elapsed(),
            ..Stats::default()
        };
        return Ok(SolveResult::sat(Plan::new(Vec::new()), stats));
    }
    assert!(inst.k() <= 64, "pattern search supports at most 64 steps");
    let cda = absorb(inst)?;
    let model = Model::new(inst, &cda);
    let shared = Shared {
        clock,
        opts: *opts,
        found: AtomicBool::new(false),
        stop: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
    };
    let jobs = opts.jobs.max(1);
    let (outcome, stats) = if jobs == 1 || inst.k() < 3 {
        let mut searcher = Searcher::new(&model, &shared);
        let outcome = searcher.run(&[]);
        (outcome, searcher.stats)
    } else {
        run_parallel(&model, &shared, jobs)
    };
    let mut stats = stats;
    stats.wall_time = shared.clock.elapsed();
    Ok(match outcome {
        Outcome::Found(plan) => {
            debug_assert!(crate::instance::is_valid(&plan, inst).unwrap());
            SolveResult::sat(plan, stats)
        }
        Outcome::Exhausted => SolveResult::without_plan(Verdict::Unsat, stats),
        Outcome::Stopped => SolveResult::without_plan(Verdict::BudgetExceeded, stats),
    })
}

fn run_parallel(model: &Model, shared: &Shared, jobs: usize) -> (Outcome, Stats) {
    // Shallowest depth with enough subtrees to keep every worker busy.
    let mut depth = 1;
    while depth < model.k - 1 && crate::patterns::bell(depth).unwrap_or(u128::MAX) < 8 * jobs as u128
    {
        depth += 1;
    }
    let prefixes: Vec<Pattern> = enumerate_patterns(depth).collect();
    let next = AtomicUsize::new(0);
    let result: Mutex<Option<Plan>> = Mutex::new(None);
    let totals: Mutex<Stats> = Mutex::new(Stats::default());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| {
                let mut searcher = Searcher::new(model, shared);
                loop {
                    if shared.found.load(Ordering::Relaxed) || shared.stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(prefix) = prefixes.get(i) else { break };
                    match searcher.run(prefix.rgs()) {
                        Outcome::Found(plan) => {
                            if !shared.found.swap(true, Ordering::SeqCst) {
                                *result.lock().unwrap() = Some(plan);
                            }
                            break;
                        }
                        Outcome::Stopped => break,
                        Outcome::Exhausted => {}
                    }
                }
                let mut t = totals.lock().unwrap();
                t.nodes_expanded += searcher.stats.nodes_expanded;
                t.patterns_visited += searcher.stats.patterns_visited;
                t.matchings_computed += searcher.stats.matchings_computed;
            });
        }
    });
    let stats = totals.into_inner().unwrap();
    let outcome = match result.into_inner().unwrap() {
        Some(plan) => Outcome::Found(plan),
        None if shared.stop.load(Ordering::SeqCst) => Outcome::Stopped,
        None => Outcome::Exhausted,
    };
    (outcome, stats)
}

enum Outcome {
    Found(Plan),
    Exhausted,
    Stopped,
}

struct Shared {
    clock: Clock,
    opts: SolveOptions,
    found: AtomicBool,
    stop: AtomicBool,
    nodes: AtomicU64,
}

enum Check {
    Sod(usize),
    Bod(usize),
    AtMost { r: usize, scope: Vec<usize> },
    AtLeast { r: usize, scope: Vec<usize> },
}

struct Restriction {
    scope: Vec<usize>,
    h: usize,
    // Per member, since the bits are indexed like the adjacency words.
    supers: Vec<u64>,
}

/// Read-only search data shared by all workers. Steps are referred to by
/// their position in the search order.
struct Model<'a> {
    k: usize,
    n: usize,
    words: usize,
    members: usize,
    order: Vec<usize>,
    // [member][position][word]
    auth: Vec<u64>,
    checks: Vec<Vec<Check>>,
    restrictions: Vec<Vec<Restriction>>,
    full_family_at_leaf: bool,
    cda: &'a CdaInstance,
}

fn bits_of(set: &crate::UserSet) -> &[u64] {
    set.words()
}

impl<'a> Model<'a> {
    fn new(inst: &Instance, cda: &'a CdaInstance) -> Self {
        let (k, n) = (inst.k(), inst.n());
        let words = n.div_ceil(64).max(1);
        let mut degree = vec![0usize; k];
        for c in inst.constraints() {
            for s in c.scope() {
                degree[s.0] += 1;
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&s| (std::cmp::Reverse(degree[s]), s));
        let mut pos = vec![0; k];
        for (i, &s) in order.iter().enumerate() {
            pos[s] = i;
        }

        let family = cda.static_family().functions();
        let members = family.len();
        let mut auth = vec![0u64; members * k * words];
        for (m, f) in family.iter().enumerate() {
            for (i, &s) in order.iter().enumerate() {
                let src = bits_of(f.users(crate::StepId(s)));
                let at = (m * k + i) * words;
                auth[at..at + src.len()].copy_from_slice(src);
            }
        }

        let mut checks: Vec<Vec<Check>> = (0..k).map(|_| Vec::new()).collect();
        for c in cda.residual() {
            match c {
                Constraint::Sod { s1, s2 } | Constraint::Bod { s1, s2 } => {
                    let (a, b) = (pos[s1.0], pos[s2.0]);
                    let (early, late) = (a.min(b), a.max(b));
                    checks[late].push(if matches!(c, Constraint::Sod { .. }) {
                        Check::Sod(early)
                    } else {
                        Check::Bod(early)
                    });
                }
                Constraint::AtMost { r, scope } | Constraint::AtLeast { r, scope } => {
                    let scope: Vec<usize> = scope.iter().map(|s| pos[s.0]).collect();
                    for &p in &scope {
                        checks[p].push(if matches!(c, Constraint::AtMost { .. }) {
                            Check::AtMost {
                                r: *r,
                                scope: scope.clone(),
                            }
                        } else {
                            Check::AtLeast {
                                r: *r,
                                scope: scope.clone(),
                            }
                        });
                    }
                }
                _ => unreachable!("residual constraints are user-independent"),
            }
        }

        let mut restrictions: Vec<Vec<Restriction>> = (0..k).map(|_| Vec::new()).collect();
        let mut full_family_at_leaf = false;
        for c in cda.pattern_dependent() {
            match c {
                Constraint::Sual { scope, h, supers } => {
                    let scope: Vec<usize> = scope.iter().map(|s| pos[s.0]).collect();
                    let last = *scope.iter().max().expect("non-empty scope");
                    let mut bits = vec![0u64; words];
                    bits[..supers.words().len()].copy_from_slice(supers.words());
                    restrictions[last].push(Restriction {
                        scope,
                        h: *h,
                        supers: bits,
                    });
                }
                _ => full_family_at_leaf = true,
            }
        }

        Model {
            k,
            n,
            words,
            members,
            order,
            auth,
            checks,
            restrictions,
            full_family_at_leaf,
            cda,
        }
    }

    fn auth_bits(&self, member: usize, position: usize) -> &[u64] {
        let at = (member * self.k + position) * self.words;
        &self.auth[at..at + self.words]
    }
}

/// Worker-local search state, one frame per depth.
struct Searcher<'m, 'a> {
    model: &'m Model<'a>,
    shared: &'m Shared,
    labels: Vec<usize>,
    block_count: Vec<usize>,
    // [level][member]
    alive: Vec<bool>,
    // [level][member][block][word]
    adj: Vec<u64>,
    // [level][member][block]
    matched: Vec<u32>,
    // [member][user]; trusted only when `matched` agrees.
    owner: Vec<u32>,
    stats: Stats,
    pending: u64,
}

impl<'m, 'a> Searcher<'m, 'a> {
    fn new(model: &'m Model<'a>, shared: &'m Shared) -> Self {
        let (k, m, w) = (model.k, model.members, model.words);
        Searcher {
            model,
            shared,
            labels: vec![0; k],
            block_count: vec![0; k + 1],
            alive: vec![false; (k + 1) * m],
            adj: vec![0; (k + 1) * m * k * w],
            matched: vec![NONE; (k + 1) * m * k],
            owner: vec![NONE; m * model.n.max(1)],
            stats: Stats::default(),
            pending: 0,
        }
    }

    fn run(&mut self, prefix: &[usize]) -> Outcome {
        let members = self.model.members;
        if members == 0 {
            return Outcome::Exhausted;
        }
        self.block_count[0] = 0;
        self.alive[..members].iter_mut().for_each(|a| *a = true);
        self.descend(0, prefix)
    }

    fn over_budget(&mut self) -> bool {
        self.pending += 1;
        if self.pending < CHECK_EVERY {
            return false;
        }
        let shared = self.shared;
        let total = shared.nodes.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
        self.pending = 0;
        if shared.found.load(Ordering::Relaxed) || shared.stop.load(Ordering::Relaxed) {
            return true;
        }
        let budget = &shared.opts.budget;
        if budget.max_nodes.is_some_and(|m| total >= m)
            || budget
                .max_patterns
                .is_some_and(|m| self.stats.patterns_visited >= m)
            || shared.clock.expired()
        {
            shared.stop.store(true, Ordering::SeqCst);
            return true;
        }
        false
    }

    fn descend(&mut self, level: usize, prefix: &[usize]) -> Outcome {
        let bc = self.block_count[level];
        let choices = if level < prefix.len() {
            prefix[level]..prefix[level] + 1
        } else {
            0..bc + 1
        };
        for b in choices {
            if self.over_budget() {
                return Outcome::Stopped;
            }
            self.labels[level] = b;
            if !self.constraints_hold(level) {
                continue;
            }
            self.stats.nodes_expanded += 1;
            if !self.place(level, b) {
                continue;
            }
            if level + 1 == self.model.k {
                self.stats.patterns_visited += 1;
                if let Some(plan) = self.leaf() {
                    return Outcome::Found(plan);
                }
                continue;
            }
            match self.descend(level + 1, prefix) {
                Outcome::Exhausted => {}
                done => return done,
            }
        }
        Outcome::Exhausted
    }

    fn blocks_in(&self, scope: &[usize], level: usize) -> (u32, usize) {
        let mut mask = 0u64;
        let mut open = 0;
        for &p in scope {
            if p <= level {
                mask |= 1 << self.labels[p];
            } else {
                open += 1;
            }
        }
        (mask.count_ones(), open)
    }

    fn constraints_hold(&self, level: usize) -> bool {
        let b = self.labels[level];
        self.model.checks[level].iter().all(|c| match c {
            Check::Sod(other) => self.labels[*other] != b,
            Check::Bod(other) => self.labels[*other] == b,
            Check::AtMost { r, scope } => self.blocks_in(scope, level).0 as usize <= *r,
            Check::AtLeast { r, scope } => {
                let (blocks, open) = self.blocks_in(scope, level);
                blocks as usize + open >= *r
            }
        })
    }

    fn adj_at(&self, level: usize, member: usize, block: usize) -> usize {
        ((level * self.model.members + member) * self.model.k + block) * self.model.words
    }

    fn matched_at(&self, level: usize, member: usize) -> usize {
        (level * self.model.members + member) * self.model.k
    }

    /// Builds frame `level + 1` with the step at `level` in block `b`.
    /// Returns whether some member still has a saturating matching.
    fn place(&mut self, level: usize, b: usize) -> bool {
        let model = self.model;
        let (members, words) = (model.members, model.words);
        let bc = self.block_count[level];
        let new_bc = bc.max(b + 1);
        self.block_count[level + 1] = new_bc;
        // Blocks whose neighbourhood shrank at this level.
        let mut touched: u64 = 1 << b;
        let mut restricted: Vec<(&[u64], u64)> = Vec::new();
        for r in &model.restrictions[level] {
            let mut mask = 0u64;
            for &p in &r.scope {
                mask |= 1 << self.labels[p];
            }
            if mask.count_ones() as usize <= r.h {
                restricted.push((&r.supers, mask));
                touched |= mask;
            }
        }
        let mut any = false;
        for m in 0..members {
            let up = level * members + m;
            let down = up + members;
            if !self.alive[up] {
                self.alive[down] = false;
                continue;
            }
            self.stats.matchings_computed += 1;
            let src = self.adj_at(level, m, 0);
            let dst = self.adj_at(level + 1, m, 0);
            self.adj.copy_within(src..src + bc * words, dst);
            let ms = self.matched_at(level, m);
            let md = self.matched_at(level + 1, m);
            self.matched.copy_within(ms..ms + bc, md);
            let auth = model.auth_bits(m, level);
            let at = dst + b * words;
            if b == bc {
                self.adj[at..at + words].copy_from_slice(auth);
                self.matched[md + b] = NONE;
            } else {
                for (x, y) in self.adj[at..at + words].iter_mut().zip(auth) {
                    *x &= y;
                }
            }
            for &(supers, mask) in &restricted {
                let mut bits = mask;
                while bits != 0 {
                    let blk = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let at = dst + blk * words;
                    for (x, y) in self.adj[at..at + words].iter_mut().zip(supers) {
                        *x &= y;
                    }
                }
            }
            let ok = self.repair(level + 1, m, new_bc, touched);
            self.alive[down] = ok;
            any |= ok;
        }
        any
    }

    /// Restores owner pointers for frame `level`, drops matches invalidated
    /// in `touched` blocks and re-augments every unmatched block.
    fn repair(&mut self, level: usize, m: usize, bc: usize, touched: u64) -> bool {
        let n = self.model.n;
        let words = self.model.words;
        let md = self.matched_at(level, m);
        let owner_base = m * n;
        for blk in 0..bc {
            let u = self.matched[md + blk];
            if u != NONE {
                let at = self.adj_at(level, m, blk);
                let word = self.adj[at + u as usize / 64];
                if touched & (1 << blk) != 0 && word & (1 << (u % 64)) == 0 {
                    self.matched[md + blk] = NONE;
                } else {
                    self.owner[owner_base + u as usize] = blk as u32;
                }
            }
        }
        for blk in 0..bc {
            if self.matched[md + blk] == NONE {
                let at = self.adj_at(level, m, blk);
                if self.adj[at..at + words].iter().all(|&w| w == 0) {
                    return false;
                }
                let mut visited = 1u64 << blk;
                if !self.augment(level, m, bc, blk, &mut visited) {
                    return false;
                }
            }
        }
        true
    }

    fn holder(&self, md: usize, owner_base: usize, bc: usize, u: usize) -> Option<usize> {
        let o = self.owner[owner_base + u];
        (o != NONE && (o as usize) < bc && self.matched[md + o as usize] == u as u32)
            .then_some(o as usize)
    }

    fn augment(&mut self, level: usize, m: usize, bc: usize, blk: usize, visited: &mut u64) -> bool {
        let words = self.model.words;
        let owner_base = m * self.model.n;
        let md = self.matched_at(level, m);
        let at = self.adj_at(level, m, blk);
        // Prefer a free user; otherwise try to move a holder.
        for w in 0..words {
            let mut bits = self.adj[at + w];
            while bits != 0 {
                let u = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if self.holder(md, owner_base, bc, u).is_none() {
                    self.matched[md + blk] = u as u32;
                    self.owner[owner_base + u] = blk as u32;
                    return true;
                }
            }
        }
        for w in 0..words {
            let mut bits = self.adj[at + w];
            while bits != 0 {
                let u = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let other = self.holder(md, owner_base, bc, u).expect("all users held");
                if *visited & (1 << other) == 0 {
                    *visited |= 1 << other;
                    if self.augment(level, m, bc, other, visited) {
                        self.matched[md + blk] = u as u32;
                        self.owner[owner_base + u] = blk as u32;
                        return true;
                    }
                }
            }
        }
        false
    }

    fn pattern(&self) -> Pattern {
        let mut by_step = vec![0usize; self.model.k];
        for (p, &s) in self.model.order.iter().enumerate() {
            by_step[s] = self.labels[p];
        }
        Pattern::canonical(&by_step)
    }

    fn leaf(&mut self) -> Option<Plan> {
        let model = self.model;
        let k = model.k;
        if model.full_family_at_leaf {
            let p = self.pattern();
            for f in model.cda.family_at(&p).functions() {
                self.stats.matchings_computed += 1;
                if let Some(plan) = authorised_plan_for(&p, f) {
                    return Some(plan);
                }
            }
            return None;
        }
        let m = (0..model.members).find(|&m| self.alive[k * model.members + m])?;
        let md = self.matched_at(k, m);
        let mut users = vec![UserId(0); k];
        for (p, &s) in model.order.iter().enumerate() {
            users[s] = UserId(self.matched[md + self.labels[p]] as usize);
        }
        Some(Plan::new(users))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_instance, running_example, Mix};
    use crate::instance::{is_valid, AuthorisationFunction, CustomConstraint, StepId, UserSet};
    use crate::solver::{solve_bruteforce, SolveBudget};

    #[test]
    fn running_example_plan_is_valid() {
        let inst = running_example();
        let r = solve_backtracking(&inst).unwrap();
        assert_eq!(r.verdict, Verdict::Sat);
        assert!(is_valid(r.plan.as_ref().unwrap(), &inst).unwrap());
    }

    #[test]
    fn single_worker_is_deterministic() {
        for seed in 0..20 {
            let inst = random_instance(seed, 5, 7, Mix::Mixed);
            let a = solve_backtracking(&inst).unwrap();
            let b = solve_backtracking(&inst).unwrap();
            assert_eq!(a.plan, b.plan);
            assert_eq!(a.stats.nodes_expanded, b.stats.nodes_expanded);
        }
    }

    #[test]
    fn parallel_agrees_with_sequential() {
        let opts = SolveOptions {
            jobs: 4,
            ..SolveOptions::default()
        };
        for mix in Mix::ALL {
            for seed in 0..15 {
                let inst = random_instance(seed + 500, 5, 6, mix);
                let seq = solve_backtracking(&inst).unwrap();
                let par = solve_backtracking_with(&inst, &opts).unwrap();
                assert_eq!(seq.verdict, par.verdict);
                if let Some(plan) = &par.plan {
                    assert!(is_valid(plan, &inst).unwrap());
                }
            }
        }
    }

    #[test]
    fn custom_constraints_are_checked_at_leaves() {
        // All three steps must go to users with even indices.
        let even = Constraint::Custom(CustomConstraint::new(
            "even",
            vec![StepId(0), StepId(1), StepId(2)],
            |us| us.iter().all(|u| u.0 % 2 == 0),
        ));
        let mut auth = AuthorisationFunction::full(3, 4);
        *auth.users_mut(StepId(1)) = UserSet::from_indices(4, [1, 2, 3]).unwrap();
        let inst = Instance::new(3, 4, auth.clone(), vec![even.clone()]).unwrap();
        let r = solve_backtracking(&inst).unwrap();
        assert_eq!(r.verdict, Verdict::Sat);
        assert!(is_valid(r.plan.as_ref().unwrap(), &inst).unwrap());

        *auth.users_mut(StepId(1)) = UserSet::from_indices(4, [1, 3]).unwrap();
        let inst = Instance::new(3, 4, auth, vec![even]).unwrap();
        assert_eq!(solve_backtracking(&inst).unwrap().verdict, Verdict::Unsat);
        assert_eq!(solve_bruteforce(&inst).unwrap().verdict, Verdict::Unsat);
    }

    #[test]
    fn node_budget_stops_search() {
        // The last step has no users, so every prefix of the other nine
        // steps is explored before UNSAT.
        let (k, n) = (10, 10);
        let mut auth = AuthorisationFunction::full(k, n);
        *auth.users_mut(StepId(9)) = UserSet::empty(n);
        let inst = Instance::new(k, n, auth, vec![]).unwrap();
        let opts = SolveOptions {
            budget: SolveBudget {
                max_nodes: Some(2 * CHECK_EVERY),
                ..SolveBudget::default()
            },
            jobs: 1,
        };
        let r = solve_backtracking_with(&inst, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::BudgetExceeded);
        let full = solve_backtracking(&inst).unwrap();
        assert_eq!(full.verdict, Verdict::Unsat);
        assert!(full.stats.nodes_expanded > 20_000);
    }

    #[test]
    fn wide_universes_use_several_words() {
        let n = 200;
        let mut auth = AuthorisationFunction::empty(3, n);
        auth.users_mut(StepId(0)).insert(150);
        auth.users_mut(StepId(1)).insert(150);
        auth.users_mut(StepId(1)).insert(199);
        auth.users_mut(StepId(2)).insert(199);
        let sod = |a, b| Constraint::Sod {
            s1: StepId(a),
            s2: StepId(b),
        };
        let inst = Instance::new(3, n, auth, vec![sod(0, 1)]).unwrap();
        let r = solve_backtracking(&inst).unwrap();
        assert_eq!(r.plan.unwrap().indices(), vec![150, 199, 199]);
        let inst = inst.with_constraints(vec![sod(0, 1), sod(1, 2)]).unwrap();
        assert_eq!(solve_backtracking(&inst).unwrap().verdict, Verdict::Unsat);
    }
}
