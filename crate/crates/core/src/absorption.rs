//! Context-dependent authorisations and constraint absorption.
//!
//! A p-authorisation family is a disjunction of authorisation functions that
//! applies to plans with pattern `p`. A user-dependent constraint is removed
//! from an instance by intersecting its family into the instance's family;
//! the result admits exactly the same valid plans.
//!
//! Families are computed per pattern on demand. WL and ADA families do not
//! depend on the pattern and are folded into the base authorisation once;
//! SUAL and custom constraints contribute per-pattern functions, memoised by
//! the part of the pattern they actually look at.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Result, WspError};
use crate::instance::{
    AuthorisationFunction, Constraint, ConstraintKind, Instance, Plan, StepId, UserId, UserSet,
};
use crate::patterns::{enumerate_patterns, pattern_of, satisfies, Pattern};

/// The disjunctive alternatives that apply to one pattern. Empty means no
/// plan with that pattern is authorised.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PAuthorisationFamily {
    functions: Vec<AuthorisationFunction>,
}

impl PAuthorisationFamily {
    pub fn new(functions: Vec<AuthorisationFunction>) -> Self {
        PAuthorisationFamily { functions }
    }

    pub fn single(a: AuthorisationFunction) -> Self {
        PAuthorisationFamily { functions: vec![a] }
    }

    pub fn functions(&self) -> &[AuthorisationFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// True iff some member authorises the assignment.
    pub fn authorises(&self, assignment: &[UserId]) -> bool {
        self.functions.iter().any(|a| a.authorises(assignment))
    }

    /// Equality of the member sets, ignoring order and multiplicity.
    pub fn same_functions(&self, other: &PAuthorisationFamily) -> bool {
        self.functions.iter().all(|f| other.functions.contains(f))
            && other.functions.iter().all(|f| self.functions.contains(f))
    }
}

/// `Pattern -> PAuthorisationFamily`; the same pattern always yields the
/// same family.
pub trait AuthorisationFamily {
    fn family_for(&self, p: &Pattern) -> Arc<PAuthorisationFamily>;
}

/// A family that ignores the pattern.
#[derive(Clone, Debug)]
pub struct UniformFamily(pub Arc<PAuthorisationFamily>);

impl UniformFamily {
    pub fn new(functions: Vec<AuthorisationFunction>) -> Self {
        UniformFamily(Arc::new(PAuthorisationFamily::new(functions)))
    }
}

impl AuthorisationFamily for UniformFamily {
    fn family_for(&self, _p: &Pattern) -> Arc<PAuthorisationFamily> {
        Arc::clone(&self.0)
    }
}

/// Pairwise step-wise intersections. Products with an empty step are
/// dropped (they authorise nothing) and duplicates are merged.
pub fn intersect_families(
    f1: &PAuthorisationFamily,
    f2: &PAuthorisationFamily,
) -> PAuthorisationFamily {
    let mut out: Vec<AuthorisationFunction> = Vec::with_capacity(f1.len() * f2.len());
    for a in &f1.functions {
        for b in &f2.functions {
            let meet = a.meet(b);
            if !meet.has_empty_step() && !out.contains(&meet) {
                out.push(meet);
            }
        }
    }
    PAuthorisationFamily::new(out)
}

/// Size limit for the generic per-assignment absorber.
#[derive(Clone, Copy, Debug)]
pub struct GenericLimits {
    /// Largest admissible `n^|T|`.
    pub max_scope_assignments: u128,
}

impl Default for GenericLimits {
    fn default() -> Self {
        GenericLimits {
            max_scope_assignments: 10_000,
        }
    }
}

fn with_steps(k: usize, n: usize, steps: &[StepId], users: &UserSet) -> AuthorisationFunction {
    let mut a = AuthorisationFunction::full(k, n);
    for &s in steps {
        *a.users_mut(s) = users.clone();
    }
    a
}

fn sual_function(
    scope: &[StepId],
    h: usize,
    supers: &UserSet,
    p: &Pattern,
    k: usize,
    n: usize,
) -> AuthorisationFunction {
    if p.blocks_touched(scope) <= h {
        with_steps(k, n, scope, supers)
    } else {
        AuthorisationFunction::full(k, n)
    }
}

/// Family with one function per satisfying assignment of the scope that is
/// consistent with `p`; the function pins each scope step to its user and
/// leaves the other steps unrestricted. Works for any constraint.
pub fn generic_family(
    c: &Constraint,
    p: &Pattern,
    k: usize,
    n: usize,
    limits: GenericLimits,
) -> Result<PAuthorisationFamily> {
    let scope = c.scope();
    let assignments = (n as u128).checked_pow(scope.len() as u32).unwrap_or(u128::MAX);
    if assignments > limits.max_scope_assignments {
        return Err(WspError::AbsorptionLimit {
            constraint: c.to_string(),
            assignments,
            limit: limits.max_scope_assignments,
        });
    }
    let induced = p.restrict(&scope);
    let mut plan = vec![UserId(0); k];
    let mut sigma = vec![0usize; scope.len()];
    let mut functions = Vec::new();
    if n == 0 {
        return Ok(PAuthorisationFamily::new(functions));
    }
    loop {
        if Pattern::canonical(&sigma) == induced {
            for (t, &u) in scope.iter().zip(&sigma) {
                plan[t.0] = UserId(u);
            }
            if c.holds(&plan) {
                let mut a = AuthorisationFunction::full(k, n);
                for (t, &u) in scope.iter().zip(&sigma) {
                    let mut only = UserSet::empty(n);
                    only.insert(u);
                    *a.users_mut(*t) = only;
                }
                functions.push(a);
            }
        }
        // odometer
        let mut i = sigma.len();
        loop {
            if i == 0 {
                return Ok(PAuthorisationFamily::new(functions));
            }
            i -= 1;
            sigma[i] += 1;
            if sigma[i] < n {
                break;
            }
            sigma[i] = 0;
        }
    }
}

/// The p-authorisation family that absorbs `c` for pattern `p` in an
/// instance with `k` steps and `n` users.
///
/// * UI constraints: all-U if `p` satisfies `c`, otherwise all-empty.
/// * SUAL: `X` on the scope when the scope meets at most `h` blocks of `p`,
///   otherwise all-U.
/// * WL: one function per team, restricting the scope to that team.
/// * ADA: `{s1: U1, s2: U2}` and `{s1: U \ U1}`.
/// * Custom: the generic per-assignment family under default limits.
pub fn family_for_constraint(
    c: &Constraint,
    p: &Pattern,
    k: usize,
    n: usize,
) -> Result<PAuthorisationFamily> {
    Ok(match c {
        Constraint::Sual { scope, h, supers } => {
            PAuthorisationFamily::single(sual_function(scope, *h, supers, p, k, n))
        }
        Constraint::Wl { scope, teams } => PAuthorisationFamily::new(
            teams.iter().map(|team| with_steps(k, n, scope, team)).collect(),
        ),
        Constraint::Ada {
            s1,
            s2,
            trigger,
            required,
        } => {
            let mut first = AuthorisationFunction::full(k, n);
            *first.users_mut(*s1) = trigger.clone();
            *first.users_mut(*s2) = required.clone();
            let second = with_steps(k, n, &[*s1], &trigger.complement());
            PAuthorisationFamily::new(vec![first, second])
        }
        Constraint::Custom(_) => generic_family(c, p, k, n, GenericLimits::default())?,
        ui => {
            if satisfies(p, ui).expect("user-independent") {
                PAuthorisationFamily::single(AuthorisationFunction::full(k, n))
            } else {
                PAuthorisationFamily::single(AuthorisationFunction::empty(k, n))
            }
        }
    })
}

// The part of a pattern that a pattern-dependent constraint looks at.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Signature {
    Restricted(bool),
    Induced(Pattern),
}

/// An instance with its user-dependent constraints absorbed into a
/// context-dependent authorisation family. User-independent constraints stay
/// in the residual list and are checked on patterns.
pub struct CdaInstance {
    k: usize,
    n: usize,
    base: AuthorisationFunction,
    residual: Vec<Constraint>,
    absorbed: Vec<Constraint>,
    static_family: Arc<PAuthorisationFamily>,
    dependent: Vec<Constraint>,
    limits: GenericLimits,
    memo: Mutex<HashMap<Vec<Signature>, Arc<PAuthorisationFamily>>>,
}

impl fmt::Debug for CdaInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CdaInstance")
            .field("k", &self.k)
            .field("n", &self.n)
            .field("residual", &self.residual.len())
            .field("absorbed", &self.absorbed.len())
            .field("static_family", &self.static_family.len())
            .finish_non_exhaustive()
    }
}

/// Absorbs every user-dependent constraint of `inst`.
pub fn absorb(inst: &Instance) -> Result<CdaInstance> {
    absorb_with_limits(inst, GenericLimits::default())
}

pub fn absorb_with_limits(inst: &Instance, limits: GenericLimits) -> Result<CdaInstance> {
    let (k, n) = (inst.k(), inst.n());
    let (residual, absorbed): (Vec<Constraint>, Vec<Constraint>) =
        inst.constraints().iter().cloned().partition(Constraint::is_ui);
    let mut static_family = PAuthorisationFamily::single(inst.auth().clone());
    let mut dependent = Vec::new();
    let any_pattern = Pattern::canonical(&vec![0usize; k]);
    for c in &absorbed {
        match c {
            Constraint::Wl { .. } | Constraint::Ada { .. } => {
                let fam = family_for_constraint(c, &any_pattern, k, n)?;
                static_family = intersect_families(&static_family, &fam);
            }
            Constraint::Custom(_) => {
                // Surface limit violations now rather than mid-search.
                generic_family(c, &any_pattern, k, n, limits)?;
                dependent.push(c.clone());
            }
            _ => dependent.push(c.clone()),
        }
    }
    Ok(CdaInstance {
        k,
        n,
        base: inst.auth().clone(),
        residual,
        absorbed,
        static_family: Arc::new(static_family),
        dependent,
        limits,
        memo: Mutex::new(HashMap::new()),
    })
}

impl CdaInstance {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> &AuthorisationFunction {
        &self.base
    }

    pub fn residual(&self) -> &[Constraint] {
        &self.residual
    }

    pub fn absorbed(&self) -> &[Constraint] {
        &self.absorbed
    }

    /// Base authorisation intersected with every pattern-independent family.
    pub fn static_family(&self) -> &PAuthorisationFamily {
        &self.static_family
    }

    /// Absorbed constraints whose family depends on the pattern.
    pub fn pattern_dependent(&self) -> &[Constraint] {
        &self.dependent
    }

    /// Whether `p` satisfies every residual constraint.
    pub fn pattern_eligible(&self, p: &Pattern) -> bool {
        self.residual
            .iter()
            .all(|c| satisfies(p, c).expect("residual constraints are user-independent"))
    }

    pub fn family_at(&self, p: &Pattern) -> Arc<PAuthorisationFamily> {
        if self.dependent.is_empty() {
            return Arc::clone(&self.static_family);
        }
        let key: Vec<Signature> = self
            .dependent
            .iter()
            .map(|c| match c {
                Constraint::Sual { scope, h, .. } => {
                    Signature::Restricted(p.blocks_touched(scope) <= *h)
                }
                other => Signature::Induced(p.restrict(&other.scope())),
            })
            .collect();
        if let Some(hit) = self.memo.lock().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let mut fam = (*self.static_family).clone();
        for c in &self.dependent {
            let part = match c {
                Constraint::Sual { scope, h, supers } => PAuthorisationFamily::single(
                    sual_function(scope, *h, supers, p, self.k, self.n),
                ),
                other => generic_family(other, p, self.k, self.n, self.limits)
                    .expect("limits checked at absorption"),
            };
            fam = intersect_families(&fam, &part);
        }
        let fam = Arc::new(fam);
        self.memo
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&fam));
        fam
    }

    /// Valid for the absorbed instance: CDA-authorised and eligible for the
    /// residual constraints.
    pub fn is_valid(&self, plan: &Plan) -> bool {
        let p = pattern_of(plan);
        self.pattern_eligible(&p) && self.family_at(&p).authorises(plan.users())
    }
}

impl AuthorisationFamily for CdaInstance {
    fn family_for(&self, p: &Pattern) -> Arc<PAuthorisationFamily> {
        self.family_at(p)
    }
}

/// Authorised for at least one member of the family at the plan's pattern.
pub fn plan_authorised_cda(plan: &Plan, fam: &dyn AuthorisationFamily) -> bool {
    fam.family_for(&pattern_of(plan)).authorises(plan.users())
}

/// Branching-factor bounds for one constraint.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct BranchingReport {
    pub kind: ConstraintKind,
    /// Tightest known bound on the family size per pattern.
    pub bound: u128,
    /// `"1"`, `"2"`, `"d"`, `"n^t"`.
    pub symbolic: &'static str,
    /// `n^t` for a scope of `t` steps.
    pub scope_bound: u128,
    /// `(k+1)^t` for a definition involving `t` users, when that is known.
    pub user_bound: Option<u128>,
    pub max_family_size_observed: usize,
}

impl serde::Serialize for ConstraintKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn saturating_pow(base: usize, exp: usize) -> u128 {
    (base as u128)
        .checked_pow(exp.try_into().unwrap_or(u32::MAX))
        .unwrap_or(u128::MAX)
}

pub fn branching_bound(c: &Constraint, k: usize, n: usize) -> BranchingReport {
    let t = c.scope().len();
    let users_involved = match c {
        Constraint::Sual { supers, .. } => Some(supers.len()),
        Constraint::Wl { teams, .. } => Some(teams.iter().map(UserSet::len).sum()),
        Constraint::Ada {
            trigger, required, ..
        } => {
            let mut u = trigger.clone();
            u.union_with(required);
            Some(u.len())
        }
        Constraint::Custom(_) => None,
        _ => Some(0),
    };
    let (bound, symbolic) = match c {
        Constraint::Wl { teams, .. } => (teams.len() as u128, "d"),
        Constraint::Ada { .. } => (2, "2"),
        Constraint::Custom(_) => (saturating_pow(n, t), "n^t"),
        _ => (1, "1"),
    };
    BranchingReport {
        kind: c.kind(),
        bound,
        symbolic,
        scope_bound: saturating_pow(n, t),
        user_bound: users_involved.map(|u| saturating_pow(k + 1, u)),
        max_family_size_observed: 0,
    }
}

/// Fills in the largest family size over every pattern of `k` steps.
pub fn observe_branching(c: &Constraint, k: usize, n: usize) -> Result<BranchingReport> {
    let mut report = branching_bound(c, k, n);
    for p in enumerate_patterns(k) {
        let size = family_for_constraint(c, &p, k, n)?.len();
        report.max_family_size_observed = report.max_family_size_observed.max(size);
    }
    Ok(report)
}
