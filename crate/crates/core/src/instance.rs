//! Instances, plans, authorisations and the constraint catalogue.
//!
//! Steps and users are dense 0-based indices. Constraints are stored
//! intensionally: each variant carries its parameters and a predicate
//! decides whether a plan satisfies it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, WspError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub usize);

impl StepId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl UserId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// A subset of the users `0..n`, stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UserSet {
    n: usize,
    words: Vec<u64>,
}

impl UserSet {
    pub fn empty(n: usize) -> Self {
        UserSet {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut set = Self::empty(n);
        for (i, w) in set.words.iter_mut().enumerate() {
            let lo = i * 64;
            let bits = (n - lo).min(64);
            *w = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        }
        set
    }

    /// Builds a set from user indices, rejecting indices `>= n`.
    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, users: I) -> Result<Self> {
        let mut set = Self::empty(n);
        for u in users {
            if u >= n {
                return Err(WspError::UserOutOfRange { user: u, n });
            }
            set.insert(u);
        }
        Ok(set)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn insert(&mut self, u: usize) {
        assert!(u < self.n, "user {u} outside universe of {}", self.n);
        self.words[u / 64] |= 1 << (u % 64);
    }

    pub fn remove(&mut self, u: usize) {
        if u < self.n {
            self.words[u / 64] &= !(1 << (u % 64));
        }
    }

    pub fn contains(&self, u: usize) -> bool {
        u < self.n && self.words[u / 64] & (1 << (u % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * 64 + bit)
            })
        })
    }

    pub fn intersect_with(&mut self, other: &UserSet) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &UserSet) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersection(&self, other: &UserSet) -> UserSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn complement(&self) -> UserSet {
        let mut out = UserSet::full(self.n);
        for (a, b) in out.words.iter_mut().zip(&self.words) {
            *a &= !b;
        }
        out
    }

    pub fn is_subset(&self, other: &UserSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &UserSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// `A : S -> 2^U`, one user set per step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AuthorisationFunction {
    n: usize,
    per_step: Vec<UserSet>,
}

impl AuthorisationFunction {
    pub fn new(n: usize, per_step: Vec<UserSet>) -> Result<Self> {
        for set in &per_step {
            if set.universe() != n {
                return Err(WspError::Format(format!(
                    "authorisation set over {} users, expected {n}",
                    set.universe()
                )));
            }
        }
        Ok(AuthorisationFunction { n, per_step })
    }

    pub fn from_lists(n: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let per_step = lists
            .iter()
            .map(|l| UserSet::from_indices(n, l.iter().copied()))
            .collect::<Result<Vec<_>>>()?;
        Ok(AuthorisationFunction { n, per_step })
    }

    /// Every user authorised for every step.
    pub fn full(k: usize, n: usize) -> Self {
        AuthorisationFunction {
            n,
            per_step: vec![UserSet::full(n); k],
        }
    }

    /// No user authorised for any step.
    pub fn empty(k: usize, n: usize) -> Self {
        AuthorisationFunction {
            n,
            per_step: vec![UserSet::empty(n); k],
        }
    }

    pub fn k(&self) -> usize {
        self.per_step.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn users(&self, s: StepId) -> &UserSet {
        &self.per_step[s.0]
    }

    pub fn users_mut(&mut self, s: StepId) -> &mut UserSet {
        &mut self.per_step[s.0]
    }

    pub fn sets(&self) -> &[UserSet] {
        &self.per_step
    }

    pub fn allows(&self, s: StepId, u: UserId) -> bool {
        self.per_step[s.0].contains(u.0)
    }

    /// Step-wise intersection.
    pub fn meet(&self, other: &AuthorisationFunction) -> AuthorisationFunction {
        AuthorisationFunction {
            n: self.n,
            per_step: self
                .per_step
                .iter()
                .zip(&other.per_step)
                .map(|(a, b)| a.intersection(b))
                .collect(),
        }
    }

    pub fn has_empty_step(&self) -> bool {
        self.per_step.iter().any(UserSet::is_empty)
    }

    /// Unchecked authorisation test; the plan must have length `k`.
    pub fn authorises(&self, assignment: &[UserId]) -> bool {
        assignment
            .iter()
            .zip(&self.per_step)
            .all(|(u, set)| set.contains(u.0))
    }
}

/// A total assignment of users to steps.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plan {
    assignment: Vec<UserId>,
}

impl Plan {
    pub fn new(assignment: Vec<UserId>) -> Self {
        Plan { assignment }
    }

    pub fn from_indices(users: &[usize]) -> Self {
        Plan {
            assignment: users.iter().map(|&u| UserId(u)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn user(&self, s: StepId) -> UserId {
        self.assignment[s.0]
    }

    pub fn users(&self) -> &[UserId] {
        &self.assignment
    }

    pub fn indices(&self) -> Vec<usize> {
        self.assignment.iter().map(|u| u.0).collect()
    }

    fn check(&self, k: usize, n: usize) -> Result<()> {
        if self.assignment.len() != k {
            return Err(WspError::PlanLength {
                expected: k,
                found: self.assignment.len(),
            });
        }
        if let Some(u) = self.assignment.iter().find(|u| u.0 >= n) {
            return Err(WspError::UserOutOfRange { user: u.0, n });
        }
        Ok(())
    }
}

type Predicate = dyn Fn(&[UserId]) -> bool + Send + Sync;

/// A constraint outside the catalogue, given by a predicate over the users
/// assigned to its scope (in scope order). Always treated as user-dependent.
#[derive(Clone)]
pub struct CustomConstraint {
    pub name: String,
    pub scope: Vec<StepId>,
    predicate: Arc<Predicate>,
}

impl CustomConstraint {
    pub fn new<F>(name: impl Into<String>, scope: Vec<StepId>, predicate: F) -> Self
    where
        F: Fn(&[UserId]) -> bool + Send + Sync + 'static,
    {
        CustomConstraint {
            name: name.into(),
            scope,
            predicate: Arc::new(predicate),
        }
    }

    pub fn holds_on_scope(&self, scope_users: &[UserId]) -> bool {
        (self.predicate)(scope_users)
    }
}

impl fmt::Debug for CustomConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomConstraint")
            .field("name", &self.name)
            .field("scope", &self.scope)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Bod,
    Sod,
    AtMost,
    AtLeast,
    Sual,
    Wl,
    Ada,
    Custom,
}

impl ConstraintKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Bod => "BoD",
            ConstraintKind::Sod => "SoD",
            ConstraintKind::AtMost => "AtMost",
            ConstraintKind::AtLeast => "AtLeast",
            ConstraintKind::Sual => "SUAL",
            ConstraintKind::Wl => "WL",
            ConstraintKind::Ada => "ADA",
            ConstraintKind::Custom => "Custom",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub enum Constraint {
    /// Binding of duty: both steps get the same user.
    Bod { s1: StepId, s2: StepId },
    /// Separation of duty: the steps get different users.
    Sod { s1: StepId, s2: StepId },
    /// At most `r` distinct users on `scope`.
    AtMost { r: usize, scope: Vec<StepId> },
    /// At least `r` distinct users on `scope`.
    AtLeast { r: usize, scope: Vec<StepId> },
    /// Super-user at-least: more than `h` distinct users on `scope`, or
    /// every scope step goes to a member of `supers`.
    Sual {
        scope: Vec<StepId>,
        h: usize,
        supers: UserSet,
    },
    /// Wang–Li: the whole scope is served from a single team.
    Wl {
        scope: Vec<StepId>,
        teams: Vec<UserSet>,
    },
    /// Assignment-dependent authorisation: if `s1` gets a user from
    /// `trigger` then `s2` must get a user from `required`.
    Ada {
        s1: StepId,
        s2: StepId,
        trigger: UserSet,
        required: UserSet,
    },
    Custom(CustomConstraint),
}

fn distinct_users(assignment: &[UserId], scope: &[StepId]) -> usize {
    let mut seen: Vec<usize> = scope.iter().map(|s| assignment[s.0].0).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Bod { .. } => ConstraintKind::Bod,
            Constraint::Sod { .. } => ConstraintKind::Sod,
            Constraint::AtMost { .. } => ConstraintKind::AtMost,
            Constraint::AtLeast { .. } => ConstraintKind::AtLeast,
            Constraint::Sual { .. } => ConstraintKind::Sual,
            Constraint::Wl { .. } => ConstraintKind::Wl,
            Constraint::Ada { .. } => ConstraintKind::Ada,
            Constraint::Custom(_) => ConstraintKind::Custom,
        }
    }

    pub fn scope(&self) -> Vec<StepId> {
        match self {
            Constraint::Bod { s1, s2 } | Constraint::Sod { s1, s2 } | Constraint::Ada { s1, s2, .. } => {
                vec![*s1, *s2]
            }
            Constraint::AtMost { scope, .. }
            | Constraint::AtLeast { scope, .. }
            | Constraint::Sual { scope, .. }
            | Constraint::Wl { scope, .. } => scope.clone(),
            Constraint::Custom(c) => c.scope.clone(),
        }
    }

    /// Whether satisfaction is invariant under permutations of users.
    pub fn is_ui(&self) -> bool {
        matches!(
            self,
            Constraint::Bod { .. }
                | Constraint::Sod { .. }
                | Constraint::AtMost { .. }
                | Constraint::AtLeast { .. }
        )
    }

    /// Evaluates the constraint on a plan known to be in range.
    pub fn holds(&self, assignment: &[UserId]) -> bool {
        match self {
            Constraint::Bod { s1, s2 } => assignment[s1.0] == assignment[s2.0],
            Constraint::Sod { s1, s2 } => assignment[s1.0] != assignment[s2.0],
            Constraint::AtMost { r, scope } => distinct_users(assignment, scope) <= *r,
            Constraint::AtLeast { r, scope } => distinct_users(assignment, scope) >= *r,
            Constraint::Sual { scope, h, supers } => {
                distinct_users(assignment, scope) > *h
                    || scope.iter().all(|t| supers.contains(assignment[t.0].0))
            }
            Constraint::Wl { scope, teams } => teams
                .iter()
                .any(|team| scope.iter().all(|t| team.contains(assignment[t.0].0))),
            Constraint::Ada {
                s1,
                s2,
                trigger,
                required,
            } => !trigger.contains(assignment[s1.0].0) || required.contains(assignment[s2.0].0),
            Constraint::Custom(c) => {
                let users: Vec<UserId> = c.scope.iter().map(|s| assignment[s.0]).collect();
                c.holds_on_scope(&users)
            }
        }
    }

    /// Checks the structural invariants of the constraint against `k` steps
    /// and `n` users.
    pub fn validate(&self, k: usize, n: usize) -> Result<()> {
        let invalid = |reason: &str| WspError::InvalidConstraint {
            constraint: self.to_string(),
            reason: reason.to_string(),
        };
        for s in self.scope() {
            if s.0 >= k {
                return Err(WspError::StepOutOfRange { step: s.0, k });
            }
        }
        let check_users = |set: &UserSet| {
            if set.universe() != n {
                Err(invalid("user set has the wrong universe size"))
            } else {
                Ok(())
            }
        };
        let check_scope = |scope: &[StepId]| {
            let mut sorted: Vec<usize> = scope.iter().map(|s| s.0).collect();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != scope.len() {
                Err(invalid("scope contains a repeated step"))
            } else if scope.len() < 2 {
                Err(invalid("scope must contain at least two steps"))
            } else {
                Ok(())
            }
        };
        match self {
            Constraint::Bod { s1, s2 } | Constraint::Sod { s1, s2 } => {
                if s1 == s2 {
                    return Err(invalid("the two steps must differ"));
                }
            }
            Constraint::AtMost { r, scope } | Constraint::AtLeast { r, scope } => {
                check_scope(scope)?;
                if *r < 1 || *r > scope.len() {
                    return Err(invalid("r must lie in 1..=|scope|"));
                }
            }
            Constraint::Sual { scope, h, supers } => {
                check_scope(scope)?;
                check_users(supers)?;
                if *h < 1 {
                    return Err(invalid("h must be at least 1"));
                }
                if supers.is_empty() {
                    return Err(invalid("the super-user set must be non-empty"));
                }
            }
            Constraint::Wl { scope, teams } => {
                check_scope(scope)?;
                if teams.is_empty() {
                    return Err(invalid("at least one team is required"));
                }
                for (i, a) in teams.iter().enumerate() {
                    check_users(a)?;
                    if teams[..i].iter().any(|b| !a.is_disjoint(b)) {
                        return Err(invalid("teams must be pairwise disjoint"));
                    }
                }
            }
            Constraint::Ada {
                s1,
                s2,
                trigger,
                required,
            } => {
                if s1 == s2 {
                    return Err(invalid("the two steps must differ"));
                }
                check_users(trigger)?;
                check_users(required)?;
            }
            Constraint::Custom(c) => {
                check_scope(&c.scope)?;
            }
        }
        Ok(())
    }

    /// Renders the constraint with caller-supplied step names.
    pub fn describe(&self, step_name: &dyn Fn(StepId) -> String) -> String {
        let list = |scope: &[StepId]| {
            scope
                .iter()
                .map(|&s| step_name(s))
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Constraint::Bod { s1, s2 } => format!("BoD({},{})", step_name(*s1), step_name(*s2)),
            Constraint::Sod { s1, s2 } => format!("SoD({},{})", step_name(*s1), step_name(*s2)),
            Constraint::AtMost { r, scope } => format!("AtMost({r},{{{}}})", list(scope)),
            Constraint::AtLeast { r, scope } => format!("AtLeast({r},{{{}}})", list(scope)),
            Constraint::Sual { scope, h, supers } => {
                format!("SUAL({{{}}},h={h},|X|={})", list(scope), supers.len())
            }
            Constraint::Wl { scope, teams } => {
                format!("WL({{{}}},d={})", list(scope), teams.len())
            }
            Constraint::Ada { s1, s2, .. } => {
                format!("ADA({},{})", step_name(*s1), step_name(*s2))
            }
            Constraint::Custom(c) => format!("{}({{{}}})", c.name, list(&c.scope)),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(&|s| s.to_string()))
    }
}

/// Why a plan is not valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Unauthorised { step: StepId, user: UserId },
    Constraint { index: usize },
}

/// A WSP instance `(S, U, C, A)` with `k` steps and `n` users.
#[derive(Clone, Debug)]
pub struct Instance {
    k: usize,
    n: usize,
    auth: AuthorisationFunction,
    constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(
        k: usize,
        n: usize,
        auth: AuthorisationFunction,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if auth.k() != k {
            return Err(WspError::AuthorisationLength {
                expected: k,
                found: auth.k(),
            });
        }
        if auth.n() != n {
            return Err(WspError::Format(format!(
                "authorisation over {} users, expected {n}",
                auth.n()
            )));
        }
        for c in &constraints {
            c.validate(k, n)?;
        }
        Ok(Instance {
            k,
            n,
            auth,
            constraints,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn auth(&self) -> &AuthorisationFunction {
        &self.auth
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Same steps, users and constraints with a different authorisation.
    pub fn with_auth(&self, auth: AuthorisationFunction) -> Result<Self> {
        Instance::new(self.k, self.n, auth, self.constraints.clone())
    }

    pub fn with_constraints(&self, constraints: Vec<Constraint>) -> Result<Self> {
        Instance::new(self.k, self.n, self.auth.clone(), constraints)
    }

    pub fn check_plan(&self, plan: &Plan) -> Result<()> {
        plan.check(self.k, self.n)
    }

    /// The first violated constraint, else the first unauthorised step.
    pub fn first_violation(&self, plan: &Plan) -> Result<Option<Violation>> {
        self.check_plan(plan)?;
        if let Some(index) = self.constraints.iter().position(|c| !c.holds(plan.users())) {
            return Ok(Some(Violation::Constraint { index }));
        }
        Ok(plan
            .users()
            .iter()
            .enumerate()
            .find(|&(s, &u)| !self.auth.allows(StepId(s), u))
            .map(|(s, &u)| Violation::Unauthorised {
                step: StepId(s),
                user: u,
            }))
    }

    /// Count of constraints that are not user-independent.
    pub fn non_ui_count(&self) -> usize {
        self.constraints.iter().filter(|c| !c.is_ui()).count()
    }
}

fn check_constraint_indices(plan: &Plan, c: &Constraint) -> Result<()> {
    for s in c.scope() {
        if s.0 >= plan.len() {
            return Err(WspError::StepOutOfRange {
                step: s.0,
                k: plan.len(),
            });
        }
    }
    Ok(())
}

/// Whether `plan` satisfies `c`.
pub fn is_eligible(plan: &Plan, c: &Constraint) -> Result<bool> {
    check_constraint_indices(plan, c)?;
    Ok(c.holds(plan.users()))
}

/// Whether every step is assigned a user from its authorisation list.
pub fn is_authorised(plan: &Plan, a: &AuthorisationFunction) -> Result<bool> {
    plan.check(a.k(), a.n())?;
    Ok(a.authorises(plan.users()))
}

/// Authorised and eligible for every constraint.
pub fn is_valid(plan: &Plan, inst: &Instance) -> Result<bool> {
    Ok(inst.first_violation(plan)?.is_none())
}

pub fn is_ui(c: &Constraint) -> bool {
    c.is_ui()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{running_example, running_plan, user_set as set};
    use proptest::prelude::*;

    #[test]
    fn running_plan_satisfies_sod_and_bod() {
        let plan = running_plan();
        let sod = Constraint::Sod {
            s1: StepId(0),
            s2: StepId(1),
        };
        let bod = Constraint::Bod {
            s1: StepId(0),
            s2: StepId(2),
        };
        assert!(is_eligible(&plan, &sod).unwrap());
        assert!(is_eligible(&plan, &bod).unwrap());
        let same = Plan::from_indices(&[3, 3, 0, 0, 0, 0]);
        assert!(!is_eligible(&same, &sod).unwrap());
    }

    #[test]
    fn sual_with_non_super_user_fails() {
        let c = Constraint::Sual {
            scope: vec![StepId(0), StepId(1)],
            h: 1,
            supers: set(3, &[0]),
        };
        let plan = Plan::from_indices(&[1, 1]);
        assert!(!is_eligible(&plan, &c).unwrap());
        assert!(is_eligible(&Plan::from_indices(&[0, 0]), &c).unwrap());
        assert!(is_eligible(&Plan::from_indices(&[1, 2]), &c).unwrap());
    }

    #[test]
    fn out_of_range_step_is_reported() {
        let c = Constraint::Sod {
            s1: StepId(0),
            s2: StepId(4),
        };
        let err = is_eligible(&Plan::from_indices(&[0, 1]), &c).unwrap_err();
        assert!(matches!(err, WspError::StepOutOfRange { step: 4, .. }));
    }

    #[test]
    fn authorisation_checks() {
        let inst = running_example();
        assert!(is_authorised(&running_plan(), inst.auth()).unwrap());
        let mut bad = running_plan().indices();
        bad[0] = 2;
        assert!(!is_authorised(&Plan::from_indices(&bad), inst.auth()).unwrap());
        let full = AuthorisationFunction::full(6, 8);
        assert!(is_authorised(&Plan::from_indices(&[7, 6, 5, 4, 3, 2]), &full).unwrap());
    }

    #[test]
    fn validity_on_running_example() {
        let inst = running_example();
        assert!(is_valid(&running_plan(), &inst).unwrap());
        let mut alt = running_plan().indices();
        alt[5] = 5;
        assert!(is_valid(&Plan::from_indices(&alt), &inst).unwrap());
        let constant = Plan::from_indices(&[0; 6]);
        assert!(!is_valid(&constant, &inst).unwrap());
        let err = is_valid(&Plan::from_indices(&[0; 5]), &inst).unwrap_err();
        assert!(matches!(err, WspError::PlanLength { expected: 6, found: 5 }));
    }

    #[test]
    fn ui_classification() {
        let t = vec![StepId(0), StepId(1), StepId(2)];
        assert!(is_ui(&Constraint::Sod {
            s1: StepId(0),
            s2: StepId(1)
        }));
        assert!(is_ui(&Constraint::AtMost { r: 3, scope: t.clone() }));
        assert!(!is_ui(&Constraint::Sual {
            scope: t.clone(),
            h: 1,
            supers: set(4, &[0])
        }));
        assert!(!is_ui(&Constraint::Wl {
            scope: t.clone(),
            teams: vec![set(4, &[0])]
        }));
    }

    #[test]
    fn constraint_validation() {
        let bad = [
            Constraint::Sod {
                s1: StepId(1),
                s2: StepId(1),
            },
            Constraint::AtMost {
                r: 3,
                scope: vec![StepId(0), StepId(1)],
            },
            Constraint::AtLeast {
                r: 1,
                scope: vec![StepId(0)],
            },
            Constraint::Wl {
                scope: vec![StepId(0), StepId(1)],
                teams: vec![set(4, &[0, 1]), set(4, &[1, 2])],
            },
            Constraint::Sual {
                scope: vec![StepId(0), StepId(1)],
                h: 1,
                supers: set(4, &[]),
            },
        ];
        for c in &bad {
            assert!(c.validate(3, 4).is_err(), "{c} accepted");
        }
        let ok = Constraint::Sual {
            scope: vec![StepId(0), StepId(1)],
            h: 2,
            supers: set(4, &[3]),
        };
        ok.validate(3, 4).unwrap();
    }

    // A user permutation that breaks each user-dependent kind.
    #[test]
    fn non_ui_witnesses() {
        let swap = |plan: &[usize], a: usize, b: usize| -> Plan {
            Plan::from_indices(
                &plan
                    .iter()
                    .map(|&u| if u == a { b } else if u == b { a } else { u })
                    .collect::<Vec<_>>(),
            )
        };
        let t = vec![StepId(0), StepId(1)];
        let cases = [
            (
                Constraint::Sual {
                    scope: t.clone(),
                    h: 1,
                    supers: set(3, &[1]),
                },
                vec![1, 1],
            ),
            (
                Constraint::Wl {
                    scope: t.clone(),
                    teams: vec![set(3, &[0, 1]), set(3, &[2])],
                },
                vec![0, 1],
            ),
            (
                Constraint::Ada {
                    s1: StepId(0),
                    s2: StepId(1),
                    trigger: set(3, &[0]),
                    required: set(3, &[1]),
                },
                vec![0, 1],
            ),
        ];
        for (c, plan) in cases {
            let before = c.holds(Plan::from_indices(&plan).users());
            let after = c.holds(swap(&plan, 1, 2).users());
            assert!(before && !after, "{c}");
        }
    }

    fn arb_ui(k: usize) -> impl Strategy<Value = Constraint> {
        let pair = (0..k, 0..k).prop_filter("distinct", |(a, b)| a != b);
        let scoped = (proptest::sample::subsequence((0..k).collect::<Vec<_>>(), 2..=k), 1..=k);
        prop_oneof![
            pair.clone().prop_map(|(a, b)| Constraint::Sod {
                s1: StepId(a),
                s2: StepId(b)
            }),
            pair.prop_map(|(a, b)| Constraint::Bod {
                s1: StepId(a),
                s2: StepId(b)
            }),
            scoped.clone().prop_map(|(t, r)| Constraint::AtMost {
                r: r.min(t.len()),
                scope: t.into_iter().map(StepId).collect()
            }),
            scoped.prop_map(|(t, r)| Constraint::AtLeast {
                r: r.min(t.len()),
                scope: t.into_iter().map(StepId).collect()
            }),
        ]
    }

    proptest! {
        #[test]
        fn ui_constraints_ignore_user_identity(
            c in arb_ui(5),
            plan in proptest::collection::vec(0usize..6, 5),
            perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let permuted: Vec<usize> = plan.iter().map(|&u| perm[u]).collect();
            prop_assert_eq!(
                c.holds(Plan::from_indices(&plan).users()),
                c.holds(Plan::from_indices(&permuted).users())
            );
        }
    }

    #[test]
    fn user_set_ops() {
        let a = set(130, &[0, 64, 129]);
        assert_eq!(a.len(), 3);
        assert_eq!(a.to_vec(), vec![0, 64, 129]);
        assert_eq!(a.complement().len(), 127);
        assert!(UserSet::full(130).is_subset(&UserSet::full(130)));
        assert_eq!(UserSet::full(64).len(), 64);
        assert!(UserSet::from_indices(3, [3]).is_err());
    }
}
