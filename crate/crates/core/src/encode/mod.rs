//! Solver-ready formulations of an instance.
//!
//! * UDPB: one Boolean `x_s_u` per authorised step/user pair.
//! * PBPB: UDPB plus `M_s_t`, true iff steps `s` and `t` share a user.
//! * CS: one integer `y_s` per step whose domain is the step's users.
//!
//! User-dependent constraints are encoded through their authorisation
//! families: group variables `g` select the part of the pattern space a
//! family applies to and selector variables `a` pick one of its functions.
//! A selected function forbids every user it excludes.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Result, WspError};
use crate::instance::{Constraint, Instance, Plan, StepId, UserId};
use crate::patterns::pattern_of;

pub mod boolean;
pub mod cs;
pub mod dimacs;
pub mod opb;

pub use boolean::{encode_pbpb, encode_pbpb_with, encode_udpb, PbpbOptions};
pub use cs::{decode_cs, emit_cs_json, encode_cs, CsConstraint, CsModel, CsVar};
pub use dimacs::{emit_dimacs, emit_var_map, to_cnf, Cnf};
pub use opb::{emit_opb, parse_opb};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub var: usize,
    pub negated: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Lit { var, negated: true }
    }

    pub fn negate(self) -> Self {
        Lit {
            var: self.var,
            negated: !self.negated,
        }
    }

    pub fn value(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coef: i64,
    pub lit: Lit,
}

/// `guard => sum(coef * lit) cmp rhs`; unguarded rows always apply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub guard: Option<Lit>,
    pub terms: Vec<Term>,
    pub cmp: Cmp,
    pub rhs: i64,
}

impl Row {
    pub fn clause(lits: Vec<Lit>) -> Self {
        Row::sum(lits, Cmp::Ge, 1)
    }

    /// Unit-coefficient sum of literals.
    pub fn sum(lits: Vec<Lit>, cmp: Cmp, rhs: i64) -> Self {
        Row {
            guard: None,
            terms: lits.into_iter().map(|lit| Term { coef: 1, lit }).collect(),
            cmp,
            rhs,
        }
    }

    pub fn guarded(mut self, guard: Lit) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn holds(&self, assignment: &[bool]) -> bool {
        if self.guard.is_some_and(|g| !g.value(assignment)) {
            return true;
        }
        let lhs: i64 = self
            .terms
            .iter()
            .filter(|t| t.lit.value(assignment))
            .map(|t| t.coef)
            .sum();
        match self.cmp {
            Cmp::Ge => lhs >= self.rhs,
            Cmp::Le => lhs <= self.rhs,
            Cmp::Eq => lhs == self.rhs,
        }
    }
}

/// An unguarded row over positive variables with `>=` or `=`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRow {
    pub terms: Vec<(i64, usize)>,
    pub is_eq: bool,
    pub rhs: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarRole {
    X { step: usize, user: usize },
    M { s1: usize, s2: usize },
    /// User `user` takes some step in the scope of constraint `constraint`.
    Z { constraint: usize, user: usize },
    /// `step` shares its user with no earlier step of the scope.
    Rep { constraint: usize, step: usize },
    Group { constraint: usize, index: usize },
    Selector { constraint: usize, index: usize },
}

impl fmt::Display for VarRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarRole::X { step, user } => write!(f, "x_{step}_{user}"),
            VarRole::M { s1, s2 } => write!(f, "M_{s1}_{s2}"),
            VarRole::Z { constraint, user } => write!(f, "z_{constraint}_{user}"),
            VarRole::Rep { constraint, step } => write!(f, "rep_{constraint}_{step}"),
            VarRole::Group { constraint, index } => write!(f, "g_{constraint}_{index}"),
            VarRole::Selector { constraint, index } => write!(f, "a_{constraint}_{index}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Repr {
    Udpb,
    Pbpb,
}

/// A pseudo-Boolean model. Variables are numbered from 0 in creation order.
#[derive(Clone, Debug)]
pub struct BooleanModel {
    repr: Repr,
    instance: Instance,
    roles: Vec<VarRole>,
    index: HashMap<String, usize>,
    rows: Vec<Row>,
    // [step][user]
    x: Vec<Vec<Option<usize>>>,
}

impl BooleanModel {
    pub(crate) fn new(repr: Repr, instance: &Instance) -> Self {
        BooleanModel {
            repr,
            instance: instance.clone(),
            roles: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            x: vec![vec![None; instance.n()]; instance.k()],
        }
    }

    pub(crate) fn add_var(&mut self, role: VarRole) -> usize {
        let v = self.roles.len();
        self.roles.push(role);
        self.index.insert(role.to_string(), v);
        if let VarRole::X { step, user } = role {
            self.x[step][user] = Some(v);
        }
        v
    }

    pub(crate) fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn var_count(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[VarRole] {
        &self.roles
    }

    pub fn name(&self, var: usize) -> String {
        self.roles[var].to_string()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// The variable of an authorised pair; `None` means fixed to false.
    pub fn x(&self, s: StepId, u: UserId) -> Option<usize> {
        self.x[s.0][u.0]
    }

    pub fn count_role(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.roles.iter().filter(|r| pred(r)).count()
    }

    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.var_count() && self.rows.iter().all(|r| r.holds(assignment))
    }

    /// Rows rewritten over positive variables with `>=` and `=` only.
    /// Negated literals become `c - c*x`; a guard `g` on `sum >= rhs`
    /// becomes the term `(rhs - min(sum)) * !g`.
    pub fn to_linear(&self) -> Vec<LinearRow> {
        let mut out = Vec::new();
        for row in &self.rows {
            let parts: Vec<(Vec<Term>, i64, bool)> = match row.cmp {
                Cmp::Ge => vec![(row.terms.clone(), row.rhs, false)],
                Cmp::Le => vec![(flip(&row.terms), -row.rhs, false)],
                Cmp::Eq if row.guard.is_some() => vec![
                    (row.terms.clone(), row.rhs, false),
                    (flip(&row.terms), -row.rhs, false),
                ],
                Cmp::Eq => vec![(row.terms.clone(), row.rhs, true)],
            };
            for (mut terms, rhs, is_eq) in parts {
                if let Some(g) = row.guard {
                    let min: i64 = terms.iter().map(|t| t.coef.min(0)).sum();
                    let slack = (rhs - min).max(0);
                    if slack > 0 {
                        terms.push(Term {
                            coef: slack,
                            lit: g.negate(),
                        });
                    }
                }
                out.push(normalise(&terms, rhs, is_eq));
            }
        }
        out
    }
}

fn flip(terms: &[Term]) -> Vec<Term> {
    terms
        .iter()
        .map(|t| Term {
            coef: -t.coef,
            lit: t.lit,
        })
        .collect()
}

fn normalise(terms: &[Term], mut rhs: i64, is_eq: bool) -> LinearRow {
    let mut merged: Vec<(i64, usize)> = Vec::new();
    for t in terms {
        let (coef, var) = if t.lit.negated {
            rhs -= t.coef;
            (-t.coef, t.lit.var)
        } else {
            (t.coef, t.lit.var)
        };
        match merged.iter_mut().find(|(_, v)| *v == var) {
            Some(entry) => entry.0 += coef,
            None => merged.push((coef, var)),
        }
    }
    merged.retain(|&(c, _)| c != 0);
    LinearRow {
        terms: merged,
        is_eq,
        rhs,
    }
}

/// The assignment a plan induces: `x` from the plan, `M` from its pattern
/// and every auxiliary variable by its defining condition. Selectors pick
/// the first family function that authorises the plan.
pub fn induced_assignment(plan: &Plan, model: &BooleanModel) -> Result<Vec<bool>> {
    let inst = &model.instance;
    inst.check_plan(plan)?;
    for (s, &u) in plan.users().iter().enumerate() {
        if model.x[s][u.0].is_none() {
            return Err(WspError::Decode(format!(
                "step {s} is assigned user {} but has no variable for it",
                u.0
            )));
        }
    }
    let users = plan.users();
    let pattern = pattern_of(plan);
    let mut first_selector: HashMap<usize, Option<usize>> = HashMap::new();
    let mut out = Vec::with_capacity(model.var_count());
    for role in &model.roles {
        let value = match *role {
            VarRole::X { step, user } => users[step].0 == user,
            VarRole::M { s1, s2 } => users[s1] == users[s2],
            VarRole::Z { constraint, user } => inst.constraints()[constraint]
                .scope()
                .iter()
                .any(|s| users[s.0].0 == user),
            VarRole::Rep { constraint, step } => inst.constraints()[constraint]
                .scope()
                .iter()
                .all(|t| t.0 >= step || users[t.0] != users[step]),
            VarRole::Group { constraint, index } => match &inst.constraints()[constraint] {
                Constraint::Sual { scope, h, .. } => {
                    (pattern.blocks_touched(scope) <= *h) == (index == 0)
                }
                other => unreachable!("no groups for {other}"),
            },
            VarRole::Selector { constraint, index } => {
                let first = *first_selector.entry(constraint).or_insert_with(|| {
                    boolean::family_functions(inst, constraint)
                        .iter()
                        .position(|f| f.authorises(users))
                });
                first == Some(index)
            }
        };
        out.push(value);
    }
    Ok(out)
}

/// Reads the plan off the `x` variables.
pub fn decode(assignment: &[bool], model: &BooleanModel) -> Result<Plan> {
    if assignment.len() != model.var_count() {
        return Err(WspError::Decode(format!(
            "assignment has {} values for {} variables",
            assignment.len(),
            model.var_count()
        )));
    }
    let mut users = Vec::with_capacity(model.x.len());
    for (s, row) in model.x.iter().enumerate() {
        let set: Vec<usize> = row
            .iter()
            .enumerate()
            .filter_map(|(u, v)| v.filter(|&v| assignment[v]).map(|_| u))
            .collect();
        match set[..] {
            [u] => users.push(UserId(u)),
            _ => {
                return Err(WspError::Decode(format!(
                    "step {s} has {} users set, expected exactly one",
                    set.len()
                )))
            }
        }
    }
    Ok(Plan::new(users))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Every satisfying assignment of a small model, by exhaustive search.
    pub(crate) fn satisfying(model: &BooleanModel) -> Vec<Vec<bool>> {
        let v = model.var_count();
        assert!(v <= 22, "too many variables ({v}) for exhaustive search");
        (0u32..1 << v)
            .map(|bits| (0..v).map(|i| bits >> i & 1 == 1).collect::<Vec<bool>>())
            .filter(|a| model.is_satisfied(a))
            .collect()
    }

    #[test]
    fn literal_and_row_semantics() {
        let a = [true, false];
        assert!(Lit::pos(0).value(&a));
        assert!(Lit::neg(1).value(&a));
        assert!(Row::clause(vec![Lit::neg(0), Lit::pos(1)]).holds(&[false, false]));
        assert!(!Row::clause(vec![Lit::neg(0), Lit::pos(1)]).holds(&a));
        let guarded = Row::sum(vec![Lit::pos(1)], Cmp::Ge, 1).guarded(Lit::pos(0));
        assert!(!guarded.holds(&a));
        assert!(guarded.holds(&[false, false]));
    }

    #[test]
    fn linearisation_preserves_semantics() {
        let rows = vec![
            Row::clause(vec![Lit::neg(0), Lit::neg(1)]),
            Row::sum(vec![Lit::pos(0), Lit::pos(1), Lit::neg(2)], Cmp::Le, 1),
            Row::sum(vec![Lit::pos(1), Lit::pos(2)], Cmp::Ge, 2).guarded(Lit::pos(0)),
            Row::sum(vec![Lit::pos(1), Lit::pos(2)], Cmp::Eq, 1).guarded(Lit::neg(0)),
        ];
        for row in rows {
            let mut m = BooleanModel::new(
                Repr::Udpb,
                &Instance::new(1, 1, crate::AuthorisationFunction::full(1, 1), vec![]).unwrap(),
            );
            for i in 0..3 {
                m.add_var(VarRole::Z {
                    constraint: 0,
                    user: i,
                });
            }
            m.push(row.clone());
            let linear = m.to_linear();
            for bits in 0..8u32 {
                let a: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
                let lin = linear.iter().all(|l| {
                    let lhs: i64 = l.terms.iter().filter(|t| a[t.1]).map(|t| t.0).sum();
                    if l.is_eq {
                        lhs == l.rhs
                    } else {
                        lhs >= l.rhs
                    }
                });
                assert_eq!(lin, row.holds(&a), "{row:?} at {a:?}");
            }
        }
    }
}
