//! UDPB and PBPB model construction.

use crate::absorption::family_for_constraint;
use crate::error::{Result, WspError};
use crate::instance::{AuthorisationFunction, Constraint, Instance, StepId, UserId, UserSet};
use crate::patterns::Pattern;

use super::{BooleanModel, Cmp, Lit, Repr, Row, Term, VarRole};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PbpbOptions {
    /// Emit the optional transitivity rows over `M`.
    pub transitivity: bool,
    /// AtMost(r, T) enumerates the subsets of size `r + 1` of `T` while there
    /// are at most this many; beyond that it counts representatives.
    pub subset_limit: usize,
}

impl Default for PbpbOptions {
    fn default() -> Self {
        PbpbOptions {
            transitivity: true,
            subset_limit: 1000,
        }
    }
}

pub fn encode_udpb(inst: &Instance) -> Result<BooleanModel> {
    let mut b = Builder::new(Repr::Udpb, inst);
    b.exactly_one_per_step();
    for (ci, c) in inst.constraints().iter().enumerate() {
        match c {
            Constraint::Sod { s1, s2 } => {
                for u in both(inst, *s1, *s2).iter() {
                    let (a, bb) = (b.x(*s1, u).unwrap(), b.x(*s2, u).unwrap());
                    b.m.push(Row::clause(vec![Lit::neg(a), Lit::neg(bb)]));
                }
            }
            Constraint::Bod { s1, s2 } => {
                let mut any = inst.auth().users(*s1).clone();
                any.union_with(inst.auth().users(*s2));
                for u in any.iter() {
                    let terms = match (b.x(*s1, u), b.x(*s2, u)) {
                        (Some(a), Some(bb)) => vec![
                            Term {
                                coef: 1,
                                lit: Lit::pos(a),
                            },
                            Term {
                                coef: -1,
                                lit: Lit::pos(bb),
                            },
                        ],
                        (Some(v), None) | (None, Some(v)) => vec![Term {
                            coef: 1,
                            lit: Lit::pos(v),
                        }],
                        (None, None) => unreachable!(),
                    };
                    b.m.push(Row {
                        guard: None,
                        terms,
                        cmp: Cmp::Eq,
                        rhs: 0,
                    });
                }
            }
            Constraint::AtMost { r, scope } => {
                let z = b.users_in_scope(ci, scope);
                b.m.push(Row::sum(z, Cmp::Le, *r as i64));
            }
            Constraint::AtLeast { r, scope } => {
                let z = b.users_in_scope(ci, scope);
                b.m.push(Row::sum(z, Cmp::Ge, *r as i64));
            }
            Constraint::Sual { scope, h, supers } => {
                let z = b.users_in_scope(ci, scope);
                b.sual(ci, scope, *h, supers, z);
            }
            Constraint::Wl { .. } | Constraint::Ada { .. } => b.selectors(ci),
            Constraint::Custom(_) => return Err(unsupported(c)),
        }
    }
    Ok(b.m)
}

pub fn encode_pbpb(inst: &Instance) -> Result<BooleanModel> {
    encode_pbpb_with(inst, PbpbOptions::default())
}

pub fn encode_pbpb_with(inst: &Instance, opts: PbpbOptions) -> Result<BooleanModel> {
    let mut b = Builder::new(Repr::Pbpb, inst);
    let k = inst.k();
    let m: Vec<usize> = (0..k * k)
        .map(|i| b.m.add_var(VarRole::M { s1: i / k, s2: i % k }))
        .collect();
    let mv = |s: usize, t: usize| m[s * k + t];
    b.exactly_one_per_step();
    for s in 0..k {
        for t in s + 1..k {
            b.m.push(Row {
                guard: None,
                terms: vec![
                    Term {
                        coef: 1,
                        lit: Lit::pos(mv(s, t)),
                    },
                    Term {
                        coef: -1,
                        lit: Lit::pos(mv(t, s)),
                    },
                ],
                cmp: Cmp::Eq,
                rhs: 0,
            });
        }
    }
    for s in 0..k {
        b.m.push(Row::sum(vec![Lit::pos(mv(s, s))], Cmp::Eq, 1));
    }
    if opts.transitivity {
        for s1 in 0..k {
            for s2 in 0..k {
                for s3 in 0..k {
                    if s1 == s2 || s2 == s3 || s1 == s3 {
                        continue;
                    }
                    let (a, bb, c) = (mv(s1, s2), mv(s2, s3), mv(s1, s3));
                    b.m.push(Row::clause(vec![Lit::neg(a), Lit::neg(bb), Lit::pos(c)]));
                    b.m.push(Row::clause(vec![Lit::pos(a), Lit::neg(bb), Lit::neg(c)]));
                }
            }
        }
    }
    for s in 0..k {
        for t in s + 1..k {
            let mst = mv(s, t);
            for u in 0..inst.n() {
                match (b.x(StepId(s), u), b.x(StepId(t), u)) {
                    (Some(xs), Some(xt)) => {
                        b.m.push(Row::clause(vec![Lit::neg(mst), Lit::neg(xs), Lit::pos(xt)]));
                        b.m.push(Row::clause(vec![Lit::neg(mst), Lit::pos(xs), Lit::neg(xt)]));
                        b.m.push(Row::clause(vec![Lit::pos(mst), Lit::neg(xs), Lit::neg(xt)]));
                    }
                    (Some(v), None) | (None, Some(v)) => {
                        b.m.push(Row::clause(vec![Lit::neg(mst), Lit::neg(v)]));
                    }
                    (None, None) => {}
                }
            }
        }
    }
    for (ci, c) in inst.constraints().iter().enumerate() {
        match c {
            Constraint::Sod { s1, s2 } => {
                b.m.push(Row::sum(vec![Lit::pos(mv(s1.0, s2.0))], Cmp::Eq, 0));
            }
            Constraint::Bod { s1, s2 } => {
                b.m.push(Row::sum(vec![Lit::pos(mv(s1.0, s2.0))], Cmp::Eq, 1));
            }
            Constraint::AtMost { r, scope } => {
                if binomial(scope.len(), r + 1) <= opts.subset_limit as u128 {
                    let mut sorted: Vec<usize> = scope.iter().map(|s| s.0).collect();
                    sorted.sort_unstable();
                    for subset in subsets(&sorted, r + 1) {
                        let mut lits = Vec::new();
                        for (i, &s) in subset.iter().enumerate() {
                            for &t in &subset[i + 1..] {
                                lits.push(Lit::pos(mv(s, t)));
                            }
                        }
                        b.m.push(Row::clause(lits));
                    }
                } else {
                    let reps = b.representatives(ci, scope, &mv);
                    b.m.push(Row::sum(reps, Cmp::Le, *r as i64));
                }
            }
            Constraint::AtLeast { r, scope } => {
                let reps = b.representatives(ci, scope, &mv);
                b.m.push(Row::sum(reps, Cmp::Ge, *r as i64));
            }
            Constraint::Sual { scope, h, supers } => {
                let reps = b.representatives(ci, scope, &mv);
                b.sual(ci, scope, *h, supers, reps);
            }
            Constraint::Wl { .. } | Constraint::Ada { .. } => b.selectors(ci),
            Constraint::Custom(_) => return Err(unsupported(c)),
        }
    }
    Ok(b.m)
}

fn unsupported(c: &Constraint) -> WspError {
    WspError::Unsupported {
        constraint: c.to_string(),
        reason: "only catalogue constraints have a compact group encoding".into(),
    }
}

fn both(inst: &Instance, s1: StepId, s2: StepId) -> UserSet {
    inst.auth().users(s1).intersection(inst.auth().users(s2))
}

/// Functions of a pattern-independent family, relative to all users.
pub(crate) fn family_functions(inst: &Instance, constraint: usize) -> Vec<AuthorisationFunction> {
    let c = &inst.constraints()[constraint];
    let any = Pattern::canonical(&vec![0usize; inst.k()]);
    family_for_constraint(c, &any, inst.k(), inst.n())
        .expect("catalogue family")
        .functions()
        .to_vec()
}

pub(crate) fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// The `size`-element subsets of `items` in lexicographic order.
pub(crate) fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..size).collect();
    if size > items.len() {
        return out;
    }
    loop {
        out.push(pick.iter().map(|&i| items[i]).collect());
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] < items.len() - size + i {
                pick[i] += 1;
                for j in i + 1..size {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

struct Builder<'a> {
    inst: &'a Instance,
    m: BooleanModel,
}

impl<'a> Builder<'a> {
    fn new(repr: Repr, inst: &'a Instance) -> Self {
        let mut m = BooleanModel::new(repr, inst);
        for s in 0..inst.k() {
            for u in inst.auth().users(StepId(s)).iter() {
                m.add_var(VarRole::X { step: s, user: u });
            }
        }
        Builder { inst, m }
    }

    fn x(&self, s: StepId, u: usize) -> Option<usize> {
        self.m.x(s, UserId(u))
    }

    fn exactly_one_per_step(&mut self) {
        for s in 0..self.inst.k() {
            let lits = self
                .inst
                .auth()
                .users(StepId(s))
                .iter()
                .map(|u| Lit::pos(self.x(StepId(s), u).unwrap()))
                .collect();
            self.m.push(Row::sum(lits, Cmp::Eq, 1));
        }
    }

    /// `z_u <=> OR_{s in T} x_s_u` for every user with a variable in `T`.
    fn users_in_scope(&mut self, ci: usize, scope: &[StepId]) -> Vec<Lit> {
        let mut zs = Vec::new();
        for u in 0..self.inst.n() {
            let xs: Vec<usize> = scope.iter().filter_map(|&s| self.x(s, u)).collect();
            if xs.is_empty() {
                continue;
            }
            let z = self.m.add_var(VarRole::Z {
                constraint: ci,
                user: u,
            });
            for &x in &xs {
                self.m.push(Row::clause(vec![Lit::neg(x), Lit::pos(z)]));
            }
            let mut back: Vec<Lit> = xs.iter().map(|&x| Lit::pos(x)).collect();
            back.push(Lit::neg(z));
            self.m.push(Row::clause(back));
            zs.push(Lit::pos(z));
        }
        zs
    }

    /// `rep_s <=> AND_{t in T, t < s} !M_s_t`; the sum counts blocks of `T`.
    fn representatives(&mut self, ci: usize, scope: &[StepId], mv: &dyn Fn(usize, usize) -> usize) -> Vec<Lit> {
        let mut sorted: Vec<usize> = scope.iter().map(|s| s.0).collect();
        sorted.sort_unstable();
        let mut reps = Vec::new();
        for (i, &s) in sorted.iter().enumerate() {
            let rep = self.m.add_var(VarRole::Rep {
                constraint: ci,
                step: s,
            });
            let mut back = vec![Lit::pos(rep)];
            for &t in &sorted[..i] {
                self.m.push(Row::clause(vec![Lit::neg(rep), Lit::neg(mv(s, t))]));
                back.push(Lit::pos(mv(s, t)));
            }
            self.m.push(Row::clause(back));
            reps.push(Lit::pos(rep));
        }
        reps
    }

    /// Group 0: the scope meets at most `h` blocks and only super users may
    /// take scope steps. Group 1: it meets more than `h` blocks.
    fn sual(&mut self, ci: usize, scope: &[StepId], h: usize, supers: &UserSet, counted: Vec<Lit>) {
        let g0 = self.m.add_var(VarRole::Group {
            constraint: ci,
            index: 0,
        });
        let g1 = self.m.add_var(VarRole::Group {
            constraint: ci,
            index: 1,
        });
        self.m
            .push(Row::sum(vec![Lit::pos(g0), Lit::pos(g1)], Cmp::Eq, 1));
        self.m
            .push(Row::sum(counted.clone(), Cmp::Le, h as i64).guarded(Lit::pos(g0)));
        self.m
            .push(Row::sum(counted, Cmp::Ge, h as i64 + 1).guarded(Lit::pos(g1)));
        for &s in scope {
            for u in self.inst.auth().users(s).iter() {
                if !supers.contains(u) {
                    let x = self.x(s, u).unwrap();
                    self.m.push(Row::clause(vec![Lit::neg(g0), Lit::neg(x)]));
                }
            }
        }
    }

    /// One selector per family function; a selected function forbids the
    /// users it excludes.
    fn selectors(&mut self, ci: usize) {
        let functions = family_functions(self.inst, ci);
        let mut any = Vec::new();
        for (j, f) in functions.iter().enumerate() {
            let a = self.m.add_var(VarRole::Selector {
                constraint: ci,
                index: j,
            });
            any.push(Lit::pos(a));
            for s in 0..self.inst.k() {
                let s = StepId(s);
                for u in self.inst.auth().users(s).iter() {
                    if !f.users(s).contains(u) {
                        let x = self.x(s, u).unwrap();
                        self.m.push(Row::clause(vec![Lit::neg(a), Lit::neg(x)]));
                    }
                }
            }
        }
        self.m.push(Row::clause(any));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::tests::satisfying;
    use crate::encode::{decode, induced_assignment};
    use crate::fixtures::{random_instance, running_example, running_plan, Mix};
    use crate::instance::{is_valid, Plan};
    use crate::solver::bruteforce::all_plans;

    fn full(k: usize, n: usize, cs: Vec<Constraint>) -> Instance {
        Instance::new(k, n, AuthorisationFunction::full(k, n), cs).unwrap()
    }

    #[test]
    fn single_step_single_user() {
        let inst = full(1, 1, vec![]);
        for model in [encode_udpb(&inst).unwrap(), encode_pbpb(&inst).unwrap()] {
            let sols = satisfying(&model);
            assert_eq!(sols.len(), 1);
            assert!(sols[0][model.var_index("x_0_0").unwrap()]);
        }
    }

    #[test]
    fn udpb_sod_has_two_solutions() {
        let inst = full(
            2,
            2,
            vec![Constraint::Sod {
                s1: StepId(0),
                s2: StepId(1),
            }],
        );
        let model = encode_udpb(&inst).unwrap();
        assert_eq!(model.var_count(), 4);
        assert_eq!(satisfying(&model).len(), 2);
    }

    #[test]
    fn pbpb_at_most_two_of_three() {
        let inst = full(
            3,
            3,
            vec![Constraint::AtMost {
                r: 2,
                scope: vec![StepId(0), StepId(1), StepId(2)],
            }],
        );
        let model = encode_pbpb(&inst).unwrap();
        let sols = satisfying(&model);
        assert_eq!(sols.len(), 21);
        let mut plans: Vec<Plan> = sols.iter().map(|a| decode(a, &model).unwrap()).collect();
        plans.sort();
        plans.dedup();
        assert_eq!(plans.len(), 21);
        for a in &sols {
            for s in 0..3 {
                assert!(a[model.var_index(&format!("M_{s}_{s}")).unwrap()]);
                for t in 0..3 {
                    let st = model.var_index(&format!("M_{s}_{t}")).unwrap();
                    let ts = model.var_index(&format!("M_{t}_{s}")).unwrap();
                    assert_eq!(a[st], a[ts]);
                }
            }
        }
    }

    #[test]
    fn running_example_plan_satisfies_both_models() {
        let inst = running_example();
        for model in [encode_udpb(&inst).unwrap(), encode_pbpb(&inst).unwrap()] {
            let a = induced_assignment(&running_plan(), &model).unwrap();
            assert!(model.is_satisfied(&a));
            assert_eq!(decode(&a, &model).unwrap(), running_plan());
        }
    }

    #[test]
    fn variable_counts() {
        let inst = running_example();
        let authorised: usize = inst.auth().sets().iter().map(UserSet::len).sum();
        let udpb = encode_udpb(&inst).unwrap();
        assert_eq!(udpb.var_count(), authorised);
        let pbpb = encode_pbpb(&inst).unwrap();
        assert_eq!(pbpb.count_role(|r| matches!(r, VarRole::M { .. })), 36);
        assert_eq!(pbpb.count_role(|r| matches!(r, VarRole::X { .. })), authorised);
    }

    #[test]
    fn constant_plan_sets_every_m() {
        let inst = full(3, 2, vec![]);
        let model = encode_pbpb(&inst).unwrap();
        let a = induced_assignment(&Plan::from_indices(&[1, 1, 1]), &model).unwrap();
        for (v, role) in model.roles().iter().enumerate() {
            if matches!(role, VarRole::M { .. }) {
                assert!(a[v]);
            }
        }
    }

    #[test]
    fn validity_matches_induced_satisfaction() {
        for mix in Mix::ALL {
            for seed in 0..20 {
                let inst = random_instance(seed + 77, 3, 3, mix);
                let models = [encode_udpb(&inst).unwrap(), encode_pbpb(&inst).unwrap()];
                for plan in all_plans(3, 3) {
                    let valid = is_valid(&plan, &inst).unwrap();
                    for model in &models {
                        match induced_assignment(&plan, model) {
                            Ok(a) => {
                                assert_eq!(model.is_satisfied(&a), valid, "{:?}", plan.indices());
                                assert_eq!(decode(&a, model).unwrap(), plan);
                            }
                            Err(_) => assert!(!valid),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn small_models_have_exactly_the_valid_plans() {
        for mix in Mix::ALL {
            for seed in 0..10 {
                let inst = random_instance(seed + 300, 2, 3, mix);
                let mut valid: Vec<Plan> = all_plans(2, 3)
                    .filter(|p| is_valid(p, &inst).unwrap())
                    .collect();
                valid.sort();
                for model in [encode_udpb(&inst).unwrap(), encode_pbpb(&inst).unwrap()] {
                    if model.var_count() > 22 {
                        continue;
                    }
                    let mut got: Vec<Plan> = satisfying(&model)
                        .iter()
                        .map(|a| decode(a, &model).unwrap())
                        .collect();
                    got.sort();
                    got.dedup();
                    assert_eq!(got, valid, "{:?}", inst.constraints());
                }
            }
        }
    }

    #[test]
    fn representatives_match_subset_enumeration() {
        let subset = PbpbOptions::default();
        let reps = PbpbOptions {
            subset_limit: 0,
            ..subset
        };
        for seed in 0..20 {
            let inst = random_instance(seed + 900, 3, 3, Mix::AtMost);
            let a = encode_pbpb_with(&inst, subset).unwrap();
            let b = encode_pbpb_with(&inst, reps).unwrap();
            for plan in all_plans(3, 3) {
                let sa = induced_assignment(&plan, &a).map(|x| a.is_satisfied(&x));
                let sb = induced_assignment(&plan, &b).map(|x| b.is_satisfied(&x));
                assert_eq!(sa.ok(), sb.ok());
            }
        }
    }

    #[test]
    fn unauthorised_plans_have_no_induced_assignment() {
        let inst = running_example();
        let model = encode_udpb(&inst).unwrap();
        assert!(induced_assignment(&Plan::from_indices(&[7, 7, 7, 7, 7, 7]), &model).is_err());
    }

    #[test]
    fn decode_rejects_two_users_for_one_step() {
        let inst = full(1, 2, vec![]);
        let model = encode_udpb(&inst).unwrap();
        assert!(decode(&[true, true], &model).is_err());
        assert!(decode(&[false, false], &model).is_err());
        assert_eq!(decode(&[false, true], &model).unwrap().indices(), vec![1]);
    }

    #[test]
    fn subset_and_binomial_helpers() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(subsets(&[1, 4, 7], 2), vec![vec![1, 4], vec![1, 7], vec![4, 7]]);
        assert_eq!(subsets(&[1, 2], 3), Vec::<Vec<usize>>::new());
        assert_eq!(subsets(&[3], 0), vec![Vec::<usize>::new()]);
    }
}
