//! Pattern enumeration: every pattern in lexicographic order, eligibility
//! first, then one matching per member of the absorbed family.

use crate::absorption::absorb;
use crate::error::Result;
use crate::instance::{Instance, Plan};
use crate::matching::authorised_plan_for;
use crate::patterns::enumerate_patterns;

use super::{Clock, SolveOptions, SolveResult, Stats, Verdict};

pub fn solve_pattern_enum(inst: &Instance) -> Result<SolveResult> {
    solve_pattern_enum_with(inst, &SolveOptions::default())
}

/// Pattern-major: all members of the family at one pattern are tried before
/// moving to the next pattern. UNSAT only once every pattern is exhausted.
pub fn solve_pattern_enum_with(inst: &Instance, opts: &SolveOptions) -> Result<SolveResult> {
    let clock = Clock::start(&opts.budget);
    let mut stats = Stats::default();
    if inst.k() == 0 {
        stats.wall_time = clock.elapsed();
        return Ok(SolveResult::sat(Plan::new(Vec::new()), stats));
    }
    let cda = absorb(inst)?;
    for p in enumerate_patterns(inst.k()) {
        if opts
            .budget
            .max_patterns
            .is_some_and(|m| stats.patterns_visited >= m)
            || (stats.patterns_visited % 256 == 0 && clock.expired())
        {
            stats.wall_time = clock.elapsed();
            return Ok(SolveResult::without_plan(Verdict::BudgetExceeded, stats));
        }
        stats.patterns_visited += 1;
        stats.nodes_expanded += 1;
        if !cda.pattern_eligible(&p) {
            continue;
        }
        for f in cda.family_at(&p).functions() {
            stats.matchings_computed += 1;
            if let Some(plan) = authorised_plan_for(&p, f) {
                debug_assert!(crate::instance::is_valid(&plan, inst).unwrap());
                stats.wall_time = clock.elapsed();
                return Ok(SolveResult::sat(plan, stats));
            }
        }
    }
    stats.wall_time = clock.elapsed();
    Ok(SolveResult::without_plan(Verdict::Unsat, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorption::branching_bound;
    use crate::fixtures::{random_instance, running_example, Mix};
    use crate::patterns::bell;
    use crate::solver::SolveBudget;

    #[test]
    fn ui_only_work_is_bounded_by_bell() {
        let r = solve_pattern_enum(&running_example()).unwrap();
        assert_eq!(r.verdict, Verdict::Sat);
        assert!(r.stats.patterns_visited <= 203);
        assert!(r.stats.matchings_computed as u128 <= bell(6).unwrap());
    }

    #[test]
    fn work_is_bounded_by_branching_product() {
        for mix in [Mix::Sual, Mix::Wl, Mix::Ada, Mix::Mixed] {
            for seed in 0..40 {
                let inst = random_instance(seed, 5, 6, mix);
                let r = solve_pattern_enum(&inst).unwrap();
                let product: u128 = inst
                    .constraints()
                    .iter()
                    .filter(|c| !c.is_ui())
                    .map(|c| branching_bound(c, inst.k(), inst.n()).bound)
                    .product();
                assert!(r.stats.patterns_visited as u128 <= bell(5).unwrap());
                assert!(r.stats.matchings_computed as u128 <= bell(5).unwrap() * product);
            }
        }
    }

    #[test]
    fn pattern_budget_is_reported() {
        let inst = running_example();
        let mut auth = inst.auth().clone();
        *auth.users_mut(crate::StepId(5)) = crate::UserSet::empty(8);
        let unsat = inst.with_auth(auth).unwrap();
        let opts = SolveOptions {
            budget: SolveBudget {
                max_patterns: Some(10),
                ..SolveBudget::default()
            },
            jobs: 1,
        };
        let r = solve_pattern_enum_with(&unsat, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::BudgetExceeded);
        assert_eq!(r.stats.patterns_visited, 10);
        assert_eq!(solve_pattern_enum(&unsat).unwrap().stats.patterns_visited, 203);
    }
}
