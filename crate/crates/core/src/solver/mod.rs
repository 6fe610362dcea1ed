//! Exact solvers: pattern enumeration, pattern backtracking and a brute-force
//! oracle. All three share the same verdict contract.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::instance::{is_valid, Instance, Plan};

pub mod backtrack;
pub mod bruteforce;
pub mod pattern_enum;

pub use backtrack::{solve_backtracking, solve_backtracking_with};
pub use bruteforce::{count_valid_plans, solve_bruteforce, solve_bruteforce_with, valid_plans};
pub use pattern_enum::{solve_pattern_enum, solve_pattern_enum_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sat,
    Unsat,
    /// A resource limit was hit before the search finished.
    BudgetExceeded,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::BudgetExceeded => "BUDGET_EXCEEDED",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub patterns_visited: u64,
    pub matchings_computed: u64,
    pub nodes_expanded: u64,
    #[serde(serialize_with = "millis")]
    pub wall_time: Duration,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1000.0)
}

/// `Sat` iff `plan` is present, and then the plan is valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub plan: Option<Plan>,
    pub stats: Stats,
}

impl SolveResult {
    pub(crate) fn sat(plan: Plan, stats: Stats) -> Self {
        SolveResult {
            verdict: Verdict::Sat,
            plan: Some(plan),
            stats,
        }
    }

    pub(crate) fn without_plan(verdict: Verdict, stats: Stats) -> Self {
        SolveResult {
            verdict,
            plan: None,
            stats,
        }
    }
}

/// Resource limits; `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_millis: Option<u64>,
    pub max_patterns: Option<u64>,
    pub max_nodes: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub budget: SolveBudget,
    /// Worker threads for the backtracking solver; 1 is deterministic.
    pub jobs: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: SolveBudget::default(),
            jobs: 1,
        }
    }
}

/// Tracks wall time against the budget.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Clock {
    start: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    pub(crate) fn start(budget: &SolveBudget) -> Self {
        let start = Instant::now();
        Clock {
            start,
            deadline: budget.max_millis.map(|ms| start + Duration::from_millis(ms)),
        }
    }

    pub(crate) fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    PatternEnum,
    Backtrack,
    Bruteforce,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::PatternEnum,
        Algorithm::Backtrack,
        Algorithm::Bruteforce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PatternEnum => "pattern-enum",
            Algorithm::Backtrack => "backtrack",
            Algorithm::Bruteforce => "bruteforce",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

pub fn solve(inst: &Instance, algorithm: Algorithm, opts: &SolveOptions) -> Result<SolveResult> {
    match algorithm {
        Algorithm::PatternEnum => solve_pattern_enum_with(inst, opts),
        Algorithm::Backtrack => solve_backtracking_with(inst, opts),
        Algorithm::Bruteforce => solve_bruteforce_with(inst, opts, bruteforce::DEFAULT_CAP),
    }
}

/// Whether `plan` is valid for `inst`.
pub fn verify(plan: &Plan, inst: &Instance) -> Result<bool> {
    is_valid(plan, inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ada_sharpness_instance, random_instance, running_example, Mix};
    use crate::instance::{AuthorisationFunction, Constraint, StepId, UserSet};

    fn all_agree(inst: &Instance) -> Verdict {
        let opts = SolveOptions::default();
        let verdicts: Vec<Verdict> = Algorithm::ALL
            .iter()
            .map(|&a| {
                let r = solve(inst, a, &opts).unwrap();
                if let Some(plan) = &r.plan {
                    assert!(verify(plan, inst).unwrap(), "{a} returned an invalid plan");
                }
                assert_eq!(r.verdict == Verdict::Sat, r.plan.is_some());
                r.verdict
            })
            .collect();
        assert!(verdicts.windows(2).all(|w| w[0] == w[1]), "{verdicts:?}");
        verdicts[0]
    }

    #[test]
    fn running_example_is_sat_everywhere() {
        assert_eq!(all_agree(&running_example()), Verdict::Sat);
    }

    #[test]
    fn unassignable_step_is_unsat() {
        let inst = running_example();
        let mut auth = inst.auth().clone();
        *auth.users_mut(StepId(5)) = UserSet::empty(8);
        assert_eq!(all_agree(&inst.with_auth(auth).unwrap()), Verdict::Unsat);
    }

    #[test]
    fn pigeonhole_is_unsat() {
        let (k, n) = (4, 3);
        let mut cs = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                cs.push(Constraint::Sod {
                    s1: StepId(a),
                    s2: StepId(b),
                });
            }
        }
        let inst = Instance::new(k, n, AuthorisationFunction::full(k, n), cs).unwrap();
        assert_eq!(all_agree(&inst), Verdict::Unsat);
    }

    #[test]
    fn single_user_sod_is_unsat() {
        let inst = Instance::new(
            2,
            1,
            AuthorisationFunction::full(2, 1),
            vec![Constraint::Sod {
                s1: StepId(0),
                s2: StepId(1),
            }],
        )
        .unwrap();
        assert_eq!(all_agree(&inst), Verdict::Unsat);
    }

    #[test]
    fn ada_with_sod() {
        let base = ada_sharpness_instance();
        let mut cs = base.constraints().to_vec();
        cs.push(Constraint::Sod {
            s1: StepId(0),
            s2: StepId(1),
        });
        let inst = base.with_constraints(cs).unwrap();
        assert_eq!(all_agree(&inst), Verdict::Sat);
        assert!(verify(&Plan::from_indices(&[0, 1]), &inst).unwrap());
        assert!(!verify(&Plan::from_indices(&[0, 2]), &inst).unwrap());
    }

    #[test]
    fn random_mixes_agree() {
        for mix in Mix::ALL {
            for seed in 0..25 {
                all_agree(&random_instance(seed, 4, 5, mix));
            }
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("dfs".parse::<Algorithm>().is_err());
    }
}
