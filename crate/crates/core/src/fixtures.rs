//! Reference instances and small random instances for tests and demos.

use crate::generator::rng::SplitMix64;
use crate::instance::{AuthorisationFunction, Constraint, Instance, Plan, StepId, UserSet};

/// Builds a user set, panicking on out-of-range indices.
pub fn user_set(n: usize, users: &[usize]) -> UserSet {
    UserSet::from_indices(n, users.iter().copied()).expect("user index out of range")
}

fn sod(a: usize, b: usize) -> Constraint {
    Constraint::Sod {
        s1: StepId(a),
        s2: StepId(b),
    }
}

/// The purchase-order workflow: 6 steps, 8 users, four SoD and one BoD.
///
/// Steps `s1..s6` and users `u1..u8` map to indices `0..6` and `0..8`.
pub fn running_example() -> Instance {
    let auth = AuthorisationFunction::from_lists(
        8,
        &[
            vec![0, 1],
            vec![1, 2],
            vec![0, 2],
            vec![2, 3],
            vec![2, 3, 4, 7],
            vec![4, 5, 6],
        ],
    )
    .unwrap();
    let constraints = vec![
        sod(0, 1),
        sod(0, 3),
        sod(2, 4),
        sod(3, 5),
        Constraint::Bod {
            s1: StepId(0),
            s2: StepId(2),
        },
    ];
    Instance::new(6, 8, auth, constraints).unwrap()
}

/// `s1->u1, s2->u2, s3->u1, s4->u4, s5->u3, s6->u5`.
pub fn running_plan() -> Plan {
    Plan::from_indices(&[0, 1, 0, 3, 2, 4])
}

/// Two steps, `2d` users, one WL constraint over both steps whose teams are
/// the consecutive user pairs.
pub fn wl_sharpness_instance(d: usize) -> Instance {
    let n = 2 * d;
    let teams = (0..d).map(|i| user_set(n, &[2 * i, 2 * i + 1])).collect();
    Instance::new(
        2,
        n,
        AuthorisationFunction::full(2, n),
        vec![Constraint::Wl {
            scope: vec![StepId(0), StepId(1)],
            teams,
        }],
    )
    .unwrap()
}

/// Two steps, three users, ADA with trigger `{u1}` and required `{u2}`.
pub fn ada_sharpness_instance() -> Instance {
    Instance::new(
        2,
        3,
        AuthorisationFunction::full(2, 3),
        vec![Constraint::Ada {
            s1: StepId(0),
            s2: StepId(1),
            trigger: user_set(3, &[0]),
            required: user_set(3, &[1]),
        }],
    )
    .unwrap()
}

/// Which constraint kinds a random instance draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mix {
    Sod,
    Bod,
    AtMost,
    AtLeast,
    Sual,
    Wl,
    Ada,
    Mixed,
}

impl Mix {
    pub const ALL: [Mix; 8] = [
        Mix::Sod,
        Mix::Bod,
        Mix::AtMost,
        Mix::AtLeast,
        Mix::Sual,
        Mix::Wl,
        Mix::Ada,
        Mix::Mixed,
    ];
}

fn random_users(rng: &mut SplitMix64, n: usize, min: usize) -> UserSet {
    let size = rng.inclusive(min, n);
    user_set(n, &rng.sample_distinct(n, size))
}

fn random_scope(rng: &mut SplitMix64, k: usize) -> Vec<StepId> {
    let size = rng.inclusive(2, k);
    rng.sample_distinct(k, size).into_iter().map(StepId).collect()
}

fn random_constraint(rng: &mut SplitMix64, k: usize, n: usize, mix: Mix) -> Constraint {
    let mix = if mix == Mix::Mixed {
        Mix::ALL[rng.below_usize(7)]
    } else {
        mix
    };
    let pair = |rng: &mut SplitMix64| {
        let v = rng.sample_distinct(k, 2);
        (StepId(v[0]), StepId(v[1]))
    };
    match mix {
        Mix::Sod => {
            let (s1, s2) = pair(rng);
            Constraint::Sod { s1, s2 }
        }
        Mix::Bod => {
            let (s1, s2) = pair(rng);
            Constraint::Bod { s1, s2 }
        }
        Mix::AtMost => {
            let scope = random_scope(rng, k);
            let r = rng.inclusive(1, scope.len());
            Constraint::AtMost { r, scope }
        }
        Mix::AtLeast => {
            let scope = random_scope(rng, k);
            let r = rng.inclusive(1, scope.len());
            Constraint::AtLeast { r, scope }
        }
        Mix::Sual => {
            let scope = random_scope(rng, k);
            let h = rng.inclusive(1, scope.len());
            let supers = random_users(rng, n, 1);
            Constraint::Sual { scope, h, supers }
        }
        Mix::Wl => {
            let scope = random_scope(rng, k);
            // Random labels in 0..=d; label d means "no team".
            let d = rng.inclusive(1, n.min(3));
            let mut teams = vec![UserSet::empty(n); d];
            for u in 0..n {
                let label = rng.below_usize(d + 1);
                if label < d {
                    teams[label].insert(u);
                }
            }
            Constraint::Wl { scope, teams }
        }
        Mix::Ada => {
            let (s1, s2) = pair(rng);
            Constraint::Ada {
                s1,
                s2,
                trigger: random_users(rng, n, 0),
                required: random_users(rng, n, 0),
            }
        }
        Mix::Mixed => unreachable!(),
    }
}

/// A random instance with `2 <= k`, random authorisations of roughly 60%
/// density and one to three constraints drawn from `mix`.
pub fn random_instance(seed: u64, k: usize, n: usize, mix: Mix) -> Instance {
    assert!(k >= 2 && n >= 1);
    let mut rng = SplitMix64::new(seed);
    let lists: Vec<Vec<usize>> = (0..k)
        .map(|_| (0..n).filter(|_| rng.below(100) < 60).collect())
        .collect();
    let auth = AuthorisationFunction::from_lists(n, &lists).unwrap();
    let count = rng.inclusive(1, 3);
    let constraints = (0..count)
        .map(|_| random_constraint(&mut rng, k, n, mix))
        .collect();
    Instance::new(k, n, auth, constraints).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::is_valid;

    #[test]
    fn running_example_is_consistent() {
        let inst = running_example();
        assert_eq!((inst.k(), inst.n()), (6, 8));
        assert_eq!(inst.constraints().len(), 5);
        assert!(is_valid(&running_plan(), &inst).unwrap());
    }

    #[test]
    fn random_instances_validate() {
        for mix in Mix::ALL {
            for seed in 0..50 {
                let inst = random_instance(seed, 4, 5, mix);
                assert!(!inst.constraints().is_empty());
            }
        }
    }
}
