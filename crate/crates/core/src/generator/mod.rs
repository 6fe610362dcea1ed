//! Seeded random instances and phase-transition calibration.
//!
//! Every kind of random choice draws from its own stream forked off the
//! attempt seed, and constraints of one kind are drawn one after another.
//! Raising one constraint count therefore keeps every other part of the
//! instance and extends the constraint list of that kind, so the set of
//! constraints only grows with the count.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WspError};
use crate::instance::{AuthorisationFunction, Constraint, Instance, StepId, UserSet};

pub mod calibrate;
pub mod rng;

pub use calibrate::{
    calibrate_count, calibrate_family, calibrate_family_cached, calibrate_pt, family_spec,
    make_family, sat_rate, three_quarters, CalibrationConfig, CalibrationRecord,
    FamilyCalibration, FamilyKind, FamilyMember, PtCalibration,
};
use rng::{derive_seed, SplitMix64};

/// Generator version recorded in instance metadata.
pub const GENERATOR_VERSION: &str = "1";

const MAX_ATTEMPTS: u64 = 10_000;

/// Instance parameters: `k` steps, `n` users and the number of constraints
/// of each kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenSpec {
    pub k: usize,
    pub n: usize,
    pub sod: usize,
    pub am3: usize,
    pub sual: usize,
    pub wl: usize,
    pub ada: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(k: usize, n: usize, seed: u64) -> Self {
        GenSpec {
            k,
            n,
            seed,
            ..GenSpec::default()
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |param, reason: String| Err(WspError::Generator { param, reason });
        if self.k == 0 {
            return bad("k", "need at least one step".into());
        }
        if self.n == 0 {
            return bad("n", "need at least one user".into());
        }
        let pairs = self.k * (self.k - 1) / 2;
        if self.sod > pairs {
            return bad("sod", format!("{} SoD exceed the {pairs} step pairs", self.sod));
        }
        if self.am3 > 0 && self.k < 5 {
            return bad("am3", format!("scope of 5 steps needs k >= 5, got {}", self.k));
        }
        if self.sual > 0 && self.k < 5 {
            return bad("sual", format!("scope of 5 steps needs k >= 5, got {}", self.k));
        }
        if self.sual > 0 && self.n < 5 {
            return bad("sual", format!("5 super users need n >= 5, got {}", self.n));
        }
        if self.wl > 0 && self.k < 2 {
            return bad("wl", format!("scope of 2 steps needs k >= 2, got {}", self.k));
        }
        if self.wl > 0 && self.n < 4 {
            return bad("wl", format!("teams of n/4 users need n >= 4, got {}", self.n));
        }
        if self.ada > 0 && self.k < 2 {
            return bad("ada", format!("two steps needed, got k = {}", self.k));
        }
        if self.ada > 0 && self.n < 2 {
            return bad("ada", format!("sets of n/2 users need n >= 2, got {}", self.n));
        }
        Ok(())
    }
}

/// A generated instance and how many draws were rejected for leaving a step
/// without users.
#[derive(Clone, Debug)]
pub struct Generated {
    pub instance: Instance,
    pub regenerations: u64,
}

pub fn generate(spec: &GenSpec) -> Result<Instance> {
    Ok(generate_detailed(spec)?.instance)
}

pub fn generate_detailed(spec: &GenSpec) -> Result<Generated> {
    spec.check()?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut master = SplitMix64::new(derive_seed(spec.seed, attempt));
        let mut auth_rng = master.fork();
        let auth = authorisations(&mut auth_rng, spec.k, spec.n);
        if auth.sets().iter().any(UserSet::is_empty) {
            continue;
        }
        let mut constraints = Vec::new();
        let mut sod_rng = master.fork();
        constraints.extend(sod_pairs(&mut sod_rng, spec.k, spec.sod));
        let mut am3_rng = master.fork();
        constraints.extend((0..spec.am3).map(|_| Constraint::AtMost {
            r: 3,
            scope: scope(&mut am3_rng, spec.k, 5),
        }));
        let mut sual_rng = master.fork();
        constraints.extend((0..spec.sual).map(|_| Constraint::Sual {
            scope: scope(&mut sual_rng, spec.k, 5),
            h: 3,
            supers: users(&mut sual_rng, spec.n, 5),
        }));
        let mut wl_rng = master.fork();
        constraints.extend((0..spec.wl).map(|_| {
            let scope = scope(&mut wl_rng, spec.k, 2);
            let size = spec.n / 4;
            let drawn = wl_rng.sample_distinct(spec.n, 2 * size);
            let team = |part: &[usize]| UserSet::from_indices(spec.n, part.iter().copied()).unwrap();
            Constraint::Wl {
                scope,
                teams: vec![team(&drawn[..size]), team(&drawn[size..])],
            }
        }));
        let mut ada_rng = master.fork();
        constraints.extend((0..spec.ada).map(|_| {
            let steps = ada_rng.sample_distinct(spec.k, 2);
            Constraint::Ada {
                s1: StepId(steps[0]),
                s2: StepId(steps[1]),
                trigger: users(&mut ada_rng, spec.n, spec.n / 2),
                required: users(&mut ada_rng, spec.n, spec.n / 2),
            }
        }));
        return Ok(Generated {
            instance: Instance::new(spec.k, spec.n, auth, constraints)?,
            regenerations: attempt,
        });
    }
    Err(WspError::Generator {
        param: "k",
        reason: format!("every one of {MAX_ATTEMPTS} draws left a step without users"),
    })
}

/// Each user is authorised for a uniform number of steps in `1..=max(1, k/2)`,
/// chosen uniformly without replacement.
fn authorisations(rng: &mut SplitMix64, k: usize, n: usize) -> AuthorisationFunction {
    let mut auth = AuthorisationFunction::empty(k, n);
    let most = (k / 2).max(1);
    for u in 0..n {
        let size = rng.inclusive(1, most);
        for s in rng.sample_distinct(k, size) {
            auth.users_mut(StepId(s)).insert(u);
        }
    }
    auth
}

fn scope(rng: &mut SplitMix64, k: usize, size: usize) -> Vec<StepId> {
    let mut steps = rng.sample_distinct(k, size);
    steps.sort_unstable();
    steps.into_iter().map(StepId).collect()
}

fn users(rng: &mut SplitMix64, n: usize, size: usize) -> UserSet {
    UserSet::from_indices(n, rng.sample_distinct(n, size)).unwrap()
}

/// `count` distinct step pairs; a larger count extends a smaller one.
fn sod_pairs(rng: &mut SplitMix64, k: usize, count: usize) -> Vec<Constraint> {
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    rng.sample_distinct(pairs.len(), count)
        .into_iter()
        .map(|i| Constraint::Sod {
            s1: StepId(pairs[i].0),
            s2: StepId(pairs[i].1),
        })
        .collect()
}
