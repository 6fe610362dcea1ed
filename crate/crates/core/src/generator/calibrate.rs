//! Phase-transition calibration by integer bisection on a constraint count.
//!
//! The SAT rate at a count is measured on a fixed list of seeds. Because a
//! larger count only adds constraints to each seeded instance, the measured
//! rate is non-increasing in the count and bisection is exact with respect
//! to the sample.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::rng::derive_seed;
use super::{generate_detailed, GenSpec, Generated};
use crate::error::{Result, WspError};
use crate::solver::{solve_backtracking_with, SolveBudget, SolveOptions, Verdict};

/// The constraint kind a family is calibrated on. `Sod` is the plain family
/// of `k` AM3 plus `e` SoD constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Sod,
    Am3,
    Sual,
    Wl,
    Ada,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::Sod,
        FamilyKind::Am3,
        FamilyKind::Sual,
        FamilyKind::Wl,
        FamilyKind::Ada,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Sod => "sod",
            FamilyKind::Am3 => "am3",
            FamilyKind::Sual => "sual",
            FamilyKind::Wl => "wl",
            FamilyKind::Ada => "ada",
        }
    }

    fn set_count(self, spec: &mut GenSpec, count: usize) {
        match self {
            FamilyKind::Sod => spec.sod = count,
            FamilyKind::Am3 => spec.am3 = spec.k + count,
            FamilyKind::Sual => spec.sual = count,
            FamilyKind::Wl => spec.wl = count,
            FamilyKind::Ada => spec.ada = count,
        }
    }

    fn max_count(self, k: usize) -> usize {
        match self {
            FamilyKind::Sod => k * k.saturating_sub(1) / 2,
            _ => k * k.saturating_sub(1),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = String;

    /// Accepts the kind names plus `wsp` for the plain family.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "wsp" {
            return Ok(FamilyKind::Sod);
        }
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown family {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub samples: usize,
    /// Target SAT-rate band `[lo, hi]`.
    pub band: (f64, f64),
    pub master_seed: u64,
    pub jobs: usize,
    /// Per-sample solver budget; a sample that exceeds it is an error.
    pub budget: SolveBudget,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            samples: 50,
            band: (0.4, 0.6),
            master_seed: 0,
            jobs: 1,
            budget: SolveBudget::default(),
        }
    }
}

impl CalibrationConfig {
    fn check(&self) -> Result<()> {
        if self.samples < 20 {
            return Err(WspError::Calibration(format!(
                "need at least 20 samples, got {}",
                self.samples
            )));
        }
        let (lo, hi) = self.band;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(WspError::Calibration(format!(
                "band [{lo}, {hi}] must satisfy 0 < lo < hi < 1"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtCalibration {
    pub e_value: usize,
    pub sat_rate: f64,
    pub samples: usize,
}

/// SAT rate of `spec` over seeds `derive_seed(master, 0..samples)`.
/// Independent of the worker count.
pub fn sat_rate(spec: &GenSpec, cfg: &CalibrationConfig) -> Result<f64> {
    let outcomes: Vec<Mutex<Option<Result<bool>>>> =
        (0..cfg.samples).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let opts = SolveOptions {
        budget: cfg.budget,
        jobs: 1,
    };
    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        if j >= cfg.samples {
            break;
        }
        let seeded = GenSpec {
            seed: derive_seed(cfg.master_seed, j as u64),
            ..*spec
        };
        let outcome = generate_detailed(&seeded).and_then(|g| {
            let r = solve_backtracking_with(&g.instance, &opts)?;
            match r.verdict {
                Verdict::Sat => Ok(true),
                Verdict::Unsat => Ok(false),
                Verdict::BudgetExceeded => Err(WspError::Calibration(format!(
                    "sample {j} exceeded the solver budget"
                ))),
            }
        });
        *outcomes[j].lock().unwrap() = Some(outcome);
    };
    std::thread::scope(|s| {
        for _ in 1..cfg.jobs.max(1) {
            s.spawn(work);
        }
        work();
    });
    let mut sat = 0usize;
    for o in outcomes {
        if o.into_inner().unwrap().expect("every sample solved")? {
            sat += 1;
        }
    }
    Ok(sat as f64 / cfg.samples as f64)
}

/// Smallest count in `0..=max` whose SAT rate is at most `hi`, which must
/// also be at least `lo`.
fn bisect(
    max: usize,
    cfg: &CalibrationConfig,
    rate_at: impl Fn(usize) -> Result<f64>,
) -> Result<PtCalibration> {
    cfg.check()?;
    let (lo, hi) = cfg.band;
    let mut memo: HashMap<usize, f64> = HashMap::new();
    let mut rate = |c: usize| -> Result<f64> {
        if let Some(&r) = memo.get(&c) {
            return Ok(r);
        }
        let r = rate_at(c)?;
        memo.insert(c, r);
        Ok(r)
    };
    let top = rate(max)?;
    if top > hi {
        return Err(WspError::Calibration(format!(
            "SAT rate is still {top:.3} at the largest count {max}; rate at 0 is {:.3}",
            rate(0)?
        )));
    }
    let mut found = max;
    if rate(0)? <= hi {
        found = 0;
    } else {
        let (mut above, mut below) = (0, max);
        while below - above > 1 {
            let mid = above + (below - above) / 2;
            if rate(mid)? <= hi {
                below = mid;
            } else {
                above = mid;
            }
        }
        found = found.min(below);
    }
    let r = rate(found)?;
    if r < lo {
        let before = if found > 0 {
            format!("{:.3} at {}", rate(found - 1)?, found - 1)
        } else {
            "nothing below".to_string()
        };
        return Err(WspError::Calibration(format!(
            "SAT rate jumps from {before} to {r:.3} at {found}, skipping [{lo}, {hi}]"
        )));
    }
    Ok(PtCalibration {
        e_value: found,
        sat_rate: r,
        samples: cfg.samples,
    })
}

/// Calibrates the SoD count of `base` (whose own SoD count is ignored) over
/// `0..=k(k-1)/2`.
pub fn calibrate_pt(k: usize, n: usize, base: &GenSpec, cfg: &CalibrationConfig) -> Result<PtCalibration> {
    let base = GenSpec { k, n, ..*base };
    calibrate_count(FamilyKind::Sod, &base, cfg)
}

/// Calibrates the count of `kind` on top of `base`. For `Am3` the count is
/// in addition to the `k` AM3 constraints of the plain family.
pub fn calibrate_count(kind: FamilyKind, base: &GenSpec, cfg: &CalibrationConfig) -> Result<PtCalibration> {
    bisect(kind.max_count(base.k), cfg, |count| {
        let mut spec = *base;
        kind.set_count(&mut spec, count);
        sat_rate(&spec, cfg)
    })
}

/// `round(0.75 e)`, ties rounded down.
pub fn three_quarters(e: usize) -> usize {
    (3 * e + 1) / 4
}

/// Calibrated counts of one family at `(k, n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyCalibration {
    pub kind: FamilyKind,
    pub k: usize,
    pub n: usize,
    /// SoD count of the plain family.
    pub sod: PtCalibration,
    /// Count of the family's own kind; `None` for the plain family.
    pub extra: Option<PtCalibration>,
}

impl FamilyCalibration {
    /// Parameters of a family member; the seed is left at 0.
    pub fn spec(&self) -> GenSpec {
        family_spec(self.kind, self.k, self.n, self.sod.e_value, self.extra.map(|c| c.e_value))
    }
}

pub fn family_spec(kind: FamilyKind, k: usize, n: usize, e: usize, extra: Option<usize>) -> GenSpec {
    let mut spec = GenSpec {
        am3: k,
        ..GenSpec::new(k, n, 0)
    };
    match (kind, extra) {
        (FamilyKind::Sod, _) | (_, None) => spec.sod = e,
        (kind, Some(count)) => {
            spec.sod = three_quarters(e);
            kind.set_count(&mut spec, count);
        }
    }
    spec
}

/// Calibrates the plain family, then for other kinds the kind's own count
/// with the SoD count fixed at `round(0.75 e)`.
pub fn calibrate_family(kind: FamilyKind, k: usize, n: usize, cfg: &CalibrationConfig) -> Result<FamilyCalibration> {
    let base = GenSpec {
        am3: k,
        ..GenSpec::new(k, n, 0)
    };
    let sod = calibrate_pt(k, n, &base, cfg)?;
    let extra = if kind == FamilyKind::Sod {
        None
    } else {
        let base = GenSpec {
            sod: three_quarters(sod.e_value),
            ..base
        };
        Some(calibrate_count(kind, &base, cfg)?)
    };
    Ok(FamilyCalibration {
        kind,
        k,
        n,
        sod,
        extra,
    })
}

/// One member of a family stream.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub spec: GenSpec,
    pub generated: Generated,
}

/// `count` instances of the family, the `i`-th seeded with
/// `derive_seed(master_seed, i)`.
pub fn make_family(
    calibration: &FamilyCalibration,
    master_seed: u64,
    count: usize,
) -> impl Iterator<Item = Result<FamilyMember>> {
    let template = calibration.spec();
    (0..count as u64).map(move |i| {
        let spec = GenSpec {
            seed: derive_seed(master_seed, i),
            ..template
        };
        generate_detailed(&spec).map(|generated| FamilyMember { spec, generated })
    })
}

/// Calibration cache entry; one file per family and `(k, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub k: usize,
    pub n: usize,
    pub family: FamilyKind,
    pub e_value: usize,
    pub samples: usize,
    pub band: [f64; 2],
    pub master_seed: u64,
}

impl CalibrationRecord {
    pub fn path(dir: &Path, family: FamilyKind, k: usize, n: usize) -> PathBuf {
        dir.join(format!("{}-k{k}-n{n}.json", family.name()))
    }

    fn matches(&self, cfg: &CalibrationConfig) -> bool {
        self.samples == cfg.samples
            && self.band == [cfg.band.0, cfg.band.1]
            && self.master_seed == cfg.master_seed
    }

    fn load(dir: &Path, family: FamilyKind, k: usize, n: usize, cfg: &CalibrationConfig) -> Result<Option<usize>> {
        let path = Self::path(dir, family, k, n);
        if !path.exists() {
            return Ok(None);
        }
        let record: CalibrationRecord = serde_json::from_slice(&std::fs::read(&path)?)?;
        Ok((record.k == k && record.n == n && record.family == family && record.matches(cfg))
            .then_some(record.e_value))
    }

    fn store(dir: &Path, family: FamilyKind, k: usize, n: usize, e: usize, cfg: &CalibrationConfig) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let record = CalibrationRecord {
            k,
            n,
            family,
            e_value: e,
            samples: cfg.samples,
            band: [cfg.band.0, cfg.band.1],
            master_seed: cfg.master_seed,
        };
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        std::fs::write(Self::path(dir, family, k, n), text)?;
        Ok(())
    }
}

/// Like [`calibrate_family`], reusing and refreshing cache entries in `dir`.
/// Entries recorded with different samples, band or seed are recomputed.
/// Rates are not cached; cached counts report a rate of `NaN`.
pub fn calibrate_family_cached(
    kind: FamilyKind,
    k: usize,
    n: usize,
    cfg: &CalibrationConfig,
    dir: &Path,
) -> Result<FamilyCalibration> {
    let cached = |e_value| PtCalibration {
        e_value,
        sat_rate: f64::NAN,
        samples: cfg.samples,
    };
    let base = GenSpec {
        am3: k,
        ..GenSpec::new(k, n, 0)
    };
    let sod = match CalibrationRecord::load(dir, FamilyKind::Sod, k, n, cfg)? {
        Some(e) => cached(e),
        None => {
            let c = calibrate_pt(k, n, &base, cfg)?;
            CalibrationRecord::store(dir, FamilyKind::Sod, k, n, c.e_value, cfg)?;
            c
        }
    };
    let extra = if kind == FamilyKind::Sod {
        None
    } else {
        Some(match CalibrationRecord::load(dir, kind, k, n, cfg)? {
            Some(e) => cached(e),
            None => {
                let base = GenSpec {
                    sod: three_quarters(sod.e_value),
                    ..base
                };
                let c = calibrate_count(kind, &base, cfg)?;
                CalibrationRecord::store(dir, kind, k, n, c.e_value, cfg)?;
                c
            }
        })
    };
    Ok(FamilyCalibration {
        kind,
        k,
        n,
        sod,
        extra,
    })
}
