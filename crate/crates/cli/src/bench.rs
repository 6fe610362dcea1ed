//! Timing runs over calibrated families. One CSV row per instance and
//! algorithm, then one lower-median row per `(k, n, algorithm)`.

use std::fs::File;
use std::io;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use wsp_core::generator::{make_family, FamilyCalibration, FamilyKind, PtCalibration};
use wsp_core::solver::{solve, Algorithm, SolveBudget, SolveOptions};

use crate::{family_label, CalibrationFlags};

#[derive(Args)]
pub(crate) struct BenchArgs {
    #[arg(long, default_value = "wsp")]
    family: FamilyKind,
    /// Step counts: `6..12`, `6-12` or `6,8,10`.
    #[arg(long)]
    k: String,
    /// User counts: a list like `50,100` or a multiple of k like `10k`.
    #[arg(long, default_value = "10k")]
    n: String,
    /// Instances per `(k, n)`.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Master seed of the instance streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "backtrack", value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    /// Per-instance time budget.
    #[arg(long, default_value_t = 60_000)]
    max_millis: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Fixed SoD count; skips calibration together with `--extra`.
    #[arg(long)]
    sod: Option<usize>,
    /// Fixed count of the family's own kind.
    #[arg(long)]
    extra: Option<usize>,
    /// CSV destination; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    calibration: CalibrationFlags,
}

#[derive(Serialize)]
struct Row {
    k: usize,
    n: usize,
    family: String,
    seed: String,
    algorithm: &'static str,
    verdict: String,
    millis: String,
    patterns_visited: u64,
    nodes_expanded: u64,
}

pub(crate) fn parse_range(text: &str) -> Result<Vec<usize>, String> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad number {s:?} in {text:?}"));
    for sep in ["..=", "..", "-"] {
        if let Some((a, b)) = text.split_once(sep) {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty range {text:?}"));
            }
            return Ok((a..=b).collect());
        }
    }
    text.split(',').map(num).collect()
}

fn users_for(spec: &str, k: usize) -> Result<Vec<usize>, String> {
    match spec.strip_suffix('k') {
        Some(m) => Ok(vec![m.trim().parse::<usize>().map_err(|_| format!("bad multiplier {spec:?}"))? * k]),
        None => parse_range(spec),
    }
}

/// Lower median: the `(len - 1) / 2`-th smallest value.
pub(crate) fn lower_median<T: Copy + PartialOrd>(values: &[T]) -> Option<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    v.get(v.len().checked_sub(1)? / 2).copied()
}

fn calibration(args: &BenchArgs, k: usize, n: usize) -> Result<FamilyCalibration, String> {
    let fixed = |e_value| PtCalibration {
        e_value,
        sat_rate: f64::NAN,
        samples: 0,
    };
    match (args.sod, args.extra, args.family) {
        (Some(sod), _, FamilyKind::Sod) => Ok(FamilyCalibration {
            kind: FamilyKind::Sod,
            k,
            n,
            sod: fixed(sod),
            extra: None,
        }),
        (Some(sod), Some(extra), kind) => Ok(FamilyCalibration {
            kind,
            k,
            n,
            sod: fixed(sod),
            extra: Some(fixed(extra)),
        }),
        (Some(_), None, kind) => Err(format!("family {kind} needs --extra alongside --sod")),
        _ => args.calibration.calibrate(args.family, k, n, args.jobs),
    }
}

pub(crate) fn run(args: &BenchArgs) -> Result<u8, String> {
    let sink: Box<dyn io::Write> = match &args.out {
        Some(path) => Box::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?),
        None => Box::new(io::stdout()),
    };
    let mut csv = csv::Writer::from_writer(sink);
    let label = family_label(args.family);
    let opts = SolveOptions {
        budget: SolveBudget {
            max_millis: Some(args.max_millis),
            ..SolveBudget::default()
        },
        jobs: args.jobs.max(1),
    };
    let mut summaries = Vec::new();
    for k in parse_range(&args.k)? {
        for n in users_for(&args.n, k)? {
            let cal = calibration(args, k, n)?;
            let members: Vec<_> = make_family(&cal, args.seed, args.seeds)
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for &algorithm in &args.algorithm {
                let mut millis = Vec::new();
                let mut patterns = Vec::new();
                let mut nodes = Vec::new();
                for m in &members {
                    let r = solve(&m.generated.instance, algorithm, &opts).map_err(|e| e.to_string())?;
                    let ms = r.stats.wall_time.as_secs_f64() * 1e3;
                    millis.push(ms);
                    patterns.push(r.stats.patterns_visited);
                    nodes.push(r.stats.nodes_expanded);
                    csv.serialize(Row {
                        k,
                        n,
                        family: label.clone(),
                        seed: m.spec.seed.to_string(),
                        algorithm: algorithm.name(),
                        verdict: r.verdict.to_string(),
                        millis: format!("{ms:.3}"),
                        patterns_visited: r.stats.patterns_visited,
                        nodes_expanded: r.stats.nodes_expanded,
                    })
                    .map_err(|e| e.to_string())?;
                }
                if let Some(ms) = lower_median(&millis) {
                    summaries.push(Row {
                        k,
                        n,
                        family: label.clone(),
                        seed: "median".into(),
                        algorithm: algorithm.name(),
                        verdict: String::new(),
                        millis: format!("{ms:.3}"),
                        patterns_visited: lower_median(&patterns).unwrap_or(0),
                        nodes_expanded: lower_median(&nodes).unwrap_or(0),
                    });
                }
            }
        }
    }
    for row in summaries {
        csv.serialize(row).map_err(|e| e.to_string())?;
    }
    csv.flush().map_err(|e| e.to_string())?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("6..8").unwrap(), vec![6, 7, 8]);
        assert_eq!(parse_range("6-8").unwrap(), vec![6, 7, 8]);
        assert_eq!(parse_range("6..=7").unwrap(), vec![6, 7]);
        assert_eq!(parse_range("50,100,200").unwrap(), vec![50, 100, 200]);
        assert!(parse_range("8..6").is_err());
        assert!(parse_range("x").is_err());
        assert_eq!(users_for("10k", 7).unwrap(), vec![70]);
        assert_eq!(users_for("50,100", 7).unwrap(), vec![50, 100]);
    }

    #[test]
    fn medians_round_down() {
        assert_eq!(lower_median(&[4, 1, 3, 2]), Some(2));
        assert_eq!(lower_median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(lower_median::<u64>(&[]), None);
    }
}
