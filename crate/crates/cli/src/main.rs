//! `wsp`: generate, solve, verify, encode, inspect, calibrate and bench
//! workflow satisfiability instances.
//!
//! Exit codes: 10 SAT, 20 UNSAT, 30 budget exceeded, 0/2 valid/invalid for
//! `verify`, 1 for usage and IO errors.

mod bench;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wsp_core::absorption::branching_bound;
use wsp_core::encode::{emit_cs_json, emit_dimacs, emit_opb, emit_var_map, encode_cs, encode_pbpb, encode_udpb};
use wsp_core::format::{InstanceFile, Meta, PlanFile};
use wsp_core::generator::{
    calibrate_family_cached, generate_detailed, make_family, CalibrationConfig, FamilyCalibration, FamilyKind,
    GenSpec, GENERATOR_VERSION,
};
use wsp_core::instance::Violation;
use wsp_core::patterns::bell;
use wsp_core::solver::{solve, Algorithm, SolveBudget, SolveOptions, Verdict};
use wsp_core::{Instance, StepId};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_BUDGET: u8 = 30;
const EXIT_INVALID: u8 = 2;
const EXIT_ERROR: u8 = 1;

pub(crate) const CACHE_ENV: &str = "WSP_CACHE_DIR";
const DEFAULT_CACHE: &str = ".wsp-cache";

#[derive(Parser)]
#[command(name = "wsp", version, about = "Workflow satisfiability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances.
    Generate(GenerateArgs),
    /// Decide an instance; exit 10 SAT, 20 UNSAT, 30 budget exceeded.
    Solve(SolveArgs),
    /// Check a plan; exit 0 if valid, 2 if not.
    Verify {
        instance: PathBuf,
        plan: PathBuf,
    },
    /// Write a UDPB, PBPB or CS model of an instance.
    Encode(EncodeArgs),
    /// Report the non-UI count, branching bounds and work bound.
    Inspect {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Calibrate a family at the phase transition.
    Calibrate(CalibrateArgs),
    /// Time solvers over calibrated families and write CSV.
    Bench(bench::BenchArgs),
}

#[derive(Args, Clone)]
pub(crate) struct CalibrationFlags {
    /// Instances per SAT-rate estimate.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.4)]
    pub band_lo: f64,
    #[arg(long, default_value_t = 0.6)]
    pub band_hi: f64,
    /// Master seed of the calibration samples.
    #[arg(long, default_value_t = 0)]
    pub calibration_seed: u64,
    /// Cache directory; defaults to $WSP_CACHE_DIR, then .wsp-cache.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

impl CalibrationFlags {
    pub(crate) fn config(&self, jobs: usize) -> CalibrationConfig {
        CalibrationConfig {
            samples: self.samples,
            band: (self.band_lo, self.band_hi),
            master_seed: self.calibration_seed,
            jobs,
            budget: SolveBudget::default(),
        }
    }

    pub(crate) fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE))
    }

    pub(crate) fn calibrate(&self, kind: FamilyKind, k: usize, n: usize, jobs: usize) -> Result<FamilyCalibration, String> {
        calibrate_family_cached(kind, k, n, &self.config(jobs), &self.cache_dir()).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    /// Calibrated family (wsp, am3, sual, wl, ada); replaces the count flags.
    #[arg(long)]
    family: Option<FamilyKind>,
    #[arg(long, default_value_t = 0)]
    sod: usize,
    #[arg(long, default_value_t = 0)]
    am3: usize,
    #[arg(long, default_value_t = 0)]
    sual: usize,
    #[arg(long, default_value_t = 0)]
    wl: usize,
    #[arg(long, default_value_t = 0)]
    ada: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    calibration: CalibrationFlags,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "backtrack")]
    algorithm: Algorithm,
    #[arg(long)]
    max_millis: Option<u64>,
    #[arg(long)]
    max_patterns: Option<u64>,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the plan here instead of printing it.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReprArg {
    Udpb,
    Pbpb,
    Cs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Opb,
    Dimacs,
    Json,
}

#[derive(Args)]
struct EncodeArgs {
    instance: PathBuf,
    #[arg(long)]
    repr: ReprArg,
    #[arg(long)]
    format: FormatArg,
    /// Output file; the variable map goes to `<out>.map`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value = "wsp")]
    family: FamilyKind,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    calibration: CalibrationFlags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Verify { instance, plan } => cmd_verify(&instance, &plan),
        Command::Encode(args) => cmd_encode(&args),
        Command::Inspect { instance, json } => cmd_inspect(&instance, json),
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Bench(args) => bench::run(&args),
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

pub(crate) fn load_instance(path: &Path) -> Result<(InstanceFile, Instance), String> {
    let file = InstanceFile::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let inst = file.to_instance().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((file, inst))
}

/// `wsp` for the plain family, `wsp-<kind>` otherwise.
pub(crate) fn family_label(kind: FamilyKind) -> String {
    match kind {
        FamilyKind::Sod => "wsp".to_string(),
        other => format!("wsp-{other}"),
    }
}

fn write_instance(dir: &Path, name: &str, inst: &Instance, meta: Meta) -> Result<(), String> {
    let file = InstanceFile::from_instance(inst, meta).map_err(|e| e.to_string())?;
    let path = dir.join(name);
    write(&path, file.to_json().as_bytes())?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<u8, String> {
    fs::create_dir_all(&args.out_dir).map_err(|e| format!("{}: {e}", args.out_dir.display()))?;
    if let Some(kind) = args.family {
        let cal = args.calibration.calibrate(kind, args.k, args.n, args.jobs)?;
        let label = family_label(kind);
        for member in make_family(&cal, args.seed, args.count) {
            let member = member.map_err(|e| e.to_string())?;
            let meta = Meta {
                seed: Some(member.spec.seed),
                generator_version: Some(GENERATOR_VERSION.to_string()),
                family: Some(label.clone()),
                regenerations: Some(member.generated.regenerations),
                ..Meta::default()
            };
            let name = format!("{label}-k{}-n{}-seed{}.json", args.k, args.n, member.spec.seed);
            write_instance(&args.out_dir, &name, &member.generated.instance, meta)?;
        }
        return Ok(0);
    }
    for i in 0..args.count as u64 {
        let spec = GenSpec {
            k: args.k,
            n: args.n,
            sod: args.sod,
            am3: args.am3,
            sual: args.sual,
            wl: args.wl,
            ada: args.ada,
            seed: args.seed + i,
        };
        let generated = generate_detailed(&spec).map_err(|e| e.to_string())?;
        let meta = Meta {
            seed: Some(spec.seed),
            generator_version: Some(GENERATOR_VERSION.to_string()),
            regenerations: Some(generated.regenerations),
            ..Meta::default()
        };
        let name = format!(
            "k{}-n{}-sod{}-am3{}-sual{}-wl{}-ada{}-seed{}.json",
            spec.k, spec.n, spec.sod, spec.am3, spec.sual, spec.wl, spec.ada, spec.seed
        );
        write_instance(&args.out_dir, &name, &generated.instance, meta)?;
    }
    Ok(0)
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, String> {
    let (_, inst) = load_instance(&args.instance)?;
    let opts = SolveOptions {
        budget: SolveBudget {
            max_millis: args.max_millis,
            max_patterns: args.max_patterns,
            max_nodes: args.max_nodes,
        },
        jobs: args.jobs.max(1),
    };
    let result = solve(&inst, args.algorithm, &opts).map_err(|e| e.to_string())?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{}", result.verdict);
    if let Some(plan) = &result.plan {
        let json = PlanFile::from_plan(plan).to_json();
        match &args.plan_out {
            Some(path) => write(path, json.as_bytes())?,
            None => {
                let _ = out.write_all(json.as_bytes());
            }
        }
    }
    let s = &result.stats;
    eprintln!(
        "c algorithm={} patterns_visited={} matchings_computed={} nodes_expanded={} millis={:.3}",
        args.algorithm.name(),
        s.patterns_visited,
        s.matchings_computed,
        s.nodes_expanded,
        s.wall_time.as_secs_f64() * 1e3
    );
    Ok(match result.verdict {
        Verdict::Sat => EXIT_SAT,
        Verdict::Unsat => EXIT_UNSAT,
        Verdict::BudgetExceeded => EXIT_BUDGET,
    })
}

fn cmd_verify(instance: &Path, plan: &Path) -> Result<u8, String> {
    let (file, inst) = load_instance(instance)?;
    let plan = PlanFile::parse(&read(plan)?)
        .map_err(|e| format!("{}: {e}", plan.display()))?
        .to_plan();
    let violation = inst.first_violation(&plan).map_err(|e| e.to_string())?;
    match violation {
        None => {
            println!("valid");
            Ok(0)
        }
        Some(Violation::Unauthorised { step, user }) => {
            println!(
                "invalid: {} is not authorised for {}",
                file.user_name(user.0),
                file.step_name(step)
            );
            Ok(EXIT_INVALID)
        }
        Some(Violation::Constraint { index }) => {
            let c = &inst.constraints()[index];
            println!("invalid: violates {}", c.describe(&|s: StepId| file.step_name(s)));
            Ok(EXIT_INVALID)
        }
    }
}

fn cmd_encode(args: &EncodeArgs) -> Result<u8, String> {
    let (_, inst) = load_instance(&args.instance)?;
    let mut model_bytes = Vec::new();
    let mut map_bytes = Vec::new();
    match (args.repr, args.format) {
        (ReprArg::Cs, FormatArg::Json) => {
            let model = encode_cs(&inst).map_err(|e| e.to_string())?;
            emit_cs_json(&model, &mut model_bytes).map_err(|e| e.to_string())?;
        }
        (ReprArg::Udpb | ReprArg::Pbpb, FormatArg::Opb | FormatArg::Dimacs) => {
            let model = if args.repr == ReprArg::Udpb {
                encode_udpb(&inst)
            } else {
                encode_pbpb(&inst)
            }
            .map_err(|e| e.to_string())?;
            if args.format == FormatArg::Opb {
                emit_opb(&model, &mut model_bytes)
            } else {
                emit_dimacs(&model, &mut model_bytes)
            }
            .map_err(|e| e.to_string())?;
            emit_var_map(&model, &mut map_bytes).map_err(|e| e.to_string())?;
        }
        _ => {
            eprintln!("error: the cs representation needs --format json and udpb/pbpb need opb or dimacs");
            return Ok(EXIT_ERROR);
        }
    }
    match &args.out {
        Some(path) => {
            write(path, &model_bytes)?;
            if !map_bytes.is_empty() {
                let mut map = path.clone().into_os_string();
                map.push(".map");
                write(Path::new(&map), &map_bytes)?;
            }
        }
        None => io::stdout().write_all(&model_bytes).map_err(|e| e.to_string())?,
    }
    Ok(0)
}

fn cmd_inspect(instance: &Path, json: bool) -> Result<u8, String> {
    let (file, inst) = load_instance(instance)?;
    let (k, n) = (inst.k(), inst.n());
    let bell_k = bell(k).map_err(|e| e.to_string())?;
    let mut per_constraint = Vec::new();
    let mut product: u128 = 1;
    for c in inst.constraints() {
        let report = branching_bound(c, k, n);
        if !c.is_ui() {
            product = product.saturating_mul(report.bound);
        }
        per_constraint.push((c.describe(&|s: StepId| file.step_name(s)), c.is_ui(), report));
    }
    let work = bell_k.saturating_mul(product);
    if json {
        let constraints: Vec<serde_json::Value> = per_constraint
            .iter()
            .map(|(name, ui, r)| {
                serde_json::json!({
                    "constraint": name,
                    "ui": ui,
                    "bound": r.bound.to_string(),
                    "symbolic": r.symbolic,
                })
            })
            .collect();
        let report = serde_json::json!({
            "k": k,
            "n": n,
            "non_ui": inst.non_ui_count(),
            "bell": bell_k.to_string(),
            "family_bound": product.to_string(),
            "work_bound": work.to_string(),
            "constraints": constraints,
        });
        println!("{report}");
    } else {
        println!("k {k}");
        println!("n {n}");
        println!("non_ui {}", inst.non_ui_count());
        println!("bell {bell_k}");
        for (name, ui, r) in &per_constraint {
            let class = if *ui { "ui" } else { "non-ui" };
            println!("constraint {name} {class} bound {} ({})", r.bound, r.symbolic);
        }
        println!("family_bound {product}");
        println!("work_bound {work}");
    }
    Ok(0)
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<u8, String> {
    let cal = args.calibration.calibrate(args.family, args.k, args.n, args.jobs)?;
    let rate = |r: f64| if r.is_nan() { serde_json::Value::Null } else { r.into() };
    let report = serde_json::json!({
        "family": family_label(args.family),
        "k": cal.k,
        "n": cal.n,
        "sod": cal.sod.e_value,
        "sod_sat_rate": rate(cal.sod.sat_rate),
        "extra": cal.extra.map(|c| c.e_value),
        "extra_sat_rate": cal.extra.map(|c| rate(c.sat_rate)),
        "spec": spec_json(&cal.spec()),
    });
    println!("{report}");
    Ok(0)
}

fn spec_json(spec: &GenSpec) -> serde_json::Value {
    serde_json::json!({
        "sod": spec.sod, "am3": spec.am3, "sual": spec.sual, "wl": spec.wl, "ada": spec.ada,
    })
}
