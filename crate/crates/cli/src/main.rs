//! `equistab` command-line harness.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use equistab::acceptance;
use equistab::ddesolve::{amplitude_slope_fit, stabilization_run, ExperimentSettings, Outcome, TuneSettings};
use equistab::domains::{sample_domain, GridSpec};
use equistab::model::{control_matrix, ControlLaw, Params};
use equistab::par;
use equistab::spectral::{char_system_eq2, count_unstable_roots, full_char_det};
use equistab::symgroup::{branch, kernel, level_set, named_group, t_zero, BASE_GROUPS};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "equistab", version, about = "Equivariant Pyragas control of the cube-coupled Van der Pol network")]
struct Cli {
    /// JSON file with option values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed (else EQUISTAB_SEED, else the config, else 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the symmetry groups with their kernels and level sets.
    Groups(GroupsArgs),
    /// Characteristic rows of the controlled equilibrium and their unstable roots.
    Char(CharArgs),
    /// Run a stabilization experiment.
    Stabilize(StabilizeArgs),
    /// Sample a stability domain against the spectrum.
    Domain(DomainArgs),
    /// Fit the amplitude growth of a branch near its Hopf point.
    Supercritical(SupercriticalArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct GroupsArgs {
    /// Show one group with its elements.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct CharArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Period `T` (default 2π).
    #[arg(long = "T", alias = "period")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    /// Roots with `Re λ > margin` count as unstable (default 1e-9).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    margin: Option<f64>,
    /// Compare the 16-dimensional determinant with the row product at random λ.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    check_det: Option<bool>,
    /// Write every root with `Re λ > −margin` to this CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    roots_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Law {
    LevelSet,
    Kernel,
}

impl From<Law> for ControlLaw {
    fn from(l: Law) -> Self {
        match l {
            Law::LevelSet => ControlLaw::LevelSetAverage,
            Law::Kernel => ControlLaw::KernelAverage,
        }
    }
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct StabilizeArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Averaged set of the control (default level-set).
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    law: Option<Law>,
    /// Write the final trajectory to this CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<PathBuf>,
    /// Keep every n-th knot in the trajectory CSV (default 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
    /// Experiment thresholds; only settable in the config file.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    settings: Option<ExperimentSettings>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct DomainArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    amax: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bmax: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Output CSV (default stdout).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct SupercriticalArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    /// Offsets `α − α₀`, comma separated (default 0.01,0.02,0.03,0.04,0.05).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    offsets: Option<Vec<f64>>,
    /// Delay tuning; only settable in the config file.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tune: Option<TuneSettings>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct VerifyArgs {
    /// Run only these criteria, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    criteria: Option<Vec<u8>>,
}

/// Failure with its exit code.
enum Fail {
    Usage(String),
    Negative,
    Numerical(String),
}

impl From<equistab::Error> for Fail {
    fn from(e: equistab::Error) -> Self {
        use equistab::Error::*;
        match e {
            Parse(_) | UnknownGroup(_) | NoCharTable(_) | TemporalPartTrivial | Domain(_) | TooFewPoints(_)
            | NoDomain(_) | NotABranch(_) | InvalidStep(_) => Fail::Usage(e.to_string()),
            _ => Fail::Numerical(e.to_string()),
        }
    }
}

fn io_fail(e: std::io::Error) -> Fail {
    Fail::Numerical(format!("i/o: {e}"))
}

type Out = Result<(), Fail>;

/// Config values under the flags: keys of `flags` that are set replace the
/// ones read from the file.
fn resolve<T: Serialize + DeserializeOwned>(flags: &T, file: &Value) -> Result<T, Fail> {
    let mut merged = match file {
        Value::Object(m) => m.clone(),
        Value::Null => serde_json::Map::new(),
        _ => return Err(Fail::Usage("config must be a JSON object".into())),
    };
    merged.remove("seed");
    merged.remove("jobs");
    if let Value::Object(f) = serde_json::to_value(flags).map_err(|e| Fail::Usage(e.to_string()))? {
        merged.extend(f);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Fail::Usage(format!("config: {e}")))
}

fn need<T>(v: Option<T>, name: &str) -> Result<T, Fail> {
    v.ok_or_else(|| Fail::Usage(format!("missing required option --{name}")))
}

/// Writes to stdout; a closed pipe ends the output quietly.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &impl Serialize) {
    emit(&(serde_json::to_string_pretty(v).unwrap_or_default() + "\n"));
}

fn cmd_groups(args: GroupsArgs, seed: u64) -> Out {
    let describe = |label: &str| -> Result<Value, Fail> {
        let h = named_group(label)?;
        let t0 = t_zero(&h).ok();
        let level = level_set(&h).map(|l| l.len()).unwrap_or(0);
        let br = branch(label).ok();
        Ok(json!({
            "name": label,
            "order": h.len(),
            "t0": t0.map(|t| t.to_string()),
            "kernel_order": kernel(&h).len(),
            "level_set_order": level,
            "hopf_index": br.map(|b| b.hopf_index),
            "reduction": br.map(|b| b.case),
        }))
    };
    match args.group {
        Some(label) => {
            let mut v = describe(&label)?;
            v["elements"] = serde_json::to_value(named_group(&label)?.elements()).unwrap_or_default();
            v["seed"] = json!(seed);
            print_json(&v);
        }
        None => {
            let mut list = Vec::new();
            for base in BASE_GROUPS {
                for label in [base.to_string(), format!("+{base}"), format!("-{base}")] {
                    list.push(describe(&label)?);
                }
            }
            print_json(&json!({ "seed": seed, "groups": list }));
        }
    }
    Ok(())
}

fn cmd_char(args: CharArgs, seed: u64) -> Out {
    let label = need(args.group, "group")?;
    let p = Params::new(need(args.alpha, "alpha")?, need(args.a, "a")?, need(args.b, "b")?);
    let period = args.period.unwrap_or(2.0 * PI);
    let margin = args.margin.unwrap_or(1e-9);
    let h = named_group(&label)?;
    let cs = char_system_eq2(&p, &h, period)?;
    let mut rows = Vec::new();
    let mut total = 0;
    for (i, (row, q)) in cs.rows.iter().zip(&cs.quasi).enumerate() {
        let rc = count_unstable_roots(q, margin)?;
        total += rc.unstable;
        rows.push(json!({
            "row": i + 1,
            "channel": row.channel + 1,
            "nu": [row.nu.re, row.nu.im],
            "quasi": q,
            "unstable": rc.unstable,
            "neutral": rc.neutral,
            "roots": rc.roots.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        }));
    }
    let mut report = json!({
        "seed": seed,
        "group": label,
        "params": p,
        "period": period,
        "delay_fraction": cs.delay_fraction,
        "margin": margin,
        "rows": rows,
        "unstable_total": total,
    });
    if args.check_det.unwrap_or(false) {
        let spec = control_matrix(ControlLaw::LevelSetAverage, &h)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let samples = 20;
        for _ in 0..samples {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0));
            let det = full_char_det(&p, &spec, period, z);
            worst = worst.max((det - cs.eval(z)).norm() / det.norm());
        }
        report["det_check"] = json!({ "samples": samples, "max_relative_error": worst });
    }
    if let Some(path) = args.roots_csv {
        std::fs::write(path, cs.roots_csv(margin)?).map_err(io_fail)?;
    }
    print_json(&report);
    Ok(())
}

fn cmd_stabilize(args: StabilizeArgs, seed: u64) -> Out {
    let label = need(args.group, "group")?;
    let p = Params::new(need(args.alpha, "alpha")?, need(args.a, "a")?, need(args.b, "b")?);
    let law: ControlLaw = args.law.unwrap_or(Law::LevelSet).into();
    let settings = args.settings.unwrap_or_default();
    let h = named_group(&label)?;
    let (verdict, traj) = stabilization_run(&h, law, &p, seed, &settings);
    if let (Some(path), Some(tr)) = (args.trajectory, traj) {
        std::fs::write(path, tr.to_csv(args.stride.unwrap_or(1))).map_err(io_fail)?;
    }
    print_json(&verdict);
    if verdict.outcome == Outcome::StabilizedTarget {
        Ok(())
    } else {
        Err(Fail::Negative)
    }
}

fn cmd_domain(args: DomainArgs) -> Out {
    let label = need(args.group, "group")?;
    let n = args.n.unwrap_or(50);
    let grid = GridSpec {
        a_max: args.amax.unwrap_or(2.0),
        b_max: args.bmax.unwrap_or(6.0),
        n_a: n,
        n_b: n,
    };
    let samples = sample_domain(&label, &grid)?;
    let mut csv = String::from("a,b,inside,unstable_count,boundary_distance,agrees\n");
    for s in &samples {
        let count = s.unstable_count.map_or("NA".into(), |c| c.to_string());
        let agrees = s.agrees().map_or("NA".into(), |a| a.to_string());
        csv.push_str(&format!(
            "{:.16e},{:.16e},{},{},{:.16e},{}\n",
            s.a, s.b, s.inside, count, s.boundary_distance, agrees
        ));
    }
    match args.out {
        Some(path) => std::fs::write(path, csv).map_err(io_fail)?,
        None => emit(&csv),
    }
    Ok(())
}

fn cmd_supercritical(args: SupercriticalArgs, seed: u64) -> Out {
    let label = need(args.group, "group")?;
    let a = need(args.a, "a")?;
    let offsets = args.offsets.unwrap_or_else(|| vec![0.01, 0.02, 0.03, 0.04, 0.05]);
    let fit = amplitude_slope_fit(&label, a, &offsets, &args.tune.unwrap_or_default())?;
    for (o, why) in &fit.dropped {
        eprintln!("warning: dropped offset {o}: {why}");
    }
    // standard error of the least-squares slope
    let n = fit.points.len() as f64;
    let mx = fit.points.iter().map(|p| p.offset).sum::<f64>() / n;
    let sxx: f64 = fit.points.iter().map(|p| (p.offset - mx).powi(2)).sum();
    let ssr: f64 = fit
        .points
        .iter()
        .map(|p| (p.amplitude * p.amplitude - fit.intercept - fit.slope * p.offset).powi(2))
        .sum();
    let se = if n > 2.0 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    print_json(&json!({
        "seed": seed,
        "group": label,
        "a": a,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "slope_std_error": se,
        "band_95": [fit.slope - 1.96 * se, fit.slope + 1.96 * se],
        "points": fit.points,
        "dropped": fit.dropped,
    }));
    Ok(())
}

fn cmd_verify(args: VerifyArgs, seed: u64) -> Out {
    let ids: Vec<u8> = args
        .criteria
        .unwrap_or_else(|| acceptance::CRITERIA.iter().map(|c| c.0).collect());
    emit(&format!("seed {seed}\n"));
    let mut all = true;
    for id in ids {
        let r = acceptance::run(id, seed).ok_or_else(|| Fail::Usage(format!("no criterion {id}")))?;
        emit(&(r.line() + "\n"));
        all &= r.passed;
    }
    if all {
        Ok(())
    } else {
        Err(Fail::Negative)
    }
}

fn run(cli: Cli) -> Out {
    let file: Value = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))?
        }
        None => Value::Null,
    };
    let env_seed = match std::env::var("EQUISTAB_SEED") {
        Ok(s) => Some(s.trim().parse::<u64>().map_err(|_| Fail::Usage(format!("EQUISTAB_SEED: bad seed `{s}`")))?),
        Err(_) => None,
    };
    let seed = cli
        .seed
        .or(env_seed)
        .or_else(|| file.get("seed").and_then(Value::as_u64))
        .unwrap_or(DEFAULT_SEED);
    let jobs = cli
        .jobs
        .or_else(|| file.get("jobs").and_then(Value::as_u64).map(|j| j as usize))
        .unwrap_or(0);
    par::with_jobs(jobs, move || match cli.command {
        Command::Groups(a) => cmd_groups(resolve(&a, &file)?, seed),
        Command::Char(a) => cmd_char(resolve(&a, &file)?, seed),
        Command::Stabilize(a) => cmd_stabilize(resolve(&a, &file)?, seed),
        Command::Domain(a) => cmd_domain(resolve(&a, &file)?),
        Command::Supercritical(a) => cmd_supercritical(resolve(&a, &file)?, seed),
        Command::Verify(a) => cmd_verify(resolve(&a, &file)?, seed),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `equistab --help` for usage");
            ExitCode::from(2)
        }
        Err(Fail::Negative) => ExitCode::from(3),
        Err(Fail::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(4)
        }
    }
}
