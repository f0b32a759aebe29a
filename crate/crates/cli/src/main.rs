//! `ucn` — simulate lagged systems, discover their causal networks, and
//! score the result against a ground truth.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use manifest::RunManifest;
use ucn_core::eval::{self, granger_scores, MetricsReport, RocCurve, ScoreTensor};
use ucn_core::hce::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_TAU_MAX};
use ucn_core::synth::{self, EnvDriver, EXAMPLE_ENV};
use ucn_core::{EstimatorConfig, HceConfig, StructuralSpec, TimeSeriesPanel, Ucn};

#[derive(Parser)]
#[command(name = "ucn", version, about = "Lagged causal network discovery for nonstationary time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a panel and its ground-truth network.
    Simulate(SimulateArgs),
    /// Recover the causal network of a CSV panel.
    Discover(DiscoverArgs),
    /// Compare a network or score tensor with a ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("system").required(true).args(["spec", "example", "random"])))]
struct SimulateArgs {
    /// Structural spec JSON.
    #[arg(long, env = "UCN_SPEC")]
    spec: Option<PathBuf>,
    /// The built-in four-variable example driven by an environment ramp.
    #[arg(long, env = "UCN_EXAMPLE")]
    example: bool,
    /// A random system over N variables.
    #[arg(long, value_name = "N", env = "UCN_RANDOM")]
    random: Option<usize>,
    /// With --random: add an environment ramp feeding the first variable.
    #[arg(long, env = "UCN_ENV", requires = "random")]
    env: bool,
    /// Leave the environment column (and its edges) out of the outputs.
    #[arg(long, env = "UCN_HIDE_ENV")]
    hide_env: bool,
    /// Number of time steps.
    #[arg(long, short = 't', default_value_t = 2000, env = "UCN_T")]
    t: usize,
    #[arg(long, default_value_t = 0, env = "UCN_SEED")]
    seed: u64,
    #[arg(long, env = "UCN_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Panel CSV with a header row of variable names.
    #[arg(env = "UCN_PANEL")]
    panel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TAU_MAX, env = "UCN_TAU_MAX")]
    tau_max: usize,
    /// Forward inclusion threshold in nats.
    #[arg(long, default_value_t = DEFAULT_ALPHA, env = "UCN_ALPHA")]
    alpha: f64,
    /// Backward removal threshold in nats.
    #[arg(long, default_value_t = DEFAULT_BETA, env = "UCN_BETA")]
    beta: f64,
    /// Neighbor count of the estimator.
    #[arg(long, default_value_t = ucn_core::entropy::DEFAULT_K, env = "UCN_K")]
    k: usize,
    #[arg(long, default_value_t = 0, env = "UCN_SEED")]
    seed: u64,
    /// Concurrent per-target searches. Output does not depend on it.
    #[arg(long, default_value_t = 1, env = "UCN_JOBS")]
    jobs: usize,
    /// Also write linear Granger scores to granger.json.
    #[arg(long, env = "UCN_GRANGER")]
    granger: bool,
    #[arg(long, env = "UCN_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["input", "batch"])))]
struct EvaluateArgs {
    /// Network JSON or score-tensor JSON. In batch mode, the file name
    /// inside each run directory (default network.json).
    #[arg(long, env = "UCN_INPUT")]
    input: Option<PathBuf>,
    /// Ground-truth network JSON. In batch mode, the file name inside each
    /// run directory (default truth.json).
    #[arg(long, env = "UCN_TRUTH")]
    truth: Option<PathBuf>,
    /// Evaluate every subdirectory of DIR as one seeded run.
    #[arg(long, value_name = "DIR", env = "UCN_BATCH")]
    batch: Option<PathBuf>,
    /// Write the ROC curve points as CSV.
    #[arg(long, value_name = "CSV", env = "UCN_ROC")]
    roc: Option<PathBuf>,
    /// Evenly spaced ROC cutoffs, in addition to every distinct score.
    #[arg(long, default_value_t = 101, env = "UCN_THRESHOLDS")]
    thresholds: usize,
    /// Count (source, target) pairs instead of lag-resolved cells.
    #[arg(long, env = "UCN_COLLAPSE_LAGS")]
    collapse_lags: bool,
    /// Batch mode: per-run rows as CSV.
    #[arg(long, value_name = "CSV", env = "UCN_ROWS")]
    rows: Option<PathBuf>,
    /// Metrics report JSON.
    #[arg(long, env = "UCN_OUT")]
    out: PathBuf,
}

/// Errors split by exit code: 1 for failed computations, 2 for bad
/// arguments or unusable files.
enum Failure {
    Compute(anyhow::Error),
    Usage(anyhow::Error),
}

/// Input and argument problems, as opposed to failed computations.
fn is_usage(e: &ucn_core::Error) -> bool {
    use ucn_core::Error as E;
    matches!(
        e,
        E::Io { .. } | E::Parse { .. } | E::Json(_) | E::InvalidPanel(_) | E::Config(_) | E::InvalidSpec(_)
    )
}

impl From<ucn_core::Error> for Failure {
    fn from(e: ucn_core::Error) -> Self {
        if is_usage(&e) {
            Failure::Usage(e.into())
        } else {
            Failure::Compute(e.into())
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Discover(a) => discover(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn ensure_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(Failure::Usage)
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Usage)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let started = Instant::now();
    let spec = if let Some(path) = &a.spec {
        StructuralSpec::read_json(path)?
    } else if a.example {
        synth::example_network()
    } else {
        let n = a.random.expect("clap enforces one source");
        let spec = synth::random_spec(n, a.seed)?;
        if a.env {
            spec.with_env_driver(EXAMPLE_ENV, &[0], 0.3)
        } else {
            spec
        }
    };
    ensure_dir(&a.out_dir)?;
    let (panel, truth) = synth::generate_with(&spec, a.t, a.seed, !a.hide_env)?;

    let panel_path = a.out_dir.join("panel.csv");
    let truth_path = a.out_dir.join("truth.json");
    let spec_path = a.out_dir.join("spec.json");
    panel.write_csv(&panel_path)?;
    truth.write_json(&truth_path)?;
    write(&spec_path, &spec.to_json_string())?;

    let source = match (&a.spec, a.random) {
        (Some(p), _) => json!({ "spec": p }),
        (None, Some(n)) => json!({ "random": n, "env": a.env }),
        _ => json!("example"),
    };
    RunManifest::new("simulate", started)
        .config(json!({ "system": source, "t": a.t, "hide_env": a.hide_env, "env_driver": spec.env.map(env_json) }))
        .seeds(vec![a.seed])
        .inputs(a.spec.iter().cloned().collect())
        .outputs(vec![panel_path, truth_path, spec_path])
        .write(&a.out_dir)
}

fn env_json(e: EnvDriver) -> serde_json::Value {
    json!({ "start": e.start, "end": e.end })
}

fn discover(a: DiscoverArgs) -> Outcome {
    let started = Instant::now();
    if a.jobs == 0 {
        return Err(Failure::Usage(anyhow!("--jobs must be at least 1")));
    }
    let config = HceConfig {
        tau_max: a.tau_max,
        alpha: a.alpha,
        beta: a.beta,
        estimator: EstimatorConfig {
            k: a.k,
            ..EstimatorConfig::default()
        },
        parallel: a.jobs > 1,
        seed: a.seed,
    };
    config.validate()?;
    let panel = TimeSeriesPanel::read_csv(&a.panel)?;
    ensure_dir(&a.out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Failure::Compute(e.into()))?;
    let ucn = pool.install(|| ucn_core::discover(&panel, &config))?;
    log::info!("{} edges found", ucn.edge_count());

    let network_path = a.out_dir.join("network.json");
    let scores_path = a.out_dir.join("scores.json");
    ucn.write_json(&network_path)?;
    ScoreTensor::from_ucn(&ucn).write_json(&scores_path)?;
    let mut outputs = vec![network_path, scores_path];
    if a.granger {
        let gc = granger_scores(&ucn_core::standardize(&panel)?, a.tau_max)?;
        let path = a.out_dir.join("granger.json");
        gc.write_json(&path)?;
        outputs.push(path);
    }

    RunManifest::new("discover", started)
        .config(json!({
            "tau_max": config.tau_max,
            "alpha": config.alpha,
            "beta": config.beta,
            "k": config.estimator.k,
            "jitter_scale": config.estimator.jitter_scale,
            "jobs": a.jobs,
            "granger": a.granger,
        }))
        .seeds(vec![a.seed])
        .inputs(vec![a.panel.clone()])
        .outputs(outputs)
        .write(&a.out_dir)
}

/// What an evaluate input file holds.
enum Prediction {
    Network(Ucn),
    Scores(ScoreTensor),
}

fn read_prediction(path: &Path) -> Outcome<Prediction> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Usage)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not JSON", path.display()))
        .map_err(Failure::Usage)?;
    if value.get("edges").is_some() {
        Ok(Prediction::Network(Ucn::from_json_str(&text)?))
    } else if value.get("scores").is_some() {
        Ok(Prediction::Scores(ScoreTensor::from_json_str(&text)?))
    } else {
        Err(Failure::Usage(anyhow!(
            "{} is neither a network (\"edges\") nor a score tensor (\"scores\")",
            path.display()
        )))
    }
}

struct RunMetrics {
    tpr: f64,
    fpr: f64,
    curve: Option<RocCurve>,
}

fn score_run(prediction: Prediction, truth: &Ucn, a: &EvaluateArgs) -> Outcome<RunMetrics> {
    let scores = match prediction {
        Prediction::Network(u) => ScoreTensor::from_ucn(&u),
        Prediction::Scores(s) => s,
    };
    if scores.n != truth.n() {
        return Err(Failure::Compute(anyhow!(
            "prediction has {} variables, truth has {}",
            scores.n,
            truth.n()
        )));
    }
    // Networks of different depth are compared over the deeper grid.
    let depth = scores.tau_max.max(truth.tau_max());
    let scores = scores.with_tau_max(depth)?;
    let truth = truth.with_tau_max(depth)?;
    let predicted = Ucn::from_tensor(
        scores.n,
        depth,
        truth.names().to_vec(),
        scores.scores.iter().map(|s| s.max(0.0)).collect(),
    )?;
    let c = if a.collapse_lags {
        eval::confusion_collapsed(&predicted, &truth)?
    } else {
        eval::confusion(&predicted, &truth)?
    };
    let curve = match eval::roc(&scores, &truth, a.thresholds) {
        Ok(curve) => Some(curve),
        Err(ucn_core::Error::Comparison(msg)) => {
            log::warn!("no ROC: {msg}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(RunMetrics {
        tpr: c.tpr(),
        fpr: c.fpr(),
        curve,
    })
}

fn evaluate(a: EvaluateArgs) -> Outcome {
    if a.batch.is_some() {
        return evaluate_batch(a);
    }
    let started = Instant::now();
    let input = a.input.clone().expect("clap enforces one mode");
    let truth_path = a
        .truth
        .clone()
        .ok_or_else(|| Failure::Usage(anyhow!("--truth is required with --input")))?;
    let truth = Ucn::read_json(&truth_path)?;
    let run = score_run(read_prediction(&input)?, &truth, &a)?;
    let report = MetricsReport {
        tpr: run.tpr,
        fpr: run.fpr,
        auc: run.curve.as_ref().map(|c| c.auc),
        seeds: 1,
    };
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.roc {
        let curve = run
            .curve
            .as_ref()
            .ok_or_else(|| Failure::Compute(anyhow!("the truth has no positive or no negative cell")))?;
        write(path, &roc_csv(curve))?;
        outputs.push(path.clone());
    }
    write_report(&a.out, &report)?;
    manifest_for_evaluate(&a, started, vec![input, truth_path], outputs, 1)
}

fn evaluate_batch(a: EvaluateArgs) -> Outcome {
    let started = Instant::now();
    let dir = a.batch.clone().expect("batch mode");
    let input_name = a.input.clone().unwrap_or_else(|| "network.json".into());
    let truth_name = a.truth.clone().unwrap_or_else(|| "truth.json".into());
    let mut runs: Vec<PathBuf> = fs::read_dir(&dir)
        .with_context(|| format!("cannot list {}", dir.display()))
        .map_err(Failure::Usage)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(&input_name).is_file() && p.join(&truth_name).is_file())
        .collect();
    runs.sort();
    if runs.is_empty() {
        return Err(Failure::Usage(anyhow!(
            "no subdirectory of {} holds both {} and {}",
            dir.display(),
            input_name.display(),
            truth_name.display()
        )));
    }

    let mut csv = String::from("run,tpr,fpr,auc\n");
    let (mut tprs, mut fprs, mut aucs) = (Vec::new(), Vec::new(), Vec::new());
    let mut inputs = Vec::new();
    for run_dir in &runs {
        let truth = Ucn::read_json(run_dir.join(&truth_name))?;
        let m = score_run(read_prediction(&run_dir.join(&input_name))?, &truth, &a)
            .map_err(|f| with_run_context(f, run_dir))?;
        let auc = m.curve.as_ref().map(|c| c.auc);
        let label = run_dir.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        csv.push_str(&format!("{label},{},{},{}\n", m.tpr, m.fpr, auc.map_or(String::new(), |v| v.to_string())));
        tprs.push(m.tpr);
        fprs.push(m.fpr);
        aucs.extend(auc);
        inputs.push(run_dir.join(&input_name));
        inputs.push(run_dir.join(&truth_name));
    }
    let report = MetricsReport {
        tpr: eval::median(&tprs).expect("at least one run"),
        fpr: eval::median(&fprs).expect("at least one run"),
        auc: if aucs.len() == runs.len() { eval::median(&aucs) } else { None },
        seeds: runs.len(),
    };
    csv.push_str(&format!(
        "median,{},{},{}\n",
        report.tpr,
        report.fpr,
        report.auc.map_or(String::new(), |v| v.to_string())
    ));
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.rows {
        write(path, &csv)?;
        outputs.push(path.clone());
    }
    if a.roc.is_some() {
        log::warn!("--roc is ignored in batch mode; run evaluate on a single run for curve points");
    }
    write_report(&a.out, &report)?;
    manifest_for_evaluate(&a, started, inputs, outputs, runs.len())
}

fn with_run_context(f: Failure, run: &Path) -> Failure {
    let ctx = format!("run {}", run.display());
    match f {
        Failure::Compute(e) => Failure::Compute(e.context(ctx)),
        Failure::Usage(e) => Failure::Usage(e.context(ctx)),
    }
}

fn roc_csv(curve: &RocCurve) -> String {
    let mut s = String::from("fpr,tpr\n");
    for p in &curve.points {
        s.push_str(&format!("{},{}\n", p.fpr, p.tpr));
    }
    s
}

fn write_report(path: &Path, report: &MetricsReport) -> Outcome {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Compute(e.into()))?;
    text.push('\n');
    write(path, &text)
}

fn manifest_for_evaluate(
    a: &EvaluateArgs,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    runs: usize,
) -> Outcome {
    let dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = a.out.file_stem().map_or_else(|| "metrics".into(), |s| s.to_string_lossy().into_owned());
    RunManifest::new("evaluate", started)
        .config(json!({
            "batch": a.batch,
            "thresholds": a.thresholds,
            "collapse_lags": a.collapse_lags,
            "runs": runs,
        }))
        .inputs(inputs)
        .outputs(outputs)
        .write_as(&dir.join(format!("{stem}.manifest.json")))
}
