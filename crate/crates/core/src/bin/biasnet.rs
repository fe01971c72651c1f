//! Command-line front end: simulate, featurize, train, infer, select-model, experiment.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure, 4 schema mismatch.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use biasnet::experiment::{importance_report, run_design, svg_bar_chart, FactorialDesign};
use biasnet::features::{read_feature_csv, write_feature_csv, FEATURE_COUNT, FEATURE_NAMES};
use biasnet::forest::FeatureMatrix;
use biasnet::persist::names_hash;
use biasnet::prevision::{
    generate_training_set, sample_prior, train_class_selector, train_prevision, PrevisionConfig, PrevisionModel,
    PriorSpec, TrainingSet, DEFAULT_LEVELS, DEFAULT_MEAN_DEGREE,
};
use biasnet::rng::{stream, Domain};
use biasnet::sfbn::{burnin_steps, sfbn_sample, ModelSpec, ParamVector, PARAM_NAMES};
use biasnet::{featurize, DiGraph, Error, ValuedEdgeList};

const THREADS_ENV: &str = "BIASNET_THREADS";

#[derive(Parser, Debug)]
#[command(name = "biasnet", version, about = "Biased net simulation and random forest prevision")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads (default: BIASNET_THREADS, else all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// key = value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate networks at fixed parameters or from the prior.
    Simulate(SimulateArgs),
    /// Compute the feature table for edge-list files.
    Featurize(FeaturizeArgs),
    /// Simulate a training set and fit a prevision model.
    Train(TrainArgs),
    /// Posterior summaries for observed networks.
    Infer(InferArgs),
    /// Probability that each network came from the undichotomized model.
    SelectModel(InferArgs),
    /// Evaluate a model on the factorial test design.
    Experiment(ExperimentArgs),
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    pi: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, required_unless_present = "from_prior")]
    d: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Draw parameters from the default prior instead.
    #[arg(long)]
    from_prior: bool,
    #[arg(long, default_value_t = DEFAULT_MEAN_DEGREE)]
    mean_degree: f64,
    #[arg(long)]
    dichotomized: bool,
    /// Burn-in as a multiple of n^2.
    #[arg(long, default_value_t = 500)]
    burnin_mult: u64,
    #[arg(long, default_value_t = 1)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct FeaturizeArgs {
    /// Edge-list files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Strength threshold applied to valued files.
    #[arg(long, default_value_t = 1)]
    level: u32,
    /// CSV destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    n: usize,
    /// Prior draws in the training set.
    #[arg(long)]
    draws: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dichotomized: bool,
    #[arg(long, default_value_t = 500)]
    burnin_mult: u64,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    #[arg(long)]
    min_node_size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MEAN_DEGREE)]
    mean_degree: f64,
    /// Also simulate the other model class and train the class selector.
    #[arg(long)]
    selector: bool,
}

#[derive(clap::Args, Debug)]
struct InferArgs {
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Edge-list files.
    inputs: Vec<PathBuf>,
    /// Precomputed feature CSV instead of edge lists.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Analyse every strength threshold of each valued input.
    #[arg(long)]
    threshold_levels: bool,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    #[arg(long, default_value_t = 500)]
    burnin_mult: u64,
    /// Permutation importance from the model's stored training set.
    #[arg(long)]
    importance: bool,
    /// SVG bar charts of importance scores.
    #[arg(long)]
    svg: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
    Schema(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Schema(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) | Failure::Schema(m) => m,
        }
    }

    fn context(self, what: &str) -> Self {
        match self {
            Failure::Config(m) => Failure::Config(format!("{what}: {m}")),
            Failure::Runtime(m) => Failure::Runtime(format!("{what}: {m}")),
            Failure::Schema(m) => Failure::Schema(format!("{what}: {m}")),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse { .. } => Failure::Config(e.to_string()),
            Error::SchemaMismatch { .. } => Failure::Schema(e.to_string()),
            Error::Format(_) | Error::Io(_) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse_with_config(args) {
        Ok(c) => c,
        Err(Failure::Config(m)) if m.is_empty() => return ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            return ExitCode::from(f.code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Parse argv, splicing flags from `--config` in front of the explicit ones
/// so that the command line wins.
fn parse_with_config(args: Vec<OsString>) -> CliResult<Cli> {
    let parse = |args: &[OsString]| -> CliResult<Cli> {
        Cli::try_parse_from(args).map_err(|e| {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                Failure::Config(String::new())
            } else {
                Failure::Config(e.render().to_string().trim_end().to_string())
            }
        })
    };
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" || a == "--threads" {
            if a == "--config" {
                config = args.get(i + 1).map(PathBuf::from);
            }
            i += 2;
            continue;
        }
        if let Some(path) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, sub) else {
        return parse(&args);
    };
    let name = args[pos].to_string_lossy().into_owned();
    let text = fs::read_to_string(&path).map_err(|e| Failure::Config(format!("config {}: {e}", path.display())))?;
    let extra = config_args(&text, &name).map_err(|m| Failure::Config(format!("config {}: {m}", path.display())))?;
    let mut spliced = args[..=pos].to_vec();
    spliced.extend(extra.into_iter().map(OsString::from));
    spliced.extend_from_slice(&args[pos + 1..]);
    parse(&spliced)
}

/// Grammar: one `key = value` per line; `#` starts a comment line; keys are
/// long flag names (`_` and `-` interchangeable); booleans take true/false.
fn config_args(text: &str, sub: &str) -> std::result::Result<Vec<String>, String> {
    let cmd = Cli::command();
    let sc = cmd.find_subcommand(sub).ok_or("unknown subcommand")?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(format!("line {}: expected key = value", idx + 1))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim().trim_matches('"');
        let arg = sc
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or(format!("line {}: unknown key {key:?} for {sub}", idx + 1))?;
        if arg.get_action().takes_values() {
            out.push(format!("--{key}"));
            out.push(value.to_string());
        } else {
            match value {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                other => return Err(format!("line {}: {key} expects true or false, got {other:?}", idx + 1)),
            }
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.parse().map_err(|_| Failure::Config(format!("{THREADS_ENV}={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Config("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Featurize(a) => featurize_cmd(a),
        Command::Train(a) => train(a),
        Command::Infer(a) => infer(a, false),
        Command::SelectModel(a) => infer(a, true),
        Command::Experiment(a) => experiment(a),
    }
}

fn config_hash(value: &serde_json::Value) -> String {
    format!("{:016x}", names_hash(&[value.to_string()]))
}

fn write_manifest(path: &Path, command: &str, config: serde_json::Value, extra: serde_json::Value) -> CliResult<()> {
    let doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash(&config),
        "config": config,
        "result": extra,
    });
    fs::write(path, serde_json::to_string_pretty(&doc).expect("json") + "\n")?;
    Ok(())
}

fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))
}

fn model_spec(n: usize, dichotomized: bool) -> CliResult<ModelSpec> {
    Ok(ModelSpec::new(n, dichotomized)?)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let spec = model_spec(a.n, a.dichotomized)?;
    let burnin = burnin_steps(a.n, a.burnin_mult);
    let prior = if a.from_prior { Some(PriorSpec::with_mean_degree(a.n, a.mean_degree)?) } else { None };
    let fixed = match a.d {
        Some(d) if prior.is_none() => {
            let psi = ParamVector::new(a.pi, a.sigma, a.rho, d, a.delta)?;
            if d == 0.0 && burnin > 0 {
                return Err(Failure::Config("d = 0 makes the empty graph an absorbing state".into()));
            }
            Some(psi)
        }
        _ => None,
    };
    if a.draws == 0 {
        return Err(Failure::Config("--draws must be at least 1".into()));
    }
    prepare_out_dir(&a.out)?;
    let graphs: Vec<(ParamVector, DiGraph)> = (0..a.draws)
        .into_par_iter()
        .map(|i| {
            let psi = match (&prior, fixed) {
                (Some(p), _) => sample_prior(p, &mut stream(a.seed, Domain::Prior, i as u64))?,
                (None, Some(psi)) => psi,
                (None, None) => unreachable!("either a prior or fixed parameters"),
            };
            let g = sfbn_sample(&psi, &spec, burnin, &mut stream(a.seed, Domain::Chain, i as u64), None)?;
            Ok((psi, g))
        })
        .collect::<biasnet::Result<_>>()?;
    let width = (a.draws - 1).to_string().len().max(4);
    let mut draws = Vec::with_capacity(graphs.len());
    for (i, (psi, g)) in graphs.iter().enumerate() {
        let file = format!("draw_{i:0width$}.edges");
        fs::write(a.out.join(&file), g.to_edge_list().to_text())?;
        draws.push(json!({ "file": file, "psi": psi, "edges": g.edge_count() }));
    }
    let config = json!({
        "n": a.n, "pi": a.pi, "sigma": a.sigma, "rho": a.rho, "d": a.d, "delta": a.delta,
        "from_prior": a.from_prior, "mean_degree": a.mean_degree, "dichotomized": a.dichotomized,
        "burnin_mult": a.burnin_mult, "burnin": burnin, "draws": a.draws, "seed": a.seed,
    });
    write_manifest(&a.out.join("manifest.json"), "simulate", config, json!({ "draws": draws }))
}

fn read_valued(path: &Path) -> CliResult<ValuedEdgeList> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    ValuedEdgeList::parse(&text).map_err(|e| Failure::from(e).context(&path.display().to_string()))
}

fn check_inputs(paths: &[PathBuf]) -> CliResult<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Failure::Config(format!("{}: no such file", p.display())));
        }
    }
    Ok(())
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(fs::File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn featurize_cmd(a: FeaturizeArgs) -> CliResult<()> {
    check_inputs(&a.inputs)?;
    let mut graphs = Vec::with_capacity(a.inputs.len());
    for p in &a.inputs {
        let v = read_valued(p)?;
        let g = v.threshold(a.level).map_err(|e| Failure::from(e).context(&p.display().to_string()))?;
        graphs.push((p.display().to_string(), g));
    }
    let rows = graphs
        .par_iter()
        .map(|(label, g)| Ok((label.clone(), featurize(g).map_err(|e| Failure::from(e).context(label))?)))
        .collect::<CliResult<Vec<_>>>()?;
    write_feature_csv(output(&a.out)?, &rows)?;
    Ok(())
}

fn write_training_csv(path: &Path, set: &TrainingSet) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Runtime(e.to_string()))?;
    let header: Vec<&str> = PARAM_NAMES.iter().chain(FEATURE_NAMES.iter()).copied().collect();
    w.write_record(&header).map_err(|e| Failure::Runtime(e.to_string()))?;
    for (i, p) in set.params.iter().enumerate() {
        let rec: Vec<String> = p.to_array().iter().chain(set.features.row(i)).map(|v| v.to_string()).collect();
        w.write_record(&rec).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_training_csv(path: &Path) -> CliResult<FeatureMatrix> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| Failure::Runtime(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().skip(5).collect();
    if names != FEATURE_NAMES {
        return Err(Failure::Schema(format!("{}: feature columns do not match the schema", path.display())));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| Failure::Runtime(e.to_string()))?;
        for f in rec.iter().skip(5) {
            data.push(f.parse::<f64>().map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?);
        }
        rows += 1;
    }
    Ok(FeatureMatrix::new(rows, FEATURE_COUNT, data)?)
}

fn train(a: TrainArgs) -> CliResult<()> {
    let spec = model_spec(a.n, a.dichotomized)?;
    let prior = PriorSpec::with_mean_degree(a.n, a.mean_degree)?;
    if a.draws < 2 {
        return Err(Failure::Config("--draws must be at least 2".into()));
    }
    if a.trees == 0 {
        return Err(Failure::Config("--trees must be at least 1".into()));
    }
    prepare_out_dir(&a.out)?;
    let burnin = burnin_steps(a.n, a.burnin_mult);
    let set = generate_training_set(&prior, a.draws, &spec, burnin, a.seed)?;
    let cfg = PrevisionConfig { n_trees: a.trees, seed: a.seed, min_node_size: a.min_node_size };
    let mut model = train_prevision(&set, &prior, &spec, &cfg)?;
    if a.selector {
        let other = generate_training_set(&prior, a.draws, &model_spec(a.n, !a.dichotomized)?, burnin, a.seed)?;
        let (undich, dich) =
            if a.dichotomized { (&other.features, &set.features) } else { (&set.features, &other.features) };
        model.selector = Some(train_class_selector(undich, dich, &cfg)?);
    }
    model.save(&a.out)?;
    write_training_csv(&a.out.join("training.csv"), &set)?;
    let config = json!({
        "n": a.n, "draws": a.draws, "seed": a.seed, "dichotomized": a.dichotomized,
        "burnin_mult": a.burnin_mult, "burnin": burnin, "trees": a.trees,
        "min_node_size": a.min_node_size, "mean_degree": a.mean_degree, "selector": a.selector,
    });
    let oob: Vec<f64> = model.mean.iter().map(|f| f.oob_error(&set.features)).collect::<biasnet::Result<_>>()?;
    write_manifest(
        &a.out.join("run.json"),
        "train",
        config,
        json!({ "fallback_rows": set.fallback_rows, "oob_mse": oob }),
    )?;
    eprintln!("trained on {} draws; model written to {}", set.len(), a.out.display());
    Ok(())
}

fn load_model(dir: &Path) -> CliResult<PrevisionModel> {
    if !dir.join("manifest.json").is_file() {
        return Err(Failure::Config(format!("{}: not a model directory", dir.display())));
    }
    PrevisionModel::load(dir).map_err(|e| Failure::from(e).context(&dir.display().to_string()))
}

/// Labelled feature rows from edge lists or a feature CSV.
fn gather_features(a: &InferArgs) -> CliResult<Vec<(String, Vec<f64>, Option<usize>)>> {
    if a.features.is_none() && a.inputs.is_empty() {
        return Err(Failure::Config("give edge-list files or --features".into()));
    }
    check_inputs(&a.inputs)?;
    let mut rows = Vec::new();
    if let Some(path) = &a.features {
        check_inputs(std::slice::from_ref(path))?;
        let file = fs::File::open(path)?;
        for (label, v) in read_feature_csv(file).map_err(|e| Failure::from(e).context(&path.display().to_string()))? {
            rows.push((label, v.to_vec(), None));
        }
    }
    let mut graphs = Vec::new();
    for p in &a.inputs {
        let v = read_valued(p)?;
        let levels: Vec<u32> = if a.threshold_levels { (1..=v.levels()).collect() } else { vec![1] };
        for s in levels {
            let label = if a.threshold_levels { format!("{}@{s}", p.display()) } else { p.display().to_string() };
            graphs.push((label, v.threshold(s)?));
        }
    }
    let computed = graphs
        .par_iter()
        .map(|(label, g)| {
            let f = featurize(g).map_err(|e| Failure::from(e).context(label))?;
            Ok((label.clone(), f.values.to_vec(), Some(g.n())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    rows.extend(computed);
    Ok(rows)
}

fn infer(a: InferArgs, select: bool) -> CliResult<()> {
    let model = load_model(&a.model)?;
    if select && model.selector.is_none() {
        return Err(Failure::Config(format!(
            "{}: model has no class selector (train with --selector)",
            a.model.display()
        )));
    }
    let levels = a.levels.clone().unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
    if levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Failure::Config("quantile levels must lie in (0, 1)".into()));
    }
    let rows = gather_features(&a)?;
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    let map = |e: csv::Error| Failure::Runtime(e.to_string());
    if select {
        w.write_record(["graph", "p_undichotomized", "preferred"]).map_err(map)?;
    } else {
        let mut header = vec!["graph".to_string(), "parameter".into(), "mean".into(), "sd".into()];
        header.extend(levels.iter().map(|q| format!("q{q}")));
        w.write_record(&header).map_err(map)?;
    }
    for (label, x, n) in rows {
        let s = model.summarize_features(&x, &levels)?;
        if let Some(n) = n.filter(|&n| n != model.spec.n) {
            eprintln!("warning: {label} has order {n}, model trained at n = {}", model.spec.n);
        }
        for warning in s.warnings.iter().filter(|_| !select) {
            eprintln!("warning: {label}: {warning}");
        }
        if select {
            let p = s.undichotomized_probability.expect("selector present");
            let preferred = if p >= 0.5 { "undichotomized" } else { "dichotomized" };
            w.write_record([label, p.to_string(), preferred.to_string()]).map_err(map)?;
            continue;
        }
        for p in &s.params {
            let mut rec = vec![label.clone(), p.name.to_string(), p.mean.to_string(), p.sd.to_string()];
            rec.extend(p.quantiles.iter().map(|q| q.1.to_string()));
            w.write_record(&rec).map_err(map)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn experiment(a: ExperimentArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let training = a.model.join("training.csv");
    if a.importance && !training.is_file() {
        return Err(Failure::Config(format!("{}: missing training.csv for importance", a.model.display())));
    }
    let design = FactorialDesign::standard_grid(model.spec.n, a.replicates)?;
    prepare_out_dir(&a.out)?;
    let burnin = burnin_steps(model.spec.n, a.burnin_mult);
    let report = run_design(&design, &model, &model.spec, burnin, a.seed)?;
    report.write_cases_csv(BufWriter::new(fs::File::create(a.out.join("cases.csv"))?))?;
    report.write_metrics_csv(BufWriter::new(fs::File::create(a.out.join("metrics.csv"))?))?;
    let table = report.table();
    fs::write(a.out.join("metrics.txt"), &table)?;
    print!("{table}");
    if a.importance {
        let x = read_training_csv(&training)?;
        let imp = importance_report(&model, &x)?;
        imp.write_csv(BufWriter::new(fs::File::create(a.out.join("importance.csv"))?))?;
        if a.svg {
            for (k, name) in PARAM_NAMES.iter().enumerate() {
                let svg = svg_bar_chart(&format!("Permutation importance: {name}"), &imp.features, &imp.scores[k]);
                fs::write(a.out.join(format!("importance_{name}.svg")), svg)?;
            }
        }
        for (k, name) in PARAM_NAMES.iter().enumerate() {
            println!("top feature for {name}: {}", imp.top(k));
        }
    }
    let config = json!({
        "model": a.model, "seed": a.seed, "replicates": a.replicates,
        "burnin_mult": a.burnin_mult, "burnin": burnin, "importance": a.importance,
        "model_spec": model.spec, "cells": design.cells().len(),
    });
    write_manifest(&a.out.join("run.json"), "experiment", config, json!({ "metrics": report.metrics }))
}
