//! `afford`: command-line front end for the experiment harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afford_core::data::load_dataset;
use afford_core::harness::{
    aggregate, aggregate_table, association_from_models, feature_reports, load_clouds, load_models, project_clouds,
    run_experiment, write_association, write_feature_reports, write_synthetic, ExperimentConfig, ModelRecord,
    SynthInput,
};
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "afford", version, about = "Group-sparse metric learning for affordance feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset and report every problem found.
    Validate(DatasetArgs),
    /// Run the split / cross-validate / train / evaluate protocol.
    Run(ConfigArgs),
    /// Average magnitude profiles and per-group summaries from saved models.
    Features {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// KL association table between affordances from saved models.
    Associate {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Colour point clouds by feature importance and write PLY files.
    Project(ProjectArgs),
    /// Write a synthetic dataset and its ground truth.
    Synth {
        /// JSON generator spec, single problem or multi-affordance suite.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct DatasetArgs {
    /// Config file to take the dataset paths from.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    groups: Option<PathBuf>,
}

/// Config file plus one flag per config field. List values are comma
/// separated; `train` fields are addressed by their own names.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    affordances: Option<Vec<String>>,
    #[arg(long = "n_splits", alias = "n-splits")]
    n_splits: Option<usize>,
    #[arg(long = "split_ratio", alias = "split-ratio")]
    split_ratio: Option<f64>,
    #[arg(long = "cv_folds", alias = "cv-folds")]
    cv_folds: Option<usize>,
    #[arg(long = "c_grid", alias = "c-grid", value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long = "lambda_grid", alias = "lambda-grid", value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long = "pca_dims_grid", alias = "pca-dims-grid", value_delimiter = ',')]
    pca_dims_grid: Option<Vec<usize>>,
    #[arg(long = "master_seed", alias = "master-seed")]
    master_seed: Option<u64>,
    #[arg(long = "output_dir", alias = "output-dir")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long = "global_standardization", alias = "global-standardization")]
    global_standardization: Option<bool>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "max_epochs", alias = "max-epochs")]
    max_epochs: Option<usize>,
    #[arg(long = "init_step", alias = "init-step")]
    init_step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "norm_eps", alias = "norm-eps")]
    norm_eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProjectArgs {
    /// A single saved model record.
    #[arg(long, conflicts_with_all = ["models", "affordance"])]
    model: Option<PathBuf>,
    /// Directory of saved models; the affordance's runs are averaged.
    #[arg(long, requires = "affordance")]
    models: Option<PathBuf>,
    #[arg(long)]
    affordance: Option<String>,
    /// Directory of point-cloud feature maps (`*.json`).
    #[arg(long)]
    clouds: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn read_json_value(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn set<T: serde::Serialize>(obj: &mut Map<String, Value>, key: &str, value: &Option<T>) -> anyhow::Result<()> {
    if let Some(v) = value {
        obj.insert(key.to_owned(), serde_json::to_value(v)?);
    }
    Ok(())
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut root = match &self.config {
            Some(p) => read_json_value(p)?,
            None => Value::Object(Map::new()),
        };
        let obj = root
            .as_object_mut()
            .ok_or_else(|| anyhow!("config must be a JSON object"))?;
        set(obj, "features", &self.features)?;
        set(obj, "labels", &self.labels)?;
        set(obj, "groups", &self.groups)?;
        set(obj, "affordances", &self.affordances)?;
        set(obj, "n_splits", &self.n_splits)?;
        set(obj, "split_ratio", &self.split_ratio)?;
        set(obj, "cv_folds", &self.cv_folds)?;
        set(obj, "c_grid", &self.c_grid)?;
        set(obj, "lambda_grid", &self.lambda_grid)?;
        set(obj, "pca_dims_grid", &self.pca_dims_grid)?;
        set(obj, "master_seed", &self.master_seed)?;
        set(obj, "output_dir", &self.output_dir)?;
        set(obj, "parallelism", &self.parallelism)?;
        set(obj, "global_standardization", &self.global_standardization)?;
        let train = obj
            .entry("train")
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .ok_or_else(|| anyhow!("config field `train` must be an object"))?;
        set(train, "k", &self.k)?;
        set(train, "c", &self.c)?;
        set(train, "lambda", &self.lambda)?;
        set(train, "d", &self.d)?;
        set(train, "max_epochs", &self.max_epochs)?;
        set(train, "init_step", &self.init_step)?;
        set(train, "tol", &self.tol)?;
        set(train, "norm_eps", &self.norm_eps)?;
        set(train, "seed", &self.seed)?;
        let config: ExperimentConfig = serde_json::from_value(root).context("invalid config")?;
        config.validate()?;
        Ok(config)
    }
}

fn validate(args: &DatasetArgs) -> anyhow::Result<()> {
    let base = match &args.config {
        Some(p) => serde_json::from_value::<ExperimentConfig>(read_json_value(p)?).context("invalid config")?,
        None => ExperimentConfig::default(),
    };
    let features = args.features.clone().unwrap_or(base.features);
    let labels = args.labels.clone().unwrap_or(base.labels);
    let groups = args.groups.clone().unwrap_or(base.groups);
    let ds = load_dataset(&features, &labels, &groups)?;
    println!(
        "ok: {} instances, {} features in {} groups, {} affordances",
        ds.n_instances(),
        ds.n_features(),
        ds.groups.len(),
        ds.n_affordances()
    );
    for (a, name) in ds.affordance_names.iter().enumerate() {
        let pos = ds.binary_labels(a).iter().filter(|&&l| l).count();
        println!("  {name}: {pos} positive, {} negative", ds.n_instances() - pos);
    }
    Ok(())
}

fn run(args: &ConfigArgs) -> anyhow::Result<()> {
    let config = args.resolve()?;
    let results = run_experiment(&config)?;
    print!("{}", aggregate_table(&aggregate(&results)));
    println!("results written to {}", config.output_dir.display());
    Ok(())
}

fn project(args: &ProjectArgs) -> anyhow::Result<()> {
    let (profile, groups) = match (&args.model, &args.models, &args.affordance) {
        (Some(path), _, _) => {
            let rec = ModelRecord::load(path)?;
            (rec.profile()?, rec.groups)
        }
        (None, Some(dir), Some(aff)) => {
            let reports = feature_reports(&load_models(dir)?)?;
            let r = reports
                .into_iter()
                .find(|r| &r.affordance == aff)
                .ok_or_else(|| afford_core::Error::InvalidArgument(format!("no models for affordance `{aff}`")))?;
            (r.mean_profile, r.groups)
        }
        _ => bail!("give either --model or --models with --affordance"),
    };
    let clouds = load_clouds(&args.clouds)?;
    let written = project_clouds(&profile, &groups, &clouds, &args.out)?;
    println!("wrote {} PLY files to {}", written.len(), args.out.display());
    Ok(())
}

fn synth(spec: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let mut value = read_json_value(spec)?;
    if let (Some(s), Some(obj)) = (seed, value.as_object_mut()) {
        obj.insert("seed".into(), s.into());
    }
    let input: SynthInput = serde_json::from_value(value).context("invalid synthetic spec")?;
    let ds = write_synthetic(&input, out)?;
    println!(
        "wrote {} instances x {} features ({} affordances) to {}",
        ds.n_instances(),
        ds.n_features(),
        ds.n_affordances(),
        out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate(args) => validate(&args),
        Command::Run(args) => run(&args),
        Command::Features { models, out } => {
            let reports = feature_reports(&load_models(&models)?)?;
            write_feature_reports(&reports, &out)?;
            println!("feature summaries for {} affordances written to {}", reports.len(), out.display());
            Ok(())
        }
        Command::Associate { models, out } => {
            let table = association_from_models(&load_models(&models)?)?;
            write_association(&table, &out)?;
            print!("{}", table.render_text());
            Ok(())
        }
        Command::Project(args) => project(&args),
        Command::Synth { spec, out, seed } => synth(&spec, &out, seed),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<afford_core::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn core_chain_len(e: &afford_core::Error) -> usize {
    std::iter::successors(Some(e as &dyn std::error::Error), |e| e.source()).count()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Core errors already carry their causes in the message.
            match e.downcast_ref::<afford_core::Error>() {
                Some(core) if e.chain().count() == core_chain_len(core) => eprintln!("error: {core}"),
                _ => eprintln!("error: {e:#}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
