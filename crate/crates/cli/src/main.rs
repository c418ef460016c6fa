//! `bspf`: train, apply and check online BSP forests from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 validation failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bsp_forest::io::{self, Dataset, Format, Metrics};
use bsp_forest::partition::{hull_cut, PartitionExport};
use bsp_forest::validation::{self, replicate_rng, TestReport};
use bsp_forest::{BudgetSchedule, Error, Forest, ForestConfig, Label, Point2, PointStore, Polygon2D, Task, TreeConfig};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;

#[derive(Parser)]
#[command(name = "bspf", version, about = "Online binary space partitioning forests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Libsvm,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Libsvm => Format::Libsvm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Reg,
    Clf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetArg {
    Power,
    Fixed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Poisson,
    Consistency,
    Leafbound,
    Diameter,
    Order,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a labelled dataset into a new forest and save the model.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Label column name (CSV only).
        #[arg(long, default_value = "y")]
        label: String,
        #[arg(long, value_enum, default_value = "reg")]
        task: TaskArg,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "power")]
        budget: BudgetArg,
        /// Power-rule exponent; defaults to 1/(d+2).
        #[arg(long)]
        budget_exp: Option<f64>,
        /// Power-rule scale, or the constant budget with `--budget fixed`.
        #[arg(long, default_value_t = 1.0)]
        budget_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        rate_scale: f64,
        #[arg(long, default_value_t = 3)]
        min_points: usize,
        /// JSON array of [min, max] per feature; defaults to the data's ranges.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict every row of a dataset.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Column to drop from the input before predicting.
        #[arg(long)]
        label: Option<String>,
    },
    /// Print RMSE or accuracy of a model on a labelled dataset as JSON.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "y")]
        label: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Generate Friedman regression data.
    Friedman {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate the planar sine benchmark.
    Sine {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run Monte Carlo checks of the partition process.
    Validate {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition a dataset in one batch and export it.
    Partition {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Column to drop from the input before partitioning.
        #[arg(long)]
        label: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Data(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidAngle(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn load_bounds(path: &Path) -> Result<Vec<[f64; 2]>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn as_pairs(b: &[[f64; 2]]) -> Vec<(f64, f64)> {
    b.iter().map(|&[lo, hi]| (lo, hi)).collect()
}

fn class_label(y: f64) -> Result<u32, Failure> {
    if y >= 0.0 && y.fract() == 0.0 && y <= u32::MAX as f64 {
        Ok(y as u32)
    } else {
        Err(Failure::Data(format!("class labels must be non-negative integers, found {y}")))
    }
}

/// Loads a dataset and rescales it with the model's stored bounds.
fn load_for_model(forest: &Forest, input: &Path, format: FormatArg, label: Option<&str>) -> Result<Dataset, Failure> {
    let ds = io::load_dataset(input, format.into(), label)?;
    if ds.d() != forest.d() {
        return Err(Error::DimensionMismatch { expected: forest.d(), got: ds.d() }.into());
    }
    let bounds = forest.feature_bounds().map(as_pairs);
    let scaled = io::rescale(&ds, bounds.as_deref())?;
    Ok(scaled.dataset)
}

fn load_model(path: &Path) -> Result<Forest, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(Forest::from_json(&text)?)
}

#[allow(clippy::too_many_arguments)]
fn train(
    input: &Path,
    format: FormatArg,
    label: &str,
    task: TaskArg,
    trees: usize,
    seed: u64,
    budget: BudgetArg,
    budget_exp: Option<f64>,
    budget_scale: f64,
    rate_scale: f64,
    min_points: usize,
    bounds: Option<&Path>,
    model: &Path,
) -> CliResult {
    let ds = io::load_dataset(input, format.into(), Some(label))?;
    let d = ds.d();
    let bounds = match bounds {
        Some(p) => load_bounds(p)?,
        None => ds.bounds.iter().map(|&(lo, hi)| [lo, hi]).collect(),
    };
    let scaled = io::rescale(&ds, Some(&as_pairs(&bounds)))?;
    let schedule = match budget {
        BudgetArg::Fixed => BudgetSchedule::fixed(budget_scale),
        BudgetArg::Power => {
            let mut s = BudgetSchedule::power_rule(d);
            s.scale = budget_scale;
            if let Some(e) = budget_exp {
                s.exponent = e;
            }
            s
        }
    };
    let task = match task {
        TaskArg::Reg => Task::Regression,
        TaskArg::Clf => Task::Classification,
    };
    let config = ForestConfig {
        n_trees: trees,
        task,
        schedule,
        tree: TreeConfig { min_points_to_cut: min_points, rate_scale, enforce_domain: true },
        seed,
    };
    let mut forest = Forest::new(d, config)?;
    forest.set_feature_bounds(Some(bounds))?;
    let labels = scaled.dataset.labels.as_deref().unwrap_or_default();
    for (x, &y) in scaled.dataset.features.iter().zip(labels) {
        let y = match task {
            Task::Regression => Label::Real(y),
            Task::Classification => Label::Class(class_label(y)?),
        };
        forest.observe(x, y)?;
    }
    log::info!("trained {} trees on {} points, final budget {:.4}", trees, forest.n_seen(), forest.current_budget());
    write_file(model, &forest.to_json()?)
}

fn predict(model: &Path, input: &Path, output: &Path, format: FormatArg, label: Option<&str>) -> CliResult {
    let forest = load_model(model)?;
    let ds = load_for_model(&forest, input, format, label)?;
    let mut out = String::from("prediction\n");
    for x in &ds.features {
        match forest.predict(x)? {
            Label::Real(v) => out.push_str(&format!("{v}\n")),
            Label::Class(c) => out.push_str(&format!("{c}\n")),
        }
    }
    write_file(output, &out)
}

fn eval(model: &Path, input: &Path, label: &str, format: FormatArg) -> CliResult {
    let forest = load_model(model)?;
    let ds = load_for_model(&forest, input, format, Some(label))?;
    let truths = ds.labels.as_deref().unwrap_or_default();
    let metrics = match forest.task() {
        Task::Regression => {
            let preds: Vec<f64> = ds.features.iter().map(|x| forest.predict_regression(x)).collect::<Result<_, _>>()?;
            Metrics { rmse: Some(io::rmse(&preds, truths)?), accuracy: None }
        }
        Task::Classification => {
            let preds: Vec<u32> = ds.features.iter().map(|x| forest.predict_class(x)).collect::<Result<_, _>>()?;
            let truths: Vec<u32> = truths.iter().map(|&y| class_label(y)).collect::<Result<_, _>>()?;
            Metrics { rmse: None, accuracy: Some(io::accuracy(&preds, &truths)?) }
        }
    };
    println!("{}", serde_json::to_string(&metrics).expect("metrics serialize"));
    Ok(())
}

fn run_suite(suite: Suite, seed: u64) -> Result<Vec<TestReport>, Failure> {
    let want = |s: Suite| suite == s || suite == Suite::All;
    let mut reports = Vec::new();
    if want(Suite::Poisson) {
        let (a, b) = (Point2::new(0.0, 0.1), Point2::new(1.0, 0.9));
        reports.push(validation::poisson_slice_test(2.0, a, b, 2000, seed)?);
    }
    if want(Suite::Consistency) {
        let sub = Polygon2D::rectangle(0.25, 0.25, 0.75, 0.75);
        reports.push(validation::consistency_restriction_test(1.0, &sub, 1000, seed)?);
    }
    if want(Suite::Leafbound) {
        reports.push(validation::leaf_count_bound_test(0.5, 2, 500, seed)?);
        reports.push(validation::leaf_count_bound_test(1.0, 2, 500, seed)?);
        reports.push(validation::leaf_count_bound_test(1.0, 3, 100, seed)?);
    }
    if want(Suite::Diameter) {
        reports.push(validation::diameter_tail_test(4.0, Point2::new(0.5, 0.5), &[0.5, 1.0], 2000, seed)?);
    }
    if want(Suite::Order) {
        let mut rng = replicate_rng(seed, usize::MAX);
        let rows: Vec<[f64; 2]> = (0..50).map(|_| [rng.random(), rng.random()]).collect();
        let store = PointStore::from_rows(2, &rows)?;
        let forward: Vec<usize> = (0..50).collect();
        let reversed: Vec<usize> = (0..50).rev().collect();
        let tau = BudgetSchedule::power_rule(2).budget(50);
        reports.push(validation::order_invariance_test(&store, &forward, &reversed, tau, 500, seed)?);
    }
    Ok(reports)
}

fn validate(suite: Suite, seed: u64, out: &Path) -> CliResult {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let reports = run_suite(suite, seed)?;
    let mut failed = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        eprintln!("{}", r.summary());
        let path = out.join(format!("{:02}_{}.json", i + 1, r.name));
        write_file(&path, &serde_json::to_string_pretty(r).expect("report serializes"))?;
        if !r.passed {
            failed.push(r.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("failed: {}", failed.join(", "))))
    }
}

#[allow(clippy::too_many_arguments)]
fn partition(
    input: &Path,
    tau: f64,
    seed: u64,
    svg: Option<&Path>,
    json: Option<&Path>,
    format: FormatArg,
    label: Option<&str>,
) -> CliResult {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Failure::Usage(format!("--tau must be finite and non-negative, got {tau}")));
    }
    let ds = io::load_dataset(input, format.into(), label)?;
    let d = ds.d();
    if svg.is_some() && d != 2 {
        return Err(Failure::Usage(format!("SVG export needs two features, the input has {d}")));
    }
    let scaled = io::rescale(&ds, None)?.dataset;
    let store = PointStore::from_rows(d, &scaled.features)?;
    let mut rng = replicate_rng(seed, 0);
    let tree = hull_cut(&store, (0..store.len()).collect(), tau, 0.0, &TreeConfig::default(), &mut rng)?;
    log::info!("{} cuts, {} leaves", tree.cut_count(), tree.leaf_count());
    if let Some(path) = json {
        let export = PartitionExport::from_tree(&tree, d);
        write_file(path, &serde_json::to_string_pretty(&export).expect("partition serializes"))?;
    }
    if let Some(path) = svg {
        let pts: Vec<[f64; 2]> = scaled.features.iter().map(|x| [x[0], x[1]]).collect();
        write_file(path, &io::partition_svg(&tree, &pts))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Train {
            input,
            format,
            label,
            task,
            trees,
            seed,
            budget,
            budget_exp,
            budget_scale,
            rate_scale,
            min_points,
            bounds,
            model,
        } => train(
            &input,
            format,
            &label,
            task,
            trees,
            seed,
            budget,
            budget_exp,
            budget_scale,
            rate_scale,
            min_points,
            bounds.as_deref(),
            &model,
        ),
        Command::Predict { model, input, output, format, label } => {
            predict(&model, &input, &output, format, label.as_deref())
        }
        Command::Eval { model, input, label, format } => eval(&model, &input, &label, format),
        Command::Friedman { n, d, sigma, seed, output } => {
            io::write_csv_file(&io::friedman_generate(n, d, sigma, seed)?, &output).map_err(Failure::from)
        }
        Command::Sine { n, sigma, seed, output } => {
            io::write_csv_file(&io::simple_sine_generate(n, sigma, seed)?, &output).map_err(Failure::from)
        }
        Command::Validate { suite, seed, out } => validate(suite, seed, &out),
        Command::Partition { input, tau, seed, svg, json, format, label } => {
            partition(&input, tau, seed, svg.as_deref(), json.as_deref(), format, label.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(3)
        }
    }
}
