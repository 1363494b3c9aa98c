mod report;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nbknn_core::baselines::{knn_from_ordering, select_k_cv};
use nbknn_core::data_io::{load_features_csv, split_manifest};
use nbknn_core::multiclass::decide;
use nbknn_core::{
    load_csv, neighbor_order, run_benchmark, run_experiment, BenchmarkConfig, BinaryEvidenceClassifier, CsvDataset,
    Design, Error, ExperimentConfig, KnnConfig, Method, MethodSet, MinorityRole, Reduction, SplitSpec,
    StandardizationParams, Weighting, DEFAULT_K_MAX,
};

use report::{BenchmarkReport, ClassSummary, SimulationReport, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "nbknn", version, about = "Negative-binomial nearest-neighbor classification for imbalanced data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Gaussian location or scale simulation.
    Simulate(SimulateArgs),
    /// Repeated balanced-test evaluation on a labeled CSV.
    Benchmark(BenchmarkArgs),
    /// Train on one CSV and label the rows of another.
    FitPredict(FitPredictArgs),
    /// Export the train/test partitions of a benchmark run as JSON.
    Split(SplitArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DesignArg {
    Location,
    Scale,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RoleArg {
    Narrow,
    Wide,
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    design: DesignArg,
    /// Which scale-design class is the minority.
    #[arg(long, value_enum, default_value = "wide")]
    minority_role: RoleArg,
    /// Minority share of the training sample, in (0, 0.5].
    #[arg(long, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated: proposed, knn, wnn, bayes, ovo_plus, ovr_plus.
    #[arg(long, default_value = "proposed,knn,wnn,bayes")]
    methods: String,
    #[arg(long, default_value_t = DEFAULT_K_MAX, value_parser = parse_positive)]
    k_max: usize,
    #[arg(long, default_value_t = 1000, value_parser = parse_positive)]
    train_size: usize,
    #[arg(long, default_value_t = 1000, value_parser = parse_positive)]
    test_size: usize,
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    jobs: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct BenchmarkArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to proposed,knn,wnn for two classes and
    /// ovo_plus,ovr_plus,knn,wnn otherwise.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long, default_value_t = DEFAULT_K_MAX, value_parser = parse_positive)]
    k_max: usize,
    /// Share of the smallest class sent to the test set.
    #[arg(long, default_value_t = 0.25, value_parser = parse_fraction)]
    fraction: f64,
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    jobs: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct FitPredictArgs {
    #[arg(long)]
    train: PathBuf,
    /// Must have the training feature columns in the same order; the label
    /// column may be present and is ignored.
    #[arg(long)]
    query: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Defaults to proposed for two classes, ovr_plus otherwise.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = DEFAULT_K_MAX, value_parser = parse_positive)]
    k_max: usize,
    /// Seed for the cross-validation folds of knn and wnn.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append the evidence values behind each prediction.
    #[arg(long)]
    emit_evidence: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25, value_parser = parse_fraction)]
    fraction: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if a > 0.0 && a <= 0.5 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 0.5], got {s}"))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("fraction must lie in (0, 1), got {s}"))
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got '{s}'")),
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn parse_methods(list: &str) -> CliResult<MethodSet> {
    MethodSet::parse(list).map_err(|e| Failure::Usage(e.to_string()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Failure::Data(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Machine output to `--output` (or stdout), human table to the other stream.
fn emit(output: Option<&Path>, machine: &str, human: &str) -> CliResult {
    match output {
        Some(path) => {
            write_atomic(path, machine.as_bytes())?;
            print!("{human}");
        }
        None => {
            eprint!("{human}");
            print!("{machine}");
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult {
    let methods = parse_methods(&args.methods)?;
    let design = match args.design {
        DesignArg::Location => Design::Location,
        DesignArg::Scale => Design::Scale {
            minority_role: match args.minority_role {
                RoleArg::Narrow => MinorityRole::Narrow,
                RoleArg::Wide => MinorityRole::Wide,
            },
        },
    };
    let mut config = ExperimentConfig::new(args.alpha, args.trials as usize, args.seed, methods);
    config.k_max = args.k_max;
    config.train_size = args.train_size;
    config.test_size = args.test_size;
    config.jobs = args.jobs;
    let reports = run_experiment(design, &config)?;

    let doc = SimulationReport {
        schema: SCHEMA_VERSION,
        command: "simulate",
        design: design.name(),
        minority_role: match design {
            Design::Scale { minority_role } => Some(minority_role),
            Design::Location => None,
        },
        alpha: args.alpha,
        trials: config.trials,
        seed: args.seed,
        k_max: args.k_max,
        train_size: args.train_size,
        test_size: args.test_size,
        methods: reports,
    };
    let json = report::to_json(&doc).map_err(|e| Failure::Data(e.to_string()))?;
    emit(args.output.as_deref(), &json, &report::metrics_table(&doc.methods))
}

fn benchmark(args: BenchmarkArgs) -> CliResult {
    let explicit = args.methods.as_deref().map(parse_methods).transpose()?;
    let data = load_csv(&args.input, &args.label_column)?;
    let j = data.data.n_classes();
    let methods = explicit.unwrap_or_else(|| BenchmarkConfig::default_methods(j));
    if methods.contains(Method::Bayes) {
        return Err(Failure::Usage("the bayes oracle is only available in simulate".into()));
    }
    if methods.contains(Method::Proposed) && j != 2 {
        return Err(Failure::Usage(format!(
            "method 'proposed' needs two classes, found {j}; use ovo_plus or ovr_plus"
        )));
    }
    let config = BenchmarkConfig {
        split: SplitSpec {
            minority_test_fraction: args.fraction,
            seed: args.seed,
            trials: args.trials as usize,
        },
        k_max: args.k_max,
        methods,
        jobs: args.jobs,
    };
    let outcome = run_benchmark(&data, &config)?;

    let doc = BenchmarkReport {
        schema: SCHEMA_VERSION,
        command: "benchmark",
        label_column: args.label_column,
        classes: data
            .class_names
            .iter()
            .zip(data.data.class_counts())
            .map(|(name, &count)| ClassSummary {
                name: name.clone(),
                count,
            })
            .collect(),
        features: data.feature_names.len(),
        trials: config.split.trials,
        seed: args.seed,
        k_max: args.k_max,
        minority_test_fraction: args.fraction,
        test_per_class: outcome.test_per_class,
        methods: outcome.reports,
        efficiency: outcome.efficiency,
    };
    let json = report::to_json(&doc).map_err(|e| Failure::Data(e.to_string()))?;
    let mut human = report::metrics_table(&doc.methods);
    if let Some(eff) = &doc.efficiency {
        human.push('\n');
        human.push_str(&report::efficiency_table(&doc.methods, eff));
    }
    emit(args.output.as_deref(), &json, &human)
}

enum Predictor {
    Binary(BinaryEvidenceClassifier),
    Reduction(Reduction),
    Knn { k: usize, weighting: Weighting },
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fit_predict(args: FitPredictArgs) -> CliResult {
    let method = args.method.as_deref().map(Method::parse).transpose().map_err(|e| Failure::Usage(e.to_string()))?;
    let CsvDataset {
        data: raw_train,
        feature_names,
        class_names,
    } = load_csv(&args.train, &args.label_column)?;
    let queries = load_features_csv(&args.query, &feature_names, Some(&args.label_column))?;
    let j = raw_train.n_classes();
    let method = method.unwrap_or(if j == 2 { Method::Proposed } else { Method::OvrPlus });
    if method == Method::Bayes {
        return Err(Failure::Usage("the bayes oracle is only available in simulate".into()));
    }
    if method == Method::Proposed && j != 2 {
        return Err(Failure::Usage(format!(
            "method 'proposed' needs two classes, found {j}; use ovo_plus or ovr_plus"
        )));
    }
    if args.emit_evidence && matches!(method, Method::Knn | Method::Wnn) {
        return Err(Failure::Usage(format!("method '{method}' produces no evidence values")));
    }

    let params = StandardizationParams::fit(&raw_train)?;
    let train = params.transform(&raw_train);
    let predictor = match method {
        Method::Proposed => Predictor::Binary(BinaryEvidenceClassifier::fit(train.clone(), args.k_max)?),
        Method::OvoPlus => Predictor::Reduction(Reduction::OvoPlus),
        Method::OvrPlus => Predictor::Reduction(Reduction::OvrPlus),
        Method::Knn | Method::Wnn => {
            let weighting = if method == Method::Knn {
                Weighting::Uniform
            } else {
                Weighting::InverseClassSize
            };
            let k = select_k_cv(&train, &KnnConfig::new(weighting), args.seed)?;
            Predictor::Knn { k, weighting }
        }
        Method::Bayes => unreachable!(),
    };

    let mut out = String::from("prediction");
    if args.emit_evidence {
        match predictor {
            Predictor::Binary(_) => out.push_str(",e1,e2"),
            _ => {
                for name in &class_names {
                    out.push(',');
                    out.push_str(&csv_field(&format!("evidence_{name}")));
                }
            }
        }
    }
    out.push('\n');
    for row in &queries {
        let query = params.transform_row(row);
        let ordering = neighbor_order(&train, &query)?;
        let (class, evidence) = match &predictor {
            Predictor::Binary(clf) => {
                let pair = clf.evidence_from_ordering(&ordering)?;
                (clf.class_for(pair.decision()), vec![Some(pair.e1), Some(pair.e2)])
            }
            Predictor::Reduction(r) => {
                let d = decide(*r, &train, &ordering, args.k_max)?;
                let ev = train.class_ids().map(|c| d.evidences.get(&c).copied()).collect();
                (d.class, ev)
            }
            Predictor::Knn { k, weighting } => (knn_from_ordering(&train, &ordering, *k, *weighting)?, vec![]),
        };
        out.push_str(&csv_field(&class_names[class.index()]));
        if args.emit_evidence {
            for e in evidence {
                out.push(',');
                if let Some(v) = e {
                    let _ = write!(out, "{v}");
                }
            }
        }
        out.push('\n');
    }

    match args.output.as_deref() {
        Some(path) => write_atomic(path, out.as_bytes()),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn split(args: SplitArgs) -> CliResult {
    let data = load_csv(&args.input, &args.label_column)?;
    let spec = SplitSpec {
        minority_test_fraction: args.fraction,
        seed: args.seed,
        trials: args.trials as usize,
    };
    let manifest = split_manifest(&data.data, &spec)?;
    let json = report::to_json(&manifest).map_err(|e| Failure::Data(e.to_string()))?;
    match args.output.as_deref() {
        Some(path) => write_atomic(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::FitPredict(a) => fit_predict(a),
        Command::Split(a) => split(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
