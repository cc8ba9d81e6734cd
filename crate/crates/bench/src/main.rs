use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attrbench::{
    parse_list, render_dataset, render_instance, run_dataset, run_instance, Format, InstanceInput, ModelSpec,
    RunConfig, SampleSpec, TargetPolicy,
};
use attrbench_core::data::hatexplain::{convert_hatexplain, HateXplainOptions, RationaleAggregation};
use attrbench_core::data::movies::convert_movies_eraser;
use attrbench_core::data::{load_corpus_jsonl, Split};
use attrbench_core::model::Classifier;
use attrbench_core::{Error, ErrorKind, Method, Metric, RemovalStrategy, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "attrbench", version, about = "Explain text classifiers and evaluate the explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one text with the selected methods.
    Explain(InstanceArgs),
    /// Explain one text and score the explanations.
    Evaluate {
        #[command(flatten)]
        common: InstanceArgs,
        /// Comma-separated metrics.
        #[arg(long, default_value = "aopc_compr,aopc_suff,taucorr_loo,token_iou,token_f1,auprc")]
        metrics: String,
        /// JSON 0/1 array over the whitespace-separated words of --text.
        #[arg(long)]
        rationale: Option<String>,
    },
    /// Explain and evaluate a sample of an annotated corpus.
    Benchmark(BenchmarkArgs),
    /// Corpus utilities.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// builtin:lexicon[=weights.json], builtin:lexicon-subword or remote:URL.
    /// Defaults to the server in XAI_BENCH_MODEL_URL.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated methods: g,gxi,ig,igxi,lime,shap,loo.
    #[arg(long, default_value = "g,gxi,ig,igxi,lime,shap,loo")]
    methods: String,
    #[arg(long, default_value = "delete")]
    removal: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    ig_steps: usize,
    #[arg(long, default_value_t = 1000)]
    lime_samples: usize,
    /// Record wall-clock timings (makes reports non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct InstanceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    text: String,
    /// Class index or label name; defaults to the predicted class.
    #[arg(long)]
    target: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Normalized JSONL corpus.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "aopc_compr,aopc_suff,taucorr_loo,token_iou,token_f1,auprc")]
    metrics: String,
    /// Only instances with this corpus label.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Number of instances, after a seeded shuffle.
    #[arg(long)]
    sample: Option<usize>,
    /// `gold`, `predicted` or a class index.
    #[arg(long, default_value = "gold")]
    target: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Also write an HTML report.
    #[arg(long)]
    html: Option<PathBuf>,
    /// Include per-instance reports.
    #[arg(long)]
    instances: bool,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Convert a public release to normalized JSONL.
    Convert {
        #[command(subcommand)]
        source: ConvertSource,
    },
}

#[derive(Subcommand)]
enum ConvertSource {
    /// HateXplain `dataset.json`.
    Hatexplain {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `post_id_divisions.json` assigning posts to splits.
        #[arg(long)]
        divisions: Option<PathBuf>,
        /// Split for posts not covered by --divisions.
        #[arg(long)]
        split: Option<String>,
        /// Mark words selected by any annotator instead of a majority.
        #[arg(long)]
        union: bool,
    },
    /// ERASER movie reviews: an annotation file such as `val.jsonl`.
    Movies {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Document directory; defaults to `docs/` next to the annotations.
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        split: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Transport | ErrorKind::Model => 3,
        ErrorKind::Data => 4,
    }
}

fn base_config(args: &ModelArgs) -> Result<(RunConfig, Box<dyn Classifier<f64>>)> {
    let spec = ModelSpec::resolve(args.model.as_deref())?;
    let mut config = RunConfig::new(spec);
    config.methods = parse_list::<Method>(&args.methods)?;
    config.removal = args.removal.parse::<RemovalStrategy>()?;
    config.seed = args.seed;
    config.ig_steps = args.ig_steps;
    config.lime_samples = args.lime_samples;
    config.timings = args.timings;
    // Flags are validated before the model is contacted.
    if config.methods.is_empty() {
        return Err(Error::Config("no explanation methods selected".into()));
    }
    let model = config.model.load()?;
    Ok((config, model))
}

fn resolve_target(raw: Option<&str>, model: &dyn Classifier<f64>) -> Result<TargetPolicy> {
    match raw {
        None => Ok(TargetPolicy::Predicted),
        Some(s) => match s.parse::<usize>() {
            Ok(i) => Ok(TargetPolicy::Fixed(i)),
            Err(_) => model
                .info()
                .label_index(s)
                .map(TargetPolicy::Fixed)
                .ok_or_else(|| Error::Config(format!("unknown target `{s}`; labels are {:?}", model.info().labels))),
        },
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn instance_command(args: &InstanceArgs, metrics: Option<(&str, Option<&str>)>) -> Result<()> {
    let format: Format = args.format.parse()?;
    let parsed_metrics = match metrics {
        Some((m, _)) => parse_list::<Metric>(m)?,
        None => Vec::new(),
    };
    let rationale: Option<Vec<bool>> = match metrics.and_then(|(_, r)| r) {
        None => None,
        Some(raw) => {
            let bits: Vec<u8> = serde_json::from_str(raw)
                .map_err(|e| Error::Config(format!("--rationale must be a JSON array of 0/1: {e}")))?;
            if bits.iter().any(|&b| b > 1) {
                return Err(Error::Config("--rationale entries must be 0 or 1".into()));
            }
            Some(bits.into_iter().map(|b| b == 1).collect())
        }
    };
    let (mut config, model) = base_config(&args.model)?;
    config.target = resolve_target(args.target.as_deref(), model.as_ref())?;
    config.metrics = parsed_metrics;
    if !config.metrics.is_empty() {
        config.validate(model.info())?;
    }
    let input = match rationale {
        Some(bits) => InstanceInput::with_rationale("input", &args.text, bits)?,
        None => InstanceInput::text("input", args.text.clone()),
    };
    let report = run_instance(model.as_ref(), &config, &input, None)?;
    write_output(args.out.as_deref(), &render_instance(&report, format)?)
}

fn benchmark_command(args: &BenchmarkArgs) -> Result<()> {
    let (mut config, model) = base_config(&args.model)?;
    config.metrics = parse_list::<Metric>(&args.metrics)?;
    config.target = args.target.parse()?;
    config.workers = args.workers;
    config.sample = SampleSpec {
        count: args.sample,
        label: args.label.clone(),
        split: args.split.as_deref().map(str::parse::<Split>).transpose()?,
    };
    config.validate(model.info())?;
    let corpus = load_corpus_jsonl(&args.corpus)?;
    let report = run_dataset(model.as_ref(), &config, &corpus, args.instances)?;
    std::fs::write(&args.out, render_dataset(&report, Format::Json)?)?;
    if let Some(html) = &args.html {
        std::fs::write(html, render_dataset(&report, Format::Html)?)?;
    }
    eprint!("{}", render_dataset(&report, Format::Table)?);
    Ok(())
}

fn convert_command(source: &ConvertSource) -> Result<()> {
    match source {
        ConvertSource::Hatexplain { input, out, divisions, split, union } => {
            let options = HateXplainOptions {
                aggregation: if *union { RationaleAggregation::Union } else { RationaleAggregation::Majority },
                divisions: divisions.clone(),
                default_split: split.as_deref().map(str::parse).transpose()?,
            };
            let conv = convert_hatexplain(input, out, &options)?;
            eprintln!(
                "wrote {} instances (K = {}); skipped {} without a majority label",
                conv.corpus.len(),
                conv.corpus.avg_rationale_len,
                conv.skipped.len()
            );
        }
        ConvertSource::Movies { input, out, docs, split } => {
            let docs = match docs {
                Some(d) => d.clone(),
                None => input.parent().unwrap_or(Path::new(".")).join("docs"),
            };
            let split = split.as_deref().map(str::parse).transpose()?;
            let corpus = convert_movies_eraser(&docs, input, out, split)?;
            eprintln!("wrote {} instances (K = {})", corpus.len(), corpus.avg_rationale_len);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Explain(args) => instance_command(args, None),
        Command::Evaluate { common, metrics, rationale } => {
            instance_command(common, Some((metrics.as_str(), rationale.as_deref())))
        }
        Command::Benchmark(args) => benchmark_command(args),
        Command::Dataset {
            command: DatasetCommand::Convert { source },
        } => convert_command(source),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
