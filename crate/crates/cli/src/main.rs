//! `gqlcost` — operator CLI for the GraphQL query cost estimation toolkit.
//!
//! Every artifact-producing subcommand is a pure function of its inputs,
//! flags, and seed, and writes a `<artifact>.manifest.json` recording the
//! subcommand, flags, seed, input content hashes, and tool version. Errors
//! print a single `class: detail` line on stderr; exit codes are 0 (ok),
//! 1 (domain error), 2 (I/O error), 3 (usage error). The only environment
//! variable consulted is `GQLCOST_LOG` (log verbosity).

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use gqlcost::util::sha256_hex;
use gqlcost::{
    compare_on_records, default_thresholds, featurize_records, generate_synthetic, label_records,
    parse_query, parse_schema, robustness_csv, robustness_sweep, score_records, static_bound,
    sweep_csv, threshold_sweep, train, triples_csv, validate, CostConfig, Error, FieldFeatureSpace,
    GeneratorConfig, GraphFeatureParams, ListFill, Schema, StackedModel, TrainOptions,
    DEFAULT_MULTIPLIERS, DEFAULT_N_SIMS, DEFAULT_SAMPLE_SIZE, DEFAULT_SEARCH_BUDGET,
};

#[derive(Parser)]
#[command(
    name = "gqlcost",
    version,
    about = "GraphQL query cost estimation toolkit",
    propagate_version = true
)]
struct Cli {
    /// GraphQL schema file (SDL subset)
    #[arg(long, global = true, value_name = "FILE")]
    schema: Option<PathBuf>,

    /// Cost configuration JSON file (type weights, default list sizes,
    /// limit argument names)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output artifact path (or prefix for multi-file outputs)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a query, echoing the validated AST as JSON
    Parse {
        /// Query document file
        query: PathBuf,
    },
    /// Compute a query's static cost upper bound
    Static {
        /// Query document file
        query: PathBuf,
    },
    /// Label a JSONL corpus with exact complexities and static bounds
    Label {
        /// Corpus file (JSONL records with query and response)
        corpus: PathBuf,
    },
    /// Generate a labeled synthetic corpus
    Generate {
        /// Number of records to generate
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Maximum selection nesting depth
        #[arg(long, default_value_t = 5)]
        max_depth: usize,
        /// Maximum fields selected per selection set
        #[arg(long, default_value_t = 3)]
        max_fields: usize,
        /// Smallest generated limit-argument value
        #[arg(long, default_value_t = 0)]
        limit_lo: u64,
        /// Largest generated limit-argument value
        #[arg(long, default_value_t = 30)]
        limit_hi: u64,
        /// Response list fill policy: uniform (random length up to the
        /// limit) or full (exactly the limit)
        #[arg(long, default_value = "uniform")]
        fill: String,
    },
    /// Extract feature tables from a corpus as CSV files
    Featurize {
        /// Corpus file (JSONL)
        corpus: PathBuf,
        /// Graph embedding bucket count
        #[arg(long, default_value_t = 64)]
        dimension: usize,
        /// Weisfeiler–Lehman refinement rounds
        #[arg(long, default_value_t = 3)]
        wl_iterations: usize,
        /// Seed folded into the graph bucket hash
        #[arg(long, default_value_t = 0)]
        hash_seed: u64,
    },
    /// Train the stacked cost model on a labeled corpus
    Train {
        /// Labeled corpus file (JSONL)
        corpus: PathBuf,
        /// Pipeline candidates searched per feature space
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: usize,
        /// Graph embedding bucket count
        #[arg(long, default_value_t = 64)]
        dimension: usize,
        /// Weisfeiler–Lehman refinement rounds
        #[arg(long, default_value_t = 3)]
        wl_iterations: usize,
        /// Seed folded into the graph bucket hash
        #[arg(long, default_value_t = 0)]
        hash_seed: u64,
    },
    /// Estimate a query's cost with a trained model
    Predict {
        /// Query document file
        query: PathBuf,
        /// Trained model file
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Skip the schema/config hash check when loading the model
        #[arg(long)]
        force: bool,
    },
    /// Compare the model and the static bound on a labeled corpus
    Evaluate {
        /// Labeled corpus file (JSONL)
        corpus: PathBuf,
        /// Trained model file
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Skip the schema/config hash check when loading the model
        #[arg(long)]
        force: bool,
        /// Also write per-record (label, static, ml) triples as CSV
        #[arg(long, value_name = "FILE")]
        triples: Option<PathBuf>,
    },
    /// Simulate a rate-limit gateway across a threshold sweep
    Simulate {
        /// Labeled corpus file (JSONL)
        corpus: PathBuf,
        /// Trained model file
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Skip the schema/config hash check when loading the model
        #[arg(long)]
        force: bool,
        /// Comma-separated ascending thresholds (default: 10 points spanning
        /// the corpus)
        #[arg(long, value_delimiter = ',', value_name = "T1,T2,...")]
        thresholds: Vec<f64>,
        /// Simulation trials per threshold
        #[arg(long, default_value_t = DEFAULT_N_SIMS)]
        n_sims: usize,
        /// Queries sampled (with replacement) per trial
        #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
        sample_size: usize,
        /// Also write the full sweep report as JSON
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Sweep an inflated static bound against the model's estimate
    Robustness {
        /// Query document file (the base record)
        query: PathBuf,
        /// Trained model file
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Skip the schema/config hash check when loading the model
        #[arg(long)]
        force: bool,
        /// Comma-separated ascending multipliers, each ≥ 1
        /// (default: 1,2,5,10,50,100,1000)
        #[arg(long, value_delimiter = ',', value_name = "M1,M2,...")]
        multipliers: Vec<f64>,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

/// Tracks artifacts written during one invocation so a later failure can
/// remove partial outputs, and accumulates the manifest's flag and input
/// tables.
#[derive(Default)]
struct Run {
    written: Vec<PathBuf>,
    flags: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Manifest<'a> {
    subcommand: &'a str,
    flags: &'a BTreeMap<String, String>,
    seed: u64,
    inputs: &'a BTreeMap<String, String>,
    tool_version: String,
}

impl Run {
    fn flag(&mut self, name: &str, value: impl Display) {
        self.flags.insert(name.to_string(), value.to_string());
    }

    /// Reads a file, recording its content hash for the manifest.
    fn read(&mut self, path: &Path) -> Result<String, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        self.inputs.insert(
            path.display().to_string(),
            format!("sha256:{}", sha256_hex(text.as_bytes())),
        );
        Ok(text)
    }

    /// Atomically writes one artifact (write to `<name>.tmp`, then rename).
    fn write_artifact(&mut self, path: &Path, bytes: &[u8]) -> Result<(), Error> {
        let file_name = path
            .file_name()
            .ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?;
        let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
        std::fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
        if let Err(e) = std::fs::rename(&tmp, path) {
            let _ = std::fs::remove_file(&tmp);
            return Err(Error::io(path.display().to_string(), e));
        }
        self.written.push(path.to_path_buf());
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Writes the run manifest next to the primary artifact.
    fn write_manifest(&mut self, subcommand: &str, seed: u64, primary: &Path) -> Result<(), Error> {
        let manifest = Manifest {
            subcommand,
            flags: &self.flags,
            seed,
            inputs: &self.inputs,
            tool_version: format!("gqlcost-cli {}", env!("CARGO_PKG_VERSION")),
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("serialize manifest: {e}")))?;
        let path = PathBuf::from(format!("{}.manifest.json", primary.display()));
        self.write_artifact(&path, (json + "\n").as_bytes())
    }

    fn remove_partial_outputs(&self) {
        for path in &self.written {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                return 0;
            }
            _ => {
                let detail = e
                    .to_string()
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
                    .to_string();
                eprintln!("usage: {detail}");
                return 3;
            }
        },
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GQLCOST_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let mut run = Run::default();
    match execute(&cli, &mut run) {
        Ok(()) => 0,
        Err(Failure::Usage(message)) => {
            run.remove_partial_outputs();
            eprintln!("usage: {message}");
            3
        }
        Err(Failure::Domain(error)) => {
            run.remove_partial_outputs();
            eprintln!("{}: {error}", error.class());
            if error.class().starts_with("io.") {
                2
            } else {
                1
            }
        }
    }
}

fn load_schema(cli: &Cli, run: &mut Run) -> CliResult<Schema> {
    let path = cli
        .schema
        .as_ref()
        .ok_or_else(|| usage("--schema <FILE> is required"))?;
    run.flag("schema", path.display());
    let text = run.read(path)?;
    Ok(parse_schema(&text)?)
}

fn load_config(cli: &Cli, run: &mut Run, schema: &Schema) -> CliResult<CostConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| usage("--config <FILE> is required"))?;
    run.flag("config", path.display());
    let text = run.read(path)?;
    let config: CostConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.check_against(schema)?;
    Ok(config)
}

fn load_corpus(path: &Path, run: &mut Run) -> CliResult<Vec<gqlcost::DatasetRecord>> {
    run.flag("corpus", path.display());
    let text = run.read(path)?;
    Ok(gqlcost::read_jsonl(text.as_bytes())?)
}

fn load_model(
    path: &Path,
    run: &mut Run,
    schema: &Schema,
    config: &CostConfig,
    force: bool,
) -> CliResult<StackedModel> {
    run.flag("model", path.display());
    run.flag("force", force);
    run.read(path)?; // record the content hash (and surface I/O errors)
    Ok(StackedModel::load(path, schema, config, force)?)
}

fn required_out(cli: &Cli, run: &mut Run) -> CliResult<PathBuf> {
    let path = cli
        .out
        .as_ref()
        .ok_or_else(|| usage("--out <PATH> is required for this subcommand"))?;
    run.flag("out", path.display());
    Ok(path.clone())
}

/// Prints to stdout, or writes the artifact plus its manifest when `--out`
/// was given.
fn emit(
    cli: &Cli,
    run: &mut Run,
    subcommand: &str,
    stdout_text: &str,
    artifact_bytes: &[u8],
) -> CliResult<()> {
    match &cli.out {
        None => {
            println!("{stdout_text}");
            Ok(())
        }
        Some(path) => {
            run.flag("out", path.display());
            run.write_artifact(path, artifact_bytes)?;
            run.write_manifest(subcommand, cli.seed, &path.clone())?;
            Ok(())
        }
    }
}

fn execute(cli: &Cli, run: &mut Run) -> CliResult<()> {
    run.flag("seed", cli.seed);
    match &cli.command {
        Command::Parse { query } => {
            let schema = load_schema(cli, run)?;
            run.flag("query", query.display());
            let text = run.read(query)?;
            let typed = validate(&schema, &parse_query(&text)?)?;
            let json = serde_json::to_string_pretty(&typed)
                .map_err(|e| Error::Config(format!("serialize AST: {e}")))?;
            emit(cli, run, "parse", &json, (json.clone() + "\n").as_bytes())
        }
        Command::Static { query } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            run.flag("query", query.display());
            let text = run.read(query)?;
            let typed = validate(&schema, &parse_query(&text)?)?;
            let bound = static_bound(&config, &typed)?;
            let json = serde_json::to_string_pretty(&serde_json::json!({ "staticBound": bound }))
                .map_err(|e| Error::Config(format!("serialize bound: {e}")))?;
            emit(cli, run, "static", &bound.to_string(), (json + "\n").as_bytes())
        }
        Command::Label { corpus } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let records = load_corpus(corpus, run)?;
            let out = required_out(cli, run)?;
            let (labeled, diagnostics) = label_records(&schema, &config, &records);
            for d in &diagnostics {
                eprintln!("record {}: {}: {}", d.index, d.class, d.message);
            }
            log::info!(
                "labeled {} of {} records ({} diagnostics)",
                labeled.len(),
                records.len(),
                diagnostics.len()
            );
            let mut bytes = Vec::new();
            gqlcost::write_jsonl(&mut bytes, &labeled)?;
            run.write_artifact(&out, &bytes)?;
            run.write_manifest("label", cli.seed, &out)?;
            Ok(())
        }
        Command::Generate {
            count,
            max_depth,
            max_fields,
            limit_lo,
            limit_hi,
            fill,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let out = required_out(cli, run)?;
            run.flag("count", count);
            run.flag("max-depth", max_depth);
            run.flag("max-fields", max_fields);
            run.flag("limit-lo", limit_lo);
            run.flag("limit-hi", limit_hi);
            run.flag("fill", fill);
            let generator = GeneratorConfig {
                max_depth: *max_depth,
                max_fields_per_level: *max_fields,
                list_limit_range: (*limit_lo, *limit_hi),
                list_fill: fill.parse::<ListFill>()?,
                seed: cli.seed,
            };
            let records = generate_synthetic(&schema, &config, &generator, *count)?;
            let mut bytes = Vec::new();
            gqlcost::write_jsonl(&mut bytes, &records)?;
            run.write_artifact(&out, &bytes)?;
            run.write_manifest("generate", cli.seed, &out)?;
            Ok(())
        }
        Command::Featurize {
            corpus,
            dimension,
            wl_iterations,
            hash_seed,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let records = load_corpus(corpus, run)?;
            let out = required_out(cli, run)?;
            run.flag("dimension", dimension);
            run.flag("wl-iterations", wl_iterations);
            run.flag("hash-seed", hash_seed);
            let params = GraphFeatureParams {
                dimension: *dimension,
                wl_iterations: *wl_iterations,
                hash_seed: *hash_seed,
            };
            let space = FieldFeatureSpace::from_schema(&schema);
            let tables = featurize_records(&schema, &config, &space, &params, &records)?;
            for (suffix, headers, matrix) in [
                ("field", gqlcost::features::field_headers(&space), &tables.field),
                ("graph", gqlcost::features::graph_headers(&params), &tables.graph),
                ("summary", gqlcost::features::summary_headers(), &tables.summary),
            ] {
                let path = PathBuf::from(format!("{}_{suffix}.csv", out.display()));
                let csv = feature_csv(&headers, matrix, &tables.labels);
                run.write_artifact(&path, csv.as_bytes())?;
            }
            run.write_manifest("featurize", cli.seed, &out)?;
            Ok(())
        }
        Command::Train {
            corpus,
            budget,
            dimension,
            wl_iterations,
            hash_seed,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let records = load_corpus(corpus, run)?;
            let out = required_out(cli, run)?;
            run.flag("budget", budget);
            run.flag("dimension", dimension);
            run.flag("wl-iterations", wl_iterations);
            run.flag("hash-seed", hash_seed);
            let options = TrainOptions {
                seed: cli.seed,
                search_budget: *budget,
                graph_params: GraphFeatureParams {
                    dimension: *dimension,
                    wl_iterations: *wl_iterations,
                    hash_seed: *hash_seed,
                },
            };
            let model = train(&schema, &config, &records, &options)?;
            run.write_artifact(&out, (model.to_json()? + "\n").as_bytes())?;
            run.write_manifest("train", cli.seed, &out)?;
            Ok(())
        }
        Command::Predict {
            query,
            model,
            force,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let model = load_model(model, run, &schema, &config, *force)?;
            run.flag("query", query.display());
            let text = run.read(query)?;
            let estimate = model.estimate(&schema, &config, &text)?;
            let json = serde_json::to_string_pretty(&serde_json::json!({ "estimate": estimate }))
                .map_err(|e| Error::Config(format!("serialize estimate: {e}")))?;
            emit(cli, run, "predict", &estimate.to_string(), (json + "\n").as_bytes())
        }
        Command::Evaluate {
            corpus,
            model,
            force,
            triples,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let model = load_model(model, run, &schema, &config, *force)?;
            let records = load_corpus(corpus, run)?;
            let report = compare_on_records(&model, &schema, &config, &records)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Config(format!("serialize report: {e}")))?;
            if let Some(path) = triples {
                run.flag("triples", path.display());
                run.write_artifact(path, triples_csv(&report).as_bytes())?;
            }
            emit(cli, run, "evaluate", &json, (json.clone() + "\n").as_bytes())?;
            if cli.out.is_none() {
                if let Some(path) = triples {
                    // The triples CSV was the only artifact; record the run
                    // alongside it.
                    run.write_manifest("evaluate", cli.seed, path)?;
                }
            }
            Ok(())
        }
        Command::Simulate {
            corpus,
            model,
            force,
            thresholds,
            n_sims,
            sample_size,
            json,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let model = load_model(model, run, &schema, &config, *force)?;
            let records = load_corpus(corpus, run)?;
            run.flag("n-sims", n_sims);
            run.flag("sample-size", sample_size);
            let scored = score_records(&model, &schema, &config, &records)?;
            let thresholds = if thresholds.is_empty() {
                default_thresholds(&scored)?
            } else {
                thresholds.clone()
            };
            run.flag(
                "thresholds",
                thresholds
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            );
            log::info!("sweeping {} thresholds over {} records", thresholds.len(), scored.len());
            let points = threshold_sweep(&scored, &thresholds, *n_sims, *sample_size, cli.seed)?;
            if let Some(path) = json {
                run.flag("json", path.display());
                let report = serde_json::to_string_pretty(&points)
                    .map_err(|e| Error::Config(format!("serialize sweep: {e}")))?;
                run.write_artifact(path, (report + "\n").as_bytes())?;
            }
            let csv = sweep_csv(&points);
            emit(cli, run, "simulate", csv.trim_end(), csv.as_bytes())?;
            if cli.out.is_none() {
                if let Some(path) = json {
                    run.write_manifest("simulate", cli.seed, path)?;
                }
            }
            Ok(())
        }
        Command::Robustness {
            query,
            model,
            force,
            multipliers,
        } => {
            let schema = load_schema(cli, run)?;
            let config = load_config(cli, run, &schema)?;
            let model = load_model(model, run, &schema, &config, *force)?;
            run.flag("query", query.display());
            let text = run.read(query)?;
            let multipliers = if multipliers.is_empty() {
                DEFAULT_MULTIPLIERS.to_vec()
            } else {
                multipliers.clone()
            };
            run.flag(
                "multipliers",
                multipliers
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            );
            let points = robustness_sweep(&model, &schema, &config, &text, &multipliers)?;
            let csv = robustness_csv(&points);
            emit(cli, run, "robustness", csv.trim_end(), csv.as_bytes())
        }
    }
}

/// Renders one feature matrix as CSV with a trailing label column (empty
/// where a record is unlabeled).
fn feature_csv(headers: &[String], matrix: &gqlcost::Mat64, labels: &[Option<f64>]) -> String {
    let mut out = headers.join(",");
    out.push_str(",label\n");
    for (i, label) in labels.iter().enumerate().take(matrix.n_rows()) {
        let row: Vec<String> = matrix.row(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push(',');
        if let Some(label) = label {
            out.push_str(&label.to_string());
        }
        out.push('\n');
    }
    out
}
