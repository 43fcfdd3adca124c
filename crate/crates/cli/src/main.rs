use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hologn::analysis::{self, PmfMethod};
use hologn::experiments::{self, ExperimentConfig, SupervisedParts};
use hologn::glyphs::CELLS;
use hologn::{Codebook, Engine, GlyphSet, GnArraySpec, HDVector, PatternStore, SymbolPattern, MIN_DIMENSION};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{context}: {source}")]
    Data { context: String, source: hologn::Error },
    #[error(transparent)]
    Lib(#[from] hologn::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use hologn::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Data { .. } => 2,
            CliError::Lib(e) => match e {
                E::Parse { .. } | E::DimensionMismatch { .. } | E::PatternMismatch(_) | E::EmptyStore => 2,
                _ => 1,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_dim(s: &str) -> std::result::Result<usize, String> {
    let d: usize = s.parse().map_err(|e| format!("invalid dimension {s:?}: {e}"))?;
    if d < MIN_DIMENSION {
        return Err(format!("dimension {d} is below the minimum of {MIN_DIMENSION}"));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Xor,
    Complex,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Xor => Engine::Xor,
            EngineArg::Complex => Engine::Complex,
        }
    }
}

/// Holographic Graph Neuron: hypervector encoding, recall and analysis.
#[derive(Debug, Parser)]
#[command(name = "hologn", version)]
struct Cli {
    /// Hypervector dimension.
    #[arg(long, global = true, default_value = "10000", value_parser = parse_dim)]
    d: usize,
    /// Probability below which a density counts as negligible.
    #[arg(long, global = true, default_value_t = analysis::DEFAULT_THRESHOLD)]
    thr: f64,
    /// Master seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true, default_value = "0x484f4c4f474e2d31", value_parser = parse_seed)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a letter bitmap or a symbol string as a hypervector.
    Encode(EncodeArgs),
    /// Manage a pattern store file.
    #[command(subcommand)]
    Store(StoreCommand),
    /// Find stored patterns near a query vector.
    Query(QueryArgs),
    /// Largest odd number of components a bundle can hold and still decode.
    Capacity {
        /// Use the exact binomial instead of the normal approximation.
        #[arg(long)]
        exact: bool,
    },
    /// Smallest shared component count whose overlap is detectable.
    Sensitivity {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Expected distance between bundles of m and n components sharing c.
    Overlap {
        #[arg(long)]
        c: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Run an experiment and emit its CSV table.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Letter from the glyph set (one neuron per cell, binary alphabet).
    #[arg(long, conflicts_with = "symbols", required_unless_present = "symbols")]
    letter: Option<char>,
    /// Glyph file; the built-in 5x7 font when omitted.
    #[arg(long)]
    glyphs: Option<PathBuf>,
    /// Symbol string, either digits (`0110`) or comma/space separated.
    #[arg(long)]
    symbols: Option<String>,
    /// Symbols each neuron recognizes when encoding `--symbols`.
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
}

#[derive(Debug, Subcommand)]
enum StoreCommand {
    /// Append a vector file under a label, creating the store if needed.
    Add {
        /// Store file.
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        label: String,
        /// Vector file as written by `encode`.
        vector: PathBuf,
    },
    /// Print `row<TAB>label` for every stored pattern.
    List {
        #[arg(long)]
        store: PathBuf,
    },
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    store: PathBuf,
    /// Vector file as written by `encode`.
    vector: PathBuf,
    /// Return every row within this normalized distance instead of the best match.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, value_enum, default_value = "xor")]
    engine: EngineArg,
}

#[derive(Debug, Args)]
struct RecallArgs {
    #[arg(long)]
    glyphs: Option<PathBuf>,
    /// Query trials per letter and distortion level.
    #[arg(long)]
    trials: Option<usize>,
    /// Smallest number of flipped cells.
    #[arg(long)]
    min_bits: Option<usize>,
    /// Largest number of flipped cells.
    #[arg(long)]
    max_bits: Option<usize>,
    #[arg(long, value_enum, default_value = "xor")]
    engine: EngineArg,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Best-match recall of distorted letters against the clean alphabet.
    Oneshot(RecallArgs),
    /// Recall against class vectors bundled from noisy training examples.
    Supervised {
        #[command(flatten)]
        recall: RecallArgs,
        /// Training examples per class for the distortion sweep.
        #[arg(long)]
        examples: Option<usize>,
        /// Comma-separated example counts for the convergence sweep.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Flipped cells used in the convergence sweep.
        #[arg(long)]
        sweep_bits: Option<usize>,
        /// Only run the distortion sweep.
        #[arg(long, conflicts_with = "examples_only")]
        distortion_only: bool,
        /// Only run the convergence sweep.
        #[arg(long)]
        examples_only: bool,
    },
    /// Query time against stores of increasing size. Not reproducible.
    Timing {
        /// Comma-separated store sizes.
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated engines to time.
        #[arg(long, value_enum, value_delimiter = ',')]
        engines: Option<Vec<EngineArg>>,
    },
    /// Capacity, overlap and sensitivity tables.
    Curves {
        #[arg(long, value_enum)]
        table: Table,
        /// Monte-Carlo trials per point of the overlap table.
        #[arg(long)]
        overlap_trials: Option<usize>,
        /// Pattern size of the overlap table.
        #[arg(long)]
        overlap_size: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Table {
    Capacity,
    Overlap,
    Sensitivity,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = match &cli.command {
        Command::Encode(args) => cmd_encode(&cli, args)?,
        Command::Store(StoreCommand::Add { store, label, vector }) => {
            cmd_store_add(store, label, vector)?;
            return Ok(());
        }
        Command::Store(StoreCommand::List { store }) => {
            let store = load_store(store)?;
            store
                .labels()
                .iter()
                .enumerate()
                .map(|(i, l)| format!("{i}\t{l}\n"))
                .collect()
        }
        Command::Query(args) => cmd_query(args)?,
        Command::Capacity { exact } => {
            format!("{}\n", analysis::capacity(cli.d, cli.thr, method(*exact))?)
        }
        Command::Sensitivity { m, n, exact } => {
            format!("{}\n", analysis::sensitivity(cli.d, cli.thr, *m, *n, method(*exact))?)
        }
        Command::Overlap { c, m, n } => format!("{}\n", analysis::overlap_distance(*c, *m, *n)?),
        Command::Experiment(e) => cmd_experiment(&cli, e)?,
    };
    emit(cli.out.as_deref(), &out)
}

fn method(exact: bool) -> PmfMethod {
    if exact {
        PmfMethod::Exact
    } else {
        PmfMethod::Approx
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Writes through a sibling temporary file so a failed write never leaves a
/// truncated file behind.
fn write_file(path: &Path, text: &str) -> Result<()> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn data_err(path: &Path) -> impl FnOnce(hologn::Error) -> CliError + '_ {
    move |source| CliError::Data {
        context: path.display().to_string(),
        source,
    }
}

fn load_glyphs(path: Option<&Path>) -> Result<GlyphSet> {
    match path {
        Some(p) => GlyphSet::parse(&read_file(p)?, p.display().to_string()).map_err(data_err(p)),
        None => Ok(GlyphSet::builtin()),
    }
}

fn load_vector(path: &Path) -> Result<HDVector> {
    HDVector::from_text(&read_file(path)?).map_err(data_err(path))
}

fn load_store(path: &Path) -> Result<PatternStore> {
    PatternStore::from_text(&read_file(path)?).map_err(data_err(path))
}

fn cmd_encode(cli: &Cli, args: &EncodeArgs) -> Result<String> {
    let v = if let Some(letter) = args.letter {
        let glyphs = load_glyphs(args.glyphs.as_deref())?;
        let glyph = glyphs
            .get(letter.to_ascii_uppercase())
            .ok_or_else(|| CliError::Usage(format!("no glyph for {letter:?}")))?;
        let cb = Codebook::new(GnArraySpec::new(CELLS, 2, cli.d, cli.seed)?)?;
        cb.encode_bits(&glyph.bitmap.0)?
    } else {
        let text = args.symbols.as_deref().expect("clap requires --letter or --symbols");
        let pattern = SymbolPattern::parse(text).map_err(|source| CliError::Data {
            context: "--symbols".into(),
            source,
        })?;
        let cb = Codebook::new(GnArraySpec::new(pattern.len(), args.alphabet, cli.d, cli.seed)?)?;
        cb.encode(&pattern)?
    };
    Ok(v.to_text())
}

fn cmd_store_add(store_path: &Path, label: &str, vector: &Path) -> Result<()> {
    let v = load_vector(vector)?;
    let mut store = if store_path.exists() {
        load_store(store_path)?
    } else {
        PatternStore::new(v.dim())
    };
    store.insert(label, &v).map_err(|source| CliError::Data {
        context: vector.display().to_string(),
        source,
    })?;
    write_file(store_path, &store.to_text())
}

fn cmd_query(args: &QueryArgs) -> Result<String> {
    let store = load_store(&args.store)?;
    let q = load_vector(&args.vector)?;
    let engine = args.engine.into();
    let result = match args.xi {
        Some(xi) => store.recall_xi(&q, xi, engine),
        None => store.best_match(&q, engine),
    }
    .map_err(|e| match e {
        hologn::Error::XiOutOfRange(_) => CliError::Lib(e),
        other => CliError::Data {
            context: args.vector.display().to_string(),
            source: other,
        },
    })?;
    Ok(result
        .hits
        .iter()
        .map(|h| {
            format!(
                "{}\t{}\t{}\t{}\n",
                h.row,
                h.label,
                h.distance.mismatches,
                h.distance.as_f64()
            )
        })
        .collect())
}

fn base_config(cli: &Cli) -> ExperimentConfig {
    ExperimentConfig {
        d: cli.d,
        master_seed: cli.seed,
        thr: cli.thr,
        ..ExperimentConfig::default()
    }
}

fn apply_recall(cfg: &mut ExperimentConfig, r: &RecallArgs) {
    if let Some(t) = r.trials {
        cfg.trials = t;
    }
    if let Some(b) = r.min_bits {
        cfg.min_bits = b;
    }
    if let Some(b) = r.max_bits {
        cfg.max_bits = b;
    }
    cfg.engine = r.engine.into();
}

fn cmd_experiment(cli: &Cli, cmd: &ExperimentCommand) -> Result<String> {
    match cmd {
        ExperimentCommand::Oneshot(r) => {
            let mut cfg = base_config(cli);
            apply_recall(&mut cfg, r);
            let glyphs = load_glyphs(r.glyphs.as_deref())?;
            Ok(experiments::run_oneshot(&cfg, &glyphs)?.to_csv())
        }
        ExperimentCommand::Supervised {
            recall,
            examples,
            grid,
            sweep_bits,
            distortion_only,
            examples_only,
        } => {
            let mut cfg = ExperimentConfig {
                d: cli.d,
                master_seed: cli.seed,
                thr: cli.thr,
                ..ExperimentConfig::supervised()
            };
            apply_recall(&mut cfg, recall);
            if let Some(e) = examples {
                cfg.examples = *e;
            }
            if let Some(g) = grid {
                cfg.example_grid = g.clone();
            }
            if let Some(b) = sweep_bits {
                cfg.sweep_bits = *b;
            }
            let parts = SupervisedParts {
                distortion_sweep: !examples_only,
                example_sweep: !distortion_only,
            };
            let glyphs = load_glyphs(recall.glyphs.as_deref())?;
            Ok(experiments::run_supervised_parts(&cfg, &glyphs, parts)?.to_csv())
        }
        ExperimentCommand::Timing { ladder, reps, engines } => {
            let mut cfg = base_config(cli);
            if let Some(l) = ladder {
                cfg.timing_ladder = l.clone();
            }
            if let Some(r) = reps {
                cfg.timing_reps = *r;
            }
            if let Some(e) = engines {
                cfg.timing_engines = e.iter().map(|&e| e.into()).collect();
            }
            let table = experiments::run_timing(&cfg)?;
            if !table.engines_agree {
                eprintln!("warning: engines returned different distances");
            }
            Ok(table.to_csv())
        }
        ExperimentCommand::Curves {
            table,
            overlap_trials,
            overlap_size,
        } => {
            let mut cfg = base_config(cli);
            if let Some(t) = overlap_trials {
                cfg.overlap_trials = *t;
            }
            if let Some(s) = overlap_size {
                cfg.overlap_size = *s;
            }
            Ok(match table {
                Table::Capacity => experiments::capacity_csv(&experiments::capacity_curve(&cfg)?),
                Table::Overlap => experiments::overlap_csv(&experiments::overlap_curve(&cfg)?),
                Table::Sensitivity => experiments::sensitivity_csv(&experiments::sensitivity_curve(&cfg)?),
            })
        }
    }
}
