use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rg_bench::{benchmark, compare, playout_rng, BenchConfig, BenchError};
use rg_cli::play::{parse_seat, play, seat_map, PlayError, Seat};
use rg_core::engine::{Cache, CompileError, EngineError, Game, Options, DEFAULT_BUDGET};
use rg_core::transforms::{expand_shorthands, run_pipeline, PassId, PipelineConfig, TransformError};
use rg_core::validate::{check_proper, inject_implicit_definitions, validate_static, ProperBudget};
use rg_core::{diag, dot, parse_game, render_game, Diagnostic, GameDescription};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rg", version, about = "Check, optimize, count, benchmark and play Regular Games descriptions")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Transitions allowed per move-generation query.
    #[arg(long, global = true, env = "RG_BUDGET")]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a description.
    Check {
        file: PathBuf,
        /// Also model-check the five proper-description conditions.
        #[arg(long)]
        proper: bool,
        /// Distinct states the model checker may explore.
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
    },
    /// Run the optimization pipeline.
    Optimize {
        file: PathBuf,
        /// Write the result here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write `NN_passname.rg` after every pass that changed the game.
        #[arg(long, value_name = "DIR")]
        emit_snapshots: Option<PathBuf>,
        /// `default`, `all`, `none` or a comma-separated list of pass names.
        #[arg(long, default_value = "default")]
        passes: String,
    },
    /// Count move sequences per depth.
    Perft {
        file: PathBuf,
        depth: usize,
        /// Also count complete plays.
        #[arg(long)]
        plays: bool,
    },
    /// Measure random playouts.
    Bench {
        file: PathBuf,
        /// Fixed number of playouts.
        #[arg(long, conflicts_with = "seconds")]
        playouts: Option<u64>,
        /// Run for this many seconds instead.
        #[arg(long)]
        seconds: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Benchmark the optimized game.
        #[arg(long, conflicts_with = "compare")]
        optimized: bool,
        /// Benchmark raw and optimized games and report the ratio.
        #[arg(long)]
        compare: bool,
        /// Leave the wall-clock measurements out of the JSON report.
        #[arg(long)]
        no_timing: bool,
    },
    /// Play in the terminal.
    Play {
        file: PathBuf,
        /// `player=human` or `player=random`; unlisted players are human.
        #[arg(long = "seat", value_parser = parse_seat)]
        seats: Vec<(String, Seat)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the rules automaton in Graphviz format.
    Dot {
        file: PathBuf,
        /// Draw the optimized game.
        #[arg(long)]
        optimized: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}: invalid description")]
    Invalid(PathBuf, Vec<Diagnostic>),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Play(PlayError),
    #[error("optimized game fails validation: {0}")]
    Broken(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Play(PlayError::Io(_)) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn print_diagnostics(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", path.display());
    }
}

/// Parsed description and its diagnostics, implicit definitions injected
/// when parsing succeeded.
fn validated(text: &str) -> (Option<GameDescription>, Vec<Diagnostic>) {
    let (parsed, mut diags) = parse_game(text);
    if diag::has_errors(&diags) {
        return (None, diags);
    }
    let (g, injected) = inject_implicit_definitions(&parsed);
    let failed = diag::has_errors(&injected);
    diags.extend(injected);
    if failed {
        return (None, diags);
    }
    diags.extend(validate_static(&g));
    if diag::has_errors(&diags) {
        (None, diags)
    } else {
        (Some(g), diags)
    }
}

/// Validated description with shorthands expanded.
fn prepared(path: &Path) -> Result<GameDescription> {
    let text = read(path)?;
    match validated(&text) {
        (Some(g), _) => Ok(expand_shorthands(&g)),
        (None, diags) => Err(CliError::Invalid(path.to_path_buf(), diags)),
    }
}

fn options(budget: Option<u64>) -> Options {
    Options { budget: budget.unwrap_or(DEFAULT_BUDGET), ..Options::default() }
}

fn pipeline_config(list: &str) -> Result<PipelineConfig> {
    match list {
        "default" => Ok(PipelineConfig::default()),
        "none" => Ok(PipelineConfig::none()),
        "all" => Ok(PipelineConfig::only(PassId::ALL.iter().copied().filter(|p| p.is_safe()))),
        list => {
            let passes = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<Vec<PassId>, _>>()?;
            Ok(PipelineConfig::only(passes))
        }
    }
}

fn optimized(g: &GameDescription) -> Result<GameDescription> {
    Ok(run_pipeline(g, &PipelineConfig::default())?.game)
}

fn cmd_check(cli: &Cli, path: &Path, proper: bool, max_states: usize) -> Result<()> {
    let text = read(path)?;
    let (g, diags) = validated(&text);
    let mut report = None;
    if let (Some(g), true) = (&g, proper) {
        let game = Game::compile(&expand_shorthands(g))?;
        let budget = ProperBudget { max_states, traversal: options(cli.budget).budget };
        report = Some(check_proper(&game, &budget));
    }
    let ok = g.is_some() && report.as_ref().is_none_or(|r| r.all_pass());
    if cli.json {
        let out = json!({
            "file": path.display().to_string(),
            "ok": ok,
            "diagnostics": diags,
            "proper": report,
        });
        println!("{out}");
    } else {
        for d in &diags {
            println!("{}:{d}", path.display());
        }
        if let Some(r) = &report {
            for c in &r.results {
                println!("{c}");
            }
            println!("explored {} states", r.states);
        }
        println!("{}: {}", path.display(), if ok { "ok" } else { "FAILED" });
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Failed(String::new()))
    }
}

fn cmd_optimize(path: &Path, out: Option<&Path>, snapshots: Option<&Path>, passes: &str) -> Result<()> {
    let config = pipeline_config(passes)?;
    let text = if config.passes.is_empty() {
        let text = read(path)?;
        if let (None, diags) = validated(&text) {
            return Err(CliError::Invalid(path.to_path_buf(), diags));
        }
        render_game(&parse_game(&text).0)
    } else {
        let g = prepared(path)?;
        let result = run_pipeline(&g, &config)?;
        let errors: Vec<Diagnostic> = validate_static(&result.game).into_iter().filter(Diagnostic::is_error).collect();
        if let Some(e) = errors.first() {
            return Err(CliError::Broken(e.to_string()));
        }
        for s in &result.stats {
            eprintln!("{}", s.to_json());
        }
        if let Some(w) = &result.warning {
            eprintln!("warning: {w}");
        }
        if let Some(dir) = snapshots {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
            for (name, body) in result.snapshot_files() {
                write(&dir.join(name), body)?;
            }
        }
        render_game(&result.game)
    };
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_perft(cli: &Cli, path: &Path, depth: usize, plays: bool) -> Result<()> {
    let game = Game::compile(&prepared(path)?)?;
    let mut cache = Cache::new(options(cli.budget));
    let start = game.initial_state();
    let p = game.perft(&start, depth, &mut cache)?;
    let complete = if plays { Some(game.count_complete_plays(&start, &mut cache)?) } else { None };
    if cli.json {
        let goals: BTreeMap<String, u64> = p
            .terminal_goals
            .iter()
            .map(|(g, n)| (g.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "), *n))
            .collect();
        let mut out = json!({ "depth": depth, "counts": p.counts, "terminal_goals": goals });
        if let Some(n) = complete {
            out["complete_plays"] = json!(n);
        }
        println!("{out}");
    } else {
        let counts: Vec<String> = p.counts.iter().map(u64::to_string).collect();
        println!("{}", counts.join(" "));
        if let Some(n) = complete {
            println!("complete plays: {n}");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    cli: &Cli,
    path: &Path,
    playouts: Option<u64>,
    seconds: Option<f64>,
    seed: u64,
    workers: usize,
    format: Format,
    use_optimized: bool,
    with_compare: bool,
    no_timing: bool,
) -> Result<()> {
    let raw = prepared(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut cfg = match seconds {
        Some(s) if s.is_finite() && s > 0.0 => BenchConfig::duration(Duration::from_secs_f64(s), seed),
        Some(_) => return Err(CliError::Failed("--seconds must be positive".into())),
        None => BenchConfig::count(playouts.unwrap_or(1000), seed),
    };
    cfg.workers = workers.max(1);
    cfg.options = options(cli.budget);
    let json_of = |r: &rg_bench::BenchReport| {
        if no_timing {
            r.deterministic_json()
        } else {
            serde_json::to_value(r).expect("report")
        }
    };
    if with_compare {
        let c = compare(&Game::compile(&raw)?, &Game::compile(&optimized(&raw)?)?, &name, &cfg)?;
        match format {
            Format::Json => {
                let out = json!({ "raw": json_of(&c.raw), "optimized": json_of(&c.optimized), "ratio": c.ratio });
                println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            }
            Format::Table => {
                println!(
                    "-- raw\n{}-- optimized\n{}ratio           {:.3}",
                    c.raw.table(),
                    c.optimized.table(),
                    c.ratio
                );
            }
        }
        return Ok(());
    }
    let desc = if use_optimized { optimized(&raw)? } else { raw };
    let report = benchmark(&Game::compile(&desc)?, &name, &cfg);
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&json_of(&report)).expect("json")),
        Format::Table => print!("{}", report.table()),
    }
    Ok(())
}

fn cmd_play(cli: &Cli, path: &Path, seats: &[(String, Seat)], seed: u64) -> Result<()> {
    let game = Game::compile(&prepared(path)?)?;
    let seats = seat_map(&game, seats, Seat::Human).map_err(CliError::Play)?;
    let mut rng = playout_rng(seed, 0);
    let stdin = io::stdin();
    let log = play(&game, &seats, options(cli.budget), &mut rng, stdin.lock(), io::stdout().lock())
        .map_err(CliError::Play)?;
    if cli.json && log.finished {
        println!("{}", json!({ "goals": log.goals }));
    }
    Ok(())
}

fn cmd_dot(path: &Path, use_optimized: bool) -> Result<()> {
    let text = read(path)?;
    let g = match validated(&text) {
        (Some(g), _) => g,
        (None, diags) => return Err(CliError::Invalid(path.to_path_buf(), diags)),
    };
    let g = if use_optimized { optimized(&expand_shorthands(&g))? } else { g };
    print!("{}", dot::to_dot(&g));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Check { file, proper, max_states } => cmd_check(cli, file, *proper, *max_states),
        Command::Optimize { file, out, emit_snapshots, passes } => {
            cmd_optimize(file, out.as_deref(), emit_snapshots.as_deref(), passes)
        }
        Command::Perft { file, depth, plays } => cmd_perft(cli, file, *depth, *plays),
        Command::Bench { file, playouts, seconds, seed, workers, format, optimized, compare, no_timing } => {
            cmd_bench(cli, file, *playouts, *seconds, *seed, *workers, *format, *optimized, *compare, *no_timing)
        }
        Command::Play { file, seats, seed } => cmd_play(cli, file, seats, *seed),
        Command::Dot { file, optimized } => cmd_dot(file, *optimized),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Invalid(path, diags) => print_diagnostics(path, diags),
                CliError::Failed(msg) if msg.is_empty() => {}
                other => eprintln!("error: {other}"),
            }
            let _ = io::stdout().flush();
            ExitCode::from(e.exit_code())
        }
    }
}
