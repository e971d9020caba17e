use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use squery::bench::{self, BenchConfig};
use squery::compiler::{self, CompileOptions};
use squery::dsl;
use squery::oracle;
use squery::query::{batch_query_files, Program, QueryError, QueryOptions};
use squery::synth::{self, SynthConfig};
use squery::trace::LabelTrace;
use squery::world::RoadMap;

#[derive(Parser)]
#[command(name = "squery", version, about = "Query label traces with scenario programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a program and write its state machines.
    Compile(CompileArgs),
    /// Match a program against trace files or directories of traces.
    Match(MatchArgs),
    /// Generate synthetic traces from a program.
    Gen(GenArgs),
    /// Decide a match with the brute-force reference matcher.
    Oracle(OracleArgs),
    /// Runtime sweeps over trace length or object count, as CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// Road map JSON; defaults to a straight two-lane road.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Completion condition for a primitive, as `Primitive=expression`.
    #[arg(long = "complete", value_name = "PRIMITIVE=EXPR")]
    completions: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Emit {
    Json,
    Dot,
    Both,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct CompileArgs {
    program: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    emit: Emit,
    /// Output path prefix; defaults to the program path without extension.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct MatchArgs {
    program: PathBuf,
    /// Trace files or directories containing `*.json` traces.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(short = 'm', long = "min-duration")]
    min_duration: usize,
    /// Per-trace timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    find_all: bool,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenArgs {
    program: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    length: usize,
    /// Number of traces; trace `k` uses seed `seed + k`.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output file (one trace) or directory (several).
    #[arg(short, long)]
    output: PathBuf,
    /// Replace object ids with opaque, shuffled ones.
    #[arg(long)]
    shuffle_ids: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleArgs {
    program: PathBuf,
    trace: PathBuf,
    #[arg(short = 'm', long = "min-duration")]
    min_duration: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Sweep {
    Duration,
    Objects,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    sweep: Sweep,
    /// Two-object program to sweep.
    program: PathBuf,
    #[arg(long, default_value_t = 10)]
    traces: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-query timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Trace length for the object sweep.
    #[arg(long, default_value_t = 100)]
    length: usize,
    #[command(flatten)]
    common: Common,
}

type Res<T> = Result<T, String>;

fn load_map(p: &Option<PathBuf>) -> Res<RoadMap> {
    match p {
        Some(p) => RoadMap::load(p).map_err(|e| e.to_string()),
        None => Ok(synth::default_map()),
    }
}

fn compile_options(c: &Common) -> Res<CompileOptions> {
    let mut opts = CompileOptions::default();
    for spec in &c.completions {
        let (name, cond) = spec
            .split_once('=')
            .ok_or_else(|| format!("--complete expects PRIMITIVE=EXPR, got '{spec}'"))?;
        opts = opts.with_completion(name.trim(), cond).map_err(|e| e.to_string())?;
    }
    Ok(opts)
}

fn read_ast(p: &Path) -> Res<dsl::ScenarioAst> {
    let src = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
    dsl::parse(&src).map_err(|e| format!("{}: {e}", p.display()))
}

fn load_program(p: &Path, c: &Common) -> Res<Program> {
    Program::compile(read_ast(p)?, &compile_options(c)?).map_err(|e| format!("{}: {e}", p.display()))
}

fn timeout(secs: Option<f64>) -> Res<Option<Duration>> {
    match secs {
        Some(s) if !(s.is_finite() && s > 0.0) => Err("timeout must be positive".into()),
        Some(s) => Ok(Some(Duration::from_secs_f64(s))),
        None => Ok(None),
    }
}

fn expand(paths: &[PathBuf]) -> Res<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| format!("cannot list {}: {e}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn cmd_compile(a: CompileArgs) -> Res<ExitCode> {
    let program = load_program(&a.program, &a.common)?;
    let prefix = a.output.unwrap_or_else(|| a.program.with_extension(""));
    let mut written = Vec::new();
    if matches!(a.emit, Emit::Json | Emit::Both) {
        let p = PathBuf::from(format!("{}.hfsm.json", prefix.display()));
        std::fs::write(&p, compiler::to_json(&program.bundle))
            .map_err(|e| format!("cannot write {}: {e}", p.display()))?;
        written.push(p);
    }
    if matches!(a.emit, Emit::Dot | Emit::Both) {
        let p = PathBuf::from(format!("{}.dot", prefix.display()));
        std::fs::write(&p, compiler::to_dot(&program.bundle))
            .map_err(|e| format!("cannot write {}: {e}", p.display()))?;
        written.push(p);
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_match(a: MatchArgs) -> Res<ExitCode> {
    if a.min_duration == 0 {
        return Err("--min-duration must be at least 1".into());
    }
    if let Some(j) = a.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let program = load_program(&a.program, &a.common)?;
    let map = load_map(&a.common.map)?;
    let opts = QueryOptions {
        find_all: a.find_all,
        timeout: timeout(a.timeout)?,
    };
    let paths = expand(&a.traces)?;
    let results = batch_query_files(&program, &paths, a.min_duration, &map, &opts);
    let (mut any_match, mut any_error) = (false, false);
    for (path, r) in paths.iter().zip(results) {
        let name = path.display().to_string();
        let record = match &r {
            Ok(res) => {
                any_match |= res.matched;
                let mut v = serde_json::to_value(res).expect("result serializes");
                v["trace"] = json!(name);
                v
            }
            Err(QueryError::Timeout { stats }) => {
                json!({"trace": name, "matched": false, "timeout": true, "stats": stats})
            }
            Err(e) => {
                any_error = true;
                json!({"trace": name, "error": e.to_string()})
            }
        };
        match a.format {
            Format::Json => println!("{record}"),
            Format::Text => match &r {
                Ok(res) => match &res.witness {
                    Some(w) => println!("{name}: match {} at frame {}", w.correspondence, w.window_start),
                    None => println!("{name}: no match"),
                },
                Err(QueryError::Timeout { .. }) => println!("{name}: timeout"),
                Err(e) => println!("{name}: error: {e}"),
            },
        }
        if let Err(e) = &r {
            if !matches!(e, QueryError::Timeout { .. }) {
                eprintln!("{name}: {e}");
            }
        }
    }
    Ok(if any_match {
        ExitCode::SUCCESS
    } else if any_error {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    })
}

fn cmd_gen(a: GenArgs) -> Res<ExitCode> {
    let ast = read_ast(&a.program)?;
    let map = load_map(&a.common.map)?;
    let compile = compile_options(&a.common)?;
    if a.count == 0 {
        return Err("--count must be at least 1".into());
    }
    if a.count > 1 {
        std::fs::create_dir_all(&a.output).map_err(|e| format!("cannot create {}: {e}", a.output.display()))?;
    }
    for k in 0..a.count {
        let cfg = SynthConfig {
            shuffle_ids: a.shuffle_ids,
            compile: compile.clone(),
            ..SynthConfig::new(a.seed + k as u64, a.length)
        };
        let trace = synth::generate_trace(&ast, &map, &cfg).map_err(|e| e.to_string())?;
        let path = if a.count > 1 {
            a.output.join(format!("trace_{:04}.json", k))
        } else {
            a.output.clone()
        };
        trace.save(&path).map_err(|e| e.to_string())?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> Res<ExitCode> {
    let program = load_program(&a.program, &a.common)?;
    let map = load_map(&a.common.map)?;
    let trace = LabelTrace::load(&a.trace).map_err(|e| e.to_string())?;
    let matched = oracle::brute_force_match(&program, &trace, a.min_duration, &map).map_err(|e| e.to_string())?;
    println!(
        "{}",
        json!({"trace": a.trace.display().to_string(), "matched": matched})
    );
    Ok(if matched { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_bench(a: BenchArgs) -> Res<ExitCode> {
    let ast = read_ast(&a.program)?;
    let map = load_map(&a.common.map)?;
    let cfg = BenchConfig {
        traces: a.traces,
        base_seed: a.seed,
        timeout: timeout(Some(a.timeout))?,
        ..BenchConfig::default()
    };
    let csv = match a.sweep {
        Sweep::Duration => {
            let rows = bench::duration_sweep(&ast, &map, &bench::DEFAULT_LENGTHS, &cfg).map_err(|e| e.to_string())?;
            bench::to_csv(&rows, "length")
        }
        Sweep::Objects => {
            let rows = bench::object_sweep(&ast, &map, &bench::DEFAULT_OBJECT_COUNTS, a.length, a.length / 2, &cfg)
                .map_err(|e| e.to_string())?;
            bench::to_csv(&rows, "objects")
        }
    };
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SQUERY_LOG", "warn")).init();
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Match(a) => cmd_match(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match r {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
