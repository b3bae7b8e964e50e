use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value as Json};

use stepwise::interp::{execute, ExecutionLimits};
use stepwise::pipeline::contamination::{contamination_scan, parse_vectors};
use stepwise::pipeline::filter::{filter_difficulty, filter_execution, ExecVerdict};
use stepwise::pipeline::library::{build_library_io_case, LibraryTask};
use stepwise::pipeline::mutate::{mutate_inputs, ValuePool};
use stepwise::pipeline::oracle::oracle_from_name;
use stepwise::pipeline::stats::{corpus_stats, StatsRecord};
use stepwise::pipeline::DatasetInstance;
use stepwise::questions::{ask, render_prompt, serialize_question_set};
use stepwise::rewards::{score_batch, score_line, BatchConfig, Mode, VerifyOptions};
use stepwise::syntax::{called_function, parse, scan_blacklist, Blacklist, SourceProgram};
use stepwise::trace::{serialize_trace, Status};

/// Records scored per parallel batch when streaming.
const CHUNK: usize = 256;

#[derive(Parser)]
#[command(name = "stepwise", version, about = "Traced execution, white-box questions, reward scoring and dataset filtering for a Python subset")]
struct Cli {
    /// Worker threads for record-parallel commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct LimitArgs {
    /// Statement-execution budget.
    #[arg(long, default_value_t = 100_000)]
    fuel: u64,
    /// Cap on captured print output, in characters.
    #[arg(long = "max-output", default_value_t = 4096)]
    max_output: usize,
    /// Cap on any single rendered value, in characters.
    #[arg(long = "max-render", default_value_t = 2048)]
    max_render: usize,
}

impl LimitArgs {
    fn limits(self) -> Result<ExecutionLimits> {
        Ok(ExecutionLimits::new(self.fuel, self.max_output, self.max_render)?)
    }
}

#[derive(Args, Clone)]
struct ScoreArgs {
    /// Mode for records that do not name one.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// White-box weight for records that do not carry one.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Require CF answers to match indentation exactly (`--strict-cf false` relaxes it).
    #[arg(long = "strict-cf", action = ArgAction::Set, num_args = 0..=1, default_value_t = true, default_missing_value = "true")]
    strict_cf: bool,
    /// Compare DF values as exact strings instead of as literals.
    #[arg(long = "strict-df", action = ArgAction::Set, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    strict_df: bool,
    #[command(flatten)]
    limits: LimitArgs,
}

impl ScoreArgs {
    fn config(&self) -> Result<BatchConfig> {
        if !(0.0..=1.0).contains(&self.alpha) {
            bail!("--alpha must lie in [0, 1]");
        }
        Ok(BatchConfig {
            mode: self.mode.map(Mode::from),
            alpha: self.alpha,
            verify: VerifyOptions {
                strict_cf: self.strict_cf,
                strict_df: self.strict_df,
            },
            limits: self.limits.limits()?,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Whitebox,
    Oi,
    Io,
    Gen,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Whitebox => Mode::Whitebox,
            ModeArg::Oi => Mode::Oi,
            ModeArg::Io => Mode::Io,
            ModeArg::Gen => Mode::Gen,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AskFormat {
    /// One JSON object holding the question set and the prompt.
    Json,
    /// Only the prompt text.
    Prompt,
    /// Only the line-delimited question-set records.
    Qset,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a call and print its line-delimited trace.
    Trace {
        file: PathBuf,
        #[arg(long)]
        call: String,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Generate and sample white-box questions and render the prompt.
    Ask {
        file: PathBuf,
        #[arg(long)]
        call: String,
        #[arg(long, default_value_t = 10)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AskFormat::Json)]
        format: AskFormat,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Score a stream of episode records.
    Score {
        /// Record file; standard input when absent or `-`.
        input: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Produce input mutants of each instance.
    Mutate {
        input: Option<PathBuf>,
        /// JSON value pool: {"integers": [...], "strings": [...]}.
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Keep instances that execute cleanly or that a solver finds hard.
    Filter {
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "difficulty", required_unless_present = "difficulty")]
        execution: bool,
        #[arg(long)]
        difficulty: bool,
        /// always-correct, always-wrong, bernoulli:P or cmd:PROGRAM ARGS...
        #[arg(long, requires = "difficulty")]
        oracle: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long = "max-pass", default_value_t = 3)]
        max_pass: u32,
        /// Where to write drop records (default: standard error).
        #[arg(long = "drop-log")]
        drop_log: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Summarize a corpus of instances.
    Stats { input: Option<PathBuf> },
    /// Blacklist scan of source files, or contamination scan of vector files.
    Scan {
        /// Source files to check against the blacklist (standard input when none).
        files: Vec<PathBuf>,
        #[arg(long)]
        blacklist: Option<PathBuf>,
        #[arg(long, requires = "bench")]
        train: Option<PathBuf>,
        #[arg(long, requires = "train")]
        bench: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
    },
    /// Build library I/O cases from task records.
    Case {
        input: Option<PathBuf>,
        #[arg(long)]
        blacklist: Option<PathBuf>,
    },
    /// Long-running scorer speaking the score record protocol.
    Serve {
        /// Address to listen on, e.g. 127.0.0.1:7878.
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        listen: Option<String>,
        #[arg(long)]
        stdio: bool,
        #[command(flatten)]
        score: ScoreArgs,
    },
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    match path {
        Some(p) if p != Path::new("-") => {
            let f = fs::File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            Ok(Box::new(BufReader::new(f)))
        }
        _ => Ok(Box::new(BufReader::new(io::stdin()))),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Non-blank lines of the input, read in chunks of `CHUNK`.
fn for_chunks(input: Option<&Path>, mut f: impl FnMut(&[String]) -> Result<()>) -> Result<()> {
    let mut chunk = Vec::with_capacity(CHUNK);
    for line in open_input(input)?.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        chunk.push(line);
        if chunk.len() == CHUNK {
            f(&chunk)?;
            chunk.clear();
        }
    }
    if !chunk.is_empty() {
        f(&chunk)?;
    }
    Ok(())
}

fn emit(out: &mut impl Write, v: &Json) -> Result<()> {
    serde_json::to_writer(&mut *out, v)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn blacklist(path: Option<&Path>) -> Result<Blacklist> {
    Ok(match path {
        Some(p) => Blacklist::parse(&read_text(p)?),
        None => Blacklist::default(),
    })
}

fn cmd_trace(file: &Path, call: &str, limits: LimitArgs) -> Result<ExitCode> {
    let text = read_text(file)?;
    let tree = match parse(&text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}", json!({"error": "parse-error", "message": e.to_string()}));
            return Ok(ExitCode::from(1));
        }
    };
    let r = execute(&tree, call, limits.limits()?, true);
    let mut out = io::stdout().lock();
    out.write_all(serialize_trace(&r.trace).as_bytes())?;
    out.flush()?;
    if r.status == Status::Ok {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("{}", json!({"error": r.status.as_str(), "detail": r.error}));
    Ok(ExitCode::from(1))
}

fn cmd_ask(file: &Path, call: &str, cap: usize, seed: u64, format: AskFormat, limits: LimitArgs) -> Result<()> {
    let text = read_text(file)?;
    let entry = called_function(call).ok_or_else(|| anyhow!("--call is not a function call: {call}"))?;
    let (program, tree) = SourceProgram::new(&text, &entry)?;
    let qset = ask(&program, &tree, call, limits.limits()?, cap, seed)?;
    let mut out = io::stdout().lock();
    match format {
        AskFormat::Json => emit(&mut out, &json!({"qset": qset, "prompt": render_prompt(&program, &qset)}))?,
        AskFormat::Prompt => out.write_all(render_prompt(&program, &qset).as_bytes())?,
        AskFormat::Qset => out.write_all(serialize_question_set(&qset).as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_score(input: Option<&Path>, args: &ScoreArgs) -> Result<()> {
    let cfg = args.config()?;
    let mut out = BufWriter::new(io::stdout().lock());
    for_chunks(input, |chunk| {
        for v in score_batch(chunk, &cfg) {
            emit(&mut out, &v)?;
        }
        out.flush()?;
        Ok(())
    })
}

fn cmd_mutate(input: Option<&Path>, pool: &Path, count: usize, seed: u64, limits: LimitArgs) -> Result<()> {
    let pool: ValuePool = serde_json::from_str(&read_text(pool)?).context("bad value pool")?;
    let limits = limits.limits()?;
    let mut out = BufWriter::new(io::stdout().lock());
    for_chunks(input, |chunk| {
        let results: Vec<Result<Vec<DatasetInstance>, String>> = chunk
            .par_iter()
            .map(|line| {
                let inst: DatasetInstance = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
                mutate_inputs(&inst, &pool, count, seed, limits).map_err(|e| format!("{}: {e}", inst.id))
            })
            .collect();
        for r in results {
            match r {
                Ok(ms) => {
                    for m in ms {
                        emit(&mut out, &serde_json::to_value(m)?)?;
                    }
                }
                Err(e) => eprintln!("{}", json!({"error": e})),
            }
        }
        out.flush()?;
        Ok(())
    })
}

struct FilterArgs {
    difficulty: bool,
    oracle: Option<String>,
    seed: u64,
    trials: u32,
    max_pass: u32,
    limits: ExecutionLimits,
}

/// Kept record or drop record for one input line.
fn filter_one(line: &str, a: &FilterArgs, oracle: Option<&dyn stepwise::pipeline::oracle::SolverOracle>) -> Result<Json, Json> {
    let inst: DatasetInstance =
        serde_json::from_str(line).map_err(|e| json!({"id": null, "reason": "malformed", "detail": e.to_string()}))?;
    if let Some(oracle) = oracle.filter(|_| a.difficulty) {
        return match filter_difficulty(&inst, oracle, a.trials, a.max_pass, a.seed, a.limits) {
            Ok(v) if v.keep => Ok(serde_json::to_value(StatsRecord {
                instance: inst,
                pass_count: Some(v.pass_count),
            })
            .expect("serializes")),
            Ok(v) => Err(json!({"id": inst.id, "reason": "too-easy", "pass_count": v.pass_count})),
            Err(e) => Err(json!({"id": inst.id, "reason": "execution", "detail": e.to_string()})),
        };
    }
    match filter_execution(&inst, a.limits) {
        ExecVerdict::Keep { instance } => Ok(serde_json::to_value(instance).expect("serializes")),
        ExecVerdict::Drop { reason, detail } => Err(json!({"id": inst.id, "reason": reason, "detail": detail})),
    }
}

fn cmd_filter(input: Option<&Path>, a: FilterArgs, drop_log: Option<&Path>) -> Result<()> {
    let oracle = match (&a.oracle, a.difficulty) {
        (Some(name), _) => Some(oracle_from_name(name)?),
        (None, true) => bail!("--difficulty needs --oracle"),
        (None, false) => None,
    };
    let mut drops: Box<dyn Write> = match drop_log {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stderr()),
    };
    let mut out = BufWriter::new(io::stdout().lock());
    for_chunks(input, |chunk| {
        let results: Vec<Result<Json, Json>> = chunk
            .par_iter()
            .map(|line| filter_one(line, &a, oracle.as_deref()))
            .collect();
        for r in results {
            match r {
                Ok(v) => emit(&mut out, &v)?,
                Err(d) => emit(&mut drops, &d)?,
            }
        }
        out.flush()?;
        drops.flush()?;
        Ok(())
    })
}

fn cmd_stats(input: Option<&Path>) -> Result<()> {
    let mut records = Vec::new();
    for (i, line) in open_input(input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: StatsRecord = serde_json::from_str(&line).with_context(|| format!("record {}", i + 1))?;
        records.push(r);
    }
    let stats = corpus_stats(&records)?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &stats)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn cmd_scan(files: &[PathBuf], bl: Option<&Path>, vectors: Option<(&Path, &Path)>, threshold: f64) -> Result<()> {
    let mut out = io::stdout().lock();
    if let Some((train, bench)) = vectors {
        let train = parse_vectors(&read_text(train)?)?;
        let bench = parse_vectors(&read_text(bench)?)?;
        let report = contamination_scan(&train, &bench, threshold)?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        out.write_all(b"\n")?;
        return Ok(());
    }
    let list = blacklist(bl)?;
    if files.is_empty() {
        let text = io::read_to_string(io::stdin())?;
        emit(&mut out, &serde_json::to_value(scan_blacklist(&text, &list))?)?;
    }
    for f in files {
        let mut v = serde_json::to_value(scan_blacklist(&read_text(f)?, &list))?;
        v["file"] = json!(f.display().to_string());
        emit(&mut out, &v)?;
    }
    Ok(())
}

fn cmd_case(input: Option<&Path>, bl: Option<&Path>) -> Result<()> {
    let list = blacklist(bl)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for_chunks(input, |chunk| {
        for line in chunk {
            let v = match serde_json::from_str::<LibraryTask>(line) {
                Err(e) => json!({"id": null, "error": format!("malformed record: {e}")}),
                Ok(task) => match build_library_io_case(&task, &list) {
                    Ok(case) => json!({"id": task.id, "case": case}),
                    Err(r) => json!({"id": task.id, "rejected": r}),
                },
            };
            emit(&mut out, &v)?;
        }
        out.flush()?;
        Ok(())
    })
}

fn serve_stream(reader: impl BufRead, mut writer: impl Write, cfg: &BatchConfig) -> Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        emit(&mut writer, &score_line(&line, cfg))?;
        writer.flush()?;
    }
    Ok(())
}

fn cmd_serve(listen: Option<&str>, args: &ScoreArgs) -> Result<()> {
    let cfg = args.config()?;
    let Some(addr) = listen else {
        return serve_stream(io::stdin().lock(), io::stdout().lock(), &cfg);
    };
    let listener = TcpListener::bind(addr).with_context(|| format!("cannot listen on {addr}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    for conn in listener.incoming() {
        let conn = match conn {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{}", json!({"error": format!("accept failed: {e}")}));
                continue;
            }
        };
        let reader = BufReader::new(conn.try_clone()?);
        if let Err(e) = serve_stream(reader, conn, &cfg) {
            eprintln!("{}", json!({"error": format!("connection closed: {e}")}));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.cmd {
        Cmd::Trace { file, call, limits } => return cmd_trace(&file, &call, limits),
        Cmd::Ask { file, call, cap, seed, format, limits } => cmd_ask(&file, &call, cap, seed, format, limits)?,
        Cmd::Score { input, score } => cmd_score(input.as_deref(), &score)?,
        Cmd::Mutate { input, pool, count, seed, limits } => cmd_mutate(input.as_deref(), &pool, count, seed, limits)?,
        Cmd::Filter { input, execution: _, difficulty, oracle, seed, trials, max_pass, drop_log, limits } => {
            let args = FilterArgs {
                difficulty,
                oracle,
                seed,
                trials,
                max_pass,
                limits: limits.limits()?,
            };
            cmd_filter(input.as_deref(), args, drop_log.as_deref())?
        }
        Cmd::Stats { input } => cmd_stats(input.as_deref())?,
        Cmd::Scan { files, blacklist, train, bench, threshold } => {
            let vectors = train.as_deref().zip(bench.as_deref());
            cmd_scan(&files, blacklist.as_deref(), vectors, threshold)?
        }
        Cmd::Case { input, blacklist } => cmd_case(input.as_deref(), blacklist.as_deref())?,
        Cmd::Serve { listen, stdio: _, score } => cmd_serve(listen.as_deref(), &score)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"error": format!("{e:#}")}));
            ExitCode::from(1)
        }
    }
}
