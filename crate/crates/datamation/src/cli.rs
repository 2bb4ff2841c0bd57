//! The `datamation` command line.
//!
//! Exit status is 0 on success, 2 when the input is understood but rejected
//! (the JSON error report goes to stderr) and 1 for file-system errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use datamation_core::compile::{compile_steps, GroupAxisPolicy};
use datamation_core::decompose::{decompose_explained, eval_metrics, EvalCase};
use datamation_core::{
    compile_datamation, linearize_query, parse_pipeline, ColumnKind, CompileError, CompileOptions, DecomposeError,
    FeedbackStore, Pipeline, Table,
};
use serde::Deserialize;
use serde_json::json;

use crate::canonical::canonical_json;
use crate::csv_io::{load_table, step_table, text_table, write_rows, LoadError, LoadOptions};
use crate::http::{serve, AppState};
use crate::store::{now_ms, read_ledger, DataDir, SharedLedger, StoreError};

#[derive(Debug, Parser)]
#[command(name = "datamation", version, about = "Compile data questions into animated unit visualizations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a question or a QDMR script over a CSV file into a document.
    Compile(CompileArgs),
    /// Print the QDMR script a question decomposes into.
    Decompose(DecomposeArgs),
    /// Record a corrected script for a question in the data directory's ledger.
    Feedback(FeedbackArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Score the decomposer on a JSONL corpus of questions with gold scripts.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// The CSV file to load.
    pub csv: PathBuf,
    /// Table name; defaults to the file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Column kind override, as `column=kind`. Repeatable.
    #[arg(long = "kind", value_parser = parse_kind)]
    pub kinds: Vec<(String, ColumnKind)>,
    /// Data directory holding the feedback ledger and stored documents.
    #[arg(long, env = "DATAMATION_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// The question to decompose.
    #[arg(long, conflicts_with = "script", required_unless_present = "script")]
    pub query: Option<String>,
    /// A QDMR script file.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Where to write the document; stdout when absent and --explain is off.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print every step's result as a small table.
    #[arg(long)]
    pub explain: bool,
    /// Directory receiving one CSV per step result.
    #[arg(long)]
    pub steps: Option<PathBuf>,
    /// Axis chosen for GROUP keys that are not temporal.
    #[arg(long, value_enum, default_value = "adaptive")]
    pub group_axis: GroupAxis,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupAxis {
    Adaptive,
    Y,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub query: String,
}

#[derive(Debug, Args)]
pub struct FeedbackArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub query: String,
    /// The corrected QDMR script file.
    #[arg(long)]
    pub corrected: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "DATAMATION_DATA_DIR", default_value = "datamation-data")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL lines of `{"dataset", "query", "gold"}`; datasets resolve to
    /// `<dataset>.csv` next to the corpus.
    pub corpus: PathBuf,
}

fn parse_kind(s: &str) -> Result<(String, ColumnKind), String> {
    let (col, kind) = s.split_once('=').ok_or("expected column=kind")?;
    let kind = serde_json::from_value(json!(kind.trim().to_lowercase()))
        .map_err(|_| format!("unknown kind `{kind}`; use numerical, categorical, temporal or text"))?;
    Ok((col.trim().to_string(), kind))
}

/// A failed command: its report and exit status.
#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub report: serde_json::Value,
}

impl Failure {
    fn rejected(code: &str, message: String, steps: Vec<usize>, line: Option<usize>) -> Failure {
        let mut error = json!({"code": code, "message": message, "steps": steps});
        if let Some(line) = line {
            error["line"] = json!(line);
        }
        Failure {
            exit: 2,
            report: json!({ "error": error }),
        }
    }

    fn io(path: &Path, e: &std::io::Error) -> Failure {
        Failure {
            exit: 1,
            report: json!({"error": {"code": "Io", "message": format!("{}: {e}", path.display()), "steps": []}}),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Failure {
        match &e {
            LoadError::Io { path, source } => Failure::io(path, source),
            _ => Failure::rejected(e.code(), e.to_string(), Vec::new(), None),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Failure {
        match &e {
            StoreError::Io { path, source } => Failure::io(path, source),
            StoreError::Load(_) => match e {
                StoreError::Load(l) => l.into(),
                _ => unreachable!(),
            },
            _ => Failure::rejected(e.code(), e.to_string(), Vec::new(), None),
        }
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Failure {
        Failure::rejected(e.code(), e.to_string(), e.steps(), None)
    }
}

impl From<DecomposeError> for Failure {
    fn from(e: DecomposeError) -> Failure {
        let steps = match &e {
            DecomposeError::InvalidCorrection(errors) => errors.iter().map(|e| e.step).collect(),
            _ => Vec::new(),
        };
        Failure::rejected(e.code(), e.to_string(), steps, None)
    }
}

impl From<datamation_core::qdmr::ParseError> for Failure {
    fn from(e: datamation_core::qdmr::ParseError) -> Failure {
        Failure::rejected(e.code(), e.to_string(), Vec::new(), e.line())
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, &e))
}

fn write_file(path: &Path, text: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, &e))?;
    }
    fs::write(path, text).map_err(|e| Failure::io(path, &e))
}

fn load(args: &TableArgs) -> Result<Table, Failure> {
    let opts = LoadOptions {
        name: args.name.clone(),
        kinds: args.kinds.iter().cloned().collect::<BTreeMap<_, _>>(),
    };
    Ok(load_table(&args.csv, &opts)?)
}

fn ledger(args: &TableArgs) -> Result<FeedbackStore, Failure> {
    match &args.data_dir {
        Some(dir) => Ok(read_ledger(&dir.join("ledger.jsonl"))?.0),
        None => Ok(FeedbackStore::new()),
    }
}

/// Resolves a compile request to the pipeline and the question behind it.
fn pipeline_for(args: &CompileArgs, table: &Table) -> Result<(Pipeline, Option<String>), Failure> {
    match (&args.query, &args.script) {
        (Some(q), _) => {
            let store = ledger(&args.table)?;
            let d = decompose_explained(&linearize_query(q, table), table, &store)?;
            Ok((d.pipeline, Some(q.clone())))
        }
        (None, Some(path)) => Ok((parse_pipeline(&read_text(path)?)?, None)),
        (None, None) => Err(Failure::rejected("MissingInput", "pass --query or --script".into(), Vec::new(), None)),
    }
}

fn compile(args: &CompileArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let table = load(&args.table)?;
    let (pipeline, query) = pipeline_for(args, &table)?;
    let opts = CompileOptions {
        group_axis: match args.group_axis {
            GroupAxis::Adaptive => GroupAxisPolicy::Adaptive,
            GroupAxis::Y => GroupAxisPolicy::TableDefault,
        },
        query,
        ..CompileOptions::default()
    };
    if args.explain || args.steps.is_some() {
        let compiled = compile_steps(&pipeline, &table, &opts)?;
        for (i, step) in compiled.steps.iter().enumerate() {
            let (header, rows) = step_table(&step.value, &table);
            if args.explain {
                let text = format!("#{} = {}\n{}\n{}\n", i + 1, step.op, step.caption, text_table(&header, &rows));
                stdout.write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), &e))?;
            }
            if let Some(dir) = &args.steps {
                let path = dir.join(format!("step{}.csv", i + 1));
                let mut buf = Vec::new();
                write_rows(&mut buf, &header, &rows).map_err(|e| Failure::io(&path, &e))?;
                write_file(&path, &buf)?;
            }
        }
    }
    let doc = compile_datamation(&pipeline, &table, &opts)?;
    let text = canonical_json(&doc).expect("documents serialize");
    if let Some(dir) = &args.table.data_dir {
        DataDir::open(dir)?.put_doc(&doc)?;
    }
    match &args.out {
        Some(path) => write_file(path, text.as_bytes()),
        None if !args.explain => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), &e)),
        None => Ok(()),
    }
}

fn decompose(args: &DecomposeArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let table = load(&args.table)?;
    let store = ledger(&args.table)?;
    let d = decompose_explained(&linearize_query(&args.query, &table), &table, &store)?;
    stdout
        .write_all(d.pipeline.to_script().as_bytes())
        .map_err(|e| Failure::io(Path::new("<stdout>"), &e))
}

fn feedback(args: &FeedbackArgs) -> Result<(), Failure> {
    let table = load(&args.table)?;
    let dir = args.table.data_dir.as_ref().ok_or_else(|| {
        Failure::rejected("MissingDataDir", "feedback needs --data-dir or DATAMATION_DATA_DIR".into(), Vec::new(), None)
    })?;
    let dir = DataDir::open(dir)?;
    let ledger = SharedLedger::open(&dir.ledger_path())?;
    let corrected = parse_pipeline(&read_text(&args.corrected)?)?;
    let original = decompose_explained(&linearize_query(&args.query, &table), &table, &ledger.snapshot())
        .map(|d| d.pipeline)
        .unwrap_or_else(|_| corrected.clone());
    ledger.record(&args.query, &table, &original, &corrected, now_ms())?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CorpusLine {
    dataset: String,
    query: String,
    gold: String,
}

fn eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = read_text(&args.corpus)?;
    let base = args.corpus.parent().unwrap_or(Path::new("."));
    let mut tables: BTreeMap<String, Table> = BTreeMap::new();
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let entry: CorpusLine = serde_json::from_str(line)
            .map_err(|e| Failure::rejected("MalformedCorpus", e.to_string(), Vec::new(), Some(i + 1)))?;
        if !tables.contains_key(&entry.dataset) {
            let path = base.join(format!("{}.csv", entry.dataset));
            tables.insert(entry.dataset.clone(), load_table(&path, &LoadOptions::default())?);
        }
        let gold = parse_pipeline(&entry.gold).map_err(|e| {
            Failure::rejected("MalformedCorpus", e.to_string(), Vec::new(), Some(i + 1))
        })?;
        lines.push((entry, gold));
    }
    let cases: Vec<EvalCase<'_>> = lines
        .iter()
        .map(|(e, gold)| EvalCase {
            query: &e.query,
            table: &tables[&e.dataset],
            gold,
        })
        .collect();
    let report = eval_metrics(&cases, &FeedbackStore::new());
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    writeln!(stdout, "{text}").map_err(|e| Failure::io(Path::new("<stdout>"), &e))
}

fn serve_blocking(args: &ServeArgs) -> Result<(), Failure> {
    let state = Arc::new(AppState::open(DataDir::open(&args.data_dir)?)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(Path::new("<runtime>"), &e))?;
    runtime
        .block_on(serve(state, args.port))
        .map_err(|e| Failure::io(Path::new("<listener>"), &e))
}

/// Runs a parsed command, writing normal output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Compile(args) => compile(args, stdout),
        Command::Decompose(args) => decompose(args, stdout),
        Command::Feedback(args) => feedback(args),
        Command::Serve(args) => serve_blocking(args),
        Command::Eval(args) => eval(args, stdout),
    }
}

/// Parses the process arguments, runs the command and returns the exit status.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.report);
            f.exit
        }
    }
}
