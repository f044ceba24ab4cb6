mod commands;
mod error;
mod project;
mod server;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use depsearch::corpus::PosColumn;
use depsearch::par::Execution;
use serde_json::json;

use crate::commands as cmd;
use crate::error::AppError;

/// Search dependency-parsed corpora by example and bootstrap relation datasets.
#[derive(Parser)]
#[command(name = "depsearch", version)]
struct Cli {
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pos {
    Upos,
    Xpos,
    Auto,
}

impl From<Pos> for PosColumn {
    fn from(p: Pos) -> Self {
        match p {
            Pos::Upos => PosColumn::Upos,
            Pos::Xpos => PosColumn::Xpos,
            Pos::Auto => PosColumn::Auto,
        }
    }
}

#[derive(Args)]
struct ReadOpts {
    /// Skip malformed sentences instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Which CoNLL-U column supplies the tag.
    #[arg(long, value_enum, default_value = "auto")]
    pos: Pos,
}

#[derive(Subcommand)]
enum Command {
    /// Read CoNLL-U files into a corpus snapshot.
    Ingest {
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Build an index from a snapshot or CoNLL-U file.
    Index {
        store: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Query(QueryCmd),
    /// Page through the matches of a pattern.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 20)]
        limit: usize,
        #[arg(long, default_value_t = 0)]
        offset: usize,
    },
    /// Draw a seeded uniform sample of matches.
    Sample {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Score patterns against labelled instances.
    Eval {
        #[arg(long)]
        patterns: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// CoNLL-U parses keyed by instance id, for instances without inline parses.
        #[arg(long)]
        parses: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Serve a project over HTTP.
    Serve {
        #[arg(required_unless_present = "project_flag")]
        project: Option<PathBuf>,
        #[arg(long = "project", id = "project_flag")]
        project_flag: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "DEPSEARCH_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 4)]
        threads: usize,
    },
    #[command(subcommand)]
    Project(ProjectCmd),
    /// Write a synthetic corpus with planted relation facts.
    Generate {
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long)]
        sentences: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the planted facts as JSONL.
        #[arg(long)]
        facts: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum QueryCmd {
    /// Parse one annotated example and print its elements.
    Parse { text: String },
    /// Compile a query file against its parses.
    Compile {
        queries: PathBuf,
        #[arg(long)]
        parses: PathBuf,
        #[arg(long)]
        triggers: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Build a dataset from a JSON config.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        include_pending: bool,
    },
}

#[derive(Subcommand)]
enum ProjectCmd {
    /// Create a project directory from CoNLL-U or snapshot inputs.
    Init {
        root: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        read: ReadOpts,
    },
}

fn run(cli: Cli) -> Result<(), AppError> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Ingest { inputs, out, read } => cmd::ingest(&inputs, &out, cmd::parse_options(read.lenient, read.pos.into())),
        Command::Index { store, out } => cmd::index(&store, &out, exec),
        Command::Query(QueryCmd::Parse { text }) => cmd::query_parse(&text),
        Command::Query(QueryCmd::Compile { queries, parses, triggers, out }) => {
            cmd::query_compile(&queries, &parses, triggers.as_deref(), out.as_deref())
        }
        Command::Search { index, pattern, id, limit, offset } => {
            cmd::search(&index, &pattern, id.as_deref(), limit, offset, exec)
        }
        Command::Sample { index, pattern, id, n, seed } => cmd::sample(&index, &pattern, id.as_deref(), n, seed),
        Command::Dataset(DatasetCmd::Build { config, include_pending }) => {
            cmd::dataset_build(&config, include_pending, exec)
        }
        Command::Eval { patterns, gold, parses, json } => cmd::eval(&patterns, &gold, parses.as_deref(), json, exec),
        Command::Serve { project, project_flag, host, port, threads } => {
            let root = project.or(project_flag).expect("clap requires one");
            server::serve(&root, &host, port, threads)
        }
        Command::Project(ProjectCmd::Init { root, inputs, read }) => {
            let options = cmd::parse_options(read.lenient, read.pos.into());
            let mut sentences = Vec::new();
            for path in &inputs {
                sentences.extend(cmd::load_sentences(path, options)?);
            }
            cmd::print_json(&project::Project::init(&root, sentences)?)
        }
        Command::Generate { preset, sentences, seed, out, facts } => {
            cmd::generate(&preset, sentences, seed, &out, facts.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let body = json!({ "error": { "kind": "usage", "message": message.trim_end() } });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    ExitCode::from(cmd::value_or_exit(run(cli)) as u8)
}
