use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use zdlab::divisor::Side;
use zdlab::rational::{parse_q, Q};
use zdlab::scenario::{
    emit_report, parse_scenario, run_with, Format, RunOptions, Scenario, Task, TaskKind, TaskParams,
};

#[derive(Parser)]
#[command(name = "zdlab", version, about = "Zero-divisor and TDZ checks driven by scenario files")]
struct Cli {
    /// Override n_max in every task.
    #[arg(long, global = true)]
    n_max: Option<u64>,
    /// Override the tolerance in every task, as a rational such as 1/1000.
    #[arg(long, global = true, value_parser = parse_tol)]
    tol: Option<Q>,
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: OutputFormat,
    /// Directory for the report files; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record wall-clock time per task (makes reports non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
    Structured,
}

#[derive(Clone, Copy, ValueEnum)]
enum Question {
    Left,
    Right,
    Zd,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario.
    Run { file: PathBuf },
    /// Run the classify tasks, or classify all three questions if there are none.
    Classify {
        file: PathBuf,
        #[arg(long, value_enum)]
        question: Option<Question>,
    },
    /// Run the witness tasks, or synthesize one if there are none.
    Witness {
        file: PathBuf,
        #[arg(long, value_enum)]
        side: Option<Question>,
    },
    /// Run the tdz_demo tasks, or the default demo if there are none.
    Tdz { file: PathBuf },
    /// Run the norm tasks, or tabulate norms at the default sizes.
    Norm { file: PathBuf },
    /// Run the verify_all tasks, or one verify_all if there are none.
    Verify { file: PathBuf },
}

fn parse_tol(s: &str) -> Result<Q, String> {
    parse_q(s).map_err(|e| e.to_string())
}

fn task(kind: TaskKind, params: TaskParams) -> Task {
    Task { kind, line: 0, params }
}

/// Keeps the tasks of the given kinds, or falls back to `defaults`.
fn select(s: &Scenario, kinds: &[TaskKind], defaults: Vec<Task>) -> Scenario {
    let kept: Vec<Task> = s.tasks.iter().filter(|t| kinds.contains(&t.kind)).cloned().collect();
    s.with_tasks(if kept.is_empty() { defaults } else { kept })
}

fn restrict(s: &Scenario, command: &Command) -> Scenario {
    match command {
        Command::Run { .. } => s.clone(),
        Command::Classify { question, .. } => {
            let kinds: Vec<TaskKind> = match question {
                Some(Question::Left) => vec![TaskKind::ClassifyLeft],
                Some(Question::Right) => vec![TaskKind::ClassifyRight],
                Some(Question::Zd) => vec![TaskKind::ClassifyZd],
                None => vec![TaskKind::ClassifyLeft, TaskKind::ClassifyRight, TaskKind::ClassifyZd],
            };
            let defaults = kinds.iter().map(|&k| task(k, TaskParams::default())).collect();
            select(s, &kinds, defaults)
        }
        Command::Witness { side, .. } => {
            let side = match side {
                Some(Question::Left) => Some(Side::Left),
                Some(Question::Right) => Some(Side::Right),
                _ => None,
            };
            let mut out = select(
                s,
                &[TaskKind::Witness],
                vec![task(TaskKind::Witness, TaskParams::default())],
            );
            if side.is_some() {
                for t in &mut out.tasks {
                    t.params.side = side;
                }
            }
            out
        }
        Command::Tdz { .. } => select(s, &[TaskKind::TdzDemo], vec![task(TaskKind::TdzDemo, TaskParams::default())]),
        Command::Norm { .. } => select(s, &[TaskKind::Norm], vec![task(TaskKind::Norm, TaskParams::default())]),
        Command::Verify { .. } => select(
            s,
            &[TaskKind::VerifyAll],
            vec![task(TaskKind::VerifyAll, TaskParams::default())],
        ),
    }
}

fn file_of(command: &Command) -> &Path {
    match command {
        Command::Run { file }
        | Command::Classify { file, .. }
        | Command::Witness { file, .. }
        | Command::Tdz { file }
        | Command::Norm { file }
        | Command::Verify { file } => file,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = file_of(&cli.command);
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(errors) => {
            for e in &errors.0 {
                eprintln!("{}:{e}", path.display());
            }
            return ExitCode::from(2);
        }
    };
    let scenario = restrict(&scenario, &cli.command);
    let options = RunOptions {
        n_max: cli.n_max,
        tol: cli.tol,
        timing: cli.timing,
    };
    let report = run_with(&scenario, &options);
    let format = match cli.format {
        OutputFormat::Table => Format::Table,
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Structured => Format::Structured,
    };
    let files = emit_report(&report, format);
    match &cli.out {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(2);
            }
            for f in &files {
                let target = dir.join(&f.name);
                if let Err(e) = std::fs::write(&target, &f.content) {
                    eprintln!("{}: {e}", target.display());
                    return ExitCode::from(2);
                }
                println!("{}", target.display());
            }
        }
        None => {
            let many = files.len() > 1;
            for f in &files {
                if many {
                    println!("# {}", f.name);
                }
                print!("{}", f.content);
            }
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
