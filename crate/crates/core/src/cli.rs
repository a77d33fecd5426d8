//! `cdiag` command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bn::{attach_model, BnModel, VerifyOptions};
use crate::diagram::{CausalDiagram, ValidationMode};
use crate::dsl::{export_dot, parse_dsl_with};
use crate::graph::{d_separated, implied_independencies};
use crate::report::{analyze, analyze_and_verify, ExitStatus, ReportFormat};

#[derive(Parser, Debug)]
#[command(name = "cdiag", version, about = "Causal and selection diagram analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify direction, shifts and selection, and print the report.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Downgrade domain-indicator in-edges and selection out-edges to warnings.
        #[arg(long)]
        lenient: bool,
    },
    /// Test whether two node sets are d-separated.
    Dsep {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Draw samples from an attached model and write them as CSV.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        cpts: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Comma-separated `node=state` pairs.
        #[arg(long, value_delimiter = ',')]
        evidence: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyse, then check every finding numerically against a model.
    Verify {
        file: PathBuf,
        #[arg(long)]
        cpts: PathBuf,
        #[arg(long, default_value_t = crate::bn::verify::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the diagram in Graphviz DOT.
    ExportDot { file: PathBuf },
    /// List pairwise d-separations with conditioning sets up to a size.
    Independencies {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_cond: usize,
    },
}

/// An input problem, rendered to the error stream before exiting with 2.
struct Failure(Vec<String>);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(vec![e.to_string()])
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(vec![format!("cannot read `{}`: {e}", path.display())]))
}

fn load_diagram(path: &Path, mode: ValidationMode) -> Result<CausalDiagram, Failure> {
    let text = read(path)?;
    parse_dsl_with(&text, mode).map_err(|errors| {
        Failure(
            errors
                .iter()
                .map(|e| format!("{}:{e}", path.display()))
                .collect(),
        )
    })
}

fn load_model(diagram: &CausalDiagram, path: &Path) -> Result<BnModel, Failure> {
    let text = read(path)?;
    attach_model(diagram, &text).map_err(|errors| {
        Failure(
            errors
                .iter()
                .map(|e| match e.span {
                    Some(_) => format!("{}:{e}", path.display()),
                    None => format!("{}: {e}", path.display()),
                })
                .collect(),
        )
    })
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    match cli.command {
        Command::Analyze { file, format, lenient } => {
            let mode = if lenient {
                ValidationMode::Lenient
            } else {
                ValidationMode::Strict
            };
            let diagram = load_diagram(&file, mode)?;
            let report = analyze(&diagram)?;
            write!(out, "{}", report.render(format.into()))?;
            Ok(report.exit_status())
        }
        Command::Dsep { file, a, b, given } => {
            let diagram = load_diagram(&file, ValidationMode::Strict)?;
            let result = d_separated(&diagram, &a, &b, &given)?;
            if result.separated {
                writeln!(out, "separated")?;
            } else {
                writeln!(out, "connected")?;
                for p in &result.witnesses {
                    writeln!(out, "  open path: {p}")?;
                }
                if result.truncated {
                    writeln!(out, "  (more open paths not shown)")?;
                }
            }
            Ok(ExitStatus::Clean)
        }
        Command::Simulate {
            file,
            cpts,
            samples,
            seed,
            evidence,
            out: path,
        } => {
            let diagram = load_diagram(&file, ValidationMode::Strict)?;
            let model = load_model(&diagram, &cpts)?;
            let mut pairs = Vec::new();
            for item in &evidence {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| Failure(vec![format!("evidence `{item}` is not of the form node=state")]))?;
                pairs.push((k.trim(), v.trim()));
            }
            let data = model.sample(samples, seed, &pairs)?;
            let csv = data.to_csv();
            match path {
                Some(p) => fs::write(&p, csv)
                    .map_err(|e| Failure(vec![format!("cannot write `{}`: {e}", p.display())]))?,
                None => out.write_all(csv.as_bytes())?,
            }
            Ok(ExitStatus::Clean)
        }
        Command::Verify {
            file,
            cpts,
            delta,
            format,
        } => {
            if !delta.is_finite() || delta < 0.0 {
                return Err(Failure(vec![format!("--delta must be a non-negative number, got {delta}")]));
            }
            let diagram = load_diagram(&file, ValidationMode::Strict)?;
            let model = load_model(&diagram, &cpts)?;
            let options = VerifyOptions { delta, loss: None };
            let report = analyze_and_verify(&model, &options)?;
            write!(out, "{}", report.render(format.into()))?;
            Ok(report.exit_status())
        }
        Command::ExportDot { file } => {
            let diagram = load_diagram(&file, ValidationMode::Strict)?;
            write!(out, "{}", export_dot(&diagram))?;
            Ok(ExitStatus::Clean)
        }
        Command::Independencies { file, max_cond } => {
            let diagram = load_diagram(&file, ValidationMode::Strict)?;
            for ind in implied_independencies(&diagram, max_cond) {
                writeln!(out, "{ind}")?;
            }
            Ok(ExitStatus::Clean)
        }
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code. Diagnostics go to `err`, machine output to `out`.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                return ExitStatus::InputError.code();
            }
            // --help and --version
            let _ = out.write_all(text.as_bytes());
            return 0;
        }
    };
    match run(cli, out) {
        Ok(status) => status.code(),
        Err(Failure(lines)) => {
            for l in lines {
                let _ = writeln!(err, "error: {l}");
            }
            ExitStatus::InputError.code()
        }
    }
}
