use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use opmult::io::{load_matrix, MatrixFile};
use opmult::linalg::columns_of;
use opmult::multiplicity::{krylov_closure, OperatorTuple};
use opmult::verifier::{run_scenario, ModelSpec, Report, RunOptions, Scenario};
use opmult::{Error, Execution, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "opmult", version, about = "Multiplicities of joint invariant subspaces of tensor shift tuples")]
struct Cli {
    /// Rank tolerance; overrides the scenario value.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Random trials per candidate generating-set size; overrides the scenario value.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Seed for every random choice; overrides the scenario value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario file and emit its report.
    Run { scenario: PathBuf },
    /// Run every `*.json` scenario in a directory.
    Suite { dir: PathBuf },
    /// Model inspection.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Krylov closure of the columns of a matrix file under a model operator.
    Closure { spec: String, vectors: PathBuf },
}

#[derive(Debug, Subcommand)]
enum ModelAction {
    /// Print the operator matrix of a model spec.
    Dump { spec: String },
}

enum Failure {
    Checks,
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl Cli {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn apply_overrides(&self, s: &mut Scenario) {
        if let Some(t) = self.tol {
            s.tol = t;
        }
        if let Some(t) = self.trials {
            s.trials = t;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(text.as_bytes());
                if !text.ends_with('\n') {
                    let _ = stdout.write_all(b"\n");
                }
                Ok(())
            }
        }
    }
}

fn scenario_options(path: &Path, exec: Execution) -> RunOptions {
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    RunOptions { base_dir, exec }
}

fn run_file(cli: &Cli, path: &Path) -> Result<Report, Error> {
    let mut s = Scenario::load(path)?;
    cli.apply_overrides(&mut s);
    run_scenario(&s, &scenario_options(path, cli.exec()))
}

fn render(cli: &Cli, report: &Report) -> String {
    match cli.format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    }
}

fn cmd_run(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let report = run_file(cli, path)?;
    cli.emit(&render(cli, &report))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn cmd_suite(cli: &Cli, dir: &Path) -> Result<(), Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Config(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Config(format!("no scenario files in {}", dir.display())));
    }
    let results: Vec<Result<Report, Error>> = match cli.exec() {
        Execution::Sequential => files.iter().map(|f| run_file(cli, f)).collect(),
        Execution::Parallel => files.par_iter().map(|f| run_file(cli, f)).collect(),
    };
    let mut config_error = false;
    let mut all_pass = true;
    let mut rows = Vec::new();
    let mut text = String::new();
    for (file, r) in files.iter().zip(&results) {
        match r {
            Ok(report) => {
                all_pass &= report.passed;
                let statuses: serde_json::Map<String, serde_json::Value> =
                    report.verdicts.iter().map(|(k, v)| (k.clone(), json!(v.status))).collect();
                rows.push(json!({
                    "file": file.display().to_string(),
                    "name": report.scenario.name,
                    "passed": report.passed,
                    "verdicts": statuses,
                    "report": report,
                }));
                text.push_str(&report.to_text());
            }
            Err(e) => {
                config_error = true;
                rows.push(json!({ "file": file.display().to_string(), "error": e.to_string() }));
                text.push_str(&format!("{}: ERROR {e}\n", file.display()));
            }
        }
    }
    let out = match cli.format {
        Format::Json => serde_json::to_string_pretty(&json!({ "passed": all_pass && !config_error, "scenarios": rows }))
            .expect("suite summary serializes"),
        Format::Text => text,
    };
    cli.emit(&out)?;
    if config_error {
        Err(Failure::Config("some scenarios could not be run".into()))
    } else if all_pass {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

/// `hardy:4`, `bergman:4`, `dirichlet:4`, `weighted_bergman:<α>:<m>`,
/// `custom:<w0>,<w1>,…` (m = weights + 1), `quotient:<r0>,<r1>,…` (real
/// roots), `matrix:<file>`, or a JSON model spec inline or in a file.
fn parse_model_spec(spec: &str) -> Result<ModelSpec, Error> {
    let bad = || Error::Config(format!("unrecognized model spec `{spec}`"));
    let trimmed = spec.trim();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| Error::Config(format!("bad model JSON: {e}")));
    }
    if Path::new(trimmed).is_file() {
        let text = std::fs::read_to_string(trimmed).map_err(|e| Error::Config(e.to_string()))?;
        return serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad model JSON: {e}")));
    }
    let (head, rest) = trimmed.split_once(':').ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let list = |s: &str| s.split(',').map(num).collect::<Result<Vec<f64>, Error>>();
    let m = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    use opmult::model::{Root, SpaceKind};
    Ok(match head {
        "hardy" => ModelSpec::Shift { kind: SpaceKind::Hardy, m: m(rest)? },
        "bergman" => ModelSpec::Shift { kind: SpaceKind::Bergman, m: m(rest)? },
        "dirichlet" => ModelSpec::Shift { kind: SpaceKind::Dirichlet, m: m(rest)? },
        "weighted_bergman" => {
            let (a, dim) = rest.split_once(':').ok_or_else(bad)?;
            let alpha = a.trim().parse::<u32>().map_err(|_| bad())?;
            ModelSpec::Shift { kind: SpaceKind::WeightedBergman(alpha), m: m(dim)? }
        }
        "custom" => {
            let w = list(rest)?;
            let dim = w.len() + 1;
            ModelSpec::Shift { kind: SpaceKind::Custom(w), m: dim }
        }
        "quotient" => ModelSpec::Quotient {
            p_roots: list(rest)?.into_iter().map(|r| Root::new(opmult::linalg::real(r), 1)).collect(),
        },
        "matrix" => ModelSpec::Matrix { file: PathBuf::from(rest) },
        _ => return Err(bad()),
    })
}

fn model_operator(spec: &str) -> Result<opmult::Operator, Error> {
    let model = parse_model_spec(spec)?;
    opmult::verifier::scenario::resolve_model(&model, Path::new("."))
        .map(|(_, t)| t)
        .map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })
}

fn matrix_text(m: &opmult::Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                if z.im == 0.0 {
                    format!("{}", z.re)
                } else {
                    format!("{},{}", z.re, z.im)
                }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn cmd_model_dump(cli: &Cli, spec: &str) -> Result<(), Failure> {
    let t = model_operator(spec)?;
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&MatrixFile::from_matrix(t.matrix())).expect("matrix serializes"),
        Format::Text => matrix_text(t.matrix()),
    };
    cli.emit(&text)
}

fn cmd_closure(cli: &Cli, spec: &str, vectors: &Path) -> Result<(), Failure> {
    let t = model_operator(spec)?;
    let g = load_matrix(vectors)?;
    if g.nrows() != t.dim() {
        return Err(Failure::Config(format!(
            "vectors have length {} but the operator acts on C^{}",
            g.nrows(),
            t.dim()
        )));
    }
    let tol = cli.tol.unwrap_or(DEFAULT_TOL);
    let closure = krylov_closure(&OperatorTuple::single(t.clone()), &columns_of(&g), None, tol)?;
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "dim": closure.dim(),
            "ambient_dim": closure.ambient_dim(),
            "basis": MatrixFile::from_matrix(closure.basis()),
        }))
        .expect("closure serializes"),
        Format::Text => format!("dim {} of {}\n{}", closure.dim(), closure.ambient_dim(), matrix_text(closure.basis())),
    };
    cli.emit(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario } => cmd_run(&cli, scenario),
        Command::Suite { dir } => cmd_suite(&cli, dir),
        Command::Model { action: ModelAction::Dump { spec } } => cmd_model_dump(&cli, spec),
        Command::Closure { spec, vectors } => cmd_closure(&cli, spec, vectors),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("opmult: {msg}");
            ExitCode::from(2)
        }
    }
}
