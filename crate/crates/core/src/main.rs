use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chanflow::checks;
use chanflow::convergence::{convergence_csv, convergence_study, with_cells};
use chanflow::junction::JunctionModel;
use chanflow::oracle::OracleError;
use chanflow::output::write_run;
use chanflow::presets;
use chanflow::scenario::{prepare, ScenarioError, ScenarioFile};
use chanflow::simulation::run_with;

/// Overrides the output directory of `run`.
const OUTPUT_ENV: &str = "CHANFLOW_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "chanflow", version, about = "Shallow-water flow in channel networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        scenario: String,
        /// Output directory (default: output/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cell count for built-in single-link scenarios.
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long, value_parser = parse_model)]
        junction_model: Option<JunctionModel>,
    },
    /// Grid refinement study against a fine-grid reference.
    Convergence {
        scenario: String,
        /// Comma-separated cell counts.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        #[arg(long = "ref")]
        reference: usize,
        /// Directory for cached reference solutions.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in property suite.
    Check {
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Write the built-in scenarios as JSON files.
    Export { dir: PathBuf },
}

fn parse_model(s: &str) -> Result<JunctionModel, String> {
    match s {
        "cuj1" => Ok(JunctionModel::Cuj1),
        "cuj2" => Ok(JunctionModel::Cuj2),
        _ => Err(format!("unknown junction model '{s}' (cuj1 or cuj2)")),
    }
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Scenario(s) => s.into(),
            OracleError::Domain(m) => Failure::Input(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(scenario: &str, cells: Option<usize>) -> Result<ScenarioFile, Failure> {
    let path = Path::new(scenario);
    if path.exists() {
        let file = ScenarioFile::load(path)?;
        return match cells {
            Some(n) => Ok(with_cells(&file, n)?),
            None => Ok(file),
        };
    }
    if presets::NAMES.contains(&scenario) {
        return presets::build(scenario, cells).map_err(Failure::Input);
    }
    Err(Failure::Input(format!(
        "'{scenario}' is neither a file nor a built-in scenario ({})",
        presets::NAMES.join(", ")
    )))
}

fn cmd_run(
    scenario: &str,
    out: Option<PathBuf>,
    cells: Option<usize>,
    model: Option<JunctionModel>,
) -> Result<(), Failure> {
    let mut file = load(scenario, cells)?;
    if model.is_some() {
        file.scenario.junction_model = model;
    }
    let prepared = prepare(file)?;
    let dir = std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .or(out)
        .unwrap_or_else(|| PathBuf::from("output").join(&prepared.file.scenario.name));
    let mut solver = prepared.solver();
    let mut warned = false;
    let result = run_with(
        &mut solver,
        prepared.initial.clone(),
        &prepared.schedule,
        &prepared.gauges,
        |_, state, report| {
            if report.supercritical_junction && !warned {
                eprintln!(
                    "warning: t={:.6}: supercritical flow at a continuity-only junction; \
                     the momentum junction model is better suited",
                    state.time
                );
                warned = true;
            }
        },
    )
    .map_err(|e| Failure::Runtime(e.to_string()))?;
    write_run(&dir, &prepared, &mut solver, &result).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    println!(
        "{}: {} steps to t={} (min depth {:.3e}, mass residual {:.3e}) -> {}",
        prepared.file.scenario.name,
        result.summary.steps,
        result.summary.final_time,
        result.summary.min_depth,
        result.audit.last().map_or(0.0, |r| r.residual),
        dir.display()
    );
    Ok(())
}

fn cmd_convergence(
    scenario: &str,
    grids: &[usize],
    reference: usize,
    cache: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let base = load(scenario, None)?;
    let build = |n: usize| -> Result<ScenarioFile, OracleError> {
        if presets::NAMES.contains(&scenario) && !Path::new(scenario).exists() {
            presets::build(scenario, Some(n)).map_err(OracleError::Domain)
        } else {
            with_cells(&base, n)
        }
    };
    let rows = convergence_study(&build, grids, reference, cache.as_deref())?;
    let table = convergence_csv(&rows);
    print!("{table}");
    if let Some(p) = out {
        std::fs::write(&p, &table).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            cells,
            junction_model,
        } => cmd_run(&scenario, out, cells, junction_model),
        Command::Convergence {
            scenario,
            grids,
            reference,
            cache,
            out,
        } => cmd_convergence(&scenario, &grids, reference, cache, out),
        Command::Check { suite, seed } => match checks::run_suite(&suite, seed) {
            Ok(report) => {
                print!("{}", report.to_text());
                if report.passed() {
                    Ok(())
                } else {
                    Err(Failure::Runtime(format!("suite '{suite}' failed")))
                }
            }
            Err(e) => Err(Failure::Input(e)),
        },
        Command::Export { dir } => (|| {
            std::fs::create_dir_all(&dir)?;
            for (name, file) in presets::all() {
                std::fs::write(dir.join(format!("{name}.json")), file.to_json() + "\n")?;
            }
            Ok::<_, std::io::Error>(())
        })()
        .map_err(|e| Failure::Runtime(e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
