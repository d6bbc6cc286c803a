use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kresnet_cli::config::AxisSpec;
use kresnet_cli::ingest::{ingest_histogram, read_points, read_samples, regression_preprocess};
use kresnet_cli::output::RunDir;
use kresnet_cli::{output_root, recipes, run, CliResult, RunOptions};
use kresnet_core::numerics::{BoundaryCondition, Grid};
use kresnet_core::Execution;

#[derive(Parser)]
#[command(name = "kresnet", version, about = "Mean-field and kinetic experiments for continuous residual networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a shipped recipe.
    Run {
        config: String,
        /// Output root (overrides KRESNET_OUTPUT_ROOT).
        #[arg(long)]
        output_root: Option<PathBuf>,
        /// Disable data parallelism.
        #[arg(long)]
        sequential: bool,
    },
    /// Check a config and list every problem found.
    Validate { config: String },
    /// List the shipped recipes.
    ListRecipes,
    /// Print a shipped recipe.
    ShowRecipe { name: String },
    /// Normalised histogram of a one-sample-per-line file on `lower:upper:cells`.
    Ingest {
        samples: PathBuf,
        gridspec: String,
        /// CSV destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slope and intercept of each consecutive pair of (x, y) points.
    RegressPreprocess {
        points: PathBuf,
        /// Directory for slopes.txt, intercepts.txt and pairs.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            output_root: root,
            sequential,
        } => {
            let cfg = recipes::load(&config)?;
            let root = root.unwrap_or_else(output_root);
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let result = run(&cfg, &root, RunOptions { exec });
            let m = result?;
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}: {} files in {} ({:.2} s)", m.name, m.outputs.len(), m.run_dir, m.wall_time_s);
        }
        Command::Validate { config } => {
            let cfg = recipes::load(&config)?;
            println!("{}: ok ({})", cfg.name, kresnet_cli::config::kind_name(cfg.kind));
        }
        Command::ListRecipes => {
            for r in recipes::RECIPES {
                let cfg = r.config()?;
                println!("{:<26} {}", r.name, cfg.description);
            }
        }
        Command::ShowRecipe { name } => {
            let r = recipes::find(&name).ok_or(kresnet_cli::CliError::UnknownRecipe(name))?;
            print!("{}", r.toml);
        }
        Command::Ingest { samples, gridspec, out } => {
            let axis = AxisSpec::parse(&gridspec)?;
            let grid = Grid::from_axes(vec![axis.axis()?])?;
            let field = ingest_histogram(&read_samples(&samples)?, &grid, BoundaryCondition::Outflow)?;
            match out {
                Some(path) => {
                    let dir = path.parent().map(PathBuf::from).unwrap_or_default();
                    let name = path.file_name().expect("file name").to_string_lossy().into_owned();
                    RunDir::create(dir)?.field(&name, "normalised histogram", &field, None)?;
                }
                None => {
                    println!("x,g");
                    for (j, g) in field.values.iter().enumerate() {
                        println!("{},{}", grid.x().center(j), g);
                    }
                }
            }
        }
        Command::RegressPreprocess { points, out_dir } => {
            let reg = regression_preprocess(&read_points(&points)?);
            for w in reg.warnings() {
                eprintln!("warning: {w}");
            }
            let mut dir = RunDir::create(out_dir)?;
            dir.csv("pairs.csv", "slope and intercept per pair", &[("m", "slope"), ("q", "intercept")], None, reg.pairs.iter().map(|p| p.to_vec()))?;
            let lines = |v: Vec<f64>| v.iter().map(|x| format!("{x}\n")).collect::<String>();
            let write = |name: &str, text: String| {
                let p = dir.path().join(name);
                std::fs::write(&p, text).map_err(|e| kresnet_cli::CliError::io(p, e))
            };
            write("slopes.txt", lines(reg.slopes()))?;
            write("intercepts.txt", lines(reg.intercepts()))?;
            println!("{} pairs, {} vertical skipped", reg.pairs.len(), reg.vertical_skipped);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
