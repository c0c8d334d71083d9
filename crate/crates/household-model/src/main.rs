use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use household_model::cli::{
    cmd_solve, cmd_statics, cmd_sweep, cmd_verify, CmdResult, Scenario, SweepOptions, EXIT_USAGE,
};
use household_model::config::ModelConfig;
use household_model::sweep::SweepParameter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Household resource-allocation model: closed-form optimal choices,
/// comparative statics, an independent numerical check, and parameter
/// sweeps.
#[derive(Parser)]
#[command(name = "household-model", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the closed-form allocation for a config file
    Solve {
        /// Path to a key = value model config
        config: PathBuf,
    },
    /// Print the sensitivity matrix; optionally the reference tabulation
    /// and the sign-structure claim checks
    Statics {
        config: PathBuf,
        /// Also print the tabulated reference matrix and the cell-by-cell
        /// discrepancy report
        #[arg(long)]
        table1: bool,
        /// Also print the sign pattern and the claim checks
        #[arg(long)]
        signs: bool,
    },
    /// Cross-validate the closed form against the numerical maximizer
    Verify {
        config: PathBuf,
        /// Number of sampled instances beyond the config instance
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        /// Base seed for instance sampling
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Test hook: perturb the closed form to exercise failure reporting
        #[arg(long, hide = true)]
        corrupt_closed_form: bool,
    },
    /// Sweep one parameter over a grid, or run a named scenario
    Sweep {
        config: PathBuf,
        /// Swept parameter: gamma1..gamma7, tau or w
        #[arg(long)]
        param: Option<String>,
        /// First grid value
        #[arg(long)]
        from: Option<f64>,
        /// Last grid value
        #[arg(long)]
        to: Option<f64>,
        /// Number of grid points (at least 2)
        #[arg(long)]
        steps: Option<usize>,
        /// CSV output path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Named scenario: crowd_out, qq_frontier or future_earnings
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };

    let code = match cli.command {
        Command::Solve { config } => with_config(&config, cmd_solve),
        Command::Statics {
            config,
            table1,
            signs,
        } => with_config(&config, |cfg| cmd_statics(cfg, table1, signs)),
        Command::Verify {
            config,
            seeds,
            seed,
            corrupt_closed_form,
        } => with_config(&config, |cfg| cmd_verify(cfg, seeds, seed, corrupt_closed_form)),
        Command::Sweep {
            config,
            param,
            from,
            to,
            steps,
            out,
            scenario,
        } => {
            let parsed_param = match param.as_deref().map(parse_param).transpose() {
                Ok(p) => p,
                Err(message) => return fail(&message),
            };
            let parsed_scenario = match scenario.as_deref().map(parse_scenario).transpose() {
                Ok(s) => s,
                Err(message) => return fail(&message),
            };
            let opts = SweepOptions {
                scenario: parsed_scenario,
                param: parsed_param,
                from,
                to,
                steps,
                out,
            };
            with_config(&config, |cfg| cmd_sweep(cfg, &opts))
        }
    };
    ExitCode::from(code as u8)
}

fn parse_param(name: &str) -> Result<SweepParameter, String> {
    SweepParameter::parse(name)
        .ok_or_else(|| format!("unknown parameter '{name}' (expected gamma1..gamma7, tau or w)"))
}

fn parse_scenario(name: &str) -> Result<Scenario, String> {
    Scenario::parse(name).ok_or_else(|| {
        format!("unknown scenario '{name}' (expected crowd_out, qq_frontier or future_earnings)")
    })
}

fn fail(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn with_config(path: &Path, run: impl FnOnce(&ModelConfig) -> CmdResult) -> i32 {
    match ModelConfig::load(path) {
        Ok(cfg) => emit(run(&cfg)),
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            EXIT_USAGE
        }
    }
}

fn emit(result: CmdResult) -> i32 {
    print!("{}", result.stdout);
    eprint!("{}", result.stderr);
    result.code
}
