use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qkdplan::decoy_rate::DecoyProtocolParams;
use qkdplan::lp_core::SolverOptions;
use qkdplan::scenario::{self, PlanObjective, ScenarioError, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "qkdplan", version, about = "Satellite QKD key-rate and key-routing planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate of a preset free-space link
    Rate {
        /// leo-gs, geo-gs or leo-leo
        preset: String,
        /// Link distance in metres (defaults to the preset's nominal distance)
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        y0: Option<f64>,
        #[arg(long)]
        e0: Option<f64>,
        /// Basis-sifting factor
        #[arg(long)]
        q: Option<f64>,
        /// Error-correction inefficiency
        #[arg(long)]
        f_ec: Option<f64>,
        #[arg(long)]
        pulse_rate: Option<f64>,
        /// Measured signal gain; needs --q-nu as well
        #[arg(long, requires = "q_nu")]
        q_mu: Option<f64>,
        /// Measured decoy gain; needs --q-mu as well
        #[arg(long, requires = "q_mu")]
        q_nu: Option<f64>,
    },
    /// Route keys through a scenario
    Plan {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        objective: Objective,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
        /// Write the report here; csv also writes a `.summary.csv` next to it
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Mmd,
    Mr,
    Dijkstra,
}

impl From<Objective> for PlanObjective {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Mmd => PlanObjective::Mmd,
            Objective::Mr => PlanObjective::Mr,
            Objective::Dijkstra => PlanObjective::Dijkstra,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Md,
    Csv,
}

fn write_out(path: &PathBuf, text: &str) -> Result<(), ScenarioError> {
    std::fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.clone(),
        source,
    })
}

fn run(cli: Cli) -> Result<i32, ScenarioError> {
    match cli.command {
        Command::Rate {
            preset,
            distance,
            mu,
            nu,
            y0,
            e0,
            q,
            f_ec,
            pulse_rate,
            q_mu,
            q_nu,
        } => {
            let mut p = DecoyProtocolParams::default();
            let overrides = [
                (&mut p.mu, mu),
                (&mut p.nu, nu),
                (&mut p.y0, y0),
                (&mut p.e0, e0),
                (&mut p.q, q),
                (&mut p.f_ec, f_ec),
                (&mut p.pulse_rate, pulse_rate),
            ];
            for (slot, value) in overrides {
                if let Some(v) = value {
                    *slot = v;
                }
            }
            let report = scenario::run_rate(&preset, distance, &p, q_mu.zip(q_nu))?;
            print!("{}", report.to_text());
            Ok(0)
        }
        Command::Plan {
            scenario: path,
            objective,
            format,
            out,
        } => {
            let solver = SolverOptions::from_env().map_err(|m| ScenarioError::Field {
                field: SolverOptions::TOL_ENV.into(),
                message: m,
            })?;
            let report = scenario::plan_file(&path, objective.into(), &solver)?;
            eprintln!("solved in {:.3} s", report.wall_clock.as_secs_f64());
            match (format, out) {
                (Format::Md, None) => print!("{}", report.to_markdown()),
                (Format::Md, Some(p)) => write_out(&p, &report.to_markdown())?,
                (Format::Csv, None) => print!("{}", report.flows_csv()),
                (Format::Csv, Some(p)) => {
                    write_out(&p, &report.flows_csv())?;
                    write_out(&p.with_extension("summary.csv"), &report.summary_csv())?;
                }
            }
            if !report.solution.is_optimal() {
                eprintln!("infeasible: the requested demands exceed what the key pools can carry");
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
