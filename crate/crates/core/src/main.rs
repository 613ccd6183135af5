use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fonspn_core::error::Error;
use fonspn_core::harness::export::{write_quantities, write_records, write_trace_csv, QuantityRow};
use fonspn_core::harness::{
    knee, parse_grid, parse_list, parse_override, run_experiment, steady_comparison, sweep_mu,
    theory_report, ExperimentConfig,
};
use fonspn_core::{design_bank, Algorithm};

#[derive(Parser)]
#[command(
    name = "fonspn",
    version,
    about = "Subband p-norm adaptive filtering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a cosine-modulated analysis bank and dump its coefficients.
    DesignBank {
        #[arg(long)]
        bands: usize,
        #[arg(long = "len")]
        length: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the fractional-order interval, step-size bound and steady-state prediction.
    Bounds {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo experiment and write the aggregate NMSD trace.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Steady-state NMSD over a grid of step sizes.
    SweepMu {
        #[command(flatten)]
        config: ConfigArgs,
        /// start:stop:step
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical against predicted steady-state MSD at the listed step sizes.
    Steady {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated step sizes.
        #[arg(long)]
        mu_list: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override any config key, e.g. `--set noise.alpha=0.75`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    taps: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    flip_at: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut overrides = self
            .set
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                overrides.push((key.to_string(), v));
            }
        };
        push(
            "algo.algorithm",
            self.algorithm.map(|a| format!("{:?}", a.name())),
        );
        push("algo.mu", self.mu.map(|v| v.to_string()));
        push("algo.p", self.p.map(|v| v.to_string()));
        push("algo.beta", self.beta.map(|v| v.to_string()));
        push("algo.taps", self.taps.map(|v| v.to_string()));
        push("trials", self.trials.map(|v| v.to_string()));
        push("total_samples", self.samples.map(|v| v.to_string()));
        push("master_seed", self.seed.map(|v| v.to_string()));
        push("flip_at", self.flip_at.map(|v| v.to_string()));
        // an unreadable config file is a config error, not a runtime one
        ExperimentConfig::load(&self.config, &overrides).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            e => e,
        })
    }
}

enum Failure {
    Error(Error),
    AllDiverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::DesignBank { bands, length, out } => {
            let bank = design_bank(bands, length).map_err(|e| Error::Config(e.to_string()))?;
            let mut text = String::from("band");
            for n in 0..length {
                text.push_str(&format!(",c{n}"));
            }
            text.push('\n');
            for (i, f) in bank.coeffs().iter().enumerate() {
                text.push_str(&(i + 1).to_string());
                for c in f {
                    text.push_str(&format!(",{c}"));
                }
                text.push('\n');
            }
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|source| Error::Io { path, source })?
                }
                None => print!("{text}"),
            }
        }
        Command::Bounds { config, out } => {
            let cfg = config.load()?;
            let report = theory_report(&cfg)?;
            let mut rows = Vec::new();
            match report.beta_interval {
                Some(r) => {
                    rows.push(QuantityRow::new("beta_lower_open", r.lower));
                    rows.push(QuantityRow::new("beta_upper_closed", r.upper));
                    rows.push(QuantityRow::new(
                        "beta_admissible",
                        r.contains(cfg.algo.effective_beta()),
                    ));
                }
                None => rows.push(QuantityRow::new("beta_interval", "undefined (p > alpha)")),
            }
            rows.push(QuantityRow::new("mu_bound", report.step_bound.value));
            rows.push(QuantityRow::new(
                "mu_bound_with_h0",
                report.step_bound_h0.value,
            ));
            rows.push(QuantityRow::new("mu", cfg.algo.mu));
            match &report.steady_msd {
                Some(msd) => {
                    rows.push(QuantityRow::new("steady_msd", msd.value));
                    rows.push(QuantityRow::new(
                        "steady_msd_db",
                        fonspn_core::harness::to_db(msd.value),
                    ));
                }
                None => rows.push(QuantityRow::new("steady_msd", "unstable")),
            }
            for w in &report.step_bound.warnings {
                rows.push(QuantityRow::new("warning", w));
            }
            for r in &rows {
                println!("{:<20} {}", r.quantity, r.value);
            }
            if let Some(path) = out {
                write_quantities(&path, &cfg.to_toml_string(), &rows)?;
            }
        }
        Command::Simulate { config, out } => {
            let cfg = config.load()?;
            let result = run_experiment(&cfg)?;
            write_trace_csv(&out, &cfg, &result.rows())?;
            match result.aggregate.as_ref() {
                Some(agg) => {
                    let window = cfg.steady_window.min(agg.len());
                    let ss = agg.steady_state(window)?;
                    println!(
                        "{} trials ({} diverged), steady NMSD over last {window} updates: {:.2} dB",
                        cfg.trials,
                        result.diverged_trials(),
                        ss.db
                    );
                }
                None => {
                    eprintln!("all {} trials diverged", cfg.trials);
                    return Err(Failure::AllDiverged);
                }
            }
        }
        Command::SweepMu { config, grid, out } => {
            let cfg = config.load()?;
            let grid = parse_grid(&grid)?;
            let report = theory_report(&cfg)?;
            let points = sweep_mu(&cfg, &grid)?;
            let comments = format!(
                "{}mu_bound = {}\n",
                cfg.to_toml_string(),
                report.step_bound.value
            );
            write_records(
                &out,
                &comments,
                &points,
                &["mu", "steady_nmsd_db", "diverged_trials", "trials"],
            )?;
            for p in &points {
                println!(
                    "mu {:<10.4} steady {:>9.2} dB  diverged {}/{}",
                    p.mu, p.steady_nmsd_db, p.diverged_trials, p.trials
                );
            }
            println!(
                "theoretical bound {:.4}, first unstable grid point {:?}",
                report.step_bound.value,
                knee(&points)
            );
        }
        Command::Steady {
            config,
            mu_list,
            out,
        } => {
            let cfg = config.load()?;
            let mus = parse_list(&mu_list)?;
            let report = theory_report(&cfg)?;
            let points = steady_comparison(&cfg, &mus, &report.moments)?;
            write_records(
                &out,
                &cfg.to_toml_string(),
                &points,
                &["mu", "empirical_db", "theory_db", "diverged_trials"],
            )?;
            for p in &points {
                println!(
                    "mu {:<10.4} empirical {:>9.2} dB  theory {:>9.2} dB",
                    p.mu, p.empirical_db, p.theory_db
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::AllDiverged) => ExitCode::from(3),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
