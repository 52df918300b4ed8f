//! Command-line interface: simulate, sweep, reduce-motor, validate.
//!
//! Exit codes: 0 success, 2 usage (clap), 3 configuration problem
//! (including setup errors caught when the run starts), 4 aborted run
//! (divergence or singular configuration), 5 failed validation checks.
//! All file output stays inside the `--out` directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    load_file_config, parse_set, resolve, write_manifest, FileConfig, ResolvedConfig,
};
use crate::error::{ConfigError, SimError};
use crate::metrics::compute_metrics;
use crate::plant::reduce_motor_model;
use crate::svg::render_chart;
use crate::sweep::{gain_sweep, sweep_to_csv, SweepOutcome};
use crate::trace::trace_to_string;
use crate::validate::{run_validation_suite, ValidationOptions};

pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_ABORTED: u8 = 4;
pub const EXIT_VALIDATION: u8 = 5;

#[derive(Parser)]
#[command(
    name = "sea-sim",
    version,
    about = "Deterministic simulation of a series-elastic hip joint under \
             backstepping sliding-mode force control"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file; defaults apply for anything not set.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override single values, e.g. --set 'plant.k = 18000'. Applied after
    /// the file, left to right.
    #[arg(long = "set", value_name = "KEY = VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => Some(load_file_config(path)?),
            None => None,
        };
        let mut sets: Vec<FileConfig> = Vec::with_capacity(self.set.len());
        for expr in &self.set {
            sets.push(parse_set(expr)?);
        }
        resolve(file, &sets)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; write trace, metrics, chart, and manifest.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (created if missing; one run per directory).
        #[arg(long)]
        out: PathBuf,
        /// Reserved for future stochastic features; recorded in the manifest.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the configured gain grid; write sweep.csv and manifest.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the motor model's second-order coefficients and first-order
    /// reduction.
    ReduceMotor {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Optional output directory for reduction.toml and manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the library self-checks; nonzero exit if any fail.
    Validate {
        /// Fractional fault injection on the derived length d6.
        #[arg(long, default_value_t = 0.0)]
        perturb_d6: f64,
        /// Replace the integration step used by the dynamic checks.
        #[arg(long)]
        override_dt: Option<f64>,
        /// Optional output directory for validation.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn prepare_out_dir(dir: &PathBuf) -> Result<(), ConfigError> {
    std::fs::create_dir_all(dir).map_err(|source| ConfigError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn write_out(path: PathBuf, contents: &str) -> Result<(), ConfigError> {
    std::fs::write(&path, contents).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        eprintln!("  caused by: {s}");
        src = s.source();
    }
    ExitCode::from(EXIT_CONFIG)
}

fn simulate(cfg: ConfigArgs, out: PathBuf, seed: Option<u64>) -> ExitCode {
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => return config_failure(&e),
    };
    let sim = match resolved.build_simulation() {
        Ok(s) => s,
        Err(e) => return config_failure(&e),
    };
    if let Err(e) = prepare_out_dir(&out) {
        return config_failure(&e);
    }
    match sim.run() {
        Ok(trace) => {
            let metrics = compute_metrics(&trace);
            let mut failures: Vec<ConfigError> = Vec::new();
            if resolved.output.trace {
                if let Err(e) = write_out(out.join("trace.csv"), &trace_to_string(&trace)) {
                    failures.push(e);
                }
            }
            if resolved.output.svg {
                if let Err(e) = write_out(out.join("chart.svg"), &render_chart(&trace)) {
                    failures.push(e);
                }
            }
            match toml::to_string(&metrics) {
                Ok(text) => {
                    if let Err(e) = write_out(out.join("metrics.toml"), &text) {
                        failures.push(e);
                    }
                }
                Err(e) => failures.push(ConfigError::Invalid {
                    location: "metrics".into(),
                    message: e.to_string(),
                }),
            }
            if let Err(e) = write_manifest(&out, &resolved, "simulate", "completed", seed) {
                failures.push(e);
            }
            if let Some(e) = failures.first() {
                return config_failure(e);
            }
            println!(
                "completed: {} rows, steady_state_error={:.3e} rad, sigma_rms={:.3e}{}",
                trace.len(),
                metrics.steady_state_error,
                metrics.sigma_rms_steady,
                metrics
                    .transient_time
                    .map(|t| format!(", settled at t={t:.3} s"))
                    .unwrap_or_else(|| ", never settled".into())
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            // The manifest still documents the aborted run.
            let _ = write_manifest(&out, &resolved, "simulate", &format!("aborted: {e}"), seed);
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for_sim_error(&e))
        }
    }
}

fn sweep(cfg: ConfigArgs, out: PathBuf, jobs: usize, seed: Option<u64>) -> ExitCode {
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => return config_failure(&e),
    };
    let sim = match resolved.build_simulation() {
        Ok(s) => s,
        Err(e) => return config_failure(&e),
    };
    if let Err(e) = prepare_out_dir(&out) {
        return config_failure(&e);
    }
    let records = gain_sweep(&sim, &resolved.sweep, jobs);
    let (mut ok, mut failed) = (0usize, 0usize);
    for r in &records {
        match &r.outcome {
            SweepOutcome::Ok { metrics } => {
                ok += 1;
                println!(
                    "ok     c={:<6} rho={:<6} k1={:<6} k2={:<6} sse={:.3e} sigma_rms={:.3e}",
                    r.gains.c,
                    r.gains.rho,
                    r.gains.k1,
                    r.gains.k2,
                    metrics.steady_state_error,
                    metrics.sigma_rms_steady
                );
            }
            SweepOutcome::Failed { error } => {
                failed += 1;
                println!(
                    "failed c={:<6} rho={:<6} k1={:<6} k2={:<6} {error}",
                    r.gains.c, r.gains.rho, r.gains.k1, r.gains.k2
                );
            }
        }
    }
    if let Err(e) = write_out(out.join("sweep.csv"), &sweep_to_csv(&records)) {
        return config_failure(&e);
    }
    let termination = format!("completed: {ok} ok, {failed} failed");
    if let Err(e) = write_manifest(&out, &resolved, "sweep", &termination, seed) {
        return config_failure(&e);
    }
    println!("{termination} ({} grid points)", records.len());
    ExitCode::SUCCESS
}

fn reduce_motor(cfg: ConfigArgs, out: Option<PathBuf>) -> ExitCode {
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => return config_failure(&e),
    };
    let motor = resolved.motor_params();
    let rate = resolved.motor.characteristic_rate;
    match reduce_motor_model(&motor) {
        Ok(red) => {
            let ratio = red.neglect_ratio(rate);
            println!("a2  = {:.6e}  (second-order coefficient, neglected)", red.a2);
            println!("a1  = {:.6e}", red.a1);
            println!("a0  = {:.6e}", red.a0);
            println!("c_v = {:.6}  (= a0/a1, first-order voltage gain)", red.c_v);
            println!("neglect ratio a2/a1 * {rate} rad/s = {ratio:.4e}");
            if let Some(dir) = out {
                if let Err(e) = prepare_out_dir(&dir) {
                    return config_failure(&e);
                }
                let body = match toml::to_string(&red) {
                    Ok(mut t) => {
                        t.push_str(&format!(
                            "neglect_ratio = {ratio}\ncharacteristic_rate = {rate}\n"
                        ));
                        t
                    }
                    Err(e) => {
                        return config_failure(&ConfigError::Invalid {
                            location: "reduction".into(),
                            message: e.to_string(),
                        })
                    }
                };
                if let Err(e) = write_out(dir.join("reduction.toml"), &body) {
                    return config_failure(&e);
                }
                if let Err(e) = write_manifest(&dir, &resolved, "reduce-motor", "completed", None)
                {
                    return config_failure(&e);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn validate(perturb_d6: f64, override_dt: Option<f64>, out: Option<PathBuf>) -> ExitCode {
    let opts = ValidationOptions {
        perturb_d6,
        override_dt,
    };
    let results = run_validation_suite(&opts);
    let mut text = String::new();
    for r in &results {
        let line = r.line();
        println!("{line}");
        text.push_str(&line);
        text.push('\n');
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let summary = format!("{} checks, {failed} failed", results.len());
    println!("{summary}");
    text.push_str(&summary);
    text.push('\n');
    if let Some(dir) = out {
        if let Err(e) = prepare_out_dir(&dir) {
            return config_failure(&e);
        }
        if let Err(e) = write_out(dir.join("validation.txt"), &text) {
            return config_failure(&e);
        }
    }
    if failed > 0 {
        ExitCode::from(EXIT_VALIDATION)
    } else {
        ExitCode::SUCCESS
    }
}

/// Parses arguments and dispatches. The binary's whole behavior lives here
/// so integration tests can cover it through the compiled executable.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { cfg, out, seed } => simulate(cfg, out, seed),
        Command::Sweep {
            cfg,
            out,
            jobs,
            seed,
        } => sweep(cfg, out, jobs, seed),
        Command::ReduceMotor { cfg, out } => reduce_motor(cfg, out),
        Command::Validate {
            perturb_d6,
            override_dt,
            out,
        } => validate(perturb_d6, override_dt, out),
    }
}

/// Used by `run` indirectly through SimError-returning paths; kept public
/// for tests that map errors to exit codes.
pub fn exit_code_for_sim_error(e: &SimError) -> u8 {
    match e {
        SimError::Setup(_) => EXIT_CONFIG,
        _ => EXIT_ABORTED,
    }
}
