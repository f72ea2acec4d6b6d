use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use crate::diagnostics::{
    cadlag_modulus_of, energy_report, galerkin_convergence_study, perturbed_pair, uniqueness_experiment, ModulusField,
};
use crate::error::{Error, Result};
use crate::integrator::SimConfig;
use crate::jump_noise::{verify_assumption_b, verify_isometry, StepProcess};
use crate::operators::sweep_operator_bounds;
use crate::spectral_basis::{NormKind, SpectralVelocity};

use super::{
    ensemble, parse_config, run_path, write_jump_log, write_json, write_trajectory, Format, RunManifest,
};

pub const EXIT_OK: i32 = 0;
/// A verification command found a failed check, or a run failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Bad flags, unknown command or invalid configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Ndjson,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L2,
    H1,
    VDual,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L2 => NormKind::L2,
            NormArg::H1 => NormKind::H1,
            NormArg::VDual => NormKind::VDual,
        }
    }
}

/// Spectral Galerkin runs and checks for stochastic nematic flow with jump noise.
#[derive(Debug, Parser)]
#[command(name = "njsm", version)]
pub struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Number of ensemble paths.
    #[arg(long, global = true, default_value_t = 100)]
    paths: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Trajectory file format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Ndjson)]
    format: FormatArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run path 0 and write its trajectory and jump log.
    Simulate,
    /// Run `--paths` members and write per-path summaries and moment tables.
    Ensemble,
    /// Sweep the operator inequalities on random fields.
    VerifyOperators {
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Isometry and Lipschitz/growth checks for the configured noise.
    VerifyNoise {
        #[arg(long, default_value_t = 100_000)]
        isometry_paths: usize,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 2000)]
        marks: usize,
    },
    /// Energy balance and jump ledger of path 0.
    VerifyEnergy {
        /// Exponent of the `|d|^p` balance.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Identical and perturbed runs sharing one jump path.
    Uniqueness {
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Cadlag modulus of path 0.
    Modulus {
        /// Partition mesh; repeat for several values (default T/10).
        #[arg(long)]
        delta: Vec<f64>,
        #[arg(long, value_enum, default_value_t = NormArg::VDual)]
        norm: NormArg,
        /// Measure the director instead of the velocity.
        #[arg(long)]
        director: bool,
    },
    /// Successive-resolution distances.
    Converge {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8])]
        cutoffs: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::VerifyOperators { .. } => "verify-operators",
            Command::VerifyNoise { .. } => "verify-noise",
            Command::VerifyEnergy { .. } => "verify-energy",
            Command::Uniqueness { .. } => "uniqueness",
            Command::Modulus { .. } => "modulus",
            Command::Converge { .. } => "converge",
        }
    }
}

/// Parse `args` (program name first) and execute; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match load_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli, &config) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CHECK_FAILED
        }
    }
}

fn load_config(c: &Common) -> Result<SimConfig> {
    let mut config = match &c.config {
        Some(p) => parse_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = c.seed {
        config.seed = s;
    }
    Ok(config)
}

fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn execute(cli: &Cli, config: &SimConfig) -> Result<bool> {
    let c = &cli.common;
    std::fs::create_dir_all(&c.out).map_err(|e| Error::io(&c.out, e))?;
    let workers = if c.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        c.workers
    };
    let format = match c.format {
        FormatArg::Ndjson => Format::Ndjson,
        FormatArg::Binary => Format::Binary,
    };
    let name = cli.command.name();
    info!("{name}: seed {} dim {} K {}", config.seed, config.dim, config.cutoff);
    let (params, ok, outputs, failures) = match &cli.command {
        Command::Simulate => {
            let traj = run_path(config, 0)?;
            let file = out_path(&c.out, &format!("trajectory.{}", format.extension()));
            let outputs = vec![
                write_trajectory(&traj, &file, format)?,
                write_jump_log(&traj.jumps, out_path(&c.out, "jumps.ndjson"))?,
            ];
            (json!({"format": format}), true, outputs, vec![])
        }
        Command::Ensemble => {
            let r = ensemble(config, c.paths, workers)?;
            let mut lines = Vec::new();
            for p in &r.paths {
                serde_json::to_writer(&mut lines, p)?;
                lines.push(b'\n');
            }
            let paths_file = out_path(&c.out, "paths.ndjson");
            std::fs::write(&paths_file, &lines).map_err(|e| Error::io(&paths_file, e))?;
            let outputs = vec![
                write_json(&r.stats, out_path(&c.out, "stats.json"))?,
                super::ManifestEntry::for_bytes(&paths_file, "ndjson", &lines),
            ];
            for f in &r.failures {
                warn!("path {} failed: {}", f.index, f.error);
            }
            (json!({"paths": c.paths}), r.failures.is_empty(), outputs, r.failures)
        }
        Command::VerifyOperators { samples } => {
            let basis = config.basis()?;
            let report = sweep_operator_bounds(&basis, &config.poly, *samples, config.seed)?;
            let ok = report.bounds.iter().all(|b| b.is_finite());
            let outputs = vec![write_json(&report, out_path(&c.out, "operator_bounds.json"))?];
            (json!({"samples": samples}), ok, outputs, vec![])
        }
        Command::VerifyNoise {
            isometry_paths,
            pairs,
            marks,
        } => {
            let basis = config.basis()?;
            let xi = SpectralVelocity::cos_mode(&basis, &unit_k(config.dim), 0, 1.0)?;
            let process = StepProcess::constant(xi, config.horizon);
            let iso = verify_isometry(&config.noise, &process, *isometry_paths, config.seed)?;
            let b = verify_assumption_b(&config.noise, &basis, *pairs, *marks, config.seed)?;
            let ok = iso.within(4.0) && b.checks.iter().all(|x| x.holds(0.01));
            let outputs = vec![write_json(
                &json!({"isometry": iso, "assumption_b": b}),
                out_path(&c.out, "noise_report.json"),
            )?];
            (
                json!({"isometry_paths": isometry_paths, "pairs": pairs, "marks": marks}),
                ok,
                outputs,
                vec![],
            )
        }
        Command::VerifyEnergy { p } => {
            let traj = run_path(config, 0)?;
            let report = energy_report(&traj, *p)?;
            let ok = report.director.violations().is_empty() && report.coupled.max_jump_mismatch() <= 1e-12;
            let outputs = vec![write_json(&report, out_path(&c.out, "energy_report.json"))?];
            (json!({"p": p}), ok, outputs, vec![])
        }
        Command::Uniqueness { epsilon } => {
            let seed = config.path_seed(0);
            let (a, b) = perturbed_pair(config, seed, *epsilon)?;
            let same = uniqueness_experiment(config, (&a, &a), seed)?;
            let pert = uniqueness_experiment(config, (&a, &b), seed)?;
            let ok = same.max_distance() == 0.0 && pert.gronwall_constant.is_finite();
            let outputs = vec![write_json(
                &json!({"identical": same, "perturbed": pert}),
                out_path(&c.out, "uniqueness_report.json"),
            )?];
            (json!({"epsilon": epsilon}), ok, outputs, vec![])
        }
        Command::Modulus { delta, norm, director } => {
            let cfg = SimConfig {
                store_states: true,
                ..config.clone()
            };
            let traj = run_path(&cfg, 0)?;
            let deltas = if delta.is_empty() { vec![cfg.horizon / 10.0] } else { delta.clone() };
            let field = if *director { ModulusField::Director } else { ModulusField::Velocity };
            let values = deltas
                .iter()
                .map(|&d| Ok(json!({"delta": d, "modulus": cadlag_modulus_of(&traj, d, (*norm).into(), field)?})))
                .collect::<Result<Vec<_>>>()?;
            let outputs = vec![write_json(&values, out_path(&c.out, "modulus.json"))?];
            (
                json!({"delta": deltas, "norm": format!("{norm:?}"), "director": director}),
                true,
                outputs,
                vec![],
            )
        }
        Command::Converge { cutoffs } => {
            let table = galerkin_convergence_study(config, cutoffs, config.path_seed(0))?;
            let ok = table.is_cauchy_decreasing();
            let outputs = vec![write_json(&table, out_path(&c.out, "convergence.json"))?];
            (json!({"cutoffs": cutoffs}), ok, outputs, vec![])
        }
    };
    let mut manifest = RunManifest::new(name, config, params);
    manifest.outputs = outputs;
    manifest.failures = failures;
    manifest.write(out_path(&c.out, "manifest.json"))?;
    if !ok {
        warn!("{name}: check failed");
    }
    Ok(ok)
}

fn unit_k(dim: usize) -> Vec<i32> {
    let mut k = vec![0; dim];
    k[0] = 1;
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["njsm", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["njsm", "simulate", "--paths", "many"]), EXIT_USAGE);
        assert_eq!(run(["njsm"]), EXIT_USAGE);
    }

    #[test]
    fn bad_config_exits_2() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "dt = -1.0\n").unwrap();
        let out = dir.path().join("o");
        let code = run([
            "njsm",
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
    }
}
