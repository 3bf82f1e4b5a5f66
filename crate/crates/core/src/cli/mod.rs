//! Experiment runner: parse a config, run one study, write a report bundle.
//!
//! A bundle is `manifest.json` plus one CSV per table and one JSON per
//! report. Exit codes: 0 success, 1 validation or operational error, 2 the
//! study ran but an acceptance check failed.

pub mod config;
mod studies;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
pub use config::{ExperimentConfig, Study};
pub use studies::{Check, Constant, StudyOutput, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ACCEPTANCE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kfat-lab", version, about = "Numerical studies of stable-process potential theory on kappa-fat sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sampling check of the kappa-fat corkscrew condition.
    Certify(RunArgs),
    /// Exit positions of the stable process from a start point.
    SampleExit(RunArgs),
    /// Green function table from walk-on-spheres.
    Green(RunArgs),
    /// Generalized and classical 3G sup fits.
    Threeg(RunArgs),
    /// Factor-free ratio along shrinking depth.
    Counterexample(RunArgs),
    /// Boundary growth exponent.
    Growth(RunArgs),
    /// Carleson estimate sup.
    Carleson(RunArgs),
    /// Young exponents and gauge integrals.
    Kato(RunArgs),
    /// Relativistic kernels and killing term.
    Relativistic(RunArgs),
    /// Conditions C1 to C4 on a Green evaluator.
    Conditions(RunArgs),
    /// Summarize one or more manifests.
    Report {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub study: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub walltime_s: f64,
    pub green_source: Option<String>,
    /// File names relative to the manifest.
    pub tables: Vec<String>,
    pub reports: Vec<String>,
    pub constants: Vec<Constant>,
    pub acceptance: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug)]
pub struct Outcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.passed {
            EXIT_OK
        } else {
            EXIT_ACCEPTANCE
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write a table as CSV.
pub fn write_table(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Table(e.to_string()))?;
    w.write_record(&t.header).map_err(|e| Error::Table(e.to_string()))?;
    for r in &t.rows {
        w.write_record(r).map_err(|e| Error::Table(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Run `study` from an already-parsed config. `config_bytes` feeds the hash;
/// `base_dir` anchors relative paths inside the config.
pub fn run_study(
    study: Study,
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    base_dir: &Path,
    ov: &Overrides,
) -> Result<Outcome> {
    let seed = ov.seed.unwrap_or(cfg.seed);
    let workers = match ov.workers {
        Some(0) => return Err(Error::Config { path: "--workers".into(), reason: "must be at least 1".into() }),
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let resolved = cfg.resolve(study, base_dir)?;
    let out_dir = ov
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|p| resolved.resolve_path(p)))
        .unwrap_or_else(|| PathBuf::from("out").join(study.name()));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config { path: "--workers".into(), reason: e.to_string() })?;
    let start = Instant::now();
    let output = pool.install(|| studies::run(study, cfg, &resolved, seed))?;
    let walltime_s = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir)?;
    let mut tables = Vec::new();
    for t in &output.tables {
        let name = format!("{}.csv", t.name);
        write_table(&out_dir.join(&name), t)?;
        tables.push(name);
    }
    let mut reports = Vec::new();
    for (name, value) in &output.reports {
        let file = format!("{name}.json");
        std::fs::write(out_dir.join(&file), serde_json::to_string_pretty(value)?)?;
        reports.push(file);
    }
    let passed = output.checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        study: study.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(config_bytes),
        seed,
        workers,
        walltime_s,
        green_source: output.green_source,
        tables,
        reports,
        constants: output.constants,
        acceptance: output.checks,
        passed,
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(Outcome { manifest, manifest_path })
}

/// Load a config file and run it.
pub fn run_file(study: Study, path: &Path, ov: &Overrides) -> Result<Outcome> {
    let (cfg, bytes) = ExperimentConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_study(study, &cfg, &bytes, &base, ov)
}

/// Human-readable summary of several manifests.
pub fn summarize(manifests: &[Manifest]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for m in manifests {
        let verdict = if m.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "== {} [{verdict}] seed={} workers={} {:.2}s config={}", m.study, m.seed, m.workers, m.walltime_s, &m.config_sha256[..12.min(m.config_sha256.len())]);
        if let Some(g) = &m.green_source {
            let _ = writeln!(s, "   green: {g}");
        }
        for c in &m.constants {
            let stab = match c.stable {
                Some(true) => " (stable)",
                Some(false) => " (UNSTABLE)",
                None => "",
            };
            let _ = writeln!(s, "   {:<48} {:>14.6e}{stab}", c.name, c.value);
        }
        for c in &m.acceptance {
            let _ = writeln!(s, "   [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if manifests.len() > 1 {
        let _ = writeln!(s, "\n{:<16} {:>8} {:>8}", "study", "checks", "failed");
        for m in manifests {
            let failed = m.acceptance.iter().filter(|c| !c.passed).count();
            let _ = writeln!(s, "{:<16} {:>8} {:>8}", m.study, m.acceptance.len(), failed);
        }
    }
    s
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { path: path.display().to_string(), reason: e.to_string() })?;
    Ok(serde_json::from_str(&text)?)
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let (study, a) = match cli.command {
        Command::Report { manifests } => {
            return match manifests.iter().map(|p| read_manifest(p)).collect::<Result<Vec<_>>>() {
                Ok(ms) => {
                    print!("{}", summarize(&ms));
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INVALID
                }
            };
        }
        Command::Certify(a) => (Study::Certify, a),
        Command::SampleExit(a) => (Study::SampleExit, a),
        Command::Green(a) => (Study::Green, a),
        Command::Threeg(a) => (Study::Threeg, a),
        Command::Counterexample(a) => (Study::Counterexample, a),
        Command::Growth(a) => (Study::Growth, a),
        Command::Carleson(a) => (Study::Carleson, a),
        Command::Kato(a) => (Study::Kato, a),
        Command::Relativistic(a) => (Study::Relativistic, a),
        Command::Conditions(a) => (Study::Conditions, a),
    };
    let ov = Overrides { seed: a.seed, workers: a.workers, out: a.out };
    match run_file(study, &a.config, &ov) {
        Ok(o) => {
            println!("{}", o.manifest_path.display());
            for c in o.manifest.acceptance.iter().filter(|c| !c.passed) {
                eprintln!("acceptance failed: {}: {}", c.name, c.detail);
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

#[cfg(test)]
mod tests;
