//! Config-driven experiments behind the `roughlab` binary.
//!
//! A run writes `manifest.json` first (status `running`), then its CSV
//! tables, then `checks.json`, and finally rewrites the manifest with the
//! artifact hashes. CSV files start with `#`-prefixed metadata lines.

mod check;
mod config;
mod contraction;
mod energy;
mod flow;
mod lift;
mod remainder;
mod sewing;
mod tensor;
mod weight;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use check::{Check, Status};
pub use config::{
    smooth_path, BetaConfig, BetaFamily, ContractionConfig, DriverConfig, DriverKind, EnergyConfig, FlowConfig,
    FluxConfig, FluxKind, GridConfig, InitialConfig, LiftConfig, MonteCarloConfig, RemainderConfig, ReportConfig,
    ScenarioConfig, SewingConfig, SolverConfig, TensorConfig,
};

use crate::error::{Error, Result};

/// Registered scenario names.
pub const SCENARIOS: &[&str] = &[
    "lift-check",
    "sewing-rate",
    "flow-convergence",
    "weight-field",
    "burgers-energy",
    "remainder-fit",
    "contraction",
    "tensor-energy",
];

pub const MANIFEST: &str = "manifest.json";
pub const CHECKS: &str = "checks.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    /// `running`, `passed` or `failed`.
    pub status: String,
    pub config: ScenarioConfig,
    /// SHA-256 of every written artifact, keyed by file name.
    pub artifacts: BTreeMap<String, String>,
    pub rough_path_sha256: Option<String>,
    pub wall_clock_seconds: f64,
    /// Solver time steps taken across all PDE runs.
    pub steps: u64,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("no run manifest at {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output sink shared by the scenario bodies.
pub(crate) struct RunContext<'a> {
    pub cfg: &'a ScenarioConfig,
    dir: PathBuf,
    artifacts: BTreeMap<String, String>,
    pub steps: u64,
}

impl RunContext<'_> {
    /// Writes `name` as `#`-prefixed metadata followed by the body.
    pub fn csv(&mut self, name: &str, meta: &[(&str, String)], body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        let mut head = String::new();
        writeln!(head, "# scenario: {}", self.cfg.scenario).unwrap();
        for (k, v) in meta {
            writeln!(head, "# {k}: {v}").unwrap();
        }
        buf.extend_from_slice(head.as_bytes());
        body(&mut buf)?;
        self.file(name, &buf)
    }

    pub fn file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for the Monte Carlo pool; `None` uses rayon's default.
    /// Never affects numeric output.
    pub workers: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }
}

/// Runs one scenario, writing all outputs into `cfg.output`.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir)?;
    for stale in [MANIFEST, CHECKS] {
        let p = dir.join(stale);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    let mut manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.scenario.clone(),
        status: "running".to_string(),
        config: cfg.clone(),
        artifacts: BTreeMap::new(),
        rough_path_sha256: None,
        wall_clock_seconds: 0.0,
        steps: 0,
    };
    manifest.write(&dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let mut ctx = RunContext { cfg, dir: dir.clone(), artifacts: BTreeMap::new(), steps: 0 };
    let checks = pool.install(|| -> Result<Vec<Check>> {
        let mut rp_text = Vec::new();
        cfg.rough_path(cfg.driver.seed)?.write_text(&mut rp_text)?;
        ctx.file("rough_path.txt", &rp_text)?;
        match cfg.scenario.as_str() {
            "lift-check" => lift::run(&mut ctx),
            "sewing-rate" => sewing::run(&mut ctx),
            "flow-convergence" => flow::run(&mut ctx),
            "weight-field" => weight::run(&mut ctx),
            "burgers-energy" => energy::run(&mut ctx),
            "remainder-fit" => remainder::run(&mut ctx),
            "contraction" => contraction::run(&mut ctx),
            "tensor-energy" => tensor::run(&mut ctx),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    })?;
    let text = serde_json::to_string_pretty(&checks).expect("checks serialize") + "\n";
    ctx.file(CHECKS, text.as_bytes())?;

    manifest.rough_path_sha256 = ctx.artifacts.get("rough_path.txt").cloned();
    manifest.artifacts = ctx.artifacts;
    manifest.steps = ctx.steps;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let summary = RunSummary { dir: dir.clone(), manifest, checks };
    let mut manifest = summary.manifest.clone();
    manifest.status = if summary.passed() { "passed" } else { "failed" }.to_string();
    manifest.write(&dir)?;
    Ok(RunSummary { manifest, ..summary })
}

/// Rendered summary of a finished run directory.
#[derive(Clone, Debug)]
pub struct Report {
    pub table: String,
    pub json: serde_json::Value,
    pub manifest: Manifest,
    pub checks: Vec<Check>,
}

/// Reads a run directory; a missing manifest is a configuration error.
pub fn report(dir: &Path) -> Result<Report> {
    let manifest = Manifest::read(dir)?;
    let checks: Vec<Check> = match std::fs::read_to_string(dir.join(CHECKS)) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Config(format!("{CHECKS}: {e}")))?,
        Err(_) => Vec::new(),
    };
    let rows: Vec<[String; 4]> = checks.iter().map(|c| c.row()).collect();
    let mut width = [0usize; 4];
    for r in &rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut table = String::new();
    writeln!(table, "scenario {}  status {}  ({} checks)", manifest.scenario, manifest.status, checks.len()).unwrap();
    for r in &rows {
        let mut line = String::new();
        for (i, cell) in r.iter().enumerate() {
            let pad = width[i] - cell.chars().count();
            line.push_str(cell);
            if i + 1 < r.len() {
                line.push_str(&" ".repeat(pad + 2));
            }
        }
        writeln!(table, "{line}").unwrap();
    }
    let json = serde_json::json!({
        "scenario": manifest.scenario,
        "status": manifest.status,
        "passed": checks.iter().filter(|c| c.status == Status::Pass).count(),
        "failed": checks.iter().filter(|c| c.status == Status::Fail).count(),
        "skipped": checks.iter().filter(|c| c.status == Status::Skip).count(),
        "checks": checks,
    });
    Ok(Report { table, json, manifest, checks })
}

/// Formats a number for CSV output (shortest round-trip form).
pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}
