//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{rk4, BackwardWeight};
use roughlab::flow::{feynman_kac_weight, TrigField, VectorField, VectorFieldSet};
use roughlab::pde::{bihari_time_bound, burgers_bihari, WeightSummary};
use roughlab::roughpath::{lift_piecewise_linear, SampledPath, TimeGrid};
use roughlab::scenario::{self, BetaFamily, RunOptions, RunSummary, ScenarioConfig, Status};

struct Outcome {
    ok: bool,
    detail: String,
}

fn config(name: &str, out: &Path) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    let mut cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    cfg.output = out.join(name);
    cfg
}

fn run(cfg: &ScenarioConfig, workers: Option<usize>) -> RunSummary {
    scenario::run(cfg, &RunOptions { workers }).unwrap_or_else(|e| panic!("{} failed to run: {e}", cfg.scenario))
}

/// All named checks pass (or every check when `names` is empty).
fn checks_pass(summary: &RunSummary, names: &[&str]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut prefixed = 0;
    for c in &summary.checks {
        if !names.is_empty() && !names.iter().any(|n| c.name.starts_with(n)) {
            continue;
        }
        if !names.iter().any(|n| *n == c.name) {
            prefixed += 1;
        }
        if c.status != Status::Pass {
            ok = false;
        }
        let row = c.row();
        if names.iter().any(|n| *n == c.name) || c.status != Status::Pass {
            parts.push(format!("{} {} {}", c.name, row[1], row[3]));
        }
    }
    for n in names.iter().filter(|n| !n.ends_with('-')) {
        if !summary.checks.iter().any(|c| c.name == *n) {
            ok = false;
            parts.push(format!("{n} missing"));
        }
    }
    if prefixed > 0 {
        parts.push(format!("{prefixed} {} checks", names.iter().filter(|n| n.ends_with('-')).cloned().collect::<Vec<_>>().join("/")));
    }
    Outcome { ok, detail: parts.join("; ") }
}

fn and(a: Outcome, b: Outcome) -> Outcome {
    Outcome { ok: a.ok && b.ok, detail: [a.detail, b.detail].into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join("; ") }
}

fn within(o: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let fast = elapsed <= limit;
    Outcome {
        ok: o.ok && fast,
        detail: format!("{}; {:.1}s (limit {}s)", o.detail, elapsed.as_secs_f64(), limit.as_secs()),
    }
}

fn chen(out: &Path) -> Outcome {
    let t = Instant::now();
    let s = run(&config("lift-check", out), None);
    within(checks_pass(&s, &["chen-", "symmetry-"]), t.elapsed(), Duration::from_secs(10))
}

fn sewing(out: &Path) -> Outcome {
    let t = Instant::now();
    let s = run(&config("sewing-rate", out), None);
    let o = checks_pass(&s, &["sewing-power-rate", "sewing-young-integral", "sewing-refinement-agreement"]);
    within(o, t.elapsed(), Duration::from_secs(30))
}

fn flow(out: &Path) -> Outcome {
    let t = Instant::now();
    let s = run(&config("flow-convergence", out), None);
    let o = checks_pass(&s, &["flow-exponential", "flow-solenoidal-jacobian", "flow-self-convergence"]);
    within(o, t.elapsed(), Duration::from_secs(120))
}

/// Deterministic driver: Monte Carlo weight against the backward equation.
fn weight_oracle() -> Outcome {
    let (length, period, amp, horizon, steps) = (20.0, 5.0, 1.0, 0.5, 256);
    let grid = TimeGrid::new(horizon, steps).unwrap();
    let z = SampledPath::from_fn(grid, 1, |t, z| z[0] = 2.0 * t + 0.5 * (2.0 * std::f64::consts::PI * t / horizon).sin())
        .unwrap();
    let rp = lift_piecewise_linear(&z).unwrap();
    let dt = grid.dt();
    let zdot = |t: f64| {
        let k = ((t / dt).floor() as usize).min(steps - 1);
        (z.at(k + 1)[0] - z.at(k)[0]) / dt
    };
    let oracle = BackwardWeight { amplitude: amp, period, length, phase: 0.0, points: 256 };
    let reference = oracle.solve(zdot, horizon, 20 * steps);
    let idx: Vec<usize> = (0..8).map(|i| 3 + 29 * i).collect();
    let pts: Vec<f64> = idx.iter().map(|&i| oracle.node(i)).collect();
    let beta = TrigField::sine(1, 0, amp, period, 0.0, vec![1.0]).unwrap();
    let beta = VectorFieldSet::new(vec![Arc::new(beta) as Arc<dyn VectorField>]).unwrap();
    let w = feynman_kac_weight(&pts, 0.0, &beta, &rp, 10_000, 2024).unwrap();
    let worst = idx
        .iter()
        .enumerate()
        .map(|(k, &i)| (w.mean[k] - reference[i]).abs() / w.std_error[k])
        .fold(0.0, f64::max);
    Outcome { ok: worst <= 3.0, detail: format!("backward-PDE oracle max |Δ|/se={worst:.2}") }
}

fn weight(out: &Path) -> Outcome {
    let t = Instant::now();
    let s = run(&config("weight-field", out), None);
    let sine = checks_pass(&s, &["weight-positive", "weight-lower-bound", "weight-stderr-scaling"]);
    let mut cfg = config("weight-field", out);
    cfg.output = out.join("weight-field-solenoidal");
    cfg.grid.dim = 2;
    cfg.grid.points = 16;
    cfg.driver.dim = 2;
    cfg.beta.family = BetaFamily::Solenoidal;
    cfg.monte_carlo.samples = 64;
    cfg.flow.points = vec![0.0, 0.0];
    cfg.nonlinearity.kind = scenario::FluxKind::Zero;
    let div_free = checks_pass(&run(&cfg, None), &["weight-divergence-free"]);
    within(and(and(div_free, weight_oracle()), sine), t.elapsed(), Duration::from_secs(300))
}

fn energy(out: &Path) -> (Outcome, RunSummary) {
    let t = Instant::now();
    let s = run(&config("burgers-energy", out), None);
    let o = checks_pass(&s, &["energy-identity-order", "energy-weighted-residual", "energy-level-spread"]);
    (within(o, t.elapsed(), Duration::from_secs(600)), s)
}

fn remainder(out: &Path) -> Outcome {
    let t = Instant::now();
    let s = run(&config("remainder-fit", out), None);
    let o = checks_pass(&s, &["remainder-completed", "remainder-zeta", "remainder-increment-rate"]);
    within(o, t.elapsed(), Duration::from_secs(600))
}

/// Closed-form Bihari curve against RK4 on `x' = k x^q`, plus the Burgers
/// runs below the guaranteed horizon.
fn bihari(energy_run: &RunSummary) -> Outcome {
    let mut worst = 0.0_f64;
    let cases = [(1.2, 0.3, 3.0, 0.8), (0.5, 0.05, 3.0, 0.9), (2.0, 0.02, 2.5, 0.7)];
    for (u0, grad, q, ceps) in cases {
        let b = bihari_time_bound(u0, grad, q, ceps, 10.0).unwrap();
        for frac in [0.1, 0.4, 0.8] {
            let t = frac * b.explosion_time();
            let x = rk4(|_, x| b.k * x.powf(b.q), b.x0, t, 20_000);
            worst = worst.max((x - b.curve(t)).abs() / x);
        }
    }
    let w = WeightSummary { inf: 0.9, sup: 1.1, grad_sup: 0.2 };
    let b = burgers_bihari(1.3, &w, 10.0).unwrap();
    let t = 0.5 * b.explosion_time();
    let x = rk4(|_, x| b.k * x.powf(b.q), b.x0, t, 20_000);
    worst = worst.max((x - b.curve(t)).abs() / x);
    let closed = Outcome { ok: worst <= 1e-8, detail: format!("closed form vs RK4 rel={worst:.2e}") };
    and(closed, checks_pass(energy_run, &["energy-completed", "bihari-horizon", "bihari-dominance"]))
}

fn contraction(out: &Path) -> Outcome {
    let t = Instant::now();
    let lip = run(&config("contraction-lipschitz", out), None);
    let burgers = run(&config("contraction-burgers", out), None);
    let o = and(
        checks_pass(&lip, &["contraction-completed", "contraction-bound"]),
        checks_pass(&burgers, &["contraction-completed", "contraction-quadratic-scaling"]),
    );
    within(o, t.elapsed(), Duration::from_secs(600))
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if name != scenario::MANIFEST {
            out.insert(name, std::fs::read(&p).unwrap());
        }
    }
    out
}

/// Identical configs under different worker counts give identical bytes;
/// a re-run from the written manifest does too.
fn determinism(out: &Path) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["weight-field", "burgers-energy"] {
        let mut cfg = config(name, out);
        cfg.driver.replicates = 2;
        cfg.monte_carlo.samples = 64;
        cfg.monte_carlo.sample_sweep = vec![64, 256];
        let mut dirs = Vec::new();
        for (k, workers) in [Some(1), Some(3)].into_iter().enumerate() {
            cfg.output = out.join(format!("det-{name}-{k}"));
            dirs.push(run(&cfg, workers).dir);
        }
        let replay = ScenarioConfig::load(&dirs[0].join(scenario::MANIFEST)).unwrap();
        let mut replay = replay;
        replay.output = out.join(format!("det-{name}-replay"));
        dirs.push(run(&replay, None).dir);
        let reference = artifacts(&dirs[0]);
        let same = dirs[1..].iter().all(|d| artifacts(d) == reference);
        ok &= same && !reference.is_empty();
        parts.push(format!("{name}: {} files {}", reference.len(), if same { "identical" } else { "DIFFER" }));
    }
    Outcome { ok, detail: parts.join("; ") }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out: PathBuf = tmp.path().to_path_buf();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, title: &'static str, o: Outcome| {
        println!("criterion {n} {title}: {} ({})", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, title, o));
    };
    report(1, "chen relations", chen(&out));
    report(2, "sewing rates", sewing(&out));
    report(3, "flow and liouville", flow(&out));
    report(4, "feynman-kac weight", weight(&out));
    let (e, energy_run) = energy(&out);
    report(5, "energy", e);
    report(6, "remainder exponent", remainder(&out));
    report(7, "bihari", bihari(&energy_run));
    report(8, "contraction", contraction(&out));
    report(9, "determinism", determinism(&out));
    let failed = results.iter().filter(|r| !r.2.ok).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
