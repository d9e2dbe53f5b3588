//! Runs a scenario from an in-memory config and prints its report.

use roughlab::scenario::{self, RunOptions, ScenarioConfig};

fn main() -> roughlab::Result<()> {
    let dir = std::env::temp_dir().join("roughlab-example-lift-check");
    let mut cfg = ScenarioConfig::for_scenario("lift-check", &dir);
    cfg.driver.dim = 2;
    cfg.driver.steps = 1024;
    cfg.driver.levels = vec![10];
    println!("{}", cfg.to_toml());

    let summary = scenario::run(&cfg, &RunOptions::default())?;
    print!("{}", scenario::report(&summary.dir)?.table);
    println!("artifacts in {}", summary.dir.display());
    Ok(())
}
