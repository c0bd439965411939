//! Batch front end: scenario files in, CSV tables and SVG plots out.

pub mod config;
pub mod engines;
pub mod figures;
pub mod svg;
pub mod table;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::Context;

pub use config::{ConfigError, Engine, Scenario};
pub use table::Table;

/// Runs every engine of a scenario and writes `{name}_{engine}.csv` (plus
/// SVG plots when enabled) into `out_dir`. Returns the written paths.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut written = Vec::new();
    for &engine in &scenario.engines {
        log::info!("{}: running {}", scenario.name, engine.label());
        let table = engines::run_engine(scenario, engine)?;
        let stem = format!("{}_{}", scenario.name, engine.label());
        let csv = out_dir.join(format!("{stem}.csv"));
        table
            .write_csv(&csv)
            .with_context(|| format!("cannot write {}", csv.display()))?;
        written.push(csv);
        if scenario.svg {
            for (suffix, plot) in figures::plots(scenario, engine, &table) {
                let path = out_dir.join(format!("{stem}{suffix}.svg"));
                std::fs::write(&path, plot.render()).with_context(|| format!("cannot write {}", path.display()))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
