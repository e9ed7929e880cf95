use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use forgecot_core::curriculum::{Controller, CurriculumConfig};

/// Reads batch mean rewards (one per row, first column, optional header).
pub fn read_rewards(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let Some(field) = rec.get(0).map(str::trim) else { continue };
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => anyhow::bail!("row {}: {field:?} is not a number", i + 1),
        }
    }
    Ok(out)
}

pub fn run(rewards: &Path, config: CurriculumConfig, audit_log: Option<PathBuf>) -> Result<()> {
    let values = read_rewards(rewards)?;
    let mut controller = Controller::new(config)?;
    if let Some(p) = audit_log {
        controller = controller.with_audit_log(p);
    }
    println!("batch,mean,stability,old_level,new_level");
    for v in values {
        let t = controller.observe(v)?;
        if t.changed() {
            println!("{},{},{},{},{}", t.batch, t.mean, t.stability, t.old_level, t.new_level);
        }
    }
    eprintln!("final level {}", controller.level());
    Ok(())
}
