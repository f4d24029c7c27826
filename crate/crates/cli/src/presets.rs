//! Bundled experiment configurations.

use std::path::Path;

use anyhow::{bail, Context, Result};
use foldlab::data::write_dataset;
use foldlab::synth::{generate, SynthSpec};

pub const NAMES: [&str; 4] = ["set1", "set2", "set3", "smoke"];

pub fn text(name: &str) -> Result<&'static str> {
    Ok(match name {
        "set1" => include_str!("../presets/set1.toml"),
        "set2" => include_str!("../presets/set2.toml"),
        "set3" => include_str!("../presets/set3.toml"),
        "smoke" => include_str!("../presets/smoke.toml"),
        other => bail!("unknown preset '{other}' (choose from {})", NAMES.join(", ")),
    })
}

/// Synthetic datasets the smoke preset refers to.
pub fn smoke_datasets() -> Vec<SynthSpec> {
    vec![
        SynthSpec::balanced("smoke_balanced", 120, 3, 11),
        SynthSpec::imbalanced("smoke_imbalanced", 120, 3, 12),
    ]
}

/// Writes `<dir>/<name>.toml`, plus generated data for the smoke preset.
pub fn write(name: &str, dir: &Path) -> Result<std::path::PathBuf> {
    let body = text(name)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    if name == "smoke" {
        let data = dir.join("data");
        std::fs::create_dir_all(&data)?;
        for spec in smoke_datasets() {
            let ds = generate(&spec)?;
            write_dataset(&ds, data.join(format!("{}.tsv", spec.name)), b'\t')?;
        }
    }
    Ok(path)
}
