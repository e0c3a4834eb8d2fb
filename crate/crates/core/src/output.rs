//! CSV and manifest emission.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! field parses back to the same `f64`. Lines end in `\n`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ScenarioFile;
use crate::engine::CampaignPoint;
use crate::phy::CollisionClass;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

pub fn goodput_csv(points: &[CampaignPoint]) -> String {
    let mut s = String::from("strategy,U,goodput_mean,goodput_ci95\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.strategy, p.num_devices, p.goodput.mean, p.goodput.ci95
        );
    }
    s
}

/// Goodput over `U` times the mean transmit power, plus the same figure
/// divided by the time on air.
pub fn energy_csv(points: &[CampaignPoint]) -> String {
    let mut s = String::from("strategy,U,energy_mean,energy_ci95,energy_per_joule_mean,energy_per_joule_ci95\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            p.strategy,
            p.num_devices,
            p.energy_eff.mean,
            p.energy_eff.ci95,
            p.energy_eff_per_joule.mean,
            p.energy_eff_per_joule.ci95
        );
    }
    s
}

/// Mean messages per lap by collision class and outcome, for one `U`.
pub fn collisions_csv(points: &[CampaignPoint], num_devices: usize) -> String {
    let mut s = String::from("strategy,class,decoded,lost\n");
    for p in points.iter().filter(|p| p.num_devices == num_devices) {
        for (c, class) in CollisionClass::ALL.iter().enumerate() {
            let [decoded, lost] = p.collisions[c];
            let _ = writeln!(s, "{},{},{},{}", p.strategy, class.as_str(), decoded, lost);
        }
    }
    s
}

/// The resolved scenario as a loadable scenario file, headed by comments.
pub fn manifest(file: &ScenarioFile) -> String {
    format!(
        "# dtsnoma {}\n# Load this file with --config to reproduce the run.\n{}",
        env!("CARGO_PKG_VERSION"),
        file.to_toml()
    )
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, OutputError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| OutputError {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes all result files into `outdir`, creating it if needed, and
/// returns their paths.
pub fn emit_results(points: &[CampaignPoint], file: &ScenarioFile, outdir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(outdir).map_err(|source| OutputError {
        path: outdir.to_path_buf(),
        source,
    })?;
    let mut written = vec![
        write(outdir, "goodput.csv", &goodput_csv(points))?,
        write(outdir, "energy.csv", &energy_csv(points))?,
    ];
    let mut counts: Vec<usize> = points.iter().map(|p| p.num_devices).collect();
    counts.sort_unstable();
    counts.dedup();
    for u in counts {
        written.push(write(
            outdir,
            &format!("collisions_U{u}.csv"),
            &collisions_csv(points, u),
        )?);
    }
    written.push(write(outdir, "manifest.txt", &manifest(file))?);
    Ok(written)
}
