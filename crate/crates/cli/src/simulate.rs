//! `simulate`: integrate the configured copies and monitor conserved quantities.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kslie_core::{integrate, monitor, CoeffSet, ConservedQuantityId, IntegratorConfig, ProlongedPoint, Trajectory};
use serde::Serialize;

/// Drift tolerance when the config sets none.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct DriftCheck {
    pub check: String,
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub gaps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub samples: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub t_final: f64,
    pub drift: Vec<DriftCheck>,
}

impl SimulationReport {
    pub fn pass(&self) -> bool {
        self.drift.iter().all(|d| d.pass)
    }
}

pub fn run(
    init: &ProlongedPoint,
    coeffs: &CoeffSet,
    cfg: &IntegratorConfig,
    ids: &[ConservedQuantityId],
    tolerance: f64,
    prefix: &Path,
) -> Result<SimulationReport, String> {
    let mut traj = integrate(init, coeffs, cfg).map_err(|e| e.to_string())?;
    let drift = if ids.is_empty() {
        Vec::new()
    } else {
        let report = monitor(&traj, ids).map_err(|e| e.to_string())?;
        traj.attach_drift(&report);
        report
            .records
            .iter()
            .map(|r| DriftCheck {
                check: r.id.name().to_string(),
                max_residual: r.max_drift,
                tolerance,
                pass: matches!(r.max_drift, Some(d) if d <= tolerance),
                gaps: r.gaps,
            })
            .collect()
    };
    let (csv, json) = write(&traj, prefix).map_err(|e| e.to_string())?;
    Ok(SimulationReport {
        csv,
        json,
        samples: traj.samples.len(),
        accepted_steps: traj.stats.accepted,
        rejected_steps: traj.stats.rejected,
        t_final: traj.last().t,
        drift,
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(traj: &Trajectory, prefix: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    let csv = with_suffix(prefix, ".csv");
    let json = with_suffix(prefix, ".json");
    let mut out = std::io::BufWriter::new(fs::File::create(&csv)?);
    traj.write_csv(&mut out)?;
    out.flush()?;
    let doc = serde_json::json!({
        "samples": traj.to_json_records(),
        "drift": traj.drift.values().collect::<Vec<_>>(),
    });
    fs::write(&json, serde_json::to_string_pretty(&doc)?)?;
    Ok((csv, json))
}
