use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{ObserverKind, ScenarioConfig};
use super::run::{peakon_spec, run_scenario, RunOutcome};
use crate::dynamics::Termination;
use crate::peakon::{peakon_speed, weak_residual, AnalyticPeakon, Flavor, TestFunctionSet};
use crate::{Error, Result};

/// Random test functions in the weak-form part of a peakon check.
pub const PEAKON_CHECK_TESTS: usize = 20;

/// Outcome of [`peakon_check`], written as `peakon_check.json`.
#[derive(Clone, Debug, Serialize)]
pub struct PeakonCheck {
    pub expected_speed: f64,
    /// Fitted crest speed of the mollified run, absent when the run stopped
    /// at the L∞ cap.
    pub measured_speed: Option<f64>,
    pub relative_error: Option<f64>,
    /// Worst normalized weak-form residual of the exact peakon with the
    /// configured amplitudes.
    pub weak_max_residual: f64,
    /// The same with the crest speed raised by 10%.
    pub weak_max_residual_perturbed: f64,
}

/// Evolves a peakon scenario with crest tracking and checks the exact
/// peakon with the same amplitudes against the weak formulation.
pub fn peakon_check(cfg: &ScenarioConfig, dir: &Path) -> Result<(PeakonCheck, RunOutcome)> {
    let spec = peakon_spec(cfg).ok_or_else(|| {
        Error::InvalidConfig(format!("{} is not a peakon scenario", cfg.kind.name()))
    })??;
    let expected_speed = peakon_speed(&spec);

    let mut cfg = cfg.clone();
    if !cfg.observers.contains(&ObserverKind::PeakTrack) {
        cfg.observers.push(ObserverKind::PeakTrack);
    }
    let run = run_scenario(&cfg, dir)?;
    let finished = matches!(run.report.termination, Termination::TEnd);
    let peak = run.manifest.peak.as_ref().filter(|_| finished);

    // A fixed line box keeps the analytic check independent of the grid.
    let (length, x0) = match spec.flavor {
        Flavor::LineTruncated => (60.0, 30.0),
        Flavor::PeriodicUnit => (1.0, 0.5),
    };
    let horizon = if expected_speed != 0.0 {
        (0.2 * length / expected_speed.abs()).min(1.0)
    } else {
        1.0
    };
    let travel = expected_speed * horizon;
    let region = match spec.flavor {
        Flavor::LineTruncated => (x0 + travel.min(0.0) - 6.0, x0 + travel.max(0.0) + 6.0),
        Flavor::PeriodicUnit => (0.02, 0.98),
    };
    let set = TestFunctionSet::random(PEAKON_CHECK_TESTS, region, horizon, cfg.seed);
    let mut analytic_spec = spec.clone();
    analytic_spec.x0 = x0;
    let exact = AnalyticPeakon::new(analytic_spec, length, horizon)?;
    let worst = |cand: &AnalyticPeakon| -> Result<f64> {
        Ok(weak_residual(cand, &set)?
            .iter()
            .map(|w| w.normalized.abs())
            .fold(0.0, f64::max))
    };
    let check = PeakonCheck {
        expected_speed,
        measured_speed: peak.map(|p| p.measured_speed),
        relative_error: peak.map(|p| p.relative_error),
        weak_max_residual: worst(&exact)?,
        weak_max_residual_perturbed: worst(&exact.clone().with_speed(1.1 * expected_speed))?,
    };
    let text =
        serde_json::to_string_pretty(&check).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(dir.join("peakon_check.json"), text + "\n")?;
    Ok((check, run))
}
