use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use super::{guarded, tolerance as tol, Bound, Check, CriterionReport};
use crate::blowup::MonitorSeries;
use crate::dynamics::Termination;
use crate::scenario::{initial_state, parse_config, run_scenario, ScenarioConfig, ScenarioKind};
use crate::Result;

/// What a run of the focusing suite is expected to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteRole {
    /// Sign-changing data that must reach the L∞ cap.
    Focusing,
    /// Nonnegative data that must reach its end time.
    Smooth,
    /// Sign-changing data for the second reduction.
    SecondReduction,
}

/// One scenario of the focusing suite.
#[derive(Clone, Debug)]
pub struct FocusingRun {
    pub label: String,
    pub role: SuiteRole,
    pub config: ScenarioConfig,
}

const LENGTH: f64 = 40.0;
/// Cap on the momentum L∞ norm as a multiple of its initial value.
const CAP_FACTOR: f64 = 50.0;

/// One period of `amp · sin(2πx/L + phase)` for each field.
fn sine_document(kind: ScenarioKind, m: (f64, f64), n: (f64, f64)) -> String {
    let center = |phase: f64| -phase * LENGTH / (2.0 * PI);
    format!(
        "scenario.kind = \"{}\"\n\
         grid.n_points = 1024\ngrid.length = {LENGTH:?}\n\
         sim.dt = 0.001\nsim.t_end = 20.0\nsim.monitor_stride = 5\n\
         initial.family = \"sine\"\n\
         initial.m_amp = [{:?}]\ninitial.m_center = [{:?}]\ninitial.m_width = [1.0]\n\
         initial.n_amp = [{:?}]\ninitial.n_center = [{:?}]\ninitial.n_width = [1.0]\n\
         observers.list = []\n",
        kind.name(),
        m.0,
        center(m.1),
        n.0,
        center(n.1),
    )
}

/// Unit Gaussians centred at 15 and 22 with the given widths.
fn gaussian_document(kind: ScenarioKind, n_amp: f64, n_width: f64) -> String {
    format!(
        "scenario.kind = \"{}\"\n\
         grid.n_points = 1024\ngrid.length = {LENGTH:?}\n\
         sim.dt = 0.001\nsim.t_end = 5.0\nsim.monitor_stride = 5\n\
         initial.family = \"gaussian\"\n\
         initial.m_amp = [1.0]\ninitial.m_center = [15.0]\ninitial.m_width = [2.0]\n\
         initial.n_amp = [{n_amp:?}]\ninitial.n_center = [22.0]\ninitial.n_width = [{n_width:?}]\n\
         observers.list = []\n",
        kind.name(),
    )
}

/// The calibrated suite: five focusing runs, two smooth runs and two runs
/// of the second reduction, each capped at 50 times its initial L∞ norm.
pub fn focusing_suite() -> Result<Vec<FocusingRun>> {
    use ScenarioKind::{Case1, Case2, Gx};
    let sine = [
        ("gx sin/sin", Gx, (1.0, 0.0), (1.0, 0.0)),
        ("gx 1.5sin/sin+0.3", Gx, (1.5, 0.0), (1.0, 0.3)),
        ("gx 0.7sin/0.8sin-0.2", Gx, (0.7, 0.0), (0.8, -0.2)),
        ("case1 sin/sin+0.4", Case1, (1.0, 0.0), (1.0, 0.4)),
        ("case1 1.2sin/0.9sin+1", Case1, (1.2, 0.0), (0.9, 1.0)),
        ("case2 sin/sin+0.4", Case2, (1.0, 0.0), (1.0, 0.4)),
        ("case2 1.2sin/0.9sin+1", Case2, (1.2, 0.0), (0.9, 1.0)),
    ];
    let mut docs: Vec<(String, SuiteRole, String)> = sine
        .iter()
        .map(|(label, kind, m, n)| {
            let role = if *kind == Case2 {
                SuiteRole::SecondReduction
            } else {
                SuiteRole::Focusing
            };
            (label.to_string(), role, sine_document(*kind, *m, *n))
        })
        .collect();
    docs.push((
        "gx gaussians".into(),
        SuiteRole::Smooth,
        gaussian_document(Gx, 1.0, 2.0),
    ));
    docs.push((
        "case1 gaussians".into(),
        SuiteRole::Smooth,
        gaussian_document(Case1, 0.8, 6f64.sqrt()),
    ));

    docs.into_iter()
        .map(|(label, role, doc)| {
            let mut config =
                parse_config(&doc).map_err(|e| crate::Error::InvalidConfig(e.to_string()))?;
            config.sim.blowup_linf_cap = CAP_FACTOR * initial_state(&config)?.linf_max();
            config.output_dir = label.replace([' ', '/', '.'], "_").into();
            Ok(FocusingRun {
                label,
                role,
                config,
            })
        })
        .collect()
}

/// `(time of the extreme / elapsed time, |extreme| / |initial|, extreme)`
/// of a minimum monitor.
fn late_growth(times: &[f64], values: &[f64]) -> (f64, f64, f64) {
    let (k, lowest) =
        values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |(k, b), (j, &v)| if v < b { (j, v) } else { (k, b) },
        );
    let elapsed = times.last().copied().unwrap_or(0.0) - times[0];
    let fraction = if elapsed > 0.0 {
        (times[k] - times[0]) / elapsed
    } else {
        0.0
    };
    (fraction, -lowest / values[0].abs(), lowest)
}

/// The minimum monitor that best shows late growth: the largest growth
/// among those whose extreme is late enough, else the largest growth.
fn best_minimum<'a>(
    series: &'a MonitorSeries,
    names: &[(&'a str, &'a Option<Vec<f64>>)],
) -> Option<(&'a str, (f64, f64, f64))> {
    let mut found: Vec<(&str, (f64, f64, f64))> = names
        .iter()
        .filter_map(|(n, v)| v.as_ref().map(|v| (*n, late_growth(&series.times, v))))
        .collect();
    found.sort_by(|a, b| {
        let late = |x: &(f64, f64, f64)| x.0 >= tol::FOCUS_LATE_FRACTION;
        (late(&b.1), b.1 .1)
            .partial_cmp(&(late(&a.1), a.1 .1))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found.into_iter().next()
}

fn judge(run: &FocusingRun, dir: &Path) -> Result<Vec<Check>> {
    let out = run_scenario(&run.config, &dir.join(&run.config.output_dir))?;
    let series = &out.report.series;
    let capped = matches!(out.report.termination, Termination::BlowupSuspected { .. });
    let label = &run.label;
    let mut checks = Vec::new();
    let growth_checks = |checks: &mut Vec<Check>, names: &[(&str, &Option<Vec<f64>>)]| {
        if let Some((name, (fraction, growth, _))) = best_minimum(series, names) {
            checks.push(Check::new(
                format!("{label}: {name} extreme time fraction"),
                fraction,
                Bound::AtLeast(tol::FOCUS_LATE_FRACTION),
            ));
            checks.push(Check::new(
                format!("{label}: {name} growth"),
                growth,
                Bound::AtLeast(tol::FOCUS_GROWTH),
            ));
        }
    };
    match run.role {
        SuiteRole::Focusing => {
            checks.push(Check::new(
                format!("{label}: reached the cap"),
                capped as u8 as f64,
                Bound::AtLeast(1.0),
            ));
            growth_checks(
                &mut checks,
                &[
                    ("min u_x v", &series.case1_min_uxv),
                    ("min u v_x", &series.case1_min_uvx),
                ],
            );
        }
        SuiteRole::SecondReduction => {
            checks.push(Check::new(
                format!("{label}: reached the cap"),
                capped as u8 as f64,
                Bound::AtLeast(1.0),
            ));
            growth_checks(
                &mut checks,
                &[("min (u u_x + v v_x)", &series.case2_min_drift)],
            );
        }
        SuiteRole::Smooth => {
            checks.push(Check::new(
                format!("{label}: reached t_end"),
                (!capped) as u8 as f64,
                Bound::AtLeast(1.0),
            ));
            let lowest = [&series.case1_min_uxv, &series.case1_min_uvx]
                .iter()
                .filter_map(|v| v.as_ref())
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::new(
                format!("{label}: lowest monitor"),
                lowest,
                Bound::AtLeast(tol::SMOOTH_FLOOR),
            ));
        }
    }
    Ok(checks)
}

/// Runs the focusing suite in parallel and checks every run against its
/// role.
pub(super) fn blowup_coherence(dir: &Path) -> CriterionReport {
    guarded(9, || {
        let suite = focusing_suite()?;
        let results: Vec<Result<Vec<Check>>> =
            suite.par_iter().map(|run| judge(run, dir)).collect();
        let mut checks = Vec::new();
        for r in results {
            checks.extend(r?);
        }
        Ok((
            checks,
            Some(format!(
                "{} runs, cap {CAP_FACTOR} x initial L-inf",
                suite.len()
            )),
        ))
    })
}
