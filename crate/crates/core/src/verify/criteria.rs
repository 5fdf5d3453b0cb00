use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{guarded, tolerance as tol, Bound, Check, CriterionReport};
use crate::dynamics::{
    rhs_componentwise, rhs_transport, run_simulation, FlowOptions, Interpolation, NovikovState,
    SpeedHistory, SpeedKind, StateHistory, Termination,
};
use crate::grid::{PeriodicGrid, RealField};
use crate::invariants::InvariantObserver;
use crate::peakon::{
    peakon_speed, weak_residual, AnalyticPeakon, Flavor, PeakonSpec, TestFunctionSet,
};
use crate::scenario::config::ObserverKind;
use crate::scenario::{initial_state, run_scenario, run_scenario_observed, ScenarioConfig};
use crate::{Error, Result};

/// Band-limited field with modes up to `modes` and decaying amplitudes.
fn random_band_limited(grid: &PeriodicGrid, rng: &mut ChaCha8Rng, modes: usize) -> RealField {
    let w = 2.0 * std::f64::consts::PI / grid.length();
    let mean = rng.gen_range(-1.0..1.0);
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|k| {
            let a = rng.gen_range(-1.0..1.0) / k as f64;
            let b = rng.gen_range(-1.0..1.0) / k as f64;
            (a, b)
        })
        .collect();
    grid.sample(|x| {
        mean + coeffs
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let kx = (j + 1) as f64 * w * x;
                a * kx.cos() + b * kx.sin()
            })
            .sum::<f64>()
    })
}

/// Componentwise against transport form on 50 random states.
pub(super) fn cross_form(seed: u64) -> CriterionReport {
    guarded(1, || {
        let started = Instant::now();
        let grid = PeriodicGrid::new(256, 20.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for k in 0..50 {
            let n = 1 + k % 3;
            let m = (0..n)
                .map(|_| random_band_limited(&grid, &mut rng, 16))
                .collect();
            let nn = (0..n)
                .map(|_| random_band_limited(&grid, &mut rng, 16))
                .collect();
            let s = NovikovState::new(m, nn, 0.0)?;
            for dealias in [true, false] {
                let a = rhs_componentwise(&s, dealias)?;
                let b = rhs_transport(&s, dealias)?;
                worst = worst.max(a.max_abs_diff(&b) / a.linf().max(f64::MIN_POSITIVE));
            }
        }
        Ok((
            vec![
                Check::new(
                    "relative sup gap",
                    worst,
                    Bound::AtMost(tol::CROSS_FORM_REL),
                ),
                Check::new(
                    "seconds",
                    started.elapsed().as_secs_f64(),
                    Bound::AtMost(tol::CROSS_FORM_SECONDS),
                ),
            ],
            None,
        ))
    })
}

fn with_observer(cfg: &ScenarioConfig, kind: ObserverKind) -> ScenarioConfig {
    let mut cfg = cfg.clone();
    if !cfg.observers.contains(&kind) {
        cfg.observers.push(kind);
        cfg.observers.sort();
    }
    cfg
}

fn invariants_of(obs: &Option<InvariantObserver>) -> Result<&InvariantObserver> {
    obs.as_ref()
        .ok_or_else(|| Error::InvalidConfig("the invariants observer was not attached".into()))
}

/// Conservation, sign preservation, characteristic flow and determinism,
/// all measured on one smooth Geng-Xue run and a repeat of it.
pub(super) fn gx_run_family(cfg: &ScenarioConfig, dir: &Path) -> Vec<CriterionReport> {
    let cfg = with_observer(cfg, ObserverKind::Invariants);
    let started = Instant::now();
    let mut history = StateHistory::new();
    let first_dir = dir.join("gx_first");
    let first = run_scenario_observed(&cfg, &first_dir, &mut [&mut history]);
    let seconds = started.elapsed().as_secs_f64();
    let first = match first {
        Ok(run) => run,
        Err(e) => {
            return [2, 4, 8, 11]
                .map(|id| CriterionReport::failed(id, &e, seconds))
                .to_vec()
        }
    };

    let conservation = guarded(2, || {
        let obs = invariants_of(&first.invariants)?;
        let drift = obs
            .h_drift()
            .ok_or_else(|| Error::InvalidConfig("H is undefined for this state".into()))?;
        let spread = obs
            .records
            .iter()
            .filter_map(|r| r.h.map(|h| h.spread()))
            .fold(0.0, f64::max);
        Ok((
            vec![
                Check::new("relative H drift", drift, Bound::AtMost(tol::H_DRIFT)),
                Check::new(
                    "spread of the three H forms",
                    spread,
                    Bound::AtMost(tol::H_FORMS),
                ),
                Check::new("seconds", seconds, Bound::AtMost(tol::CONSERVATION_SECONDS)),
            ],
            None,
        ))
    });

    let signs = guarded(4, || {
        let obs = invariants_of(&first.invariants)?;
        let r0 = &obs.records[0];
        if r0.sign_violation_m < 0.0 || r0.sign_violation_n < 0.0 {
            return Ok((Vec::new(), Some("initial momenta change sign".into())));
        }
        let scale = r0.linf_scale;
        let lowest = obs
            .records
            .iter()
            .map(|r| r.sign_violation_m.min(r.sign_violation_n))
            .fold(0.0, f64::min);
        let relative = if scale > 0.0 { lowest / scale } else { lowest };
        let one_sided = obs
            .records
            .iter()
            .map(|r| r.one_sided_min)
            .fold(f64::INFINITY, f64::min);
        Ok((
            vec![
                Check::new(
                    "min momentum / initial L-inf",
                    relative,
                    Bound::AtLeast(-tol::SIGN_REL),
                ),
                Check::new(
                    "min of u +- u_x and v +- v_x",
                    one_sided,
                    Bound::AtLeast(-tol::ONE_SIDED),
                ),
            ],
            None,
        ))
    });

    let flow = guarded(8, || flow_jacobian(&history));

    let determinism = guarded(11, || {
        let second = run_scenario(&cfg, &dir.join("gx_second"))?;
        let a = fs::read(first_dir.join("monitors.csv"))?;
        let b = fs::read(second.dir.join("monitors.csv"))?;
        let differing = if a == b { 0.0 } else { 1.0 };
        Ok((
            vec![Check::new(
                "monitors.csv differs",
                differing,
                Bound::AtMost(0.0),
            )],
            Some(format!("{} bytes compared", a.len())),
        ))
    });

    // the shared run counts towards every criterion measured on it
    let mut family = vec![conservation, signs, flow, determinism];
    for report in &mut family[..3] {
        report.seconds += seconds;
    }
    family
}

/// Finite differences of the flow map against the integrated jacobian.
fn flow_jacobian(history: &StateHistory) -> Result<(Vec<Check>, Option<String>)> {
    let states = history.states();
    let last = states
        .last()
        .ok_or(Error::InsufficientData { have: 0, need: 2 })?;
    let length = last.grid().length();
    let h = 1e-3 * length / 40.0;
    let base: Vec<f64> = (0..32).map(|j| length * (j as f64 + 0.5) / 32.0).collect();
    let seeds: Vec<f64> = base.iter().flat_map(|&x| [x - h, x, x + h]).collect();
    let opts = FlowOptions {
        seeds: Some(seeds),
        interpolation: Interpolation::Trigonometric,
        substeps: 1,
    };
    let speed = SpeedHistory::from_history(history, SpeedKind::General, opts.interpolation)?;
    let (t0, t1) = (states[0].time(), last.time());
    let (mut gap, mut lowest) = (0.0f64, f64::INFINITY);
    for k in 1..=4 {
        let map = speed.integrate(t0 + (t1 - t0) * k as f64 / 4.0, &opts)?;
        for j in 0..base.len() {
            let fd = (map.positions[3 * j + 2] - map.positions[3 * j]) / (2.0 * h);
            let jac = map.jacobian[3 * j + 1];
            gap = gap.max((fd - jac).abs() / jac.abs());
        }
        lowest = map.jacobian.iter().copied().fold(lowest, f64::min);
    }
    Ok((
        vec![
            Check::new(
                "relative gap to finite differences",
                gap,
                Bound::AtMost(tol::FLOW_JACOBIAN_REL),
            ),
            Check::new("min jacobian", lowest, Bound::Above(0.0)),
        ],
        Some(format!("{} seeds at 4 times, spacing {h:e}", base.len())),
    ))
}

/// `H1` and `H2` drift on a run of the first two-component reduction.
pub(super) fn case1_conservation(cfg: &ScenarioConfig, dir: &Path) -> CriterionReport {
    guarded(3, || {
        let cfg = with_observer(cfg, ObserverKind::Invariants);
        let started = Instant::now();
        let run = run_scenario(&cfg, &dir.join("case1"))?;
        let seconds = started.elapsed().as_secs_f64();
        let obs = invariants_of(&run.invariants)?;
        let undefined = || Error::InvalidConfig("H1 and H2 are undefined for this state".into());
        Ok((
            vec![
                Check::new(
                    "relative H1 drift",
                    obs.h1_drift().ok_or_else(undefined)?,
                    Bound::AtMost(tol::H12_DRIFT),
                ),
                Check::new(
                    "relative H2 drift",
                    obs.h2_drift().ok_or_else(undefined)?,
                    Bound::AtMost(tol::H12_DRIFT),
                ),
                Check::new("seconds", seconds, Bound::AtMost(tol::CONSERVATION_SECONDS)),
            ],
            None,
        ))
    })
}

/// Analytic line peakons against randomized test functions, exact and with
/// the speed raised by 10%.
pub(super) fn weak_form(cases: &[(Vec<f64>, Vec<f64>)], seed: u64) -> CriterionReport {
    guarded(5, || {
        let started = Instant::now();
        let (length, x0) = (60.0, 30.0);
        let mut checks = Vec::new();
        for (i, (p, q)) in cases.iter().enumerate() {
            let spec = PeakonSpec::new(p.clone(), q.clone(), x0, Flavor::LineTruncated)?;
            let c = peakon_speed(&spec);
            let horizon = if c != 0.0 {
                (4.0 / c.abs()).min(1.0)
            } else {
                1.0
            };
            let travel = c * horizon;
            let region = (x0 + travel.min(0.0) - 6.0, x0 + travel.max(0.0) + 6.0);
            let set = TestFunctionSet::random(
                super::protocol::WEAK_TESTS,
                region,
                horizon,
                seed + i as u64,
            );
            let exact = AnalyticPeakon::new(spec, length, horizon)?;
            let worst = |cand: &AnalyticPeakon| -> Result<f64> {
                Ok(weak_residual(cand, &set)?
                    .iter()
                    .map(|w| w.normalized.abs())
                    .fold(0.0, f64::max))
            };
            let good = worst(&exact)?;
            let bad = worst(&exact.clone().with_speed(1.1 * c))?;
            let label = format!("N={} c={c}", p.len());
            checks.push(Check::new(
                format!("{label} max residual"),
                good,
                Bound::AtMost(tol::WEAK_RESIDUAL),
            ));
            checks.push(Check::new(
                format!("{label} perturbed/exact"),
                bad / good,
                Bound::AtLeast(tol::WEAK_CONTRAST),
            ));
        }
        checks.push(Check::new(
            "seconds",
            started.elapsed().as_secs_f64(),
            Bound::AtMost(tol::WEAK_SECONDS),
        ));
        Ok((checks, None))
    })
}

fn peakon_error(cfg: &ScenarioConfig, dir: &Path) -> Result<(f64, f64)> {
    let cfg = with_observer(cfg, ObserverKind::PeakTrack);
    let run = run_scenario(&cfg, dir)?;
    if !matches!(run.report.termination, Termination::TEnd) {
        return Err(Error::InvalidState(
            "peakon run stopped at the L-inf cap".into(),
        ));
    }
    let peak = run
        .manifest
        .peak
        .ok_or(Error::InsufficientData { have: 1, need: 2 })?;
    Ok((peak.measured_speed, peak.relative_error))
}

/// Crest speed of the mollified peakon over a three-level refinement
/// ladder ending at the configured grid, with the mollifier width fixed
/// in grid cells.
pub(super) fn line_peakon_speed(cfg: &ScenarioConfig, dir: &Path) -> CriterionReport {
    guarded(6, || {
        let mut errors = Vec::new();
        let mut notes = Vec::new();
        for n in [cfg.n_points / 4, cfg.n_points / 2, cfg.n_points] {
            let mut level = cfg.clone();
            level.n_points = n;
            let (speed, err) = peakon_error(&level, &dir.join(format!("line_peakon_{n}")))?;
            notes.push(format!("n={n}: speed {speed:.4}"));
            errors.push(err);
        }
        let worsening = errors
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((
            vec![
                Check::new(
                    format!("relative speed error at n={}", cfg.n_points),
                    errors[2],
                    Bound::AtMost(tol::PEAKON_SPEED_REL),
                ),
                Check::new(
                    "largest error change along the ladder",
                    worsening,
                    Bound::Below(0.0),
                ),
            ],
            Some(notes.join(", ")),
        ))
    })
}

pub(super) fn periodic_peakon_speed(cfg: &ScenarioConfig, dir: &Path) -> CriterionReport {
    guarded(7, || {
        let (speed, err) = peakon_error(cfg, &dir.join("periodic_peakon"))?;
        Ok((
            vec![Check::new(
                "relative speed error",
                err,
                Bound::AtMost(tol::PEAKON_SPEED_REL),
            )],
            Some(format!("measured speed {speed:.6}")),
        ))
    })
}

/// Steps between the configured step and the coarsest rung of the
/// self-convergence ladder. At production step sizes the step-to-step
/// differences sit at round-off and their ratio is noise.
pub const ORDER_BASE_FACTOR: f64 = 64.0;

/// Self-convergence ratio `|y(h) − y(h/2)| / |y(h/2) − y(h/4)|`.
pub(super) fn order_of_accuracy(cfg: &ScenarioConfig) -> CriterionReport {
    guarded(10, || {
        let s0 = initial_state(cfg)?;
        let t_end = cfg.sim.t_end;
        let steps = (t_end / (ORDER_BASE_FACTOR * cfg.sim.dt)).round().max(4.0);
        let dt0 = t_end / steps;
        let mut finals = Vec::new();
        for halvings in [1.0, 2.0, 4.0] {
            let mut sim = cfg.sim.clone();
            sim.dt = dt0 / halvings;
            sim.monitor_stride = (steps * halvings) as usize;
            let report = run_simulation(s0.clone(), &sim, &mut [])?;
            if !matches!(report.termination, Termination::TEnd) {
                return Err(Error::InvalidState(
                    "convergence run stopped at the L-inf cap".into(),
                ));
            }
            finals.push(report.final_state);
        }
        let gap = |a: &NovikovState, b: &NovikovState| {
            a.momenta()
                .zip(b.momenta())
                .flat_map(|(x, y)| {
                    x.samples()
                        .iter()
                        .zip(y.samples())
                        .map(|(p, q)| (p - q).abs())
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (gap(&finals[0], &finals[1]), gap(&finals[1], &finals[2]));
        let note = format!(
            "dt ladder {dt0:e}, {:e}, {:e}; gaps {e1:e}, {e2:e}",
            dt0 / 2.0,
            dt0 / 4.0
        );
        if e1 == 0.0 && e2 == 0.0 {
            return Ok((
                Vec::new(),
                Some(format!("solution does not depend on the step; {note}")),
            ));
        }
        let (lo, hi) = tol::ORDER_RATIO;
        Ok((
            vec![Check::new(
                "self-convergence ratio",
                e1 / e2,
                Bound::Between(lo, hi),
            )],
            Some(note),
        ))
    })
}
