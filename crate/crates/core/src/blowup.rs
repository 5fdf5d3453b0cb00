//! Blow-up monitors.
//!
//! Finite-time blow-up of the system is characterised by the running integral
//! `∫₀ᵗ ‖M‖²_∞ dτ` diverging, and for the two-field reductions by slope-type
//! quantities becoming unbounded: `inf u_x v` or `inf u v_x` for the
//! Geng–Xue and first reductions, `inf (u u_x + v v_x)` or
//! `sup |u_x v − u v_x|` for the second. Divergence is undecidable on a finite
//! horizon, so [`detect_divergence`] applies a magnitude-plus-slope heuristic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dynamics::{NovikovState, Reduction};
use crate::error::{Error, Result};
use crate::grid::RealField;

/// Detection outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// `max ‖m_i‖_∞, ‖n_i‖_∞` exceeded the run's cap.
    LinfCap,
    Case1MinUxV,
    Case1MinUVx,
    Case2MinDrift,
    Case2MaxWronskian,
}

/// Time series of blow-up functionals sampled during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorSeries {
    pub times: Vec<f64>,
    pub linf_max: Vec<f64>,
    /// Trapezoidal running integral of `linf_max²`.
    pub general_accum: Vec<f64>,
    pub case1_min_uxv: Option<Vec<f64>>,
    pub case1_min_uvx: Option<Vec<f64>>,
    pub case2_min_drift: Option<Vec<f64>>,
    pub case2_max_wronskian: Option<Vec<f64>>,
    pub flags: BTreeSet<Flag>,
}

/// One general-monitor sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralSample {
    pub time: f64,
    pub linf: f64,
    pub accum: f64,
}

/// `‖M‖_∞` of `s` and the accumulator advanced from the last sample of `prev`.
pub fn monitor_general(s: &NovikovState, prev: &MonitorSeries) -> GeneralSample {
    let linf = s.linf_max();
    GeneralSample {
        time: s.time(),
        linf,
        accum: prev.next_accum(s.time(), linf),
    }
}

fn scan_min(f: &RealField) -> f64 {
    f.samples().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `(min u_x v, min u v_x)` over the grid.
pub fn monitor_case1(u: &RealField, v: &RealField) -> Result<(f64, f64)> {
    let ux = u.derivative()?;
    let vx = v.derivative()?;
    Ok((
        scan_min(&ux.zip_with(v, |a, b| a * b)?),
        scan_min(&u.zip_with(&vx, |a, b| a * b)?),
    ))
}

/// `(min (u u_x + v v_x), max |u_x v − u v_x|)` over the grid.
pub fn monitor_case2(u: &RealField, v: &RealField) -> Result<(f64, f64)> {
    u.same_grid(v)?;
    let ux = u.derivative()?;
    let vx = v.derivative()?;
    let (u, v, ux, vx) = (u.samples(), v.samples(), ux.samples(), vx.samples());
    let mut drift = f64::INFINITY;
    let mut wronskian = 0.0f64;
    for p in 0..u.len() {
        drift = drift.min(u[p] * ux[p] + v[p] * vx[p]);
        wronskian = wronskian.max((ux[p] * v[p] - u[p] * vx[p]).abs());
    }
    Ok((drift, wronskian))
}

impl MonitorSeries {
    /// General monitor only.
    pub fn new() -> Self {
        Self::default()
    }

    /// Attaches the case monitors matching `reduction`.
    pub fn for_reduction(reduction: Option<Reduction>) -> Self {
        let mut s = Self::new();
        match reduction {
            Some(Reduction::GengXue | Reduction::Case1) => {
                s.case1_min_uxv = Some(Vec::new());
                s.case1_min_uvx = Some(Vec::new());
            }
            Some(Reduction::Case2) => {
                s.case2_min_drift = Some(Vec::new());
                s.case2_max_wronskian = Some(Vec::new());
            }
            None => {}
        }
        s
    }

    pub fn for_state(s: &NovikovState) -> Self {
        Self::for_reduction(s.reduction())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    fn next_accum(&self, time: f64, linf: f64) -> f64 {
        match (
            self.times.last(),
            self.linf_max.last(),
            self.general_accum.last(),
        ) {
            (Some(&t0), Some(&l0), Some(&acc)) => acc + 0.5 * (l0 * l0 + linf * linf) * (time - t0),
            _ => 0.0,
        }
    }

    /// Appends one sample of precomputed monitor values.
    pub fn push(
        &mut self,
        time: f64,
        linf: f64,
        case1: Option<(f64, f64)>,
        case2: Option<(f64, f64)>,
    ) -> Result<()> {
        if let Some(t0) = self.last_time() {
            if time <= t0 {
                return Err(Error::InvalidState(format!(
                    "monitor time {time} does not follow {t0}"
                )));
            }
        }
        if self.case1_min_uxv.is_some() != case1.is_some()
            || self.case2_min_drift.is_some() != case2.is_some()
        {
            return Err(Error::InvalidState(
                "case monitor values do not match the attached monitors".into(),
            ));
        }
        let accum = self.next_accum(time, linf);
        self.times.push(time);
        self.linf_max.push(linf);
        self.general_accum.push(accum);
        if let Some((a, b)) = case1 {
            self.case1_min_uxv.as_mut().expect("attached").push(a);
            self.case1_min_uvx.as_mut().expect("attached").push(b);
        }
        if let Some((a, b)) = case2 {
            self.case2_min_drift.as_mut().expect("attached").push(a);
            self.case2_max_wronskian.as_mut().expect("attached").push(b);
        }
        Ok(())
    }

    /// Samples every attached monitor on `s`.
    pub fn record(&mut self, s: &NovikovState) -> Result<()> {
        let general = monitor_general(s, self);
        let reduced = match s.reduced_velocities() {
            Some(r) => Some(r?),
            None => None,
        };
        let case1 = match (&self.case1_min_uxv, &reduced) {
            (Some(_), Some((u, v))) => Some(monitor_case1(u, v)?),
            (Some(_), None) => {
                return Err(Error::InvalidState(
                    "case-1 monitors need a tagged state".into(),
                ))
            }
            _ => None,
        };
        let case2 = match (&self.case2_min_drift, &reduced) {
            (Some(_), Some((u, v))) => Some(monitor_case2(u, v)?),
            (Some(_), None) => {
                return Err(Error::InvalidState(
                    "case-2 monitors need a tagged state".into(),
                ))
            }
            _ => None,
        };
        self.push(general.time, general.linf, case1, case2)
    }

    /// Monitors that are attached, by flag and values. Minima come first.
    pub fn slope_monitors(&self) -> Vec<(Flag, &[f64])> {
        [
            (Flag::Case1MinUxV, &self.case1_min_uxv),
            (Flag::Case1MinUVx, &self.case1_min_uvx),
            (Flag::Case2MinDrift, &self.case2_min_drift),
            (Flag::Case2MaxWronskian, &self.case2_max_wronskian),
        ]
        .into_iter()
        .filter_map(|(flag, v)| v.as_deref().map(|v| (flag, v)))
        .collect()
    }
}

/// Thresholds of the finite-horizon divergence heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPolicy {
    pub linf_cap: f64,
    /// A minimum monitor must fall below `-magnitude` (a maximum rise above it).
    pub magnitude: f64,
    /// ... while its least-squares slope over the window is steeper than this.
    pub rate: f64,
    pub window: usize,
}

impl DetectionPolicy {
    /// Default thresholds: magnitude `10³ × scale`, rate `10²` per unit time,
    /// 20-sample window.
    pub fn with_scale(scale: f64, linf_cap: f64) -> Self {
        let scale = if scale > 0.0 && scale.is_finite() {
            scale
        } else {
            1.0
        };
        Self {
            linf_cap,
            magnitude: 1e3 * scale,
            rate: 1e2,
            window: 20,
        }
    }

    /// Defaults scaled by the largest initial slope monitor of `series`.
    pub fn from_series(series: &MonitorSeries, linf_cap: f64) -> Self {
        let scale = series
            .slope_monitors()
            .iter()
            .filter_map(|(_, v)| v.first())
            .fold(0.0f64, |a, x| a.max(x.abs()));
        Self::with_scale(scale, linf_cap)
    }
}

fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sxy += (a - tm) * (b - ym);
        sxx += (a - tm) * (a - tm);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Applies the divergence heuristic to the most recent samples.
pub fn detect_divergence(
    series: &MonitorSeries,
    policy: &DetectionPolicy,
) -> Result<BTreeSet<Flag>> {
    let window = policy.window.max(2);
    if series.len() < window {
        return Err(Error::InsufficientData {
            have: series.len(),
            need: window,
        });
    }
    let mut flags = BTreeSet::new();
    if series.linf_max.iter().any(|&l| l > policy.linf_cap) {
        flags.insert(Flag::LinfCap);
    }
    let lo = series.len() - window;
    let t = &series.times[lo..];
    for (flag, values) in series.slope_monitors() {
        let y = &values[lo..];
        let last = *y.last().expect("window nonempty");
        let slope = ls_slope(t, y);
        let diverging = if flag == Flag::Case2MaxWronskian {
            last > policy.magnitude && slope > policy.rate
        } else {
            last < -policy.magnitude && slope < -policy.rate
        };
        if diverging {
            flags.insert(flag);
        }
    }
    Ok(flags)
}
