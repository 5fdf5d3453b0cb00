//! Characteristic flows `dΦ/dt = a(t, Φ)` and their Jacobians.
//!
//! The Jacobian is integrated through its exponent,
//! `Φ_x(t, x) = exp(∫₀ᵗ a_x(s, Φ(s, x)) ds)`, alongside the trajectory with
//! the same RK4 stages. Speed fields are taken from stored snapshots, linearly
//! interpolated in time and trigonometrically (or by periodic cubic spline)
//! interpolated in space.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::state::{NovikovState, Reduction};
use crate::dynamics::stepper::Observer;
use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, RealField};

/// Which advection speed drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedKind {
    /// `a = Σ u_j v_j` of the full system.
    General,
    /// `2uv` of the first two-component reduction.
    Case1,
    /// `u² + v²` of the second two-component reduction.
    Case2,
}

/// Spatial interpolation of off-grid speed samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Trigonometric,
    CubicSpline,
}

/// The speed field of `kind` for one state.
pub fn speed_field(state: &NovikovState, kind: SpeedKind) -> Result<RealField> {
    let reduced = |want: Reduction| -> Result<(RealField, RealField)> {
        match state.reduction() {
            Some(r) if r == want => state.reduced_velocities().expect("tagged state"),
            other => Err(Error::InvalidState(format!(
                "speed kind {kind:?} needs a {} state, got {other:?}",
                want.name()
            ))),
        }
    };
    match kind {
        SpeedKind::General => {
            let mut a = state.grid().zeros();
            for j in 0..state.n_components() {
                let prod = state.u(j)?.zip_with(&state.v(j)?, |u, v| u * v)?;
                a = a.zip_with(&prod, |x, y| x + y)?;
            }
            Ok(a)
        }
        SpeedKind::Case1 => {
            let (u, v) = reduced(Reduction::Case1)?;
            u.zip_with(&v, |u, v| 2.0 * u * v)
        }
        SpeedKind::Case2 => {
            let (u, v) = reduced(Reduction::Case2)?;
            u.zip_with(&v, |u, v| u * u + v * v)
        }
    }
}

/// A periodic interpolant returning value and slope.
pub trait PeriodicInterpolant {
    fn eval(&self, x: f64) -> (f64, f64);
}

/// Trigonometric interpolant of grid samples.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    base: f64,
    /// `X_k / n` for `k = 0..=n/2`.
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(field: &RealField) -> Self {
        let grid = field.grid();
        let n = grid.n_points();
        let spec = grid.forward(field.samples());
        let coeffs = spec[..=n / 2].iter().map(|c| c / n as f64).collect();
        Self {
            base: 2.0 * PI / grid.length(),
            coeffs,
        }
    }
}

impl PeriodicInterpolant for TrigInterpolant {
    fn eval(&self, x: f64) -> (f64, f64) {
        let half = self.coeffs.len() - 1;
        let z = Complex64::from_polar(1.0, self.base * x);
        let mut w = Complex64::new(1.0, 0.0);
        let mut val = self.coeffs[0].re;
        let mut der = 0.0;
        for k in 1..half {
            w *= z;
            let t = self.coeffs[k] * w;
            val += 2.0 * t.re;
            // d/dx Re(c e^{ikx}) = -k Im(c e^{ikx})
            der -= 2.0 * self.base * k as f64 * t.im;
        }
        let kn = self.base * half as f64;
        val += self.coeffs[half].re * (kn * x).cos();
        der -= self.coeffs[half].re * kn * (kn * x).sin();
        (val, der)
    }
}

/// Periodic cubic spline through grid samples.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    h: f64,
    length: f64,
    y: Vec<f64>,
    /// Second derivatives at the nodes.
    curv: Vec<f64>,
}

impl CubicSpline {
    pub fn new(field: &RealField) -> Self {
        let grid = field.grid();
        let h = grid.spacing();
        let y = field.samples().to_vec();
        let n = y.len();
        let rhs: Vec<f64> = (0..n)
            .map(|j| 6.0 / (h * h) * (y[(j + 1) % n] - 2.0 * y[j] + y[(j + n - 1) % n]))
            .collect();
        let curv = solve_cyclic(1.0, 4.0, 1.0, &rhs);
        Self {
            h,
            length: grid.length(),
            y,
            curv,
        }
    }
}

/// Solves the cyclic tridiagonal system with constant bands by the
/// Sherman–Morrison correction of the Thomas algorithm.
fn solve_cyclic(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - lower * upper / gamma;
    let thomas = |d: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        c[0] = upper / b[0];
        x[0] = d[0] / b[0];
        for i in 1..n {
            let m = b[i] - lower * c[i - 1];
            c[i] = upper / m;
            x[i] = (d[i] - lower * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };
    let x = thomas(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = upper;
    let z = thomas(&u);
    let fact = (x[0] + lower * x[n - 1] / gamma) / (1.0 + z[0] + lower * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(x, z)| x - fact * z).collect()
}

impl PeriodicInterpolant for CubicSpline {
    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.y.len();
        let xr = x.rem_euclid(self.length);
        let j = ((xr / self.h).floor() as usize).min(n - 1);
        let k = (j + 1) % n;
        let h = self.h;
        let a = (j as f64 + 1.0) * h - xr;
        let b = xr - j as f64 * h;
        let (mj, mk) = (self.curv[j], self.curv[k]);
        let val = mj * a.powi(3) / (6.0 * h)
            + mk * b.powi(3) / (6.0 * h)
            + (self.y[j] / h - mj * h / 6.0) * a
            + (self.y[k] / h - mk * h / 6.0) * b;
        let der = -mj * a * a / (2.0 * h) + mk * b * b / (2.0 * h) - (self.y[j] / h - mj * h / 6.0)
            + (self.y[k] / h - mk * h / 6.0);
        (val, der)
    }
}

/// States retained at monitor resolution, in increasing time.
#[derive(Debug, Clone, Default)]
pub struct StateHistory {
    states: Vec<NovikovState>,
}

impl StateHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: NovikovState) -> Result<()> {
        if let Some(last) = self.states.last() {
            if state.time() <= last.time() {
                return Err(Error::InvalidState(format!(
                    "history times must increase ({} after {})",
                    state.time(),
                    last.time()
                )));
            }
            if state.grid() != last.grid() {
                return Err(Error::GridMismatch);
            }
        }
        self.states.push(state);
        Ok(())
    }

    pub fn states(&self) -> &[NovikovState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(NovikovState::time).collect()
    }
}

impl Observer for StateHistory {
    fn name(&self) -> &str {
        "history"
    }

    fn observe(
        &mut self,
        state: &NovikovState,
    ) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
        self.push(state.clone()).map_err(Into::into)
    }
}

/// Trajectories and Jacobians of the characteristic flow at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub seeds: Vec<f64>,
    /// Positions on the covering line (not reduced modulo the period).
    pub positions: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub time: f64,
}

impl FlowMap {
    pub fn reduced_positions(&self, length: f64) -> Vec<f64> {
        self.positions
            .iter()
            .map(|x| x.rem_euclid(length))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Starting points; defaults to the grid nodes.
    pub seeds: Option<Vec<f64>>,
    pub interpolation: Interpolation,
    /// RK4 substeps per stored history interval.
    pub substeps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            seeds: None,
            interpolation: Interpolation::Trigonometric,
            substeps: 1,
        }
    }
}

/// A spatially interpolated speed field sampled at fixed times.
pub struct SpeedHistory {
    times: Vec<f64>,
    fields: Vec<Box<dyn PeriodicInterpolant + Send + Sync>>,
    grid: PeriodicGrid,
}

impl SpeedHistory {
    pub fn from_history(
        history: &StateHistory,
        kind: SpeedKind,
        interp: Interpolation,
    ) -> Result<Self> {
        let first = history.states.first().ok_or(Error::OutsideHistory {
            t: 0.0,
            start: f64::NAN,
            end: f64::NAN,
        })?;
        let fields = history
            .states
            .iter()
            .map(|s| Self::interpolant(&speed_field(s, kind)?, interp))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: history.times(),
            fields,
            grid: first.grid().clone(),
        })
    }

    /// Builds a history from explicit speed fields, bypassing velocity
    /// reconstruction.
    pub fn from_fields(
        times: Vec<f64>,
        fields: &[RealField],
        interp: Interpolation,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() || times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidState(
                "speed history needs increasing times, one per field".into(),
            ));
        }
        let grid = fields[0].grid().clone();
        let fields = fields
            .iter()
            .map(|f| Self::interpolant(f, interp))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times,
            fields,
            grid,
        })
    }

    fn interpolant(
        f: &RealField,
        interp: Interpolation,
    ) -> Result<Box<dyn PeriodicInterpolant + Send + Sync>> {
        f.check_finite()?;
        Ok(match interp {
            Interpolation::Trigonometric => Box::new(TrigInterpolant::new(f)),
            Interpolation::CubicSpline => Box::new(CubicSpline::new(f)),
        })
    }

    fn eval(&self, k: usize, t: f64, x: f64) -> (f64, f64) {
        let (t0, t1) = (self.times[k], self.times[(k + 1).min(self.times.len() - 1)]);
        let (a0, d0) = self.fields[k].eval(x);
        if t1 <= t0 {
            return (a0, d0);
        }
        let (a1, d1) = self.fields[k + 1].eval(x);
        let th = (t - t0) / (t1 - t0);
        ((1.0 - th) * a0 + th * a1, (1.0 - th) * d0 + th * d1)
    }

    /// Integrates the flow from the first stored time to `t`.
    pub fn integrate(&self, t: f64, opts: &FlowOptions) -> Result<FlowMap> {
        let start = self.times[0];
        let end = *self.times.last().expect("nonempty");
        if !(t >= start && t <= end) {
            return Err(Error::OutsideHistory { t, start, end });
        }
        let seeds = opts.seeds.clone().unwrap_or_else(|| self.grid.nodes());
        let mut pos = seeds.clone();
        let mut expo = vec![0.0; seeds.len()];
        let substeps = opts.substeps.max(1);
        for k in 0..self.times.len().saturating_sub(1) {
            let lo = self.times[k];
            if lo >= t {
                break;
            }
            let hi = self.times[k + 1].min(t);
            let h = (hi - lo) / substeps as f64;
            for s in 0..substeps {
                let t0 = lo + s as f64 * h;
                for (x, e) in pos.iter_mut().zip(expo.iter_mut()) {
                    let (a1, d1) = self.eval(k, t0, *x);
                    let (a2, d2) = self.eval(k, t0 + 0.5 * h, *x + 0.5 * h * a1);
                    let (a3, d3) = self.eval(k, t0 + 0.5 * h, *x + 0.5 * h * a2);
                    let (a4, d4) = self.eval(k, t0 + h, *x + h * a3);
                    *x += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                    *e += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
                }
            }
        }
        Ok(FlowMap {
            seeds,
            positions: pos,
            jacobian: expo.into_iter().map(f64::exp).collect(),
            time: t,
        })
    }
}

/// Integrates the characteristic flow of `kind` through a stored history.
pub fn flow_integrate(
    history: &StateHistory,
    kind: SpeedKind,
    t: f64,
    opts: &FlowOptions,
) -> Result<FlowMap> {
    if history.is_empty() {
        return Err(Error::OutsideHistory {
            t,
            start: f64::NAN,
            end: f64::NAN,
        });
    }
    SpeedHistory::from_history(history, kind, opts.interpolation)?.integrate(t, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_interpolant_reproduces_band_limited_functions() {
        let g = PeriodicGrid::new(32, 5.0).unwrap();
        let w = 2.0 * PI / 5.0;
        let f = g.sample(|x| 0.3 + (w * x).sin() - 0.5 * (3.0 * w * x).cos());
        let it = TrigInterpolant::new(&f);
        for &x in &[0.123, 1.7, 4.99, 7.3] {
            let (v, d) = it.eval(x);
            let ev = 0.3 + (w * x).sin() - 0.5 * (3.0 * w * x).cos();
            let ed = w * (w * x).cos() + 1.5 * w * (3.0 * w * x).sin();
            assert!((v - ev).abs() < 1e-13);
            assert!((d - ed).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_is_accurate_and_periodic() {
        let g = PeriodicGrid::new(256, 2.0 * PI).unwrap();
        let sp = CubicSpline::new(&g.sample(f64::sin));
        for &x in &[0.01, 1.0, 3.3, 6.27, -0.5] {
            let (v, d) = sp.eval(x);
            assert!((v - x.sin()).abs() < 1e-7);
            assert!((d - x.cos()).abs() < 1e-4);
        }
        let (a, _) = sp.eval(0.3);
        let (b, _) = sp.eval(0.3 + 2.0 * PI);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn zero_speed_is_identity() {
        let g = PeriodicGrid::new(16, 4.0).unwrap();
        let mut h = StateHistory::new();
        for k in 0..4 {
            let mut s = NovikovState::zeros(&g, 1);
            s.set_time(k as f64 * 0.1);
            h.push(s).unwrap();
        }
        let map = flow_integrate(&h, SpeedKind::General, 0.3, &FlowOptions::default()).unwrap();
        assert_eq!(map.positions, g.nodes());
        assert!(map.jacobian.iter().all(|&j| j == 1.0));
    }

    #[test]
    fn constant_speed_translates() {
        let g = PeriodicGrid::new(16, 4.0).unwrap();
        let c = 0.7;
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let fields: Vec<RealField> = times.iter().map(|_| g.sample(|_| c)).collect();
        for interp in [Interpolation::Trigonometric, Interpolation::CubicSpline] {
            let sh = SpeedHistory::from_fields(times.clone(), &fields, interp).unwrap();
            let map = sh
                .integrate(
                    0.95,
                    &FlowOptions {
                        substeps: 3,
                        ..Default::default()
                    },
                )
                .unwrap();
            for (x0, x) in map.seeds.iter().zip(&map.positions) {
                assert!((x - x0 - c * 0.95).abs() < 1e-13);
            }
            assert!(map.jacobian.iter().all(|&j| (j - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn outside_history_is_an_error() {
        let g = PeriodicGrid::new(16, 4.0).unwrap();
        let fields = vec![g.zeros(), g.zeros()];
        let sh = SpeedHistory::from_fields(vec![0.0, 1.0], &fields, Interpolation::Trigonometric)
            .unwrap();
        assert!(matches!(
            sh.integrate(1.5, &FlowOptions::default()),
            Err(Error::OutsideHistory { .. })
        ));
        assert!(flow_integrate(
            &StateHistory::new(),
            SpeedKind::General,
            0.0,
            &FlowOptions::default()
        )
        .is_err());
    }

    #[test]
    fn case_speed_needs_matching_tag() {
        let g = PeriodicGrid::new(16, 4.0).unwrap();
        let s = NovikovState::zeros(&g, 2);
        assert!(speed_field(&s, SpeedKind::Case1).is_err());
    }
}
