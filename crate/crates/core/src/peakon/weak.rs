//! Weak-form residual of the momentum system.
//!
//! Moving every derivative of order two off the candidate leaves an
//! identity that only needs `u`, `u_x`, `v`, `v_x` and the combination
//! `W_j = u_jxx v_jx - u_jx v_jxx`, which vanishes identically whenever
//! `u_j` and `v_j` share a profile. Candidates with a kink therefore enter
//! through piecewise smooth integrands only.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{peakon_speed, Flavor, PeakonSpec};
use crate::dynamics::NovikovState;
use crate::grid::{PeriodicGrid, RealField};
use crate::{Error, Result};

/// Fewest composite Simpson slices accepted over the time span.
pub const MIN_TIME_SLICES: usize = 200;

/// `exp(-1/(1 - r²))` with `r = (x - center) / half_width`, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceBump {
    pub center: f64,
    pub half_width: f64,
}

impl SpaceBump {
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let h = self.half_width;
        let r = (x - self.center) / h;
        let d = 1.0 - r * r;
        if d <= 0.0 {
            return [0.0; 3];
        }
        let psi = (-1.0 / d).exp();
        let g1 = -2.0 * r / (d * d);
        let g2 = -2.0 / (d * d) - 8.0 * r * r / (d * d * d);
        [psi, psi * g1 / h, psi * (g1 * g1 + g2) / (h * h)]
    }
}

/// Gaussian weight in time, `exp(-((t - center) / width)²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeWindow {
    pub center: f64,
    pub width: f64,
}

impl TimeWindow {
    /// Value and time derivative at `t`.
    pub fn eval(&self, t: f64) -> [f64; 2] {
        let z = (t - self.center) / self.width;
        let w = (-z * z).exp();
        [w, -2.0 * z / self.width * w]
    }
}

/// Separable test function `φ(t, x) = τ(t) ψ(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub space: SpaceBump,
    pub time: TimeWindow,
}

/// Test functions together with the quadrature used against them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunctionSet {
    pub tests: Vec<TestFunction>,
    /// Composite Simpson slices over the time span, even.
    pub time_slices: usize,
    /// Gauss panels across one bump support, for analytic candidates.
    pub panels: usize,
    /// Gauss points per panel.
    pub order: usize,
}

impl TestFunctionSet {
    pub fn new(tests: Vec<TestFunction>) -> Self {
        Self {
            tests,
            time_slices: 1000,
            panels: 32,
            order: 16,
        }
    }

    /// `count` tests whose supports lie in `region`, with half widths in
    /// `[0.5, 3]` (capped by the region) and time windows spread over
    /// `[0, horizon]`.
    pub fn random(count: usize, region: (f64, f64), horizon: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tests = (0..count)
            .map(|_| {
                let half_width = rng.gen_range(0.5..3.0f64).min(0.5 * (region.1 - region.0));
                let center = rng.gen_range(region.0 + half_width..=region.1 - half_width);
                let space = SpaceBump { center, half_width };
                let time = TimeWindow {
                    center: rng.gen_range(0.0..horizon),
                    width: horizon * rng.gen_range(0.2..1.0),
                };
                TestFunction { space, time }
            })
            .collect();
        Self::new(tests)
    }

    pub fn with_time_slices(mut self, slices: usize) -> Self {
        self.time_slices = slices;
        self
    }

    pub fn with_panels(mut self, panels: usize, order: usize) -> Self {
        self.panels = panels;
        self.order = order;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.time_slices < MIN_TIME_SLICES || self.time_slices % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "time_slices must be even and at least {MIN_TIME_SLICES}, got {}",
                self.time_slices
            )));
        }
        if self.panels == 0 || self.order == 0 {
            return Err(Error::InvalidConfig(
                "quadrature panels and order must be positive".into(),
            ));
        }
        for t in &self.tests {
            let ok = t.space.half_width > 0.0 && t.time.width > 0.0;
            if !ok
                || ![
                    t.space.center,
                    t.space.half_width,
                    t.time.center,
                    t.time.width,
                ]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidConfig(format!(
                    "degenerate test function {t:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Pointwise data a candidate supplies, one entry per component.
#[derive(Clone, Debug, Default)]
pub struct PointValues {
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub uxx: Vec<f64>,
    pub v: Vec<f64>,
    pub vx: Vec<f64>,
    pub vxx: Vec<f64>,
}

impl PointValues {
    fn sized(n: usize) -> Self {
        let z = vec![0.0; n];
        Self {
            u: z.clone(),
            ux: z.clone(),
            uxx: z.clone(),
            v: z.clone(),
            vx: z.clone(),
            vxx: z,
        }
    }
}

/// A velocity history the weak identity can be tested on.
pub trait WeakCandidate: Sync {
    fn n_components(&self) -> usize;
    fn flavor(&self) -> Flavor;
    fn length(&self) -> f64;
    /// Uniform time nodes with an even number of slices, at least `slices`.
    fn time_nodes(&self, slices: usize) -> Result<Vec<f64>>;
    /// Nodes and weights integrating over `[lo, hi]` at time node `k`.
    fn space_nodes(
        &self,
        k: usize,
        t: f64,
        lo: f64,
        hi: f64,
        set: &TestFunctionSet,
    ) -> Vec<(f64, f64)>;
    /// Fills `out` at time node `k` and position `x`. Second derivatives
    /// are the regular parts, away from any kink.
    fn eval(&self, k: usize, t: f64, x: f64, out: &mut PointValues);
}

/// The exact peaked wave, optionally with a forced crest speed.
#[derive(Clone, Debug)]
pub struct AnalyticPeakon {
    spec: PeakonSpec,
    length: f64,
    horizon: f64,
    speed: f64,
}

impl AnalyticPeakon {
    pub fn new(spec: PeakonSpec, length: f64, horizon: f64) -> Result<Self> {
        spec.validate()?;
        if !(length > 0.0) || !(horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need positive length and horizon, got {length}, {horizon}"
            )));
        }
        if spec.flavor == Flavor::PeriodicUnit && length != 1.0 {
            return Err(Error::InvalidGrid(format!(
                "periodic peakon length must be 1, got {length}"
            )));
        }
        let speed = peakon_speed(&spec);
        Ok(Self {
            spec,
            length,
            horizon,
            speed,
        })
    }

    /// Moves the crest at `speed` instead of the wave's own speed.
    pub fn with_speed(mut self, speed: f64) -> Self {
        self.speed = speed;
        self
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    fn crest(&self, t: f64) -> f64 {
        self.spec.x0 + self.speed * t
    }
}

fn gauss_rule(order: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(order).expect("validated order"))
}

impl WeakCandidate for AnalyticPeakon {
    fn n_components(&self) -> usize {
        self.spec.n_components()
    }

    fn flavor(&self) -> Flavor {
        self.spec.flavor
    }

    fn length(&self) -> f64 {
        self.length
    }

    fn time_nodes(&self, slices: usize) -> Result<Vec<f64>> {
        Ok((0..=slices)
            .map(|k| self.horizon * k as f64 / slices as f64)
            .collect())
    }

    fn space_nodes(
        &self,
        _k: usize,
        t: f64,
        lo: f64,
        hi: f64,
        set: &TestFunctionSet,
    ) -> Vec<(f64, f64)> {
        let l = self.length;
        let mut kinks = vec![self.crest(t)];
        if self.spec.flavor == Flavor::LineTruncated {
            kinks.push(self.crest(t) + 0.5 * l);
        }
        let mut breaks = vec![lo, hi];
        for k in kinks {
            let first = ((lo - k) / l).ceil() as i64;
            let last = ((hi - k) / l).floor() as i64;
            breaks.extend(
                (first..=last)
                    .map(|m| k + m as f64 * l)
                    .filter(|&b| b > lo && b < hi),
            );
        }
        breaks.sort_by(f64::total_cmp);
        let rule = gauss_rule(set.order);
        let mut nodes = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let panels = ((set.panels as f64 * (b - a) / (hi - lo)).ceil() as usize).max(1);
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * h;
                for &(z, wt) in rule.as_node_weight_pairs() {
                    nodes.push((mid + 0.5 * h * z, 0.5 * h * wt));
                }
            }
        }
        nodes
    }

    fn eval(&self, _k: usize, t: f64, x: f64, out: &mut PointValues) {
        let (e, ex) = self.spec.flavor.profile(x - self.crest(t), self.length);
        for (i, (&p, &q)) in self.spec.p.iter().zip(&self.spec.q).enumerate() {
            out.u[i] = p * e;
            out.ux[i] = p * ex;
            out.uxx[i] = p * e;
            out.v[i] = q * e;
            out.vx[i] = q * ex;
            out.vxx[i] = q * e;
        }
    }
}

/// Velocities stored on a grid at uniformly spaced times.
#[derive(Clone, Debug)]
pub struct SampledHistory {
    grid: PeriodicGrid,
    flavor: Flavor,
    times: Vec<f64>,
    /// Per frame and component: u, u_x, u_xx, v, v_x, v_xx.
    frames: Vec<Vec<[Vec<f64>; 6]>>,
}

impl SampledHistory {
    /// `u[k][i]` and `v[k][i]` are component `i` at `times[k]`.
    pub fn new(
        times: Vec<f64>,
        u: Vec<Vec<RealField>>,
        v: Vec<Vec<RealField>>,
        flavor: Flavor,
    ) -> Result<Self> {
        if times.len() < 3 || (times.len() - 1) % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "sampled history needs an odd number of frames (at least 3), got {}",
                times.len()
            )));
        }
        if u.len() != times.len() || v.len() != times.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: u.len().min(v.len()),
            });
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        let uniform = times
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - times[0] - k as f64 * dt).abs() <= 1e-9 * dt.abs().max(1.0));
        if !(dt > 0.0) || !uniform {
            return Err(Error::InvalidConfig(
                "sampled history times must be uniform and increasing".into(),
            ));
        }
        let grid = u[0]
            .first()
            .ok_or(Error::InvalidState("history has no components".into()))?
            .grid()
            .clone();
        let n_comp = u[0].len();
        let derive = |f: &RealField| -> Result<[Vec<f64>; 3]> {
            if f.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            Ok([
                f.samples().to_vec(),
                f.derivative()?.into_samples(),
                f.second_derivative()?.into_samples(),
            ])
        };
        let frames = u
            .iter()
            .zip(&v)
            .map(|(uk, vk)| {
                if uk.len() != n_comp || vk.len() != n_comp {
                    return Err(Error::LengthMismatch {
                        expected: n_comp,
                        got: uk.len().min(vk.len()),
                    });
                }
                uk.iter()
                    .zip(vk)
                    .map(|(ui, vi)| {
                        let [a, b, c] = derive(ui)?;
                        let [d, e, f] = derive(vi)?;
                        Ok([a, b, c, d, e, f])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            grid,
            flavor,
            times,
            frames,
        })
    }

    /// Recovers velocities from momentum states.
    pub fn from_states(states: &[NovikovState], flavor: Flavor) -> Result<Self> {
        let times = states.iter().map(|s| s.time()).collect();
        let mut u = Vec::with_capacity(states.len());
        let mut v = Vec::with_capacity(states.len());
        for s in states {
            u.push(
                (0..s.n_components())
                    .map(|i| s.u(i))
                    .collect::<Result<Vec<_>>>()?,
            );
            v.push(
                (0..s.n_components())
                    .map(|i| s.v(i))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Self::new(times, u, v, flavor)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
}

impl WeakCandidate for SampledHistory {
    fn n_components(&self) -> usize {
        self.frames[0].len()
    }

    fn flavor(&self) -> Flavor {
        self.flavor
    }

    fn length(&self) -> f64 {
        self.grid.length()
    }

    fn time_nodes(&self, slices: usize) -> Result<Vec<f64>> {
        if self.times.len() - 1 < slices {
            return Err(Error::InsufficientData {
                have: self.times.len(),
                need: slices + 1,
            });
        }
        Ok(self.times.clone())
    }

    fn space_nodes(
        &self,
        _k: usize,
        _t: f64,
        lo: f64,
        hi: f64,
        _set: &TestFunctionSet,
    ) -> Vec<(f64, f64)> {
        let h = self.grid.spacing();
        let first = (lo / h).ceil() as i64;
        let last = (hi / h).floor() as i64;
        (first..=last).map(|j| (j as f64 * h, h)).collect()
    }

    fn eval(&self, k: usize, _t: f64, x: f64, out: &mut PointValues) {
        let n = self.grid.n_points() as i64;
        let j = ((x / self.grid.spacing()).round() as i64).rem_euclid(n) as usize;
        for (i, c) in self.frames[k].iter().enumerate() {
            out.u[i] = c[0][j];
            out.ux[i] = c[1][j];
            out.uxx[i] = c[2][j];
            out.v[i] = c[3][j];
            out.vx[i] = c[4][j];
            out.vxx[i] = c[5][j];
        }
    }
}

/// Which component equation a residual belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    M(usize),
    N(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakResidual {
    pub test: usize,
    pub equation: Equation,
    /// Space-time integral minus the boundary terms.
    pub gap: f64,
    /// Sum of the magnitudes of the individual integrals.
    pub scale: f64,
    /// `gap / scale`, zero when every integral vanishes.
    pub normalized: f64,
}

const TERMS: usize = 10;

/// Adds the integrand contributions at one point, weighted by `w`, for
/// the equation of component `i` with roles `(a, ax, b, bx)` standing for
/// `(u, u_x, v, v_x)` or their swap.
#[allow(clippy::too_many_arguments)]
fn accumulate(
    acc: &mut [f64; TERMS],
    i: usize,
    a: &[f64],
    ax: &[f64],
    axx: &[f64],
    b: &[f64],
    bx: &[f64],
    bxx: &[f64],
    phi: [f64; 3],
    phi_t: [f64; 2],
    w: f64,
) {
    let [f, fx, fxx] = phi;
    let (ai, aix) = (a[i], ax[i]);
    acc[0] += w * (ai * phi_t[0] + aix * phi_t[1]);
    for j in 0..a.len() {
        let (aj, ajx, bj, bjx) = (a[j], ax[j], b[j], bx[j]);
        let wj = axx[j] * bjx - ajx * bxx[j];
        acc[1] += w * ai * (aj * bj * fx - ajx * bj * f);
        acc[2] += w * aj * (ai * bjx - aix * bj) * f;
        acc[3] += w * aix * aj * bjx * fx;
        acc[4] += w * aix * aj * bj * fxx;
        acc[5] -= w * aix * ajx * bjx * f;
        acc[6] += w * 0.5 * ajx * bjx * (aix * f + ai * fx);
        acc[7] -= w * 0.5 * ai * f * wj;
    }
}

fn simpson_weights(times: &[f64]) -> Vec<f64> {
    let s = times.len() - 1;
    let h = (times[s] - times[0]) / s as f64;
    (0..=s)
        .map(|k| {
            let c = if k == 0 || k == s {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Residual of every component equation against every test function.
///
/// Results are ordered by test, then `M(0..N)`, then `N(0..N)`.
pub fn weak_residual<C: WeakCandidate>(
    candidate: &C,
    set: &TestFunctionSet,
) -> Result<Vec<WeakResidual>> {
    set.validate()?;
    let l = candidate.length();
    for t in &set.tests {
        let (lo, hi) = t.space.support();
        let wraps = match candidate.flavor() {
            Flavor::LineTruncated => lo < 0.0 || hi > l,
            Flavor::PeriodicUnit => hi - lo > l,
        };
        if wraps {
            return Err(Error::SupportWrapsSeam { lo, hi, length: l });
        }
    }
    let times = candidate.time_nodes(set.time_slices)?;
    let weights = simpson_weights(&times);
    let n = candidate.n_components();
    let last = times.len() - 1;

    let per_test: Vec<Vec<WeakResidual>> = set
        .tests
        .par_iter()
        .enumerate()
        .map(|(index, test)| {
            let (lo, hi) = test.space.support();
            let mut acc = vec![[0.0; TERMS]; 2 * n];
            let mut pv = PointValues::sized(n);
            for (k, (&t, &wt)) in times.iter().zip(&weights).enumerate() {
                let [tau, tau_t] = test.time.eval(t);
                let boundary = match k {
                    0 => Some(8),
                    _ if k == last => Some(9),
                    _ => None,
                };
                for (x, wx) in candidate.space_nodes(k, t, lo, hi, set) {
                    let psi = test.space.eval(x);
                    if psi[0] == 0.0 && psi[1] == 0.0 {
                        continue;
                    }
                    candidate.eval(k, t, x, &mut pv);
                    let phi = [tau * psi[0], tau * psi[1], tau * psi[2]];
                    let phi_t = [tau_t * psi[0], tau_t * psi[1]];
                    for i in 0..n {
                        accumulate(
                            &mut acc[i],
                            i,
                            &pv.u,
                            &pv.ux,
                            &pv.uxx,
                            &pv.v,
                            &pv.vx,
                            &pv.vxx,
                            phi,
                            phi_t,
                            wt * wx,
                        );
                        accumulate(
                            &mut acc[n + i],
                            i,
                            &pv.v,
                            &pv.vx,
                            &pv.vxx,
                            &pv.u,
                            &pv.ux,
                            &pv.uxx,
                            phi,
                            phi_t,
                            wt * wx,
                        );
                        if let Some(slot) = boundary {
                            acc[i][slot] += wx * (pv.u[i] * phi[0] + pv.ux[i] * phi[1]);
                            acc[n + i][slot] += wx * (pv.v[i] * phi[0] + pv.vx[i] * phi[1]);
                        }
                    }
                }
            }
            acc.iter()
                .enumerate()
                .map(|(e, a)| {
                    let gap = a[..8].iter().sum::<f64>() - (a[9] - a[8]);
                    let scale: f64 = a.iter().map(|v| v.abs()).sum();
                    let normalized = if scale > 0.0 { gap / scale } else { 0.0 };
                    let equation = if e < n {
                        Equation::M(e)
                    } else {
                        Equation::N(e - n)
                    };
                    WeakResidual {
                        test: index,
                        equation,
                        gap,
                        scale,
                        normalized,
                    }
                })
                .collect()
        })
        .collect();
    Ok(per_test.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_peakon(p: Vec<f64>, q: Vec<f64>) -> AnalyticPeakon {
        let spec = PeakonSpec::new(p, q, 20.0, Flavor::LineTruncated).unwrap();
        AnalyticPeakon::new(spec, 60.0, 1.0).unwrap()
    }

    #[test]
    fn bump_vanishes_at_its_ends() {
        let b = SpaceBump {
            center: 2.0,
            half_width: 0.7,
        };
        let (lo, hi) = b.support();
        for x in [lo, hi] {
            assert!(b.eval(x).iter().all(|v| v.abs() <= 1e-14));
        }
        // derivatives against central differences
        let h = 1e-5;
        for x in [1.6, 2.0, 2.31] {
            let [_, d1, d2] = b.eval(x);
            let fd1 = (b.eval(x + h)[0] - b.eval(x - h)[0]) / (2.0 * h);
            let fd2 = (b.eval(x + h)[1] - b.eval(x - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8 && (d2 - fd2).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_residuals() {
        let set = TestFunctionSet::random(5, (10.0, 30.0), 1.0, 3).with_time_slices(200);
        let r = weak_residual(&line_peakon(vec![0.0], vec![0.0]), &set).unwrap();
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|w| w.gap == 0.0 && w.normalized == 0.0));
    }

    #[test]
    fn exact_peakon_balances_and_wrong_speed_does_not() {
        let cand = line_peakon(vec![1.0], vec![1.0]);
        let set = TestFunctionSet::random(6, (17.0, 24.0), 1.0, 11);
        let good = weak_residual(&cand, &set).unwrap();
        let worst = good.iter().map(|w| w.normalized.abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        let bad = weak_residual(&cand.clone().with_speed(1.1), &set).unwrap();
        let worst_bad = bad.iter().map(|w| w.normalized.abs()).fold(0.0, f64::max);
        assert!(worst_bad > 10.0 * worst);
    }

    #[test]
    fn seam_crossing_support_is_rejected() {
        let mut set = TestFunctionSet::random(1, (10.0, 30.0), 1.0, 3);
        set.tests[0].space = SpaceBump {
            center: 59.5,
            half_width: 1.0,
        };
        assert!(matches!(
            weak_residual(&line_peakon(vec![1.0], vec![1.0]), &set),
            Err(Error::SupportWrapsSeam { .. })
        ));
    }

    #[test]
    fn quadrature_settings_are_checked() {
        let set = TestFunctionSet::random(1, (10.0, 30.0), 1.0, 3).with_time_slices(101);
        assert!(weak_residual(&line_peakon(vec![1.0], vec![1.0]), &set).is_err());
    }

    #[test]
    fn sampled_history_needs_uniform_odd_frames() {
        let grid = PeriodicGrid::new(64, 10.0).unwrap();
        let f = || vec![grid.zeros()];
        assert!(SampledHistory::new(
            vec![0.0, 1.0],
            vec![f(), f()],
            vec![f(), f()],
            Flavor::LineTruncated
        )
        .is_err());
        assert!(SampledHistory::new(
            vec![0.0, 1.0, 3.0],
            vec![f(), f(), f()],
            vec![f(), f(), f()],
            Flavor::LineTruncated
        )
        .is_err());
        let ok = SampledHistory::new(
            vec![0.0, 1.0, 2.0],
            vec![f(), f(), f()],
            vec![f(), f(), f()],
            Flavor::LineTruncated,
        )
        .unwrap();
        assert!(matches!(
            ok.time_nodes(200),
            Err(Error::InsufficientData { .. })
        ));
    }
}
