//! Uniform periodic grids and Fourier pseudospectral operators.
//!
//! Every field in the crate lives on a [`PeriodicGrid`] covering `[0, L)`.
//! Derivatives, the Helmholtz operator `1 - ∂ₓ²` and its inverse are Fourier
//! multipliers; quadrature is the rectangle rule, which is spectrally exact
//! for band-limited periodic integrands.
//!
//! Wavenumber conventions: `k_j = 2πj/L` for `j < n/2` and `2π(j-n)/L` above.
//! The Nyquist entry of [`PeriodicGrid::wavenumbers`] is zero, so odd-order
//! multipliers never create an imaginary part. Even-order multipliers use the
//! full Nyquist magnitude through [`PeriodicGrid::k_squared`], which keeps
//! [`RealField::helmholtz_apply`] and [`RealField::helmholtz_invert`] exact
//! inverses of one another.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest grid accepted by [`PeriodicGrid::new`].
pub const MIN_POINTS: usize = 8;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

struct GridInner {
    n: usize,
    length: f64,
    wavenumbers: Vec<f64>,
    k_squared: Vec<f64>,
    plans: Plans,
    padded: OnceLock<Plans>,
}

/// Uniform sampling of the periodic interval `[0, length)`.
///
/// Cloning is cheap; transform plans are shared behind an `Arc`. Plans hold
/// no scratch space, so a grid may be used from several threads at once.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n_points", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }
}

impl PeriodicGrid {
    /// Builds a grid of `n_points` nodes on `[0, length)`.
    ///
    /// `n_points` must be even and at least [`MIN_POINTS`]; powers of two are
    /// fastest.
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} is below the minimum of {MIN_POINTS}"
            )));
        }
        if n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} must be even"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length = {length} must be positive"
            )));
        }
        let base = 2.0 * PI / length;
        let half = n_points / 2;
        let mut wavenumbers = vec![0.0; n_points];
        let mut k_squared = vec![0.0; n_points];
        for j in 0..n_points {
            let signed = if j <= half {
                j as f64
            } else {
                j as f64 - n_points as f64
            };
            let k = base * signed;
            k_squared[j] = k * k;
            wavenumbers[j] = if j == half { 0.0 } else { k };
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                n: n_points,
                length,
                wavenumbers,
                k_squared,
                plans: Plans::new(n_points),
                padded: OnceLock::new(),
            }),
        })
    }

    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Node coordinate `x_j = j·L/n`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.inner.n).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers used for odd-order derivatives (Nyquist entry zero).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Squared wavenumbers including the Nyquist mode.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(samples.len(), self.inner.n);
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.inner.plans.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT (normalized by `1/n`), keeping the real part.
    ///
    /// Callers must hand in a Hermitian spectrum; every multiplier in this
    /// module preserves that symmetry.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.inner.n);
        self.inner.plans.inverse.process(&mut spectrum);
        let scale = 1.0 / self.inner.n as f64;
        spectrum.iter().map(|z| z.re * scale).collect()
    }

    fn padded_plans(&self) -> &Plans {
        self.inner
            .padded
            .get_or_init(|| Plans::new(2 * self.inner.n))
    }

    /// Evaluates the trigonometric interpolant of `spectrum` on the grid
    /// refined by a factor two. The Nyquist coefficient is split evenly
    /// between `±n/2` so the interpolant stays real.
    pub fn to_padded_physical(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let n = self.inner.n;
        let half = n / 2;
        let mut padded = vec![Complex64::new(0.0, 0.0); 2 * n];
        // Factor 2 compensates the 1/(2n) normalization of the longer inverse.
        for k in 0..half {
            padded[k] = spectrum[k] * 2.0;
        }
        for k in 1..half {
            padded[2 * n - k] = spectrum[n - k] * 2.0;
        }
        padded[half] = spectrum[half];
        padded[2 * n - half] = spectrum[half];
        self.padded_plans().inverse.process(&mut padded);
        let scale = 1.0 / (2 * n) as f64;
        padded.iter().map(|z| z.re * scale).collect()
    }

    /// Projects samples on the doubly refined grid back onto the modes this
    /// grid resolves, discarding the Nyquist mode.
    pub fn from_padded_physical(&self, samples: &[f64]) -> Vec<Complex64> {
        let n = self.inner.n;
        let half = n / 2;
        debug_assert_eq!(samples.len(), 2 * n);
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.padded_plans().forward.process(&mut buf);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..half {
            spectrum[k] = buf[k] * 0.5;
        }
        for k in 1..half {
            spectrum[n - k] = buf[2 * n - k] * 0.5;
        }
        spectrum
    }

    /// Samples `f` at every node.
    pub fn sample<F: FnMut(f64) -> f64>(&self, mut f: F) -> RealField {
        let samples = (0..self.inner.n).map(|j| f(self.node(j))).collect();
        RealField {
            grid: self.clone(),
            samples,
        }
    }

    pub fn zeros(&self) -> RealField {
        RealField {
            grid: self.clone(),
            samples: vec![0.0; self.inner.n],
        }
    }

    /// Wraps `samples` as a field on this grid.
    pub fn field(&self, samples: Vec<f64>) -> Result<RealField> {
        RealField::new(self.clone(), samples)
    }
}

/// Sobolev-type norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub linf: f64,
    pub l2: f64,
    pub h1: f64,
}

/// Real samples of a function on a [`PeriodicGrid`].
#[derive(Clone, Debug)]
pub struct RealField {
    grid: PeriodicGrid,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: PeriodicGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn with_multiplier<F: Fn(usize) -> Complex64>(&self, symbol: F) -> Result<RealField> {
        self.check_finite()?;
        let mut spectrum = self.grid.forward(&self.samples);
        for (j, c) in spectrum.iter_mut().enumerate() {
            *c *= symbol(j);
        }
        Ok(RealField {
            grid: self.grid.clone(),
            samples: self.grid.inverse(spectrum),
        })
    }

    /// Spectral first derivative.
    pub fn derivative(&self) -> Result<RealField> {
        let k = self.grid.wavenumbers();
        self.with_multiplier(|j| Complex64::new(0.0, k[j]))
    }

    /// Spectral second derivative (keeps the Nyquist mode).
    pub fn second_derivative(&self) -> Result<RealField> {
        let k2 = self.grid.k_squared();
        self.with_multiplier(|j| Complex64::new(-k2[j], 0.0))
    }

    /// Solves `(1 - ∂ₓ²) u = self` on the periodic domain.
    ///
    /// The symbol `1/(1+k²)` is one at `k = 0`, so the mean is preserved.
    pub fn helmholtz_invert(&self) -> Result<RealField> {
        let k2 = self.grid.k_squared();
        self.with_multiplier(|j| Complex64::new(1.0 / (1.0 + k2[j]), 0.0))
    }

    /// Applies `1 - ∂ₓ²`, turning a velocity into a momentum density.
    pub fn helmholtz_apply(&self) -> Result<RealField> {
        let k2 = self.grid.k_squared();
        self.with_multiplier(|j| Complex64::new(1.0 + k2[j], 0.0))
    }

    /// Rectangle-rule integral over one period.
    pub fn integrate(&self) -> f64 {
        self.grid.spacing() * self.samples.iter().sum::<f64>()
    }

    pub fn linf(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖f‖_{H^s}` through the multiplier `(1+k²)^{s/2}` and Parseval.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let n = self.grid.n_points() as f64;
        let k2 = self.grid.k_squared();
        let spectrum = self.grid.forward(&self.samples);
        let sum: f64 = spectrum
            .iter()
            .zip(k2)
            .map(|(c, &k2)| (1.0 + k2).powf(s) * c.norm_sqr())
            .sum();
        (self.grid.length() * sum).sqrt() / n
    }

    pub fn norms(&self) -> Norms {
        Norms {
            linf: self.linf(),
            l2: self.hs_norm(0.0),
            h1: self.hs_norm(1.0),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> RealField {
        RealField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &RealField, f: F) -> Result<RealField> {
        self.same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(RealField {
            grid: self.grid.clone(),
            samples,
        })
    }

    /// Cyclic shift by `cells` grid cells: `out[j] = self[j - cells]`.
    pub fn shifted(&self, cells: usize) -> RealField {
        let n = self.samples.len();
        let mut samples = vec![0.0; n];
        for (j, &x) in self.samples.iter().enumerate() {
            samples[(j + cells) % n] = x;
        }
        RealField {
            grid: self.grid.clone(),
            samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64) -> PeriodicGrid {
        PeriodicGrid::new(n, l).unwrap()
    }

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(PeriodicGrid::new(4, 1.0).is_err());
        assert!(PeriodicGrid::new(9, 1.0).is_err());
        assert!(PeriodicGrid::new(16, -1.0).is_err());
    }

    #[test]
    fn wavenumbers_are_antisymmetric() {
        let g = grid(16, 3.0);
        let k = g.wavenumbers();
        assert_eq!(k.len(), 16);
        for j in 1..16 {
            assert_eq!(k[j], -k[16 - j]);
        }
        assert!((g.spacing() * 16.0 - 3.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = grid(32, 5.0);
        let d = g.sample(|_| 3.7).derivative().unwrap();
        assert!(d.linf() < 1e-14);
    }

    #[test]
    fn derivative_of_sine() {
        let l = 7.0;
        let g = grid(64, l);
        let w = 2.0 * PI / l;
        let d = g.sample(|x| (w * x).sin()).derivative().unwrap();
        let exact = g.sample(|x| w * (w * x).cos());
        let err = d.zip_with(&exact, |a, b| a - b).unwrap().linf();
        assert!(err <= 1e-12 * w, "err = {err}");
    }

    #[test]
    fn nonfinite_input_is_rejected() {
        let mut f = grid(16, 1.0).zeros();
        f.samples_mut()[3] = f64::NAN;
        assert!(matches!(f.derivative(), Err(Error::NonFinite)));
        assert!(matches!(f.helmholtz_invert(), Err(Error::NonFinite)));
        assert!(matches!(f.helmholtz_apply(), Err(Error::NonFinite)));
    }

    #[test]
    fn helmholtz_on_constants_and_eigenfunctions() {
        let l = 10.0;
        let g = grid(32, l);
        let c = g.sample(|_| 2.5).helmholtz_invert().unwrap();
        assert!(c.samples().iter().all(|&x| (x - 2.5).abs() < 1e-14));

        let w = 2.0 * PI / l;
        let m = g.sample(|x| (w * x).cos());
        let u = m.helmholtz_invert().unwrap();
        let expect = g.sample(|x| (w * x).cos() / (1.0 + w * w));
        assert!(u.zip_with(&expect, |a, b| a - b).unwrap().linf() < 1e-14);

        let back = m.helmholtz_apply().unwrap();
        let expect = g.sample(|x| (1.0 + w * w) * (w * x).cos());
        assert!(back.zip_with(&expect, |a, b| a - b).unwrap().linf() < 1e-13);
        assert_eq!(g.zeros().helmholtz_apply().unwrap().linf(), 0.0);
    }

    #[test]
    fn integrals() {
        let l = 3.0;
        let g = grid(32, l);
        assert_eq!(g.zeros().integrate(), 0.0);
        assert!((g.sample(|_| 1.5).integrate() - 4.5).abs() < 1e-14);
        assert!(g.sample(|x| (2.0 * PI * x / l).sin()).integrate().abs() < 1e-12);
    }

    #[test]
    fn norms_of_sine() {
        let g = grid(64, 2.0 * PI);
        let f = g.sample(f64::sin);
        let norms = f.norms();
        assert!((norms.l2 - PI.sqrt()).abs() < 1e-13);
        assert!((norms.h1 - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!((norms.linf - 1.0).abs() < 1e-2);
        let z = g.zeros().norms();
        assert_eq!((z.linf, z.l2, z.h1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn padding_round_trip_is_identity_below_nyquist() {
        let g = grid(16, 2.0);
        let f = g.sample(|x| (PI * x).sin() + 0.3 * (3.0 * PI * x).cos());
        let spec = g.forward(f.samples());
        let fine = g.to_padded_physical(&spec);
        // Odd fine nodes are midpoints; even ones reproduce the samples.
        for j in 0..16 {
            assert!((fine[2 * j] - f.samples()[j]).abs() < 1e-13);
        }
        let back = g.from_padded_physical(&fine);
        for (a, b) in back.iter().zip(&spec) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_samples_forward() {
        let g = grid(8, 1.0);
        let f = g.field((0..8).map(|j| j as f64).collect()).unwrap();
        assert_eq!(f.shifted(1).samples()[0], 7.0);
        assert_eq!(f.shifted(1).samples()[1], 0.0);
    }
}
