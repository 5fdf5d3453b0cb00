//! Conserved quantities and sign structure.
//!
//! For the Geng–Xue reduction `H = ∫ m v = ∫ n u = ∫ (u v + u_x v_x)` is
//! conserved; for the first two-component reduction `H₁ = ∫ (u² + u_x²)` and
//! `H₂ = ∫ (v² + v_x²)` are. Nonnegative momenta stay nonnegative along
//! characteristics, and then `(1 ± ∂ₓ) u ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{NovikovState, Observer, Reduction};
use crate::error::Result;
use crate::grid::RealField;

/// The three algebraically equal forms of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedH {
    pub h_mv: f64,
    pub h_nu: f64,
    pub h_energy: f64,
}

impl ConservedH {
    /// Largest pairwise disagreement relative to `1 + |h_mv|`.
    pub fn spread(&self) -> f64 {
        let d1 = (self.h_mv - self.h_nu).abs();
        let d2 = (self.h_mv - self.h_energy).abs();
        d1.max(d2) / (1.0 + self.h_mv.abs())
    }
}

/// Evaluates `∫ m v`, `∫ n u` and `∫ (u v + u_x v_x)` independently.
pub fn conserved_h(m: &RealField, n: &RealField) -> Result<ConservedH> {
    m.same_grid(n)?;
    let u = m.helmholtz_invert()?;
    let v = n.helmholtz_invert()?;
    let ux = u.derivative()?;
    let vx = v.derivative()?;
    let h_mv = m.zip_with(&v, |a, b| a * b)?.integrate();
    let h_nu = n.zip_with(&u, |a, b| a * b)?.integrate();
    let uv = u.zip_with(&v, |a, b| a * b)?;
    let uxvx = ux.zip_with(&vx, |a, b| a * b)?;
    let h_energy = uv.zip_with(&uxvx, |a, b| a + b)?.integrate();
    Ok(ConservedH {
        h_mv,
        h_nu,
        h_energy,
    })
}

/// `(∫ (u² + u_x²), ∫ (v² + v_x²))` by quadrature of the pointwise energy.
pub fn conserved_h1_h2(u: &RealField, v: &RealField) -> Result<(f64, f64)> {
    u.same_grid(v)?;
    let energy = |f: &RealField| -> Result<f64> {
        let fx = f.derivative()?;
        Ok(f.zip_with(&fx, |a, b| a * a + b * b)?.integrate())
    };
    Ok((energy(u)?, energy(v)?))
}

/// Grid minima of every momentum component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub m_min: Vec<f64>,
    pub n_min: Vec<f64>,
}

impl SignReport {
    /// Most negative sample over all `m_i` (zero when none is negative).
    pub fn violation_m(&self) -> f64 {
        self.m_min.iter().fold(0.0, |a, &x| a.min(x))
    }

    pub fn violation_n(&self) -> f64 {
        self.n_min.iter().fold(0.0, |a, &x| a.min(x))
    }
}

pub fn sign_report(s: &NovikovState) -> SignReport {
    SignReport {
        m_min: s.m().iter().map(RealField::min).collect(),
        n_min: s.n().iter().map(RealField::min).collect(),
    }
}

/// `(min (u + u_x), min (u − u_x))`.
pub fn one_sided_bounds(u: &RealField) -> Result<(f64, f64)> {
    let ux = u.derivative()?;
    let plus = u.zip_with(&ux, |a, b| a + b)?.min();
    let minus = u.zip_with(&ux, |a, b| a - b)?.min();
    Ok((plus, minus))
}

/// Invariants sampled at one instant. Quantities that are not defined for the
/// state's reduction are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantRecord {
    pub time: f64,
    /// `H` for Geng–Xue states, with all three forms.
    pub h: Option<ConservedH>,
    /// `Σ_i ∫ m_i v_i`, reported for every state but conserved only when `N = 1`.
    pub h_candidate: f64,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub h1_norm_u: f64,
    pub h1_norm_v: f64,
    pub sign_violation_m: f64,
    pub sign_violation_n: f64,
    /// Smallest of `u ± u_x`, `v ± v_x` over the grid.
    pub one_sided_min: f64,
    /// `max ‖m_i‖_∞, ‖n_i‖_∞`, the scale for sign tolerances.
    pub linf_scale: f64,
}

/// Computes an [`InvariantRecord`] for `s`.
pub fn invariant_record(s: &NovikovState) -> Result<InvariantRecord> {
    let (u, v) = match s.reduced_velocities() {
        Some(r) => r?,
        None => (s.u(0)?, s.v(0)?),
    };
    let h = match s.reduction() {
        Some(Reduction::GengXue) => Some(conserved_h(&s.m()[0], &s.n()[0])?),
        _ => None,
    };
    let mut h_candidate = 0.0;
    for i in 0..s.n_components() {
        h_candidate += s.m()[i].zip_with(&s.v(i)?, |a, b| a * b)?.integrate();
    }
    let (h1, h2) = match s.reduction() {
        Some(Reduction::Case1) => {
            let (a, b) = conserved_h1_h2(&u, &v)?;
            (Some(a), Some(b))
        }
        _ => (None, None),
    };
    let signs = sign_report(s);
    let (up, um) = one_sided_bounds(&u)?;
    let (vp, vm) = one_sided_bounds(&v)?;
    Ok(InvariantRecord {
        time: s.time(),
        h,
        h_candidate,
        h1,
        h2,
        h1_norm_u: u.hs_norm(1.0),
        h1_norm_v: v.hs_norm(1.0),
        sign_violation_m: signs.violation_m(),
        sign_violation_n: signs.violation_n(),
        one_sided_min: up.min(um).min(vp).min(vm),
        linf_scale: s.linf_max(),
    })
}

/// Relative tolerance for sign-preservation checks.
pub const TOL_SIGN: f64 = 1e-8;

/// Observer collecting invariant records and sign-preservation violations.
#[derive(Debug, Clone, Default)]
pub struct InvariantObserver {
    pub records: Vec<InvariantRecord>,
    started_nonneg: Option<(bool, bool)>,
    /// Times at which a component that started nonnegative fell below
    /// `-TOL_SIGN × linf_scale`.
    pub sign_violations: Vec<f64>,
}

impl InvariantObserver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: &NovikovState) -> Result<()> {
        let rec = invariant_record(s)?;
        let (m_ok, n_ok) = *self
            .started_nonneg
            .get_or_insert((rec.sign_violation_m >= 0.0, rec.sign_violation_n >= 0.0));
        let floor = -TOL_SIGN * rec.linf_scale;
        if (m_ok && rec.sign_violation_m < floor) || (n_ok && rec.sign_violation_n < floor) {
            self.sign_violations.push(rec.time);
        }
        self.records.push(rec);
        Ok(())
    }

    /// Worst relative drift of `H` from its first value.
    pub fn h_drift(&self) -> Option<f64> {
        drift(self.records.iter().map(|r| r.h.map(|h| h.h_mv)))
    }

    pub fn h1_drift(&self) -> Option<f64> {
        drift(self.records.iter().map(|r| r.h1))
    }

    pub fn h2_drift(&self) -> Option<f64> {
        drift(self.records.iter().map(|r| r.h2))
    }
}

/// `max_t |q(t) − q(0)| / (1 + |q(0)|)`, or `None` if `q` is undefined.
pub fn drift<I: Iterator<Item = Option<f64>>>(mut values: I) -> Option<f64> {
    let first = values.next()??;
    let mut worst = 0.0f64;
    for v in values {
        worst = worst.max((v? - first).abs());
    }
    Some(worst / (1.0 + first.abs()))
}

impl Observer for InvariantObserver {
    fn name(&self) -> &str {
        "invariants"
    }

    fn observe(
        &mut self,
        state: &NovikovState,
    ) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
        self.push(state).map_err(Into::into)
    }
}

/// Least-squares exponential growth rates of `‖u‖_{H¹}` and `‖v‖_{H¹}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rate_u: f64,
    pub rate_v: f64,
    /// `2‖m₀‖_{L²}‖n₀‖_{L²}`: the rate in the Gronwall bound up to its
    /// unspecified constant.
    pub bound_exponent: f64,
}

fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    if t.len() < 2 {
        return 0.0;
    }
    let tm = t.iter().sum::<f64>() / n;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let ym = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(&ly) {
        sxy += (a - tm) * (b - ym);
        sxx += (a - tm) * (a - tm);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Fits `log ‖u‖_{H¹}` (and `v`) against time.
pub fn h1_growth_check(records: &[InvariantRecord], m0_l2: f64, n0_l2: f64) -> GrowthFit {
    let t: Vec<f64> = records.iter().map(|r| r.time).collect();
    let u: Vec<f64> = records.iter().map(|r| r.h1_norm_u).collect();
    let v: Vec<f64> = records.iter().map(|r| r.h1_norm_v).collect();
    GrowthFit {
        rate_u: log_slope(&t, &u),
        rate_v: log_slope(&t, &v),
        bound_exponent: 2.0 * m0_l2 * n0_l2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use std::f64::consts::PI;

    fn record(time: f64, norm: f64) -> InvariantRecord {
        InvariantRecord {
            time,
            h: None,
            h_candidate: 0.0,
            h1: None,
            h2: None,
            h1_norm_u: norm,
            h1_norm_v: norm,
            sign_violation_m: 0.0,
            sign_violation_n: 0.0,
            one_sided_min: 0.0,
            linf_scale: 1.0,
        }
    }

    #[test]
    fn zero_fields() {
        let g = PeriodicGrid::new(16, 3.0).unwrap();
        let h = conserved_h(&g.zeros(), &g.zeros()).unwrap();
        assert_eq!((h.h_mv, h.h_nu, h.h_energy), (0.0, 0.0, 0.0));
        assert_eq!(conserved_h1_h2(&g.zeros(), &g.zeros()).unwrap(), (0.0, 0.0));
        assert_eq!(one_sided_bounds(&g.zeros()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn h1_of_sine() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let (h1, _) = conserved_h1_h2(&g.sample(f64::sin), &g.zeros()).unwrap();
        assert!((h1 - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = PeriodicGrid::new(16, 3.0).unwrap();
        let b = PeriodicGrid::new(32, 3.0).unwrap();
        assert!(conserved_h(&a.zeros(), &b.zeros()).is_err());
    }

    #[test]
    fn sign_report_reads_minimum() {
        let g = PeriodicGrid::new(16, 1.0).unwrap();
        let m = g.sample(|x| if (x - 0.5).abs() < 1e-9 { -0.5 } else { 1.0 });
        let s = NovikovState::new(vec![m], vec![g.sample(|_| 0.2)], 0.0).unwrap();
        let r = sign_report(&s);
        assert_eq!(r.violation_m(), -0.5);
        assert_eq!(r.violation_n(), 0.0);
    }

    #[test]
    fn sine_has_negative_one_sided_bounds() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let (p, m) = one_sided_bounds(&g.sample(f64::sin)).unwrap();
        assert!(p < -1.0 && m < -1.0);
    }

    #[test]
    fn growth_fits() {
        let constant: Vec<_> = (0..10).map(|k| record(k as f64 * 0.1, 3.0)).collect();
        assert!(h1_growth_check(&constant, 1.0, 1.0).rate_u.abs() < 1e-14);
        let exp: Vec<_> = (0..50)
            .map(|k| record(k as f64 * 0.02, (2.0 * k as f64 * 0.02).exp()))
            .collect();
        let fit = h1_growth_check(&exp, 1.0, 0.5);
        assert!((fit.rate_u - 2.0).abs() < 1e-6);
        assert_eq!(fit.bound_exponent, 1.0);
    }

    #[test]
    fn drift_helper() {
        assert_eq!(
            drift([Some(1.0), Some(1.5), Some(0.8)].into_iter()),
            Some(0.25)
        );
        assert_eq!(drift([None, Some(1.0)].into_iter()), None);
    }
}
