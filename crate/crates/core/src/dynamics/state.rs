use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, RealField};

/// Two-field reductions of the N-component system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// N = 1: `m₁ = m`, `n₁ = n`.
    GengXue,
    /// N = 2 with `m₁ = n₂ = m` and `m₂ = n₁ = n`; advection speed `2uv`.
    Case1,
    /// N = 2 with `m₁ = n₁ = m` and `m₂ = n₂ = n`; advection speed `u² + v²`.
    Case2,
}

impl Reduction {
    pub fn n_components(self) -> usize {
        match self {
            Reduction::GengXue => 1,
            Reduction::Case1 | Reduction::Case2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Reduction::GengXue => "gx",
            Reduction::Case1 => "case1",
            Reduction::Case2 => "case2",
        }
    }
}

/// The 2N momentum densities `(m₁..m_N, n₁..n_N)` at one instant.
///
/// Velocities `u_i = (1-∂²)⁻¹ m_i`, `v_i = (1-∂²)⁻¹ n_i` are rebuilt on every
/// query and never cached.
#[derive(Clone, Debug)]
pub struct NovikovState {
    grid: PeriodicGrid,
    m: Vec<RealField>,
    n: Vec<RealField>,
    time: f64,
    reduction: Option<Reduction>,
}

impl NovikovState {
    pub fn new(m: Vec<RealField>, n: Vec<RealField>, time: f64) -> Result<Self> {
        if m.is_empty() || m.len() != n.len() {
            return Err(Error::InvalidState(format!(
                "need N ≥ 1 components in both families (got {} m and {} n)",
                m.len(),
                n.len()
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidState(format!(
                "time {time} must be finite and nonnegative"
            )));
        }
        let grid = m[0].grid().clone();
        for f in m.iter().chain(&n) {
            if *f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            f.check_finite()?;
        }
        Ok(Self {
            grid,
            m,
            n,
            time,
            reduction: None,
        })
    }

    /// All-zero state with `n_components` components.
    pub fn zeros(grid: &PeriodicGrid, n_components: usize) -> Self {
        let z = grid.zeros();
        Self {
            grid: grid.clone(),
            m: vec![z.clone(); n_components],
            n: vec![z; n_components],
            time: 0.0,
            reduction: None,
        }
    }

    pub(crate) fn from_raw(
        grid: &PeriodicGrid,
        fields: Vec<Vec<f64>>,
        time: f64,
        reduction: Option<Reduction>,
    ) -> Self {
        let n_comp = fields.len() / 2;
        let mut all: Vec<RealField> = fields
            .into_iter()
            .map(|s| RealField::new(grid.clone(), s).expect("raw field length"))
            .collect();
        let n = all.split_off(n_comp);
        Self {
            grid: grid.clone(),
            m: all,
            n,
            time,
            reduction,
        }
    }

    /// Tags the state with a reduction after checking the identifications
    /// hold exactly.
    pub fn with_reduction(mut self, reduction: Reduction) -> Result<Self> {
        if self.n_components() != reduction.n_components() {
            return Err(Error::InvalidState(format!(
                "{} requires N = {}, state has N = {}",
                reduction.name(),
                reduction.n_components(),
                self.n_components()
            )));
        }
        let same = |a: &RealField, b: &RealField| a.samples() == b.samples();
        let ok = match reduction {
            Reduction::GengXue => true,
            Reduction::Case1 => same(&self.m[0], &self.n[1]) && same(&self.m[1], &self.n[0]),
            Reduction::Case2 => same(&self.m[0], &self.n[0]) && same(&self.m[1], &self.n[1]),
        };
        if !ok {
            return Err(Error::InvalidState(format!(
                "fields violate the {} identifications",
                reduction.name()
            )));
        }
        self.reduction = Some(reduction);
        Ok(self)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn n_components(&self) -> usize {
        self.m.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    #[cfg(test)]
    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn reduction(&self) -> Option<Reduction> {
        self.reduction
    }

    pub fn m(&self) -> &[RealField] {
        &self.m
    }

    pub fn n(&self) -> &[RealField] {
        &self.n
    }

    /// Momentum fields in transport ordering `M = (m₁..m_N, n₁..n_N)`.
    pub fn momenta(&self) -> impl Iterator<Item = &RealField> {
        self.m.iter().chain(&self.n)
    }

    pub fn u(&self, i: usize) -> Result<RealField> {
        self.m[i].helmholtz_invert()
    }

    pub fn v(&self, i: usize) -> Result<RealField> {
        self.n[i].helmholtz_invert()
    }

    /// `max_i max(‖m_i‖_∞, ‖n_i‖_∞)`.
    pub fn linf_max(&self) -> f64 {
        self.momenta().map(RealField::linf).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.momenta().all(RealField::is_finite)
    }

    /// The reduced pair `(m, n)` read back through the reduction identification.
    pub fn reduced_momenta(&self) -> Option<(&RealField, &RealField)> {
        match self.reduction? {
            Reduction::GengXue => Some((&self.m[0], &self.n[0])),
            Reduction::Case1 | Reduction::Case2 => Some((&self.m[0], &self.m[1])),
        }
    }

    /// The reduced velocities `(u, v)`.
    pub fn reduced_velocities(&self) -> Option<Result<(RealField, RealField)>> {
        let (m, n) = self.reduced_momenta()?;
        Some(
            m.helmholtz_invert()
                .and_then(|u| Ok((u, n.helmholtz_invert()?))),
        )
    }

    pub(crate) fn raw_fields(&self) -> Vec<Vec<f64>> {
        self.momenta().map(|f| f.samples().to_vec()).collect()
    }

    /// Cyclic shift of every field by `cells` grid cells.
    pub fn shifted(&self, cells: usize) -> NovikovState {
        Self {
            grid: self.grid.clone(),
            m: self.m.iter().map(|f| f.shifted(cells)).collect(),
            n: self.n.iter().map(|f| f.shifted(cells)).collect(),
            time: self.time,
            reduction: self.reduction,
        }
    }
}

/// Embeds a reduced pair `(m, n)` into the N-component system.
pub fn make_reduction(kind: Reduction, m: RealField, n: RealField) -> Result<NovikovState> {
    m.same_grid(&n)?;
    let state = match kind {
        Reduction::GengXue => NovikovState::new(vec![m], vec![n], 0.0)?,
        Reduction::Case1 => NovikovState::new(vec![m.clone(), n.clone()], vec![n, m], 0.0)?,
        Reduction::Case2 => NovikovState::new(vec![m.clone(), n.clone()], vec![m, n], 0.0)?,
    };
    state.with_reduction(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reductions_place_fields() {
        let g = PeriodicGrid::new(16, 1.0).unwrap();
        let m = g.sample(|x| x);
        let n = g.sample(|x| 1.0 - x);
        let s1 = make_reduction(Reduction::Case1, m.clone(), n.clone()).unwrap();
        assert_eq!(s1.m()[0].samples(), s1.n()[1].samples());
        assert_eq!(s1.m()[1].samples(), s1.n()[0].samples());
        let (rm, rn) = s1.reduced_momenta().unwrap();
        assert_eq!(rm.samples(), m.samples());
        assert_eq!(rn.samples(), n.samples());

        let s2 = make_reduction(Reduction::Case2, m.clone(), n.clone()).unwrap();
        assert_eq!(s2.m()[0].samples(), s2.n()[0].samples());
        assert_eq!(s2.m()[1].samples(), s2.n()[1].samples());
        assert_eq!(s2.reduction(), Some(Reduction::Case2));
    }

    #[test]
    fn rejects_inconsistent_tags_and_grids() {
        let g = PeriodicGrid::new(16, 1.0).unwrap();
        let h = PeriodicGrid::new(16, 2.0).unwrap();
        let a = g.sample(|x| x);
        let b = g.sample(|x| x * x);
        let s =
            NovikovState::new(vec![a.clone(), b.clone()], vec![a.clone(), a.clone()], 0.0).unwrap();
        assert!(s.clone().with_reduction(Reduction::Case1).is_err());
        assert!(s.with_reduction(Reduction::GengXue).is_err());
        assert!(matches!(
            NovikovState::new(vec![a], vec![h.zeros()], 0.0),
            Err(Error::GridMismatch)
        ));
        let mut bad = b;
        bad.samples_mut()[0] = f64::INFINITY;
        assert!(NovikovState::new(vec![bad], vec![g.zeros()], 0.0).is_err());
    }
}
