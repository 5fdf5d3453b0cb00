//! Two independent evaluations of the momentum tendency.
//!
//! [`rhs_componentwise`] sums the five cubic terms of each component equation
//! directly. [`rhs_transport`] assembles the advection speed `a = Σ u_j v_j`
//! and the block-diagonal matrix `B` and returns `-a·M_x + B·M`. Both share
//! only the velocity reconstruction, so their agreement is a strong check on
//! the algebra.
//!
//! With dealiasing enabled, all inputs to the cubic products are evaluated on
//! a grid refined by a factor two and the products are projected back onto
//! the resolved modes. Zero padding by two removes every aliased contribution
//! of a cubic nonlinearity.

use rustfft::num_complex::Complex64;

use crate::dynamics::state::NovikovState;
use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, RealField};

/// Which evaluation of the right-hand side to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsForm {
    #[default]
    Componentwise,
    Transport,
}

/// Time derivatives `(dm_i/dt, dn_i/dt)`, shaped like a [`NovikovState`].
#[derive(Debug, Clone)]
pub struct Tendency {
    pub dm: Vec<RealField>,
    pub dn: Vec<RealField>,
}

impl Tendency {
    fn from_raw(grid: &PeriodicGrid, mut raw: Vec<Vec<f64>>) -> Self {
        let n_comp = raw.len() / 2;
        let dn = raw.split_off(n_comp);
        let wrap = |v: Vec<Vec<f64>>| {
            v.into_iter()
                .map(|s| RealField::new(grid.clone(), s).expect("tendency length"))
                .collect()
        };
        Self {
            dm: wrap(raw),
            dn: wrap(dn),
        }
    }

    /// Fields in transport ordering.
    pub fn fields(&self) -> impl Iterator<Item = &RealField> {
        self.dm.iter().chain(&self.dn)
    }

    /// Largest absolute difference against another tendency.
    pub fn max_abs_diff(&self, other: &Tendency) -> f64 {
        self.fields()
            .zip(other.fields())
            .flat_map(|(a, b)| {
                a.samples()
                    .iter()
                    .zip(b.samples())
                    .map(|(x, y)| (x - y).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.fields().map(RealField::linf).fold(0.0, f64::max)
    }
}

/// Advection speed and matrix of the transport form `M_t + a M_x = B M`.
#[derive(Debug, Clone)]
pub struct TransportForm {
    pub a: RealField,
    /// `2N × 2N` entries, row-major; off-diagonal blocks are identically zero.
    pub b: Vec<Vec<RealField>>,
}

/// Momenta, velocities and their first derivatives sampled on the grid where
/// the nonlinear products are formed. Index `0..N` holds the `m`/`u` family,
/// `N..2N` the `n`/`v` family.
pub(crate) struct Kinematics {
    pub n_comp: usize,
    pub len: usize,
    pub mom: Vec<Vec<f64>>,
    pub mom_x: Vec<Vec<f64>>,
    pub vel: Vec<Vec<f64>>,
    pub vel_x: Vec<Vec<f64>>,
}

impl Kinematics {
    pub fn new(grid: &PeriodicGrid, fields: &[Vec<f64>], dealias: bool) -> Self {
        let k = grid.wavenumbers();
        let k2 = grid.k_squared();
        let to_physical = |spec: Vec<Complex64>| {
            if dealias {
                grid.to_padded_physical(&spec)
            } else {
                grid.inverse(spec)
            }
        };
        let cap = fields.len();
        let (mut mom, mut mom_x, mut vel, mut vel_x) = (
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
        );
        for f in fields {
            let spec = grid.forward(f);
            let u_spec: Vec<Complex64> =
                spec.iter().zip(k2).map(|(c, &k2)| c / (1.0 + k2)).collect();
            let dx = |s: &[Complex64]| -> Vec<Complex64> {
                s.iter()
                    .zip(k)
                    .map(|(c, &k)| c * Complex64::new(0.0, k))
                    .collect()
            };
            mom_x.push(to_physical(dx(&spec)));
            vel_x.push(to_physical(dx(&u_spec)));
            vel.push(to_physical(u_spec));
            mom.push(if dealias {
                grid.to_padded_physical(&spec)
            } else {
                f.clone()
            });
        }
        let len = mom[0].len();
        Self {
            n_comp: fields.len() / 2,
            len,
            mom,
            mom_x,
            vel,
            vel_x,
        }
    }

    pub fn max_speed(&self) -> f64 {
        let n = self.n_comp;
        (0..self.len)
            .map(|p| {
                (0..n)
                    .map(|j| self.vel[j][p] * self.vel[n + j][p])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Pointwise speed and blocks of `B` at one node.
pub(crate) struct LocalTransport {
    pub a: f64,
    pub b11: Vec<f64>,
    pub b22: Vec<f64>,
}

pub(crate) fn local_transport(
    n: usize,
    u: &[f64],
    ux: &[f64],
    v: &[f64],
    vx: &[f64],
) -> LocalTransport {
    let mut a = 0.0;
    let mut diag1 = 0.0;
    let mut diag2 = 0.0;
    for j in 0..n {
        a += u[j] * v[j];
        diag1 += 2.0 * ux[j] * v[j] + u[j] * vx[j];
        diag2 += 2.0 * vx[j] * u[j] + v[j] * ux[j];
    }
    let mut b11 = vec![0.0; n * n];
    let mut b22 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b11[i * n + j] = u[i] * vx[j] - ux[i] * v[j];
            b22[i * n + j] = v[i] * ux[j] - vx[i] * u[j];
        }
        b11[i * n + i] -= diag1;
        b22[i * n + i] -= diag2;
    }
    LocalTransport { a, b11, b22 }
}

/// Per-node copies of the kinematic fields, reused across nodes.
struct Node {
    m: Vec<f64>,
    mx: Vec<f64>,
    n: Vec<f64>,
    nx: Vec<f64>,
    u: Vec<f64>,
    ux: Vec<f64>,
    v: Vec<f64>,
    vx: Vec<f64>,
}

impl Node {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        Self {
            m: z(),
            mx: z(),
            n: z(),
            nx: z(),
            u: z(),
            ux: z(),
            v: z(),
            vx: z(),
        }
    }

    fn load(&mut self, kin: &Kinematics, p: usize) {
        let n = kin.n_comp;
        for j in 0..n {
            self.m[j] = kin.mom[j][p];
            self.mx[j] = kin.mom_x[j][p];
            self.n[j] = kin.mom[n + j][p];
            self.nx[j] = kin.mom_x[n + j][p];
            self.u[j] = kin.vel[j][p];
            self.ux[j] = kin.vel_x[j][p];
            self.v[j] = kin.vel[n + j][p];
            self.vx[j] = kin.vel_x[n + j][p];
        }
    }
}

pub(crate) fn componentwise_raw(kin: &Kinematics) -> Vec<Vec<f64>> {
    let n = kin.n_comp;
    let mut out = vec![vec![0.0; kin.len]; 2 * n];
    let mut node = Node::new(n);
    for p in 0..kin.len {
        node.load(kin, p);
        let Node {
            m,
            mx,
            n: nn,
            nx,
            u,
            ux,
            v,
            vx,
        } = &node;
        for i in 0..n {
            let mut dm = 0.0;
            let mut dn = 0.0;
            for j in 0..n {
                dm += -2.0 * m[i] * ux[j] * v[j]
                    - m[i] * u[j] * vx[j]
                    - mx[i] * u[j] * v[j]
                    - ux[i] * m[j] * v[j]
                    + u[i] * m[j] * vx[j];
                dn += -2.0 * nn[i] * u[j] * vx[j]
                    - nn[i] * ux[j] * v[j]
                    - nx[i] * u[j] * v[j]
                    - vx[i] * nn[j] * u[j]
                    + v[i] * nn[j] * ux[j];
            }
            out[i][p] = dm;
            out[n + i][p] = dn;
        }
    }
    out
}

pub(crate) fn transport_raw(kin: &Kinematics) -> Vec<Vec<f64>> {
    let n = kin.n_comp;
    let mut out = vec![vec![0.0; kin.len]; 2 * n];
    let mut node = Node::new(n);
    for p in 0..kin.len {
        node.load(kin, p);
        let t = local_transport(n, &node.u, &node.ux, &node.v, &node.vx);
        for i in 0..n {
            let mut bm = 0.0;
            let mut bn = 0.0;
            for j in 0..n {
                bm += t.b11[i * n + j] * node.m[j];
                bn += t.b22[i * n + j] * node.n[j];
            }
            out[i][p] = -t.a * node.mx[i] + bm;
            out[n + i][p] = -t.a * node.nx[i] + bn;
        }
    }
    out
}

/// Evaluates the tendency of raw fields and returns it on the base grid,
/// together with `max |a|` over the evaluation grid.
pub(crate) fn tendency_raw(
    grid: &PeriodicGrid,
    fields: &[Vec<f64>],
    form: RhsForm,
    dealias: bool,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let kin = Kinematics::new(grid, fields, dealias);
    let raw = match form {
        RhsForm::Componentwise => componentwise_raw(&kin),
        RhsForm::Transport => transport_raw(&kin),
    };
    let out: Vec<Vec<f64>> = if dealias {
        raw.iter()
            .map(|f| grid.inverse(grid.from_padded_physical(f)))
            .collect()
    } else {
        raw
    };
    if let Some(component) = out.iter().position(|f| f.iter().any(|x| !x.is_finite())) {
        return Err(Error::NanInTendency { component });
    }
    Ok((out, kin.max_speed()))
}

fn tendency(s: &NovikovState, form: RhsForm, dealias: bool) -> Result<Tendency> {
    let (raw, _) = tendency_raw(s.grid(), &s.raw_fields(), form, dealias)?;
    Ok(Tendency::from_raw(s.grid(), raw))
}

/// Tendency from the componentwise sums.
pub fn rhs_componentwise(s: &NovikovState, dealias: bool) -> Result<Tendency> {
    tendency(s, RhsForm::Componentwise, dealias)
}

/// Tendency from the transport form `-a·M_x + B·M`.
pub fn rhs_transport(s: &NovikovState, dealias: bool) -> Result<Tendency> {
    tendency(s, RhsForm::Transport, dealias)
}

/// Assembles `a` and `B` on the state's grid.
pub fn build_transport(s: &NovikovState) -> Result<TransportForm> {
    if !s.is_finite() {
        return Err(Error::NonFinite);
    }
    let grid = s.grid();
    let kin = Kinematics::new(grid, &s.raw_fields(), false);
    let n = kin.n_comp;
    let len = kin.len;
    let mut a = vec![0.0; len];
    let mut b = vec![vec![vec![0.0; len]; 2 * n]; 2 * n];
    let mut node = Node::new(n);
    for p in 0..len {
        node.load(&kin, p);
        let t = local_transport(n, &node.u, &node.ux, &node.v, &node.vx);
        a[p] = t.a;
        for i in 0..n {
            for j in 0..n {
                b[i][j][p] = t.b11[i * n + j];
                b[n + i][n + j][p] = t.b22[i * n + j];
            }
        }
    }
    let field = |s: Vec<f64>| RealField::new(grid.clone(), s).expect("transport length");
    Ok(TransportForm {
        a: field(a),
        b: b.into_iter()
            .map(|row| row.into_iter().map(field).collect())
            .collect(),
    })
}
