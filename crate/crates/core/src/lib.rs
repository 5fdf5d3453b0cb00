//! Pseudospectral laboratory for the multi-component Novikov system
//!
//! ```text
//! m_it = Σ_j (−2 m_i u_jx v_j − m_i u_j v_jx − m_ix u_j v_j − u_ix m_j v_j + u_i m_j v_jx)
//! n_it = Σ_j (−2 n_i u_j v_jx − n_i u_jx v_j − n_ix u_j v_j − v_ix n_j u_j + v_i n_j u_jx)
//! m_i = u_i − u_ixx,   n_i = v_i − v_ixx
//! ```
//!
//! on a periodic interval.
pub mod blowup;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod invariants;
pub mod peakon;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/invariants.md")]
    mod invariants {}
    #[doc = include_str!("../../../book/src/blowup.md")]
    mod blowup {}
    #[doc = include_str!("../../../book/src/peakons.md")]
    mod peakons {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
