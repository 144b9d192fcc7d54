//! Numerical verification engine for the tensor calculus of conformal
//! product structures on reducible Riemannian manifolds.
//!
//! The crate constructs example geometries on coordinate charts (triple
//! products, conformally rescaled products, the flat cone), computes all
//! derived objects — Weyl connection, curvature, the involutions `S` and
//! `P`, the Lee form, the Λ² operator algebra — by exact truncated Taylor
//! (jet) arithmetic, and checks every identity of the theory as a numerical
//! residual, plus the global integral formula by quadrature on tori.
//!
//! Module map:
//!
//! * [`jets`] — forward-mode truncated Taylor arithmetic up to order 3.
//! * [`geometry`] — charts, tensor fields with jet evaluation, exterior
//!   forms, musical isomorphisms, the `⊙` / `∧` endomorphism constructions.
//! * [`connection`] — Christoffel symbols, Levi-Civita and Weyl covariant
//!   derivatives, codifferentials.
//! * [`curvature`] — Riemann and Ricci tensors, the `F·G` algebra on Λ².
//! * [`structures`] — builders for the example geometries and the derived
//!   structure tensors (`S`, `P`, `θ`, `ξ`, `α`, `A±`).
//! * [`verify`] — one residual checker per identity, sampling theorems for
//!   `A±`, and torus quadrature for the integral formula.

pub mod connection;
pub mod curvature;
pub mod geometry;
pub mod jets;
pub mod structures;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use geometry::Chart;
pub use jets::{Jet, MultiIndex};
pub use structures::{PackKind, StructurePack};
pub use verify::{ResidualReport, Suite, SuiteParams};

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension {0} exceeds the supported maximum of {max}", max = jets::MAX_DIM)]
    DimTooLarge(usize),
    #[error("truncation order {0} exceeds the supported maximum of {max}", max = jets::MAX_ORDER)]
    OrderTooLarge(usize),
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("jet dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("division by a jet with zero constant term")]
    DivisionByZeroJet,
    #[error("`{func}` requires a positive constant term, got {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("multi-index order {requested} exceeds truncation order {order}")]
    OrderExceedsTruncation { requested: usize, order: usize },
    #[error("jet of order 0 cannot be differentiated")]
    InsufficientOrder,
    #[error("metric is not positive definite at {point:?}")]
    MetricNotSpd { point: Vec<f64> },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid builder parameters: {0}")]
    InvalidBuilder(String),
    #[error("invalid involution rank {rank} for dimension {dim} (need 1 ≤ rank ≤ dim−1)")]
    InvalidRank { rank: usize, dim: usize },
    #[error("numerically defective eigenbasis: {0}")]
    DefectiveEigenbasis(String),
    #[error("quadrature requires a fully periodic chart")]
    NotPeriodic,
    #[error("quadrature grid too large: {0} nodes (limit 10^7)")]
    GridTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
