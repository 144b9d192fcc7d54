//! Charts and tensor fields with jet evaluation.
//!
//! A [`Chart`] is the computational manifold: a coordinate box with per-axis
//! periodicity flags. Fields carry closures from coordinate jets to
//! component jets, so every evaluation produces exact partial derivatives up
//! to the requested order; grids appear only in the quadrature module.

mod algebra;
mod fields;
mod forms;

pub use algebra::{
    endo_to_frame, flat, form_to_frame, inner, odot, orthonormal_frame, outer_endo, sharp,
    vector_to_frame, wedge_endo, wedge_inner,
};
pub use fields::{
    EndomorphismField, JetPoint, MetricField, OneFormField, ScalarField, VectorField,
};
pub use forms::{exterior_d, interior_product, increasing_tuples, FormValue, KForm};

use std::sync::Arc;

use rand::Rng;

use crate::jets::MAX_DIM;
use crate::{Error, Result};

/// A coordinate chart: dimension, per-axis closed interval, per-axis
/// periodicity. On a periodic axis the box length is the period.
#[derive(Clone, Debug)]
pub struct Chart {
    dim: usize,
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
}

impl Chart {
    pub fn new(bounds: Vec<(f64, f64)>, periodic: Vec<bool>) -> Result<Arc<Chart>> {
        let dim = bounds.len();
        if dim < 2 {
            return Err(Error::InvalidChart(format!(
                "dimension {dim} < 2 is not supported"
            )));
        }
        if dim > MAX_DIM {
            return Err(Error::DimTooLarge(dim));
        }
        if periodic.len() != dim {
            return Err(Error::InvalidChart(
                "periodicity flags must match the dimension".into(),
            ));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::InvalidChart(format!(
                    "axis {axis}: empty interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Arc::new(Chart {
            dim,
            bounds,
            periodic,
        }))
    }

    /// The standard torus chart `[0, 2π)ⁿ`, fully periodic.
    pub fn torus(dim: usize) -> Result<Arc<Chart>> {
        Chart::new(
            vec![(0.0, 2.0 * std::f64::consts::PI); dim],
            vec![true; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.bounds[axis].1 - self.bounds[axis].0
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim
            && p.iter()
                .zip(&self.bounds)
                .all(|(&x, &(lo, hi))| x >= lo && x <= hi)
    }

    /// Uniform sample inside the box (5% inset on non-periodic axes so that
    /// point sets stay clear of the sampling boundary).
    pub fn sample_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(&self.periodic)
            .map(|(&(lo, hi), &per)| {
                let inset = if per { 0.0 } else { 0.05 * (hi - lo) };
                rng.gen_range((lo + inset)..(hi - inset))
            })
            .collect()
    }
}
