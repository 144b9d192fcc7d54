//! Scalar / vector / 1-form / endomorphism / metric fields: immutable
//! closures from coordinate jets to component jets, in the coordinate frame.
//! Evaluation is deterministic — the same point yields bit-identical jets.

use std::sync::Arc;

use nalgebra::Cholesky;

use crate::jets::matrix::JetMat;
use crate::jets::{coordinate_jets, Jet};
use crate::{Error, Result};

use super::Chart;

/// Coordinate jets at an evaluation point, handed to field closures.
pub type JetPoint = [Jet];

type ScalarFn = dyn Fn(&JetPoint) -> Jet + Send + Sync;
type VecFn = dyn Fn(&JetPoint) -> Vec<Jet> + Send + Sync;
type MatFn = dyn Fn(&JetPoint) -> JetMat + Send + Sync;

macro_rules! field_type {
    ($(#[$doc:meta])* $name:ident, $fn_ty:ty, $out:ty) => {
        $(#[$doc])*
        #[derive(Clone)]
        pub struct $name {
            chart: Arc<Chart>,
            f: Arc<$fn_ty>,
        }

        impl $name {
            pub fn new(
                chart: Arc<Chart>,
                f: impl Fn(&JetPoint) -> $out + Send + Sync + 'static,
            ) -> Self {
                Self { chart, f: Arc::new(f) }
            }

            pub fn chart(&self) -> &Arc<Chart> {
                &self.chart
            }

            /// Evaluates the component jets at `p` with coordinate jets of
            /// the given truncation order.
            pub fn eval(&self, p: &[f64], order: usize) -> $out {
                debug_assert_eq!(p.len(), self.chart.dim());
                let xs = coordinate_jets(p, order);
                (self.f)(&xs)
            }

            /// Evaluates on already-constructed coordinate jets, so composite
            /// closures can share one jet point.
            pub fn eval_jets(&self, xs: &JetPoint) -> $out {
                (self.f)(xs)
            }
        }
    };
}

field_type!(
    /// Scalar field on a chart.
    ScalarField,
    ScalarFn,
    Jet
);
field_type!(
    /// Vector field: `n` upper-index components.
    VectorField,
    VecFn,
    Vec<Jet>
);
field_type!(
    /// 1-form field: `n` lower-index components.
    OneFormField,
    VecFn,
    Vec<Jet>
);
field_type!(
    /// Endomorphism field: `n×n` components `A^i_j` (column = input slot).
    EndomorphismField,
    MatFn,
    JetMat
);
field_type!(
    /// Metric field: symmetric `n×n` components `g_{ij}`.
    MetricField,
    MatFn,
    JetMat
);

impl MetricField {
    /// Checks that the metric value is symmetric positive definite at `p`
    /// (by Cholesky factorization success).
    pub fn check_spd(&self, p: &[f64]) -> Result<()> {
        let g = self.eval(p, 0).value();
        let sym_dev = (&g - g.transpose()).amax();
        if sym_dev > 1e-12 * (1.0 + g.amax()) {
            return Err(Error::MetricNotSpd { point: p.to_vec() });
        }
        if Cholesky::new(g).is_none() {
            return Err(Error::MetricNotSpd { point: p.to_vec() });
        }
        Ok(())
    }
}

impl ScalarField {
    pub fn zero(chart: Arc<Chart>) -> ScalarField {
        let dim = chart.dim();
        ScalarField::new(chart, move |xs| Jet::constant(0.0, dim, xs[0].order()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    #[test]
    fn evaluation_is_deterministic() {
        let chart = Chart::torus(2).unwrap();
        let f = ScalarField::new(chart, |xs| xs[0].sin().mul_t(&xs[1].cos()));
        let a = f.eval(&[0.3, 0.7], 3);
        let b = f.eval(&[0.3, 0.7], 3);
        assert_eq!(a, b);
    }

    #[test]
    fn spd_check_rejects_indefinite_metric() {
        let chart = Chart::torus(2).unwrap();
        let g = MetricField::new(chart, |xs| {
            let dim = xs.len();
            let order = xs[0].order();
            JetMat::from_fn(2, |i, j| {
                Jet::constant(if i == j { -1.0 } else { 0.0 }, dim, order)
            })
        });
        assert!(g.check_spd(&[0.1, 0.2]).is_err());
    }
}
