//! Uniform trapezoidal quadrature on fully periodic charts. On a torus the
//! trapezoid rule degenerates to the rectangle rule and converges
//! spectrally for smooth integrands, which is what the grid-halving decay
//! checks rely on.

use std::sync::Arc;

use rayon::prelude::*;

use crate::geometry::{Chart, MetricField};
use crate::{Error, Result};

/// Node grid with per-axis counts and the constant product weight
/// `∏ Lᵢ/Nᵢ`; caps the total at 10⁷ nodes.
pub struct QuadratureGrid {
    chart: Arc<Chart>,
    nodes: Vec<usize>,
    total: usize,
    weight: f64,
}

impl QuadratureGrid {
    pub fn new(chart: Arc<Chart>, nodes: Vec<usize>) -> Result<QuadratureGrid> {
        if !chart.is_fully_periodic() {
            return Err(Error::NotPeriodic);
        }
        if nodes.len() != chart.dim() || nodes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidChart(
                "one positive node count per axis required".into(),
            ));
        }
        let total = nodes.iter().try_fold(1usize, |acc, &n| {
            acc.checked_mul(n).filter(|&t| t <= 10_000_000)
        });
        let total = total.ok_or_else(|| {
            Err::<usize, _>(Error::GridTooLarge(nodes.iter().product::<usize>()))
                .unwrap_err()
        })?;
        let weight: f64 = (0..chart.dim())
            .map(|i| chart.period(i) / nodes[i] as f64)
            .product();
        Ok(QuadratureGrid {
            chart,
            nodes,
            total,
            weight,
        })
    }

    pub fn uniform(chart: Arc<Chart>, per_axis: usize) -> Result<QuadratureGrid> {
        let dim = chart.dim();
        QuadratureGrid::new(chart, vec![per_axis; dim])
    }

    pub fn total_nodes(&self) -> usize {
        self.total
    }

    pub fn node(&self, mut idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.chart.dim()];
        for axis in (0..self.chart.dim()).rev() {
            let n = self.nodes[axis];
            let k = idx % n;
            idx /= n;
            let (lo, _) = self.chart.bounds()[axis];
            p[axis] = lo + self.chart.period(axis) * k as f64 / n as f64;
        }
        p
    }

    /// `Σ w·f(xᵢ)`: nodes evaluate in parallel, the sum reduces in index
    /// order so results are deterministic.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let vals: Vec<f64> = (0..self.total)
            .into_par_iter()
            .map(|i| f(&self.node(i)))
            .collect();
        vals.iter().sum::<f64>() * self.weight
    }

    /// Integration against the Riemannian volume form `√det g`.
    pub fn integrate_with_volume(
        &self,
        g: &MetricField,
        f: impl Fn(&[f64]) -> f64 + Sync,
    ) -> f64 {
        self.integrate(|p| f(p) * g.eval(p, 0).value().determinant().sqrt())
    }

    /// Cached `√det g` values in node order, for reuse across integrands.
    pub fn volume_values(&self, g: &MetricField) -> Vec<f64> {
        (0..self.total)
            .into_par_iter()
            .map(|i| g.eval(&self.node(i), 0).value().determinant().sqrt())
            .collect()
    }

    pub fn integrate_cached(&self, vol: &[f64], f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let vals: Vec<f64> = (0..self.total)
            .into_par_iter()
            .map(|i| f(&self.node(i)) * vol[i])
            .collect();
        vals.iter().sum::<f64>() * self.weight
    }

    /// Max of `|f|` over the nodes.
    pub fn max_abs(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        (0..self.total)
            .into_par_iter()
            .map(|i| f(&self.node(i)).abs())
            .reduce(|| 0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_periodic_and_oversized() {
        let box_chart = Chart::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![true, false]).unwrap();
        assert!(matches!(
            QuadratureGrid::uniform(box_chart, 4),
            Err(Error::NotPeriodic)
        ));
        let torus = Chart::torus(4).unwrap();
        assert!(matches!(
            QuadratureGrid::uniform(torus, 64),
            Err(Error::GridTooLarge(_))
        ));
    }

    #[test]
    fn integrates_trig_polynomials_exactly() {
        let torus = Chart::torus(2).unwrap();
        let grid = QuadratureGrid::uniform(torus, 16).unwrap();
        // ∫(2 + cos x + sin(3y) + cos x sin y) over T² = 2·(2π)²
        let val = grid.integrate(|p| {
            2.0 + p[0].cos() + (3.0 * p[1]).sin() + p[0].cos() * p[1].sin()
        });
        let tau = std::f64::consts::TAU;
        assert!((val - 2.0 * tau * tau).abs() <= 1e-10);
    }

    #[test]
    fn spectral_convergence_for_smooth_non_polynomial() {
        // ∫ e^{cos x} dx over [0,2π] = 2π·I₀(1)
        let torus = Chart::torus(2).unwrap();
        let exact = std::f64::consts::TAU * 1.2660658777520084 * std::f64::consts::TAU;
        let mut errs = Vec::new();
        for n in [4usize, 8, 16] {
            let grid = QuadratureGrid::uniform(torus.clone(), n).unwrap();
            let val = grid.integrate(|p| p[0].cos().exp());
            errs.push((val - exact).abs());
        }
        assert!(errs[1] <= errs[0] / 4.0 + 1e-12);
        assert!(errs[2] <= errs[1] / 4.0 + 1e-12);
    }
}
