//! Builders for the example geometries and their structure tensors: the
//! metric `g`, the involutions `S` (Weyl-parallel splitting) and `P`
//! (metric-parallel splitting), the Lee form `θ`, and the unit field `ξ`
//! spanning a rank-1 factor when one exists.

mod builders;
mod involutions;
mod presets;

pub use builders::{
    build_flat_cone, build_rescaled_product, build_triple_product, RescaledProductSpec,
    TripleProductSpec,
};
pub use involutions::{
    a_minus_via_frame, a_plus_minus, a_plus_via_frame, eigenbasis_plus, involution_from_basis,
    random_involution_pair, random_orthogonal, InvolutionPair,
};
pub use presets::{MetricPreset, MetricTerm, TrigPreset, TrigTerm};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::geometry::{Chart, EndomorphismField, MetricField, OneFormField, VectorField};

/// Which builder produced a pack; drives suite applicability (quadrature
/// needs tori, the restricted rank-1 conclusions hold on triple products).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PackKind {
    TripleProduct,
    RescaledProduct,
    FlatCone,
}

/// An example geometry with its structure tensors. All fields are immutable
/// closures over one chart; packs are freely shareable across threads.
#[derive(Clone)]
pub struct StructurePack {
    pub kind: PackKind,
    pub label: String,
    pub chart: Arc<Chart>,
    pub g: MetricField,
    pub s: EndomorphismField,
    pub p: Option<EndomorphismField>,
    pub theta: OneFormField,
    pub xi: Option<VectorField>,
    /// A metric whose Levi-Civita connection equals the pack's Weyl
    /// connection, when `D` is exact: `g₀` for rescaled products, the flat
    /// metric `e^{2t}g` for the cone. Enables an independent Lee-form
    /// recovery route; `None` on triple products (`D` is not closed there).
    pub reference_metric: Option<MetricField>,
}

impl StructurePack {
    pub fn n(&self) -> usize {
        self.chart.dim()
    }

    /// The pack with `S` replaced by `−S`; swaps `(θ₊,θ₋)` and `(A₊,A₋)`.
    pub fn flip_s(&self) -> StructurePack {
        let inner = self.s.clone();
        let mut out = self.clone();
        out.s = EndomorphismField::new(self.chart.clone(), move |xs| {
            inner.eval_jets(xs).scale(-1.0)
        });
        out.label = format!("{} (S→−S)", self.label);
        out
    }
}

/// `θ± = ½(θ ± Sθ)` on values; `S` and `θ` must live in the same frame.
pub fn theta_split(s: &DMatrix<f64>, theta: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let s_theta = s * theta;
    ((theta + &s_theta) * 0.5, (theta - s_theta) * 0.5)
}

/// `α = SP − PS`, the skew endomorphism measuring non-commutation.
pub fn alpha(s: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    s * p - p * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn theta_split_properties() {
        let pair = random_involution_pair(5, 2, 3, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let theta = DVector::from_fn(5, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
        let (tp, tm) = theta_split(&pair.s, &theta);
        assert!(((&tp + &tm) - &theta).amax() <= 1e-14);
        // Sθ₊ = θ₊ and Sθ₋ = −θ₋
        assert!((&pair.s * &tp - &tp).amax() <= 1e-12);
        assert!((&pair.s * &tm + &tm).amax() <= 1e-12);
        // Pythagoras in the Euclidean frame
        let lhs = theta.norm_squared();
        let rhs = tp.norm_squared() + tm.norm_squared();
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs));
        // eigenform case: Sθ = θ ⟹ θ₋ = 0
        let basis = eigenbasis_plus(&pair.s).unwrap();
        let (_, tm) = theta_split(&pair.s, &basis[0]);
        assert!(tm.amax() <= 1e-12);
    }

    #[test]
    fn alpha_skewness_and_commuting_case() {
        let pair = random_involution_pair(6, 2, 4, 11).unwrap();
        let a = alpha(&pair.s, &pair.p);
        // ⟨αX,Y⟩ = −⟨X,αY⟩ in the Euclidean frame
        assert!((&a + a.transpose()).amax() <= 1e-12 * (1.0 + a.amax()));
        let zero = alpha(&pair.s, &pair.s);
        assert!(zero.amax() <= 1e-13);
    }
}
