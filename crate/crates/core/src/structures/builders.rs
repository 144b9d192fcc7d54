//! The three example-geometry builders.
//!
//! * Triple products `g = e^{2f}g₁ + g₂ + g₃` on `T^{d₁}×T^{d₂}×T^{d₃}`
//!   with `f` a function of the first two factors: both splittings exist
//!   (`S` from the Weyl side, `P` from the metric side) and commute.
//! * Conformally rescaled products `g = e^{2u}g₀`: the Levi-Civita
//!   connection of the block-product `g₀` is a Weyl connection for `g` with
//!   `θ = −du`; no metric-parallel `P` survives the rescaling.
//! * The flat cone: chart `(t, angles)`, `g = dt² + g_S` (a product, giving
//!   `P`), flat reference metric `e^{2t}g`, Lee form `θ = dt`, and `S` the
//!   pullback of a constant Cartesian splitting through `x = eᵗ·σ(angles)`.
//!   `SP ≠ PS` at generic points.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::geometry::{Chart, EndomorphismField, MetricField, OneFormField, VectorField};
use crate::jets::matrix::JetMat;
use crate::jets::Jet;
use crate::{Error, Result};

use super::presets::{MetricPreset, TrigPreset};
use super::{PackKind, StructurePack};

/// Parameters of `g = e^{2f}g₁ + g₂ + g₃` on a torus chart.
#[derive(Clone, Debug)]
pub struct TripleProductSpec {
    pub dims: (usize, usize, usize),
    pub g1: MetricPreset,
    pub g2: MetricPreset,
    pub g3: MetricPreset,
    /// Warping function on the first `d₁ + d₂` coordinates only.
    pub f: TrigPreset,
}

impl TripleProductSpec {
    /// Identity block metrics and a given warping preset.
    pub fn with_f(dims: (usize, usize, usize), f: TrigPreset) -> TripleProductSpec {
        TripleProductSpec {
            dims,
            g1: MetricPreset::identity(dims.0),
            g2: MetricPreset::identity(dims.1),
            g3: MetricPreset::identity(dims.2),
            f,
        }
    }

    /// Seeded generic spec: perturbed block metrics and a warping function
    /// that genuinely depends on both `M₁` and `M₂` coordinates.
    pub fn random(dims: (usize, usize, usize), seed: u64) -> TripleProductSpec {
        let (d1, d2, _) = dims;
        let mut f = TrigPreset::random(seed, d1 + d2, 3, 0.3, 2);
        // make sure θ = −d₂f is not identically zero
        if f.terms.iter().all(|t| t.freqs[d1..].iter().all(|&k| k == 0)) {
            f.terms[0].freqs[d1] = 1;
        }
        TripleProductSpec {
            dims,
            g1: MetricPreset::random(seed ^ 0x9e37_79b9, dims.0, 2, 0.2),
            g2: MetricPreset::random(seed ^ 0x7f4a_7c15, dims.1, 2, 0.2),
            g3: MetricPreset::random(seed ^ 0x85eb_ca6b, dims.2, 2, 0.2),
            f,
        }
    }

    pub fn n(&self) -> usize {
        self.dims.0 + self.dims.1 + self.dims.2
    }

    pub fn validate(&self) -> Result<()> {
        let (d1, d2, d3) = self.dims;
        if d1 < 1 {
            return Err(Error::InvalidBuilder(
                "triple product requires d₁ ≥ 1".into(),
            ));
        }
        if d2 < 1 {
            return Err(Error::InvalidBuilder(
                "triple product requires d₂ ≥ 1".into(),
            ));
        }
        if d3 < 1 {
            return Err(Error::InvalidBuilder(
                "triple product requires d₃ ≥ 1 (use the rescaled-product builder for d₃ = 0)"
                    .into(),
            ));
        }
        if self.n() > crate::jets::MAX_DIM {
            return Err(Error::DimTooLarge(self.n()));
        }
        if self.f.naxes() > d1 + d2 {
            return Err(Error::InvalidBuilder(
                "warping function must read only the M₁×M₂ coordinates".into(),
            ));
        }
        self.g1.validate()?;
        self.g2.validate()?;
        self.g3.validate()
    }
}

fn constant_involution(chart: &Arc<Chart>, plus: usize) -> EndomorphismField {
    let n = chart.dim();
    EndomorphismField::new(chart.clone(), move |xs| {
        JetMat::from_fn(n, |i, j| {
            let v = if i != j {
                0.0
            } else if i < plus {
                1.0
            } else {
                -1.0
            };
            Jet::constant(v, n, xs[0].order())
        })
    })
}

/// Builds the triple product with `S = +I` on `TM₁`, `P = +I` on `TM₁⊕TM₂`,
/// `θ = −d₂f`, and `ξ = e^{−f}·(g₁)₁₁^{−1/2}·∂₁` when `d₁ = 1`.
pub fn build_triple_product(spec: &TripleProductSpec) -> Result<StructurePack> {
    spec.validate()?;
    let (d1, d2, _d3) = spec.dims;
    let n = spec.n();
    let chart = Chart::torus(n)?;

    let g = {
        let spec = spec.clone();
        MetricField::new(chart.clone(), move |xs| {
            let (d1, d2, d3) = spec.dims;
            let order = xs[0].order();
            let e2f = spec.f.eval_jets(&xs[..d1 + d2]).scale(2.0).exp();
            let b1 = spec.g1.eval_jets(&xs[..d1]);
            let b2 = spec.g2.eval_jets(&xs[d1..d1 + d2]);
            let b3 = spec.g3.eval_jets(&xs[d1 + d2..d1 + d2 + d3]);
            JetMat::from_fn(d1 + d2 + d3, |i, j| {
                if i < d1 && j < d1 {
                    b1.get(i, j).mul_t(&e2f)
                } else if (d1..d1 + d2).contains(&i) && (d1..d1 + d2).contains(&j) {
                    b2.get(i - d1, j - d1).clone()
                } else if i >= d1 + d2 && j >= d1 + d2 {
                    b3.get(i - d1 - d2, j - d1 - d2).clone()
                } else {
                    Jet::constant(0.0, d1 + d2 + d3, order)
                }
            })
        })
    };

    let theta = {
        let f = spec.f.clone();
        let dims = spec.dims;
        OneFormField::new(chart.clone(), move |xs| {
            let (d1, d2, _) = dims;
            let fj = f.eval_jets(&xs[..d1 + d2]);
            (0..xs.len())
                .map(|i| {
                    if (d1..d1 + d2).contains(&i) {
                        fj.partial_derivative(i)
                            .expect("Lee form needs coordinate jets of order ≥ 1")
                            .scale(-1.0)
                    } else {
                        Jet::constant(0.0, xs.len(), xs[0].order().saturating_sub(1))
                    }
                })
                .collect()
        })
    };

    let xi = if d1 == 1 {
        let f = spec.f.clone();
        let g1 = spec.g1.clone();
        let d12 = d1 + d2;
        Some(VectorField::new(chart.clone(), move |xs| {
            let scale = f
                .eval_jets(&xs[..d12])
                .scale(-1.0)
                .exp()
                .mul_t(&g1.eval_jets(&xs[..1]).get(0, 0).powf(-0.5));
            let mut out = vec![Jet::constant(0.0, xs.len(), scale.order()); xs.len()];
            out[0] = scale;
            out
        }))
    } else {
        None
    };

    Ok(StructurePack {
        kind: PackKind::TripleProduct,
        label: format!("triple_product dims ({},{},{})", d1, d2, spec.dims.2),
        chart: chart.clone(),
        g,
        s: constant_involution(&chart, d1),
        p: Some(constant_involution(&chart, d1 + d2)),
        theta,
        xi,
        reference_metric: None,
    })
}

/// Parameters of `g = e^{2u}g₀` for a block-product reference metric `g₀`.
#[derive(Clone, Debug)]
pub struct RescaledProductSpec {
    pub block_dims: Vec<usize>,
    pub metrics: Vec<MetricPreset>,
    /// Rescaling exponent, may read every coordinate.
    pub u: TrigPreset,
    /// `S = +I` on the leading `split` blocks, `−I` on the rest.
    pub split: usize,
}

impl RescaledProductSpec {
    pub fn random(block_dims: Vec<usize>, split: usize, seed: u64) -> RescaledProductSpec {
        let n: usize = block_dims.iter().sum();
        let metrics = block_dims
            .iter()
            .enumerate()
            .map(|(b, &d)| MetricPreset::random(seed ^ (b as u64 + 1), d, 2, 0.2))
            .collect();
        RescaledProductSpec {
            block_dims,
            metrics,
            u: TrigPreset::random(seed ^ 0xc2b2_ae35, n, 3, 0.3, 2),
            split,
        }
    }

    pub fn n(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_dims.len() < 2 {
            return Err(Error::InvalidBuilder(
                "rescaled product needs at least two blocks so that S ≠ ±I".into(),
            ));
        }
        if self.block_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidBuilder("empty metric block".into()));
        }
        if self.split == 0 || self.split >= self.block_dims.len() {
            return Err(Error::InvalidBuilder(
                "split must keep blocks on both sides of S".into(),
            ));
        }
        if self.n() > crate::jets::MAX_DIM {
            return Err(Error::DimTooLarge(self.n()));
        }
        if self.metrics.len() != self.block_dims.len() {
            return Err(Error::InvalidBuilder(
                "one metric preset per block required".into(),
            ));
        }
        for m in &self.metrics {
            m.validate()?;
        }
        Ok(())
    }
}

/// Builds `g = e^{2u}g₀` with `θ = −du` and `S` the block splitting of
/// `g₀`; the Weyl connection of `(g, θ)` is the Levi-Civita connection of
/// `g₀`, so `S` is `D`-parallel. No `P` — the rescaling destroys metric
/// reducibility. `ξ = e^{−u}·(g₀)₁₁^{−1/2}·∂₁` when the plus side is one
/// 1-dimensional block.
pub fn build_rescaled_product(spec: &RescaledProductSpec) -> Result<StructurePack> {
    spec.validate()?;
    let n = spec.n();
    let chart = Chart::torus(n)?;
    let plus_dim: usize = spec.block_dims[..spec.split].iter().sum();

    let g0 = {
        let spec = spec.clone();
        MetricField::new(chart.clone(), move |xs| {
            let n = xs.len();
            let order = xs[0].order();
            let mut m = JetMat::from_fn(n, |_, _| Jet::constant(0.0, n, order));
            let mut off = 0;
            for (b, &d) in spec.block_dims.iter().enumerate() {
                let block = spec.metrics[b].eval_jets(&xs[off..off + d]);
                for i in 0..d {
                    for j in 0..d {
                        m.set(off + i, off + j, block.get(i, j).clone());
                    }
                }
                off += d;
            }
            m
        })
    };

    let g = {
        let g0 = g0.clone();
        let u = spec.u.clone();
        MetricField::new(chart.clone(), move |xs| {
            let e2u = u.eval_jets(xs).scale(2.0).exp();
            g0.eval_jets(xs).scale_jet(&e2u)
        })
    };

    let theta = {
        let u = spec.u.clone();
        OneFormField::new(chart.clone(), move |xs| {
            let uj = u.eval_jets(xs);
            (0..xs.len())
                .map(|i| {
                    uj.partial_derivative(i)
                        .expect("Lee form needs coordinate jets of order ≥ 1")
                        .scale(-1.0)
                })
                .collect()
        })
    };

    let xi = if spec.split == 1 && spec.block_dims[0] == 1 {
        let u = spec.u.clone();
        let g0 = spec.metrics[0].clone();
        Some(VectorField::new(chart.clone(), move |xs| {
            let scale = u
                .eval_jets(xs)
                .scale(-1.0)
                .exp()
                .mul_t(&g0.eval_jets(&xs[..1]).get(0, 0).powf(-0.5));
            let mut out = vec![Jet::constant(0.0, xs.len(), scale.order()); xs.len()];
            out[0] = scale;
            out
        }))
    } else {
        None
    };

    Ok(StructurePack {
        kind: PackKind::RescaledProduct,
        label: format!(
            "rescaled_product blocks {:?} split {}",
            spec.block_dims, spec.split
        ),
        chart: chart.clone(),
        g,
        s: constant_involution(&chart, plus_dim),
        p: None,
        theta,
        xi,
        reference_metric: Some(g0),
    })
}

/// Unit-sphere embedding `σ(φ)` and its angular Jacobian `∂σ/∂φ`, built as
/// closed-form products of sines and cosines so no jet order is lost.
fn sphere_embedding(angles: &[Jet]) -> (Vec<Jet>, Vec<Vec<Jet>>) {
    let m = angles.len();
    let n = m + 1;
    let (dim, order) = (angles[0].dim(), angles[0].order());
    let sin: Vec<Jet> = angles.iter().map(Jet::sin).collect();
    let cos: Vec<Jet> = angles.iter().map(Jet::cos).collect();

    // product of sin φᵢ for i < upto, with the j-th factor replaced by cos φⱼ
    let sin_prod = |upto: usize, swap: Option<usize>| -> Jet {
        let mut acc = Jet::constant(1.0, dim, order);
        for i in 0..upto {
            let factor = if Some(i) == swap { &cos[i] } else { &sin[i] };
            acc = acc.mul_t(factor);
        }
        acc
    };

    let mut sigma = Vec::with_capacity(n);
    for a in 0..n {
        if a < m {
            sigma.push(sin_prod(a, None).mul_t(&cos[a]));
        } else {
            sigma.push(sin_prod(m, None));
        }
    }

    let mut jac = vec![vec![Jet::constant(0.0, dim, order); m]; n];
    for a in 0..n {
        for j in 0..m {
            if a < m {
                if j > a {
                    continue;
                }
                jac[a][j] = if j == a {
                    sin_prod(a, None).mul_t(&sin[a]).scale(-1.0)
                } else {
                    sin_prod(a, Some(j)).mul_t(&cos[a])
                };
            } else {
                jac[a][j] = sin_prod(m, Some(j));
            }
        }
    }
    (sigma, jac)
}

/// The chart Jacobian of `Φ(t,φ) = eᵗ·σ(φ)`.
fn cone_jacobian(xs: &[Jet]) -> JetMat {
    let n = xs.len();
    let et = xs[0].exp();
    let (sigma, jac) = sphere_embedding(&xs[1..]);
    JetMat::from_fn(n, |a, col| {
        if col == 0 {
            et.mul_t(&sigma[a])
        } else {
            et.mul_t(&jac[a][col - 1])
        }
    })
}

/// Builds the flat-cone pack for `n ∈ {3,4}`: `g = dt² + g_S` with its
/// product splitting `P`, Lee form `θ = dt` (whose Weyl connection is the
/// Levi-Civita connection of the flat metric `e^{2t}g`), and `S` the
/// pullback of the Cartesian splitting `ℝᵏ ⊕ ℝ^{n−k}`. The pack exposes `ξ`
/// when `k = 1` or `k = n−1`, and carries the flat reference metric.
pub fn build_flat_cone(n: usize, cartesian_split: usize) -> Result<StructurePack> {
    if !(n == 3 || n == 4) {
        return Err(Error::InvalidBuilder(format!(
            "flat cone supports n ∈ {{3,4}}, got {n}"
        )));
    }
    let k = cartesian_split;
    if k == 0 || k >= n {
        return Err(Error::InvalidBuilder(format!(
            "cartesian split {k} must satisfy 1 ≤ k < {n}"
        )));
    }
    let mut bounds = vec![(0.1, 0.9)];
    let mut periodic = vec![false];
    for j in 0..n - 1 {
        let hi = if j == n - 2 {
            2.0 * std::f64::consts::PI - 0.35
        } else {
            std::f64::consts::PI - 0.35
        };
        bounds.push((0.35, hi));
        periodic.push(false);
    }
    let chart = Chart::new(bounds, periodic)?;

    // g = dt² + g_S with g_S = (∂σ/∂φ)ᵀ(∂σ/∂φ): exactly block diagonal.
    let g = MetricField::new(chart.clone(), move |xs| {
        let n = xs.len();
        let order = xs[0].order();
        let (_, jac) = sphere_embedding(&xs[1..]);
        JetMat::from_fn(n, |i, j| {
            if i == 0 && j == 0 {
                Jet::constant(1.0, n, order)
            } else if i == 0 || j == 0 {
                Jet::constant(0.0, n, order)
            } else {
                let mut acc = jac[0][i - 1].mul_t(&jac[0][j - 1]);
                for a in 1..n {
                    acc = acc.add_t(&jac[a][i - 1].mul_t(&jac[a][j - 1]));
                }
                acc
            }
        })
    });

    let g_inner = g.clone();
    let flat = MetricField::new(chart.clone(), move |xs| {
        let e2t = xs[0].scale(2.0).exp();
        g_inner.eval_jets(xs).scale_jet(&e2t)
    });

    let s_cart = DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i < k {
            1.0
        } else {
            -1.0
        }
    });
    let s = {
        let s_cart = s_cart.clone();
        EndomorphismField::new(chart.clone(), move |xs| {
            let jphi = cone_jacobian(xs);
            let s_jet = JetMat::from_constant(&s_cart, xs.len(), xs[0].order());
            jphi.inverse().mul(&s_jet).mul(&jphi)
        })
    };

    let theta = OneFormField::new(chart.clone(), move |xs| {
        let n = xs.len();
        let order = xs[0].order();
        let mut out = vec![Jet::constant(0.0, n, order); n];
        out[0] = Jet::constant(1.0, n, order);
        out
    });

    // ξ spans the 1-dimensional Cartesian factor when one exists.
    let xi_axis = if k == 1 {
        Some(0usize)
    } else if k == n - 1 {
        Some(n - 1)
    } else {
        None
    };
    let xi = xi_axis.map(|axis| {
        let g = g.clone();
        VectorField::new(chart.clone(), move |xs| {
            let n = xs.len();
            let jphi_inv = cone_jacobian(xs).inverse();
            let v: Vec<Jet> = (0..n).map(|i| jphi_inv.get(i, axis).clone()).collect();
            let gm = g.eval_jets(xs);
            let gv = gm.mul_vec(&v);
            let mut norm_sq = v[0].mul_t(&gv[0]);
            for i in 1..n {
                norm_sq = norm_sq.add_t(&v[i].mul_t(&gv[i]));
            }
            let inv_norm = norm_sq.powf(-0.5);
            v.iter().map(|c| c.mul_t(&inv_norm)).collect()
        })
    });

    Ok(StructurePack {
        kind: PackKind::FlatCone,
        label: format!("flat_cone n {n} split {k}"),
        chart: chart.clone(),
        g,
        s,
        p: Some(constant_involution(&chart, 1)),
        theta,
        xi,
        reference_metric: Some(flat),
    })
}
