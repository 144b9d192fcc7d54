//! Levi-Civita connection via Christoffel symbols, the Weyl connection
//! `D_XY = ∇_XY + θ(Y)X + θ(X)Y − ⟨X,Y⟩θ♯`, covariant derivatives of every
//! field type, codifferentials, and Lee-form recovery from `Dg`.
//!
//! Christoffel entries are carried as jets of order 2 (from order-3 metric
//! jets) so that curvature needs no finite differencing: all residual floors
//! stay near machine precision.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::geometry::{orthonormal_frame, MetricField};
use crate::jets::matrix::{jvec_value, JetMat};
use crate::jets::{coordinate_jets, Jet};
use crate::{Error, Result};

/// Christoffel symbols `Γ^k_{ij}` at a point, carried as jets so that `∂Γ`
/// is available for curvature. Symmetric in the lower pair (torsion-free).
pub struct ChristoffelAtPoint {
    n: usize,
    point: Vec<f64>,
    gamma: Vec<Jet>, // k·n² + i·n + j
}

impl ChristoffelAtPoint {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn jet(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[k * self.n * self.n + i * self.n + j]
    }

    pub fn value(&self, k: usize, i: usize, j: usize) -> f64 {
        self.jet(k, i, j).value()
    }

    /// The connection matrix of the direction `∂ᵢ`: `(Γᵢ)^k_m = Γ^k_{im}`.
    pub fn matrix_jets(&self, i: usize) -> JetMat {
        JetMat::from_fn(self.n, |k, m| self.jet(k, i, m).clone())
    }

    pub fn matrix_value(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |k, m| self.value(k, i, m))
    }
}

/// Everything the tensor calculus needs at one evaluation point: metric and
/// inverse-metric jets, Christoffel jets, and the deterministic orthonormal
/// frame. Construction is pure; contexts can be built concurrently.
pub struct PointCtx {
    pub n: usize,
    pub point: Vec<f64>,
    pub order: usize,
    pub g_jets: JetMat,
    pub g_inv_jets: JetMat,
    pub chris: ChristoffelAtPoint,
    pub g_val: DMatrix<f64>,
    pub g_inv_val: DMatrix<f64>,
    pub frame: DMatrix<f64>,
    pub frame_inv: DMatrix<f64>,
}

impl PointCtx {
    pub fn new(g: &MetricField, p: &[f64], order: usize) -> Result<PointCtx> {
        let n = g.chart().dim();
        let xs = coordinate_jets(p, order);
        let g_jets = g.eval_jets(&xs);
        let g_val = g_jets.value();
        if Cholesky::new(g_val.clone()).is_none() {
            return Err(Error::MetricNotSpd { point: p.to_vec() });
        }
        let g_inv_jets = g_jets.inverse();
        let g_inv_val = g_inv_jets.value();

        // Γ^k_{ij} = ½ g^{kl} (∂ᵢ g_{jl} + ∂ⱼ g_{il} − ∂_l g_{ij})
        let dg: Vec<JetMat> = (0..n)
            .map(|a| {
                JetMat::from_fn(n, |i, j| {
                    g_jets
                        .get(i, j)
                        .partial_derivative(a)
                        .expect("metric jets need order ≥ 1 for Christoffel symbols")
                })
            })
            .collect();
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc: Option<Jet> = None;
                    for l in 0..n {
                        let sym = dg[i]
                            .get(j, l)
                            .add_t(dg[j].get(i, l))
                            .sub_t(dg[l].get(i, j));
                        let term = g_inv_jets.get(k, l).mul_t(&sym);
                        acc = Some(match acc {
                            None => term,
                            Some(s) => s.add_t(&term),
                        });
                    }
                    gamma.push(acc.expect("n ≥ 1").scale(0.5));
                }
            }
        }
        let chris = ChristoffelAtPoint {
            n,
            point: p.to_vec(),
            gamma,
        };
        let frame = orthonormal_frame(&g_val)?;
        let frame_inv = frame.transpose() * &g_val;
        Ok(PointCtx {
            n,
            point: p.to_vec(),
            order,
            g_jets,
            g_inv_jets,
            chris,
            g_val,
            g_inv_val,
            frame,
            frame_inv,
        })
    }

    /// Replaces the orthonormal frame by `frame·q` for an orthogonal `q`;
    /// used to confirm frame-independence of residuals.
    pub fn with_rotated_frame(mut self, q: &DMatrix<f64>) -> PointCtx {
        self.frame = &self.frame * q;
        self.frame_inv = self.frame.transpose() * &self.g_val;
        self
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.g_val * y)[(0, 0)]
    }

    pub fn sharp_val(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.g_inv_val * w
    }

    pub fn sharp_jets(&self, w: &[Jet]) -> Vec<Jet> {
        self.g_inv_jets.mul_vec(w)
    }

    pub fn flat_jets(&self, v: &[Jet]) -> Vec<Jet> {
        self.g_jets.mul_vec(v)
    }

    // ---- covariant derivatives on jet components -------------------------

    /// `(∇ᵢ V)^k` as jets, one order below the input.
    pub fn covd_vector_jets(&self, v: &[Jet]) -> Vec<Vec<Jet>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|k| {
                        let mut acc = v[k].partial_derivative(i).expect("covd order");
                        for m in 0..self.n {
                            acc = acc.add_t(&self.chris.jet(k, i, m).mul_t(&v[m]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `(∇ᵢ ω)_j` as jets.
    pub fn covd_oneform_jets(&self, w: &[Jet]) -> Vec<Vec<Jet>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let mut acc = w[j].partial_derivative(i).expect("covd order");
                        for m in 0..self.n {
                            acc = acc.sub_t(&self.chris.jet(m, i, j).mul_t(&w[m]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `∇ᵢ A = ∂ᵢA + ΓᵢA − AΓᵢ` for an endomorphism, per direction.
    pub fn covd_endo_jets(&self, a: &JetMat) -> Vec<JetMat> {
        (0..self.n)
            .map(|i| {
                let da = JetMat::from_fn(self.n, |k, j| {
                    a.get(k, j).partial_derivative(i).expect("covd order")
                });
                let gi = self.chris.matrix_jets(i);
                da.add(&gi.mul(a)).sub(&a.mul(&gi))
            })
            .collect()
    }

    /// `∇ᵢ b = ∂ᵢb − Γᵢᵀb − bΓᵢ` for a (0,2) tensor, per direction.
    pub fn covd_bilinear_jets(&self, b: &JetMat) -> Vec<JetMat> {
        (0..self.n)
            .map(|i| {
                let db = JetMat::from_fn(self.n, |j, k| {
                    b.get(j, k).partial_derivative(i).expect("covd order")
                });
                let gi = self.chris.matrix_jets(i);
                db.sub(&gi.transpose().mul(b)).sub(&b.mul(&gi))
            })
            .collect()
    }

    // ---- value-level contractions ----------------------------------------

    pub fn covd_vector(&self, v: &[Jet], x: &DVector<f64>) -> DVector<f64> {
        let per = self.covd_vector_jets(v);
        let mut out = DVector::zeros(self.n);
        for i in 0..self.n {
            out += jvec_value(&per[i]) * x[i];
        }
        out
    }

    pub fn covd_oneform(&self, w: &[Jet], x: &DVector<f64>) -> DVector<f64> {
        let per = self.covd_oneform_jets(w);
        let mut out = DVector::zeros(self.n);
        for i in 0..self.n {
            out += jvec_value(&per[i]) * x[i];
        }
        out
    }

    pub fn covd_endo(&self, a: &JetMat, x: &DVector<f64>) -> DMatrix<f64> {
        let per = self.covd_endo_jets(a);
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            out += per[i].value() * x[i];
        }
        out
    }

    pub fn covd_metric(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let per = self.covd_bilinear_jets(&self.g_jets);
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            out += per[i].value() * x[i];
        }
        out
    }

    /// `div V = Σᵢ (∂ᵢVⁱ + ΓⁱᵢₘVᵐ)`; `δ(V♭) = −div V`.
    pub fn divergence(&self, v: &[Jet]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += v[i].partial_derivative(i).expect("covd order").value();
            for m in 0..self.n {
                acc += self.chris.value(i, i, m) * v[m].value();
            }
        }
        acc
    }

    /// Codifferential of a 1-form: `δω = −g^{ab}(∇ₐω)_b`.
    pub fn codiff_oneform(&self, w: &[Jet]) -> f64 {
        let per = self.covd_oneform_jets(w);
        let mut acc = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                acc -= self.g_inv_val[(a, b)] * per[a][b].value();
            }
        }
        acc
    }

    /// Codifferential of a 2-form given as a full antisymmetric (0,2) jet
    /// matrix: `(δω)_c = −g^{ab}(∇ₐω)_{bc}`, a 1-form in coordinates.
    pub fn codiff_twoform(&self, w: &JetMat) -> DVector<f64> {
        let per = self.covd_bilinear_jets(w);
        DVector::from_fn(self.n, |c, _| {
            let mut acc = 0.0;
            for a in 0..self.n {
                for b in 0..self.n {
                    acc -= self.g_inv_val[(a, b)] * per[a].get(b, c).value();
                }
            }
            acc
        })
    }

    /// The Lee-form derivative `T = ∇θ` as an endomorphism in jets:
    /// `T(∂ᵢ) = (∇_{∂ᵢ}θ)♯`, i.e. `T^k_i = g^{kj}(∇ᵢθ)_j`.
    pub fn t_endo_jets(&self, theta: &[Jet]) -> JetMat {
        let grad = self.covd_oneform_jets(theta);
        let nabla = JetMat::from_fn(self.n, |i, j| grad[i][j].clone());
        self.g_inv_jets.mul(&nabla.transpose())
    }

    /// Lie bracket of two vector fields from jets: `[V,W]^k = Vⁱ∂ᵢW^k − Wⁱ∂ᵢV^k`.
    pub fn bracket(&self, v: &[Jet], w: &[Jet]) -> DVector<f64> {
        DVector::from_fn(self.n, |k, _| {
            let mut acc = 0.0;
            for i in 0..self.n {
                acc += v[i].value() * w[k].partial_derivative(i).expect("bracket").value()
                    - w[i].value() * v[k].partial_derivative(i).expect("bracket").value();
            }
            acc
        })
    }
}

/// Spec entry point: Christoffel symbols of `g` at `p`, entries valid as
/// order-2 jets.
pub fn christoffel(g: &MetricField, p: &[f64]) -> Result<ChristoffelAtPoint> {
    Ok(PointCtx::new(g, p, 3)?.chris)
}

// ---- Weyl connection --------------------------------------------------

/// `D_XY = ∇_XY + θ(Y)X + θ(X)Y − ⟨X,Y⟩θ♯` on vector-field jets.
pub fn weyl_covd_vector(
    ctx: &PointCtx,
    v: &[Jet],
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> DVector<f64> {
    let nabla = ctx.covd_vector(v, x);
    let v0 = jvec_value(v);
    let theta_sharp = ctx.sharp_val(theta);
    nabla + x * theta.dot(&v0) + &v0 * theta.dot(x) - theta_sharp * ctx.inner(x, &v0)
}

/// Weyl derivative of an endomorphism, extended by the Leibniz rule:
/// `(D_XA)(Y) = (∇_XA)(Y) + θ(AY)X − θ(Y)AX − ⟨X,AY⟩θ♯ + ⟨X,Y⟩Aθ♯`.
pub fn weyl_covd_endo(
    ctx: &PointCtx,
    a: &JetMat,
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> DMatrix<f64> {
    let nabla = ctx.covd_endo(a, x);
    let a0 = a.value();
    let theta_sharp = ctx.sharp_val(theta);
    let gx = &ctx.g_val * x;
    let ax = &a0 * x;
    let a_theta_sharp = &a0 * &theta_sharp;
    nabla + x * (theta.transpose() * &a0) - &ax * theta.transpose()
        - &theta_sharp * (a0.transpose() * &gx).transpose()
        + a_theta_sharp * gx.transpose()
}

/// `(D_Xω) = ∇_Xω − ω(X)θ − θ(X)ω + ⟨ω♯,θ♯⟩X♭` on 1-form jets.
pub fn weyl_covd_oneform(
    ctx: &PointCtx,
    w: &[Jet],
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> DVector<f64> {
    let nabla = ctx.covd_oneform(w, x);
    let w0 = jvec_value(w);
    let cross = (ctx.sharp_val(&w0)).dot(theta);
    let xflat = &ctx.g_val * x;
    nabla - theta * w0.dot(x) - &w0 * theta.dot(x) + xflat * cross
}

/// `(D_Xg)(Y,Z)` computed through the Koszul formula on constant coordinate
/// fields: `X(g(Y,Z)) − g(D_XY,Z) − g(Y,D_XZ)`. Exercises the actual Weyl
/// connection rather than the closed form `−2θ⊗g`.
pub fn weyl_dg_koszul(
    ctx: &PointCtx,
    theta: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> f64 {
    let n = ctx.n;
    // X(g(Y,Z)) for constant Y, Z: contract ∂g with X.
    let mut xgyz = 0.0;
    for i in 0..n {
        let dgi = ctx.g_jets.partial_value(i);
        xgyz += x[i] * (y.transpose() * dgi * z)[(0, 0)];
    }
    let theta_sharp = ctx.sharp_val(theta);
    let d = |a: &DVector<f64>, b: &DVector<f64>| -> DVector<f64> {
        // D_ab for constant fields: Γ(a,b) + θ(b)a + θ(a)b − ⟨a,b⟩θ♯
        let mut gab = DVector::zeros(n);
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += a[i] * b[j] * ctx.chris.value(k, i, j);
                }
            }
            gab[k] = acc;
        }
        gab + a * theta.dot(b) + b * theta.dot(a) - &theta_sharp * ctx.inner(a, b)
    };
    xgyz - ctx.inner(&d(x, y), z) - ctx.inner(y, &d(x, z))
}

/// Recovers the Lee form at a point from a `(D_Xg)(Y,Z)` evaluator via
/// `θ(X) = −(D_Xg)(Y,Y)/(2⟨Y,Y⟩)`; the result must be independent of `Y`.
pub fn lee_form_recover(
    ctx: &PointCtx,
    dg: impl Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64,
) -> Result<DVector<f64>> {
    let n = ctx.n;
    let mut theta = DVector::zeros(n);
    for i in 0..n {
        let mut x = DVector::zeros(n);
        x[i] = 1.0;
        let mut vals = Vec::new();
        for j in 0..n {
            let mut y = DVector::zeros(n);
            y[j] = 1.0;
            let gyy = ctx.inner(&y, &y);
            vals.push(-dg(&x, &y, &y) / (2.0 * gyy));
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let spread = vals
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0f64, f64::max);
        if spread > 1e-8 * (1.0 + mean.abs()) {
            return Err(Error::DefectiveEigenbasis(format!(
                "Lee form recovery is Y-dependent (spread {spread:.3e}); evaluator is not a Weyl derivative of g"
            )));
        }
        theta[i] = mean;
    }
    Ok(theta)
}

/// Public codifferential of a 1-form field (spec surface).
pub fn codifferential_oneform(
    g: &MetricField,
    w: &crate::geometry::OneFormField,
    p: &[f64],
) -> Result<f64> {
    let ctx = PointCtx::new(g, p, 2)?;
    let xs = coordinate_jets(p, 2);
    Ok(ctx.codiff_oneform(&w.eval_jets(&xs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, MetricField, OneFormField};
    use crate::jets::matrix::JetMat;
    use rand::{Rng, SeedableRng};

    fn euclidean(n: usize) -> MetricField {
        let chart = Chart::torus(n).unwrap();
        MetricField::new(chart, move |xs| {
            JetMat::identity(xs.len(), xs.len(), xs[0].order())
        })
    }

    /// g = e^{2x}(dx² + dy²) on a box chart.
    fn conformal_plane() -> MetricField {
        let chart = Chart::new(vec![(-1.0, 1.0), (-1.0, 1.0)], vec![false, false]).unwrap();
        MetricField::new(chart, |xs| {
            let w = xs[0].scale(2.0).exp();
            JetMat::from_fn(2, |i, j| {
                if i == j {
                    w.clone()
                } else {
                    Jet::constant(0.0, 2, xs[0].order())
                }
            })
        })
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let g = euclidean(3);
        let chris = christoffel(&g, &[0.2, 1.1, 2.5]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(chris.value(k, i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn conformal_plane_christoffel_hand_values() {
        // Γˣ_xx = 1, Γˣ_yy = −1, Γʸ_xy = 1 for g = e^{2x}(dx²+dy²).
        let g = conformal_plane();
        let chris = christoffel(&g, &[0.3, -0.4]).unwrap();
        assert!((chris.value(0, 0, 0) - 1.0).abs() < 1e-12);
        assert!((chris.value(0, 1, 1) + 1.0).abs() < 1e-12);
        assert!((chris.value(1, 0, 1) - 1.0).abs() < 1e-12);
        assert!((chris.value(1, 1, 0) - 1.0).abs() < 1e-12);
        assert!(chris.value(1, 0, 0).abs() < 1e-13);
        assert!(chris.value(1, 1, 1).abs() < 1e-13);
    }

    fn perturbed_metric(n: usize, seed: u64) -> MetricField {
        let chart = Chart::torus(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<(usize, usize, f64, f64)> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, rng.gen_range(-0.12..0.12), rng.gen_range(0.0..6.28)))
            .collect();
        MetricField::new(chart, move |xs| {
            let n = xs.len();
            let order = xs[0].order();
            let mut m = JetMat::identity(n, n, order);
            for &(i, j, amp, phase) in &coeffs {
                let wave = xs[i].add_t(&xs[j]).add_scalar(phase).cos().scale(amp);
                m.set(i, j, m.get(i, j).add_t(&wave));
                if i != j {
                    m.set(j, i, m.get(j, i).add_t(&wave));
                }
            }
            m
        })
    }

    #[test]
    fn metric_compatibility_and_torsion_symmetry() {
        let g = perturbed_metric(3, 4);
        let chart = g.chart().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let p = chart.sample_point(&mut rng);
            let ctx = PointCtx::new(&g, &p, 3).unwrap();
            for _ in 0..5 {
                let x = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let dg = ctx.covd_metric(&x);
                assert!(dg.amax() <= 1e-11, "∇g residual {}", dg.amax());
            }
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(ctx.chris.value(k, i, j), ctx.chris.value(k, j, i));
                    }
                }
            }
        }
    }

    #[test]
    fn covd_of_constant_vector_in_euclidean_space_vanishes() {
        let g = euclidean(2);
        let ctx = PointCtx::new(&g, &[0.5, 1.0], 3).unwrap();
        let v = vec![Jet::constant(1.0, 2, 3), Jet::constant(-2.0, 2, 3)];
        let x = DVector::from_vec(vec![0.3, 0.7]);
        assert_eq!(ctx.covd_vector(&v, &x).amax(), 0.0);
    }

    #[test]
    fn covd_leibniz_rule() {
        // ∇_X(fY) = (Xf)Y + f ∇_X Y on random inputs.
        let g = perturbed_metric(3, 8);
        let chart = g.chart().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let p = chart.sample_point(&mut rng);
            let ctx = PointCtx::new(&g, &p, 3).unwrap();
            let xs = coordinate_jets(&p, 3);
            let f = xs[0].sin().mul_t(&xs[2].cos()).add_scalar(1.3);
            let y: Vec<Jet> = vec![
                xs[1].cos().scale(0.8),
                xs[0].mul_t(&xs[2]).sin(),
                xs[2].scale(0.5).exp(),
            ];
            let fy: Vec<Jet> = y.iter().map(|c| c.mul_t(&f)).collect();
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let lhs = ctx.covd_vector(&fy, &x);
            let xf: f64 = (0..3)
                .map(|i| x[i] * f.partial_derivative(i).unwrap().value())
                .sum();
            let rhs = jvec_value(&y) * xf + ctx.covd_vector(&y, &x) * f.value();
            assert!((lhs - rhs).amax() <= 1e-10);
        }
    }

    #[test]
    fn covd_matches_finite_differences() {
        // FD of the component closures plus Γ terms vs the jet covd.
        let g = perturbed_metric(2, 21);
        let chart = g.chart().clone();
        let p = chart.sample_point(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let ctx = PointCtx::new(&g, &p, 3).unwrap();
        let vf = |q: &[f64]| [q[0].sin() * q[1].cos(), (q[0] * q[1]).cos()];
        let v_jets = {
            let xs = coordinate_jets(&p, 3);
            vec![xs[0].sin().mul_t(&xs[1].cos()), xs[0].mul_t(&xs[1]).cos()]
        };
        let h = 1e-5;
        for i in 0..2 {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[i] += h;
            lo[i] -= h;
            let (vhi, vlo) = (vf(&hi), vf(&lo));
            let v0 = vf(&p);
            for k in 0..2 {
                let mut fd = (vhi[k] - vlo[k]) / (2.0 * h);
                for m in 0..2 {
                    fd += ctx.chris.value(k, i, m) * v0[m];
                }
                let mut x = DVector::zeros(2);
                x[i] = 1.0;
                let jet = ctx.covd_vector(&v_jets, &x)[k];
                assert!(
                    (jet - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "covd FD mismatch: {jet} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn weyl_with_zero_lee_form_is_levi_civita() {
        let g = perturbed_metric(3, 30);
        let chart = g.chart().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = chart.sample_point(&mut rng);
        let ctx = PointCtx::new(&g, &p, 3).unwrap();
        let xs = coordinate_jets(&p, 3);
        let v: Vec<Jet> = vec![xs[0].sin(), xs[1].cos(), xs[2].clone()];
        let x = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let zero = DVector::zeros(3);
        let d = weyl_covd_vector(&ctx, &v, &x, &zero);
        let nabla = ctx.covd_vector(&v, &x);
        assert_eq!(d, nabla);
    }

    #[test]
    fn weyl_dg_is_minus_two_theta_g_and_recovery() {
        let g = perturbed_metric(3, 14);
        let chart = g.chart().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let p = chart.sample_point(&mut rng);
            let ctx = PointCtx::new(&g, &p, 3).unwrap();
            let theta = DVector::from_fn(3, |_, _| rng.gen_range(-0.5..0.5));
            for _ in 0..5 {
                let x = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let y = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let z = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let got = weyl_dg_koszul(&ctx, &theta, &x, &y, &z);
                let want = -2.0 * theta.dot(&x) * ctx.inner(&y, &z);
                assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
            let rec =
                lee_form_recover(&ctx, |x, y, z| weyl_dg_koszul(&ctx, &theta, x, y, z)).unwrap();
            assert!((rec - &theta).amax() <= 1e-10);
        }
    }

    #[test]
    fn weyl_torsion_free_on_jet_fields() {
        let g = perturbed_metric(3, 50);
        let chart = g.chart().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = chart.sample_point(&mut rng);
            let ctx = PointCtx::new(&g, &p, 3).unwrap();
            let xs = coordinate_jets(&p, 3);
            let v: Vec<Jet> = vec![xs[1].sin(), xs[2].cos().scale(0.5), xs[0].clone()];
            let w: Vec<Jet> = vec![xs[0].cos(), xs[1].mul_t(&xs[2]).sin(), xs[1].scale(-0.3)];
            let theta = DVector::from_fn(3, |_, _| rng.gen_range(-0.5..0.5));
            let dvw = weyl_covd_vector(&ctx, &w, &jvec_value(&v), &theta);
            let dwv = weyl_covd_vector(&ctx, &v, &jvec_value(&w), &theta);
            let bracket = ctx.bracket(&v, &w);
            let torsion = dvw - dwv - bracket;
            assert!(torsion.amax() <= 1e-10, "torsion {}", torsion.amax());
        }
    }

    #[test]
    fn codifferential_examples() {
        // δ(df) = 0 for the harmonic f = xy in Euclidean 2-space.
        let g = euclidean(2);
        let chart = g.chart().clone();
        let df = OneFormField::new(chart, |xs| vec![xs[1].clone(), xs[0].clone()]);
        let val = codifferential_oneform(&g, &df, &[0.4, 0.9]).unwrap();
        assert!(val.abs() < 1e-14);

        // δθ = −tr(∇θ) on random fields
        let g = perturbed_metric(3, 61);
        let chart = g.chart().clone();
        let theta = OneFormField::new(chart.clone(), |xs| {
            vec![
                xs[1].sin().scale(0.4),
                xs[0].mul_t(&xs[2]).cos(),
                xs[0].sin().scale(-0.2),
            ]
        });
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p = chart.sample_point(&mut rng);
            let ctx = PointCtx::new(&g, &p, 3).unwrap();
            let xs = coordinate_jets(&p, 3);
            let w = theta.eval_jets(&xs);
            let delta = ctx.codiff_oneform(&w);
            let tr_t = ctx.t_endo_jets(&w).trace().value();
            assert!((delta + tr_t).abs() <= 1e-10 * (1.0 + tr_t.abs()));
        }

        // δ of a constant-coefficient 2-form in Euclidean space is 0.
        let g = euclidean(3);
        let ctx = PointCtx::new(&g, &[0.4, 0.1, 2.0], 2).unwrap();
        let w = JetMat::from_fn(3, |i, j| {
            let v = if i < j {
                1.5
            } else if i > j {
                -1.5
            } else {
                0.0
            };
            Jet::constant(v, 3, 2)
        });
        assert_eq!(ctx.codiff_twoform(&w).amax(), 0.0);
    }

    #[test]
    fn divergence_matches_codiff_of_flat() {
        let g = perturbed_metric(3, 71);
        let chart = g.chart().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let p = chart.sample_point(&mut rng);
            let ctx = PointCtx::new(&g, &p, 3).unwrap();
            let xs = coordinate_jets(&p, 3);
            let v: Vec<Jet> = vec![
                xs[1].sin().scale(0.7),
                xs[2].cos(),
                xs[0].mul_t(&xs[1]).sin(),
            ];
            let flat = ctx.flat_jets(&v);
            let lhs = ctx.codiff_oneform(&flat);
            let rhs = -ctx.divergence(&v);
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }
}
