//! Riemann and Ricci tensors, the curvature action on endomorphisms, and
//! the `F·G` operator algebra on Λ²(TM).
//!
//! Sign conventions, locked by the round-sphere oracle below:
//! `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}` and
//! `Ric(X,Y) = Σᵢ ⟨R(eᵢ,X)Y, eᵢ⟩` over an orthonormal frame, so that the
//! unit sphere has `Ric = (n−1)g`. The Λ² pairing is
//! `⟨R(X∧Y), Z∧W⟩ = ⟨R_{X,Y}Z, W⟩`; under it the curvature operator of the
//! unit sphere is `−Id` and `tr_Λ²(R) = −½·scal`.
//!
//! Λ² operators are always expressed in the orthonormal frame, never the
//! coordinate frame, so the wedge basis `{fᵢ∧fⱼ}_{i<j}` is orthonormal.

use nalgebra::{DMatrix, DVector};

use crate::connection::PointCtx;
use crate::geometry::increasing_tuples;

/// Riemann tensor components `R^l_{ijk}` in the coordinate frame
/// (`R(∂ᵢ,∂ⱼ)∂ₖ = R^l_{ijk} ∂_l`).
pub struct RiemannAtPoint {
    n: usize,
    point: Vec<f64>,
    r: Vec<f64>, // ((i·n + j)·n + k)·n + l
}

impl RiemannAtPoint {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// `R^l_{ijk}`.
    pub fn comp(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.r[((i * self.n + j) * self.n + k) * self.n + l]
    }

    /// The endomorphism `R(X,Y)` in coordinates.
    pub fn endo(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let c = x[i] * y[j];
                if c == 0.0 {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        m[(l, k)] += c * self.comp(l, i, j, k);
                    }
                }
            }
        }
        m
    }

    pub fn amax(&self) -> f64 {
        self.r.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// `Rˡᵢⱼₖ = ∂ᵢΓˡⱼₖ − ∂ⱼΓˡᵢₖ + ΓᵐⱼₖΓˡᵢₘ − ΓᵐᵢₖΓˡⱼₘ` from order-2 Christoffel
/// jets; requires a context built at order 3.
pub fn riemann(ctx: &PointCtx) -> RiemannAtPoint {
    let n = ctx.n;
    let mut dgamma = vec![0.0; n * n * n * n]; // ∂_a Γ^l_{jk}: ((a n + l) n + j) n + k
    for a in 0..n {
        for l in 0..n {
            for j in 0..n {
                for k in 0..n {
                    dgamma[((a * n + l) * n + j) * n + k] = ctx
                        .chris
                        .jet(l, j, k)
                        .partial_derivative(a)
                        .expect("christoffel jets carry order ≥ 1")
                        .value();
                }
            }
        }
    }
    let gamma = |l: usize, i: usize, j: usize| ctx.chris.value(l, i, j);
    let mut r = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = dgamma[((i * n + l) * n + j) * n + k]
                        - dgamma[((j * n + l) * n + i) * n + k];
                    for m in 0..n {
                        acc += gamma(m, j, k) * gamma(l, i, m) - gamma(m, i, k) * gamma(l, j, m);
                    }
                    r[((i * n + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    RiemannAtPoint {
        n,
        point: ctx.point.clone(),
        r,
    }
}

/// Fully lowered curvature in the orthonormal frame:
/// `get(a,b,c,d) = ⟨R(f_a,f_b)f_c, f_d⟩`.
pub struct RiemannFrame {
    n: usize,
    comps: Vec<f64>,
}

impl RiemannFrame {
    pub fn new(riem: &RiemannAtPoint, ctx: &PointCtx) -> RiemannFrame {
        let n = riem.n;
        let mut comps = vec![0.0; n * n * n * n];
        let col = |i: usize| DVector::from_column_slice(ctx.frame.column(i).as_slice());
        for a in 0..n {
            for b in 0..n {
                let endo = &ctx.frame_inv * riem.endo(&col(a), &col(b)) * &ctx.frame;
                for c in 0..n {
                    for d in 0..n {
                        comps[((a * n + b) * n + c) * n + d] = endo[(d, c)];
                    }
                }
            }
        }
        RiemannFrame { n, comps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.comps[((a * self.n + b) * self.n + c) * self.n + d]
    }

    /// Max residual of the first Bianchi identity over all index tuples.
    pub fn first_bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let cyc =
                            self.get(a, b, c, d) + self.get(b, c, a, d) + self.get(c, a, b, d);
                        worst = worst.max(cyc.abs());
                    }
                }
            }
        }
        worst
    }

    /// Max deviation from pair symmetry `⟨R(X,Y)Z,W⟩ = ⟨R(Z,W)X,Y⟩`.
    pub fn pair_symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        worst = worst.max((self.get(a, b, c, d) - self.get(c, d, a, b)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Ricci curvature as a symmetric endomorphism; `frame_mat` is its matrix in
/// the orthonormal frame, `coord_endo` in coordinates.
pub struct RicciAtPoint {
    pub frame_mat: DMatrix<f64>,
    pub coord_endo: DMatrix<f64>,
}

impl RicciAtPoint {
    pub fn scal(&self) -> f64 {
        self.frame_mat.trace()
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.frame_mat - self.frame_mat.transpose()).amax()
    }
}

/// `Ric(X,Y) = Σᵢ ⟨R(fᵢ,X)Y, fᵢ⟩` over the orthonormal frame.
pub fn ricci(rf: &RiemannFrame, ctx: &PointCtx) -> RicciAtPoint {
    let n = rf.n;
    let frame_mat = DMatrix::from_fn(n, n, |a, b| {
        let mut acc = 0.0;
        for c in 0..n {
            acc += rf.get(c, a, b, c);
        }
        acc
    });
    let coord_endo = &ctx.frame * &frame_mat * &ctx.frame_inv;
    RicciAtPoint {
        frame_mat,
        coord_endo,
    }
}

/// The derivation action of curvature on an endomorphism value:
/// `(R_{X,Y}A)(Z) = R(X,Y)(AZ) − A(R(X,Y)Z)`.
pub fn riemann_on_endo(
    riem: &RiemannAtPoint,
    x: &DVector<f64>,
    y: &DVector<f64>,
    a: &DMatrix<f64>,
) -> DMatrix<f64> {
    let r = riem.endo(x, y);
    &r * a - a * r
}

/// A linear map on the `C(n,2)`-dimensional wedge space, expressed in the
/// orthonormal wedge basis `{fᵢ∧fⱼ}_{i<j}`.
#[derive(Clone, Debug)]
pub struct Lambda2Map {
    n: usize,
    m: DMatrix<f64>,
}

impl Lambda2Map {
    pub fn from_matrix(n: usize, m: DMatrix<f64>) -> Lambda2Map {
        debug_assert_eq!(m.nrows(), n * (n - 1) / 2);
        Lambda2Map { n, m }
    }

    pub fn identity(n: usize) -> Lambda2Map {
        let d = n * (n - 1) / 2;
        Lambda2Map {
            n,
            m: DMatrix::identity(d, d),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn compose(&self, other: &Lambda2Map) -> Lambda2Map {
        assert_eq!(self.n, other.n, "Λ² operators live on different frames");
        Lambda2Map {
            n: self.n,
            m: &self.m * &other.m,
        }
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn add(&self, other: &Lambda2Map) -> Lambda2Map {
        Lambda2Map {
            n: self.n,
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Lambda2Map) -> Lambda2Map {
        Lambda2Map {
            n: self.n,
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, k: f64) -> Lambda2Map {
        Lambda2Map {
            n: self.n,
            m: &self.m * k,
        }
    }

    pub fn amax(&self) -> f64 {
        self.m.amax()
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.m - self.m.transpose()).amax()
    }
}

/// `(F·G)(X∧Y) = ½(FX∧GY + GX∧FY)` for endomorphisms expressed in the
/// orthonormal frame.
pub fn cdot(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Lambda2Map {
    let n = f.nrows();
    let pairs = increasing_tuples(n, 2);
    let d = pairs.len();
    let mut m = DMatrix::zeros(d, d);
    for (col, ij) in pairs.iter().enumerate() {
        let (i, j) = (ij[0], ij[1]);
        for (row, kl) in pairs.iter().enumerate() {
            let (k, l) = (kl[0], kl[1]);
            // grouped so that swapping f and g gives bit-identical results
            let plus = f[(k, i)] * g[(l, j)] + g[(k, i)] * f[(l, j)];
            let minus = f[(l, i)] * g[(k, j)] + g[(l, i)] * f[(k, j)];
            m[(row, col)] = 0.5 * (plus - minus);
        }
    }
    Lambda2Map::from_matrix(n, m)
}

/// The curvature operator on Λ²: entries `⟨R(fᵢ∧fⱼ), fₖ∧fₗ⟩ = ⟨R(fᵢ,fⱼ)fₖ, fₗ⟩`.
pub fn riemann_as_lambda2(rf: &RiemannFrame) -> Lambda2Map {
    let n = rf.n;
    let pairs = increasing_tuples(n, 2);
    let d = pairs.len();
    let mut m = DMatrix::zeros(d, d);
    for (col, ij) in pairs.iter().enumerate() {
        for (row, kl) in pairs.iter().enumerate() {
            m[(row, col)] = rf.get(ij[0], ij[1], kl[0], kl[1]);
        }
    }
    Lambda2Map::from_matrix(n, m)
}
