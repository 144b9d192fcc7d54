//! Pointwise metric linear algebra: musical isomorphisms, the symmetric
//! `X⊙Y` and skew `X∧Y` endomorphism constructions, outer products, and the
//! deterministic Gram–Schmidt orthonormal frame.
//!
//! Conventions (locked by regression tests):
//! * `(X⊙Y)(Z) = ⟨X,Z⟩Y + ⟨Y,Z⟩X`
//! * `(A∧B)(Z) = ⟨A,Z⟩B − ⟨B,Z⟩A`
//! * `(u⊗v)(Z) = ⟨u,Z⟩v`
//!
//! A skew endomorphism `A` is identified with the 2-form `ω(X,Y) = ⟨AX,Y⟩`;
//! under this identification the endomorphism `A∧B` corresponds to the
//! exterior product `A♭∧B♭`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::{Error, Result};

/// Lowers an index: `v ↦ g·v`.
pub fn flat(g: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    g * v
}

/// Raises an index: `ω ↦ g⁻¹·ω`, via Cholesky solve.
pub fn sharp(g: &DMatrix<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = Cholesky::new(g.clone()).ok_or_else(|| Error::MetricNotSpd { point: vec![] })?;
    Ok(chol.solve(w))
}

pub fn inner(g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * g * y)[(0, 0)]
}

/// `(X⊙Y)(Z) = ⟨X,Z⟩Y + ⟨Y,Z⟩X` as a matrix in the same frame as `g`.
pub fn odot(g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    y * (g * x).transpose() + x * (g * y).transpose()
}

/// `(A∧B)(Z) = ⟨A,Z⟩B − ⟨B,Z⟩A`, the skew counterpart of [`odot`].
pub fn wedge_endo(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    b * (g * a).transpose() - a * (g * b).transpose()
}

/// `(u⊗v)(Z) = ⟨u,Z⟩v`.
pub fn outer_endo(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    v * (g * u).transpose()
}

/// Deterministic `g`-orthonormal frame: classical Gram–Schmidt applied to
/// the coordinate frame. Columns are the frame vectors; `frameᵀ·g·frame = I`.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for f in &cols {
            let c = inner(g, &v, f);
            v -= f * c;
        }
        let nsq = inner(g, &v, &v);
        if !(nsq > 0.0) {
            return Err(Error::MetricNotSpd { point: vec![] });
        }
        cols.push(v / nsq.sqrt());
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Converts an endomorphism from coordinate components to frame components:
/// `Ã = F⁻¹ A F` with `F⁻¹ = Fᵀ g`.
pub fn endo_to_frame(g: &DMatrix<f64>, frame: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    frame.transpose() * g * a * frame
}

/// Vector coordinate components to frame components.
pub fn vector_to_frame(g: &DMatrix<f64>, frame: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    frame.transpose() * g * v
}

/// 1-form coordinate components to frame components (`ω̃ᵢ = ω(fᵢ)`).
pub fn form_to_frame(frame: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    frame.transpose() * w
}

/// Inner product on Λ²: `⟨X∧Y, Z∧W⟩ = ⟨X,Z⟩⟨Y,W⟩ − ⟨X,W⟩⟨Y,Z⟩`.
pub fn wedge_inner(
    g: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    w: &DVector<f64>,
) -> f64 {
    inner(g, x, z) * inner(g, y, w) - inner(g, x, w) * inner(g, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * (n as f64)
    }

    #[test]
    fn musical_euclidean_identity() {
        let g = DMatrix::identity(3, 3);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(flat(&g, &v), v);
        assert_eq!(sharp(&g, &v).unwrap(), v);
    }

    #[test]
    fn musical_diagonal_metric() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let w = flat(&g, &v);
        assert_eq!(w, DVector::from_vec(vec![4.0, 0.0]));
    }

    #[test]
    fn sharp_flat_roundtrip_random_spd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6usize);
            let g = random_spd(&mut rng, n);
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let back = sharp(&g, &flat(&g, &v)).unwrap();
            assert!((&back - &v).amax() <= 1e-12 * (1.0 + v.amax()));
        }
    }

    #[test]
    fn odot_euclidean_projection() {
        let g = DMatrix::identity(2, 2);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let m = odot(&g, &e1, &e1);
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(1, 1)], 0.0);
    }

    #[test]
    fn odot_trace_is_twice_inner() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6usize);
            let g = random_spd(&mut rng, n);
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let tr = odot(&g, &x, &y).trace();
            let want = 2.0 * inner(&g, &x, &y);
            assert!((tr - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn odot_orthogonal_case() {
        let g = DMatrix::identity(3, 3);
        let x = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 3.0, 0.0]);
        let out = odot(&g, &x, &y) * &x;
        // (X⊙Y)X = ‖X‖²Y for X ⊥ Y
        assert_eq!(out, &y * 4.0);
    }

    #[test]
    fn odot_outer_decomposition_exact() {
        // X⊗Y♭ + Y⊗X♭ = X⊙Y entrywise, exactly.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let g = random_spd(&mut rng, 4);
        let x = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = outer_endo(&g, &x, &y) + outer_endo(&g, &y, &x);
        assert_eq!(lhs, odot(&g, &x, &y));
    }

    #[test]
    fn wedge_of_vector_with_itself_is_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let g = random_spd(&mut rng, 3);
        let a = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        assert!(wedge_endo(&g, &a, &a).amax() == 0.0);
    }

    #[test]
    fn wedge_basis_action() {
        let g = DMatrix::identity(2, 2);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let out = wedge_endo(&g, &e1, &e2) * &e1;
        assert_eq!(out, e2);
    }

    #[test]
    fn wedge_endo_is_g_skew() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6usize);
            let g = random_spd(&mut rng, n);
            let a = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let w = wedge_endo(&g, &a, &b);
            // ⟨αX, Y⟩ = −⟨X, αY⟩ ⟺ gα skew
            let m = &g * &w;
            assert!((&m + m.transpose()).amax() <= 1e-13 * (1.0 + m.amax()));
        }
    }

    #[test]
    fn frame_euclidean_and_diagonal() {
        let f = orthonormal_frame(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f, DMatrix::identity(3, 3));
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let f = orthonormal_frame(&g).unwrap();
        assert!((f[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((f[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(f[(1, 0)], 0.0);
    }

    #[test]
    fn frame_orthonormalizes_random_spd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let n = rng.gen_range(2..=8usize);
            let g = random_spd(&mut rng, n);
            let f = orthonormal_frame(&g).unwrap();
            let gram = f.transpose() * &g * &f;
            assert!((&gram - DMatrix::identity(n, n)).amax() <= 1e-12);
        }
    }

    #[test]
    fn wedge_basis_inner_product_on_frame() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let n = 4;
        let g = random_spd(&mut rng, n);
        let f = orthonormal_frame(&g).unwrap();
        let col = |i: usize| DVector::from_column_slice(f.column(i).as_slice());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let got = wedge_inner(&g, &col(i), &col(j), &col(k), &col(l));
                        let want = (if i == k && j == l { 1.0 } else { 0.0 })
                            - (if i == l && j == k { 1.0 } else { 0.0 });
                        assert!((got - want).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
