//! Pointwise linear algebra of orthogonal involution pairs: seeded random
//! generation, the trace-based `A±` coefficients, and the independent
//! eigenframe route used to cross-check them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A pair of orthogonal symmetric involutions on ℝⁿ (no chart attached).
#[derive(Clone, Debug)]
pub struct InvolutionPair {
    pub n: usize,
    pub s: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

/// Haar-like random orthogonal matrix: QR of a Gaussian matrix with the
/// R-diagonal signs fixed, deterministic per generator state.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        // Box–Muller from two uniforms keeps us off rand_distr
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// `Q · diag(I_rank, −I) · Qᵀ`.
pub fn involution_from_basis(q: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let n = q.nrows();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i < rank {
            1.0
        } else {
            -1.0
        }
    });
    q * d * q.transpose()
}

/// Seeded random pair of involutions with prescribed `+1`-eigenspace ranks.
pub fn random_involution_pair(
    n: usize,
    rank_s: usize,
    rank_p: usize,
    seed: u64,
) -> Result<InvolutionPair> {
    if rank_s == 0 || rank_s >= n {
        return Err(Error::InvalidRank { rank: rank_s, dim: n });
    }
    if rank_p == 0 || rank_p >= n {
        return Err(Error::InvalidRank { rank: rank_p, dim: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q1 = random_orthogonal(&mut rng, n);
    let q2 = random_orthogonal(&mut rng, n);
    Ok(InvolutionPair {
        n,
        s: involution_from_basis(&q1, rank_s),
        p: involution_from_basis(&q2, rank_p),
    })
}

/// The two scalar coefficients from their trace definition:
/// `A± = n² + (tr S)² − (tr P)² − (tr SP)² + tr(SPSP) − n ∓ 2n·tr S ± 2·tr P·tr SP`.
pub fn a_plus_minus(s: &DMatrix<f64>, p: &DMatrix<f64>) -> (f64, f64) {
    let n = s.nrows() as f64;
    let tr_s = s.trace();
    let tr_p = p.trace();
    let sp = s * p;
    let tr_sp = sp.trace();
    let tr_spsp = (&sp * &sp).trace();
    let base = n * n + tr_s * tr_s - tr_p * tr_p - tr_sp * tr_sp + tr_spsp - n;
    let a_plus = base - 2.0 * n * tr_s + 2.0 * tr_p * tr_sp;
    let a_minus = base + 2.0 * n * tr_s - 2.0 * tr_p * tr_sp;
    (a_plus, a_minus)
}

/// Orthonormal basis of `E₊(S)`: pivoted Gram–Schmidt on the columns of the
/// projector `(I+S)/2`, drop tolerance `1e−10`.
pub fn eigenbasis_plus(s: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let n = s.nrows();
    let proj = (DMatrix::identity(n, n) + s) * 0.5;
    let mut cols: Vec<DVector<f64>> = (0..n)
        .map(|j| DVector::from_column_slice(proj.column(j).as_slice()))
        .collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    loop {
        let (best, norm) = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n ≥ 1");
        if norm <= 1e-10 {
            break;
        }
        let v = &cols[best] / norm;
        for c in cols.iter_mut() {
            let proj = v.dot(c);
            *c -= &v * proj;
        }
        basis.push(v);
    }
    let expected = (n as f64 + s.trace()) / 2.0;
    if (basis.len() as f64 - expected).abs() > 0.25 {
        return Err(Error::DefectiveEigenbasis(format!(
            "rank from Gram–Schmidt {} vs trace prediction {expected:.3}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// `A₋ = 4(r² − r + Σ_{i≠j}(⟨Pξᵢ,ξⱼ⟩² − ⟨Pξᵢ,ξᵢ⟩⟨Pξⱼ,ξⱼ⟩))` over an
/// orthonormal basis `{ξᵢ}` of `E₊(S)`. Independent of the trace route.
pub fn a_minus_via_frame(s: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    let basis = eigenbasis_plus(s)?;
    let r = basis.len();
    let pb: Vec<DVector<f64>> = basis.iter().map(|v| p * v).collect();
    let mut sum = 0.0;
    for i in 0..r {
        for j in 0..r {
            if i == j {
                continue;
            }
            let off = pb[i].dot(&basis[j]);
            let di = pb[i].dot(&basis[i]);
            let dj = pb[j].dot(&basis[j]);
            sum += off * off - di * dj;
        }
    }
    Ok(4.0 * ((r * r - r) as f64 + sum))
}

/// The dual formula over a basis of `E₋(S)`; equals replacing `S` by `−S`.
pub fn a_plus_via_frame(s: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    a_minus_via_frame(&(-s), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_reproducible_and_involutive() {
        let a = random_involution_pair(5, 2, 3, 99).unwrap();
        let b = random_involution_pair(5, 2, 3, 99).unwrap();
        assert_eq!(a.s, b.s);
        assert_eq!(a.p, b.p);
        let id = DMatrix::identity(5, 5);
        assert!((&a.s * &a.s - &id).amax() <= 1e-12);
        assert!((&a.p * &a.p - &id).amax() <= 1e-12);
        assert!((&a.s - a.s.transpose()).amax() <= 1e-13);
    }

    #[test]
    fn full_rank_rejected() {
        assert!(matches!(
            random_involution_pair(4, 4, 2, 1),
            Err(Error::InvalidRank { rank: 4, dim: 4 })
        ));
        assert!(matches!(
            random_involution_pair(4, 1, 0, 1),
            Err(Error::InvalidRank { rank: 0, dim: 4 })
        ));
    }

    #[test]
    fn s_equals_p_gives_zero_a_minus() {
        for (n, r) in [(4usize, 2usize), (5, 3), (6, 2)] {
            let pair = random_involution_pair(n, r, r, 7 + n as u64).unwrap();
            let (_, a_minus) = a_plus_minus(&pair.s, &pair.s);
            assert!(a_minus.abs() <= 1e-9, "A₋ = {a_minus} for S = P");
            let frame = a_minus_via_frame(&pair.s, &pair.s).unwrap();
            assert!(frame.abs() <= 1e-9);
        }
    }

    #[test]
    fn rank_one_forces_a_minus_zero() {
        for n in 3..=8 {
            for rank_p in 1..n {
                let pair = random_involution_pair(n, 1, rank_p, 1000 + (n * rank_p) as u64).unwrap();
                let frame = a_minus_via_frame(&pair.s, &pair.p).unwrap();
                assert_eq!(frame, 0.0, "frame formula with empty sum is exact");
                let (_, a_minus) = a_plus_minus(&pair.s, &pair.p);
                assert!(a_minus.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn trace_and_frame_routes_agree() {
        let mut seed = 0u64;
        for n in 3..=8 {
            for rank_s in 1..n {
                for rank_p in 1..n {
                    seed += 1;
                    let pair = random_involution_pair(n, rank_s, rank_p, seed).unwrap();
                    let (ap, am) = a_plus_minus(&pair.s, &pair.p);
                    let fp = a_plus_via_frame(&pair.s, &pair.p).unwrap();
                    let fm = a_minus_via_frame(&pair.s, &pair.p).unwrap();
                    let scale = 1.0f64.max(ap.abs()).max(am.abs());
                    assert!((ap - fp).abs() <= 1e-8 * scale, "A₊ {ap} vs {fp}");
                    assert!((am - fm).abs() <= 1e-8 * scale, "A₋ {am} vs {fm}");
                    assert!(ap >= -1e-9 && am >= -1e-9, "nonnegativity violated");
                }
            }
        }
    }

    #[test]
    fn inclusion_forces_zero() {
        // Same eigenframe, rank_P ≥ rank_S ⟹ E₊(S) ⊆ E₊(P) ⟹ A₋ = 0.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let q = random_orthogonal(&mut rng, n);
        let s = involution_from_basis(&q, 2);
        let p = involution_from_basis(&q, 4);
        let (_, am) = a_plus_minus(&s, &p);
        assert!(am.abs() <= 1e-10);
        // and E₋(S) ⊆ E₋(P) for rank_P ≤ rank_S ⟹ A₊ = 0
        let p2 = involution_from_basis(&q, 2);
        let s2 = involution_from_basis(&q, 4);
        let (ap, _) = a_plus_minus(&s2, &p2);
        assert!(ap.abs() <= 1e-10);
    }

    #[test]
    fn negating_s_swaps_a_plus_and_a_minus() {
        let pair = random_involution_pair(6, 2, 3, 44).unwrap();
        let (ap, am) = a_plus_minus(&pair.s, &pair.p);
        let (ap_f, am_f) = a_plus_minus(&(-&pair.s), &pair.p);
        assert!((ap - am_f).abs() <= 1e-10 * (1.0 + ap.abs()));
        assert!((am - ap_f).abs() <= 1e-10 * (1.0 + am.abs()));
    }
}
