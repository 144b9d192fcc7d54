//! Sampling verification of the `A±` theorems: nonnegativity over seeded
//! random involution pairs across all admissible rank pairs, agreement of
//! the trace and eigenframe routes, the forced zeros in rank one, exact
//! zeros for constructed eigenspace inclusions, and strictly positive
//! growth under perturbed inclusions.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::structures::{
    a_minus_via_frame, a_plus_minus, a_plus_via_frame, involution_from_basis,
    random_involution_pair, random_orthogonal,
};

use super::{ResidualAcc, ResidualReport, SuiteParams};

pub fn check_a_theorems(
    n_range: RangeInclusive<usize>,
    total_samples: usize,
    params: &SuiteParams,
) -> Vec<ResidualReport> {
    let combos: Vec<(usize, usize, usize)> = n_range
        .clone()
        .flat_map(|n| {
            (1..n).flat_map(move |rs| (1..n).map(move |rp| (n, rs, rp)))
        })
        .collect();
    let per_combo = total_samples.div_ceil(combos.len());

    let results: Vec<(ResidualAcc, ResidualAcc, ResidualAcc)> = combos
        .par_iter()
        .map(|&(n, rs, rp)| {
            let mut nonneg = ResidualAcc::default();
            let mut routes = ResidualAcc::default();
            let mut rank1 = ResidualAcc::default();
            for k in 0..per_combo {
                let seed = params.seed
                    ^ (n as u64) << 48
                    ^ (rs as u64) << 40
                    ^ (rp as u64) << 32
                    ^ k as u64;
                let pair = random_involution_pair(n, rs, rp, seed).expect("valid ranks");
                let (ap, am) = a_plus_minus(&pair.s, &pair.p);
                nonneg.add((-ap).max(-am).max(0.0), 1.0);
                let fp = a_plus_via_frame(&pair.s, &pair.p).expect("eigenbasis");
                let fm = a_minus_via_frame(&pair.s, &pair.p).expect("eigenbasis");
                let scale = 1.0f64.max(ap.abs()).max(am.abs());
                routes.add((ap - fp).abs().max((am - fm).abs()), scale);
                if rs == 1 {
                    // the frame formula has an empty sum and is exactly zero
                    rank1.add(fm.abs().max(am.abs()), 1.0);
                }
                if rs == n - 1 {
                    rank1.add(fp.abs().max(ap.abs()), 1.0);
                }
            }
            (nonneg, routes, rank1)
        })
        .collect();

    let mut nonneg = ResidualAcc::default();
    let mut routes = ResidualAcc::default();
    let mut rank1 = ResidualAcc::default();
    for (a, b, c) in results {
        nonneg = nonneg.merge(a);
        routes = routes.merge(b);
        rank1 = rank1.merge(c);
    }

    // constructed inclusions: shared eigenframe forces the exact zeros
    let mut incl = ResidualAcc::default();
    let mut rng = params.rng("a_theorems.inclusion");
    for n in n_range.clone() {
        for _ in 0..20 {
            let q = random_orthogonal(&mut rng, n);
            let rs = (n + 1) / 2;
            let rp = (rs + 1).min(n - 1);
            let s = involution_from_basis(&q, rs);
            // E₊(S) ⊆ E₊(P) ⟹ A₋ = 0
            let (_, am) = a_plus_minus(&s, &involution_from_basis(&q, rp));
            incl.add(am.abs(), 1.0);
            // E₋(S) ⊆ E₋(P) for rank_P ≤ rank_S ⟹ A₊ = 0
            if rs > 1 {
                let (ap, _) = a_plus_minus(&s, &involution_from_basis(&q, rs - 1));
                incl.add(ap.abs(), 1.0);
            }
        }
    }

    // perturbed inclusions: rotating P in a plane mixing E₊(P) ⊇ E₊(S) with
    // E₋(P) breaks the inclusion and must give strictly positive values
    // growing from zero
    let mut perturbed_ok = true;
    let mut perturbed_note = String::new();
    {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0xa5a5);
        let n = 5;
        let q = random_orthogonal(&mut rng, n);
        let (rs, rp) = (2usize, 3usize);
        let s = involution_from_basis(&q, rs);
        let p0 = involution_from_basis(&q, rp);
        let mut last = 0.0;
        for (i, eps) in [1e-3f64, 1e-2, 1e-1].iter().enumerate() {
            // plane (q₁, q₄): q₁ ∈ E₊(S) ∩ E₊(P), q₄ ∈ E₋(S) ∩ E₋(P)
            let mut rot = DMatrix::<f64>::identity(n, n);
            rot[(0, 0)] = eps.cos();
            rot[(rp, rp)] = eps.cos();
            rot[(0, rp)] = -eps.sin();
            rot[(rp, 0)] = eps.sin();
            let rot = &q * rot * q.transpose();
            let p_eps = &rot * &p0 * rot.transpose();
            let (_, am) = a_plus_minus(&s, &p_eps);
            perturbed_note.push_str(&format!("ε={eps:.0e}: A₋={am:.3e}; "));
            if am <= 0.0 || (i > 0 && am <= last) {
                perturbed_ok = false;
            }
            last = am;
        }
    }

    vec![
        nonneg.finalize("a_theorems.nonneg", 1e-9),
        routes.finalize("a_theorems.routes", 1e-8),
        rank1.finalize("a_theorems.rank1", 1e-9),
        incl.finalize("a_theorems.inclusion", 1e-10),
        ResidualReport {
            id: "a_theorems.perturbed".into(),
            points: 3,
            max_abs: 0.0,
            max_rel: 0.0,
            tol: 0.0,
            pass: perturbed_ok,
            note: Some(perturbed_note),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_theorem_sampling_passes_at_modest_size() {
        let params = SuiteParams::default();
        let reports = check_a_theorems(3..=8, 2000, &params);
        for r in &reports {
            assert!(r.pass, "{} failed: abs {} rel {}", r.id, r.max_abs, r.max_rel);
        }
    }
}
