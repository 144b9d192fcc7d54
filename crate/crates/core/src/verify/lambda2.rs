//! Residual checks for the Λ² operator algebra: the trace law
//! `tr(F·G) = ½(tr F·tr G − tr(F∘G))`, the composition law
//! `(F·G)∘(F'·G') = ½((F∘F')·(G∘G') + (G∘F')·(F∘G'))`, and its `F' = G'`
//! special case. Pure linear algebra over seeded random endomorphisms.

use nalgebra::DMatrix;
use rand::Rng;

use crate::curvature::cdot;

use super::{ResidualAcc, ResidualReport, SuiteParams};

pub fn check_lambda2_lemmas(n: usize, samples: usize, params: &SuiteParams) -> Vec<ResidualReport> {
    let mut rng = params.rng("lambda2");
    let mut trace_acc = ResidualAcc::default();
    let mut comp_acc = ResidualAcc::default();
    let mut prod_acc = ResidualAcc::default();

    // identity anchor: tr(I·I) = n(n−1)/2 exactly
    let id = DMatrix::<f64>::identity(n, n);
    let tr_ii = cdot(&id, &id).trace();
    trace_acc.add((tr_ii - (n * n - n) as f64 / 2.0).abs(), tr_ii.abs());

    let rand_mat = |rng: &mut rand_chacha::ChaCha8Rng| {
        DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    };
    for _ in 0..samples {
        let f = rand_mat(&mut rng);
        let g = rand_mat(&mut rng);
        let lhs = cdot(&f, &g).trace();
        let rhs = 0.5 * (f.trace() * g.trace() - (&f * &g).trace());
        trace_acc.add((lhs - rhs).abs(), lhs.abs().max(rhs.abs()));

        let fp = rand_mat(&mut rng);
        let gp = rand_mat(&mut rng);
        let lhs = cdot(&f, &g).compose(&cdot(&fp, &gp));
        let rhs = cdot(&(&f * &fp), &(&g * &gp))
            .add(&cdot(&(&g * &fp), &(&f * &gp)))
            .scale(0.5);
        comp_acc.add(lhs.sub(&rhs).amax(), lhs.amax().max(rhs.amax()));

        let lhs = cdot(&f, &g).compose(&cdot(&fp, &fp));
        let rhs = cdot(&(&f * &fp), &(&g * &fp));
        prod_acc.add(lhs.sub(&rhs).amax(), lhs.amax().max(rhs.amax()));
    }

    vec![
        trace_acc.finalize("lambda2.trace_law", 1e-10),
        comp_acc.finalize("lambda2.composition", 1e-10),
        prod_acc.finalize("lambda2.prod", 1e-10),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda2_lemmas_hold_for_all_supported_dimensions() {
        for n in 3..=8 {
            let params = SuiteParams {
                seed: n as u64,
                ..SuiteParams::default()
            };
            for r in check_lambda2_lemmas(n, 200, &params) {
                assert!(r.pass, "{} failed at n={n}: rel {}", r.id, r.max_rel);
            }
        }
    }
}
