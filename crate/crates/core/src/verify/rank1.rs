//! The rank-1 suite: displayed identities for the unit field `ξ` spanning a
//! 1-dimensional Weyl-parallel distribution.
//!
//! Always checked (only the conformal product structure is needed):
//! `∇_Xξ = −θ(ξ)X + ⟨X,ξ⟩θ`, `∇_θξ = 0`, `δξ = (n−1)θ(ξ)`, `dξ = ξ∧θ`, and
//! `Ric(ξ) = (n−2)d(θ(ξ)) − (δθ)ξ`.
//!
//! With a metric-parallel `P`:
//! `d⟨ξ,Pξ⟩ = 2(θ(Pξ)ξ − θ(ξ)Pξ)`, the `Ric(Pξ)` display,
//! `δ(Pξ) = tr(P)θ(ξ) − θ(Pξ)`, and the `Ric∘P` commutation display.
//!
//! On triple products only, the integrated conclusions hold pointwise by
//! construction and are asserted: `θ(ξ) = 0`, `θ(Pξ) = 0`, constancy of
//! `⟨ξ,Pξ⟩`, vanishing of one of `ξ₁, ξ₂`, the reduced derivative
//! `∇_Xξ = ⟨X,ξ⟩θ`, and the curvature display for `R_{X,Y}ξ`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::jets::matrix::{jdot, jvec_value};
use crate::jets::Jet;
use crate::structures::{PackKind, StructurePack};

use super::{sample_points, unit_directions, PackCtx, ResidualAcc, ResidualReport, SuiteParams};

struct Rank1Accs {
    koxi: ResidualAcc,
    nabla_theta_xi: ResidualAcc,
    delta_xi: ResidualAcc,
    d_xi: ResidualAcc,
    ric_xi: ResidualAcc,
    d_xi_pxi: ResidualAcc,
    ric_pxi: ResidualAcc,
    delta_pxi: ResidualAcc,
    ric_commute: ResidualAcc,
    theta_xi: ResidualAcc,
    theta_pxi: ResidualAcc,
    xi_pxi_lo: f64,
    xi_pxi_hi: f64,
    claim: ResidualAcc,
    koxi1: ResidualAcc,
    riemxi: ResidualAcc,
}

impl Default for Rank1Accs {
    fn default() -> Self {
        Rank1Accs {
            koxi: ResidualAcc::default(),
            nabla_theta_xi: ResidualAcc::default(),
            delta_xi: ResidualAcc::default(),
            d_xi: ResidualAcc::default(),
            ric_xi: ResidualAcc::default(),
            d_xi_pxi: ResidualAcc::default(),
            ric_pxi: ResidualAcc::default(),
            delta_pxi: ResidualAcc::default(),
            ric_commute: ResidualAcc::default(),
            theta_xi: ResidualAcc::default(),
            theta_pxi: ResidualAcc::default(),
            xi_pxi_lo: f64::INFINITY,
            xi_pxi_hi: f64::NEG_INFINITY,
            claim: ResidualAcc::default(),
            koxi1: ResidualAcc::default(),
            riemxi: ResidualAcc::default(),
        }
    }
}

fn merge(mut a: Rank1Accs, b: Rank1Accs) -> Rank1Accs {
    a.koxi = a.koxi.merge(b.koxi);
    a.nabla_theta_xi = a.nabla_theta_xi.merge(b.nabla_theta_xi);
    a.delta_xi = a.delta_xi.merge(b.delta_xi);
    a.d_xi = a.d_xi.merge(b.d_xi);
    a.ric_xi = a.ric_xi.merge(b.ric_xi);
    a.d_xi_pxi = a.d_xi_pxi.merge(b.d_xi_pxi);
    a.ric_pxi = a.ric_pxi.merge(b.ric_pxi);
    a.delta_pxi = a.delta_pxi.merge(b.delta_pxi);
    a.ric_commute = a.ric_commute.merge(b.ric_commute);
    a.theta_xi = a.theta_xi.merge(b.theta_xi);
    a.theta_pxi = a.theta_pxi.merge(b.theta_pxi);
    a.xi_pxi_lo = a.xi_pxi_lo.min(b.xi_pxi_lo);
    a.xi_pxi_hi = a.xi_pxi_hi.max(b.xi_pxi_hi);
    a.claim = a.claim.merge(b.claim);
    a.koxi1 = a.koxi1.merge(b.koxi1);
    a.riemxi = a.riemxi.merge(b.riemxi);
    a
}

pub fn check_rank1_suite(pack: &StructurePack, params: &SuiteParams) -> Vec<ResidualReport> {
    if pack.xi.is_none() {
        return vec![ResidualReport::not_applicable(
            "rank1",
            "pack exposes no rank-1 unit field ξ",
        )];
    }
    let mut rng = params.rng("rank1");
    let points = sample_points(&pack.chart, params.points, &mut rng);
    let dirs = unit_directions(pack.n(), 2 * params.directions, &mut rng);
    let is_triple = pack.kind == PackKind::TripleProduct;

    let accs = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, true).expect("pack evaluation");
            let n = ctx.n;
            let nf = n as f64;
            let mut acc = Rank1Accs::default();

            let xi_jets = ctx.xi_jets.as_ref().unwrap();
            let xi = jvec_value(xi_jets);
            let theta_sharp = ctx.base.sharp_val(&jvec_value(&ctx.theta_jets));
            let theta_xi = jvec_value(&ctx.theta_jets).dot(&xi);
            let dxi_per = ctx.base.covd_vector_jets(xi_jets);
            let dxi_vals: Vec<DVector<f64>> = dxi_per.iter().map(|row| jvec_value(row)).collect();
            let covd_xi = |x: &DVector<f64>| -> DVector<f64> {
                let mut out = DVector::zeros(n);
                for i in 0..n {
                    out += &dxi_vals[i] * x[i];
                }
                out
            };

            // ∇_Xξ = −θ(ξ)X + ⟨X,ξ⟩θ♯ and the triple-product reduction
            for xf in dirs.iter().take(params.directions) {
                let x = ctx.coord_dir(xf);
                let lhs = covd_xi(&x);
                let rhs = -&x * theta_xi + &theta_sharp * ctx.base.inner(&x, &xi);
                acc.koxi
                    .add((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax()));
                if is_triple {
                    let rhs1 = &theta_sharp * ctx.base.inner(&x, &xi);
                    acc.koxi1
                        .add((&lhs - &rhs1).amax(), lhs.amax().max(rhs1.amax()));
                }
            }

            // ∇_θξ = 0
            let lhs = covd_xi(&theta_sharp);
            acc.nabla_theta_xi
                .add(lhs.amax(), theta_sharp.norm().max(1.0) * xi.amax());

            // δξ = (n−1)θ(ξ)
            let delta_xi = -ctx.base.divergence(xi_jets);
            let rhs = (nf - 1.0) * theta_xi;
            acc.delta_xi.add((delta_xi - rhs).abs(), delta_xi.abs().max(rhs.abs()));

            // dξ = ξ∧θ on coordinate pairs
            let xi_flat_jets = ctx.base.flat_jets(xi_jets);
            let xi_flat = jvec_value(&xi_flat_jets);
            let theta_coord = jvec_value(&ctx.theta_jets);
            let dflat: Vec<DVector<f64>> = (0..n)
                .map(|i| {
                    DVector::from_fn(n, |j, _| {
                        xi_flat_jets[j].partial_derivative(i).expect("order").value()
                    })
                })
                .collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let lhs = dflat[i][j] - dflat[j][i];
                    let rhs = xi_flat[i] * theta_coord[j] - xi_flat[j] * theta_coord[i];
                    acc.d_xi.add((lhs - rhs).abs(), lhs.abs().max(rhs.abs()).max(xi_flat.amax()));
                }
            }

            // Ric(ξ) = (n−2)·grad(θ(ξ)) − (δθ)ξ
            let rf = ctx.rframe.as_ref().unwrap();
            let ric = crate::curvature::ricci(rf, &ctx.base);
            let theta_xi_jet = jdot(&ctx.theta_jets, xi_jets);
            let grad = |f: &Jet| -> DVector<f64> {
                ctx.base.sharp_val(&DVector::from_fn(n, |i, _| {
                    f.partial_derivative(i).expect("order").value()
                }))
            };
            let delta_theta = -ctx.base.divergence(&ctx.theta_sharp_jets);
            let lhs = &ric.coord_endo * &xi;
            let rhs = grad(&theta_xi_jet) * (nf - 2.0) - &xi * delta_theta;
            acc.ric_xi
                .add((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax()));

            if is_triple {
                acc.theta_xi.add(theta_xi.abs(), 1.0);
            }

            if let Some(p_jets) = &ctx.p_jets {
                let p_val = p_jets.value();
                let p_xi_jets = p_jets.mul_vec(xi_jets);
                let p_xi = jvec_value(&p_xi_jets);
                let theta_p_xi = theta_coord.dot(&p_xi);
                let p_theta_sharp = &p_val * &theta_sharp;

                // d⟨ξ,Pξ⟩ = 2(θ(Pξ)ξ − θ(ξ)Pξ)♭
                let g_pxi = ctx.base.flat_jets(&p_xi_jets);
                let mut xi_pxi_jet = xi_jets[0].mul_t(&g_pxi[0]);
                for i in 1..n {
                    xi_pxi_jet = xi_pxi_jet.add_t(&xi_jets[i].mul_t(&g_pxi[i]));
                }
                let rhs_vec = (&xi * theta_p_xi - &p_xi * theta_xi) * 2.0;
                let rhs_flat = &ctx.base.g_val * rhs_vec;
                for i in 0..n {
                    let lhs = xi_pxi_jet.partial_derivative(i).expect("order").value();
                    acc.d_xi_pxi
                        .add((lhs - rhs_flat[i]).abs(), lhs.abs().max(rhs_flat.amax()));
                }

                // δ(Pξ) = tr(P)θ(ξ) − θ(Pξ)
                let delta_pxi = -ctx.base.divergence(&p_xi_jets);
                let rhs = p_val.trace() * theta_xi - theta_p_xi;
                acc.delta_pxi
                    .add((delta_pxi - rhs).abs(), delta_pxi.abs().max(rhs.abs()));

                // Ric(Pξ) = θ(Pξ)θ − θ(ξ)Pθ − (δPθ)ξ − d(θ(Pξ)) − P d(θ(ξ)) + tr(P) d(θ(ξ))
                let p_theta_jets = p_jets.mul_vec(&ctx.theta_sharp_jets);
                let delta_p_theta = -ctx.base.divergence(&p_theta_jets);
                let theta_p_xi_jet = {
                    let p_xi_flat = ctx.base.flat_jets(&p_xi_jets);
                    jdot(&ctx.theta_sharp_jets, &p_xi_flat)
                };
                let grad_theta_xi = grad(&theta_xi_jet);
                let lhs = &ric.coord_endo * &p_xi;
                let rhs = &theta_sharp * theta_p_xi - &p_theta_sharp * theta_xi
                    - &xi * delta_p_theta
                    - grad(&theta_p_xi_jet)
                    - &p_val * &grad_theta_xi
                    + &grad_theta_xi * p_val.trace();
                acc.ric_pxi
                    .add((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax()));

                // the Ric∘P commutation display
                let comm = &theta_sharp * theta_p_xi - &p_theta_sharp * theta_xi
                    - &xi * delta_p_theta
                    + &p_xi * delta_theta
                    - grad(&theta_p_xi_jet)
                    - &p_val * &grad_theta_xi * (nf - 1.0)
                    + &grad_theta_xi * p_val.trace();
                acc.ric_commute.add(
                    comm.amax(),
                    theta_sharp.norm().max(grad_theta_xi.amax()).max(delta_theta.abs()),
                );

                if is_triple {
                    acc.theta_pxi.add(theta_p_xi.abs(), 1.0);
                    let xi_pxi = xi_pxi_jet.value();
                    acc.xi_pxi_lo = acc.xi_pxi_lo.min(xi_pxi);
                    acc.xi_pxi_hi = acc.xi_pxi_hi.max(xi_pxi);
                    // ‖ξ₁‖² = ½(1+⟨ξ,Pξ⟩), ‖ξ₂‖² = ½(1−⟨ξ,Pξ⟩)
                    let sq1 = 0.5 * (1.0 + xi_pxi);
                    let sq2 = 0.5 * (1.0 - xi_pxi);
                    acc.claim.add(sq1.min(sq2), 1.0);
                }
            }

            // R_{X,Y}ξ display (triple products only; needs θ(ξ) = 0)
            if is_triple {
                let riem = ctx.riem.as_ref().unwrap();
                for pair in dirs.chunks(2) {
                    let x = ctx.coord_dir(&pair[0]);
                    let y = ctx.coord_dir(&pair[1]);
                    let lhs = riem.endo(&x, &y) * &xi;
                    let t_x = ctx.base.sharp_val(&ctx.base.covd_oneform(&ctx.theta_jets, &x));
                    let t_y = ctx.base.sharp_val(&ctx.base.covd_oneform(&ctx.theta_jets, &y));
                    let th_x = theta_coord.dot(&x);
                    let th_y = theta_coord.dot(&y);
                    let rhs = &theta_sharp * (th_y * ctx.base.inner(&x, &xi))
                        + &t_x * ctx.base.inner(&y, &xi)
                        - &theta_sharp * (th_x * ctx.base.inner(&y, &xi))
                        - &t_y * ctx.base.inner(&x, &xi);
                    acc.riemxi.add(
                        (&lhs - &rhs).amax(),
                        lhs.amax().max(rhs.amax()).max(theta_sharp.amax()),
                    );
                }
            }
            acc
        })
        .reduce(Rank1Accs::default, merge);

    let has_p = pack.p.is_some();
    let mut out = vec![
        accs.koxi.finalize("rank1.koxi", params.tol_curvature),
        accs.nabla_theta_xi
            .finalize("rank1.nabla_theta_xi", params.tol_curvature),
        accs.delta_xi.finalize("rank1.delta_xi", params.tol_curvature),
        accs.d_xi.finalize("rank1.d_xi", params.tol_curvature),
        accs.ric_xi.finalize("rank1.ric_xi", params.tol_curvature),
    ];
    let p_reports: [(&str, ResidualAcc); 4] = [
        ("rank1.d_xi_pxi", accs.d_xi_pxi),
        ("rank1.ric_pxi", accs.ric_pxi),
        ("rank1.delta_pxi", accs.delta_pxi),
        ("rank1.ric_commute", accs.ric_commute),
    ];
    for (id, acc) in p_reports {
        if has_p {
            out.push(acc.finalize(id, params.tol_curvature));
        } else {
            out.push(ResidualReport::not_applicable(
                id,
                "pack carries no metric-parallel involution P",
            ));
        }
    }
    if is_triple {
        out.push(accs.theta_xi.finalize("rank1.theta_xi_zero", 1e-9));
        out.push(accs.theta_pxi.finalize("rank1.theta_pxi_zero", 1e-9));
        let variation = accs.xi_pxi_hi - accs.xi_pxi_lo;
        out.push(ResidualReport {
            id: "rank1.xi_pxi_const".into(),
            points: params.points,
            max_abs: variation,
            max_rel: variation,
            tol: 1e-9,
            pass: variation <= 1e-9,
            note: Some(format!(
                "⟨ξ,Pξ⟩ ∈ [{:.12}, {:.12}]",
                accs.xi_pxi_lo, accs.xi_pxi_hi
            )),
        });
        out.push(accs.claim.finalize("rank1.claim_xi12", 1e-12));
        out.push(accs.koxi1.finalize("rank1.koxi1", params.tol_curvature));
        out.push(accs.riemxi.finalize("rank1.riemxi", params.tol_curvature));
    } else {
        for id in [
            "rank1.theta_xi_zero",
            "rank1.theta_pxi_zero",
            "rank1.xi_pxi_const",
            "rank1.claim_xi12",
            "rank1.koxi1",
            "rank1.riemxi",
        ] {
            out.push(ResidualReport::not_applicable(
                id,
                "the kernel conclusions hold on triple products only",
            ));
        }
    }
    out
}
