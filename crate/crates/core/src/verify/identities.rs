//! Residual checkers for the pointwise tensor identities: the covariant
//! derivative of `S`, the curvature action on `S`, the four `α` identities,
//! the Λ² commutation identities, the scalar identity with its divergence
//! term, the derivation chain behind it, and the nine trace-to-
//! codifferential identities.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::curvature::{cdot, riemann, riemann_as_lambda2, Lambda2Map, RiemannFrame};
use crate::geometry::increasing_tuples;
use crate::jets::matrix::{jvec_scale_jet, jvec_value, JetMat};
use crate::jets::Jet;
use crate::structures::StructurePack;

use super::{odot_f, outer_f, sample_points, unit_directions, wedge_f, PackCtx, ResidualAcc,
            ResidualReport, SuiteParams};

fn missing_p(id: &str) -> ResidualReport {
    ResidualReport::not_applicable(id, "pack carries no metric-parallel involution P")
}

/// `∇_X S = SX⊙θ♯ − Sθ♯⊙X`.
pub fn check_derivs(pack: &StructurePack, params: &SuiteParams) -> ResidualReport {
    let mut rng = params.rng("eq.derivS");
    let points = sample_points(&pack.chart, params.points, &mut rng);
    let dirs = unit_directions(pack.n(), params.directions, &mut rng);

    let acc = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, false).expect("pack evaluation");
            let ds_coord = ctx.base.covd_endo_jets(&ctx.s_jets);
            let ds_vals: Vec<DMatrix<f64>> = ds_coord.iter().map(JetMat::value).collect();
            let s_theta = &ctx.fs * &ctx.ftheta;
            let mut acc = ResidualAcc::default();
            for xf in &dirs {
                let x = ctx.coord_dir(xf);
                let mut lhs_coord = DMatrix::zeros(ctx.n, ctx.n);
                for i in 0..ctx.n {
                    lhs_coord += &ds_vals[i] * x[i];
                }
                let lhs = ctx.frame_endo(&lhs_coord);
                let sx = &ctx.fs * xf;
                let rhs = odot_f(&sx, &ctx.ftheta) - odot_f(&s_theta, xf);
                acc.add((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax()));
            }
            acc
        })
        .reduce(ResidualAcc::default, ResidualAcc::merge);
    acc.finalize("eq.derivS", params.tol_first_order)
}

/// The curvature action on `S`:
/// `R_{X,Y}S = SY⊙TX − SX⊙TY + STY⊙X − STX⊙Y
///  + ⟨θ,Y⟩(SX⊙θ − Sθ⊙X) + ⟨θ,X⟩(Sθ⊙Y − SY⊙θ) − ‖θ‖²(SX⊙Y − SY⊙X)`.
pub fn check_rs(pack: &StructurePack, params: &SuiteParams) -> ResidualReport {
    let mut rng = params.rng("eq.RS");
    let points = sample_points(&pack.chart, params.points, &mut rng);
    let dirs = unit_directions(pack.n(), 2 * params.directions, &mut rng);

    let acc = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, true).expect("pack evaluation");
            let riem = ctx.riem.as_ref().unwrap();
            let th = &ctx.ftheta;
            let t2 = th.norm_squared();
            let s_theta = &ctx.fs * th;
            let mut acc = ResidualAcc::default();
            for pair in dirs.chunks(2) {
                let (xf, yf) = (&pair[0], &pair[1]);
                let r_endo = ctx.frame_endo(&riem.endo(&ctx.coord_dir(xf), &ctx.coord_dir(yf)));
                let lhs = &r_endo * &ctx.fs - &ctx.fs * &r_endo;
                let (sx, sy) = (&ctx.fs * xf, &ctx.fs * yf);
                let ftm = ctx.t_frame();
                let (tx, ty) = (ftm * xf, ftm * yf);
                let (stx, sty) = (&ctx.fs * &tx, &ctx.fs * &ty);
                let rhs = odot_f(&sy, &tx) - odot_f(&sx, &ty) + odot_f(&sty, xf)
                    - odot_f(&stx, yf)
                    + (odot_f(&sx, th) - odot_f(&s_theta, xf)) * th.dot(yf)
                    + (odot_f(&s_theta, yf) - odot_f(&sy, th)) * th.dot(xf)
                    - (odot_f(&sx, yf) - odot_f(&sy, xf)) * t2;
                acc.add((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax()));
            }
            acc
        })
        .reduce(ResidualAcc::default, ResidualAcc::merge);
    acc.finalize("eq.RS", params.tol_curvature)
}

/// The four identities for `α = SP − PS`:
/// (a) `∇_Xα = PSX∧θ + Pθ∧SX − PX∧Sθ − PSθ∧X`
/// (b) `dα = −α∧θ`
/// (c) `δα = (1−n)PSθ − SPθ − tr(PS)θ + tr(P)Sθ + tr(S)Pθ`
/// (d) `d(tr(SP)) = 2α(θ)`
pub fn check_lemma_alpha(pack: &StructurePack, params: &SuiteParams) -> Vec<ResidualReport> {
    if pack.p.is_none() {
        return ["lemma_alpha.nabla", "lemma_alpha.d", "lemma_alpha.delta", "lemma_alpha.dtrace"]
            .iter()
            .map(|id| missing_p(id))
            .collect();
    }
    let mut rng = params.rng("lemma_alpha");
    let points = sample_points(&pack.chart, params.points, &mut rng);
    let dirs = unit_directions(pack.n(), params.directions, &mut rng);
    let n = pack.n();
    let triples = increasing_tuples(n, 3);

    let (a, b, c, d) = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, false).expect("pack evaluation");
            let fp = ctx.fp.as_ref().unwrap();
            let p_jets = ctx.p_jets.as_ref().unwrap();
            let alpha_jets = ctx.s_jets.mul(p_jets).sub(&p_jets.mul(&ctx.s_jets));
            let th = &ctx.ftheta;
            let s_theta = &ctx.fs * th;
            let p_theta = fp * th;
            let ps_theta = fp * &s_theta;
            let sp_theta = &ctx.fs * &p_theta;

            // (a) ∇α against the wedge expression
            let mut acc_a = ResidualAcc::default();
            let dalpha = ctx.base.covd_endo_jets(&alpha_jets);
            let dalpha_vals: Vec<DMatrix<f64>> = dalpha.iter().map(JetMat::value).collect();
            for xf in &dirs {
                let x = ctx.coord_dir(xf);
                let mut lhs_coord = DMatrix::zeros(n, n);
                for i in 0..n {
                    lhs_coord += &dalpha_vals[i] * x[i];
                }
                let lhs = ctx.frame_endo(&lhs_coord);
                let psx = fp * (&ctx.fs * xf);
                let sx = &ctx.fs * xf;
                let px = fp * xf;
                let rhs = wedge_f(&psx, th) + wedge_f(&p_theta, &sx) - wedge_f(&px, &s_theta)
                    - wedge_f(&ps_theta, xf);
                acc_a.add((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax()));
            }

            // ω_α as a (0,2) antisymmetric jet matrix: ω_{ij} = ⟨α∂ᵢ,∂ⱼ⟩
            let g_alpha = ctx.base.g_jets.mul(&alpha_jets);
            let omega = JetMat::from_fn(n, |i, j| g_alpha.get(j, i).clone());

            // (b) dα = −α∧θ on increasing triples, coordinate components
            let mut acc_b = ResidualAcc::default();
            let theta_coord = jvec_value(&ctx.theta_jets);
            let omega_val = omega.value();
            let domega: Vec<DMatrix<f64>> = (0..n).map(|i| omega.partial_value(i)).collect();
            for t in &triples {
                let (i, j, k) = (t[0], t[1], t[2]);
                let lhs = domega[i][(j, k)] - domega[j][(i, k)] + domega[k][(i, j)];
                let rhs = -(omega_val[(i, j)] * theta_coord[k]
                    + omega_val[(j, k)] * theta_coord[i]
                    + omega_val[(k, i)] * theta_coord[j]);
                acc_b.add((lhs - rhs).abs(), lhs.abs().max(rhs.abs()));
            }

            // (c) δα against the displayed combination, frame components
            let lhs_c = ctx.base.frame.transpose() * ctx.base.codiff_twoform(&omega);
            let tr_ps = (fp * &ctx.fs).trace();
            let rhs_c = &ps_theta * (1.0 - n as f64) - &sp_theta - th * tr_ps
                + &s_theta * fp.trace()
                + &p_theta * ctx.fs.trace();
            let mut acc_c = ResidualAcc::default();
            acc_c.add((&lhs_c - &rhs_c).amax(), lhs_c.amax().max(rhs_c.amax()));

            // (d) d(tr(SP)) = 2α(θ), coordinate components
            let tr_sp_jet = ctx.s_jets.mul(p_jets).trace();
            let alpha_theta =
                alpha_jets.value() * ctx.base.sharp_val(&theta_coord);
            let rhs_d = &ctx.base.g_val * alpha_theta * 2.0;
            let mut acc_d = ResidualAcc::default();
            for i in 0..n {
                let lhs = tr_sp_jet.partial_derivative(i).expect("order ≥ 1").value();
                acc_d.add((lhs - rhs_d[i]).abs(), lhs.abs().max(rhs_d.amax()));
            }
            (acc_a, acc_b, acc_c, acc_d)
        })
        .reduce(
            || {
                (
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                )
            },
            |x, y| (x.0.merge(y.0), x.1.merge(y.1), x.2.merge(y.2), x.3.merge(y.3)),
        );

    vec![
        a.finalize("lemma_alpha.nabla", params.tol_first_order),
        b.finalize("lemma_alpha.d", params.tol_first_order),
        c.finalize("lemma_alpha.delta", params.tol_first_order),
        d.finalize("lemma_alpha.dtrace", params.tol_first_order),
    ]
}

/// The Λ² commutation identities:
/// `(P·P)∘R = R = R∘(P·P)`,
/// `(S·S)∘R − R = −2ST·S + 2T·I + 2S·(θ⊗Sθ) − 2I·(θ⊗θ) + ‖θ‖²(I·I − S·S)`,
/// and the same right side composed with `P·P` term by term.
pub fn check_commutation(pack: &StructurePack, params: &SuiteParams) -> Vec<ResidualReport> {
    if pack.p.is_none() {
        return ["comm.PPR", "comm.SSR", "comm.SSR_PP"]
            .iter()
            .map(|id| missing_p(id))
            .collect();
    }
    let mut rng = params.rng("commutation");
    let points = sample_points(&pack.chart, params.points, &mut rng);

    let (a, b, c) = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, true).expect("pack evaluation");
            let n = ctx.n;
            let rf = ctx.rframe.as_ref().unwrap();
            let r_op = riemann_as_lambda2(rf);
            let fp = ctx.fp.as_ref().unwrap();
            let fs = &ctx.fs;
            let th = &ctx.ftheta;
            let t2 = th.norm_squared();
            let id = DMatrix::identity(n, n);
            let s_theta = fs * th;

            let pp = cdot(fp, fp);
            let mut acc_a = ResidualAcc::default();
            let left = pp.compose(&r_op).sub(&r_op);
            let right = r_op.compose(&pp).sub(&r_op);
            acc_a.add(left.amax().max(right.amax()), r_op.amax());

            // (S·S)∘R − R
            let ftm = ctx.t_frame();
            let sst = cdot(&(fs * ftm), fs);
            let ssr = cdot(fs, fs).compose(&r_op).sub(&r_op);
            let rhs = sst.scale(-2.0)
                .add(&cdot(ftm, &id).scale(2.0))
                .add(&cdot(fs, &outer_f(th, &s_theta)).scale(2.0))
                .add(&cdot(&id, &outer_f(th, th)).scale(-2.0))
                .add(&cdot(&id, &id).sub(&cdot(fs, fs)).scale(t2));
            let mut acc_b = ResidualAcc::default();
            acc_b.add(ssr.sub(&rhs).amax(), ssr.amax().max(rhs.amax()));

            // ((S·S)∘R − R)∘(P·P) expressed with the composed structure maps
            let lhs_c = ssr.compose(&pp);
            let sp = fs * fp;
            let p_theta = fp * th;
            let rhs_c = cdot(&(fs * ftm * fp), &sp).scale(-2.0)
                .add(&cdot(&(ftm * fp), fp).scale(2.0))
                .add(&cdot(&sp, &outer_f(&p_theta, &s_theta)).scale(2.0))
                .add(&cdot(fp, &outer_f(&p_theta, th)).scale(-2.0))
                .add(&cdot(fp, fp).sub(&cdot(&sp, &sp)).scale(t2));
            let mut acc_c = ResidualAcc::default();
            acc_c.add(lhs_c.sub(&rhs_c).amax(), lhs_c.amax().max(rhs_c.amax()));
            (acc_a, acc_b, acc_c)
        })
        .reduce(
            || {
                (
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                )
            },
            |x, y| (x.0.merge(y.0), x.1.merge(y.1), x.2.merge(y.2)),
        );

    vec![
        a.finalize("comm.PPR", params.tol_curvature),
        b.finalize("comm.SSR", params.tol_curvature),
        c.finalize("comm.SSR_PP", params.tol_curvature),
    ]
}

/// Pointwise scalar data shared by the scalar identity and the chain.
struct ScalarTerms {
    n: f64,
    t2: f64,
    tr_s: f64,
    tr_p: f64,
    tr_sp: f64,
    tr_spsp: f64,
    th_s: f64,
    th_p: f64,
    th_sps: f64,
    th_sp: f64,
    th_psp: f64,
    th_spsp: f64,
    ptheta_stheta: f64,
    ptheta_spstheta: f64,
}

impl ScalarTerms {
    fn new(ctx: &PackCtx) -> ScalarTerms {
        let fs = &ctx.fs;
        let fp = ctx.fp.as_ref().expect("scalar terms need P");
        let th = &ctx.ftheta;
        let sp = fs * fp;
        let s_theta = fs * th;
        let p_theta = fp * th;
        ScalarTerms {
            n: ctx.n as f64,
            t2: th.norm_squared(),
            tr_s: fs.trace(),
            tr_p: fp.trace(),
            tr_sp: sp.trace(),
            tr_spsp: (&sp * &sp).trace(),
            th_s: th.dot(&s_theta),
            th_p: th.dot(&p_theta),
            th_sps: th.dot(&(fs * fp * &s_theta)),
            th_sp: th.dot(&(fs * &p_theta)),
            th_psp: th.dot(&(fp * fs * &p_theta)),
            th_spsp: th.dot(&(fs * fp * fs * &p_theta)),
            ptheta_stheta: p_theta.dot(&s_theta),
            ptheta_spstheta: p_theta.dot(&(fs * fp * &s_theta)),
        }
    }
}

/// `β♯` as coordinate jets:
/// `β = tr(S)Sθ − (n+1)θ − tr(SP)PSθ + PSPSθ + tr(P)Pθ`.
pub(crate) fn beta_sharp_jets(ctx: &PackCtx) -> Vec<Jet> {
    let n = ctx.n as f64;
    let s = &ctx.s_jets;
    let p = ctx.p_jets.as_ref().expect("β needs P");
    let th = &ctx.theta_sharp_jets;
    let s_th = s.mul_vec(th);
    let ps_th = p.mul_vec(&s_th);
    let psps_th = p.mul_vec(&s.mul_vec(&ps_th));
    let p_th = p.mul_vec(th);
    let tr_s = s.trace();
    let tr_p = p.trace();
    let tr_sp = s.mul(p).trace();
    let mut out = Vec::with_capacity(ctx.n);
    for i in 0..ctx.n {
        let term = s_th[i]
            .mul_t(&tr_s)
            .sub_t(&th[i].scale(n + 1.0))
            .sub_t(&ps_th[i].mul_t(&tr_sp))
            .add_t(&psps_th[i])
            .add_t(&p_th[i].mul_t(&tr_p));
        out.push(term);
    }
    out
}

/// The scalar identity:
/// `0 = ½‖θ‖²(n² + trS² − trP² − trSP² + trSPSP − n)
///      + ⟨θ, Pθ−SPSθ⟩trP − ⟨θ,Sθ⟩(n·trS − trP·trSP) + δ(β)`.
pub fn check_scalar_identity(pack: &StructurePack, params: &SuiteParams) -> ResidualReport {
    if pack.p.is_none() {
        return missing_p("scalar_identity");
    }
    let mut rng = params.rng("scalar_identity");
    let points = sample_points(&pack.chart, params.points, &mut rng);

    let acc = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, false).expect("pack evaluation");
            let t = ScalarTerms::new(&ctx);
            let term1 = 0.5
                * t.t2
                * (t.n * t.n + t.tr_s * t.tr_s - t.tr_p * t.tr_p - t.tr_sp * t.tr_sp + t.tr_spsp
                    - t.n);
            let term2 = (t.th_p - t.th_sps) * t.tr_p;
            let term3 = -t.th_s * (t.n * t.tr_s - t.tr_p * t.tr_sp);
            let delta_beta = -ctx.base.divergence(&beta_sharp_jets(&ctx));
            let total = term1 + term2 + term3 + delta_beta;
            let scale = term1.abs().max(term2.abs()).max(term3.abs()).max(delta_beta.abs());
            let mut acc = ResidualAcc::default();
            acc.add(total.abs(), scale);
            acc
        })
        .reduce(ResidualAcc::default, ResidualAcc::merge);
    acc.finalize("scalar_identity", params.tol_curvature)
}

/// The intermediate identities linking the commutation traces to the final
/// scalar identity: the double-trace identity, the moving-trace
/// codifferential step, and the fully expanded pre-regrouping display.
pub fn check_derivation_chain(pack: &StructurePack, params: &SuiteParams) -> Vec<ResidualReport> {
    if pack.p.is_none() {
        return ["chain.trace0", "chain.noncttr", "chain.trace1"]
            .iter()
            .map(|id| missing_p(id))
            .collect();
    }
    let mut rng = params.rng("derivation_chain");
    let points = sample_points(&pack.chart, params.points, &mut rng);

    let (a, b, c) = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, false).expect("pack evaluation");
            let t = ScalarTerms::new(&ctx);
            let fs = &ctx.fs;
            let fp = ctx.fp.as_ref().unwrap();
            let ft = ctx.t_frame();
            let tr_t = ft.trace();
            let tr_st = (fs * ft).trace();
            let tr_pt = (fp * ft).trace();
            let tr_pst = (fp * fs * ft).trace();
            let tr_pspst = (fp * fs * fp * fs * ft).trace();

            // trace of both expressions for (S·S)∘R − R
            let lhs0 = -tr_st * t.tr_s + t.n * tr_t + t.tr_s * t.th_s
                + 0.5 * t.t2 * (t.n * t.n - 2.0 * t.n - t.tr_s * t.tr_s);
            let rhs0 = -tr_pst * t.tr_sp + tr_pspst + tr_pt * t.tr_p - tr_t
                + t.tr_sp * t.ptheta_stheta
                - t.ptheta_spstheta
                - t.tr_p * t.th_p
                + 0.5 * t.t2
                    * (2.0 + t.tr_p * t.tr_p - t.n - t.tr_sp * t.tr_sp + t.tr_spsp);
            let mut acc_a = ResidualAcc::default();
            acc_a.add((lhs0 - rhs0).abs(), lhs0.abs().max(rhs0.abs()));

            // moving the non-constant trace through the codifferential:
            // tr(PST)·tr(SP) = −δ(tr(SP)·PSθ) − 2⟨SPSPθ,θ⟩ + 2‖θ‖²
            //                  − ‖θ‖²tr(SP)² + ⟨θ,Sθ⟩tr(P)tr(SP)
            let p_jets = ctx.p_jets.as_ref().unwrap();
            let tr_sp_jet = ctx.s_jets.mul(p_jets).trace();
            let ps_theta_jets =
                p_jets.mul_vec(&ctx.s_jets.mul_vec(&ctx.theta_sharp_jets));
            let w = jvec_scale_jet(&ps_theta_jets, &tr_sp_jet);
            let delta_w = -ctx.base.divergence(&w);
            let lhs1 = tr_pst * t.tr_sp;
            let rhs1 = -delta_w - 2.0 * t.th_spsp + 2.0 * t.t2 - t.t2 * t.tr_sp * t.tr_sp
                + t.th_s * t.tr_p * t.tr_sp;
            let mut acc_b = ResidualAcc::default();
            acc_b.add((lhs1 - rhs1).abs(), lhs1.abs().max(rhs1.abs()).max(delta_w.abs()));

            // the fully substituted display before regrouping
            let delta_beta = -ctx.base.divergence(&beta_sharp_jets(&ctx));
            let total = t.t2 * t.tr_s * t.tr_s - t.n * t.th_s * t.tr_s + t.th_s * t.tr_s
                + 0.5 * t.t2 * (t.n * t.n - 2.0 * t.n - t.tr_s * t.tr_s)
                - 2.0 * t.th_spsp
                + 2.0 * t.t2
                - t.t2 * t.tr_sp * t.tr_sp
                + t.th_s * t.tr_p * t.tr_sp
                - t.t2 * (1.0 - t.tr_spsp)
                + th_psps(&ctx)
                + t.ptheta_stheta * t.tr_sp
                - t.th_sps * t.tr_p
                - t.th_s * t.tr_s
                - t.tr_sp * t.ptheta_stheta
                + t.th_spsp
                + t.tr_p * t.th_p
                - 0.5 * t.t2
                    * (2.0 + t.tr_p * t.tr_p - t.n - t.tr_sp * t.tr_sp + t.tr_spsp)
                + delta_beta;
            let scale = t.t2.max(delta_beta.abs()).max(t.th_s.abs());
            let mut acc_c = ResidualAcc::default();
            acc_c.add(total.abs(), scale);
            (acc_a, acc_b, acc_c)
        })
        .reduce(
            || {
                (
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                    ResidualAcc::default(),
                )
            },
            |x, y| (x.0.merge(y.0), x.1.merge(y.1), x.2.merge(y.2)),
        );

    vec![
        a.finalize("chain.trace0", params.tol_curvature),
        b.finalize("chain.noncttr", params.tol_curvature),
        c.finalize("chain.trace1", params.tol_curvature),
    ]
}

/// `⟨θ, PSPSθ⟩` in the frame.
fn th_psps(ctx: &PackCtx) -> f64 {
    let fs = &ctx.fs;
    let fp = ctx.fp.as_ref().unwrap();
    ctx.ftheta.dot(&(fp * fs * fp * (fs * &ctx.ftheta)))
}

/// The nine trace-to-codifferential identities for `T = ∇θ`.
pub fn check_appendix_traces(pack: &StructurePack, params: &SuiteParams) -> Vec<ResidualReport> {
    let ids = [
        "appendix.trT",
        "appendix.trPT",
        "appendix.trST",
        "appendix.trPST",
        "appendix.trSPT",
        "appendix.trPSPT",
        "appendix.trSPST",
        "appendix.trSPSPT",
        "appendix.trPSPST",
    ];
    if pack.p.is_none() {
        return ids.iter().map(|id| missing_p(id)).collect();
    }
    let mut rng = params.rng("appendix_traces");
    let points = sample_points(&pack.chart, params.points, &mut rng);

    let accs = points
        .par_iter()
        .map(|p| {
            let ctx = PackCtx::new(pack, p, 3, false).expect("pack evaluation");
            let t = ScalarTerms::new(&ctx);
            let fs = &ctx.fs;
            let fp = ctx.fp.as_ref().unwrap();
            let ft = ctx.t_frame();
            let s = &ctx.s_jets;
            let pj = ctx.p_jets.as_ref().unwrap();
            let th = &ctx.theta_sharp_jets;

            let delta = |v: &Vec<Jet>| -ctx.base.divergence(v);
            let th_j = th.clone();
            let s_th = s.mul_vec(&th_j);
            let p_th = pj.mul_vec(&th_j);
            let ps_th = pj.mul_vec(&s_th);
            let sp_th = s.mul_vec(&p_th);
            let psp_th = pj.mul_vec(&sp_th);
            let sps_th = s.mul_vec(&ps_th);
            let spsp_th = s.mul_vec(&psp_th);
            let psps_th = pj.mul_vec(&sps_th);

            let pairs: [(f64, f64); 9] = [
                (ft.trace(), -delta(&th_j)),
                ((fp * ft).trace(), -delta(&p_th)),
                (
                    (fs * ft).trace(),
                    -delta(&s_th) - t.t2 * t.tr_s + t.n * t.th_s,
                ),
                (
                    (fp * fs * ft).trace(),
                    -delta(&ps_th) - t.t2 * t.tr_sp + t.th_s * t.tr_p,
                ),
                (
                    (fs * fp * ft).trace(),
                    -delta(&sp_th) - t.th_p * t.tr_s + t.n * t.th_sp,
                ),
                (
                    (fp * fs * fp * ft).trace(),
                    -delta(&psp_th) - t.th_psp - t.th_p * t.tr_sp + t.th_sp * t.tr_p + t.th_s,
                ),
                (
                    (fs * fp * fs * ft).trace(),
                    -delta(&sps_th) + (t.n + 1.0) * t.th_sps - t.th_sp * t.tr_s - t.th_p
                        - t.t2 * t.tr_p
                        + t.th_s * t.tr_sp,
                ),
                (
                    (fs * fp * fs * fp * ft).trace(),
                    -delta(&spsp_th) + (t.n + 1.0) * t.th_spsp - t.th_psp * t.tr_s - t.t2
                        - t.th_p * t.tr_p
                        + t.th_sp * t.tr_sp,
                ),
                (
                    (fp * fs * fp * fs * ft).trace(),
                    -delta(&psps_th) - t.th_spsp - t.th_sp * t.tr_sp + t.th_sps * t.tr_p
                        + t.t2 * (1.0 - t.tr_spsp)
                        + t.th_s * t.tr_s,
                ),
            ];
            pairs.map(|(lhs, rhs)| {
                let mut acc = ResidualAcc::default();
                acc.add((lhs - rhs).abs(), lhs.abs().max(rhs.abs()));
                acc
            })
        })
        .reduce(
            || [ResidualAcc::default(); 9],
            |a, b| {
                let mut out = [ResidualAcc::default(); 9];
                for i in 0..9 {
                    out[i] = a[i].merge(b[i]);
                }
                out
            },
        );

    ids.iter()
        .zip(accs)
        .map(|(id, acc)| acc.finalize(id, params.tol_curvature))
        .collect()
}

/// Frame-rotation invariance helper for tests: the `(S·S)∘R − R` residual
/// recomputed with the orthonormal frame rotated by an orthogonal `q`.
pub fn commutation_residual_with_frame(
    pack: &StructurePack,
    p: &[f64],
    q: Option<&DMatrix<f64>>,
) -> f64 {
    let ctx = PackCtx::new(pack, p, 3, true).expect("pack evaluation");
    let base = match q {
        Some(q) => ctx.base.with_rotated_frame(q),
        None => ctx.base,
    };
    let to_frame = |m: &DMatrix<f64>| &base.frame_inv * m * &base.frame;
    let fs = to_frame(&ctx.s_jets.value());
    let ftheta = base.frame.transpose() * jvec_value(&ctx.theta_jets);
    let ft = to_frame(&base.t_endo_jets(&ctx.theta_jets).value());
    let rf = RiemannFrame::new(&riemann(&base), &base);
    let r_op = riemann_as_lambda2(&rf);
    let t2 = ftheta.norm_squared();
    let id = DMatrix::identity(base.n, base.n);
    let s_theta = &fs * &ftheta;
    let ssr = cdot(&fs, &fs).compose(&r_op).sub(&r_op);
    let rhs: Lambda2Map = cdot(&(&fs * &ft), &fs)
        .scale(-2.0)
        .add(&cdot(&ft, &id).scale(2.0))
        .add(&cdot(&fs, &outer_f(&ftheta, &s_theta)).scale(2.0))
        .add(&cdot(&id, &outer_f(&ftheta, &ftheta)).scale(-2.0))
        .add(&cdot(&id, &id).sub(&cdot(&fs, &fs)).scale(t2));
    ssr.sub(&rhs).amax() / ssr.amax().max(rhs.amax()).max(1e-300)
}
