//! The technical integrability condition and the integral formula.
//!
//! Condition (*): `tr(P)·∫⟨θ, Pθ − SPSθ⟩ vol = 0`. The checker verifies the
//! pointwise bridge `⟨θ, Pθ − SPSθ⟩ = ⟨Sθ, α(θ)⟩`, evaluates which of the
//! six sufficient hypotheses hold on the pack, and — on fully periodic
//! charts — the quadrature value of the integral itself.
//!
//! The integral formula: `∫(A₊‖θ₊‖² + A₋‖θ₋‖²) vol = 0`, checked both as a
//! pointwise bound on the integrand (on triple products it vanishes
//! identically) and by quadrature, together with Stokes sanity checks
//! `∫δ(β) vol → 0` and `∫δ(df) vol → 0` under grid refinement.

use serde::Serialize;

use crate::structures::{a_plus_minus, theta_split, StructurePack};
use crate::Result;

use super::{
    sample_points, PackCtx, QuadratureGrid, ResidualAcc, ResidualReport, SuiteParams,
};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GridValue {
    pub nodes: usize,
    pub value: f64,
}

/// Convergence table of one quadrature quantity over a grid-refinement
/// sequence, with a Richardson-style extrapolation of the finest values.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IntegralReport {
    pub id: String,
    pub grids: Vec<GridValue>,
    pub extrapolated: f64,
}

fn star_integrand(ctx: &PackCtx) -> f64 {
    let fp = ctx.fp.as_ref().expect("star needs P");
    let th = &ctx.ftheta;
    let sps_theta = &ctx.fs * fp * (&ctx.fs * th);
    th.dot(&(fp * th)) - th.dot(&sps_theta)
}

/// Pointwise bridge, hypothesis survey, and the quadrature value of (*).
pub fn check_condition_star(
    pack: &StructurePack,
    params: &SuiteParams,
    grid_nodes: Option<usize>,
) -> Vec<ResidualReport> {
    if pack.p.is_none() {
        return vec![ResidualReport::not_applicable(
            "star",
            "pack carries no metric-parallel involution P",
        )];
    }
    let mut rng = params.rng("star");
    let points = sample_points(&pack.chart, params.points, &mut rng);

    let mut bridge = ResidualAcc::default();
    // deviations of the six hypotheses, reduced over points
    let mut dev_eigen = [0.0f64; 2]; // Sθ = ±θ
    let mut dev_delta_eigen = [0.0f64; 2]; // δ(Sθ) = ±δθ
    let mut dev_commute = 0.0f64;
    let mut dev_dtrace = 0.0f64;
    let mut dev_delta_s_theta = 0.0f64;
    let mut theta_scale = 0.0f64;
    let mut tr_p = 0.0;

    for p in &points {
        let ctx = PackCtx::new(pack, p, 3, false).expect("pack evaluation");
        let fp = ctx.fp.as_ref().unwrap();
        let th = &ctx.ftheta;
        let s_theta = &ctx.fs * th;
        let alpha_theta = &ctx.fs * (fp * th) - fp * &s_theta;
        let lhs = star_integrand(&ctx);
        let rhs = s_theta.dot(&alpha_theta);
        bridge.add((lhs - rhs).abs(), lhs.abs().max(rhs.abs()).max(th.norm_squared()));

        theta_scale = theta_scale.max(th.norm());
        for (k, eps) in [1.0f64, -1.0].iter().enumerate() {
            dev_eigen[k] = dev_eigen[k].max((&s_theta - th * *eps).amax());
        }
        let s_theta_jets = ctx.s_jets.mul_vec(&ctx.theta_sharp_jets);
        let delta_s_theta = -ctx.base.divergence(&s_theta_jets);
        let delta_theta = -ctx.base.divergence(&ctx.theta_sharp_jets);
        for (k, eps) in [1.0f64, -1.0].iter().enumerate() {
            dev_delta_eigen[k] = dev_delta_eigen[k].max((delta_s_theta - eps * delta_theta).abs());
        }
        dev_delta_s_theta = dev_delta_s_theta.max(delta_s_theta.abs());
        dev_commute = dev_commute.max((&ctx.fs * fp - fp * &ctx.fs).amax());
        let tr_sp_jet = ctx.s_jets.mul(ctx.p_jets.as_ref().unwrap()).trace();
        for i in 0..ctx.n {
            dev_dtrace =
                dev_dtrace.max(tr_sp_jet.partial_derivative(i).expect("order").value().abs());
        }
        tr_p = fp.trace();
    }

    let hold_tol = 1e-8 * (1.0 + theta_scale);
    let conditions = [
        ("i_theta_eigenform", dev_eigen[0].min(dev_eigen[1])),
        (
            "ii_codiff_eigen",
            dev_delta_eigen[0].min(dev_delta_eigen[1]),
        ),
        ("iii_sp_commute", dev_commute),
        ("iv_tr_sp_constant", dev_dtrace),
        ("v_delta_s_theta_zero", dev_delta_s_theta),
        ("vi_tr_p_zero", tr_p.abs()),
    ];
    let any_holds = conditions.iter().any(|&(_, dev)| dev <= hold_tol);

    let mut out = vec![bridge.finalize("star.bridge", params.tol_first_order)];
    for (name, dev) in conditions {
        out.push(ResidualReport {
            id: format!("star.cond_{name}"),
            points: points.len(),
            max_abs: dev,
            max_rel: dev / (1.0 + theta_scale),
            tol: hold_tol,
            pass: true,
            note: Some(
                if dev <= hold_tol {
                    "hypothesis holds on this pack"
                } else {
                    "hypothesis does not hold on this pack"
                }
                .to_string(),
            ),
        });
    }

    if !pack.chart.is_fully_periodic() {
        out.push(ResidualReport::not_applicable(
            "star.integral",
            "chart is not fully periodic",
        ));
        return out;
    }

    let nodes = grid_nodes.unwrap_or(16);
    let grid = match QuadratureGrid::uniform(pack.chart.clone(), nodes) {
        Ok(g) => g,
        Err(e) => {
            out.push(ResidualReport::not_applicable("star.integral", &e.to_string()));
            return out;
        }
    };
    let integral = grid.integrate_with_volume(&pack.g, |p| {
        let ctx = PackCtx::new(pack, p, 2, false).expect("pack evaluation");
        star_integrand(&ctx)
    });
    let abs_integral = grid.integrate_with_volume(&pack.g, |p| {
        let ctx = PackCtx::new(pack, p, 2, false).expect("pack evaluation");
        star_integrand(&ctx).abs()
    });
    let star_value = tr_p * integral;
    let scale = tr_p.abs() * abs_integral;
    let pass = if any_holds {
        star_value.abs() <= 1e-8 * (1.0 + scale)
    } else {
        true
    };
    out.push(ResidualReport {
        id: "star.integral".into(),
        points: grid.total_nodes(),
        max_abs: star_value.abs(),
        max_rel: star_value.abs() / (1.0 + scale),
        tol: 1e-8,
        pass,
        note: Some(format!(
            "tr(P)·∫⟨θ,Pθ−SPSθ⟩vol = {star_value:.3e}; hypotheses{} apply",
            if any_holds { "" } else { " do not" }
        )),
    });
    out
}

fn pointwise_integrand(pack: &StructurePack, p: &[f64]) -> Result<f64> {
    let ctx = PackCtx::new(pack, p, 1, false)?;
    let fp = ctx.fp.as_ref().expect("integral formula needs P");
    let (ap, am) = a_plus_minus(&ctx.fs, fp);
    let (tp, tm) = theta_split(&ctx.fs, &ctx.ftheta);
    Ok(ap * tp.norm_squared() + am * tm.norm_squared())
}

/// The vanishing integral, its pointwise integrand, the integrated trace
/// display, and the Stokes sanity sequences.
pub fn check_integral_formula(
    pack: &StructurePack,
    params: &SuiteParams,
    grids: &[usize],
) -> (Vec<ResidualReport>, Vec<IntegralReport>) {
    let mut reports = Vec::new();
    let mut tables = Vec::new();
    if pack.p.is_none() {
        reports.push(ResidualReport::not_applicable(
            "integral",
            "pack carries no metric-parallel involution P",
        ));
        return (reports, tables);
    }
    if !pack.chart.is_fully_periodic() {
        reports.push(ResidualReport::not_applicable(
            "integral",
            "chart is not fully periodic",
        ));
        return (reports, tables);
    }
    let grids: Vec<usize> = if grids.is_empty() {
        vec![8, 16, 32]
    } else {
        grids.to_vec()
    };
    let finest = *grids.last().unwrap();

    // pointwise integrand bound and the two vanishing integrals
    let grid = QuadratureGrid::uniform(pack.chart.clone(), finest).expect("torus grid");
    let vol = grid.volume_values(&pack.g);
    let max_integrand =
        grid.max_abs(|p| pointwise_integrand(pack, p).expect("pack evaluation"));
    let mut acc = ResidualAcc::default();
    acc.add(max_integrand, 1.0);
    reports.push(acc.finalize("integral.pointwise", 1e-10));

    let formula =
        grid.integrate_cached(&vol, |p| pointwise_integrand(pack, p).expect("pack evaluation"));
    let mut acc = ResidualAcc::default();
    acc.add(formula.abs(), 1.0);
    let mut rep = acc.finalize("integral.formula", 1e-10);
    rep.note = Some(format!("∫(A₊‖θ₊‖²+A₋‖θ₋‖²)vol = {formula:.3e}"));
    reports.push(rep);

    // the integrated display: ∫‖θ‖²(base)vol − 2∫⟨θ,Sθ⟩(n·trS − trP·trSP)vol
    let identity3 = grid.integrate_cached(&vol, |p| {
        let ctx = PackCtx::new(pack, p, 1, false).expect("pack evaluation");
        let fp = ctx.fp.as_ref().unwrap();
        let n = ctx.n as f64;
        let th = &ctx.ftheta;
        let sp = &ctx.fs * fp;
        let base = n * n + ctx.fs.trace().powi(2) - fp.trace().powi(2) - sp.trace().powi(2)
            + (&sp * &sp).trace()
            - n;
        th.norm_squared() * base
            - 2.0 * th.dot(&(&ctx.fs * th)) * (n * ctx.fs.trace() - fp.trace() * sp.trace())
    });
    let mut acc = ResidualAcc::default();
    acc.add(identity3.abs(), 1.0);
    let mut rep = acc.finalize("integral.identity3", 1e-8);
    rep.note = Some(format!("value = {identity3:.3e}"));
    reports.push(rep);

    // Stokes decay sequences for δ(β) and δ(df)
    let beta_values: Vec<GridValue> = grids
        .iter()
        .map(|&nodes| {
            let grid = QuadratureGrid::uniform(pack.chart.clone(), nodes).expect("torus grid");
            let value = grid.integrate_with_volume(&pack.g, |p| {
                let ctx = PackCtx::new(pack, p, 2, false).expect("pack evaluation");
                -ctx.base.divergence(&super::identities::beta_sharp_jets(&ctx))
            });
            GridValue { nodes, value }
        })
        .collect();
    let df_preset = crate::structures::TrigPreset::random(params.seed ^ 0x517c, pack.n(), 3, 0.7, 2);
    let df_values: Vec<GridValue> = grids
        .iter()
        .map(|&nodes| {
            let grid = QuadratureGrid::uniform(pack.chart.clone(), nodes).expect("torus grid");
            let value = grid.integrate_with_volume(&pack.g, |p| {
                let ctx = PackCtx::new(pack, p, 2, false).expect("pack evaluation");
                let xs = crate::jets::coordinate_jets(p, 2);
                let fj = df_preset.eval_jets(&xs);
                let df: Vec<crate::jets::Jet> = (0..ctx.n)
                    .map(|i| fj.partial_derivative(i).expect("order"))
                    .collect();
                ctx.base.codiff_oneform(&df)
            });
            GridValue { nodes, value }
        })
        .collect();

    for (id, series, tol_final) in [
        ("integral.stokes_beta", &beta_values, 1e-6),
        ("integral.stokes_df", &df_values, 1e-6),
    ] {
        let decay_floor = 1e-10;
        let mut decays = true;
        for w in series.windows(2) {
            let (coarse, fine) = (w[0].value.abs(), w[1].value.abs());
            if fine > coarse / 4.0 && fine > decay_floor {
                decays = false;
            }
        }
        let final_value = series.last().unwrap().value.abs();
        let pass = decays && final_value <= tol_final;
        reports.push(ResidualReport {
            id: id.to_string(),
            points: series.iter().map(|g| g.nodes.pow(pack.n() as u32)).sum(),
            max_abs: final_value,
            max_rel: final_value,
            tol: tol_final,
            pass,
            note: Some(
                series
                    .iter()
                    .map(|g| format!("{}/axis: {:.3e}", g.nodes, g.value))
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
        });
        let extrapolated = if series.len() >= 2 {
            let last = series[series.len() - 1].value;
            let prev = series[series.len() - 2].value;
            last + (last - prev) / 3.0
        } else {
            series[0].value
        };
        tables.push(IntegralReport {
            id: id.to_string(),
            grids: series.clone(),
            extrapolated,
        });
    }

    (reports, tables)
}

/// Direction-independence helper for tests: value of `⟨θ,Pθ−SPSθ⟩` at `p`.
pub fn star_integrand_at(pack: &StructurePack, p: &[f64]) -> f64 {
    let ctx = PackCtx::new(pack, p, 1, false).expect("pack evaluation");
    star_integrand(&ctx)
}
