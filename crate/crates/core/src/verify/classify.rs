//! The tensorial triple-product criterion: (i) `SP = PS` and (ii)
//! `E_ε(S) ⊆ E_ε'(P)` for some signs. Both are measured pointwise; the
//! inclusion through the projector product `‖(I−ε'P)(I+εS)/4‖`, which
//! vanishes exactly when the `+ε` eigenspace of `S` sits inside the `ε'`
//! eigenspace of `P`.

use nalgebra::DMatrix;

use crate::structures::{PackKind, StructurePack};

use super::{sample_points, PackCtx, ResidualReport, SuiteParams};

#[derive(Clone, Debug)]
pub struct ClassifyReport {
    /// Max over points of `‖SP − PS‖`.
    pub commute_dev: f64,
    pub commute_holds: bool,
    /// Best sign pair `(ε, ε')` and its inclusion deviation.
    pub inclusion: Option<(i8, i8, f64)>,
    pub inclusion_holds: bool,
    pub verdict: String,
    pub report: ResidualReport,
}

pub fn classify_structure(pack: &StructurePack, params: &SuiteParams) -> ClassifyReport {
    let Some(_) = &pack.p else {
        let report = ResidualReport::not_applicable(
            "classify",
            "pack carries no metric-parallel involution P",
        );
        return ClassifyReport {
            commute_dev: f64::NAN,
            commute_holds: false,
            inclusion: None,
            inclusion_holds: false,
            verdict: "not applicable".into(),
            report,
        };
    };
    let mut rng = params.rng("classify");
    let points = sample_points(&pack.chart, params.points, &mut rng);

    let mut commute_dev = 0.0f64;
    let mut incl_dev = [[0.0f64; 2]; 2];
    for p in &points {
        let ctx = PackCtx::new(pack, p, 1, false).expect("pack evaluation");
        let fs = &ctx.fs;
        let fp = ctx.fp.as_ref().unwrap();
        commute_dev = commute_dev.max((fs * fp - fp * fs).amax());
        let id = DMatrix::<f64>::identity(ctx.n, ctx.n);
        for (a, eps) in [1.0f64, -1.0].iter().enumerate() {
            for (b, eps_p) in [1.0f64, -1.0].iter().enumerate() {
                let proj = (&id - fp * *eps_p) * (&id + fs * *eps) * 0.25;
                incl_dev[a][b] = incl_dev[a][b].max(proj.amax());
            }
        }
    }

    let commute_holds = commute_dev <= 1e-8;
    let signs = [1i8, -1];
    let mut best: Option<(i8, i8, f64)> = None;
    for a in 0..2 {
        for b in 0..2 {
            let dev = incl_dev[a][b];
            if best.map_or(true, |(_, _, d)| dev < d) {
                best = Some((signs[a], signs[b], dev));
            }
        }
    }
    let inclusion_holds = best.map_or(false, |(_, _, d)| d <= 1e-8);

    let satisfied = commute_holds && inclusion_holds;
    let verdict = if satisfied {
        "triple-product criterion satisfied".to_string()
    } else {
        format!(
            "triple-product criterion violated (‖SP−PS‖ = {commute_dev:.3e}, best inclusion deviation {:.3e})",
            best.map_or(f64::NAN, |(_, _, d)| d)
        )
    };

    // the classification is correct when it matches the construction
    let expected_satisfied = match pack.kind {
        PackKind::TripleProduct => true,
        PackKind::FlatCone => false,
        PackKind::RescaledProduct => true,
    };
    let mut pass = satisfied == expected_satisfied;
    if pack.kind == PackKind::FlatCone {
        // the cone must violate (i) macroscopically at generic points
        pass = pass && commute_dev > 0.1;
    }

    let report = ResidualReport {
        id: "classify".into(),
        points: points.len(),
        max_abs: commute_dev,
        max_rel: best.map_or(f64::NAN, |(_, _, d)| d),
        tol: 1e-8,
        pass,
        note: Some(verdict.clone()),
    };
    ClassifyReport {
        commute_dev,
        commute_holds,
        inclusion: best,
        inclusion_holds,
        verdict,
        report,
    }
}
