//! Named trigonometric function families with coefficient lists: the
//! reproducible, text-serializable presets behind every warping function,
//! rescaling exponent, and metric perturbation. Integer frequencies keep
//! everything periodic on the `2π`-torus by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::jets::matrix::JetMat;
use crate::jets::Jet;
use crate::{Error, Result};

/// One term `amp · cos(Σ kᵢ xᵢ + phase)`; `freqs[i]` pairs with the i-th
/// coordinate jet handed to the evaluator.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrigTerm {
    pub amp: f64,
    pub freqs: Vec<i32>,
    pub phase: f64,
}

/// A sum of cosine terms; reads only the first `naxes()` coordinates, which
/// is how "no dependence on the remaining factors" is enforced structurally.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct TrigPreset {
    pub terms: Vec<TrigTerm>,
}

impl TrigPreset {
    pub fn zero() -> TrigPreset {
        TrigPreset { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amp == 0.0)
    }

    pub fn naxes(&self) -> usize {
        self.terms.iter().map(|t| t.freqs.len()).max().unwrap_or(0)
    }

    pub fn total_amplitude(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.abs()).sum()
    }

    /// Seeded random preset on `naxes` coordinates with `Σ|amp| = total_amp`
    /// and integer frequencies in `1..=max_freq` on at least one axis per
    /// term.
    pub fn random(
        seed: u64,
        naxes: usize,
        nterms: usize,
        total_amp: f64,
        max_freq: i32,
    ) -> TrigPreset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let mut freqs = vec![0i32; naxes];
            loop {
                for f in freqs.iter_mut() {
                    *f = rng.gen_range(-max_freq..=max_freq);
                }
                if freqs.iter().any(|&f| f != 0) {
                    break;
                }
            }
            terms.push(TrigTerm {
                amp: rng.gen_range(0.3..1.0),
                freqs,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            });
        }
        let norm: f64 = terms.iter().map(|t| t.amp.abs()).sum();
        for t in terms.iter_mut() {
            t.amp *= total_amp / norm;
        }
        TrigPreset { terms }
    }

    /// Evaluates on the supplied coordinate jets (at least `naxes` of them).
    pub fn eval_jets(&self, xs: &[Jet]) -> Jet {
        assert!(
            xs.len() >= self.naxes(),
            "preset reads {} axes but only {} jets were supplied",
            self.naxes(),
            xs.len()
        );
        let (dim, order) = (xs[0].dim(), xs[0].order());
        let mut acc = Jet::constant(0.0, dim, order);
        for t in &self.terms {
            let mut arg = Jet::constant(t.phase, dim, order);
            for (i, &k) in t.freqs.iter().enumerate() {
                if k != 0 {
                    arg = arg.add_t(&xs[i].scale(k as f64));
                }
            }
            acc = acc.add_t(&arg.cos().scale(t.amp));
        }
        acc
    }
}

/// A metric block `I_d + Σ amp·cos(k·x + φ)·v vᵀ` with unit directions `v`
/// and `Σ|amp| ≤ 0.3`, so symmetric positive definiteness is guaranteed
/// while avoiding accidental extra symmetry.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricPreset {
    pub dim: usize,
    pub terms: Vec<MetricTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricTerm {
    pub amp: f64,
    pub freqs: Vec<i32>,
    pub phase: f64,
    pub dir: Vec<f64>,
}

impl MetricPreset {
    pub fn identity(dim: usize) -> MetricPreset {
        MetricPreset {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn random(seed: u64, dim: usize, nterms: usize, total_amp: f64) -> MetricPreset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let mut freqs = vec![0i32; dim];
            loop {
                for f in freqs.iter_mut() {
                    *f = rng.gen_range(-2..=2i32);
                }
                if freqs.iter().any(|&f| f != 0) {
                    break;
                }
            }
            let mut dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                dir[0] = 1.0;
            } else {
                for x in dir.iter_mut() {
                    *x /= norm;
                }
            }
            terms.push(MetricTerm {
                amp: rng.gen_range(0.3..1.0),
                freqs,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                dir,
            });
        }
        let norm: f64 = terms.iter().map(|t| t.amp.abs()).sum();
        if norm > 0.0 {
            for t in terms.iter_mut() {
                t.amp *= total_amp / norm;
            }
        }
        MetricPreset { dim, terms }
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.terms.iter().map(|t| t.amp.abs()).sum();
        if total > 0.3 + 1e-12 {
            return Err(Error::InvalidBuilder(format!(
                "metric perturbation amplitude {total:.3} exceeds the SPD-safe bound 0.3"
            )));
        }
        for t in &self.terms {
            if t.dir.len() != self.dim || t.freqs.len() != self.dim {
                return Err(Error::InvalidBuilder(
                    "metric preset term has inconsistent dimension".into(),
                ));
            }
        }
        Ok(())
    }

    /// Evaluates on the block's own coordinate jets (length `dim`).
    pub fn eval_jets(&self, xs: &[Jet]) -> JetMat {
        assert_eq!(xs.len(), self.dim, "metric block coordinate count");
        let (dim, order) = if self.dim > 0 {
            (xs[0].dim(), xs[0].order())
        } else {
            (1, 0)
        };
        let mut m = JetMat::identity(self.dim, dim, order);
        for t in &self.terms {
            let mut arg = Jet::constant(t.phase, dim, order);
            for (i, &k) in t.freqs.iter().enumerate() {
                if k != 0 {
                    arg = arg.add_t(&xs[i].scale(k as f64));
                }
            }
            let wave = arg.cos().scale(t.amp);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let vv = t.dir[i] * t.dir[j];
                    if vv != 0.0 {
                        m.set(i, j, m.get(i, j).add_t(&wave.scale(vv)));
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::coordinate_jets;
    use nalgebra::Cholesky;

    #[test]
    fn preset_is_periodic_on_the_torus() {
        let f = TrigPreset::random(3, 2, 4, 0.5, 3);
        let tau = std::f64::consts::TAU;
        let a = f.eval_jets(&coordinate_jets(&[0.3, 1.1], 2)).value();
        let b = f
            .eval_jets(&coordinate_jets(&[0.3 + tau, 1.1 - tau], 2))
            .value();
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn metric_preset_stays_spd() {
        let m = MetricPreset::random(9, 3, 5, 0.3);
        m.validate().unwrap();
        for k in 0..50 {
            let p = [0.13 * k as f64, 0.41 * k as f64, 1.7 + 0.09 * k as f64];
            let g = m.eval_jets(&coordinate_jets(&p, 0)).value();
            assert!(Cholesky::new(g).is_some(), "lost SPD at {p:?}");
        }
    }

    #[test]
    fn amplitude_bound_is_enforced() {
        let mut m = MetricPreset::random(5, 2, 3, 0.3);
        m.terms[0].amp = 0.4;
        assert!(m.validate().is_err());
    }
}
