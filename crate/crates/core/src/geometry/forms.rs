//! Exterior forms of degree ≤ 3 on a chart, stored on strictly increasing
//! index tuples. Degree 3 exists only because `dα = −α∧θ` is a 3-form.
//!
//! Conventions: for 1-forms `(a∧b)(X,Y) = a(X)b(Y) − a(Y)b(X)` (no ½), the
//! coordinate exterior derivative is the alternating sum of partials, and
//! the interior product contracts the first slot.

use std::sync::Arc;

use nalgebra::DVector;

use crate::jets::{coordinate_jets, Jet};
use crate::{Error, Result};

use super::{Chart, JetPoint};

/// Strictly increasing index tuples of length `k` out of `n`, in
/// lexicographic order.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

fn tuple_rank(n: usize, tuple: &[usize]) -> usize {
    // lexicographic rank in the increasing-tuple enumeration
    let mut rank = 0usize;
    let mut prev = 0usize;
    let k = tuple.len();
    for (pos, &t) in tuple.iter().enumerate() {
        for skipped in prev..t {
            rank += binom(n - skipped - 1, k - pos - 1);
        }
        prev = t + 1;
    }
    rank
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Sorts indices, returning the permutation sign, or `None` on repetition.
fn sort_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in idx.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some(sign)
}

/// Value of a `k`-form at a point: antisymmetric coefficients on increasing
/// tuples in the coordinate frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FormValue {
    pub n: usize,
    pub degree: usize,
    pub comps: Vec<f64>,
}

impl FormValue {
    pub fn zeros(n: usize, degree: usize) -> FormValue {
        FormValue {
            n,
            degree,
            comps: vec![0.0; binom(n, degree)],
        }
    }

    /// Full antisymmetric component, arbitrary index order.
    pub fn comp(&self, indices: &[usize]) -> f64 {
        debug_assert_eq!(indices.len(), self.degree);
        let mut idx = indices.to_vec();
        match sort_sign(&mut idx) {
            None => 0.0,
            Some(sign) => sign * self.comps[tuple_rank(self.n, &idx)],
        }
    }

    pub fn amax(&self) -> f64 {
        self.comps.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn sub(&self, o: &FormValue) -> FormValue {
        FormValue {
            n: self.n,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// A `k`-form field (`k ≤ 3`): closure from coordinate jets to component
/// jets on increasing tuples.
#[derive(Clone)]
pub struct KForm {
    chart: Arc<Chart>,
    degree: usize,
    f: Arc<dyn Fn(&JetPoint) -> Vec<Jet> + Send + Sync>,
}

impl KForm {
    pub fn new(
        chart: Arc<Chart>,
        degree: usize,
        f: impl Fn(&JetPoint) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Result<KForm> {
        if degree > 3 {
            return Err(Error::InvalidChart(format!(
                "form degree {degree} > 3 is not supported"
            )));
        }
        Ok(KForm {
            chart,
            degree,
            f: Arc::new(f),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn eval_jets(&self, xs: &JetPoint) -> Vec<Jet> {
        (self.f)(xs)
    }

    pub fn eval(&self, p: &[f64], order: usize) -> FormValue {
        let xs = coordinate_jets(p, order);
        let comps = (self.f)(&xs).iter().map(Jet::value).collect();
        FormValue {
            n: self.chart.dim(),
            degree: self.degree,
            comps,
        }
    }

    /// Field-level exterior derivative; component jets lose one order.
    pub fn exterior_derivative(&self) -> Result<KForm> {
        if self.degree >= 3 {
            return Err(Error::InvalidChart(
                "exterior derivative of a 3-form is outside the supported range".into(),
            ));
        }
        let n = self.chart.dim();
        let k = self.degree;
        let inner = Arc::clone(&self.f);
        let sources = increasing_tuples(n, k);
        let targets = increasing_tuples(n, k + 1);
        KForm::new(Arc::clone(&self.chart), k + 1, move |xs| {
            let comps = inner(xs);
            targets
                .iter()
                .map(|j_tuple| {
                    let mut acc: Option<Jet> = None;
                    for (a, &axis) in j_tuple.iter().enumerate() {
                        let rest: Vec<usize> = j_tuple
                            .iter()
                            .enumerate()
                            .filter(|&(b, _)| b != a)
                            .map(|(_, &i)| i)
                            .collect();
                        let rank = sources
                            .iter()
                            .position(|t| t == &rest)
                            .expect("increasing tuple");
                        let term = comps[rank]
                            .partial_derivative(axis)
                            .expect("insufficient jet order for exterior derivative")
                            .scale(if a % 2 == 0 { 1.0 } else { -1.0 });
                        acc = Some(match acc {
                            None => term,
                            Some(s) => s.add_t(&term),
                        });
                    }
                    acc.expect("degree ≥ 0")
                })
                .collect()
        })
    }
}

/// Coordinate exterior derivative evaluated at a point.
pub fn exterior_d(form: &KForm, p: &[f64], order: usize) -> Result<FormValue> {
    if order == 0 {
        return Err(Error::InsufficientOrder);
    }
    Ok(form.exterior_derivative()?.eval(p, order))
}

/// Interior product `X ⌟ ω`: contraction in the first slot.
pub fn interior_product(x: &DVector<f64>, omega: &FormValue) -> FormValue {
    assert!(omega.degree >= 1, "interior product needs degree ≥ 1");
    let n = omega.n;
    let k = omega.degree;
    let targets = increasing_tuples(n, k - 1);
    let comps = targets
        .iter()
        .map(|rest| {
            let mut acc = 0.0;
            for i in 0..n {
                let mut idx = Vec::with_capacity(k);
                idx.push(i);
                idx.extend_from_slice(rest);
                acc += x[i] * omega.comp(&idx);
            }
            acc
        })
        .collect();
    FormValue {
        n,
        degree: k - 1,
        comps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;
    use crate::jets::Jet;
    use rand::{Rng, SeedableRng};

    fn torus3() -> Arc<Chart> {
        Chart::torus(3).unwrap()
    }

    #[test]
    fn tuple_rank_is_consistent() {
        for n in 2..=8 {
            for k in 1..=3.min(n) {
                for (r, t) in increasing_tuples(n, k).iter().enumerate() {
                    assert_eq!(tuple_rank(n, t), r, "n={n} k={k} t={t:?}");
                }
            }
        }
    }

    #[test]
    fn d_of_x_dy_is_dx_dy() {
        let chart = torus3();
        let form = KForm::new(chart, 1, |xs| {
            let zero = Jet::constant(0.0, 3, xs[0].order());
            vec![zero.clone(), xs[0].clone(), zero]
        })
        .unwrap();
        let d = exterior_d(&form, &[0.3, 0.8, 1.1], 2).unwrap();
        // components on (01), (02), (12)
        assert!((d.comps[0] - 1.0).abs() < 1e-15);
        assert!(d.comps[1].abs() < 1e-15);
        assert!(d.comps[2].abs() < 1e-15);
    }

    #[test]
    fn d_squared_vanishes_on_scalars_and_one_forms() {
        let chart = torus3();
        let f = KForm::new(chart.clone(), 0, |xs| {
            vec![xs[0].sin().mul_t(&xs[1].cos()).add_t(&xs[2].sin().scale(0.4))]
        })
        .unwrap();
        let ddf = f.exterior_derivative().unwrap().exterior_derivative().unwrap();
        let omega = KForm::new(chart.clone(), 1, |xs| {
            vec![
                xs[1].sin().mul_t(&xs[2].cos()),
                xs[0].cos().scale(0.7),
                xs[0].mul_t(&xs[1]).sin(),
            ]
        })
        .unwrap();
        let ddw = omega
            .exterior_derivative()
            .unwrap()
            .exterior_derivative()
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let p = chart.sample_point(&mut rng);
            assert!(ddf.eval(&p, 3).amax() <= 1e-9);
            assert!(ddw.eval(&p, 3).amax() <= 1e-9);
        }
    }

    #[test]
    fn d_matches_finite_difference_curl() {
        // d of a 2-form on T³ vs central differences of its components.
        let chart = torus3();
        let omega = KForm::new(chart, 2, |xs| {
            vec![
                xs[2].sin().scale(0.5),            // ω_{01}
                xs[0].cos().mul_t(&xs[1].sin()),   // ω_{02}
                xs[1].mul_t(&xs[2]).cos(),         // ω_{12}
            ]
        })
        .unwrap();
        let p = [0.4, 1.2, 2.0];
        let d = exterior_d(&omega, &p, 2).unwrap();
        let h = 1e-5;
        let comp = |p: &[f64], which: usize| omega.eval(p, 0).comps[which];
        let pd = |which: usize, axis: usize| {
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[axis] += h;
            lo[axis] -= h;
            (comp(&hi, which) - comp(&lo, which)) / (2.0 * h)
        };
        // (dω)_{012} = ∂0 ω_{12} − ∂1 ω_{02} + ∂2 ω_{01}
        let want = pd(2, 0) - pd(1, 1) + pd(0, 2);
        assert!((d.comps[0] - want).abs() <= 1e-6 * (1.0 + want.abs()));
    }

    #[test]
    fn interior_product_examples() {
        // e₁ ⌟ (e₁∧e₂) = e₂ in the Euclidean pairing.
        let mut w = FormValue::zeros(3, 2);
        w.comps[0] = 1.0; // (e₁∧e₂)_{01} with zero-based axes 0,1
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let got = interior_product(&e1, &w);
        assert_eq!(got.comps, vec![0.0, 1.0, 0.0]);

        // X ⌟ X♭ = ‖X‖² (Euclidean flat)
        let x = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let xflat = FormValue {
            n: 3,
            degree: 1,
            comps: x.iter().copied().collect(),
        };
        let got = interior_product(&x, &xflat);
        assert!((got.comps[0] - 6.0).abs() < 1e-15);
    }

    #[test]
    fn interior_product_of_wedge_expands() {
        // X⌟(A♭∧B♭) = ⟨X,A⟩B♭ − ⟨X,B⟩A♭ with Euclidean g.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6usize);
            let a = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            let mut w = FormValue::zeros(n, 2);
            for (r, t) in increasing_tuples(n, 2).iter().enumerate() {
                w.comps[r] = a[t[0]] * b[t[1]] - a[t[1]] * b[t[0]];
            }
            let got = interior_product(&x, &w);
            let want = &b * x.dot(&a) - &a * x.dot(&b);
            for i in 0..n {
                assert!((got.comps[i] - want[i]).abs() <= 1e-13);
            }
        }
    }
}
