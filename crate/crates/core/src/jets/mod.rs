//! Forward-mode truncated Taylor arithmetic (jets) in up to 8 variables,
//! truncation order ≤ 3.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar function at a point:
//! the coefficient of a [`MultiIndex`] `m` is `∂^m f / m!`. Order 3 is the
//! fixed ceiling because the scalar identity needs third derivatives of the
//! chart functions (the codifferential of a 1-form built from first
//! derivatives of the metric applied to first derivatives of the warping
//! function). Storage is dense over the `C(n+3,3)` monomial basis.
//!
//! Jets are immutable values and all operations are pure, so evaluation at
//! distinct points can proceed concurrently without coordination.

pub mod matrix;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 8;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 3;

/// Exponent vector of a monomial / mixed partial derivative.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex {
    exps: Vec<u8>,
}

impl MultiIndex {
    pub fn new(exps: &[usize]) -> Self {
        Self {
            exps: exps.iter().map(|&e| e as u8).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { exps: vec![0; dim] }
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut exps = vec![0u8; dim];
        exps[axis] = 1;
        Self { exps }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    /// Total order: the sum of the exponents.
    pub fn order(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    pub fn exponent(&self, axis: usize) -> usize {
        self.exps[axis] as usize
    }

    /// `∏ kᵢ!` — converts a Taylor coefficient into a partial derivative.
    pub fn factorial(&self) -> f64 {
        self.exps
            .iter()
            .map(|&e| match e {
                0 | 1 => 1.0,
                2 => 2.0,
                3 => 6.0,
                _ => (1..=e as u64).product::<u64>() as f64,
            })
            .product()
    }

    fn sum(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Shared per-dimension monomial tables: graded enumeration of all monomials
/// of order ≤ 3, the Cauchy-product pair lists, and the derivative shifts.
pub(crate) struct Basis {
    dim: usize,
    #[cfg_attr(not(test), allow(dead_code))]
    indices: Vec<MultiIndex>,
    /// `prefix_len[k]` = number of monomials of order ≤ k.
    prefix_len: [usize; MAX_ORDER + 1],
    lookup: HashMap<Vec<u8>, usize>,
    /// For each target monomial `t`: ordered pairs `(i, j)` with `mᵢ + mⱼ = m_t`.
    by_target: Vec<Vec<(u32, u32)>>,
    /// `deriv[axis][t]` = (source index, factor): coefficient of `m_t` in
    /// `∂_axis` is `factor · c[source]`.
    deriv: Vec<Vec<(u32, f64)>>,
}

fn enumerate_grade(dim: usize, grade: usize, out: &mut Vec<MultiIndex>) {
    fn rec(exps: &mut Vec<u8>, axis: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
        if axis == exps.len() - 1 {
            exps[axis] = remaining as u8;
            out.push(MultiIndex { exps: exps.clone() });
            return;
        }
        for e in (0..=remaining).rev() {
            exps[axis] = e as u8;
            rec(exps, axis + 1, remaining - e, out);
        }
    }
    let mut exps = vec![0u8; dim];
    rec(&mut exps, 0, grade, out);
}

impl Basis {
    fn build(dim: usize) -> Basis {
        let mut indices = Vec::new();
        let mut prefix_len = [0usize; MAX_ORDER + 1];
        for grade in 0..=MAX_ORDER {
            enumerate_grade(dim, grade, &mut indices);
            prefix_len[grade] = indices.len();
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.exps.clone(), i))
            .collect();
        let total = indices.len();
        let mut by_target = vec![Vec::new(); total];
        for (i, mi) in indices.iter().enumerate() {
            for (j, mj) in indices.iter().enumerate() {
                if mi.order() + mj.order() <= MAX_ORDER {
                    let t = lookup[&mi.sum(mj).exps];
                    by_target[t].push((i as u32, j as u32));
                }
            }
        }
        let mut deriv = Vec::with_capacity(dim);
        for axis in 0..dim {
            let mut shifts = Vec::with_capacity(prefix_len[MAX_ORDER - 1]);
            for m in &indices[..prefix_len[MAX_ORDER - 1]] {
                let src = lookup[&m.sum(&MultiIndex::unit(dim, axis)).exps];
                shifts.push((src as u32, (m.exponent(axis) + 1) as f64));
            }
            deriv.push(shifts);
        }
        Basis {
            dim,
            indices,
            prefix_len,
            lookup,
            by_target,
            deriv,
        }
    }

    fn len_at(&self, order: usize) -> usize {
        self.prefix_len[order]
    }
}

static BASES: OnceLock<Mutex<HashMap<usize, Arc<Basis>>>> = OnceLock::new();

fn basis(dim: usize) -> Result<Arc<Basis>> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::DimTooLarge(dim));
    }
    let cache = BASES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("jet basis cache poisoned");
    Ok(Arc::clone(
        map.entry(dim).or_insert_with(|| Arc::new(Basis::build(dim))),
    ))
}

/// Truncated multivariate Taylor expansion of a scalar at a point.
///
/// The coefficient of the zero multi-index is the point value; the stored
/// coefficients are Taylor coefficients (partial derivative divided by the
/// factorial of the multi-index).
#[derive(Clone)]
pub struct Jet {
    basis: Arc<Basis>,
    order: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.basis.dim)
            .field("order", &self.order)
            .field("coeffs", &self.c)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.basis.dim == other.basis.dim && self.order == other.order && self.c == other.c
    }
}

impl Jet {
    fn raw(basis: Arc<Basis>, order: usize) -> Jet {
        let len = basis.len_at(order);
        Jet {
            basis,
            order,
            c: vec![0.0; len],
        }
    }

    /// Jet of the constant function `value`.
    pub fn constant(value: f64, dim: usize, order: usize) -> Jet {
        Self::try_constant(value, dim, order).expect("invalid jet dimension/order")
    }

    pub fn try_constant(value: f64, dim: usize, order: usize) -> Result<Jet> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooLarge(order));
        }
        let mut j = Jet::raw(basis(dim)?, order);
        j.c[0] = value;
        Ok(j)
    }

    /// Jet of the coordinate function `x_axis` at the point: constant term
    /// `value`, first-order coefficient 1 on the given axis.
    pub fn variable(axis: usize, value: f64, dim: usize, order: usize) -> Jet {
        Self::try_variable(axis, value, dim, order).expect("invalid jet variable")
    }

    pub fn try_variable(axis: usize, value: f64, dim: usize, order: usize) -> Result<Jet> {
        if axis >= dim {
            return Err(Error::AxisOutOfRange { axis, dim });
        }
        let mut j = Jet::try_constant(value, dim, order)?;
        if order >= 1 {
            j.c[1 + axis] = 1.0;
        }
        Ok(j)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The point value (coefficient of the zero multi-index).
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of `m` (zero if `m` exceeds the truncation order).
    pub fn coeff(&self, m: &MultiIndex) -> f64 {
        assert_eq!(m.dim(), self.dim(), "multi-index dimension mismatch");
        match self.basis.lookup.get(&m.exps) {
            Some(&i) if i < self.c.len() => self.c[i],
            _ => 0.0,
        }
    }

    /// The partial derivative `∂^m` at the point: coefficient times `m!`.
    pub fn extract_partial(&self, m: &MultiIndex) -> Result<f64> {
        if m.dim() != self.dim() {
            return Err(Error::DimMismatch(m.dim(), self.dim()));
        }
        if m.order() > self.order {
            return Err(Error::OrderExceedsTruncation {
                requested: m.order(),
                order: self.order,
            });
        }
        Ok(self.coeff(m) * m.factorial())
    }

    /// Truncates to a (lower or equal) order.
    pub fn truncated(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        let len = self.basis.len_at(order);
        Jet {
            basis: Arc::clone(&self.basis),
            order,
            c: self.c[..len].to_vec(),
        }
    }

    /// The jet of `∂_axis self`, one order lower.
    pub fn partial_derivative(&self, axis: usize) -> Result<Jet> {
        if axis >= self.dim() {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim(),
            });
        }
        if self.order == 0 {
            return Err(Error::InsufficientOrder);
        }
        let mut out = Jet::raw(Arc::clone(&self.basis), self.order - 1);
        for (t, &(src, factor)) in self.basis.deriv[axis][..out.c.len()].iter().enumerate() {
            out.c[t] = factor * self.c[src as usize];
        }
        Ok(out)
    }

    fn check_compat(&self, other: &Jet) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        if self.order != other.order {
            return Err(Error::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a -= b;
        }
        Ok(out)
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        let mut out = Jet::raw(Arc::clone(&self.basis), self.order);
        let len = out.c.len();
        for (t, pairs) in self.basis.by_target[..len].iter().enumerate() {
            let mut acc = 0.0;
            for &(i, j) in pairs {
                let (i, j) = (i as usize, j as usize);
                if i < len && j < len {
                    acc += self.c[i] * other.c[j];
                }
            }
            out.c[t] = acc;
        }
        Ok(out)
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        let b0 = other.value();
        if b0 == 0.0 {
            return Err(Error::DivisionByZeroJet);
        }
        // 1/b = (1/b0)(1 − u + u² − u³) with u = (b − b0)/b0 nilpotent.
        let mut u = other.scale(1.0 / b0);
        u.c[0] = 0.0;
        let mut inv = Jet::constant(1.0, self.dim(), self.order);
        let mut upow = Jet::constant(1.0, self.dim(), self.order);
        let mut sign = -1.0;
        for _ in 1..=self.order {
            upow = upow.try_mul(&u)?;
            inv = inv.try_add(&upow.scale(sign))?;
            sign = -sign;
        }
        self.try_mul(&inv.scale(1.0 / b0))
    }

    pub fn scale(&self, k: f64) -> Jet {
        let mut out = self.clone();
        for c in &mut out.c {
            *c *= k;
        }
        out
    }

    pub fn add_scalar(&self, k: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += k;
        out
    }

    /// Binary ops that truncate both operands to the smaller order first.
    /// Field component closures naturally produce mixed orders (a derivative
    /// component sits one order below its parent), so the internal tensor
    /// calculus uses these.
    pub fn add_t(&self, other: &Jet) -> Jet {
        let k = self.order.min(other.order);
        self.truncated(k)
            .try_add(&other.truncated(k))
            .expect("add_t")
    }

    pub fn sub_t(&self, other: &Jet) -> Jet {
        let k = self.order.min(other.order);
        self.truncated(k)
            .try_sub(&other.truncated(k))
            .expect("sub_t")
    }

    pub fn mul_t(&self, other: &Jet) -> Jet {
        let k = self.order.min(other.order);
        self.truncated(k)
            .try_mul(&other.truncated(k))
            .expect("mul_t")
    }

    pub fn div_t(&self, other: &Jet) -> Jet {
        let k = self.order.min(other.order);
        self.truncated(k)
            .try_div(&other.truncated(k))
            .expect("div_t: division by jet with zero constant term")
    }

    /// Composition with a univariate function given its derivatives at the
    /// constant term: `derivs = [f(a₀), f'(a₀), f''(a₀), f'''(a₀)]`.
    fn compose(&self, derivs: [f64; 4]) -> Jet {
        let mut bar = self.clone();
        bar.c[0] = 0.0;
        let mut out = Jet::constant(derivs[0], self.dim(), self.order);
        let mut pow = Jet::constant(1.0, self.dim(), self.order);
        let mut fact = 1.0;
        for k in 1..=self.order {
            pow = pow.try_mul(&bar).expect("compose");
            fact *= k as f64;
            out = out.try_add(&pow.scale(derivs[k] / fact)).expect("compose");
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    pub fn try_ln(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 {
            return Err(Error::Domain {
                func: "ln",
                value: a,
            });
        }
        Ok(self.compose([a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a)]))
    }

    pub fn ln(&self) -> Jet {
        self.try_ln().expect("ln of non-positive jet")
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn try_sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 {
            return Err(Error::Domain {
                func: "sqrt",
                value: a,
            });
        }
        let r = a.sqrt();
        Ok(self.compose([r, 0.5 / r, -0.25 / (r * a), 0.375 / (r * a * a)]))
    }

    pub fn sqrt(&self) -> Jet {
        self.try_sqrt().expect("sqrt of non-positive jet")
    }

    pub fn try_powf(&self, r: f64) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 {
            return Err(Error::Domain {
                func: "powf",
                value: a,
            });
        }
        Ok(self.compose([
            a.powf(r),
            r * a.powf(r - 1.0),
            r * (r - 1.0) * a.powf(r - 2.0),
            r * (r - 1.0) * (r - 2.0) * a.powf(r - 3.0),
        ]))
    }

    pub fn powf(&self, r: f64) -> Jet {
        self.try_powf(r).expect("powf of non-positive jet")
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$try(rhs).expect(concat!("jet ", stringify!($method)))
            }
        }
        impl $trait for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, try_add);
impl_binop!(Sub, sub, try_sub);
impl_binop!(Mul, mul, try_mul);
impl_binop!(Div, div, try_div);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// The coordinate functions of a chart as jets at `p`, the entry point for
/// evaluating any field closure.
pub fn coordinate_jets(p: &[f64], order: usize) -> Vec<Jet> {
    (0..p.len())
        .map(|i| Jet::variable(i, p[i], p.len(), order))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{central_diff, rel_err};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    #[test]
    fn variable_jet_coefficients() {
        let j = Jet::variable(0, 2.0, 2, 3);
        assert_eq!(j.coeff(&MultiIndex::new(&[0, 0])), 2.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[1, 0])), 1.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[0, 1])), 0.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[2, 0])), 0.0);
    }

    #[test]
    fn product_of_two_variables() {
        let a = 1.3;
        let b = -0.7;
        let j = Jet::variable(0, a, 2, 3) * Jet::variable(1, b, 2, 3);
        assert_eq!(j.value(), a * b);
        assert_eq!(j.coeff(&MultiIndex::new(&[1, 1])), 1.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[1, 0])), b);
        assert_eq!(j.coeff(&MultiIndex::new(&[0, 1])), a);
    }

    #[test]
    fn exp_taylor_series_at_zero() {
        let j = Jet::variable(0, 0.0, 1, 3).exp();
        assert!((j.coeff(&MultiIndex::new(&[0])) - 1.0).abs() < 1e-15);
        assert!((j.coeff(&MultiIndex::new(&[1])) - 1.0).abs() < 1e-15);
        assert!((j.coeff(&MultiIndex::new(&[2])) - 0.5).abs() < 1e-15);
        assert!((j.coeff(&MultiIndex::new(&[3])) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn one_plus_x_times_one_minus_x() {
        let x = Jet::variable(0, 0.0, 1, 2);
        let j = x.add_scalar(1.0) * (-&x).add_scalar(1.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[0])), 1.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[1])), 0.0);
        assert_eq!(j.coeff(&MultiIndex::new(&[2])), -1.0);
    }

    fn random_jet(rng: &mut impl Rng, dim: usize, order: usize) -> Jet {
        let mut j = Jet::constant(0.0, dim, order);
        for c in &mut j.c {
            *c = rng.gen_range(-2.0..2.0);
        }
        j
    }

    #[test]
    fn f_over_f_is_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut f = random_jet(&mut rng, 3, 3);
            f.c[0] = rng.gen_range(0.5..2.0);
            let q = f.try_div(&f).unwrap();
            assert!((q.value() - 1.0).abs() < 1e-14);
            for &c in &q.c[1..] {
                assert!(c.abs() < 1e-13, "nonconstant coefficient {c}");
            }
        }
    }

    /// Brute-force polynomial multiplication oracle: multiply the monomial
    /// maps exactly, truncate to order 3, compare with the jet product.
    #[test]
    fn mul_matches_bruteforce_polynomial_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for dim in [1usize, 2, 3, 4] {
            for _ in 0..10 {
                let a = random_jet(&mut rng, dim, 3);
                let b = random_jet(&mut rng, dim, 3);
                let basis = basis(dim).unwrap();
                let mut expect: HashMap<Vec<u8>, f64> = HashMap::new();
                for (i, mi) in basis.indices.iter().enumerate() {
                    for (j, mj) in basis.indices.iter().enumerate() {
                        let m = mi.sum(mj);
                        if m.order() <= 3 {
                            *expect.entry(m.exps.clone()).or_insert(0.0) += a.c[i] * b.c[j];
                        }
                    }
                }
                let prod = a.try_mul(&b).unwrap();
                for (k, m) in basis.indices.iter().enumerate() {
                    let want = expect.get(&m.exps).copied().unwrap_or(0.0);
                    assert!(
                        (prod.c[k] - want).abs() <= 1e-14 * (1.0 + want.abs()),
                        "coefficient mismatch at {m:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn ln_exp_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut a = random_jet(&mut rng, 2, 3);
            a.c[0] = rng.gen_range(-0.9..0.9);
            let back = a.exp().try_ln().unwrap();
            for (x, y) in back.c.iter().zip(&a.c) {
                assert!((x - y).abs() < 1e-13, "roundtrip deviation {}", x - y);
            }
        }
    }

    #[test]
    fn exp_derivative_matches_finite_difference() {
        // d/dx of exp(2 f) with f = sin(x) cos(y) + 0.3 x y.
        let f = |x: f64, y: f64| (2.0 * (x.sin() * y.cos() + 0.3 * x * y)).exp();
        let (x0, y0) = (0.4, -0.8);
        let xs = coordinate_jets(&[x0, y0], 3);
        let fj = (xs[0].sin().mul_t(&xs[1].cos()))
            .add_t(&xs[0].mul_t(&xs[1]).scale(0.3))
            .scale(2.0)
            .exp();
        let jet_dx = fj.extract_partial(&MultiIndex::new(&[1, 0])).unwrap();
        let fd_dx = central_diff(|t| f(t, y0), x0, 1e-5);
        assert!(rel_err(jet_dx, fd_dx) <= 1e-7, "{jet_dx} vs {fd_dx}");
    }

    #[test]
    fn extract_partial_of_square() {
        let x = Jet::variable(0, 1.7, 1, 3);
        let sq = &x * &x;
        assert!((sq.extract_partial(&MultiIndex::new(&[2])).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn extract_partial_of_constant_is_zero() {
        let c = Jet::constant(5.0, 3, 3);
        for m in [
            MultiIndex::new(&[1, 0, 0]),
            MultiIndex::new(&[0, 2, 0]),
            MultiIndex::new(&[1, 1, 1]),
        ] {
            assert_eq!(c.extract_partial(&m).unwrap(), 0.0);
        }
    }

    #[test]
    fn third_mixed_partial_matches_finite_difference() {
        // ∂³/∂x∂y∂z of sin(x y z) at a generic point.
        let (x0, y0, z0) = (0.7, 0.5, 0.9);
        let xs = coordinate_jets(&[x0, y0, z0], 3);
        let fj = xs[0].mul_t(&xs[1]).mul_t(&xs[2]).sin();
        let jet = fj
            .extract_partial(&MultiIndex::new(&[1, 1, 1]))
            .unwrap();
        // Nested central differences with a coarser step to control noise.
        let h = 1e-3;
        let f = |x: f64, y: f64, z: f64| (x * y * z).sin();
        let dxy = |x: f64, y: f64| {
            (f(x, y, z0 + h) - f(x, y, z0 - h)) / (2.0 * h)
        };
        let dx = |x: f64| (dxy(x, y0 + h) - dxy(x, y0 - h)) / (2.0 * h);
        let fd = (dx(x0 + h) - dx(x0 - h)) / (2.0 * h);
        assert!(rel_err(jet, fd) <= 1e-4, "{jet} vs {fd}");
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            Jet::try_variable(3, 0.0, 3, 3),
            Err(Error::AxisOutOfRange { .. })
        ));
        assert!(matches!(
            Jet::try_constant(0.0, 9, 3),
            Err(Error::DimTooLarge(9))
        ));
        let a = Jet::constant(1.0, 2, 3);
        let b = Jet::constant(1.0, 3, 3);
        assert!(matches!(a.try_add(&b), Err(Error::DimMismatch(2, 3))));
        let c = Jet::constant(1.0, 2, 2);
        assert!(matches!(a.try_mul(&c), Err(Error::OrderMismatch(3, 2))));
        let z = Jet::variable(0, 0.0, 2, 3);
        assert!(matches!(a.try_div(&z), Err(Error::DivisionByZeroJet)));
        assert!(matches!(
            z.try_ln(),
            Err(Error::Domain { func: "ln", .. })
        ));
        let m = MultiIndex::new(&[2, 2]);
        assert!(matches!(
            a.extract_partial(&m),
            Err(Error::OrderExceedsTruncation { .. })
        ));
    }

    proptest! {
        /// Leibniz rule on first-order coefficients, exactly (1e−14 relative).
        #[test]
        fn leibniz_first_order(seed in 0u64..500) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.gen_range(1..=4usize);
            let a = random_jet(&mut rng, dim, 3);
            let b = random_jet(&mut rng, dim, 3);
            let prod = a.try_mul(&b).unwrap();
            for axis in 0..dim {
                let m = MultiIndex::unit(dim, axis);
                let lhs = prod.extract_partial(&m).unwrap();
                let rhs = a.extract_partial(&m).unwrap() * b.value()
                    + a.value() * b.extract_partial(&m).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + rhs.abs()));
            }
        }

        /// Truncation consistency: downgrade-then-multiply equals
        /// multiply-then-downgrade.
        #[test]
        fn truncation_commutes_with_mul(seed in 0u64..200) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.gen_range(1..=4usize);
            let a = random_jet(&mut rng, dim, 3);
            let b = random_jet(&mut rng, dim, 3);
            let route1 = a.truncated(2).try_mul(&b.truncated(2)).unwrap();
            let route2 = a.try_mul(&b).unwrap().truncated(2);
            for (x, y) in route1.c.iter().zip(&route2.c) {
                prop_assert!((x - y).abs() <= 1e-14 * (1.0 + y.abs()));
            }
        }

        /// Chain rule through a nontrivial composition, against central
        /// finite differences of the composed closure.
        #[test]
        fn chain_rule_matches_fd(seed in 0u64..100) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x0 = rng.gen_range(-0.8..0.8f64);
            let y0 = rng.gen_range(-0.8..0.8f64);
            let f = |x: f64, y: f64| ((x * y).cos() + 0.5 * x).exp().sin();
            let xs = coordinate_jets(&[x0, y0], 3);
            let j = (xs[0].mul_t(&xs[1]).cos().add_t(&xs[0].scale(0.5))).exp().sin();
            for (axis, g) in [
                (0usize, Box::new(move |t: f64| f(t, y0)) as Box<dyn Fn(f64) -> f64>),
                (1usize, Box::new(move |t: f64| f(x0, t))),
            ] {
                let jet = j.extract_partial(&MultiIndex::unit(2, axis)).unwrap();
                let fd = central_diff(&g, if axis == 0 { x0 } else { y0 }, 1e-5);
                prop_assert!(rel_err(jet, fd) <= 1e-6, "axis {axis}: {jet} vs {fd}");
            }
        }
    }
}
