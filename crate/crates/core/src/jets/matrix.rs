//! Matrices and vectors with jet entries: the carrier for metric components,
//! involutions, and their products inside field closures. All binary
//! operations truncate to the smaller operand order, matching how derivative
//! components lose one order relative to their parents.

use nalgebra::{DMatrix, DVector};

use super::Jet;

/// Square matrix of jets, row-major.
#[derive(Clone, Debug)]
pub struct JetMat {
    n: usize,
    e: Vec<Jet>,
}

impl JetMat {
    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Jet) -> JetMat {
        let mut f = f;
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                e.push(f(i, j));
            }
        }
        JetMat { n, e }
    }

    pub fn identity(n: usize, dim: usize, order: usize) -> JetMat {
        Self::from_fn(n, |i, j| {
            Jet::constant(if i == j { 1.0 } else { 0.0 }, dim, order)
        })
    }

    pub fn from_constant(m: &DMatrix<f64>, dim: usize, order: usize) -> JetMat {
        Self::from_fn(m.nrows(), |i, j| Jet::constant(m[(i, j)], dim, order))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.e[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.e[i * self.n + j] = v;
    }

    pub fn value(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }

    /// Values of `∂_axis` applied entrywise.
    pub fn partial_value(&self, axis: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            self.get(i, j)
                .partial_derivative(axis)
                .expect("jet matrix entry of order 0 cannot be differentiated")
                .value()
        })
    }

    pub fn transpose(&self) -> JetMat {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    pub fn add(&self, o: &JetMat) -> JetMat {
        Self::from_fn(self.n, |i, j| self.get(i, j).add_t(o.get(i, j)))
    }

    pub fn sub(&self, o: &JetMat) -> JetMat {
        Self::from_fn(self.n, |i, j| self.get(i, j).sub_t(o.get(i, j)))
    }

    pub fn mul(&self, o: &JetMat) -> JetMat {
        assert_eq!(self.n, o.n, "jet matrix size mismatch");
        Self::from_fn(self.n, |i, j| {
            let mut acc = self.get(i, 0).mul_t(o.get(0, j));
            for k in 1..self.n {
                acc = acc.add_t(&self.get(i, k).mul_t(o.get(k, j)));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Jet]) -> Vec<Jet> {
        assert_eq!(self.n, v.len(), "jet matrix/vector size mismatch");
        (0..self.n)
            .map(|i| {
                let mut acc = self.get(i, 0).mul_t(&v[0]);
                for k in 1..self.n {
                    acc = acc.add_t(&self.get(i, k).mul_t(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, k: f64) -> JetMat {
        Self::from_fn(self.n, |i, j| self.get(i, j).scale(k))
    }

    pub fn scale_jet(&self, s: &Jet) -> JetMat {
        Self::from_fn(self.n, |i, j| self.get(i, j).mul_t(s))
    }

    pub fn trace(&self) -> Jet {
        let mut acc = self.get(0, 0).clone();
        for i in 1..self.n {
            acc = acc.add_t(self.get(i, i));
        }
        acc
    }

    /// Jet-exact inverse via the Neumann series around the value part:
    /// `A⁻¹ = (I − E + E² − E³) A₀⁻¹` with `E = A₀⁻¹(A − A₀)` nilpotent to
    /// the truncation order. Requires the value part to be invertible.
    pub fn inverse(&self) -> JetMat {
        let a0 = self.value();
        let a0_inv = a0
            .clone()
            .try_inverse()
            .expect("jet matrix value part is singular");
        let order = self.e.iter().map(Jet::order).min().unwrap_or(0);
        let dim = self.e[0].dim();
        let a0_jet = JetMat::from_constant(&a0, dim, order);
        let a0_inv_jet = JetMat::from_constant(&a0_inv, dim, order);
        let e = a0_inv_jet.mul(&self.sub(&a0_jet));
        let mut acc = JetMat::identity(self.n, dim, order);
        let mut pow = JetMat::identity(self.n, dim, order);
        let mut sign = -1.0;
        for _ in 1..=order {
            pow = pow.mul(&e);
            acc = acc.add(&pow.scale(sign));
            sign = -sign;
        }
        acc.mul(&a0_inv_jet)
    }

    pub fn truncated(&self, order: usize) -> JetMat {
        Self::from_fn(self.n, |i, j| self.get(i, j).truncated(order))
    }
}

pub fn jvec_value(v: &[Jet]) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].value())
}

pub fn jvec_add(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| x.add_t(y)).collect()
}

pub fn jvec_sub(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| x.sub_t(y)).collect()
}

pub fn jvec_scale(a: &[Jet], k: f64) -> Vec<Jet> {
    a.iter().map(|x| x.scale(k)).collect()
}

pub fn jvec_scale_jet(a: &[Jet], s: &Jet) -> Vec<Jet> {
    a.iter().map(|x| x.mul_t(s)).collect()
}

/// Plain dot product `Σ aᵢ bᵢ` (no metric).
pub fn jdot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = a[0].mul_t(&b[0]);
    for i in 1..a.len() {
        acc = acc.add_t(&a[i].mul_t(&b[i]));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::coordinate_jets;

    #[test]
    fn inverse_roundtrip() {
        let p = [0.3, -0.5];
        let xs = coordinate_jets(&p, 3);
        // A = [[e^x, xy], [xy, 2+sin(y)]]
        let a = JetMat::from_fn(2, |i, j| match (i, j) {
            (0, 0) => xs[0].exp(),
            (1, 1) => xs[1].sin().add_scalar(2.0),
            _ => xs[0].mul_t(&xs[1]),
        });
        let prod = a.mul(&a.inverse());
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                let jet = prod.get(i, j);
                assert!((jet.value() - want).abs() < 1e-13);
                // all higher coefficients vanish
                for axis in 0..2 {
                    let d = jet.partial_derivative(axis).unwrap();
                    assert!(d.value().abs() < 1e-12, "entry ({i},{j}) axis {axis}");
                }
            }
        }
    }

    #[test]
    fn trace_and_transpose() {
        let xs = coordinate_jets(&[1.0, 2.0], 2);
        let m = JetMat::from_fn(2, |i, j| if i <= j { xs[0].clone() } else { xs[1].clone() });
        assert_eq!(m.trace().value(), 2.0);
        assert_eq!(m.transpose().get(0, 1).value(), 2.0);
    }
}
