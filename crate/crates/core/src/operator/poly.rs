use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::Coeff;
use crate::tensor::{MultiIndex, SymIndexSet};

/// A vector-valued polynomial `p(y) = Σ_β c_β y^β` with `c_β ∈ R^dim`.
///
/// Generic over the coefficient field so the same code runs in floating point
/// and in exact rational arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialField<T: Coeff = f64> {
    n: usize,
    dim: usize,
    coeffs: BTreeMap<MultiIndex, Vec<T>>,
}

impl<T: Coeff> PolynomialField<T> {
    pub fn zero(n: usize, dim: usize) -> Self {
        PolynomialField {
            n,
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, value: Vec<T>) -> Self {
        let mut p = Self::zero(n, value.len());
        p.add_term(MultiIndex::zeros(n), &value);
        p
    }

    /// `value · y^β`.
    pub fn monomial(beta: MultiIndex, value: Vec<T>) -> Self {
        let mut p = Self::zero(beta.dim(), value.len());
        p.add_term(beta, &value);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Vec<T>)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, beta: &MultiIndex) -> Option<&[T]> {
        self.coeffs.get(beta).map(|v| v.as_slice())
    }

    /// Adds `value · y^β`; exact zeros are dropped.
    pub fn add_term(&mut self, beta: MultiIndex, value: &[T]) {
        assert_eq!(beta.dim(), self.n, "monomial dimension");
        assert_eq!(value.len(), self.dim, "coefficient dimension");
        let entry = self
            .coeffs
            .entry(beta.clone())
            .or_insert_with(|| vec![T::zero(); value.len()]);
        for (e, v) in entry.iter_mut().zip(value) {
            *e = *e + *v;
        }
        if entry.iter().all(|x| x.is_zero()) {
            self.coeffs.remove(&beta);
        }
    }

    /// Adds `value · y^β` into a single component.
    pub fn add_scalar_term(&mut self, beta: MultiIndex, component: usize, value: T) {
        let mut v = vec![T::zero(); self.dim];
        v[component] = value;
        self.add_term(beta, &v);
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.keys().map(|b| b.order()).max()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero(self.n, self.dim);
        for (b, v) in &self.coeffs {
            let scaled: Vec<T> = v.iter().map(|&x| x * s).collect();
            out.add_term(b.clone(), &scaled);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (b, v) in &other.coeffs {
            out.add_term(b.clone(), v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                what: "polynomial variables",
                expected: self.n,
                found: other.n,
            });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                what: "polynomial values",
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// `∂^α p`, exact.
    pub fn derivative(&self, alpha: &MultiIndex) -> Self {
        let mut out = Self::zero(self.n, self.dim);
        for (beta, v) in &self.coeffs {
            let Some(rest) = beta.checked_sub(alpha) else {
                continue;
            };
            let mut factor = T::one();
            for (&b, &a) in beta.entries().iter().zip(alpha.entries()) {
                for t in 0..a {
                    factor = factor * T::from_u32(b - t).expect("small integer");
                }
            }
            let scaled: Vec<T> = v.iter().map(|&x| x * factor).collect();
            out.add_term(rest, &scaled);
        }
        out
    }

    /// The tensor of all order-`m` derivatives, `∇^m p`, in monomial
    /// coordinates: component `(j, β)` is `∂^β p^j`.
    pub fn jet(&self, m: usize) -> Self {
        let set = SymIndexSet::new(self.n, m);
        let mut out = Self::zero(self.n, self.dim * set.len());
        for (r, beta) in set.indices().iter().enumerate() {
            let d = self.derivative(beta);
            for (gamma, v) in d.terms() {
                for (j, &x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        out.add_scalar_term(gamma.clone(), j * set.len() + r, x);
                    }
                }
            }
        }
        out
    }

    /// Stacks the value vectors of `self` and `other` (`dim` adds up).
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                what: "polynomial variables",
                expected: self.n,
                found: other.n,
            });
        }
        let dim = self.dim + other.dim;
        let mut out = Self::zero(self.n, dim);
        for (b, v) in &self.coeffs {
            let mut w = v.clone();
            w.resize(dim, T::zero());
            out.add_term(b.clone(), &w);
        }
        for (b, v) in &other.coeffs {
            let mut w = vec![T::zero(); self.dim];
            w.extend_from_slice(v);
            out.add_term(b.clone(), &w);
        }
        Ok(out)
    }
}

impl PolynomialField<f64> {
    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (beta, v) in &self.coeffs {
            let m = beta.monomial(y);
            for (o, c) in out.iter_mut().zip(v) {
                *o += c * m;
            }
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rewrites a polynomial in local coordinates `s = (y - center) / scale`
    /// as a polynomial in `y`.
    pub fn from_local(&self, center: &[f64], scale: f64) -> Self {
        let mut out = Self::zero(self.n, self.dim);
        for (gamma, v) in &self.coeffs {
            let factor = scale.powi(-(gamma.order() as i32));
            // (y - c)^γ = Σ_{δ≤γ} binom(γ,δ) y^δ (-c)^{γ-δ}
            for delta in gamma.lower_set() {
                let rest = gamma.checked_sub(&delta).expect("lower set");
                let neg_c: Vec<f64> = center.iter().map(|c| -c).collect();
                let w = factor * gamma.binomial(&delta) * rest.monomial(&neg_c);
                if w != 0.0 {
                    let scaled: Vec<f64> = v.iter().map(|x| x * w).collect();
                    out.add_term(delta, &scaled);
                }
            }
        }
        out
    }

    /// Drops coefficients whose magnitude is below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::zero(self.n, self.dim);
        for (b, v) in &self.coeffs {
            let w: Vec<f64> = v
                .iter()
                .map(|&x| if x.abs() < tol { 0.0 } else { x })
                .collect();
            out.add_term(b.clone(), &w);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn derivative_of_monomial() {
        // y1^3 y2 -> d/dy1 -> 3 y1^2 y2
        let p = PolynomialField::monomial(mi(&[3, 1]), vec![2.0]);
        let d = p.derivative(&mi(&[1, 0]));
        assert_eq!(d.coefficient(&mi(&[2, 1])), Some(&[6.0][..]));
        assert!(p.derivative(&mi(&[0, 2])).is_zero());
    }

    #[test]
    fn local_coordinates_round_trip() {
        let mut p = PolynomialField::zero(2, 1);
        p.add_term(mi(&[0, 0]), &[1.0]);
        p.add_term(mi(&[1, 0]), &[2.0]);
        p.add_term(mi(&[1, 1]), &[-3.0]);
        let c = [0.3, -0.7];
        let s = 0.25;
        let g = p.from_local(&c, s);
        for y in [[0.1, 0.2], [-0.5, 0.9], [1.3, 0.0]] {
            let local = [(y[0] - c[0]) / s, (y[1] - c[1]) / s];
            assert!((g.eval(&y)[0] - p.eval(&local)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_collects_mixed_partials() {
        // p = y1^2 y2 ; ∇^2 p = [2 y2, 2 y1, 0] in (2,0),(1,1),(0,2) order
        let p = PolynomialField::monomial(mi(&[2, 1]), vec![1.0]);
        let j = p.jet(2);
        assert_eq!(j.dim(), 3);
        assert_eq!(j.coefficient(&mi(&[0, 1])), Some(&[2.0, 0.0, 0.0][..]));
        assert_eq!(j.coefficient(&mi(&[1, 0])), Some(&[0.0, 2.0, 0.0][..]));
    }
}
