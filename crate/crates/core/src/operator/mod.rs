//! Homogeneous constant-coefficient operators `B[D] = Σ_{|α|=k} B_α ∂^α`
//! from `V = R^dim_v` to `W = R^dim_w`.

mod catalog;
mod document;
mod linearize;
mod nullspace;
mod poly;

use std::collections::BTreeMap;
use std::ops::Neg;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub use catalog::{catalog, catalog_with, catalog_names, full_gradient, partial_derivative, SymCoords};
pub use document::{CoefficientEntry, OperatorDocument};
pub use linearize::{curl_operator, linearize, linearization_residual, LinearizationResult};
pub use nullspace::{ell_bound, nullspace_dims, poly_nullspace, stabilization_degree, NULLSPACE_TOL};
pub use poly::PolynomialField;

use crate::error::{Error, Result};
use crate::tensor::{multiindex_enumerate, MultiIndex};

/// Scalars that operator coefficients and polynomial coefficients may take.
pub trait Coeff:
    nalgebra::Scalar + Copy + Num + FromPrimitive + Neg<Output = Self> + Send + Sync
{
}

impl<T> Coeff for T where
    T: nalgebra::Scalar + Copy + Num + FromPrimitive + Neg<Output = T> + Send + Sync
{
}

/// A homogeneous order-`k` differential operator with constant coefficients.
///
/// Coefficients are `dim_w × dim_v` matrices keyed by multi-indices with
/// `|α| = k`; missing keys are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator<T: Coeff = f64> {
    n: usize,
    k: usize,
    dim_v: usize,
    dim_w: usize,
    coeffs: BTreeMap<MultiIndex, DMatrix<T>>,
}

impl<T: Coeff> DiffOperator<T> {
    pub fn new(
        n: usize,
        k: usize,
        dim_v: usize,
        dim_w: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, DMatrix<T>)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("space dimension n must be ≥ 1".into()));
        }
        let mut map: BTreeMap<MultiIndex, DMatrix<T>> = BTreeMap::new();
        for (alpha, m) in coeffs {
            if alpha.dim() != n {
                return Err(Error::DimensionMismatch {
                    what: "multi-index length",
                    expected: n,
                    found: alpha.dim(),
                });
            }
            if alpha.order() != k {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {alpha:?} has order {} but the operator has order {k}",
                    alpha.order()
                )));
            }
            if m.nrows() != dim_w {
                return Err(Error::DimensionMismatch {
                    what: "coefficient rows (dimW)",
                    expected: dim_w,
                    found: m.nrows(),
                });
            }
            if m.ncols() != dim_v {
                return Err(Error::DimensionMismatch {
                    what: "coefficient columns (dimV)",
                    expected: dim_v,
                    found: m.ncols(),
                });
            }
            match map.get_mut(&alpha) {
                Some(existing) => {
                    for (e, x) in existing.iter_mut().zip(m.iter()) {
                        *e = *e + *x;
                    }
                }
                None => {
                    map.insert(alpha, m);
                }
            }
        }
        map.retain(|_, m| m.iter().any(|x| !x.is_zero()));
        if map.is_empty() {
            return Err(Error::InvalidArgument(
                "operator needs at least one nonzero coefficient".into(),
            ));
        }
        Ok(DiffOperator {
            n,
            k,
            dim_v,
            dim_w,
            coeffs: map,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &DMatrix<T>)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<&DMatrix<T>> {
        self.coeffs.get(alpha)
    }

    /// `B*[D] = (-1)^k Σ B_α^T ∂^α`.
    pub fn adjoint(&self) -> Self {
        let odd = self.k % 2 == 1;
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, m)| {
                let t = m.transpose();
                (a.clone(), if odd { t.map(|x| -x) } else { t })
            })
            .collect();
        DiffOperator {
            n: self.n,
            k: self.k,
            dim_v: self.dim_w,
            dim_w: self.dim_v,
            coeffs,
        }
    }

    /// `B p = Σ_α B_α ∂^α p`, computed exactly on the coefficients.
    pub fn apply_poly(&self, p: &PolynomialField<T>) -> Result<PolynomialField<T>> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                what: "polynomial variables",
                expected: self.n,
                found: p.n(),
            });
        }
        if p.dim() != self.dim_v {
            return Err(Error::DimensionMismatch {
                what: "polynomial values (dimV)",
                expected: self.dim_v,
                found: p.dim(),
            });
        }
        let mut out = PolynomialField::zero(self.n, self.dim_w);
        for (alpha, b) in &self.coeffs {
            let d = p.derivative(alpha);
            for (gamma, v) in d.terms() {
                let mut w = vec![T::zero(); self.dim_w];
                for (r, wr) in w.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for (c, &vc) in v.iter().enumerate() {
                        acc = acc + b[(r, c)] * vc;
                    }
                    *wr = acc;
                }
                out.add_term(gamma.clone(), &w);
            }
        }
        Ok(out)
    }

    /// `outer ∘ inner`, with coefficients `C_γ = Σ_{α+β=γ} A_α B_β`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        if outer.n != inner.n {
            return Err(Error::DimensionMismatch {
                what: "space dimension in composition",
                expected: outer.n,
                found: inner.n,
            });
        }
        if outer.dim_v != inner.dim_w {
            return Err(Error::DimensionMismatch {
                what: "composition (outer dimV vs inner dimW)",
                expected: outer.dim_v,
                found: inner.dim_w,
            });
        }
        let mut coeffs = Vec::new();
        for (a, am) in &outer.coeffs {
            for (b, bm) in &inner.coeffs {
                coeffs.push((a.add(b), mat_mul(am, bm)));
            }
        }
        DiffOperator::new(outer.n, outer.k + inner.k, inner.dim_v, outer.dim_w, coeffs)
    }
}

fn mat_mul<T: Coeff>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::from_element(a.nrows(), b.ncols(), T::zero());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = T::zero();
            for l in 0..a.ncols() {
                acc = acc + a[(i, l)] * b[(l, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

impl DiffOperator<f64> {
    /// Principal symbol `Σ_α ξ^α B_α` at a real or complex `ξ`.
    pub fn symbol<C: ComplexField<RealField = f64>>(&self, xi: &[C]) -> DMatrix<C> {
        assert_eq!(xi.len(), self.n, "symbol direction has wrong length");
        let mut out = DMatrix::<C>::zeros(self.dim_w, self.dim_v);
        for (alpha, b) in &self.coeffs {
            let m = alpha.monomial(xi);
            for (o, &x) in out.iter_mut().zip(b.iter()) {
                *o += m.clone() * C::from_real(x);
            }
        }
        out
    }

    /// `∂/∂ξ_i` of the symbol: `Σ_α α_i ξ^{α-e_i} B_α`.
    pub fn symbol_partial<C: ComplexField<RealField = f64>>(&self, axis: usize, xi: &[C]) -> DMatrix<C> {
        let mut out = DMatrix::<C>::zeros(self.dim_w, self.dim_v);
        let unit = MultiIndex::unit(self.n, axis);
        for (alpha, b) in &self.coeffs {
            let Some(rest) = alpha.checked_sub(&unit) else {
                continue;
            };
            let m = rest.monomial(xi) * C::from_real(alpha.get(axis) as f64);
            for (o, &x) in out.iter_mut().zip(b.iter()) {
                *o += m.clone() * C::from_real(x);
            }
        }
        out
    }

    /// The bilinear pairing `(v, ν) ↦ B(ν) v` of a first-order operator.
    pub fn b_tensor(&self, v: &[f64], nu: &[f64]) -> Result<Vec<f64>> {
        if self.k != 1 {
            return Err(Error::NotFirstOrder(self.k));
        }
        if v.len() != self.dim_v {
            return Err(Error::DimensionMismatch {
                what: "b_tensor vector",
                expected: self.dim_v,
                found: v.len(),
            });
        }
        if nu.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "b_tensor direction",
                expected: self.n,
                found: nu.len(),
            });
        }
        let s = self.symbol(nu);
        Ok((s * DVector::from_column_slice(v)).iter().copied().collect())
    }

    /// Largest spectral norm among the coefficient matrices.
    pub fn max_coefficient_norm(&self) -> f64 {
        self.coeffs
            .values()
            .map(|m| m.clone().singular_values().iter().copied().fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        DiffOperator::new(
            self.n,
            self.k,
            self.dim_v,
            self.dim_w,
            self.coeffs.iter().map(|(a, m)| (a.clone(), m * s)),
        )
    }

    /// Exact rational copy; fails if some entry is not a (small) rational.
    pub fn to_rational(&self) -> Result<DiffOperator<Rational64>> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, m)| {
                let mut out = DMatrix::from_element(m.nrows(), m.ncols(), Rational64::from_integer(0));
                for (o, &x) in out.iter_mut().zip(m.iter()) {
                    *o = exact_rational(x)?;
                }
                Ok((a.clone(), out))
            })
            .collect::<Result<Vec<_>>>()?;
        DiffOperator::new(self.n, self.k, self.dim_v, self.dim_w, coeffs)
    }

    /// Every multi-index of order `k`, in graded-lex order.
    pub fn index_set(&self) -> Vec<MultiIndex> {
        multiindex_enumerate(self.n, self.k)
    }
}

/// Coefficients with larger denominators are treated as irrational.
const MAX_DENOMINATOR: i64 = 1 << 20;

fn exact_rational(x: f64) -> Result<Rational64> {
    let r = Rational64::approximate_float(x)
        .ok_or_else(|| Error::InvalidArgument(format!("{x} is not representable")))?;
    if r.to_f64() == Some(x) && r.denom().abs() <= MAX_DENOMINATOR {
        Ok(r)
    } else {
        Err(Error::InvalidArgument(format!("{x} is not an exact small rational")))
    }
}

impl DiffOperator<Rational64> {
    pub fn to_f64(&self) -> DiffOperator<f64> {
        DiffOperator {
            n: self.n,
            k: self.k,
            dim_v: self.dim_v,
            dim_w: self.dim_w,
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, m)| (a.clone(), m.map(|x| x.to_f64().unwrap_or(f64::NAN))))
                .collect(),
        }
    }
}
