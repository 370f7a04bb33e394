//! Order reduction: an order-`k` operator `A` is rewritten as a first-order
//! operator `Ã ⊕ curl_{k-1}` acting on `(k-1)`-jets.
//!
//! `Ã` satisfies `A u = Ã(∇^{k-1} u)`. Its coefficients are
//! `(Ã_i)_{j,β} = A_{β+e_i} e_j / c^i_β` where `c^i_β` counts the axes `l` with
//! `(β+e_i)_l ≥ 1`; that is exactly the number of pairs `(i', β')` with
//! `β' + e_{i'} = β + e_i`, so each `∂^α u^j` is hit with total weight one.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{Coeff, DiffOperator, PolynomialField};
use crate::tensor::{MultiIndex, SymIndexSet};

/// `curl_m` on `V ⊙^m R^n`: one row per `(j, γ, i < l)` with `|γ| = m - 1`,
/// `(curl_m w) = ∂_i w^j_{γ+e_l} - ∂_l w^j_{γ+e_i}`.
pub fn curl_operator<T: Coeff>(n: usize, dim_v: usize, m: usize) -> Result<DiffOperator<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument("curl order must be ≥ 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("curl needs n ≥ 2".into()));
    }
    let dom = SymIndexSet::new(n, m);
    let lower = SymIndexSet::new(n, m - 1);
    let pairs = n * (n - 1) / 2;
    let rows = dim_v * lower.len() * pairs;
    let cols = dim_v * dom.len();
    let mut mats: Vec<DMatrix<T>> = (0..n)
        .map(|_| DMatrix::from_element(rows, cols, T::zero()))
        .collect();
    let mut row = 0;
    for j in 0..dim_v {
        for gamma in lower.indices() {
            for i in 0..n {
                for l in (i + 1)..n {
                    let col_l = j * dom.len() + dom.rank(&gamma.add_unit(l)).expect("order m");
                    let col_i = j * dom.len() + dom.rank(&gamma.add_unit(i)).expect("order m");
                    mats[i][(row, col_l)] = mats[i][(row, col_l)] + T::one();
                    mats[l][(row, col_i)] = mats[l][(row, col_i)] - T::one();
                    row += 1;
                }
            }
        }
    }
    DiffOperator::new(
        n,
        1,
        cols,
        rows,
        mats.into_iter()
            .enumerate()
            .map(|(i, m)| (MultiIndex::unit(n, i), m)),
    )
}

/// The first-order operator `Ã ⊕ curl_{k-1}` together with its bookkeeping.
#[derive(Clone, Debug)]
pub struct LinearizationResult<T: Coeff = f64> {
    pub lifted: DiffOperator<T>,
    /// Codomain rows of `Ã`.
    pub tilde_rows: Range<usize>,
    /// Codomain rows of `curl_{k-1}` (empty for `k = 1`).
    pub curl_rows: Range<usize>,
    /// `c^i_β`, keyed by `(i, β)` with `|β| = k - 1`.
    pub constants: BTreeMap<(usize, MultiIndex), usize>,
    /// Order of the operator that was linearized.
    pub source_order: usize,
}

pub fn linearize<T: Coeff>(op: &DiffOperator<T>) -> Result<LinearizationResult<T>> {
    let n = op.n();
    let k = op.order();
    if k == 0 {
        return Err(Error::InvalidArgument("cannot linearize an order-0 operator".into()));
    }
    let set = SymIndexSet::new(n, k - 1);
    let dim_v = op.dim_v();
    let dim_w = op.dim_w();
    let domain = dim_v * set.len();

    let mut constants = BTreeMap::new();
    let mut tilde: Vec<DMatrix<T>> = (0..n)
        .map(|_| DMatrix::from_element(dim_w, domain, T::zero()))
        .collect();
    for (i, t) in tilde.iter_mut().enumerate() {
        for (r, beta) in set.indices().iter().enumerate() {
            let alpha = beta.add_unit(i);
            let c = alpha.support_size();
            constants.insert((i, beta.clone()), c);
            let Some(a) = op.coefficient(&alpha) else {
                continue;
            };
            let c = T::from_usize(c).expect("small integer");
            for j in 0..dim_v {
                for w in 0..dim_w {
                    t[(w, j * set.len() + r)] = a[(w, j)] / c;
                }
            }
        }
    }

    if k == 1 {
        return Ok(LinearizationResult {
            lifted: op.clone(),
            tilde_rows: 0..dim_w,
            curl_rows: dim_w..dim_w,
            constants,
            source_order: k,
        });
    }

    let curl = if n >= 2 {
        Some(curl_operator::<T>(n, dim_v, k - 1)?)
    } else {
        None
    };
    let curl_dim = curl.as_ref().map_or(0, |c| c.dim_w());
    let total = dim_w + curl_dim;
    let coeffs = tilde.into_iter().enumerate().map(|(i, t)| {
        let mut m = DMatrix::from_element(total, domain, T::zero());
        m.view_mut((0, 0), (dim_w, domain)).copy_from(&t);
        if let Some(c) = &curl {
            if let Some(ci) = c.coefficient(&MultiIndex::unit(n, i)) {
                m.view_mut((dim_w, 0), (curl_dim, domain)).copy_from(ci);
            }
        }
        (MultiIndex::unit(n, i), m)
    });
    let lifted = DiffOperator::new(n, 1, domain, total, coeffs)?;
    Ok(LinearizationResult {
        lifted,
        tilde_rows: 0..dim_w,
        curl_rows: dim_w..total,
        constants,
        source_order: k,
    })
}

/// `L(A)(∇^{k-1} p) - (A p, 0)`; identically zero when the linearization is
/// correct.
pub fn linearization_residual<T: Coeff>(
    op: &DiffOperator<T>,
    lin: &LinearizationResult<T>,
    p: &PolynomialField<T>,
) -> Result<PolynomialField<T>> {
    let lifted = lin.lifted.apply_poly(&p.jet(lin.source_order - 1))?;
    let direct = op.apply_poly(p)?;
    let zeros = PolynomialField::zero(op.n(), lin.curl_rows.len());
    lifted.sub(&direct.stack(&zeros)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::catalog;
    use num_rational::Rational64;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn curl_dimensions() {
        let c1: DiffOperator = curl_operator(3, 1, 1).unwrap();
        assert_eq!((c1.dim_v(), c1.dim_w()), (3, 3));
        let c2: DiffOperator = curl_operator(2, 1, 2).unwrap();
        assert_eq!((c2.dim_v(), c2.dim_w()), (3, 2));
        assert!(curl_operator::<f64>(3, 1, 0).is_err());
    }

    #[test]
    fn first_order_input_is_unchanged() {
        let e = catalog("symmetric_gradient", 3).unwrap();
        let lin = linearize(&e).unwrap();
        assert_eq!(lin.lifted, e);
        assert!(lin.curl_rows.is_empty());
    }

    #[test]
    fn hessian_constants() {
        let h = catalog("hessian", 2).unwrap();
        let lin = linearize(&h).unwrap();
        assert_eq!(lin.constants[&(0, mi(&[1, 0]))], 1);
        assert_eq!(lin.constants[&(1, mi(&[1, 0]))], 2);
        assert_eq!(lin.lifted.order(), 1);
        assert_eq!(lin.curl_rows.len(), 1);
    }

    #[test]
    fn exact_round_trip_on_cubic() {
        let h = catalog("hessian", 3).unwrap().to_rational().ok();
        // Frobenius coordinates are irrational; use a plain copy instead.
        assert!(h.is_none());
        let plain = crate::operator::catalog_with("hessian", 3, crate::operator::SymCoords::Plain)
            .unwrap()
            .to_rational()
            .unwrap();
        let lin = linearize(&plain).unwrap();
        let mut p = PolynomialField::<Rational64>::zero(3, 1);
        p.add_scalar_term(mi(&[3, 0, 0]), 0, Rational64::from_integer(2));
        p.add_scalar_term(mi(&[1, 1, 1]), 0, Rational64::from_integer(-5));
        p.add_scalar_term(mi(&[0, 2, 1]), 0, Rational64::from_integer(7));
        let res = linearization_residual(&plain, &lin, &p).unwrap();
        assert!(res.is_zero());
    }
}
