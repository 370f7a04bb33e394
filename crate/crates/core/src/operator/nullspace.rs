use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{DiffOperator, PolynomialField};
use crate::tensor::{kernel_with_tol, multiindices_up_to, MultiIndex};

/// Relative singular-value threshold for polynomial null vectors.
pub const NULLSPACE_TOL: f64 = 1e-9;

/// Matrix of `p ↦ B p` on the monomial coefficients of `V`-valued polynomials
/// of degree ≤ `d`. Column `m * dim_v + j` is the monomial `y^{β_m} e_j`.
fn system_matrix(op: &DiffOperator, d: usize) -> (DMatrix<f64>, Vec<MultiIndex>) {
    let n = op.n();
    let domain = multiindices_up_to(n, d);
    let codomain: Vec<MultiIndex> = if d >= op.order() {
        multiindices_up_to(n, d - op.order())
    } else {
        Vec::new()
    };
    let row_of: HashMap<&MultiIndex, usize> =
        codomain.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let dim_v = op.dim_v();
    let dim_w = op.dim_w();
    let mut a = DMatrix::zeros(codomain.len() * dim_w, domain.len() * dim_v);
    for (mcol, beta) in domain.iter().enumerate() {
        for j in 0..dim_v {
            let mut e = vec![0.0; dim_v];
            e[j] = 1.0;
            let image = op
                .apply_poly(&PolynomialField::monomial(beta.clone(), e))
                .expect("shapes agree by construction");
            for (gamma, w) in image.terms() {
                let r = row_of[gamma];
                for (i, &x) in w.iter().enumerate() {
                    a[(r * dim_w + i, mcol * dim_v + j)] = x;
                }
            }
        }
    }
    (a, domain)
}

/// Basis of `{p : deg p ≤ d, B p = 0}`.
pub fn poly_nullspace(op: &DiffOperator, d: usize) -> Vec<PolynomialField> {
    let (a, domain) = system_matrix(op, d);
    let ker = kernel_with_tol(&a, NULLSPACE_TOL);
    let dim_v = op.dim_v();
    (0..ker.dim())
        .map(|c| {
            let col = ker.basis().column(c);
            let mut p = PolynomialField::zero(op.n(), dim_v);
            for (m, beta) in domain.iter().enumerate() {
                let v: Vec<f64> = (0..dim_v).map(|j| col[m * dim_v + j]).collect();
                p.add_term(beta.clone(), &v);
            }
            p.pruned(1e-13)
        })
        .collect()
}

/// `dim {p : deg p ≤ d, B p = 0}` for `d = 0..=d_max`.
pub fn nullspace_dims(op: &DiffOperator, d_max: usize) -> Vec<usize> {
    (0..=d_max)
        .map(|d| {
            let (a, _) = system_matrix(op, d);
            kernel_with_tol(&a, NULLSPACE_TOL).dim()
        })
        .collect()
}

/// `ℓ = 1 + (largest degree in the polynomial null space)`.
///
/// Stabilization is declared at the first `d` with
/// `dim(d) = dim(d+1) = dim(d+2)`, all within `d_max`.
pub fn ell_bound(op: &DiffOperator, d_max: usize) -> Result<usize> {
    if d_max < 2 {
        return Err(Error::InvalidArgument(
            "degree cap must be ≥ 2 to observe two consecutive equal dimensions".into(),
        ));
    }
    let dims = nullspace_dims(op, d_max);
    stabilization_degree(&dims)
        .map(|d| d + 1)
        .ok_or(Error::NotStabilized { d_max, dims })
}

/// First `d` with `dims[d] = dims[d+1] = dims[d+2]`.
pub fn stabilization_degree(dims: &[usize]) -> Option<usize> {
    dims.windows(3)
        .position(|w| w[0] == w[1] && w[1] == w[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::catalog;

    #[test]
    fn gradient_kernel_is_constants() {
        let g = catalog("gradient", 3).unwrap();
        for d in 0..4 {
            let basis = poly_nullspace(&g, d);
            assert_eq!(basis.len(), 1);
            assert_eq!(basis[0].degree(), Some(0));
        }
        assert_eq!(ell_bound(&g, 3).unwrap(), 1);
    }

    #[test]
    fn rigid_motions() {
        let e = catalog("symmetric_gradient", 2).unwrap();
        assert_eq!(poly_nullspace(&e, 1).len(), 3);
        for p in poly_nullspace(&e, 3) {
            assert!(e.apply_poly(&p).unwrap().max_abs() < 1e-10);
            assert!(p.degree().unwrap() <= 1);
        }
        assert_eq!(ell_bound(&e, 4).unwrap(), 2);
    }

    #[test]
    fn divergence_kernel_grows() {
        let div = catalog("divergence", 2).unwrap();
        let dims = nullspace_dims(&div, 4);
        // 6 affine coefficients minus one constraint
        assert_eq!(dims[1], 5);
        assert!(dims.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(ell_bound(&div, 4), Err(Error::NotStabilized { .. })));
    }

    #[test]
    fn conformal_killing_fields() {
        let ed = catalog("deviatoric", 3).unwrap();
        assert_eq!(nullspace_dims(&ed, 4), vec![3, 7, 10, 10, 10]);
        assert_eq!(ell_bound(&ed, 4).unwrap(), 3);
        assert!(ell_bound(&ed, 3).is_err());
    }

    #[test]
    fn stabilization_needs_two_equalities() {
        assert_eq!(stabilization_degree(&[1, 1, 1]), Some(0));
        assert_eq!(stabilization_degree(&[3, 7, 10, 10]), None);
        assert_eq!(stabilization_degree(&[3, 7, 10, 10, 10]), Some(2));
    }
}
