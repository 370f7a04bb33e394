use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::DiffOperator;
use crate::tensor::{multiindex_enumerate, MultiIndex, SymIndexSet};

/// Coordinates used for symmetric-tensor valued codomains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymCoords {
    /// Orthonormal: coordinate norm equals the Frobenius norm of the full
    /// tensor (off-diagonals of `Sym(n)` carry a `√2`).
    Frobenius,
    /// Plain tensor entries, one per independent component. Keeps catalog
    /// entries rational for exact arithmetic.
    Plain,
}

const NAMES: [&str; 6] = [
    "gradient",
    "hessian",
    "symmetric_gradient",
    "deviatoric",
    "divergence",
    "cauchy_riemann",
];

pub fn catalog_names() -> &'static [&'static str] {
    &NAMES
}

/// A built-in operator in orthonormal codomain coordinates.
pub fn catalog(name: &str, n: usize) -> Result<DiffOperator> {
    catalog_with(name, n, SymCoords::Frobenius)
}

pub fn catalog_with(name: &str, n: usize, coords: SymCoords) -> Result<DiffOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    match name {
        "gradient" => full_gradient(n, 1, 1, coords),
        "hessian" => full_gradient(n, 2, 1, coords),
        "symmetric_gradient" => symmetric_gradient(n, coords, false),
        "deviatoric" => {
            if n < 2 {
                return Err(Error::InvalidArgument("deviatoric operator needs n ≥ 2".into()));
            }
            symmetric_gradient(n, coords, true)
        }
        "divergence" => {
            let coeffs = (0..n).map(|i| {
                let mut m = DMatrix::zeros(1, n);
                m[(0, i)] = 1.0;
                (MultiIndex::unit(n, i), m)
            });
            DiffOperator::new(n, 1, n, 1, coeffs)
        }
        "cauchy_riemann" => {
            if n != 2 {
                return Err(Error::InvalidArgument("cauchy_riemann is defined for n = 2".into()));
            }
            let b1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
            let b2 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
            DiffOperator::new(2, 1, 2, 2, [(MultiIndex::unit(2, 0), b1), (MultiIndex::unit(2, 1), b2)])
        }
        other => Err(Error::UnknownOperator(other.to_string())),
    }
}

/// `D^k` acting on `R^dim_v`-valued maps, with codomain `V ⊗ ⊙^k R^n`
/// (component `(j, β)` at `j * |Sym| + rank(β)`).
///
/// In [`SymCoords::Frobenius`] coordinate `β` is weighted by `sqrt(k!/β!)`,
/// so the symbol at unit `ξ` is an isometry.
pub fn full_gradient(n: usize, k: usize, dim_v: usize, coords: SymCoords) -> Result<DiffOperator> {
    if k == 0 {
        return Err(Error::InvalidArgument("gradient order must be ≥ 1".into()));
    }
    let set = SymIndexSet::new(n, k);
    let dim_w = dim_v * set.len();
    let kfact: f64 = (1..=k).map(|i| i as f64).product();
    let coeffs = multiindex_enumerate(n, k).into_iter().map(|alpha| {
        let r = set.rank(&alpha).expect("same index set");
        let w = match coords {
            SymCoords::Frobenius => (kfact / alpha.factorial()).sqrt(),
            SymCoords::Plain => 1.0,
        };
        let mut m = DMatrix::zeros(dim_w, dim_v);
        for j in 0..dim_v {
            m[(j * set.len() + r, j)] = w;
        }
        (alpha, m)
    });
    DiffOperator::new(n, k, dim_v, dim_w, coeffs)
}

/// Row of the `(i, j)` entry (`i ≤ j`) in the packed `Sym(n)` layout.
fn sym_row(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

fn symmetric_gradient(n: usize, coords: SymCoords, deviatoric: bool) -> Result<DiffOperator> {
    let dim_w = n * (n + 1) / 2;
    let off = match coords {
        SymCoords::Frobenius => std::f64::consts::SQRT_2,
        SymCoords::Plain => 1.0,
    };
    let mut mats: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(dim_w, n)).collect();
    for i in 0..n {
        for j in i..n {
            let row = sym_row(n, i, j);
            if i == j {
                mats[i][(row, i)] += 1.0;
                if deviatoric {
                    for (l, m) in mats.iter_mut().enumerate() {
                        m[(row, l)] -= 1.0 / n as f64;
                    }
                }
            } else {
                // (Eu)_ij = (∂_j u_i + ∂_i u_j) / 2
                mats[j][(row, i)] += off / 2.0;
                mats[i][(row, j)] += off / 2.0;
            }
        }
    }
    let coeffs = mats
        .into_iter()
        .enumerate()
        .map(|(i, m)| (MultiIndex::unit(n, i), m));
    DiffOperator::new(n, 1, n, dim_w, coeffs)
}

/// The scalar operator `∂_axis`.
pub fn partial_derivative(n: usize, axis: usize) -> Result<DiffOperator> {
    if axis >= n {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for n = {n}")));
    }
    DiffOperator::new(n, 1, 1, 1, [(MultiIndex::unit(n, axis), DMatrix::from_element(1, 1, 1.0))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn packed_rows() {
        let rows: Vec<usize> = (0..3).flat_map(|i| (i..3).map(move |j| sym_row(3, i, j))).collect();
        assert_eq!(rows, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn dimensions() {
        let e = catalog("symmetric_gradient", 2).unwrap();
        assert_eq!((e.order(), e.dim_v(), e.dim_w()), (1, 2, 3));
        let h = catalog("hessian", 3).unwrap();
        assert_eq!((h.order(), h.dim_v(), h.dim_w()), (2, 1, 6));
        assert!(catalog("deviatoric", 1).is_err());
        assert!(catalog("cauchy_riemann", 3).is_err());
        assert!(matches!(catalog("laplacian", 2), Err(Error::UnknownOperator(_))));
    }

    #[test]
    fn deviatoric_symbol_at_axis() {
        let op = catalog("deviatoric", 3).unwrap();
        let s = op.symbol(&[1.0f64, 0.0, 0.0]);
        let v = s * DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        // packed (11,12,13,22,23,33): diag(2/3, -1/3, -1/3)
        let expected: [f64; 6] = [2.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0, -1.0 / 3.0];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cauchy_riemann_symbol() {
        let op = catalog("cauchy_riemann", 2).unwrap();
        let s = op.symbol(&[0.3f64, 0.7]);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[0.3, -0.7, 0.7, 0.3]));
    }

    #[test]
    fn symmetric_gradient_pairing_is_symmetric_product() {
        let e = catalog("symmetric_gradient", 2).unwrap();
        let w = e.b_tensor(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        // e1 ⊙ e2 has off-diagonal 1/2, stored as √2/2
        assert!((w[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!((w[0], w[2]), (0.0, 0.0));
        let plain = catalog_with("symmetric_gradient", 2, SymCoords::Plain).unwrap();
        assert_eq!(plain.b_tensor(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), vec![0.0, 0.5, 0.0]);
    }
}
