use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{GridField, MeasureField};
use crate::operator::DiffOperator;
use crate::tensor::MultiIndex;

/// Stencil of the forward difference `Δ^α`: offsets `γ ≤ α` with weights
/// `(-1)^{|α-γ|} binom(α, γ)`.
fn stencil(alpha: &MultiIndex) -> Vec<(Vec<usize>, f64)> {
    alpha
        .lower_set()
        .into_iter()
        .map(|gamma| {
            let sign = if (alpha.order() - gamma.order()).is_multiple_of(2) { 1.0 } else { -1.0 };
            let w = sign * alpha.binomial(&gamma);
            (gamma.entries().iter().map(|&g| g as usize).collect(), w)
        })
        .collect()
}

/// `B u` as cell masses `h^{n-k} Σ_α B_α Δ^α u`, with a boundary layer of
/// `k` cells at the upper faces.
pub fn discrete_apply(op: &DiffOperator, field: &GridField) -> Result<MeasureField> {
    let grid = field.grid();
    let k = op.order();
    if grid.n() != op.n() {
        return Err(Error::DimensionMismatch {
            what: "grid dimension",
            expected: op.n(),
            found: grid.n(),
        });
    }
    if field.dim() != op.dim_v() {
        return Err(Error::DimensionMismatch {
            what: "field components",
            expected: op.dim_v(),
            found: field.dim(),
        });
    }
    if grid.cells() < k + 1 {
        return Err(Error::GridTooSmall {
            cells: grid.cells(),
            required: k + 1,
        });
    }
    let terms: Vec<(Vec<(Vec<usize>, f64)>, &nalgebra::DMatrix<f64>)> =
        op.coefficients().map(|(a, b)| (stencil(a), b)).collect();
    let (dim_v, dim_w) = (op.dim_v(), op.dim_w());
    let scale = grid.h().powi(grid.n() as i32 - k as i32);
    let limit = grid.cells() - k;
    let masses: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|lin| {
            let idx = grid.multi(lin);
            let mut out = vec![0.0; dim_w];
            if idx.iter().any(|&i| i >= limit) {
                return out;
            }
            let mut diff = vec![0.0; dim_v];
            let mut shifted = idx.clone();
            for (st, b) in &terms {
                diff.iter_mut().for_each(|d| *d = 0.0);
                for (offset, w) in st {
                    for (a, s) in shifted.iter_mut().enumerate() {
                        *s = idx[a] + offset[a];
                    }
                    let u = field.value(grid.linear(&shifted));
                    diff.iter_mut().zip(u).for_each(|(d, x)| *d += w * x);
                }
                for (r, o) in out.iter_mut().enumerate() {
                    for (c, d) in diff.iter().enumerate() {
                        *o += b[(r, c)] * d;
                    }
                }
            }
            out.iter_mut().for_each(|o| *o *= scale);
            out
        })
        .collect();
    MeasureField::new(grid.clone(), dim_w, k, masses.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{total_variation, Grid, Region};
    use crate::operator::catalog;

    #[test]
    fn gradient_of_affine_field() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 16.0).unwrap();
        let u = GridField::from_fn(g.clone(), 1, |y| vec![y[0]]).unwrap();
        let mu = discrete_apply(&catalog("gradient", 2).unwrap(), &u).unwrap();
        let vol = g.h() * g.h();
        for lin in mu.cells_in(&Region::Everywhere) {
            let m = mu.mass(lin);
            assert!((m[0] / vol - 1.0).abs() < 1e-12 && m[1].abs() < 1e-15);
        }
        assert_eq!(mu.cells_in(&Region::Everywhere).len(), 15 * 15);
    }

    #[test]
    fn rigid_rotation_is_annihilated() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 32.0).unwrap();
        let u = GridField::from_fn(g, 2, |y| vec![-y[1] + 0.3, y[0] - 0.1]).unwrap();
        let mu = discrete_apply(&catalog("symmetric_gradient", 2).unwrap(), &u).unwrap();
        assert!(mu.masses().iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn second_differences() {
        let g = Grid::new(1, 0.0, 1.0, 0.125).unwrap();
        let u = GridField::from_fn(g, 1, |y| vec![y[0] * y[0]]).unwrap();
        let mu = discrete_apply(&catalog("hessian", 1).unwrap(), &u).unwrap();
        // Δ² y² = 2h², mass h^{1-2}·2h² = 2h
        for lin in mu.cells_in(&Region::Everywhere) {
            assert!((mu.mass(lin)[0] - 0.25).abs() < 1e-14);
        }
        assert!((total_variation(&mu, &Region::Everywhere) - 6.0 * 0.25).abs() < 1e-13);
    }

    #[test]
    fn too_small_grid() {
        let g = Grid::new(2, 0.0, 1.0, 1.0).unwrap();
        let u = GridField::from_fn(g, 1, |_| vec![0.0]).unwrap();
        assert!(matches!(
            discrete_apply(&catalog("gradient", 2).unwrap(), &u),
            Err(Error::GridTooSmall { cells: 1, required: 2 })
        ));
    }
}
