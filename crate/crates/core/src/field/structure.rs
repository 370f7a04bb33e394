use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{discrete_apply, pairwise_sum, sphere_area, synth_jump, Grid, JumpTriple, MeasureField};
use crate::operator::{DiffOperator, PolynomialField};
use crate::sphere::norm;
use crate::tensor::{sym_power, SymIndexSet};

/// Half-width of the interface tube, in cells.
const TUBE_CELLS: f64 = 3.0;

fn bump(q: f64) -> f64 {
    if q >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - q)).exp()
    }
}

/// `∫_{R^{n-1}} ψ(|z|²/R²) dz`, the weighted area of the lateral window.
pub fn window_area(n: usize, radius: f64) -> f64 {
    if n == 1 {
        return bump(0.0);
    }
    // Simpson's rule on [0, 1]; the integrand is flat at both ends.
    let steps = 20_000;
    let f = |rho: f64| bump(rho * rho) * rho.powi(n as i32 - 2);
    let h = 1.0 / steps as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    radius.powi(n as i32 - 1) * sphere_area(n - 1) * s * h / 3.0
}

/// Interface density measured on a discrete `B u` versus `B(ν)(a - b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub measured: Vec<f64>,
    pub expected: Vec<f64>,
    pub relative_error: f64,
    pub h: f64,
    pub window_radius: f64,
    pub tube_cells: usize,
}

/// Sums the masses in the tube `|⟨y - x0, ν⟩| ≤ 3h`, weighted by a smooth
/// lateral window `ψ(|P⊥(y - x0)|²/R²)`, and divides by the window area.
pub fn structure_check(
    op: &DiffOperator,
    mu: &MeasureField,
    expected: &JumpTriple,
    x0: &[f64],
    window_radius: f64,
) -> Result<StructureReport> {
    let g = mu.grid();
    let n = g.n();
    if x0.len() != n || expected.nu.len() != n {
        return Err(Error::DimensionMismatch {
            what: "interface point",
            expected: n,
            found: x0.len(),
        });
    }
    if mu.dim() != op.dim_w() {
        return Err(Error::DimensionMismatch {
            what: "measure components",
            expected: op.dim_w(),
            found: mu.dim(),
        });
    }
    let target = op.b_tensor(&expected.difference(), &expected.nu)?;
    let h = g.h();
    let nu = &expected.nu;
    let reach = window_radius + TUBE_CELLS * h * 2.0;
    let cells: Vec<(usize, f64)> = g
        .cells_in_ball(x0, reach)
        .into_iter()
        .filter(|&lin| mu.is_interior(lin))
        .filter_map(|lin| {
            let d: Vec<f64> = g.center_of(lin).iter().zip(x0).map(|(c, x)| c - x).collect();
            let s: f64 = d.iter().zip(nu).map(|(a, b)| a * b).sum();
            if s.abs() > TUBE_CELLS * h {
                return None;
            }
            let lateral2 = d.iter().map(|v| v * v).sum::<f64>() - s * s;
            let w = bump(lateral2.max(0.0) / (window_radius * window_radius));
            (w > 0.0).then_some((lin, w))
        })
        .collect();
    let area = window_area(n, window_radius);
    let measured: Vec<f64> = (0..mu.dim())
        .map(|c| {
            let terms: Vec<f64> = cells.iter().map(|&(lin, w)| w * mu.mass(lin)[c]).collect();
            pairwise_sum(&terms) / area
        })
        .collect();
    let diff: Vec<f64> = measured.iter().zip(&target).map(|(a, b)| a - b).collect();
    let scale = norm(&target);
    if scale == 0.0 {
        return Err(Error::InvalidArgument("expected interface density vanishes".into()));
    }
    Ok(StructureReport {
        relative_error: norm(&diff) / scale,
        measured,
        expected: target,
        h,
        window_radius,
        tube_cells: cells.len(),
    })
}

/// Least-squares slope of `ln e` against `ln h`; `None` when an error is
/// zero (exact) or fewer than two points are given.
pub fn fit_order(hs: &[f64], errors: &[f64]) -> Option<f64> {
    if hs.len() < 2 || hs.len() != errors.len() || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub hs: Vec<f64>,
    pub reports: Vec<StructureReport>,
    /// Fitted order; absent when the finest errors are exactly zero.
    pub order: Option<f64>,
}

/// Runs [`structure_check`] on constant jumps `(a, b, ν)` through `x0`,
/// synthesized on `[lo, hi]^n` with each cell count in `cells`.
pub fn structure_convergence(
    op: &DiffOperator,
    triple: &JumpTriple,
    x0: &[f64],
    window_radius: f64,
    lo: f64,
    hi: f64,
    cells: &[usize],
) -> Result<ConvergenceStudy> {
    let n = op.n();
    let offset: f64 = x0.iter().zip(&triple.nu).map(|(a, b)| a * b).sum();
    let plus = PolynomialField::constant(n, triple.a.clone());
    let minus = PolynomialField::constant(n, triple.b.clone());
    let mut reports = Vec::with_capacity(cells.len());
    for &c in cells {
        let grid = Grid::with_cells(n, lo, hi, c)?;
        let u = synth_jump(&plus, &minus, &triple.nu, offset, &grid)?;
        let mu = discrete_apply(op, &u)?;
        reports.push(structure_check(op, &mu, triple, x0, window_radius)?);
    }
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let errors: Vec<f64> = reports.iter().map(|r| r.relative_error).collect();
    Ok(ConvergenceStudy {
        order: fit_order(&hs, &errors),
        hs,
        reports,
    })
}

/// Relative residual below which a rank-one connection is accepted.
const RANK_ONE_TOL: f64 = 1e-8;

/// Solves `a ⊗^{k-1} ν = f_diff` in least squares (monomial layout,
/// component `(j, β)` at `j |Sym| + rank(β)`); returns `a` when the
/// relative residual is below `1e-8`.
pub fn rank_one_solve(f_diff: &[f64], dim_v: usize, nu: &[f64], k: usize) -> Result<Option<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("order k must be ≥ 1".into()));
    }
    if (norm(nu) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("normal must be a unit vector".into()));
    }
    let set = SymIndexSet::new(nu.len(), k - 1);
    let rows = dim_v * set.len();
    if f_diff.len() != rows {
        return Err(Error::DimensionMismatch {
            what: "jump tensor",
            expected: rows,
            found: f_diff.len(),
        });
    }
    if k == 1 {
        return Ok(Some(f_diff.to_vec()));
    }
    let fnorm = norm(f_diff);
    if fnorm == 0.0 {
        return Ok(Some(vec![0.0; dim_v]));
    }
    let mut m = DMatrix::zeros(rows, dim_v);
    for j in 0..dim_v {
        let mut e = vec![0.0; dim_v];
        e[j] = 1.0;
        m.set_column(j, &DVector::from_vec(sym_power(&e, nu, k - 1)?));
    }
    let rhs = DVector::from_column_slice(f_diff);
    let a = m
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Inconsistent(e.to_string()))?;
    let residual = (&m * &a - &rhs).norm() / fnorm;
    Ok((residual < RANK_ONE_TOL).then(|| a.iter().copied().collect()))
}
