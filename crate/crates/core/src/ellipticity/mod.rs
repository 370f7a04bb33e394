//! Ellipticity constants, complex ellipticity and the mixing condition.

mod complex;
mod mixing;

pub use complex::{complex_falsify, is_c_elliptic, CEllipticity, ComplexWitness, Decision, WITNESS_TOL};
pub use mixing::{
    mixing_falsify, mixing_triple_test, triple_intersection_dim, MixingReport, MixingStatus,
    MixingWitness, TripleHistogram, MIXING_TOL,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DiffOperator;
use crate::sphere::{hemisphere_grid, minimize_on_sphere};
use crate::tensor::min_gain;

/// Relative threshold (against the largest coefficient norm) above which an
/// estimated constant counts as elliptic.
pub const ELLIPTIC_REL_TOL: f64 = 1e-6;

/// Estimate of the best `c` in `|B(ξ)v| ≥ c |ξ|^k |v|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// An upper bound on the true constant.
    pub constant: f64,
    pub minimizer_xi: Vec<f64>,
    pub elliptic: bool,
    /// Grid directions evaluated before refinement.
    pub samples: usize,
}

/// `σ_min(B(ξ))` at a unit `ξ`.
pub fn symbol_gain(op: &DiffOperator, xi: &[f64]) -> f64 {
    min_gain(&op.symbol(xi))
}

/// Minimizes `σ_min(B(ξ))` over a hyperspherical grid with
/// `grid_resolution` points per great circle, then refines the best sample
/// by compass search for at most `refine_steps` iterations.
pub fn ellipticity_constant(
    op: &DiffOperator,
    grid_resolution: usize,
    refine_steps: usize,
) -> Result<EllipticityReport> {
    if grid_resolution < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution {grid_resolution} is below 8 points per great circle"
        )));
    }
    let n = op.n();
    // σ_min(B(-ξ)) = σ_min(B(ξ)), so half the sphere suffices.
    let grid = hemisphere_grid(n, grid_resolution);
    let values: Vec<f64> = grid.par_iter().map(|xi| symbol_gain(op, xi)).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let step = std::f64::consts::PI / grid_resolution as f64;
    let (xi, constant) = if refine_steps > 0 {
        minimize_on_sphere(&grid[best], step, refine_steps, |x| symbol_gain(op, x))
    } else {
        (grid[best].clone(), values[best])
    };
    let constant = constant.max(0.0);
    Ok(EllipticityReport {
        elliptic: constant > ELLIPTIC_REL_TOL * op.max_coefficient_norm(),
        constant,
        minimizer_xi: xi,
        samples: grid.len(),
    })
}
