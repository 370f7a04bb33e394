//! Grid laboratory: cell-centred fields on `[lo, hi]^n`, the discrete
//! measure `B u`, and the estimates built on top of it.

mod density;
mod discrete;
mod io;
mod jump;
mod projection;
mod structure;

pub use density::{annulus_bound, riesz_potential, upper_density, DensityProfile};
pub use discrete::discrete_apply;
pub use io::{read_profile_csv, write_profile_csv};
pub use jump::{half_ball_avg, jump_detect, noise_floor, synth_jump, JumpTriple, Side};
pub use projection::{
    bump_derivative, poly_project, poly_project_raw, quasi_continuity_ratio, Projection, QuasiContinuityEntry,
    QuasiContinuityReport, MIN_PROJECTION_CELLS_PER_AXIS,
};
pub use structure::{
    fit_order, rank_one_solve, structure_check, structure_convergence, window_area, ConvergenceStudy,
    StructureReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid of `cells^n` cubes of side `h` covering `[lo, hi]^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    lo: f64,
    hi: f64,
    h: f64,
    cells: usize,
}

impl Grid {
    /// Requires `(hi - lo) / h` to be an integer.
    pub fn new(n: usize, lo: f64, hi: f64, h: f64) -> Result<Self> {
        if n == 0 || !(hi > lo) || !(h > 0.0) || !h.is_finite() || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad grid: n = {n}, box [{lo}, {hi}], h = {h}"
            )));
        }
        let ratio = (hi - lo) / h;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) || cells < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "box length {} is not a multiple of h = {h}",
                hi - lo
            )));
        }
        Self::with_cells(n, lo, hi, cells as usize)
    }

    pub fn with_cells(n: usize, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if n == 0 || cells == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "bad grid: n = {n}, box [{lo}, {hi}], {cells} cells"
            )));
        }
        Ok(Self {
            n,
            lo,
            hi,
            h: (hi - lo) / cells as f64,
            cells,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major linear index (axis 0 slowest).
    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.cells + i)
    }

    pub fn multi(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for a in (0..self.n).rev() {
            idx[a] = lin % self.cells;
            lin /= self.cells;
        }
        idx
    }

    pub fn center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .map(|&i| self.lo + (i as f64 + 0.5) * self.h)
            .collect()
    }

    pub fn center_of(&self, lin: usize) -> Vec<f64> {
        self.center(&self.multi(lin))
    }

    /// Index of the cell containing `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<Vec<usize>> {
        x.iter()
            .map(|&xi| {
                let t = ((xi - self.lo) / self.h).floor();
                (t >= 0.0 && (t as usize) < self.cells).then_some(t as usize)
            })
            .collect()
    }

    /// Whether `B_r(x)` lies in the closed box.
    pub fn contains_ball(&self, x: &[f64], r: f64) -> bool {
        x.iter().all(|&xi| xi - r >= self.lo - 1e-12 && xi + r <= self.hi + 1e-12)
    }

    /// Linear indices of cells whose centre lies in the closed ball `B_r(x)`.
    pub fn cells_in_ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        let range: Vec<(usize, usize)> = x
            .iter()
            .map(|&xi| {
                let a = ((xi - r - self.lo) / self.h - 0.5).ceil().max(0.0) as usize;
                let b = ((xi + r - self.lo) / self.h - 0.5).floor();
                let b = if b < 0.0 { 0 } else { (b as usize + 1).min(self.cells) };
                (a.min(self.cells), b)
            })
            .collect();
        let mut out = Vec::new();
        if range.iter().any(|(a, b)| a >= b) {
            return out;
        }
        let mut idx: Vec<usize> = range.iter().map(|r| r.0).collect();
        let r2 = r * r;
        loop {
            let c = self.center(&idx);
            let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= r2 {
                out.push(self.linear(&idx));
            }
            let mut axis = self.n;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < range[axis].1 {
                    break;
                }
                idx[axis] = range[axis].0;
            }
        }
    }
}

/// Cell-centred samples of a `R^dim`-valued function.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                what: "grid field values",
                expected: grid.len() * dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_fn<F>(grid: Grid, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        use rayon::prelude::*;
        let chunks: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|lin| f(&grid.center_of(lin)))
            .collect();
        if let Some(bad) = chunks.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "field function output",
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(grid, dim, chunks.concat())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, lin: usize) -> &[f64] {
        &self.values[lin * self.dim..(lin + 1) * self.dim]
    }

    /// Pointwise sum with another field on the same grid.
    pub fn add(&self, other: &GridField) -> Result<GridField> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        GridField::new(self.grid.clone(), self.dim, values)
    }
}

/// Cell masses of a `R^dim`-valued measure. Cells with an index above
/// `cells - 1 - layer` on some axis form the boundary layer: they carry no
/// mass and are ignored by every query.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureField {
    grid: Grid,
    dim: usize,
    layer: usize,
    masses: Vec<f64>,
}

impl MeasureField {
    pub fn new(grid: Grid, dim: usize, layer: usize, mut masses: Vec<f64>) -> Result<Self> {
        if dim == 0 || masses.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                what: "measure masses",
                expected: grid.len() * dim,
                found: masses.len(),
            });
        }
        if layer >= grid.cells() {
            return Err(Error::GridTooSmall {
                cells: grid.cells(),
                required: layer + 1,
            });
        }
        let mut out = Self {
            grid,
            dim,
            layer,
            masses: Vec::new(),
        };
        for lin in 0..out.grid.len() {
            if !out.is_interior(lin) {
                masses[lin * dim..(lin + 1) * dim].iter_mut().for_each(|m| *m = 0.0);
            }
        }
        out.masses = masses;
        Ok(out)
    }

    /// Masses `density(center) h^n`.
    pub fn from_density<F>(grid: Grid, dim: usize, layer: usize, density: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let vol = grid.h().powi(grid.n() as i32);
        let f = GridField::from_fn(grid.clone(), dim, |y| density(y).into_iter().map(|d| d * vol).collect())?;
        Self::new(grid, dim, layer, f.values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, lin: usize) -> &[f64] {
        &self.masses[lin * self.dim..(lin + 1) * self.dim]
    }

    /// `|mass|` in the Euclidean norm of `W`.
    pub fn mass_norm(&self, lin: usize) -> f64 {
        self.mass(lin).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_interior(&self, lin: usize) -> bool {
        let limit = self.grid.cells() - self.layer;
        self.grid.multi(lin).iter().all(|&i| i < limit)
    }

    /// Interior cells whose centre lies in `region`.
    pub fn cells_in(&self, region: &Region) -> Vec<usize> {
        let candidates: Vec<usize> = match region {
            Region::Ball { center, radius } => self.grid.cells_in_ball(center, *radius),
            _ => (0..self.grid.len()).collect(),
        };
        candidates
            .into_iter()
            .filter(|&lin| self.is_interior(lin) && region.contains(&self.grid.center_of(lin)))
            .collect()
    }

    /// Cell-wise sum with another measure on the same grid.
    pub fn add(&self, other: &MeasureField) -> Result<MeasureField> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::InvalidArgument("measures live on different grids".into()));
        }
        let masses = self.masses.iter().zip(&other.masses).map(|(a, b)| a + b).collect();
        MeasureField::new(self.grid.clone(), self.dim, self.layer.max(other.layer), masses)
    }
}

/// Query regions; membership is decided by cell centres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Everywhere,
}

impl Region {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let d2: f64 = y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= radius * radius
            }
            Region::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b),
            Region::Everywhere => true,
        }
    }
}

/// Pairwise (tree) summation; the result does not depend on thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `|μ|(region)`.
pub fn total_variation(mu: &MeasureField, region: &Region) -> f64 {
    let norms: Vec<f64> = mu.cells_in(region).into_iter().map(|lin| mu.mass_norm(lin)).collect();
    pairwise_sum(&norms)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// `H^{n-1}` measure of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_integral_cells() {
        assert!(Grid::new(2, -0.5, 0.5, 1.0 / 64.0).is_ok());
        assert!(Grid::new(2, 0.0, 1.0, 0.3).is_err());
        let g = Grid::new(3, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(g.len(), 64);
        let lin = g.linear(&[1, 2, 3]);
        assert_eq!(g.multi(lin), vec![1, 2, 3]);
        assert_eq!(g.center(&[0, 0, 3]), vec![0.125, 0.125, 0.875]);
        assert_eq!(g.locate(&[0.3, 0.99, 0.0]), Some(vec![1, 3, 0]));
        assert_eq!(g.locate(&[1.3, 0.0, 0.0]), None);
    }

    #[test]
    fn ball_cells_match_brute_force() {
        let g = Grid::new(2, -1.0, 1.0, 0.1).unwrap();
        let x = [0.13, -0.27];
        let fast = g.cells_in_ball(&x, 0.45);
        let slow: Vec<usize> = (0..g.len())
            .filter(|&l| Region::Ball { center: x.to_vec(), radius: 0.45 }.contains(&g.center_of(l)))
            .collect();
        assert_eq!(fast, slow);
        assert!(g.cells_in_ball(&[5.0, 5.0], 0.1).is_empty());
    }

    #[test]
    fn total_variation_is_additive() {
        let g = Grid::new(2, 0.0, 1.0, 0.05).unwrap();
        let mu = MeasureField::from_density(g, 1, 1, |y| vec![y[0] - 0.3]).unwrap();
        let a = Region::Ball { center: vec![0.25, 0.25], radius: 0.2 };
        let b = Region::Ball { center: vec![0.7, 0.7], radius: 0.2 };
        let all = total_variation(&mu, &Region::Everywhere);
        let interior: Vec<f64> = (0..mu.grid().len()).map(|l| mu.mass_norm(l)).collect();
        assert!((all - interior.iter().sum::<f64>()).abs() < 1e-12);
        let big = Region::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        assert!((total_variation(&mu, &big) - all).abs() < 1e-12);
        let sum = total_variation(&mu, &a) + total_variation(&mu, &b);
        let joint: f64 = mu
            .cells_in(&Region::Everywhere)
            .into_iter()
            .filter(|&l| a.contains(&mu.grid().center_of(l)) || b.contains(&mu.grid().center_of(l)))
            .map(|l| mu.mass_norm(l))
            .sum();
        assert!((sum - joint).abs() < 1e-12);
        let zero = MeasureField::new(mu.grid().clone(), 1, 1, vec![0.0; mu.grid().len()]).unwrap();
        assert_eq!(total_variation(&zero, &Region::Everywhere), 0.0);
    }

    #[test]
    fn boundary_layer_carries_no_mass() {
        let g = Grid::new(2, 0.0, 1.0, 0.25).unwrap();
        let mu = MeasureField::new(g, 1, 2, vec![1.0; 16]).unwrap();
        assert_eq!(total_variation(&mu, &Region::Everywhere), 4.0);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(sphere_area(1), 2.0);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-10);
    }
}
