use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, GridField};
use crate::operator::PolynomialField;
use crate::sphere::{hemisphere_grid, is_canonical, minimize_on_sphere, norm, normalized};

/// Fewest cells accepted in a half-ball.
pub const MIN_HALF_BALL_CELLS: usize = 20;
/// Jumps must exceed this multiple of the noise floor.
const NOISE_FACTOR: f64 = 10.0;
/// Allowed drift of the one-sided means between successive radii, relative
/// to the jump size.
const CAUCHY_FRACTION: f64 = 0.05;

/// One-sided values `a` (on the side `ν` points to) and `b`, with the
/// orientation fixed so that the first nonzero component of `ν` is positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpTriple {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub nu: Vec<f64>,
}

impl JumpTriple {
    /// Normalizes `ν` to unit length and picks the canonical orientation.
    pub fn new(a: Vec<f64>, b: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "jump values",
                expected: a.len(),
                found: b.len(),
            });
        }
        let size = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        if size == 0.0 {
            return Err(Error::InvalidArgument("a jump needs a ≠ b".into()));
        }
        if norm(&nu) < 1e-12 {
            return Err(Error::InvalidArgument("jump normal must be nonzero".into()));
        }
        let nu = normalized(&nu);
        Ok(if is_canonical(&nu) {
            Self { a, b, nu }
        } else {
            Self {
                a: b,
                b: a,
                nu: nu.iter().map(|x| -x).collect(),
            }
        })
    }

    /// `|a - b|`.
    pub fn size(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    pub fn difference(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// Samples `p_plus` where `(y - c ν)·ν ≥ 0` and `p_minus` elsewhere.
pub fn synth_jump(
    p_plus: &PolynomialField,
    p_minus: &PolynomialField,
    nu: &[f64],
    offset: f64,
    grid: &Grid,
) -> Result<GridField> {
    if (norm(nu) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("jump normal must be a unit vector".into()));
    }
    if p_plus.dim() != p_minus.dim() || p_plus.n() != grid.n() || p_minus.n() != grid.n() || nu.len() != grid.n()
    {
        return Err(Error::InvalidArgument("one-sided polynomials, normal and grid disagree in shape".into()));
    }
    GridField::from_fn(grid.clone(), p_plus.dim(), |y| {
        let s: f64 = y.iter().zip(nu).map(|(a, b)| a * b).sum::<f64>() - offset;
        if s >= 0.0 {
            p_plus.eval(y)
        } else {
            p_minus.eval(y)
        }
    })
}

fn check_ball(field: &GridField, x: &[f64], r: f64) -> Result<()> {
    if x.len() != field.grid().n() {
        return Err(Error::DimensionMismatch {
            what: "point",
            expected: field.grid().n(),
            found: x.len(),
        });
    }
    if !(r > 0.0) || !field.grid().contains_ball(x, r) {
        return Err(Error::InadmissibleRadius {
            radius: r,
            reason: "ball leaves the grid".into(),
        });
    }
    Ok(())
}

/// Means over `{⟨ν, y-x⟩ > 0}` and `{⟨ν, y-x⟩ < 0}` among `cells`.
fn half_means(field: &GridField, cells: &[usize], x: &[f64], nu: &[f64]) -> (Vec<f64>, usize, Vec<f64>, usize) {
    let dim = field.dim();
    let g = field.grid();
    let (mut plus, mut minus) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut np, mut nm) = (0, 0);
    for &lin in cells {
        let c = g.center_of(lin);
        let s: f64 = c.iter().zip(x).zip(nu).map(|((ci, xi), v)| (ci - xi) * v).sum();
        let u = field.value(lin);
        if s > 0.0 {
            plus.iter_mut().zip(u).for_each(|(p, v)| *p += v);
            np += 1;
        } else if s < 0.0 {
            minus.iter_mut().zip(u).for_each(|(m, v)| *m += v);
            nm += 1;
        }
    }
    plus.iter_mut().for_each(|p| *p /= np.max(1) as f64);
    minus.iter_mut().for_each(|m| *m /= nm.max(1) as f64);
    (plus, np, minus, nm)
}

/// Mean of the field over the half-ball of `B_r(x)` on the given side of
/// the hyperplane through `x` with normal `ν`.
pub fn half_ball_avg(field: &GridField, x: &[f64], nu: &[f64], r: f64, side: Side) -> Result<Vec<f64>> {
    check_ball(field, x, r)?;
    let cells = field.grid().cells_in_ball(x, r);
    let (plus, np, minus, nm) = half_means(field, &cells, x, nu);
    let (mean, count) = match side {
        Side::Plus => (plus, np),
        Side::Minus => (minus, nm),
    };
    if count < MIN_HALF_BALL_CELLS {
        return Err(Error::TooFewCells {
            found: count,
            required: MIN_HALF_BALL_CELLS,
        });
    }
    Ok(mean)
}

/// Median over cells of the largest forward difference to an axis
/// neighbour.
pub fn noise_floor(field: &GridField) -> f64 {
    let g = field.grid();
    let mut diffs: Vec<f64> = (0..g.len())
        .into_par_iter()
        .filter_map(|lin| {
            let idx = g.multi(lin);
            let u = field.value(lin);
            let mut best: Option<f64> = None;
            for a in 0..g.n() {
                if idx[a] + 1 >= g.cells() {
                    continue;
                }
                let mut j = idx.clone();
                j[a] += 1;
                let v = field.value(g.linear(&j));
                let d = u.iter().zip(v).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
                best = Some(best.map_or(d, |b: f64| b.max(d)));
            }
            best
        })
        .collect();
    if diffs.is_empty() {
        return 0.0;
    }
    let mid = diffs.len() / 2;
    let (_, m, _) = diffs.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// `Σ (⟨u, e⟩ - mean)(y - x)` over `cells`, with `e` the direction of the
/// one-sided contrast along `nu`; parallel to the normal of a flat jump
/// through `x`.
fn moment_normal(field: &GridField, cells: &[usize], x: &[f64], nu: &[f64]) -> Option<Vec<f64>> {
    let (p, _, m, _) = half_means(field, cells, x, nu);
    let e: Vec<f64> = p.iter().zip(&m).map(|(a, b)| a - b).collect();
    let g = field.grid();
    let proj: Vec<f64> = cells
        .iter()
        .map(|&lin| field.value(lin).iter().zip(&e).map(|(u, w)| u * w).sum())
        .collect();
    let mean = proj.iter().sum::<f64>() / proj.len().max(1) as f64;
    let mut moment = vec![0.0; x.len()];
    for (&lin, v) in cells.iter().zip(&proj) {
        for (acc, (c, xi)) in moment.iter_mut().zip(g.center_of(lin).iter().zip(x)) {
            *acc += (v - mean) * (c - xi);
        }
    }
    let len = norm(&moment);
    if !(len > 0.0) {
        return None;
    }
    let sign = if moment.iter().zip(nu).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Some(moment.iter().map(|v| sign * v / len).collect())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Looks for an approximate jump at `x`. The normal maximizes the one-sided
/// contrast at the smallest radius; the triple is accepted when the
/// one-sided means settle along `radii` and the contrast clears the noise
/// floor.
pub fn jump_detect(
    field: &GridField,
    x: &[f64],
    radii: &[f64],
    nu_grid_resolution: usize,
) -> Result<Option<JumpTriple>> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("at least one radius is required".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly decreasing".into()));
    }
    for &r in radii {
        check_ball(field, x, r)?;
    }
    let n = field.grid().n();
    let r_min = *radii.last().expect("nonempty");
    let small = field.grid().cells_in_ball(x, r_min);
    let contrast = |nu: &[f64]| {
        let (p, np, m, nm) = half_means(field, &small, x, nu);
        if np < MIN_HALF_BALL_CELLS || nm < MIN_HALF_BALL_CELLS {
            0.0
        } else {
            distance(&p, &m)
        }
    };
    let directions = hemisphere_grid(n, nu_grid_resolution.max(4));
    let scores: Vec<f64> = directions.par_iter().map(|d| contrast(d)).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    if scores[best] == 0.0 {
        return Ok(None);
    }
    let step = std::f64::consts::PI / nu_grid_resolution.max(4) as f64;
    let (nu, _) = minimize_on_sphere(&directions[best], step, 100, |d| -contrast(d));

    let big = field.grid().cells_in_ball(x, radii[0]);
    let nu = moment_normal(field, &big, x, &nu).unwrap_or(nu);
    let (bp, bn) = {
        let (_, np, _, nm) = half_means(field, &big, x, &nu);
        (np, nm)
    };
    if bp < MIN_HALF_BALL_CELLS || bn < MIN_HALF_BALL_CELLS {
        return Err(Error::TooFewCells {
            found: bp.min(bn),
            required: MIN_HALF_BALL_CELLS,
        });
    }
    let means: Vec<(Vec<f64>, Vec<f64>)> = radii
        .iter()
        .map(|&r| {
            let cells = field.grid().cells_in_ball(x, r);
            let (p, _, m, _) = half_means(field, &cells, x, &nu);
            (p, m)
        })
        .collect();
    let (a, b) = means.last().cloned().expect("nonempty");
    let size = distance(&a, &b);
    if size <= NOISE_FACTOR * noise_floor(field) {
        return Ok(None);
    }
    let settled = means.windows(2).all(|w| {
        distance(&w[0].0, &w[1].0) < CAUCHY_FRACTION * size && distance(&w[0].1, &w[1].1) < CAUCHY_FRACTION * size
    });
    if !settled {
        return Ok(None);
    }
    JumpTriple::new(a, b, nu).map(Some)
}
