use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DiffOperator;
use crate::sphere::{dot, minimize_on_sphere, norm, orthonormal_complement, random_unit, stream_rng};
use crate::tensor::{subspace_image, subspace_intersect, Subspace};

/// Distance below which a vector counts as lying in a union of images.
pub const MIXING_TOL: f64 = 1e-6;
/// Candidates whose worst distance falls in `[MIXING_TOL, INCONCLUSIVE_BAND)`
/// are neither accepted nor rejected.
const INCONCLUSIVE_BAND: f64 = 1e-4;
/// Grid distance below which a hyperplane is refined by local search.
const REFINE_BELOW: f64 = 0.05;
/// Grid directions per hyperplane used to generate candidates.
const CANDIDATE_SUBGRID: usize = 24;
/// Minimum `|sin|` of the angle between two directions of a triple.
const INDEPENDENCE_SIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingStatus {
    PassesSamples,
    Falsified,
    Inconclusive,
}

/// A nonzero `w` close to `⋃_{ξ∈π} im B(ξ)` for every sampled `π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingWitness {
    pub w: Vec<f64>,
    /// Normal of the hyperplane where `w` is farthest from the union.
    pub hyperplane_normal: Vec<f64>,
    /// Largest distance over all sampled hyperplanes.
    pub residual: f64,
}

/// `dim(im B(ξ) ∩ im B(η) ∩ im B(ω))` → number of sampled triples.
pub type TripleHistogram = BTreeMap<usize, usize>;

/// Sampling evidence for the mixing condition; never a proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub satisfied: MixingStatus,
    pub witness: Option<MixingWitness>,
    pub triple_dims: TripleHistogram,
    pub hyperplanes: usize,
    pub xi_grid: usize,
    pub candidates: usize,
    pub seed: u64,
}

fn require_first_order(op: &DiffOperator) -> Result<()> {
    if op.order() != 1 {
        return Err(Error::NotFirstOrder(op.order()));
    }
    Ok(())
}

fn image(op: &DiffOperator, xi: &[f64]) -> Subspace<f64> {
    subspace_image(&op.symbol(xi))
}

/// Dimension of the common part of the three symbol images.
pub fn triple_intersection_dim(op: &DiffOperator, xi: &[f64], eta: &[f64], omega: &[f64]) -> Result<usize> {
    let ab = subspace_intersect(&image(op, xi), &image(op, eta))?;
    Ok(subspace_intersect(&ab, &image(op, omega))?.dim())
}

fn independent(a: &[f64], b: &[f64]) -> bool {
    let c = dot(a, b);
    (1.0 - c * c).max(0.0).sqrt() > INDEPENDENCE_SIN
}

/// Histogram of triple-intersection dimensions over `trials` random
/// pairwise independent unit triples. Trial `t` draws from stream `t`.
pub fn mixing_triple_test(op: &DiffOperator, trials: usize, seed: u64) -> Result<TripleHistogram> {
    require_first_order(op)?;
    let n = op.n();
    if n < 2 {
        return Err(Error::InvalidArgument("triples need n ≥ 2".into()));
    }
    let dims = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            loop {
                let x = random_unit(&mut rng, n);
                let y = random_unit(&mut rng, n);
                let z = random_unit(&mut rng, n);
                if independent(&x, &y) && independent(&y, &z) && independent(&x, &z) {
                    return triple_intersection_dim(op, &x, &y, &z);
                }
            }
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut hist = TripleHistogram::new();
    for d in dims {
        *hist.entry(d).or_default() += 1;
    }
    Ok(hist)
}

/// A sampled hyperplane: its normal, an orthonormal basis, grid directions
/// and the complement projectors of their images.
struct Hyperplane {
    normal: Vec<f64>,
    basis: Vec<Vec<f64>>,
    directions: Vec<Vec<f64>>,
    complements: Vec<DMatrix<f64>>,
}

fn embed(basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut x = vec![0.0; n];
    for (b, &ci) in basis.iter().zip(c) {
        x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += ci * bi);
    }
    x
}

fn hyperplane(op: &DiffOperator, normal: Vec<f64>, xi_grid: usize, seed: u64, index: usize) -> Hyperplane {
    let n = normal.len();
    let basis = orthonormal_complement(std::slice::from_ref(&normal), n);
    // Images are even in ξ, so half of each great circle is enough.
    let coeffs: Vec<Vec<f64>> = match n {
        2 => vec![vec![1.0]],
        3 => (0..xi_grid)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / xi_grid as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, index as u64);
            (0..xi_grid).map(|_| random_unit(&mut rng, n - 1)).collect()
        }
    };
    let directions: Vec<Vec<f64>> = coeffs.iter().map(|c| embed(&basis, c)).collect();
    let complements = directions
        .iter()
        .map(|d| image(op, d).complement_projector())
        .collect();
    Hyperplane {
        normal,
        basis,
        directions,
        complements,
    }
}

/// `min_{ξ∈π} dist(w, im B(ξ))` for unit `w`, refined when the grid value
/// is small.
fn distance_to_union(op: &DiffOperator, plane: &Hyperplane, w: &DVector<f64>) -> f64 {
    let mut best = (f64::INFINITY, 0);
    for (j, c) in plane.complements.iter().enumerate() {
        let d = (c * w).norm();
        if d < best.0 {
            best = (d, j);
        }
    }
    if best.0 < MIXING_TOL || best.0 >= REFINE_BELOW || plane.basis.len() < 2 {
        return best.0;
    }
    let start: Vec<f64> = plane.basis.iter().map(|b| dot(b, &plane.directions[best.1])).collect();
    let step = std::f64::consts::PI / plane.directions.len().max(2) as f64;
    let (_, refined) = minimize_on_sphere(&start, step, 200, |c| {
        let xi = embed(&plane.basis, c);
        image(op, &xi).residual(w)
    });
    refined.min(best.0)
}

/// Searches for a nonzero `w` lying (within [`MIXING_TOL`]) in the union of
/// symbol images over every sampled hyperplane. Candidates are the common
/// image vectors of grid directions on the first two hyperplanes.
pub fn mixing_falsify(
    op: &DiffOperator,
    hyperplane_samples: usize,
    xi_grid: usize,
    seed: u64,
) -> Result<MixingReport> {
    require_first_order(op)?;
    let n = op.n();
    if n < 2 {
        return Err(Error::InvalidArgument("mixing needs n ≥ 2".into()));
    }
    if hyperplane_samples < 2 || xi_grid == 0 {
        return Err(Error::InvalidArgument(
            "need at least two hyperplanes and one grid direction".into(),
        ));
    }
    let planes: Vec<Hyperplane> = (0..hyperplane_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            hyperplane(op, random_unit(&mut rng, n), xi_grid, seed, i)
        })
        .collect();

    let sub = |p: &Hyperplane| -> Vec<Vec<f64>> {
        let m = p.directions.len();
        let take = m.min(CANDIDATE_SUBGRID);
        (0..take).map(|t| p.directions[t * m / take].clone()).collect()
    };
    let (first, second) = (sub(&planes[0]), sub(&planes[1]));
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    for a in &first {
        let ia = image(op, a);
        for b in &second {
            let common = subspace_intersect(&ia, &image(op, b))?;
            for c in 0..common.dim() {
                candidates.push(common.basis().column(c).into_owned());
            }
        }
    }

    // Worst distance of each candidate; stops at the first clear failure.
    let scores: Vec<(f64, usize)> = candidates
        .par_iter()
        .map(|w| {
            let mut worst = (0.0, 0);
            for (i, p) in planes.iter().enumerate() {
                let d = distance_to_union(op, p, w);
                if d > worst.0 {
                    worst = (d, i);
                }
                if d >= INCONCLUSIVE_BAND {
                    break;
                }
            }
            worst
        })
        .collect();

    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)));
    let (satisfied, witness) = match best {
        Some((c, &(res, plane))) if res < INCONCLUSIVE_BAND => {
            let w = &candidates[c];
            let sign = if crate::sphere::is_canonical(w.as_slice()) { 1.0 } else { -1.0 };
            let witness = MixingWitness {
                w: w.iter().map(|x| sign * x / norm(w.as_slice())).collect(),
                hyperplane_normal: planes[plane].normal.clone(),
                residual: res,
            };
            let status = if res < MIXING_TOL {
                MixingStatus::Falsified
            } else {
                MixingStatus::Inconclusive
            };
            (status, Some(witness))
        }
        _ => (MixingStatus::PassesSamples, None),
    };
    Ok(MixingReport {
        satisfied,
        witness,
        triple_dims: TripleHistogram::new(),
        hyperplanes: hyperplane_samples,
        xi_grid,
        candidates: candidates.len(),
        seed,
    })
}
