//! Moment-based polynomial projection onto a ball.
//!
//! With `w(z) = ψ(|z-x|²/r²) / ∫ψ` and `ψ(q) = exp(-1/(1-q))`, the
//! projection of degree `L = ℓ - 1` is
//!
//! `P u(y) = ∫ Σ_{|β|≤L} ∂^β_z((z-y)^β/β! w(z)) u(z) dz`
//!         `= Σ_{|γ|≤L} C_γ/γ! ∫ (z-y)^γ ∂^γ w(z) u(z) dz`,
//!
//! with `C_γ = Σ_{γ≤β, |β|≤L} binom(β, γ)`. The integral is a cell sum in
//! the local variable `ζ = (z-x)/r`. Cell quadrature of `∂^γ ψ` is not
//! exact, so the raw operator `Q` is composed with the inverse of its own
//! action `G` on the local monomials of degree `≤ L`; the result reproduces
//! those monomials to rounding, and `‖G - I‖` is reported.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{discrete_apply, total_variation, GridField, Region};
use crate::operator::{ell_bound, DiffOperator, PolynomialField};
use crate::tensor::{multiindices_up_to, MultiIndex};

/// A projection ball must contain at least this many cells per axis, i.e.
/// `8^n` cells in total.
pub const MIN_PROJECTION_CELLS_PER_AXIS: usize = 8;

/// `τ ↦ P_j(τ)` with `ψ^{(j)}(q) = P_j(τ) e^{-τ}`, `τ = 1/(1-q)`.
fn profile_polynomials(order: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    for j in 0..order {
        let p = &out[j];
        // P' - P
        let mut d = vec![0.0; p.len()];
        for (i, c) in p.iter().enumerate() {
            d[i] -= c;
            if i > 0 {
                d[i - 1] += i as f64 * c;
            }
        }
        // multiply by τ²
        let mut next = vec![0.0; 2];
        next.extend(d);
        out.push(next);
    }
    out
}

fn eval_1d(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// `ψ^{(j)}(q)` for `j = 0..=order`.
fn profile_derivatives(polys: &[Vec<f64>], q: f64) -> Vec<f64> {
    if q >= 1.0 {
        return vec![0.0; polys.len()];
    }
    let tau = 1.0 / (1.0 - q);
    if tau > 700.0 {
        return vec![0.0; polys.len()];
    }
    let e = (-tau).exp();
    polys.iter().map(|p| eval_1d(p, tau) * e).collect()
}

/// `∂^γ ψ(|ζ|²) = Σ_j ψ^{(j)}(|ζ|²) R_{γ,j}(ζ)`.
struct BumpDerivatives {
    profiles: Vec<Vec<f64>>,
    expansions: BTreeMap<MultiIndex, Vec<PolynomialField>>,
}

impl BumpDerivatives {
    fn new(n: usize, max_order: usize) -> Self {
        let mut expansions: BTreeMap<MultiIndex, Vec<PolynomialField>> = BTreeMap::new();
        for gamma in multiindices_up_to(n, max_order) {
            let terms = match (0..n).find(|&i| gamma.get(i) > 0) {
                None => vec![PolynomialField::constant(n, vec![1.0])],
                Some(i) => {
                    let parent = gamma.checked_sub(&MultiIndex::unit(n, i)).expect("γ_i > 0");
                    let prev = &expansions[&parent];
                    let mut next = vec![PolynomialField::zero(n, 1); prev.len() + 1];
                    let mut two_zeta_i = PolynomialField::zero(n, 1);
                    two_zeta_i.add_term(MultiIndex::unit(n, i), &[2.0]);
                    for (j, r) in prev.iter().enumerate() {
                        next[j + 1] = next[j + 1].add(&poly_mul_scalar(&two_zeta_i, r)).expect("shapes");
                        next[j] = next[j].add(&r.derivative(&MultiIndex::unit(n, i))).expect("shapes");
                    }
                    next
                }
            };
            expansions.insert(gamma, terms);
        }
        Self {
            profiles: profile_polynomials(max_order),
            expansions,
        }
    }

    fn eval(&self, gamma: &MultiIndex, zeta: &[f64]) -> f64 {
        let q: f64 = zeta.iter().map(|z| z * z).sum();
        let d = profile_derivatives(&self.profiles, q);
        self.expansions[gamma]
            .iter()
            .enumerate()
            .map(|(j, r)| if d[j] == 0.0 { 0.0 } else { d[j] * r.eval(zeta)[0] })
            .sum()
    }
}

/// Product of two scalar polynomials.
fn poly_mul_scalar(a: &PolynomialField, b: &PolynomialField) -> PolynomialField {
    let mut out = PolynomialField::zero(a.n(), 1);
    for (ea, ca) in a.terms() {
        for (eb, cb) in b.terms() {
            out.add_term(ea.add(eb), &[ca[0] * cb[0]]);
        }
    }
    out
}

/// `∂^γ_ζ ψ(|ζ|²)` for the standard bump `ψ(q) = exp(-1/(1-q))`.
pub fn bump_derivative(gamma: &MultiIndex, zeta: &[f64]) -> f64 {
    BumpDerivatives::new(zeta.len(), gamma.order()).eval(gamma, zeta)
}

/// Result of [`poly_project`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    /// The polynomial in global coordinates `y`.
    pub poly: PolynomialField,
    pub degree: usize,
    pub cells: usize,
    /// Largest entry of `G - I` (quadrature defect of the raw formula).
    pub reproduction_defect: f64,
}

struct Quadrature {
    basis: Vec<MultiIndex>,
    /// Per cell: `(lin, ζ, [∂^γ ψ(ζ) for γ in basis])`.
    nodes: Vec<(usize, Vec<f64>, Vec<f64>)>,
    normalizer: f64,
    weights: Vec<f64>,
}

impl Quadrature {
    fn new(field: &GridField, x: &[f64], r: f64, degree: usize) -> Result<Self> {
        let g = field.grid();
        let n = g.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                what: "projection centre",
                expected: n,
                found: x.len(),
            });
        }
        if !(r > 0.0) || !g.contains_ball(x, r) {
            return Err(Error::InadmissibleRadius {
                radius: r,
                reason: "projection ball leaves the grid".into(),
            });
        }
        let cells = g.cells_in_ball(x, r);
        let required = MIN_PROJECTION_CELLS_PER_AXIS.pow(n as u32);
        if cells.len() < required {
            return Err(Error::TooFewCells {
                found: cells.len(),
                required,
            });
        }
        let basis = multiindices_up_to(n, degree);
        let bump = BumpDerivatives::new(n, degree);
        let nodes: Vec<(usize, Vec<f64>, Vec<f64>)> = cells
            .into_iter()
            .map(|lin| {
                let zeta: Vec<f64> = g.center_of(lin).iter().zip(x).map(|(c, xi)| (c - xi) / r).collect();
                let d = basis.iter().map(|gam| bump.eval(gam, &zeta)).collect();
                (lin, zeta, d)
            })
            .collect();
        let normalizer: f64 = nodes.iter().map(|(_, _, d)| d[0]).sum();
        // C_γ / γ!
        let weights = basis
            .iter()
            .map(|gam| {
                let c: f64 = basis.iter().filter(|b| gam.le(b)).map(|b| b.binomial(gam)).sum();
                c / gam.factorial()
            })
            .collect();
        Ok(Self {
            basis,
            nodes,
            normalizer,
            weights,
        })
    }

    /// Raw local coefficients (index `η` in `basis`) for samples `u` given
    /// per node.
    fn raw(&self, values: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; dim]; self.basis.len()];
        for (gi, gamma) in self.basis.iter().enumerate() {
            for (ei, eta) in self.basis.iter().enumerate() {
                let Some(mu) = gamma.checked_sub(eta) else {
                    continue;
                };
                let sign = if eta.order() % 2 == 0 { 1.0 } else { -1.0 };
                let w = self.weights[gi] * gamma.binomial(eta) * sign / self.normalizer;
                for ((_, zeta, d), u) in self.nodes.iter().zip(values) {
                    let f = w * mu.monomial(zeta) * d[gi];
                    out[ei].iter_mut().zip(u).for_each(|(o, v)| *o += f * v);
                }
            }
        }
        out
    }

    /// `G[η][μ]`: raw coefficient of `s^η` for the input `ζ^μ`.
    fn reproduction_matrix(&self) -> DMatrix<f64> {
        let m = self.basis.len();
        let mut g = DMatrix::zeros(m, m);
        for (mi, mu) in self.basis.iter().enumerate() {
            let values: Vec<Vec<f64>> = self.nodes.iter().map(|(_, z, _)| vec![mu.monomial(z)]).collect();
            for (ei, c) in self.raw(&values, 1).into_iter().enumerate() {
                g[(ei, mi)] = c[0];
            }
        }
        g
    }
}

fn local_to_global(
    basis: &[MultiIndex],
    coeffs: &[Vec<f64>],
    n: usize,
    dim: usize,
    x: &[f64],
    r: f64,
) -> PolynomialField {
    let mut local = PolynomialField::zero(n, dim);
    for (b, c) in basis.iter().zip(coeffs) {
        local.add_term(b.clone(), c);
    }
    local.from_local(x, r)
}

fn build(field: &GridField, x: &[f64], r: f64, ell: usize, corrected: bool) -> Result<Projection> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ℓ must be ≥ 1".into()));
    }
    let degree = ell - 1;
    let quad = Quadrature::new(field, x, r, degree)?;
    let dim = field.dim();
    let values: Vec<Vec<f64>> = quad.nodes.iter().map(|(lin, _, _)| field.value(*lin).to_vec()).collect();
    let raw = quad.raw(&values, dim);
    let g = quad.reproduction_matrix();
    let m = quad.basis.len();
    let defect = (&g - DMatrix::identity(m, m)).amax();
    let coeffs = if corrected {
        let lu = g.lu();
        let mut out = vec![vec![0.0; dim]; m];
        for c in 0..dim {
            let rhs = DVector::from_fn(m, |i, _| raw[i][c]);
            let sol = lu
                .solve(&rhs)
                .ok_or_else(|| Error::Inconsistent("singular reproduction matrix".into()))?;
            for i in 0..m {
                out[i][c] = sol[i];
            }
        }
        out
    } else {
        raw
    };
    Ok(Projection {
        poly: local_to_global(&quad.basis, &coeffs, field.grid().n(), dim, x, r),
        degree,
        cells: quad.nodes.len(),
        reproduction_defect: defect,
    })
}

/// Projection of degree `ℓ - 1` onto `B_r(x)`, exact on polynomials of that
/// degree.
pub fn poly_project(field: &GridField, x: &[f64], r: f64, ell: usize) -> Result<Projection> {
    build(field, x, r, ell, true)
}

/// The plain cell quadrature of the projection formula, without the
/// reproduction correction.
pub fn poly_project_raw(field: &GridField, x: &[f64], r: f64, ell: usize) -> Result<Projection> {
    build(field, x, r, ell, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiContinuityEntry {
    pub r: f64,
    /// Mean of `|u - P u|` over `B_r(x)`.
    pub numerator: f64,
    /// `|B u|(B_r(x)) / r^{n-1}`.
    pub denominator: f64,
    pub ratio: f64,
    /// Set when both numerator and denominator vanish.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiContinuityReport {
    pub ell: usize,
    pub entries: Vec<QuasiContinuityEntry>,
    /// Largest ratio.
    pub fitted_constant: f64,
    /// Largest over smallest nonzero ratio (1 when fewer than two).
    pub spread: f64,
}

/// Below this both sides of the estimate count as zero.
const ZERO_LEVEL: f64 = 1e-12;

/// Ratios `⨍_{B_r}|u - P_{x,r} u| / (|B u|(B_r(x)) / r^{n-1})` with `ℓ`
/// taken from the null-space bound of `op` (degree cap `d_max`).
pub fn quasi_continuity_ratio(
    field: &GridField,
    op: &DiffOperator,
    x: &[f64],
    radii: &[f64],
    d_max: usize,
) -> Result<QuasiContinuityReport> {
    let ell = ell_bound(op, d_max)?;
    let mu = discrete_apply(op, field)?;
    let n = field.grid().n() as i32;
    let mut entries = Vec::with_capacity(radii.len());
    for &r in radii {
        let proj = poly_project(field, x, r, ell)?;
        let p = &proj.poly;
        let cells = field.grid().cells_in_ball(x, r);
        let errs: Vec<f64> = cells
            .iter()
            .map(|&lin| {
                let pv = p.eval(&field.grid().center_of(lin));
                field
                    .value(lin)
                    .iter()
                    .zip(&pv)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let numerator = crate::field::pairwise_sum(&errs) / cells.len() as f64;
        let region = Region::Ball {
            center: x.to_vec(),
            radius: r,
        };
        let denominator = total_variation(&mu, &region) / r.powi(n - 1);
        let (ratio, degenerate) = if denominator < ZERO_LEVEL {
            if numerator < ZERO_LEVEL {
                (0.0, true)
            } else {
                return Err(Error::Inconsistent(format!(
                    "mean deviation {numerator:e} at r = {r} with vanishing |Bu|"
                )));
            }
        } else {
            (numerator / denominator, false)
        };
        entries.push(QuasiContinuityEntry {
            r,
            numerator,
            denominator,
            ratio,
            degenerate,
        });
    }
    let positive: Vec<f64> = entries.iter().map(|e| e.ratio).filter(|&v| v > 0.0).collect();
    let fitted_constant = positive.iter().copied().fold(0.0, f64::max);
    let spread = if positive.len() < 2 {
        1.0
    } else {
        fitted_constant / positive.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(QuasiContinuityReport {
        ell,
        entries,
        fitted_constant,
        spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::operator::catalog;

    #[test]
    fn profile_recurrence_matches_finite_differences() {
        let polys = profile_polynomials(3);
        let f = |q: f64| profile_derivatives(&polys, q);
        let (q, e) = (0.3, 1e-5);
        for j in 0..3 {
            let fd = (f(q + e)[j] - f(q - e)[j]) / (2.0 * e);
            assert!((fd - f(q)[j + 1]).abs() < 1e-6 * f(q)[j + 1].abs().max(1.0), "j = {j}");
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let z = [0.2, -0.35];
        let e = 1e-4;
        let g = MultiIndex::new(vec![1, 1]);
        let d = |a: f64, b: f64| bump_derivative(&MultiIndex::zeros(2), &[a, b]);
        let fd = (d(z[0] + e, z[1] + e) - d(z[0] + e, z[1] - e) - d(z[0] - e, z[1] + e) + d(z[0] - e, z[1] - e))
            / (4.0 * e * e);
        assert!((bump_derivative(&g, &z) - fd).abs() < 1e-6);
        assert_eq!(bump_derivative(&g, &[1.0, 0.5]), 0.0);
    }

    #[test]
    fn reproduces_affine_fields() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 64.0).unwrap();
        let u = GridField::from_fn(g, 2, |y| vec![1.0 + 2.0 * y[0] - y[1], 0.5 * y[1]]).unwrap();
        let p = poly_project(&u, &[0.03, -0.01], 0.3, 2).unwrap();
        let q = p.poly;
        let expect = [([0, 0], [1.0, 0.0]), ([1, 0], [2.0, 0.0]), ([0, 1], [-1.0, 0.5])];
        for (b, v) in expect {
            let c = q.coefficient(&MultiIndex::new(b.to_vec())).unwrap();
            assert!((c[0] - v[0]).abs() < 1e-9 && (c[1] - v[1]).abs() < 1e-9, "{b:?}: {c:?}");
        }
    }

    #[test]
    fn constants_for_any_ell() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 32.0).unwrap();
        let u = GridField::from_fn(g, 1, |_| vec![4.0]).unwrap();
        for ell in 1..4 {
            let p = poly_project(&u, &[0.0, 0.0], 0.4, ell).unwrap();
            assert!((p.poly.eval(&[0.1, 0.2])[0] - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn raw_defect_shrinks() {
        let d: Vec<f64> = [32.0, 64.0, 128.0]
            .iter()
            .map(|c| {
                let g = Grid::new(2, -0.5, 0.5, 1.0 / c).unwrap();
                let u = GridField::from_fn(g, 1, |y| vec![y[0]]).unwrap();
                poly_project_raw(&u, &[0.0, 0.0], 0.25, 3).unwrap().reproduction_defect
            })
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn quadratic_remainder_scales_like_r_squared() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 256.0).unwrap();
        let u = GridField::from_fn(g.clone(), 1, |y| vec![y[0] * y[0]]).unwrap();
        let mean_err = |r: f64| {
            let p = poly_project(&u, &[0.0, 0.0], r, 2).unwrap();
            let cells = g.cells_in_ball(&[0.0, 0.0], r);
            cells
                .iter()
                .map(|&l| (u.value(l)[0] - p.poly.eval(&g.center_of(l))[0]).abs())
                .sum::<f64>()
                / cells.len() as f64
        };
        let ratio = mean_err(0.4) / mean_err(0.2);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn kernel_element_has_zero_ratio() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 64.0).unwrap();
        let u = GridField::from_fn(g, 2, |y| vec![-y[1] + 1.0, y[0]]).unwrap();
        let e = catalog("symmetric_gradient", 2).unwrap();
        let rep = quasi_continuity_ratio(&u, &e, &[0.0, 0.0], &[0.3, 0.2], 4).unwrap();
        assert_eq!(rep.ell, 2);
        for entry in &rep.entries {
            assert!(entry.numerator < 1e-10);
            assert!(entry.degenerate);
        }
    }

    #[test]
    fn under_resolved_ball_is_rejected() {
        let g = Grid::new(2, -0.5, 0.5, 1.0 / 16.0).unwrap();
        let u = GridField::from_fn(g, 1, |_| vec![1.0]).unwrap();
        assert!(matches!(poly_project(&u, &[0.0, 0.0], 0.2, 2), Err(Error::TooFewCells { .. })));
    }
}
