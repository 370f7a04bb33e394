use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{nullspace_dims, DiffOperator};
use crate::sphere::stream_rng;
use crate::tensor::min_right_singular;

/// Residual below which a complex pair counts as a zero of the symbol.
pub const WITNESS_TOL: f64 = 1e-8;

/// A unit pair `(ξ, v)` in `C^n × C⊗V` with `|B(ξ) v| = residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexWitness {
    pub xi: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub residual: f64,
    /// Restart that produced the witness.
    pub restart: usize,
}

impl ComplexWitness {
    /// Recomputes `|B(ξ) v|` from scratch.
    pub fn replay(&self, op: &DiffOperator) -> f64 {
        let s = op.symbol(&self.xi);
        (s * DVector::from_column_slice(&self.v)).norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of [`is_c_elliptic`] with both pieces of evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CEllipticity {
    pub decision: Decision,
    pub nullspace_dims: Vec<usize>,
    /// First degree from which the null-space dimension is constant.
    pub stabilized_at: Option<usize>,
    pub witness: Option<ComplexWitness>,
    pub restarts: usize,
    pub best_residual: f64,
}

fn unit_complex<R: Rng>(rng: &mut R, n: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Rotates the phase so that the largest component is real and positive.
fn fix_phase(v: &DVector<Complex64>) -> Vec<Complex64> {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let p = v[best];
    let phase = if p.norm() > 0.0 { p.conj() / p.norm() } else { Complex64::new(1.0, 0.0) };
    v.iter().map(|z| z * phase).collect()
}

fn residual(op: &DiffOperator, xi: &DVector<Complex64>, v: &DVector<Complex64>) -> f64 {
    (op.symbol(xi.as_slice()) * v).norm()
}

/// `M(v) = [B_{e_1} v | … | B_{e_n} v]` for a first-order operator, so that
/// `B(ξ) v = M(v) ξ`.
fn first_order_matrix(op: &DiffOperator, v: &DVector<Complex64>) -> DMatrix<Complex64> {
    let n = op.n();
    let mut m = DMatrix::zeros(op.dim_w(), n);
    for (alpha, b) in op.coefficients() {
        let i = (0..n).find(|&i| alpha.get(i) == 1).expect("first order");
        let col = b.map(|x| Complex64::new(x, 0.0)) * v;
        m.set_column(i, &col);
    }
    m
}

/// One descent step in `ξ` for fixed `v` with backtracking; the gradient of
/// `|B(ξ)v|²` with respect to `conj(ξ)` is `(∂_i B(ξ) v)^* r`.
fn xi_gradient_step(
    op: &DiffOperator,
    xi: &DVector<Complex64>,
    v: &DVector<Complex64>,
    step: &mut f64,
) -> DVector<Complex64> {
    let r = op.symbol(xi.as_slice()) * v;
    let f0 = r.norm_squared();
    let grad = DVector::from_fn(op.n(), |i, _| {
        let di = op.symbol_partial(i, xi.as_slice()) * v;
        di.dotc(&r)
    });
    let gnorm = grad.norm();
    if gnorm == 0.0 {
        return xi.clone();
    }
    for _ in 0..40 {
        let cand = xi - &grad * Complex64::new(*step / gnorm, 0.0);
        let cand = &cand / Complex64::new(cand.norm(), 0.0);
        if residual(op, &cand, v).powi(2) < f0 {
            *step = (*step * 2.0).min(1.0);
            return cand;
        }
        *step *= 0.5;
    }
    xi.clone()
}

fn single_restart(op: &DiffOperator, seed: u64, restart: usize, iterations: usize) -> ComplexWitness {
    let mut rng = stream_rng(seed, restart as u64);
    let mut xi = unit_complex(&mut rng, op.n());
    let mut step = 0.25;
    let mut best: Option<ComplexWitness> = None;
    for _ in 0..iterations.max(1) {
        let (_, v) = min_right_singular(&op.symbol(xi.as_slice()));
        let res = residual(op, &xi, &v);
        if best.as_ref().is_none_or(|b| res < b.residual) {
            best = Some(ComplexWitness {
                xi: fix_phase(&xi),
                v: fix_phase(&v),
                residual: res,
                restart,
            });
        }
        if res < WITNESS_TOL * 1e-3 {
            break;
        }
        xi = if op.order() == 1 {
            min_right_singular(&first_order_matrix(op, &v)).1
        } else {
            xi_gradient_step(op, &xi, &v, &mut step)
        };
    }
    let mut w = best.expect("at least one iteration");
    // Report the residual of the stored (phase-fixed) pair.
    let xi = DVector::from_vec(w.xi.clone());
    let v = DVector::from_vec(w.v.clone());
    w.residual = residual(op, &xi, &v);
    w
}

/// Seeded multi-start search for a zero of the complexified symbol.
/// Returns the witness of the lowest-numbered successful restart.
pub fn complex_falsify(
    op: &DiffOperator,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<Option<ComplexWitness>> {
    Ok(complex_search(op, restarts, iterations, seed)?.0)
}

fn complex_search(
    op: &DiffOperator,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<(Option<ComplexWitness>, f64)> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be ≥ 1".into()));
    }
    let runs: Vec<ComplexWitness> = (0..restarts)
        .into_par_iter()
        .map(|r| single_restart(op, seed, r, iterations))
        .collect();
    let best = runs.iter().map(|w| w.residual).fold(f64::INFINITY, f64::min);
    let witness = runs.into_iter().find(|w| w.residual < WITNESS_TOL);
    Ok((witness, best))
}

/// Iterations per restart used by [`is_c_elliptic`].
const DECISION_ITERATIONS: usize = 200;

/// Combines null-space stabilization up to degree `d_max` with a complex
/// zero search of `restarts` starts.
pub fn is_c_elliptic(op: &DiffOperator, d_max: usize, restarts: usize, seed: u64) -> Result<CEllipticity> {
    if d_max < 3 {
        return Err(Error::InvalidArgument(format!("degree cap {d_max} is below 3")));
    }
    let dims = nullspace_dims(op, d_max);
    let stabilized_at = crate::operator::stabilization_degree(&dims);
    let (witness, best_residual) = complex_search(op, restarts, DECISION_ITERATIONS, seed)?;
    let decision = match (stabilized_at.is_some(), witness.is_some()) {
        (true, false) => Decision::Pass,
        (false, true) => Decision::Fail,
        _ => Decision::Inconclusive,
    };
    Ok(CEllipticity {
        decision,
        nullspace_dims: dims,
        stabilized_at,
        witness,
        restarts,
        best_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{catalog, partial_derivative};

    #[test]
    fn cauchy_riemann_has_isotropic_zero() {
        let cr = catalog("cauchy_riemann", 2).unwrap();
        let w = complex_falsify(&cr, 20, 100, 0).unwrap().expect("witness");
        assert!(w.replay(&cr) < WITNESS_TOL);
        // ξ is a multiple of (1, ±i)/√2
        let (a, b) = (w.xi[0], w.xi[1]);
        assert!((a * a + b * b).norm() < 1e-6);
        assert!((a.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn symmetric_gradient_has_no_zero() {
        let e = catalog("symmetric_gradient", 2).unwrap();
        assert!(complex_falsify(&e, 100, 100, 0).unwrap().is_none());
    }

    #[test]
    fn single_partial_has_real_zero() {
        let d1 = partial_derivative(2, 0).unwrap();
        let w = complex_falsify(&d1, 5, 20, 0).unwrap().expect("witness");
        assert!(w.xi[0].norm() < 1e-8);
        assert!((w.xi[1] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn decisions() {
        let e = catalog("symmetric_gradient", 2).unwrap();
        assert_eq!(is_c_elliptic(&e, 5, 20, 0).unwrap().decision, Decision::Pass);
        let cr = catalog("cauchy_riemann", 2).unwrap();
        let d = is_c_elliptic(&cr, 5, 20, 0).unwrap();
        assert_eq!(d.decision, Decision::Fail);
        assert!(d.witness.is_some());
        let h = catalog("hessian", 2).unwrap();
        assert_eq!(is_c_elliptic(&h, 4, 20, 0).unwrap().decision, Decision::Pass);
        assert!(is_c_elliptic(&h, 2, 20, 0).is_err());
    }
}
