use std::ops::Range;

use bvb_core::operator::{linearization_residual, linearize, OperatorDocument};
use bvb_core::sphere::stream_rng;
use bvb_core::tensor::multiindices_up_to;
use bvb_core::{DiffOperator, PolynomialField};
use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;

use crate::analyze::Shape;
use crate::input::InputRecord;
use crate::report::{CliError, Tool, TOOL};

pub const ROUND_TRIP_POLYNOMIALS: usize = 5;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Serialize)]
pub struct RoundTrip {
    pub polynomials: usize,
    pub degree: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Exact rational check; absent when the coefficients are not small
    /// rationals.
    pub exact_residual_zero: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct LinearizeReport {
    pub tool: Tool,
    pub input: InputRecord,
    pub source: Shape,
    pub lifted: Shape,
    pub tilde_rows: Range<usize>,
    pub curl_rows: Range<usize>,
    pub output: String,
    pub round_trip: RoundTrip,
}

fn random_poly<T, F>(n: usize, dim: usize, degree: usize, mut draw: F) -> PolynomialField<T>
where
    T: bvb_core::operator::Coeff,
    F: FnMut() -> T,
{
    let mut p = PolynomialField::zero(n, dim);
    for beta in multiindices_up_to(n, degree) {
        for j in 0..dim {
            p.add_scalar_term(beta.clone(), j, draw());
        }
    }
    p
}

/// Lifts `op` to first order and checks the identity on random polynomials.
pub fn run(
    op: &DiffOperator,
    input: InputRecord,
    output: String,
    seed: u64,
) -> Result<(LinearizeReport, OperatorDocument), CliError> {
    let lin = linearize(op)?;
    let degree = op.order() + 1;
    let mut max_residual: f64 = 0.0;
    for i in 0..ROUND_TRIP_POLYNOMIALS {
        let mut rng = stream_rng(seed, i as u64);
        let p = random_poly(op.n(), op.dim_v(), degree, || rng.random_range(-1.0..1.0));
        let r = linearization_residual(op, &lin, &p)?;
        max_residual = max_residual.max(r.max_abs());
    }
    let exact_residual_zero = op.to_rational().ok().map(|q| {
        let Ok(lin_q) = linearize(&q) else {
            return false;
        };
        (0..ROUND_TRIP_POLYNOMIALS).all(|i| {
            let mut rng = stream_rng(seed, (ROUND_TRIP_POLYNOMIALS + i) as u64);
            let p = random_poly(op.n(), op.dim_v(), degree, || Rational64::from_integer(rng.random_range(-9..=9)));
            linearization_residual(&q, &lin_q, &p).is_ok_and(|r| r.is_zero())
        })
    });
    let doc = lin.lifted.to_document();
    let report = LinearizeReport {
        tool: TOOL,
        input,
        source: Shape::of(op),
        lifted: Shape::of(&lin.lifted),
        tilde_rows: lin.tilde_rows.clone(),
        curl_rows: lin.curl_rows.clone(),
        output,
        round_trip: RoundTrip {
            polynomials: ROUND_TRIP_POLYNOMIALS,
            degree,
            seed,
            max_residual,
            tolerance: RESIDUAL_TOL,
            exact_residual_zero,
        },
    };
    Ok((report, doc))
}

impl LinearizeReport {
    pub fn verification_error(&self) -> Option<CliError> {
        let rt = &self.round_trip;
        if !(rt.max_residual <= RESIDUAL_TOL) {
            return Some(CliError::Verification(format!(
                "linearization residual {:.3e} exceeds {RESIDUAL_TOL:e}",
                rt.max_residual
            )));
        }
        (rt.exact_residual_zero == Some(false))
            .then(|| CliError::Verification("exact linearization residual is nonzero".into()))
    }
}
