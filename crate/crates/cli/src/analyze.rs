use bvb_core::ellipticity::{
    ellipticity_constant, is_c_elliptic, mixing_triple_test, CEllipticity, Decision, EllipticityReport,
    TripleHistogram,
};
use bvb_core::operator::{nullspace_dims, stabilization_degree};
use bvb_core::DiffOperator;
use serde::Serialize;

use crate::input::InputRecord;
use crate::report::{CliError, Tool, TOOL};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnalyzeParams {
    pub resolution: usize,
    pub refine_steps: usize,
    pub dmax: usize,
    pub restarts: usize,
    pub mixing_trials: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Shape {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
}

impl Shape {
    pub fn of(op: &DiffOperator) -> Self {
        Shape {
            n: op.n(),
            k: op.order(),
            dim_v: op.dim_v(),
            dim_w: op.dim_w(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EllipticitySection {
    pub resolution: usize,
    pub refine_steps: usize,
    #[serde(flatten)]
    pub report: EllipticityReport,
}

#[derive(Debug, Serialize)]
pub struct CEllipticitySection {
    pub dmax: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub result: CEllipticity,
}

#[derive(Debug, Serialize)]
pub struct EllSection {
    pub dmax: usize,
    /// Absent when the null space has not stabilized within `dmax`.
    pub ell: Option<usize>,
    pub nullspace_dims: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct MixingSection {
    pub trials: usize,
    pub seed: u64,
    pub triple_dims: TripleHistogram,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub tool: Tool,
    pub input: InputRecord,
    pub parameters: AnalyzeParams,
    pub operator: Shape,
    pub ellipticity: EllipticitySection,
    pub c_ellipticity: CEllipticitySection,
    pub ell: EllSection,
    /// Only for first-order operators.
    pub mixing: Option<MixingSection>,
}

impl AnalyzeReport {
    pub fn verification_error(&self) -> Option<CliError> {
        (self.c_ellipticity.result.decision == Decision::Inconclusive).then(|| {
            CliError::Verification(format!(
                "C-ellipticity is INCONCLUSIVE (best residual {:.3e} after {} restarts)",
                self.c_ellipticity.result.best_residual, self.c_ellipticity.result.restarts
            ))
        })
    }
}

pub fn analyze(op: &DiffOperator, input: InputRecord, params: AnalyzeParams) -> Result<AnalyzeReport, CliError> {
    let ellipticity = ellipticity_constant(op, params.resolution, params.refine_steps)?;
    let c = is_c_elliptic(op, params.dmax, params.restarts, params.seed)?;
    let dims = nullspace_dims(op, params.dmax);
    let ell = stabilization_degree(&dims).map(|d| d + 1);
    let mixing = if op.order() == 1 {
        Some(MixingSection {
            trials: params.mixing_trials,
            seed: params.seed,
            triple_dims: mixing_triple_test(op, params.mixing_trials, params.seed)?,
        })
    } else {
        None
    };
    Ok(AnalyzeReport {
        tool: TOOL,
        input,
        parameters: params,
        operator: Shape::of(op),
        ellipticity: EllipticitySection {
            resolution: params.resolution,
            refine_steps: params.refine_steps,
            report: ellipticity,
        },
        c_ellipticity: CEllipticitySection {
            dmax: params.dmax,
            seed: params.seed,
            result: c,
        },
        ell: EllSection {
            dmax: params.dmax,
            ell,
            nullspace_dims: dims,
        },
        mixing,
    })
}
