use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DiffOperator;
use crate::tensor::MultiIndex;

/// Structured-text form of a [`DiffOperator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub alpha: Vec<u32>,
    /// Row-major, `dimW` rows of `dimV` entries.
    pub matrix: Vec<Vec<f64>>,
}

impl DiffOperator {
    pub fn to_document(&self) -> OperatorDocument {
        OperatorDocument {
            n: self.n(),
            k: self.order(),
            dim_v: self.dim_v(),
            dim_w: self.dim_w(),
            coefficients: self
                .coefficients()
                .map(|(a, m)| CoefficientEntry {
                    alpha: a.entries().to_vec(),
                    matrix: (0..m.nrows())
                        .map(|r| m.row(r).iter().copied().collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &OperatorDocument) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(doc.coefficients.len());
        for (idx, entry) in doc.coefficients.iter().enumerate() {
            if entry.alpha.len() != doc.n {
                return Err(Error::InvalidArgument(format!(
                    "coefficients[{idx}].alpha: expected {} entries (n), found {}",
                    doc.n,
                    entry.alpha.len()
                )));
            }
            let order: usize = entry.alpha.iter().map(|&a| a as usize).sum();
            if order != doc.k {
                return Err(Error::InvalidArgument(format!(
                    "coefficients[{idx}].alpha: order {order} differs from k = {}",
                    doc.k
                )));
            }
            if entry.matrix.len() != doc.dim_w {
                return Err(Error::InvalidArgument(format!(
                    "coefficients[{idx}].matrix: expected {} rows (dimW), found {}",
                    doc.dim_w,
                    entry.matrix.len()
                )));
            }
            let mut m = DMatrix::zeros(doc.dim_w, doc.dim_v);
            for (r, row) in entry.matrix.iter().enumerate() {
                if row.len() != doc.dim_v {
                    return Err(Error::InvalidArgument(format!(
                        "coefficients[{idx}].matrix[{r}]: expected {} entries (dimV), found {}",
                        doc.dim_v,
                        row.len()
                    )));
                }
                for (c, &x) in row.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "coefficients[{idx}].matrix[{r}][{c}]: not finite"
                        )));
                    }
                    m[(r, c)] = x;
                }
            }
            coeffs.push((MultiIndex::new(entry.alpha.clone()), m));
        }
        DiffOperator::new(doc.n, doc.k, doc.dim_v, doc.dim_w, coeffs)
    }
}
