use std::path::Path;

use bvb_core::operator::{catalog, OperatorDocument};
use bvb_core::DiffOperator;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::report::CliError;

/// A reference to a built-in operator inside a spec file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogRef {
    catalog: String,
    n: usize,
}

/// Where an operator came from, with a digest of the raw input.
#[derive(Clone, Debug, Serialize)]
pub struct InputRecord {
    pub source: String,
    pub sha256: String,
    /// Digest of the canonical serialized operator.
    pub operator_sha256: String,
}

pub struct LoadedOperator {
    pub op: DiffOperator,
    pub record: InputRecord,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn from_catalog(name: &str, n: Option<usize>) -> Result<DiffOperator, CliError> {
    let n = n.ok_or_else(|| CliError::Input(format!("`catalog:{name}` needs --n")))?;
    catalog(name, n).map_err(|e| CliError::Input(e.to_string()))
}

/// Parses a spec document: either an inline operator or `{catalog, n}`.
pub fn parse_spec(text: &str) -> Result<DiffOperator, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("spec is not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Input("spec must be a JSON object".into()))?;
    match (obj.contains_key("catalog"), obj.contains_key("coefficients")) {
        (true, true) => Err(CliError::Input(
            "spec has both `catalog` and `coefficients`; give exactly one".into(),
        )),
        (false, false) => Err(CliError::Input(
            "spec needs either `catalog` (with `n`) or inline `coefficients`".into(),
        )),
        (true, false) => {
            let r: CatalogRef =
                serde_json::from_value(value).map_err(|e| CliError::Input(format!("catalog reference: {e}")))?;
            from_catalog(&r.catalog, Some(r.n))
        }
        (false, true) => {
            let doc: OperatorDocument =
                serde_json::from_value(value).map_err(|e| CliError::Input(format!("operator document: {e}")))?;
            DiffOperator::from_document(&doc).map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

/// Resolves `catalog:<name>` (with `n`) or a path to a spec file.
pub fn load_operator(spec: &str, n: Option<usize>) -> Result<LoadedOperator, CliError> {
    let (op, source, raw) = if let Some(name) = spec.strip_prefix("catalog:") {
        let op = from_catalog(name, n)?;
        let canonical = format!("catalog:{name} n={}", op.n());
        (op, canonical.clone(), canonical.into_bytes())
    } else {
        let path = Path::new(spec);
        let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {spec}: {e}")))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Input(format!("{spec} is not UTF-8")))?;
        let op = parse_spec(text)?;
        if let Some(n) = n {
            if n != op.n() {
                return Err(CliError::Input(format!("--n {n} disagrees with spec dimension {}", op.n())));
            }
        }
        (op, spec.to_string(), bytes)
    };
    let canonical = serde_json::to_vec(&op.to_document()).expect("document serializes");
    Ok(LoadedOperator {
        record: InputRecord {
            source,
            sha256: sha256_hex(&raw),
            operator_sha256: sha256_hex(&canonical),
        },
        op,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_reference_document() {
        let op = parse_spec(r#"{"catalog": "gradient", "n": 3}"#).unwrap();
        assert_eq!(op, catalog("gradient", 3).unwrap());
    }

    #[test]
    fn both_forms_rejected() {
        let text = r#"{"catalog": "gradient", "n": 2, "coefficients": []}"#;
        assert!(matches!(parse_spec(text), Err(CliError::Input(_))));
    }

    #[test]
    fn diagnostic_names_field() {
        let text = r#"{"n": 2, "k": 1, "dimV": 1, "coefficients": []}"#;
        let Err(CliError::Input(msg)) = parse_spec(text) else {
            panic!("expected input error");
        };
        assert!(msg.contains("dimW"), "{msg}");
    }

    #[test]
    fn catalog_needs_dimension() {
        assert!(load_operator("catalog:gradient", None).is_err());
        let a = load_operator("catalog:gradient", Some(2)).unwrap();
        let b = load_operator("catalog:gradient", Some(2)).unwrap();
        assert_eq!(a.record.sha256, b.record.sha256);
    }
}
