//! Joint PMF files.
//!
//! ```json
//! { "alphabet": [2, 2, 2], "pmf": [0.25, 0, 0, 0.25, 0, 0.25, 0.25, 0] }
//! ```
//!
//! `pmf` is row-major over `(x, y, z)` with `z` varying fastest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use skpk_core::source::JointDistribution;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfFile {
    pub alphabet: [usize; 3],
    pub pmf: Vec<f64>,
}

impl PmfFile {
    pub fn from_distribution(dist: &JointDistribution) -> Self {
        PmfFile {
            alphabet: dist.sizes(),
            pmf: dist.pmf().to_vec(),
        }
    }

    pub fn to_distribution(&self) -> Result<JointDistribution> {
        Ok(JointDistribution::new(self.alphabet, self.pmf.clone())?)
    }
}

pub fn parse_pmf(text: &str, origin: &Path) -> Result<JointDistribution> {
    let file: PmfFile = serde_json::from_str(text).map_err(|source| HarnessError::Parse {
        path: origin.to_path_buf(),
        source,
    })?;
    file.to_distribution()
}

pub fn load_pmf(path: &Path) -> Result<JointDistribution> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pmf(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use skpk_core::source::examples::xor_triple;
    use skpk_core::Error;

    #[test]
    fn xor_round_trip() {
        let text = serde_json::to_string(&PmfFile::from_distribution(&xor_triple())).unwrap();
        let d = parse_pmf(&text, Path::new("mem")).unwrap();
        assert_eq!(d, xor_triple());
    }

    #[test]
    fn small_drift_is_renormalized_and_large_rejected() {
        let d = parse_pmf(
            r#"{"alphabet":[2,1,1],"pmf":[0.5,0.5000001]}"#,
            Path::new("mem"),
        )
        .unwrap();
        assert!((d.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let err = parse_pmf(r#"{"alphabet":[2,1,1],"pmf":[0.5,0.6]}"#, Path::new("mem")).unwrap_err();
        assert!(matches!(err, HarnessError::Core(Error::InvalidDistribution(_))));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_json_names_the_file() {
        let err = parse_pmf("{", Path::new("dist.json")).unwrap_err();
        assert!(err.to_string().contains("dist.json"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let err = parse_pmf(r#"{"alphabet":[2,2,2],"pmf":[1.0]}"#, Path::new("mem")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
