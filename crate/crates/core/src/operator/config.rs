use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::Operator;
use crate::error::{Error, Result};

/// Flat `key = value` description of an operator.
///
/// Recognized keys:
///
/// ```text
/// kind         = diagonal | dense | fem1d
/// eigenvalues  = 1, 4, 9              # diagonal, explicit list
/// eigen_min    = 1                    # diagonal, log-spaced alternative
/// eigen_max    = 1e4
/// dimension    = 20                   # number of modes / matrix size
/// matrix       = 2, -1, -1, 2         # dense, row-major
/// cells        = 64                   # fem1d grid cells (h = 1/cells)
/// sector_angle = 0.7853981633974483   # optional, radians
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorConfig {
    entries: BTreeMap<String, String>,
}

impl OperatorConfig {
    pub fn from_entries(entries: BTreeMap<String, String>) -> Self {
        OperatorConfig { entries }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::from_entries(parse_key_values(text)?))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{key} = '{v}': {e}"))))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(parse_list).transpose()
    }

    pub fn build(&self) -> Result<Operator> {
        let kind = self
            .get("kind")
            .ok_or_else(|| Error::Configuration("missing key 'kind'".into()))?;
        let dimension = self.number("dimension")?.map(|d| d as usize);
        let op = match kind {
            "diagonal" => {
                if let Some(values) = self.list("eigenvalues")? {
                    if let Some(d) = dimension {
                        if d != values.len() {
                            return Err(Error::Configuration(format!(
                                "dimension {d} does not match {} eigenvalues",
                                values.len()
                            )));
                        }
                    }
                    Operator::diagonal(values)?
                } else {
                    let lo = self.number("eigen_min")?.unwrap_or(1.0);
                    let hi = self.number("eigen_max")?.unwrap_or(lo);
                    let modes = dimension.ok_or_else(|| Error::Configuration("diagonal operator needs 'eigenvalues' or 'dimension'".into()))?;
                    Operator::log_spaced(lo, hi, modes)?
                }
            }
            "dense" => {
                let entries = self
                    .list("matrix")?
                    .ok_or_else(|| Error::Configuration("dense operator needs 'matrix'".into()))?;
                let n = (entries.len() as f64).sqrt().round() as usize;
                if n * n != entries.len() {
                    return Err(Error::Configuration(format!("matrix has {} entries, not a square", entries.len())));
                }
                if let Some(d) = dimension {
                    if d != n {
                        return Err(Error::Configuration(format!("dimension {d} does not match matrix size {n}")));
                    }
                }
                Operator::dense(DMatrix::from_row_slice(n, n, &entries))?
            }
            "fem1d" => {
                let cells = match (self.number("cells")?, dimension) {
                    (Some(c), _) => c as usize,
                    (None, Some(d)) => d + 1,
                    (None, None) => return Err(Error::Configuration("fem1d operator needs 'cells'".into())),
                };
                Operator::fem1d(cells)?
            }
            other => return Err(Error::Configuration(format!("unknown operator kind '{other}'"))),
        };
        match self.number("sector_angle")? {
            Some(a) => op.with_sector_angle(a),
            None => Ok(op),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value'", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("list item '{s}': {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorKind;

    #[test]
    fn builds_each_kind() {
        let d = OperatorConfig::parse("kind = diagonal\neigenvalues = 1, 4, 9\n").unwrap().build().unwrap();
        assert_eq!(d.dim(), 3);
        let l = OperatorConfig::parse("kind = diagonal\ndimension = 20\neigen_min = 1\neigen_max = 1e4 # span\n")
            .unwrap()
            .build()
            .unwrap();
        let OperatorKind::Diagonal(v) = l.kind() else { unreachable!() };
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[19] - 1e4).abs() < 1e-8);
        let m = OperatorConfig::parse("kind = dense\nmatrix = 2,-1,-1,2\nsector_angle = 0.5").unwrap().build().unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.sector_angle(), 0.5);
        let f = OperatorConfig::parse("kind = fem1d\ncells = 8").unwrap().build().unwrap();
        assert_eq!(f.dim(), 7);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(OperatorConfig::parse("kind = spectral").unwrap().build().is_err());
        assert!(OperatorConfig::parse("eigenvalues = 1").unwrap().build().is_err());
        assert!(OperatorConfig::parse("kind = dense\nmatrix = 1,2,3").unwrap().build().is_err());
        assert!(OperatorConfig::parse("kind diagonal").is_err());
        assert!(OperatorConfig::parse("kind = diagonal\neigenvalues = 1, x").unwrap().build().is_err());
        assert!(OperatorConfig::parse("kind = diagonal\neigenvalues = 1,2\ndimension = 3").unwrap().build().is_err());
    }
}
