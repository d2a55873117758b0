use std::collections::BTreeMap;
use std::path::Path;

use super::ExperimentId;
use crate::basis::MAX_DEGREE;
use crate::error::{Error, Result};
use crate::operator::{parse_key_values, parse_list};
use crate::operator::{Operator, OperatorConfig};

const OPERATOR_KEYS: [&str; 8] = ["kind", "eigenvalues", "eigen_min", "eigen_max", "dimension", "matrix", "cells", "sector_angle"];

/// Flat `key = value` configuration of one experiment.
///
/// Keys shared by all experiments (each has a per-experiment default):
///
/// ```text
/// degree     = 1, 2        # polynomial degrees r, one study per entry
/// p          = 2, 4        # time exponents, one study per entry
/// q          = 2           # space exponent of the l^q norm
/// n_list     = 8, 16, 32   # interval counts, strictly increasing
/// c          = 0.5         # quasi-uniformity of random meshes (1 = uniform)
/// seed       = 0
/// t_end      = 1
/// kind = diagonal ...      # operator keys, see OperatorConfig
/// ```
///
/// Experiment-specific keys are listed on the corresponding `run_*` function.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    id: ExperimentId,
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Configuration with every key at its default.
    pub fn defaults(id: ExperimentId) -> Self {
        ExperimentConfig { id, entries: BTreeMap::new() }
    }

    pub fn parse(id: ExperimentId, text: &str) -> Result<Self> {
        let cfg = ExperimentConfig {
            id,
            entries: parse_key_values(text)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(id: ExperimentId, path: &Path) -> Result<Self> {
        Self::parse(id, &std::fs::read_to_string(path)?)
    }

    /// Overrides (or adds) one key.
    pub fn set(mut self, key: &str, value: impl ToString) -> Result<Self> {
        self.entries.insert(key.to_string(), value.to_string());
        self.validate()?;
        Ok(self)
    }

    pub fn id(&self) -> ExperimentId {
        self.id
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    fn validate(&self) -> Result<()> {
        if let Some(list) = self.entries.get("n_list") {
            let ns = parse_list(list)?;
            if ns.is_empty() || ns.iter().any(|n| *n < 1.0 || n.fract() != 0.0) {
                return Err(Error::Configuration(format!("n_list '{list}' must hold positive integers")));
            }
            if ns.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Configuration(format!("n_list '{list}' must be strictly increasing")));
            }
        }
        if let Some(list) = self.entries.get("degree") {
            for r in parse_list(list)? {
                if r < 0.0 || r.fract() != 0.0 || r as usize > MAX_DEGREE {
                    return Err(Error::Configuration(format!("degree {r} outside 0..={MAX_DEGREE}")));
                }
                if r == 0.0 && matches!(self.id, ExperimentId::MrSweep | ExperimentId::Green) {
                    return Err(Error::Configuration(format!("{} requires degree >= 1", self.id)));
                }
            }
        }
        if let Some(c) = self.entries.get("c") {
            let c = self.parse_f64("c", c)?;
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::Configuration(format!("c = {c} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    fn parse_f64(&self, key: &str, v: &str) -> Result<f64> {
        match v {
            "inf" | "infinity" => Ok(f64::INFINITY),
            _ => v.parse().map_err(|e| Error::Parse(format!("{key} = '{v}': {e}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.entries.get(key).map_or(Ok(default), |v| self.parse_f64(key, v))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Parse(format!("{key} = '{v}': {e}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Parse(format!("{key} = '{v}': {e}"))),
        }
    }

    /// List value; `inf` entries are accepted.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| self.parse_f64(key, s))
                .collect(),
        }
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(_) => self
                .list_or(key, &[])?
                .into_iter()
                .map(|x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::Configuration(format!("{key}: '{x}' is not a nonnegative integer")))
                    }
                })
                .collect(),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 0)
    }

    /// Operator from the operator keys, or `default` when `kind` is absent.
    pub fn operator_or(&self, default: &str) -> Result<Operator> {
        let mut entries: BTreeMap<String, String> = self
            .entries
            .iter()
            .filter(|(k, _)| OPERATOR_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if !entries.contains_key("kind") {
            entries = parse_key_values(default)?;
        }
        OperatorConfig::from_entries(entries).build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_lists_and_degrees() {
        assert!(ExperimentConfig::parse(ExperimentId::Converge, "n_list = 8, 16, 16").is_err());
        assert!(ExperimentConfig::parse(ExperimentId::Converge, "n_list = 16, 8").is_err());
        assert!(ExperimentConfig::parse(ExperimentId::Converge, "degree = 5").is_err());
        assert!(ExperimentConfig::parse(ExperimentId::Converge, "degree = 0").is_ok());
        assert!(ExperimentConfig::parse(ExperimentId::MrSweep, "degree = 0").is_err());
        assert!(ExperimentConfig::parse(ExperimentId::Green, "degree = 1, 0").is_err());
        assert!(ExperimentConfig::parse(ExperimentId::Converge, "c = 0").is_err());
    }

    #[test]
    fn typed_getters() {
        let cfg = ExperimentConfig::parse(ExperimentId::Interp, "p = 1, 2, inf\nseed = 7\nn_list = 4, 8\n").unwrap();
        assert_eq!(cfg.list_or("p", &[]).unwrap(), vec![1.0, 2.0, f64::INFINITY]);
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.usize_list_or("n_list", &[]).unwrap(), vec![4, 8]);
        assert_eq!(cfg.f64_or("alpha", 0.25).unwrap(), 0.25);
        assert!(cfg.clone().set("n_list", "3, 2").is_err());
    }

    #[test]
    fn operator_defaults_and_overrides() {
        let cfg = ExperimentConfig::defaults(ExperimentId::Converge);
        assert_eq!(cfg.operator_or("kind = diagonal\neigenvalues = 1, 4, 9").unwrap().dim(), 3);
        let cfg = ExperimentConfig::parse(ExperimentId::Converge, "kind = fem1d\ncells = 8").unwrap();
        assert_eq!(cfg.operator_or("kind = diagonal\neigenvalues = 1").unwrap().dim(), 7);
    }
}
