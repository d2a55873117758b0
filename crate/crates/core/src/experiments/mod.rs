//! Reproducible experiment suites.
//!
//! Every experiment is configured by flat `key = value` text, is deterministic
//! for a given configuration and seed, and returns CSV tables together with
//! a list of pass/fail criteria.

mod config;
mod converge;
mod green;
mod heat;
mod interp;
mod mr;
mod rational_study;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use config::ExperimentConfig;
pub use converge::run_converge;
pub use green::run_green;
pub use heat::run_heat;
pub use interp::{run_interp, run_mollifier};
pub use mr::{run_initial, run_mr_sweep, run_one_step};
pub use rational_study::run_rational;

use nalgebra::DVector;

use crate::dg::{PiecewisePoly, Trajectory};
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::norms::{combine, interval_norm};
use crate::operator::{Operator, SpaceNorm};
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Converge,
    MrSweep,
    Rational,
    Green,
    Heat,
    Initial,
    OneStep,
    Interp,
    Mollifier,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::Converge,
        ExperimentId::MrSweep,
        ExperimentId::Rational,
        ExperimentId::Green,
        ExperimentId::Heat,
        ExperimentId::Initial,
        ExperimentId::OneStep,
        ExperimentId::Interp,
        ExperimentId::Mollifier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Converge => "converge",
            ExperimentId::MrSweep => "mr-sweep",
            ExperimentId::Rational => "rational",
            ExperimentId::Green => "green",
            ExperimentId::Heat => "heat",
            ExperimentId::Initial => "initial",
            ExperimentId::OneStep => "one-step",
            ExperimentId::Interp => "interp",
            ExperimentId::Mollifier => "mollifier",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown experiment '{s}'")))
    }
}

/// Least-squares line through `(ln h, ln value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
}

impl OrderFit {
    pub const MIN_LEVELS: usize = 3;
    pub const CONFIRM_RESIDUAL: f64 = 0.05;

    pub fn fit(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < Self::MIN_LEVELS {
            return Err(Error::InvalidArgument(format!("order fit needs >= {} levels, got {}", Self::MIN_LEVELS, samples.len())));
        }
        if let Some(bad) = samples.iter().find(|(h, v)| !(*h > 0.0 && *v > 0.0 && h.is_finite() && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("order fit needs positive finite data, got {bad:?}")));
        }
        let xs: Vec<f64> = samples.iter().map(|(h, _)| h.ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
        Ok(OrderFit {
            samples: samples.to_vec(),
            slope,
            intercept,
            residual,
        })
    }

    /// Slope within `tolerance` of `expected` and residual below
    /// [`OrderFit::CONFIRM_RESIDUAL`].
    pub fn confirms(&self, expected: f64, tolerance: f64) -> bool {
        (self.slope - expected).abs() <= tolerance && self.residual < Self::CONFIRM_RESIDUAL
    }
}

/// One acceptance line.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Criterion {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn order(name: impl Into<String>, fit: &OrderFit, expected: f64, tolerance: f64) -> Self {
        Criterion::new(
            name,
            fit.confirms(expected, tolerance),
            format!("slope {:.4} (expected {expected} ± {tolerance}), residual {:.4}", fit.slope, fit.residual),
        )
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: impl Into<String>) -> Self {
        Table {
            name: name.into(),
            header: header.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: String) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: ExperimentId,
    pub tables: Vec<Table>,
    pub criteria: Vec<Criterion>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// `CONFIRMED`, or `FAILED <criterion>` naming the first failure.
    pub fn summary(&self) -> String {
        match self.criteria.iter().find(|c| !c.passed) {
            None => "CONFIRMED".to_string(),
            Some(c) => format!("FAILED {}", c.name),
        }
    }

    /// Writes every table as `<dir>/<experiment>[_<table>].csv`.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let file = if t.name.is_empty() {
                format!("{}.csv", self.id)
            } else {
                format!("{}_{}.csv", self.id, t.name)
            };
            let path = dir.join(file);
            std::fs::write(&path, t.to_csv())?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.id() {
        ExperimentId::Converge => run_converge(cfg),
        ExperimentId::MrSweep => run_mr_sweep(cfg),
        ExperimentId::Rational => run_rational(cfg),
        ExperimentId::Green => run_green(cfg),
        ExperimentId::Heat => run_heat(cfg),
        ExperimentId::Initial => run_initial(cfg),
        ExperimentId::OneStep => run_one_step(cfg),
        ExperimentId::Interp => run_interp(cfg),
        ExperimentId::Mollifier => run_mollifier(cfg),
    }
}

/// A smooth trajectory given by closures for its value and derivative.
pub struct Manufactured {
    value: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
    derivative: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
}

impl Manufactured {
    pub fn new<V, D>(value: V, derivative: D) -> Self
    where
        V: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        D: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Manufactured {
            value: Box::new(value),
            derivative: Box::new(derivative),
        }
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        (self.value)(t)
    }

    /// `f = u' + Au`.
    pub fn source(&self, op: &Operator, t: f64) -> Result<DVector<f64>> {
        Ok((self.derivative)(t) + op.apply(&(self.value)(t))?)
    }
}

impl Trajectory for Manufactured {
    fn value(&self, _interval: usize, t: f64) -> DVector<f64> {
        (self.value)(t)
    }

    fn derivative(&self, _interval: usize, t: f64) -> DVector<f64> {
        (self.derivative)(t)
    }
}

/// `‖v − u‖_{L^p(J;X)}` with a Gauss rule of `2r + 6` points over 2 panels
/// per interval.
pub fn lp_error<V: Trajectory + ?Sized>(reference: &V, u: &PiecewisePoly, p: f64, space: &SpaceNorm) -> Result<f64> {
    let quad = Quadrature::gauss_legendre(2 * u.degree() + 6).composite(2);
    let mesh = u.mesh();
    let parts = (0..mesh.len())
        .map(|n| {
            let (a, b) = mesh.interval(n);
            interval_norm(a, b, p, space, &quad, |t| Ok(reference.value(n, t) - u.eval(n, t)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(&parts, p))
}

/// Uniform mesh for `c = 1`, otherwise a random quasi-uniform one.
pub(crate) fn build_mesh(t_end: f64, n: usize, c: f64, seed: u64) -> Result<TemporalMesh> {
    if c >= 1.0 {
        TemporalMesh::uniform(t_end, n)
    } else {
        TemporalMesh::quasi_uniform(t_end, n, c, seed)
    }
}

pub(crate) fn exponent_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

/// Largest ratio between entries of a profile and its first entry.
pub(crate) fn drift(profile: &[f64]) -> f64 {
    let base = profile[0];
    profile.iter().map(|v| (v / base).max(base / v)).fold(1.0, f64::max)
}

pub(crate) fn fmt_e(x: f64) -> String {
    format!("{x:.10e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_fit_recovers_power_law() {
        let s: Vec<_> = [0.1, 0.05, 0.025, 0.0125].iter().map(|h: &f64| (*h, 3.0 * h.powi(2))).collect();
        let f = OrderFit::fit(&s).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert!(f.residual < 1e-12);
        assert!(f.confirms(2.0, 0.15));
        assert!(OrderFit::fit(&s[..2]).is_err());
        assert!(OrderFit::fit(&[(1.0, 1.0), (0.5, 0.0), (0.25, 1.0)]).is_err());
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn summary_names_first_failure() {
        let o = Outcome {
            id: ExperimentId::Converge,
            tables: vec![],
            criteria: vec![Criterion::new("a", true, ""), Criterion::new("b", false, ""), Criterion::new("c", false, "")],
        };
        assert_eq!(o.summary(), "FAILED b");
        assert!(!o.passed());
    }

    #[test]
    fn drift_is_symmetric() {
        assert_relative_eq!(drift(&[2.0, 2.2, 1.6]), 1.25);
    }
}
