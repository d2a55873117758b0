//! Discontinuous Galerkin time stepping.
//!
//! The discrete space `S_τ(X)` holds functions that are polynomials of degree
//! `r` on each interval with values in `X`, with no continuity imposed across
//! breakpoints. [`PiecewisePoly`] stores one such function by its nodal
//! coefficients in the local Lagrange basis.

mod forms;
mod green;
mod interpolate;
mod io;
mod mollifier;
mod reference;
mod solve;
mod step;

pub use forms::{primal_form, dual_form, FormValue};
pub use green::{forward_green_pair, greens_pair, GreenPair};
pub use interpolate::{interpolate, interpolate_with};
pub use mollifier::{bump, Mollifier, MollifierNorms};
pub use reference::{Direction, ModalReference};
pub use solve::{solve_dual, solve_primal, DgSolver};
pub use step::dg_step;
pub use io::{read_solution, write_solution};

use nalgebra::DVector;

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;

/// A function of time with values in `X`, evaluated interval by interval so
/// that piecewise-defined data is read from the correct side of a breakpoint.
pub trait TimeFunction: Sync {
    fn eval(&self, interval: usize, t: f64) -> DVector<f64>;
}

impl<F> TimeFunction for F
where
    F: Fn(f64) -> DVector<f64> + Sync,
{
    fn eval(&self, _interval: usize, t: f64) -> DVector<f64> {
        self(t)
    }
}

/// Something that can be evaluated on each interval together with its time
/// derivative and one-sided limits at the breakpoints.
pub trait Trajectory: Sync {
    fn value(&self, interval: usize, t: f64) -> DVector<f64>;
    fn derivative(&self, interval: usize, t: f64) -> DVector<f64>;
    /// `v^{n-1,+}`: limit at the left end `t` of `interval` from inside.
    fn left_limit(&self, interval: usize, t: f64) -> DVector<f64> {
        self.value(interval, t)
    }
    /// `v^{n,-}`: limit at the right end `t` of `interval` from inside.
    fn right_limit(&self, interval: usize, t: f64) -> DVector<f64> {
        self.value(interval, t)
    }
}

/// The trace stored outside the mesh: `u^{0,-}` for forward problems,
/// `γ^{N,+}` for backward ones.
#[derive(Debug, Clone, PartialEq)]
pub enum OuterTrace {
    Initial(DVector<f64>),
    Terminal(DVector<f64>),
}

impl OuterTrace {
    pub fn vector(&self) -> &DVector<f64> {
        match self {
            OuterTrace::Initial(v) | OuterTrace::Terminal(v) => v,
        }
    }
}

/// Element of `S_τ(X)`: coefficients `U^n_j` with
/// `v(t) = Σ_j U^n_j φ_j((t − t_{n-1}) / τ_n)` on interval `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    mesh: TemporalMesh,
    elem: ReferenceElement,
    coeffs: Vec<Vec<DVector<f64>>>,
    outer: OuterTrace,
}

impl PiecewisePoly {
    pub fn new(mesh: TemporalMesh, elem: ReferenceElement, coeffs: Vec<Vec<DVector<f64>>>, outer: OuterTrace) -> Result<Self> {
        if coeffs.len() != mesh.len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.len(),
                got: coeffs.len(),
            });
        }
        let dim = outer.vector().len();
        for local in &coeffs {
            if local.len() != elem.size() {
                return Err(Error::DimensionMismatch {
                    expected: elem.size(),
                    got: local.len(),
                });
            }
            if let Some(bad) = local.iter().find(|c| c.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: bad.len(),
                });
            }
        }
        Ok(PiecewisePoly { mesh, elem, coeffs, outer })
    }

    pub fn zeros(mesh: TemporalMesh, elem: ReferenceElement, dim: usize) -> Self {
        let coeffs = vec![vec![DVector::zeros(dim); elem.size()]; mesh.len()];
        PiecewisePoly {
            mesh,
            elem,
            coeffs,
            outer: OuterTrace::Initial(DVector::zeros(dim)),
        }
    }

    /// Nodal interpolant of `f` (values at the local Lagrange nodes).
    pub fn from_nodal_values<F: TimeFunction + ?Sized>(mesh: TemporalMesh, elem: ReferenceElement, f: &F, outer: OuterTrace) -> Result<Self> {
        let coeffs = (0..mesh.len())
            .map(|n| {
                let (a, b) = mesh.interval(n);
                elem.nodes().iter().map(|s| f.eval(n, a + s * (b - a))).collect()
            })
            .collect();
        Self::new(mesh, elem, coeffs, outer)
    }

    pub fn mesh(&self) -> &TemporalMesh {
        &self.mesh
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.elem
    }

    pub fn degree(&self) -> usize {
        self.elem.degree()
    }

    pub fn dim(&self) -> usize {
        self.outer.vector().len()
    }

    pub fn coeffs(&self) -> &[Vec<DVector<f64>>] {
        &self.coeffs
    }

    pub fn local(&self, interval: usize) -> &[DVector<f64>] {
        &self.coeffs[interval]
    }

    pub fn outer(&self) -> &OuterTrace {
        &self.outer
    }

    /// `u^{0,-}`; fails for backward (terminal-anchored) functions.
    pub fn initial_trace(&self) -> Result<&DVector<f64>> {
        match &self.outer {
            OuterTrace::Initial(v) => Ok(v),
            OuterTrace::Terminal(_) => Err(Error::InvalidArgument("function carries a terminal, not an initial, trace".into())),
        }
    }

    fn combine_local(&self, interval: usize, weights: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (c, w) in self.coeffs[interval].iter().zip(weights) {
            if *w != 0.0 {
                out.axpy(*w, c, 1.0);
            }
        }
        out
    }

    /// Value at reference coordinate `s ∈ [0, 1]` of `interval`.
    pub fn eval_local(&self, interval: usize, s: f64) -> DVector<f64> {
        self.combine_local(interval, &self.elem.values(s))
    }

    pub fn eval(&self, interval: usize, t: f64) -> DVector<f64> {
        let (a, b) = self.mesh.interval(interval);
        self.eval_local(interval, (t - a) / (b - a))
    }

    pub fn derivative_local(&self, interval: usize, s: f64) -> DVector<f64> {
        let tau = self.mesh.tau_n(interval);
        self.combine_local(interval, &self.elem.derivatives(s)) / tau
    }

    /// `v^{n-1,+}` for `interval = n − 1` (0-based).
    pub fn left_trace(&self, interval: usize) -> DVector<f64> {
        self.combine_local(interval, self.elem.phi0().as_slice())
    }

    /// `v^{n,-}` for `interval = n − 1` (0-based).
    pub fn right_trace(&self, interval: usize) -> DVector<f64> {
        self.combine_local(interval, self.elem.phi1().as_slice())
    }

    /// Jump `⟦v⟧` at the left end of `interval`: `v^{n-1,+} − v^{n-1,-}`, with
    /// `v^{0,-}` the stored initial trace.
    pub fn jump_at_left(&self, interval: usize) -> Result<DVector<f64>> {
        let before = if interval == 0 {
            self.initial_trace()?.clone()
        } else {
            self.right_trace(interval - 1)
        };
        Ok(self.left_trace(interval) - before)
    }

    /// `α self + β other` on the same mesh.
    pub fn linear_combination(&self, alpha: f64, other: &PiecewisePoly, beta: f64) -> Result<Self> {
        if self.mesh != other.mesh || self.degree() != other.degree() || self.dim() != other.dim() {
            return Err(Error::InvalidArgument("piecewise polynomials live on different spaces".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * alpha + y * beta).collect())
            .collect();
        let outer = match (&self.outer, &other.outer) {
            (OuterTrace::Initial(a), OuterTrace::Initial(b)) => OuterTrace::Initial(a * alpha + b * beta),
            (OuterTrace::Terminal(a), OuterTrace::Terminal(b)) => OuterTrace::Terminal(a * alpha + b * beta),
            _ => return Err(Error::InvalidArgument("mismatched trace anchors".into())),
        };
        Ok(PiecewisePoly {
            mesh: self.mesh.clone(),
            elem: self.elem.clone(),
            coeffs,
            outer,
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().flatten().for_each(|c| *c *= alpha);
        match &mut out.outer {
            OuterTrace::Initial(v) | OuterTrace::Terminal(v) => *v *= alpha,
        }
        out
    }

    /// The same function in reversed time `s = T − t`.
    pub fn reversed(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .rev()
            .map(|local| local.iter().rev().cloned().collect())
            .collect();
        let outer = match &self.outer {
            OuterTrace::Initial(v) => OuterTrace::Terminal(v.clone()),
            OuterTrace::Terminal(v) => OuterTrace::Initial(v.clone()),
        };
        PiecewisePoly {
            mesh: self.mesh.reversed(),
            elem: self.elem.clone(),
            coeffs,
            outer,
        }
    }

    /// Applies a linear map to every coefficient (and the outer trace).
    pub fn map_coefficients<F: Fn(&DVector<f64>) -> Result<DVector<f64>>>(&self, f: F) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|local| local.iter().map(&f).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let outer = match &self.outer {
            OuterTrace::Initial(v) => OuterTrace::Initial(f(v)?),
            OuterTrace::Terminal(v) => OuterTrace::Terminal(f(v)?),
        };
        Ok(PiecewisePoly {
            mesh: self.mesh.clone(),
            elem: self.elem.clone(),
            coeffs,
            outer,
        })
    }
}

impl Trajectory for PiecewisePoly {
    fn value(&self, interval: usize, t: f64) -> DVector<f64> {
        self.eval(interval, t)
    }

    fn derivative(&self, interval: usize, t: f64) -> DVector<f64> {
        let (a, b) = self.mesh.interval(interval);
        self.derivative_local(interval, (t - a) / (b - a))
    }

    fn left_limit(&self, interval: usize, _t: f64) -> DVector<f64> {
        self.left_trace(interval)
    }

    fn right_limit(&self, interval: usize, _t: f64) -> DVector<f64> {
        self.right_trace(interval)
    }
}

impl TimeFunction for PiecewisePoly {
    fn eval(&self, interval: usize, t: f64) -> DVector<f64> {
        PiecewisePoly::eval(self, interval, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(r: usize) -> PiecewisePoly {
        let mesh = TemporalMesh::quasi_uniform(1.0, 5, 0.5, 3).unwrap();
        let elem = ReferenceElement::new(r).unwrap();
        let f = |t: f64| DVector::from_vec(vec![t * t - 0.3 * t, (2.0 * t).cos()]);
        PiecewisePoly::from_nodal_values(mesh, elem, &f, OuterTrace::Initial(DVector::from_vec(vec![0.5, -1.0]))).unwrap()
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let mesh = TemporalMesh::uniform(1.0, 2).unwrap();
        let elem = ReferenceElement::new(1).unwrap();
        let ok = vec![vec![DVector::zeros(2); 2]; 2];
        assert!(PiecewisePoly::new(mesh.clone(), elem.clone(), ok.clone(), OuterTrace::Initial(DVector::zeros(2))).is_ok());
        assert!(PiecewisePoly::new(mesh.clone(), elem.clone(), ok[..1].to_vec(), OuterTrace::Initial(DVector::zeros(2))).is_err());
        assert!(PiecewisePoly::new(mesh.clone(), elem.clone(), ok.clone(), OuterTrace::Initial(DVector::zeros(3))).is_err());
        let bad = vec![vec![DVector::zeros(2); 3]; 2];
        assert!(PiecewisePoly::new(mesh, elem, bad, OuterTrace::Initial(DVector::zeros(2))).is_err());
    }

    #[test]
    fn evaluation_matches_nodal_sum() {
        let u = sample(2);
        let (a, b) = u.mesh().interval(3);
        for s in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let direct = u.eval(3, a + s * (b - a));
            let vals = u.element().values(s);
            let by_hand = u.local(3).iter().zip(&vals).fold(DVector::zeros(2), |acc, (c, v)| acc + c * *v);
            assert!((direct - by_hand).norm() < 1e-14);
        }
        // quadratic data is reproduced by degree-2 nodal interpolation
        let t = a + 0.37 * (b - a);
        assert!((u.eval(3, t)[0] - (t * t - 0.3 * t)).abs() < 1e-14);
    }

    #[test]
    fn traces_and_jumps() {
        let u = sample(1);
        assert!((u.left_trace(0) - DVector::from_vec(vec![0.0, 1.0])).norm() < 1e-14);
        let j0 = u.jump_at_left(0).unwrap();
        assert!((j0 - DVector::from_vec(vec![-0.5, 2.0])).norm() < 1e-14);
        // nodal interpolation of a continuous function is continuous for r >= 1
        for n in 1..5 {
            assert!(u.jump_at_left(n).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn reversal_round_trip() {
        let u = sample(2);
        let rev = u.reversed();
        let t_end = u.mesh().final_time();
        let (a, b) = u.mesh().interval(1);
        let t = 0.3 * a + 0.7 * b;
        let back = rev.eval(3, t_end - t);
        assert!((back - u.eval(1, t)).norm() < 1e-13);
        assert!(rev.initial_trace().is_err());
        assert_eq!(rev.reversed().coeffs(), u.coeffs());
    }

    #[test]
    fn linear_combination_is_pointwise() {
        let u = sample(1);
        let w = u.linear_combination(2.0, &u.scaled(-0.5), 3.0).unwrap();
        assert!((w.eval(2, 0.5) - u.eval(2, 0.5) * 0.5).norm() < 1e-14);
    }
}
