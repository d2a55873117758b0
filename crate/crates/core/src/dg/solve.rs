use nalgebra::DVector;

use super::step::local_step;
use super::{OuterTrace, PiecewisePoly, TimeFunction};
use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::operator::Operator;
use crate::quadrature::Quadrature;

/// DG solver for one operator and degree.
///
/// Source terms enter through their per-interval moments
/// `∫_{J_n} f φ^n_i dt`, computed with the element Gauss rule repeated over
/// `oversample` panels.
#[derive(Debug, Clone)]
pub struct DgSolver<'a> {
    op: &'a Operator,
    elem: ReferenceElement,
    quad: Quadrature,
}

impl<'a> DgSolver<'a> {
    pub fn new(op: &'a Operator, degree: usize) -> Result<Self> {
        let elem = ReferenceElement::new(degree)?;
        let quad = elem.quadrature().clone();
        Ok(DgSolver { op, elem, quad })
    }

    pub fn with_oversampling(mut self, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidArgument("oversampling factor must be >= 1".into()));
        }
        self.quad = self.elem.quadrature().composite(panels);
        Ok(self)
    }

    pub fn operator(&self) -> &Operator {
        self.op
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.elem
    }

    /// `(∫_{J_n} f φ^n_i dt)_i` on interval `n`.
    pub fn moments<F: TimeFunction + ?Sized>(&self, mesh: &TemporalMesh, f: &F, n: usize) -> Vec<DVector<f64>> {
        let (a, b) = mesh.interval(n);
        let tau = b - a;
        let mut out = vec![DVector::zeros(self.op.dim()); self.elem.size()];
        for (s, w) in self.quad.points.iter().zip(&self.quad.weights) {
            let fv = f.eval(n, a + s * tau);
            for (o, phi) in out.iter_mut().zip(self.elem.values(*s)) {
                o.axpy(w * tau * phi, &fv, 1.0);
            }
        }
        out
    }

    pub fn solve<F: TimeFunction + ?Sized>(&self, mesh: &TemporalMesh, f: &F, u0: &DVector<f64>) -> Result<PiecewisePoly> {
        let moments: Vec<_> = (0..mesh.len()).map(|n| self.moments(mesh, f, n)).collect();
        self.solve_moments(mesh, &moments, u0)
    }

    /// Marches the scheme given precomputed moments (one entry per interval).
    pub fn solve_moments(&self, mesh: &TemporalMesh, moments: &[Vec<DVector<f64>>], u0: &DVector<f64>) -> Result<PiecewisePoly> {
        if moments.len() != mesh.len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.len(),
                got: moments.len(),
            });
        }
        if u0.len() != self.op.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.op.dim(),
                got: u0.len(),
            });
        }
        let mut coeffs = Vec::with_capacity(mesh.len());
        let mut prev = u0.clone();
        for (n, mom) in moments.iter().enumerate() {
            let local = local_step(self.op, &self.elem, mesh.tau_n(n), &prev, mom, n)?;
            prev = local
                .iter()
                .zip(self.elem.phi1().iter())
                .fold(DVector::zeros(u0.len()), |acc, (c, p)| acc + c * *p);
            coeffs.push(local);
        }
        PiecewisePoly::new(mesh.clone(), self.elem.clone(), coeffs, OuterTrace::Initial(u0.clone()))
    }

    /// Dual scheme with `γ^{N,+} = terminal`, realized by reversing time and
    /// stepping with the adjoint operator.
    pub fn solve_dual<F: TimeFunction + ?Sized>(&self, mesh: &TemporalMesh, rhs: &F, terminal: &DVector<f64>) -> Result<PiecewisePoly> {
        let moments: Vec<_> = (0..mesh.len()).map(|n| self.moments(mesh, rhs, n)).collect();
        self.solve_dual_moments(mesh, &moments, terminal)
    }

    pub fn solve_dual_moments(&self, mesh: &TemporalMesh, moments: &[Vec<DVector<f64>>], terminal: &DVector<f64>) -> Result<PiecewisePoly> {
        if moments.len() != mesh.len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.len(),
                got: moments.len(),
            });
        }
        let adjoint = self.op.adjoint();
        let reversed_solver = DgSolver {
            op: &adjoint,
            elem: self.elem.clone(),
            quad: self.quad.clone(),
        };
        // φ^n_j(t) = φ^{rev}_{r−j}(T − t), so moments map by reversing both indices.
        let reversed: Vec<Vec<DVector<f64>>> = moments
            .iter()
            .rev()
            .map(|local| local.iter().rev().cloned().collect())
            .collect();
        let forward = reversed_solver
            .solve_moments(&mesh.reversed(), &reversed, terminal)
            .map_err(|e| match e {
                Error::SingularStep { interval, tau, operator } => Error::SingularStep {
                    interval: mesh.len() - 1 - interval,
                    tau,
                    operator,
                },
                other => other,
            })?;
        let mut out = forward.reversed();
        // keep the caller's breakpoints bit-for-bit
        out = PiecewisePoly::new(mesh.clone(), self.elem.clone(), out.coeffs().to_vec(), out.outer().clone())?;
        Ok(out)
    }
}

/// Solves the DG scheme with `u^{0,-} = u0` and source `f`.
pub fn solve_primal<F: TimeFunction + ?Sized>(op: &Operator, mesh: &TemporalMesh, degree: usize, f: &F, u0: &DVector<f64>) -> Result<PiecewisePoly> {
    DgSolver::new(op, degree)?.solve(mesh, f, u0)
}

/// Solves the dual DG scheme with `γ^{N,+} = terminal`.
pub fn solve_dual<F: TimeFunction + ?Sized>(op: &Operator, mesh: &TemporalMesh, degree: usize, rhs: &F, terminal: &DVector<f64>) -> Result<PiecewisePoly> {
    DgSolver::new(op, degree)?.solve_dual(mesh, rhs, terminal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::Trajectory;
    use approx::assert_relative_eq;

    #[test]
    fn zero_data_gives_zero() {
        let op = Operator::diagonal(vec![1.0, 5.0]).unwrap();
        let mesh = TemporalMesh::uniform(1.0, 4).unwrap();
        let zero = |_t: f64| DVector::zeros(2);
        let u = solve_primal(&op, &mesh, 1, &zero, &DVector::zeros(2)).unwrap();
        assert!(u.coeffs().iter().flatten().all(|c| c.norm() == 0.0));
        let g = solve_dual(&op, &mesh, 1, &zero, &DVector::zeros(2)).unwrap();
        assert!(g.coeffs().iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn homogeneous_traces_are_stability_function_powers() {
        let op = Operator::diagonal(vec![1.0]).unwrap();
        let n = 10;
        let tau = 1.0 / n as f64;
        let mesh = TemporalMesh::uniform(1.0, n).unwrap();
        let zero = |_t: f64| DVector::zeros(1);
        let u = solve_primal(&op, &mesh, 1, &zero, &DVector::from_element(1, 1.0)).unwrap();
        let r = (1.0 - tau / 3.0) / (1.0 + 2.0 * tau / 3.0 + tau * tau / 6.0);
        assert_relative_eq!(u.right_trace(n - 1)[0], r.powi(n as i32), max_relative = 1e-13);
    }

    #[test]
    fn polynomial_solutions_are_reproduced() {
        let op = Operator::diagonal(vec![0.5, 3.0, 40.0]).unwrap();
        let mesh = TemporalMesh::quasi_uniform(2.0, 8, 0.5, 11).unwrap();
        for r in 1..=3usize {
            let u = move |t: f64| DVector::from_vec(vec![1.0 + t.powi(r as i32), 2.0 * t - 1.0, t.powi(r as i32 - 1) * 0.5]);
            let du = move |t: f64| {
                let rr = r as f64;
                DVector::from_vec(vec![rr * t.powi(r as i32 - 1), 2.0, if r > 1 { 0.5 * (rr - 1.0) * t.powi(r as i32 - 2) } else { 0.0 }])
            };
            let lam = DVector::from_vec(vec![0.5, 3.0, 40.0]);
            let f = move |t: f64| du(t) + lam.component_mul(&u(t));
            let sol = solve_primal(&op, &mesh, r, &f, &u(0.0)).unwrap();
            for n in 0..mesh.len() {
                let (a, b) = mesh.interval(n);
                for s in [0.0, 0.3, 0.77, 1.0] {
                    let t = a + s * (b - a);
                    assert!((sol.value(n, t) - u(t)).amax() < 1e-10, "r={r} n={n}");
                }
            }
        }
    }

    #[test]
    fn dual_of_scalar_problem_is_reflected_primal() {
        let op = Operator::diagonal(vec![2.0]).unwrap();
        let mesh = TemporalMesh::quasi_uniform(1.0, 6, 0.5, 4).unwrap();
        let t_end = mesh.final_time();
        let f = |t: f64| DVector::from_element(1, (3.0 * t).sin() + t);
        let g = move |t: f64| f(t_end - t);
        let dual = solve_dual(&op, &mesh, 2, &f, &DVector::from_element(1, 0.4)).unwrap();
        let primal = solve_primal(&op, &mesh.reversed(), 2, &g, &DVector::from_element(1, 0.4)).unwrap();
        for n in 0..mesh.len() {
            let (a, b) = mesh.interval(n);
            let t = 0.6 * a + 0.4 * b;
            assert!((dual.value(n, t) - primal.value(mesh.len() - 1 - n, t_end - t)).norm() < 1e-12);
        }
        assert_eq!(dual.mesh(), &mesh);
        assert!(matches!(dual.outer(), OuterTrace::Terminal(_)));
    }

    #[test]
    fn oversampling_changes_only_quadrature() {
        let op = Operator::diagonal(vec![1.0]).unwrap();
        let mesh = TemporalMesh::uniform(1.0, 3).unwrap();
        let solver = DgSolver::new(&op, 1).unwrap().with_oversampling(32).unwrap();
        let f = |t: f64| DVector::from_element(1, (20.0 * t).sin());
        let m = solver.moments(&mesh, &f, 1);
        let (a, b) = mesh.interval(1);
        let exact0 = crate::quadrature::adaptive_integrate(|t| (20.0 * t).sin() * (b - t) / (b - a), a, b, 1e-15, 1e-13);
        assert_relative_eq!(m[0][0], exact0, epsilon = 1e-10);
        assert!(DgSolver::new(&op, 1).unwrap().with_oversampling(0).is_err());
    }
}
