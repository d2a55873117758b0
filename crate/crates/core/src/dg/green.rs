use nalgebra::DVector;

use super::{DgSolver, ModalReference, Mollifier, PiecewisePoly};
use crate::error::Result;
use crate::mesh::TemporalMesh;
use crate::operator::Operator;

/// A regularized Green's function: the exact solution driven by `δ^{ñ,t̃} v`
/// and its DG approximation on the same mesh.
#[derive(Debug, Clone)]
pub struct GreenPair {
    pub mollifier: Mollifier,
    pub reference: ModalReference,
    pub discrete: PiecewisePoly,
}

fn delta_moments(mollifier: &Mollifier, mesh: &TemporalMesh, degree: usize, v: &DVector<f64>) -> Vec<Vec<DVector<f64>>> {
    let weights = mollifier.moments();
    (0..mesh.len())
        .map(|n| {
            if n == mollifier.interval() {
                weights.iter().map(|w| v * *w).collect()
            } else {
                vec![DVector::zeros(v.len()); degree + 1]
            }
        })
        .collect()
}

/// Dual pair: `−γ' + A'γ = δ^{ñ,t̃} φ`, `γ(T) = 0`, and its dual DG
/// approximation with `γ^{N,+} = 0`.
pub fn greens_pair(op: &Operator, mesh: &TemporalMesh, degree: usize, interval: usize, t_tilde: f64, phi: &DVector<f64>) -> Result<GreenPair> {
    let mollifier = Mollifier::new(mesh, degree, interval, t_tilde)?;
    let m = mollifier.clone();
    let reference = ModalReference::backward(&op.adjoint(), &DVector::zeros(op.dim()), phi, move |t| m.eval(t), mollifier.support(), mesh.final_time())?;
    let solver = DgSolver::new(op, degree)?;
    let discrete = solver.solve_dual_moments(mesh, &delta_moments(&mollifier, mesh, degree, phi), &DVector::zeros(op.dim()))?;
    Ok(GreenPair {
        mollifier,
        reference,
        discrete,
    })
}

/// Forward pair: `g' + Ag = δ^{ñ,t̃} v`, `g(0) = 0`, and `g_τ` from the
/// primal scheme.
pub fn forward_green_pair(op: &Operator, mesh: &TemporalMesh, degree: usize, interval: usize, t_tilde: f64, v: &DVector<f64>) -> Result<GreenPair> {
    let mollifier = Mollifier::new(mesh, degree, interval, t_tilde)?;
    let m = mollifier.clone();
    let reference = ModalReference::forward(op, &DVector::zeros(op.dim()), v, move |t| m.eval(t), mollifier.support(), mesh.final_time())?;
    let solver = DgSolver::new(op, degree)?;
    let discrete = solver.solve_moments(mesh, &delta_moments(&mollifier, mesh, degree, v), &DVector::zeros(op.dim()))?;
    Ok(GreenPair {
        mollifier,
        reference,
        discrete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::Trajectory;

    #[test]
    fn zero_direction_gives_zero_pair() {
        let op = Operator::diagonal(vec![1.0, 10.0]).unwrap();
        let mesh = TemporalMesh::uniform(1.0, 8).unwrap();
        let p = greens_pair(&op, &mesh, 1, 3, 0.43, &DVector::zeros(2)).unwrap();
        assert_eq!(p.reference.value_at(0.2).norm(), 0.0);
        assert!(p.discrete.coeffs().iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn dual_pair_is_causal_in_reversed_time() {
        let op = Operator::diagonal(vec![1.0, 10.0]).unwrap();
        let mesh = TemporalMesh::uniform(1.0, 8).unwrap();
        let phi = DVector::from_vec(vec![1.0, 1.0]);
        let p = greens_pair(&op, &mesh, 1, 3, 0.43, &phi).unwrap();
        for t in [0.5, 0.7, 1.0] {
            assert_eq!(p.reference.value_at(t).norm(), 0.0);
        }
        for n in 4..8 {
            assert!(p.discrete.local(n).iter().all(|c| c.norm() == 0.0));
        }
        assert!(p.reference.value_at(0.1).norm() > 0.0);
    }

    #[test]
    fn forward_pair_converges() {
        let op = Operator::diagonal(vec![1.0, 30.0]).unwrap();
        let v = DVector::from_vec(vec![1.0, -1.0]);
        let err = |n: usize| {
            let mesh = TemporalMesh::uniform(1.0, n).unwrap();
            let k = n / 4;
            let (a, b) = mesh.interval(k);
            let p = forward_green_pair(&op, &mesh, 1, k, 0.5 * (a + b), &v).unwrap();
            let t = 0.9;
            let nn = mesh.locate(t).unwrap();
            (p.discrete.value(nn, t) - p.reference.value_at(t)).norm()
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e2 < e1 / 2.0, "{e1} {e2}");
    }
}
