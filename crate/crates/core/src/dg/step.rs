use nalgebra::{DMatrix, DVector};

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::operator::{Operator, OperatorKind};

/// One local DG step: solves
/// `Σ_j [K_ij I + τ Mt_ij A] U_j = moments_i + φ_i(0) u_prev` for `U_0..U_r`.
///
/// `moments[i] = ∫_{J_n} f φ^n_i dt`.
pub fn dg_step(
    op: &Operator,
    elem: &ReferenceElement,
    tau: f64,
    u_prev: &DVector<f64>,
    moments: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    local_step(op, elem, tau, u_prev, moments, 0)
}

pub(crate) fn local_step(
    op: &Operator,
    elem: &ReferenceElement,
    tau: f64,
    u_prev: &DVector<f64>,
    moments: &[DVector<f64>],
    interval: usize,
) -> Result<Vec<DVector<f64>>> {
    let m = op.dim();
    let size = elem.size();
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("step length {tau} must be positive")));
    }
    if u_prev.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: u_prev.len() });
    }
    if moments.len() != size {
        return Err(Error::DimensionMismatch { expected: size, got: moments.len() });
    }
    if let Some(bad) = moments.iter().find(|v| v.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
    }
    let singular = || Error::SingularStep {
        interval,
        tau,
        operator: op.label().to_string(),
    };
    let rhs: Vec<DVector<f64>> = moments
        .iter()
        .zip(elem.phi0().iter())
        .map(|(mi, p)| mi + u_prev * *p)
        .collect();

    let solution = match op.eigen() {
        Some(eig) => {
            let diagonal = matches!(op.kind(), OperatorKind::Diagonal(_));
            let modal_rhs: Vec<DVector<f64>> = if diagonal {
                rhs.clone()
            } else {
                rhs.iter().map(|b| eig.to_modal(b)).collect()
            };
            let mut modal = vec![DVector::zeros(m); size];
            let mut b = DVector::zeros(size);
            for k in 0..m {
                let local = elem.k() + elem.mass() * (tau * eig.values[k]);
                for i in 0..size {
                    b[i] = modal_rhs[i][k];
                }
                let x = local.lu().solve(&b).ok_or_else(singular)?;
                for j in 0..size {
                    modal[j][k] = x[j];
                }
            }
            if diagonal {
                modal
            } else {
                modal.iter().map(|c| eig.from_modal(c)).collect()
            }
        }
        None => {
            let OperatorKind::Dense(a) = op.kind() else {
                return Err(singular());
            };
            let n = size * m;
            let mut block = DMatrix::zeros(n, n);
            for i in 0..size {
                for j in 0..size {
                    let mut sub = block.view_mut((i * m, j * m), (m, m));
                    sub += a * (tau * elem.mass()[(i, j)]);
                    for d in 0..m {
                        sub[(d, d)] += elem.k()[(i, j)];
                    }
                }
            }
            let mut b = DVector::zeros(n);
            for (i, r) in rhs.iter().enumerate() {
                b.rows_mut(i * m, m).copy_from(r);
            }
            let x = block.lu().solve(&b).ok_or_else(singular)?;
            (0..size).map(|j| x.rows(j * m, m).into_owned()).collect()
        }
    };
    if solution.iter().any(|u| u.iter().any(|x| !x.is_finite())) {
        return Err(singular());
    }
    check_residual(op, elem, tau, &rhs, &solution).map_err(|_| singular())?;
    Ok(solution)
}

/// Normwise backward error of the block system, against `1e-10`.
fn check_residual(
    op: &Operator,
    elem: &ReferenceElement,
    tau: f64,
    rhs: &[DVector<f64>],
    u: &[DVector<f64>],
) -> Result<()> {
    let au = u.iter().map(|x| op.apply(x)).collect::<Result<Vec<_>>>()?;
    let a_norm = op.norm_bound();
    let mut worst = 0.0_f64;
    for i in 0..u.len() {
        let mut res = -rhs[i].clone();
        let mut scale = rhs[i].norm();
        for j in 0..u.len() {
            let k = elem.k()[(i, j)];
            let mt = tau * elem.mass()[(i, j)];
            res.axpy(k, &u[j], 1.0);
            res.axpy(mt, &au[j], 1.0);
            scale += (k.abs() + mt.abs() * a_norm) * u[j].norm();
        }
        if scale > 0.0 {
            worst = worst.max(res.norm() / scale);
        }
    }
    if worst > 1e-10 {
        return Err(Error::SchemeViolation(format!("local residual {worst:e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(a: f64) -> Operator {
        Operator::diagonal(vec![a]).unwrap()
    }

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_vec(vec![x])
    }

    #[test]
    fn r0_is_backward_euler_type() {
        let (a, tau, fbar, prev) = (3.0, 0.2, 1.5, 0.7);
        let elem = ReferenceElement::new(0).unwrap();
        let u = dg_step(&scalar(a), &elem, tau, &v1(prev), &[v1(tau * fbar)]).unwrap();
        assert_relative_eq!(u[0][0], (tau * fbar + prev) / (1.0 + tau * a), epsilon = 1e-15);
    }

    #[test]
    fn zero_operator_continues_constant() {
        // A = 0 is not admissible as an operator; the scalar step with a tiny
        // eigenvalue tends to constant continuation, and the dense zero-free
        // limit is checked through K·1 = Φ0.
        for r in 0..=4 {
            let elem = ReferenceElement::new(r).unwrap();
            let ones = DVector::from_element(r + 1, 1.0);
            assert!((elem.k() * &ones - elem.phi0()).norm() < 1e-13);
            let u = dg_step(&scalar(1e-300), &elem, 1.0, &v1(2.5), &vec![v1(0.0); r + 1]).unwrap();
            for uj in u {
                assert_relative_eq!(uj[0], 2.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn r1_unit_step_matches_closed_form() {
        let elem = ReferenceElement::new(1).unwrap();
        let u = dg_step(&scalar(1.0), &elem, 1.0, &v1(1.0), &[v1(0.0), v1(0.0)]).unwrap();
        let den = 1.0 + 2.0 / 3.0 + 1.0 / 6.0;
        // R_{0,0}(z) = (1 + 2z/3)/q(z), R_{1,0}(z) = (1 − z/3)/q(z)
        assert_relative_eq!(u[0][0], (1.0 + 2.0 / 3.0) / den, epsilon = 1e-14);
        assert_relative_eq!(u[1][0], (1.0 - 1.0 / 3.0) / den, epsilon = 1e-14);
    }

    #[test]
    fn dense_and_modal_routes_agree() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 4.0]);
        let sym = Operator::dense(a.clone()).unwrap();
        let elem = ReferenceElement::new(2).unwrap();
        let prev = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let mom: Vec<_> = (0..3).map(|i| DVector::from_vec(vec![0.1 * i as f64, 1.0, -0.3])).collect();
        let modal = dg_step(&sym, &elem, 0.3, &prev, &mom).unwrap();
        // perturb symmetry below detection to force the block route on a copy
        let mut b = a.clone();
        b[(0, 2)] += 1e-9;
        let nonsym = Operator::dense(b).unwrap();
        assert!(nonsym.eigen().is_none());
        let block = dg_step(&nonsym, &elem, 0.3, &prev, &mom).unwrap();
        for (x, y) in modal.iter().zip(&block) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let elem = ReferenceElement::new(1).unwrap();
        let op = scalar(1.0);
        assert!(dg_step(&op, &elem, 0.0, &v1(1.0), &[v1(0.0), v1(0.0)]).is_err());
        assert!(dg_step(&op, &elem, 1.0, &v1(1.0), &[v1(0.0)]).is_err());
        assert!(dg_step(&op, &elem, 1.0, &DVector::zeros(2), &[v1(0.0), v1(0.0)]).is_err());
    }
}
