//! Degree-`r` Lagrange basis on the reference interval `[0, 1]` and the
//! constant matrices of one DG step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Largest supported polynomial degree. Equispaced nodes stay well
/// conditioned up to here.
pub const MAX_DEGREE: usize = 4;

/// Reference element data for degree `r`.
///
/// The trial/test index convention is `K[(i, j)] = ∫ φ̇_j φ_i ds + φ_j(0) φ_i(0)`,
/// so row `i` is the test function and column `j` the trial function. The
/// upwind jump term is folded into `K`.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<f64>,
    bary_weights: Vec<f64>,
    quadrature: Quadrature,
    k: DMatrix<f64>,
    mt: DMatrix<f64>,
    phi0: DVector<f64>,
    phi1: DVector<f64>,
}

impl PartialEq for ReferenceElement {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
    }
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree {degree} outside supported range 0..={MAX_DEGREE}"
            )));
        }
        let nodes: Vec<f64> = if degree == 0 {
            vec![0.0]
        } else {
            (0..=degree).map(|j| j as f64 / degree as f64).collect()
        };
        let bary_weights = (0..nodes.len())
            .map(|i| {
                let prod: f64 = (0..nodes.len())
                    .filter(|&k| k != i)
                    .map(|k| nodes[i] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        let n = degree + 1;
        let mut elem = ReferenceElement {
            degree,
            nodes,
            bary_weights,
            quadrature: Quadrature::exact_for_degree(2 * degree + 2),
            k: DMatrix::zeros(n, n),
            mt: DMatrix::zeros(n, n),
            phi0: DVector::zeros(n),
            phi1: DVector::zeros(n),
        };
        elem.phi0 = DVector::from_vec(elem.values(0.0));
        elem.phi1 = DVector::from_vec(elem.values(1.0));
        let mut k = elem.phi0.clone() * elem.phi0.transpose();
        let mut mt = DMatrix::zeros(n, n);
        for (s, w) in elem.quadrature.points.iter().zip(&elem.quadrature.weights) {
            let v = elem.values(*s);
            let d = elem.derivatives(*s);
            for i in 0..n {
                for j in 0..n {
                    k[(i, j)] += w * d[j] * v[i];
                    mt[(i, j)] += w * v[j] * v[i];
                }
            }
        }
        elem.k = k;
        elem.mt = mt;
        Ok(elem)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of local degrees of freedom, `r + 1`.
    pub fn size(&self) -> usize {
        self.degree + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Gauss–Legendre rule of the element (exact for degree `2r + 3`).
    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mt
    }

    pub fn phi0(&self) -> &DVector<f64> {
        &self.phi0
    }

    pub fn phi1(&self) -> &DVector<f64> {
        &self.phi1
    }

    /// `(φ_i(s))_i`, barycentric form.
    pub fn values(&self, s: f64) -> Vec<f64> {
        let n = self.size();
        if n == 1 {
            return vec![1.0];
        }
        if let Some(hit) = self.nodes.iter().position(|&x| x == s) {
            let mut out = vec![0.0; n];
            out[hit] = 1.0;
            return out;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.bary_weights)
            .map(|(x, w)| w / (s - x))
            .collect();
        let denom: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / denom).collect()
    }

    /// `(φ̇_i(s))_i`.
    pub fn derivatives(&self, s: f64) -> Vec<f64> {
        let n = self.size();
        if n == 1 {
            return vec![0.0];
        }
        if let Some(hit) = self.nodes.iter().position(|&x| x == s) {
            // row `hit` of the differentiation matrix
            let mut out = vec![0.0; n];
            let mut diag = 0.0;
            for i in 0..n {
                if i != hit {
                    let d = (self.bary_weights[i] / self.bary_weights[hit]) / (self.nodes[hit] - self.nodes[i]);
                    out[i] = d;
                    diag -= d;
                }
            }
            out[hit] = diag;
            return out;
        }
        let v = self.values(s);
        let sum_inv: Vec<f64> = self.nodes.iter().map(|x| 1.0 / (s - x)).collect();
        (0..n)
            .map(|i| {
                let s_others: f64 = (0..n).filter(|&k| k != i).map(|k| sum_inv[k]).sum();
                v[i] * s_others
            })
            .collect()
    }

    /// Basis values (`derivative_order = 0`) or first derivatives (`1`).
    pub fn eval_basis(&self, s: f64, derivative_order: usize) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s = {s} outside [0, 1]")));
        }
        match derivative_order {
            0 => Ok(self.values(s)),
            1 => Ok(self.derivatives(s)),
            k => Err(Error::InvalidArgument(format!("derivative order {k} not supported"))),
        }
    }
}

/// Polynomial stored by monomial coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialPoly(pub Vec<f64>);

impl MonomialPoly {
    pub fn eval(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

/// Orthonormal basis of `P^{r-1}(0,1)` for the weight `s`, i.e.
/// `∫₀¹ s ψ_i ψ_j ds = δ_ij`, by modified Gram–Schmidt on monomials.
pub fn orthonormal_weighted_basis(r: usize) -> Result<Vec<MonomialPoly>> {
    if r == 0 {
        return Err(Error::InvalidArgument("weighted basis requires r >= 1".into()));
    }
    let inner = |p: &[f64], q: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (a, pa) in p.iter().enumerate() {
            for (b, qb) in q.iter().enumerate() {
                acc += pa * qb / (a + b + 2) as f64;
            }
        }
        acc
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(r);
    for k in 0..r {
        let mut v = vec![0.0; r];
        v[k] = 1.0;
        for b in &basis {
            let c = inner(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let norm = inner(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    Ok(basis
        .into_iter()
        .map(|mut c| {
            while c.len() > 1 && c.last() == Some(&0.0) {
                c.pop();
            }
            MonomialPoly(c)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_zero_matrices() {
        let e = ReferenceElement::new(0).unwrap();
        assert_eq!(e.k()[(0, 0)], 1.0);
        assert_abs_diff_eq!(e.mass()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_eq!(e.phi0()[0], 1.0);
        assert_eq!(e.nodes(), &[0.0]);
    }

    #[test]
    fn degree_one_matrices_match_hand_assembly() {
        // φ0 = 1 - s, φ1 = s
        let e = ReferenceElement::new(1).unwrap();
        let k = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, -0.5, 0.5]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        assert!((e.k() - k).amax() < 1e-14);
        assert!((e.mass() - m).amax() < 1e-14);
        assert_eq!(e.phi0().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn eval_basis_examples() {
        let e1 = ReferenceElement::new(1).unwrap();
        assert_eq!(e1.eval_basis(0.0, 0).unwrap(), vec![1.0, 0.0]);
        for s in [0.0, 0.3, 0.77, 1.0] {
            let d = e1.eval_basis(s, 1).unwrap();
            assert_abs_diff_eq!(d[0], -1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(d[1], 1.0, epsilon = 1e-14);
        }
        let e2 = ReferenceElement::new(2).unwrap();
        assert_eq!(e2.eval_basis(0.5, 0).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(e2.eval_basis(1.5, 0).is_err());
        assert!(e2.eval_basis(0.5, 2).is_err());
    }

    #[test]
    fn nodal_identity_and_partition_of_unity() {
        for r in 0..=MAX_DEGREE {
            let e = ReferenceElement::new(r).unwrap();
            for (j, &x) in e.nodes().iter().enumerate() {
                let v = e.values(x);
                for (i, vi) in v.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((vi - expect).abs() < 1e-12);
                }
            }
            assert_abs_diff_eq!(e.phi0().sum(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(e.phi1().sum(), 1.0, epsilon = 1e-14);
            for s in [0.123, 0.5, 0.91] {
                assert_abs_diff_eq!(e.values(s).iter().sum::<f64>(), 1.0, epsilon = 1e-13);
                assert!(e.derivatives(s).iter().sum::<f64>().abs() < 1e-11);
            }
        }
    }

    #[test]
    fn derivative_at_node_matches_off_node_limit() {
        let e = ReferenceElement::new(3).unwrap();
        let at = e.derivatives(1.0 / 3.0);
        let near = e.derivatives(1.0 / 3.0 + 1e-7);
        for (a, b) in at.iter().zip(&near) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn k_plus_transpose_is_sum_of_end_trace_products() {
        // integration by parts: K + Kᵀ = φ(1)φ(1)ᵀ + φ(0)φ(0)ᵀ
        for r in 0..=MAX_DEGREE {
            let e = ReferenceElement::new(r).unwrap();
            let sym = e.k() + e.k().transpose();
            let outer = e.phi1() * e.phi1().transpose() + e.phi0() * e.phi0().transpose();
            assert!((sym - outer).amax() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn mass_is_spd_with_expected_row_sums() {
        for r in 0..=MAX_DEGREE {
            let e = ReferenceElement::new(r).unwrap();
            let m = e.mass();
            assert!((m - m.transpose()).amax() < 1e-15);
            assert!(m.clone().cholesky().is_some());
            let q = Quadrature::gauss_legendre(10);
            for i in 0..e.size() {
                let integral = q.integrate(0.0, 1.0, |s| e.values(s)[i]);
                assert_abs_diff_eq!(m.row(i).sum(), integral, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn element_quadrature_exactness() {
        for r in 0..=MAX_DEGREE {
            let e = ReferenceElement::new(r).unwrap();
            for k in 0..=2 * r + 1 {
                let v = e.quadrature().integrate(0.0, 1.0, |s| s.powi(k as i32));
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn weighted_basis_is_orthonormal() {
        assert!(orthonormal_weighted_basis(0).is_err());
        let b1 = orthonormal_weighted_basis(1).unwrap();
        assert_eq!(b1.len(), 1);
        assert_abs_diff_eq!(b1[0].0[0], 2f64.sqrt(), epsilon = 1e-14);
        let q = Quadrature::gauss_legendre(8);
        for r in 1..=MAX_DEGREE {
            let b = orthonormal_weighted_basis(r).unwrap();
            assert_abs_diff_eq!(b[0].eval(0.37), 2f64.sqrt(), epsilon = 1e-14);
            for i in 0..r {
                assert!(b[i].degree() <= r - 1);
                for j in 0..r {
                    let g = q.integrate(0.0, 1.0, |s| s * b[i].eval(s) * b[j].eval(s));
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((g - expect).abs() < 1e-12, "r={r} i={i} j={j} g={g}");
                }
            }
        }
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert!(ReferenceElement::new(MAX_DEGREE + 1).is_err());
    }
}
