use super::{PiecewisePoly, Trajectory};
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quadrature::Quadrature;

/// Value of a bilinear form together with the sum of the magnitudes of its
/// contributions, the natural scale for judging cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub value: f64,
    pub scale: f64,
}

impl FormValue {
    fn add(&mut self, x: f64) {
        self.value += x;
        self.scale += x.abs();
    }

    /// `|value| / scale` (0 when both vanish).
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.value.abs() / self.scale
        }
    }
}

fn rule(phi: &PiecewisePoly, panels: usize) -> Result<Quadrature> {
    if panels == 0 {
        return Err(Error::InvalidArgument("quadrature panels must be >= 1".into()));
    }
    Ok(Quadrature::gauss_legendre(phi.degree() + 4).composite(panels))
}

/// `B_τ(v, φ) = Σ_n ∫_{J_n} ⟨v' + Av, φ⟩ + Σ_{n≥2} ⟨⟦v⟧^{n−1}, φ^{n−1,+}⟩ + ⟨v^{0,+}, φ^{0,+}⟩`.
///
/// Time integrals use a Gauss rule repeated over `panels` per interval.
pub fn primal_form<V: Trajectory + ?Sized>(op: &Operator, v: &V, phi: &PiecewisePoly, panels: usize) -> Result<FormValue> {
    let quad = rule(phi, panels)?;
    let mesh = phi.mesh();
    let mut out = FormValue { value: 0.0, scale: 0.0 };
    for n in 0..mesh.len() {
        let (a, b) = mesh.interval(n);
        for (t, w) in quad.mapped(a, b) {
            let residual = v.derivative(n, t) + op.apply(&v.value(n, t))?;
            out.add(w * op.pairing(&residual, &phi.eval(n, t)));
        }
        let left = v.left_limit(n, a);
        let jump = if n == 0 { left } else { left - v.right_limit(n - 1, a) };
        out.add(op.pairing(&jump, &phi.left_trace(n)));
    }
    Ok(out)
}

/// `B'_τ(v, φ) = Σ_n ∫_{J_n} ⟨v, −φ' + A'φ⟩ − Σ_{n=1}^{N−1} ⟨v^{n,−}, ⟦φ⟧^n⟩ + ⟨v^{N,−}, φ^{N,−}⟩`.
pub fn dual_form<V: Trajectory + ?Sized>(op: &Operator, v: &V, phi: &PiecewisePoly, panels: usize) -> Result<FormValue> {
    let quad = rule(phi, panels)?;
    let adjoint = op.adjoint();
    let mesh = phi.mesh();
    let last = mesh.len() - 1;
    let mut out = FormValue { value: 0.0, scale: 0.0 };
    for n in 0..mesh.len() {
        let (a, b) = mesh.interval(n);
        for (t, w) in quad.mapped(a, b) {
            let (phi_t, dphi_t) = (phi.eval(n, t), Trajectory::derivative(phi, n, t));
            let test = adjoint.apply(&phi_t)? - dphi_t;
            out.add(w * op.pairing(&v.value(n, t), &test));
        }
        let v_minus = v.right_limit(n, b);
        if n < last {
            let jump = phi.left_trace(n + 1) - phi.right_trace(n);
            out.add(-op.pairing(&v_minus, &jump));
        } else {
            out.add(op.pairing(&v_minus, &phi.right_trace(n)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ReferenceElement;
    use crate::dg::{solve_primal, OuterTrace};
    use crate::mesh::TemporalMesh;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(mesh: &TemporalMesh, r: usize, dim: usize, rng: &mut ChaCha8Rng) -> PiecewisePoly {
        let coeffs = (0..mesh.len())
            .map(|_| (0..=r).map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))).collect())
            .collect();
        PiecewisePoly::new(mesh.clone(), ReferenceElement::new(r).unwrap(), coeffs, OuterTrace::Initial(DVector::zeros(dim))).unwrap()
    }

    #[test]
    fn duality_identity_holds_for_nonsymmetric_operator() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, -0.5, 2.0, 0.7, 0.2, 0.0, 4.0]);
        let op = Operator::dense(a).unwrap();
        let mesh = TemporalMesh::quasi_uniform(1.0, 6, 0.5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for r in 0..=3 {
            let v = random_poly(&mesh, r, 3, &mut rng);
            let g = random_poly(&mesh, r, 3, &mut rng);
            let b = primal_form(&op, &v, &g, 1).unwrap();
            let bd = dual_form(&op, &v, &g, 1).unwrap();
            assert!((b.value - bd.value).abs() <= 1e-12 * b.scale.max(bd.scale), "r={r}");
        }
    }

    #[test]
    fn dg_solution_satisfies_its_own_equation() {
        let op = Operator::fem1d(6).unwrap();
        let mesh = TemporalMesh::uniform(0.5, 4).unwrap();
        let f = |t: f64| DVector::from_fn(5, |i, _| i as f64 - t + 3.0 * t * t);
        let u0 = DVector::from_fn(5, |i, _| i as f64 * 0.1);
        let u = solve_primal(&op, &mesh, 2, &f, &u0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_poly(&mesh, 2, 5, &mut rng);
        let lhs = primal_form(&op, &u, &phi, 1).unwrap();
        // right side: ∫⟨f, φ⟩ + ⟨u0, φ^{0,+}⟩
        let quad = Quadrature::gauss_legendre(12);
        let mut rhs = op.pairing(&u0, &phi.left_trace(0));
        for n in 0..mesh.len() {
            let (a, b) = mesh.interval(n);
            rhs += quad.integrate(a, b, |t| op.pairing(&f(t), &phi.eval(n, t)));
        }
        assert!((lhs.value - rhs).abs() < 1e-10 * lhs.scale, "{} vs {}", lhs.value, rhs);
    }
}
