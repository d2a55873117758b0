//! Broken norms, jump sums, weighted errors and the discrete maximal
//! regularity functional.

use nalgebra::DVector;

use crate::dg::{PiecewisePoly, TimeFunction, Trajectory};
use crate::error::{Error, Result};
use crate::operator::{InterpolationMethod, Operator, SpaceNorm};
use crate::quadrature::Quadrature;

/// `σ(t) = sqrt((t − t̃)² + τ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFn {
    pub t_tilde: f64,
    pub tau: f64,
}

impl WeightFn {
    pub fn new(t_tilde: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("weight scale {tau} must be positive")));
        }
        Ok(WeightFn { t_tilde, tau })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (t - self.t_tilde).hypot(self.tau)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time exponent p = {p} must be >= 1")))
    }
}

/// Combines per-interval `L^p` norms into the norm over the whole mesh.
pub fn combine(parts: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        parts.iter().cloned().fold(0.0, f64::max)
    } else {
        parts.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `‖g‖_{L^p(a,b;X)}` by the given rule on `[0, 1]`; for `p = ∞` the maximum
/// over the quadrature points and both endpoints.
pub fn interval_norm<G>(a: f64, b: f64, p: f64, space: &SpaceNorm, quad: &Quadrature, mut g: G) -> Result<f64>
where
    G: FnMut(f64) -> Result<DVector<f64>>,
{
    check_exponent(p)?;
    if p.is_infinite() {
        let mut m = space.norm(&g(a)?).max(space.norm(&g(b)?));
        for (t, _) in quad.mapped(a, b) {
            m = m.max(space.norm(&g(t)?));
        }
        return Ok(m);
    }
    let mut sum = 0.0;
    for (t, w) in quad.mapped(a, b) {
        sum += w * space.norm(&g(t)?).powf(p);
    }
    Ok(sum.powf(1.0 / p))
}

fn poly_rule(degree: usize) -> Quadrature {
    Quadrature::gauss_legendre(2 * degree + 6)
}

fn check_dims(u: &PiecewisePoly, op: Option<&Operator>) -> Result<()> {
    if let Some(op) = op {
        if op.dim() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: u.dim(),
            });
        }
    }
    Ok(())
}

/// Per-interval `‖∂_t^k u‖_{L^p(J_n;X)}` or `‖A ∂_t^k u‖_{L^p(J_n;X)}`.
pub fn per_interval_norms(u: &PiecewisePoly, p: f64, space: &SpaceNorm, derivative_order: usize, apply_a: Option<&Operator>) -> Result<Vec<f64>> {
    if derivative_order > 1 {
        return Err(Error::InvalidArgument("derivative order must be 0 or 1".into()));
    }
    check_dims(u, apply_a)?;
    let quad = poly_rule(u.degree());
    (0..u.mesh().len())
        .map(|n| {
            let (a, b) = u.mesh().interval(n);
            interval_norm(a, b, p, space, &quad, |t| {
                let v = if derivative_order == 0 { u.eval(n, t) } else { Trajectory::derivative(u, n, t) };
                match apply_a {
                    Some(op) => op.apply(&v),
                    None => Ok(v),
                }
            })
        })
        .collect()
}

/// `(Σ_n ‖∂_t^k (A) u‖^p_{L^p(J_n;X)})^{1/p}`.
pub fn broken_norm(u: &PiecewisePoly, p: f64, space: &SpaceNorm, derivative_order: usize, apply_a: Option<&Operator>) -> Result<f64> {
    Ok(combine(&per_interval_norms(u, p, space, derivative_order, apply_a)?, p))
}

/// `(Σ_n ‖⟦u⟧^{n−1}/τ_n‖_X^p τ_n)^{1/p}`, with `u^{0,−}` the stored initial trace.
pub fn jump_sum(u: &PiecewisePoly, p: f64, space: &SpaceNorm) -> Result<f64> {
    check_exponent(p)?;
    let parts = per_interval_jumps(u, p, space)?;
    Ok(combine(&parts, p))
}

/// `‖⟦u⟧^{n−1}/τ_n‖_X τ_n^{1/p}` for each interval.
pub fn per_interval_jumps(u: &PiecewisePoly, p: f64, space: &SpaceNorm) -> Result<Vec<f64>> {
    (0..u.mesh().len())
        .map(|n| {
            let tau = u.mesh().tau_n(n);
            let j = space.norm(&u.jump_at_left(n)?) / tau;
            Ok(if p.is_infinite() { j } else { j * tau.powf(1.0 / p) })
        })
        .collect()
}

/// Per-interval `‖u' + Au − f‖_{L^p(J_n;X)}`.
pub fn residual_norms<F: TimeFunction + ?Sized>(u: &PiecewisePoly, f: &F, op: &Operator, p: f64, space: &SpaceNorm, quad: &Quadrature) -> Result<Vec<f64>> {
    check_dims(u, Some(op))?;
    (0..u.mesh().len())
        .map(|n| {
            let (a, b) = u.mesh().interval(n);
            interval_norm(a, b, p, space, quad, |t| Ok(Trajectory::derivative(u, n, t) + op.apply(&u.eval(n, t))? - f.eval(n, t)))
        })
        .collect()
}

/// Per-interval `‖Au − f‖_{L^p(J_n;X)}`.
pub fn a_minus_f_norms<F: TimeFunction + ?Sized>(u: &PiecewisePoly, f: &F, op: &Operator, p: f64, space: &SpaceNorm, quad: &Quadrature) -> Result<Vec<f64>> {
    check_dims(u, Some(op))?;
    (0..u.mesh().len())
        .map(|n| {
            let (a, b) = u.mesh().interval(n);
            interval_norm(a, b, p, space, quad, |t| Ok(op.apply(&u.eval(n, t))? - f.eval(n, t)))
        })
        .collect()
}

/// `‖f‖_{L^p(J;X)}` with the given rule on every interval.
pub fn source_norm<F: TimeFunction + ?Sized>(mesh: &crate::mesh::TemporalMesh, f: &F, p: f64, space: &SpaceNorm, quad: &Quadrature) -> Result<f64> {
    let parts = (0..mesh.len())
        .map(|n| {
            let (a, b) = mesh.interval(n);
            interval_norm(a, b, p, space, quad, |t| Ok(f.eval(n, t)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(&parts, p))
}

/// `‖σ^α A(γ − γ_τ)‖_{L^p(J;X)}`.
///
/// Each interval is split into panels graded geometrically toward its left
/// end (down to `2^{-40} τ_n`, where the exact solution has its layers) and
/// every panel is subdivided `resolution` times. The value is computed at
/// `resolution` and `2 · resolution`; a relative change above 1% is reported
/// as [`Error::UnderResolved`].
pub fn weighted_a_error<V: Trajectory + ?Sized>(
    reference: &V,
    approx: &PiecewisePoly,
    sigma: WeightFn,
    alpha: f64,
    p: f64,
    op: &Operator,
    space: &SpaceNorm,
    resolution: usize,
) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be >= 1".into()));
    }
    let coarse = weighted_a_error_at(reference, approx, sigma, alpha, p, op, space, resolution)?;
    let fine = weighted_a_error_at(reference, approx, sigma, alpha, p, op, space, 2 * resolution)?;
    let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if fine != 0.0 && change > 0.01 {
        return Err(Error::UnderResolved { relative_change: change });
    }
    Ok(fine)
}

/// Geometrically graded panels on `[0, 1]`: `[2^{-k-1}, 2^{-k}]`, each cut
/// into `resolution` pieces, plus `[0, 2^{-40}]`.
fn graded_rule(resolution: usize) -> Quadrature {
    let base = Quadrature::gauss_legendre(8);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut edges = vec![0.0];
    for k in (0..=40).rev() {
        edges.push(0.5f64.powi(k));
    }
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let h = (hi - lo) / resolution as f64;
        for m in 0..resolution {
            let a = lo + m as f64 * h;
            for (x, wx) in base.points.iter().zip(&base.weights) {
                points.push(a + x * h);
                weights.push(wx * h);
            }
        }
    }
    Quadrature { points, weights }
}

#[allow(clippy::too_many_arguments)]
fn weighted_a_error_at<V: Trajectory + ?Sized>(
    reference: &V,
    approx: &PiecewisePoly,
    sigma: WeightFn,
    alpha: f64,
    p: f64,
    op: &Operator,
    space: &SpaceNorm,
    resolution: usize,
) -> Result<f64> {
    check_exponent(p)?;
    let quad = graded_rule(resolution);
    let mesh = approx.mesh();
    let mut parts = Vec::with_capacity(mesh.len());
    for n in 0..mesh.len() {
        let (a, b) = mesh.interval(n);
        let weighted = |t: f64| -> Result<DVector<f64>> {
            let diff = op.apply(&(reference.value(n, t) - approx.eval(n, t)))?;
            Ok(diff * sigma.eval(t).powf(alpha))
        };
        parts.push(interval_norm(a, b, p, space, &quad, weighted)?);
    }
    Ok(combine(&parts, p))
}

/// The terms of the discrete maximal regularity estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub dt_norm: f64,
    pub a_norm: f64,
    pub jump_norm: f64,
    pub f_norm: f64,
    pub u0_norm: f64,
    pub rhs_norm: f64,
    /// `None` when both sides vanish.
    pub mr_ratio: Option<f64>,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "dt_norm,A_norm,jump_norm,f_norm,u0_norm,rhs_norm,mr_ratio";

    pub fn lhs(&self) -> f64 {
        self.dt_norm + self.a_norm + self.jump_norm
    }

    pub fn csv_row(&self) -> String {
        let ratio = self.mr_ratio.map(|r| format!("{r:.10e}")).unwrap_or_default();
        format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            self.dt_norm, self.a_norm, self.jump_norm, self.f_norm, self.u0_norm, self.rhs_norm, ratio
        )
    }
}

/// Assembles the maximal regularity functional of a DG solution `u` of the
/// problem with data `(f, u0)`. `f` norms use `f_rule` on every interval.
pub fn mr_functional<F: TimeFunction + ?Sized>(
    u: &PiecewisePoly,
    f: &F,
    u0: &DVector<f64>,
    op: &Operator,
    p: f64,
    space: &SpaceNorm,
    f_rule: &Quadrature,
) -> Result<NormReport> {
    check_dims(u, Some(op))?;
    let dt_norm = broken_norm(u, p, space, 1, None)?;
    let a_norm = broken_norm(u, p, space, 0, Some(op))?;
    let jump_norm = jump_sum(u, p, space)?;
    let f_norm = source_norm(u.mesh(), f, p, space, f_rule)?;
    let u0_norm = if u0.iter().all(|x| *x == 0.0) {
        0.0
    } else {
        op.interpolation_norm(u0, p, space, InterpolationMethod::Semigroup)?
    };
    let rhs_norm = f_norm + u0_norm;
    let lhs = dt_norm + a_norm + jump_norm;
    let mr_ratio = if rhs_norm > 0.0 {
        Some(lhs / rhs_norm)
    } else if lhs > 0.0 {
        return Err(Error::SchemeViolation(format!("nonzero solution (lhs {lhs:e}) from zero data")));
    } else {
        None
    };
    Ok(NormReport {
        dt_norm,
        a_norm,
        jump_norm,
        f_norm,
        u0_norm,
        rhs_norm,
        mr_ratio,
    })
}

/// `((Σ ‖(u^{n,−} − u^{n−1,−})/τ_n‖^p τ_n)^{1/p}, (Σ ‖A u^{n,−}‖^p τ_n)^{1/p})`.
pub fn one_step_functional(u: &PiecewisePoly, op: &Operator, p: f64, space: &SpaceNorm) -> Result<(f64, f64)> {
    check_exponent(p)?;
    check_dims(u, Some(op))?;
    let mesh = u.mesh();
    let mut prev = u.initial_trace()?.clone();
    let mut diffs = Vec::with_capacity(mesh.len());
    let mut applied = Vec::with_capacity(mesh.len());
    for n in 0..mesh.len() {
        let tau = mesh.tau_n(n);
        let cur = u.right_trace(n);
        let scale = if p.is_infinite() { 1.0 } else { tau.powf(1.0 / p) };
        diffs.push(space.norm(&(&cur - &prev)) / tau * scale);
        applied.push(space.norm(&op.apply(&cur)?) * scale);
        prev = cur;
    }
    Ok((combine(&diffs, p), combine(&applied, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ReferenceElement;
    use crate::dg::{solve_primal, OuterTrace};
    use crate::mesh::TemporalMesh;
    use approx::assert_relative_eq;

    fn scalar_poly(mesh: &TemporalMesh, r: usize, f: impl Fn(f64) -> f64 + Sync, u0: f64) -> PiecewisePoly {
        let g = move |t: f64| DVector::from_element(1, f(t));
        PiecewisePoly::from_nodal_values(mesh.clone(), ReferenceElement::new(r).unwrap(), &g, OuterTrace::Initial(DVector::from_element(1, u0))).unwrap()
    }

    fn l2() -> SpaceNorm {
        SpaceNorm::new(2.0, None).unwrap()
    }

    #[test]
    fn broken_norm_examples() {
        let mesh = TemporalMesh::uniform(2.0, 4).unwrap();
        let c = scalar_poly(&mesh, 1, |_| 3.0, 0.0);
        assert!(broken_norm(&c, 2.0, &l2(), 1, None).unwrap() < 1e-13);
        assert_relative_eq!(broken_norm(&c, 2.0, &l2(), 0, None).unwrap(), 3.0 * 2f64.sqrt(), max_relative = 1e-14);
        let one = TemporalMesh::uniform(1.0, 1).unwrap();
        let t = scalar_poly(&one, 1, |t| t, 0.0);
        assert_relative_eq!(broken_norm(&t, 2.0, &l2(), 0, None).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(broken_norm(&t, f64::INFINITY, &l2(), 0, None).unwrap(), 1.0);
        // Hölder sanity bound
        assert!(broken_norm(&c, 2.0, &l2(), 0, None).unwrap() <= 2f64.sqrt() * broken_norm(&c, f64::INFINITY, &l2(), 0, None).unwrap() + 1e-12);
    }

    #[test]
    fn jump_sum_examples() {
        let one = TemporalMesh::uniform(1.0, 1).unwrap();
        let u = scalar_poly(&one, 0, |_| 1.0, 0.0);
        assert_relative_eq!(jump_sum(&u, 2.0, &l2()).unwrap(), 1.0);
        let mesh = TemporalMesh::uniform(1.0, 5).unwrap();
        let cont = scalar_poly(&mesh, 2, |t| t * t, 0.0);
        assert!(jump_sum(&cont, 3.0, &l2()).unwrap() < 1e-14);
    }

    #[test]
    fn weight_properties() {
        let w = WeightFn::new(0.3, 0.01).unwrap();
        assert_eq!(w.eval(0.3), 0.01);
        assert!(w.eval(0.9) >= 0.01);
        assert!(WeightFn::new(0.3, 0.0).is_err());
    }

    #[test]
    fn unweighted_error_matches_broken_norm() {
        let op = Operator::diagonal(vec![1.0, 20.0]).unwrap();
        let mesh = TemporalMesh::quasi_uniform(1.0, 6, 0.5, 4).unwrap();
        let f = |t: f64| DVector::from_vec(vec![t.cos(), 1.0 - t]);
        let u = solve_primal(&op, &mesh, 1, &f, &DVector::zeros(2)).unwrap();
        let v = solve_primal(&op, &mesh, 1, &f, &DVector::from_vec(vec![0.3, -0.2])).unwrap();
        let diff = v.linear_combination(1.0, &u, -1.0).unwrap();
        let direct = broken_norm(&diff, 2.0, &l2(), 0, Some(&op)).unwrap();
        let sigma = WeightFn::new(0.5, mesh.tau()).unwrap();
        let weighted = weighted_a_error(&v, &u, sigma, 0.0, 2.0, &op, &l2(), 1).unwrap();
        assert_relative_eq!(weighted, direct, max_relative = 1e-12);
        assert_eq!(weighted_a_error(&u, &u, sigma, 1.0, 2.0, &op, &l2(), 1).unwrap(), 0.0);
    }

    #[test]
    fn mr_functional_zero_data_and_homogeneity() {
        let op = Operator::diagonal(vec![1.0, 4.0]).unwrap();
        let mesh = TemporalMesh::uniform(1.0, 4).unwrap();
        let zero = |_t: f64| DVector::zeros(2);
        let rule = Quadrature::gauss_legendre(6);
        let u = solve_primal(&op, &mesh, 1, &zero, &DVector::zeros(2)).unwrap();
        let rep = mr_functional(&u, &zero, &DVector::zeros(2), &op, 2.0, &l2(), &rule).unwrap();
        assert_eq!(rep.mr_ratio, None);
        assert_eq!(rep.lhs(), 0.0);
        let f = |t: f64| DVector::from_vec(vec![1.0, t]);
        let u = solve_primal(&op, &mesh, 1, &f, &DVector::zeros(2)).unwrap();
        let a = broken_norm(&u, 2.0, &l2(), 0, Some(&op)).unwrap();
        let b = broken_norm(&u.scaled(-3.0), 2.0, &l2(), 0, Some(&op)).unwrap();
        assert_relative_eq!(b, 3.0 * a, max_relative = 1e-14);
        assert!(rep.csv_row().split(',').count() == NormReport::CSV_HEADER.split(',').count());
    }

    #[test]
    fn jump_bounded_by_residual() {
        let op = Operator::diagonal(vec![1.0, 50.0, 900.0]).unwrap();
        let mesh = TemporalMesh::quasi_uniform(1.0, 10, 0.5, 8).unwrap();
        let f = |t: f64| DVector::from_vec(vec![(5.0 * t).sin(), 1.0, t * t]);
        let solver = crate::dg::DgSolver::new(&op, 1).unwrap().with_oversampling(4).unwrap();
        let u = solver.solve(&mesh, &f, &DVector::from_vec(vec![1.0, 0.0, -1.0])).unwrap();
        let quad = Quadrature::gauss_legendre(6).composite(4);
        for p in [2.0, 4.0] {
            let jumps = per_interval_jumps(&u, p, &l2()).unwrap();
            let res = residual_norms(&u, &f, &op, p, &l2(), &quad).unwrap();
            for (j, r) in jumps.iter().zip(&res) {
                assert!(j <= &(r * (1.0 + 1e-8)), "{j} > {r}");
            }
        }
    }

    #[test]
    fn one_step_of_constant_is_zero() {
        let mesh = TemporalMesh::uniform(1.0, 3).unwrap();
        let c = scalar_poly(&mesh, 1, |_| 2.0, 2.0);
        let op = Operator::diagonal(vec![3.0]).unwrap();
        let (d, a) = one_step_functional(&c, &op, 2.0, &l2()).unwrap();
        assert_eq!(d, 0.0);
        assert_relative_eq!(a, 6.0, max_relative = 1e-14);
    }
}
