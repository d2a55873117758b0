use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quadrature::adaptive_integrate;

/// Orientation of the reference problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `u' + Au = g(t) v`, `u(0) = u0`.
    Forward,
    /// `−γ' + A'γ = g(t) v`, `γ(T) = γ_T`.
    Backward,
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact solution of a linear problem with separable source `g(t) v`, built
/// from the eigendecomposition of a self-adjoint operator. Each modal Duhamel
/// integral is evaluated by adaptive Gauss–Kronrod quadrature.
#[derive(Clone)]
pub struct ModalReference {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    start: DVector<f64>,
    source: DVector<f64>,
    profile: Profile,
    /// Support of the profile in forward (solver) time.
    support: (f64, f64),
    t_end: f64,
    direction: Direction,
    conv_at_support_end: Vec<f64>,
    profile_scale: f64,
}

impl fmt::Debug for ModalReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModalReference")
            .field("modes", &self.values.len())
            .field("support", &self.support)
            .field("t_end", &self.t_end)
            .field("direction", &self.direction)
            .finish()
    }
}

const REL_TOL: f64 = 1e-12;

impl ModalReference {
    /// Forward problem. The profile must vanish outside `support`.
    pub fn forward<G>(op: &Operator, u0: &DVector<f64>, source: &DVector<f64>, profile: G, support: (f64, f64), t_end: f64) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::build(op, u0, source, Arc::new(profile), support, t_end, Direction::Forward)
    }

    /// Backward problem on `(0, t_end)`, driven by `profile` (in physical time).
    pub fn backward<G>(op: &Operator, terminal: &DVector<f64>, source: &DVector<f64>, profile: G, support: (f64, f64), t_end: f64) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let reversed: Profile = Arc::new(move |s: f64| profile(t_end - s));
        let support = (t_end - support.1, t_end - support.0);
        Self::build(op, terminal, source, reversed, support, t_end, Direction::Backward)
    }

    fn build(op: &Operator, start: &DVector<f64>, source: &DVector<f64>, profile: Profile, support: (f64, f64), t_end: f64, direction: Direction) -> Result<Self> {
        if !op.is_self_adjoint() {
            return Err(Error::Configuration("modal reference needs a self-adjoint operator".into()));
        }
        let eig = op
            .eigen()
            .ok_or_else(|| Error::Configuration("operator has no eigendecomposition".into()))?;
        for v in [start, source] {
            if v.len() != op.dim() {
                return Err(Error::DimensionMismatch {
                    expected: op.dim(),
                    got: v.len(),
                });
            }
        }
        let (a, b) = support;
        if !(a < b) || !(t_end > 0.0) {
            return Err(Error::InvalidArgument(format!("bad support ({a}, {b}) or horizon {t_end}")));
        }
        let profile_scale = (0..=1000)
            .map(|k| profile(a + (b - a) * k as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        let mut out = ModalReference {
            values: eig.values.clone(),
            vectors: eig.vectors.clone(),
            start: eig.to_modal(start),
            source: eig.to_modal(source),
            profile,
            support,
            t_end,
            direction,
            conv_at_support_end: Vec::new(),
            profile_scale,
        };
        out.conv_at_support_end = (0..out.values.len())
            .map(|k| if out.source[k] == 0.0 { 0.0 } else { out.convolution(out.values[k], b) })
            .collect();
        Ok(out)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn final_time(&self) -> f64 {
        self.t_end
    }

    /// `∫_a^{t} e^{−λ(t−s)} g(s) ds` for `t` inside the support.
    fn convolution(&self, lambda: f64, t: f64) -> f64 {
        let a = self.support.0;
        if t <= a {
            return 0.0;
        }
        // beyond 40/λ the kernel is below e^{-40}
        let lo = a.max(t - 40.0 / lambda);
        let width = (t - lo).min(1.0 / lambda);
        let abs_tol = 1e-15 * self.profile_scale.max(f64::MIN_POSITIVE) * width;
        adaptive_integrate(|s| (-lambda * (t - s)).exp() * (self.profile)(s), lo, t, abs_tol, REL_TOL)
    }

    /// Modal values and derivatives at forward time `s`.
    fn modal(&self, s: f64) -> (DVector<f64>, DVector<f64>) {
        let (_, b) = self.support;
        let g = if s >= self.support.0 && s <= b { (self.profile)(s) } else { 0.0 };
        let m = self.values.len();
        let mut y = DVector::zeros(m);
        let mut dy = DVector::zeros(m);
        for k in 0..m {
            let lam = self.values[k];
            let mut v = (-lam * s).exp() * self.start[k];
            if self.source[k] != 0.0 {
                let conv = if s >= b {
                    (-lam * (s - b)).exp() * self.conv_at_support_end[k]
                } else {
                    self.convolution(lam, s)
                };
                v += self.source[k] * conv;
            }
            y[k] = v;
            dy[k] = -lam * v + self.source[k] * g;
        }
        (y, dy)
    }

    fn forward_time(&self, t: f64) -> f64 {
        match self.direction {
            Direction::Forward => t,
            Direction::Backward => self.t_end - t,
        }
    }

    pub fn value_at(&self, t: f64) -> DVector<f64> {
        &self.vectors * self.modal(self.forward_time(t)).0
    }

    pub fn derivative_at(&self, t: f64) -> DVector<f64> {
        let d = &self.vectors * self.modal(self.forward_time(t)).1;
        match self.direction {
            Direction::Forward => d,
            Direction::Backward => -d,
        }
    }

    /// `A u(t)`.
    pub fn apply_a_at(&self, t: f64) -> DVector<f64> {
        let y = self.modal(self.forward_time(t)).0;
        &self.vectors * y.component_mul(&self.values)
    }
}

impl Trajectory for ModalReference {
    fn value(&self, _interval: usize, t: f64) -> DVector<f64> {
        self.value_at(t)
    }

    fn derivative(&self, _interval: usize, t: f64) -> DVector<f64> {
        self.derivative_at(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn homogeneous_problem_is_semigroup() {
        let op = Operator::fem1d(8).unwrap();
        let u0 = DVector::from_fn(7, |i, _| (i as f64 * 0.7).sin());
        let r = ModalReference::forward(&op, &u0, &DVector::zeros(7), |_| 0.0, (0.0, 1.0), 1.0).unwrap();
        let expect = op.semigroup_apply(0.01, &u0).unwrap();
        assert!((r.value_at(0.01) - expect).norm() < 1e-10);
    }

    #[test]
    fn scalar_constant_forcing_closed_form() {
        let op = Operator::diagonal(vec![3.0]).unwrap();
        let one = DVector::from_element(1, 1.0);
        let r = ModalReference::forward(&op, &DVector::zeros(1), &one, |_| 1.0, (0.0, 2.0), 2.0).unwrap();
        for t in [0.1, 0.9, 2.0] {
            assert_relative_eq!(r.value_at(t)[0], (1.0 - (-3.0 * t).exp()) / 3.0, max_relative = 1e-11);
            assert_relative_eq!(r.derivative_at(t)[0], (-3.0 * t).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn backward_problem_vanishes_after_support_and_solves_ode() {
        let op = Operator::diagonal(vec![1.0, 50.0]).unwrap();
        let phi = DVector::from_vec(vec![1.0, -2.0]);
        let g = |t: f64| super::super::bump((t - 0.4) / 0.2);
        let r = ModalReference::backward(&op, &DVector::zeros(2), &phi, g, (0.4, 0.6), 1.0).unwrap();
        assert_eq!(r.value_at(0.8).norm(), 0.0);
        // −γ' + Aγ = g φ
        for t in [0.1, 0.45, 0.5] {
            let res = -r.derivative_at(t) + r.apply_a_at(t) - &phi * g(t);
            assert!(res.norm() < 1e-12);
        }
        // scalar oracle: γ(t) = ∫_t^T e^{−(s−t)} g(s) ds for the first mode
        let t = 0.2;
        let want = adaptive_integrate(|s| (-(s - t)).exp() * g(s), 0.4, 0.6, 1e-15, 1e-13);
        assert_relative_eq!(r.value_at(t)[0], want, max_relative = 1e-10);
    }

    #[test]
    fn rejects_nonsymmetric() {
        let op = Operator::dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).unwrap();
        assert!(ModalReference::forward(&op, &DVector::zeros(2), &DVector::zeros(2), |_| 0.0, (0.0, 1.0), 1.0).is_err());
    }
}
