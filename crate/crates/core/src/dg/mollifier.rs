use nalgebra::{DMatrix, DVector};

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::quadrature::Quadrature;

/// `w(s) = exp(−1/(s(1−s)))` on `(0, 1)`, zero outside.
pub fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

fn bump_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let q = s * (1.0 - s);
        bump(s) * (1.0 - 2.0 * s) / (q * q)
    }
}

/// Measured `‖∂_t^l δ‖_{L^p}` for `l ∈ {0, 1}`, `p ∈ {1, 2, ∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierNorms {
    /// `[‖δ‖_1, ‖δ‖_2, ‖δ‖_∞]`
    pub value: [f64; 3],
    /// `[‖δ'‖_1, ‖δ'‖_2, ‖δ'‖_∞]`
    pub derivative: [f64; 3],
}

/// Regularized delta `δ(t) = w(s) P(s)`, `s = (t − t_{ñ−1})/τ_ñ`, with
/// `P ∈ P^r` fixed by `∫_{J_ñ} δ q dt = q(t̃)` for all `q ∈ P^r(J_ñ)`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    interval: usize,
    t_tilde: f64,
    start: f64,
    tau: f64,
    elem: ReferenceElement,
    coeffs: DVector<f64>,
    quad: Quadrature,
}

impl Mollifier {
    pub fn new(mesh: &TemporalMesh, degree: usize, interval: usize, t_tilde: f64) -> Result<Self> {
        if interval >= mesh.len() {
            return Err(Error::InvalidArgument(format!("interval {interval} outside mesh of {} intervals", mesh.len())));
        }
        let (a, b) = mesh.interval(interval);
        if !(t_tilde > a && t_tilde < b) {
            return Err(Error::InvalidArgument(format!("t̃ = {t_tilde} is not interior to ({a}, {b})")));
        }
        let elem = ReferenceElement::new(degree)?;
        let quad = Quadrature::gauss_legendre(16).composite(64);
        let tau = b - a;
        let size = elem.size();
        let mut gram = DMatrix::zeros(size, size);
        for (s, w) in quad.points.iter().zip(&quad.weights) {
            let phi = elem.values(*s);
            let ws = w * bump(*s) * tau;
            for i in 0..size {
                for j in 0..size {
                    gram[(i, j)] += ws * phi[i] * phi[j];
                }
            }
        }
        let target = DVector::from_vec(elem.values((t_tilde - a) / tau));
        let coeffs = gram
            .cholesky()
            .ok_or_else(|| Error::SchemeViolation("weighted Gram matrix not positive definite".into()))?
            .solve(&target);
        Ok(Mollifier {
            interval,
            t_tilde,
            start: a,
            tau,
            elem,
            coeffs,
            quad,
        })
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn t_tilde(&self) -> f64 {
        self.t_tilde
    }

    pub fn support(&self) -> (f64, f64) {
        (self.start, self.start + self.tau)
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }

    fn poly(&self, s: f64) -> f64 {
        self.elem.values(s).iter().zip(self.coeffs.iter()).map(|(p, c)| p * c).sum()
    }

    fn poly_derivative(&self, s: f64) -> f64 {
        self.elem.derivatives(s).iter().zip(self.coeffs.iter()).map(|(p, c)| p * c).sum()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = (t - self.start) / self.tau;
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        bump(s) * self.poly(s)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = (t - self.start) / self.tau;
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        (bump_derivative(s) * self.poly(s) + bump(s) * self.poly_derivative(s)) / self.tau
    }

    /// `(∫ δ φ^ñ_j dt)_j`, by quadrature.
    pub fn moments(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.elem.size()];
        for (s, w) in self.quad.points.iter().zip(&self.quad.weights) {
            let d = w * self.tau * bump(*s) * self.poly(*s);
            for (o, p) in out.iter_mut().zip(self.elem.values(*s)) {
                *o += d * p;
            }
        }
        out
    }

    /// `∫ δ(t) q(t) dt` for an arbitrary integrand `q`.
    pub fn integrate_against<F: FnMut(f64) -> f64>(&self, mut q: F) -> f64 {
        self.quad
            .mapped(self.start, self.start + self.tau)
            .map(|(t, w)| w * self.eval(t) * q(t))
            .sum()
    }

    pub fn norms(&self) -> MollifierNorms {
        let mut value = [0.0; 3];
        let mut derivative = [0.0; 3];
        for (t, w) in self.quad.mapped(self.start, self.start + self.tau) {
            let d = self.eval(t).abs();
            let dd = self.derivative(t).abs();
            value[0] += w * d;
            value[1] += w * d * d;
            value[2] = value[2].max(d);
            derivative[0] += w * dd;
            derivative[1] += w * dd * dd;
            derivative[2] = derivative[2].max(dd);
        }
        value[1] = value[1].sqrt();
        derivative[1] = derivative[1].sqrt();
        MollifierNorms { value, derivative }
    }
}
