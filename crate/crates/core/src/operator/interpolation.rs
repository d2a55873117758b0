//! Norm of initial data in the real interpolation space `(X, D(A))_{1-1/p, p}`.

use nalgebra::DVector;

use super::{Operator, OperatorKind, SpaceNorm};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationMethod {
    /// `‖u0‖_X + (∫₀^∞ ‖A e^{−tA} u0‖_X^p dt)^{1/p}`.
    Semigroup,
    /// `(∫₀^∞ |t⁻¹ K(t, u0)|^p dt)^{1/p}` with the K-functional minimized
    /// numerically over splittings `u0 = a + b`. Diagonal operators only.
    KFunctional,
}

impl Operator {
    pub fn interpolation_norm(
        &self,
        u0: &DVector<f64>,
        p: f64,
        norm: &SpaceNorm,
        method: InterpolationMethod,
    ) -> Result<f64> {
        self.check_dim(u0.len())?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("time exponent p = {p} must lie in (1, inf)")));
        }
        if u0.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        match method {
            InterpolationMethod::Semigroup => self.semigroup_characterization(u0, p, norm),
            InterpolationMethod::KFunctional => self.k_functional_characterization(u0, p, norm),
        }
    }

    fn semigroup_characterization(&self, u0: &DVector<f64>, p: f64, norm: &SpaceNorm) -> Result<f64> {
        let (lo, hi) = self.spectral_bounds();
        let integrand = |t: f64| -> Result<f64> {
            let g = match self.eigen() {
                Some(e) => {
                    let c = e.to_modal(u0);
                    let c = DVector::from_iterator(
                        c.len(),
                        c.iter().zip(e.values.iter()).map(|(x, l)| l * (-l * t).exp() * x),
                    );
                    norm.norm(&e.from_modal(&c))
                }
                None => norm.norm(&self.apply(&self.semigroup_apply(t, u0)?)?),
            };
            Ok(g.powf(p))
        };

        let t_min = 1e-8 / hi;
        let head = t_min * integrand(0.0)?;
        // walk out until the integrand is negligible against its running peak
        let mut peak = integrand(t_min)?.max(head / t_min);
        let mut t_max = 1.0 / lo;
        for _ in 0..200 {
            let v = integrand(t_max)?;
            peak = peak.max(v);
            if v <= 1e-16 * peak {
                break;
            }
            t_max *= 2.0;
        }
        let (s0, s1) = (t_min.ln(), t_max.ln());
        let decades = (s1 - s0) / std::f64::consts::LN_10;
        let panels = ((decades * 4.0).ceil() as usize).max(25);
        let rule = Quadrature::gauss_legendre(8);
        let width = (s1 - s0) / panels as f64;
        let mut total = head;
        let mut tail = 0.0;
        for k in 0..panels {
            let a = s0 + k as f64 * width;
            let mut part = 0.0;
            for (s, w) in rule.mapped(a, a + width) {
                let t = s.exp();
                part += w * integrand(t)? * t;
            }
            total += part;
            // last doubling step of the truncation search
            if a >= s1 - std::f64::consts::LN_2 {
                tail += part;
            }
        }
        if total > 0.0 && tail > 0.01 * total {
            return Err(Error::Divergent {
                tail_fraction: tail / total,
            });
        }
        Ok(norm.norm(u0) + total.powf(1.0 / p))
    }

    fn k_functional_characterization(&self, u0: &DVector<f64>, p: f64, norm: &SpaceNorm) -> Result<f64> {
        let OperatorKind::Diagonal(lambda) = &self.kind else {
            return Err(Error::InvalidArgument(
                "K-functional characterization is implemented for diagonal operators only".into(),
            ));
        };
        let mut kf = KFunctional::new(lambda, u0, norm);
        let (lo, hi) = self.spectral_bounds();
        let t_lo = 1e-6 / hi;
        let t_hi = 1e6 / lo;
        let au = norm.norm(&lambda.component_mul(u0));
        let un = norm.norm(u0);
        // K(t) ≈ t ‖Au‖ below t_lo, K(t) ≈ ‖u‖ above t_hi
        let head = t_lo * au.powf(p);
        let tail = un.powf(p) * t_hi.powf(1.0 - p) / (p - 1.0);
        let (s0, s1) = (t_lo.ln(), t_hi.ln());
        let panels = 4 * ((s1 - s0) / std::f64::consts::LN_10).ceil() as usize;
        let rule = Quadrature::gauss_legendre(8);
        let width = (s1 - s0) / panels as f64;
        let mut total = head + tail;
        for k in 0..panels {
            let a = s0 + k as f64 * width;
            for (s, w) in rule.mapped(a, a + width) {
                let t = s.exp();
                let kt = kf.evaluate(t);
                total += w * (kt / t).powf(p) * t;
            }
        }
        Ok(total.powf(1.0 / p))
    }
}

/// `K(t, u) = inf_{u = a + b} ‖a‖ + t ‖A b‖` for a diagonal operator, with
/// the splitting parametrized by per-mode fractions `b_k = θ_k u_k`,
/// `θ_k ∈ [0, 1]`, and minimized by coordinate descent.
struct KFunctional {
    q: f64,
    // per-mode weighted magnitudes |u_k|^q w_k and |λ_k u_k|^q w_k
    a_base: Vec<f64>,
    b_base: Vec<f64>,
    a_max: Vec<f64>,
    b_max: Vec<f64>,
    theta: Vec<f64>,
}

impl KFunctional {
    fn new(lambda: &DVector<f64>, u: &DVector<f64>, norm: &SpaceNorm) -> Self {
        let q = norm.q;
        let w = |k: usize| norm.weights.as_ref().map_or(1.0, |w| w[k]);
        let n = u.len();
        let a_base = (0..n).map(|k| w(k) * u[k].abs().powf(q)).collect();
        let b_base = (0..n).map(|k| w(k) * (lambda[k] * u[k]).abs().powf(q)).collect();
        let a_max = (0..n).map(|k| u[k].abs()).collect();
        let b_max = (0..n).map(|k| (lambda[k] * u[k]).abs()).collect();
        KFunctional {
            q,
            a_base,
            b_base,
            a_max,
            b_max,
            theta: vec![1.0; n],
        }
    }

    fn objective_parts(&self, theta: &[f64]) -> (f64, f64) {
        if self.q.is_infinite() {
            let a = theta.iter().zip(&self.a_max).map(|(t, m)| (1.0 - t) * m).fold(0.0, f64::max);
            let b = theta.iter().zip(&self.b_max).map(|(t, m)| t * m).fold(0.0, f64::max);
            return (a, b);
        }
        let a: f64 = theta.iter().zip(&self.a_base).map(|(t, m)| (1.0 - t).powf(self.q) * m).sum();
        let b: f64 = theta.iter().zip(&self.b_base).map(|(t, m)| t.powf(self.q) * m).sum();
        (a, b)
    }

    fn evaluate(&mut self, t: f64) -> f64 {
        let q = self.q;
        let root = |x: f64| if q.is_infinite() { x } else { x.max(0.0).powf(1.0 / q) };
        let objective = |parts: (f64, f64)| root(parts.0) + t * root(parts.1);
        let mut best = objective(self.objective_parts(&self.theta));
        for _sweep in 0..500 {
            let before = best;
            for k in 0..self.theta.len() {
                let mut trial = self.theta.clone();
                let mut f = |x: f64| {
                    trial[k] = x;
                    objective(self.objective_parts(&trial))
                };
                let x = golden_section(&mut f, 0.0, 1.0, 1e-12);
                let candidates = [x, 0.0, 1.0, self.theta[k]];
                let (xbest, fbest) = candidates
                    .iter()
                    .map(|&c| (c, f(c)))
                    .fold((self.theta[k], f64::INFINITY), |acc, (c, v)| if v < acc.1 { (c, v) } else { acc });
                if fbest <= best {
                    self.theta[k] = xbest;
                    best = fbest;
                }
            }
            if before - best <= 1e-10 * before {
                break;
            }
        }
        best
    }
}

fn golden_section<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
