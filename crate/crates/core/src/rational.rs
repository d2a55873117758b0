//! The rational functions `R_{i,j}(z) = [(K + z Mt)⁻¹]_{ij}` of one DG step.
//!
//! One step with `A = λ` reads `U = (K + τλ Mt)⁻¹ (moments + Φ0 u_prev)`; since
//! `Φ0 = e_0`, the trace coefficient of `U_i` is `R_{i,0}` and the step's
//! stability function is `R_{r,0}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::operator::Operator;

const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct RationalTable {
    elem: ReferenceElement,
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl RationalTable {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(RationalTable {
            elem: ReferenceElement::new(degree)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.elem.degree()
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.elem
    }

    fn system(&self, z: Complex64) -> DMatrix<Complex64> {
        let k = self.elem.k().map(|x| Complex64::new(x, 0.0));
        let mt = self.elem.mass().map(|x| Complex64::new(x, 0.0));
        k + mt * z
    }

    /// The matrix `[R_{i,j}(z)]`.
    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let m = self.system(z);
        let n = m.nrows();
        let near_pole = |condition: f64| Error::NearPole {
            re: z.re,
            im: z.im,
            condition,
        };
        let inv = m.clone().lu().try_inverse().ok_or_else(|| near_pole(f64::INFINITY))?;
        let condition = one_norm(&m) * one_norm(&inv);
        if !(condition <= CONDITION_LIMIT) {
            return Err(near_pole(condition));
        }
        let residual = (&m * &inv - DMatrix::<Complex64>::identity(n, n)).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if residual > 1e-12 * condition.max(1.0) {
            return Err(near_pole(condition));
        }
        Ok(inv)
    }

    /// `(R_{i,0}(z))_i`.
    pub fn eval_trace_column(&self, z: Complex64) -> Result<DVector<Complex64>> {
        Ok(self.eval(z)?.column(0).into_owned())
    }

    /// Stability function `R_{r,0}(z)`.
    pub fn stability(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?[(self.degree(), 0)])
    }

    /// `[R_{i,j}(x)]` at a real point `x ≥ 0`.
    pub fn eval_real(&self, x: f64) -> Result<DMatrix<f64>> {
        let m = self.elem.k() + self.elem.mass() * x;
        m.lu().try_inverse().ok_or(Error::NearPole {
            re: x,
            im: 0.0,
            condition: f64::INFINITY,
        })
    }
}

/// `Γ_δ = {|arg λ| = δ}` sampled at log-spaced radii on both rays, ordered so
/// that the imaginary part decreases.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorContour {
    pub angle: f64,
    pub points: Vec<Complex64>,
}

impl SectorContour {
    pub const MIN_RADIUS: f64 = 1e-3;
    pub const MAX_RADIUS: f64 = 1e6;

    pub fn new(angle: f64, per_ray: usize) -> Result<Self> {
        if !(angle > 0.0 && angle < PI / 2.0) {
            return Err(Error::InvalidArgument(format!("contour angle {angle} outside (0, pi/2)")));
        }
        if per_ray < 2 {
            return Err(Error::InvalidArgument("need at least two samples per ray".into()));
        }
        let (lo, hi) = (Self::MIN_RADIUS.ln(), Self::MAX_RADIUS.ln());
        let radii: Vec<f64> = (0..per_ray).map(|k| (lo + (hi - lo) * k as f64 / (per_ray - 1) as f64).exp()).collect();
        let upper = radii.iter().rev().map(|r| Complex64::from_polar(*r, angle));
        let lower = radii.iter().map(|r| Complex64::from_polar(*r, -angle));
        Ok(SectorContour {
            angle,
            points: upper.chain(lower).collect(),
        })
    }
}

/// One row of the sector-bound report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorBound {
    pub i: usize,
    pub j: usize,
    pub angle: f64,
    /// `max |R_{i,j}(λ)| (1 + |λ|)` over the contour.
    pub fitted_c: f64,
    /// For `j = 0`: the largest `C` with `|R_{i,0}(λ)| ≤ 1/(1 + C|λ|)` on the
    /// samples; nonpositive when `|R_{i,0}| ≥ 1` somewhere.
    pub contraction_c: Option<f64>,
    pub max_modulus_right_half_plane: f64,
}

impl SectorBound {
    pub const CSV_HEADER: &'static str = "i,j,delta,fitted_C,max_modulus_right_half_plane,contraction_C,contraction_holds";

    pub fn contraction_holds(&self) -> Option<bool> {
        self.contraction_c.map(|c| c > 0.0)
    }

    pub fn csv_row(&self) -> String {
        let (c, holds) = match self.contraction_c {
            Some(c) => (format!("{c:.10e}"), format!("{}", c > 0.0)),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{:.10e},{:.10e},{:.10e},{},{}",
            self.i, self.j, self.angle, self.fitted_c, self.max_modulus_right_half_plane, c, holds
        )
    }
}

/// Sample grid on the closed right half-plane: the imaginary axis and rays at
/// several angles, radii log-spaced over `[1e-3, 1e6]`, plus the origin.
pub fn right_half_plane_grid(per_ray: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    let (lo, hi) = (1e-3f64.ln(), 1e6f64.ln());
    let angles = [-PI / 2.0, -PI / 3.0, -PI / 6.0, 0.0, PI / 6.0, PI / 3.0, PI / 2.0];
    for k in 0..per_ray {
        let r = (lo + (hi - lo) * k as f64 / (per_ray.max(2) - 1) as f64).exp();
        out.extend(angles.iter().map(|a| Complex64::from_polar(r, *a)));
    }
    out
}

pub fn check_sector_bounds(table: &RationalTable, contour: &SectorContour) -> Result<Vec<SectorBound>> {
    let size = table.degree() + 1;
    let mut amp = DMatrix::<f64>::zeros(size, size);
    let mut contraction = vec![f64::INFINITY; size];
    for z in &contour.points {
        let r = table.eval(*z)?;
        let mag = z.norm();
        for i in 0..size {
            for j in 0..size {
                amp[(i, j)] = amp[(i, j)].max(r[(i, j)].norm() * (1.0 + mag));
            }
            contraction[i] = contraction[i].min((1.0 / r[(i, 0)].norm() - 1.0) / mag);
        }
    }
    let mut rhp = DMatrix::<f64>::zeros(size, size);
    for z in right_half_plane_grid(60) {
        let r = table.eval(z)?;
        for (m, v) in rhp.iter_mut().zip(r.iter()) {
            *m = m.max(v.norm());
        }
    }
    let mut out = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            out.push(SectorBound {
                i,
                j,
                angle: contour.angle,
                fitted_c: amp[(i, j)],
                contraction_c: (j == 0).then_some(contraction[i]),
                max_modulus_right_half_plane: rhp[(i, j)],
            });
        }
    }
    Ok(out)
}

/// A-stability of the stability function `R_{r,0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AStability {
    pub max_modulus: f64,
    /// `max |R_{r,0}(z)|` over `|z| = 1e8`, `Re z ≥ 0`.
    pub modulus_at_infinity: f64,
}

impl AStability {
    pub fn passed(&self) -> bool {
        self.max_modulus <= 1.0 + 1e-12 && self.modulus_at_infinity < 1e-6
    }
}

pub fn check_a_stability(table: &RationalTable, samples: &[Complex64]) -> Result<AStability> {
    let mut max_modulus = 0.0_f64;
    for z in samples {
        if z.re < 0.0 {
            return Err(Error::InvalidArgument(format!("sample {z} is not in the right half-plane")));
        }
        max_modulus = max_modulus.max(table.stability(*z)?.norm());
    }
    let mut modulus_at_infinity = 0.0_f64;
    for k in 0..=8 {
        let z = Complex64::from_polar(1e8, -PI / 2.0 + PI * k as f64 / 8.0);
        modulus_at_infinity = modulus_at_infinity.max(table.stability(z)?.norm());
    }
    Ok(AStability {
        max_modulus,
        modulus_at_infinity,
    })
}

/// Nodal coefficients `U^n_i` from the Duhamel-type product formula
///
/// `U^n_i = R_{i,0}(τ_n A) Π_{l<n} R_{r,0}(τ_l A) u0
///        + Σ_{m<n} R_{i,0}(τ_n A) Π_{m<l<n} R_{r,0}(τ_l A) Σ_j R_{r,j}(τ_m A) F^m_j
///        + Σ_j R_{i,j}(τ_n A) F^n_j`,
///
/// evaluated mode by mode in the eigenbasis of `A`.
pub fn duhamel_product(
    table: &RationalTable,
    op: &Operator,
    mesh: &TemporalMesh,
    moments: &[Vec<DVector<f64>>],
    u0: &DVector<f64>,
) -> Result<Vec<Vec<DVector<f64>>>> {
    let eig = op
        .eigen()
        .ok_or_else(|| Error::Configuration("product formula needs a diagonalizable self-adjoint operator".into()))?;
    let (n_int, dim, size, r) = (mesh.len(), op.dim(), table.degree() + 1, table.degree());
    if moments.len() != n_int {
        return Err(Error::DimensionMismatch { expected: n_int, got: moments.len() });
    }
    if u0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u0.len() });
    }
    let c0 = eig.to_modal(u0);
    let modal_f: Vec<Vec<DVector<f64>>> = moments
        .iter()
        .map(|local| {
            if local.len() != size {
                return Err(Error::DimensionMismatch { expected: size, got: local.len() });
            }
            Ok(local.iter().map(|f| eig.to_modal(f)).collect())
        })
        .collect::<Result<_>>()?;
    let mut modal_u = vec![vec![DVector::zeros(dim); size]; n_int];
    for k in 0..dim {
        let lam = eig.values[k];
        let rs: Vec<DMatrix<f64>> = (0..n_int).map(|m| table.eval_real(mesh.tau_n(m) * lam)).collect::<Result<_>>()?;
        let stab: Vec<f64> = rs.iter().map(|m| m[(r, 0)]).collect();
        let prod = |from: usize, to: usize| -> f64 { (from..to).map(|l| stab[l]).product() };
        for n in 0..n_int {
            for i in 0..size {
                let mut value = rs[n][(i, 0)] * prod(0, n) * c0[k];
                for m in 0..n {
                    let load: f64 = (0..size).map(|j| rs[m][(r, j)] * modal_f[m][j][k]).sum();
                    value += rs[n][(i, 0)] * prod(m + 1, n) * load;
                }
                value += (0..size).map(|j| rs[n][(i, j)] * modal_f[n][j][k]).sum::<f64>();
                modal_u[n][i][k] = value;
            }
        }
    }
    Ok(modal_u
        .into_iter()
        .map(|local| local.iter().map(|c| eig.from_modal(c)).collect())
        .collect())
}

/// Coefficients (ascending powers) of `q̂` and of every `q_{i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPolynomials {
    pub q_hat: Vec<f64>,
    pub q: Vec<Vec<Vec<f64>>>,
}

fn poly_eval(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, x| acc * z + x)
}

impl RationalPolynomials {
    pub fn degree_q_hat(&self) -> usize {
        self.q_hat.len().saturating_sub(1)
    }

    pub fn eval_ratio(&self, i: usize, j: usize, z: Complex64) -> Complex64 {
        poly_eval(&self.q[i][j], z) / poly_eval(&self.q_hat, z)
    }

    pub fn eval_q_hat(&self, z: Complex64) -> Complex64 {
        poly_eval(&self.q_hat, z)
    }
}

/// Interpolates a polynomial of degree `< n` from its values at the scaled
/// roots of unity `ρ ω^k` (a discrete Fourier transform).
fn fourier_coefficients(values: &[Complex64], rho: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|m| {
            let s: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / n as f64))
                .sum();
            (s / (n as f64 * rho.powi(m as i32))).re
        })
        .collect()
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    let scale = c.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    while c.len() > 1 && c.last().is_some_and(|x| x.abs() <= 1e-10 * scale) {
        c.pop();
    }
    c
}

/// Recovers `q̂ = det(K + z Mt)` and `q_{i,j} = q̂ R_{i,j}` by interpolation
/// at `r + 2` points on a circle (one more than the largest degree, so the
/// degree claims are checked rather than assumed).
pub fn extract_polynomials(table: &RationalTable) -> Result<RationalPolynomials> {
    let size = table.degree() + 1;
    let n = size + 1;
    let rho = 1.0;
    let nodes: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(rho, 2.0 * PI * k as f64 / n as f64)).collect();
    let mut det_values = Vec::with_capacity(n);
    let mut entry_values = vec![vec![Vec::with_capacity(n); size]; size];
    for z in &nodes {
        let m = table.system(*z);
        let det = m.clone().lu().determinant();
        let r = table.eval(*z)?;
        det_values.push(det);
        for i in 0..size {
            for j in 0..size {
                entry_values[i][j].push(r[(i, j)] * det);
            }
        }
    }
    let q_hat = trim(fourier_coefficients(&det_values, rho));
    let lead = q_hat.last().copied().unwrap_or(0.0);
    let det_mt = table.elem.mass().determinant();
    if q_hat.len() != size + 1 || lead.abs() < 1e-10 * det_mt.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::SchemeViolation(format!(
            "denominator degenerated: degree {} with leading coefficient {lead:e}",
            q_hat.len() - 1
        )));
    }
    let q = entry_values
        .iter()
        .map(|row| row.iter().map(|vals| trim(fourier_coefficients(vals, rho))).collect())
        .collect();
    Ok(RationalPolynomials { q_hat, q })
}
