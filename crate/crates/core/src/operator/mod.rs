//! Finite-dimensional realizations of the spatial operator `A`.
//!
//! Three forms are supported: a dense matrix, a diagonal (spectral) operator
//! and the P1 finite element pair `(M_h, S_h)` on a uniform grid of `(0, 1)`
//! with homogeneous Dirichlet conditions, which represents `A_h = M_h⁻¹ S_h`.

mod config;
mod interpolation;

pub use config::{parse_key_values, parse_list, OperatorConfig};
pub use interpolation::InterpolationMethod;

use std::f64::consts::FRAC_PI_4;
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// P1 finite elements on `m` uniform cells of `(0, 1)`; unknowns are the
/// `m - 1` interior nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Fem1d {
    cells: usize,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
}

impl Fem1d {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidArgument(format!(
                "fem1d needs at least 2 cells, got {cells}"
            )));
        }
        let n = cells - 1;
        let h = 1.0 / cells as f64;
        let mut mass = DMatrix::zeros(n, n);
        let mut stiffness = DMatrix::zeros(n, n);
        for i in 0..n {
            mass[(i, i)] = 4.0 * h / 6.0;
            stiffness[(i, i)] = 2.0 / h;
            if i + 1 < n {
                mass[(i, i + 1)] = h / 6.0;
                mass[(i + 1, i)] = h / 6.0;
                stiffness[(i, i + 1)] = -1.0 / h;
                stiffness[(i + 1, i)] = -1.0 / h;
            }
        }
        Ok(Fem1d { cells, mass, stiffness })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Interior node coordinates `x_i = i h`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.cells).map(|i| i as f64 * self.h()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Dense(DMatrix<f64>),
    /// Positive eigenvalues of a self-adjoint operator in its eigenbasis.
    Diagonal(DVector<f64>),
    Fem1d(Fem1d),
}

/// Real eigendecomposition `A = V diag(λ) V⁻¹`, available for diagonal,
/// symmetric dense and fem1d operators.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

impl Eigen {
    /// Modal coordinates `V⁻¹ v`.
    pub fn to_modal(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.inverse * v
    }

    pub fn from_modal(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.vectors * c
    }
}

/// Norm `‖v‖_X`: weighted `ℓ^q`, with trapezoid weights `h` for fem1d.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceNorm {
    q: f64,
    weights: Option<DVector<f64>>,
}

impl SpaceNorm {
    pub fn new(q: f64, weights: Option<DVector<f64>>) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("space exponent q = {q} must be >= 1")));
        }
        Ok(SpaceNorm { q, weights })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        let q = self.q;
        if q.is_infinite() {
            return v.amax();
        }
        let sum: f64 = match &self.weights {
            None => v.iter().map(|x| x.abs().powf(q)).sum(),
            Some(w) => v.iter().zip(w.iter()).map(|(x, w)| w * x.abs().powf(q)).sum(),
        };
        sum.powf(1.0 / q)
    }
}

/// The spatial operator together with its declared resolvent sector angle.
///
/// Factorizations (mass Cholesky factor, eigendecomposition) are computed on
/// first use and cached; the operator can be shared across threads.
#[derive(Debug)]
pub struct Operator {
    kind: OperatorKind,
    sector_angle: f64,
    label: String,
    eigen: OnceLock<Option<Eigen>>,
    mass_factor: OnceLock<Option<Cholesky<f64, Dyn>>>,
}

impl Clone for Operator {
    fn clone(&self) -> Self {
        Operator {
            kind: self.kind.clone(),
            sector_angle: self.sector_angle,
            label: self.label.clone(),
            eigen: self.eigen.clone(),
            mass_factor: self.mass_factor.clone(),
        }
    }
}

impl PartialEq for Operator {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.sector_angle == other.sector_angle
    }
}

impl Operator {
    fn build(kind: OperatorKind, label: String) -> Self {
        Operator {
            kind,
            sector_angle: FRAC_PI_4,
            label,
            eigen: OnceLock::new(),
            mass_factor: OnceLock::new(),
        }
    }

    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("diagonal operator needs eigenvalues".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Configuration(format!("eigenvalue {bad} is not positive")));
        }
        let label = format!("diagonal[{}]", eigenvalues.len());
        Ok(Self::build(OperatorKind::Diagonal(DVector::from_vec(eigenvalues)), label))
    }

    /// `modes` eigenvalues log-spaced over `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, modes: usize) -> Result<Self> {
        if modes == 0 || !(lo > 0.0) || !(hi >= lo) {
            return Err(Error::InvalidArgument(format!(
                "bad spectrum request lo = {lo}, hi = {hi}, modes = {modes}"
            )));
        }
        let values = if modes == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.ln(), hi.ln());
            (0..modes)
                .map(|k| (a + (b - a) * k as f64 / (modes - 1) as f64).exp())
                .collect()
        };
        Self::diagonal(values)
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("dense operator must be a nonempty square matrix".into()));
        }
        if matrix.clone().lu().try_inverse().is_none() {
            return Err(Error::Configuration("dense operator is singular (0 is an eigenvalue)".into()));
        }
        let label = format!("dense[{}]", matrix.nrows());
        Ok(Self::build(OperatorKind::Dense(matrix), label))
    }

    pub fn fem1d(cells: usize) -> Result<Self> {
        let fem = Fem1d::new(cells)?;
        let label = format!("fem1d[h=1/{cells}]");
        Ok(Self::build(OperatorKind::Fem1d(fem), label))
    }

    pub fn with_sector_angle(mut self, angle: f64) -> Result<Self> {
        if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("sector angle {angle} outside (0, pi/2)")));
        }
        self.sector_angle = angle;
        Ok(self)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn sector_angle(&self) -> f64 {
        self.sector_angle
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Dense(a) => a.nrows(),
            OperatorKind::Diagonal(l) => l.len(),
            OperatorKind::Fem1d(f) => f.cells - 1,
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        match &self.kind {
            OperatorKind::Dense(a) => is_symmetric(a),
            _ => true,
        }
    }

    /// Norm on `X` with spatial exponent `q`.
    pub fn space_norm(&self, q: f64) -> SpaceNorm {
        let weights = match &self.kind {
            OperatorKind::Fem1d(f) => Some(DVector::from_element(self.dim(), f.h())),
            _ => None,
        };
        SpaceNorm { q, weights }
    }

    /// Duality pairing `⟨u, v⟩`; Euclidean, or `uᵀ M_h v` for fem1d so that
    /// `A_h` is self-adjoint.
    pub fn pairing(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match &self.kind {
            OperatorKind::Fem1d(f) => u.dot(&(f.mass() * v)),
            _ => u.dot(v),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn mass_cholesky(&self) -> Result<&Cholesky<f64, Dyn>> {
        let OperatorKind::Fem1d(f) = &self.kind else {
            return Err(Error::Configuration("no mass matrix for this operator kind".into()));
        };
        self.mass_factor
            .get_or_init(|| f.mass().clone().cholesky())
            .as_ref()
            .ok_or_else(|| Error::Configuration("mass matrix is not positive definite".into()))
    }

    /// `A v`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v.len())?;
        Ok(match &self.kind {
            OperatorKind::Dense(a) => a * v,
            OperatorKind::Diagonal(l) => l.component_mul(v),
            OperatorKind::Fem1d(f) => self.mass_cholesky()?.solve(&(f.stiffness() * v)),
        })
    }

    /// `(λ I − A)⁻¹ v`, with the residual checked against `1e-10 ‖v‖`.
    pub fn resolvent_solve(&self, lambda: Complex64, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.check_dim(v.len())?;
        let n = self.dim();
        let fail = |residual: f64| Error::Resolvent {
            re: lambda.re,
            im: lambda.im,
            residual,
        };
        let w = match &self.kind {
            OperatorKind::Diagonal(l) => DVector::from_iterator(n, v.iter().zip(l.iter()).map(|(x, lk)| x / (lambda - lk))),
            OperatorKind::Dense(a) => {
                let mut m = a.map(|x| Complex64::new(-x, 0.0));
                for i in 0..n {
                    m[(i, i)] += lambda;
                }
                m.lu().solve(v).ok_or_else(|| fail(f64::INFINITY))?
            }
            OperatorKind::Fem1d(f) => {
                let mass = f.mass().map(|x| Complex64::new(x, 0.0));
                let stiff = f.stiffness().map(|x| Complex64::new(x, 0.0));
                let m = &mass * lambda - stiff;
                m.lu().solve(&(&mass * v)).ok_or_else(|| fail(f64::INFINITY))?
            }
        };
        // residual (λ − A) w − v
        let aw = self.apply_complex(&w)?;
        let res = (w.map(|x| x * lambda) - aw - v).norm();
        let scale = v.norm();
        if res > 1e-10 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
            return Err(fail(res / scale));
        }
        Ok(w)
    }

    fn apply_complex(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let re = self.apply(&v.map(|x| x.re))?;
        let im = self.apply(&v.map(|x| x.im))?;
        Ok(DVector::from_iterator(v.len(), re.iter().zip(im.iter()).map(|(a, b)| Complex64::new(*a, *b))))
    }

    /// Eigendecomposition, when the operator is self-adjoint.
    pub fn eigen(&self) -> Option<&Eigen> {
        self.eigen
            .get_or_init(|| match &self.kind {
                OperatorKind::Diagonal(l) => Some(Eigen {
                    values: l.clone(),
                    vectors: DMatrix::identity(l.len(), l.len()),
                    inverse: DMatrix::identity(l.len(), l.len()),
                }),
                OperatorKind::Dense(a) if is_symmetric(a) => {
                    let sym = SymmetricEigen::new(a.clone());
                    Some(Eigen {
                        inverse: sym.eigenvectors.transpose(),
                        vectors: sym.eigenvectors,
                        values: sym.eigenvalues,
                    })
                }
                OperatorKind::Dense(_) => None,
                OperatorKind::Fem1d(f) => {
                    // S x = μ M x with M = L Lᵀ: C = L⁻¹ S L⁻ᵀ = Q Λ Qᵀ, V = L⁻ᵀ Q
                    let chol = f.mass().clone().cholesky()?;
                    let l = chol.l();
                    let linv_s = l.solve_lower_triangular(f.stiffness())?;
                    let c = l.solve_lower_triangular(&linv_s.transpose())?;
                    let c = (&c + c.transpose()) * 0.5;
                    let sym = SymmetricEigen::new(c);
                    let vectors = l.transpose().solve_upper_triangular(&sym.eigenvectors)?;
                    let inverse = sym.eigenvectors.transpose() * l.transpose();
                    Some(Eigen {
                        values: sym.eigenvalues,
                        vectors,
                        inverse,
                    })
                }
            })
            .as_ref()
    }

    /// Smallest and largest real part of the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        if let Some(e) = self.eigen() {
            let lo = e.values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = e.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            return (lo, hi);
        }
        let OperatorKind::Dense(a) = &self.kind else {
            unreachable!("only dense operators lack an eigendecomposition")
        };
        let ev = a.complex_eigenvalues();
        let lo = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let hi = ev.iter().map(|z| z.norm()).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Upper bound for the operator norm: the spectral radius when an
    /// orthogonal-type eigendecomposition exists, the Frobenius norm otherwise.
    pub fn norm_bound(&self) -> f64 {
        match &self.kind {
            OperatorKind::Diagonal(l) => l.amax(),
            OperatorKind::Dense(a) if self.eigen().is_none() => a.norm(),
            _ => self.eigen().map_or(0.0, |e| e.values.amax()),
        }
    }

    /// `e^{−tA} v`.
    pub fn semigroup_apply(&self, t: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v.len())?;
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("semigroup time must be >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(v.clone());
        }
        if let OperatorKind::Diagonal(l) = &self.kind {
            return Ok(DVector::from_iterator(v.len(), l.iter().zip(v.iter()).map(|(lk, x)| (-lk * t).exp() * x)));
        }
        match self.eigen() {
            Some(e) => {
                let c = e.to_modal(v);
                let c = DVector::from_iterator(c.len(), c.iter().zip(e.values.iter()).map(|(x, l)| (-l * t).exp() * x));
                Ok(e.from_modal(&c))
            }
            None => {
                let OperatorKind::Dense(a) = &self.kind else {
                    return Err(Error::Configuration("nonsymmetric fem1d operator".into()));
                };
                Ok((a * (-t)).exp() * v)
            }
        }
    }

    /// The operator `A'` adjoint to `A` with respect to [`Operator::pairing`].
    pub fn adjoint(&self) -> Operator {
        match &self.kind {
            OperatorKind::Dense(a) if !is_symmetric(a) => {
                let mut op = Self::build(OperatorKind::Dense(a.transpose()), format!("{}'", self.label));
                op.sector_angle = self.sector_angle;
                op
            }
            _ => self.clone(),
        }
    }
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (a - a.transpose()).amax() <= 1e-14 * scale
}
