use nalgebra::{DMatrix, DVector};

use super::{OuterTrace, PiecewisePoly, TimeFunction};
use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;

/// `I_τ v`: on each interval the polynomial with `(I_τ v)^{n,-} = v(t_n)` whose
/// moments against `P^{r-1}(J_n)` match those of `v`.
pub fn interpolate<F: TimeFunction + ?Sized>(mesh: &TemporalMesh, degree: usize, v: &F) -> Result<PiecewisePoly> {
    interpolate_with(mesh, degree, v, 1)
}

/// [`interpolate`] with the moment quadrature repeated over `oversample`
/// panels per interval.
pub fn interpolate_with<F: TimeFunction + ?Sized>(mesh: &TemporalMesh, degree: usize, v: &F, oversample: usize) -> Result<PiecewisePoly> {
    if oversample == 0 {
        return Err(Error::InvalidArgument("oversampling factor must be >= 1".into()));
    }
    let elem = ReferenceElement::new(degree)?;
    let size = elem.size();
    let lower = if degree > 0 { Some(ReferenceElement::new(degree - 1)?) } else { None };
    let quad = elem.quadrature().composite(oversample);

    // row 0: right trace; rows 1..=r: ∫ φ_j ψ_i ds
    let mut g = DMatrix::zeros(size, size);
    for j in 0..size {
        g[(0, j)] = elem.phi1()[j];
    }
    if let Some(low) = &lower {
        for (s, w) in quad.points.iter().zip(&quad.weights) {
            let phi = elem.values(*s);
            let psi = low.values(*s);
            for (i, p) in psi.iter().enumerate() {
                for j in 0..size {
                    g[(i + 1, j)] += w * p * phi[j];
                }
            }
        }
    }
    let lu = g.lu();
    if !lu.is_invertible() {
        return Err(Error::SchemeViolation(format!("interpolation system singular for r = {degree}")));
    }

    let dim = v.eval(0, 0.0).len();
    let mut coeffs = Vec::with_capacity(mesh.len());
    for n in 0..mesh.len() {
        let (a, b) = mesh.interval(n);
        let mut rows = DMatrix::zeros(size, dim);
        rows.row_mut(0).copy_from(&v.eval(n, b).transpose());
        if let Some(low) = &lower {
            for (s, w) in quad.points.iter().zip(&quad.weights) {
                let value = v.eval(n, a + s * (b - a));
                for (i, p) in low.values(*s).iter().enumerate() {
                    for d in 0..dim {
                        rows[(i + 1, d)] += w * p * value[d];
                    }
                }
            }
        }
        let c = lu.solve(&rows).ok_or_else(|| Error::SchemeViolation("interpolation solve failed".into()))?;
        coeffs.push((0..size).map(|j| c.row(j).transpose()).collect());
    }
    let initial: DVector<f64> = v.eval(0, 0.0);
    PiecewisePoly::new(mesh.clone(), elem, coeffs, OuterTrace::Initial(initial))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar<G: Fn(f64) -> f64 + Sync>(g: G) -> impl Fn(f64) -> DVector<f64> + Sync {
        move |t| DVector::from_element(1, g(t))
    }

    #[test]
    fn reproduces_polynomials() {
        let mesh = TemporalMesh::quasi_uniform(1.5, 7, 0.5, 2).unwrap();
        for r in 0..=4usize {
            let c = interpolate(&mesh, r, &scalar(|_| 2.5)).unwrap();
            assert!((c.eval(3, 0.71)[0] - 2.5).abs() < 1e-12);
            let p = interpolate(&mesh, r, &scalar(move |t| t.powi(r as i32))).unwrap();
            for n in 0..mesh.len() {
                let (a, b) = mesh.interval(n);
                let t = 0.3 * a + 0.7 * b;
                assert!((p.eval(n, t)[0] - t.powi(r as i32)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn defining_conditions_hold() {
        let mesh = TemporalMesh::uniform(1.0, 5).unwrap();
        let f = scalar(|t: f64| (3.0 * t).sin());
        for r in 1..=3 {
            let iv = interpolate_with(&mesh, r, &f, 4).unwrap();
            let low = ReferenceElement::new(r - 1).unwrap();
            let fine = crate::quadrature::Quadrature::gauss_legendre(20);
            for n in 0..mesh.len() {
                let (a, b) = mesh.interval(n);
                assert!((iv.right_trace(n)[0] - (3.0 * b).sin()).abs() < 1e-14);
                for i in 0..r {
                    let m = fine.integrate(a, b, |t| (iv.eval(n, t)[0] - (3.0 * t).sin()) * low.values((t - a) / (b - a))[i]);
                    assert!(m.abs() < 1e-10, "moment {i} = {m}");
                }
            }
        }
    }

    #[test]
    fn sine_error_is_second_order_for_r1() {
        let err = |n: usize| {
            let mesh = TemporalMesh::uniform(1.0, n).unwrap();
            let iv = interpolate(&mesh, 1, &scalar(|t: f64| t.sin())).unwrap();
            (0..n)
                .flat_map(|k| {
                    let (a, b) = mesh.interval(k);
                    let iv = &iv;
                    (0..=20).map(move |q| {
                        let t = a + (b - a) * q as f64 / 20.0;
                        (iv.eval(k, t)[0] - t.sin()).abs()
                    })
                })
                .fold(0.0, f64::max)
        };
        let order = (err(16) / err(32)).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }
}
