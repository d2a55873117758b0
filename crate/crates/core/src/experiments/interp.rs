use nalgebra::DVector;

use super::{build_mesh, exponent_label, fmt_e, Criterion, ExperimentConfig, OrderFit, Outcome, Table};
use crate::dg::{interpolate_with, Mollifier, Trajectory};
use crate::error::Result;
use crate::norms::{combine, interval_norm};
use crate::quadrature::Quadrature;

/// Interpolation error `‖∂_t^l (v − I_τ v)‖_{L^p}` for `v = sin(3t)`.
///
/// Keys: `degree` (1, 2), `p` (2, inf), `n_list` (8..128), `c` (1),
/// `t_end` (1), `seed`. Expected order `r + 1 − l` for `l ∈ {0, 1}`.
pub fn run_interp(cfg: &ExperimentConfig) -> Result<Outcome> {
    let degrees = cfg.usize_list_or("degree", &[1, 2])?;
    let ps = cfg.list_or("p", &[2.0, f64::INFINITY])?;
    let ns = cfg.usize_list_or("n_list", &[8, 16, 32, 64, 128])?;
    let c = cfg.f64_or("c", 1.0)?;
    let t_end = cfg.f64_or("t_end", 1.0)?;
    let seed = cfg.seed()?;
    let space = crate::operator::SpaceNorm::new(2.0, None)?;
    let v = |t: f64| DVector::from_element(1, (3.0 * t).sin());
    let dv = |t: f64| DVector::from_element(1, 3.0 * (3.0 * t).cos());

    let mut table = Table::new("", "degree,l,p,N,tau,error");
    let mut criteria = Vec::new();
    for &r in &degrees {
        for &p in &ps {
            let mut samples = [Vec::new(), Vec::new()];
            for &n in &ns {
                let mesh = build_mesh(t_end, n, c, seed)?;
                let iv = interpolate_with(&mesh, r, &v, 4)?;
                let quad = Quadrature::gauss_legendre(2 * r + 8).composite(2);
                for (l, out) in samples.iter_mut().enumerate() {
                    let parts = (0..mesh.len())
                        .map(|k| {
                            let (a, b) = mesh.interval(k);
                            interval_norm(a, b, p, &space, &quad, |t| {
                                Ok(if l == 0 { v(t) - iv.eval(k, t) } else { dv(t) - Trajectory::derivative(&iv, k, t) })
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let err = combine(&parts, p);
                    table.push(format!("{r},{l},{},{n},{},{}", exponent_label(p), fmt_e(mesh.tau()), fmt_e(err)));
                    out.push((mesh.tau(), err));
                }
            }
            for (l, s) in samples.iter().enumerate() {
                let expected = (r + 1 - l) as f64;
                criteria.push(Criterion::order(format!("interpolation r={r} l={l} p={}", exponent_label(p)), &OrderFit::fit(s)?, expected, 0.15));
            }
        }
    }
    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table],
        criteria,
    })
}

/// Scaling of `‖∂_t^l δ‖_{L^p}` under refinement for `l ∈ {0, 1}`,
/// `p ∈ {1, 2, ∞}`; expected exponent `−l − 1 + 1/p`.
///
/// Keys: `degree` (1), `n_list` (8..128), `position` (0.37, relative
/// location of t̃ inside the middle interval), `c` (1), `t_end` (1), `seed`.
pub fn run_mollifier(cfg: &ExperimentConfig) -> Result<Outcome> {
    let degrees = cfg.usize_list_or("degree", &[1])?;
    let ns = cfg.usize_list_or("n_list", &[8, 16, 32, 64, 128])?;
    let position = cfg.f64_or("position", 0.37)?;
    let c = cfg.f64_or("c", 1.0)?;
    let t_end = cfg.f64_or("t_end", 1.0)?;
    let seed = cfg.seed()?;
    let labels = ["1", "2", "inf"];
    let exps = [1.0, 2.0, f64::INFINITY];

    let mut table = Table::new("", "degree,N,tau,L1,L2,Linf,dL1,dL2,dLinf");
    let mut criteria = Vec::new();
    for &r in &degrees {
        let mut samples = vec![Vec::new(); 6];
        for &n in &ns {
            let mesh = build_mesh(t_end, n, c, seed)?;
            let k = mesh.len() / 2;
            let (a, b) = mesh.interval(k);
            let norms = Mollifier::new(&mesh, r, k, a + position * (b - a))?.norms();
            let tau = b - a;
            let all: Vec<f64> = norms.value.iter().chain(&norms.derivative).copied().collect();
            table.push(format!("{r},{n},{},{}", fmt_e(tau), all.iter().map(|x| fmt_e(*x)).collect::<Vec<_>>().join(",")));
            for (s, x) in samples.iter_mut().zip(&all) {
                s.push((tau, *x));
            }
        }
        for (idx, s) in samples.iter().enumerate() {
            let (l, pi) = (idx / 3, idx % 3);
            let expected = -(l as f64) - 1.0 + 1.0 / exps[pi];
            criteria.push(Criterion::order(format!("mollifier r={r} l={l} p={}", labels[pi]), &OrderFit::fit(s)?, expected, 0.1));
        }
    }
    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table],
        criteria,
    })
}
