use std::f64::consts::PI;

use nalgebra::DVector;

use super::{exponent_label, fmt_e, Criterion, ExperimentConfig, OrderFit, Outcome, Table};
use crate::dg::{DgSolver, PiecewisePoly};
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::norms::{combine, mr_functional};
use crate::operator::{Operator, OperatorKind};
use crate::quadrature::Quadrature;
use crate::rational::RationalTable;

const MAX_DRIFT: f64 = 1.25;

/// `P_h sin(πx)`: the load vector of `sin(πx)` against the hat functions is
/// `2(1 − cos πh)/(π² h) sin(πx_i)`, then one mass solve.
fn projected_sine(op: &Operator) -> Result<DVector<f64>> {
    let OperatorKind::Fem1d(fem) = op.kind() else {
        return Err(Error::Configuration("heat requires a fem1d operator".into()));
    };
    let h = fem.h();
    let factor = 2.0 * (1.0 - (PI * h).cos()) / (PI * PI * h);
    let load = DVector::from_iterator(op.dim(), fem.nodes().iter().map(|x| factor * (PI * x).sin()));
    fem.mass()
        .clone()
        .cholesky()
        .map(|c| c.solve(&load))
        .ok_or_else(|| Error::Configuration("mass matrix is not positive definite".into()))
}

/// `‖u(t) − u_h(t)‖_{L^2(0,1)}` for `u = sin(πx)e^{−t}`, four Gauss points per cell.
fn space_error(nodal: &DVector<f64>, t: f64, cells: usize, gauss: &Quadrature) -> f64 {
    let h = 1.0 / cells as f64;
    let value = |i: usize| if i == 0 || i == cells { 0.0 } else { nodal[i - 1] };
    let mut sum = 0.0;
    for cell in 0..cells {
        let (ul, ur) = (value(cell), value(cell + 1));
        for (s, w) in gauss.points.iter().zip(&gauss.weights) {
            let x = (cell as f64 + s) * h;
            let d = (PI * x).sin() * (-t).exp() - (ul * (1.0 - s) + ur * s);
            sum += w * h * d * d;
        }
    }
    sum.sqrt()
}

struct HeatRun {
    error: f64,
    mr_ratio: f64,
}

fn solve_heat(cells: usize, n: usize, r: usize, p: f64, t_end: f64, with_ratio: bool) -> Result<HeatRun> {
    let op = Operator::fem1d(cells)?;
    let ph = projected_sine(&op)?;
    let mesh = TemporalMesh::uniform(t_end, n)?;
    let scale = PI * PI - 1.0;
    let f = {
        let ph = ph.clone();
        move |t: f64| &ph * (scale * (-t).exp())
    };
    let u = DgSolver::new(&op, r)?.with_oversampling(2)?.solve(&mesh, &f, &ph)?;
    let time_rule = Quadrature::gauss_legendre(2 * r + 6);
    let gauss = Quadrature::gauss_legendre(4);
    let parts: Vec<f64> = (0..mesh.len())
        .map(|k| {
            let (a, b) = mesh.interval(k);
            if p.is_infinite() {
                time_rule.mapped(a, b).map(|(t, _)| space_error(&u.eval(k, t), t, cells, &gauss)).fold(0.0, f64::max)
            } else {
                time_rule.mapped(a, b).map(|(t, w)| w * space_error(&u.eval(k, t), t, cells, &gauss).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        })
        .collect();
    let mr_ratio = if with_ratio {
        let report = mr_functional(&u, &f, &ph, &op, p, &op.space_norm(2.0), &time_rule)?;
        report.mr_ratio.unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    Ok(HeatRun {
        error: combine(&parts, p),
        mr_ratio,
    })
}

/// Fully discrete heat equation `u_t − u_xx = f` on `(0, 1)` with P1 elements,
/// `u = sin(πx)e^{−t}`, data projected with the mass matrix.
///
/// Keys: `degree` (1), `p` (2), `t_end` (1), `tau_n_list` (4..64) at
/// `tau_cells` (1024); `h_cells_list` (8..128) at `h_n` (256);
/// `joint_list` (8..128, N = cells); `eigen_cells` (32), `eigen_n` (10).
pub fn run_heat(cfg: &ExperimentConfig) -> Result<Outcome> {
    let r = cfg.usize_or("degree", 1)?;
    let p = cfg.f64_or("p", 2.0)?;
    let t_end = cfg.f64_or("t_end", 1.0)?;
    let tau_ns = cfg.usize_list_or("tau_n_list", &[4, 8, 16, 32, 64])?;
    let tau_cells = cfg.usize_or("tau_cells", 1024)?;
    let h_cells = cfg.usize_list_or("h_cells_list", &[8, 16, 32, 64, 128])?;
    let h_n = cfg.usize_or("h_n", 256)?;
    let joint = cfg.usize_list_or("joint_list", &[8, 16, 32, 64, 128])?;
    let label = exponent_label(p);
    let mut criteria = Vec::new();

    let mut table = Table::new("", "study,N,cells,tau,h,error,mr_ratio");
    let mut tau_samples = Vec::new();
    for &n in &tau_ns {
        let run = solve_heat(tau_cells, n, r, p, t_end, false)?;
        let tau = t_end / n as f64;
        table.push(format!("tau,{n},{tau_cells},{},{},{},", fmt_e(tau), fmt_e(1.0 / tau_cells as f64), fmt_e(run.error)));
        tau_samples.push((tau, run.error));
    }
    let mut h_samples = Vec::new();
    for &m in &h_cells {
        let run = solve_heat(m, h_n, r, p, t_end, false)?;
        let h = 1.0 / m as f64;
        table.push(format!("h,{h_n},{m},{},{},{},", fmt_e(t_end / h_n as f64), fmt_e(h), fmt_e(run.error)));
        h_samples.push((h, run.error));
    }
    let tau_fit = OrderFit::fit(&tau_samples)?;
    let h_fit = OrderFit::fit(&h_samples)?;
    criteria.push(Criterion::order(format!("tau order p={label}"), &tau_fit, (r + 1) as f64, 0.15));
    criteria.push(Criterion::order(format!("h order p={label}"), &h_fit, 2.0, 0.15));

    // each study's finest error must sit well above the other component there
    let spatial_at_tau_study = (h_fit.intercept + h_fit.slope * (1.0 / tau_cells as f64).ln()).exp();
    let temporal_at_h_study = (tau_fit.intercept + tau_fit.slope * (t_end / h_n as f64).ln()).exp();
    let tau_finest = tau_samples.last().map(|s| s.1).unwrap_or(0.0);
    let h_finest = h_samples.last().map(|s| s.1).unwrap_or(0.0);
    criteria.push(Criterion::new(
        "error separation",
        tau_finest >= 3.0 * spatial_at_tau_study && h_finest >= 3.0 * temporal_at_h_study,
        format!(
            "tau study {tau_finest:.2e} vs spatial {spatial_at_tau_study:.2e}; h study {h_finest:.2e} vs temporal {temporal_at_h_study:.2e}"
        ),
    ));

    let mut ratios = Vec::new();
    for &m in &joint {
        let run = solve_heat(m, m, r, p, t_end, true)?;
        if !run.mr_ratio.is_finite() {
            return Err(Error::Divergent { tail_fraction: run.mr_ratio });
        }
        table.push(format!("joint,{m},{m},{},{},{},{}", fmt_e(t_end / m as f64), fmt_e(1.0 / m as f64), fmt_e(run.error), fmt_e(run.mr_ratio)));
        ratios.push(run.mr_ratio);
    }
    let growth = ratios.iter().fold(1.0f64, |acc, v| acc.max(v / ratios[0]));
    criteria.push(Criterion::new(
        format!("fully discrete mr drift p={label}"),
        growth <= MAX_DRIFT,
        format!("max ratio / coarsest ratio {growth:.3} (coarsest {:.4})", ratios[0]),
    ));

    let (dev, modes) = eigenmode_check(cfg.usize_or("eigen_cells", 32)?, cfg.usize_or("eigen_n", 10)?, r, t_end)?;
    criteria.push(Criterion::new("discrete eigenmodes", dev <= 1e-10, format!("max relative trace deviation {dev:.2e} over {modes} modes")));

    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table],
        criteria,
    })
}

/// Traces from eigenvector initial data against `R_{r,0}(τμ_k)^n v_k`,
/// relative to `‖v_k‖_∞`.
fn eigenmode_check(cells: usize, n: usize, r: usize, t_end: f64) -> Result<(f64, usize)> {
    let op = Operator::fem1d(cells)?;
    let eig = op.eigen().ok_or_else(|| Error::Configuration("fem1d eigendecomposition failed".into()))?;
    let mesh = TemporalMesh::uniform(t_end, n)?;
    let tau = mesh.tau();
    let table = RationalTable::new(r)?;
    let solver = DgSolver::new(&op, r)?;
    let zero = |_t: f64| DVector::zeros(op.dim());
    let modes: Vec<usize> = vec![0, 1, op.dim() / 2, op.dim() - 1];
    let mut worst: f64 = 0.0;
    for &k in &modes {
        let v = eig.vectors.column(k).into_owned();
        let u: PiecewisePoly = solver.solve(&mesh, &zero, &v)?;
        let rho = table.eval_real(tau * eig.values[k])?[(r, 0)];
        for m in 0..n {
            let expected = &v * rho.powi(m as i32 + 1);
            worst = worst.max((u.right_trace(m) - &expected).amax() / v.amax());
        }
    }
    Ok((worst, modes.len()))
}
