use nalgebra::DVector;

use super::{build_mesh, exponent_label, fmt_e, Criterion, ExperimentConfig, OrderFit, Outcome, Table};
use crate::dg::{forward_green_pair, interpolate_with, GreenPair, PiecewisePoly};
use crate::error::{Error, Result};
use crate::norms::{per_interval_norms, weighted_a_error, WeightFn};
use crate::operator::Operator;

const DEFAULT_OPERATOR: &str = "kind = diagonal\ndimension = 20\neigen_min = 1\neigen_max = 1e4";

/// Weighted error of the regularized Green's function and its locality.
///
/// Keys: `degree` (1), `p` (2), `alpha` (1/p' + 1/2), `n_list`
/// (16..256), `locality_n` (128), `resolution` (2), `c` (1), `q` (2),
/// `t_end` (1), `seed`, operator keys (20 log-spaced modes in [1, 1e4]).
///
/// The pulse sits at the midpoint of the middle interval of every mesh.
pub fn run_green(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = cfg.operator_or(DEFAULT_OPERATOR)?;
    let r = cfg.usize_or("degree", 1)?;
    if r == 0 {
        return Err(Error::Configuration("green requires degree >= 1".into()));
    }
    let p = cfg.f64_or("p", 2.0)?;
    let p_dual = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let alpha = cfg.f64_or("alpha", 1.0 / p_dual + 0.5)?;
    let ns = cfg.usize_list_or("n_list", &[16, 32, 64, 128, 256])?;
    let locality_n = cfg.usize_or("locality_n", 128)?;
    let resolution = cfg.usize_or("resolution", 2)?;
    let c = cfg.f64_or("c", 1.0)?;
    let t_end = cfg.f64_or("t_end", 1.0)?;
    let seed = cfg.seed()?;
    let space = op.space_norm(cfg.f64_or("q", 2.0)?);
    let v = unit_direction(&op, &space);

    let mut table = Table::new("", "N,tau,alpha,weighted_error,weighted_interpolation_error,control_error");
    let mut scheme = Vec::new();
    let mut interp = Vec::new();
    for &n in &ns {
        let mesh = build_mesh(t_end, n, c, seed)?;
        let (pair, k) = centered_pair(&op, &mesh, r, &v)?;
        let sigma = WeightFn::new(pair.mollifier.t_tilde(), mesh.tau_n(k))?;
        let err = weighted_a_error(&pair.reference, &pair.discrete, sigma, alpha, p, &op, &space, resolution)?;
        let int = interpolant(&pair, r)?;
        let int_err = weighted_a_error(&pair.reference, &int, sigma, alpha, p, &op, &space, resolution)?;
        let control = weighted_a_error(&pair.reference, &pair.discrete, sigma, 0.0, p, &op, &space, resolution)?;
        table.push(format!("{n},{},{alpha},{},{},{}", fmt_e(mesh.tau()), fmt_e(err), fmt_e(int_err), fmt_e(control)));
        scheme.push((mesh.tau(), err));
        interp.push((mesh.tau(), int_err));
    }
    let expected = alpha - 1.0 / p_dual;
    let mut criteria = Vec::new();
    let label = exponent_label(p);
    criteria.push(Criterion::order(format!("weighted rate p={label}"), &OrderFit::fit(&scheme)?, expected, 0.2));
    criteria.push(Criterion::order(format!("weighted interpolation rate p={label}"), &OrderFit::fit(&interp)?, expected, 0.2));

    let (locality, fit) = locality_scan(&op, &space, build_mesh(t_end, locality_n, c, seed)?, r, &v)?;
    criteria.push(Criterion::order("locality slope", &fit, -2.0, 0.3));

    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table, locality],
        criteria,
    })
}

fn unit_direction(op: &Operator, space: &crate::operator::SpaceNorm) -> DVector<f64> {
    let v = DVector::from_element(op.dim(), 1.0);
    let n = space.norm(&v);
    v / n
}

fn centered_pair(op: &Operator, mesh: &crate::mesh::TemporalMesh, r: usize, v: &DVector<f64>) -> Result<(GreenPair, usize)> {
    let k = mesh.len() / 2;
    let (a, b) = mesh.interval(k);
    Ok((forward_green_pair(op, mesh, r, k, 0.5 * (a + b), v)?, k))
}

fn interpolant(pair: &GreenPair, r: usize) -> Result<PiecewisePoly> {
    let reference = &pair.reference;
    interpolate_with(pair.discrete.mesh(), r, &|t: f64| reference.value_at(t), 8)
}

/// `‖A(I_τ g − g_τ)‖_{L^∞(J_n)}` against `t_{n−2} − t_ñ` for intervals at
/// least four steps after the pulse (counting intervals from one).
fn locality_scan(
    op: &Operator,
    space: &crate::operator::SpaceNorm,
    mesh: crate::mesh::TemporalMesh,
    r: usize,
    v: &DVector<f64>,
) -> Result<(Table, OrderFit)> {
    let (pair, k) = centered_pair(op, &mesh, r, v)?;
    let z = interpolant(&pair, r)?.linear_combination(1.0, &pair.discrete, -1.0)?;
    let norms = per_interval_norms(&z, f64::INFINITY, space, 0, Some(op))?;
    let bp = mesh.breakpoints();
    let mut table = Table::new("locality", "interval,distance,sup_A_z");
    let mut samples = Vec::new();
    for (m, value) in norms.iter().enumerate().skip(k + 4) {
        let distance = bp[m - 1] - bp[k + 1];
        table.push(format!("{},{},{}", m + 1, fmt_e(distance), fmt_e(*value)));
        samples.push((distance, *value));
    }
    Ok((table, OrderFit::fit(&samples)?))
}
