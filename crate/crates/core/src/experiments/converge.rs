use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_mesh, exponent_label, fmt_e, lp_error, Criterion, ExperimentConfig, Manufactured, OrderFit, Outcome, Table};
use crate::basis::ReferenceElement;
use crate::dg::{dual_form, primal_form, DgSolver, ModalReference, OuterTrace, PiecewisePoly};
use crate::error::Result;
use crate::operator::Operator;

const DEFAULT_OPERATOR: &str = "kind = diagonal\neigenvalues = 1, 4, 9";

/// Exactness, convergence order, duality and Galerkin orthogonality.
///
/// Keys: `degree` (1, 2), `p` (2, 4), `n_list` (8..128), `c` (1), `q` (2),
/// `t_end` (1), `exact_n` (8), `duality_samples` (8), `seed`, operator keys
/// (diagonal 1, 4, 9).
pub fn run_converge(cfg: &ExperimentConfig) -> Result<Outcome> {
    let op = cfg.operator_or(DEFAULT_OPERATOR)?;
    let degrees = cfg.usize_list_or("degree", &[1, 2])?;
    let ps = cfg.list_or("p", &[2.0, 4.0])?;
    let ns = cfg.usize_list_or("n_list", &[8, 16, 32, 64, 128])?;
    let c = cfg.f64_or("c", 1.0)?;
    let t_end = cfg.f64_or("t_end", 1.0)?;
    let space = op.space_norm(cfg.f64_or("q", 2.0)?);
    let seed = cfg.seed()?;
    let dim = op.dim();

    let mut criteria = Vec::new();
    let mut exact_table = Table::new("exactness", "degree,max_value_error,max_coefficient_error");
    let exact_n = cfg.usize_or("exact_n", 8)?;
    for &r in &degrees {
        let (value_err, coeff_err) = exactness(&op, r, t_end, exact_n, c, seed)?;
        exact_table.push(format!("{r},{},{}", fmt_e(value_err), fmt_e(coeff_err)));
        criteria.push(Criterion::new(
            format!("exactness r={r}"),
            value_err <= 1e-10 && coeff_err <= 1e-10,
            format!("trace error {value_err:.2e}, coefficient error {coeff_err:.2e}"),
        ));
    }

    let w = DVector::from_fn(dim, |i, _| 1.0 / (1.0 + i as f64));
    let w2 = DVector::from_fn(dim, |i, _| if i % 2 == 0 { 1.0 } else { -0.5 });
    let (wa, wb) = (w.clone(), w2.clone());
    let exact = Manufactured::new(move |t| &wa * (-t).exp() + &wb * t.sin(), move |t| -&w * (-t).exp() + &w2 * t.cos());

    let mut table = Table::new("", "degree,p,N,tau,error");
    for &r in &degrees {
        let solver = DgSolver::new(&op, r)?.with_oversampling(2)?;
        for &p in &ps {
            let mut samples = Vec::new();
            for &n in &ns {
                let mesh = build_mesh(t_end, n, c, seed)?;
                let f = |t: f64| exact.source(&op, t).expect("dimension checked");
                let u = solver.solve(&mesh, &f, &exact.at(0.0))?;
                let err = lp_error(&exact, &u, p, &space)?;
                table.push(format!("{r},{},{n},{},{}", exponent_label(p), fmt_e(mesh.tau()), fmt_e(err)));
                samples.push((mesh.tau(), err));
            }
            let monotone = samples.windows(2).all(|s| s[1].1 < s[0].1);
            criteria.push(Criterion::new(
                format!("monotone r={r} p={}", exponent_label(p)),
                monotone,
                if monotone { "errors decrease under refinement".to_string() } else { "non-monotone error sequence".to_string() },
            ));
            let fit = OrderFit::fit(&samples)?;
            criteria.push(Criterion::order(format!("order r={r} p={}", exponent_label(p)), &fit, (r + 1) as f64, 0.15));
        }
    }

    let mut forms = Table::new("forms", "degree,sample,duality_gap,duality_scale,galerkin_gap,galerkin_scale");
    let samples = cfg.usize_or("duality_samples", 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_duality: f64 = 0.0;
    let mut worst_galerkin: f64 = 0.0;
    for &r in &degrees {
        for s in 0..samples {
            let mesh = build_mesh(t_end, 6, 0.5, rng.random())?;
            let dense = random_operator(&mut rng, 3);
            let v = random_poly(&mut rng, &mesh, r, 3)?;
            let phi = random_poly(&mut rng, &mesh, r, 3)?;
            let b = primal_form(&dense, &v, &phi, 1)?;
            let b_dual = dual_form(&dense, &v, &phi, 1)?;
            let duality = (b.value - b_dual.value).abs() / (b.scale + b_dual.scale);
            let (gap, scale) = if op.is_self_adjoint() {
                galerkin_gap(&op, &mesh, r, &mut rng)?
            } else {
                (0.0, 1.0)
            };
            worst_duality = worst_duality.max(duality);
            worst_galerkin = worst_galerkin.max(gap / scale);
            forms.push(format!("{r},{s},{},{},{},{}", fmt_e((b.value - b_dual.value).abs()), fmt_e(b.scale + b_dual.scale), fmt_e(gap), fmt_e(scale)));
        }
    }
    criteria.push(Criterion::new("duality", worst_duality <= 1e-9, format!("max relative gap {worst_duality:.2e}")));
    criteria.push(Criterion::new("galerkin-orthogonality", worst_galerkin <= 1e-7, format!("max relative residual {worst_galerkin:.2e}")));

    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table, exact_table, forms],
        criteria,
    })
}

/// Solves with data manufactured from a polynomial of degree `r` in time and
/// returns the largest trace error and the largest coefficient error.
fn exactness(op: &Operator, r: usize, t_end: f64, n: usize, c: f64, seed: u64) -> Result<(f64, f64)> {
    let dim = op.dim();
    let coeffs: Vec<DVector<f64>> = (0..=r).map(|k| DVector::from_fn(dim, |i, _| ((k + 2 * i + 1) as f64).sin())).collect();
    let (c1, c2) = (coeffs.clone(), coeffs.clone());
    let exact = Manufactured::new(
        move |t| c1.iter().enumerate().fold(DVector::zeros(dim), |acc, (k, ck)| acc + ck * t.powi(k as i32)),
        move |t| {
            c2.iter()
                .enumerate()
                .skip(1)
                .fold(DVector::zeros(dim), |acc, (k, ck)| acc + ck * (k as f64 * t.powi(k as i32 - 1)))
        },
    );
    let mesh = build_mesh(t_end, n, c, seed)?;
    let f = |t: f64| exact.source(op, t).expect("dimension checked");
    let u = DgSolver::new(op, r)?.solve(&mesh, &f, &exact.at(0.0))?;
    let elem = ReferenceElement::new(r)?;
    let mut value_err: f64 = 0.0;
    let mut coeff_err: f64 = 0.0;
    for k in 0..mesh.len() {
        let (a, b) = mesh.interval(k);
        value_err = value_err.max((u.left_trace(k) - exact.at(a)).amax()).max((u.right_trace(k) - exact.at(b)).amax());
        for (j, s) in elem.nodes().iter().enumerate() {
            coeff_err = coeff_err.max((&u.local(k)[j] - exact.at(a + s * (b - a))).amax());
        }
    }
    Ok((value_err, coeff_err))
}

fn random_operator(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let m = DMatrix::from_fn(dim, dim, |i, j| if i == j { 3.0 + rng.random::<f64>() } else { rng.random::<f64>() - 0.5 });
    Operator::dense(m).expect("diagonally dominant matrix")
}

fn random_poly(rng: &mut ChaCha8Rng, mesh: &crate::mesh::TemporalMesh, r: usize, dim: usize) -> Result<PiecewisePoly> {
    let coeffs = (0..mesh.len())
        .map(|_| (0..=r).map(|_| DVector::from_fn(dim, |_, _| rng.random::<f64>() * 2.0 - 1.0)).collect())
        .collect();
    let outer = OuterTrace::Initial(DVector::from_fn(dim, |_, _| rng.random::<f64>() * 2.0 - 1.0));
    PiecewisePoly::new(mesh.clone(), ReferenceElement::new(r)?, coeffs, outer)
}

/// `|B(u − u_τ, φ)|` and its scale for a spectral reference `u` driven by
/// `v cos(3t)` from random initial data.
fn galerkin_gap(op: &Operator, mesh: &crate::mesh::TemporalMesh, r: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let dim = op.dim();
    let u0 = DVector::from_fn(dim, |_, _| rng.random::<f64>() - 0.5);
    let v = DVector::from_fn(dim, |_, _| rng.random::<f64>() - 0.5);
    let t_end = mesh.final_time();
    let reference = ModalReference::forward(op, &u0, &v, |t| (3.0 * t).cos(), (0.0, t_end), t_end)?;
    let f = |t: f64| &v * (3.0 * t).cos();
    let u = DgSolver::new(op, r)?.with_oversampling(16)?.solve(mesh, &f, &u0)?;
    let phi = random_poly(rng, mesh, r, dim)?;
    let exact = primal_form(op, &reference, &phi, 16)?;
    let discrete = primal_form(op, &u, &phi, 16)?;
    // both sides equal ∫⟨f, φ⟩ + ⟨u0, φ^{0,+}⟩
    Ok(((exact.value - discrete.value).abs(), exact.scale + discrete.scale))
}
