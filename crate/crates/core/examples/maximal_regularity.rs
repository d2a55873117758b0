//! The discrete maximal regularity ratio under refinement.
use dg_time::dg::solve_primal;
use dg_time::mesh::TemporalMesh;
use dg_time::norms::mr_functional;
use dg_time::operator::Operator;
use dg_time::quadrature::Quadrature;
use nalgebra::DVector;

fn main() -> dg_time::Result<()> {
    let op = Operator::log_spaced(1.0, 1e4, 16)?;
    let dim = op.dim();
    let f = move |t: f64| DVector::from_fn(dim, |i, _| (7.0 * t + i as f64).sin().signum());
    let u0 = DVector::zeros(dim);
    for p in [2.0, 4.0] {
        let space = op.space_norm(2.0);
        for n in [8, 32, 128, 512] {
            let mesh = TemporalMesh::quasi_uniform(1.0, n, 0.5, n as u64)?;
            let u = solve_primal(&op, &mesh, 1, &f, &u0)?;
            let report = mr_functional(&u, &f, &u0, &op, p, &space, &Quadrature::gauss_legendre(8).composite(4))?;
            println!(
                "p = {p}, N = {n:3}: |u'| = {:.3e}, |Au| = {:.3e}, jumps = {:.3e}, ratio = {:.4}",
                report.dt_norm,
                report.a_norm,
                report.jump_norm,
                report.mr_ratio.unwrap_or(0.0)
            );
        }
    }
    Ok(())
}
