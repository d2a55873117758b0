//! Convergence of the primal scheme for a smooth manufactured solution.
use dg_time::dg::solve_primal;
use dg_time::experiments::{lp_error, Manufactured, OrderFit};
use dg_time::mesh::TemporalMesh;
use dg_time::operator::Operator;
use nalgebra::DVector;

fn main() -> dg_time::Result<()> {
    let op = Operator::diagonal(vec![1.0, 4.0, 9.0])?;
    let space = op.space_norm(2.0);
    let exact = Manufactured::new(
        |t| DVector::from_fn(3, |i, _| ((i + 1) as f64 * t).sin() + 1.0),
        |t| DVector::from_fn(3, |i, _| (i + 1) as f64 * ((i + 1) as f64 * t).cos()),
    );
    for r in [1, 2] {
        let mut samples = Vec::new();
        for n in [8, 16, 32, 64] {
            let mesh = TemporalMesh::quasi_uniform(1.0, n, 0.5, n as u64)?;
            let f = |t: f64| exact.source(&op, t).unwrap();
            let u = solve_primal(&op, &mesh, r, &f, &exact.at(0.0))?;
            let err = lp_error(&exact, &u, 2.0, &space)?;
            println!("r = {r}, N = {n:3}: L2 error {err:.3e}");
            samples.push((mesh.tau(), err));
        }
        println!("r = {r}: fitted order {:.3}", OrderFit::fit(&samples)?.slope);
    }
    Ok(())
}
