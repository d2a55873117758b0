//! Regularized delta and the weighted error of the Green's function.
use dg_time::dg::{forward_green_pair, Mollifier};
use dg_time::mesh::TemporalMesh;
use dg_time::norms::{weighted_a_error, WeightFn};
use dg_time::operator::Operator;
use nalgebra::DVector;

fn main() -> dg_time::Result<()> {
    let mesh = TemporalMesh::uniform(1.0, 16)?;
    let delta = Mollifier::new(&mesh, 1, 8, 0.53)?;
    println!("delta supported on {:?}, moments {:?}", delta.support(), delta.moments());
    println!("norms {:?}", delta.norms());

    let op = Operator::log_spaced(1.0, 1e4, 20)?;
    let space = op.space_norm(2.0);
    let v = DVector::from_element(op.dim(), 1.0);
    let alpha = 1.0;
    for n in [16, 32, 64] {
        let mesh = TemporalMesh::uniform(1.0, n)?;
        let k = n / 2;
        let (a, b) = mesh.interval(k);
        let t_tilde = 0.5 * (a + b);
        let pair = forward_green_pair(&op, &mesh, 1, k, t_tilde, &v)?;
        let sigma = WeightFn::new(t_tilde, mesh.tau())?;
        let err = weighted_a_error(&pair.reference, &pair.discrete, sigma, alpha, 2.0, &op, &space, 2)?;
        println!("N = {n}: weighted error {err:.4e}");
    }
    Ok(())
}
