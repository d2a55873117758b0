//! Trace-space norms of initial data.
use dg_time::operator::{InterpolationMethod, Operator};
use nalgebra::DVector;

fn main() -> dg_time::Result<()> {
    let op = Operator::log_spaced(1.0, 1e4, 12)?;
    let space = op.space_norm(2.0);
    let lambdas: Vec<f64> = (0..op.dim()).map(|i| op.apply(&DVector::from_fn(op.dim(), |j, _| (i == j) as u8 as f64)).unwrap()[i]).collect();
    for p in [1.5, 2.0, 4.0] {
        // data of equal size in X, increasingly rough
        let u0 = DVector::from_fn(op.dim(), |i, _| lambdas[i].powf(-0.25));
        let semigroup = op.interpolation_norm(&u0, p, &space, InterpolationMethod::Semigroup)?;
        let k = op.interpolation_norm(&u0, p, &space, InterpolationMethod::KFunctional)?;
        println!("p = {p}: |u0|_X = {:.4}, semigroup = {semigroup:.4}, K-functional = {k:.4}", space.norm(&u0));
    }
    Ok(())
}
