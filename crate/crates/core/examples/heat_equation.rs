//! Fully discrete heat equation on (0, 1) with linear finite elements.
use dg_time::dg::solve_primal;
use dg_time::mesh::TemporalMesh;
use dg_time::operator::{Fem1d, Operator};
use nalgebra::DVector;
use std::f64::consts::PI;

fn main() -> dg_time::Result<()> {
    let cells = 64;
    let fem = Fem1d::new(cells)?;
    let op = Operator::fem1d(cells)?;
    let nodes = fem.nodes();
    // u = sin(πx) e^{-t} solves u' - u_xx = (π² - 1) u
    let shape = DVector::from_iterator(nodes.len(), nodes.iter().map(|x| (PI * x).sin()));
    let load = fem.mass() * &shape;
    let f = move |t: f64| fem.mass().clone().cholesky().unwrap().solve(&(&load * ((PI * PI - 1.0) * (-t).exp())));
    for n in [4, 8, 16, 32] {
        let mesh = TemporalMesh::uniform(1.0, n)?;
        let u = solve_primal(&op, &mesh, 1, &f, &shape)?;
        let err = (u.right_trace(n - 1) - &shape * (-1.0f64).exp()).amax();
        println!("N = {n:2}: nodal error at t = 1 {err:.3e}");
    }
    Ok(())
}
