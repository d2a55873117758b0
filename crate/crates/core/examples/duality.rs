//! Dual (backward) solves and the two forms of the bilinear form.
use dg_time::dg::{dual_form, primal_form, solve_dual, solve_primal};
use dg_time::mesh::TemporalMesh;
use dg_time::operator::Operator;
use nalgebra::{DMatrix, DVector};

fn main() -> dg_time::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, -0.5, 2.0]);
    let op = Operator::dense(a)?;
    let mesh = TemporalMesh::quasi_uniform(1.0, 6, 0.5, 3)?;
    let f = |t: f64| DVector::from_vec(vec![t.cos(), 1.0]);
    let u = solve_primal(&op, &mesh, 2, &f, &DVector::from_vec(vec![1.0, 0.0]))?;
    let z = solve_dual(&op, &mesh, 2, &|t: f64| DVector::from_vec(vec![0.0, t]), &DVector::from_vec(vec![0.5, 0.5]))?;
    let b = primal_form(&op, &u, &z, 2)?;
    let d = dual_form(&op, &u, &z, 2)?;
    println!("primal form {:.15e}", b.value);
    println!("dual form   {:.15e}", d.value);
    println!("relative gap {:.2e}", (b.value - d.value).abs() / (b.scale + d.scale));
    println!("dual solution at t = 0+: {:?}", z.left_trace(0).as_slice());
    Ok(())
}
