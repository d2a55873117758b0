//! Writing and reading DG solutions as text.
use dg_time::dg::{read_solution, solve_primal, write_solution};
use dg_time::mesh::TemporalMesh;
use dg_time::operator::Operator;
use nalgebra::DVector;

fn main() -> dg_time::Result<()> {
    let op = Operator::diagonal(vec![1.0, 10.0])?;
    let mesh = TemporalMesh::uniform(1.0, 3)?;
    let u = solve_primal(&op, &mesh, 1, &|t: f64| DVector::from_vec(vec![t, 1.0]), &DVector::from_vec(vec![1.0, 1.0]))?;
    let text = write_solution(&u);
    print!("{text}");
    let back = read_solution(&text)?;
    assert_eq!(back.right_trace(2), u.right_trace(2));
    Ok(())
}
