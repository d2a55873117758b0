//! Uniform and quasi-uniform temporal meshes.
use dg_time::mesh::{product_bound_check, TemporalMesh};

fn main() -> dg_time::Result<()> {
    let uniform = TemporalMesh::uniform(1.0, 8)?;
    println!("uniform: tau = {}, breakpoints = {:?}", uniform.tau(), uniform.breakpoints());

    for c in [1.0, 0.5, 0.1] {
        let mesh = TemporalMesh::quasi_uniform(1.0, 16, c, 42)?;
        let bound = product_bound_check(&mesh, 2, 10)?;
        println!(
            "c = {c}: min/max tau = {:.3}, triple product ratio = {:.3} (floor {:.4})",
            mesh.quasi_uniformity_constant(),
            bound.ratio,
            c.powi(3) / 27.0
        );
    }

    let mesh = TemporalMesh::quasi_uniform(2.0, 5, 0.5, 7)?;
    let restored = TemporalMesh::from_text(&mesh.to_text())?;
    assert_eq!(restored, mesh);
    println!("t = 1.3 lies in interval {:?}", mesh.locate(1.3));
    Ok(())
}
