//! Rational transfer functions of one DG step.
use dg_time::rational::{check_a_stability, check_sector_bounds, extract_polynomials, right_half_plane_grid, RationalTable, SectorContour};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> dg_time::Result<()> {
    let grid = right_half_plane_grid(100);
    let contour = SectorContour::new(PI / 3.0, 200)?;
    for r in 0..=4 {
        let table = RationalTable::new(r)?;
        let polys = extract_polynomials(&table)?;
        let a = check_a_stability(&table, &grid)?;
        let bounds = check_sector_bounds(&table, &contour)?;
        let worst = bounds.iter().map(|b| b.fitted_c).fold(0.0, f64::max);
        println!(
            "r = {r}: R(1) = {:.6}, deg q_hat = {}, A-stable = {}, sector constant = {worst:.3}",
            table.stability(Complex64::new(1.0, 0.0))?.re,
            polys.degree_q_hat(),
            a.passed()
        );
    }
    let z = Complex64::new(0.7, 2.0);
    let closed = (1.0 - z / 3.0) / (1.0 + 2.0 * z / 3.0 + z * z / 6.0);
    println!("r = 1 at z = {z}: {} vs closed form {closed}", RationalTable::new(1)?.stability(z)?);
    Ok(())
}
