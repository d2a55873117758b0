use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_mesh, fmt_e, Criterion, ExperimentConfig, Outcome, Table};
use crate::basis::MAX_DEGREE;
use crate::dg::DgSolver;
use crate::error::Result;
use crate::operator::Operator;
use crate::rational::{check_a_stability, check_sector_bounds, duhamel_product, extract_polynomials, right_half_plane_grid, RationalTable, SectorContour};

/// Closed forms, polynomial degrees, A-stability, sector bounds and the
/// product formula.
///
/// Keys: `samples` (100 random points), `delta` (π/3), `per_ray` (200, compared
/// against twice as many), `grid_per_ray` (200), `product_instances` (10),
/// `product_n` (5), `seed`.
pub fn run_rational(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = cfg.seed()?;
    let samples = cfg.usize_or("samples", 100)?;
    let delta = cfg.f64_or("delta", PI / 3.0)?;
    let per_ray = cfg.usize_or("per_ray", 200)?;
    let grid = right_half_plane_grid(cfg.usize_or("grid_per_ray", 200)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut criteria = Vec::new();

    let points: Vec<Complex64> = (0..samples)
        .map(|_| Complex64::new(rng.random::<f64>() * 10.0, rng.random::<f64>() * 20.0 - 10.0))
        .collect();
    let t0 = RationalTable::new(0)?;
    let t1 = RationalTable::new(1)?;
    let mut err0: f64 = 0.0;
    let mut err1: f64 = 0.0;
    for z in &points {
        err0 = err0.max((t0.stability(*z)? - 1.0 / (1.0 + z)).norm());
        let closed = (1.0 - z / 3.0) / (1.0 + 2.0 * z / 3.0 + z * z / 6.0);
        err1 = err1.max((t1.stability(*z)? - closed).norm());
    }
    criteria.push(Criterion::new("closed form r=0", err0 <= 1e-9, format!("max deviation {err0:.2e}")));
    criteria.push(Criterion::new("closed form r=1", err1 <= 1e-9, format!("max deviation {err1:.2e}")));

    let mut degrees = Table::new("", "degree,deg_q_hat,max_modulus_right_half_plane,modulus_at_infinity");
    let mut sectors = Table::new("sector", format!("degree,per_ray,{}", crate::rational::SectorBound::CSV_HEADER));
    for r in 0..=MAX_DEGREE {
        let table = RationalTable::new(r)?;
        let deg = extract_polynomials(&table)?.degree_q_hat();
        criteria.push(Criterion::new(format!("deg q_hat r={r}"), deg == r + 1, format!("degree {deg}")));
        let stab = check_a_stability(&table, &grid)?;
        criteria.push(Criterion::new(
            format!("A-stability r={r}"),
            stab.passed(),
            format!("max |R| {:.15}, at infinity {:.2e}", stab.max_modulus, stab.modulus_at_infinity),
        ));
        degrees.push(format!("{r},{deg},{},{}", fmt_e(stab.max_modulus), fmt_e(stab.modulus_at_infinity)));

        let coarse = check_sector_bounds(&table, &SectorContour::new(delta, per_ray)?)?;
        let fine = check_sector_bounds(&table, &SectorContour::new(delta, 2 * per_ray)?)?;
        let mut worst: f64 = 0.0;
        let mut finite = true;
        for (a, b) in coarse.iter().zip(&fine) {
            finite &= a.fitted_c.is_finite() && b.fitted_c.is_finite();
            worst = worst.max((b.fitted_c / a.fitted_c - 1.0).abs());
            sectors.push(format!("{r},{per_ray},{}", a.csv_row()));
            sectors.push(format!("{r},{},{}", 2 * per_ray, b.csv_row()));
        }
        criteria.push(Criterion::new(
            format!("sector bound r={r}"),
            finite && worst <= 0.05,
            format!("fitted C change under sample doubling {:.2}%", 100.0 * worst),
        ));
    }

    let instances = cfg.usize_or("product_instances", 10)?;
    let n = cfg.usize_or("product_n", 5)?;
    let table = RationalTable::new(1)?;
    let mut product = Table::new("product", "instance,max_abs_difference,max_abs_value");
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let dim = 4;
        let op = Operator::diagonal((0..dim).map(|_| 10f64.powf(rng.random::<f64>() * 4.0)).collect())?;
        let mesh = build_mesh(1.0, n, 0.5, rng.random())?;
        let moments: Vec<Vec<DVector<f64>>> = (0..n).map(|_| (0..2).map(|_| DVector::from_fn(dim, |_, _| rng.random::<f64>() - 0.5)).collect()).collect();
        let u0 = DVector::from_fn(dim, |_, _| rng.random::<f64>() - 0.5);
        let direct = DgSolver::new(&op, 1)?.solve_moments(&mesh, &moments, &u0)?;
        let formula = duhamel_product(&table, &op, &mesh, &moments, &u0)?;
        let mut diff: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (m, local) in formula.iter().enumerate() {
            for (j, c) in local.iter().enumerate() {
                diff = diff.max((c - &direct.local(m)[j]).amax());
                size = size.max(c.amax());
            }
        }
        worst = worst.max(diff);
        product.push(format!("{k},{},{}", fmt_e(diff), fmt_e(size)));
    }
    criteria.push(Criterion::new("product formula", worst <= 1e-9, format!("max difference {worst:.2e}")));

    Ok(Outcome {
        id: cfg.id(),
        tables: vec![degrees, sectors, product],
        criteria,
    })
}
