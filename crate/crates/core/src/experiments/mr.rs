use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{build_mesh, drift, exponent_label, fmt_e, Criterion, ExperimentConfig, Outcome, Table};
use crate::basis::ReferenceElement;
use crate::dg::{DgSolver, OuterTrace, PiecewisePoly};
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::norms::{a_minus_f_norms, mr_functional, one_step_functional, per_interval_jumps, per_interval_norms, residual_norms, NormReport};
use crate::operator::{InterpolationMethod, Operator, OperatorKind, SpaceNorm};
use crate::quadrature::Quadrature;
use crate::rational::RationalTable;

const DEFAULT_OPERATOR: &str = "kind = diagonal\ndimension = 20\neigen_min = 1\neigen_max = 1e4";
const MAX_DRIFT: f64 = 1.25;

struct Study {
    op: Operator,
    r: usize,
    ps: Vec<f64>,
    ns: Vec<usize>,
    c: f64,
    t_end: f64,
    seed: u64,
    ensemble: usize,
    space: SpaceNorm,
}

impl Study {
    fn from_config(cfg: &ExperimentConfig, ensemble: usize) -> Result<Self> {
        let op = cfg.operator_or(DEFAULT_OPERATOR)?;
        let r = cfg.usize_or("degree", 1)?;
        let space = op.space_norm(cfg.f64_or("q", 2.0)?);
        Ok(Study {
            r,
            ps: cfg.list_or("p", &[2.0, 4.0])?,
            ns: cfg.usize_list_or("n_list", &[8, 16, 32, 64, 128, 256, 512])?,
            c: cfg.f64_or("c", 0.5)?,
            t_end: cfg.f64_or("t_end", 1.0)?,
            seed: cfg.seed()?,
            ensemble: cfg.usize_or("ensemble", ensemble)?,
            space,
            op,
        })
    }

    fn mesh(&self, n: usize) -> Result<TemporalMesh> {
        build_mesh(self.t_end, n, self.c, self.seed.wrapping_add(n as u64))
    }

    /// Independent stream per (mesh, member).
    fn rng(&self, n: usize, member: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((n as u64) << 32) | member as u64);
        rng
    }

    fn f_rule(&self) -> Quadrature {
        Quadrature::gauss_legendre(2 * self.r + 6)
    }
}

fn normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Random `P^r` source with normal coefficients; the last member of each
/// ensemble is supported in a single interval.
fn random_source(study: &Study, mesh: &TemporalMesh, member: usize) -> Result<PiecewisePoly> {
    let mut rng = study.rng(mesh.len(), member);
    let dim = study.op.dim();
    let hot = (member == study.ensemble - 1).then_some(mesh.len() / 3);
    let coeffs = (0..mesh.len())
        .map(|k| {
            (0..=study.r)
                .map(|_| {
                    let v = normal_vector(&mut rng, dim);
                    match hot {
                        Some(h) if h != k => DVector::zeros(dim),
                        _ => v,
                    }
                })
                .collect()
        })
        .collect();
    PiecewisePoly::new(mesh.clone(), ReferenceElement::new(study.r)?, coeffs, OuterTrace::Initial(DVector::zeros(dim)))
}

fn checked_ratio(report: &NormReport) -> Result<f64> {
    match report.mr_ratio {
        Some(x) if x.is_finite() => Ok(x),
        other => Err(Error::Divergent {
            tail_fraction: other.unwrap_or(f64::NAN),
        }),
    }
}

struct MemberResult {
    report: NormReport,
    jump_slack: f64,
    dt_constant: f64,
    one_step: (f64, f64),
}

fn solve_member(study: &Study, mesh: &TemporalMesh, p: f64, f: &PiecewisePoly, u0: &DVector<f64>) -> Result<MemberResult> {
    let u = DgSolver::new(&study.op, study.r)?.solve(mesh, f, u0)?;
    let rule = study.f_rule();
    let report = mr_functional(&u, f, u0, &study.op, p, &study.space, &rule)?;
    checked_ratio(&report)?;
    let jumps = per_interval_jumps(&u, p, &study.space)?;
    let residuals = residual_norms(&u, f, &study.op, p, &study.space, &rule)?;
    let jump_slack = jumps
        .iter()
        .zip(&residuals)
        .map(|(j, res)| j - res)
        .fold(f64::NEG_INFINITY, f64::max);
    let dt = per_interval_norms(&u, p, &study.space, 1, None)?;
    let amf = a_minus_f_norms(&u, f, &study.op, p, &study.space, &rule)?;
    let dt_constant = dt
        .iter()
        .zip(&amf)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, a)| d / a)
        .fold(0.0, f64::max);
    let one_step = one_step_functional(&u, &study.op, p, &study.space)?;
    Ok(MemberResult {
        report,
        jump_slack,
        dt_constant,
        one_step,
    })
}

/// Largest ratio of a profile entry to its first entry.
fn growth(profile: &[f64]) -> f64 {
    profile.iter().fold(1.0f64, |acc, v| acc.max(v / profile[0]))
}

fn zero_source(study: &Study, mesh: &TemporalMesh) -> Result<PiecewisePoly> {
    Ok(PiecewisePoly::zeros(mesh.clone(), ReferenceElement::new(study.r)?, study.op.dim()))
}

/// Ensemble maxima of the maximal regularity ratio against the mesh size.
///
/// Keys: `degree` (1, at least 1), `p` (2, 4), `n_list` (8..512), `c`
/// (0.5), `ensemble` (32), `q` (2), `t_end` (1), `seed`, operator keys (20
/// log-spaced modes in [1, 1e4]).
///
/// The `u0 = 0` branch draws random piecewise polynomial sources; the
/// `f = 0` branch draws normal initial vectors scaled to unit
/// interpolation norm.
pub fn run_mr_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let study = Study::from_config(cfg, 32)?;
    if study.r == 0 {
        return Err(Error::Configuration("mr-sweep requires degree >= 1".into()));
    }
    let dim = study.op.dim();
    let mut table = Table::new("", format!("branch,p,N,tau,max_mr_ratio,dt_constant,{}", NormReport::CSV_HEADER));
    let mut criteria = Vec::new();
    for &p in &study.ps {
        let label = exponent_label(p);
        let mut f_profile = Vec::new();
        let mut u0_profile = Vec::new();
        let mut dt_profile = Vec::new();
        let mut worst_slack = f64::NEG_INFINITY;
        for &n in &study.ns {
            let mesh = study.mesh(n)?;
            let forced: Vec<MemberResult> = (0..study.ensemble)
                .into_par_iter()
                .map(|m| {
                    let f = random_source(&study, &mesh, m)?;
                    solve_member(&study, &mesh, p, &f, &DVector::zeros(dim))
                })
                .collect::<Result<_>>()?;
            let zero = zero_source(&study, &mesh)?;
            let free: Vec<MemberResult> = (0..study.ensemble)
                .into_par_iter()
                .map(|m| {
                    let mut rng = study.rng(n, study.ensemble + m);
                    let raw = normal_vector(&mut rng, dim);
                    let scale = study.op.interpolation_norm(&raw, p, &study.space, InterpolationMethod::Semigroup)?;
                    solve_member(&study, &mesh, p, &zero, &(raw / scale))
                })
                .collect::<Result<_>>()?;
            for (branch, members, profile) in [("f", &forced, &mut f_profile), ("u0", &free, &mut u0_profile)] {
                let (best, worst) = members
                    .iter()
                    .map(|m| m.report.mr_ratio.unwrap_or(0.0))
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
                let dt_c = members.iter().map(|m| m.dt_constant).fold(0.0, f64::max);
                worst_slack = members.iter().map(|m| m.jump_slack).fold(worst_slack, f64::max);
                table.push(format!("{branch},{label},{n},{},{},{},{}", fmt_e(mesh.tau()), fmt_e(worst), fmt_e(dt_c), members[best].report.csv_row()));
                profile.push(worst);
                if branch == "f" {
                    dt_profile.push(dt_c);
                }
            }
        }
        for (name, profile) in [("source", &f_profile), ("initial", &u0_profile)] {
            let d = growth(profile);
            criteria.push(Criterion::new(
                format!("mr drift {name} p={label}"),
                d <= MAX_DRIFT,
                format!("max ratio / coarsest ratio {d:.3} (coarsest {:.4})", profile[0]),
            ));
        }
        criteria.push(Criterion::new(
            format!("jump bound p={label}"),
            worst_slack <= 1e-10,
            format!("max (jump - residual) {worst_slack:.2e}"),
        ));
        let d = drift(&dt_profile);
        criteria.push(Criterion::new(
            format!("time derivative constant p={label}"),
            d <= MAX_DRIFT,
            format!("fitted constants {:.3}..{:.3}, drift {d:.3}", dt_profile.iter().cloned().fold(f64::INFINITY, f64::min), dt_profile.iter().cloned().fold(0.0, f64::max)),
        ));
    }
    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table],
        criteria,
    })
}

/// One-step quantities against the full maximal regularity functional.
///
/// Keys as for `mr-sweep`. The ensemble maxima of both ratios may not grow
/// by more than 25% over the value on the coarsest mesh.
pub fn run_one_step(cfg: &ExperimentConfig) -> Result<Outcome> {
    let study = Study::from_config(cfg, 32)?;
    let dim = study.op.dim();
    let mut table = Table::new("", "p,N,tau,max_difference_ratio,max_applied_ratio");
    let mut criteria = Vec::new();

    // continuous constant solution u ≡ w with f = Aw
    let w = DVector::from_fn(dim, |i, _| 1.0 + i as f64);
    let aw = study.op.apply(&w)?;
    let mesh = study.mesh(study.ns[0])?;
    let u = DgSolver::new(&study.op, study.r)?.solve(&mesh, &|_t: f64| aw.clone(), &w)?;
    let (diff, applied) = one_step_functional(&u, &study.op, 2.0, &study.space)?;
    let expected = study.space.norm(&aw) * study.t_end.sqrt();
    criteria.push(Criterion::new(
        "constant solution",
        diff <= 1e-10 * expected && (applied - expected).abs() <= 1e-10 * expected,
        format!("difference term {diff:.2e}, applied term {applied:.6} (expected {expected:.6})"),
    ));

    for &p in &study.ps {
        let label = exponent_label(p);
        let mut diffs = Vec::new();
        let mut applied = Vec::new();
        for &n in &study.ns {
            let mesh = study.mesh(n)?;
            let members: Vec<MemberResult> = (0..study.ensemble)
                .into_par_iter()
                .map(|m| {
                    let f = random_source(&study, &mesh, m)?;
                    solve_member(&study, &mesh, p, &f, &DVector::zeros(dim))
                })
                .collect::<Result<_>>()?;
            let d = members.iter().map(|m| m.one_step.0 / m.report.lhs()).fold(0.0, f64::max);
            let a = members.iter().map(|m| m.one_step.1 / m.report.lhs()).fold(0.0, f64::max);
            table.push(format!("{label},{n},{},{},{}", fmt_e(mesh.tau()), fmt_e(d), fmt_e(a)));
            diffs.push(d);
            applied.push(a);
        }
        for (name, profile) in [("difference", &diffs), ("applied", &applied)] {
            let g = growth(profile);
            criteria.push(Criterion::new(format!("one-step {name} p={label}"), g <= MAX_DRIFT, format!("max ratio / coarsest ratio {g:.3} (coarsest {:.4})", profile[0])));
        }
    }
    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table],
        criteria,
    })
}

/// Homogeneous problem with `u0 = A^{−θ} w`, `w` a random unit vector.
///
/// Keys as for `mr-sweep` with `theta` (0.5, 1) and `samples` (8); the
/// operator must be diagonal. Also checks a single mode against the closed
/// form built from the stability function.
pub fn run_initial(cfg: &ExperimentConfig) -> Result<Outcome> {
    let study = Study::from_config(cfg, 8)?;
    let OperatorKind::Diagonal(lambdas) = study.op.kind() else {
        return Err(Error::Configuration("initial requires a diagonal operator".into()));
    };
    let thetas = cfg.list_or("theta", &[0.5, 1.0])?;
    let dim = study.op.dim();
    let mut table = Table::new("", "theta,p,N,tau,max_ratio,max_sup_ratio");
    let mut criteria = Vec::new();

    let zero_mesh = study.mesh(study.ns[0])?;
    let z = DgSolver::new(&study.op, study.r)?.solve(&zero_mesh, &|_t: f64| DVector::zeros(dim), &DVector::zeros(dim))?;
    criteria.push(Criterion::new(
        "zero data",
        z.coeffs().iter().flatten().all(|c| c.amax() == 0.0),
        "u0 = 0 gives the zero solution",
    ));

    for &theta in &thetas {
        for &p in &study.ps {
            let label = exponent_label(p);
            let mut profile = Vec::new();
            let mut sup_profile = Vec::new();
            for &n in &study.ns {
                let mesh = study.mesh(n)?;
                let zero = zero_source(&study, &mesh)?;
                let results: Vec<(f64, f64)> = (0..study.ensemble)
                    .into_par_iter()
                    .map(|m| {
                        let mut rng = study.rng(n, m);
                        let w = normal_vector(&mut rng, dim);
                        let w = &w / study.space.norm(&w);
                        let u0 = DVector::from_fn(dim, |i, _| lambdas[i].powf(-theta) * w[i]);
                        let u = DgSolver::new(&study.op, study.r)?.solve(&mesh, &zero, &u0)?;
                        let a_norm = crate::norms::broken_norm(&u, p, &study.space, 0, Some(&study.op))?;
                        let sup = crate::norms::broken_norm(&u, f64::INFINITY, &study.space, 0, Some(&study.op))?;
                        let interp = study.op.interpolation_norm(&u0, p, &study.space, InterpolationMethod::Semigroup)?;
                        let au0 = study.space.norm(&study.op.apply(&u0)?);
                        Ok((a_norm / interp, sup / au0))
                    })
                    .collect::<Result<_>>()?;
                let worst = results.iter().map(|x| x.0).fold(0.0, f64::max);
                let sup = results.iter().map(|x| x.1).fold(0.0, f64::max);
                table.push(format!("{theta},{label},{n},{},{},{}", fmt_e(mesh.tau()), fmt_e(worst), fmt_e(sup)));
                profile.push(worst);
                sup_profile.push(sup);
            }
            let d = drift(&profile);
            criteria.push(Criterion::new(format!("initial drift theta={theta} p={label}"), d <= MAX_DRIFT, format!("ratio drift {d:.3}")));
            if theta >= 1.0 {
                let bound = sup_profile.iter().cloned().fold(0.0, f64::max);
                criteria.push(Criterion::new(
                    format!("sup bound theta={theta} p={label}"),
                    bound.is_finite() && drift(&sup_profile) <= MAX_DRIFT,
                    format!("max sup ratio {bound:.3}, drift {:.3}", drift(&sup_profile)),
                ));
            }
        }
    }

    let (err, value) = single_mode_check(study.r, study.t_end)?;
    criteria.push(Criterion::new("single mode closed form", err <= 1e-10 * value, format!("relative deviation {:.2e}", err / value)));
    Ok(Outcome {
        id: cfg.id(),
        tables: vec![table],
        criteria,
    })
}

/// `‖λ u_τ‖_{L^2}` for one mode on a uniform mesh, computed from the
/// coefficients `R_{i,0}(z) ρ^n` with `ρ = R_{r,0}(z)` and a geometric sum.
fn single_mode_check(r: usize, t_end: f64) -> Result<(f64, f64)> {
    let (lambda, n) = (37.0, 24);
    let op = Operator::diagonal(vec![lambda])?;
    let mesh = TemporalMesh::uniform(t_end, n)?;
    let tau = mesh.tau();
    let u = DgSolver::new(&op, r)?.solve(&mesh, &|_t: f64| DVector::zeros(1), &DVector::from_element(1, 1.0))?;
    let measured = crate::norms::broken_norm(&u, 2.0, &SpaceNorm::new(2.0, None)?, 0, Some(&op))?;

    let table = RationalTable::new(r)?;
    let rm = table.eval_real(tau * lambda)?;
    let col = rm.column(0).into_owned();
    let rho = rm[(r, 0)];
    let local = (col.transpose() * table.element().mass() * &col)[(0, 0)];
    let geometric = (1.0 - rho.powi(2 * n as i32)) / (1.0 - rho * rho);
    let closed = (lambda * lambda * tau * local * geometric).sqrt();
    Ok(((measured - closed).abs(), closed))
}
