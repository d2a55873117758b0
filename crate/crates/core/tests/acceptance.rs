use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use dg_time::experiments::{run, Criterion, ExperimentConfig, ExperimentId, Outcome};

struct Timed {
    outcome: Outcome,
    elapsed: Duration,
}

/// Experiments run one at a time so that wall-clock budgets are meaningful.
fn outcome(id: ExperimentId) -> &'static Timed {
    static CACHE: OnceLock<Mutex<HashMap<&'static str, &'static Timed>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = cache.get(id.name()) {
        return t;
    }
    let start = Instant::now();
    let outcome = run(&ExperimentConfig::defaults(id)).unwrap_or_else(|e| panic!("{id} failed to run: {e}"));
    let timed: &'static Timed = Box::leak(Box::new(Timed { outcome, elapsed: start.elapsed() }));
    cache.insert(id.name(), timed);
    timed
}

fn check(number: usize, title: &str, runs: &[(ExperimentId, &dyn Fn(&Criterion) -> bool)], budget: Duration) {
    let mut selected = Vec::new();
    let mut elapsed = Duration::ZERO;
    for (id, keep) in runs {
        let t = outcome(*id);
        elapsed += t.elapsed;
        selected.extend(t.outcome.criteria.iter().filter(|c| keep(c)).cloned());
    }
    assert!(!selected.is_empty(), "criterion {number} selected no checks");
    let failed: Vec<&Criterion> = selected.iter().filter(|c| !c.passed).collect();
    let in_budget = elapsed <= budget;
    let verdict = if failed.is_empty() && in_budget { "PASS" } else { "FAIL" };
    let mut report = format!("criterion {number} ({title}): {verdict} [{} checks, {:.2} s of {} s]\n", selected.len(), elapsed.as_secs_f64(), budget.as_secs());
    for c in &selected {
        report.push_str(&format!("    {c}\n"));
    }
    // written to the handle directly so the line survives output capture
    let _ = std::io::stdout().lock().write_all(report.as_bytes());
    assert!(failed.is_empty(), "criterion {number} ({title}) failed: {}", failed.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "));
    assert!(in_budget, "criterion {number} ({title}) took {elapsed:?}, budget {budget:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn criterion_1_exactness() {
    check(1, "exactness", &[(ExperimentId::Converge, &|c| c.name.starts_with("exactness"))], secs(1));
}

#[test]
fn criterion_2_convergence_order() {
    check(
        2,
        "convergence order",
        &[(ExperimentId::Converge, &|c| c.name.starts_with("order") || c.name.starts_with("monotone"))],
        secs(10),
    );
}

#[test]
fn criterion_3_rational_structure() {
    check(3, "rational structure", &[(ExperimentId::Rational, &|c| c.name != "product formula")], secs(5));
}

#[test]
fn criterion_4_duhamel_consistency() {
    check(4, "product formula", &[(ExperimentId::Rational, &|c| c.name == "product formula")], secs(1));
}

#[test]
fn criterion_5_discrete_maximal_regularity() {
    check(5, "discrete maximal regularity", &[(ExperimentId::MrSweep, &|_| true)], secs(120));
}

#[test]
fn criterion_6_mollifier_and_interpolation() {
    check(
        6,
        "mollifier and interpolation",
        &[(ExperimentId::Interp, &|_| true), (ExperimentId::Mollifier, &|_| true)],
        secs(10),
    );
}

#[test]
fn criterion_7_weighted_green_rate() {
    check(7, "weighted Green's function rate and locality", &[(ExperimentId::Green, &|_| true)], secs(60));
}

#[test]
fn criterion_8_fully_discrete_heat() {
    check(8, "fully discrete heat equation", &[(ExperimentId::Heat, &|_| true)], secs(120));
}

#[test]
fn criterion_9_duality_and_orthogonality() {
    check(
        9,
        "duality and Galerkin orthogonality",
        &[(ExperimentId::Converge, &|c| c.name == "duality" || c.name == "galerkin-orthogonality")],
        secs(10),
    );
}
