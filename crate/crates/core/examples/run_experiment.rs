//! Running an experiment from configuration text.
use dg_time::experiments::{run, ExperimentConfig, ExperimentId};

fn main() -> dg_time::Result<()> {
    let id: ExperimentId = std::env::args().nth(1).as_deref().unwrap_or("rational").parse()?;
    let text = std::env::args().skip(2).collect::<Vec<_>>().join("\n");
    let outcome = run(&ExperimentConfig::parse(id, &text)?)?;
    for table in &outcome.tables {
        println!("{}: {} rows", if table.name.is_empty() { id.name() } else { &table.name }, table.rows.len());
    }
    for c in &outcome.criteria {
        println!("{c}");
    }
    println!("{}", outcome.summary());
    Ok(())
}
