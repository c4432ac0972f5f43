//! End-to-end runs from a JSON config, and a grid sweep to CSV.

use qidlab::harness::{run_pipeline, sweep, ExperimentConfig, SweepGrid};

const CONFIG: &str = r#"{
    "seed": 11,
    "channel": {"kind": "random-near-identity", "dim": 2, "p": 0.02},
    "block_n": 4,
    "messages": 16,
    "code_kind": "noisy-basis",
    "family": {"size": 2, "count": 4},
    "mc_samples": 500
}"#;

fn main() -> qidlab::Result<()> {
    let cfg = ExperimentConfig::from_json_str(CONFIG)?;
    let run = run_pipeline(&cfg)?;
    for c in &run.report.bound_checks {
        println!("{:<14} {:.3e} {} {:.3e} {}", c.name, c.value, c.relation, c.bound, if c.ok { "ok" } else { "VIOLATED" });
    }

    let grid: SweepGrid = serde_json::from_value(serde_json::json!({
        "base": serde_json::from_str::<serde_json::Value>(CONFIG).unwrap(),
        "axes": [{"param": "channel.p", "values": [0.0, 0.02, 0.05]}]
    }))
    .expect("valid grid");
    let (csv, _) = sweep(&grid, false)?;
    print!("{csv}");
    Ok(())
}
