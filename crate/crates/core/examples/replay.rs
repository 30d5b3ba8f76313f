//! Write a run to disk, then recompute its report from the stored trace and
//! compare byte for byte. Switching a check off changes the verdicts only.

use mcflow::scenario::{preset, replay, run_scenario, ScenarioOptions};

fn main() -> mcflow::Result<()> {
    let dir = std::env::temp_dir().join("mcflow-replay-example");
    let cfg = preset("forced-decay").expect("built-in preset");
    let outcome = run_scenario(
        &cfg,
        &ScenarioOptions {
            out_dir: Some(dir.clone()),
            reference_mode: true,
            ..Default::default()
        },
    )?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    let trace = dir.join("trace.json");
    let report = dir.join("report.json");
    let same = replay(&trace, &report, &[])?;
    println!("replay identical: {}", same.identical);
    let off = replay(&trace, &report, &[("band_gradient".to_string(), false)])?;
    println!(
        "with band_gradient off: identical {}, verdict {:?}",
        off.identical,
        off.report.record("band_gradient").map(|r| r.verdict)
    );
    Ok(())
}
