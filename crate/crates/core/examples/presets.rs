//! Run every built-in scenario on a coarse lattice and print the verdicts.

use mcflow::scenario::{run_scenario, ScenarioOptions, PRESETS};

fn main() -> mcflow::Result<()> {
    let root = std::env::temp_dir().join("mcflow-presets-example");
    for p in PRESETS {
        let mut cfg = p.config();
        cfg.solver.h = cfg
            .solver
            .h
            .max(if cfg.domain.dim() == 1 { 0.01 } else { 0.05 });
        cfg.solver.t_final = cfg.solver.t_final.min(1.0);
        let outcome = run_scenario(
            &cfg,
            &ScenarioOptions {
                out_dir: Some(root.join(p.name)),
                ..Default::default()
            },
        )?;
        let failed: Vec<_> = outcome.report.failures().map(|r| r.name.as_str()).collect();
        println!(
            "{:<26} {:>6} steps  {}",
            p.name,
            outcome.document.trace.steps,
            if failed.is_empty() {
                "pass".to_string()
            } else {
                format!("FAIL {}", failed.join(" "))
            }
        );
    }
    Ok(())
}
