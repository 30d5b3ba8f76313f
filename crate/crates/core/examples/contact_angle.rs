//! Contact-angle data `u_γ = φ(θ) v`. With `φ = a cos θ` the flow settles on the
//! tilted plane of slope `a / √(1 - a²)`; with constant `φ` it translates
//! vertically.

use mcflow::scenario::{preset, run_scenario, ScenarioOptions};
use std::path::PathBuf;

fn main() -> mcflow::Result<()> {
    let out = std::env::var_os(mcflow::scenario::OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mcflow-contact-angle"));
    for name in ["contact-angle-disk", "contact-angle-translating"] {
        let mut cfg = preset(name).expect("built-in preset");
        cfg.solver.h = 0.05;
        cfg.solver.t_final = cfg.solver.t_final.min(2.0);
        let opts = ScenarioOptions {
            out_dir: Some(out.join(name)),
            ..Default::default()
        };
        let outcome = run_scenario(&cfg, &opts)?;
        let trace = &outcome.document.trace;
        let first = trace.first_row();
        let last = trace.last_row();
        println!("{name}");
        println!(
            "  sup|Du| {:.4} -> {:.4}",
            first.sup_du_global, last.sup_du_global
        );
        println!("  mean height {:.4} -> {:.4}", first.mean, last.mean);
        println!(
            "  band sup|Du| {:.4} -> {:.4}",
            first.sup_du_band, last.sup_du_band
        );
        if let Some(r) = outcome.report.record("band_gradient") {
            println!("  band fit {:?}", r.fitted);
        }
        println!("  files in {}", outcome.out_dir.display());
    }
    println!(
        "tilted-plane slope for a = 0.3: {:.4}",
        0.3 / (1.0f64 - 0.09).sqrt()
    );
    Ok(())
}
