//! Small data on `[0, 1]`: the flow linearises to the heat equation and the
//! oscillation of `ε cos(πx)` decays like `exp(-π² t)`.

use mcflow::oracle::heat_osc;
use mcflow::scenario::preset;

fn main() -> mcflow::Result<()> {
    let cfg = preset("linear-limit-1d").expect("built-in preset");
    let trace = mcflow::stepper::run(&cfg.problem()?, &cfg.solver, Default::default())?;
    let eps = 1e-3;
    let mut worst: f64 = 0.0;
    println!("{:>6} {:>12} {:>12} {:>10}", "t", "osc", "heat", "rel err");
    for r in trace
        .rows
        .iter()
        .step_by(40)
        .chain(std::iter::once(trace.last_row()))
    {
        let exact = heat_osc(eps, r.t);
        let rel = (r.osc - exact).abs() / exact;
        worst = worst.max(rel);
        println!(
            "{:>6.3} {:>12.5e} {:>12.5e} {:>10.2e}",
            r.t, r.osc, exact, rel
        );
    }
    println!("largest relative deviation {worst:.3e}");
    Ok(())
}
