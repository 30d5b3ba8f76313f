//! A bump on the unit disk with zero normal derivative flattens out to a
//! constant. Pass `--fine` for the 96² lattice.

use mcflow::boundary::BoundaryDatum;
use mcflow::geometry::Domain;
use mcflow::initial::InitialSpec;
use mcflow::operator::Forcing;
use mcflow::stepper::{run, FlowProblem, RunOptions, SolverConfig};

fn main() -> mcflow::Result<()> {
    let fine = std::env::args().any(|a| a == "--fine");
    let domain = Domain::disk(1.0, 0.5)?;
    let initial = InitialSpec::RadialQuartic {
        amplitude: 1.2,
        radius: 1.0,
    }
    .build(&domain);
    let problem = FlowProblem {
        domain,
        forcing: Forcing::zero(),
        datum: BoundaryDatum::zero(),
        initial,
    };
    let mut cfg = SolverConfig::new(if fine { 2.0 / 96.0 } else { 0.05 }, 10.0);
    cfg.snapshot_stride = 20;
    let trace = run(&problem, &cfg, RunOptions::default())?;

    println!("dt = {:e}, {} steps", trace.dt, trace.steps);
    println!(
        "{:>8} {:>12} {:>12} {:>12}",
        "t", "osc", "sup|Du|", "sup|u_t|"
    );
    for r in trace.rows.iter().step_by(4) {
        println!(
            "{:>8.4} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.t, r.osc, r.sup_du_global, r.sup_ut
        );
    }
    let first = trace.first_row();
    let last = trace.last_row();
    match trace.converged_at {
        Some(t) => println!("converged at t = {t:.4}"),
        None => println!("not converged by t = {}", last.t),
    }
    println!(
        "osc {:.3e} -> {:.3e} ({:.2e} of initial), limit height {:.6}",
        first.osc,
        last.osc,
        last.osc / first.osc,
        last.mean
    );
    Ok(())
}
