//! Maximum principle for `u_t`: with `ψ = c z`, `c ≥ 0` and no forcing,
//! `sup |u_t|` never exceeds its initial value. The data are projected onto
//! the boundary condition first.

use mcflow::boundary::BoundaryDatum;
use mcflow::geometry::Domain;
use mcflow::initial::{project_compatible, InitialSpec};
use mcflow::operator::Forcing;
use mcflow::stepper::{run, FlowProblem, RunOptions, SolverConfig};

fn main() -> mcflow::Result<()> {
    let domain = Domain::disk(1.0, 0.25)?;
    let datum = BoundaryDatum::capillary_like(0.5);
    let bump = InitialSpec::Bump {
        amplitude: 0.6,
        width: 0.5,
        offset: 0.2,
    }
    .build(&domain);
    let initial = project_compatible(&bump, &domain, &datum);
    let problem = FlowProblem {
        domain,
        forcing: Forcing::zero(),
        datum,
        initial,
    };
    let mut cfg = SolverConfig::new(0.04, 1.0);
    cfg.converge_window = usize::MAX;
    let trace = run(&problem, &cfg, RunOptions::default())?;

    let s = &trace.sup_ut_steps;
    let worst = s
        .windows(2)
        .map(|w| (w[1] - w[0]) / s[0])
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "steps {}, sup|u_t| {:.4e} -> {:.4e}",
        trace.steps,
        s[0],
        s[s.len() - 1]
    );
    println!("largest one-step increase relative to sup|u_t(0)|: {worst:.3e}");
    println!(
        "compatibility residual {:.3e}",
        trace.compatibility.max_residual
    );
    for e in &trace.hopf {
        println!(
            "u_t peaks on the boundary at t = {:.4}, flux {:.3e}",
            e.t, e.signed_flux
        );
    }
    Ok(())
}
