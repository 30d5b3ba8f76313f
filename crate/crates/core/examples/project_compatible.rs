//! Incompatible initial data are rejected; projecting them onto the boundary
//! condition brings the boundary residual below `10 h²`.

use mcflow::boundary::{BoundaryDatum, BoundaryOperator};
use mcflow::field::Field;
use mcflow::geometry::{Domain, Grid};
use mcflow::initial::{project_compatible, InitialData};
use mcflow::operator::Forcing;
use mcflow::stepper::{run, FlowProblem, RunOptions, SolverConfig};
use std::sync::Arc;

fn main() -> mcflow::Result<()> {
    let h = 0.04;
    let domain = Domain::disk(1.0, 0.5)?;
    let datum = BoundaryDatum::capillary_like(0.3);
    let raw = InitialData::new("sin-x-plus-y", |x| (2.0 * x[0]).sin() + 0.5 * x[1] * x[1]);
    let projected = project_compatible(&raw, &domain, &datum);

    let grid = Arc::new(Grid::classify(&domain, h)?);
    let bc = BoundaryOperator::new(&grid, datum.clone())?;
    for u0 in [&raw, &projected] {
        let u = Field::sample(&grid, 0.0, |x| u0.eval(x))?;
        let report = bc.check_compatibility(&u, 10.0 * h * h);
        println!(
            "{:<32} residual {:.3e} (10h² = {:.3e}) {}",
            u0.name(),
            report.max_residual,
            10.0 * h * h,
            if report.pass {
                "compatible"
            } else {
                "incompatible"
            }
        );
    }

    let problem = FlowProblem {
        domain,
        forcing: Forcing::zero(),
        datum,
        initial: raw,
    };
    match run(&problem, &SolverConfig::new(h, 0.1), RunOptions::default()) {
        Err(e) => println!("unprojected run refused: {e}"),
        Ok(_) => println!("unprojected run accepted"),
    }
    Ok(())
}
