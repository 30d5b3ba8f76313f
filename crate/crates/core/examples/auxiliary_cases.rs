//! The barrier used for the boundary gradient estimate, evaluated on the band
//! at a few times: where it peaks and which case that is.

use mcflow::estimates::{check_case1_bound, evaluate_auxiliary, observed_c0};
use mcflow::scenario::preset;
use mcflow::stepper::run;

fn main() -> mcflow::Result<()> {
    let mut cfg = preset("steep-interior").expect("built-in preset");
    cfg.solver.h = 0.04;
    cfg.solver.snapshot_stride = 20;
    cfg.solver.field_stride = Some(8);
    let grid = cfg.grid()?;
    let datum = cfg.datum()?;
    let trace = run(&cfg.problem()?, &cfg.solver, Default::default())?;
    let c0 = observed_c0(&grid);
    let u0 = trace.initial_field(&grid)?;
    let m0 = u0.sup_abs() + trace.last_row().m_t;
    println!("C0 = {c0:.4}, M0 = {m0:.4}");
    for i in 0..trace.snapshots.len() {
        let u = trace.field(&grid, i)?;
        let aux = evaluate_auxiliary(&u, &datum, m0, c0)?;
        let case1 = check_case1_bound(&aux, &u);
        match aux.argmax_node() {
            Some(n) => println!(
                "t = {:.4}: max phi = {:.4} at ({:.3}, {:.3}), d = {:.3}, {:?}; |Dw|^2 split error {:.1e}; case-1 bound {:.2}",
                aux.t,
                n.phi.unwrap_or(f64::NAN),
                n.point[0],
                n.point[1],
                n.d,
                n.case,
                aux.decomposition_error(),
                case1.bound
            ),
            None => println!("t = {:.4}: |Dw|^2 <= e on the whole band, barrier undefined", aux.t),
        }
    }
    Ok(())
}
