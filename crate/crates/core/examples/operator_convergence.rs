//! Second-order convergence of the discrete curvature operator on closed-form
//! test functions.

use mcflow::oracle::{operator_convergence, OPERATOR_CASES};

fn main() -> mcflow::Result<()> {
    let h0 = 0.1;
    println!(
        "max error over |x| <= 0.5, h = {h0}, {}, {}, {}",
        h0 / 2.0,
        h0 / 4.0,
        h0 / 8.0
    );
    for f in OPERATOR_CASES {
        let (errors, ratios) = operator_convergence(&f, h0, 4, 0.5)?;
        let e: Vec<_> = errors.iter().map(|e| format!("{e:.3e}")).collect();
        let r: Vec<_> = ratios.iter().map(|r| format!("{r:.3}")).collect();
        println!(
            "{:<18} errors [{}]  ratios [{}]",
            f.name,
            e.join(", "),
            r.join(", ")
        );
    }
    Ok(())
}
