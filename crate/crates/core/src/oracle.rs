//! Closed-form reference values for checking the discretisation.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::field::Field;
use crate::geometry::{Domain, Grid, NodeKind};
use crate::operator::{apply_operator, coeff, Forcing, Parallelism};
use crate::{Point, Result};

type Scalar = fn(Point) -> f64;
type Vector = fn(Point) -> Point;
type Hessian = fn(Point) -> [[f64; 2]; 2];

/// A smooth function of two variables with its first and second derivatives.
#[derive(Clone, Copy)]
pub struct AnalyticFunction {
    pub name: &'static str,
    pub u: Scalar,
    pub grad: Vector,
    pub hess: Hessian,
}

impl AnalyticFunction {
    /// `a^ij(Du) u_ij` at `x`.
    pub fn operator_value(&self, x: Point) -> f64 {
        let a = coeff((self.grad)(x));
        let d2 = (self.hess)(x);
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| a.entries[i][j] * d2[i][j])
            .sum()
    }
}

/// `x² + y`. Central differences are exact on quadratics, so the discrete
/// operator reproduces `2 / (1 + 2x²)` to rounding.
pub const QUADRATIC: AnalyticFunction = AnalyticFunction {
    name: "x^2 + y",
    u: |x| x[0] * x[0] + x[1],
    grad: |x| [2.0 * x[0], 1.0],
    hess: |_| [[2.0, 0.0], [0.0, 0.0]],
};

pub const EXP_COS: AnalyticFunction = AnalyticFunction {
    name: "exp(x) cos(y)",
    u: |x| x[0].exp() * x[1].cos(),
    grad: |x| [x[0].exp() * x[1].cos(), -x[0].exp() * x[1].sin()],
    hess: |x| {
        let (e, c, s) = (x[0].exp(), x[1].cos(), x[1].sin());
        [[e * c, -e * s], [-e * s, -e * c]]
    },
};

pub const SHEARED_SINE: AnalyticFunction = AnalyticFunction {
    name: "sin(x + 2y) / 2",
    u: |x| 0.5 * (x[0] + 2.0 * x[1]).sin(),
    grad: |x| {
        let c = (x[0] + 2.0 * x[1]).cos();
        [0.5 * c, c]
    },
    hess: |x| {
        let s = (x[0] + 2.0 * x[1]).sin();
        [[-0.5 * s, -s], [-s, -2.0 * s]]
    },
};

pub const CUBIC: AnalyticFunction = AnalyticFunction {
    name: "x^3 - x y^2 + y",
    u: |x| x[0].powi(3) - x[0] * x[1] * x[1] + x[1],
    grad: |x| [3.0 * x[0] * x[0] - x[1] * x[1], 1.0 - 2.0 * x[0] * x[1]],
    hess: |x| [[6.0 * x[0], -2.0 * x[1]], [-2.0 * x[1], -2.0 * x[0]]],
};

pub const OPERATOR_CASES: [AnalyticFunction; 4] = [QUADRATIC, EXP_COS, SHEARED_SINE, CUBIC];

/// Max error of the discrete operator against `f` over interior lattice
/// nodes within `radius` of the centre of the unit disk.
pub fn operator_error(f: &AnalyticFunction, h: f64, radius: f64) -> Result<f64> {
    let grid = Arc::new(Grid::classify(&Domain::disk(1.0, 0.5)?, h)?);
    let u = Field::sample(&grid, 0.0, f.u)?;
    let lu = apply_operator(&u, &Forcing::zero(), Parallelism::Serial)?;
    Ok(grid
        .active()
        .iter()
        .filter(|&&k| grid.kind(k) == NodeKind::Interior)
        .map(|&k| (k, grid.point(k)))
        .filter(|(_, x)| x[0].hypot(x[1]) <= radius + 1e-12)
        .map(|(k, x)| (lu.get(k) - f.operator_value(x)).abs())
        .fold(0.0, f64::max))
}

/// Errors at `h`, `h/2`, `h/4`, ... and the ratios of successive errors.
pub fn operator_convergence(
    f: &AnalyticFunction,
    h0: f64,
    levels: usize,
    radius: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let errors = (0..levels)
        .map(|l| operator_error(f, h0 / f64::from(1u32 << l), radius))
        .collect::<Result<Vec<_>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok((errors, ratios))
}

/// Oscillation of the heat equation solution `ε cos(πx)` on `[0, 1]` with zero
/// flux: `2ε exp(-π² t)`. The flow reduces to this as `ε → 0`.
pub fn heat_osc(epsilon: f64, t: f64) -> f64 {
    2.0 * epsilon * (-PI * PI * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_takes_two_thirds_at_x_one() {
        assert!((QUADRATIC.operator_value([1.0, 0.3]) - 2.0 / 3.0).abs() < 1e-15);
        assert!(operator_error(&QUADRATIC, 0.05, 0.5).unwrap() < 1e-11);
    }

    #[test]
    fn hessians_match_finite_differences() {
        let x = [0.3, -0.2];
        let e = 1e-5;
        for f in OPERATOR_CASES {
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += e;
                xm[i] -= e;
                let du = ((f.u)(xp) - (f.u)(xm)) / (2.0 * e);
                assert!((du - (f.grad)(x)[i]).abs() < 1e-8, "{}", f.name);
                for j in 0..2 {
                    let d2 = ((f.grad)(xp)[j] - (f.grad)(xm)[j]) / (2.0 * e);
                    assert!((d2 - (f.hess)(x)[i][j]).abs() < 1e-8, "{}", f.name);
                }
            }
        }
    }
}
