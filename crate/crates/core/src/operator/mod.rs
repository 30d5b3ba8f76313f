//! The mean curvature coefficient matrix and its finite-difference evaluation.

mod forcing;
mod structural;

pub use forcing::{Forcing, ForcingSpec, StructuralDeclaration};
pub use structural::{check_structural, GrowthProbe, StructuralReport, ZMonotoneProbe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{Field, GhostState};
use crate::geometry::Grid;
use crate::{FlowError, Point, Result};

/// `a^ij(p) = δ_ij - p_i p_j / (1 + |p|²)`, evaluated at `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientMatrix<const N: usize> {
    pub entries: [[f64; N]; N],
    pub p: [f64; N],
}

pub fn coeff<const N: usize>(p: [f64; N]) -> CoefficientMatrix<N> {
    let v2 = 1.0 + p.iter().map(|x| x * x).sum::<f64>();
    let mut entries = [[0.0; N]; N];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, a) in row.iter_mut().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            *a = delta - p[i] * p[j] / v2;
        }
    }
    CoefficientMatrix { entries, p }
}

impl<const N: usize> CoefficientMatrix<N> {
    /// `Σ a^ij ξ_i η_j`.
    pub fn bilinear(&self, xi: [f64; N], eta: [f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            for j in 0..N {
                s += self.entries[i][j] * xi[i] * eta[j];
            }
        }
        s
    }

    /// `v = (1 + |p|²)^{1/2}`.
    pub fn v(&self) -> f64 {
        (1.0 + self.p.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

impl CoefficientMatrix<2> {
    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, d]] = self.entries;
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - r, mean + r]
    }
}

/// How node-wise maps are evaluated. Both modes produce identical values; the
/// serial mode is the reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parallelism {
    Serial,
    #[default]
    Rayon,
}

fn axis_step(axis: usize) -> (isize, isize) {
    if axis == 0 {
        (1, 0)
    } else {
        (0, 1)
    }
}

fn at(u: &Field, k: usize, di: isize, dj: isize) -> Option<(usize, f64)> {
    u.grid().offset(k, di, dj).map(|n| (n, u.get(n)))
}

/// Derivative of `u` along one axis at node `k`: centred when both axis
/// neighbours are active, otherwise second-order one-sided on active nodes,
/// otherwise centred through the ghost value.
fn axis_derivative(u: &Field, k: usize, axis: usize) -> f64 {
    let grid = u.grid();
    let h = grid.h();
    let (si, sj) = axis_step(axis);
    let active = |n: Option<(usize, f64)>| n.filter(|&(m, _)| grid.is_active(m));
    let fwd = at(u, k, si, sj);
    let bwd = at(u, k, -si, -sj);
    let u0 = u.get(k);
    if let (Some((_, a)), Some((_, b))) = (active(fwd), active(bwd)) {
        return (a - b) / (2.0 * h);
    }
    if active(bwd).is_none() {
        if let (Some((_, u1)), Some((_, u2))) = (active(fwd), active(at(u, k, 2 * si, 2 * sj))) {
            return (4.0 * (u1 - u0) - (u2 - u0)) / (2.0 * h);
        }
    }
    if active(fwd).is_none() {
        if let (Some((_, u1)), Some((_, u2))) = (active(bwd), active(at(u, k, -2 * si, -2 * sj))) {
            return -(4.0 * (u1 - u0) - (u2 - u0)) / (2.0 * h);
        }
    }
    let a = fwd.map_or(u0, |(_, v)| v);
    let b = bwd.map_or(u0, |(_, v)| v);
    (a - b) / (2.0 * h)
}

/// Whether [`gradient`] at active node `k` falls back to ghost values.
pub fn gradient_reads_ghosts(grid: &Grid, k: usize) -> bool {
    let active = |di: isize, dj: isize| grid.offset(k, di, dj).is_some_and(|n| grid.is_active(n));
    (0..grid.dim()).any(|axis| {
        let (si, sj) = axis_step(axis);
        let (f1, b1) = (active(si, sj), active(-si, -sj));
        let (f2, b2) = (active(2 * si, 2 * sj), active(-2 * si, -2 * sj));
        !((f1 && b1) || (!b1 && f1 && f2) || (!f1 && b1 && b2))
    })
}

/// Second-order approximation of `Du` at a non-exterior node.
pub fn gradient(u: &Field, k: usize) -> Point {
    if u.grid().dim() == 1 {
        [axis_derivative(u, k, 0), 0.0]
    } else {
        [axis_derivative(u, k, 0), axis_derivative(u, k, 1)]
    }
}

/// `Σ a^ij(Du) u_ij` at an active node, given the node gradient.
///
/// Pure second derivatives use the 3-point formula. The mixed derivative uses
/// the 7-point formula whose diagonal pair follows the sign of `a^12`, so the
/// stencil has non-negative off-centre weights whenever `|a^12| ≤ min(a^11, a^22)`.
fn curvature_term(u: &Field, k: usize, p: Point) -> f64 {
    let grid = u.grid();
    let h2 = grid.h() * grid.h();
    let v = |di: isize, dj: isize| u.get(grid.offset(k, di, dj).expect("stencil in lattice"));
    let c = u.get(k);
    if grid.dim() == 1 {
        let a = coeff([p[0]]);
        return a.entries[0][0] * (v(1, 0) - 2.0 * c + v(-1, 0)) / h2;
    }
    let a = coeff(p).entries;
    let (e, w, n, s) = (v(1, 0), v(-1, 0), v(0, 1), v(0, -1));
    let uxx = (e - 2.0 * c + w) / h2;
    let uyy = (n - 2.0 * c + s) / h2;
    let axial = e + w + n + s;
    let uxy = if a[0][1] >= 0.0 {
        (v(1, 1) + v(-1, -1) - axial + 2.0 * c) / (2.0 * h2)
    } else {
        -(v(-1, 1) + v(1, -1) - axial + 2.0 * c) / (2.0 * h2)
    };
    a[0][0] * uxx + 2.0 * a[0][1] * uxy + a[1][1] * uyy
}

/// `Σ a^ij(Du) u_ij - f(x, u, Du)` on every active node: the right-hand side of
/// the semi-discrete flow, i.e. the instantaneous `u_t`.
pub fn apply_operator(u: &Field, forcing: &Forcing, par: Parallelism) -> Result<Field> {
    if u.ghost_state() == GhostState::Missing {
        return Err(FlowError::State(
            "ghost values missing; enforce the boundary datum first".into(),
        ));
    }
    let grid = u.grid();
    let node = |k: usize| {
        let p = gradient(u, k);
        let mut val = curvature_term(u, k, p);
        if !forcing.is_zero() {
            val -= forcing.value(grid.point(k), u.get(k), p);
        }
        val
    };
    let active = grid.active();
    let rhs: Vec<f64> = match par {
        Parallelism::Serial => active.iter().map(|&k| node(k)).collect(),
        Parallelism::Rayon => active.par_iter().map(|&k| node(k)).collect(),
    };
    let mut values = vec![0.0; grid.len()];
    for (&k, r) in active.iter().zip(rhs) {
        if !r.is_finite() {
            return Err(FlowError::Instability {
                node: k,
                point: grid.point(k),
                t: u.t(),
            });
        }
        values[k] = r;
    }
    Field::from_values(grid, values, u.t(), GhostState::Missing)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::Domain;

    fn disk_grid(h: f64) -> Arc<Grid> {
        Arc::new(Grid::classify(&Domain::disk(1.0, 0.5).unwrap(), h).unwrap())
    }

    #[test]
    fn coeff_examples() {
        assert_eq!(coeff([0.0, 0.0]).entries, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(coeff([1.0, 0.0]).entries, [[0.5, 0.0], [0.0, 1.0]]);
        let a = coeff([3.0, 4.0]).entries;
        let want = [[17.0 / 26.0, -12.0 / 26.0], [-12.0 / 26.0, 10.0 / 26.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let g = disk_grid(0.1);
        let u = Field::sample(&g, 0.0, |x| 3.0 * x[0] + 2.0 * x[1]).unwrap();
        for &k in g.active() {
            let p = gradient(&u, k);
            assert!((p[0] - 3.0).abs() < 1e-12 && (p[1] - 2.0).abs() < 1e-12);
        }
        let u = Field::sample(&g, 0.0, |x| x[0] * x[0]).unwrap();
        let k = g
            .active()
            .iter()
            .copied()
            .find(|&k| (g.point(k)[0] - 0.5).abs() < 1e-12 && g.point(k)[1] == 0.0)
            .unwrap();
        assert!((gradient(&u, k)[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_converges_at_second_order() {
        let err = |h: f64| {
            let g = disk_grid(h);
            let u = Field::sample(&g, 0.0, |x| (std::f64::consts::PI * x[0]).sin()).unwrap();
            g.active()
                .iter()
                .map(|&k| {
                    let x = g.point(k);
                    (gradient(&u, k)[0]
                        - std::f64::consts::PI * (std::f64::consts::PI * x[0]).cos())
                    .abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(0.04) / err(0.02);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn operator_examples() {
        let g = disk_grid(0.1);
        let zero = Forcing::zero();
        for f in [|_: Point| 1.7, |x: Point| 3.0 * x[0] + 2.0 * x[1]] {
            let u = Field::sample(&g, 0.0, f).unwrap();
            let r = apply_operator(&u, &zero, Parallelism::Serial).unwrap();
            assert!(r.sup_abs() < 1e-10);
        }
        let u = Field::sample(&g, 0.0, |x| x[0] * x[0] + x[1]).unwrap();
        let r = apply_operator(&u, &zero, Parallelism::Serial).unwrap();
        let k = g
            .active()
            .iter()
            .copied()
            .find(|&k| g.point(k) == [1.0, 0.0])
            .unwrap();
        assert!((r.get(k) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn operator_requires_ghosts() {
        let g = disk_grid(0.1);
        let u = Field::sample_active(&g, 0.0, |_| 0.0).unwrap();
        assert!(matches!(
            apply_operator(&u, &Forcing::zero(), Parallelism::Serial),
            Err(FlowError::State(_))
        ));
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let g = disk_grid(0.05);
        let u = Field::sample(&g, 0.0, |x| (2.0 * x[0]).sin() * (x[1] + 0.3).cos()).unwrap();
        let f = Forcing::linear_in_u(0.7);
        let a = apply_operator(&u, &f, Parallelism::Serial).unwrap();
        let b = apply_operator(&u, &f, Parallelism::Rayon).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
