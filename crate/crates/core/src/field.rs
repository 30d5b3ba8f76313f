//! Grid functions.

use std::sync::Arc;

use crate::geometry::{Grid, NodeKind};
use crate::{FlowError, Point, Result};

/// Where the values on ghost nodes came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhostState {
    /// Ghost values are not meaningful; stencils touching them must not run.
    Missing,
    /// Sampled from a function defined beyond the boundary.
    Sampled,
    /// Solved from a boundary datum.
    Enforced,
}

/// Scalar values on the active and ghost nodes of a grid, with a time stamp.
///
/// Values are stored for the whole lattice; entries on exterior nodes are zero
/// and never read.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    t: f64,
    ghosts: GhostState,
}

impl Field {
    /// Sample `f` on active and ghost nodes.
    pub fn sample(grid: &Arc<Grid>, t: f64, f: impl Fn(Point) -> f64) -> Result<Field> {
        let mut values = vec![0.0; grid.len()];
        for (k, v) in values.iter_mut().enumerate() {
            if grid.kind(k) != NodeKind::Exterior {
                *v = f(grid.point(k));
            }
        }
        Field::from_values(grid, values, t, GhostState::Sampled)
    }

    /// Sample `f` on active nodes only; ghost values are left missing.
    pub fn sample_active(grid: &Arc<Grid>, t: f64, f: impl Fn(Point) -> f64) -> Result<Field> {
        let mut values = vec![0.0; grid.len()];
        for &k in grid.active() {
            values[k] = f(grid.point(k));
        }
        Field::from_values(grid, values, t, GhostState::Missing)
    }

    /// Wrap a full-lattice value vector. Rejects non-finite values on the
    /// nodes that matter for `ghosts`.
    pub fn from_values(
        grid: &Arc<Grid>,
        values: Vec<f64>,
        t: f64,
        ghosts: GhostState,
    ) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(FlowError::State(format!(
                "field has {} values for a lattice of {}",
                values.len(),
                grid.len()
            )));
        }
        let check_ghosts = ghosts != GhostState::Missing;
        for (k, v) in values.iter().enumerate() {
            let kind = grid.kind(k);
            let relevant = kind.is_active() || (check_ghosts && kind == NodeKind::Ghost);
            if relevant && !v.is_finite() {
                return Err(FlowError::State(format!(
                    "non-finite value {v} at node {k} ({:?})",
                    grid.point(k)
                )));
            }
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
            t,
            ghosts,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn ghost_state(&self) -> GhostState {
        self.ghosts
    }

    pub(crate) fn set_ghost_state(&mut self, s: GhostState) {
        self.ghosts = s;
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Values on active nodes followed by ghost nodes, in lattice order.
    pub fn packed(&self) -> Vec<f64> {
        let g = &self.grid;
        g.active()
            .iter()
            .copied()
            .chain(g.ghosts().iter().map(|gh| gh.node))
            .map(|k| self.values[k])
            .collect()
    }

    /// Inverse of [`Field::packed`].
    pub fn unpack(grid: &Arc<Grid>, packed: &[f64], t: f64) -> Result<Field> {
        let expected = grid.active().len() + grid.ghosts().len();
        if packed.len() != expected {
            return Err(FlowError::Schema(format!(
                "snapshot carries {} values, grid expects {expected}",
                packed.len()
            )));
        }
        let mut values = vec![0.0; grid.len()];
        let nodes = grid
            .active()
            .iter()
            .copied()
            .chain(grid.ghosts().iter().map(|gh| gh.node));
        for (k, &v) in nodes.zip(packed) {
            values[k] = v;
        }
        Field::from_values(grid, values, t, GhostState::Enforced)
    }

    fn active_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.active().iter().map(|&k| self.values[k])
    }

    pub fn max(&self) -> f64 {
        self.active_values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.active_values().fold(f64::INFINITY, f64::min)
    }

    /// `max u - min u` over active nodes.
    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sup_abs(&self) -> f64 {
        self.active_values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Arithmetic mean over active nodes.
    pub fn mean(&self) -> f64 {
        let n = self.grid.active().len() as f64;
        self.active_values().sum::<f64>() / n
    }

    /// `max |u - other|` over active nodes.
    pub fn sup_diff(&self, other: &Field) -> f64 {
        self.grid
            .active()
            .iter()
            .map(|&k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn rejects_non_finite() {
        let g = Arc::new(Grid::classify(&Domain::disk(1.0, 0.5).unwrap(), 0.1).unwrap());
        assert!(Field::sample(&g, 0.0, |x| 1.0 / x[0]).is_err());
        let f = Field::sample(&g, 0.0, |x| x[0] + 2.0 * x[1]).unwrap();
        assert!((f.osc() - 2.0 * 5f64.sqrt()).abs() < 0.2);
        let back = Field::unpack(&g, &f.packed(), 0.0).unwrap();
        assert_eq!(back.values(), f.values());
    }
}
