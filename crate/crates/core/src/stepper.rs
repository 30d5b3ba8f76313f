//! Forward Euler time integration and the solver trace.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::{
    default_compatibility_tol, BoundaryDatum, BoundaryOperator, CompatibilityReport,
    ResidualStencil,
};
use crate::field::{Field, GhostState};
use crate::geometry::{Domain, Grid, NodeKind};
use crate::initial::InitialData;
use crate::operator::{apply_operator, gradient, Forcing, Parallelism};
use crate::{FlowError, Point, Result};

fn default_sigma() -> f64 {
    0.9
}
fn default_stride() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-3
}
fn default_window() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Lattice spacing.
    pub h: f64,
    /// Safety factor in `dt ≤ σ h² / (2n)`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub t_final: f64,
    /// Steps between recorded trace rows.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Store the full field every this many rows (initial and final are always stored).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_stride: Option<usize>,
    #[serde(default = "default_tol")]
    pub osc_tol: f64,
    #[serde(default = "default_tol")]
    pub grad_tol: f64,
    /// Consecutive converged rows required to stop early.
    #[serde(default = "default_window")]
    pub converge_window: usize,
    /// Distance from the boundary that defines the interior region; defaults to the band width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_margin: Option<f64>,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl SolverConfig {
    pub fn new(h: f64, t_final: f64) -> Self {
        SolverConfig {
            h,
            sigma: default_sigma(),
            t_final,
            snapshot_stride: default_stride(),
            field_stride: None,
            osc_tol: default_tol(),
            grad_tol: default_tol(),
            converge_window: default_window(),
            interior_margin: None,
            parallelism: Parallelism::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FlowError::Config(msg));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad(format!("sigma must lie in (0, 1], got {}", self.sigma));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.snapshot_stride == 0 || self.field_stride == Some(0) || self.converge_window == 0 {
            return bad("strides and the convergence window must be at least 1".into());
        }
        if !(self.osc_tol >= 0.0 && self.grad_tol >= 0.0) {
            return bad("convergence tolerances must be non-negative".into());
        }
        Ok(())
    }
}

/// Everything that defines the continuous problem.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub domain: Domain,
    pub forcing: Forcing,
    pub datum: BoundaryDatum,
    pub initial: InitialData,
}

/// The semi-discrete flow on a fixed grid.
#[derive(Clone, Debug)]
pub struct Flow {
    grid: Arc<Grid>,
    forcing: Forcing,
    boundary: BoundaryOperator,
    parallelism: Parallelism,
}

impl Flow {
    pub fn new(
        grid: &Arc<Grid>,
        forcing: Forcing,
        datum: BoundaryDatum,
        parallelism: Parallelism,
    ) -> Result<Self> {
        Ok(Flow {
            grid: Arc::clone(grid),
            boundary: BoundaryOperator::new(grid, datum)?,
            forcing,
            parallelism,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn boundary(&self) -> &BoundaryOperator {
        &self.boundary
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// `h² / (2n)`: the largest step for which the explicit update keeps
    /// non-negative weights (the largest eigenvalue of `a^ij` is 1).
    pub fn max_dt(&self) -> f64 {
        let h = self.grid.h();
        h * h / (2.0 * self.grid.dim() as f64)
    }

    /// Sample initial data on active and ghost nodes.
    pub fn sample(&self, u0: &InitialData) -> Result<Field> {
        Field::sample(&self.grid, 0.0, |x| u0.eval(x))
    }

    pub fn enforce(&self, u: &mut Field) -> Result<()> {
        self.boundary.enforce_in_place(u)
    }

    /// The instantaneous `u_t = Σ a^ij u_ij - f` of a field with ghost values.
    pub fn u_t(&self, u: &Field) -> Result<Field> {
        apply_operator(u, &self.forcing, self.parallelism)
    }

    /// One forward Euler step; the ghost layer of the result is re-enforced.
    pub fn step(&self, u: &Field, dt: f64) -> Result<Field> {
        if u.ghost_state() != GhostState::Enforced {
            return Err(FlowError::State(
                "step needs an enforced ghost layer".into(),
            ));
        }
        let ut = self.u_t(u)?;
        self.advance(u, &ut, dt, u.t() + dt)
    }

    fn advance(&self, u: &Field, ut: &Field, dt: f64, t: f64) -> Result<Field> {
        let bound = self.max_dt();
        if !(dt > 0.0 && dt <= bound * (1.0 + 1e-12)) {
            return Err(FlowError::Cfl { dt, bound });
        }
        let mut next = u.clone();
        let vals = next.values_mut();
        for &k in self.grid.active() {
            let v = u.get(k) + dt * ut.get(k);
            if !v.is_finite() {
                return Err(FlowError::Instability {
                    node: k,
                    point: self.grid.point(k),
                    t,
                });
            }
            vals[k] = v;
        }
        next.set_t(t);
        self.enforce(&mut next)?;
        Ok(next)
    }
}

/// Largest centred second difference along either axis over nodes whose
/// axis neighbours are active: an observed bound for `|D²u|`.
pub fn second_difference_bound(u: &Field) -> f64 {
    let grid = u.grid();
    let h2 = grid.h() * grid.h();
    let mut best: f64 = 0.0;
    for &k in grid.active() {
        for (di, dj) in [(1, 0), (0, 1)].into_iter().take(grid.dim()) {
            let (Some(a), Some(b)) = (grid.offset(k, di, dj), grid.offset(k, -di, -dj)) else {
                continue;
            };
            if grid.is_active(a) && grid.is_active(b) {
                best = best.max((u.get(a) - 2.0 * u.get(k) + u.get(b)).abs() / h2);
            }
        }
    }
    best
}

/// `sup |Du|` over all active nodes, the interior region `d ≥ margin` and the
/// band `d ≤ μ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSups {
    pub global: f64,
    pub interior: f64,
    pub band: f64,
}

pub fn gradient_sups(u: &Field, margin: f64) -> GradientSups {
    let grid = u.grid();
    let mu0 = grid.domain().band_width();
    let mut s = GradientSups {
        global: 0.0,
        interior: 0.0,
        band: 0.0,
    };
    for &k in grid.active() {
        let p = gradient(u, k);
        let g = p[0].hypot(p[1]);
        let d = grid.distance(k);
        s.global = s.global.max(g);
        if d >= margin {
            s.interior = s.interior.max(g);
        }
        if d <= mu0 {
            s.band = s.band.max(g);
        }
    }
    s
}

/// One recorded row of the trace. The CSV export writes these columns in order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub osc: f64,
    pub sup_du_global: f64,
    pub sup_du_interior: f64,
    pub sup_du_band: f64,
    pub sup_ut: f64,
    /// `max over [0, t] of sup |u - u0|`.
    pub m_t: f64,
    pub bdry_residual: f64,
    pub mean: f64,
}

/// The extremum of `u_t` sat on a boundary-adjacent node at a recorded step.
/// `signed_flux` is `sign(u_t) ∂(u_t)/∂γ` there; the boundary point lemma for
/// `ψ_u ≥ 0` data says it should not be negative beyond discretisation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfEvent {
    pub step: usize,
    pub t: f64,
    pub point: Point,
    pub sup_ut: f64,
    pub signed_flux: f64,
}

/// A stored field, packed as active then ghost values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub dt: f64,
    /// Steps actually taken.
    pub steps: usize,
    pub interior_margin: f64,
    pub compatibility: CompatibilityReport,
    pub compatibility_overridden: bool,
    /// Observed `sup |D²u0|`, used for the default compatibility tolerance.
    pub c2_observed: f64,
    pub rows: Vec<TraceRow>,
    /// `sup |u_t|` at every step, including the final state.
    pub sup_ut_steps: Vec<f64>,
    pub hopf: Vec<HopfEvent>,
    pub snapshots: Vec<Snapshot>,
    /// Time at which the convergence detector fired.
    pub converged_at: Option<f64>,
    /// The initial data were an exact stationary point.
    pub stationary: bool,
}

impl SolverTrace {
    pub fn first_row(&self) -> &TraceRow {
        &self.rows[0]
    }

    pub fn last_row(&self) -> &TraceRow {
        self.rows.last().expect("trace has at least one row")
    }

    pub fn field(&self, grid: &Arc<Grid>, i: usize) -> Result<Field> {
        let s = self
            .snapshots
            .get(i)
            .ok_or_else(|| FlowError::Schema(format!("trace has no snapshot {i}")))?;
        Field::unpack(grid, &s.values, s.t)
    }

    pub fn initial_field(&self, grid: &Arc<Grid>) -> Result<Field> {
        self.field(grid, 0)
    }

    pub fn final_field(&self, grid: &Arc<Grid>) -> Result<Field> {
        self.field(grid, self.snapshots.len() - 1)
    }

    /// Structural sanity: increasing times, finite scalars, consistent lengths.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FlowError::Schema(m.into()));
        if self.rows.is_empty() || self.snapshots.is_empty() {
            return bad("trace has no rows or snapshots");
        }
        if self.sup_ut_steps.len() != self.steps + 1 {
            return bad("per-step series does not match the step count");
        }
        if self.rows.windows(2).any(|w| w[1].t <= w[0].t) {
            return bad("row times are not strictly increasing");
        }
        let finite = self.rows.iter().all(|r| {
            [
                r.t,
                r.osc,
                r.sup_du_global,
                r.sup_du_interior,
                r.sup_du_band,
                r.sup_ut,
                r.m_t,
                r.bdry_residual,
                r.mean,
            ]
            .iter()
            .all(|v| v.is_finite())
        });
        if !finite || !self.sup_ut_steps.iter().all(|v| v.is_finite()) {
            return bad("trace carries non-finite values");
        }
        Ok(())
    }
}

/// `u_t` of stored snapshot `i`.
pub fn u_t_field(flow: &Flow, trace: &SolverTrace, i: usize) -> Result<Field> {
    flow.u_t(&trace.field(flow.grid(), i)?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Run even if the initial data fail the compatibility check.
    pub override_compatibility: bool,
    /// Replaces `10 h² (1 + sup |D²u0|)`.
    pub compatibility_tol: Option<f64>,
}

/// Integrate `problem` to `t_final` or until the convergence detector fires.
pub fn run(problem: &FlowProblem, config: &SolverConfig, opts: RunOptions) -> Result<SolverTrace> {
    config.validate()?;
    let grid = Arc::new(Grid::classify(&problem.domain, config.h)?);
    let flow = Flow::new(
        &grid,
        problem.forcing.clone(),
        problem.datum.clone(),
        config.parallelism,
    )?;
    run_flow(&flow, &problem.initial, config, opts)
}

/// [`run`] on an already assembled flow.
pub fn run_flow(
    flow: &Flow,
    initial: &InitialData,
    config: &SolverConfig,
    opts: RunOptions,
) -> Result<SolverTrace> {
    config.validate()?;
    let grid = flow.grid();
    let u0 = flow.sample(initial)?;
    let c2_observed = second_difference_bound(&u0);
    let tol = opts
        .compatibility_tol
        .unwrap_or_else(|| default_compatibility_tol(grid.h(), c2_observed));
    let compatibility = flow.boundary().check_compatibility(&u0, tol);
    if !compatibility.pass && !opts.override_compatibility {
        return Err(FlowError::Config(format!(
            "initial data violate the boundary condition: residual {:.3e} at ({:.4}, {:.4}) exceeds {:.3e}",
            compatibility.max_residual,
            compatibility.worst_foot[0],
            compatibility.worst_foot[1],
            tol
        )));
    }

    let margin = config
        .interior_margin
        .unwrap_or_else(|| grid.domain().band_width());
    let steps_total = (config.t_final / (config.sigma * flow.max_dt())).ceil() as usize;
    let dt = config.t_final / steps_total as f64;

    let mut u = u0.clone();
    flow.enforce(&mut u)?;
    let mut trace = SolverTrace {
        dt,
        steps: 0,
        interior_margin: margin,
        compatibility,
        compatibility_overridden: opts.override_compatibility,
        c2_observed,
        rows: Vec::new(),
        sup_ut_steps: Vec::with_capacity(steps_total + 1),
        hopf: Vec::new(),
        snapshots: Vec::new(),
        converged_at: None,
        stationary: false,
    };
    let mut m_t: f64 = 0.0;
    let mut streak = 0;
    let mut k = 0;
    loop {
        let ut = flow.u_t(&u)?;
        let sup_ut = ut.sup_abs();
        trace.sup_ut_steps.push(sup_ut);
        let recording = k % config.snapshot_stride == 0 || k == steps_total;
        let mut stop = k == steps_total;
        if recording {
            m_t = m_t.max(u.sup_diff(&u0));
            let g = gradient_sups(&u, margin);
            let row = TraceRow {
                step: k,
                t: u.t(),
                osc: u.osc(),
                sup_du_global: g.global,
                sup_du_interior: g.interior,
                sup_du_band: g.band,
                sup_ut,
                m_t,
                bdry_residual: flow
                    .boundary()
                    .flux_residual(&u, ResidualStencil::NextOrder)?,
                mean: u.mean(),
            };
            let row_index = trace.rows.len();
            trace.rows.push(row);
            if k == 0 && sup_ut == 0.0 {
                trace.stationary = true;
                trace.converged_at = Some(0.0);
                stop = true;
            } else if row.osc < config.osc_tol && row.sup_du_global < config.grad_tol {
                streak += 1;
                if streak >= config.converge_window {
                    trace.converged_at = Some(u.t());
                    stop = true;
                }
            } else {
                streak = 0;
            }
            let keep = row_index == 0
                || config
                    .field_stride
                    .is_some_and(|s| row_index.is_multiple_of(s));
            if keep && !stop {
                trace.snapshots.push(Snapshot {
                    step: k,
                    t: u.t(),
                    values: u.packed(),
                });
            }
        }
        if stop {
            trace.snapshots.push(Snapshot {
                step: k,
                t: u.t(),
                values: u.packed(),
            });
            trace.steps = k;
            return Ok(trace);
        }
        let next = flow.advance(&u, &ut, dt, (k + 1) as f64 * dt)?;
        if recording {
            if let Some(ev) = hopf_event(flow, &u, &ut, &next, dt, k) {
                trace.hopf.push(ev);
            }
        }
        u = next;
        k += 1;
    }
}

/// If `|u_t|` peaks on a boundary-adjacent node, the signed normal derivative
/// of `u_t` there. Ghost values of `u_t` are the rate of change of the
/// enforced ghost values over the step.
fn hopf_event(
    flow: &Flow,
    u: &Field,
    ut: &Field,
    next: &Field,
    dt: f64,
    step: usize,
) -> Option<HopfEvent> {
    let grid = flow.grid();
    let (&k, sup) = grid
        .active()
        .iter()
        .map(|k| (k, ut.get(*k).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if sup == 0.0 || grid.kind(k) != NodeKind::BoundaryAdjacent {
        return None;
    }
    let mut vals = ut.values().to_vec();
    for gh in grid.ghosts() {
        vals[gh.node] = (next.get(gh.node) - u.get(gh.node)) / dt;
    }
    let full = Field::from_values(grid, vals, u.t(), GhostState::Enforced).ok()?;
    let p = gradient(&full, k);
    let gamma = grid.domain().project(grid.point(k)).gamma;
    let flux = p[0] * gamma[0] + p[1] * gamma[1];
    Some(HopfEvent {
        step,
        t: u.t(),
        point: grid.point(k),
        sup_ut: sup,
        signed_flux: ut.get(k).signum() * flux,
    })
}
