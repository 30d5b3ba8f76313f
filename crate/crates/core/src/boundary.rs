//! Ghost-node enforcement of the boundary datum.
//!
//! Each ghost node `G` lies on the inward normal line through its foot point
//! `B`, at parameter `s = -δ` (`s` is arc length from `B` along `γ`). Sample
//! points are taken where that line crosses successive lattice lines of the
//! axis most aligned with `γ`, starting at the first crossing with `s ≥ δ`; the
//! value there is a 3-point quadratic interpolant along the crossing lattice
//! line. The normal derivative at `B` is the derivative at `s = 0` of the
//! quadratic through the ghost and the first two samples, which is second order
//! in `h`. Solving that relation for the ghost value enforces the datum; when
//! the first sample sits at the mirror image of `G` the rule reduces to plain
//! reflection.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::field::{Field, GhostState};
use crate::geometry::{Domain, Grid, NodeKind};
use crate::lagrange;
use crate::operator::{gradient, gradient_reads_ghosts};
use crate::{FlowError, Point, Result};

type PsiFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Named boundary-datum presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum BoundarySpec {
    /// `ψ ≡ 0`.
    Zero,
    /// `ψ ≡ c`.
    Constant { c: f64 },
    /// `ψ = c z` with `c ≥ 0`.
    CapillaryLike { c: f64 },
    /// `u_γ = φ v` with `φ` a truncated Fourier series in the boundary angle.
    ContactAngle {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        /// Declared `φ₀ < 1` with `|φ| ≤ φ₀`; defaults to the sampled sup.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi0: Option<f64>,
    },
}

/// `φ(θ) = constant + Σ_k cos[k-1] cos kθ + sin[k-1] sin kθ`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct FourierSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn eval(&self, theta: f64) -> f64 {
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * theta).cos())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * ((k + 1) as f64 * theta).sin())
            .sum();
        self.constant + c + s
    }

    /// Mean over one period.
    pub fn mean(&self) -> f64 {
        self.constant
    }
}

/// Neumann data `∂u/∂γ = ψ(x, u)`.
#[derive(Clone)]
pub struct Psi {
    name: String,
    value: PsiFn,
    dz: PsiFn,
}

impl Psi {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
        dz: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Psi {
            name: name.into(),
            value: Arc::new(value),
            dz: Arc::new(dz),
        }
    }

    pub fn value(&self, x: Point, z: f64) -> f64 {
        (self.value)(x, z)
    }

    pub fn dz(&self, x: Point, z: f64) -> f64 {
        (self.dz)(x, z)
    }
}

/// Either Neumann data `ψ(x, u)` or a contact-angle function `φ` on the boundary.
#[derive(Clone)]
pub enum BoundaryDatum {
    Neumann(Psi),
    ContactAngle {
        phi: FourierSeries,
        phi0: Option<f64>,
    },
}

impl std::fmt::Debug for BoundaryDatum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryDatum::Neumann(p) => write!(f, "Neumann({})", p.name),
            BoundaryDatum::ContactAngle { phi, phi0 } => {
                write!(f, "ContactAngle({phi:?}, φ₀ = {phi0:?})")
            }
        }
    }
}

impl BoundaryDatum {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        BoundaryDatum::Neumann(Psi::new(
            format!("constant(c={c})"),
            move |_, _| c,
            |_, _| 0.0,
        ))
    }

    pub fn capillary_like(c: f64) -> Self {
        BoundaryDatum::Neumann(Psi::new(
            format!("capillary-like(c={c})"),
            move |_, z| c * z,
            move |_, _| c,
        ))
    }

    pub fn contact_angle(phi: FourierSeries, phi0: Option<f64>) -> Self {
        BoundaryDatum::ContactAngle { phi, phi0 }
    }

    pub fn from_spec(spec: &BoundarySpec) -> Result<Self> {
        Ok(match spec {
            BoundarySpec::Zero => Self::zero(),
            BoundarySpec::Constant { c } => Self::constant(*c),
            BoundarySpec::CapillaryLike { c } => {
                if *c < 0.0 {
                    return Err(FlowError::Config(format!(
                        "capillary-like coefficient must be ≥ 0, got {c}"
                    )));
                }
                Self::capillary_like(*c)
            }
            BoundarySpec::ContactAngle {
                constant,
                cos,
                sin,
                phi0,
            } => Self::contact_angle(
                FourierSeries {
                    constant: *constant,
                    cos: cos.clone(),
                    sin: sin.clone(),
                },
                *phi0,
            ),
        })
    }

    pub fn psi(&self) -> Option<&Psi> {
        match self {
            BoundaryDatum::Neumann(p) => Some(p),
            BoundaryDatum::ContactAngle { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            BoundaryDatum::Neumann(p) => p.name.clone(),
            BoundaryDatum::ContactAngle { .. } => "contact-angle".into(),
        }
    }

    /// Sample the datum over the boundary (and `z ∈ [-m0, m0]`) and check its
    /// declared bounds.
    pub fn validate(&self, domain: &Domain, m0: f64) -> Result<DatumReport> {
        let feet = domain.boundary_samples(256);
        let zs: Vec<f64> = (0..9).map(|k| -m0 + 2.0 * m0 * k as f64 / 8.0).collect();
        match self {
            BoundaryDatum::Neumann(psi) => {
                let mut report = DatumReport {
                    sup_psi: 0.0,
                    min_psi_z: f64::INFINITY,
                    sup_psi_z: 0.0,
                    psi_z_nonnegative: true,
                    sup_phi: None,
                    phi0: None,
                    phi_mean: None,
                };
                // ψ is evaluated on the boundary and at the domain center
                let mut points = feet;
                points.push(domain.center());
                for &x in &points {
                    for &z in &zs {
                        let v = psi.value(x, z);
                        let dz = psi.dz(x, z);
                        if !v.is_finite() || !dz.is_finite() {
                            return Err(FlowError::Datum(format!(
                                "ψ not finite at {x:?}, z = {z}"
                            )));
                        }
                        report.sup_psi = report.sup_psi.max(v.abs());
                        report.min_psi_z = report.min_psi_z.min(dz);
                        report.sup_psi_z = report.sup_psi_z.max(dz.abs());
                    }
                }
                report.psi_z_nonnegative = report.min_psi_z >= -1e-12;
                Ok(report)
            }
            BoundaryDatum::ContactAngle { phi, phi0 } => {
                let sup = (0..1024)
                    .map(|k| phi.eval(TAU * k as f64 / 1024.0).abs())
                    .fold(0.0, f64::max);
                let bound = phi0.unwrap_or(sup);
                if bound >= 1.0 || sup >= 1.0 {
                    return Err(FlowError::Datum(format!(
                        "contact-angle data needs sup|φ| ≤ φ₀ < 1, got sup {sup}, φ₀ {bound}"
                    )));
                }
                if sup > bound + 1e-12 {
                    return Err(FlowError::Datum(format!(
                        "sampled sup|φ| = {sup} exceeds declared φ₀ = {bound}"
                    )));
                }
                Ok(DatumReport {
                    sup_psi: 0.0,
                    min_psi_z: 0.0,
                    sup_psi_z: 0.0,
                    psi_z_nonnegative: true,
                    sup_phi: Some(sup),
                    phi0: Some(bound),
                    phi_mean: Some(phi.mean()),
                })
            }
        }
    }
}

/// Sampled properties of a boundary datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatumReport {
    /// `|ψ|_{C⁰}` over boundary samples and `z ∈ [-M₀, M₀]`.
    pub sup_psi: f64,
    pub min_psi_z: f64,
    pub sup_psi_z: f64,
    pub psi_z_nonnegative: bool,
    pub sup_phi: Option<f64>,
    pub phi0: Option<f64>,
    pub phi_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
struct Sample {
    s: f64,
    nodes: Vec<(usize, f64)>,
}

impl Sample {
    /// Interpolated value, written relative to the middle node so that
    /// constants are reproduced exactly.
    fn eval(&self, u: &[f64]) -> f64 {
        let base = u[self.nodes[self.nodes.len() / 2].0];
        base + self
            .nodes
            .iter()
            .map(|&(k, w)| w * (u[k] - base))
            .sum::<f64>()
    }
}

/// Geometry and weights for one ghost node.
#[derive(Clone, Debug)]
struct GhostStencil {
    node: usize,
    foot: Point,
    normal: Point,
    samples: [Sample; 3],
    /// Derivative/value weights at `s = 0` for (ghost, sample 1, sample 2).
    deriv: [f64; 3],
    value: [f64; 3],
    /// Cubic weights for (ghost, sample 1, sample 2, sample 3).
    deriv_next: [f64; 4],
    value_next: [f64; 4],
    /// Weights over ghost-free active nodes whose gradients, combined, give
    /// `Du` at the foot point (exact for affine gradient fields).
    slope_nodes: Vec<(usize, f64)>,
    /// `φ(B)` for contact-angle data.
    phi: f64,
}

/// Ghost values and boundary residuals after enforcement.
#[derive(Clone, Debug, PartialEq)]
pub struct GhostLayer {
    pub entries: Vec<GhostEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhostEntry {
    pub node: usize,
    pub foot: Point,
    pub normal: Point,
    pub value: f64,
    /// `|discrete u_γ - datum|` at the foot point.
    pub residual: f64,
}

impl GhostLayer {
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

/// Which one-sided normal-derivative formula measures the boundary residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualStencil {
    /// The quadratic used for enforcement; zero up to rounding after `enforce`.
    Enforcing,
    /// The cubic through one more sample; `O(h²)` on enforced smooth data.
    NextOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub max_residual: f64,
    pub worst_foot: Point,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Boundary datum bound to a grid, with precomputed ghost stencils.
#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    grid: Arc<Grid>,
    datum: BoundaryDatum,
    stencils: Vec<GhostStencil>,
}

impl BoundaryOperator {
    pub fn new(grid: &Arc<Grid>, datum: BoundaryDatum) -> Result<Self> {
        if let BoundaryDatum::ContactAngle { .. } = datum {
            datum.validate(grid.domain(), 1.0)?;
        }
        let stencils = grid
            .ghosts()
            .iter()
            .map(|gh| build_stencil(grid, &datum, gh.node, gh.foot, gh.normal, gh.depth))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundaryOperator {
            grid: Arc::clone(grid),
            datum,
            stencils,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn datum(&self) -> &BoundaryDatum {
        &self.datum
    }

    fn tangential_slope2(&self, u: &Field, st: &GhostStencil) -> f64 {
        let mut p = [0.0; 2];
        for &(k, w) in &st.slope_nodes {
            let g = gradient(u, k);
            p[0] += w * g[0];
            p[1] += w * g[1];
        }
        let n = st.normal;
        let along = p[0] * n[0] + p[1] * n[1];
        let t = [p[0] - along * n[0], p[1] - along * n[1]];
        t[0] * t[0] + t[1] * t[1]
    }

    fn solve_ghost(&self, u: &Field, st: &GhostStencil) -> f64 {
        // Unknown is the offset e = ghost - u1; the weights sum to 0 (derivative)
        // and 1 (value), so constants give e = 0 exactly.
        let vals = u.values();
        let u1 = st.samples[0].eval(vals);
        let u2 = st.samples[1].eval(vals);
        let [d0, _, d2] = st.deriv;
        let [v0, _, v2] = st.value;
        let known = d2 * (u2 - u1);
        let e = match &self.datum {
            BoundaryDatum::ContactAngle { .. } => {
                let phi = st.phi;
                let target =
                    phi * ((1.0 + self.tangential_slope2(u, st)) / (1.0 - phi * phi)).sqrt();
                (target - known) / d0
            }
            BoundaryDatum::Neumann(psi) => {
                let rest = u1 + v2 * (u2 - u1);
                let mut e = (psi.value(st.foot, u1) - known) / d0;
                for _ in 0..50 {
                    let z = rest + v0 * e;
                    let residual = d0 * e + known - psi.value(st.foot, z);
                    if residual == 0.0 {
                        break;
                    }
                    let slope = d0 - psi.dz(st.foot, z) * v0;
                    let step = residual / slope;
                    e -= step;
                    if step.abs() <= 4.0 * f64::EPSILON * (1.0 + e.abs()) {
                        break;
                    }
                }
                e
            }
        };
        u1 + e
    }

    /// Solve every ghost value from the datum and write it into `u`.
    pub fn enforce_in_place(&self, u: &mut Field) -> Result<()> {
        self.check_grid(u)?;
        let solved: Vec<f64> = self
            .stencils
            .iter()
            .map(|st| self.solve_ghost(u, st))
            .collect();
        for (st, g) in self.stencils.iter().zip(solved) {
            if !g.is_finite() {
                return Err(FlowError::Instability {
                    node: st.node,
                    point: self.grid.point(st.node),
                    t: u.t(),
                });
            }
            u.values_mut()[st.node] = g;
        }
        u.set_ghost_state(GhostState::Enforced);
        Ok(())
    }

    /// Enforce the datum and return the resulting ghost layer.
    pub fn enforce(&self, u: &mut Field) -> Result<GhostLayer> {
        self.enforce_in_place(u)?;
        Ok(self.layer(u, ResidualStencil::Enforcing))
    }

    fn check_grid(&self, u: &Field) -> Result<()> {
        if !Arc::ptr_eq(u.grid(), &self.grid) {
            return Err(FlowError::State("field lives on a different grid".into()));
        }
        Ok(())
    }

    /// Discrete normal derivative at the foot point and the datum it should match.
    fn derivative_and_target(
        &self,
        u: &Field,
        st: &GhostStencil,
        which: ResidualStencil,
    ) -> (f64, f64) {
        let vals = u.values();
        let g = vals[st.node];
        let s: Vec<f64> = st.samples.iter().map(|s| s.eval(vals)).collect();
        // offsets from the first sample, as in `solve_ghost`
        let (e, e2, e3) = (g - s[0], s[1] - s[0], s[2] - s[0]);
        let (du, ub) = match which {
            ResidualStencil::Enforcing => (
                st.deriv[0] * e + st.deriv[2] * e2,
                s[0] + st.value[0] * e + st.value[2] * e2,
            ),
            ResidualStencil::NextOrder => (
                st.deriv_next[0] * e + st.deriv_next[2] * e2 + st.deriv_next[3] * e3,
                s[0] + st.value_next[0] * e + st.value_next[2] * e2 + st.value_next[3] * e3,
            ),
        };
        let target = match &self.datum {
            BoundaryDatum::Neumann(psi) => psi.value(st.foot, ub),
            BoundaryDatum::ContactAngle { .. } => {
                st.phi * (1.0 + self.tangential_slope2(u, st) + du * du).sqrt()
            }
        };
        (du, target)
    }

    fn layer(&self, u: &Field, which: ResidualStencil) -> GhostLayer {
        GhostLayer {
            entries: self
                .stencils
                .iter()
                .map(|st| {
                    let (du, target) = self.derivative_and_target(u, st, which);
                    GhostEntry {
                        node: st.node,
                        foot: st.foot,
                        normal: st.normal,
                        value: u.get(st.node),
                        residual: (du - target).abs(),
                    }
                })
                .collect(),
        }
    }

    /// Sup-norm of the boundary residual of `u` with its current ghost values.
    pub fn flux_residual(&self, u: &Field, which: ResidualStencil) -> Result<f64> {
        self.check_grid(u)?;
        if u.ghost_state() == GhostState::Missing {
            return Err(FlowError::State("ghost values missing".into()));
        }
        Ok(self.layer(u, which).max_residual())
    }

    /// Residual of the initial data against the datum, using the values the
    /// data carries on ghost nodes.
    pub fn check_compatibility(&self, u0: &Field, tol: f64) -> CompatibilityReport {
        if u0.ghost_state() == GhostState::Missing || !Arc::ptr_eq(u0.grid(), &self.grid) {
            return CompatibilityReport {
                max_residual: f64::INFINITY,
                worst_foot: [0.0; 2],
                tolerance: tol,
                pass: false,
                note: Some("initial data carries no values beyond the boundary".into()),
            };
        }
        let layer = self.layer(u0, ResidualStencil::Enforcing);
        let worst = layer
            .entries
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
            .copied();
        let (max_residual, worst_foot) = worst.map_or((0.0, [0.0; 2]), |e| (e.residual, e.foot));
        CompatibilityReport {
            max_residual,
            worst_foot,
            tolerance: tol,
            pass: max_residual <= tol,
            note: None,
        }
    }

    /// Discrete `u_γ` at every ghost foot point, with the foot point.
    pub fn normal_derivatives(&self, u: &Field) -> Vec<(Point, f64)> {
        self.stencils
            .iter()
            .map(|st| {
                (
                    st.foot,
                    self.derivative_and_target(u, st, ResidualStencil::Enforcing)
                        .0,
                )
            })
            .collect()
    }

    /// `(u_γ, φ, |D'u|²)` at each foot point (contact-angle data only).
    pub fn contact_angle_terms(&self, u: &Field) -> Vec<(f64, f64, f64)> {
        self.stencils
            .iter()
            .map(|st| {
                let (du, _) = self.derivative_and_target(u, st, ResidualStencil::Enforcing);
                (du, st.phi, self.tangential_slope2(u, st))
            })
            .collect()
    }
}

/// Default compatibility tolerance `10 h² (1 + C²-bound of u0)`.
pub fn default_compatibility_tol(h: f64, c2_bound: f64) -> f64 {
    10.0 * h * h * (1.0 + c2_bound)
}

fn build_stencil(
    grid: &Grid,
    datum: &BoundaryDatum,
    node: usize,
    foot: Point,
    normal: Point,
    depth: f64,
) -> Result<GhostStencil> {
    let h = grid.h();
    let ghost_at = grid.point(node);
    let two_d = grid.dim() == 2;
    let major = if two_d && normal[1].abs() > normal[0].abs() {
        1
    } else {
        0
    };
    let minor = 1 - major;
    let step = h / normal[major].abs();
    let dir = if normal[major] < 0.0 { -1isize } else { 1 };
    let (gi, gj) = grid.coords(node);
    let g_major = if major == 0 { gi } else { gj } as isize;

    let mut samples: Vec<Sample> = Vec::with_capacity(3);
    for k in 1..=12isize {
        if samples.len() == 3 {
            break;
        }
        let s = k as f64 * step - depth;
        if s < depth {
            continue;
        }
        let line = g_major + k * dir;
        if line < 0 {
            break;
        }
        let line = line as usize;
        if !two_d {
            let Some(n) = grid.offset(node, k * dir, 0).filter(|&n| grid.is_active(n)) else {
                break;
            };
            samples.push(Sample {
                s,
                nodes: vec![(n, 1.0)],
            });
            continue;
        }
        let x = [
            ghost_at[0] + (s + depth) * normal[0],
            ghost_at[1] + (s + depth) * normal[1],
        ];
        let t = grid.lattice_coords(x)[minor];
        let center = t.round() as isize;
        let toward = if t >= center as f64 { 1 } else { -1 };
        let mut found = None;
        for c in [center, center + toward, center - toward] {
            let ids: Option<Vec<usize>> = (-1..=1)
                .map(|o| {
                    let m = c + o;
                    if m < 0 {
                        return None;
                    }
                    let (i, j) = if major == 0 {
                        (line, m as usize)
                    } else {
                        (m as usize, line)
                    };
                    let (nx, ny) = grid.shape();
                    (i < nx && j < ny)
                        .then(|| grid.index(i, j))
                        .filter(|&n| grid.is_active(n))
                })
                .collect();
            if let Some(ids) = ids {
                let at: Vec<f64> = (-1..=1).map(|o| (c + o) as f64).collect();
                let w = lagrange::value_weights(&at, t);
                found = Some(Sample {
                    s,
                    nodes: ids.into_iter().zip(w).collect(),
                });
                break;
            }
        }
        if let Some(sample) = found {
            samples.push(sample);
        }
    }
    let samples: [Sample; 3] = samples.try_into().map_err(|_| {
        FlowError::Resolution(format!(
            "no interior interpolation stencil along the normal of ghost node {node} at {ghost_at:?}"
        ))
    })?;

    let s3 = [-depth, samples[0].s, samples[1].s];
    let s4 = [-depth, samples[0].s, samples[1].s, samples[2].s];
    let arr3 = |v: Vec<f64>| [v[0], v[1], v[2]];
    let arr4 = |v: Vec<f64>| [v[0], v[1], v[2], v[3]];

    let mut candidates: Vec<usize> = (-3isize..=3)
        .flat_map(|dj| (-3isize..=3).map(move |di| (di, dj)))
        .filter(|&(_, dj)| two_d || dj == 0)
        .filter_map(|(di, dj)| grid.offset(node, di, dj))
        .filter(|&n| grid.is_active(n) && !gradient_reads_ghosts(grid, n))
        .collect();
    candidates.sort_by(|&a, &b| {
        let da = dist2(grid.point(a), foot);
        let db = dist2(grid.point(b), foot);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let Some(&nearest) = candidates.first() else {
        return Err(FlowError::Resolution(format!(
            "no ghost-free gradient node near ghost {node}"
        )));
    };
    let slope_nodes = if two_d {
        extrapolation_weights(grid, &candidates[..candidates.len().min(6)], foot)
            .unwrap_or_else(|| vec![(nearest, 1.0)])
    } else {
        vec![(nearest, 1.0)]
    };
    debug_assert!(grid.kind(node) == NodeKind::Ghost);

    let phi = match datum {
        BoundaryDatum::ContactAngle { phi, .. } => phi.eval(grid.domain().boundary_parameter(foot)),
        BoundaryDatum::Neumann(_) => 0.0,
    };

    Ok(GhostStencil {
        node,
        foot,
        normal,
        deriv: arr3(lagrange::derivative_weights(&s3, 0.0)),
        value: arr3(lagrange::value_weights(&s3, 0.0)),
        deriv_next: arr4(lagrange::derivative_weights(&s4, 0.0)),
        value_next: arr4(lagrange::value_weights(&s4, 0.0)),
        samples,
        slope_nodes,
        phi,
    })
}

/// Minimum-norm weights `w` over `nodes` with `Σ w = 1` and
/// `Σ w (x - target) = 0`, so that `Σ w g(x)` reproduces any affine `g` at
/// `target`. `None` when the nodes are collinear.
fn extrapolation_weights(grid: &Grid, nodes: &[usize], target: Point) -> Option<Vec<(usize, f64)>> {
    let h = grid.h();
    let rows: Vec<[f64; 3]> = nodes
        .iter()
        .map(|&n| {
            let x = grid.point(n);
            [1.0, (x[0] - target[0]) / h, (x[1] - target[1]) / h]
        })
        .collect();
    let mut m = [[0.0; 3]; 3];
    for r in &rows {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
        }
    }
    // y = M⁻¹ e₁ from the first column of the adjugate
    let cof = |i: usize, j: usize| {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let (c, d) = ((j + 1) % 3, (j + 2) % 3);
        m[a][c] * m[b][d] - m[a][d] * m[b][c]
    };
    let det = m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2);
    if det.abs() < 1e-9 * rows.len().pow(3) as f64 {
        return None;
    }
    let y = [cof(0, 0) / det, cof(0, 1) / det, cof(0, 2) / det];
    Some(
        nodes
            .iter()
            .zip(&rows)
            .map(|(&n, r)| (n, r[0] * y[0] + r[1] * y[1] + r[2] * y[2]))
            .collect(),
    )
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn interval_grid() -> Arc<Grid> {
        Arc::new(Grid::classify(&Domain::interval(0.0, 1.0, 0.25).unwrap(), 0.05).unwrap())
    }

    fn disk_grid(h: f64) -> Arc<Grid> {
        Arc::new(Grid::classify(&Domain::disk(1.0, 0.5).unwrap(), h).unwrap())
    }

    #[test]
    fn zero_flux_mirrors_in_one_dimension() {
        let g = interval_grid();
        let bc = BoundaryOperator::new(&g, BoundaryDatum::zero()).unwrap();
        let mut u = Field::sample_active(&g, 0.0, |x| (3.0 * x[0]).sin() + x[0] * x[0]).unwrap();
        bc.enforce(&mut u).unwrap();
        let left_ghost = g.ghosts().iter().find(|gh| gh.foot[0] == 0.0).unwrap().node;
        let right_of_left = g.offset(left_ghost, 2, 0).unwrap();
        assert!((g.point(right_of_left)[0] - 0.05).abs() < 1e-15);
        assert_eq!(u.get(left_ghost), u.get(right_of_left));
    }

    #[test]
    fn contact_angle_with_zero_phi_is_zero_flux() {
        let g = disk_grid(0.05);
        let mut a = Field::sample_active(&g, 0.0, |x| (x[0] - 0.3 * x[1]).sin()).unwrap();
        let mut b = a.clone();
        BoundaryOperator::new(&g, BoundaryDatum::zero())
            .unwrap()
            .enforce(&mut a)
            .unwrap();
        BoundaryOperator::new(
            &g,
            BoundaryDatum::contact_angle(FourierSeries::default(), None),
        )
        .unwrap()
        .enforce(&mut b)
        .unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn contact_angle_closed_form() {
        // flat data: u_γ = φ / sqrt(1 - φ²)
        let g = interval_grid();
        let phi = FourierSeries {
            constant: 0.6,
            ..Default::default()
        };
        let bc = BoundaryOperator::new(&g, BoundaryDatum::contact_angle(phi, None)).unwrap();
        let mut u = Field::sample_active(&g, 0.0, |_| 0.0).unwrap();
        bc.enforce(&mut u).unwrap();
        for (_, du) in bc.normal_derivatives(&u) {
            assert!((du - 0.75).abs() < 1e-12, "{du}");
        }
        let bad = FourierSeries {
            constant: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            BoundaryOperator::new(&g, BoundaryDatum::contact_angle(bad, None)),
            Err(FlowError::Datum(_))
        ));
    }

    #[test]
    fn compatibility_examples() {
        let g = interval_grid();
        let bc = BoundaryOperator::new(&g, BoundaryDatum::zero()).unwrap();
        let tol = default_compatibility_tol(g.h(), 0.0);
        let r = bc.check_compatibility(&Field::sample(&g, 0.0, |_| 2.0).unwrap(), tol);
        assert!(r.pass && r.max_residual < 1e-12);
        let r = bc.check_compatibility(&Field::sample(&g, 0.0, |x| x[0]).unwrap(), tol);
        assert!(!r.pass);
        assert!((r.max_residual - 1.0).abs() < 1e-12);
        assert!(r.worst_foot[0] == 0.0 || r.worst_foot[0] == 1.0);

        // radial paraboloid on the unit disk: u_γ = -|x| = -1 on the boundary
        let g = disk_grid(0.05);
        let bc = BoundaryOperator::new(&g, BoundaryDatum::constant(-1.0)).unwrap();
        let u0 = Field::sample(&g, 0.0, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let r = bc.check_compatibility(&u0, default_compatibility_tol(g.h(), 1.0));
        assert!(r.pass);
        assert!(r.max_residual < 1e-10, "{}", r.max_residual);
    }

    #[test]
    fn enforce_is_idempotent_and_exact() {
        let g = disk_grid(0.05);
        for datum in [
            BoundaryDatum::capillary_like(0.7),
            BoundaryDatum::Neumann(Psi::new(
                "nonlinear",
                |x, z| x[0] + z.powi(3) / 3.0,
                |_, z| z * z,
            )),
            BoundaryDatum::contact_angle(
                FourierSeries {
                    constant: 0.1,
                    cos: vec![0.3],
                    sin: vec![0.0, -0.2],
                },
                None,
            ),
        ] {
            let bc = BoundaryOperator::new(&g, datum).unwrap();
            let mut u =
                Field::sample_active(&g, 0.0, |x| 0.4 + 0.3 * x[0] * x[1] - 0.2 * x[1]).unwrap();
            let layer = bc.enforce(&mut u).unwrap();
            assert!(layer.max_residual() <= 1e-10, "{}", layer.max_residual());
            let before = u.values().to_vec();
            bc.enforce(&mut u).unwrap();
            assert_eq!(before, u.values());
        }
    }

    #[test]
    fn contact_angle_relation_holds_at_every_foot() {
        let g = disk_grid(0.04);
        let phi = FourierSeries {
            constant: 0.0,
            cos: vec![0.3],
            sin: vec![],
        };
        let bc = BoundaryOperator::new(&g, BoundaryDatum::contact_angle(phi, None)).unwrap();
        let mut u = Field::sample_active(&g, 0.0, |x| 0.5 * x[0] + 0.2 * x[1] * x[1]).unwrap();
        bc.enforce(&mut u).unwrap();
        for (du, phi, t2) in bc.contact_angle_terms(&u) {
            let lhs = du * du * (1.0 - phi * phi);
            let rhs = phi * phi * (1.0 + t2);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn next_order_residual_is_second_order() {
        let residual = |h: f64| {
            let g = disk_grid(h);
            let bc = BoundaryOperator::new(&g, BoundaryDatum::zero()).unwrap();
            // u_γ = 0 on the unit circle for the radial profile r² - r⁴/2
            let mut u = Field::sample_active(&g, 0.0, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                r2 - 0.5 * r2 * r2 + 0.1 * x[0] * x[1] * (1.0 - r2).powi(2)
            })
            .unwrap();
            bc.enforce(&mut u).unwrap();
            assert!(bc.flux_residual(&u, ResidualStencil::Enforcing).unwrap() < 1e-10);
            bc.flux_residual(&u, ResidualStencil::NextOrder).unwrap()
        };
        // quartering h should shrink the residual well past the linear factor 4
        let (a, b) = (residual(0.04), residual(0.01));
        let ratio = a / b;
        assert!(ratio > 7.0, "ratio {ratio} ({a}, {b})");
    }

    #[test]
    fn contact_angle_residual_is_second_order() {
        use crate::initial::{project_compatible, InitialData};
        let domain = Domain::disk(1.0, 0.5).unwrap();
        let datum = BoundaryDatum::contact_angle(
            FourierSeries {
                constant: 0.1,
                cos: vec![0.2],
                sin: vec![],
            },
            None,
        );
        let raw = InitialData::new("sin", |x| (2.0 * x[0]).sin() + 0.5 * x[1] * x[1]);
        let u0 = project_compatible(&raw, &domain, &datum);
        let res = |h: f64| {
            let grid = disk_grid(h);
            let bc = BoundaryOperator::new(&grid, datum.clone()).unwrap();
            let u = Field::sample(&grid, 0.0, |x| u0.eval(x)).unwrap();
            bc.check_compatibility(&u, 1.0).max_residual
        };
        let ratio = res(0.04) / res(0.02);
        assert!(ratio > 2.8, "ratio {ratio}");
    }
}
