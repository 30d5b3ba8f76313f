//! Checks of the a priori estimates on a solver trace, and the barrier
//! function used for boundary gradient bounds.
//!
//! Every check is a pure function of the trace and the problem data, so a
//! stored trace reproduces its report exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryDatum, DatumReport};
use crate::field::{Field, GhostState};
use crate::geometry::{recommended_band_width, Grid, NodeKind};
use crate::operator::{check_structural, gradient, Forcing};
use crate::stepper::SolverTrace;
use crate::{FlowError, Point, Result};

pub const REPORT_SCHEMA: u32 = 1;

/// Relative slack on the `u_t` maximum principle.
pub const UT_SLACK: f64 = 1e-4;
/// Absolute slack on the linear growth of `M_T`.
pub const MT_SLACK: f64 = 1e-4;
/// Allowed growth of gradient sups over their initial value.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Evidence only: a hypothesis is missing or the claim is asymptotic.
    Advisory,
    NotApplicable,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub name: String,
    /// The estimate in words.
    pub anchor: String,
    pub verdict: Verdict,
    /// Whether the measured property held, also for advisory records.
    pub holds: Option<bool>,
    /// How the measurement is taken.
    pub recipe: String,
    pub measured: BTreeMap<String, f64>,
    pub fitted: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EstimateRecord {
    fn new(name: &str, anchor: &str, recipe: &str) -> Self {
        EstimateRecord {
            name: name.into(),
            anchor: anchor.into(),
            verdict: Verdict::Pass,
            holds: None,
            recipe: recipe.into(),
            measured: BTreeMap::new(),
            fitted: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            curve: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.into(), v);
    }

    fn tolerance(&mut self, key: &str, v: f64) {
        self.tolerances.insert(key.into(), v);
    }

    /// Binding verdict from `holds` unless `advisory`.
    fn settle(&mut self, holds: bool, advisory: bool) {
        self.holds = Some(holds);
        self.verdict = match (advisory, holds) {
            (true, _) => Verdict::Advisory,
            (false, true) => Verdict::Pass,
            (false, false) => Verdict::Fail,
        };
    }

    fn skipped(name: &str, anchor: &str) -> Self {
        let mut r = EstimateRecord::new(name, anchor, "disabled by harness toggle");
        r.verdict = Verdict::Skipped;
        r
    }
}

/// Which checks the harness runs. Disabled checks appear as skipped records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessToggles {
    pub compatibility: bool,
    pub structural: bool,
    pub ut_maximum_principle: bool,
    pub mt_linear_bound: bool,
    pub band_gradient: bool,
    pub interior_gradient: bool,
    pub hopf: bool,
    pub auxiliary: bool,
    pub case1_bound: bool,
    pub convergence: bool,
}

impl Default for HarnessToggles {
    fn default() -> Self {
        HarnessToggles {
            compatibility: true,
            structural: true,
            ut_maximum_principle: true,
            mt_linear_bound: true,
            band_gradient: true,
            interior_gradient: true,
            hopf: true,
            auxiliary: true,
            case1_bound: true,
            convergence: true,
        }
    }
}

impl HarnessToggles {
    pub const NAMES: [&'static str; 10] = [
        "compatibility",
        "structural",
        "ut_maximum_principle",
        "mt_linear_bound",
        "band_gradient",
        "interior_gradient",
        "hopf",
        "auxiliary",
        "case1_bound",
        "convergence",
    ];

    pub fn set(&mut self, name: &str, on: bool) -> Result<()> {
        let slot = match name {
            "compatibility" => &mut self.compatibility,
            "structural" => &mut self.structural,
            "ut_maximum_principle" => &mut self.ut_maximum_principle,
            "mt_linear_bound" => &mut self.mt_linear_bound,
            "band_gradient" => &mut self.band_gradient,
            "interior_gradient" => &mut self.interior_gradient,
            "hopf" => &mut self.hopf,
            "auxiliary" => &mut self.auxiliary,
            "case1_bound" => &mut self.case1_bound,
            "convergence" => &mut self.convergence,
            other => {
                return Err(FlowError::Config(format!(
                    "unknown harness check '{other}'; known: {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = on;
        Ok(())
    }
}

/// Harness parameters that are part of the run configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessSettings {
    pub toggles: HarnessToggles,
    /// Declared `M₀ ≥ sup |u|`; defaults to `sup |u0| + M_T` at the end of the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    /// Geometry constant in `α₀ = |ψ|_{C⁰} + C₀ + 1`; defaults to the observed
    /// `sup |Dγ|` on the band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    /// Number of random probe points for the structural checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
}

/// Problem data the harness needs besides the trace.
#[derive(Clone, Debug)]
pub struct HarnessContext {
    pub grid: Arc<Grid>,
    pub datum: BoundaryDatum,
    pub forcing: Forcing,
    pub settings: HarnessSettings,
    pub seed: u64,
}

/// Deterministic probe points inside the domain.
pub fn structural_probes(grid: &Grid, n: usize, seed: u64) -> Vec<Point> {
    let domain = grid.domain();
    let c = domain.center();
    let e = domain.half_extent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = [
            c[0] + e[0] * rng.random_range(-1.0..=1.0),
            if domain.dim() == 1 {
                0.0
            } else {
                c[1] + e[1] * rng.random_range(-1.0..=1.0)
            },
        ];
        if domain.contains(x) {
            out.push(x);
        }
    }
    out
}

/// Where the barrier maximum sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgmaxCase {
    /// Boundary-adjacent node: the boundary case, closed by the explicit bound.
    Boundary,
    /// `|d - μ₀| ≤ h`: the inner edge of the band.
    InnerEdge,
    /// Strictly inside the band.
    BandInterior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryNode {
    pub node: usize,
    pub point: Point,
    pub d: f64,
    pub u: f64,
    pub psi: f64,
    pub w: f64,
    pub dw2: f64,
    /// `|D'w|²` and `w_γ²`.
    pub tangential2: f64,
    pub normal2: f64,
    /// `log log |Dw|² + (1 + M₀ + u) + α₀ d`; `None` where `|Dw|² ≤ e`.
    pub phi: Option<f64>,
    pub case: ArgmaxCase,
}

/// The barrier `φ = log log |Dw|² + h(u) + g(d)` with `w = u - ψ d`,
/// `h(u) = 1 + M₀ + u`, `g(d) = α₀ d`, on the band nodes of one field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryState {
    pub t: f64,
    pub m0: f64,
    pub c0: f64,
    pub sup_psi: f64,
    pub alpha0: f64,
    pub nodes: Vec<AuxiliaryNode>,
    /// Index into `nodes`.
    pub argmax: Option<usize>,
    pub excluded: usize,
}

impl AuxiliaryState {
    pub fn argmax_node(&self) -> Option<&AuxiliaryNode> {
        self.argmax.map(|i| &self.nodes[i])
    }

    /// Largest `| |Dw|² - (|D'w|² + w_γ²) |` over the band.
    pub fn decomposition_error(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n.dw2 - n.tangential2 - n.normal2).abs())
            .fold(0.0, f64::max)
    }
}

/// Observed `sup ‖Dγ‖` over band nodes.
pub fn observed_c0(grid: &Grid) -> f64 {
    grid.band_nodes()
        .filter_map(|k| grid.domain().normal_frame(grid.point(k)).ok())
        .map(|f| f.dgamma_norm())
        .fold(0.0, f64::max)
}

/// The datum value `ψ` at a node: `ψ(x, u)` for Neumann data, `φ(π(x)) v` for
/// contact-angle data.
fn datum_value(grid: &Grid, datum: &BoundaryDatum, u: &Field, k: usize) -> f64 {
    let x = grid.point(k);
    match datum {
        BoundaryDatum::Neumann(psi) => psi.value(x, u.get(k)),
        BoundaryDatum::ContactAngle { phi, .. } => {
            let foot = grid.domain().project(x).foot;
            let p = gradient(u, k);
            phi.eval(grid.domain().boundary_parameter(foot))
                * (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()
        }
    }
}

/// Evaluate the barrier on the band and classify its maximiser.
pub fn evaluate_auxiliary(
    u: &Field,
    datum: &BoundaryDatum,
    m0: f64,
    c0: f64,
) -> Result<AuxiliaryState> {
    let grid = u.grid();
    if u.ghost_state() == GhostState::Missing {
        return Err(FlowError::State("barrier needs ghost values".into()));
    }
    let sup_u = u.sup_abs();
    if m0 < sup_u {
        return Err(FlowError::Config(format!(
            "declared M₀ = {m0} is below sup|u| = {sup_u}"
        )));
    }
    let domain = grid.domain();
    let mu0 = domain.band_width();
    let h = grid.h();
    if grid.band_nodes().next().is_none() {
        return Err(FlowError::Resolution("band holds no grid nodes".into()));
    }

    // w on every node the band gradients can touch, with signed distance
    let mut wv = vec![0.0; grid.len()];
    let mut psi_at = vec![0.0; grid.len()];
    for (k, kind) in grid.kinds().iter().enumerate() {
        if *kind == NodeKind::Exterior {
            continue;
        }
        let psi = if *kind == NodeKind::Ghost {
            0.0
        } else {
            datum_value(grid, datum, u, k)
        };
        psi_at[k] = psi;
        let d = domain.signed_distance(grid.point(k));
        wv[k] = u.get(k) - psi * d;
    }
    // ghost w continues ψ from the nearest active neighbour
    for gh in grid.ghosts() {
        let near = grid
            .neighbours(gh.node)
            .filter(|&n| grid.is_active(n))
            .min_by(|&a, &b| {
                grid.distance(a)
                    .total_cmp(&grid.distance(b))
                    .then(a.cmp(&b))
            });
        if let Some(n) = near {
            let d = domain.signed_distance(grid.point(gh.node));
            wv[gh.node] = u.get(gh.node) - psi_at[n] * d;
        }
    }
    let w = Field::from_values(grid, wv, u.t(), GhostState::Enforced)?;

    let sup_psi = grid
        .band_nodes()
        .map(|k| psi_at[k].abs())
        .fold(0.0, f64::max)
        .max(match datum {
            BoundaryDatum::Neumann(_) => datum.validate(domain, m0)?.sup_psi,
            BoundaryDatum::ContactAngle { .. } => 0.0,
        });
    let alpha0 = sup_psi + c0 + 1.0;

    let mut nodes = Vec::new();
    let mut excluded = 0;
    for k in grid.band_nodes() {
        let x = grid.point(k);
        let d = grid.distance(k);
        let frame = domain.normal_frame(x)?;
        let p = gradient(&w, k);
        let dw2 = p[0] * p[0] + p[1] * p[1];
        let tan = frame.tangential(p);
        let wn = frame.normal_component(p);
        let phi =
            (dw2 > std::f64::consts::E).then(|| dw2.ln().ln() + (1.0 + m0 + u.get(k)) + alpha0 * d);
        if phi.is_none() {
            excluded += 1;
        }
        let case = if grid.kind(k) == NodeKind::BoundaryAdjacent {
            ArgmaxCase::Boundary
        } else if (d - mu0).abs() <= h {
            ArgmaxCase::InnerEdge
        } else {
            ArgmaxCase::BandInterior
        };
        nodes.push(AuxiliaryNode {
            node: k,
            point: x,
            d,
            u: u.get(k),
            psi: psi_at[k],
            w: w.get(k),
            dw2,
            tangential2: tan[0] * tan[0] + tan[1] * tan[1],
            normal2: wn * wn,
            phi,
            case,
        });
    }
    let argmax = nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| n.phi.map(|p| (i, p)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);
    Ok(AuxiliaryState {
        t: u.t(),
        m0,
        c0,
        sup_psi,
        alpha0,
        nodes,
        argmax,
        excluded,
    })
}

/// The explicit bound `√(100 + 2|ψ|²)` on `|Du|` at a boundary maximiser.
pub fn case1_bound(sup_psi: f64) -> f64 {
    (100.0 + 2.0 * sup_psi * sup_psi).sqrt()
}

/// Case-1 check on one barrier state: `|Du|` at the maximiser against
/// [`case1_bound`], and `|Dw|² = |Du|² - ψ²` at boundary-adjacent nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case1Check {
    pub t: f64,
    pub applicable: bool,
    pub du_at_argmax: Option<f64>,
    pub bound: f64,
    pub within_bound: Option<bool>,
    /// Largest `| |Dw|² - (|Du|² - ψ²) |` over boundary-adjacent nodes.
    pub identity_error: f64,
    pub identity_scale: f64,
}

pub fn check_case1_bound(aux: &AuxiliaryState, u: &Field) -> Case1Check {
    let bound = case1_bound(aux.sup_psi);
    let mut identity_error: f64 = 0.0;
    let mut identity_scale: f64 = 0.0;
    for n in aux.nodes.iter().filter(|n| n.case == ArgmaxCase::Boundary) {
        let p = gradient(u, n.node);
        let du2 = p[0] * p[0] + p[1] * p[1];
        identity_error = identity_error.max((n.dw2 - (du2 - n.psi * n.psi)).abs());
        identity_scale = identity_scale.max(1.0 + du2);
    }
    let at = aux.argmax_node().filter(|n| n.case == ArgmaxCase::Boundary);
    let du = at.map(|n| {
        let p = gradient(u, n.node);
        p[0].hypot(p[1])
    });
    Case1Check {
        t: aux.t,
        applicable: at.is_some(),
        du_at_argmax: du,
        bound,
        within_bound: du.map(|d| d <= bound),
        identity_error,
        identity_scale,
    }
}

/// Constants the harness observes or fits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservedConstants {
    /// `sup_t M_T / t`.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Interior gradient sup.
    pub m1: Option<f64>,
    /// Band gradient sup.
    pub m2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema: u32,
    pub records: Vec<EstimateRecord>,
    pub constants: ObservedConstants,
    pub auxiliary: Vec<AuxiliarySummary>,
    /// No binding record failed.
    pub pass: bool,
}

/// The part of an [`AuxiliaryState`] kept in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliarySummary {
    pub t: f64,
    pub m0: f64,
    pub alpha0: f64,
    pub band_nodes: usize,
    pub excluded: usize,
    pub argmax_point: Option<Point>,
    pub argmax_case: Option<ArgmaxCase>,
    pub phi_max: Option<f64>,
    pub dw2_at_argmax: Option<f64>,
    pub decomposition_error: f64,
    pub case1: Case1Check,
}

impl EstimateReport {
    pub fn record(&self, name: &str) -> Option<&EstimateRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &EstimateRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    /// Fixed-width table for the text summary.
    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{:<22} {:<15} {:<6}  {}\n",
            "check", "verdict", "holds", "estimate"
        );
        for r in &self.records {
            let verdict = serde_json::to_value(r.verdict)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            let holds = match r.holds {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            };
            s.push_str(&format!(
                "{:<22} {:<15} {:<6}  {}\n",
                r.name, verdict, holds, r.anchor
            ));
        }
        s.push_str(&format!(
            "overall: {}\n",
            if self.pass { "pass" } else { "FAIL" }
        ));
        s
    }
}

const ANCHOR_COMPAT: &str = "initial data satisfy the boundary condition: ∂u0/∂γ = ψ(x, u0) on ∂Ω";
const ANCHOR_STRUCT: &str =
    "structure of f and ψ: f_z ≥ 0, growth o(log|p|), ψ_u ≥ 0, band width below the ψ-dependent radius";
const ANCHOR_UT: &str = "maximum principle for u_t: max |u_t| over Ω̄×[0,T] equals max |u_t(·,0)|";
const ANCHOR_MT: &str = "linear growth: M_T = max |u(x,t) - u0(x)| ≤ C₁ T with C₁ = sup |u_t(·,0)|";
const ANCHOR_BAND: &str = "boundary band gradient bound: |Du| ≤ C₂ exp(C₃ M_T) on Ω̄_μ₀ × [0,T]";
const ANCHOR_INTERIOR: &str = "interior gradient bound: sup |Du| over Ω′×[0,T] ≤ M₁";
const ANCHOR_HOPF: &str =
    "boundary point lemma for u_t: (u_t)_γ = ψ_u u_t ≥ 0 where u_t peaks on the boundary";
const ANCHOR_AUX: &str =
    "barrier φ = log log |Dw|² + (1 + M₀ + u) + α₀ d with w = u - ψ d, α₀ = |ψ|_C⁰ + C₀ + 1";
const ANCHOR_CASE1: &str =
    "boundary maximiser of the barrier: |Du| ≤ √(100 + 2|ψ|²), |Dw|² = |Du|² - ψ² on ∂Ω";
const ANCHOR_CONV: &str = "long-time behaviour: u(·,t) converges to a constant function";

/// Run every enabled check on `trace`.
pub fn assess(trace: &SolverTrace, ctx: &HarnessContext) -> Result<EstimateReport> {
    trace.validate()?;
    let grid = &ctx.grid;
    let toggles = ctx.settings.toggles;
    let u0 = trace.initial_field(grid)?;
    let t_end = trace.last_row().t;
    let m0 = ctx
        .settings
        .m0
        .unwrap_or_else(|| u0.sup_abs() + trace.last_row().m_t);
    let datum_report = ctx.datum.validate(grid.domain(), m0)?;
    let hypotheses = ctx.forcing.declared().z_monotone
        && matches!(ctx.datum, BoundaryDatum::Neumann(_))
        && datum_report.psi_z_nonnegative;

    let mut constants = ObservedConstants::default();
    let mut records = Vec::new();

    records.push(if toggles.compatibility {
        compatibility_record(trace)
    } else {
        EstimateRecord::skipped("compatibility", ANCHOR_COMPAT)
    });
    records.push(if toggles.structural {
        structural_record(ctx, m0, &datum_report)?
    } else {
        EstimateRecord::skipped("structural", ANCHOR_STRUCT)
    });
    records.push(if toggles.ut_maximum_principle {
        ut_record(trace, hypotheses)
    } else {
        EstimateRecord::skipped("ut_maximum_principle", ANCHOR_UT)
    });
    records.push(if toggles.mt_linear_bound {
        let r = mt_record(trace);
        constants.c1 = r.fitted.get("c1").copied();
        r
    } else {
        EstimateRecord::skipped("mt_linear_bound", ANCHOR_MT)
    });
    records.push(if toggles.band_gradient {
        if grid.band_nodes().next().is_none() {
            return Err(FlowError::Resolution("band holds no grid nodes".into()));
        }
        let r = band_record(trace);
        constants.c2 = r.fitted.get("c2").copied();
        constants.c3 = r.fitted.get("c3").copied();
        constants.m2 = r.measured.get("sup").copied();
        r
    } else {
        EstimateRecord::skipped("band_gradient", ANCHOR_BAND)
    });
    records.push(if toggles.interior_gradient {
        let margin = trace.interior_margin;
        if !grid.active().iter().any(|&k| grid.distance(k) >= margin) {
            return Err(FlowError::Resolution(format!(
                "no nodes at distance ≥ {margin} from the boundary"
            )));
        }
        let r = interior_record(trace);
        constants.m1 = r.measured.get("sup").copied();
        r
    } else {
        EstimateRecord::skipped("interior_gradient", ANCHOR_INTERIOR)
    });
    records.push(if toggles.hopf {
        hopf_record(trace, grid.h(), hypotheses)
    } else {
        EstimateRecord::skipped("hopf", ANCHOR_HOPF)
    });

    let mut auxiliary = Vec::new();
    if toggles.auxiliary || toggles.case1_bound {
        let c0 = ctx.settings.c0.unwrap_or_else(|| observed_c0(grid));
        for i in 0..trace.snapshots.len() {
            let u = trace.field(grid, i)?;
            let aux = evaluate_auxiliary(&u, &ctx.datum, m0, c0)?;
            let at = aux.argmax_node();
            auxiliary.push(AuxiliarySummary {
                t: aux.t,
                m0,
                alpha0: aux.alpha0,
                band_nodes: aux.nodes.len(),
                excluded: aux.excluded,
                argmax_point: at.map(|n| n.point),
                argmax_case: at.map(|n| n.case),
                phi_max: at.and_then(|n| n.phi),
                dw2_at_argmax: at.map(|n| n.dw2),
                decomposition_error: aux.decomposition_error(),
                case1: check_case1_bound(&aux, &u),
            });
        }
    }
    records.push(if toggles.auxiliary {
        auxiliary_record(&auxiliary)
    } else {
        EstimateRecord::skipped("auxiliary", ANCHOR_AUX)
    });
    records.push(if toggles.case1_bound {
        case1_record(&auxiliary, grid.h())
    } else {
        EstimateRecord::skipped("case1_bound", ANCHOR_CASE1)
    });
    records.push(if toggles.convergence {
        convergence_record(trace, t_end)
    } else {
        EstimateRecord::skipped("convergence", ANCHOR_CONV)
    });
    if !toggles.auxiliary {
        auxiliary.clear();
    }

    let pass = !records.iter().any(|r| r.verdict == Verdict::Fail);
    Ok(EstimateReport {
        schema: REPORT_SCHEMA,
        records,
        constants,
        auxiliary,
        pass,
    })
}

fn compatibility_record(trace: &SolverTrace) -> EstimateRecord {
    let c = &trace.compatibility;
    let mut r = EstimateRecord::new(
        "compatibility",
        ANCHOR_COMPAT,
        "sup over ghost foot points of |one-sided normal derivative of sampled u0 - datum|",
    );
    r.measure("max_residual", c.max_residual);
    r.measure("worst_foot_x", c.worst_foot[0]);
    r.measure("worst_foot_y", c.worst_foot[1]);
    r.measure("c2_observed", trace.c2_observed);
    r.tolerance("tolerance", c.tolerance);
    if trace.compatibility_overridden {
        r.notes
            .push("run forced past the compatibility gate".into());
    }
    r.settle(c.pass, trace.compatibility_overridden);
    r
}

fn structural_record(ctx: &HarnessContext, m0: f64, datum: &DatumReport) -> Result<EstimateRecord> {
    let mut r = EstimateRecord::new(
        "structural",
        ANCHOR_STRUCT,
        "f_z sampled on probes × [-M₀, M₀] × 8 gradient directions; growth quotient at |p| = 10..10⁶; ψ_z on boundary samples",
    );
    let probes = structural_probes(&ctx.grid, ctx.settings.probes.unwrap_or(32), ctx.seed);
    let forcing = if ctx.forcing.has_derivatives() {
        ctx.forcing.clone()
    } else {
        ctx.forcing.clone().with_difference_derivatives()
    };
    let s = check_structural(&forcing, m0, &probes)?;
    r.measure("m0", m0);
    r.measure("min_f_z", s.z_monotone.min_f_z);
    for (m, q) in s.log_growth.magnitudes.iter().zip(&s.log_growth.quotients) {
        r.measure(&format!("growth_quotient_at_{m:e}"), *q);
    }
    r.measure("sup_psi", datum.sup_psi);
    r.measure("min_psi_z", datum.min_psi_z);
    if let Some(p) = datum.sup_phi {
        r.measure("sup_phi", p);
    }
    if let Some(p) = datum.phi_mean {
        r.measure("phi_mean", p);
    }
    let domain = ctx.grid.domain();
    let advised = recommended_band_width(domain.smoothness_radius(), datum.sup_psi_z);
    r.measure("band_width", domain.band_width());
    r.measure("recommended_band_width", advised);
    let mut holds = s.z_monotone.holds && s.log_growth.decreasing && datum.psi_z_nonnegative;
    if !s.z_monotone.holds {
        r.notes.push("f_z < 0 somewhere on the probe set".into());
    }
    if s.z_monotone.declared != s.z_monotone.holds {
        r.notes
            .push("declared f_z ≥ 0 disagrees with the samples".into());
    }
    if !s.log_growth.decreasing {
        r.notes
            .push("growth quotient is not decreasing along |p|".into());
    }
    if !datum.psi_z_nonnegative {
        r.notes
            .push("ψ_z < 0 somewhere: the long-time theory does not apply".into());
    }
    if domain.band_width() > advised * (1.0 + 1e-12) {
        holds = false;
        r.notes
            .push("band width exceeds the recommended value".into());
    }
    r.settle(holds, true);
    Ok(r)
}

fn ut_record(trace: &SolverTrace, hypotheses: bool) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "ut_maximum_principle",
        ANCHOR_UT,
        "u_t = Σ a^ij u_ij - f evaluated on each state; sup over active nodes at every step",
    );
    let s = &trace.sup_ut_steps;
    let s0 = s[0];
    let max = s.iter().copied().fold(0.0, f64::max);
    let step_increase = s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let relative_step = if s0 > 0.0 { step_increase / s0 } else { 0.0 };
    r.measure("sup_ut_initial", s0);
    r.measure("sup_ut_max", max);
    r.measure("sup_ut_final", *s.last().unwrap_or(&0.0));
    r.measure("max_step_increase", step_increase);
    r.measure("max_step_increase_relative", relative_step);
    r.measure("steps", s.len() as f64);
    r.tolerance("relative_slack", UT_SLACK);
    r.curve = trace.rows.iter().map(|row| [row.t, row.sup_ut]).collect();
    let holds = s.iter().all(|&v| v <= s0 * (1.0 + UT_SLACK)) && relative_step <= UT_SLACK;
    if !hypotheses {
        r.notes
            .push("f_z ≥ 0 and ψ_u ≥ 0 Neumann data are not both in force".into());
    }
    r.settle(holds, !hypotheses);
    r
}

fn mt_record(trace: &SolverTrace) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "mt_linear_bound",
        ANCHOR_MT,
        "M_T = running max over recorded rows of sup |u - u0|, compared with (sup|u_t(0)| + slack) t",
    );
    let s0 = trace.sup_ut_steps[0];
    let mut worst = f64::NEG_INFINITY;
    let mut c1: f64 = 0.0;
    for row in &trace.rows {
        worst = worst.max(row.m_t - (s0 + MT_SLACK) * row.t);
        if row.t > 0.0 {
            c1 = c1.max(row.m_t / row.t);
        }
    }
    r.measure("sup_ut_initial", s0);
    r.measure("m_t_final", trace.last_row().m_t);
    r.measure("worst_excess", worst);
    r.fitted.insert("c1".into(), c1);
    r.tolerance("absolute_slack", MT_SLACK);
    r.curve = trace.rows.iter().map(|row| [row.t, row.m_t]).collect();
    r.settle(worst <= 0.0, false);
    r
}

/// Least squares `y ≈ a + b x`; `None` when `x` has no spread.
fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let spread = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if sxx <= 1e-24 * (1.0 + spread * spread) * n {
        return None;
    }
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

fn no_blowup(series: &[f64]) -> (bool, f64, f64) {
    let first = series[0];
    let max = series.iter().copied().fold(0.0, f64::max);
    let finite = series.iter().all(|v| v.is_finite());
    (finite && max <= BLOWUP_FACTOR * first, first, max)
}

fn band_record(trace: &SolverTrace) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "band_gradient",
        ANCHOR_BAND,
        "sup |Du| over nodes with d ≤ μ₀ at each row; least squares of log sup|Du| against M_T",
    );
    let series: Vec<f64> = trace.rows.iter().map(|row| row.sup_du_band).collect();
    let (ok, first, max) = no_blowup(&series);
    r.measure("initial", first);
    r.measure("sup", max);
    r.measure("final", *series.last().unwrap_or(&0.0));
    r.measure(
        "non_increasing",
        f64::from(u8::from(
            series.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)),
        )),
    );
    r.tolerance("blowup_factor", BLOWUP_FACTOR);
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|row| row.sup_du_band > 0.0)
        .map(|row| (row.m_t, row.sup_du_band.ln()))
        .collect();
    match line_fit(&pts) {
        Some((a, b)) => {
            let resid = pts
                .iter()
                .map(|&(x, y)| (y - a - b * x).abs())
                .fold(0.0, f64::max);
            let excess = pts
                .iter()
                .map(|&(x, y)| y - a - b * x)
                .fold(f64::NEG_INFINITY, f64::max);
            r.fitted.insert("c2".into(), a.exp());
            r.fitted.insert("c3".into(), b);
            r.fitted.insert("max_log_residual".into(), resid);
            // C₂ raised so that the fitted curve bounds every row
            r.fitted
                .insert("c2_envelope".into(), (a + excess.max(0.0)).exp());
        }
        None => r
            .notes
            .push("fit degenerate: M_T or the gradient has no spread".into()),
    }
    r.curve = trace
        .rows
        .iter()
        .map(|row| [row.t, row.sup_du_band])
        .collect();
    r.settle(ok, false);
    r
}

fn interior_record(trace: &SolverTrace) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "interior_gradient",
        ANCHOR_INTERIOR,
        "sup |Du| over nodes with d ≥ margin at each row; M₁ is the sup over the run",
    );
    let series: Vec<f64> = trace.rows.iter().map(|row| row.sup_du_interior).collect();
    let (ok, first, max) = no_blowup(&series);
    r.measure("margin", trace.interior_margin);
    r.measure("initial", first);
    r.measure("sup", max);
    r.measure("final", *series.last().unwrap_or(&0.0));
    r.tolerance("blowup_factor", BLOWUP_FACTOR);
    r.curve = trace
        .rows
        .iter()
        .map(|row| [row.t, row.sup_du_interior])
        .collect();
    r.settle(ok, false);
    r
}

fn hopf_record(trace: &SolverTrace, h: f64, hypotheses: bool) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "hopf",
        ANCHOR_HOPF,
        "at recorded steps where |u_t| peaks on a boundary-adjacent node: sign(u_t) ⟨D u_t, γ⟩ / sup|u_t|",
    );
    let scale = 10.0 * h;
    let later: Vec<_> = trace.hopf.iter().filter(|e| e.step > 0).collect();
    let worst = later
        .iter()
        .map(|e| e.signed_flux / e.sup_ut)
        .fold(f64::INFINITY, f64::min);
    r.measure("events", trace.hopf.len() as f64);
    r.measure("events_after_start", later.len() as f64);
    if let Some(e) = trace.hopf.iter().find(|e| e.step == 0) {
        r.measure("initial_normalised_flux", e.signed_flux / e.sup_ut);
    }
    if worst.is_finite() {
        r.measure("min_normalised_flux", worst);
    }
    r.tolerance("lower_bound", -scale);
    if !hypotheses {
        r.notes.push("ψ_u ≥ 0 Neumann data not in force".into());
    }
    r.notes.push("the initial step is reported apart: u0 need not meet the higher-order compatibility condition".into());
    r.settle(!worst.is_finite() || worst >= -scale, true);
    r
}

fn auxiliary_record(aux: &[AuxiliarySummary]) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "auxiliary",
        ANCHOR_AUX,
        "evaluated on stored snapshots over band nodes with |Dw|² > e; maximiser classified boundary / inner edge / band interior",
    );
    let decomposition = aux
        .iter()
        .map(|a| a.decomposition_error)
        .fold(0.0, f64::max);
    r.measure("snapshots", aux.len() as f64);
    r.measure("decomposition_error", decomposition);
    r.tolerance("decomposition", 1e-12);
    for (i, a) in aux.iter().enumerate() {
        r.measure(&format!("snapshot_{i}_t"), a.t);
        r.measure(&format!("snapshot_{i}_excluded"), a.excluded as f64);
        if let Some(p) = a.phi_max {
            r.measure(&format!("snapshot_{i}_phi_max"), p);
        }
        let case = match a.argmax_case {
            Some(ArgmaxCase::Boundary) => "boundary",
            Some(ArgmaxCase::InnerEdge) => "inner edge",
            Some(ArgmaxCase::BandInterior) => "band interior",
            None => "none (every band node below the loglog threshold)",
        };
        r.notes.push(format!("t = {}: maximiser {case}", a.t));
    }
    r.settle(
        decomposition <= 1e-12 * (1.0 + aux.iter().map(|a| a.m0).fold(0.0, f64::max)),
        true,
    );
    r
}

fn case1_record(aux: &[AuxiliarySummary], h: f64) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "case1_bound",
        ANCHOR_CASE1,
        "|Du| at a boundary maximiser of the barrier against √(100 + 2 sup|ψ|²); identity at boundary-adjacent nodes",
    );
    let applicable: Vec<_> = aux.iter().filter(|a| a.case1.applicable).collect();
    let identity = aux
        .iter()
        .map(|a| a.case1.identity_error / a.case1.identity_scale)
        .fold(0.0, f64::max);
    r.measure("identity_relative_error", identity);
    r.measure("h", h);
    r.measure("applicable_snapshots", applicable.len() as f64);
    if let Some(a) = aux.first() {
        r.measure("bound", a.case1.bound);
    }
    let worst = applicable
        .iter()
        .filter_map(|a| a.case1.du_at_argmax)
        .fold(0.0, f64::max);
    if applicable.is_empty() {
        r.verdict = Verdict::NotApplicable;
        r.notes
            .push("no stored snapshot has its barrier maximum on the boundary".into());
        return r;
    }
    r.measure("du_at_argmax", worst);
    r.settle(
        applicable
            .iter()
            .all(|a| a.case1.within_bound == Some(true)),
        true,
    );
    r
}

fn convergence_record(trace: &SolverTrace, t_end: f64) -> EstimateRecord {
    let mut r = EstimateRecord::new(
        "convergence",
        ANCHOR_CONV,
        "final osc against 1e-2 × initial osc and final sup |Du| against 1e-2",
    );
    let first = trace.first_row();
    let last = trace.last_row();
    r.measure("initial_osc", first.osc);
    r.measure("final_osc", last.osc);
    r.measure("final_sup_du", last.sup_du_global);
    r.measure("final_mean", last.mean);
    r.measure("initial_mean", first.mean);
    r.measure("t_end", t_end);
    if let Some(t) = trace.converged_at {
        r.measure("converged_at", t);
    }
    if t_end > 0.0 {
        r.measure("mean_drift_rate", (last.mean - first.mean) / t_end);
    }
    r.tolerance("osc_ratio", 1e-2);
    r.tolerance("sup_du", 1e-2);
    let holds = trace.stationary || (last.osc < 1e-2 * first.osc && last.sup_du_global < 1e-2);
    r.settle(holds, true);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::initial::{InitialData, InitialSpec};
    use crate::stepper::{run, FlowProblem, RunOptions, SolverConfig};

    fn disk_grid(h: f64) -> Arc<Grid> {
        Arc::new(Grid::classify(&Domain::disk(1.0, 0.5).unwrap(), h).unwrap())
    }

    fn enforced(grid: &Arc<Grid>, datum: &BoundaryDatum, f: impl Fn(Point) -> f64) -> Field {
        let bc = crate::boundary::BoundaryOperator::new(grid, datum.clone()).unwrap();
        let mut u = Field::sample_active(grid, 0.0, f).unwrap();
        bc.enforce_in_place(&mut u).unwrap();
        u
    }

    #[test]
    fn case1_bound_examples() {
        assert_eq!(case1_bound(0.0), 10.0);
        assert_eq!(case1_bound(1.0), 102f64.sqrt());
    }

    #[test]
    fn zero_datum_gives_w_equal_u() {
        let g = disk_grid(0.05);
        let datum = BoundaryDatum::zero();
        let u = enforced(&g, &datum, |x| 3.0 * x[0] * x[0] - x[1]);
        let aux = evaluate_auxiliary(&u, &datum, 10.0, 1.0).unwrap();
        for n in &aux.nodes {
            assert_eq!(n.w, n.u);
            let p = gradient(&u, n.node);
            assert_eq!(n.dw2, p[0] * p[0] + p[1] * p[1]);
            if let Some(phi) = n.phi {
                let want = n.dw2.ln().ln() + (1.0 + 10.0 + n.u) + aux.alpha0 * n.d;
                assert_eq!(phi, want);
            }
        }
        assert!(aux.decomposition_error() < 1e-12);
        assert_eq!(aux.alpha0, 2.0);
    }

    #[test]
    fn flat_data_have_no_maximiser() {
        let g = disk_grid(0.05);
        let datum = BoundaryDatum::zero();
        let u = enforced(&g, &datum, |x| 0.1 * x[0]);
        let aux = evaluate_auxiliary(&u, &datum, 1.0, 1.0).unwrap();
        assert_eq!(aux.excluded, aux.nodes.len());
        assert!(aux.argmax.is_none());
        let c = check_case1_bound(&aux, &u);
        assert!(!c.applicable);
    }

    #[test]
    fn m0_below_sup_is_refused() {
        let g = disk_grid(0.05);
        let datum = BoundaryDatum::zero();
        let u = enforced(&g, &datum, |_| 2.0);
        assert!(matches!(
            evaluate_auxiliary(&u, &datum, 1.0, 1.0),
            Err(FlowError::Config(_))
        ));
    }

    #[test]
    fn steep_boundary_ramp_peaks_on_the_boundary() {
        // ramp in the normal direction near x = 1, flat inside: the barrier
        // maximum sits at the boundary when α₀ d cannot compensate
        let g = disk_grid(0.025);
        let datum = BoundaryDatum::zero();
        let u = enforced(&g, &datum, |x| {
            let r = x[0].hypot(x[1]);
            8.0 * (r - 0.8).max(0.0).powi(2)
        });
        let aux = evaluate_auxiliary(&u, &datum, 10.0, 0.0).unwrap();
        let at = aux.argmax_node().unwrap();
        assert_eq!(at.case, ArgmaxCase::Boundary, "{at:?}");
        let c = check_case1_bound(&aux, &u);
        assert!(c.applicable);
        assert_eq!(c.bound, 10.0);
    }

    #[test]
    fn case_classification_is_exhaustive() {
        let g = disk_grid(0.04);
        let datum = BoundaryDatum::capillary_like(0.3);
        let u = enforced(&g, &datum, |x| 2.0 * x[0] + x[1] * x[1]);
        let aux = evaluate_auxiliary(&u, &datum, 10.0, 1.0).unwrap();
        assert_eq!(aux.nodes.len(), g.band_nodes().count());
        let mu0 = g.domain().band_width();
        for n in &aux.nodes {
            let edge = (n.d - mu0).abs() <= g.h();
            match n.case {
                ArgmaxCase::Boundary => assert_eq!(g.kind(n.node), NodeKind::BoundaryAdjacent),
                ArgmaxCase::InnerEdge => assert!(edge),
                ArgmaxCase::BandInterior => assert!(!edge),
            }
        }
    }

    #[test]
    fn fit_recovers_an_exact_exponential() {
        let pts: Vec<(f64, f64)> = (0..5)
            .map(|k| (k as f64 * 0.1, (2.0f64).ln() + 0.7 * k as f64 * 0.1))
            .collect();
        let (a, b) = line_fit(&pts).unwrap();
        assert!((a.exp() - 2.0).abs() < 1e-12 && (b - 0.7).abs() < 1e-12);
        assert!(line_fit(&[(0.0, 1.0), (0.0, 2.0)]).is_none());
    }

    #[test]
    fn constant_trace_passes_everything() {
        let domain = Domain::disk(1.0, 0.5).unwrap();
        let p = FlowProblem {
            domain: domain.clone(),
            forcing: Forcing::zero(),
            datum: BoundaryDatum::zero(),
            initial: InitialData::new("c", |_| 0.3),
        };
        let cfg = SolverConfig::new(0.05, 1.0);
        let trace = run(&p, &cfg, RunOptions::default()).unwrap();
        let ctx = HarnessContext {
            grid: Arc::new(Grid::classify(&domain, 0.05).unwrap()),
            datum: BoundaryDatum::zero(),
            forcing: Forcing::zero(),
            settings: HarnessSettings::default(),
            seed: 1,
        };
        let rep = assess(&trace, &ctx).unwrap();
        assert!(rep.pass);
        let band = rep.record("band_gradient").unwrap();
        assert_eq!(band.measured["sup"], 0.0);
        assert!(band.fitted.is_empty());
        assert_eq!(
            rep.record("mt_linear_bound").unwrap().verdict,
            Verdict::Pass
        );
        assert_eq!(
            rep.record("ut_maximum_principle").unwrap().verdict,
            Verdict::Pass
        );
        assert_eq!(rep.record("convergence").unwrap().holds, Some(true));
    }

    #[test]
    fn negative_z_forcing_makes_the_ut_bound_advisory() {
        let domain = Domain::disk(1.0, 0.5).unwrap();
        let u0 = InitialSpec::RadialQuartic {
            amplitude: 0.5,
            radius: 1.0,
        }
        .build(&domain);
        let forcing = Forcing::linear_in_u(-1.0);
        let p = FlowProblem {
            domain: domain.clone(),
            forcing: forcing.clone(),
            datum: BoundaryDatum::zero(),
            initial: u0,
        };
        let trace = run(&p, &SolverConfig::new(0.05, 0.05), RunOptions::default()).unwrap();
        let ctx = HarnessContext {
            grid: Arc::new(Grid::classify(&domain, 0.05).unwrap()),
            datum: BoundaryDatum::zero(),
            forcing,
            settings: HarnessSettings::default(),
            seed: 1,
        };
        let rep = assess(&trace, &ctx).unwrap();
        assert_eq!(
            rep.record("ut_maximum_principle").unwrap().verdict,
            Verdict::Advisory
        );
        let s = rep.record("structural").unwrap();
        assert_eq!(s.holds, Some(false));
    }

    #[test]
    fn toggles_skip_records() {
        let mut t = HarnessToggles::default();
        t.set("hopf", false).unwrap();
        assert!(!t.hopf);
        assert!(t.set("nope", false).is_err());
    }
}
