//! Run configuration, scenario presets, output files and replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryDatum, BoundarySpec};
use crate::estimates::{assess, EstimateReport, HarnessContext, HarnessSettings, HarnessToggles};
use crate::geometry::{Domain, Grid, NodeKind, Shape};
use crate::initial::{project_compatible, InitialConfig, InitialData, InitialSpec};
use crate::operator::{Forcing, ForcingSpec, Parallelism};
use crate::stepper::{run, FlowProblem, RunOptions, SolverConfig, SolverTrace};
use crate::{FlowError, Result};

pub const TRACE_SCHEMA: u32 = 1;

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "MCFLOW_OUT";

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INSTABILITY: i32 = 3;
}

/// Exit code for an error.
pub fn exit_code(err: &FlowError) -> i32 {
    match err {
        FlowError::Instability { .. } | FlowError::Cfl { .. } => exit::INSTABILITY,
        _ => exit::CONFIG,
    }
}

fn default_seed() -> u64 {
    1
}

fn zero_forcing() -> ForcingSpec {
    ForcingSpec::Zero
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub domain: Domain,
    pub solver: SolverConfig,
    #[serde(default = "zero_forcing")]
    pub forcing: ForcingSpec,
    pub boundary: BoundarySpec,
    pub initial: InitialConfig,
    #[serde(default)]
    pub harness: HarnessSettings,
    #[serde(default)]
    pub override_compatibility: bool,
    /// Replaces the default `10 h² (1 + sup|D²u0|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compatibility_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Also write stored snapshots as `x y u` text files.
    #[serde(default)]
    pub dump_fields: bool,
}

impl RunConfig {
    /// Read a `.json` or `.toml` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| FlowError::Config(format!("{}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let cfg = match ext {
            "json" => Self::from_json(&text),
            "toml" => Self::from_toml(&text),
            _ => Self::from_json(&text).or_else(|_| Self::from_toml(&text)),
        }
        .map_err(|e| FlowError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FlowError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FlowError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FlowError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.solver.validate()?;
        BoundaryDatum::from_spec(&self.boundary)?;
        if let Some(tol) = self.compatibility_tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(FlowError::Config(format!(
                    "compatibility_tol must be positive, got {tol}"
                )));
            }
        }
        if let Some(m0) = self.harness.m0 {
            if m0.is_nan() || m0 < 0.0 {
                return Err(FlowError::Config(format!(
                    "harness.m0 must be non-negative, got {m0}"
                )));
            }
        }
        Ok(())
    }

    pub fn datum(&self) -> Result<BoundaryDatum> {
        BoundaryDatum::from_spec(&self.boundary)
    }

    pub fn forcing(&self) -> Forcing {
        Forcing::from_spec(&self.forcing)
    }

    /// Initial data, projected onto the boundary condition when requested.
    pub fn initial_data(&self) -> Result<InitialData> {
        let u0 = self.initial.spec.build(&self.domain);
        Ok(if self.initial.project_compatible {
            project_compatible(&u0, &self.domain, &self.datum()?)
        } else {
            u0
        })
    }

    pub fn problem(&self) -> Result<FlowProblem> {
        Ok(FlowProblem {
            domain: self.domain.clone(),
            forcing: self.forcing(),
            datum: self.datum()?,
            initial: self.initial_data()?,
        })
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::classify(&self.domain, self.solver.h)?))
    }
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// The property of the flow the scenario exercises.
    pub exercises: &'static str,
    build: fn() -> RunConfig,
}

impl Preset {
    pub fn config(&self) -> RunConfig {
        (self.build)()
    }
}

fn base(
    name: &str,
    domain: Domain,
    h: f64,
    t_final: f64,
    boundary: BoundarySpec,
    initial: InitialSpec,
) -> RunConfig {
    RunConfig {
        name: name.into(),
        seed: default_seed(),
        domain,
        solver: SolverConfig::new(h, t_final),
        forcing: ForcingSpec::Zero,
        boundary,
        initial: InitialConfig {
            spec: initial,
            project_compatible: false,
        },
        harness: HarnessSettings::default(),
        override_compatibility: false,
        compatibility_tol: None,
        output_dir: None,
        dump_fields: false,
    }
}

fn unit_disk(band_width: f64) -> Domain {
    Domain::disk(1.0, band_width).expect("valid preset domain")
}

/// Spacing of a 96-point lattice across the unit disk.
const H96: f64 = 2.0 / 96.0;

fn identity_smoke() -> RunConfig {
    base(
        "identity-smoke",
        unit_disk(0.5),
        0.05,
        0.1,
        BoundarySpec::Zero,
        InitialSpec::Constant { value: 0.25 },
    )
}

fn huisken_disk() -> RunConfig {
    let mut c = base(
        "huisken-disk",
        unit_disk(0.5),
        H96,
        10.0,
        BoundarySpec::Zero,
        InitialSpec::RadialQuartic {
            amplitude: 1.2,
            radius: 1.0,
        },
    );
    c.solver.snapshot_stride = 50;
    c
}

fn capillary_monotone() -> RunConfig {
    let mut c = base(
        "capillary-monotone",
        unit_disk(0.25),
        H96,
        2.0,
        BoundarySpec::CapillaryLike { c: 0.5 },
        InitialSpec::Bump {
            amplitude: 0.6,
            width: 0.5,
            offset: 0.2,
        },
    );
    c.initial.project_compatible = true;
    c.solver.snapshot_stride = 50;
    c
}

fn contact_angle_disk() -> RunConfig {
    let mut c = base(
        "contact-angle-disk",
        unit_disk(0.5),
        H96,
        5.0,
        BoundarySpec::ContactAngle {
            constant: 0.0,
            cos: vec![0.3],
            sin: vec![],
            phi0: None,
        },
        InitialSpec::Ramp {
            slope: 0.15,
            direction: [-1.0, 0.0],
        },
    );
    c.initial.project_compatible = true;
    c.solver.snapshot_stride = 100;
    c.solver.field_stride = Some(100);
    c
}

fn contact_angle_translating() -> RunConfig {
    let mut c = base(
        "contact-angle-translating",
        unit_disk(0.5),
        0.04,
        1.0,
        BoundarySpec::ContactAngle {
            constant: 0.2,
            cos: vec![],
            sin: vec![],
            phi0: None,
        },
        InitialSpec::Constant { value: 0.0 },
    );
    c.initial.project_compatible = true;
    c.solver.snapshot_stride = 25;
    c
}

fn steep_interior() -> RunConfig {
    let mut c = base(
        "steep-interior",
        unit_disk(0.5),
        H96,
        0.5,
        BoundarySpec::Zero,
        InitialSpec::Tanh {
            amplitude: 0.5,
            slope: 5.5,
        },
    );
    c.initial.project_compatible = true;
    c.solver.snapshot_stride = 50;
    c
}

fn annulus_constant() -> RunConfig {
    let domain = Domain::new(
        Shape::Annulus {
            center: [0.0, 0.0],
            inner_radius: 0.5,
            outer_radius: 1.5,
        },
        0.25,
    )
    .expect("valid preset domain");
    let mut c = base(
        "annulus-constant",
        domain,
        0.04,
        0.5,
        BoundarySpec::Constant { c: 0.1 },
        InitialSpec::Bump {
            amplitude: 0.4,
            width: 0.6,
            offset: 0.0,
        },
    );
    c.initial.project_compatible = true;
    c.solver.snapshot_stride = 25;
    c
}

fn forced_decay() -> RunConfig {
    let mut c = base(
        "forced-decay",
        unit_disk(0.5),
        0.04,
        0.5,
        BoundarySpec::Zero,
        InitialSpec::RadialQuartic {
            amplitude: 0.5,
            radius: 1.0,
        },
    );
    c.forcing = ForcingSpec::LinearInU { c: 1.0 };
    c.solver.snapshot_stride = 25;
    c
}

fn linear_limit_1d() -> RunConfig {
    let mut c = base(
        "linear-limit-1d",
        Domain::interval(0.0, 1.0, 0.25).expect("valid preset domain"),
        0.01,
        0.2,
        BoundarySpec::Zero,
        InitialSpec::Cosine {
            amplitude: 1e-3,
            modes: 1.0,
        },
    );
    // run the full window: the heat-equation comparison needs every row
    c.solver.osc_tol = 0.0;
    c.solver.grad_tol = 0.0;
    c.solver.snapshot_stride = 10;
    c
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "identity-smoke",
        description: "constant data, no forcing, zero flux on the unit disk",
        exercises: "constants are stationary; the trace stops after one row",
        build: identity_smoke,
    },
    Preset {
        name: "huisken-disk",
        description:
            "radial quartic bump (osc 0.6) with zero flux on the unit disk, 96² lattice, T = 10",
        exercises: "convergence of the flow to a constant function; u_t maximum principle",
        build: huisken_disk,
    },
    Preset {
        name: "capillary-monotone",
        description: "ψ = 0.5 z on the unit disk, projected bump data, T = 2",
        exercises: "u_t maximum principle under f_z ≥ 0 and ψ_u ≥ 0",
        build: capillary_monotone,
    },
    Preset {
        name: "contact-angle-disk",
        description:
            "u_γ = φ v with φ = 0.3 cos θ on the unit disk, ramp data of slope 0.15, T = 5",
        exercises: "contact-angle boundary condition and its compatibility; band gradient bound",
        build: contact_angle_disk,
    },
    Preset {
        name: "contact-angle-translating",
        description: "u_γ = 0.2 v on the unit disk (non-zero mean angle), T = 1",
        exercises:
            "vertical translation when the boundary integral of φ is non-zero; linear growth of M_T",
        build: contact_angle_translating,
    },
    Preset {
        name: "steep-interior",
        description: "tanh front of slope 5.5 through the disk centre, zero flux, T = 0.5",
        exercises: "interior gradient bound with a large initial interior gradient",
        build: steep_interior,
    },
    Preset {
        name: "annulus-constant",
        description: "ψ ≡ 0.1 on an annulus with radii 0.5 and 1.5, projected bump data",
        exercises: "non-convex boundary with two components; linear growth of M_T",
        build: annulus_constant,
    },
    Preset {
        name: "forced-decay",
        description: "f = z v, zero flux on the unit disk",
        exercises: "u_t maximum principle with a z-monotone forcing",
        build: forced_decay,
    },
    Preset {
        name: "linear-limit-1d",
        description: "ε cos(πx) with ε = 1e-3 on [0, 1], zero flux, T = 0.2",
        exercises: "small-amplitude limit: osc decays like exp(-π² t)",
        build: linear_limit_1d,
    },
];

pub fn preset(name: &str) -> Option<RunConfig> {
    PRESETS.iter().find(|p| p.name == name).map(Preset::config)
}

/// One line per preset: name, description and the property it exercises.
pub fn list_presets() -> String {
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    PRESETS
        .iter()
        .map(|p| {
            format!(
                "{:<width$}  {}\n{:<width$}  exercises: {}\n",
                p.name, p.description, "", p.exercises
            )
        })
        .collect()
}

/// The stored trace: schema version, config echo and the solver output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema: u32,
    pub config: RunConfig,
    pub trace: SolverTrace,
}

impl TraceDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TraceDocument =
            serde_json::from_str(text).map_err(|e| FlowError::Schema(e.to_string()))?;
        if doc.schema != TRACE_SCHEMA {
            return Err(FlowError::Schema(format!(
                "trace schema {} is not the supported {TRACE_SCHEMA}",
                doc.schema
            )));
        }
        doc.trace.validate()?;
        Ok(doc)
    }

    /// Recompute the estimate report, optionally with different toggles.
    pub fn assess(&self, toggles: Option<HarnessToggles>) -> Result<EstimateReport> {
        let cfg = &self.config;
        let mut settings = cfg.harness.clone();
        if let Some(t) = toggles {
            settings.toggles = t;
        }
        let ctx = HarnessContext {
            grid: cfg.grid()?,
            datum: cfg.datum()?,
            forcing: cfg.forcing(),
            settings,
            seed: cfg.seed,
        };
        assess(&self.trace, &ctx)
    }
}

/// The exact bytes written to `report.json`.
pub fn report_json(report: &EstimateReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    s
}

pub const CSV_COLUMNS: [&str; 8] = [
    "t",
    "osc",
    "sup_du_global",
    "sup_du_interior",
    "sup_du_band",
    "sup_ut",
    "m_t",
    "bdry_residual",
];

pub fn write_trace_csv(trace: &SolverTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in &trace.rows {
        let vals = [
            r.t,
            r.osc,
            r.sup_du_global,
            r.sup_du_interior,
            r.sup_du_band,
            r.sup_ut,
            r.m_t,
            r.bdry_residual,
        ];
        w.write_record(vals.iter().map(|v| v.to_string()))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> FlowError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FlowError::Io(io),
        other => FlowError::Schema(format!("{other:?}")),
    }
}

/// Options that the command line layers over a config.
#[derive(Clone, Debug, Default)]
pub struct ScenarioOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub override_compatibility: bool,
    /// Serial node evaluation: the bitwise reference.
    pub reference_mode: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub document: TraceDocument,
    pub report: EstimateReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            exit::PASS
        } else {
            exit::FAIL
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    trace_schema: u32,
    report_schema: u32,
    config: &'a RunConfig,
    initial_data: &'a str,
    grid: GridSummary,
    dt: f64,
    steps: usize,
    converged_at: Option<f64>,
    pass: bool,
    files: Vec<String>,
}

#[derive(Serialize)]
struct GridSummary {
    h: f64,
    lattice: [usize; 2],
    interior: usize,
    band: usize,
    boundary_adjacent: usize,
    ghost: usize,
}

fn summary_text(
    cfg: &RunConfig,
    doc: &TraceDocument,
    report: &EstimateReport,
    grid: &Grid,
) -> String {
    let t = &doc.trace;
    let first = t.first_row();
    let last = t.last_row();
    let mut s = String::new();
    s.push_str(&format!("scenario  {}\n", cfg.name));
    s.push_str(&format!(
        "grid      h = {}, {} active nodes, {} ghost nodes\n",
        grid.h(),
        grid.active().len(),
        grid.ghosts().len()
    ));
    s.push_str(&format!(
        "time      dt = {:e}, {} steps, t_end = {}\n",
        t.dt, t.steps, last.t
    ));
    match t.converged_at {
        Some(tc) => s.push_str(&format!("converged at t = {tc}\n")),
        None => s.push_str("converged no\n"),
    }
    s.push_str(&format!(
        "osc       {:.6e} -> {:.6e}\nsup|Du|   {:.6e} -> {:.6e}\nmean      {:.6e} -> {:.6e}\n",
        first.osc, last.osc, first.sup_du_global, last.sup_du_global, first.mean, last.mean
    ));
    s.push_str(&format!(
        "compat    residual {:.3e}, tolerance {:.3e}{}\n\n",
        t.compatibility.max_residual,
        t.compatibility.tolerance,
        if t.compatibility_overridden {
            " (overridden)"
        } else {
            ""
        }
    ));
    s.push_str(&report.summary_table());
    let c = &report.constants;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
    s.push_str(&format!(
        "\nobserved  C1 = {}, C2 = {}, C3 = {}, M1 = {}, M2 = {}\n",
        fmt(c.c1),
        fmt(c.c2),
        fmt(c.c3),
        fmt(c.m1),
        fmt(c.m2)
    ));
    s
}

fn write_fields(doc: &TraceDocument, grid: &Arc<Grid>, dir: &Path) -> Result<Vec<PathBuf>> {
    let dir = dir.join("fields");
    fs::create_dir_all(&dir)?;
    let mut out = Vec::new();
    for (i, snap) in doc.trace.snapshots.iter().enumerate() {
        let u = doc.trace.field(grid, i)?;
        let mut text = format!("# t = {}\n# x y u\n", snap.t);
        for &k in grid.active() {
            let x = grid.point(k);
            text.push_str(&format!("{} {} {}\n", x[0], x[1], u.get(k)));
        }
        let path = dir.join(format!("snapshot_{i:03}.txt"));
        fs::write(&path, text)?;
        out.push(path);
    }
    Ok(out)
}

/// Resolve the output directory: explicit option, then the config, then
/// `mcflow-out/<name>`.
pub fn output_dir(cfg: &RunConfig, opts: &ScenarioOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("mcflow-out").join(&cfg.name))
}

/// Solve, assess and write every output file.
///
/// The report is computed from the trace after a round trip through its JSON
/// form, so replaying the stored trace reproduces it exactly.
pub fn run_scenario(config: &RunConfig, opts: &ScenarioOptions) -> Result<RunOutcome> {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.reference_mode {
        cfg.solver.parallelism = Parallelism::Serial;
    }
    cfg.override_compatibility |= opts.override_compatibility;
    cfg.validate()?;
    let out_dir = output_dir(&cfg, opts);
    cfg.output_dir = None;

    let problem = cfg.problem()?;
    let trace = run(
        &problem,
        &cfg.solver,
        RunOptions {
            override_compatibility: cfg.override_compatibility,
            compatibility_tol: cfg.compatibility_tol,
        },
    )?;
    let trace_json = TraceDocument {
        schema: TRACE_SCHEMA,
        config: cfg.clone(),
        trace,
    }
    .to_json();
    let document = TraceDocument::from_json(&trace_json)?;
    let report = document.assess(None)?;
    let grid = cfg.grid()?;

    fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    let trace_path = out_dir.join("trace.json");
    fs::write(&trace_path, &trace_json)?;
    files.push(trace_path);
    let csv_path = out_dir.join("trace.csv");
    write_trace_csv(&document.trace, &csv_path)?;
    files.push(csv_path);
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, report_json(&report))?;
    files.push(report_path);
    let summary_path = out_dir.join("summary.txt");
    fs::write(&summary_path, summary_text(&cfg, &document, &report, &grid))?;
    files.push(summary_path);
    if cfg.dump_fields {
        files.extend(write_fields(&document, &grid, &out_dir)?);
    }

    let manifest_path = out_dir.join("manifest.json");
    let names: Vec<String> = files
        .iter()
        .chain(std::iter::once(&manifest_path))
        .filter_map(|p| p.strip_prefix(&out_dir).ok())
        .map(|p| p.display().to_string())
        .collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        trace_schema: TRACE_SCHEMA,
        report_schema: crate::estimates::REPORT_SCHEMA,
        config: &cfg,
        initial_data: problem.initial.name(),
        grid: GridSummary {
            h: grid.h(),
            lattice: [grid.shape().0, grid.shape().1],
            interior: grid.count(NodeKind::Interior),
            band: grid.count(NodeKind::Band),
            boundary_adjacent: grid.count(NodeKind::BoundaryAdjacent),
            ghost: grid.count(NodeKind::Ghost),
        },
        dt: document.trace.dt,
        steps: document.trace.steps,
        converged_at: document.trace.converged_at,
        pass: report.pass,
        files: names,
    };
    let mut m = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    m.push('\n');
    fs::write(&manifest_path, m)?;
    files.push(manifest_path);

    Ok(RunOutcome {
        config: cfg,
        out_dir,
        document,
        report,
        files,
    })
}

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub report: EstimateReport,
    /// The recomputed report equals the stored file byte for byte.
    pub identical: bool,
    /// Toggles differ from the ones the run used.
    pub retoggled: bool,
}

impl ReplayOutcome {
    /// Plain replays must reproduce the stored report; re-toggled replays exit
    /// by the new verdicts.
    pub fn exit_code(&self) -> i32 {
        let ok = if self.retoggled {
            self.report.pass
        } else {
            self.identical
        };
        if ok {
            exit::PASS
        } else {
            exit::FAIL
        }
    }
}

/// Recompute the report of a stored trace and compare it with `report_path`.
/// `overrides` switches named checks on or off relative to the stored run.
pub fn replay(
    trace_path: &Path,
    report_path: &Path,
    overrides: &[(String, bool)],
) -> Result<ReplayOutcome> {
    let text = fs::read_to_string(trace_path)
        .map_err(|e| FlowError::Schema(format!("{}: {e}", trace_path.display())))?;
    let doc = TraceDocument::from_json(&text)?;
    let stored = fs::read(report_path)
        .map_err(|e| FlowError::Schema(format!("{}: {e}", report_path.display())))?;
    let mut toggles = doc.config.harness.toggles;
    for (name, on) in overrides {
        toggles.set(name, *on)?;
    }
    let retoggled = toggles != doc.config.harness.toggles;
    let report = doc.assess(Some(toggles))?;
    let identical = report_json(&report).as_bytes() == stored.as_slice();
    Ok(ReplayOutcome {
        report,
        identical,
        retoggled,
    })
}
