//! Initial data presets and the compatibility projection.
//!
//! Initial data are plain functions of the point so that they can be sampled
//! on ghost nodes too; the compatibility check needs values just outside the
//! boundary.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryDatum;
use crate::geometry::Domain;
use crate::Point;

/// A shareable scalar function of the point.
#[derive(Clone)]
pub struct InitialData {
    name: String,
    f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("InitialData").field(&self.name).finish()
    }
}

impl InitialData {
    pub fn new(name: impl Into<String>, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        InitialData {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: Point) -> f64 {
        (self.f)(x)
    }
}

/// Named initial data. Coordinates are taken relative to the domain centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum InitialSpec {
    Constant {
        value: f64,
    },
    /// `A (ρ² - ρ⁴/2)`, `ρ = |x - c| / radius`. Its radial derivative vanishes
    /// at `ρ = 1`, so it is compatible with zero flux on a disk of that radius.
    RadialQuartic {
        amplitude: f64,
        radius: f64,
    },
    /// `offset + A exp(-|x - c|² / width²)`.
    Bump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `A cos(k π (x₁ - a) / (b - a))` where `[a, b]` is the extent of the
    /// domain along the first axis.
    Cosine {
        amplitude: f64,
        modes: f64,
    },
    /// `slope ⟨x - c, e⟩` for the unit vector `e` along `direction`.
    Ramp {
        slope: f64,
        direction: Point,
    },
    /// `A tanh(slope (x₁ - c₁) / A)`: a front of height `2A` whose gradient at
    /// the centre line is `slope`.
    Tanh {
        amplitude: f64,
        slope: f64,
    },
}

impl InitialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InitialSpec::Constant { .. } => "constant",
            InitialSpec::RadialQuartic { .. } => "radial-quartic",
            InitialSpec::Bump { .. } => "bump",
            InitialSpec::Cosine { .. } => "cosine",
            InitialSpec::Ramp { .. } => "ramp",
            InitialSpec::Tanh { .. } => "tanh",
        }
    }

    pub fn build(&self, domain: &Domain) -> InitialData {
        let c = domain.center();
        let rel = move |x: Point| [x[0] - c[0], x[1] - c[1]];
        let name = self.name();
        match *self {
            InitialSpec::Constant { value } => InitialData::new(name, move |_| value),
            InitialSpec::RadialQuartic { amplitude, radius } => InitialData::new(name, move |x| {
                let y = rel(x);
                let r2 = (y[0] * y[0] + y[1] * y[1]) / (radius * radius);
                amplitude * (r2 - 0.5 * r2 * r2)
            }),
            InitialSpec::Bump {
                amplitude,
                width,
                offset,
            } => InitialData::new(name, move |x| {
                let y = rel(x);
                offset + amplitude * (-(y[0] * y[0] + y[1] * y[1]) / (width * width)).exp()
            }),
            InitialSpec::Cosine { amplitude, modes } => {
                let a = c[0] - domain.half_extent()[0];
                let len = 2.0 * domain.half_extent()[0];
                InitialData::new(name, move |x| {
                    amplitude * (modes * std::f64::consts::PI * (x[0] - a) / len).cos()
                })
            }
            InitialSpec::Ramp { slope, direction } => {
                let n = direction[0].hypot(direction[1]);
                let e = [direction[0] / n, direction[1] / n];
                InitialData::new(name, move |x| {
                    let y = rel(x);
                    slope * (y[0] * e[0] + y[1] * e[1])
                })
            }
            InitialSpec::Tanh { amplitude, slope } => InitialData::new(name, move |x| {
                amplitude * (slope * rel(x)[0] / amplitude).tanh()
            }),
        }
    }
}

/// Initial data in a run configuration: a preset plus whether to project it
/// onto the compatibility condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    #[serde(flatten)]
    pub spec: InitialSpec,
    #[serde(default)]
    pub project_compatible: bool,
}

fn probe_step(domain: &Domain) -> f64 {
    let e = domain.half_extent();
    1e-5 * e[0].max(e[1]).max(1.0)
}

/// Central difference of `u` along `dir` at `x`.
fn directional(u: &InitialData, x: Point, dir: Point, eps: f64) -> f64 {
    let fwd = u.eval([x[0] + eps * dir[0], x[1] + eps * dir[1]]);
    let back = u.eval([x[0] - eps * dir[0], x[1] - eps * dir[1]]);
    (fwd - back) / (2.0 * eps)
}

/// `∂u/∂γ` at a boundary point with inward normal `gamma`.
pub fn normal_derivative(u: &InitialData, domain: &Domain, foot: Point, gamma: Point) -> f64 {
    directional(u, foot, gamma, probe_step(domain))
}

/// `|D'u|²` at a boundary point. Zero in one dimension.
pub fn tangential_slope2(u: &InitialData, domain: &Domain, foot: Point, gamma: Point) -> f64 {
    if domain.dim() == 1 {
        return 0.0;
    }
    let t = directional(u, foot, [-gamma[1], gamma[0]], probe_step(domain));
    t * t
}

/// The normal derivative the datum prescribes for `u` at `foot`.
pub fn prescribed_flux(
    u: &InitialData,
    domain: &Domain,
    datum: &BoundaryDatum,
    foot: Point,
    gamma: Point,
) -> f64 {
    match datum {
        BoundaryDatum::Neumann(psi) => psi.value(foot, u.eval(foot)),
        BoundaryDatum::ContactAngle { phi, .. } => {
            let p = phi.eval(domain.boundary_parameter(foot));
            let t2 = tangential_slope2(u, domain, foot, gamma);
            p * ((1.0 + t2) / (1.0 - p * p)).sqrt()
        }
    }
}

/// Cut-off profile `q(d) = d χ(d)` with `χ = 1` for `d ≤ μ₀/2` and a quintic
/// smoothstep down to `0` at `d = μ₀`.
pub fn cutoff(d: f64, band_width: f64) -> f64 {
    let half = 0.5 * band_width;
    if d <= half {
        return d;
    }
    if d >= band_width {
        return 0.0;
    }
    let s = (d - half) / half;
    d * (1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s))
}

/// Add `β(π(x)) q(d(x))` to `u0` so that the sum meets the boundary datum
/// exactly, where `π` is the foot point and `β = prescribed - ∂u0/∂γ`.
///
/// `q(0) = 0` keeps boundary values and tangential slopes, `q'(0) = 1` and the
/// constancy of `β∘π` along normals shift the normal derivative by `β`.
pub fn project_compatible(u0: &InitialData, domain: &Domain, datum: &BoundaryDatum) -> InitialData {
    let u = u0.clone();
    let domain = domain.clone();
    let datum = datum.clone();
    let name = format!("{}+compatible", u0.name());
    InitialData::new(name, move |x| {
        let base = u.eval(x);
        let pr = domain.project(x);
        let q = cutoff(pr.signed_distance, domain.band_width());
        if q == 0.0 {
            return base;
        }
        let beta = prescribed_flux(&u, &domain, &datum, pr.foot, pr.gamma)
            - normal_derivative(&u, &domain, pr.foot, pr.gamma);
        base + beta * q
    })
}
