use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::Point;

type ScalarFn = Arc<dyn Fn(Point, f64, Point) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point, f64, Point) -> Point + Send + Sync>;

/// Named forcing presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum ForcingSpec {
    Zero,
    /// `f = c z v`.
    LinearInU {
        c: f64,
    },
    /// `f = (c z + slope x₁) v`, a graph-type forcing `f̃(x, z) √(1 + |p|²)`.
    GraphForced {
        c: f64,
        slope: f64,
    },
}

/// What the user asserts about the forcing. The growth condition cannot be
/// decided by sampling, so the declaration is carried into the run report next
/// to the sampled evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralDeclaration {
    /// `f_z ≥ 0`.
    pub z_monotone: bool,
    /// `|f_x|/|p| + Σ|f_pj| + |f - Σ f_pj p_j| = o(log |p|)`.
    pub log_growth: bool,
}

#[derive(Clone)]
struct Derivatives {
    dx: VectorFn,
    dz: ScalarFn,
    dp: VectorFn,
}

/// The lower-order term `f(x, z, p)` and its first derivatives.
#[derive(Clone)]
pub struct Forcing {
    name: String,
    zero: bool,
    value: ScalarFn,
    derivatives: Option<Derivatives>,
    declared: StructuralDeclaration,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("name", &self.name)
            .field("declared", &self.declared)
            .finish()
    }
}

fn v_of(p: Point) -> f64 {
    (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing {
            name: "zero".into(),
            zero: true,
            value: Arc::new(|_, _, _| 0.0),
            derivatives: Some(Derivatives {
                dx: Arc::new(|_, _, _| [0.0, 0.0]),
                dz: Arc::new(|_, _, _| 0.0),
                dp: Arc::new(|_, _, _| [0.0, 0.0]),
            }),
            declared: StructuralDeclaration {
                z_monotone: true,
                log_growth: true,
            },
        }
    }

    /// `f = c z v`. Declared z-monotone iff `c ≥ 0`.
    pub fn linear_in_u(c: f64) -> Self {
        Forcing {
            name: format!("linear-in-u(c={c})"),
            zero: c == 0.0,
            value: Arc::new(move |_, z, p| c * z * v_of(p)),
            derivatives: Some(Derivatives {
                dx: Arc::new(|_, _, _| [0.0, 0.0]),
                dz: Arc::new(move |_, _, p| c * v_of(p)),
                dp: Arc::new(move |_, z, p| {
                    let v = v_of(p);
                    [c * z * p[0] / v, c * z * p[1] / v]
                }),
            }),
            declared: StructuralDeclaration {
                z_monotone: c >= 0.0,
                log_growth: true,
            },
        }
    }

    /// `f = (c z + slope x₁) v`.
    pub fn graph_forced(c: f64, slope: f64) -> Self {
        Forcing {
            name: format!("graph-forced(c={c}, slope={slope})"),
            zero: c == 0.0 && slope == 0.0,
            value: Arc::new(move |x, z, p| (c * z + slope * x[0]) * v_of(p)),
            derivatives: Some(Derivatives {
                dx: Arc::new(move |_, _, p| [slope * v_of(p), 0.0]),
                dz: Arc::new(move |_, _, p| c * v_of(p)),
                dp: Arc::new(move |x, z, p| {
                    let g = (c * z + slope * x[0]) / v_of(p);
                    [g * p[0], g * p[1]]
                }),
            }),
            declared: StructuralDeclaration {
                z_monotone: c >= 0.0,
                log_growth: true,
            },
        }
    }

    pub fn from_spec(spec: &ForcingSpec) -> Self {
        match *spec {
            ForcingSpec::Zero => Self::zero(),
            ForcingSpec::LinearInU { c } => Self::linear_in_u(c),
            ForcingSpec::GraphForced { c, slope } => Self::graph_forced(c, slope),
        }
    }

    /// A user forcing without derivative evaluators. Call
    /// [`Forcing::with_difference_derivatives`] before structural checks.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(Point, f64, Point) -> f64 + Send + Sync + 'static,
        declared: StructuralDeclaration,
    ) -> Self {
        Forcing {
            name: name.into(),
            zero: false,
            value: Arc::new(f),
            derivatives: None,
            declared,
        }
    }

    /// Central differences with relative step `1e-6` for `f_x`, `f_z`, `f_p`.
    pub fn with_difference_derivatives(mut self) -> Self {
        let f = Arc::clone(&self.value);
        let step = |s: f64| 1e-6 * s.abs().max(1.0);
        let (f1, f2, f3) = (Arc::clone(&f), Arc::clone(&f), f);
        self.derivatives = Some(Derivatives {
            dx: Arc::new(move |x, z, p| {
                let mut out = [0.0; 2];
                for (i, o) in out.iter_mut().enumerate() {
                    let e = step(x[i]);
                    let (mut xp, mut xm) = (x, x);
                    xp[i] += e;
                    xm[i] -= e;
                    *o = (f1(xp, z, p) - f1(xm, z, p)) / (2.0 * e);
                }
                out
            }),
            dz: Arc::new(move |x, z, p| {
                let e = step(z);
                (f2(x, z + e, p) - f2(x, z - e, p)) / (2.0 * e)
            }),
            dp: Arc::new(move |x, z, p| {
                let mut out = [0.0; 2];
                for (i, o) in out.iter_mut().enumerate() {
                    let e = step(p[i]);
                    let (mut pp, mut pm) = (p, p);
                    pp[i] += e;
                    pm[i] -= e;
                    *o = (f3(x, z, pp) - f3(x, z, pm)) / (2.0 * e);
                }
                out
            }),
        });
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn declared(&self) -> StructuralDeclaration {
        self.declared
    }

    pub fn value(&self, x: Point, z: f64, p: Point) -> f64 {
        (self.value)(x, z, p)
    }

    pub fn has_derivatives(&self) -> bool {
        self.derivatives.is_some()
    }

    pub fn f_x(&self, x: Point, z: f64, p: Point) -> Option<Point> {
        self.derivatives.as_ref().map(|d| (d.dx)(x, z, p))
    }

    pub fn f_z(&self, x: Point, z: f64, p: Point) -> Option<f64> {
        self.derivatives.as_ref().map(|d| (d.dz)(x, z, p))
    }

    pub fn f_p(&self, x: Point, z: f64, p: Point) -> Option<Point> {
        self.derivatives.as_ref().map(|d| (d.dp)(x, z, p))
    }
}
