//! Domains with closed-form distance functions.
//!
//! Every built-in shape has an exact signed distance `d` (positive inside), an
//! analytic inward normal `γ = Dd` on the boundary band `{0 ≤ d ≤ μ₀}`, and the
//! derivative `Dγ` there. The band width `μ₀` is part of the domain and is
//! validated against the smoothness radius `μ₁` of the distance function.

mod grid;

pub use grid::{GhostNode, Grid, NodeKind};

use serde::{Deserialize, Serialize};

use crate::{FlowError, Point, Result};

/// 2×2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

/// Tolerance (relative to the shape scale) under which a point counts as lying
/// on the boundary.
const ON_BOUNDARY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
    },
    Annulus {
        center: Point,
        inner_radius: f64,
        outer_radius: f64,
    },
    RoundedRectangle {
        center: Point,
        half_width: f64,
        half_height: f64,
        corner_radius: f64,
    },
    Interval {
        left: f64,
        right: f64,
    },
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FlowError::InvalidDomain(msg));
        match *self {
            Shape::Disk { radius, center } => {
                if !(radius > 0.0 && radius.is_finite()) || !finite(center) {
                    return bad(format!("disk radius must be positive, got {radius}"));
                }
            }
            Shape::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                if !finite(center)
                    || !(inner_radius > 0.0 && inner_radius < outer_radius)
                    || !outer_radius.is_finite()
                {
                    return bad(format!(
                        "annulus needs 0 < inner < outer, got {inner_radius}, {outer_radius}"
                    ));
                }
            }
            Shape::RoundedRectangle {
                center,
                half_width,
                half_height,
                corner_radius,
            } => {
                if !finite(center) || !(half_width > 0.0 && half_height > 0.0) {
                    return bad("rounded rectangle needs positive half sizes".into());
                }
                if !(corner_radius > 0.0 && corner_radius <= half_width.min(half_height)) {
                    return bad(format!(
                        "corner radius must lie in (0, min half size], got {corner_radius}"
                    ));
                }
            }
            Shape::Interval { left, right } => {
                if !left.is_finite() || !right.is_finite() || left >= right {
                    return bad(format!(
                        "interval needs left < right, got [{left}, {right}]"
                    ));
                }
            }
        }
        Ok(())
    }
}

fn finite(p: Point) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

/// A domain together with the width `μ₀` of its boundary band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    #[serde(flatten)]
    shape: Shape,
    band_width: f64,
}

/// Local boundary geometry at a point of the band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalFrame {
    pub distance: f64,
    /// Inward unit normal `γ = Dd`.
    pub gamma: Point,
    /// `dgamma[i][j] = ∂_j γ^i`.
    pub dgamma: Mat2,
    /// Tangential projector `c^ij = δ_ij - γ^i γ^j`.
    pub projector: Mat2,
}

impl NormalFrame {
    fn new(distance: f64, gamma: Point, dgamma: Mat2) -> Self {
        let mut projector = [[0.0; 2]; 2];
        for (i, row) in projector.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = f64::from(u8::from(i == j)) - gamma[i] * gamma[j];
            }
        }
        NormalFrame {
            distance,
            gamma,
            dgamma,
            projector,
        }
    }

    /// Tangential part `ζ' = c ζ`.
    pub fn tangential(&self, v: Point) -> Point {
        mat_vec(&self.projector, v)
    }

    /// Normal component `ζ_γ = γ · ζ`.
    pub fn normal_component(&self, v: Point) -> f64 {
        dot(self.gamma, v)
    }

    /// Frobenius norm of `Dγ`.
    pub fn dgamma_norm(&self) -> f64 {
        self.dgamma
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn mat_vec(m: &Mat2, v: Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

/// Unit radial direction, falling back to +x at the origin.
fn radial(q: Point) -> (Point, f64) {
    let r = norm(q);
    if r > 0.0 {
        ([q[0] / r, q[1] / r], r)
    } else {
        ([1.0, 0.0], 0.0)
    }
}

/// `s (I - r̂ r̂ᵀ) / r`.
fn circle_dgamma(rhat: Point, r: f64, s: f64) -> Mat2 {
    let mut m = [[0.0; 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            let delta = f64::from(u8::from(i == j));
            *c = s * (delta - rhat[i] * rhat[j]) / r;
        }
    }
    m
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Closest boundary point of a point near the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryProjection {
    /// Signed distance, positive inside.
    pub signed_distance: f64,
    pub foot: Point,
    /// Inward unit normal at the foot point.
    pub gamma: Point,
    dgamma: Mat2,
}

impl Domain {
    pub fn new(shape: Shape, band_width: f64) -> Result<Self> {
        shape.validate()?;
        let domain = Domain { shape, band_width };
        let mu1 = domain.smoothness_radius();
        if !(band_width > 0.0 && band_width <= 0.5 * mu1) {
            return Err(FlowError::InvalidDomain(format!(
                "band width {band_width} must lie in (0, μ₁/2] with μ₁ = {mu1}"
            )));
        }
        Ok(domain)
    }

    pub fn disk(radius: f64, band_width: f64) -> Result<Self> {
        Self::new(
            Shape::Disk {
                center: [0.0, 0.0],
                radius,
            },
            band_width,
        )
    }

    pub fn interval(left: f64, right: f64, band_width: f64) -> Result<Self> {
        Self::new(Shape::Interval { left, right }, band_width)
    }

    /// Re-run validation, e.g. after deserialisation.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.shape.clone(), self.band_width).map(|_| ())
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Band width `μ₀`.
    pub fn band_width(&self) -> f64 {
        self.band_width
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Radius `μ₁` of the collar on which the distance function is smooth.
    pub fn smoothness_radius(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => radius,
            Shape::Annulus {
                inner_radius,
                outer_radius,
                ..
            } => 0.5 * (outer_radius - inner_radius),
            Shape::RoundedRectangle { corner_radius, .. } => corner_radius,
            Shape::Interval { left, right } => 0.5 * (right - left),
        }
    }

    pub fn center(&self) -> Point {
        match self.shape {
            Shape::Disk { center, .. }
            | Shape::Annulus { center, .. }
            | Shape::RoundedRectangle { center, .. } => center,
            Shape::Interval { left, right } => [0.5 * (left + right), 0.0],
        }
    }

    /// Half extents of the axis-aligned bounding box around [`Domain::center`].
    pub fn half_extent(&self) -> Point {
        match self.shape {
            Shape::Disk { radius, .. } => [radius, radius],
            Shape::Annulus { outer_radius, .. } => [outer_radius, outer_radius],
            Shape::RoundedRectangle {
                half_width,
                half_height,
                ..
            } => [half_width, half_height],
            Shape::Interval { left, right } => [0.5 * (right - left), 0.0],
        }
    }

    fn scale(&self) -> f64 {
        let e = self.half_extent();
        e[0].max(e[1])
    }

    /// Exact signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.project(x).signed_distance
    }

    /// `d(x) = dist(x, ∂Ω)` for `x` in the closed domain.
    pub fn distance(&self, x: Point) -> Result<f64> {
        let sd = self.signed_distance(x);
        if sd < -ON_BOUNDARY * self.scale() || !sd.is_finite() {
            return Err(FlowError::OutsideDomain { point: x });
        }
        Ok(sd.max(0.0))
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) >= -ON_BOUNDARY * self.scale()
    }

    /// Nearest boundary point, inward normal there and signed distance.
    pub fn project(&self, x: Point) -> BoundaryProjection {
        match self.shape {
            Shape::Disk { center, radius } => {
                let (rhat, r) = radial([x[0] - center[0], x[1] - center[1]]);
                BoundaryProjection {
                    signed_distance: radius - r,
                    foot: [center[0] + radius * rhat[0], center[1] + radius * rhat[1]],
                    gamma: [-rhat[0], -rhat[1]],
                    dgamma: if r > 0.0 {
                        circle_dgamma(rhat, r, -1.0)
                    } else {
                        [[f64::INFINITY; 2]; 2]
                    },
                }
            }
            Shape::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                let (rhat, r) = radial([x[0] - center[0], x[1] - center[1]]);
                let to_outer = outer_radius - r;
                let to_inner = r - inner_radius;
                if to_outer <= to_inner {
                    BoundaryProjection {
                        signed_distance: to_outer,
                        foot: [
                            center[0] + outer_radius * rhat[0],
                            center[1] + outer_radius * rhat[1],
                        ],
                        gamma: [-rhat[0], -rhat[1]],
                        dgamma: circle_dgamma(rhat, r, -1.0),
                    }
                } else {
                    BoundaryProjection {
                        signed_distance: to_inner,
                        foot: [
                            center[0] + inner_radius * rhat[0],
                            center[1] + inner_radius * rhat[1],
                        ],
                        gamma: rhat,
                        dgamma: if r > 0.0 {
                            circle_dgamma(rhat, r, 1.0)
                        } else {
                            [[f64::INFINITY; 2]; 2]
                        },
                    }
                }
            }
            Shape::RoundedRectangle {
                center,
                half_width,
                half_height,
                corner_radius,
            } => {
                let q = [x[0] - center[0], x[1] - center[1]];
                let inner = [half_width - corner_radius, half_height - corner_radius];
                let dx = q[0].abs() - inner[0];
                let dy = q[1].abs() - inner[1];
                let (sx, sy) = (sign(q[0]), sign(q[1]));
                if dx > 0.0 && dy > 0.0 {
                    let corner = [sx * inner[0], sy * inner[1]];
                    let (ehat, e) = radial([q[0] - corner[0], q[1] - corner[1]]);
                    BoundaryProjection {
                        signed_distance: corner_radius - e,
                        foot: [
                            center[0] + corner[0] + corner_radius * ehat[0],
                            center[1] + corner[1] + corner_radius * ehat[1],
                        ],
                        gamma: [-ehat[0], -ehat[1]],
                        dgamma: circle_dgamma(ehat, e, -1.0),
                    }
                } else if dx > dy {
                    BoundaryProjection {
                        signed_distance: half_width - q[0].abs(),
                        foot: [center[0] + sx * half_width, x[1]],
                        gamma: [-sx, 0.0],
                        dgamma: [[0.0; 2]; 2],
                    }
                } else {
                    BoundaryProjection {
                        signed_distance: half_height - q[1].abs(),
                        foot: [x[0], center[1] + sy * half_height],
                        gamma: [0.0, -sy],
                        dgamma: [[0.0; 2]; 2],
                    }
                }
            }
            Shape::Interval { left, right } => {
                let (to_left, to_right) = (x[0] - left, right - x[0]);
                if to_left <= to_right {
                    BoundaryProjection {
                        signed_distance: to_left,
                        foot: [left, 0.0],
                        gamma: [1.0, 0.0],
                        dgamma: [[0.0; 2]; 2],
                    }
                } else {
                    BoundaryProjection {
                        signed_distance: to_right,
                        foot: [right, 0.0],
                        gamma: [-1.0, 0.0],
                        dgamma: [[0.0; 2]; 2],
                    }
                }
            }
        }
    }

    /// `d`, `γ = Dd`, `Dγ` and `c^ij` at a point of the closed band `0 ≤ d ≤ μ₀`.
    pub fn normal_frame(&self, x: Point) -> Result<NormalFrame> {
        let distance = self.distance(x)?;
        if distance > self.band_width {
            return Err(FlowError::OutsideBand {
                point: x,
                distance,
                band_width: self.band_width,
            });
        }
        let p = self.project(x);
        Ok(NormalFrame::new(distance, p.gamma, p.dgamma))
    }

    /// Angular parameter of a boundary point about the domain center. For the
    /// interval the left end maps to 0 and the right end to π.
    pub fn boundary_parameter(&self, foot: Point) -> f64 {
        match self.shape {
            Shape::Interval { left, right } => {
                if (foot[0] - left).abs() <= (foot[0] - right).abs() {
                    0.0
                } else {
                    std::f64::consts::PI
                }
            }
            _ => {
                let c = self.center();
                (foot[1] - c[1]).atan2(foot[0] - c[0])
            }
        }
    }

    /// Roughly evenly spaced boundary points (`n` per boundary component).
    pub fn boundary_samples(&self, n: usize) -> Vec<Point> {
        let n = n.max(4);
        let ring = |c: Point, r: f64| {
            (0..n)
                .map(move |k| {
                    let th = std::f64::consts::TAU * k as f64 / n as f64;
                    [c[0] + r * th.cos(), c[1] + r * th.sin()]
                })
                .collect::<Vec<_>>()
        };
        match self.shape {
            Shape::Disk { center, radius } => ring(center, radius),
            Shape::Annulus {
                center,
                inner_radius,
                outer_radius,
            } => {
                let mut v = ring(center, outer_radius);
                v.extend(ring(center, inner_radius));
                v
            }
            Shape::RoundedRectangle { .. } => {
                // project a large ring onto the boundary
                let c = self.center();
                ring(c, 2.0 * self.scale())
                    .into_iter()
                    .map(|x| self.project(x).foot)
                    .collect()
            }
            Shape::Interval { left, right } => vec![[left, 0.0], [right, 0.0]],
        }
    }
}

/// Default band width `½ min{μ₁, μ₂, 1}` where `μ₂` keeps
/// `|ψ_u| μ₂ ≤ 1/100`.
pub fn recommended_band_width(smoothness_radius: f64, sup_psi_u: f64) -> f64 {
    let mu2 = if sup_psi_u > 0.0 {
        1.0 / (100.0 * sup_psi_u)
    } else {
        f64::INFINITY
    };
    0.5 * smoothness_radius.min(mu2).min(1.0)
}
