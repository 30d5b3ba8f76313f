use serde::{Deserialize, Serialize};

use super::Forcing;
use crate::{FlowError, Point, Result};

/// Sampled evidence for `f_z ≥ 0` on the probe set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZMonotoneProbe {
    pub declared: bool,
    pub samples: usize,
    pub min_f_z: f64,
    pub worst_x: Point,
    pub worst_z: f64,
    pub worst_p: Point,
    /// `min f_z ≥ -1e-10`.
    pub holds: bool,
}

/// The growth quotient `(|f_x|/|p| + Σ|f_pj| + |f - Σ f_pj p_j|) / log|p|`,
/// maximised over the probe set at geometrically spaced `|p|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProbe {
    pub declared: bool,
    pub magnitudes: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Non-increasing along the magnitudes and at least halved from first to
    /// last (or identically zero).
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub forcing: String,
    pub z_monotone: ZMonotoneProbe,
    pub log_growth: GrowthProbe,
}

const DIRECTIONS: usize = 8;
const Z_SAMPLES: usize = 9;

fn directions() -> impl Iterator<Item = Point> {
    (0..DIRECTIONS).map(|k| {
        let th = std::f64::consts::TAU * k as f64 / DIRECTIONS as f64;
        [th.cos(), th.sin()]
    })
}

fn z_values(m0: f64) -> impl Iterator<Item = f64> {
    (0..Z_SAMPLES).map(move |k| -m0 + 2.0 * m0 * k as f64 / (Z_SAMPLES - 1) as f64)
}

/// Sample the monotonicity and growth conditions of `f` over `probes × [-m0, m0]`.
///
/// The growth condition is asymptotic, so the result is evidence only.
pub fn check_structural(f: &Forcing, m0: f64, probes: &[Point]) -> Result<StructuralReport> {
    if probes.is_empty() {
        return Err(FlowError::Config("structural probe set is empty".into()));
    }
    if !f.has_derivatives() {
        return Err(FlowError::Config(format!(
            "forcing {} has no derivative evaluators",
            f.name()
        )));
    }
    let declared = f.declared();

    let mut z_probe = ZMonotoneProbe {
        declared: declared.z_monotone,
        samples: 0,
        min_f_z: f64::INFINITY,
        worst_x: [0.0; 2],
        worst_z: 0.0,
        worst_p: [0.0; 2],
        holds: true,
    };
    for &x in probes {
        for z in z_values(m0) {
            for mag in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0] {
                for d in directions() {
                    let p = [mag * d[0], mag * d[1]];
                    let fz = f.f_z(x, z, p).expect("checked above");
                    z_probe.samples += 1;
                    if fz < z_probe.min_f_z {
                        z_probe.min_f_z = fz;
                        z_probe.worst_x = x;
                        z_probe.worst_z = z;
                        z_probe.worst_p = p;
                    }
                }
            }
        }
    }
    z_probe.holds = z_probe.min_f_z >= -1e-10;

    let magnitudes: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
    let quotients: Vec<f64> = magnitudes
        .iter()
        .map(|&mag| {
            let mut worst: f64 = 0.0;
            for &x in probes {
                for z in z_values(m0) {
                    for d in directions() {
                        let p = [mag * d[0], mag * d[1]];
                        let fx = f.f_x(x, z, p).expect("checked above");
                        let fp = f.f_p(x, z, p).expect("checked above");
                        let expr = fx[0].hypot(fx[1]) / mag
                            + fp[0].abs()
                            + fp[1].abs()
                            + (f.value(x, z, p) - fp[0] * p[0] - fp[1] * p[1]).abs();
                        worst = worst.max(expr / mag.ln());
                    }
                }
            }
            worst
        })
        .collect();
    let first = quotients[0];
    let last = *quotients.last().expect("non-empty");
    let monotone = quotients
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * first.abs().max(1.0));
    let decreasing = first.is_finite() && monotone && (first == 0.0 || last <= 0.5 * first);

    Ok(StructuralReport {
        forcing: f.name().to_string(),
        z_monotone: z_probe,
        log_growth: GrowthProbe {
            declared: declared.log_growth,
            magnitudes,
            quotients,
            decreasing,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::StructuralDeclaration;

    fn probes() -> Vec<Point> {
        vec![[0.0, 0.0], [0.5, 0.2], [-0.7, 0.1]]
    }

    #[test]
    fn zero_forcing_passes_both() {
        let r = check_structural(&Forcing::zero(), 1.0, &probes()).unwrap();
        assert!(r.z_monotone.holds);
        assert!(r.log_growth.decreasing);
    }

    #[test]
    fn graph_type_forcing_passes() {
        // f = z (1 + |p|²)^{1/2}: f_z = v ≥ 0
        let r = check_structural(&Forcing::linear_in_u(1.0), 2.0, &probes()).unwrap();
        assert!(r.z_monotone.holds);
        assert!(r.z_monotone.min_f_z >= 1.0 - 1e-12);
        assert!(r.log_growth.decreasing);
        let r = check_structural(&Forcing::graph_forced(0.5, 0.3), 2.0, &probes()).unwrap();
        assert!(r.z_monotone.holds && r.log_growth.decreasing);
    }

    #[test]
    fn negative_z_slope_is_flagged() {
        let f = Forcing::custom(
            "-z",
            |_, z, _| -z,
            StructuralDeclaration {
                z_monotone: false,
                log_growth: true,
            },
        );
        assert!(matches!(
            check_structural(&f, 1.0, &probes()),
            Err(FlowError::Config(_))
        ));
        let r = check_structural(&f.with_difference_derivatives(), 1.0, &probes()).unwrap();
        assert!(!r.z_monotone.holds);
        assert!((r.z_monotone.min_f_z + 1.0).abs() < 1e-6);
    }

    #[test]
    fn superlogarithmic_growth_is_not_decreasing() {
        let f = Forcing::custom(
            "|p|",
            |_, _, p| p[0].hypot(p[1]).sqrt(),
            StructuralDeclaration {
                z_monotone: true,
                log_growth: false,
            },
        )
        .with_difference_derivatives();
        let r = check_structural(&f, 1.0, &probes()).unwrap();
        assert!(!r.log_growth.decreasing);
    }
}
