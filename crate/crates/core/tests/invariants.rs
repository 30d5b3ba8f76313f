use mcflow::field::Field;
use mcflow::geometry::{Domain, Grid, Shape};
use mcflow::operator::{apply_operator, coeff, Forcing, Parallelism};
use proptest::prelude::*;
use std::sync::Arc;

fn domains() -> Vec<Domain> {
    vec![
        Domain::disk(1.0, 0.5).unwrap(),
        Domain::new(
            Shape::Annulus {
                center: [0.2, -0.1],
                inner_radius: 0.5,
                outer_radius: 1.5,
            },
            0.25,
        )
        .unwrap(),
        Domain::new(
            Shape::RoundedRectangle {
                center: [0.0, 0.0],
                half_width: 1.5,
                half_height: 1.0,
                corner_radius: 0.5,
            },
            0.25,
        )
        .unwrap(),
    ]
}

fn strategy_point() -> impl Strategy<Value = [f64; 2]> {
    [-1.6f64..1.6, -1.6f64..1.6]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn coefficient_identity_and_ellipticity(p in [-50.0f64..50.0, -50.0f64..50.0]) {
        let a = coeff(p);
        let v2 = 1.0 + p[0] * p[0] + p[1] * p[1];
        let quad = a.bilinear(p, p);
        prop_assert!((quad - (1.0 - 1.0 / v2)).abs() <= 1e-12 * v2.max(1.0));
        let [lo, hi] = a.eigenvalues();
        prop_assert!((lo - 1.0 / v2).abs() < 1e-12);
        prop_assert!((hi - 1.0).abs() < 1e-12);
        prop_assert!(a.entries[0][1] == a.entries[1][0]);
    }

    #[test]
    fn projector_identities(x in strategy_point()) {
        for dom in domains() {
            let Ok(frame) = dom.normal_frame(x) else { continue };
            let c = frame.projector;
            let g = frame.gamma;
            prop_assert!((g[0].hypot(g[1]) - 1.0).abs() < 1e-12);
            for i in 0..2 {
                prop_assert!((c[i][0] * g[0] + c[i][1] * g[1]).abs() < 1e-12);
                for j in 0..2 {
                    let c2 = c[i][0] * c[0][j] + c[i][1] * c[1][j];
                    prop_assert!((c2 - c[i][j]).abs() < 1e-12);
                }
            }
            // d decreases by the step length when walking toward the foot point
            let proj = dom.project(x);
            let back = [x[0] - 0.01 * g[0], x[1] - 0.01 * g[1]];
            prop_assert!((dom.signed_distance(back) - (proj.signed_distance - 0.01)).abs() < 1e-9);
        }
    }

    #[test]
    fn operator_commutes_with_vertical_shifts(shift in -5.0f64..5.0, a in -1.0f64..1.0) {
        let grid = Arc::new(Grid::classify(&Domain::disk(1.0, 0.5).unwrap(), 0.1).unwrap());
        let u = Field::sample(&grid, 0.0, |x| a * (x[0] * x[1]).sin()).unwrap();
        let v = Field::sample(&grid, 0.0, |x| a * (x[0] * x[1]).sin() + shift).unwrap();
        let lu = apply_operator(&u, &Forcing::zero(), Parallelism::Serial).unwrap();
        let lv = apply_operator(&v, &Forcing::zero(), Parallelism::Serial).unwrap();
        for &k in grid.active() {
            prop_assert!((lu.get(k) - lv.get(k)).abs() < 1e-9);
        }
    }
}

#[test]
fn large_gradient_limit_of_coefficients() {
    let p = [1e6, 0.0];
    let a = coeff(p);
    assert!((a.entries[0][0] - 1.0 / (1.0 + 1e12)).abs() < 1e-15);
    assert_eq!(a.entries[1][1], 1.0);
    assert!(a.eigenvalues()[0] > 0.0);
}

#[test]
fn affine_data_are_exact_and_stationary() {
    let grid = Arc::new(Grid::classify(&Domain::disk(1.0, 0.5).unwrap(), 0.05).unwrap());
    let u = Field::sample(&grid, 0.0, |x| 3.0 * x[0] + 2.0 * x[1] - 1.0).unwrap();
    let lu = apply_operator(&u, &Forcing::zero(), Parallelism::Serial).unwrap();
    for &k in grid.active() {
        assert!(lu.get(k).abs() < 1e-10);
    }
}
