use super::*;
use proptest::prelude::*;

fn v3(a: f64, b: f64, c: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b, c])
}

fn conformal_chart(phi: Quadratic) -> Chart {
    Chart::new(
        Metric::Conformal { phi },
        Boundary::unit_ball(3),
        DVector::from_element(3, -1.5),
        DVector::from_element(3, 1.5),
    )
    .unwrap()
}

/// `Γ^i_{jk} = δ^i_j ∂_kφ + δ^i_k ∂_jφ − δ_{jk} ∂_iφ`.
fn conformal_christoffel(grad: &DVector<f64>) -> Tensor3 {
    let n = grad.len();
    let mut t = Tensor3::zeros(n, n, n);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                t.set(i, j, k, d(i, j) * grad[k] + d(i, k) * grad[j] - d(j, k) * grad[i]);
            }
        }
    }
    t
}

#[test]
fn euclidean_christoffel_vanishes_exactly() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let jet = chart.metric_jet(&v3(0.1, 0.2, -0.3)).unwrap();
    assert_eq!(jet.christoffel.max_abs(), 0.0);
}

#[test]
fn conformal_christoffel_matches_closed_form() {
    let phi = Quadratic::linear(0.1, v3(0.3, -0.5, 0.2));
    let z = v3(0.2, -0.4, 0.1);
    let expected = conformal_christoffel(&phi.a);
    let mut chart = conformal_chart(phi);
    let jet = chart.metric_jet(&z).unwrap();
    assert!(jet.christoffel.max_abs_diff(&expected) < 1e-12);
    chart.fd_only = true;
    let jet = chart.metric_jet(&z).unwrap();
    assert!(jet.christoffel.max_abs_diff(&expected) < 1e-8);
}

#[test]
fn christoffel_is_symmetric_and_inverse_consistent() {
    let chart = Chart::new(
        Metric::Perturbed {
            dim: 3,
            radial: 0.1,
            linear: vec![
                DMatrix::from_row_slice(3, 3, &[0.1, 0.05, 0.0, 0.05, 0.0, 0.02, 0.0, 0.02, -0.1]),
                DMatrix::zeros(3, 3),
                DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.03, 0.0, 0.1, 0.0, 0.03, 0.0, 0.0]),
            ],
        },
        Boundary::unit_ball(3),
        DVector::from_element(3, -1.5),
        DVector::from_element(3, 1.5),
    )
    .unwrap();
    let jet = chart.metric_jet(&v3(0.3, 0.1, -0.2)).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(jet.christoffel.get(i, j, k), jet.christoffel.get(i, k, j));
            }
        }
    }
    assert!((&jet.g * &jet.g_inv - DMatrix::identity(3, 3)).amax() < 1e-10);
}

#[test]
fn analytic_and_fd_partials_agree_on_perturbed_metric() {
    let mut chart = Chart::new(
        Metric::Perturbed {
            dim: 3,
            radial: -0.2,
            linear: vec![DMatrix::from_row_slice(3, 3, &[0.1, 0.05, 0.0, 0.05, 0.0, 0.02, 0.0, 0.02, -0.1])],
        },
        Boundary::unit_ball(3),
        DVector::from_element(3, -1.5),
        DVector::from_element(3, 1.5),
    )
    .unwrap();
    let z = v3(-0.3, 0.5, 0.2);
    let a = chart.metric_jet(&z).unwrap().christoffel;
    chart.fd_only = true;
    let b = chart.metric_jet(&z).unwrap().christoffel;
    assert!(a.max_abs_diff(&b) < 1e-9);
}

#[test]
fn halving_fd_step_gains_fourth_order() {
    let phi = Quadratic::new(0.0, v3(0.3, -0.2, 0.1), DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.4, -0.6, 0.3, 0.0, 0.3, 0.8]));
    let z = v3(0.3, 0.2, -0.4);
    let mut chart = conformal_chart(phi);
    let exact = chart.metric_jet(&z).unwrap().christoffel;
    chart.fd_only = true;
    chart.fd_step = 2e-2;
    let coarse = chart.metric_jet(&z).unwrap().christoffel.max_abs_diff(&exact);
    chart.fd_step = 1e-2;
    let fine = chart.metric_jet(&z).unwrap().christoffel.max_abs_diff(&exact);
    assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
}

#[test]
fn outside_box_is_domain_error() {
    let chart = Chart::euclidean_ball(3, 1.0);
    assert!(matches!(chart.metric_jet(&v3(2.0, 0.0, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn unit_normalize_examples() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let z = v3(0.1, 0.0, 0.0);
    let u = chart.unit_normalize(&z, &v3(2.0, 0.0, 0.0)).unwrap();
    assert_eq!(u, v3(1.0, 0.0, 0.0));
    let conf = conformal_chart(Quadratic::linear(0.2, v3(0.4, 0.1, -0.3)));
    let w = conf.unit_normalize(&z, &v3(0.3, -1.0, 2.0)).unwrap();
    assert!((conf.norm(&z, &w).unwrap() - 1.0).abs() < 1e-14);
    let twice = conf.unit_normalize(&z, &w).unwrap();
    assert!((twice - &w).amax() < 1e-15);
    assert!(matches!(
        chart.unit_normalize(&z, &DVector::zeros(3)),
        Err(Error::DegenerateVector(_))
    ));
}

#[test]
fn ball_normal_is_position() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let z = v3(0.6, 0.0, 0.8);
    let nu = chart.outer_unit_normal(&z).unwrap();
    assert!((&nu - &z).amax() < 1e-15);
    for t in chart.tangent_frame(&z).unwrap() {
        assert!(chart.inner(&z, &t, &nu).unwrap().abs() < 1e-12);
    }
    assert!(matches!(chart.outer_unit_normal(&v3(0.1, 0.0, 0.0)), Err(Error::Precondition(_))));
}

#[test]
fn normal_is_metric_unit_and_orthogonal_to_numerical_tangent() {
    let chart = conformal_chart(Quadratic::linear(0.0, v3(0.3, 0.2, -0.1)));
    let z = v3(0.0, 0.6, 0.8);
    let nu = chart.outer_unit_normal(&z).unwrap();
    assert!((chart.norm(&z, &nu).unwrap() - 1.0).abs() < 1e-12);
    // Tangent from a curve on the sphere.
    let curve = |s: f64| v3(s.sin(), 0.6 * s.cos(), 0.8 * s.cos());
    let h = 1e-5;
    let tangent = (curve(h) - curve(-h)) / (2.0 * h);
    assert!(chart.inner(&z, &tangent, &nu).unwrap().abs() < 1e-8);
}

#[test]
fn sphere_second_fundamental_form_is_inverse_radius() {
    for r in [1.0, 2.5] {
        let chart = Chart::euclidean_ball(3, r);
        for p in chart.boundary.grid(12, 0.0, 0) {
            for w in chart.tangent_frame_g(&p).unwrap() {
                let lam = chart.second_fundamental_form(&p, &w).unwrap();
                assert!((lam - 1.0 / r).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn second_fundamental_form_requires_unit_tangent() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let p = v3(0.0, 0.0, 1.0);
    let w = v3(2.0, 0.0, 0.0);
    assert!(matches!(chart.second_fundamental_form(&p, &w), Err(Error::Precondition(_))));
    assert!(matches!(chart.second_fundamental_form(&p, &p), Err(Error::Precondition(_))));
}

#[test]
fn hessian_examples() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let z = v3(0.2, -0.1, 0.4);
    let v = v3(0.6, 0.0, 0.8);
    let half = Quadratic::half_norm_squared(3);
    assert!((chart.hessian_scalar(&half, &z, &v).unwrap() - 1.0).abs() < 1e-14);
    let lin = Quadratic::linear(1.0, v3(0.3, 2.0, -1.0));
    assert_eq!(chart.hessian_scalar(&lin, &z, &v).unwrap(), 0.0);
}

#[test]
fn conformal_hessian_matches_hand_value() {
    // φ = 0.3 z¹ − 0.2 z³, f = |z|²/2, z = (0.2, −0.1, 0.4), v = (1, 2, −1):
    // Hess f(v,v) = |v|² − 2(v·z)(∇φ·v) + |v|²(∇φ·z) = 6 + 0.4 − 0.12.
    let chart = conformal_chart(Quadratic::linear(0.0, v3(0.3, 0.0, -0.2)));
    let z = v3(0.2, -0.1, 0.4);
    let v = v3(1.0, 2.0, -1.0);
    let analytic = chart.hessian_scalar(&Quadratic::half_norm_squared(3), &z, &v).unwrap();
    assert!((analytic - 6.28).abs() < 1e-12);
    let fd = chart
        .hessian_scalar(&FnScalar(|z: &DVector<f64>| 0.5 * z.norm_squared()), &z, &v)
        .unwrap();
    assert!((fd - 6.28).abs() < 1e-6);
}

#[test]
fn half_space_normal_coordinates_are_identity() {
    let chart = Chart::new(
        Metric::Euclidean { dim: 3 },
        Boundary::HalfSpace { dim: 3 },
        v3(-1.0, -1.0, -0.5),
        v3(1.0, 1.0, 1.5),
    )
    .unwrap();
    let bnc = BoundaryNormalCoordinates::new(&chart, &DVector::zeros(3), 0.5).unwrap();
    let c = v3(0.2, -0.3, 0.25);
    assert!((bnc.to_chart(&c).unwrap() - &c).amax() < 1e-12);
}

#[test]
fn ball_normal_coordinate_depth_is_distance_to_sphere() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let p = v3(0.0, 0.0, 1.0);
    let bnc = BoundaryNormalCoordinates::new(&chart, &p, 0.4).unwrap();
    for c in [v3(0.1, -0.2, 0.3), v3(-0.3, 0.0, 0.1), v3(0.0, 0.25, 0.4)] {
        let z = bnc.to_chart(&c).unwrap();
        assert!((c[2] - (1.0 - z.norm())).abs() < 1e-8);
        let back = bnc.from_chart(&z).unwrap();
        assert!((back - &c).amax() < 1e-9);
    }
}

#[test]
fn pulled_back_metric_has_gauss_lemma_form() {
    let chart = conformal_chart(Quadratic::linear(0.0, v3(0.2, -0.1, 0.15)));
    let p = chart.boundary.grid(1, 0.0, 0)[0].clone();
    let bnc = BoundaryNormalCoordinates::new(&chart, &p, 0.3).unwrap();
    for c in [v3(0.0, 0.0, 0.0), v3(0.1, -0.05, 0.2), v3(-0.1, 0.1, 0.3)] {
        let gp = bnc.pulled_back_metric(&c).unwrap();
        assert!((gp[(2, 2)] - 1.0).abs() < 1e-6);
        assert!(gp[(0, 2)].abs() < 1e-6 && gp[(1, 2)].abs() < 1e-6);
    }
}

#[test]
fn normal_lines_are_unit_speed_geodesics() {
    let chart = conformal_chart(Quadratic::linear(0.0, v3(0.2, -0.1, 0.15)));
    let p = v3(0.0, 0.0, 1.0);
    let bnc = BoundaryNormalCoordinates::new(&chart, &p, 0.3).unwrap();
    let h = 1e-3;
    let at = |t: f64| bnc.to_chart(&v3(0.05, -0.1, t)).unwrap();
    let t = 0.2;
    let (zm, z0, zp) = (at(t - h), at(t), at(t + h));
    let vel = (&zp - &zm) / (2.0 * h);
    let accel = (&zp - &z0 * 2.0 + &zm) / (h * h);
    let jet = chart.metric_jet(&z0).unwrap();
    let gam = jet.christoffel_contract(vel.as_slice(), vel.as_slice());
    let residual = (0..3).map(|i| (accel[i] + gam[i]).abs()).fold(0.0, f64::max);
    assert!(residual < 1e-6, "residual {residual}");
    assert!((chart.norm(&z0, &vel).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn focal_radius_is_detected() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let err = BoundaryNormalCoordinates::new(&chart, &v3(0.0, 0.0, 1.0), 0.97).unwrap_err();
    assert!(matches!(err, Error::RadiusTooLarge(_)));
}

#[test]
fn chart_validation_accepts_catalog_metrics() {
    conformal_chart(Quadratic::linear(0.0, v3(0.2, -0.1, 0.15))).validate(50, 3).unwrap();
    Chart::euclidean_ball(2, 1.0).validate(50, 3).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_metric_has_no_christoffel(z in prop::collection::vec(-1.0..1.0f64, 3)) {
        let chart = Chart::new(
            Metric::Perturbed { dim: 3, radial: 0.0, linear: vec![] },
            Boundary::unit_ball(3),
            DVector::from_element(3, -1.5),
            DVector::from_element(3, 1.5),
        ).unwrap();
        let jet = chart.metric_jet(&DVector::from_vec(z)).unwrap();
        prop_assert_eq!(jet.christoffel.max_abs(), 0.0);
    }

    #[test]
    fn normalized_vectors_are_unit(z in prop::collection::vec(-1.0..1.0f64, 3),
                                   v in prop::collection::vec(-2.0..2.0f64, 3)) {
        let v = DVector::from_vec(v);
        prop_assume!(v.norm() > 1e-3);
        let chart = conformal_chart(Quadratic::linear(0.0, v3(0.3, 0.2, -0.4)));
        let z = DVector::from_vec(z);
        let u = chart.unit_normalize(&z, &v).unwrap();
        prop_assert!((chart.norm(&z, &u).unwrap() - 1.0).abs() < 1e-14);
    }
}
