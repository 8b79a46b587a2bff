use super::*;
use crate::dynamics::{entry_grid, flow};
use crate::gauge::{fd_connection_partials, gauge_transform, Bump, ExpGauge, PolynomialConnection, ZeroConnection};
use crate::lie_algebra::LieAlgebra;
use crate::manifold::{Boundary, Metric, Quadratic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn v3(a: f64, b: f64, c: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b, c])
}

fn su2() -> Arc<LieAlgebra> {
    Arc::new(LieAlgebra::su2())
}

fn random_su2_connection(seed: u64, scale: f64) -> PolynomialConnection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = |r: usize, c: usize| {
        DMatrix::from_fn(r, c, |_, _| {
            let x: f64 = StandardNormal.sample(&mut rng);
            scale * x
        })
    };
    let c = m(3, 3);
    let lin = (0..3).map(|_| m(3, 3)).collect();
    let quad = vec![(0, 1, m(3, 3)), (2, 2, m(3, 3))];
    PolynomialConnection::new(su2(), c, lin, quad).unwrap()
}

fn conformal_ball() -> Chart {
    let phi = Quadratic::new(0.0, v3(0.1, -0.05, 0.0), DMatrix::identity(3, 3) * 0.1);
    Chart::new(Metric::Conformal { phi }, Boundary::unit_ball(3), v3(-1.5, -1.5, -1.5), v3(1.5, 1.5, 1.5)).unwrap()
}

/// Unit ball with room for linearized flows that leave it.
fn wide_ball() -> Chart {
    Chart::new(Metric::Euclidean { dim: 3 }, Boundary::unit_ball(3), v3(-4.0, -4.0, -4.0), v3(4.0, 4.0, 4.0)).unwrap()
}

fn sample_phase_point(chart: &Chart) -> PhasePoint {
    let z = v3(0.2, -0.1, 0.3);
    let v = chart.unit_normalize(&z, &v3(0.3, 0.8, -0.2)).unwrap();
    PhasePoint::new(z, v, v3(0.6, -0.3, 0.74)).unwrap()
}

fn entries(chart: &Chart, count: usize) -> Vec<PhasePoint> {
    let pts = chart.boundary.grid(count, 0.0, 1);
    let orbit = LieAlgebra::su2().sample_orbit(&v3(0.0, 0.0, 1.0), 3, 4).unwrap();
    entry_grid(chart, &pts, 1, &orbit, 0.2, 5).unwrap()
}

/// Gauge-equivalent pair with `u = e` near the boundary of the unit ball.
fn lens_equal_pair() -> (Arc<dyn Connection>, Arc<dyn Connection>) {
    let base: Arc<dyn Connection> = Arc::new(random_su2_connection(31, 0.25));
    let bump = Arc::new(Bump::new(v3(0.1, 0.0, -0.1), 0.8, 1.0));
    let u = Arc::new(ExpGauge::new(su2(), 3, bump, v3(0.4, 0.9, -0.3)).unwrap());
    let at: Arc<dyn Connection> = Arc::new(gauge_transform(base.clone(), u).unwrap());
    (base, at)
}

/// Entries whose chords pass through the gauge bump.
fn gauge_entries(chart: &Chart) -> Vec<PhasePoint> {
    let pts = chart.boundary.grid(2, 0.0, 1);
    entry_grid(chart, &pts, 2, &[v3(0.0, 0.0, 1.0)], 0.5, 5).unwrap()
}

#[test]
fn free_jacobian_has_only_the_velocity_block() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let a = ZeroConnection::new(su2(), 3);
    let j = rhs_jacobian(&chart, &a, &sample_phase_point(&chart)).unwrap();
    let mut expected = DMatrix::zeros(9, 9);
    for i in 0..3 {
        expected[(i, 3 + i)] = 1.0;
    }
    assert_eq!(j, expected);
}

#[test]
fn hybrid_and_difference_jacobians_agree() {
    let chart = conformal_ball();
    let a = random_su2_connection(7, 0.6);
    let phi = sample_phase_point(&chart);
    let j1 = rhs_jacobian(&chart, &a, &phi).unwrap();
    let j2 = rhs_jacobian_fd(&chart, &a, &phi).unwrap();
    assert!((&j1 - &j2).amax() < 1e-5, "{:e}", (&j1 - &j2).amax());
}

#[test]
fn charge_columns_are_exact_by_linearity() {
    let chart = conformal_ball();
    let a = random_su2_connection(8, 0.6);
    let phi = sample_phase_point(&chart);
    let j = rhs_jacobian(&chart, &a, &phi).unwrap();
    let dxi = v3(0.3, -1.0, 0.25);
    let moved = PhasePoint::new(phi.z.clone(), phi.v.clone(), &phi.xi + &dxi).unwrap();
    let diff = crate::dynamics::wong_rhs(&chart, &a, &moved).unwrap() - crate::dynamics::wong_rhs(&chart, &a, &phi).unwrap();
    let pred = j.columns(6, 3) * dxi;
    assert!((diff - pred).amax() < 1e-13);
}

#[test]
fn jvp_matches_jacobian_product() {
    let chart = conformal_ball();
    let a = random_su2_connection(9, 0.6);
    let phi = sample_phase_point(&chart);
    let t = DVector::from_fn(9, |i, _| (i as f64 * 0.7).sin());
    let j = rhs_jacobian(&chart, &a, &phi).unwrap();
    let jv = rhs_jvp(&chart, &a, &phi, &t).unwrap();
    assert!((j * t - jv).amax() < 1e-9);
}

#[test]
fn jacobian_starts_at_identity() {
    let chart = conformal_ball();
    let a = random_su2_connection(10, 0.5);
    let (p, j) = flow_with_jacobian(&chart, &a, &sample_phase_point(&chart), 0.0, &IntegratorConfig::default()).unwrap();
    assert_eq!(p, sample_phase_point(&chart));
    assert_eq!(j, JacobianState::identity(3, 3));
}

#[test]
fn free_flow_jacobian_blocks() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let a = ZeroConnection::new(su2(), 3);
    let t = 0.7;
    let (_, j) = flow_with_jacobian(&chart, &a, &sample_phase_point(&chart), t, &IntegratorConfig::default()).unwrap();
    let id = DMatrix::<f64>::identity(3, 3);
    assert!((j.dx_dz() - &id).amax() < 1e-9);
    assert!((j.dx_dv() - &id * t).amax() < 1e-9);
    assert!((j.dtheta_dv() - &id).amax() < 1e-9);
    assert!((j.dxi_dxi() - &id).amax() < 1e-9);
    for blk in [j.dx_dxi(), j.dtheta_dz(), j.dtheta_dxi(), j.dxi_dz(), j.dxi_dv()] {
        assert!(blk.amax() < 1e-9);
    }
}

#[test]
fn jacobian_matches_flow_differences() {
    let chart = conformal_ball();
    let a = random_su2_connection(11, 0.5);
    let phi = sample_phase_point(&chart);
    let cfg = IntegratorConfig::with_tol(1e-12);
    let t = 0.6;
    let (_, j) = flow_with_jacobian(&chart, &a, &phi, t, &cfg).unwrap();
    let eps = 1e-5;
    let y = phi.pack();
    for k in 0..9 {
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[k] += eps;
        ym[k] -= eps;
        let fp = flow(&chart, &a, &PhasePoint::unpack(&yp, 3), t, &cfg).unwrap().to_vector();
        let fm = flow(&chart, &a, &PhasePoint::unpack(&ym, 3), t, &cfg).unwrap().to_vector();
        let col = (fp - fm) / (2.0 * eps);
        assert!((col - j.j.column(k)).amax() < 1e-5, "column {k}");
    }
}

#[test]
fn weights_at_exit_are_inverse_metric() {
    let chart = conformal_ball();
    let a = random_su2_connection(12, 0.5);
    let e = &entries(&chart, 4)[1];
    let cfg = IntegratorConfig::default();
    let traj = integrate(&chart, &a, e, &cfg).unwrap();
    let w = weights_along(&chart, &a, &traj, &[traj.t_end], &cfg).unwrap();
    let g_inv = chart.metric_jet(&traj.end.z).unwrap().g_inv;
    assert!((&w[0].w - g_inv).amax() < 1e-10);
    assert!(w[0].q.amax() < 1e-10);
    assert!(matches!(weights_along(&chart, &a, &traj, &[traj.t_end + 0.1], &cfg), Err(Error::Index(_))));
}

#[test]
fn free_weights_are_trivial() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let a = ZeroConnection::new(su2(), 3);
    let e = &entries(&chart, 4)[0];
    let cfg = IntegratorConfig::default();
    let traj = integrate(&chart, &a, e, &cfg).unwrap();
    let times: Vec<f64> = (0..5).map(|k| traj.t_end * k as f64 / 4.0).collect();
    for wp in weights_along(&chart, &a, &traj, &times, &cfg).unwrap() {
        assert!((wp.w - DMatrix::<f64>::identity(3, 3)).amax() < 1e-9);
        assert!(wp.q.amax() < 1e-12);
    }
}

#[test]
fn weights_are_invertible_on_short_chords() {
    let chart = conformal_ball();
    let a = random_su2_connection(13, 0.5);
    let cfg = IntegratorConfig::default();
    let pts = chart.boundary.grid(6, 0.0, 2);
    let orbit = [v3(0.0, 0.0, 1.0)];
    let grid = entry_grid(&chart, &pts, 2, &orbit, 0.05, 1).unwrap();
    for e in grid.iter().filter(|e| -chart.inner(&e.z, &e.v, &chart.outer_unit_normal(&e.z).unwrap()).unwrap() < 0.4) {
        let traj = integrate(&chart, &a, e, &cfg).unwrap();
        let times: Vec<f64> = (0..6).map(|k| traj.t_end * k as f64 / 5.0).collect();
        for wp in weights_along(&chart, &a, &traj, &times, &cfg).unwrap() {
            let smin = wp.w.svd(false, false).singular_values.min();
            assert!(smin > 0.1, "{smin}");
        }
    }
}

#[test]
fn gauss_legendre_is_exact_on_cubics() {
    let rule = gauss_legendre(2.0, 2).unwrap();
    assert_eq!(rule.len(), 4);
    let integral: f64 = rule.iter().map(|(x, w)| w * (x * x * x - 2.0 * x + 1.0)).sum();
    assert!((integral - 2.0).abs() < 1e-14);
    assert!(gauss_legendre(1.0, 0).is_err());
}

#[test]
fn identity_is_trivial_for_equal_fields() {
    let chart = conformal_ball();
    let a = random_su2_connection(14, 0.5);
    let e = &entries(&chart, 3)[0];
    let chk = pseudo_linearization(&chart, &a, &a, e, 4, &IntegratorConfig::default()).unwrap();
    assert_eq!(chk.lhs.amax(), 0.0);
    // Event-stopped and fixed-time runs to the same time differ by rounding.
    assert!(chk.rhs.amax() < 1e-12);
}

#[test]
fn identity_holds_for_unrelated_fields() {
    let chart = conformal_ball();
    let a = random_su2_connection(15, 0.5);
    let at = random_su2_connection(16, 0.5);
    let cfg = IntegratorConfig::default();
    for e in entries(&chart, 3) {
        let chk = pseudo_linearization(&chart, &a, &at, &e, 32, &cfg).unwrap();
        assert!(chk.rhs.norm() > 1e-3, "pair should give different lens data");
        assert!(chk.relative_residual() < 1e-5, "{:e}", chk.relative_residual());
    }
}

#[test]
fn identity_converges_at_fourth_order() {
    let chart = conformal_ball();
    let a = random_su2_connection(17, 0.5);
    let at = random_su2_connection(18, 0.5);
    let cfg = IntegratorConfig::with_tol(1e-12);
    let e = &entries(&chart, 3)[1];
    let panels = [16.0, 32.0, 64.0];
    let errs: Vec<f64> = panels
        .iter()
        .map(|&k| pseudo_linearization(&chart, &a, &at, e, k as usize, &cfg).unwrap().residual().norm())
        .collect();
    // Least-squares slope of log(error) against log(panel width).
    let xs: Vec<f64> = panels.iter().map(|k: &f64| -k.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((3.5..4.6).contains(&slope), "order {slope}, errors {errs:?}");
}

#[test]
fn identity_for_gauge_equivalent_pair() {
    let chart = wide_ball();
    let (a, at) = lens_equal_pair();
    let cfg = IntegratorConfig::default();
    for e in gauge_entries(&chart) {
        let chk = pseudo_linearization(&chart, a.as_ref(), at.as_ref(), &e, 32, &cfg).unwrap();
        assert!(chk.rhs.amax() < 1e-6);
        assert!(chk.lhs.amax() < 1e-5, "{:e}", chk.lhs.amax());
    }
}

#[test]
fn xray_input_vanishes_for_equal_fields() {
    let a: Arc<dyn Connection> = Arc::new(random_su2_connection(19, 0.5));
    let inp = build_xray_input(a.clone(), a).unwrap();
    let z = v3(0.1, 0.2, 0.3);
    assert_eq!(inp.f_at(&z).unwrap().max_abs(), 0.0);
    assert_eq!(inp.beta_at(&z).unwrap().max_abs(), 0.0);
}

#[test]
fn abelian_xray_input_has_no_beta() {
    let u1 = Arc::new(LieAlgebra::u1());
    let a: Arc<dyn Connection> = Arc::new(PolynomialConnection::uniform_field(u1.clone(), [0.0, 1.0, 2.0], &DVector::from_vec(vec![1.0])).unwrap());
    let b: Arc<dyn Connection> = Arc::new(PolynomialConnection::constant(u1, DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0])).unwrap());
    let inp = build_xray_input(a, b).unwrap();
    let z = v3(0.1, 0.2, 0.3);
    assert_eq!(inp.beta_at(&z).unwrap().max_abs(), 0.0);
    let f = inp.f_at(&z).unwrap();
    assert!((f.get(0, 1, 0) - 2.0).abs() < 1e-12);
}

#[test]
fn xray_curvature_difference_matches_direct_evaluation() {
    let alg = su2();
    let a = random_su2_connection(20, 0.5);
    let at = random_su2_connection(21, 0.5);
    let inp = build_xray_input(Arc::new(a.clone()), Arc::new(at.clone())).unwrap();
    let z = v3(0.3, -0.2, 0.1);
    // F_ij = ∂_i A_j − ∂_j A_i + [A_i, A_j] through the algebra's bracket and
    // difference partials.
    let curv = |c: &PolynomialConnection| {
        let comp = c.components(&z).unwrap();
        let da = fd_connection_partials(c, &z).unwrap();
        let mut out = Tensor3::zeros(3, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let br = alg.bracket(&comp.row(i).transpose(), &comp.row(j).transpose()).unwrap();
                for al in 0..3 {
                    out.set(i, j, al, da.get(i, j, al) - da.get(j, i, al) + br[al]);
                }
            }
        }
        out
    };
    let expected = curv(&a).sub(&curv(&at));
    assert!(inp.f_at(&z).unwrap().max_abs_diff(&expected) < 1e-7);
}

#[test]
fn xray_of_zero_input_is_zero() {
    let chart = conformal_ball();
    let a = random_su2_connection(22, 0.5);
    let e = &entries(&chart, 3)[0];
    let r = xray_transform(&chart, &a, &a, &XRayInput::zero(3, 3), e, 8, &IntegratorConfig::default()).unwrap();
    assert_eq!(r.amax(), 0.0);
}

#[test]
fn xray_rows_match_identity() {
    let chart = conformal_ball();
    let a: Arc<dyn Connection> = Arc::new(random_su2_connection(23, 0.5));
    let at: Arc<dyn Connection> = Arc::new(random_su2_connection(24, 0.5));
    let cfg = IntegratorConfig::default();
    let inp = build_xray_input(a.clone(), at.clone()).unwrap();
    let e = &entries(&chart, 3)[2];
    let chk = pseudo_linearization(&chart, a.as_ref(), at.as_ref(), e, 16, &cfg).unwrap();
    let iw = xray_transform(&chart, a.as_ref(), at.as_ref(), &inp, e, 16, &cfg).unwrap();
    let rows = chk.lhs.rows(3, 3).into_owned();
    assert!((rows - &iw).amax() < 1e-8, "{:e}", (chk.lhs.rows(3, 3) - iw).amax());
}

#[test]
fn xray_vanishes_for_gauge_equivalent_pair() {
    let chart = wide_ball();
    let (a, at) = lens_equal_pair();
    let cfg = IntegratorConfig::default();
    let inp = build_xray_input(a.clone(), at.clone()).unwrap();
    for e in gauge_entries(&chart).into_iter().take(2) {
        let iw = xray_transform(&chart, a.as_ref(), at.as_ref(), &inp, &e, 32, &cfg).unwrap();
        assert!(iw.amax() < 1e-5, "{:e}", iw.amax());
    }
}

#[test]
fn xray_quadrature_converges() {
    let chart = conformal_ball();
    let a: Arc<dyn Connection> = Arc::new(random_su2_connection(25, 0.3));
    let at: Arc<dyn Connection> = Arc::new(random_su2_connection(26, 0.3));
    let cfg = IntegratorConfig::with_tol(1e-12);
    let inp = build_xray_input(a.clone(), at.clone()).unwrap();
    let e = &entries(&chart, 3)[0];
    let r64 = xray_transform(&chart, a.as_ref(), at.as_ref(), &inp, e, 64, &cfg).unwrap();
    let r128 = xray_transform(&chart, a.as_ref(), at.as_ref(), &inp, e, 128, &cfg).unwrap();
    assert!((r64 - r128).amax() < 1e-8);
}
