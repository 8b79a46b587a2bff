//! End-to-end checks through the public API: lens data, gauge invariance,
//! the identity and boundary recovery.

use std::sync::Arc;

use nalgebra::DVector;
use wonglens::dynamics::{entry_grid, lens_data, IntegratorConfig};
use wonglens::gauge::{curvature_at, gauge_transform, Bump, Connection, ExpGauge, ModulatedConnection, PolynomialConnection, ZeroConnection};
use wonglens::lie_algebra::LieAlgebra;
use wonglens::manifold::{Boundary, Chart, Metric, Quadratic};
use wonglens::recovery::{recover_boundary_patch, RecoveryConfig, SimulatedLens};
use wonglens::variational::pseudo_linearization;

fn v3(a: f64, b: f64, c: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b, c])
}

fn su2() -> Arc<LieAlgebra> {
    Arc::new(LieAlgebra::su2())
}

fn orbit() -> Vec<DVector<f64>> {
    LieAlgebra::su2().sample_orbit(&v3(0.0, 0.0, 1.0), 3, 9).unwrap()
}

fn linear_su2(seed: f64) -> PolynomialConnection {
    // Deterministic, mildly varying coefficients.
    let c = nalgebra::DMatrix::from_fn(3, 3, |i, j| 0.2 * ((i * 3 + j) as f64 + seed).sin());
    let lin = (0..3)
        .map(|k| nalgebra::DMatrix::from_fn(3, 3, |i, j| 0.15 * ((k * 9 + i * 3 + j) as f64 * 1.3 + seed).cos()))
        .collect();
    PolynomialConnection::new(su2(), c, lin, vec![]).unwrap()
}

#[test]
fn free_ball_lens_data_are_chords() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let a = ZeroConnection::new(su2(), 3);
    let entries = entry_grid(&chart, &chart.boundary.grid(12, 0.0, 0), 4, &orbit(), 0.05, 3).unwrap();
    for (e, r) in entries.iter().zip(lens_data(&chart, &a, &entries, &IntegratorConfig::default())) {
        let r = r.unwrap();
        let ell = -2.0 * e.z.dot(&e.v);
        assert!((r.travel_time - ell).abs() < 1e-9);
        assert!((&r.exit.z - (&e.z + &e.v * ell)).amax() < 1e-9);
        assert!((&r.exit.v - &e.v).amax() < 1e-9);
        assert!((&r.exit.xi - &e.xi).amax() < 1e-12);
    }
}

#[test]
fn interior_gauges_preserve_lens_data() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let base: Arc<dyn Connection> = Arc::new(linear_su2(0.3));
    let bump = Arc::new(Bump::new(v3(0.0, 0.1, 0.0), 0.85, 1.0));
    let u = Arc::new(ExpGauge::new(su2(), 3, bump, v3(0.7, -0.4, 0.5)).unwrap());
    let at = gauge_transform(base.clone(), u).unwrap();
    let entries = entry_grid(&chart, &chart.boundary.grid(8, 0.0, 0), 3, &orbit(), 0.1, 4).unwrap();
    let cfg = IntegratorConfig::default();
    let la = lens_data(&chart, base.as_ref(), &entries, &cfg);
    let lt = lens_data(&chart, &at, &entries, &cfg);
    for (x, y) in la.into_iter().zip(lt) {
        let (x, y) = (x.unwrap(), y.unwrap());
        assert!((x.exit.to_vector() - y.exit.to_vector()).amax() < 1e-6);
        assert!((x.travel_time - y.travel_time).abs() < 1e-6);
    }
}

#[test]
fn identity_holds_on_a_conformal_ball() {
    let phi = Quadratic::new(0.0, v3(0.05, 0.0, -0.05), nalgebra::DMatrix::identity(3, 3) * 0.2);
    let chart = Chart::new(Metric::Conformal { phi }, Boundary::unit_ball(3), v3(-4.0, -4.0, -4.0), v3(4.0, 4.0, 4.0)).unwrap();
    let (a, at) = (linear_su2(1.0), linear_su2(2.5));
    let entries = entry_grid(&chart, &chart.boundary.grid(3, 0.0, 0), 2, &orbit(), 0.2, 6).unwrap();
    for e in &entries {
        let chk = pseudo_linearization(&chart, &a, &at, e, 32, &IntegratorConfig::default()).unwrap();
        assert!(chk.relative_residual() < 1e-5, "{:e}", chk.relative_residual());
    }
}

#[test]
fn abelian_patch_recovery() {
    let u1 = Arc::new(LieAlgebra::u1());
    let chart = Chart::euclidean_ball(3, 1.0);
    let inner = PolynomialConnection::uniform_field(u1.clone(), [0.4, -0.3, 0.6], &DVector::from_vec(vec![1.0])).unwrap();
    let a = ModulatedConnection::new(Arc::new(Bump::new(v3(0.3, 0.0, 0.2), 1.8, 1.0)), Arc::new(inner));
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    let pts: Vec<DVector<f64>> = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (th, ph) = (0.15 * i as f64, 0.15 * j as f64);
            v3(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
        })
        .collect();
    let charges = vec![DVector::from_vec(vec![1.0])];
    let reports = recover_boundary_patch(&chart, &a, &charges, &pts, &lens, &RecoveryConfig::default());
    for (p, r) in pts.iter().zip(reports) {
        let truth = curvature_at(&a, p).unwrap();
        let r = r.unwrap();
        assert!(r.f_chart.max_abs_diff(&truth) < 0.03 * truth.max_abs());
        assert!(r.ell_prime_min > 0.0);
    }
}

#[test]
fn free_patch_recovers_zero() {
    let chart = Chart::euclidean_ball(3, 1.0);
    let a = ZeroConnection::new(su2(), 3);
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    let basis = LieAlgebra::su2().find_basis_in_orbit(&v3(0.0, 0.0, 1.0), 64, 1).unwrap().elements;
    let pts = chart.boundary.grid(4, 0.0, 0);
    for r in recover_boundary_patch(&chart, &a, &basis, &pts, &lens, &RecoveryConfig::default()) {
        let r = r.unwrap();
        assert!(r.f_chart.max_abs() < 1e-8);
        assert!(r.dn_a.amax() < 1e-8);
    }
}
