use super::*;
use crate::dynamics::flow;
use crate::gauge::{curvature_at, gauge_transform, Bump, ExpGauge, ModulatedConnection, PolynomialConnection};
use crate::manifold::{Boundary, Metric, Quadratic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn v3(a: f64, b: f64, c: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b, c])
}

fn u1() -> Arc<LieAlgebra> {
    Arc::new(LieAlgebra::u1())
}

fn su2() -> Arc<LieAlgebra> {
    Arc::new(LieAlgebra::su2())
}

fn ball() -> Chart {
    Chart::euclidean_ball(3, 1.0)
}

fn unit_charge() -> Vec<DVector<f64>> {
    vec![DVector::from_vec(vec![1.0])]
}

fn uniform(b: [f64; 3]) -> PolynomialConnection {
    PolynomialConnection::uniform_field(u1(), b, &DVector::from_vec(vec![1.0])).unwrap()
}

/// U(1) field modulated by a bump centered on the boundary.
fn boundary_bump_field() -> ModulatedConnection {
    let bump = Arc::new(Bump::new(v3(0.0, 0.0, 1.0), 0.9, 1.0));
    ModulatedConnection::new(bump, Arc::new(uniform([0.7, -0.4, 1.1])))
}

fn su2_basis() -> Vec<DVector<f64>> {
    LieAlgebra::su2().find_basis_in_orbit(&v3(0.0, 0.0, 1.0), 64, 7).unwrap().elements
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
    PolynomialConnection::new(su2(), c, lin, vec![]).unwrap()
}

fn rel_err(rec: &Tensor3, truth: &Tensor3) -> f64 {
    rec.max_abs_diff(truth) / truth.max_abs()
}

fn family(chart: &Chart, p: DVector<f64>, b: f64, h: f64, xi: DVector<f64>) -> BoundaryFamily {
    let w = chart.tangent_frame_g(&p).unwrap()[0].clone();
    BoundaryFamily::new(chart, p, w, b, stencil_samples(h), xi).unwrap()
}

#[test]
fn family_velocities_are_unit_and_inward() {
    let chart = ball();
    let p = v3(0.6, 0.0, 0.8);
    let f = family(&chart, p.clone(), 0.5, 0.01, DVector::from_vec(vec![1.0]));
    for &t in &f.t_samples {
        let v = f.velocity(t);
        assert!((chart.norm(&p, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!(chart.inner(&p, &v, &chart.outer_unit_normal(&p).unwrap()).unwrap() < 0.0);
    }
    assert!(BoundaryFamily::new(&chart, p.clone(), v3(1.0, 0.0, 0.0), 0.5, vec![0.1, 0.2, 0.3], DVector::from_vec(vec![1.0])).is_err());
    assert!(BoundaryFamily::new(&chart, p, f.w.clone(), 0.5, vec![0.2, 0.1, 0.3], DVector::from_vec(vec![1.0])).is_err());
}

#[test]
fn free_field_has_zero_r() {
    let chart = ball();
    let zero = crate::gauge::ZeroConnection::new(u1(), 3);
    let lens = SimulatedLens { chart: &chart, connection: &zero, config: IntegratorConfig::default() };
    let f = family(&chart, v3(0.0, 0.0, 1.0), 0.5, 0.01, DVector::from_vec(vec![1.0]));
    for s in measure_r(&chart, &u1(), &f, &lens, &IntegratorConfig::default()).unwrap() {
        assert!(s.r.amax() < 1e-12);
    }
}

#[test]
fn r_matches_two_flow_simulation() {
    let chart = ball();
    let a = uniform([0.3, 0.5, -0.8]);
    let cfg = IntegratorConfig::default();
    let lens = SimulatedLens { chart: &chart, connection: &a, config: cfg.clone() };
    let f = family(&chart, v3(0.0, 0.6, 0.8), 0.5, 0.02, DVector::from_vec(vec![1.3]));
    let zero = crate::gauge::ZeroConnection::new(u1(), 3);
    for s in measure_r(&chart, &u1(), &f, &lens, &cfg).unwrap() {
        let e = f.entry(s.t);
        let direct = flow(&chart, &a, &e, s.ell, &cfg).unwrap().to_vector() - flow(&chart, &zero, &e, s.ell, &cfg).unwrap().to_vector();
        assert!((&s.r - direct).amax() < 1e-8);
    }
}

#[test]
fn ell_prime_on_conformal_half_space() {
    // g = e^{−2μ zⁿ} I: Snell's law gives ℓ(t) = 2bt/μ exactly.
    let mu = 2.0;
    let chart = Chart::new(
        Metric::Conformal { phi: Quadratic::linear(0.0, v3(0.0, 0.0, -mu)) },
        Boundary::HalfSpace { dim: 3 },
        v3(-2.0, -2.0, -1.0),
        v3(2.0, 2.0, 2.0),
    )
    .unwrap();
    let zero = crate::gauge::ZeroConnection::new(u1(), 3);
    let cfg = IntegratorConfig::default();
    let lens = SimulatedLens { chart: &chart, connection: &zero, config: cfg.clone() };
    let b = 0.5;
    let f = family(&chart, v3(0.0, 0.0, 0.0), b, 0.05, DVector::from_vec(vec![1.0]));
    let samples = measure_r(&chart, &u1(), &f, &lens, &cfg).unwrap();
    for s in &samples {
        assert!((s.ell - 2.0 * b * s.t / mu).abs() < 1e-9);
    }
    let slope = estimate_ell_prime(&samples).unwrap();
    assert!((slope - 2.0 * b / mu).abs() < 1e-6);
    let rescaled = f.rescaled(slope);
    let relabeled: Vec<RSample> = samples.iter().zip(&rescaled.t_samples).map(|(s, &t)| RSample { t, ..s.clone() }).collect();
    assert!((estimate_ell_prime(&relabeled).unwrap() - 1.0).abs() < 1e-6);
    for (t0, t1) in f.t_samples.iter().zip(&rescaled.t_samples) {
        assert!((f.b * t0 - rescaled.b * t1).abs() < 1e-15);
    }
}

#[test]
fn ell_prime_must_be_positive() {
    let s = |t: f64, ell: f64| RSample { t, ell, r: DVector::zeros(1) };
    let bad = [s(0.1, -0.1), s(0.2, -0.2), s(0.3, -0.3)];
    assert!(matches!(estimate_ell_prime(&bad), Err(Error::Geometry(_))));
    assert!(estimate_ell_prime(&bad[..2]).is_err());
}

fn synthetic(h: f64, r: impl Fn(f64) -> f64) -> Vec<RSample> {
    stencil_samples(h)
        .into_iter()
        .map(|t| RSample { t, ell: t, r: DVector::from_vec(vec![r(t)]) })
        .collect()
}

#[test]
fn stencil_is_exact_on_quadratics() {
    let h = 0.01;
    let d = differentiate_r_at_zero(&synthetic(h, |t| 1.7 * t - 40.0 * t * t), h).unwrap();
    assert!((d.value[0] - 1.7).abs() < 1e-12);
    assert!(!d.noisy);
}

#[test]
fn stencil_error_is_second_order() {
    // On t³ the stencil returns −11 h².
    let (c, q) = (0.8, 5.0);
    for h in [0.02, 0.01] {
        let d = differentiate_r_at_zero(&synthetic(h, |t| c * t + q * t * t * t), h).unwrap();
        assert!((d.value[0] - (c - 11.0 * q * h * h)).abs() < 1e-12);
    }
}

#[test]
fn noisy_derivative_is_flagged() {
    let h = 0.01;
    let noisy = synthetic(h, |t| 1e-3 * t + if (t / h - 1.0).abs() < 1e-9 { 1e-5 } else { 0.0 });
    assert!(differentiate_r_at_zero(&noisy, h).unwrap().noisy);
    let missing: Vec<RSample> = synthetic(h, |t| t).into_iter().take(3).collect();
    assert!(matches!(differentiate_r_at_zero(&missing, h), Err(Error::Data(_))));
}

#[test]
fn r_prime_matches_analytic_limit() {
    let chart = ball();
    let a = boundary_bump_field();
    let cfg = IntegratorConfig::default();
    let lens = SimulatedLens { chart: &chart, connection: &a, config: cfg.clone() };
    let p = v3(0.3, 0.0, 0.9539392014169456);
    let xi = DVector::from_vec(vec![1.0]);
    let h = 0.01;
    let f = family(&chart, p.clone(), 0.5, h, xi.clone());
    let samples = measure_r(&chart, &u1(), &f, &lens, &cfg).unwrap();
    let l = estimate_ell_prime(&samples).unwrap();
    let der = differentiate_r_at_zero(&samples, h).unwrap();
    let limit = analytic_limit(&chart, &a, &PhasePoint::new(p, f.w.clone(), xi).unwrap()).unwrap();
    let got = der.value / l;
    assert!((&got - &limit).amax() < 0.02 * limit.amax(), "{got} vs {limit}");
}

#[test]
fn zero_field_recovers_zero() {
    let chart = ball();
    let zero = crate::gauge::ZeroConnection::new(su2(), 3);
    let lens = SimulatedLens { chart: &chart, connection: &zero, config: IntegratorConfig::default() };
    let r = recover_f_at_boundary(&chart, &zero, &su2_basis(), &v3(0.0, 0.6, 0.8), &lens, &RecoveryConfig::default()).unwrap();
    assert!(r.f_chart.max_abs() < 1e-8);
    assert!(r.dn_a.amax() < 1e-8);
    assert!(r.ell_prime_min > 0.0);
    assert!((r.convexity_min - 1.0).abs() < 1e-9);
}

#[test]
fn uniform_field_is_recovered() {
    let chart = ball();
    let a = uniform([0.4, -0.3, 0.6]);
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    for p in chart.boundary.grid(5, 0.0, 0) {
        let r = recover_f_at_boundary(&chart, &a, &unit_charge(), &p, &lens, &RecoveryConfig::default()).unwrap();
        let truth = curvature_at(&a, &p).unwrap();
        assert!(rel_err(&r.f_chart, &truth) < 0.02, "{}", rel_err(&r.f_chart, &truth));
        assert!(r.antisymmetry_residual < 0.05);
        assert!(r.boundary_consistency < 0.02 * truth.max_abs());
        assert!(!r.noisy);
        // ∂ₙA' = F(N, T_a).
        for a_idx in 0..2 {
            let n_vec = r.frame.column(2).into_owned();
            let t_vec = r.frame.column(a_idx).into_owned();
            let expected = crate::gauge::curvature_pair(&truth, n_vec.as_slice(), t_vec.as_slice())[0];
            assert!((r.dn_a[(a_idx, 0)] - expected).abs() < 0.02 * truth.max_abs());
        }
    }
}

#[test]
fn boundary_touching_field_is_recovered() {
    let chart = ball();
    let a = boundary_bump_field();
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    for p in [v3(0.0, 0.0, 1.0), v3(0.3, 0.0, 0.9539392014169456), v3(0.0, -0.25, 0.9682458365518543)] {
        let r = recover_f_at_boundary(&chart, &a, &unit_charge(), &p, &lens, &RecoveryConfig::default()).unwrap();
        let truth = curvature_at(&a, &p).unwrap();
        assert!(rel_err(&r.f_chart, &truth) < 0.02, "{}", rel_err(&r.f_chart, &truth));
    }
}

#[test]
fn interior_support_gives_zero_boundary_field() {
    let chart = ball();
    let bump = Arc::new(Bump::new(v3(0.0, 0.0, 0.0), 0.6, 1.0));
    let a = ModulatedConnection::new(bump, Arc::new(uniform([1.0, 0.5, -0.5])));
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    let r = recover_f_at_boundary(&chart, &a, &unit_charge(), &v3(0.0, 0.0, 1.0), &lens, &RecoveryConfig::default()).unwrap();
    assert!(r.f_chart.max_abs() < 1e-8);
}

#[test]
fn truncation_error_is_second_order() {
    let chart = ball();
    let a = uniform([0.4, -0.3, 0.6]);
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::with_tol(1e-12) };
    let p = v3(0.0, 0.6, 0.8);
    let truth = curvature_at(&a, &p).unwrap();
    let err = |h: f64| {
        let cfg = RecoveryConfig { h: Some(h), integrator: IntegratorConfig::with_tol(1e-12), ..Default::default() };
        let r = recover_f_at_boundary(&chart, &a, &unit_charge(), &p, &lens, &cfg).unwrap();
        r.f_chart.max_abs_diff(&truth)
    };
    let ratio = err(0.04) / err(0.02);
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn nonabelian_field_is_recovered() {
    let chart = ball();
    let a = random_su2_connection(3, 0.3);
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    let p = v3(0.0, 0.6, 0.8);
    let r = recover_f_at_boundary(&chart, &a, &su2_basis(), &p, &lens, &RecoveryConfig::default()).unwrap();
    let truth = curvature_at(&a, &p).unwrap();
    assert!(rel_err(&r.f_chart, &truth) < 0.02, "{}", rel_err(&r.f_chart, &truth));
    assert!(r.charge_block_residual < 0.02 * a.components(&p).unwrap().amax());
    assert!(r.boundary_consistency < 0.02 * truth.max_abs());
}

#[test]
fn recovery_is_gauge_robust() {
    let chart = ball();
    let base: Arc<dyn Connection> = Arc::new(random_su2_connection(4, 0.3));
    let bump = Arc::new(Bump::new(v3(0.0, 0.1, 0.0), 0.85, 1.2));
    let u = Arc::new(ExpGauge::new(su2(), 3, bump, v3(0.5, -0.2, 0.7)).unwrap());
    let at = gauge_transform(base.clone(), u).unwrap();
    let p = v3(0.0, 0.6, 0.8);
    let truth = curvature_at(base.as_ref(), &p).unwrap();
    let cfg = RecoveryConfig::default();
    let l0 = SimulatedLens { chart: &chart, connection: base.as_ref(), config: IntegratorConfig::default() };
    let l1 = SimulatedLens { chart: &chart, connection: &at, config: IntegratorConfig::default() };
    let r0 = recover_f_at_boundary(&chart, base.as_ref(), &su2_basis(), &p, &l0, &cfg).unwrap();
    let r1 = recover_f_at_boundary(&chart, &at, &su2_basis(), &p, &l1, &cfg).unwrap();
    let e0 = r0.f_chart.max_abs_diff(&truth);
    let e1 = r1.f_chart.max_abs_diff(&truth);
    assert!(e1 <= 2.0 * e0 + 1e-9, "{e0:e} {e1:e}");
}

#[test]
fn degenerate_charges_are_rejected() {
    let chart = ball();
    let a = random_su2_connection(5, 0.3);
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    let xi = v3(0.0, 0.0, 1.0);
    let r = recover_f_at_boundary(&chart, &a, &[xi.clone(), xi.clone(), -xi], &v3(0.0, 0.0, 1.0), &lens, &RecoveryConfig::default());
    assert!(matches!(r, Err(Error::DegenerateOrbit(_))));
}

#[test]
fn table_lens_reproduces_simulation() {
    let chart = ball();
    let a = uniform([0.2, 0.9, -0.1]);
    let cfg = RecoveryConfig::default();
    let p = v3(0.6, 0.0, 0.8);
    let sim = SimulatedLens { chart: &chart, connection: &a, config: cfg.integrator.clone() };
    let entries = recovery_entries(&chart, &LieAlgebra::u1(), &unit_charge(), &p, &cfg).unwrap();
    let rows: Vec<LensDatum> = sim.lens_batch(&entries).into_iter().map(|r| r.unwrap()).collect();
    let table = TableLens::new(rows);
    let r_sim = recover_f_at_boundary(&chart, &a, &unit_charge(), &p, &sim, &cfg).unwrap();
    let r_tab = recover_f_at_boundary(&chart, &a, &unit_charge(), &p, &table, &cfg).unwrap();
    assert_eq!(r_sim, r_tab);
    let empty = TableLens::new(vec![]);
    assert!(matches!(recover_f_at_boundary(&chart, &a, &unit_charge(), &p, &empty, &cfg), Err(Error::Data(_))));
}

#[test]
fn patch_varies_smoothly() {
    let chart = ball();
    let a = boundary_bump_field();
    let lens = SimulatedLens { chart: &chart, connection: &a, config: IntegratorConfig::default() };
    let pts: Vec<DVector<f64>> = (0..5)
        .map(|k| {
            let th = 0.05 * k as f64;
            v3(th.sin(), 0.0, th.cos())
        })
        .collect();
    let reps = recover_boundary_patch(&chart, &a, &unit_charge(), &pts, &lens, &RecoveryConfig::default());
    let rec: Vec<Tensor3> = reps.into_iter().map(|r| r.unwrap().f_chart).collect();
    let truth: Vec<Tensor3> = pts.iter().map(|p| curvature_at(&a, p).unwrap()).collect();
    for k in 1..4 {
        let d2 = rec[k - 1].add(&rec[k + 1]).sub(&rec[k].scaled(2.0));
        let d2t = truth[k - 1].add(&truth[k + 1]).sub(&truth[k].scaled(2.0));
        assert!(d2.max_abs_diff(&d2t) < 0.02 * truth[k].max_abs());
    }
}
