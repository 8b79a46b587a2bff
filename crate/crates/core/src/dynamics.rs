//! Wong's equations on `TM × 𝔤`: the generating vector field, adaptive
//! integration with boundary exit detection, lens data, and convexity and
//! trapping diagnostics.
//!
//! The color charge is carried in lowered coordinates `ξ_α = ⟨ξ, e_α⟩`, in
//! which the equations read
//!
//! ```text
//! ż^i  = v^i
//! v̇^i  = −Γ^i_{jk} v^j v^k + g^{ij} F^α_{jk} v^k ξ_α
//! ξ̇_α  = −ξ_β c^β_{αμ} A^μ_i v^i
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::gauge::{field_jet, lorentz_force_from, Connection};
use crate::manifold::{Chart, MetricJet, ScalarField};
use crate::ode::{self, DenseOutput, Event, OdeOptions, Termination};
use crate::tensor::Tensor3;

/// A point `(z, v, ξ)` of `TM × 𝔤`, with `ξ` in lowered coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub z: DVector<f64>,
    pub v: DVector<f64>,
    pub xi: DVector<f64>,
}

impl PhasePoint {
    pub fn new(z: DVector<f64>, v: DVector<f64>, xi: DVector<f64>) -> Result<Self> {
        check_dim("velocity", v.len(), z.len())?;
        Ok(Self { z, v, xi })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn d(&self) -> usize {
        self.xi.len()
    }

    /// `(z, v, ξ)` concatenated.
    pub fn pack(&self) -> Vec<f64> {
        self.z.iter().chain(self.v.iter()).chain(self.xi.iter()).cloned().collect()
    }

    pub fn unpack(y: &[f64], n: usize) -> Self {
        Self {
            z: DVector::from_column_slice(&y[..n]),
            v: DVector::from_column_slice(&y[n..2 * n]),
            xi: DVector::from_column_slice(&y[2 * n..]),
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.pack())
    }

    /// Checks `|v|_g = 1` and `‖ξ‖ = orbit_norm` to `tol`.
    pub fn check_unit(&self, chart: &Chart, algebra: &crate::lie_algebra::LieAlgebra, orbit_norm: f64, tol: f64) -> Result<()> {
        let speed = chart.norm(&self.z, &self.v)?;
        if (speed - 1.0).abs() > tol {
            return Err(Error::Precondition(format!("|v|_g = {speed} is not 1")));
        }
        let xn = algebra.norm_lower(&self.xi);
        if (xn - orbit_norm).abs() > tol * orbit_norm.max(1.0) {
            return Err(Error::Precondition(format!("‖ξ‖ = {xn} is off the orbit norm {orbit_norm}")));
        }
        Ok(())
    }
}

/// Adaptive integration settings.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Trapping cap; defaults to 100 × the chart diameter.
    pub max_time: Option<f64>,
    /// Required accuracy `|ρ − exit_level|` of located exits.
    pub event_tol: f64,
    /// Exit happens on `{ρ = exit_level}`; zero is the true boundary.
    pub exit_level: f64,
    /// Largest step; defaults to 1/20 of the chart diameter.
    pub h_max: Option<f64>,
    pub method: Method,
}

/// Integration scheme tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    DormandPrince54,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_time: None,
            event_tol: 1e-12,
            exit_level: 0.0,
            h_max: None,
            method: Method::DormandPrince54,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.event_tol > 0.0) {
            return Err(Error::Precondition("tolerances must be positive".into()));
        }
        if let Some(t) = self.max_time {
            if !(t > 0.0) {
                return Err(Error::Precondition("max_time must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn max_time_for(&self, chart: &Chart) -> f64 {
        self.max_time.unwrap_or(100.0 * chart.diameter())
    }

    pub(crate) fn ode_options(&self, chart: &Chart) -> OdeOptions {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            h_init: None,
            h_max: self.h_max.unwrap_or(chart.diameter() / 20.0),
            max_steps: 2_000_000,
        }
    }
}

/// Geometry and field data at one base point.
pub struct PointData {
    pub jet: MetricJet,
    pub a: DMatrix<f64>,
    pub f: Tensor3,
}

/// Chart plus connection: the vector field 𝕏.
#[derive(Clone, Copy)]
pub struct WongSystem<'a> {
    pub chart: &'a Chart,
    pub connection: &'a dyn Connection,
}

impl<'a> WongSystem<'a> {
    pub fn new(chart: &'a Chart, connection: &'a dyn Connection) -> Result<Self> {
        check_dim("connection base dimension", connection.dim(), chart.dim())?;
        Ok(Self { chart, connection })
    }

    pub fn n(&self) -> usize {
        self.chart.dim()
    }

    pub fn d(&self) -> usize {
        self.connection.algebra().dim()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n() + self.d()
    }

    pub fn point_data(&self, z: &DVector<f64>) -> Result<PointData> {
        let jet = self.chart.metric_jet(z)?;
        let fj = field_jet(self.connection, z)?;
        Ok(PointData { jet, a: fj.a, f: fj.f })
    }

    /// Evaluates 𝕏 on the packed state.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.n();
        let z = DVector::from_column_slice(&y[..n]);
        let pd = self.point_data(&z)?;
        self.rhs_with(&pd, y, dy);
        Ok(())
    }

    pub fn rhs_with(&self, pd: &PointData, y: &[f64], dy: &mut [f64]) {
        let n = self.n();
        let d = self.d();
        let v = &y[n..2 * n];
        let xi = &y[2 * n..];
        dy[..n].copy_from_slice(v);
        let gam = pd.jet.christoffel_contract(v, v);
        let force = lorentz_force_from(&pd.jet.g_inv, &pd.f, v, xi);
        for i in 0..n {
            dy[n + i] = -gam[i] + force[i];
        }
        let c = self.connection.algebra().structure_constants();
        if c.is_abelian() {
            for o in dy[2 * n..].iter_mut() {
                *o = 0.0;
            }
            return;
        }
        // a^μ = A^μ_i v^i
        let av: Vec<f64> = (0..d).map(|mu| (0..n).map(|i| pd.a[(i, mu)] * v[i]).sum()).collect();
        for alpha in 0..d {
            let mut acc = 0.0;
            for (beta, &xb) in xi.iter().enumerate() {
                if xb == 0.0 {
                    continue;
                }
                let row = c.tensor().fiber(beta, alpha);
                let mut s = 0.0;
                for mu in 0..d {
                    s += row[mu] * av[mu];
                }
                acc += xb * s;
            }
            dy[2 * n + alpha] = -acc;
        }
    }
}

/// 𝕏 at a phase point.
pub fn wong_rhs(chart: &Chart, a: &dyn Connection, phi: &PhasePoint) -> Result<DVector<f64>> {
    let sys = WongSystem::new(chart, a)?;
    check_dim("charge", phi.d(), sys.d())?;
    let y = phi.pack();
    let mut dy = vec![0.0; y.len()];
    sys.rhs(&y, &mut dy)?;
    Ok(DVector::from_vec(dy))
}

/// An integrated Wong trajectory with its continuous extension.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub n: usize,
    pub start: PhasePoint,
    pub end: PhasePoint,
    /// Exit time, or the final time when trapped or integrating to a fixed time.
    pub t_end: f64,
    pub exited: bool,
    pub trapped: bool,
    pub dense: DenseOutput,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> PhasePoint {
        if t <= 0.0 {
            return self.start.clone();
        }
        if t >= self.t_end {
            return self.end.clone();
        }
        PhasePoint::unpack(&self.dense.eval(t), self.n)
    }

    /// Accepted step boundaries.
    pub fn knots(&self) -> Vec<f64> {
        if self.dense.segment_count() == 0 {
            vec![0.0]
        } else {
            self.dense.knots()
        }
    }

    /// `count` equally spaced samples on `[0, t_end]`.
    pub fn sample(&self, count: usize) -> Vec<(f64, PhasePoint)> {
        let count = count.max(2);
        (0..count)
            .map(|k| {
                let t = self.t_end * k as f64 / (count - 1) as f64;
                (t, self.state_at(t))
            })
            .collect()
    }

    /// Largest `| |v|_g − |v₀|_g |` and `| ‖ξ‖ − ‖ξ₀‖ |` over the step knots.
    pub fn conservation_drift(&self, chart: &Chart, algebra: &crate::lie_algebra::LieAlgebra) -> Result<(f64, f64)> {
        let s0 = chart.norm(&self.start.z, &self.start.v)?;
        let x0 = algebra.norm_lower(&self.start.xi);
        let mut ds = 0.0_f64;
        let mut dx = 0.0_f64;
        let mut pts: Vec<PhasePoint> = self.knots().into_iter().map(|t| self.state_at(t)).collect();
        pts.push(self.end.clone());
        for p in pts {
            ds = ds.max((chart.norm(&p.z, &p.v)? - s0).abs());
            dx = dx.max((algebra.norm_lower(&p.xi) - x0).abs());
        }
        Ok((ds, dx))
    }
}

/// Integrates from `phi0` until the exit level set is crossed or `max_time`
/// is reached.
pub fn integrate(chart: &Chart, a: &dyn Connection, phi0: &PhasePoint, config: &IntegratorConfig) -> Result<Trajectory> {
    run(chart, a, phi0, config, None)
}

/// `Φ_t(φ)` for a fixed time, ignoring the boundary (the extended manifold).
pub fn flow(chart: &Chart, a: &dyn Connection, phi: &PhasePoint, t: f64, config: &IntegratorConfig) -> Result<PhasePoint> {
    Ok(run(chart, a, phi, config, Some(t))?.end)
}

/// Fixed-time integration keeping the dense output.
pub fn flow_trajectory(chart: &Chart, a: &dyn Connection, phi: &PhasePoint, t: f64, config: &IntegratorConfig) -> Result<Trajectory> {
    run(chart, a, phi, config, Some(t))
}

fn run(chart: &Chart, a: &dyn Connection, phi0: &PhasePoint, config: &IntegratorConfig, fixed: Option<f64>) -> Result<Trajectory> {
    config.validate()?;
    let sys = WongSystem::new(chart, a)?;
    check_dim("phase point position", phi0.n(), sys.n())?;
    check_dim("phase point charge", phi0.d(), sys.d())?;
    chart.check_domain(&phi0.z)?;
    let n = sys.n();
    let y0 = phi0.pack();
    let opts = config.ode_options(chart);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| sys.rhs(y, dy);
    let level = config.exit_level;
    let g = |y: &[f64]| chart.rho(&DVector::from_column_slice(&y[..n])) - level;
    let event = Event { g: &g, tol: config.event_tol };
    let (t_end, ev) = match fixed {
        Some(t) => (t, None),
        None => (config.max_time_for(chart), Some(&event)),
    };
    if t_end < 0.0 {
        return Err(Error::Precondition("flow time must be nonnegative".into()));
    }
    let sol = ode::integrate(rhs, 0.0, &y0, t_end, &opts, ev, true)?;
    let exited = matches!(sol.termination, Termination::Event | Termination::ImmediateExit);
    let trapped = fixed.is_none() && sol.termination == Termination::Reached;
    Ok(Trajectory {
        n,
        start: phi0.clone(),
        end: PhasePoint::unpack(&sol.y, n),
        t_end: sol.t,
        exited,
        trapped,
        dense: sol.dense.unwrap_or_default(),
        accepted_steps: sol.accepted_steps,
        rejected_steps: sol.rejected_steps,
    })
}

/// Travel time `τ(φ)`; `None` when the trajectory is trapped up to `max_time`.
pub fn exit_time(chart: &Chart, a: &dyn Connection, phi: &PhasePoint, config: &IntegratorConfig) -> Result<Option<f64>> {
    let traj = integrate(chart, a, phi, config)?;
    Ok(if traj.trapped { None } else { Some(traj.t_end) })
}

/// One lens-data record.
#[derive(Clone, Debug, PartialEq)]
pub struct LensDatum {
    pub entry: PhasePoint,
    pub exit: PhasePoint,
    pub travel_time: f64,
    pub trapped: bool,
}

/// Checks membership of an entry in `∂₊SM`.
pub fn check_entry(chart: &Chart, phi: &PhasePoint) -> Result<()> {
    let r = chart.rho(&phi.z);
    if r.abs() > 1e-8 {
        return Err(Error::Precondition(format!("entry is off the boundary (ρ = {r:e})")));
    }
    let speed = chart.norm(&phi.z, &phi.v)?;
    if (speed - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("entry speed {speed} is not 1")));
    }
    let nu = chart.normal_field(&phi.z)?;
    if chart.inner(&phi.z, &phi.v, &nu)? > 1e-12 {
        return Err(Error::Precondition("entry velocity points outward".into()));
    }
    Ok(())
}

/// Lens datum for one entry.
pub fn lens_datum(chart: &Chart, a: &dyn Connection, entry: &PhasePoint, config: &IntegratorConfig) -> Result<LensDatum> {
    check_entry(chart, entry)?;
    let traj = integrate(chart, a, entry, config)?;
    Ok(LensDatum {
        entry: entry.clone(),
        exit: traj.end,
        travel_time: traj.t_end,
        trapped: traj.trapped,
    })
}

/// Lens data for a batch of entries, computed in parallel; each entry keeps
/// its own result so one failure does not stop the batch.
pub fn lens_data(chart: &Chart, a: &dyn Connection, entries: &[PhasePoint], config: &IntegratorConfig) -> Vec<Result<LensDatum>> {
    entries.par_iter().map(|e| lens_datum(chart, a, e, config)).collect()
}

/// Inward unit vectors at a boundary point with `⟨v, ν⟩_g ≤ −min_inward`,
/// spread over the inward hemisphere.
pub fn inward_directions(chart: &Chart, p: &DVector<f64>, count: usize, min_inward: f64, seed: u64) -> Result<Vec<DVector<f64>>> {
    let nu = chart.normal_field(p)?;
    let frame = chart.tangent_frame_g(p)?;
    let n = chart.dim();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let c = min_inward + (1.0 - min_inward) * (k as f64 + 0.5) / count as f64;
        let s = (1.0 - c * c).max(0.0).sqrt();
        let t = match n {
            2 => {
                if k % 2 == 0 {
                    frame[0].clone()
                } else {
                    -frame[0].clone()
                }
            }
            3 => {
                let psi = golden * k as f64;
                &frame[0] * psi.cos() + &frame[1] * psi.sin()
            }
            _ => {
                let mut t = DVector::zeros(n);
                for f in &frame {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    t += f * w;
                }
                chart.unit_normalize(p, &t)?
            }
        };
        let v = &nu * (-c) + t * s;
        out.push(chart.unit_normalize(p, &v)?);
    }
    Ok(out)
}

/// Entry grid on `∂₊SM × 𝒪`: `per_point` inward directions at each boundary
/// point, cycling through the supplied charges.
pub fn entry_grid(
    chart: &Chart,
    points: &[DVector<f64>],
    per_point: usize,
    charges: &[DVector<f64>],
    min_inward: f64,
    seed: u64,
) -> Result<Vec<PhasePoint>> {
    if charges.is_empty() {
        return Err(Error::Precondition("no charges supplied".into()));
    }
    let mut out = Vec::new();
    let mut idx = 0;
    for (k, p) in points.iter().enumerate() {
        for v in inward_directions(chart, p, per_point, min_inward, seed.wrapping_add(k as u64))? {
            out.push(PhasePoint::new(p.clone(), v, charges[idx % charges.len()].clone())?);
            idx += 1;
        }
    }
    Ok(out)
}

/// Minimum of a convexity quantity over a grid, with its location.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub minimum: f64,
    pub argmin: PhasePoint,
    /// Minimum of the field-free part alone (Hessian or second fundamental form).
    pub field_free_minimum: f64,
    pub samples: usize,
}

/// Unit directions `±v` built from coordinate seeds, normalized in `g`.
fn symmetric_unit_directions(chart: &Chart, z: &DVector<f64>, seeds: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(2 * seeds.len());
    for s in seeds {
        let v = chart.unit_normalize(z, s)?;
        out.push(-&v);
        out.push(v);
    }
    Ok(out)
}

fn track(best: &mut Option<(f64, PhasePoint)>, q: f64, z: &DVector<f64>, v: &DVector<f64>, xi: &DVector<f64>) {
    if best.as_ref().map_or(true, |b| q < b.0) {
        *best = Some((q, PhasePoint { z: z.clone(), v: v.clone(), xi: xi.clone() }));
    }
}

/// Minimum of `𝕏²f = Hess f(v,v) + df(𝔽^ξ v)` over points, directions `±v`
/// and charges.
pub fn ym_convex_function_check(
    chart: &Chart,
    a: &dyn Connection,
    f: &dyn ScalarField,
    points: &[DVector<f64>],
    direction_seeds: &[DVector<f64>],
    charges: &[DVector<f64>],
) -> Result<ConvexityReport> {
    let sys = WongSystem::new(chart, a)?;
    let mut best = None;
    let mut hess_min = f64::INFINITY;
    let mut samples = 0;
    for z in points {
        let pd = sys.point_data(z)?;
        let grad = chart.scalar_gradient(f, z)?;
        for v in symmetric_unit_directions(chart, z, direction_seeds)? {
            let hess = chart.hessian_scalar_with(&pd.jet, f, z, &v)?;
            hess_min = hess_min.min(hess);
            for xi in charges {
                let force = lorentz_force_from(&pd.jet.g_inv, &pd.f, v.as_slice(), xi.as_slice());
                let q = hess + grad.dot(&force);
                track(&mut best, q, z, &v, xi);
                samples += 1;
            }
        }
    }
    let (minimum, argmin) = best.ok_or_else(|| Error::Precondition("empty convexity grid".into()))?;
    Ok(ConvexityReport {
        minimum,
        argmin,
        field_free_minimum: hess_min,
        samples,
    })
}

/// Unit tangent directions at a boundary point: `±` frame vectors and their
/// pairwise diagonals, or `directions` equally spaced angles when `n = 3`.
pub fn boundary_tangent_directions(chart: &Chart, p: &DVector<f64>, directions: usize) -> Result<Vec<DVector<f64>>> {
    let frame = chart.tangent_frame_g(p)?;
    let mut out = Vec::new();
    if frame.len() == 2 {
        let m = directions.max(2);
        for k in 0..2 * m {
            let th = std::f64::consts::PI * k as f64 / m as f64;
            out.push(&frame[0] * th.cos() + &frame[1] * th.sin());
        }
    } else {
        for (i, a) in frame.iter().enumerate() {
            out.push(a.clone());
            out.push(-a.clone());
            for b in &frame[i + 1..] {
                for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    out.push((a * sa + b * sb) / 2f64.sqrt());
                }
            }
        }
    }
    Ok(out)
}

/// Minimum of `Λ(v,v) + g(ν, 𝔽^ξ v)` over boundary points, unit tangent
/// directions and charges.
pub fn ym_convex_boundary_check(
    chart: &Chart,
    a: &dyn Connection,
    boundary_points: &[DVector<f64>],
    directions: usize,
    charges: &[DVector<f64>],
) -> Result<ConvexityReport> {
    let sys = WongSystem::new(chart, a)?;
    let mut best = None;
    let mut lambda_min = f64::INFINITY;
    let mut samples = 0;
    for p in boundary_points {
        let pd = sys.point_data(p)?;
        let nu = chart.outer_unit_normal(p)?;
        let g_nu = &pd.jet.g * &nu;
        for v in boundary_tangent_directions(chart, p, directions)? {
            let lam = chart.second_fundamental_form(p, &v)?;
            lambda_min = lambda_min.min(lam);
            for xi in charges {
                let force = lorentz_force_from(&pd.jet.g_inv, &pd.f, v.as_slice(), xi.as_slice());
                let q = lam + g_nu.dot(&force);
                track(&mut best, q, p, &v, xi);
                samples += 1;
            }
        }
    }
    let (minimum, argmin) = best.ok_or_else(|| Error::Precondition("empty boundary grid".into()))?;
    Ok(ConvexityReport {
        minimum,
        argmin,
        field_free_minimum: lambda_min,
        samples,
    })
}

/// Empirical trapping statistics from random interior starts.
#[derive(Clone, Debug, PartialEq)]
pub struct NontrappingReport {
    pub samples: usize,
    pub trapped: usize,
    pub trapped_fraction: f64,
    pub max_exit_time: f64,
    pub failures: usize,
}

/// Integrates from `sample_count` random interior phase points (uniform in
/// `M ∩ box`, Gaussian directions, charges drawn from the supplied orbit
/// samples) and reports how many reach `max_time`.
pub fn nontrapping_probe(
    chart: &Chart,
    a: &dyn Connection,
    charges: &[DVector<f64>],
    sample_count: usize,
    seed: u64,
    config: &IntegratorConfig,
) -> Result<NontrappingReport> {
    if charges.is_empty() {
        return Err(Error::Precondition("no charges supplied".into()));
    }
    let n = chart.dim();
    let starts: Vec<PhasePoint> = (0..sample_count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let z = loop {
                let z = DVector::from_fn(n, |i, _| {
                    let u: f64 = rng.gen();
                    chart.box_lo[i] + u * (chart.box_hi[i] - chart.box_lo[i])
                });
                if chart.rho(&z) < config.exit_level.min(0.0) {
                    break z;
                }
            };
            let v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let v = chart.unit_normalize(&z, &v)?;
            let xi = charges[rng.gen_range(0..charges.len())].clone();
            PhasePoint::new(z, v, xi)
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<Result<Option<f64>>> = starts.par_iter().map(|p| exit_time(chart, a, p, config)).collect();
    let mut trapped = 0;
    let mut failures = 0;
    let mut max_exit: f64 = 0.0;
    for o in outcomes {
        match o {
            Ok(Some(t)) => max_exit = max_exit.max(t),
            Ok(None) => trapped += 1,
            Err(_) => failures += 1,
        }
    }
    Ok(NontrappingReport {
        samples: sample_count,
        trapped,
        trapped_fraction: trapped as f64 / sample_count.max(1) as f64,
        max_exit_time: max_exit,
        failures,
    })
}
