//! Linearized Wong flow, the weights `W` and `Q`, the pseudo-linearization
//! identity and the weighted X-ray transform `I_w`.
//!
//! For two fields `A`, `Ã` with flows `Φ`, `Φ̃` and any `φ` with travel time
//! `τ`,
//!
//! ```text
//! ∫₀^τ ∂Φ̃/∂φ(τ − s, Φ(s, φ)) (𝕏 − 𝕏̃)(Φ(s, φ)) ds = Φ(τ, φ) − Φ̃(τ, φ)
//! ```
//!
//! holds exactly. Its velocity rows are the transform
//! `I_w[f, β] = ∫ W f(γ̇)·ξ + Q β(γ̇)·ξ ds` with `W = (∂Θ̃/∂v) g⁻¹` and
//! `Q = −∂Θ̃/∂ξ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{integrate, IntegratorConfig, PhasePoint, Trajectory, WongSystem};
use crate::error::{check_dim, Error, Result};
use crate::gauge::{curvature_at, Connection};
use crate::manifold::Chart;
use crate::ode;
use crate::tensor::Tensor3;

/// Base step for the position columns of the hybrid Jacobian.
const Z_STEP: f64 = 1e-5;
/// Base step for the all-finite-difference Jacobian.
const FD_STEP: f64 = 1e-6;

/// `∂𝕏/∂φ` at `phi`. Velocity and charge columns are exact; position
/// columns use central differences of 𝕏 with step `1e-5 (1 + |z|)`.
pub fn rhs_jacobian(chart: &Chart, a: &dyn Connection, phi: &PhasePoint) -> Result<DMatrix<f64>> {
    let sys = WongSystem::new(chart, a)?;
    let y = phi.pack();
    jacobian_at(&sys, &y)
}

/// `∂𝕏/∂φ` by second-order central differences in every coordinate, with
/// step `1e-6 (1 + |φ|)`.
pub fn rhs_jacobian_fd(chart: &Chart, a: &dyn Connection, phi: &PhasePoint) -> Result<DMatrix<f64>> {
    let sys = WongSystem::new(chart, a)?;
    let y = phi.pack();
    let m = y.len();
    let h = FD_STEP * (1.0 + DVector::from_column_slice(&y).norm());
    let mut out = DMatrix::zeros(m, m);
    let mut yp = y.clone();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for k in 0..m {
        yp[k] = y[k] + h;
        sys.rhs(&yp, &mut fp)?;
        yp[k] = y[k] - h;
        sys.rhs(&yp, &mut fm)?;
        yp[k] = y[k];
        for i in 0..m {
            out[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// `(∂𝕏/∂φ) t` for a single tangent `t`, with one directional difference in
/// the position part.
pub fn rhs_jvp(chart: &Chart, a: &dyn Connection, phi: &PhasePoint, t: &DVector<f64>) -> Result<DVector<f64>> {
    let sys = WongSystem::new(chart, a)?;
    let y = phi.pack();
    check_dim("tangent", t.len(), y.len())?;
    let mut out = vec![0.0; y.len()];
    let mut f0 = vec![0.0; y.len()];
    let pd = sys.point_data(&phi.z)?;
    sys.rhs_with(&pd, &y, &mut f0);
    jvp_at(&sys, &pd, &y, t.as_slice(), &mut out)?;
    Ok(DVector::from_vec(out))
}

/// Exact `∂𝕏/∂(v, ξ)` block columns, written into columns `n..` of `out`.
fn vxi_columns(sys: &WongSystem, pd: &crate::dynamics::PointData, y: &[f64], out: &mut DMatrix<f64>) {
    let n = sys.n();
    let d = sys.d();
    let v = &y[n..2 * n];
    let xi = &y[2 * n..];
    let c = sys.connection.algebra().structure_constants();
    let gamma = &pd.jet.christoffel;
    for i in 0..n {
        out[(i, n + i)] = 1.0;
    }
    // v̇ rows.
    for i in 0..n {
        for m in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += (gamma.get(i, m, k) + gamma.get(i, k, m)) * v[k];
            }
            let mut lor = 0.0;
            for j in 0..n {
                let gij = pd.jet.g_inv[(i, j)];
                if gij == 0.0 {
                    continue;
                }
                let fib = pd.f.fiber(j, m);
                lor += gij * (0..d).map(|al| fib[al] * xi[al]).sum::<f64>();
            }
            out[(n + i, n + m)] = -s + lor;
        }
        for al in 0..d {
            let mut s = 0.0;
            for j in 0..n {
                let gij = pd.jet.g_inv[(i, j)];
                if gij == 0.0 {
                    continue;
                }
                for k in 0..n {
                    s += gij * pd.f.get(j, k, al) * v[k];
                }
            }
            out[(n + i, 2 * n + al)] = s;
        }
    }
    if c.is_abelian() {
        return;
    }
    // ξ̇_α = −ξ_β c^β_{αμ} A^μ_i v^i.
    let av: Vec<f64> = (0..d).map(|mu| (0..n).map(|i| pd.a[(i, mu)] * v[i]).sum()).collect();
    for al in 0..d {
        for be in 0..d {
            let row = c.tensor().fiber(be, al);
            out[(2 * n + al, 2 * n + be)] = -(0..d).map(|mu| row[mu] * av[mu]).sum::<f64>();
        }
        for i in 0..n {
            let mut s = 0.0;
            for (be, &xb) in xi.iter().enumerate() {
                let row = c.tensor().fiber(be, al);
                s += xb * (0..d).map(|mu| row[mu] * pd.a[(i, mu)]).sum::<f64>();
            }
            out[(2 * n + al, n + i)] = -s;
        }
    }
}

/// Central difference of 𝕏 along the position direction `dir`.
fn position_derivative(sys: &WongSystem, y: &[f64], dir: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = sys.n();
    let mut yp = y.to_vec();
    let mut ym = y.to_vec();
    for i in 0..n {
        yp[i] += h * dir[i];
        ym[i] -= h * dir[i];
    }
    let mut fp = vec![0.0; y.len()];
    let mut fm = vec![0.0; y.len()];
    sys.rhs(&yp, &mut fp)?;
    sys.rhs(&ym, &mut fm)?;
    Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h)).collect())
}

fn jacobian_at(sys: &WongSystem, y: &[f64]) -> Result<DMatrix<f64>> {
    let n = sys.n();
    let m = y.len();
    let z = DVector::from_column_slice(&y[..n]);
    let pd = sys.point_data(&z)?;
    let mut out = DMatrix::zeros(m, m);
    vxi_columns(sys, &pd, y, &mut out);
    let h = Z_STEP * (1.0 + z.norm());
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let col = position_derivative(sys, y, &e, h)?;
        for i in n..m {
            out[(i, k)] = col[i];
        }
    }
    Ok(out)
}

fn jvp_at(sys: &WongSystem, pd: &crate::dynamics::PointData, y: &[f64], t: &[f64], out: &mut [f64]) -> Result<()> {
    let n = sys.n();
    let m = y.len();
    let mut block = DMatrix::zeros(m, m);
    vxi_columns(sys, pd, y, &mut block);
    for i in 0..m {
        out[i] = (n..m).map(|k| block[(i, k)] * t[k]).sum();
    }
    let tz = &t[..n];
    let norm = tz.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        let dir: Vec<f64> = tz.iter().map(|x| x / norm).collect();
        let h = Z_STEP * (1.0 + y[..n].iter().map(|x| x * x).sum::<f64>().sqrt());
        let col = position_derivative(sys, y, &dir, h)?;
        for i in n..m {
            out[i] += norm * col[i];
        }
    }
    Ok(())
}

/// Solution of the variational equation: `∂Φ/∂φ(t, φ)` with rows and
/// columns ordered `(z, v, ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianState {
    pub n: usize,
    pub d: usize,
    pub j: DMatrix<f64>,
}

impl JacobianState {
    pub fn identity(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            j: DMatrix::identity(2 * n + d, 2 * n + d),
        }
    }

    fn range(&self, b: usize) -> (usize, usize) {
        match b {
            0 => (0, self.n),
            1 => (self.n, self.n),
            _ => (2 * self.n, self.d),
        }
    }

    /// Block `(row, col)` with 0 = z, 1 = v, 2 = ξ.
    pub fn block(&self, row: usize, col: usize) -> DMatrix<f64> {
        let (r0, nr) = self.range(row);
        let (c0, nc) = self.range(col);
        self.j.view((r0, c0), (nr, nc)).into_owned()
    }

    pub fn dx_dz(&self) -> DMatrix<f64> {
        self.block(0, 0)
    }
    pub fn dx_dv(&self) -> DMatrix<f64> {
        self.block(0, 1)
    }
    pub fn dx_dxi(&self) -> DMatrix<f64> {
        self.block(0, 2)
    }
    pub fn dtheta_dz(&self) -> DMatrix<f64> {
        self.block(1, 0)
    }
    pub fn dtheta_dv(&self) -> DMatrix<f64> {
        self.block(1, 1)
    }
    pub fn dtheta_dxi(&self) -> DMatrix<f64> {
        self.block(1, 2)
    }
    pub fn dxi_dz(&self) -> DMatrix<f64> {
        self.block(2, 0)
    }
    pub fn dxi_dv(&self) -> DMatrix<f64> {
        self.block(2, 1)
    }
    pub fn dxi_dxi(&self) -> DMatrix<f64> {
        self.block(2, 2)
    }
}

/// Integrates `φ̇ = 𝕏(φ)`, `Ṫ = (∂𝕏/∂φ) T` for a fixed time with shared
/// adaptive steps, ignoring the boundary. `tangents` holds the initial
/// columns of `T`.
pub fn flow_with_tangents(
    chart: &Chart,
    a: &dyn Connection,
    phi0: &PhasePoint,
    t_end: f64,
    tangents: &DMatrix<f64>,
    config: &IntegratorConfig,
) -> Result<(PhasePoint, DMatrix<f64>)> {
    config.validate()?;
    let sys = WongSystem::new(chart, a)?;
    let n = sys.n();
    let m = sys.state_dim();
    check_dim("tangent rows", tangents.nrows(), m)?;
    check_dim("phase point charge", phi0.d(), sys.d())?;
    if t_end < 0.0 {
        return Err(Error::Precondition("flow time must be nonnegative".into()));
    }
    let cols = tangents.ncols();
    let mut y0 = phi0.pack();
    y0.extend_from_slice(tangents.as_slice());
    if t_end == 0.0 {
        return Ok((phi0.clone(), tangents.clone()));
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let base = &y[..m];
        let z = DVector::from_column_slice(&base[..n]);
        let pd = sys.point_data(&z)?;
        sys.rhs_with(&pd, base, &mut dy[..m]);
        if cols < n {
            for c in 0..cols {
                let t = &y[m * (c + 1)..m * (c + 2)];
                jvp_at(&sys, &pd, base, t, &mut dy[m * (c + 1)..m * (c + 2)])?;
            }
        } else {
            let jac = jacobian_at(&sys, base)?;
            let tm = DMatrix::from_column_slice(m, cols, &y[m..]);
            let prod = jac * tm;
            dy[m..].copy_from_slice(prod.as_slice());
        }
        Ok(())
    };
    let sol = ode::integrate(rhs, 0.0, &y0, t_end, &config.ode_options(chart), None, false)?;
    let end = PhasePoint::unpack(&sol.y[..m], n);
    Ok((end, DMatrix::from_column_slice(m, cols, &sol.y[m..])))
}

/// `Φ(t, φ)` together with the full `∂Φ/∂φ(t, φ)`.
pub fn flow_with_jacobian(
    chart: &Chart,
    a: &dyn Connection,
    phi0: &PhasePoint,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<(PhasePoint, JacobianState)> {
    let n = chart.dim();
    let d = a.algebra().dim();
    let (end, j) = flow_with_tangents(chart, a, phi0, t_end, &DMatrix::identity(2 * n + d, 2 * n + d), config)?;
    Ok((end, JacobianState { n, d, j }))
}

/// Weights at one node.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightPair {
    /// `(∂Θ̃/∂v) g⁻¹`, n×n.
    pub w: DMatrix<f64>,
    /// `−∂Θ̃/∂ξ`, n×d.
    pub q: DMatrix<f64>,
}

/// `W` and `Q` at the nodes of a `(g, A)` trajectory, linearizing the `Ã`
/// flow over the remaining time `ℓ − s`.
pub fn weights_along(
    chart: &Chart,
    a_tilde: &dyn Connection,
    traj: &Trajectory,
    node_times: &[f64],
    config: &IntegratorConfig,
) -> Result<Vec<WeightPair>> {
    let n = chart.dim();
    let d = a_tilde.algebra().dim();
    let m = 2 * n + d;
    let ell = traj.t_end;
    if let Some(&s) = node_times.iter().find(|&&s| s < 0.0 || s > ell * (1.0 + 1e-12) + 1e-14) {
        return Err(Error::Index(format!("node {s} outside [0, {ell}]")));
    }
    let mut seeds = DMatrix::zeros(m, n + d);
    for k in 0..n + d {
        seeds[(n + k, k)] = 1.0;
    }
    node_times
        .par_iter()
        .map(|&s| {
            let phi = traj.state_at(s);
            let rem = (ell - s).max(0.0);
            let (_, t) = flow_with_tangents(chart, a_tilde, &phi, rem, &seeds, config)?;
            let g_inv = chart.metric_jet(&phi.z)?.g_inv;
            let dv = t.view((n, 0), (n, n)).into_owned();
            let dxi = t.view((n, n), (n, d)).into_owned();
            Ok(WeightPair { w: dv * g_inv, q: -dxi })
        })
        .collect()
}

/// Composite two-point Gauss–Legendre rule on `[0, t_end]` with `panels`
/// equal panels (`2 · panels` nodes). Returns `(node, weight)` pairs.
pub fn gauss_legendre(t_end: f64, panels: usize) -> Result<Vec<(f64, f64)>> {
    if panels == 0 {
        return Err(Error::Precondition("at least one quadrature panel is needed".into()));
    }
    let h = t_end / panels as f64;
    let off = 0.5 * h / 3f64.sqrt();
    Ok((0..panels)
        .flat_map(|p| {
            let mid = (p as f64 + 0.5) * h;
            [(mid - off, 0.5 * h), (mid + off, 0.5 * h)]
        })
        .collect())
}

/// Both sides of the pseudo-linearization identity at one phase point.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub lhs: DVector<f64>,
    pub rhs: DVector<f64>,
    pub travel_time: f64,
    pub panels: usize,
}

impl IdentityCheck {
    pub fn residual(&self) -> DVector<f64> {
        &self.lhs - &self.rhs
    }

    /// `‖LHS − RHS‖ / (1 + ‖RHS‖)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual().norm() / (1.0 + self.rhs.norm())
    }
}

fn exiting_trajectory(chart: &Chart, a: &dyn Connection, phi: &PhasePoint, config: &IntegratorConfig) -> Result<Trajectory> {
    let traj = integrate(chart, a, phi, config)?;
    if traj.trapped {
        return Err(Error::Unsupported("trajectory is trapped; the identity needs a finite travel time".into()));
    }
    Ok(traj)
}

/// Evaluates both sides of the identity for the pair `(A, Ã)` at `phi`.
pub fn pseudo_linearization(
    chart: &Chart,
    a: &dyn Connection,
    a_tilde: &dyn Connection,
    phi: &PhasePoint,
    panels: usize,
    config: &IntegratorConfig,
) -> Result<IdentityCheck> {
    let traj = exiting_trajectory(chart, a, phi, config)?;
    let tau = traj.t_end;
    let nodes = gauss_legendre(tau, panels)?;
    let sys = WongSystem::new(chart, a)?;
    let sys_t = WongSystem::new(chart, a_tilde)?;
    let m = sys.state_dim();
    let terms: Vec<DVector<f64>> = nodes
        .par_iter()
        .map(|&(s, w)| {
            let p = traj.state_at(s);
            let y = p.pack();
            let mut f = vec![0.0; m];
            let mut ft = vec![0.0; m];
            sys.rhs(&y, &mut f)?;
            sys_t.rhs(&y, &mut ft)?;
            let delta = DMatrix::from_iterator(m, 1, f.iter().zip(&ft).map(|(a, b)| a - b));
            if delta.amax() == 0.0 {
                return Ok(DVector::zeros(m));
            }
            let (_, t) = flow_with_tangents(chart, a_tilde, &p, tau - s, &delta, config)?;
            Ok(DVector::from_column_slice(t.as_slice()) * w)
        })
        .collect::<Result<_>>()?;
    let lhs = terms.into_iter().fold(DVector::zeros(m), |acc, t| acc + t);
    let end_t = crate::dynamics::flow(chart, a_tilde, phi, tau, config)?;
    let rhs = traj.end.to_vector() - end_t.to_vector();
    Ok(IdentityCheck {
        lhs,
        rhs,
        travel_time: tau,
        panels,
    })
}

/// `LHS − RHS` of the identity.
pub fn pseudo_linearization_residual(
    chart: &Chart,
    a: &dyn Connection,
    a_tilde: &dyn Connection,
    phi: &PhasePoint,
    panels: usize,
    config: &IntegratorConfig,
) -> Result<DVector<f64>> {
    Ok(pseudo_linearization(chart, a, a_tilde, phi, panels, config)?.residual())
}

type FieldFn = dyn Fn(&DVector<f64>) -> Result<Tensor3> + Send + Sync;

/// The pair `[f, β]` fed to `I_w`: `f` as `(j, k, α)` components of an
/// antisymmetric 𝔤-valued 2-form, `β` as `(α, β, k)` components of a
/// `d×d`-matrix-valued 1-form.
#[derive(Clone)]
pub struct XRayInput {
    f: Arc<FieldFn>,
    beta: Arc<FieldFn>,
}

impl XRayInput {
    pub fn new(f: Arc<FieldFn>, beta: Arc<FieldFn>) -> Self {
        Self { f, beta }
    }

    pub fn zero(n: usize, d: usize) -> Self {
        Self {
            f: Arc::new(move |_| Ok(Tensor3::zeros(n, n, d))),
            beta: Arc::new(move |_| Ok(Tensor3::zeros(d, d, n))),
        }
    }

    pub fn f_at(&self, z: &DVector<f64>) -> Result<Tensor3> {
        (self.f)(z)
    }

    pub fn beta_at(&self, z: &DVector<f64>) -> Result<Tensor3> {
        (self.beta)(z)
    }
}

/// `f = F − F̃` and `β^α_{βk} = c^α_{βμ} (A − Ã)^μ_k`.
pub fn build_xray_input(a: Arc<dyn Connection>, a_tilde: Arc<dyn Connection>) -> Result<XRayInput> {
    check_dim("base dimension", a_tilde.dim(), a.dim())?;
    check_dim("algebra dimension", a_tilde.algebra().dim(), a.algebra().dim())?;
    let (a1, a2) = (a.clone(), a_tilde.clone());
    let f = Arc::new(move |z: &DVector<f64>| Ok(curvature_at(a1.as_ref(), z)?.sub(&curvature_at(a2.as_ref(), z)?)));
    let beta = Arc::new(move |z: &DVector<f64>| {
        let diff = a.components(z)? - a_tilde.components(z)?;
        let c = a.algebra().structure_constants();
        let (n, d) = diff.shape();
        let mut out = Tensor3::zeros(d, d, n);
        if c.is_abelian() {
            return Ok(out);
        }
        for al in 0..d {
            for be in 0..d {
                for k in 0..n {
                    out.set(al, be, k, (0..d).map(|mu| c.get(al, be, mu) * diff[(k, mu)]).sum());
                }
            }
        }
        Ok(out)
    });
    Ok(XRayInput { f, beta })
}

/// `(f(v)·ξ)_j = f^α_{jk} v^k ξ_α`.
fn contract_f(f: &Tensor3, v: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
    let [n, _, d] = f.shape();
    DVector::from_fn(n, |j, _| {
        (0..n)
            .map(|k| v[k] * (0..d).map(|al| f.get(j, k, al) * xi[al]).sum::<f64>())
            .sum()
    })
}

/// `(β(v)·ξ)_β = β^α_{βk} v^k ξ_α`.
fn contract_beta(beta: &Tensor3, v: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
    let [d, _, n] = beta.shape();
    DVector::from_fn(d, |be, _| {
        (0..d)
            .map(|al| xi[al] * (0..n).map(|k| beta.get(al, be, k) * v[k]).sum::<f64>())
            .sum()
    })
}

/// `I_w[f, β](φ)` along the `(g, A)` trajectory from `phi`, with weights from
/// the linearized `Ã` flow.
pub fn xray_transform(
    chart: &Chart,
    a: &dyn Connection,
    a_tilde_weights: &dyn Connection,
    input: &XRayInput,
    phi: &PhasePoint,
    panels: usize,
    config: &IntegratorConfig,
) -> Result<DVector<f64>> {
    let traj = exiting_trajectory(chart, a, phi, config)?;
    let nodes = gauss_legendre(traj.t_end, panels)?;
    // Weights are only needed where the integrand can be nonzero.
    let mut live = Vec::new();
    for &(s, w) in &nodes {
        let p = traj.state_at(s);
        let fv = contract_f(&input.f_at(&p.z)?, &p.v, &p.xi);
        let bv = contract_beta(&input.beta_at(&p.z)?, &p.v, &p.xi);
        if fv.amax() > 0.0 || bv.amax() > 0.0 {
            live.push((s, w, fv, bv));
        }
    }
    let times: Vec<f64> = live.iter().map(|q| q.0).collect();
    let weights = weights_along(chart, a_tilde_weights, &traj, &times, config)?;
    let mut acc = DVector::zeros(chart.dim());
    for ((_, w, fv, bv), wp) in live.into_iter().zip(weights) {
        acc += (wp.w * fv + wp.q * bv) * w;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests;
