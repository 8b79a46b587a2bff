//! First-order boundary determination: the field strength `F(p)` at a
//! strictly YM-convex boundary point, and `∂ₙA(p)` in the normal gauge, from
//! lens data plus the boundary restriction `ι*A`.
//!
//! For a unit tangent `w` at `p`, a charge `ξ` and the inward normal `N`, the
//! family `v(t) = √(1 − (bt)²) w + bt N` gives rays that exit near `p` after
//! `ℓ(t)`. With `Φ₀` the flow of the zero connection,
//! `R(t) = Φ(ℓ(t), φ(t)) − Φ₀(ℓ(t), φ(t))` is known from lens data, and once
//! `ℓ'(0)` is normalized to one, `R'(0) = (𝕏 − 𝕏₀)(p, w, ξ)`. Its velocity
//! block is `g^{ij} F^α_{jk} w^k ξ_α`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{boundary_tangent_directions, flow, lens_data, IntegratorConfig, LensDatum, PhasePoint};
use crate::error::{check_dim, Error, Result};
use crate::gauge::{connection_partials, lorentz_force_from, Connection, ZeroConnection};
use crate::lie_algebra::LieAlgebra;
use crate::manifold::Chart;
use crate::tensor::Tensor3;

/// Source of lens data. Recovery reads nothing else about the field.
pub trait LensAccess: Sync {
    fn lens_batch(&self, entries: &[PhasePoint]) -> Vec<Result<LensDatum>>;
}

/// Lens data produced on demand by the simulator.
pub struct SimulatedLens<'a> {
    pub chart: &'a Chart,
    pub connection: &'a dyn Connection,
    pub config: IntegratorConfig,
}

impl LensAccess for SimulatedLens<'_> {
    fn lens_batch(&self, entries: &[PhasePoint]) -> Vec<Result<LensDatum>> {
        lens_data(self.chart, self.connection, entries, &self.config)
    }
}

/// Lens data read from stored rows; entries are matched to `tol` in the
/// max norm.
#[derive(Clone, Debug, Default)]
pub struct TableLens {
    pub rows: Vec<LensDatum>,
    pub tol: f64,
}

impl TableLens {
    pub fn new(rows: Vec<LensDatum>) -> Self {
        Self { rows, tol: 1e-12 }
    }

    pub fn lookup(&self, entry: &PhasePoint) -> Result<&LensDatum> {
        let key = entry.pack();
        self.rows
            .iter()
            .find(|r| {
                let k = r.entry.pack();
                k.len() == key.len() && k.iter().zip(&key).all(|(a, b)| (a - b).abs() <= self.tol)
            })
            .ok_or_else(|| Error::Data(format!("no lens row for entry {:?}", key)))
    }
}

impl LensAccess for TableLens {
    fn lens_batch(&self, entries: &[PhasePoint]) -> Vec<Result<LensDatum>> {
        entries.iter().map(|e| self.lookup(e).cloned()).collect()
    }
}

/// `φ(t) = (p, v(t), ξ)` with `v(t) = √(1 − (bt)²) w + bt N`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFamily {
    pub p: DVector<f64>,
    /// Unit tangent at `p`.
    pub w: DVector<f64>,
    /// Inward unit normal at `p`.
    pub normal: DVector<f64>,
    pub b: f64,
    pub t_samples: Vec<f64>,
    /// Charge, lowered coordinates.
    pub xi: DVector<f64>,
}

impl BoundaryFamily {
    /// Builds the family at boundary point `p` along tangent `w`.
    pub fn new(chart: &Chart, p: DVector<f64>, w: DVector<f64>, b: f64, t_samples: Vec<f64>, xi: DVector<f64>) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Precondition("tilt rate b must be positive".into()));
        }
        if t_samples.iter().any(|&t| !(t > 0.0) || b * t >= 1.0) || t_samples.windows(2).any(|s| s[1] <= s[0]) {
            return Err(Error::Precondition("t samples must increase, be positive and keep bt < 1".into()));
        }
        let normal = -chart.outer_unit_normal(&p)?;
        let wn = chart.norm(&p, &w)?;
        if (wn - 1.0).abs() > 1e-10 || chart.inner(&p, &w, &normal)?.abs() > 1e-10 {
            return Err(Error::Precondition("w must be a unit tangent vector".into()));
        }
        Ok(Self {
            p,
            w,
            normal,
            b,
            t_samples,
            xi,
        })
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        let s = self.b * t;
        &self.w * (1.0 - s * s).sqrt() + &self.normal * s
    }

    pub fn entry(&self, t: f64) -> PhasePoint {
        PhasePoint {
            z: self.p.clone(),
            v: self.velocity(t),
            xi: self.xi.clone(),
        }
    }

    pub fn entries(&self) -> Vec<PhasePoint> {
        self.t_samples.iter().map(|&t| self.entry(t)).collect()
    }

    /// Same rays reparametrized so that `ℓ'(0)` becomes one: `b → b/L`,
    /// `t → L t`.
    pub fn rescaled(&self, ell_prime: f64) -> Self {
        Self {
            b: self.b / ell_prime,
            t_samples: self.t_samples.iter().map(|t| t * ell_prime).collect(),
            ..self.clone()
        }
    }
}

/// One sample of `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct RSample {
    pub t: f64,
    pub ell: f64,
    pub r: DVector<f64>,
}

/// `R(t)` on the family's samples: the exit record from `lens` minus the
/// zero-connection flow run for the same time.
pub fn measure_r(
    chart: &Chart,
    algebra: &Arc<LieAlgebra>,
    family: &BoundaryFamily,
    lens: &dyn LensAccess,
    config: &IntegratorConfig,
) -> Result<Vec<RSample>> {
    check_dim("charge", family.xi.len(), algebra.dim())?;
    let zero = ZeroConnection::new(algebra.clone(), chart.dim());
    let entries = family.entries();
    let data = lens.lens_batch(&entries);
    entries
        .iter()
        .zip(data)
        .zip(&family.t_samples)
        .map(|((e, d), &t)| {
            let d = d?;
            if d.trapped {
                return Err(Error::Data(format!("lens row at t = {t} is trapped")));
            }
            let reference = flow(chart, &zero, e, d.travel_time, config)?;
            Ok(RSample {
                t,
                ell: d.travel_time,
                r: d.exit.to_vector() - reference.to_vector(),
            })
        })
        .collect()
}

/// Least-squares `ℓ(t) ≈ L t + c t²`; returns `L`.
pub fn estimate_ell_prime(samples: &[RSample]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::Precondition("at least three samples are needed".into()));
    }
    let a = DMatrix::from_fn(samples.len(), 2, |i, j| samples[i].t.powi(j as i32 + 1));
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.ell));
    let sol = a.svd(true, true).solve(&y, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;
    let slope = sol[0];
    if !(slope > 0.0) {
        return Err(Error::Geometry(format!("fitted ℓ'(0) = {slope} is not positive")));
    }
    Ok(slope)
}

/// One-sided derivative at zero with its cross-check.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeEstimate {
    pub value: DVector<f64>,
    /// `|D(h) − D(h/2)|` in the max norm.
    pub uncertainty: f64,
    /// Uncertainty above 10% of the value.
    pub noisy: bool,
}

fn stencil(f: impl Fn(f64) -> Result<DVector<f64>>, h: f64) -> Result<DVector<f64>> {
    Ok((f(h)? * -2.5 + f(2.0 * h)? * 4.0 - f(3.0 * h)? * 1.5) / h)
}

/// `R'(0)` from the second-order stencil `(−5/2, 4, −3/2)/h` on
/// `{h, 2h, 3h}`, cross-checked on `{h/2, h, 3h/2}`. `samples` must contain
/// those five abscissae.
pub fn differentiate_r_at_zero(samples: &[RSample], h: f64) -> Result<DerivativeEstimate> {
    let at = |t: f64| -> Result<DVector<f64>> {
        samples
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.max(1e-300))
            .map(|s| s.r.clone())
            .ok_or_else(|| Error::Data(format!("no R sample at t = {t}")))
    };
    let coarse = stencil(at, h)?;
    let fine = stencil(at, 0.5 * h)?;
    let uncertainty = (&coarse - &fine).amax();
    let scale = coarse.amax();
    let noisy = uncertainty > 0.1 * scale && uncertainty > 1e-12;
    Ok(DerivativeEstimate {
        value: coarse,
        uncertainty,
        noisy,
    })
}

/// The five sample abscissae used by [`differentiate_r_at_zero`].
pub fn stencil_samples(h: f64) -> Vec<f64> {
    vec![0.5 * h, h, 1.5 * h, 2.0 * h, 3.0 * h]
}

/// Family and solve settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryConfig {
    /// Tilt rate; defaults to `0.5 / L` with `L` the boundary length scale.
    pub b: Option<f64>,
    /// Stencil step; defaults to `0.01 L`.
    pub h: Option<f64>,
    pub integrator: IntegratorConfig,
    pub max_condition: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            b: None,
            h: None,
            integrator: IntegratorConfig::default(),
            max_condition: 1e6,
        }
    }
}

/// Length scale at `p`: the inverse of the largest principal curvature, or
/// the chart diameter on a flat boundary.
pub fn boundary_length_scale(chart: &Chart, p: &DVector<f64>) -> Result<f64> {
    let mut kappa: f64 = 0.0;
    for w in boundary_tangent_directions(chart, p, 4)? {
        kappa = kappa.max(chart.second_fundamental_form(p, &w)?.abs());
    }
    Ok(if kappa > 1e-12 { (1.0 / kappa).min(chart.diameter()) } else { chart.diameter() })
}

/// Diagnostics for one `(ξ, w)` pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyDiagnostics {
    pub charge_index: usize,
    pub w: DVector<f64>,
    /// Fitted `ℓ'(0)` before rescaling.
    pub ell_prime: f64,
    /// `b` after rescaling.
    pub b_rescaled: f64,
    pub uncertainty: f64,
    pub noisy: bool,
    /// Normalized `R'(0)`.
    pub r_prime: DVector<f64>,
}

/// Output of the recovery at one boundary point.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryReport {
    pub p: DVector<f64>,
    /// Columns `T_1 … T_{n−1}, N`: g-orthonormal tangent frame and inward
    /// normal, chart components.
    pub frame: DMatrix<f64>,
    /// `F^α(E_i, E_j)` in the frame above, antisymmetric.
    pub f_frame: Tensor3,
    /// `F^α_{ij}` in chart coordinates.
    pub f_chart: Tensor3,
    /// `∂ₙA'_a(p) = F(N, T_a)` in the normal gauge, `(n−1)×d`.
    pub dn_a: DMatrix<f64>,
    /// `(dA)(T_a, T_b) = F(T_a, T_b) − [A(T_a), A(T_b)]` from `ι*A`.
    pub da_tangential: Tensor3,
    pub condition_number: f64,
    /// Relative least-squares residual of the solve.
    pub fit_residual: f64,
    /// `max |G(T_a,T_b) + G(T_b,T_a)| / max |G|` before antisymmetrization.
    pub antisymmetry_residual: f64,
    /// Largest disagreement between the recovered tangential `dA` and the
    /// exterior derivative of `ι*A`.
    pub boundary_consistency: f64,
    /// Largest disagreement between the charge block of `R'(0)` and its
    /// prediction from `ι*A`.
    pub charge_block_residual: f64,
    pub ell_prime_min: f64,
    /// Minimum of `Λ(v,v) + g(ν, 𝔽v)` over the charges used, with the
    /// recovered field.
    pub convexity_min: f64,
    pub noisy: bool,
    pub families: Vec<FamilyDiagnostics>,
}

/// Tangent directions for the solve: frame vectors plus pairwise diagonals.
fn solve_directions(n: usize) -> Vec<DVector<f64>> {
    let m = n - 1;
    let mut out: Vec<DVector<f64>> = (0..m).map(|a| DVector::from_fn(m, |i, _| if i == a { 1.0 } else { 0.0 })).collect();
    for a in 0..m {
        for b in a + 1..m {
            out.push(DVector::from_fn(m, |i, _| if i == a || i == b { 1.0 / 2f64.sqrt() } else { 0.0 }));
        }
    }
    out
}

/// Recovers `F(p)` and `∂ₙA'(p)` from lens data.
///
/// `boundary_a` supplies `ι*A`: only its tangential components at `p` and
/// their tangential derivatives are read. `charges` are orbit elements in
/// reference coordinates and must span 𝔤.
pub fn recover_f_at_boundary(
    chart: &Chart,
    boundary_a: &dyn Connection,
    charges: &[DVector<f64>],
    p: &DVector<f64>,
    lens: &dyn LensAccess,
    config: &RecoveryConfig,
) -> Result<RecoveryReport> {
    let n = chart.dim();
    let algebra = boundary_a.algebra().clone();
    let d = algebra.dim();
    if n < 2 {
        return Err(Error::Dimension("boundary recovery needs n ≥ 2".into()));
    }
    let tangent = chart.tangent_frame_g(p)?;
    let normal = -chart.outer_unit_normal(p)?;
    let mut frame = DMatrix::zeros(n, n);
    for (a, t) in tangent.iter().enumerate() {
        frame.set_column(a, t);
    }
    frame.set_column(n - 1, &normal);
    let scale = boundary_length_scale(chart, p)?;
    let b = config.b.unwrap_or(0.5 / scale);
    let h = config.h.unwrap_or(0.01 * scale);
    let lowered: Vec<DVector<f64>> = charges.iter().map(|c| algebra.lower(c)).collect();
    let dirs = solve_directions(n);

    // Design matrix rows w^b ξ_α, columns (b, α).
    let pairs: Vec<(usize, &DVector<f64>)> = (0..lowered.len()).flat_map(|k| dirs.iter().map(move |w| (k, w))).collect();
    let cols = (n - 1) * d;
    let design = DMatrix::from_fn(pairs.len(), cols, |r, c| {
        let (k, w) = pairs[r];
        w[c / d] * lowered[k][c % d]
    });
    let condition_number = crate::linalg::condition_number(&design);
    if !(condition_number <= config.max_condition) {
        return Err(Error::DegenerateOrbit(format!("condition number {condition_number:e} exceeds {:e}", config.max_condition)));
    }

    let families: Vec<FamilyDiagnostics> = pairs
        .par_iter()
        .map(|&(k, wf)| {
            let w = &frame.columns(0, n - 1) * wf;
            let fam = BoundaryFamily::new(chart, p.clone(), w.clone(), b, stencil_samples(h), lowered[k].clone())?;
            let samples = measure_r(chart, &algebra, &fam, lens, &config.integrator)?;
            let ell_prime = estimate_ell_prime(&samples)?;
            let rescaled = fam.rescaled(ell_prime);
            let relabeled: Vec<RSample> = samples
                .iter()
                .zip(&rescaled.t_samples)
                .map(|(s, &t)| RSample { t, ..s.clone() })
                .collect();
            let der = differentiate_r_at_zero(&relabeled, h * ell_prime)?;
            Ok(FamilyDiagnostics {
                charge_index: k,
                w,
                ell_prime,
                b_rescaled: rescaled.b,
                uncertainty: der.uncertainty,
                noisy: der.noisy,
                r_prime: der.value,
            })
        })
        .collect::<Result<_>>()?;

    let jet = chart.metric_jet(p)?;
    // Right-hand sides: frame components of the lowered velocity block.
    let mut rhs = DMatrix::zeros(pairs.len(), n);
    for (r, fam) in families.iter().enumerate() {
        let low = &jet.g * fam.r_prime.rows(n, n);
        for i in 0..n {
            rhs[(r, i)] = frame.column(i).dot(&low);
        }
    }
    let svd = design.clone().svd(true, true);
    let g_sol = svd.solve(&rhs, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;
    let fit_residual = (&design * &g_sol - &rhs).norm() / rhs.norm().max(1e-300);
    let fit_residual = if rhs.norm() == 0.0 { 0.0 } else { fit_residual };
    // g_sol[(b·d + α, i)] = F^α(E_i, T_b).
    let gget = |i: usize, bb: usize, al: usize| g_sol[(bb * d + al, i)];
    let mut f_frame = Tensor3::zeros(n, n, d);
    let mut asym: f64 = 0.0;
    let gmax = g_sol.amax();
    for al in 0..d {
        for a in 0..n - 1 {
            for bb in a + 1..n - 1 {
                asym = asym.max((gget(a, bb, al) + gget(bb, a, al)).abs());
                let v = 0.5 * (gget(a, bb, al) - gget(bb, a, al));
                f_frame.set(a, bb, al, v);
                f_frame.set(bb, a, al, -v);
            }
            let v = gget(n - 1, a, al);
            f_frame.set(n - 1, a, al, v);
            f_frame.set(a, n - 1, al, -v);
        }
    }
    let antisymmetry_residual = if gmax > 0.0 { asym / gmax } else { 0.0 };

    // Chart components: F_chart = Pᵀ⁻¹ F_frame P⁻¹ per algebra index.
    let pinv = frame.clone().try_inverse().ok_or_else(|| Error::Numerical("singular boundary frame".into()))?;
    let mut f_chart = Tensor3::zeros(n, n, d);
    for al in 0..d {
        let ff = DMatrix::from_fn(n, n, |i, j| f_frame.get(i, j, al));
        let fc = pinv.transpose() * ff * &pinv;
        for i in 0..n {
            for j in 0..n {
                f_chart.set(i, j, al, fc[(i, j)]);
            }
        }
    }

    let dn_a = DMatrix::from_fn(n - 1, d, |a, al| f_frame.get(n - 1, a, al));

    // Tangential data from ι*A.
    let comps = boundary_a.components(p)?;
    let da = connection_partials(boundary_a, p)?;
    let a_t: Vec<DVector<f64>> = tangent.iter().map(|t| comps.transpose() * t).collect();
    let mut da_tangential = Tensor3::zeros(n - 1, n - 1, d);
    let mut boundary_consistency: f64 = 0.0;
    for a in 0..n - 1 {
        for bb in 0..n - 1 {
            let br = algebra.bracket(&a_t[a], &a_t[bb])?;
            for al in 0..d {
                let rec = f_frame.get(a, bb, al) - br[al];
                da_tangential.set(a, bb, al, rec);
                let mut ext = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        ext += (da.get(i, j, al) - da.get(j, i, al)) * tangent[a][i] * tangent[bb][j];
                    }
                }
                boundary_consistency = boundary_consistency.max((rec - ext).abs());
            }
        }
    }
    let c = algebra.structure_constants();
    let mut charge_block_residual: f64 = 0.0;
    for fam in &families {
        let xi = &lowered[fam.charge_index];
        let aw = comps.transpose() * &fam.w;
        for al in 0..d {
            let mut pred = 0.0;
            for be in 0..d {
                for mu in 0..d {
                    pred -= xi[be] * c.get(be, al, mu) * aw[mu];
                }
            }
            charge_block_residual = charge_block_residual.max((fam.r_prime[2 * n + al] - pred).abs());
        }
    }

    // Convexity of the boundary with the recovered field.
    let nu = -&normal;
    let g_nu = &jet.g * &nu;
    let mut convexity_min = f64::INFINITY;
    for v in boundary_tangent_directions(chart, p, 8)? {
        let lam = chart.second_fundamental_form(p, &v)?;
        for xi in &lowered {
            let force = lorentz_force_from(&jet.g_inv, &f_chart, v.as_slice(), xi.as_slice());
            convexity_min = convexity_min.min(lam + g_nu.dot(&force));
        }
    }
    if !(convexity_min > 0.0) {
        return Err(Error::Precondition(format!(
            "boundary is not strictly YM-convex at p with the recovered field (minimum {convexity_min:e})"
        )));
    }

    let ell_prime_min = families.iter().map(|f| f.ell_prime).fold(f64::INFINITY, f64::min);
    let noisy = families.iter().any(|f| f.noisy);
    Ok(RecoveryReport {
        p: p.clone(),
        frame,
        f_frame,
        f_chart,
        dn_a,
        da_tangential,
        condition_number,
        fit_residual,
        antisymmetry_residual,
        boundary_consistency,
        charge_block_residual,
        ell_prime_min,
        convexity_min,
        noisy,
        families,
    })
}

/// Recovery at each point of a boundary grid; failures are kept per point.
pub fn recover_boundary_patch(
    chart: &Chart,
    boundary_a: &dyn Connection,
    charges: &[DVector<f64>],
    points: &[DVector<f64>],
    lens: &dyn LensAccess,
    config: &RecoveryConfig,
) -> Vec<Result<RecoveryReport>> {
    points
        .iter()
        .map(|p| recover_f_at_boundary(chart, boundary_a, charges, p, lens, config))
        .collect()
}

/// Every lens entry the recovery at `p` will request, for building tables.
pub fn recovery_entries(chart: &Chart, algebra: &LieAlgebra, charges: &[DVector<f64>], p: &DVector<f64>, config: &RecoveryConfig) -> Result<Vec<PhasePoint>> {
    let n = chart.dim();
    let tangent = chart.tangent_frame_g(p)?;
    let scale = boundary_length_scale(chart, p)?;
    let b = config.b.unwrap_or(0.5 / scale);
    let h = config.h.unwrap_or(0.01 * scale);
    let mut out = Vec::new();
    for c in charges {
        let xi = algebra.lower(c);
        for wf in solve_directions(n) {
            let w = tangent.iter().zip(wf.iter()).fold(DVector::zeros(n), |acc, (t, s)| acc + t * *s);
            out.extend(BoundaryFamily::new(chart, p.clone(), w, b, stencil_samples(h), xi.clone())?.entries());
        }
    }
    Ok(out)
}

/// `(𝕏 − 𝕏₀)(p, w, ξ)`: the exact limit `R'(0)` approximates.
pub fn analytic_limit(chart: &Chart, a: &dyn Connection, phi: &PhasePoint) -> Result<DVector<f64>> {
    let zero = ZeroConnection::new(a.algebra().clone(), chart.dim());
    Ok(crate::dynamics::wong_rhs(chart, a, phi)? - crate::dynamics::wong_rhs(chart, &zero, phi)?)
}

#[cfg(test)]
mod tests;
