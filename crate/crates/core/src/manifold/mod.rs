//! Single-chart Riemannian geometry: metric families, boundary defining
//! functions, Christoffel symbols, normals, second fundamental form and
//! covariant Hessians.

mod normal_coords;

pub use normal_coords::BoundaryNormalCoordinates;
pub(crate) use normal_coords::geodesic_rhs;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::fd_step;
use crate::tensor::Tensor3;

/// A smooth real function on the chart.
pub trait ScalarField: Send + Sync {
    fn value(&self, z: &DVector<f64>) -> f64;

    fn gradient(&self, _z: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    fn hessian(&self, _z: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

/// `c0 + a·z + ½ zᵀBz` with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    pub c0: f64,
    pub a: DVector<f64>,
    pub b: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(c0: f64, a: DVector<f64>, b: DMatrix<f64>) -> Self {
        let b = (&b + b.transpose()) * 0.5;
        Self { c0, a, b }
    }

    pub fn linear(c0: f64, a: DVector<f64>) -> Self {
        let n = a.len();
        Self::new(c0, a, DMatrix::zeros(n, n))
    }

    /// `|z|²/2`.
    pub fn half_norm_squared(n: usize) -> Self {
        Self::new(0.0, DVector::zeros(n), DMatrix::identity(n, n))
    }
}

impl ScalarField for Quadratic {
    fn value(&self, z: &DVector<f64>) -> f64 {
        self.c0 + self.a.dot(z) + 0.5 * z.dot(&(&self.b * z))
    }

    fn gradient(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.a + &self.b * z)
    }

    fn hessian(&self, _z: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.b.clone())
    }
}

/// Wraps a closure; all derivatives come from finite differences.
pub struct FnScalar<F>(pub F);

impl<F> ScalarField for FnScalar<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    fn value(&self, z: &DVector<f64>) -> f64 {
        (self.0)(z)
    }
}

/// Metric families.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    Euclidean { dim: usize },
    /// `g = e^{2φ} I`.
    Conformal { phi: Quadratic },
    /// `g = (1 + q|z|²) I + Σ_k z_k S_k` with symmetric `S_k`.
    Perturbed {
        dim: usize,
        radial: f64,
        linear: Vec<DMatrix<f64>>,
    },
}

impl Metric {
    pub fn dim(&self) -> usize {
        match self {
            Metric::Euclidean { dim } | Metric::Perturbed { dim, .. } => *dim,
            Metric::Conformal { phi } => phi.a.len(),
        }
    }

    pub fn is_flat_identity(&self) -> bool {
        matches!(self, Metric::Euclidean { .. })
    }

    pub fn metric(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        match self {
            Metric::Euclidean { .. } => DMatrix::identity(n, n),
            Metric::Conformal { phi } => DMatrix::identity(n, n) * (2.0 * phi.value(z)).exp(),
            Metric::Perturbed { radial, linear, .. } => {
                let mut g = DMatrix::identity(n, n) * (1.0 + radial * z.norm_squared());
                for (k, s) in linear.iter().enumerate() {
                    g += s * z[k];
                }
                g
            }
        }
    }

    /// `∂_k g_ij` stored at `(k, i, j)`.
    pub fn metric_partials(&self, z: &DVector<f64>) -> Tensor3 {
        let n = self.dim();
        let mut out = Tensor3::zeros(n, n, n);
        match self {
            Metric::Euclidean { .. } => {}
            Metric::Conformal { phi } => {
                let e = (2.0 * phi.value(z)).exp();
                let grad = phi.gradient(z).expect("quadratic gradient");
                for k in 0..n {
                    for i in 0..n {
                        out.set(k, i, i, 2.0 * grad[k] * e);
                    }
                }
            }
            Metric::Perturbed { radial, linear, .. } => {
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = linear.get(k).map_or(0.0, |s| s[(i, j)]);
                            if i == j {
                                v += 2.0 * radial * z[k];
                            }
                            out.set(k, i, j, v);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Boundary defining functions `ρ`, with `M = {ρ ≤ 0}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// `ρ = |z − c|² − R²`.
    Ball { center: DVector<f64>, radius: f64 },
    /// `ρ = −zⁿ`.
    HalfSpace { dim: usize },
    /// `ρ = Σ ((z − c)_i / a_i)² − 1`.
    Ellipsoid { center: DVector<f64>, semi_axes: DVector<f64> },
}

impl Boundary {
    pub fn unit_ball(n: usize) -> Self {
        Boundary::Ball {
            center: DVector::zeros(n),
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Boundary::Ball { center, .. } | Boundary::Ellipsoid { center, .. } => center.len(),
            Boundary::HalfSpace { dim } => *dim,
        }
    }

    /// Points of `{ρ = 0}`: circle or Fibonacci sphere samples for balls and
    /// ellipsoids in dimension 2 and 3, seeded Gaussian directions otherwise.
    /// For the half-space, a square grid of side `2·extent` around the origin.
    pub fn grid(&self, count: usize, extent: f64, seed: u64) -> Vec<DVector<f64>> {
        let n = self.dim();
        let directions = || -> Vec<DVector<f64>> {
            match n {
                2 => (0..count)
                    .map(|k| {
                        let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
                        DVector::from_vec(vec![a.cos(), a.sin()])
                    })
                    .collect(),
                3 => {
                    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                    (0..count)
                        .map(|k| {
                            let y = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                            let r = (1.0 - y * y).sqrt();
                            let th = golden * k as f64;
                            DVector::from_vec(vec![r * th.cos(), y, r * th.sin()])
                        })
                        .collect()
                }
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..count)
                        .map(|_| {
                            let d = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                            d.normalize()
                        })
                        .collect()
                }
            }
        };
        match self {
            Boundary::Ball { center, radius } => {
                directions().into_iter().map(|d| center + d * *radius).collect()
            }
            Boundary::Ellipsoid { center, semi_axes } => directions()
                .into_iter()
                .map(|d| center + d.component_mul(semi_axes))
                .collect(),
            Boundary::HalfSpace { .. } => {
                let side = ((count as f64).powf(1.0 / (n - 1).max(1) as f64).round() as usize).max(1);
                let mut out = Vec::new();
                let total = side.pow((n - 1) as u32);
                for idx in 0..total {
                    let mut z = DVector::zeros(n);
                    let mut rem = idx;
                    for a in 0..n - 1 {
                        let k = rem % side;
                        rem /= side;
                        z[a] = if side == 1 {
                            0.0
                        } else {
                            -extent + 2.0 * extent * k as f64 / (side - 1) as f64
                        };
                    }
                    out.push(z);
                }
                out
            }
        }
    }
}

impl ScalarField for Boundary {
    fn value(&self, z: &DVector<f64>) -> f64 {
        match self {
            Boundary::Ball { center, radius } => (z - center).norm_squared() - radius * radius,
            Boundary::HalfSpace { dim } => -z[dim - 1],
            Boundary::Ellipsoid { center, semi_axes } => {
                (z - center).component_div(semi_axes).norm_squared() - 1.0
            }
        }
    }

    fn gradient(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        Some(match self {
            Boundary::Ball { center, .. } => (z - center) * 2.0,
            Boundary::HalfSpace { dim } => {
                let mut g = DVector::zeros(*dim);
                g[dim - 1] = -1.0;
                g
            }
            Boundary::Ellipsoid { center, semi_axes } => {
                let a2 = semi_axes.component_mul(semi_axes);
                (z - center).component_div(&a2) * 2.0
            }
        })
    }

    fn hessian(&self, _z: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = self.dim();
        Some(match self {
            Boundary::Ball { .. } => DMatrix::identity(n, n) * 2.0,
            Boundary::HalfSpace { .. } => DMatrix::zeros(n, n),
            Boundary::Ellipsoid { semi_axes, .. } => {
                DMatrix::from_diagonal(&semi_axes.map(|a| 2.0 / (a * a)))
            }
        })
    }
}

/// Metric, Christoffel symbols and inverse metric at one point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `Γ^i_{jk}` at `(i, j, k)`.
    pub christoffel: Tensor3,
}

impl MetricJet {
    /// `Γ^i_{jk} v^j w^k`.
    pub fn christoffel_contract(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                let row = self.christoffel.fiber(i, j);
                for k in 0..n {
                    acc += row[k] * v[j] * w[k];
                }
            }
            *o = acc;
        }
        out
    }
}

/// A global coordinate patch with metric, boundary and the enclosing box of
/// the extended manifold.
#[derive(Clone, Debug)]
pub struct Chart {
    pub metric: Metric,
    pub boundary: Boundary,
    pub box_lo: DVector<f64>,
    pub box_hi: DVector<f64>,
    /// Base finite-difference step, scaled by `1 + |z|`.
    pub fd_step: f64,
    /// Ignore analytic metric partials and use finite differences.
    pub fd_only: bool,
    /// Tolerance on `|ρ|` for a point to count as lying on the boundary.
    pub boundary_tol: f64,
}

impl Chart {
    pub fn new(metric: Metric, boundary: Boundary, box_lo: DVector<f64>, box_hi: DVector<f64>) -> Result<Self> {
        let n = metric.dim();
        check_dim("boundary", boundary.dim(), n)?;
        check_dim("box lower corner", box_lo.len(), n)?;
        check_dim("box upper corner", box_hi.len(), n)?;
        if n < 2 {
            return Err(Error::Precondition("chart dimension must be at least 2".into()));
        }
        if box_lo.iter().zip(box_hi.iter()).any(|(a, b)| !(a < b)) {
            return Err(Error::Precondition("empty domain box".into()));
        }
        Ok(Self {
            metric,
            boundary,
            box_lo,
            box_hi,
            fd_step: 1e-4,
            fd_only: false,
            boundary_tol: 1e-10,
        })
    }

    /// Euclidean ball of radius `r` centred at the origin in a box of
    /// half-width `1.5 r`.
    pub fn euclidean_ball(n: usize, r: f64) -> Self {
        Self::new(
            Metric::Euclidean { dim: n },
            Boundary::Ball {
                center: DVector::zeros(n),
                radius: r,
            },
            DVector::from_element(n, -1.5 * r),
            DVector::from_element(n, 1.5 * r),
        )
        .expect("valid ball chart")
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        (&self.box_hi - &self.box_lo).norm()
    }

    pub fn in_box(&self, z: &DVector<f64>) -> bool {
        z.iter()
            .zip(self.box_lo.iter().zip(self.box_hi.iter()))
            .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    pub fn check_domain(&self, z: &DVector<f64>) -> Result<()> {
        check_dim("point", z.len(), self.dim())?;
        if z.iter().any(|x| !x.is_finite()) || !self.in_box(z) {
            return Err(Error::Domain(format!("{:?} lies outside the domain box", z.as_slice())));
        }
        Ok(())
    }

    pub fn rho(&self, z: &DVector<f64>) -> f64 {
        self.boundary.value(z)
    }

    pub fn rho_gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        self.boundary.gradient(z).expect("boundary gradient is analytic")
    }

    pub fn metric_at(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_domain(z)?;
        Ok(self.metric.metric(z))
    }

    fn metric_partials_at(&self, z: &DVector<f64>) -> Result<Tensor3> {
        if !self.fd_only {
            return Ok(self.metric.metric_partials(z));
        }
        let n = self.dim();
        let h = fd_step(self.fd_step, z);
        let mut out = Tensor3::zeros(n, n, n);
        for k in 0..n {
            let d = crate::linalg::central_diff4(
                |s| {
                    let mut zs = z.clone();
                    zs[k] += s;
                    Ok(self.metric.metric(&zs).as_slice().to_vec())
                },
                h,
            )?;
            for i in 0..n {
                for j in 0..n {
                    out.set(k, i, j, d[i + n * j]);
                }
            }
        }
        Ok(out)
    }

    /// Metric, inverse metric and Christoffel symbols at `z`.
    pub fn metric_jet(&self, z: &DVector<f64>) -> Result<MetricJet> {
        self.check_domain(z)?;
        let n = self.dim();
        if self.metric.is_flat_identity() && !self.fd_only {
            return Ok(MetricJet {
                g: DMatrix::identity(n, n),
                g_inv: DMatrix::identity(n, n),
                christoffel: Tensor3::zeros(n, n, n),
            });
        }
        let g = self.metric.metric(z);
        let g_inv = positive_inverse(&g)?;
        let dg = self.metric_partials_at(z)?;
        let mut lowered = Tensor3::zeros(n, n, n);
        for l in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = 0.5 * (dg.get(j, l, k) + dg.get(k, l, j) - dg.get(l, j, k));
                    lowered.set(l, j, k, v);
                    lowered.set(l, k, j, v);
                }
            }
        }
        let mut christoffel = Tensor3::zeros(n, n, n);
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += g_inv[(i, l)] * lowered.get(l, j, k);
                    }
                    christoffel.set(i, j, k, acc);
                    christoffel.set(i, k, j, acc);
                }
            }
        }
        Ok(MetricJet { g, g_inv, christoffel })
    }

    pub fn inner(&self, z: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        let g = self.metric_at(z)?;
        check_dim("vector", v.len(), self.dim())?;
        check_dim("vector", w.len(), self.dim())?;
        Ok(v.dot(&(g * w)))
    }

    pub fn norm(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(z, v, v)?.max(0.0).sqrt())
    }

    /// `v / |v|_g`.
    pub fn unit_normalize(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let len = self.norm(z, v)?;
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::DegenerateVector("cannot normalize a zero vector".into()));
        }
        Ok(v / len)
    }

    fn require_on_boundary(&self, z: &DVector<f64>) -> Result<()> {
        let r = self.rho(z);
        if r.abs() >= self.boundary_tol {
            return Err(Error::Precondition(format!("point is off the boundary (ρ = {r:e})")));
        }
        Ok(())
    }

    /// Metric gradient of ρ normalized to unit length; defined for any `z`.
    pub fn normal_field(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let jet = self.metric_jet(z)?;
        let drho = self.rho_gradient(z);
        let up = &jet.g_inv * &drho;
        let len = up.dot(&drho).max(0.0).sqrt();
        if !(len > 1e-12) {
            return Err(Error::DegenerateBoundary("∇ρ vanishes".into()));
        }
        Ok(up / len)
    }

    /// Outer unit normal ν at a boundary point.
    pub fn outer_unit_normal(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_on_boundary(z)?;
        self.normal_field(z)
    }

    /// Euclidean-orthonormal basis of the tangent space of `{ρ = ρ(z)}` at `z`,
    /// obtained by Gram–Schmidt of the coordinate axes against `∇ρ`.
    pub fn tangent_frame(&self, z: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let n = self.dim();
        let drho = self.rho_gradient(z);
        let len = drho.norm();
        if !(len > 1e-12) {
            return Err(Error::DegenerateBoundary("∇ρ vanishes".into()));
        }
        let mut basis = vec![drho / len];
        for a in 0..n {
            let mut e = DVector::zeros(n);
            e[a] = 1.0;
            for q in &basis {
                let c = e.dot(q);
                e -= q * c;
            }
            let en = e.norm();
            if en > 1e-8 && basis.len() < n {
                basis.push(e / en);
            }
        }
        Ok(basis.split_off(1))
    }

    /// Orthonormal (in g) basis of `T_z ∂M`.
    pub fn tangent_frame_g(&self, z: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let g = self.metric_at(z)?;
        let mut out: Vec<DVector<f64>> = Vec::new();
        for mut e in self.tangent_frame(z)? {
            for q in &out {
                let c = e.dot(&(&g * q));
                e -= q * c;
            }
            let len = e.dot(&(&g * &e)).sqrt();
            out.push(e / len);
        }
        Ok(out)
    }

    /// Λ(w, w) = Hess ρ(w, w) / |∇ρ|_g, positive on the unit sphere.
    pub fn second_fundamental_form(&self, z: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        self.require_on_boundary(z)?;
        let nu = self.outer_unit_normal(z)?;
        let wn = self.norm(z, w)?;
        if (wn - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("direction is not unit (|w|_g = {wn})")));
        }
        let tang = self.inner(z, w, &nu)?;
        if tang.abs() > 1e-8 {
            return Err(Error::Precondition(format!("direction is not tangent (⟨w,ν⟩ = {tang:e})")));
        }
        let jet = self.metric_jet(z)?;
        let drho = self.rho_gradient(z);
        let grad_len = (&jet.g_inv * &drho).dot(&drho).sqrt();
        Ok(self.hessian_scalar_with(&jet, &self.boundary, z, w)? / grad_len)
    }

    /// Covariant Hessian `Hess(f)(v, v)`.
    pub fn hessian_scalar(&self, f: &dyn ScalarField, z: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let jet = self.metric_jet(z)?;
        self.hessian_scalar_with(&jet, f, z, v)
    }

    pub(crate) fn hessian_scalar_with(
        &self,
        jet: &MetricJet,
        f: &dyn ScalarField,
        z: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<f64> {
        check_dim("vector", v.len(), self.dim())?;
        let grad = self.scalar_gradient(f, z)?;
        let hess = self.scalar_hessian(f, z)?;
        let gam = jet.christoffel_contract(v.as_slice(), v.as_slice());
        let second = v.dot(&(&hess * v));
        let correction: f64 = gam.iter().zip(grad.iter()).map(|(a, b)| a * b).sum();
        Ok(second - correction)
    }

    /// Coordinate gradient `∂_i f`, analytic when available.
    pub fn scalar_gradient(&self, f: &dyn ScalarField, z: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(g) = f.gradient(z) {
            return Ok(g);
        }
        let n = self.dim();
        let h = fd_step(self.fd_step, z);
        let mut out = DVector::zeros(n);
        for k in 0..n {
            let d = crate::linalg::central_diff4(
                |s| {
                    let mut zs = z.clone();
                    zs[k] += s;
                    Ok(vec![f.value(&zs)])
                },
                h,
            )?;
            out[k] = d[0];
        }
        Ok(out)
    }

    /// Coordinate Hessian `∂_i∂_j f`, analytic when available.
    pub fn scalar_hessian(&self, f: &dyn ScalarField, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let Some(h) = f.hessian(z) {
            return Ok(h);
        }
        let n = self.dim();
        let h = fd_step(10.0 * self.fd_step, z);
        let mut out = DMatrix::zeros(n, n);
        for k in 0..n {
            let d = crate::linalg::central_diff4(
                |s| {
                    let mut zs = z.clone();
                    zs[k] += s;
                    Ok(self.scalar_gradient(f, &zs)?.as_slice().to_vec())
                },
                h,
            )?;
            for i in 0..n {
                out[(i, k)] = d[i];
            }
        }
        Ok((&out + out.transpose()) * 0.5)
    }

    /// `g^{ij} ∂_j f`.
    pub fn metric_gradient(&self, f: &dyn ScalarField, z: &DVector<f64>) -> Result<DVector<f64>> {
        let jet = self.metric_jet(z)?;
        Ok(&jet.g_inv * self.scalar_gradient(f, z)?)
    }

    /// Samples the box and checks positive definiteness of g there and
    /// non-vanishing of ∇ρ near the boundary.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<()> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let z = DVector::from_fn(n, |i, _| {
                let u: f64 = rand::Rng::gen(&mut rng);
                self.box_lo[i] + u * (self.box_hi[i] - self.box_lo[i])
            });
            let g = self.metric.metric(&z);
            if (&g - g.transpose()).amax() > 1e-12 {
                return Err(Error::Geometry("metric is not symmetric".into()));
            }
            let eig = g.symmetric_eigenvalues().min();
            if !(eig > 0.0) {
                return Err(Error::Geometry(format!("metric not positive definite at {:?}", z.as_slice())));
            }
        }
        for p in self.boundary.grid(samples.max(8), 0.5 * (&self.box_hi - &self.box_lo).amin() * 0.5, seed) {
            if self.rho_gradient(&p).norm() < 1e-10 {
                return Err(Error::DegenerateBoundary(format!("∇ρ = 0 at {:?}", p.as_slice())));
            }
        }
        Ok(())
    }
}

fn positive_inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match g.clone().cholesky() {
        Some(c) => Ok(c.inverse()),
        None => Err(Error::Geometry("metric is not positive definite".into())),
    }
}

#[cfg(test)]
mod tests;
