use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{check_gauge_value, Connection, GaugeMap};
use crate::error::{check_dim, Error, Result};
use crate::lie_algebra::LieAlgebra;
use crate::linalg::inverse;
use crate::manifold::ScalarField;
use crate::tensor::Tensor3;

/// `A = 0`.
#[derive(Clone, Debug)]
pub struct ZeroConnection {
    algebra: Arc<LieAlgebra>,
    n: usize,
}

impl ZeroConnection {
    pub fn new(algebra: Arc<LieAlgebra>, n: usize) -> Self {
        Self { algebra, n }
    }
}

impl Connection for ZeroConnection {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn components(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("point", z.len(), self.n)?;
        Ok(DMatrix::zeros(self.n, self.algebra.dim()))
    }

    fn analytic_partials(&self, _z: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(self.n, self.n, self.algebra.dim())))
    }
}

/// `A(z) = C + Σ_k z_k L_k + Σ z_k z_l Q_{kl}` with `n × d` coefficient matrices.
#[derive(Clone, Debug)]
pub struct PolynomialConnection {
    algebra: Arc<LieAlgebra>,
    n: usize,
    constant: DMatrix<f64>,
    linear: Vec<DMatrix<f64>>,
    quadratic: Vec<(usize, usize, DMatrix<f64>)>,
}

impl PolynomialConnection {
    pub fn new(
        algebra: Arc<LieAlgebra>,
        constant: DMatrix<f64>,
        linear: Vec<DMatrix<f64>>,
        quadratic: Vec<(usize, usize, DMatrix<f64>)>,
    ) -> Result<Self> {
        let n = constant.nrows();
        let d = algebra.dim();
        check_dim("connection coefficient columns", constant.ncols(), d)?;
        if linear.len() > n {
            return Err(Error::Dimension("more linear terms than coordinates".into()));
        }
        for m in linear.iter().chain(quadratic.iter().map(|q| &q.2)) {
            if m.nrows() != n || m.ncols() != d {
                return Err(Error::Dimension(format!("coefficient matrices must be {n}×{d}")));
            }
        }
        if quadratic.iter().any(|q| q.0 >= n || q.1 >= n) {
            return Err(Error::Dimension("quadratic term index out of range".into()));
        }
        Ok(Self {
            algebra,
            n,
            constant,
            linear,
            quadratic,
        })
    }

    pub fn constant(algebra: Arc<LieAlgebra>, constant: DMatrix<f64>) -> Result<Self> {
        Self::new(algebra, constant, vec![], vec![])
    }

    /// Symmetric-gauge potential `A = ½ (B × z) · e` of a uniform magnetic
    /// field `B` along the generator with reference coordinates `e`.
    pub fn uniform_field(algebra: Arc<LieAlgebra>, b: [f64; 3], e: &DVector<f64>) -> Result<Self> {
        let d = algebra.dim();
        check_dim("generator", e.len(), d)?;
        let eps = |i: usize, j: usize, k: usize| -> f64 {
            match (i, j, k) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        let mut linear = Vec::new();
        for k in 0..3 {
            let mut m = DMatrix::zeros(3, d);
            for i in 0..3 {
                let coeff: f64 = (0..3).map(|j| 0.5 * eps(i, j, k) * b[j]).sum();
                for alpha in 0..d {
                    m[(i, alpha)] = coeff * e[alpha];
                }
            }
            linear.push(m);
        }
        Self::new(algebra, DMatrix::zeros(3, d), linear, vec![])
    }
}

impl Connection for PolynomialConnection {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn components(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("point", z.len(), self.n)?;
        let mut a = self.constant.clone();
        for (k, l) in self.linear.iter().enumerate() {
            if z[k] != 0.0 {
                a += l * z[k];
            }
        }
        for (k, l, q) in &self.quadratic {
            a += q * (z[*k] * z[*l]);
        }
        Ok(a)
    }

    fn analytic_partials(&self, z: &DVector<f64>) -> Option<Result<Tensor3>> {
        if z.len() != self.n {
            return Some(Err(Error::Dimension("point has wrong dimension".into())));
        }
        let d = self.algebra.dim();
        let mut out = Tensor3::zeros(self.n, self.n, d);
        for (j, l) in self.linear.iter().enumerate() {
            for i in 0..self.n {
                for alpha in 0..d {
                    out[(j, i, alpha)] += l[(i, alpha)];
                }
            }
        }
        for (k, l, q) in &self.quadratic {
            for i in 0..self.n {
                for alpha in 0..d {
                    out[(*k, i, alpha)] += q[(i, alpha)] * z[*l];
                    out[(*l, i, alpha)] += q[(i, alpha)] * z[*k];
                }
            }
        }
        Some(Ok(out))
    }
}

/// Smooth compactly supported profile `χ = a·exp(1 − 1/(1 − s))`,
/// `s = |z − c|² / r²`, vanishing for `s ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: DVector<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: DVector<f64>, radius: f64, amplitude: f64) -> Self {
        Self {
            center,
            radius,
            amplitude,
        }
    }

    /// `(χ, χ′(s), χ″(s))` as functions of `s`.
    fn profile(&self, s: f64) -> (f64, f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let w = 1.0 - s;
        let chi = self.amplitude * (1.0 - 1.0 / w).exp();
        let q1 = -1.0 / (w * w);
        let q2 = -2.0 / (w * w * w);
        (chi, chi * q1, chi * (q1 * q1 + q2))
    }

    fn s(&self, z: &DVector<f64>) -> f64 {
        (z - &self.center).norm_squared() / (self.radius * self.radius)
    }
}

impl ScalarField for Bump {
    fn value(&self, z: &DVector<f64>) -> f64 {
        self.profile(self.s(z)).0
    }

    fn gradient(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        let (_, d1, _) = self.profile(self.s(z));
        let r2 = self.radius * self.radius;
        Some((z - &self.center) * (2.0 * d1 / r2))
    }

    fn hessian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (_, d1, d2) = self.profile(self.s(z));
        let r2 = self.radius * self.radius;
        let ds = (z - &self.center) * (2.0 / r2);
        let n = z.len();
        Some(&ds * ds.transpose() * d2 + DMatrix::identity(n, n) * (2.0 * d1 / r2))
    }
}

/// `A = χ(z) B(z)` for a scalar profile χ.
#[derive(Clone)]
pub struct ModulatedConnection {
    profile: Arc<dyn ScalarField>,
    inner: Arc<dyn Connection>,
}

impl ModulatedConnection {
    pub fn new(profile: Arc<dyn ScalarField>, inner: Arc<dyn Connection>) -> Self {
        Self { profile, inner }
    }
}

impl Connection for ModulatedConnection {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        self.inner.algebra()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn components(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let chi = self.profile.value(z);
        if chi == 0.0 {
            check_dim("point", z.len(), self.dim())?;
            return Ok(DMatrix::zeros(self.dim(), self.algebra().dim()));
        }
        Ok(self.inner.components(z)? * chi)
    }

    fn analytic_partials(&self, z: &DVector<f64>) -> Option<Result<Tensor3>> {
        let grad = self.profile.gradient(z)?;
        let inner_partials = self.inner.analytic_partials(z)?;
        Some((|| {
            let chi = self.profile.value(z);
            let n = self.dim();
            let d = self.algebra().dim();
            if chi == 0.0 && grad.iter().all(|g| *g == 0.0) {
                return Ok(Tensor3::zeros(n, n, d));
            }
            let b = self.inner.components(z)?;
            let mut out = inner_partials?.scaled(chi);
            for j in 0..n {
                for i in 0..n {
                    for alpha in 0..d {
                        out[(j, i, alpha)] += grad[j] * b[(i, alpha)];
                    }
                }
            }
            Ok(out)
        })())
    }
}

/// Pointwise sum of connections.
#[derive(Clone)]
pub struct SumConnection {
    parts: Vec<Arc<dyn Connection>>,
}

impl SumConnection {
    pub fn new(parts: Vec<Arc<dyn Connection>>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Precondition("empty connection sum".into()))?;
        for p in &parts {
            if p.dim() != first.dim() || p.algebra().dim() != first.algebra().dim() {
                return Err(Error::Dimension("summands disagree in shape".into()));
            }
        }
        Ok(Self { parts })
    }
}

impl Connection for SumConnection {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        self.parts[0].algebra()
    }

    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn components(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut acc = self.parts[0].components(z)?;
        for p in &self.parts[1..] {
            acc += p.components(z)?;
        }
        Ok(acc)
    }

    fn analytic_partials(&self, z: &DVector<f64>) -> Option<Result<Tensor3>> {
        let mut acc: Option<Tensor3> = None;
        for p in &self.parts {
            let t = match p.analytic_partials(z)? {
                Ok(t) => t,
                Err(e) => return Some(Err(e)),
            };
            acc = Some(match acc {
                None => t,
                Some(a) => a.add(&t),
            });
        }
        acc.map(Ok)
    }
}

/// The gauge transform `u⁻¹du + u⁻¹Au` of a connection.
#[derive(Clone)]
pub struct GaugeTransformed {
    base: Arc<dyn Connection>,
    gauge: Arc<dyn GaugeMap>,
}

impl GaugeTransformed {
    pub fn new(base: Arc<dyn Connection>, gauge: Arc<dyn GaugeMap>) -> Result<Self> {
        if base.dim() != gauge.dim() || base.algebra().dim() != gauge.algebra().dim() {
            return Err(Error::Dimension("connection and gauge disagree in shape".into()));
        }
        Ok(Self { base, gauge })
    }

    pub fn base(&self) -> &Arc<dyn Connection> {
        &self.base
    }

    pub fn gauge(&self) -> &Arc<dyn GaugeMap> {
        &self.gauge
    }
}

impl Connection for GaugeTransformed {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        self.base.algebra()
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn components(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let u = check_gauge_value(self.gauge.as_ref(), z)?;
        let ad = self.algebra().ad_matrix(&inverse(&u)?)?;
        let a = self.base.components(z)?;
        let l = self.gauge.log_derivative(z)?;
        Ok(l + a * ad.transpose())
    }

    fn analytic_partials(&self, z: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(self.analytic_jet(z)?.map(|j| j.1))
    }

    fn components_and_partials(&self, z: &DVector<f64>) -> Result<(DMatrix<f64>, Tensor3)> {
        match self.analytic_jet(z) {
            Some(jet) => jet,
            None => Ok((self.components(z)?, crate::gauge::fd_connection_partials(self, z)?)),
        }
    }
}

impl GaugeTransformed {
    /// `(Ã, ∂Ã)` sharing `u`, `u⁻¹` and `Ad` between the two.
    fn analytic_jet(&self, z: &DVector<f64>) -> Option<Result<(DMatrix<f64>, Tensor3)>> {
        let dl = self.gauge.log_derivative_partials(z)?;
        let base_partials = self.base.analytic_partials(z)?;
        Some((|| {
            let algebra = self.algebra();
            let n = self.dim();
            let d = algebra.dim();
            let u = check_gauge_value(self.gauge.as_ref(), z)?;
            let ad = algebra.ad_matrix(&inverse(&u)?)?;
            let a = self.base.components(z)? * ad.transpose();
            let l = self.gauge.log_derivative(z)?;
            let da = base_partials?;
            let c = algebra.structure_constants();
            let mut out = dl?;
            for j in 0..n {
                for i in 0..n {
                    let raw = DVector::from_fn(d, |alpha, _| da.get(j, i, alpha));
                    let rotated = &ad * raw;
                    let xi: Vec<f64> = (0..d).map(|b| a[(i, b)]).collect();
                    let lj: Vec<f64> = (0..d).map(|b| l[(j, b)]).collect();
                    let br = c.bracket(&xi, &lj);
                    for alpha in 0..d {
                        out[(j, i, alpha)] += br[alpha] + rotated[alpha];
                    }
                }
            }
            Ok((l + a, out))
        })())
    }
}
