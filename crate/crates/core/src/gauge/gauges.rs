use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::GaugeMap;
use crate::error::{check_dim, Error, Result};
use crate::lie_algebra::LieAlgebra;
use crate::linalg::{inverse, CMatrix};
use crate::manifold::ScalarField;
use crate::tensor::Tensor3;

/// `u ≡ e`.
#[derive(Clone, Debug)]
pub struct IdentityGauge {
    algebra: Arc<LieAlgebra>,
    n: usize,
}

impl IdentityGauge {
    pub fn new(algebra: Arc<LieAlgebra>, n: usize) -> Self {
        Self { algebra, n }
    }
}

impl GaugeMap for IdentityGauge {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix> {
        check_dim("point", z.len(), self.n)?;
        let m = self.algebra.matrix_size();
        Ok(CMatrix::identity(m, m))
    }

    fn log_derivative(&self, _z: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(self.n, self.algebra.dim()))
    }

    fn log_derivative_partials(&self, _z: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(self.n, self.n, self.algebra.dim())))
    }
}

/// A constant group element.
#[derive(Clone, Debug)]
pub struct ConstantGauge {
    algebra: Arc<LieAlgebra>,
    n: usize,
    u: CMatrix,
}

impl ConstantGauge {
    pub fn new(algebra: Arc<LieAlgebra>, n: usize, u: CMatrix) -> Result<Self> {
        let m = algebra.matrix_size();
        if u.nrows() != m || u.ncols() != m {
            return Err(Error::Dimension(format!("group element must be {m}×{m}")));
        }
        inverse(&u)?;
        Ok(Self { algebra, n, u })
    }
}

impl GaugeMap for ConstantGauge {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix> {
        check_dim("point", z.len(), self.n)?;
        Ok(self.u.clone())
    }

    fn log_derivative(&self, _z: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(self.n, self.algebra.dim()))
    }

    fn log_derivative_partials(&self, _z: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(self.n, self.n, self.algebra.dim())))
    }
}

/// `u(z) = exp(f(z) ζ)` for a scalar profile `f` and fixed `ζ ∈ 𝔤`.
///
/// With an interior-supported profile this gauge is the identity on ∂M.
#[derive(Clone)]
pub struct ExpGauge {
    algebra: Arc<LieAlgebra>,
    profile: Arc<dyn ScalarField>,
    zeta: DVector<f64>,
    n: usize,
}

impl ExpGauge {
    pub fn new(algebra: Arc<LieAlgebra>, n: usize, profile: Arc<dyn ScalarField>, zeta: DVector<f64>) -> Result<Self> {
        check_dim("gauge generator", zeta.len(), algebra.dim())?;
        Ok(Self {
            algebra,
            profile,
            zeta,
            n,
        })
    }
}

impl GaugeMap for ExpGauge {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix> {
        check_dim("point", z.len(), self.n)?;
        self.algebra.exp(&(&self.zeta * self.profile.value(z)))
    }

    fn log_derivative(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self.profile.gradient(z) {
            Some(grad) => Ok(&grad * self.zeta.transpose()),
            None => super::fd_log_derivative(self, z),
        }
    }

    fn log_derivative_partials(&self, z: &DVector<f64>) -> Option<Result<Tensor3>> {
        self.profile.gradient(z)?;
        let hess = self.profile.hessian(z)?;
        let d = self.algebra.dim();
        let mut out = Tensor3::zeros(self.n, self.n, d);
        for j in 0..self.n {
            for i in 0..self.n {
                for alpha in 0..d {
                    out.set(j, i, alpha, hess[(i, j)] * self.zeta[alpha]);
                }
            }
        }
        Some(Ok(out))
    }
}

/// Pointwise product `u = u_a u_b`.
#[derive(Clone)]
pub struct ProductGauge {
    a: Arc<dyn GaugeMap>,
    b: Arc<dyn GaugeMap>,
}

impl ProductGauge {
    pub fn new(a: Arc<dyn GaugeMap>, b: Arc<dyn GaugeMap>) -> Result<Self> {
        if a.dim() != b.dim() || a.algebra().dim() != b.algebra().dim() {
            return Err(Error::Dimension("gauge factors disagree in shape".into()));
        }
        Ok(Self { a, b })
    }
}

impl GaugeMap for ProductGauge {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        self.a.algebra()
    }

    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix> {
        Ok(self.a.value(z)? * self.b.value(z)?)
    }

    /// `(u_a u_b)⁻¹ d(u_a u_b) = Ad_{u_b⁻¹}(u_a⁻¹ du_a) + u_b⁻¹ du_b`.
    fn log_derivative(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let ub = self.b.value(z)?;
        let ad = self.algebra().ad_matrix(&inverse(&ub)?)?;
        Ok(self.a.log_derivative(z)? * ad.transpose() + self.b.log_derivative(z)?)
    }
}

/// Gauge given by a closure; derivatives by finite differences.
pub struct FnGauge<F> {
    algebra: Arc<LieAlgebra>,
    n: usize,
    f: F,
}

impl<F> FnGauge<F>
where
    F: Fn(&DVector<f64>) -> Result<CMatrix> + Send + Sync,
{
    pub fn new(algebra: Arc<LieAlgebra>, n: usize, f: F) -> Self {
        Self { algebra, n, f }
    }
}

impl<F> GaugeMap for FnGauge<F>
where
    F: Fn(&DVector<f64>) -> Result<CMatrix> + Send + Sync,
{
    fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix> {
        check_dim("point", z.len(), self.n)?;
        (self.f)(z)
    }
}
