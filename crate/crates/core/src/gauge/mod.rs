//! Yang–Mills potentials, curvature, the Lorentz tensor and gauge
//! transformations.
//!
//! A connection is described by its components `A^α_i(z)` in the reference
//! basis of the Lie algebra, an `n × d` matrix with row `i` and column `α`.
//! Coordinate derivatives `∂_j A^α_i` are stored as a [`Tensor3`] indexed
//! `(j, i, α)`, and curvature components `F^α_{ij}` as a [`Tensor3`] indexed
//! `(i, j, α)`.

mod connections;
mod gauges;
mod normal;

pub use connections::{
    Bump, GaugeTransformed, ModulatedConnection, PolynomialConnection, SumConnection, ZeroConnection,
};
pub use gauges::{ConstantGauge, ExpGauge, FnGauge, IdentityGauge, ProductGauge};
pub use normal::{
    boundary_jet_compare, gauge_ode_solve, normal_gauge, Curve, NormalGaugeMap, PolylineCurve, Segment,
};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::lie_algebra::LieAlgebra;
use crate::linalg::{central_diff4, fd_step, CMatrix};
use crate::manifold::Chart;
use crate::tensor::Tensor3;

/// Base step of finite-difference fallbacks for connection derivatives.
pub const FD_BASE_STEP: f64 = 1e-4;

/// A 𝔤-valued 1-form on the chart.
pub trait Connection: Send + Sync {
    fn algebra(&self) -> &Arc<LieAlgebra>;

    /// Base dimension `n`.
    fn dim(&self) -> usize;

    /// `A^α_i(z)`, an `n × d` matrix.
    fn components(&self, z: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `∂_j A^α_i(z)` at `(j, i, α)` when known in closed form.
    fn analytic_partials(&self, _z: &DVector<f64>) -> Option<Result<Tensor3>> {
        None
    }

    /// Components and partials together, for implementations that share
    /// work between the two.
    fn components_and_partials(&self, z: &DVector<f64>) -> Result<(DMatrix<f64>, Tensor3)> {
        Ok((self.components(z)?, connection_partials(self, z)?))
    }
}

/// `∂_j A^α_i`, analytic when available, otherwise fourth-order central
/// differences with step `1e-4 (1 + |z|)`.
pub fn connection_partials<C: Connection + ?Sized>(a: &C, z: &DVector<f64>) -> Result<Tensor3> {
    if let Some(p) = a.analytic_partials(z) {
        return p;
    }
    fd_connection_partials(a, z)
}

/// Finite-difference partials regardless of analytic availability.
pub fn fd_connection_partials<C: Connection + ?Sized>(a: &C, z: &DVector<f64>) -> Result<Tensor3> {
    let n = a.dim();
    let d = a.algebra().dim();
    let h = fd_step(FD_BASE_STEP, z);
    let mut out = Tensor3::zeros(n, n, d);
    for j in 0..n {
        let col = central_diff4(
            |s| {
                let mut zs = z.clone();
                zs[j] += s;
                Ok(a.components(&zs)?.as_slice().to_vec())
            },
            h,
        )?;
        for i in 0..n {
            for alpha in 0..d {
                out.set(j, i, alpha, col[i + n * alpha]);
            }
        }
    }
    Ok(out)
}

/// Components and curvature at one point.
#[derive(Clone, Debug)]
pub struct FieldJet {
    pub a: DMatrix<f64>,
    pub f: Tensor3,
}

/// `F_{ij} = ∂_i A_j − ∂_j A_i + [A_i, A_j]` from components and partials.
pub fn curvature_from(algebra: &LieAlgebra, a: &DMatrix<f64>, da: &Tensor3) -> Tensor3 {
    let n = a.nrows();
    let d = a.ncols();
    let c = algebra.structure_constants();
    let abelian = c.is_abelian();
    let mut f = Tensor3::zeros(n, n, d);
    for i in 0..n {
        for j in (i + 1)..n {
            for alpha in 0..d {
                let mut v = da.get(i, j, alpha) - da.get(j, i, alpha);
                if !abelian {
                    for beta in 0..d {
                        let ab = a[(i, beta)];
                        if ab == 0.0 {
                            continue;
                        }
                        for mu in 0..d {
                            v += c.get(alpha, beta, mu) * ab * a[(j, mu)];
                        }
                    }
                }
                f.set(i, j, alpha, v);
                f.set(j, i, alpha, -v);
            }
        }
    }
    f
}

pub fn field_jet(a: &dyn Connection, z: &DVector<f64>) -> Result<FieldJet> {
    let (comps, da) = a.components_and_partials(z)?;
    let f = curvature_from(a.algebra(), &comps, &da);
    Ok(FieldJet { a: comps, f })
}

/// Curvature components `F^α_{ij}(z)` at `(i, j, α)`.
pub fn curvature_at(a: &dyn Connection, z: &DVector<f64>) -> Result<Tensor3> {
    check_dim("point", z.len(), a.dim())?;
    Ok(field_jet(a, z)?.f)
}

/// `F(v, w)` as a reference-basis element.
pub fn curvature_pair(f: &Tensor3, v: &[f64], w: &[f64]) -> DVector<f64> {
    let [n, _, d] = f.shape();
    let mut out = DVector::zeros(d);
    for i in 0..n {
        for j in 0..n {
            let s = v[i] * w[j];
            if s == 0.0 {
                continue;
            }
            for (alpha, o) in out.iter_mut().enumerate() {
                *o += f.get(i, j, alpha) * s;
            }
        }
    }
    out
}

/// `(𝔽^ξ v)^i = g^{ij} F^α_{jk} v^k ξ_α` with `ξ_α` lowered coordinates.
pub fn lorentz_force_from(g_inv: &DMatrix<f64>, f: &Tensor3, v: &[f64], xi_lower: &[f64]) -> DVector<f64> {
    let [n, _, d] = f.shape();
    let mut low = DVector::zeros(n);
    for j in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            if v[k] == 0.0 {
                continue;
            }
            let fib = f.fiber(j, k);
            let mut s = 0.0;
            for alpha in 0..d {
                s += fib[alpha] * xi_lower[alpha];
            }
            acc += s * v[k];
        }
        low[j] = acc;
    }
    g_inv * low
}

pub fn lorentz_force(
    chart: &Chart,
    a: &dyn Connection,
    z: &DVector<f64>,
    v: &DVector<f64>,
    xi_lower: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim("velocity", v.len(), chart.dim())?;
    check_dim("charge", xi_lower.len(), a.algebra().dim())?;
    let jet = chart.metric_jet(z)?;
    let f = curvature_at(a, z)?;
    Ok(lorentz_force_from(&jet.g_inv, &f, v.as_slice(), xi_lower.as_slice()))
}

/// A gauge `u: M → G`.
pub trait GaugeMap: Send + Sync {
    fn algebra(&self) -> &Arc<LieAlgebra>;

    fn dim(&self) -> usize;

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix>;

    /// `(u⁻¹ ∂_i u)^α`, an `n × d` matrix; central differences by default.
    fn log_derivative(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        fd_log_derivative(self, z)
    }

    /// `∂_j (u⁻¹ ∂_i u)^α` at `(j, i, α)` when known in closed form.
    fn log_derivative_partials(&self, _z: &DVector<f64>) -> Option<Result<Tensor3>> {
        None
    }
}

pub(crate) fn fd_log_derivative<G: GaugeMap + ?Sized>(u: &G, z: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = u.dim();
    let algebra = u.algebra();
    let m = algebra.matrix_size();
    let d = algebra.dim();
    let h = fd_step(FD_BASE_STEP, z);
    let val = u.value(z)?;
    let inv = crate::linalg::inverse(&val)?;
    let mut out = DMatrix::zeros(n, d);
    for i in 0..n {
        let flat = central_diff4(
            |s| {
                let mut zs = z.clone();
                zs[i] += s;
                let mut buf = vec![0.0; 2 * m * m];
                crate::linalg::pack_complex(&u.value(&zs)?, &mut buf);
                Ok(buf)
            },
            h,
        )?;
        let du = crate::linalg::unpack_complex(&flat, m);
        let coords = algebra.from_matrix(&(&inv * du))?;
        out.set_row(i, &coords.transpose());
    }
    Ok(out)
}

/// Checks that `u(z)` lies in the group to `1e-8`.
pub fn check_gauge_value(u: &dyn GaugeMap, z: &DVector<f64>) -> Result<CMatrix> {
    let val = u.value(z)?;
    let defect = u.algebra().group_defect(&val);
    if defect > 1e-8 {
        return Err(Error::Gauge(format!("group defect {defect:e} at {:?}", z.as_slice())));
    }
    Ok(val)
}

/// `Ã = u⁻¹du + u⁻¹Au`.
pub fn gauge_transform(a: Arc<dyn Connection>, u: Arc<dyn GaugeMap>) -> Result<GaugeTransformed> {
    GaugeTransformed::new(a, u)
}

/// `max ‖F_Ã − u⁻¹ F_A u‖` over the sample points and index pairs.
pub fn gauge_transform_curvature_check(
    a: Arc<dyn Connection>,
    u: Arc<dyn GaugeMap>,
    samples: &[DVector<f64>],
) -> Result<f64> {
    let algebra = a.algebra().clone();
    let at = gauge_transform(a.clone(), u.clone())?;
    let n = a.dim();
    let mut worst = 0.0_f64;
    for z in samples {
        let f = curvature_at(a.as_ref(), z)?;
        let ft = curvature_at(&at, z)?;
        let uinv = crate::linalg::inverse(&u.value(z)?)?;
        let ad = algebra.ad_matrix(&uinv)?;
        for i in 0..n {
            for j in 0..n {
                let fij = DVector::from_column_slice(f.fiber(i, j));
                let rot = &ad * fij;
                let diff = DVector::from_column_slice(ft.fiber(i, j)) - rot;
                worst = worst.max(algebra.norm(&diff)?);
            }
        }
    }
    Ok(worst)
}
