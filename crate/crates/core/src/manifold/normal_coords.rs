use nalgebra::{DMatrix, DVector};

use super::Chart;
use crate::error::{check_dim, Error, Result};
use crate::linalg::central_diff4;
use crate::ode::{rk4_step, rk4_step_count};

const GEODESIC_STEP: f64 = 1e-3;
const FOCAL_RATIO: f64 = 0.05;

/// Boundary normal coordinates `(z′, zⁿ)` near a boundary point `p`.
///
/// `z′` parametrizes ∂M through `b(z′)`, the projection of `p + T z′` onto
/// `{ρ = 0}` along the Euclidean normal at `p`, with `T` a Euclidean
/// orthonormal tangent frame at `p`. The point with coordinates `(z′, zⁿ)` is
/// reached by following the unit-speed inward normal geodesic from `b(z′)`
/// for time `zⁿ`.
#[derive(Clone, Debug)]
pub struct BoundaryNormalCoordinates {
    chart: Chart,
    p: DVector<f64>,
    radius: f64,
    frame: Vec<DVector<f64>>,
    normal_e: DVector<f64>,
}

impl BoundaryNormalCoordinates {
    /// Fails with a radius error when the Jacobian determinant within the
    /// coordinate cube of half-width `radius` drops below 5% of its boundary
    /// value, signalling an approaching focal point.
    pub fn new(chart: &Chart, p: &DVector<f64>, radius: f64) -> Result<Self> {
        check_dim("boundary point", p.len(), chart.dim())?;
        let r = chart.rho(p);
        if r.abs() >= chart.boundary_tol.max(1e-9) {
            return Err(Error::Precondition(format!("base point is off the boundary (ρ = {r:e})")));
        }
        if !(radius > 0.0) {
            return Err(Error::Precondition("radius must be positive".into()));
        }
        let grad = chart.rho_gradient(p);
        let normal_e = grad.normalize();
        let frame = chart.tangent_frame(p)?;
        let bnc = Self {
            chart: chart.clone(),
            p: p.clone(),
            radius,
            frame,
            normal_e,
        };
        bnc.check_focal()?;
        Ok(bnc)
    }

    pub fn base_point(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn check_focal(&self) -> Result<()> {
        let n = self.dim();
        let mut tangential: Vec<Vec<f64>> = vec![vec![0.0; n - 1]];
        let off = self.radius / ((n - 1) as f64).sqrt();
        for a in 0..n - 1 {
            for s in [-1.0, 1.0] {
                let mut zp = vec![0.0; n - 1];
                zp[a] = s * off;
                tangential.push(zp);
            }
        }
        for zp in tangential {
            let mut c = DVector::zeros(n);
            c.rows_mut(0, n - 1).copy_from_slice(&zp);
            let det0 = self.jacobian(&c)?.determinant();
            for frac in [0.25, 0.5, 0.75, 1.0] {
                c[n - 1] = frac * self.radius;
                let det = self.jacobian(&c)?.determinant();
                if !(det / det0 > FOCAL_RATIO) {
                    return Err(Error::RadiusTooLarge(format!(
                        "Jacobian determinant ratio {:.3e} at zⁿ = {:.3e}",
                        det / det0,
                        c[n - 1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `b(z′)` on ∂M.
    pub fn boundary_point(&self, zp: &[f64]) -> Result<DVector<f64>> {
        check_dim("tangential coordinates", zp.len(), self.dim() - 1)?;
        let mut q = self.p.clone();
        for (t, &c) in self.frame.iter().zip(zp) {
            q += t * c;
        }
        let mut s = 0.0;
        for _ in 0..60 {
            let z = &q + &self.normal_e * s;
            let r = self.chart.rho(&z);
            if r.abs() < 1e-15 {
                break;
            }
            let slope = self.chart.rho_gradient(&z).dot(&self.normal_e);
            if slope.abs() < 1e-12 {
                return Err(Error::DegenerateBoundary("projection onto ∂M failed".into()));
            }
            let ds = r / slope;
            s -= ds;
            if ds.abs() < 1e-16 * (1.0 + s.abs()) {
                break;
            }
        }
        let b = &q + &self.normal_e * s;
        self.chart.check_domain(&b)?;
        Ok(b)
    }

    /// Position and velocity after following the inward normal geodesic from
    /// `b(z′)` for time `zⁿ`.
    pub fn normal_ray(&self, zp: &[f64], zn: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let b = self.boundary_point(zp)?;
        let nu = self.chart.normal_field(&b)?;
        if self.chart.metric.is_flat_identity() && !self.chart.fd_only {
            return Ok((&b - &nu * zn, -nu));
        }
        let mut y: Vec<f64> = b.iter().chain((-nu).iter()).cloned().collect();
        if zn != 0.0 {
            let steps = rk4_step_count(zn, GEODESIC_STEP);
            let h = zn / steps as f64;
            let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
                geodesic_rhs(&self.chart, y, dy)
            };
            for k in 0..steps {
                y = rk4_step(&mut f, k as f64 * h, &y, h)?;
            }
        }
        Ok((
            DVector::from_column_slice(&y[..n]),
            DVector::from_column_slice(&y[n..]),
        ))
    }

    /// `(z′, zⁿ) ↦ z`.
    pub fn to_chart(&self, coords: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        check_dim("normal coordinates", coords.len(), n)?;
        Ok(self.normal_ray(&coords.as_slice()[..n - 1], coords[n - 1])?.0)
    }

    /// `∂z/∂(z′, zⁿ)`; tangential columns by central differences, the last
    /// column is the geodesic velocity.
    pub fn jacobian(&self, coords: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        check_dim("normal coordinates", coords.len(), n)?;
        let zn = coords[n - 1];
        let mut jac = DMatrix::zeros(n, n);
        let h = 1e-4 * (1.0 + coords.norm());
        for a in 0..n - 1 {
            let col = central_diff4(
                |s| {
                    let mut zp = coords.as_slice()[..n - 1].to_vec();
                    zp[a] += s;
                    Ok(self.normal_ray(&zp, zn)?.0.as_slice().to_vec())
                },
                h,
            )?;
            jac.set_column(a, &DVector::from_vec(col));
        }
        let (_, vel) = self.normal_ray(&coords.as_slice()[..n - 1], zn)?;
        jac.set_column(n - 1, &vel);
        Ok(jac)
    }

    /// Metric in normal coordinates, `Jᵀ g J`.
    pub fn pulled_back_metric(&self, coords: &DVector<f64>) -> Result<DMatrix<f64>> {
        let jac = self.jacobian(coords)?;
        let z = self.to_chart(coords)?;
        let g = self.chart.metric_at(&z)?;
        Ok(jac.transpose() * g * jac)
    }

    /// Inverse map by Newton iteration.
    pub fn from_chart(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        check_dim("point", z.len(), n)?;
        let d = z - &self.p;
        let mut c = DVector::zeros(n);
        for (a, t) in self.frame.iter().enumerate() {
            c[a] = t.dot(&d);
        }
        c[n - 1] = -self.normal_e.dot(&d);
        for _ in 0..40 {
            let r = self.to_chart(&c)? - z;
            if r.norm() < 1e-13 * (1.0 + z.norm()) {
                return Ok(c);
            }
            let jac = self.jacobian(&c)?;
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Numerical("singular normal-coordinate Jacobian".into()))?;
            c -= step;
        }
        let r = (self.to_chart(&c)? - z).norm();
        if r < 1e-10 {
            Ok(c)
        } else {
            Err(Error::Numerical(format!("normal-coordinate inversion stalled (residual {r:e})")))
        }
    }
}

/// `ż = v`, `v̇ = −Γ(v, v)` on the packed state `(z, v)`.
pub(crate) fn geodesic_rhs(chart: &Chart, y: &[f64], dy: &mut [f64]) -> Result<()> {
    let n = chart.dim();
    let z = DVector::from_column_slice(&y[..n]);
    let jet = chart.metric_jet(&z)?;
    let acc = jet.christoffel_contract(&y[n..], &y[n..]);
    dy[..n].copy_from_slice(&y[n..]);
    for i in 0..n {
        dy[n + i] = -acc[i];
    }
    Ok(())
}
