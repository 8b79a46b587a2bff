use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Connection, GaugeMap, GaugeTransformed};
use crate::error::{check_dim, Error, Result};
use crate::lie_algebra::LieAlgebra;
use crate::linalg::{pack_complex, polar_unitary, unitary_defect, unpack_complex, CMatrix};
use crate::manifold::BoundaryNormalCoordinates;
use crate::ode::{integrate, rk4_step, rk4_step_count, OdeOptions};

const TRANSPORT_STEP: f64 = 1e-3;
const REPROJECT_DEFECT: f64 = 1e-10;

/// `A(w) = Σ A^α_i w^i e_α` as a matrix.
fn contract_matrix(algebra: &LieAlgebra, a: &DMatrix<f64>, w: &[f64]) -> Result<CMatrix> {
    let d = algebra.dim();
    let coords = DVector::from_fn(d, |alpha, _| (0..w.len()).map(|i| a[(i, alpha)] * w[i]).sum());
    algebra.to_matrix(&coords)
}

/// The gauge solving `u̇ + A(γ̇)u = 0` along inward normal geodesics, with
/// `u = e` on the surface `zⁿ = start_depth`.
#[derive(Clone)]
pub struct NormalGaugeMap {
    connection: Arc<dyn Connection>,
    coords: BoundaryNormalCoordinates,
    start_depth: f64,
}

impl NormalGaugeMap {
    pub fn new(connection: Arc<dyn Connection>, coords: BoundaryNormalCoordinates, start_depth: f64) -> Result<Self> {
        check_dim("connection", connection.dim(), coords.dim())?;
        Ok(Self {
            connection,
            coords,
            start_depth,
        })
    }

    pub fn coordinates(&self) -> &BoundaryNormalCoordinates {
        &self.coords
    }

    /// Transport along the normal line with tangential coordinates `zp`
    /// from the start surface to depth `zn`.
    pub fn transport(&self, zp: &[f64], zn: f64) -> Result<CMatrix> {
        let algebra = self.connection.algebra().clone();
        let chart = self.coords.chart();
        let n = chart.dim();
        let m = algebra.matrix_size();
        let (z0, v0) = self.coords.normal_ray(zp, self.start_depth)?;
        let mut y = vec![0.0; 2 * n + 2 * m * m];
        y[..n].copy_from_slice(z0.as_slice());
        y[n..2 * n].copy_from_slice(v0.as_slice());
        pack_complex(&CMatrix::identity(m, m), &mut y[2 * n..]);
        let span = zn - self.start_depth;
        if span == 0.0 {
            return Ok(CMatrix::identity(m, m));
        }
        let steps = rk4_step_count(span, TRANSPORT_STEP);
        let h = span / steps as f64;
        let conn = self.connection.as_ref();
        let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            crate::manifold::geodesic_rhs(chart, &y[..2 * n], &mut dy[..2 * n])?;
            let z = DVector::from_column_slice(&y[..n]);
            let a = conn.components(&z)?;
            let av = contract_matrix(&algebra, &a, &y[n..2 * n])?;
            let u = unpack_complex(&y[2 * n..], m);
            let du = -(av * u);
            pack_complex(&du, &mut dy[2 * n..]);
            Ok(())
        };
        for k in 0..steps {
            y = rk4_step(&mut rhs, k as f64 * h, &y, h)?;
            let u = unpack_complex(&y[2 * n..], m);
            if algebra.is_unitary() && unitary_defect(&u) > REPROJECT_DEFECT {
                pack_complex(&polar_unitary(&u)?, &mut y[2 * n..]);
            }
        }
        Ok(unpack_complex(&y[2 * n..], m))
    }
}

impl GaugeMap for NormalGaugeMap {
    fn algebra(&self) -> &Arc<LieAlgebra> {
        self.connection.algebra()
    }

    fn dim(&self) -> usize {
        self.connection.dim()
    }

    fn value(&self, z: &DVector<f64>) -> Result<CMatrix> {
        let c = self.coords.from_chart(z)?;
        let n = c.len();
        self.transport(&c.as_slice()[..n - 1], c[n - 1])
    }
}

/// Puts `A` into the gauge with vanishing normal component near the base point
/// of the normal coordinates.
pub fn normal_gauge(
    a: Arc<dyn Connection>,
    coords: &BoundaryNormalCoordinates,
) -> Result<(GaugeTransformed, Arc<NormalGaugeMap>)> {
    let map = Arc::new(NormalGaugeMap::new(a.clone(), coords.clone(), 0.0)?);
    let transformed = GaugeTransformed::new(a, map.clone())?;
    Ok((transformed, map))
}

/// A parametrized path `t ∈ [0, T]`.
pub trait Curve: Send + Sync {
    fn span(&self) -> f64;
    fn point(&self, t: f64) -> DVector<f64>;
    fn velocity(&self, t: f64) -> DVector<f64>;
}

/// `t ↦ a + t (b − a)` on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
}

impl Curve for Segment {
    fn span(&self) -> f64 {
        1.0
    }

    fn point(&self, t: f64) -> DVector<f64> {
        &self.a + (&self.b - &self.a) * t
    }

    fn velocity(&self, _t: f64) -> DVector<f64> {
        &self.b - &self.a
    }
}

/// Piecewise linear path through the given vertices, parametrized by vertex
/// index on `[0, len − 1]`.
#[derive(Clone, Debug)]
pub struct PolylineCurve {
    pub vertices: Vec<DVector<f64>>,
}

impl PolylineCurve {
    fn piece(&self, t: f64) -> (usize, f64) {
        let last = self.vertices.len() - 2;
        let k = (t.floor().max(0.0) as usize).min(last);
        (k, t - k as f64)
    }
}

impl Curve for PolylineCurve {
    fn span(&self) -> f64 {
        (self.vertices.len() - 1) as f64
    }

    fn point(&self, t: f64) -> DVector<f64> {
        let (k, s) = self.piece(t);
        &self.vertices[k] + (&self.vertices[k + 1] - &self.vertices[k]) * s
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        let (k, _) = self.piece(t);
        &self.vertices[k + 1] - &self.vertices[k]
    }
}

/// Integrates `u̇ = u Ã(γ̇) − A(γ̇) u` from `u(0) = u0` and returns `u` at the
/// requested increasing times.
pub fn gauge_ode_solve(
    a: &dyn Connection,
    a_tilde: &dyn Connection,
    curve: &dyn Curve,
    u0: &CMatrix,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<CMatrix>> {
    let algebra = a.algebra().clone();
    let m = algebra.matrix_size();
    if u0.nrows() != m || u0.ncols() != m {
        return Err(Error::Dimension(format!("initial value must be {m}×{m}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| t < 0.0 || t > curve.span()) {
        return Err(Error::Precondition("times must be increasing within the curve span".into()));
    }
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let z = curve.point(t);
        let w = curve.velocity(t);
        let am = contract_matrix(&algebra, &a.components(&z)?, w.as_slice())?;
        let atm = contract_matrix(&algebra, &a_tilde.components(&z)?, w.as_slice())?;
        let u = unpack_complex(y, m);
        pack_complex(&(&u * atm - am * &u), dy);
        Ok(())
    };
    let mut y = vec![0.0; 2 * m * m];
    pack_complex(u0, &mut y);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target > t {
            let sol = integrate(rhs, t, &y, target, opts, None, false)?;
            y = sol.y;
            t = target;
        }
        out.push(unpack_complex(&y, m));
    }
    Ok(out)
}

/// Compares normal derivatives of order `0..=order` of two connections at the
/// base point of `coords`, using one-sided stencils with step `h` along the
/// inward normal geodesic. Both connections must be in normal gauge there.
pub fn boundary_jet_compare(
    a: &dyn Connection,
    a_tilde: &dyn Connection,
    coords: &BoundaryNormalCoordinates,
    order: usize,
    h: f64,
) -> Result<Vec<f64>> {
    if order > 2 {
        return Err(Error::Unsupported(format!(
            "normal jets of order {order} are beyond finite-difference resolution"
        )));
    }
    let n = coords.dim();
    let zp = vec![0.0; n - 1];
    let mut diffs = Vec::new();
    for k in 0..4 {
        let (z, vel) = coords.normal_ray(&zp, k as f64 * h)?;
        let ca = a.components(&z)?;
        let ct = a_tilde.components(&z)?;
        for (label, c) in [("first", &ca), ("second", &ct)] {
            let normal = c.transpose() * &vel;
            let scale = 1.0 + c.amax();
            if normal.amax() > 1e-6 * scale {
                return Err(Error::Precondition(format!(
                    "{label} connection is not in normal gauge (|A(∂ₙ)| = {:e})",
                    normal.amax()
                )));
            }
        }
        diffs.push(ca - ct);
    }
    let stencils: [&[f64]; 3] = [&[1.0], &[-1.5, 2.0, -0.5], &[2.0, -5.0, 4.0, -1.0]];
    Ok((0..=order)
        .map(|k| {
            let w = stencils[k];
            let mut acc = DMatrix::zeros(diffs[0].nrows(), diffs[0].ncols());
            for (c, d) in w.iter().zip(&diffs) {
                acc += d * *c;
            }
            acc.amax() / h.powi(k as i32)
        })
        .collect())
}
