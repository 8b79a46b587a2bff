//! Builds the numerical objects a configuration describes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wonglens::dynamics::{entry_grid, IntegratorConfig, PhasePoint};
use wonglens::gauge::{Bump, Connection, ExpGauge, GaugeMap, GaugeTransformed, IdentityGauge, ModulatedConnection, PolynomialConnection, SumConnection, ZeroConnection};
use wonglens::lie_algebra::LieAlgebra;
use wonglens::manifold::{Boundary, Chart, Metric, Quadratic};
use wonglens::recovery::RecoveryConfig;

use crate::config::*;
use crate::error::{CliError, CliResult};

/// A configuration resolved into chart, algebra and fields.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub algebra: Arc<LieAlgebra>,
    pub chart: Chart,
    pub connection: Arc<dyn Connection>,
    pub connection_tilde: Option<Arc<dyn Connection>>,
    pub integrator: IntegratorConfig,
}

fn config_err(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{what}: {e}"))
}

fn vector(what: &str, v: &[f64], n: usize) -> CliResult<DVector<f64>> {
    if v.len() != n {
        return Err(CliError::Config(format!("{what}: expected {n} entries, got {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

fn matrix(what: &str, rows: &[Vec<f64>], r: usize, c: usize) -> CliResult<DMatrix<f64>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Config(format!("{what}: expected a {r}×{c} matrix")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        scale * x
    })
}

pub fn build_metric(spec: &MetricSpec) -> CliResult<Metric> {
    Ok(match spec {
        MetricSpec::Euclidean { dim } => Metric::Euclidean { dim: *dim },
        MetricSpec::Conformal { c0, a, b } => {
            let n = a.len();
            let b = match b {
                Some(rows) => matrix("metric.b", rows, n, n)?,
                None => DMatrix::zeros(n, n),
            };
            Metric::Conformal {
                phi: Quadratic::new(*c0, DVector::from_column_slice(a), b),
            }
        }
        MetricSpec::Perturbed { dim, radial, linear } => Metric::Perturbed {
            dim: *dim,
            radial: *radial,
            linear: linear
                .iter()
                .map(|m| matrix("metric.linear", m, *dim, *dim))
                .collect::<CliResult<_>>()?,
        },
    })
}

pub fn build_chart(cfg: &ScenarioConfig) -> CliResult<Chart> {
    let metric = build_metric(&cfg.metric)?;
    let n = metric.dim();
    let (boundary, lo, hi) = match &cfg.boundary {
        BoundarySpec::Ball { center, radius } => {
            let c = vector("boundary.center", center, n)?;
            let lo = c.add_scalar(-1.5 * radius);
            let hi = c.add_scalar(1.5 * radius);
            (Boundary::Ball { center: c, radius: *radius }, lo, hi)
        }
        BoundarySpec::Ellipsoid { center, semi_axes } => {
            let c = vector("boundary.center", center, n)?;
            let ax = vector("boundary.semi_axes", semi_axes, n)?;
            let (lo, hi) = (&c - &ax * 1.5, &c + &ax * 1.5);
            (Boundary::Ellipsoid { center: c, semi_axes: ax }, lo, hi)
        }
        BoundarySpec::HalfSpace { dim } => {
            let mut lo = DVector::from_element(*dim, -2.0);
            let mut hi = DVector::from_element(*dim, 2.0);
            lo[dim - 1] = -1.0;
            hi[dim - 1] = 3.0;
            (Boundary::HalfSpace { dim: *dim }, lo, hi)
        }
    };
    let (lo, hi) = match &cfg.domain {
        Some(b) => (vector("domain.lo", &b.lo, n)?, vector("domain.hi", &b.hi, n)?),
        None => (lo, hi),
    };
    Chart::new(metric, boundary, lo, hi).map_err(|e| config_err("chart", e))
}

fn build_bump(spec: &BumpSpec, n: usize) -> CliResult<Bump> {
    if !(spec.radius > 0.0) {
        return Err(CliError::Config("bump radius must be positive".into()));
    }
    Ok(Bump::new(vector("bump.center", &spec.center, n)?, spec.radius, spec.amplitude))
}

pub fn build_gauge(spec: &GaugeSpec, algebra: &Arc<LieAlgebra>, n: usize) -> CliResult<Arc<dyn GaugeMap>> {
    let d = algebra.dim();
    Ok(match spec {
        GaugeSpec::Identity => Arc::new(IdentityGauge::new(algebra.clone(), n)),
        GaugeSpec::Exp { bump, zeta } => Arc::new(
            ExpGauge::new(algebra.clone(), n, Arc::new(build_bump(bump, n)?), vector("gauge.zeta", zeta, d)?)
                .map_err(|e| config_err("gauge", e))?,
        ),
        GaugeSpec::RandomExp { bump, seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let zeta = gaussian_matrix(&mut rng, d, 1, *scale).column(0).into_owned();
            Arc::new(
                ExpGauge::new(algebra.clone(), n, Arc::new(build_bump(bump, n)?), zeta)
                    .map_err(|e| config_err("gauge", e))?,
            )
        }
    })
}

pub fn build_connection(spec: &ConnectionSpec, algebra: &Arc<LieAlgebra>, n: usize) -> CliResult<Arc<dyn Connection>> {
    let d = algebra.dim();
    let wrap = |e: wonglens::Error| config_err("connection", e);
    Ok(match spec {
        ConnectionSpec::Zero => Arc::new(ZeroConnection::new(algebra.clone(), n)),
        ConnectionSpec::Uniform { field, generator } => {
            if n != 3 {
                return Err(CliError::Config("uniform fields need dimension 3".into()));
            }
            let e = vector("connection.generator", generator, d)?;
            Arc::new(PolynomialConnection::uniform_field(algebra.clone(), *field, &e).map_err(wrap)?)
        }
        ConnectionSpec::Polynomial { constant, linear } => {
            let c = matrix("connection.constant", constant, n, d)?;
            let lin = linear
                .iter()
                .map(|m| matrix("connection.linear", m, n, d))
                .collect::<CliResult<_>>()?;
            Arc::new(PolynomialConnection::new(algebra.clone(), c, lin, vec![]).map_err(wrap)?)
        }
        ConnectionSpec::Random { seed, scale, degree } => {
            if *degree > 1 {
                return Err(CliError::Config("random connections have degree 0 or 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let c = gaussian_matrix(&mut rng, n, d, *scale);
            let lin = if *degree == 1 {
                (0..n).map(|_| gaussian_matrix(&mut rng, n, d, *scale)).collect()
            } else {
                vec![]
            };
            Arc::new(PolynomialConnection::new(algebra.clone(), c, lin, vec![]).map_err(wrap)?)
        }
        ConnectionSpec::Modulated { bump, inner } => Arc::new(ModulatedConnection::new(
            Arc::new(build_bump(bump, n)?),
            build_connection(inner, algebra, n)?,
        )),
        ConnectionSpec::Sum { parts } => Arc::new(
            SumConnection::new(
                parts
                    .iter()
                    .map(|p| build_connection(p, algebra, n))
                    .collect::<CliResult<_>>()?,
            )
            .map_err(wrap)?,
        ),
        ConnectionSpec::Gauged { base, gauge } => Arc::new(
            GaugeTransformed::new(build_connection(base, algebra, n)?, build_gauge(gauge, algebra, n)?).map_err(wrap)?,
        ),
    })
}

impl IntegratorSpec {
    pub fn to_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_time: self.max_time,
            event_tol: self.event_tol,
            exit_level: self.exit_level,
            h_max: self.h_max,
            ..IntegratorConfig::default()
        }
    }
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> CliResult<Self> {
        let algebra = Arc::new(LieAlgebra::by_name(&config.group.name).map_err(|e| config_err("group.name", e))?);
        let chart = build_chart(&config)?;
        let n = chart.dim();
        let connection = build_connection(&config.connection, &algebra, n)?;
        let connection_tilde = match &config.connection_tilde {
            Some(spec) => Some(build_connection(spec, &algebra, n)?),
            None => None,
        };
        let integrator = config.integrator.to_config();
        integrator.validate().map_err(|e| config_err("integrator", e))?;
        vector("group.orbit_seed", &config.group.orbit_seed, algebra.dim())?;
        Ok(Self {
            config,
            algebra,
            chart,
            connection,
            connection_tilde,
            integrator,
        })
    }

    pub fn orbit_seed(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.config.group.orbit_seed)
    }

    /// Orbit samples in reference-basis coordinates.
    pub fn charges(&self) -> CliResult<Vec<DVector<f64>>> {
        let count = self.config.grid.charges.max(1);
        Ok(self.algebra.sample_orbit(&self.orbit_seed(), count, self.config.seed)?)
    }

    /// Orbit samples as lowered phase-space charges.
    pub fn lowered_charges(&self) -> CliResult<Vec<DVector<f64>>> {
        Ok(self.charges()?.iter().map(|c| self.algebra.lower(c)).collect())
    }

    pub fn boundary_points(&self, count: usize) -> Vec<DVector<f64>> {
        self.chart.boundary.grid(count, self.config.grid.extent, self.config.seed)
    }

    /// Inward entries over the boundary grid.
    pub fn entries(&self) -> CliResult<Vec<PhasePoint>> {
        let g = &self.config.grid;
        Ok(entry_grid(
            &self.chart,
            &self.boundary_points(g.boundary_points),
            g.directions_per_point,
            &self.lowered_charges()?,
            g.min_inward,
            self.config.seed,
        )?)
    }

    pub fn tilde(&self) -> CliResult<&Arc<dyn Connection>> {
        self.connection_tilde
            .as_ref()
            .ok_or_else(|| CliError::Config("this experiment needs `connection_tilde`".into()))
    }

    /// A basis of the algebra inside the orbit, reference coordinates.
    pub fn orbit_basis(&self) -> CliResult<Vec<DVector<f64>>> {
        Ok(self
            .algebra
            .find_basis_in_orbit(&self.orbit_seed(), self.config.recovery.basis_samples, self.config.seed)?
            .elements)
    }

    pub fn recovery_points(&self) -> CliResult<Vec<DVector<f64>>> {
        let r = &self.config.recovery;
        if r.points.is_empty() {
            return Ok(self.boundary_points(r.grid_points));
        }
        r.points
            .iter()
            .map(|p| vector("recovery.points", p, self.chart.dim()))
            .collect()
    }

    pub fn recovery_config(&self) -> RecoveryConfig {
        let r = &self.config.recovery;
        RecoveryConfig {
            b: r.b,
            h: r.h,
            integrator: self.integrator.clone(),
            max_condition: r.max_condition,
        }
    }
}
