//! Named scenarios. `--config catalog:NAME` loads one of these.

use crate::config::*;

fn v(xs: &[f64]) -> Vec<f64> {
    xs.to_vec()
}

fn unit_ball() -> BoundarySpec {
    BoundarySpec::Ball {
        center: v(&[0.0, 0.0, 0.0]),
        radius: 1.0,
    }
}

fn wide_box() -> Option<BoxSpec> {
    Some(BoxSpec {
        lo: v(&[-4.0; 3]),
        hi: v(&[4.0; 3]),
    })
}

fn base(experiment: Experiment, group: &str, metric: MetricSpec, connection: ConnectionSpec) -> ScenarioConfig {
    let orbit_seed = match group {
        "u1" => v(&[1.0]),
        _ => v(&[0.0, 0.0, 1.0]),
    };
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        experiment,
        seed: 7,
        group: GroupSpec {
            name: group.into(),
            orbit_seed,
        },
        metric,
        boundary: unit_ball(),
        domain: None,
        connection,
        connection_tilde: None,
        gauge: None,
        integrator: IntegratorSpec::default(),
        grid: GridSpec::default(),
        simulate: SimulateSpec::default(),
        lens_table: LensTableSpec::default(),
        identity: IdentitySpec::default(),
        recovery: RecoverySpec::default(),
        convexity: ConvexitySpec::default(),
    }
}

fn euclidean() -> MetricSpec {
    MetricSpec::Euclidean { dim: 3 }
}

/// `φ = 0.1 |z|²`.
fn conformal() -> MetricSpec {
    MetricSpec::Conformal {
        c0: 0.0,
        a: v(&[0.0; 3]),
        b: Some(vec![v(&[0.2, 0.0, 0.0]), v(&[0.0, 0.2, 0.0]), v(&[0.0, 0.0, 0.2])]),
    }
}

fn uniform_u1(field: [f64; 3]) -> ConnectionSpec {
    ConnectionSpec::Uniform {
        field,
        generator: v(&[1.0]),
    }
}

fn bump(center: &[f64], radius: f64, amplitude: f64) -> BumpSpec {
    BumpSpec {
        center: v(center),
        radius,
        amplitude,
    }
}

fn random_su2(seed: u64, scale: f64) -> ConnectionSpec {
    ConnectionSpec::Random { seed, scale, degree: 1 }
}

fn bumped(b: BumpSpec, inner: ConnectionSpec) -> ConnectionSpec {
    ConnectionSpec::Modulated {
        bump: b,
        inner: Box::new(inner),
    }
}

/// Interior gauge: identity on and near the boundary of the unit ball.
pub fn interior_gauge(seed: u64) -> GaugeSpec {
    GaugeSpec::RandomExp {
        bump: bump(&[0.1, 0.0, -0.1], 0.8, 1.0),
        seed,
        scale: 0.8,
    }
}

/// Smooth U(1) field that is nonzero on the whole unit sphere.
pub fn abelian_benchmark_connection() -> ConnectionSpec {
    bumped(bump(&[0.3, 0.0, 0.2], 1.8, 1.0), uniform_u1([0.4, -0.3, 0.6]))
}

pub const NAMES: &[&str] = &[
    "ball-free",
    "ball-u1-uniform",
    "ball-u1-bump",
    "ball-su2-random",
    "ball-su2-bump",
    "conformal-u1-uniform",
    "conformal-su2-bump",
    "identity-pair",
    "gauge-pair",
    "gauge-demo",
    "abelian-benchmark",
    "free-recovery",
    "convexity-free",
];

pub fn get(name: &str) -> Option<ScenarioConfig> {
    use Experiment::*;
    let cfg = match name {
        "ball-free" => base(LensTable, "su2", euclidean(), ConnectionSpec::Zero),
        "ball-u1-uniform" => base(Simulate, "u1", euclidean(), uniform_u1([0.3, 0.5, -0.8])),
        "ball-u1-bump" => base(
            Simulate,
            "u1",
            euclidean(),
            bumped(bump(&[0.2, -0.1, 0.0], 0.9, 1.5), uniform_u1([1.0, 0.0, 0.5])),
        ),
        "ball-su2-random" => base(Simulate, "su2", euclidean(), random_su2(11, 0.3)),
        "ball-su2-bump" => base(
            Simulate,
            "su2",
            euclidean(),
            bumped(bump(&[0.0, 0.2, 0.1], 0.9, 1.0), random_su2(12, 0.5)),
        ),
        "conformal-u1-uniform" => base(Simulate, "u1", conformal(), uniform_u1([0.2, -0.6, 0.4])),
        "conformal-su2-bump" => base(
            Simulate,
            "su2",
            conformal(),
            bumped(bump(&[-0.2, 0.0, 0.1], 0.9, 1.0), random_su2(13, 0.5)),
        ),
        "identity-pair" => {
            let mut c = base(VerifyIdentity, "su2", euclidean(), random_su2(21, 0.25));
            c.connection_tilde = Some(random_su2(22, 0.25));
            c.domain = wide_box();
            c.grid.boundary_points = 10;
            c.grid.directions_per_point = 5;
            c.identity.xray = false;
            c
        }
        "gauge-pair" => {
            let a = random_su2(31, 0.25);
            let mut c = base(VerifyIdentity, "su2", euclidean(), a.clone());
            c.connection_tilde = Some(ConnectionSpec::Gauged {
                base: Box::new(a),
                gauge: interior_gauge(32),
            });
            c.domain = wide_box();
            // The bump integrand needs finer quadrature than generic pairs.
            c.identity.panels = 96;
            c.integrator.rel_tol = 1e-8;
            c.integrator.abs_tol = 1e-10;
            c
        }
        "gauge-demo" => {
            let mut c = base(
                GaugeDemo,
                "su2",
                euclidean(),
                bumped(bump(&[0.0, 0.0, 0.0], 1.2, 1.0), random_su2(41, 0.4)),
            );
            c.gauge = Some(interior_gauge(42));
            c
        }
        "abelian-benchmark" => {
            let mut c = base(RecoverJet, "u1", euclidean(), abelian_benchmark_connection());
            c.lens_table.entries = EntrySource::Recovery;
            c.recovery.grid_points = 9;
            c
        }
        "free-recovery" => {
            let mut c = base(RecoverJet, "su2", euclidean(), ConnectionSpec::Zero);
            c.lens_table.entries = EntrySource::Recovery;
            c.recovery.grid_points = 3;
            c
        }
        "convexity-free" => base(CheckConvexity, "su2", euclidean(), ConnectionSpec::Zero),
        _ => return None,
    };
    Some(cfg)
}
