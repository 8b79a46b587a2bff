//! Scenario configuration: a TOML document with an explicit schema version.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    LensTable,
    VerifyIdentity,
    RecoverJet,
    CheckConvexity,
    GaugeDemo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub group: GroupSpec,
    pub metric: MetricSpec,
    pub boundary: BoundarySpec,
    /// Enclosing box of the extended manifold; derived from the boundary
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxSpec>,
    pub connection: ConnectionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection_tilde: Option<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeSpec>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub lens_table: LensTableSpec,
    #[serde(default)]
    pub identity: IdentitySpec,
    #[serde(default)]
    pub recovery: RecoverySpec,
    #[serde(default)]
    pub convexity: ConvexitySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// `u1`, `su2` or `so3`.
    pub name: String,
    /// Orbit representative in reference-basis coordinates.
    pub orbit_seed: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean {
        dim: usize,
    },
    /// `g = e^{2φ} I`, `φ = c0 + a·z + ½ zᵀBz`.
    Conformal {
        c0: f64,
        a: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<Vec<f64>>>,
    },
    Perturbed {
        dim: usize,
        radial: f64,
        #[serde(default)]
        linear: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { dim: usize },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Zero,
    /// Symmetric-gauge potential of a uniform field `B` along `generator`.
    Uniform { field: [f64; 3], generator: Vec<f64> },
    /// `C + Σ z_k L_k`; matrices are `n × d` row lists.
    Polynomial {
        constant: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Vec<Vec<Vec<f64>>>,
    },
    /// Gaussian coefficients of the given polynomial degree (0 or 1).
    Random { seed: u64, scale: f64, degree: usize },
    Modulated { bump: BumpSpec, inner: Box<ConnectionSpec> },
    Sum { parts: Vec<ConnectionSpec> },
    Gauged { base: Box<ConnectionSpec>, gauge: GaugeSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeSpec {
    Identity,
    /// `u = exp(χ(z) ζ)`; equals `e` outside the bump.
    Exp { bump: BumpSpec, zeta: Vec<f64> },
    /// `Exp` with Gaussian `ζ` drawn from `seed`.
    RandomExp { bump: BumpSpec, seed: u64, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    pub event_tol: f64,
    /// Exit level set `{ρ = exit_level}`; zero is the true boundary.
    pub exit_level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_time: None,
            event_tol: 1e-12,
            exit_level: 0.0,
            h_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub boundary_points: usize,
    pub directions_per_point: usize,
    /// Lower bound on `−g(v, ν)` for sampled entries.
    pub min_inward: f64,
    /// Number of orbit samples cycled through the entries.
    pub charges: usize,
    /// Half-width of the boundary patch for flat boundaries.
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            boundary_points: 10,
            directions_per_point: 5,
            min_inward: 0.1,
            charges: 4,
            extent: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub samples_per_trajectory: usize,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self { samples_per_trajectory: 21 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntrySource {
    /// The inward entry grid of `[grid]`.
    Grid,
    /// Exactly the entries `recover-jet` will request.
    Recovery,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LensTableSpec {
    pub entries: EntrySource,
}

impl Default for LensTableSpec {
    fn default() -> Self {
        Self { entries: EntrySource::Grid }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitySpec {
    /// Two-point Gauss-Legendre panels per trajectory.
    pub panels: usize,
    /// Entries taken from the front of the grid; 0 means all.
    pub entries: usize,
    /// Also evaluate `I_w[F − F̃, c(A − Ã)]`.
    pub xray: bool,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        Self {
            panels: 32,
            entries: 0,
            xray: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverySpec {
    /// Explicit boundary points; when empty, `grid_points` points of the
    /// boundary grid are used.
    pub points: Vec<Vec<f64>>,
    pub grid_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub max_condition: f64,
    /// Orbit samples screened for a basis of the algebra.
    pub basis_samples: usize,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        Self {
            points: vec![],
            grid_points: 9,
            b: None,
            h: None,
            max_condition: 1e6,
            basis_samples: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvexitySpec {
    /// Convex function `f = c0 + a·z + ½ zᵀBz`; `|z|²/2` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<QuadraticSpec>,
    pub interior_points: usize,
    pub boundary_points: usize,
    pub directions: usize,
    pub lambdas: Vec<f64>,
}

impl Default for ConvexitySpec {
    fn default() -> Self {
        Self {
            function: None,
            interior_points: 50,
            boundary_points: 50,
            directions: 12,
            lambdas: vec![0.0, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub c0: f64,
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
}

/// The part of a scenario that determines lens data: group, metric,
/// boundary, domain and connection.
#[derive(Serialize)]
struct DataBlock<'a> {
    group: &'a GroupSpec,
    metric: &'a MetricSpec,
    boundary: &'a BoundarySpec,
    domain: &'a Option<BoxSpec>,
    connection: &'a ConnectionSpec,
}

fn sha256_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check_version()?;
        Ok(cfg)
    }

    /// Parses after applying `KEY=VAL` overrides on dotted paths, e.g.
    /// `integrator.rel_tol=1e-8`.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut doc, ov)?;
        }
        let cfg: Self = doc.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.check_version()?;
        Ok(cfg)
    }

    fn check_version(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    /// Hash of the whole configuration.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_toml())
    }

    /// Hash of the lens-data-determining block; lens tables carry it and
    /// recovery refuses tables whose hash differs.
    pub fn data_hash(&self) -> String {
        let block = DataBlock {
            group: &self.group,
            metric: &self.metric,
            boundary: &self.boundary,
            domain: &self.domain,
            connection: &self.connection,
        };
        sha256_hex(&toml::to_string(&block).expect("data block serializes"))
    }
}

fn apply_override(doc: &mut toml::Table, ov: &str) -> Result<(), CliError> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{ov}` is not KEY=VAL")))?;
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
