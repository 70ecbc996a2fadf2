//! Scenario documents: parsing, validation and field construction.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use geomqm_core::holonomy::spread_phases;
use geomqm_core::operators::{connection_from_components, phases_to_connection};
use geomqm_core::{Lattice, LatticeSpec, LinkField, Mass, MetricField, ScalarField, Topology};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Build,
    Reconstruct,
    Roundtrip,
    Geodesic,
    Maxwell,
    Holonomy,
    Evolve,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Build => "build",
            Task::Reconstruct => "reconstruct",
            Task::Roundtrip => "roundtrip",
            Task::Geodesic => "geodesic",
            Task::Maxwell => "maxwell",
            Task::Holonomy => "holonomy",
            Task::Evolve => "evolve",
        }
    }
}

/// Named closed-form profile of one real field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    Sine {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        axis: usize,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    GaussianBump {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    Polynomial {
        axis: usize,
        coefficients: Vec<f64>,
    },
}

impl Profile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Sine { offset, amplitude, axis, period, phase } => {
                offset + amplitude * (2.0 * PI * x[*axis] / period + phase).sin()
            }
            Profile::GaussianBump { offset, amplitude, center, width } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                offset + amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Profile::Polynomial { axis, coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x[*axis] + c)
            }
        }
    }

    fn validate(&self, field: &str, dim: usize) -> Result<(), ConfigError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{field}.{name}"), "must be finite"))
            }
        };
        let axis_ok = |axis: usize| {
            if axis < dim {
                Ok(())
            } else {
                Err(invalid(format!("{field}.axis"), format!("axis {axis} out of range for a {dim}-dimensional lattice")))
            }
        };
        match self {
            Profile::Constant { value } => finite("value", *value),
            Profile::Sine { offset, amplitude, axis, period, phase } => {
                finite("offset", *offset)?;
                finite("amplitude", *amplitude)?;
                finite("phase", *phase)?;
                axis_ok(*axis)?;
                if !(*period > 0.0) || !period.is_finite() {
                    return Err(invalid(format!("{field}.period"), "must be positive"));
                }
                Ok(())
            }
            Profile::GaussianBump { offset, amplitude, center, width } => {
                finite("offset", *offset)?;
                finite("amplitude", *amplitude)?;
                if center.len() != dim {
                    return Err(invalid(format!("{field}.center"), format!("needs {dim} coordinates, got {}", center.len())));
                }
                for c in center {
                    finite("center", *c)?;
                }
                if !(*width > 0.0) || !width.is_finite() {
                    return Err(invalid(format!("{field}.width"), "must be positive"));
                }
                Ok(())
            }
            Profile::Polynomial { axis, coefficients } => {
                axis_ok(*axis)?;
                if coefficients.is_empty() {
                    return Err(invalid(format!("{field}.coefficients"), "must not be empty"));
                }
                for c in coefficients {
                    finite("coefficients", *c)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub topology: Topology,
    pub sizes: Vec<usize>,
    /// One spacing per axis, or a single value for all axes.
    pub spacings: Vec<f64>,
}

/// Inverse metric `g^ij`; absent components default to the identity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub xx: Option<Profile>,
    pub xy: Option<Profile>,
    pub xz: Option<Profile>,
    pub yy: Option<Profile>,
    pub yz: Option<Profile>,
    pub zz: Option<Profile>,
}

impl MetricConfig {
    const AXES: [&'static str; 3] = ["x", "y", "z"];

    fn component(&self, k: usize, l: usize) -> (&'static str, Option<&Profile>) {
        let (k, l) = (k.min(l), k.max(l));
        match (k, l) {
            (0, 0) => ("xx", self.xx.as_ref()),
            (0, 1) => ("xy", self.xy.as_ref()),
            (0, 2) => ("xz", self.xz.as_ref()),
            (1, 1) => ("yy", self.yy.as_ref()),
            (1, 2) => ("yz", self.yz.as_ref()),
            _ => ("zz", self.zz.as_ref()),
        }
    }

    fn entries(&self) -> [(&'static str, Option<&Profile>); 6] {
        [
            ("xx", self.xx.as_ref()),
            ("xy", self.xy.as_ref()),
            ("xz", self.xz.as_ref()),
            ("yy", self.yy.as_ref()),
            ("yz", self.yz.as_ref()),
            ("zz", self.zz.as_ref()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionConfig {
    /// Continuum components `A_k`, one profile per axis.
    #[serde(default)]
    pub components: Vec<Profile>,
    /// Extra flat holonomy angles, one per periodic axis.
    #[serde(default)]
    pub holonomy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub connection: ConnectionConfig,
    pub potential: Option<Profile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default = "one")]
    pub samples: usize,
    #[serde(default = "one_f")]
    pub dt: f64,
    /// Per-sample factors on the lower metric `g_ij`.
    #[serde(default)]
    pub metric_scales: Vec<f64>,
    #[serde(default)]
    pub connection_scales: Vec<f64>,
    #[serde(default)]
    pub potential_scales: Vec<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            samples: 1,
            dt: 1.0,
            metric_scales: Vec::new(),
            connection_scales: Vec::new(),
            potential_scales: Vec::new(),
        }
    }
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Triplet dump of a Hamiltonian, relative to the scenario file.
    pub operator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicConfig {
    pub q0: Vec<f64>,
    pub v0: Vec<f64>,
    pub dt: f64,
    pub duration: f64,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomyConfig {
    #[serde(default)]
    pub alphas: Vec<f64>,
    pub grid: Option<GridConfig>,
    /// Torus only: uniform flux quanta added on top of the connection.
    pub flux_quanta: Option<i64>,
}

impl HolonomyConfig {
    pub fn samples(&self) -> Vec<f64> {
        let mut out = self.alphas.clone();
        if let Some(g) = &self.grid {
            if g.count == 1 {
                out.push(g.start);
            } else {
                out.extend((0..g.count).map(|k| g.start + (g.stop - g.start) * k as f64 / (g.count - 1) as f64));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub t1: f64,
    pub t2: f64,
    pub steps: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub observable_axis: usize,
}

fn default_delta() -> f64 {
    0.05
}

/// Thresholds for the embedded checks, before `--tol-scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub roundtrip: f64,
    pub cure: f64,
    pub axiom: f64,
    pub speed2_drift: f64,
    pub static_residual: f64,
    pub maxwell: f64,
    pub periodicity: f64,
    pub unitarity: f64,
    pub spectrum: f64,
    pub heisenberg_ratio_min: f64,
    pub heisenberg_ratio_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            roundtrip: 1e-9,
            cure: 0.05,
            axiom: 1e-9,
            speed2_drift: 1e-3,
            static_residual: 1e-12,
            maxwell: 1e-12,
            periodicity: 1e-9,
            unitarity: 1e-10,
            spectrum: 1e-10,
            heisenberg_ratio_min: 3.2,
            heisenberg_ratio_max: 4.8,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), ConfigError> {
        let all = [
            ("hermiticity", self.hermiticity),
            ("roundtrip", self.roundtrip),
            ("cure", self.cure),
            ("axiom", self.axiom),
            ("speed2_drift", self.speed2_drift),
            ("static_residual", self.static_residual),
            ("maxwell", self.maxwell),
            ("periodicity", self.periodicity),
            ("unitarity", self.unitarity),
            ("spectrum", self.spectrum),
            ("heisenberg_ratio_min", self.heisenberg_ratio_min),
            ("heisenberg_ratio_max", self.heisenberg_ratio_max),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("tolerances.{name}"), "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    pub mass: f64,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub fields: FieldsConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub input: InputConfig,
    pub geodesic: Option<GeodesicConfig>,
    pub holonomy: Option<HolonomyConfig>,
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Schema {
            path: "<document>".into(),
            message: e.to_string().trim().to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Schema {
                path: if path == "." { "<root>".into() } else { path },
                message: e.into_inner().message().trim().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// SHA-256 of the canonical JSON form, independent of comments and layout.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn lattice_spec(&self) -> LatticeSpec {
        let d = self.lattice.topology.dim();
        let spacings = if self.lattice.spacings.len() == 1 {
            vec![self.lattice.spacings[0]; d]
        } else {
            self.lattice.spacings.clone()
        };
        LatticeSpec::new(self.lattice.topology, &self.lattice.sizes, &spacings)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(invalid("mass", format!("must be positive and finite, got {}", self.mass)));
        }
        let spec = self.lattice_spec();
        spec.validate().map_err(|e| invalid("lattice", e.to_string()))?;
        let d = spec.topology.dim();
        let lattice = Lattice::new(spec).map_err(|e| invalid("lattice", e.to_string()))?;
        if lattice.num_sites() > 4096 {
            return Err(invalid("lattice.sizes", format!("{} sites exceed the 4096-site cap", lattice.num_sites())));
        }

        for (name, p) in self.fields.metric.entries() {
            if let Some(p) = p {
                if name.chars().any(|c| !MetricConfig::AXES[..d].contains(&c.to_string().as_str())) {
                    return Err(invalid(format!("fields.metric.{name}"), format!("no such component on a {d}-dimensional lattice")));
                }
                p.validate(&format!("fields.metric.{name}"), d)?;
            }
        }
        let c = &self.fields.connection;
        if !c.components.is_empty() && c.components.len() != d {
            return Err(invalid("fields.connection.components", format!("needs {d} profiles, got {}", c.components.len())));
        }
        for (k, p) in c.components.iter().enumerate() {
            p.validate(&format!("fields.connection.components[{k}]"), d)?;
        }
        let periodic = lattice.periodic_axes().len();
        if !c.holonomy.is_empty() && c.holonomy.len() != periodic {
            return Err(invalid(
                "fields.connection.holonomy",
                format!("needs one angle per periodic axis ({periodic}), got {}", c.holonomy.len()),
            ));
        }
        if c.holonomy.iter().any(|a| !a.is_finite()) {
            return Err(invalid("fields.connection.holonomy", "angles must be finite"));
        }
        if let Some(p) = &self.fields.potential {
            p.validate("fields.potential", d)?;
        }

        let t = &self.time;
        if t.samples == 0 {
            return Err(invalid("time.samples", "must be at least 1"));
        }
        if !(t.dt > 0.0) || !t.dt.is_finite() {
            return Err(invalid("time.dt", "must be positive"));
        }
        for (name, v) in [
            ("metric_scales", &t.metric_scales),
            ("connection_scales", &t.connection_scales),
            ("potential_scales", &t.potential_scales),
        ] {
            if !v.is_empty() && v.len() != t.samples {
                return Err(invalid(format!("time.{name}"), format!("needs {} entries, got {}", t.samples, v.len())));
            }
            if v.iter().any(|s| !s.is_finite()) {
                return Err(invalid(format!("time.{name}"), "entries must be finite"));
            }
        }
        if t.metric_scales.iter().any(|s| *s <= 0.0) {
            return Err(invalid("time.metric_scales", "entries must be positive"));
        }
        self.tolerances.validate()?;
        if self.tolerances.heisenberg_ratio_min >= self.tolerances.heisenberg_ratio_max {
            return Err(invalid("tolerances.heisenberg_ratio_min", "must be below heisenberg_ratio_max"));
        }

        match self.task {
            Task::Geodesic => {
                let g = self.geodesic.as_ref().ok_or_else(|| invalid("geodesic", "required for the geodesic task"))?;
                if g.q0.len() != d || g.v0.len() != d {
                    return Err(invalid("geodesic", format!("q0 and v0 need {d} components")));
                }
                if !(g.dt > 0.0) || !(g.duration >= g.dt) {
                    return Err(invalid("geodesic.dt", "need dt > 0 and duration >= dt"));
                }
                if let Some(eta) = g.eta {
                    if !(eta > 0.0) {
                        return Err(invalid("geodesic.eta", "must be positive"));
                    }
                }
            }
            Task::Holonomy => {
                let h = self.holonomy.as_ref().ok_or_else(|| invalid("holonomy", "required for the holonomy task"))?;
                if let Some(g) = &h.grid {
                    if g.count == 0 || !g.start.is_finite() || !g.stop.is_finite() {
                        return Err(invalid("holonomy.grid", "needs finite bounds and count >= 1"));
                    }
                }
                if lattice.topology() != Topology::Torus && h.samples().is_empty() {
                    return Err(invalid("holonomy", "needs alphas or a grid"));
                }
                if !matches!(lattice.topology(), Topology::Ring | Topology::Cylinder | Topology::Torus) {
                    return Err(invalid("lattice.topology", "holonomy needs a ring, cylinder or torus"));
                }
                if h.flux_quanta.is_some() && lattice.topology() != Topology::Torus {
                    return Err(invalid("holonomy.flux_quanta", "only meaningful on a torus"));
                }
                if h.samples().iter().any(|a| !a.is_finite()) {
                    return Err(invalid("holonomy.alphas", "must be finite"));
                }
            }
            Task::Evolve => {
                let e = self.evolve.as_ref().ok_or_else(|| invalid("evolve", "required for the evolve task"))?;
                if !(e.t2 > e.t1) || !e.t1.is_finite() || !e.t2.is_finite() {
                    return Err(invalid("evolve.t2", "must exceed t1"));
                }
                if e.steps == Some(0) {
                    return Err(invalid("evolve.steps", "must be at least 1"));
                }
                if !(e.delta > 0.0) {
                    return Err(invalid("evolve.delta", "must be positive"));
                }
                if e.observable_axis >= d {
                    return Err(invalid("evolve.observable_axis", "out of range"));
                }
            }
            Task::Maxwell => {
                if d > 2 {
                    return Err(invalid("lattice.topology", "the maxwell task supports 1- and 2-dimensional lattices"));
                }
                for name in ["xy", "xz", "yz"] {
                    if self.fields.metric.entries().iter().any(|(n, p)| *n == name && p.is_some()) {
                        return Err(invalid(format!("fields.metric.{name}"), "the maxwell task needs a diagonal metric"));
                    }
                }
                if t.samples < 2 {
                    return Err(invalid("time.samples", "the maxwell task needs at least 2 samples"));
                }
            }
            Task::Build | Task::Reconstruct | Task::Roundtrip => {}
        }
        if self.input.operator.is_some() && self.task != Task::Reconstruct {
            return Err(invalid("input.operator", "only the reconstruct task reads an operator file"));
        }
        Ok(())
    }
}

/// Fields evaluated on the lattice.
pub struct Fields {
    pub lattice: Lattice,
    pub mass: Mass,
    pub metric: MetricField,
    pub connection: LinkField,
    pub potential: ScalarField,
}

impl Fields {
    pub fn build(s: &Scenario) -> Result<Self, ConfigError> {
        let lattice = Lattice::new(s.lattice_spec()).map_err(|e| invalid("lattice", e.to_string()))?;
        let mass = Mass::new(s.mass).map_err(|e| invalid("mass", e.to_string()))?;
        let d = lattice.dim();
        let m = &s.fields.metric;
        let metric = MetricField::from_fn(&lattice, |x| {
            let mut out = Vec::with_capacity(d * d);
            for k in 0..d {
                for l in 0..d {
                    let v = match m.component(k, l).1 {
                        Some(p) => p.eval(x),
                        None if k == l => 1.0,
                        None => 0.0,
                    };
                    out.push(v);
                }
            }
            out
        });
        metric
            .check_positive_definite()
            .map_err(|e| invalid("fields.metric", e.to_string()))?;

        let c = &s.fields.connection;
        let mut connection = if c.components.is_empty() {
            LinkField::zeros(&lattice)
        } else {
            connection_from_components(&lattice, |x| c.components.iter().map(|p| p.eval(x)).collect())
        };
        if !c.holonomy.is_empty() {
            let flat = spread_phases(&lattice, &c.holonomy).map_err(|e| invalid("fields.connection.holonomy", e.to_string()))?;
            connection = connection.add(&phases_to_connection(&lattice, &flat));
        }
        let potential = match &s.fields.potential {
            Some(p) => ScalarField::from_fn(&lattice, |x| p.eval(x)),
            None => ScalarField::constant(&lattice, 0.0),
        };
        Ok(Self { lattice, mass, metric, connection, potential })
    }
}
