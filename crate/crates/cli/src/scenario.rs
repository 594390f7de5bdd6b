//! Scenario files (TOML) and their validation.
//!
//! ```toml
//! name = "my-run"
//! model = "both"                # pbcs | kbcs | both
//! t0 = "derive"                 # or: t0 = { fixed = 4.3366 }
//! checks = ["conservation", "entropy"]
//!
//! [topology]
//! matrix = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]   # or: metric = 0.5
//!
//! [initial]
//! x = [0.2108, -0.35, 0.1392]   # one number per particle when d = 1,
//! u = [1.0, 2.0, -3.0]          # otherwise one row per particle
//! T = [3.0, 0.01, 3.0]
//! # or: random = { n = 4, d = 1, seed = 7 }
//!
//! [integrator]
//! scheme = "rk4"                # rk4 | euler
//! dt = 0.001
//! t_end = 10.0
//! record_every = 10
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thermoflock_core::integrate::ADMISSIBILITY_TOL;
use thermoflock_core::{IntegratorConfig, MixtureState, Model, ReferenceTemperature, Scheme, Topology};

use crate::builtins;
use crate::error::CliError;

/// Allowed gap between a fixed `T0` and the value implied by the data.
pub const T0_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Pbcs,
    Kbcs,
    Both,
}

impl ModelChoice {
    pub fn models(self) -> Vec<Model> {
        match self {
            ModelChoice::Pbcs => vec![Model::Pbcs],
            ModelChoice::Kbcs => vec![Model::Kbcs],
            ModelChoice::Both => vec![Model::Pbcs, Model::Kbcs],
        }
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pbcs" => Ok(Self::Pbcs),
            "kbcs" => Ok(Self::Kbcs),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown model '{other}' (pbcs, kbcs, both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Matrix(Vec<Vec<f64>>),
    Metric(f64),
}

/// Per-particle vectors: bare numbers for `d = 1`, rows otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rows {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl Rows {
    fn into_rows(self) -> Vec<Vec<f64>> {
        match self {
            Rows::Scalars(v) => v.into_iter().map(|x| vec![x]).collect(),
            Rows::Vectors(v) => v,
        }
    }

    fn from_flat(flat: &[f64], d: usize) -> Self {
        if d == 1 {
            Rows::Scalars(flat.to_vec())
        } else {
            Rows::Vectors(flat.chunks(d).map(<[f64]>::to_vec).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub n: usize,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Rows>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T0Mode {
    #[default]
    Derive,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn default_scheme() -> String {
    "rk4".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckName {
    Conservation,
    Entropy,
    Envelope,
    Deviation,
    Nonmonotonicity,
    Oracle,
}

impl CheckName {
    pub const ALL: [CheckName; 6] = [
        CheckName::Conservation,
        CheckName::Entropy,
        CheckName::Envelope,
        CheckName::Deviation,
        CheckName::Nonmonotonicity,
        CheckName::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::Conservation => "conservation",
            CheckName::Entropy => "entropy",
            CheckName::Envelope => "envelope",
            CheckName::Deviation => "deviation",
            CheckName::Nonmonotonicity => "nonmonotonicity",
            CheckName::Oracle => "oracle",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown check '{s}'"))
    }
}

/// The on-disk scenario schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: ModelChoice,
    #[serde(default)]
    pub t0: T0Mode,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    pub topology: TopologySpec,
    pub initial: InitialSpec,
    pub integrator: IntegratorSpec,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ModelChoice>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
    pub checks: Option<Vec<CheckName>>,
    pub seed: Option<u64>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario schema serializes to TOML")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.model {
            self.model = m;
        }
        if let Some(dt) = o.dt {
            self.integrator.dt = dt;
        }
        if let Some(t) = o.t_end {
            self.integrator.t_end = t;
        }
        if let Some(s) = o.scheme {
            self.integrator.scheme = s.name().into();
        }
        if let Some(c) = &o.checks {
            self.checks = c.clone();
        }
        if let (Some(seed), Some(r)) = (o.seed, self.initial.random.as_mut()) {
            r.seed = Some(seed);
        }
    }
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: ModelChoice,
    pub topology: Topology,
    pub initial: MixtureState,
    pub t0: ReferenceTemperature,
    pub config: IntegratorConfig,
    pub checks: Vec<CheckName>,
}

impl Scenario {
    pub fn models(&self) -> Vec<Model> {
        self.model.models()
    }

    pub fn from_file(file: &ScenarioFile, default_name: &str) -> Result<Self, CliError> {
        let config = build_config(&file.integrator)?;
        let initial = build_initial(&file.initial, !file.checks.is_empty())?.normalize_frame();
        let topology = match &file.topology {
            TopologySpec::Matrix(rows) => Topology::from_rows(rows),
            TopologySpec::Metric(lambda) => Topology::metric(*lambda),
        }
        .map_err(|e| CliError::invalid("topology", e))?;
        topology
            .check_size(initial.n())
            .map_err(|e| CliError::invalid("topology", e))?;
        let derived = initial.derive_t0().map_err(|e| CliError::invalid("initial.T", e))?;
        let t0 = match file.t0 {
            T0Mode::Derive => derived,
            T0Mode::Fixed(v) => {
                let given = ReferenceTemperature::new(v).map_err(|e| CliError::invalid("t0", e))?;
                if (v - derived.value()).abs() > T0_TOL {
                    return Err(CliError::T0Mismatch {
                        given: v,
                        derived: derived.value(),
                    });
                }
                given
            }
        };
        let report = initial.validate_initial(t0, ADMISSIBILITY_TOL);
        if !report.is_admissible() {
            return Err(CliError::invalid("initial", format!("{:?}", report.violations())));
        }
        let mut checks = Vec::new();
        for c in &file.checks {
            if !checks.contains(c) {
                checks.push(*c);
            }
        }
        if checks.contains(&CheckName::Deviation) {
            if file.model != ModelChoice::Both {
                return Err(CliError::invalid("checks", "deviation needs model = \"both\""));
            }
            if !matches!(topology, Topology::ConstantSymmetric(_)) {
                return Err(CliError::invalid("checks", "deviation needs a constant matrix topology"));
            }
        }
        if checks.contains(&CheckName::Oracle) && !topology.is_uniform() {
            return Err(CliError::invalid(
                "checks",
                "oracle compares with the closed form for unit weights; the matrix is not uniform",
            ));
        }
        Ok(Self {
            name: file.name.clone().unwrap_or_else(|| default_name.to_string()),
            model: file.model,
            topology,
            initial,
            t0,
            config,
            checks,
        })
    }
}

fn build_config(spec: &IntegratorSpec) -> Result<IntegratorConfig, CliError> {
    let scheme: Scheme = spec
        .scheme
        .parse()
        .map_err(|e| CliError::invalid("integrator.scheme", e))?;
    IntegratorConfig::new(scheme, spec.dt, spec.t_end, spec.record_every)
        .map_err(|e| CliError::invalid("integrator", e))
}

fn build_initial(spec: &InitialSpec, checking: bool) -> Result<MixtureState, CliError> {
    if let Some(r) = &spec.random {
        if spec.x.is_some() || spec.u.is_some() || spec.temperature.is_some() {
            return Err(CliError::invalid("initial", "give either explicit x/u/T or random, not both"));
        }
        let seed = match r.seed {
            Some(s) => s,
            None if checking => {
                return Err(CliError::invalid(
                    "initial.random.seed",
                    "random initial data need a seed when checks are requested (use --seed)",
                ))
            }
            None => rand::random(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return MixtureState::random_admissible(&mut rng, r.n, r.d).map_err(|e| CliError::invalid("initial.random", e));
    }
    let x = spec.x.clone().ok_or_else(|| CliError::invalid("initial.x", "missing"))?;
    let u = spec.u.clone().ok_or_else(|| CliError::invalid("initial.u", "missing"))?;
    let temp = spec
        .temperature
        .clone()
        .ok_or_else(|| CliError::invalid("initial.T", "missing"))?;
    let (x, u) = (x.into_rows(), u.into_rows());
    let n = temp.len();
    if x.len() != n {
        return Err(CliError::invalid("initial.x", format!("{} rows for {n} particles", x.len())));
    }
    if u.len() != n {
        return Err(CliError::invalid("initial.u", format!("{} rows for {n} particles", u.len())));
    }
    let d = x.first().map_or(0, Vec::len);
    if let Some(bad) = x.iter().position(|r| r.len() != d) {
        return Err(CliError::invalid("initial.x", format!("row {} has length {}, expected {d}", bad + 1, x[bad].len())));
    }
    if let Some(bad) = u.iter().position(|r| r.len() != d) {
        return Err(CliError::invalid("initial.u", format!("row {} has length {}, expected {d}", bad + 1, u[bad].len())));
    }
    if let Some(bad) = temp.iter().position(|&t| !(t > 0.0)) {
        return Err(CliError::invalid("initial.T", format!("T_{} = {} is not positive", bad + 1, temp[bad])));
    }
    MixtureState::from_rows(&x, &u, &temp).map_err(|e| CliError::invalid("initial", e))
}

/// Serializes a state back into the explicit initial-data form.
pub fn initial_spec(state: &MixtureState) -> InitialSpec {
    InitialSpec {
        x: Some(Rows::from_flat(state.positions(), state.d())),
        u: Some(Rows::from_flat(state.velocities(), state.d())),
        temperature: Some(state.temperatures().to_vec()),
        random: None,
    }
}

/// Resolves `builtin:NAME` or a filesystem path to a scenario file.
pub fn resolve(source: &str) -> Result<(ScenarioFile, String), CliError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let file = builtins::builtin(name).ok_or_else(|| CliError::UnknownBuiltin(name.to_string()))?;
        return Ok((file, name.to_string()));
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let stem = path
        .file_stem()
        .map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned());
    Ok((ScenarioFile::from_toml(&text, source)?, stem))
}

/// Reads and validates a scenario from `builtin:NAME` or a path.
pub fn load_scenario(source: &str) -> Result<Scenario, CliError> {
    load_with(source, &Overrides::default())
}

pub fn load_with(source: &str, overrides: &Overrides) -> Result<Scenario, CliError> {
    let (mut file, name) = resolve(source)?;
    file.apply(overrides);
    Scenario::from_file(&file, &name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
model = "kbcs"

[topology]
matrix = [[0, 1], [1, 0]]

[initial]
x = [0.5, -0.5]
u = [1.0, -1.0]
T = [1.0, 2.0]

[integrator]
dt = 0.01
t_end = 1.0
"#;

    fn parse(text: &str) -> Result<Scenario, CliError> {
        Scenario::from_file(&ScenarioFile::from_toml(text, "test.toml")?, "test")
    }

    #[test]
    fn minimal_file_loads() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.model, ModelChoice::Kbcs);
        assert_eq!(s.t0.value(), 2.0);
        assert_eq!(s.config.scheme, Scheme::Rk4);
        assert_eq!(s.config.record_every, 1);
        assert_eq!(s.name, "test");
    }

    #[test]
    fn asymmetric_matrix_is_named() {
        let text = MINIMAL.replace("[[0, 1], [1, 0]]", "[[0, 1], [2, 0]]");
        match parse(&text) {
            Err(CliError::Invalid { field, .. }) => assert_eq!(field, "topology"),
            other => panic!("expected invalid topology, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = MINIMAL.replace("dt = 0.01", "dt = oops");
        let err = parse(&text).unwrap_err();
        assert!(matches!(err, CliError::Parse { .. }));
        assert!(err.to_string().contains("line"), "{err}");
        let unknown = MINIMAL.replace("dt = 0.01", "dt = 0.01\nstep = 3");
        assert!(parse(&unknown).unwrap_err().to_string().contains("step"));
    }

    #[test]
    fn fixed_t0_is_cross_checked() {
        let ok = MINIMAL.replace("model = \"kbcs\"", "model = \"kbcs\"\nt0 = { fixed = 2.0 }");
        assert_eq!(parse(&ok).unwrap().t0.value(), 2.0);
        let bad = MINIMAL.replace("model = \"kbcs\"", "model = \"kbcs\"\nt0 = { fixed = 2.1 }");
        assert!(matches!(parse(&bad), Err(CliError::T0Mismatch { .. })));
    }

    #[test]
    fn frame_is_normalized_on_load() {
        let text = MINIMAL.replace("u = [1.0, -1.0]", "u = [2.0, 0.0]");
        let s = parse(&text).unwrap();
        assert_eq!(s.initial.velocities(), &[1.0, -1.0]);
    }

    #[test]
    fn field_errors() {
        let missing_t = MINIMAL.replace("T = [1.0, 2.0]", "");
        assert!(matches!(parse(&missing_t), Err(CliError::Invalid { field: "initial.T", .. })));
        let short_u = MINIMAL.replace("u = [1.0, -1.0]", "u = [1.0]");
        assert!(matches!(parse(&short_u), Err(CliError::Invalid { field: "initial.u", .. })));
        let cold = MINIMAL.replace("T = [1.0, 2.0]", "T = [1.0, -2.0]");
        assert!(matches!(parse(&cold), Err(CliError::Invalid { field: "initial.T", .. })));
        let scheme = MINIMAL.replace("dt = 0.01", "dt = 0.01\nscheme = \"rk45\"");
        assert!(matches!(parse(&scheme), Err(CliError::Invalid { field: "integrator.scheme", .. })));
        let dev = MINIMAL.replace("model = \"kbcs\"", "model = \"kbcs\"\nchecks = [\"deviation\"]");
        assert!(matches!(parse(&dev), Err(CliError::Invalid { field: "checks", .. })));
    }

    #[test]
    fn random_data_need_seed_for_checks() {
        let text = r#"
model = "kbcs"
checks = ["conservation"]
topology = { metric = 0.5 }
initial = { random = { n = 4 } }
integrator = { dt = 0.01, t_end = 1.0 }
"#;
        assert!(matches!(parse(text), Err(CliError::Invalid { field: "initial.random.seed", .. })));
        let mut file = ScenarioFile::from_toml(text, "t").unwrap();
        file.apply(&Overrides {
            seed: Some(9),
            ..Overrides::default()
        });
        let a = Scenario::from_file(&file, "t").unwrap();
        let b = Scenario::from_file(&file, "t").unwrap();
        assert_eq!(a.initial, b.initial);
        assert_eq!(a.initial.n(), 4);
    }

    #[test]
    fn vector_rows_for_higher_dimensions() {
        let text = MINIMAL
            .replace("x = [0.5, -0.5]", "x = [[0.5, 0.0], [-0.5, 0.0]]")
            .replace("u = [1.0, -1.0]", "u = [[1.0, 0.0], [-1.0, 0.0]]");
        let s = parse(&text).unwrap();
        assert_eq!(s.initial.d(), 2);
        let spec = initial_spec(&s.initial);
        assert!(matches!(spec.x, Some(Rows::Vectors(_))));
    }

    #[test]
    fn check_names_parse() {
        assert_eq!("Entropy".parse::<CheckName>().unwrap(), CheckName::Entropy);
        assert!("speed".parse::<CheckName>().is_err());
        assert_eq!("both".parse::<ModelChoice>().unwrap(), ModelChoice::Both);
    }
}
