use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twisted_core::assembly::{DEFAULT_N_ANGULAR, DEFAULT_N_RADIAL, DEFAULT_TRUNCATION};
use twisted_core::system::DEFAULT_BOUNDARY_SAMPLES;
use twisted_core::{BranchSystem, Error, Result, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Validate,
    Assemble,
    Simulate,
    Moments,
    Limit,
    Example6,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Kind::Validate => "validate",
            Kind::Assemble => "assemble",
            Kind::Simulate => "simulate",
            Kind::Moments => "moments",
            Kind::Limit => "limit",
            Kind::Example6 => "example6",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    #[serde(default = "default_n_radial")]
    pub n_radial: usize,
    #[serde(default = "default_n_angular")]
    pub n_angular: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { n_radial: DEFAULT_N_RADIAL, n_angular: DEFAULT_N_ANGULAR }
    }
}

fn default_n_radial() -> usize {
    DEFAULT_N_RADIAL
}
fn default_n_angular() -> usize {
    DEFAULT_N_ANGULAR
}
fn default_sizes() -> Vec<usize> {
    vec![32]
}
fn default_order() -> usize {
    DEFAULT_TRUNCATION
}
fn default_trials() -> usize {
    100
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_max_power() -> u32 {
    4
}
fn default_boundary_samples() -> usize {
    DEFAULT_BOUNDARY_SAMPLES
}

/// Contents of an experiment file. Every field has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<Kind>,
    /// System definition, relative to the experiment file. Defaults to the Gauss
    /// branches `1/(2+z)`, `1/(3+z)` on `D(1, 3/2)` with `G ≡ 0`.
    pub system: Option<PathBuf>,
    #[serde(rename = "N", default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(rename = "L", default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Highest power for `limit`, and for restricted power traces in `moments` when
    /// `trace_powers` is set.
    #[serde(default = "default_max_power")]
    pub max_power: u32,
    #[serde(default)]
    pub trace_powers: bool,
    #[serde(default = "default_boundary_samples")]
    pub boundary_samples: usize,
}

impl Default for ConfigFile {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub sizes: Vec<usize>,
    pub order: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub system: BranchSystem,
    pub sizes: Vec<usize>,
    pub order: usize,
    pub quadrature: Quadrature,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub max_power: u32,
    pub trace_powers: bool,
    pub boundary_samples: usize,
}

/// What the hash covers: everything that influences numeric output.
#[derive(Serialize)]
struct HashedFields<'a> {
    kind: Kind,
    system: &'a str,
    sizes: &'a [usize],
    order: usize,
    quadrature: Quadrature,
    trials: usize,
    seed: u64,
    max_power: u32,
    trace_powers: bool,
    boundary_samples: usize,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let (file, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                let file: ConfigFile =
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let system = match &file.system {
            Some(rel) => {
                let path = base.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read system file {}: {e}", path.display())))?;
                BranchSystem::from_toml_str(&text)?
            }
            None => BranchSystem::gauss(&[2, 3], Weight::Zero)?,
        };
        let kind = overrides
            .kind
            .or(file.kind)
            .ok_or_else(|| Error::Config("no experiment kind given (use a subcommand, --kind or `kind` in the config)".into()))?;
        let cfg = Self {
            kind,
            system,
            sizes: if overrides.sizes.is_empty() { file.sizes } else { overrides.sizes },
            order: overrides.order.unwrap_or(file.order),
            quadrature: file.quadrature,
            trials: overrides.trials.unwrap_or(file.trials),
            seed: overrides.seed.unwrap_or(file.seed),
            out: overrides.out.unwrap_or(file.out),
            max_power: file.max_power,
            trace_powers: file.trace_powers,
            boundary_samples: file.boundary_samples,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("L", self.order),
            ("trials", self.trials),
            ("quadrature.n_radial", self.quadrature.n_radial),
            ("quadrature.n_angular", self.quadrature.n_angular),
            ("boundary_samples", self.boundary_samples),
            ("max_power", self.max_power as usize),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config("N must be a nonempty list of positive sizes".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical form of the numeric inputs; the output directory and
    /// thread count are excluded.
    pub fn hash(&self) -> Result<String> {
        let system = self.system.to_toml_string()?;
        let fields = HashedFields {
            kind: self.kind,
            system: &system,
            sizes: &self.sizes,
            order: self.order,
            quadrature: self.quadrature,
            trials: self.trials,
            seed: self.seed,
            max_power: self.max_power,
            trace_powers: self.trace_powers,
            boundary_samples: self.boundary_samples,
        };
        let digest = Sha256::digest(serde_json::to_vec(&fields)?);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
