//! Configuration ingestion: a sectioned TOML file with every key
//! optional, resolved against the built-in defaults, then validated.
//! The resolved configuration hashes to a stable digest used for run
//! manifests and reproducibility checks.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::game_model::{ActionGrids, EconParams, LossModelParams};
use crate::learners::{EpsilonSchedule, WolfParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which learning rule a side of the game uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "wolf-phc")]
    WolfPhc,
    #[serde(rename = "q-learning")]
    QLearning,
    #[serde(rename = "greedy")]
    Greedy,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::WolfPhc, Scheme::QLearning, Scheme::Greedy];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::WolfPhc => "wolf-phc",
            Scheme::QLearning => "q-learning",
            Scheme::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wolf-phc" => Ok(Scheme::WolfPhc),
            "q-learning" => Ok(Scheme::QLearning),
            "greedy" => Ok(Scheme::Greedy),
            other => Err(ConfigError::Invalid(format!(
                "unknown scheme '{other}'; valid schemes: wolf-phc, q-learning, greedy"
            ))),
        }
    }
}

/// Sampling ranges and shared constants of the data-owner population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    pub c_min: f64,
    pub c_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub batch_size: u32,
    pub lipschitz: f64,
    pub data_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    /// Trailing window length, in iterations.
    pub window: usize,
    /// Threshold on the window range of mean saved noise and mean payment.
    pub threshold: f64,
    /// Stop the run once converged.
    pub early_stop: bool,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub num_dos: usize,
    pub max_iterations: u64,
    pub master_seed: u64,
    pub do_scheme: Scheme,
    pub curator_scheme: Scheme,
    pub parallel: bool,
    pub ne_epsilon: f64,
    pub grids: ActionGrids,
    pub econ: EconParams,
    pub loss: LossModelParams,
    pub population: PopulationParams,
    pub wolf: WolfParams,
    pub epsilon: EpsilonSchedule,
    pub convergence: ConvergenceParams,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            num_dos: 100,
            max_iterations: 20_000,
            master_seed: 0,
            do_scheme: Scheme::WolfPhc,
            curator_scheme: Scheme::WolfPhc,
            parallel: true,
            ne_epsilon: 0.05,
            grids: ActionGrids {
                price_intervals: 32,
                noise_intervals: 12,
                p_max: 16.0,
                sigma_max: 0.6,
            },
            econ: EconParams {
                lambda_r: 0.08,
                nu: 2.5,
                varpi: 0.6,
                lambda_s: 0.2,
                mu: 0.13,
                zeta_1: 35.4278,
                zeta_2: 102.2444,
            },
            loss: LossModelParams {
                gamma_1: 0.013,
                gamma_2: 0.0044,
                gamma_3: 0.0057,
                gamma_4: 8.18,
                gamma_5: 0.14,
                sigma_max: 0.6,
            },
            population: PopulationParams {
                c_min: 0.5,
                c_max: 4.0,
                beta_min: 0.05,
                beta_max: 20.0,
                batch_size: 64,
                lipschitz: 1.0,
                data_size: 600,
            },
            wolf: WolfParams {
                eta: 0.5,
                discount: 0.8,
                psi_base: 50.0,
                psi_slope: 50.0,
                psi_l_multiplier: 2.0,
            },
            epsilon: EpsilonSchedule {
                floor: 0.05,
                decay: 200.0,
            },
            convergence: ConvergenceParams {
                window: 100,
                threshold: 1e-3,
                early_stop: true,
            },
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| ConfigError::Invalid(msg);
        if self.num_dos == 0 {
            return Err(invalid("num_dos must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be >= 1".into()));
        }
        ActionGrids::new(
            self.grids.price_intervals,
            self.grids.noise_intervals,
            self.grids.p_max,
            self.grids.sigma_max,
        )
        .map_err(|e| invalid(e.to_string()))?;
        self.econ.validate().map_err(|e| invalid(e.to_string()))?;
        self.loss.validate().map_err(|e| invalid(e.to_string()))?;
        if self.loss.sigma_max != self.grids.sigma_max {
            return Err(invalid("loss sigma_max must equal grids sigma_max".into()));
        }
        let p = &self.population;
        if !(p.c_min > 0.0) || p.c_min > p.c_max {
            return Err(invalid(format!(
                "privacy cost range [{}, {}] invalid: need 0 < c_min <= c_max",
                p.c_min, p.c_max
            )));
        }
        if !(p.beta_min > 0.0) || p.beta_min > p.beta_max {
            return Err(invalid(format!(
                "non-IID range [{}, {}] invalid: need 0 < beta_min <= beta_max",
                p.beta_min, p.beta_max
            )));
        }
        if p.batch_size == 0 {
            return Err(invalid("batch_size must be >= 1".into()));
        }
        if !(p.lipschitz > 0.0) {
            return Err(invalid("lipschitz must be > 0".into()));
        }
        let w = &self.wolf;
        if !(w.eta > 0.0 && w.eta <= 1.0) {
            return Err(invalid("eta must be in (0, 1]".into()));
        }
        if !(w.discount > 0.0 && w.discount <= 1.0) {
            return Err(invalid("discount must be in (0, 1]".into()));
        }
        if !(w.psi_base > 0.0) || !(w.psi_slope > 0.0) {
            return Err(invalid("psi_base and psi_slope must be > 0".into()));
        }
        if !(w.psi_l_multiplier > 1.0) {
            return Err(invalid(
                "psi_l_multiplier must be > 1 (losing step exceeds winning)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon.floor) {
            return Err(invalid("epsilon_floor must be in [0, 1]".into()));
        }
        if !(self.epsilon.decay > 0.0) {
            return Err(invalid("epsilon_decay must be > 0".into()));
        }
        if self.convergence.window < 2 {
            return Err(invalid("convergence window must be >= 2".into()));
        }
        if !(self.convergence.threshold > 0.0) {
            return Err(invalid("convergence threshold must be > 0".into()));
        }
        if !(self.ne_epsilon > 0.0) {
            return Err(invalid("ne epsilon must be > 0".into()));
        }
        Ok(())
    }

    /// Stable digest of the resolved configuration.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex_string(&digest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_resolved_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: GameConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

// Raw file schema: every key optional, unknown keys rejected.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    game: RawGame,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    econ: RawEcon,
    #[serde(default)]
    loss: RawLoss,
    #[serde(default)]
    population: RawPopulation,
    #[serde(default)]
    learning: RawLearning,
    #[serde(default)]
    convergence: RawConvergence,
    #[serde(default)]
    ne: RawNe,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    num_dos: Option<usize>,
    max_iterations: Option<u64>,
    master_seed: Option<u64>,
    do_scheme: Option<String>,
    curator_scheme: Option<String>,
    /// Sets both sides at once; the per-side keys take precedence.
    scheme: Option<String>,
    parallel: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    price_intervals: Option<usize>,
    noise_intervals: Option<usize>,
    p_max: Option<f64>,
    sigma_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEcon {
    lambda_r: Option<f64>,
    nu: Option<f64>,
    varpi: Option<f64>,
    lambda_s: Option<f64>,
    mu: Option<f64>,
    zeta_1: Option<f64>,
    zeta_2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoss {
    gamma_1: Option<f64>,
    gamma_2: Option<f64>,
    gamma_3: Option<f64>,
    gamma_4: Option<f64>,
    gamma_5: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPopulation {
    c_min: Option<f64>,
    c_max: Option<f64>,
    beta_min: Option<f64>,
    beta_max: Option<f64>,
    batch_size: Option<u32>,
    lipschitz: Option<f64>,
    data_size: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLearning {
    eta: Option<f64>,
    discount: Option<f64>,
    psi_base: Option<f64>,
    psi_slope: Option<f64>,
    psi_l_multiplier: Option<f64>,
    epsilon_floor: Option<f64>,
    epsilon_decay: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    window: Option<usize>,
    threshold: Option<f64>,
    early_stop: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNe {
    epsilon: Option<f64>,
}

/// Parses a config file and resolves it against the defaults.
pub fn load_config(path: impl AsRef<Path>) -> Result<GameConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Same as [`load_config`] but from an in-memory string.
pub fn parse_config(text: &str) -> Result<GameConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let mut cfg = GameConfig::default();

    if let Some(v) = raw.game.num_dos {
        cfg.num_dos = v;
    }
    if let Some(v) = raw.game.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = raw.game.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = &raw.game.scheme {
        let s: Scheme = v.parse()?;
        cfg.do_scheme = s;
        cfg.curator_scheme = s;
    }
    if let Some(v) = &raw.game.do_scheme {
        cfg.do_scheme = v.parse()?;
    }
    if let Some(v) = &raw.game.curator_scheme {
        cfg.curator_scheme = v.parse()?;
    }
    if let Some(v) = raw.game.parallel {
        cfg.parallel = v;
    }

    if let Some(v) = raw.grids.price_intervals {
        cfg.grids.price_intervals = v;
    }
    if let Some(v) = raw.grids.noise_intervals {
        cfg.grids.noise_intervals = v;
    }
    if let Some(v) = raw.grids.p_max {
        cfg.grids.p_max = v;
    }
    if let Some(v) = raw.grids.sigma_max {
        cfg.grids.sigma_max = v;
        cfg.loss.sigma_max = v;
    }

    if let Some(v) = raw.econ.lambda_r {
        cfg.econ.lambda_r = v;
    }
    if let Some(v) = raw.econ.nu {
        cfg.econ.nu = v;
    }
    if let Some(v) = raw.econ.varpi {
        cfg.econ.varpi = v;
    }
    if let Some(v) = raw.econ.lambda_s {
        cfg.econ.lambda_s = v;
    }
    if let Some(v) = raw.econ.mu {
        cfg.econ.mu = v;
    }
    if let Some(v) = raw.econ.zeta_1 {
        cfg.econ.zeta_1 = v;
    }
    if let Some(v) = raw.econ.zeta_2 {
        cfg.econ.zeta_2 = v;
    }

    if let Some(v) = raw.loss.gamma_1 {
        cfg.loss.gamma_1 = v;
    }
    if let Some(v) = raw.loss.gamma_2 {
        cfg.loss.gamma_2 = v;
    }
    if let Some(v) = raw.loss.gamma_3 {
        cfg.loss.gamma_3 = v;
    }
    if let Some(v) = raw.loss.gamma_4 {
        cfg.loss.gamma_4 = v;
    }
    if let Some(v) = raw.loss.gamma_5 {
        cfg.loss.gamma_5 = v;
    }

    if let Some(v) = raw.population.c_min {
        cfg.population.c_min = v;
    }
    if let Some(v) = raw.population.c_max {
        cfg.population.c_max = v;
    }
    if let Some(v) = raw.population.beta_min {
        cfg.population.beta_min = v;
    }
    if let Some(v) = raw.population.beta_max {
        cfg.population.beta_max = v;
    }
    if let Some(v) = raw.population.batch_size {
        cfg.population.batch_size = v;
    }
    if let Some(v) = raw.population.lipschitz {
        cfg.population.lipschitz = v;
    }
    if let Some(v) = raw.population.data_size {
        cfg.population.data_size = v;
    }

    if let Some(v) = raw.learning.eta {
        cfg.wolf.eta = v;
    }
    if let Some(v) = raw.learning.discount {
        cfg.wolf.discount = v;
    }
    if let Some(v) = raw.learning.psi_base {
        cfg.wolf.psi_base = v;
    }
    if let Some(v) = raw.learning.psi_slope {
        cfg.wolf.psi_slope = v;
    }
    if let Some(v) = raw.learning.psi_l_multiplier {
        cfg.wolf.psi_l_multiplier = v;
    }
    if let Some(v) = raw.learning.epsilon_floor {
        cfg.epsilon.floor = v;
    }
    if let Some(v) = raw.learning.epsilon_decay {
        cfg.epsilon.decay = v;
    }

    if let Some(v) = raw.convergence.window {
        cfg.convergence.window = v;
    }
    if let Some(v) = raw.convergence.threshold {
        cfg.convergence.threshold = v;
    }
    if let Some(v) = raw.convergence.early_stop {
        cfg.convergence.early_stop = v;
    }

    if let Some(v) = raw.ne.epsilon {
        cfg.ne_epsilon = v;
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Metadata written next to every run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    /// Unix timestamps, seconds; excluded from the hashed content.
    pub started_at: u64,
    pub finished_at: u64,
    pub output_paths: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &GameConfig) -> Self {
        Self {
            config_hash: config.hash(),
            master_seed: config.master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: unix_now(),
            finished_at: 0,
            output_paths: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_at = unix_now();
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_config_resolves_to_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.num_dos, 100);
        assert_eq!(cfg.grids.price_intervals, 32);
        assert_eq!(cfg.grids.noise_intervals, 12);
        assert_abs_diff_eq!(cfg.grids.p_max, 16.0);
        assert_abs_diff_eq!(cfg.grids.sigma_max, 0.6);
        assert_abs_diff_eq!(cfg.econ.zeta_1, 35.4278);
        assert_abs_diff_eq!(cfg.econ.zeta_2, 102.2444);
        assert_abs_diff_eq!(cfg.econ.varpi, 0.6);
        assert_abs_diff_eq!(cfg.econ.lambda_s, 0.2);
        assert_abs_diff_eq!(cfg.econ.lambda_r, 0.08);
        assert_abs_diff_eq!(cfg.econ.mu, 0.13);
        assert_abs_diff_eq!(cfg.econ.nu, 2.5);
        assert_abs_diff_eq!(cfg.loss.gamma_1, 0.013);
        assert_abs_diff_eq!(cfg.loss.gamma_4, 8.18);
        assert_abs_diff_eq!(cfg.wolf.discount, 0.8);
        assert_abs_diff_eq!(cfg.wolf.psi_win(0), 0.02);
        assert_abs_diff_eq!(cfg.population.c_min, 0.5);
        assert_abs_diff_eq!(cfg.population.beta_max, 20.0);
        assert_eq!(cfg.do_scheme, Scheme::WolfPhc);
        assert_eq!(cfg, GameConfig::default());
    }

    #[test]
    fn zero_intervals_rejected() {
        let err = parse_config("[grids]\nprice_intervals = 0\n").unwrap_err();
        assert!(err.to_string().contains("price_intervals"), "{err}");
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = parse_config("[econ]\nbogus = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("lambda_r"), "should list valid keys: {msg}");
        assert!(parse_config("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn override_is_reflected_and_changes_hash() {
        let base = parse_config("").unwrap();
        let cfg = parse_config("[learning]\neta = 0.3\n").unwrap();
        assert_abs_diff_eq!(cfg.wolf.eta, 0.3);
        assert_ne!(base.hash(), cfg.hash());
        // Resolution is pure.
        assert_eq!(
            cfg.hash(),
            parse_config("[learning]\neta = 0.3\n").unwrap().hash()
        );
    }

    #[test]
    fn scheme_parsing() {
        let cfg = parse_config("[game]\nscheme = \"greedy\"\n").unwrap();
        assert_eq!(cfg.do_scheme, Scheme::Greedy);
        assert_eq!(cfg.curator_scheme, Scheme::Greedy);
        let cfg =
            parse_config("[game]\nscheme = \"greedy\"\ncurator_scheme = \"q-learning\"\n").unwrap();
        assert_eq!(cfg.do_scheme, Scheme::Greedy);
        assert_eq!(cfg.curator_scheme, Scheme::QLearning);
        assert!(parse_config("[game]\nscheme = \"sarsa\"\n").is_err());
    }

    #[test]
    fn resolved_round_trip() {
        let cfg = parse_config("[game]\nnum_dos = 7\nmaster_seed = 99\n").unwrap();
        let text = cfg.to_toml();
        let back = GameConfig::from_resolved_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn invalid_ranges_name_the_field() {
        let err = parse_config("[population]\nc_min = 5.0\nc_max = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("c_min"), "{err}");
        let err = parse_config("[learning]\npsi_l_multiplier = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("psi_l_multiplier"), "{err}");
    }
}
