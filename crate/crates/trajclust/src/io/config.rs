//! Flat key-value run configuration and run manifests.
//!
//! The text form is one `key = value` per line. Blank lines and lines
//! starting with `#` are ignored. Unknown keys are hard errors, so a
//! misspelled hyperparameter can never fall back to a default silently.
//! A manifest is the same document with the resolved command prepended
//! as a comment, which makes every manifest directly loadable as a
//! config file.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::autoencoder::ArchConfig;
use crate::baselines::{DistanceMetric, Linkage};
use crate::error::{Error, Result};
use crate::optimizer::TrainConfig;
use crate::simulation::SimulationConfig;

/// How the `cluster` stage groups embedded points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    Kmeans,
    Single,
    Complete,
    Average,
}

impl ClusterMethod {
    /// The agglomerative linkage this method maps to; `None` for k-means.
    pub fn linkage(self) -> Option<Linkage> {
        match self {
            ClusterMethod::Kmeans => None,
            ClusterMethod::Single => Some(Linkage::Single),
            ClusterMethod::Complete => Some(Linkage::Complete),
            ClusterMethod::Average => Some(Linkage::Average),
        }
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(ClusterMethod::Kmeans),
            "single" => Ok(ClusterMethod::Single),
            "complete" => Ok(ClusterMethod::Complete),
            "average" => Ok(ClusterMethod::Average),
            other => Err(Error::InvalidConfig(format!("unknown cluster method `{other}`"))),
        }
    }
}

impl std::fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClusterMethod::Kmeans => "kmeans",
            ClusterMethod::Single => "single",
            ClusterMethod::Complete => "complete",
            ClusterMethod::Average => "average",
        })
    }
}

/// Every knob of every pipeline stage, resolved to concrete values.
///
/// The single top-level `seed` feeds the training and simulation seeds;
/// they are not separate keys. The architecture's input size is fixed by
/// the univariate trajectory schema and is likewise not a key.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub arch: ArchConfig,
    pub train: TrainConfig,
    pub sim: SimulationConfig,
    pub cluster_method: ClusterMethod,
    pub cluster_k: usize,
    pub cluster_restarts: usize,
    pub kml_metric: DistanceMetric,
    pub kml_k_min: usize,
    pub kml_k_max: usize,
    pub kml_restarts: usize,
    pub gbtm_order: usize,
    pub gbtm_max_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: "out".to_string(),
            arch: ArchConfig::default(),
            train: TrainConfig::default(),
            sim: SimulationConfig::default(),
            // The embeddings this pipeline produces are non-spherical;
            // single linkage separates them where k-means cannot.
            cluster_method: ClusterMethod::Single,
            cluster_k: 2,
            cluster_restarts: 10,
            kml_metric: DistanceMetric::L2,
            kml_k_min: 2,
            kml_k_max: 9,
            kml_restarts: 20,
            gbtm_order: 2,
            gbtm_max_iters: 200,
        }
    }
}

fn parse_as<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    value.split(',').map(|w| parse_as(key, w.trim())).collect()
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        return Ok(None);
    }
    parse_as(key, value).map(Some)
}

fn widths_text(widths: &[usize]) -> String {
    if widths.is_empty() {
        return "none".to_string();
    }
    widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Assign one key. Unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => {
                let seed: u64 = parse_as(key, value)?;
                self.seed = seed;
                self.train.seed = seed;
                self.sim.seed = seed;
            }
            "out.dir" => self.out_dir = value.to_string(),

            "arch.hidden" => self.arch.hidden = parse_as(key, value)?,
            "arch.embed_dim" => self.arch.embed_dim = parse_as(key, value)?,
            "arch.decoder_widths" => self.arch.decoder_widths = parse_widths(key, value)?,
            "arch.activation" => self.arch.decoder_activation = parse_as(key, value)?,

            "train.learning_rate" => self.train.learning_rate = parse_as(key, value)?,
            "train.rho" => self.train.rho = parse_as(key, value)?,
            "train.epsilon" => self.train.epsilon = parse_as(key, value)?,
            "train.epochs" => self.train.epochs = parse_as(key, value)?,
            "train.batch_size" => self.train.batch_size = parse_as(key, value)?,
            "train.deterministic" => self.train.deterministic = parse_as(key, value)?,
            "train.clip_norm" => self.train.clip_norm = parse_optional(key, value)?,

            "sim.n_a" => self.sim.n_a = parse_as(key, value)?,
            "sim.n_b" => self.sim.n_b = parse_as(key, value)?,
            "sim.t_len" => self.sim.t_len = parse_as(key, value)?,
            "sim.dt" => self.sim.dt = parse_as(key, value)?,
            "sim.amplitude" => self.sim.amplitude = parse_as(key, value)?,
            "sim.baseline" => self.sim.baseline = parse_as(key, value)?,
            "sim.angular" => self.sim.angular = parse_as(key, value)?,
            "sim.phase_range" => self.sim.phase_range = parse_as(key, value)?,
            "sim.sigma" => self.sim.sigma = parse_as(key, value)?,
            "sim.with_noise" => self.sim.with_noise = parse_as(key, value)?,
            "sim.with_phase" => self.sim.with_phase = parse_as(key, value)?,

            "cluster.method" => self.cluster_method = parse_as(key, value)?,
            "cluster.k" => self.cluster_k = parse_as(key, value)?,
            "cluster.restarts" => self.cluster_restarts = parse_as(key, value)?,

            "kml.metric" => self.kml_metric = parse_as(key, value)?,
            "kml.k_min" => self.kml_k_min = parse_as(key, value)?,
            "kml.k_max" => self.kml_k_max = parse_as(key, value)?,
            "kml.restarts" => self.kml_restarts = parse_as(key, value)?,

            "gbtm.order" => self.gbtm_order = parse_as(key, value)?,
            "gbtm.max_iters" => self.gbtm_max_iters = parse_as(key, value)?,

            other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parse a config document. `origin` names the source in errors.
    pub fn parse(text: &str, origin: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = i + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ParseError {
                path: origin.to_string(),
                row,
                col: 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            config.set(key.trim(), value.trim()).map_err(|e| Error::ParseError {
                path: origin.to_string(),
                row,
                col: 1,
                message: e.to_string(),
            })?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    /// Cross-field checks beyond what each stage validates on its own.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.sim.validate()?;
        if self.arch.hidden == 0 || self.arch.embed_dim == 0 {
            return Err(Error::InvalidConfig(
                "arch.hidden and arch.embed_dim must be at least 1".to_string(),
            ));
        }
        if self.cluster_k == 0 {
            return Err(Error::InvalidConfig("cluster.k must be at least 1".to_string()));
        }
        if self.cluster_restarts == 0 || self.kml_restarts == 0 {
            return Err(Error::InvalidConfig("restart counts must be at least 1".to_string()));
        }
        if self.kml_k_min < 2 || self.kml_k_min > self.kml_k_max {
            return Err(Error::InvalidConfig(format!(
                "kml k range {}..={} must start at 2 and be non-empty",
                self.kml_k_min, self.kml_k_max
            )));
        }
        if self.gbtm_max_iters == 0 {
            return Err(Error::InvalidConfig("gbtm.max_iters must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order, resolved values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "out.dir = {}", self.out_dir).unwrap();
        out.push('\n');
        writeln!(out, "arch.hidden = {}", self.arch.hidden).unwrap();
        writeln!(out, "arch.embed_dim = {}", self.arch.embed_dim).unwrap();
        writeln!(out, "arch.decoder_widths = {}", widths_text(&self.arch.decoder_widths)).unwrap();
        writeln!(out, "arch.activation = {}", self.arch.decoder_activation).unwrap();
        out.push('\n');
        writeln!(out, "train.learning_rate = {}", self.train.learning_rate).unwrap();
        writeln!(out, "train.rho = {}", self.train.rho).unwrap();
        writeln!(out, "train.epsilon = {}", self.train.epsilon).unwrap();
        writeln!(out, "train.epochs = {}", self.train.epochs).unwrap();
        writeln!(out, "train.batch_size = {}", self.train.batch_size).unwrap();
        writeln!(out, "train.deterministic = {}", self.train.deterministic).unwrap();
        match self.train.clip_norm {
            Some(c) => writeln!(out, "train.clip_norm = {c}").unwrap(),
            None => writeln!(out, "train.clip_norm = none").unwrap(),
        }
        out.push('\n');
        writeln!(out, "sim.n_a = {}", self.sim.n_a).unwrap();
        writeln!(out, "sim.n_b = {}", self.sim.n_b).unwrap();
        writeln!(out, "sim.t_len = {}", self.sim.t_len).unwrap();
        writeln!(out, "sim.dt = {}", self.sim.dt).unwrap();
        writeln!(out, "sim.amplitude = {}", self.sim.amplitude).unwrap();
        writeln!(out, "sim.baseline = {}", self.sim.baseline).unwrap();
        writeln!(out, "sim.angular = {}", self.sim.angular).unwrap();
        writeln!(out, "sim.phase_range = {}", self.sim.phase_range).unwrap();
        writeln!(out, "sim.sigma = {}", self.sim.sigma).unwrap();
        writeln!(out, "sim.with_noise = {}", self.sim.with_noise).unwrap();
        writeln!(out, "sim.with_phase = {}", self.sim.with_phase).unwrap();
        out.push('\n');
        writeln!(out, "cluster.method = {}", self.cluster_method).unwrap();
        writeln!(out, "cluster.k = {}", self.cluster_k).unwrap();
        writeln!(out, "cluster.restarts = {}", self.cluster_restarts).unwrap();
        out.push('\n');
        writeln!(out, "kml.metric = {}", self.kml_metric).unwrap();
        writeln!(out, "kml.k_min = {}", self.kml_k_min).unwrap();
        writeln!(out, "kml.k_max = {}", self.kml_k_max).unwrap();
        writeln!(out, "kml.restarts = {}", self.kml_restarts).unwrap();
        out.push('\n');
        writeln!(out, "gbtm.order = {}", self.gbtm_order).unwrap();
        writeln!(out, "gbtm.max_iters = {}", self.gbtm_max_iters).unwrap();
        out
    }

    /// Manifest text: the command that produced a run plus the full
    /// resolved config. Parses back with [`RunConfig::parse`].
    pub fn to_manifest(&self, command: &str) -> String {
        format!("# command: {command}\n\n{}", self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::Activation;

    #[test]
    fn defaults_round_trip_through_text() {
        let config = RunConfig::default();
        let parsed = RunConfig::parse(&config.to_text(), "inline").unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn manifest_parses_back_and_records_the_command() {
        let mut config = RunConfig::default();
        config.set("seed", "7").unwrap();
        config.set("arch.hidden", "16").unwrap();
        let manifest = config.to_manifest("trajclust simulate --out runs");
        assert!(manifest.starts_with("# command: trajclust simulate --out runs\n"));
        let parsed = RunConfig::parse(&manifest, "manifest").unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn unknown_key_is_a_hard_error_with_the_row() {
        let text = "seed = 1\ntrain.epocs = 10\n";
        match RunConfig::parse(text, "bad.cfg").unwrap_err() {
            Error::ParseError { path, row, message, .. } => {
                assert_eq!(path, "bad.cfg");
                assert_eq!(row, 2);
                assert!(message.contains("train.epocs"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_value_names_the_key() {
        let err = RunConfig::default().set("train.epochs", "ten").unwrap_err();
        assert!(err.to_string().contains("train.epochs"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# a comment\n\n  seed = 9\n   # indented comment\n";
        let config = RunConfig::parse(text, "inline").unwrap();
        assert_eq!(config.seed, 9);
    }

    #[test]
    fn seed_feeds_training_and_simulation() {
        let mut config = RunConfig::default();
        config.set("seed", "123").unwrap();
        assert_eq!(config.train.seed, 123);
        assert_eq!(config.sim.seed, 123);
    }

    #[test]
    fn decoder_widths_parse_both_forms() {
        let mut config = RunConfig::default();
        config.set("arch.decoder_widths", "8,4").unwrap();
        assert_eq!(config.arch.decoder_widths, vec![8, 4]);
        config.set("arch.decoder_widths", "none").unwrap();
        assert!(config.arch.decoder_widths.is_empty());
        assert!(config.to_text().contains("arch.decoder_widths = none"));
        let parsed = RunConfig::parse(&config.to_text(), "inline").unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn clip_norm_and_activation_round_trip() {
        let mut config = RunConfig::default();
        config.set("train.clip_norm", "2.5").unwrap();
        config.set("arch.activation", "identity").unwrap();
        let parsed = RunConfig::parse(&config.to_text(), "inline").unwrap();
        assert_eq!(parsed.train.clip_norm, Some(2.5));
        assert_eq!(parsed.arch.decoder_activation, Activation::Identity);
    }

    #[test]
    fn missing_equals_sign_is_rejected() {
        match RunConfig::parse("seed 5\n", "inline").unwrap_err() {
            Error::ParseError { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_bad_ranges() {
        let mut config = RunConfig::default();
        config.set("kml.k_min", "1").unwrap();
        assert!(matches!(config.validate(), Err(Error::InvalidConfig(_))));
        let mut config = RunConfig::default();
        config.set("cluster.restarts", "0").unwrap();
        assert!(matches!(config.validate(), Err(Error::InvalidConfig(_))));
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn cluster_methods_map_to_linkages() {
        assert_eq!(ClusterMethod::Kmeans.linkage(), None);
        assert_eq!("single".parse::<ClusterMethod>().unwrap().linkage(), Some(Linkage::Single));
        assert!("ward".parse::<ClusterMethod>().is_err());
    }
}
