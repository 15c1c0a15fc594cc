use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::DistanceTransform;
use crate::epidemic::SirParams;
use crate::error::{Error, Result};
use crate::jointdiag::JdOptions;
use crate::modes::GmmOptions;
use crate::netcore::TraceFormat;
use crate::synthgen::{GeneratorSpec, SwitchingSchedule};

/// Where the pipeline's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSpec {
    /// A contact trace on disk.
    Trace {
        path: PathBuf,
        #[serde(default = "default_format")]
        format: TraceFormat,
        /// Seconds per step.
        #[serde(default = "default_granularity")]
        granularity: f64,
        /// JSON map from node label to index, pinning the numbering.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_map: Option<PathBuf>,
    },
    /// A batch file written by `sample`.
    Batch { path: PathBuf },
    /// A static graph, sampled by BFS.
    Graph { n_nodes: usize, edges: Vec<(usize, usize)> },
    /// One synthetic generator run for `steps` steps.
    Generator { generator: GeneratorSpec, steps: usize },
    /// A schedule of synthetic generators.
    Schedule { schedule: SwitchingSchedule },
}

fn default_format() -> TraceFormat {
    TraceFormat::Csv
}

fn default_granularity() -> f64 {
    1.0
}

impl InputSpec {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, InputSpec::Generator { .. } | InputSpec::Schedule { .. })
    }
}

/// Drops trees that use edge `(a, b)` except with probability `keep`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFilter {
    pub a: usize,
    pub b: usize,
    pub keep: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    /// Trees per batch.
    pub m: usize,
    /// Flooding horizon in seconds; unlimited when absent.
    pub horizon: Option<f64>,
    /// Analyse only trees that reached every node.
    pub complete_only: bool,
    pub avoid_edge: Option<EdgeFilter>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            m: 10_000,
            horizon: None,
            complete_only: false,
            avoid_edge: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub k_max: usize,
    /// Fit the mixture on `ln(1 + δ)`.
    pub log_transform: bool,
    pub jd: JdOptions,
    pub gmm: GmmOptions,
    /// Start-time histogram bin width in seconds; 100 steps when absent.
    pub bin_width: Option<f64>,
    /// Entries of the average graph below this are dropped from the
    /// thresholded presentation graph.
    pub threshold: f64,
    /// Weights at or below this are not links in the shortest-path graph.
    pub epsilon: f64,
    pub distance: DistanceTransform,
    /// Dendrogram blocks at or below this size are not split further.
    pub min_block: usize,
    /// Modes to decompose again into submodes.
    pub submodes: Vec<usize>,
    /// Grid points of the deviation density estimate.
    pub kde_points: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k_max: 8,
            log_transform: false,
            jd: JdOptions::default(),
            gmm: GmmOptions::default(),
            bin_width: None,
            threshold: 0.1,
            epsilon: 0.0,
            distance: DistanceTransform::Reciprocal,
            min_block: 1,
            submodes: Vec::new(),
            kde_points: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SirConfig {
    #[serde(flatten)]
    pub params: SirParams,
    pub runs: usize,
    pub bootstrap: usize,
}

impl Default for SirConfig {
    fn default() -> Self {
        SirConfig {
            params: SirParams::default(),
            runs: 30,
            bootstrap: 1000,
        }
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub name: String,
    pub seed: u64,
    pub input: InputSpec,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Epidemic stage; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sir: Option<SirConfig>,
}

impl PipelineConfig {
    pub fn new(name: impl Into<String>, input: InputSpec) -> Self {
        PipelineConfig {
            name: name.into(),
            seed: 0,
            input,
            sample: SampleConfig::default(),
            analysis: AnalysisConfig::default(),
            sir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> Result<String> {
        hash_json(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(Error::invalid(format!(
                "experiment name {:?} is not a plain file name",
                self.name
            )));
        }
        if self.sample.m == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        if let Some(f) = &self.sample.avoid_edge {
            if !(0.0..=1.0).contains(&f.keep) {
                return Err(Error::invalid(format!(
                    "keep probability must lie in [0, 1], got {}",
                    f.keep
                )));
            }
        }
        if self.sample.horizon.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::invalid("flooding horizon must be positive"));
        }
        let a = &self.analysis;
        if a.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if !(a.jd.tol > 0.0) || a.jd.max_sweeps == 0 {
            return Err(Error::invalid("JD tolerance and sweep limit must be positive"));
        }
        if a.bin_width.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::invalid("bin width must be positive"));
        }
        if !(a.threshold >= 0.0) || !(a.epsilon >= 0.0) {
            return Err(Error::invalid("threshold and epsilon must be nonnegative"));
        }
        if a.kde_points < 2 {
            return Err(Error::invalid("density grid needs at least 2 points"));
        }
        if let Some(s) = &self.sir {
            s.params.validate()?;
            if s.runs == 0 || s.bootstrap == 0 {
                return Err(Error::invalid("SIR runs and bootstrap resamples must be positive"));
            }
        }
        Ok(())
    }
}

pub(crate) fn hash_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Experiment specs shipped with the tool, run by `repro`.
pub const BUNDLED: [(&str, &str); 4] = [
    ("tree_usage", include_str!("../../experiments/tree_usage.json")),
    ("unimodal", include_str!("../../experiments/unimodal.json")),
    ("switching", include_str!("../../experiments/switching.json")),
    ("bridge", include_str!("../../experiments/bridge.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.0).collect()
}

pub fn bundled(name: &str) -> Result<PipelineConfig> {
    let (_, text) = BUNDLED.iter().find(|b| b.0 == name).ok_or_else(|| {
        Error::invalid(format!(
            "no bundled experiment {name:?}; have {}",
            bundled_names().join(", ")
        ))
    })?;
    PipelineConfig::from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{GeneratorKind, SCHEDULE_WAXMAN_SIDE};

    #[test]
    fn bundled_specs_parse_and_round_trip() {
        for name in bundled_names() {
            let cfg = bundled(name).unwrap();
            assert_eq!(cfg.name, name);
            let again = PipelineConfig::from_json(&cfg.to_json().unwrap()).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.hash().unwrap(), cfg.hash().unwrap());
        }
    }

    #[test]
    fn switching_spec_is_the_schedule_default() {
        let cfg = bundled("switching").unwrap();
        let InputSpec::Schedule { schedule } = &cfg.input else {
            panic!("switching input is not a schedule")
        };
        assert_eq!(schedule, &SwitchingSchedule::paper_default(50));
        assert!(schedule.segments.iter().all(|s| s.steps == 700));
        assert!(matches!(
            schedule.segments[0].generator.kind,
            GeneratorKind::Waxman { side, .. } if side == SCHEDULE_WAXMAN_SIDE
        ));
    }

    #[test]
    fn defaults_and_sparse_json() {
        let cfg =
            PipelineConfig::from_json(r#"{"name":"x","seed":3,"input":{"kind":"trace","path":"t.csv"}}"#).unwrap();
        assert_eq!(cfg.sample.m, 10_000);
        assert_eq!(cfg.analysis.threshold, 0.1);
        assert_eq!(cfg.analysis.k_max, 8);
        assert!(cfg.sir.is_none());
        let sir = SirConfig::default();
        assert_eq!(
            (sir.params.p_transmit, sir.params.recovery_mean, sir.params.start_step),
            (0.5, 80.0, 250)
        );
        assert_eq!(sir.runs, 30);
        let InputSpec::Trace {
            format, granularity, ..
        } = cfg.input
        else {
            panic!()
        };
        assert_eq!((format, granularity), (TraceFormat::Csv, 1.0));
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = r#"{"name":"x","seed":3,"input":{"kind":"batch","path":"b.csv"}"#;
        for extra in [
            r#","sample":{"m":0}}"#,
            r#","analysis":{"k_max":0}}"#,
            r#","analysis":{"threshold":-1}}"#,
            r#","sir":{"p_transmit":2}}"#,
            r#","sample":{"avoid_edge":{"a":0,"b":1,"keep":1.5}}}"#,
        ] {
            assert!(PipelineConfig::from_json(&format!("{base}{extra}")).is_err(), "{extra}");
        }
        assert!(PipelineConfig::from_json(r#"{"name":"../x","seed":1,"input":{"kind":"batch","path":"b"}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"name":"x","seed":1,"input":{"kind":"nope"}}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = bundled("bridge").unwrap();
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
