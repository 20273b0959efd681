use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, SynthSpec};
use crate::classify::ClassifierKind;
use crate::hmm::{StatePlan, TrainConfig};
use crate::lexicon::{load_lexicon, PronunciationDict, VisemeMap};
use crate::lip_extract::ExtractorConfig;

/// Which symbol track frames are classified into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Phoneme,
    #[default]
    Viseme,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phoneme" => Ok(Self::Phoneme),
            "viseme" => Ok(Self::Viseme),
            other => Err(format!("unknown mode {other:?}, expected phoneme or viseme")),
        }
    }
}

impl Mode {
    pub fn alphabet_size(self, map: &VisemeMap) -> usize {
        match self {
            Self::Phoneme => map.n_phonemes(),
            Self::Viseme => map.n_visemes(),
        }
    }
}

/// One evaluation row: decode `target`'s test sequences against the
/// models of `set`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subset {
    pub target: String,
    pub set: Vec<String>,
}

/// Run configuration shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    pub silence: bool,
    /// Lexicon file; the bundled GRID lexicon when absent.
    pub lexicon: Option<PathBuf>,
    #[serde(flatten)]
    pub extractor: ExtractorConfig,
    pub svd_rank: usize,
    pub center: bool,
    pub classifier: ClassifierKind,
    pub knn_k: usize,
    pub split_fraction: f64,
    /// Symbol alphabet of the HMM stages; derived from `mode` when absent.
    pub alphabet_size: Option<usize>,
    pub hmm: TrainConfig,
    /// States for words missing from the lexicon.
    pub default_states: usize,
    pub state_overrides: BTreeMap<String, usize>,
    pub subsets: Vec<Subset>,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: Mode::Viseme,
            silence: true,
            lexicon: None,
            extractor: ExtractorConfig::default(),
            svd_rank: 30,
            center: false,
            classifier: ClassifierKind::Knn,
            knn_k: 1,
            split_fraction: 0.75,
            alphabet_size: None,
            hmm: TrainConfig::default(),
            default_states: 3,
            state_overrides: BTreeMap::new(),
            subsets: Vec::new(),
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| PipelineError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split_fraction must lie in (0, 1)");
        }
        if !(2..=4).contains(&self.extractor.kmeans_k) {
            return bad("kmeans_k must be between 2 and 4");
        }
        if self.extractor.grid_w == 0 || self.extractor.grid_h == 0 {
            return bad("grid dimensions must be positive");
        }
        if self.svd_rank == 0 || self.knn_k == 0 || self.default_states == 0 {
            return bad("svd_rank, knn_k and default_states must be positive");
        }
        if self.hmm.max_iters == 0 || self.hmm.restarts == 0 {
            return bad("hmm.max_iters and hmm.restarts must be positive");
        }
        if self.alphabet_size == Some(0) {
            return bad("alphabet_size must be positive");
        }
        self.synth.validate()
    }

    pub fn viseme_map(&self) -> VisemeMap {
        VisemeMap::bundled_with_silence(self.silence)
    }

    pub fn dictionary(&self, map: &VisemeMap) -> Result<PronunciationDict, PipelineError> {
        Ok(match &self.lexicon {
            Some(path) => load_lexicon(path, map)?,
            None => PronunciationDict::bundled(map),
        })
    }

    pub fn hmm_alphabet(&self) -> usize {
        self.alphabet_size
            .unwrap_or_else(|| self.mode.alphabet_size(&self.viseme_map()))
    }

    /// HMM training settings with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.hmm.clone() }
    }

    /// States per word: distinct phonemes from the lexicon, then overrides.
    pub fn state_plan<'a>(
        &self,
        words: impl IntoIterator<Item = &'a str>,
    ) -> Result<StatePlan, PipelineError> {
        let map = self.viseme_map();
        let dict = self.dictionary(&map)?;
        Ok(StatePlan::from_pronunciations(&dict, words, self.default_states)
            .with_overrides(&self.state_overrides))
    }
}
