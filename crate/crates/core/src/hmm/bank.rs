use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{baum_welch, canonical_stop, Hmm, HmmError, LengthMode, TrainConfig};
use crate::lexicon::PronunciationDict;
use crate::seed;

const MIN_SEQUENCES: usize = 2;

/// Number of hidden states per word.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatePlan {
    /// Used for words without an entry in `per_word`.
    pub default: usize,
    pub per_word: BTreeMap<String, usize>,
}

impl StatePlan {
    pub fn uniform(default: usize) -> Self {
        Self { default, per_word: BTreeMap::new() }
    }

    /// One state per distinct phoneme of each word's pronunciation, at
    /// least two. Words missing from the dictionary fall back to `default`.
    pub fn from_pronunciations<'a>(
        dict: &PronunciationDict,
        words: impl IntoIterator<Item = &'a str>,
        default: usize,
    ) -> Self {
        let per_word = words
            .into_iter()
            .filter_map(|w| {
                let pron = dict.pronounce(w).ok()?;
                let distinct: BTreeSet<_> = pron.iter().collect();
                Some((w.to_string(), distinct.len().max(2)))
            })
            .collect();
        Self { default, per_word }
    }

    /// Adds explicit overrides on top of the plan.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, usize>) -> Self {
        self.per_word.extend(overrides.iter().map(|(w, &q)| (w.clone(), q)));
        self
    }

    pub fn states_for(&self, word: &str) -> usize {
        self.per_word.get(word).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordModel {
    pub hmm: Hmm,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub n_sequences: usize,
}

/// Per-word models over a shared symbol alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordModelBank {
    /// Observation alphabet, not counting the stop symbol.
    pub alphabet_size: usize,
    pub length_mode: LengthMode,
    pub models: BTreeMap<String, WordModel>,
}

/// Trains one model per word, independently and in parallel. Each word's
/// restarts draw from a seed derived from `cfg.seed` and the word.
pub fn train_bank(
    word_data: &BTreeMap<String, Vec<Vec<usize>>>,
    alphabet_size: usize,
    plan: &StatePlan,
    cfg: &TrainConfig,
) -> Result<WordModelBank, HmmError> {
    if let Some((word, seqs)) = word_data.iter().find(|(_, s)| s.len() < MIN_SEQUENCES) {
        return Err(HmmError::TooFewSequences {
            word: word.clone(),
            count: seqs.len(),
            needed: MIN_SEQUENCES,
        });
    }
    let trained: Vec<(String, WordModel)> = word_data
        .par_iter()
        .map(|(word, seqs)| {
            let word_cfg = TrainConfig { seed: seed::derive(cfg.seed, word), ..cfg.clone() };
            let out = baum_welch(seqs, plan.states_for(word), alphabet_size, &word_cfg)?;
            Ok((
                word.clone(),
                WordModel {
                    log_likelihood: out.log_likelihood(),
                    iterations: out.iterations,
                    n_sequences: seqs.len(),
                    hmm: out.hmm,
                },
            ))
        })
        .collect::<Result<_, HmmError>>()?;
    Ok(WordModelBank {
        alphabet_size,
        length_mode: cfg.length_mode,
        models: trained.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub word: String,
    /// Log-likelihood under every word model.
    pub scores: BTreeMap<String, f64>,
}

impl WordModelBank {
    /// The sequence as the models see it: unchanged in native mode; in
    /// stop mode, trailing stop symbols collapse to exactly one.
    pub fn prepare(&self, seq: &[usize]) -> Result<Vec<usize>, HmmError> {
        match self.length_mode {
            LengthMode::Native => Ok(seq.to_vec()),
            LengthMode::PadStop => {
                let stop = self.alphabet_size + 1;
                let out = canonical_stop(seq, stop);
                if let Some(&s) = out[..out.len() - 1].iter().find(|&&s| s == stop) {
                    return Err(HmmError::SymbolOutOfRange { symbol: s, alphabet: self.alphabet_size });
                }
                Ok(out)
            }
        }
    }

    /// Argmax word by forward log-likelihood; ties go to the
    /// lexicographically smaller word.
    pub fn decode(&self, seq: &[usize]) -> Result<Decoded, HmmError> {
        if self.models.is_empty() {
            return Err(HmmError::EmptyBank);
        }
        let prepared = self.prepare(seq)?;
        let mut scores = BTreeMap::new();
        let mut best: Option<(&str, f64)> = None;
        for (word, model) in &self.models {
            let ll = model.hmm.forward_log_likelihood(&prepared)?;
            scores.insert(word.clone(), ll);
            if best.is_none_or(|(_, b)| ll > b) {
                best = Some((word, ll));
            }
        }
        Ok(Decoded {
            word: best.expect("non-empty bank").0.to_string(),
            scores,
        })
    }

    /// Sub-bank restricted to `words`.
    pub fn subset<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            alphabet_size: self.alphabet_size,
            length_mode: self.length_mode,
            models: words
                .into_iter()
                .filter_map(|w| self.models.get(w).map(|m| (w.to_string(), m.clone())))
                .collect(),
        }
    }
}

pub fn decode_word(bank: &WordModelBank, seq: &[usize]) -> Result<Decoded, HmmError> {
    bank.decode(seq)
}
