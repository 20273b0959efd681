//! Discrete-observation hidden Markov models.
//!
//! Observation symbols are 1-based (`1..=alphabet_size`) everywhere in the
//! public API, matching the symbol files; matrices are stored row-major
//! with 0-based indices.

mod bank;
mod train;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

pub use bank::{decode_word, train_bank, Decoded, StatePlan, WordModel, WordModelBank};
pub use train::{
    baum_welch, canonical_stop, pad_to, InitialMode, LengthMode, TrainConfig, TrainOutcome,
    SMOOTHING,
};

/// Sequences of 1-based symbols, possibly of different lengths.
pub type SequenceSet = Vec<Vec<usize>>;

// rows must sum to one within this
const ROW_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("symbol {symbol} outside 1..={alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("no training sequences")]
    EmptyData,
    #[error("empty observation sequence")]
    EmptySequence,
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("word {word:?} has {count} sequences, need at least {needed}")]
    TooFewSequences {
        word: String,
        count: usize,
        needed: usize,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("model bank is empty")]
    EmptyBank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHmm", into = "RawHmm")]
pub struct Hmm {
    n_states: usize,
    alphabet_size: usize,
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawHmm {
    n_states: usize,
    alphabet_size: usize,
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
}

impl TryFrom<RawHmm> for Hmm {
    type Error = HmmError;

    fn try_from(r: RawHmm) -> Result<Self, HmmError> {
        Hmm::new(r.n_states, r.alphabet_size, r.initial, r.transition, r.emission)
    }
}

impl From<Hmm> for RawHmm {
    fn from(h: Hmm) -> Self {
        RawHmm {
            n_states: h.n_states,
            alphabet_size: h.alphabet_size,
            initial: h.initial,
            transition: h.transition,
            emission: h.emission,
        }
    }
}

fn check_rows(name: &str, values: &[f64], width: usize) -> Result<(), HmmError> {
    for (r, row) in values.chunks(width).enumerate() {
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(HmmError::InvalidModel(format!("{name} row {r} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(HmmError::InvalidModel(format!("{name} row {r} sums to {sum}")));
        }
    }
    Ok(())
}

impl Hmm {
    /// Builds a model from row-major probability tables, checking shapes and
    /// that every row is a distribution.
    pub fn new(
        n_states: usize,
        alphabet_size: usize,
        initial: Vec<f64>,
        transition: Vec<f64>,
        emission: Vec<f64>,
    ) -> Result<Self, HmmError> {
        if n_states == 0 || alphabet_size == 0 {
            return Err(HmmError::InvalidModel("need at least one state and one symbol".into()));
        }
        if initial.len() != n_states
            || transition.len() != n_states * n_states
            || emission.len() != n_states * alphabet_size
        {
            return Err(HmmError::InvalidModel("table shapes do not match".into()));
        }
        check_rows("initial", &initial, n_states)?;
        check_rows("transition", &transition, n_states)?;
        check_rows("emission", &emission, alphabet_size)?;
        Ok(Self {
            n_states,
            alphabet_size,
            initial,
            transition,
            emission,
        })
    }

    // for the trainer, whose rows are normalized by construction
    pub(crate) fn from_parts_unchecked(
        n_states: usize,
        alphabet_size: usize,
        initial: Vec<f64>,
        transition: Vec<f64>,
        emission: Vec<f64>,
    ) -> Self {
        Self {
            n_states,
            alphabet_size,
            initial,
            transition,
            emission,
        }
    }

    /// Random model with every row drawn from a symmetric Dirichlet.
    pub fn random<R: Rng + ?Sized>(
        n_states: usize,
        alphabet_size: usize,
        concentration: f64,
        rng: &mut R,
    ) -> Self {
        assert!(n_states >= 1 && alphabet_size >= 1);
        let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
        let mut dirichlet = |len: usize| -> Vec<f64> {
            loop {
                let draws: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
                let sum: f64 = draws.iter().sum();
                if sum > 0.0 {
                    return draws.into_iter().map(|d| d / sum).collect();
                }
            }
        };
        let initial = dirichlet(n_states);
        let transition = (0..n_states).flat_map(|_| dirichlet(n_states)).collect();
        let emission = (0..n_states).flat_map(|_| dirichlet(alphabet_size)).collect();
        Self::from_parts_unchecked(n_states, alphabet_size, initial, transition, emission)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Row-major `n_states`×`n_states`.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// Row-major `n_states`×`alphabet_size`.
    pub fn emission(&self) -> &[f64] {
        &self.emission
    }

    pub fn a(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.n_states + to]
    }

    /// Probability that `state` emits the 1-based `symbol`.
    pub fn b(&self, state: usize, symbol: usize) -> f64 {
        self.emission[state * self.alphabet_size + symbol - 1]
    }

    pub fn check_symbols(&self, seq: &[usize]) -> Result<(), HmmError> {
        if seq.is_empty() {
            return Err(HmmError::EmptySequence);
        }
        match seq.iter().find(|&&s| s == 0 || s > self.alphabet_size) {
            Some(&symbol) => Err(HmmError::SymbolOutOfRange { symbol, alphabet: self.alphabet_size }),
            None => Ok(()),
        }
    }

    /// `log P(seq | model)` by the scaled forward recursion; the result is
    /// the sum of the logs of the per-step normalizers. An impossible
    /// sequence scores negative infinity.
    pub fn forward_log_likelihood(&self, seq: &[usize]) -> Result<f64, HmmError> {
        self.check_symbols(seq)?;
        let q = self.n_states;
        let mut alpha: Vec<f64> = (0..q).map(|i| self.initial[i] * self.b(i, seq[0])).collect();
        let mut next = vec![0.0; q];
        let mut ll = 0.0;
        for t in 0..seq.len() {
            if t > 0 {
                for (j, slot) in next.iter_mut().enumerate() {
                    let inflow: f64 = (0..q).map(|i| alpha[i] * self.a(i, j)).sum();
                    *slot = inflow * self.b(j, seq[t]);
                }
                std::mem::swap(&mut alpha, &mut next);
            }
            let scale: f64 = alpha.iter().sum();
            if scale <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            alpha.iter_mut().for_each(|a| *a /= scale);
            ll += scale.ln();
        }
        Ok(ll)
    }

    /// Draws a state path and its symbols; deterministic per seed.
    pub fn sample(&self, len: usize, seed: u64) -> Vec<usize> {
        self.sample_with(len, &mut seed::rng(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        let mut state = draw(&self.initial, rng);
        for t in 0..len {
            if t > 0 {
                state = draw(&self.transition[state * self.n_states..(state + 1) * self.n_states], rng);
            }
            let row = &self.emission[state * self.alphabet_size..(state + 1) * self.alphabet_size];
            out.push(draw(row, rng) + 1);
        }
        out
    }
}

/// Index drawn from a discrete distribution.
pub(crate) fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.random();
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            if u < p {
                return i;
            }
            u -= p;
            last = i;
        }
    }
    // rounding left a sliver past the final non-zero entry
    last
}

pub fn forward_log_likelihood(h: &Hmm, seq: &[usize]) -> Result<f64, HmmError> {
    h.forward_log_likelihood(seq)
}

pub fn sample(h: &Hmm, len: usize, seed: u64) -> Vec<usize> {
    h.sample(len, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    // Sum over every state path of its joint probability with `seq`.
    fn brute_force(h: &Hmm, seq: &[usize]) -> f64 {
        let q = h.n_states();
        let t = seq.len();
        let mut total = 0.0;
        for code in 0..q.pow(t as u32) {
            let path: Vec<usize> = (0..t).map(|i| code / q.pow(i as u32) % q).collect();
            let mut p = h.initial()[path[0]] * h.b(path[0], seq[0]);
            for i in 1..t {
                p *= h.a(path[i - 1], path[i]) * h.b(path[i], seq[i]);
            }
            total += p;
        }
        total.ln()
    }

    #[test]
    fn single_state_certain_symbol() {
        let h = Hmm::new(1, 1, vec![1.0], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(h.forward_log_likelihood(&[1; 25]).unwrap(), 0.0);
    }

    #[test]
    fn iid_coin() {
        let h = Hmm::new(1, 2, vec![1.0], vec![1.0], vec![0.5, 0.5]).unwrap();
        let ll = h.forward_log_likelihood(&[1, 2, 2, 1, 1, 1, 2, 1, 2, 2]).unwrap();
        assert!((ll - 10.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn matches_path_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let h = Hmm::random(3, 4, 1.0, &mut rng);
        let seq = h.sample_with(6, &mut rng);
        let fwd = h.forward_log_likelihood(&seq).unwrap();
        assert!((fwd - brute_force(&h, &seq)).abs() <= 1e-10);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for t in 1..=10u32 {
            let h = Hmm::random(3, 2, 1.0, &mut rng);
            let total: f64 = (0..2usize.pow(t))
                .map(|code| {
                    let seq: Vec<usize> = (0..t).map(|i| (code >> i) & 1).map(|b| b + 1).collect();
                    h.forward_log_likelihood(&seq).unwrap().exp()
                })
                .sum();
            assert!((total - 1.0).abs() <= 1e-9, "T = {t}: {total}");
        }
    }

    #[test]
    fn impossible_sequence_is_negative_infinity() {
        let h = Hmm::new(1, 2, vec![1.0], vec![1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(h.forward_log_likelihood(&[1, 2]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn long_sequences_do_not_underflow() {
        let h = Hmm::new(1, 2, vec![1.0], vec![1.0], vec![0.5, 0.5]).unwrap();
        let seq = vec![1; 1_000_000];
        let ll = h.forward_log_likelihood(&seq).unwrap();
        assert!((ll - 1e6 * 0.5f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn symbol_checks() {
        let h = Hmm::new(1, 2, vec![1.0], vec![1.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(h.forward_log_likelihood(&[3]), Err(HmmError::SymbolOutOfRange { symbol: 3, .. })));
        assert!(matches!(h.forward_log_likelihood(&[0]), Err(HmmError::SymbolOutOfRange { symbol: 0, .. })));
        assert!(matches!(h.forward_log_likelihood(&[]), Err(HmmError::EmptySequence)));
    }

    #[test]
    fn invalid_tables_are_rejected() {
        assert!(Hmm::new(1, 2, vec![1.0], vec![1.0], vec![0.5, 0.6]).is_err());
        assert!(Hmm::new(2, 2, vec![1.0], vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(Hmm::new(1, 2, vec![1.0], vec![1.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn one_hot_chain_is_forced() {
        // state 0 -> 1 -> 0 ..., emitting 3 then 1
        let h = Hmm::new(
            2,
            3,
            vec![1.0, 0.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(h.sample(5, 99), [3, 1, 3, 1, 3]);
    }

    #[test]
    fn sampling_is_seeded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let h = Hmm::random(3, 5, 1.0, &mut rng);
        assert_eq!(h.sample(50, 7), h.sample(50, 7));
        assert_ne!(h.sample(50, 7), h.sample(50, 8));
    }

    #[test]
    fn empirical_frequencies() {
        let h = Hmm::new(1, 2, vec![1.0], vec![1.0], vec![0.3, 0.7]).unwrap();
        let seq = h.sample(100_000, 3);
        let ones = seq.iter().filter(|&&s| s == 1).count() as f64 / 1e5;
        assert!((ones - 0.3).abs() < 0.01);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let h = Hmm::random(3, 4, 1.0, &mut rng);
        let back: Hmm = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<Hmm>(
            r#"{"n_states":1,"alphabet_size":2,"initial":[1.0],"transition":[1.0],"emission":[0.9,0.9]}"#
        )
        .is_err());
    }
}
