//! Multi-sequence Baum-Welch.
//!
//! Expected counts from the scaled forward-backward pass are summed over
//! every training sequence before each M-step. In `PadStop` mode all
//! sequences are first right-padded to the longest one with an extra stop
//! symbol (`alphabet_size + 1`), which is how fixed-length trainers are
//! fed variable-length words.

use serde::{Deserialize, Serialize};

use super::{Hmm, HmmError};
use crate::seed;

/// Pseudo-count added to every expected count before normalization.
pub const SMOOTHING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    #[default]
    Native,
    PadStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    /// Re-estimated each iteration.
    #[default]
    Learned,
    /// Held at the uniform distribution.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Stop once the relative log-likelihood gain drops below this.
    pub ll_tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub length_mode: LengthMode,
    pub initial: InitialMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            ll_tol: 1e-6,
            seed: 0,
            restarts: 5,
            length_mode: LengthMode::Native,
            initial: InitialMode::Learned,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub hmm: Hmm,
    /// Total log-likelihood before each update, ending with the returned
    /// model's.
    pub ll_history: Vec<f64>,
    pub iterations: usize,
    /// Which restart produced the model.
    pub restart: usize,
}

impl TrainOutcome {
    pub fn log_likelihood(&self) -> f64 {
        *self.ll_history.last().expect("history is never empty")
    }
}

/// Right-pads `seq` with `stop` up to `len`; longer sequences are returned
/// unchanged.
pub fn pad_to(seq: &[usize], len: usize, stop: usize) -> Vec<usize> {
    let mut out = seq.to_vec();
    if out.len() < len {
        out.resize(len, stop);
    }
    out
}

/// Strips trailing stop symbols and appends exactly one.
pub fn canonical_stop(seq: &[usize], stop: usize) -> Vec<usize> {
    let end = seq.iter().rposition(|&s| s != stop).map_or(0, |i| i + 1);
    let mut out = seq[..end].to_vec();
    out.push(stop);
    out
}

struct Counts {
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
}

impl Counts {
    fn new(q: usize, m: usize) -> Self {
        Self {
            initial: vec![0.0; q],
            transition: vec![0.0; q * q],
            emission: vec![0.0; q * m],
        }
    }
}

/// Adds one sequence's expected counts; returns its log-likelihood.
fn accumulate(h: &Hmm, seq: &[usize], counts: &mut Counts) -> f64 {
    let q = h.n_states();
    let len = seq.len();
    let mut alpha = vec![0.0; len * q];
    let mut scale = vec![0.0; len];
    for t in 0..len {
        for j in 0..q {
            let prior = if t == 0 {
                h.initial()[j]
            } else {
                (0..q).map(|i| alpha[(t - 1) * q + i] * h.a(i, j)).sum()
            };
            alpha[t * q + j] = prior * h.b(j, seq[t]);
        }
        let c: f64 = alpha[t * q..(t + 1) * q].iter().sum();
        if c <= 0.0 {
            return f64::NEG_INFINITY;
        }
        scale[t] = c;
        alpha[t * q..(t + 1) * q].iter_mut().for_each(|a| *a /= c);
    }

    let mut beta = vec![0.0; len * q];
    beta[(len - 1) * q..].fill(1.0);
    for t in (0..len - 1).rev() {
        for i in 0..q {
            beta[t * q + i] = (0..q)
                .map(|j| h.a(i, j) * h.b(j, seq[t + 1]) * beta[(t + 1) * q + j])
                .sum::<f64>()
                / scale[t + 1];
        }
    }

    let m = h.alphabet_size();
    for t in 0..len {
        for i in 0..q {
            let gamma = alpha[t * q + i] * beta[t * q + i];
            if t == 0 {
                counts.initial[i] += gamma;
            }
            counts.emission[i * m + seq[t] - 1] += gamma;
        }
        if t + 1 < len {
            for i in 0..q {
                for j in 0..q {
                    counts.transition[i * q + j] += alpha[t * q + i]
                        * h.a(i, j)
                        * h.b(j, seq[t + 1])
                        * beta[(t + 1) * q + j]
                        / scale[t + 1];
                }
            }
        }
    }
    scale.iter().map(|c| c.ln()).sum()
}

fn normalize_rows(values: &mut [f64], width: usize) {
    for row in values.chunks_mut(width) {
        row.iter_mut().for_each(|v| *v += SMOOTHING);
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

fn e_step(h: &Hmm, data: &[Vec<usize>]) -> (f64, Counts) {
    let mut counts = Counts::new(h.n_states(), h.alphabet_size());
    let ll = data.iter().map(|seq| accumulate(h, seq, &mut counts)).sum();
    (ll, counts)
}

fn m_step(h: &Hmm, mut counts: Counts, initial: InitialMode) -> Hmm {
    let (q, m) = (h.n_states(), h.alphabet_size());
    let init = match initial {
        InitialMode::Learned => {
            normalize_rows(&mut counts.initial, q);
            counts.initial
        }
        InitialMode::Uniform => vec![1.0 / q as f64; q],
    };
    normalize_rows(&mut counts.transition, q);
    normalize_rows(&mut counts.emission, m);
    Hmm::from_parts_unchecked(q, m, init, counts.transition, counts.emission)
}

fn run_em(start: Hmm, data: &[Vec<usize>], cfg: &TrainConfig) -> (Hmm, Vec<f64>, usize) {
    let mut model = start;
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let mut iterations = 0;
    loop {
        let (ll, counts) = e_step(&model, data);
        let converged = match history.last() {
            Some(&prev) => ll - prev < cfg.ll_tol * f64::abs(prev),
            None => false,
        };
        history.push(ll);
        if converged || iterations == cfg.max_iters || !ll.is_finite() {
            return (model, history, iterations);
        }
        model = m_step(&model, counts, cfg.initial);
        iterations += 1;
    }
}

/// Fits an `n_states`-state model to `data` over symbols `1..=alphabet_size`.
///
/// Each of `cfg.restarts` runs starts from Dirichlet(1) rows drawn from its
/// own seeded stream; the run with the highest final log-likelihood wins,
/// earlier restarts winning ties. In `PadStop` mode the returned model has
/// `alphabet_size + 1` symbols.
pub fn baum_welch(
    data: &[Vec<usize>],
    n_states: usize,
    alphabet_size: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, HmmError> {
    if cfg.max_iters == 0 || cfg.restarts == 0 || n_states == 0 || alphabet_size == 0 {
        return Err(HmmError::InvalidConfig(
            "max_iters, restarts, states and alphabet must all be at least 1".into(),
        ));
    }
    if data.is_empty() {
        return Err(HmmError::EmptyData);
    }
    for seq in data {
        if seq.is_empty() {
            return Err(HmmError::EmptySequence);
        }
        if let Some(&s) = seq.iter().find(|&&s| s == 0 || s > alphabet_size) {
            return Err(HmmError::AlphabetMismatch(format!(
                "symbol {s} outside 1..={alphabet_size}"
            )));
        }
    }

    let (train, symbols): (Vec<Vec<usize>>, usize) = match cfg.length_mode {
        LengthMode::Native => (data.to_vec(), alphabet_size),
        LengthMode::PadStop => {
            let longest = data.iter().map(Vec::len).max().unwrap_or(0);
            let stop = alphabet_size + 1;
            (data.iter().map(|s| pad_to(s, longest, stop)).collect(), stop)
        }
    };

    let mut best: Option<TrainOutcome> = None;
    for restart in 0..cfg.restarts {
        let mut rng = seed::rng(seed::derive_index(cfg.seed, restart as u64));
        let mut start = Hmm::random(n_states, symbols, 1.0, &mut rng);
        if cfg.initial == InitialMode::Uniform {
            start.initial = vec![1.0 / n_states as f64; n_states];
        }
        let (hmm, ll_history, iterations) = run_em(start, &train, cfg);
        let outcome = TrainOutcome { hmm, ll_history, iterations, restart };
        let better = match &best {
            None => true,
            Some(b) => outcome.log_likelihood() > b.log_likelihood(),
        };
        if better {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one restart"))
}
