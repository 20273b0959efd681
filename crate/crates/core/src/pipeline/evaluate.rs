use std::collections::{BTreeMap, BTreeSet};

use super::{PipelineError, RunConfig, Subset};
use crate::classify::split;
use crate::hmm::{train_bank, HmmError};
use crate::seed;

const MIN_SEQUENCES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub target: String,
    pub set: Vec<String>,
    pub test: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn mean_accuracy(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.accuracy).sum::<f64>() / self.rows.len() as f64
    }
}

/// Every word against the whole vocabulary.
fn default_subsets(data: &BTreeMap<String, Vec<Vec<usize>>>) -> Vec<Subset> {
    let all: Vec<String> = data.keys().cloned().collect();
    all.iter()
        .map(|w| Subset { target: w.clone(), set: all.clone() })
        .collect()
}

pub fn evaluate(
    data: &BTreeMap<String, Vec<Vec<usize>>>,
    subsets: &[Subset],
    cfg: &RunConfig,
) -> Result<EvalReport, PipelineError> {
    evaluate_with_hook(data, subsets, cfg, |_, _| {})
}

/// Splits each word's sequences independently, trains one model per word
/// on its training part only, and decodes each target's test sequences
/// against the models of its candidate set. `hook` sees every word with
/// the indices of the sequences handed to training. An empty `subsets`
/// evaluates every word against all words.
pub fn evaluate_with_hook<H>(
    data: &BTreeMap<String, Vec<Vec<usize>>>,
    subsets: &[Subset],
    cfg: &RunConfig,
    hook: H,
) -> Result<EvalReport, PipelineError>
where
    H: Fn(&str, &[usize]),
{
    let defaults;
    let subsets = if subsets.is_empty() {
        defaults = default_subsets(data);
        &defaults[..]
    } else {
        subsets
    };
    let mut needed = BTreeSet::new();
    for s in subsets {
        if !s.set.contains(&s.target) {
            return Err(PipelineError::Config(format!(
                "candidate set of {:?} does not contain it",
                s.target
            )));
        }
        needed.extend(s.set.iter().map(String::as_str));
    }
    let mut splits = BTreeMap::new();
    let mut train_data = BTreeMap::new();
    for &word in &needed {
        let seqs = data
            .get(word)
            .ok_or_else(|| PipelineError::UnknownWord(word.to_string()))?;
        if seqs.len() < MIN_SEQUENCES {
            return Err(HmmError::TooFewSequences {
                word: word.to_string(),
                count: seqs.len(),
                needed: MIN_SEQUENCES,
            }
            .into());
        }
        let (train, test) = split(seqs.len(), cfg.split_fraction, seed::derive(cfg.seed, &format!("split/{word}")));
        hook(word, &train);
        train_data.insert(word.to_string(), train.iter().map(|&i| seqs[i].clone()).collect::<Vec<_>>());
        splits.insert(word, test);
    }
    let plan = cfg.state_plan(needed.iter().copied())?;
    let bank = train_bank(&train_data, cfg.hmm_alphabet(), &plan, &cfg.train_config())?;

    let mut rows = Vec::with_capacity(subsets.len());
    for s in subsets {
        let sub = bank.subset(s.set.iter().map(String::as_str));
        let test = &splits[s.target.as_str()];
        let mut correct = 0;
        for &i in test {
            if sub.decode(&data[&s.target][i])?.word == s.target {
                correct += 1;
            }
        }
        rows.push(EvalRow {
            target: s.target.clone(),
            set: s.set.clone(),
            test: test.len(),
            correct,
            accuracy: if test.is_empty() { 0.0 } else { correct as f64 / test.len() as f64 },
        });
    }
    Ok(EvalReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format {other:?}, expected text or csv")),
        }
    }
}

/// Renders the report as an aligned-free `Word | Set | Accuracy` table
/// (accuracy in percent, one decimal) or as CSV.
pub fn report_render(r: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => {
            let mut out = String::from("Word | Set | Accuracy\n");
            for row in &r.rows {
                out.push_str(&format!(
                    "{} | {} | {:.1} %\n",
                    row.target,
                    row.set.join(", "),
                    row.accuracy * 100.0
                ));
            }
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["word", "set", "test", "correct", "accuracy"])
                .expect("in-memory write");
            for row in &r.rows {
                w.write_record([
                    row.target.clone(),
                    row.set.join(" "),
                    row.test.to_string(),
                    row.correct.to_string(),
                    row.accuracy.to_string(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
        }
    }
}
