use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{io, ClassifiedSequence, DatasetManifest, PipelineError, VideoEntry};
use crate::alignment::{Transcript, WordInterval};
use crate::hmm::Hmm;
use crate::seed;

/// Synthetic corpus description: one random generator per word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub words: Vec<String>,
    pub n_states: usize,
    pub alphabet_size: usize,
    pub instances: usize,
    /// Probability that a symbol is replaced by a uniform random one.
    pub noise: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Dirichlet concentration of the generators' rows.
    pub concentration: f64,
    /// Length of the packed videos.
    pub frames_per_video: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            words: ["bin", "blue", "lay", "place", "set"].map(String::from).to_vec(),
            n_states: 3,
            alphabet_size: 11,
            instances: 40,
            noise: 0.1,
            min_len: 12,
            max_len: 24,
            concentration: 0.3,
            frames_per_video: 74,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(format!("synth: {m}")));
        if self.words.is_empty() {
            return bad("word list is empty");
        }
        if self.words.iter().collect::<BTreeSet<_>>().len() != self.words.len() {
            return bad("duplicate words");
        }
        if self.words.iter().any(|w| w.is_empty() || w.chars().any(char::is_whitespace)) {
            return bad("words must be non-empty and free of whitespace");
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1)");
        }
        if self.instances < 4 {
            return bad("at least 4 instances per word are needed");
        }
        if self.n_states == 0 || self.alphabet_size == 0 {
            return bad("n_states and alphabet_size must be positive");
        }
        if self.min_len == 0 || self.min_len > self.max_len || self.max_len > self.frames_per_video {
            return bad("need 1 <= min_len <= max_len <= frames_per_video");
        }
        if !(self.concentration > 0.0) {
            return bad("concentration must be positive");
        }
        Ok(())
    }
}

/// Generated corpus: per-word sequence sets, and the same instances packed
/// back to back into fixed-length videos with matching transcripts.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub generators: BTreeMap<String, Hmm>,
    pub words: BTreeMap<String, Vec<Vec<usize>>>,
    pub videos: Vec<ClassifiedSequence>,
    pub transcripts: BTreeMap<String, Transcript>,
}

pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SynthCorpus, PipelineError> {
    spec.validate()?;
    let m = spec.alphabet_size;
    let generators: BTreeMap<String, Hmm> = spec
        .words
        .iter()
        .map(|w| {
            let mut rng = seed::rng(seed::derive(seed, &format!("generator/{w}")));
            (w.clone(), Hmm::random(spec.n_states, m, spec.concentration, &mut rng))
        })
        .collect();

    let mut words: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    for w in &spec.words {
        let base = seed::derive(seed, &format!("instance/{w}"));
        let seqs = (0..spec.instances)
            .map(|i| {
                let mut rng = seed::rng(seed::derive_index(base, i as u64));
                let len = rng.random_range(spec.min_len..=spec.max_len);
                let mut seq = generators[w].sample_with(len, &mut rng);
                for s in &mut seq {
                    if rng.random::<f64>() < spec.noise {
                        *s = rng.random_range(1..=m);
                    }
                }
                seq
            })
            .collect();
        words.insert(w.clone(), seqs);
    }

    // pack instance 0 of every word, then instance 1, ... into videos;
    // trailing frames are uniform filler outside every interval
    let fpv = spec.frames_per_video;
    let mut packed: Vec<(Vec<usize>, Vec<WordInterval>)> = vec![(Vec::new(), Vec::new())];
    for i in 0..spec.instances {
        for w in &spec.words {
            let seq = &words[w][i];
            if packed.last().expect("non-empty").0.len() + seq.len() > fpv {
                packed.push((Vec::new(), Vec::new()));
            }
            let (symbols, intervals) = packed.last_mut().expect("non-empty");
            intervals.push(WordInterval {
                word: w.clone(),
                start_frame: symbols.len() + 1,
                end_frame: symbols.len() + seq.len(),
            });
            symbols.extend_from_slice(seq);
        }
    }
    let width = packed.len().to_string().len().max(4);
    let mut videos = Vec::with_capacity(packed.len());
    let mut transcripts = BTreeMap::new();
    for (v, (mut symbols, intervals)) in packed.into_iter().enumerate() {
        let video_id = format!("synth_{:0width$}", v + 1);
        let mut rng = seed::rng(seed::derive(seed, &format!("filler/{video_id}")));
        while symbols.len() < fpv {
            symbols.push(rng.random_range(1..=m));
        }
        transcripts.insert(video_id.clone(), Transcript::new(&video_id, intervals, fpv)?);
        videos.push(ClassifiedSequence { video_id, symbols });
    }
    Ok(SynthCorpus { generators, words, videos, transcripts })
}

impl SynthCorpus {
    /// Writes `words.csv`, `sequences.csv`, `generators.json`,
    /// `transcripts/<video>.txt` and a `manifest.json` tying them together.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        let tdir = dir.join("transcripts");
        std::fs::create_dir_all(&tdir).map_err(io_err(&tdir))?;
        io::write_word_sequences(&dir.join("words.csv"), &self.words)?;
        io::write_sequences(&dir.join("sequences.csv"), &self.videos)?;
        io::write_json(&dir.join("generators.json"), &self.generators)?;
        let mut entries = Vec::new();
        let mut frames = 0;
        for (video_id, t) in &self.transcripts {
            let mut text = String::new();
            for iv in &t.intervals {
                writeln!(text, "{} {} {}", iv.start_frame, iv.end_frame, iv.word).expect("string write");
            }
            let rel = PathBuf::from("transcripts").join(format!("{video_id}.txt"));
            let path = dir.join(&rel);
            std::fs::write(&path, text).map_err(io_err(&path))?;
            frames = t.total_frames;
            entries.push(VideoEntry {
                video_id: video_id.clone(),
                frame_pattern: "frames/{video_id}_{frame:03}.ppm".into(),
                transcript: rel,
                roi: None,
            });
        }
        DatasetManifest {
            root: PathBuf::new(),
            frames_per_video: frames,
            units_per_frame: 1.0,
            videos: entries,
        }
        .save(&dir.join("manifest.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::bin_sort;

    fn small() -> SynthSpec {
        SynthSpec {
            words: vec!["bin".into(), "red".into(), "now".into()],
            instances: 6,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_generate(&small(), 3).unwrap();
        assert_eq!(a, synth_generate(&small(), 3).unwrap());
        assert_ne!(a.words, synth_generate(&small(), 4).unwrap().words);
    }

    #[test]
    fn shapes_and_ranges() {
        let spec = small();
        let c = synth_generate(&spec, 1).unwrap();
        for seqs in c.words.values() {
            assert_eq!(seqs.len(), spec.instances);
            for s in seqs {
                assert!((spec.min_len..=spec.max_len).contains(&s.len()));
                assert!(s.iter().all(|&x| (1..=spec.alphabet_size).contains(&x)));
            }
        }
        for v in &c.videos {
            assert_eq!(v.symbols.len(), spec.frames_per_video);
        }
    }

    #[test]
    fn videos_bin_sort_back_to_words() {
        let c = synth_generate(&small(), 9).unwrap();
        assert_eq!(bin_sort(&c.videos, &c.transcripts).unwrap(), c.words);
    }

    #[test]
    fn zero_noise_is_pure_generator_output() {
        let spec = SynthSpec { noise: 0.0, ..small() };
        let c = synth_generate(&spec, 5).unwrap();
        for (w, seqs) in &c.words {
            for s in seqs {
                assert!(c.generators[w].forward_log_likelihood(s).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn full_noise_is_uniform() {
        let spec = SynthSpec {
            words: vec!["x".into()],
            noise: 1.0 - 1e-12,
            instances: 10_000,
            min_len: 10,
            max_len: 10,
            ..SynthSpec::default()
        };
        let c = synth_generate(&spec, 2).unwrap();
        let mut counts = vec![0usize; spec.alphabet_size];
        for s in c.words["x"].iter().flatten() {
            counts[s - 1] += 1;
        }
        let total = 100_000.0;
        for &n in &counts {
            assert!((n as f64 / total - 1.0 / spec.alphabet_size as f64).abs() < 0.02);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(synth_generate(&SynthSpec { noise: 1.0, ..small() }, 0).is_err());
        assert!(synth_generate(&SynthSpec { instances: 3, ..small() }, 0).is_err());
        assert!(synth_generate(&SynthSpec { max_len: 80, ..small() }, 0).is_err());
    }

    #[test]
    fn written_corpus_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let c = synth_generate(&small(), 4).unwrap();
        c.write(dir.path()).unwrap();
        let m = DatasetManifest::load(&dir.path().join("manifest.json")).unwrap();
        let ts = m.transcripts(None).unwrap();
        assert_eq!(ts, c.transcripts);
        let seqs = io::read_sequences(&dir.path().join("sequences.csv")).unwrap();
        assert_eq!(bin_sort(&seqs, &ts).unwrap(), c.words);
        assert_eq!(io::read_word_sequences(&dir.path().join("words.csv")).unwrap(), c.words);
    }
}
