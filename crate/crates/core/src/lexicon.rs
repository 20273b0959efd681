//! Phoneme and viseme inventories, the phoneme-to-viseme table and the
//! word pronunciation dictionary.
//!
//! Phoneme and viseme ids are 1-based. Speech phonemes come first in table
//! order; when silence is enabled, `sil` takes the next phoneme index and
//! maps to its own viseme placed after the eleven speech visemes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label of the silence phoneme.
pub const SILENCE: &str = "sil";

/// Label of the silence viseme.
pub const SILENCE_VISEME: &str = "SIL";

/// The Lee and York phoneme-to-viseme table, rows in viseme order.
pub const VISEME_GROUPS: [(&str, &[&str]); 11] = [
    ("P", &["b", "p", "m"]),
    ("T", &["d", "t", "s", "z", "th", "dh"]),
    ("K", &["g", "k", "n", "l", "y", "hh"]),
    ("CH", &["jh", "ch"]),
    ("F", &["f", "v"]),
    ("W", &["r", "w"]),
    ("IY", &["iy", "ih"]),
    ("EH", &["eh", "ey", "ae"]),
    ("AA", &["aa", "aw", "ay", "ah"]),
    ("A0", &["ao", "oy", "ow"]),
    ("UH", &["uh", "uw"]),
];

const BUNDLED_LEXICON: &str = include_str!("../data/grid.lex");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed line {0}")]
    MalformedLine(usize),
    #[error("unknown phoneme {label:?} on line {line}")]
    UnknownPhoneme { label: String, line: usize },
    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("phoneme {0:?} assigned to more than one viseme")]
    DuplicatePhoneme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhonemeId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VisemeId(pub u16);

impl PhonemeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl VisemeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Many-to-one map from phonemes to visemes. Also owns the phoneme
/// inventory: the set of speech phonemes is exactly the union of the
/// viseme groups, so `viseme_of` is total over ids issued by the map.
#[derive(Debug, Clone, PartialEq)]
pub struct VisemeMap {
    phonemes: Vec<String>,
    viseme_labels: Vec<String>,
    // 1-based viseme index of each speech phoneme
    assignment: Vec<u16>,
    silence: bool,
}

impl VisemeMap {
    /// The bundled table with the silence symbol enabled.
    pub fn bundled() -> Self {
        Self::bundled_with_silence(true)
    }

    pub fn bundled_with_silence(silence: bool) -> Self {
        Self::from_groups(&VISEME_GROUPS, silence).expect("bundled table is a partition")
    }

    /// Builds a map from `(viseme label, phonemes)` rows. Row order fixes the
    /// viseme indices and, flattened, the phoneme indices.
    pub fn from_groups<L, P>(groups: &[(L, P)], silence: bool) -> Result<Self, LexiconError>
    where
        L: AsRef<str>,
        P: AsRef<[&'static str]>,
    {
        let rows: Vec<(String, Vec<String>)> = groups
            .iter()
            .map(|(label, members)| {
                (
                    label.as_ref().to_string(),
                    members.as_ref().iter().map(|m| m.to_string()).collect(),
                )
            })
            .collect();
        Self::from_rows(rows, silence)
    }

    fn from_rows(rows: Vec<(String, Vec<String>)>, silence: bool) -> Result<Self, LexiconError> {
        let mut phonemes = Vec::new();
        let mut assignment = Vec::new();
        let mut viseme_labels = Vec::with_capacity(rows.len());
        for (v, (label, members)) in rows.into_iter().enumerate() {
            viseme_labels.push(label);
            for m in members {
                let m = m.to_lowercase();
                if m == SILENCE || phonemes.contains(&m) {
                    return Err(LexiconError::DuplicatePhoneme(m));
                }
                phonemes.push(m);
                assignment.push(v as u16 + 1);
            }
        }
        Ok(Self {
            phonemes,
            viseme_labels,
            assignment,
            silence,
        })
    }

    /// Reads a map in lexicon layout: `VISEME ph ph ...` per line.
    pub fn load(path: &Path, silence: bool) -> Result<Self, LexiconError> {
        let text = read_text(path)?;
        let mut rows = Vec::new();
        for (lineno, line) in content_lines(&text) {
            let mut tokens = line.split_whitespace();
            let label = tokens.next().ok_or(LexiconError::MalformedLine(lineno))?;
            let members: Vec<String> = tokens.map(str::to_string).collect();
            if members.is_empty() {
                return Err(LexiconError::MalformedLine(lineno));
            }
            rows.push((label.to_string(), members));
        }
        Self::from_rows(rows, silence)
    }

    pub fn silence_enabled(&self) -> bool {
        self.silence
    }

    pub fn speech_phonemes(&self) -> &[String] {
        &self.phonemes
    }

    pub fn speech_viseme_labels(&self) -> &[String] {
        &self.viseme_labels
    }

    /// Phoneme alphabet size, including silence when enabled.
    pub fn n_phonemes(&self) -> usize {
        self.phonemes.len() + usize::from(self.silence)
    }

    /// Viseme alphabet size, including silence when enabled.
    pub fn n_visemes(&self) -> usize {
        self.viseme_labels.len() + usize::from(self.silence)
    }

    pub fn phoneme(&self, label: &str) -> Option<PhonemeId> {
        let label = label.to_lowercase();
        if label == SILENCE {
            return self.silence_phoneme();
        }
        self.phonemes
            .iter()
            .position(|p| *p == label)
            .map(|i| PhonemeId(i as u16 + 1))
    }

    pub fn silence_phoneme(&self) -> Option<PhonemeId> {
        self.silence
            .then(|| PhonemeId(self.phonemes.len() as u16 + 1))
    }

    pub fn silence_viseme(&self) -> Option<VisemeId> {
        self.silence
            .then(|| VisemeId(self.viseme_labels.len() as u16 + 1))
    }

    pub fn phoneme_label(&self, p: PhonemeId) -> &str {
        match self.phonemes.get(p.index().wrapping_sub(1)) {
            Some(label) => label,
            None if Some(p) == self.silence_phoneme() => SILENCE,
            None => panic!("phoneme id {} outside the inventory", p.0),
        }
    }

    pub fn viseme_label(&self, v: VisemeId) -> &str {
        match self.viseme_labels.get(v.index().wrapping_sub(1)) {
            Some(label) => label,
            None if Some(v) == self.silence_viseme() => SILENCE_VISEME,
            None => panic!("viseme id {} outside the inventory", v.0),
        }
    }

    /// Viseme of a phoneme issued by this map.
    ///
    /// Panics on an id that did not come from this map's inventory.
    pub fn viseme_of(&self, p: PhonemeId) -> VisemeId {
        match self.assignment.get(p.index().wrapping_sub(1)) {
            Some(&v) => VisemeId(v),
            None => match (self.silence_phoneme(), self.silence_viseme()) {
                (Some(sp), Some(sv)) if sp == p => sv,
                _ => panic!("phoneme id {} outside the inventory", p.0),
            },
        }
    }

    /// Number of speech phonemes mapped to each speech viseme.
    pub fn preimage_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.viseme_labels.len()];
        for &v in &self.assignment {
            sizes[v as usize - 1] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapViolation {
    VisemeCount { found: usize, expected: usize },
    VisemeLabel { index: usize, found: String, expected: String },
    MissingPhoneme(String),
    UnexpectedPhoneme(String),
    WrongViseme { phoneme: String, found: String, expected: String },
}

impl fmt::Display for MapViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VisemeCount { found, expected } => {
                write!(f, "{found} visemes, expected {expected}")
            }
            Self::VisemeLabel { index, found, expected } => {
                write!(f, "viseme {index} is labelled {found}, expected {expected}")
            }
            Self::MissingPhoneme(p) => write!(f, "phoneme {p} is not mapped"),
            Self::UnexpectedPhoneme(p) => write!(f, "phoneme {p} is not in the table"),
            Self::WrongViseme { phoneme, found, expected } => {
                write!(f, "phoneme {phoneme} maps to {found}, expected {expected}")
            }
        }
    }
}

/// Compares a map against the bundled table. Inventory size mismatches
/// surface as missing or unexpected phonemes, one violation per phoneme.
pub fn validate_map(map: &VisemeMap) -> Vec<MapViolation> {
    let mut violations = Vec::new();
    if map.viseme_labels.len() != VISEME_GROUPS.len() {
        violations.push(MapViolation::VisemeCount {
            found: map.viseme_labels.len(),
            expected: VISEME_GROUPS.len(),
        });
    }
    for (i, (expected, _)) in VISEME_GROUPS.iter().enumerate() {
        if let Some(found) = map.viseme_labels.get(i) {
            if found != expected {
                violations.push(MapViolation::VisemeLabel {
                    index: i + 1,
                    found: found.clone(),
                    expected: expected.to_string(),
                });
            }
        }
    }
    for (expected, members) in VISEME_GROUPS.iter() {
        for &p in members.iter() {
            match map.phoneme(p) {
                None => violations.push(MapViolation::MissingPhoneme(p.to_string())),
                Some(id) => {
                    let found = map.viseme_label(map.viseme_of(id));
                    if found != *expected {
                        violations.push(MapViolation::WrongViseme {
                            phoneme: p.to_string(),
                            found: found.to_string(),
                            expected: expected.to_string(),
                        });
                    }
                }
            }
        }
    }
    for p in &map.phonemes {
        if !VISEME_GROUPS.iter().any(|(_, members)| members.contains(&p.as_str())) {
            violations.push(MapViolation::UnexpectedPhoneme(p.clone()));
        }
    }
    violations
}

/// Word to phoneme-sequence dictionary. Keys are lowercase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PronunciationDict {
    entries: BTreeMap<String, Vec<PhonemeId>>,
}

impl PronunciationDict {
    /// The GRID vocabulary shipped with the crate.
    pub fn bundled(map: &VisemeMap) -> Self {
        Self::parse(BUNDLED_LEXICON, map).expect("bundled lexicon is valid")
    }

    /// Parses `word PH1 PH2 ...` lines. Stress digits are stripped, labels
    /// lowercased; the first entry for a repeated word wins.
    pub fn parse(text: &str, map: &VisemeMap) -> Result<Self, LexiconError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in content_lines(text) {
            let mut tokens = line.split_whitespace();
            let word = tokens.next().ok_or(LexiconError::MalformedLine(lineno))?;
            let mut phones = Vec::new();
            for token in tokens {
                let label = strip_stress(token).to_lowercase();
                match map.phoneme(&label) {
                    Some(id) if label != SILENCE => phones.push(id),
                    _ => return Err(LexiconError::UnknownPhoneme { label, line: lineno }),
                }
            }
            if phones.is_empty() {
                return Err(LexiconError::MalformedLine(lineno));
            }
            entries.entry(word.to_lowercase()).or_insert(phones);
        }
        Ok(Self { entries })
    }

    pub fn pronounce(&self, word: &str) -> Result<&[PhonemeId], LexiconError> {
        self.entries
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
            .ok_or_else(|| LexiconError::UnknownWord(word.to_string()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_lexicon(path: &Path, map: &VisemeMap) -> Result<PronunciationDict, LexiconError> {
    PronunciationDict::parse(&read_text(path)?, map)
}

pub fn pronounce<'a>(dict: &'a PronunciationDict, word: &str) -> Result<&'a [PhonemeId], LexiconError> {
    dict.pronounce(word)
}

fn strip_stress(token: &str) -> &str {
    token.trim_end_matches(['0', '1', '2'])
}

fn read_text(path: &Path) -> Result<String, LexiconError> {
    if !path.exists() {
        return Err(LexiconError::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-empty, non-comment lines with 1-based line numbers; text after `#`
/// is ignored.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}
