//! CSV and JSON artifacts. Every table has a header row.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ClassifiedSequence, EvalReport, EvalRow, PipelineError};

/// One frame's feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub video_id: String,
    /// 1-based.
    pub frame: usize,
    pub values: Vec<f64>,
}

/// One frame's ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub video_id: String,
    pub frame: usize,
    pub phoneme: usize,
    pub phoneme_label: String,
    pub viseme: usize,
    pub viseme_label: String,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> PipelineError + '_ {
    move |source| PipelineError::Csv { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, line: usize, message: impl std::fmt::Display) -> PipelineError {
    PipelineError::Format {
        path: path.to_path_buf(),
        message: format!("record {line}: {message}"),
    }
}

fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), PipelineError> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(header).map_err(&err)?;
    for row in rows {
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn read_table(path: &Path, expected: &[&str]) -> Result<Vec<csv::StringRecord>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        });
    }
    let err = csv_err(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header = r.headers().map_err(&err)?.clone();
    if header.len() < expected.len() || expected.iter().zip(header.iter()).any(|(e, h)| *e != h) {
        return Err(format_err(path, 0, format!("expected columns {}", expected.join(","))));
    }
    r.records().collect::<Result<_, _>>().map_err(err)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, line: usize) -> Result<T, PipelineError> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| format_err(path, line, format!("bad value in column {}", i + 1)))
}

fn symbols_to_string(symbols: &[usize]) -> String {
    symbols.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn parse_symbols(path: &Path, text: &str, line: usize) -> Result<Vec<usize>, PipelineError> {
    text.split_whitespace()
        .map(|s| s.parse().map_err(|_| format_err(path, line, format!("bad symbol {s:?}"))))
        .collect()
}

pub fn write_features(path: &Path, rows: &[FeatureRow]) -> Result<(), PipelineError> {
    let dim = rows.first().map_or(0, |r| r.values.len());
    let mut header = vec!["video_id".to_string(), "frame".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    write_table(
        path,
        &header,
        rows.iter().map(|r| {
            let mut rec = vec![r.video_id.clone(), r.frame.to_string()];
            rec.extend(r.values.iter().map(f64::to_string));
            rec
        }),
    )
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>, PipelineError> {
    let records = read_table(path, &["video_id", "frame"])?;
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 1;
            let values = (2..rec.len())
                .map(|j| field::<f64>(path, rec, j, line))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FeatureRow {
                video_id: rec[0].to_string(),
                frame: field(path, rec, 1, line)?,
                values,
            })
        })
        .collect()
}

const LABEL_HEADER: [&str; 6] = ["video_id", "frame", "phoneme", "phoneme_label", "viseme", "viseme_label"];

pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<(), PipelineError> {
    write_table(
        path,
        &LABEL_HEADER.map(String::from),
        rows.iter().map(|r| {
            vec![
                r.video_id.clone(),
                r.frame.to_string(),
                r.phoneme.to_string(),
                r.phoneme_label.clone(),
                r.viseme.to_string(),
                r.viseme_label.clone(),
            ]
        }),
    )
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>, PipelineError> {
    read_table(path, &LABEL_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 1;
            Ok(LabelRow {
                video_id: rec[0].to_string(),
                frame: field(path, rec, 1, line)?,
                phoneme: field(path, rec, 2, line)?,
                phoneme_label: rec[3].to_string(),
                viseme: field(path, rec, 4, line)?,
                viseme_label: rec[5].to_string(),
            })
        })
        .collect()
}

pub fn write_sequences(path: &Path, seqs: &[ClassifiedSequence]) -> Result<(), PipelineError> {
    write_table(
        path,
        &["video_id".into(), "symbols".into()],
        seqs.iter().map(|s| vec![s.video_id.clone(), symbols_to_string(&s.symbols)]),
    )
}

pub fn read_sequences(path: &Path) -> Result<Vec<ClassifiedSequence>, PipelineError> {
    read_table(path, &["video_id", "symbols"])?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok(ClassifiedSequence {
                video_id: rec[0].to_string(),
                symbols: parse_symbols(path, &rec[1], i + 1)?,
            })
        })
        .collect()
}

/// Word sequence sets, one row per sequence, `instance` numbering each
/// word's sequences from 0.
pub fn write_word_sequences(path: &Path, data: &BTreeMap<String, Vec<Vec<usize>>>) -> Result<(), PipelineError> {
    write_table(
        path,
        &["word".into(), "instance".into(), "symbols".into()],
        data.iter().flat_map(|(word, seqs)| {
            seqs.iter()
                .enumerate()
                .map(move |(i, s)| vec![word.clone(), i.to_string(), symbols_to_string(s)])
        }),
    )
}

pub fn read_word_sequences(path: &Path) -> Result<BTreeMap<String, Vec<Vec<usize>>>, PipelineError> {
    let mut rows: BTreeMap<String, Vec<(usize, Vec<usize>)>> = BTreeMap::new();
    for (i, rec) in read_table(path, &["word", "instance", "symbols"])?.iter().enumerate() {
        let line = i + 1;
        let instance: usize = field(path, rec, 1, line)?;
        let symbols = parse_symbols(path, &rec[2], line)?;
        if symbols.is_empty() {
            return Err(format_err(path, line, "empty sequence"));
        }
        rows.entry(rec[0].to_string()).or_default().push((instance, symbols));
    }
    Ok(rows
        .into_iter()
        .map(|(word, mut seqs)| {
            seqs.sort_by_key(|(i, _)| *i);
            (word, seqs.into_iter().map(|(_, s)| s).collect())
        })
        .collect())
}

const REPORT_HEADER: [&str; 5] = ["word", "set", "test", "correct", "accuracy"];

pub fn write_report(path: &Path, report: &EvalReport) -> Result<(), PipelineError> {
    let text = super::report_render(report, super::ReportFormat::Csv);
    std::fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn read_report(path: &Path) -> Result<EvalReport, PipelineError> {
    let rows = read_table(path, &REPORT_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 1;
            Ok(EvalRow {
                target: rec[0].to_string(),
                set: rec[1].split_whitespace().map(String::from).collect(),
                test: field(path, rec, 2, line)?,
                correct: field(path, rec, 3, line)?,
                accuracy: field(path, rec, 4, line)?,
            })
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(EvalReport { rows })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let rows = vec![
            FeatureRow { video_id: "a".into(), frame: 1, values: vec![0.1, 1.0 / 3.0, 0.0] },
            FeatureRow { video_id: "a".into(), frame: 2, values: vec![1e-300, 2.5, 1.0] },
        ];
        write_features(&path, &rows).unwrap();
        assert_eq!(read_features(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("video_id,frame,f0,f1,f2\n"));
    }

    #[test]
    fn word_sequences_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let data = BTreeMap::from([
            ("bin".to_string(), vec![vec![1, 2, 3], vec![4]]),
            ("blue".to_string(), vec![vec![5, 5]]),
        ]);
        write_word_sequences(&path, &data).unwrap();
        assert_eq!(read_word_sequences(&path).unwrap(), data);
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "video,symbols\na,1 2\n").unwrap();
        assert!(matches!(read_sequences(&path), Err(PipelineError::Format { .. })));
        std::fs::write(&path, "video_id,symbols\na,1 x\n").unwrap();
        assert!(matches!(read_sequences(&path), Err(PipelineError::Format { .. })));
    }
}
