use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lipread::alignment::{label_frames, Transcript};
use lipread::lexicon::{PronunciationDict, VisemeMap};
use lipread::lip_extract::RasterFrame;

const FRAMES: usize = 74;

fn lipread(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipread"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn mouth(open: usize) -> RasterFrame {
    // skin with a red lip ring whose opening grows with `open`
    let (w, h) = (28, 20);
    let mut f = RasterFrame::filled(w, h, [222, 170, 148]);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = ((x as f64 - 14.0) / 11.0, (y as f64 - 10.0) / (3.0 + open as f64 * 0.5));
            let (ix, iy) = ((x as f64 - 14.0) / 7.0, (y as f64 - 10.0) / (0.5 + open as f64 * 0.4));
            if ix * ix + iy * iy <= 1.0 {
                f.set_pixel(x, y, [60, 25, 30]);
            } else if dx * dx + dy * dy <= 1.0 {
                f.set_pixel(x, y, [185, 55, 72]);
            }
        }
    }
    f
}

/// Two videos of rendered mouths whose shape follows the viseme track.
fn dataset(dir: &Path) -> PathBuf {
    let map = VisemeMap::bundled();
    let dict = PronunciationDict::bundled(&map);
    std::fs::create_dir_all(dir.join("frames")).unwrap();
    std::fs::create_dir_all(dir.join("transcripts")).unwrap();
    let scripts = [
        ("s1_v1", "1000 9000 bin\n12000 20000 blue\n24000 31000 at\n35000 44000 bin\n47000 55000 blue\n60000 70000 at\n"),
        ("s1_v2", "2000 10000 blue\n13000 21000 bin\n25000 33000 at\n36000 44000 blue\n48000 57000 bin\n61000 69000 at\n"),
    ];
    let mut videos = Vec::new();
    for (id, text) in scripts {
        std::fs::write(dir.join(format!("transcripts/{id}.txt")), text).unwrap();
        let t = Transcript::parse(text, id, 1000.0, FRAMES).unwrap();
        let labels = label_frames(&t, &dict, &map).unwrap();
        for (i, v) in labels.visemes.iter().enumerate() {
            let mut frame = RasterFrame::filled(40, 30, [120, 90, 80]);
            let m = mouth(v.index() % 6);
            for y in 0..m.height {
                for x in 0..m.width {
                    frame.set_pixel(x + 6, y + 5, m.pixel(x, y));
                }
            }
            frame.save_ppm(&dir.join(format!("frames/{id}_{:03}.ppm", i + 1))).unwrap();
        }
        videos.push(format!(
            r#"{{"video_id": "{id}", "transcript": "transcripts/{id}.txt", "roi": {{"x": 6, "y": 5, "w": 28, "h": 20}}}}"#
        ));
    }
    let manifest = dir.join("manifest.json");
    std::fs::write(
        &manifest,
        format!(r#"{{"units_per_frame": 1000, "videos": [{}]}}"#, videos.join(", ")),
    )
    .unwrap();
    std::fs::write(
        dir.join("config.json"),
        r#"{"grid_w": 8, "grid_h": 4, "kmeans_k": 3, "svd_rank": 10, "hmm": {"restarts": 2, "max_iters": 30},
            "subsets": [{"target": "bin", "set": ["bin", "blue"]}, {"target": "at", "set": ["at", "bin", "blue"]}]}"#,
    )
    .unwrap();
    manifest
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_pipeline_from_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    dataset(dir);
    let c = ["--config", "config.json", "--seed", "5"];
    let run = |args: &[&str]| lipread(dir, &[&c[..], args].concat());

    ok(&run(&["extract", "--manifest", "manifest.json", "--out", "features.csv"]));
    let features = std::fs::read_to_string(dir.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 1 + 2 * FRAMES);
    assert!(features.starts_with("video_id,frame,f0,"));
    ok(&run(&["extract", "--manifest", "manifest.json", "--out", "features2.csv"]));
    assert_eq!(std::fs::read(dir.join("features2.csv")).unwrap(), features.as_bytes());

    ok(&run(&["align", "--manifest", "manifest.json", "--out", "labels.csv"]));
    let labels = std::fs::read_to_string(dir.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1 + 2 * FRAMES);
    assert!(labels.lines().nth(1).unwrap().starts_with("s1_v1,1,"));

    let trained = run(&["train-classifier", "--features", "features.csv", "--labels", "labels.csv", "--out", "model.json"]);
    ok(&trained);
    let summary = String::from_utf8_lossy(&trained.stdout);
    let accuracy: f64 = summary.split_whitespace().last().unwrap().parse().unwrap();
    assert!(accuracy > 0.5, "{summary}");

    ok(&run(&["classify", "--features", "features.csv", "--model", "model.json", "--manifest", "manifest.json", "--out", "sequences.csv"]));
    let seqs = std::fs::read_to_string(dir.join("sequences.csv")).unwrap();
    for line in seqs.lines().skip(1) {
        let symbols: Vec<usize> = line.split(',').nth(1).unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(symbols.len(), FRAMES);
        assert!(symbols.iter().all(|&s| (1..=12).contains(&s)));
    }

    ok(&run(&["binsort", "--sequences", "sequences.csv", "--manifest", "manifest.json", "--out", "words.csv"]));
    let words = std::fs::read_to_string(dir.join("words.csv")).unwrap();
    assert_eq!(words.lines().filter(|l| l.starts_with("bin,")).count(), 4);

    ok(&run(&["train-hmm", "--words", "words.csv", "--out", "bank.json"]));
    let bank: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("bank.json")).unwrap()).unwrap();
    assert_eq!(bank["models"].as_object().unwrap().len(), 3);

    ok(&run(&["evaluate", "--words", "words.csv", "--out", "report.csv"]));
    let text = run(&["report", "--input", "report.csv"]);
    ok(&text);
    let text = String::from_utf8(text.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Word | Set | Accuracy");
    assert!(lines[1].starts_with("bin | bin, blue | "));
    assert!(lines[2].starts_with("at | at, bin, blue | "));
    assert!(lines[1].ends_with(" %"));
}

#[test]
fn missing_frame_is_skipped_with_failure_status() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    dataset(dir);
    std::fs::remove_file(dir.join("frames/s1_v2_010.ppm")).unwrap();
    let out = lipread(dir, &["--config", "config.json", "extract", "--manifest", "manifest.json", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s1_v2 frame 10"));
    let features = std::fs::read_to_string(dir.join("f.csv")).unwrap();
    assert_eq!(features.lines().count(), 2 * FRAMES);
    assert!(!features.contains("\ns1_v2,10,"));

    // classification refuses the incomplete video
    ok(&lipread(dir, &["--config", "config.json", "align", "--manifest", "manifest.json", "--out", "l.csv"]));
    ok(&lipread(dir, &["--config", "config.json", "train-classifier", "--features", "f.csv", "--labels", "l.csv", "--out", "m.json"]));
    let out = lipread(dir, &["--config", "config.json", "classify", "--features", "f.csv", "--model", "m.json", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s1_v2 has 73 of 74 frames"));

    // a phoneme-mode run cannot reuse a viseme model
    let out = lipread(dir, &["--config", "config.json", "--mode", "phoneme", "classify", "--features", "f.csv", "--model", "m.json", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fatal_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = lipread(dir, &["extract", "--manifest", "nope.json", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(dir.join("bad.json"), r#"{"split_fraction": 2.0}"#).unwrap();
    let out = lipread(dir, &["--config", "bad.json", "synth", "--out", "c"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("split_fraction"));
    std::fs::write(dir.join("w.csv"), "word,instance,symbols\nbin,0,1 2\n").unwrap();
    let out = lipread(dir, &["--config", "bad.json", "train-hmm", "--words", "w.csv", "--out", "b.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = lipread(dir, &["train-hmm", "--words", "w.csv", "--out", "b.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bin"));
}

#[test]
fn report_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("r.csv"), "word,set,test,correct,accuracy\nbin,bin blue,8,7,0.875\nlay,lay,3,1,0.3333333333333333\n").unwrap();
    let out = lipread(dir, &["report", "--input", "r.csv"]);
    ok(&out);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "Word | Set | Accuracy\nbin | bin, blue | 87.5 %\nlay | lay | 33.3 %\n"
    );
    ok(&lipread(dir, &["report", "--input", "r.csv", "--format", "csv", "--out", "copy.csv"]));
    assert_eq!(
        std::fs::read_to_string(dir.join("copy.csv")).unwrap(),
        std::fs::read_to_string(dir.join("r.csv")).unwrap()
    );
}

#[test]
fn synth_writes_a_consistent_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&lipread(dir, &["--seed", "3", "synth", "--out", "corpus"]));
    ok(&lipread(dir, &["--units-per-frame", "1", "binsort", "--sequences", "corpus/sequences.csv", "--manifest", "corpus/manifest.json", "--out", "words.csv"]));
    assert_eq!(
        std::fs::read(dir.join("words.csv")).unwrap(),
        std::fs::read(dir.join("corpus/words.csv")).unwrap()
    );
    let words = std::fs::read_to_string(dir.join("words.csv")).unwrap();
    assert_eq!(words.lines().count(), 1 + 5 * 40);
}
