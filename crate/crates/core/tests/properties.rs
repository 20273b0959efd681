use std::collections::BTreeMap;

use lipread::alignment::{allocate_frames, label_frames, Transcript, WordInterval};
use lipread::classify::{coordinate_rows, fit_svd, nb_train, Knn};
use lipread::hmm::{baum_welch, canonical_stop, pad_to, train_bank, Hmm, LengthMode, StatePlan, TrainConfig};
use lipread::lexicon::{PronunciationDict, VisemeMap};
use lipread::pipeline::{bin_sort, ClassifiedSequence};
use lipread::seed;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random_hmm(q: usize, m: usize, s: u64) -> Hmm {
    Hmm::random(q, m, 1.0, &mut seed::rng(s))
}

fn row_sums_ok(h: &Hmm) -> bool {
    let q = h.n_states();
    let m = h.alphabet_size();
    let close = |xs: &[f64]| (xs.iter().sum::<f64>() - 1.0).abs() <= 1e-10 && xs.iter().all(|&x| x >= 0.0);
    close(h.initial())
        && h.transition().chunks(q).all(close)
        && h.emission().chunks(m).all(close)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocation_conserves_frames(n in 1usize..400, p in 1usize..400) {
        let c = allocate_frames(n, p);
        prop_assert_eq!(c.len(), p);
        prop_assert_eq!(c.iter().sum::<usize>(), n);
        prop_assert!(c.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(c.iter().all(|&x| x == n / p || x == n / p + 1));
    }

    #[test]
    fn lexicon_ignores_case_and_stress(stress in proptest::collection::vec(0u8..4, 3)) {
        let map = VisemeMap::bundled();
        let digits: Vec<String> = stress.iter().map(|&d| if d == 3 { String::new() } else { d.to_string() }).collect();
        let upper = format!("CAT K AE{} T\n", digits[0]);
        let lower = "cat k ae t\n";
        let a = PronunciationDict::parse(&upper, &map).unwrap();
        let b = PronunciationDict::parse(lower, &map).unwrap();
        prop_assert_eq!(a.pronounce("cat").unwrap(), b.pronounce("CaT").unwrap());
    }

    #[test]
    fn labels_cover_every_frame(total in 5usize..90, cuts in proptest::collection::vec((0usize..6, 1usize..12), 0..6), scale in 1u32..100) {
        let map = VisemeMap::bundled();
        let dict = PronunciationDict::bundled(&map);
        let words = ["bin", "blue", "at", "seven", "please", "sil"];
        let mut intervals = Vec::new();
        let mut next = 1;
        for (i, &(gap, len)) in cuts.iter().enumerate() {
            let start = next + gap;
            if start + len - 1 > total {
                break;
            }
            intervals.push(WordInterval { word: words[i % words.len()].into(), start_frame: start, end_frame: start + len - 1 });
            next = start + len;
        }
        let text: String = intervals
            .iter()
            .map(|iv| format!("{} {} {}\n", iv.start_frame as u64 * scale as u64, iv.end_frame as u64 * scale as u64, iv.word))
            .collect();
        let t = Transcript::new("v", intervals.clone(), total).unwrap();
        let labels = label_frames(&t, &dict, &map).unwrap();
        prop_assert_eq!(labels.len(), total);
        let sil = map.silence_phoneme().unwrap();
        for (f, p) in labels.phonemes.iter().enumerate() {
            let covered = intervals.iter().any(|iv| iv.range().contains(&f));
            prop_assert!(covered || *p == sil);
        }
        let scaled = Transcript::parse(&text, "v", scale as f64, total).unwrap();
        prop_assert_eq!(label_frames(&scaled, &dict, &map).unwrap(), labels);
    }

    #[test]
    fn forward_normalizes_over_all_sequences(q in 1usize..4, t in 1usize..8, s in any::<u64>()) {
        let h = random_hmm(q, 2, s);
        let mut total = 0.0;
        for code in 0..1usize << t {
            let seq: Vec<usize> = (0..t).map(|k| (code >> k & 1) + 1).collect();
            total += h.forward_log_likelihood(&seq).unwrap().exp();
        }
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn em_is_monotone_and_stochastic(
        q in 1usize..4,
        m in 2usize..5,
        lens in proptest::collection::vec(1usize..15, 1..5),
        s in any::<u64>(),
        stop in any::<bool>(),
    ) {
        let gen = random_hmm(q, m, s);
        let data: Vec<Vec<usize>> = lens.iter().enumerate().map(|(i, &l)| gen.sample(l, s ^ i as u64)).collect();
        let cfg = TrainConfig {
            max_iters: 25,
            restarts: 2,
            seed: s,
            length_mode: if stop { LengthMode::PadStop } else { LengthMode::Native },
            ..TrainConfig::default()
        };
        let out = baum_welch(&data, q, m, &cfg).unwrap();
        prop_assert!(out.ll_history.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        prop_assert!(row_sums_ok(&out.hmm));
    }

    #[test]
    fn padding_full_length_is_identity(seq in proptest::collection::vec(1usize..5, 1..20)) {
        prop_assert_eq!(pad_to(&seq, seq.len(), 5), seq.clone());
        let padded = pad_to(&seq, seq.len() + 3, 5);
        prop_assert_eq!(canonical_stop(&padded, 5), canonical_stop(&seq, 5));
    }

    #[test]
    fn stop_mode_decoding_ignores_extra_stops(extra in 1usize..6, s in any::<u64>()) {
        let gen = random_hmm(2, 3, s);
        let data = BTreeMap::from([
            ("bin".to_string(), (0..4).map(|i| gen.sample(4 + i, s + i as u64)).collect::<Vec<_>>()),
            ("set".to_string(), (0..4).map(|i| gen.sample(6 - i, s + 9 + i as u64)).collect::<Vec<_>>()),
        ]);
        let cfg = TrainConfig { max_iters: 10, restarts: 1, length_mode: LengthMode::PadStop, ..TrainConfig::default() };
        let bank = train_bank(&data, 3, &StatePlan::uniform(2), &cfg).unwrap();
        let probe = gen.sample(5, s ^ 77);
        let mut stopped = probe.clone();
        stopped.push(4);
        let mut more = stopped.clone();
        more.extend(std::iter::repeat_n(4, extra));
        prop_assert_eq!(bank.decode(&stopped).unwrap(), bank.decode(&more).unwrap());
    }

    #[test]
    fn svd_projection_identities(d in 2usize..10, n in 2usize..14, s in any::<u64>()) {
        use rand::Rng;
        let mut rng = seed::rng(s);
        let x = DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
        let r = d.min(n);
        let (proj, coords) = fit_svd(&x, r, false).unwrap();
        let u = proj.left();
        let gram = u.transpose() * &u;
        prop_assert!((gram - DMatrix::identity(r, r)).abs().max() <= 1e-8);
        prop_assert!(proj.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let rows = coordinate_rows(&coords);
        for j in 0..n {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let p = proj.project(&col).unwrap();
            prop_assert!(p.iter().zip(&rows[j]).all(|(a, b)| (a - b).abs() <= 1e-8));
        }
    }

    #[test]
    fn classifiers_invariant_under_permutation(s in any::<u64>(), shift in 1usize..39) {
        use rand::Rng;
        let mut rng = seed::rng(s);
        let coords: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let labels: Vec<usize> = (0..40).map(|i| i % 3 + 1).collect();
        let perm: Vec<usize> = (0..40).map(|i| (i + shift) % 40).collect();
        let pc: Vec<Vec<f64>> = perm.iter().map(|&i| coords[i].clone()).collect();
        let pl: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let nb_a = nb_train(&coords, &labels, None).unwrap();
        let nb_b = nb_train(&pc, &pl, None).unwrap();
        let knn_a = Knn::new(3, coords.clone(), labels.clone()).unwrap();
        let knn_b = Knn::new(3, pc, pl).unwrap();
        let one = Knn::new(1, coords.clone(), labels.clone()).unwrap();
        for (i, c) in coords.iter().enumerate() {
            prop_assert_eq!(one.predict(c).unwrap(), labels[i]);
        }
        for _ in 0..20 {
            let probe = vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
            prop_assert_eq!(nb_a.predict(&probe).unwrap(), nb_b.predict(&probe).unwrap());
            // random real coordinates: distinct distances almost surely
            prop_assert_eq!(knn_a.predict(&probe).unwrap(), knn_b.predict(&probe).unwrap());
        }
    }

    #[test]
    fn bin_sort_conserves_symbols(lens in proptest::collection::vec(proptest::collection::vec((0usize..3, 1usize..8), 0..5), 1..5)) {
        let total = 60;
        let mut seqs = Vec::new();
        let mut transcripts = BTreeMap::new();
        let mut expected = 0;
        for (v, cuts) in lens.iter().enumerate() {
            let id = format!("v{v}");
            let mut intervals = Vec::new();
            let mut next = 1;
            for &(gap, len) in cuts {
                let start = next + gap;
                intervals.push(WordInterval { word: format!("w{}", len % 3), start_frame: start, end_frame: start + len - 1 });
                expected += len;
                next = start + len;
            }
            transcripts.insert(id.clone(), Transcript::new(&id, intervals, total).unwrap());
            seqs.push(ClassifiedSequence { video_id: id, symbols: (1..=total).collect() });
        }
        let out = bin_sort(&seqs, &transcripts).unwrap();
        prop_assert_eq!(out.values().flatten().map(Vec::len).sum::<usize>(), expected);
    }
}
