//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so the
//! report is always printed; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signsynth_core::bpe::{bpe_train, default_specials, END_OF_WORD};
use signsynth_core::corpus::{filter_corpus, merge_short, MergePolicy};
use signsynth_core::curriculum::{draw, emit_schedule, real_fraction, AnnealSchedule, Source};
use signsynth_core::keypoints::{interpolate_low_confidence, select_and_flatten};
use signsynth_core::metrics::{bleu_corpus, eval_pairs, rouge_l, BleuStats, EvalPair, Smoothing};
use signsynth_core::pose::{Landmark, PoseFrame, PoseSequence, RawLandmarkFrame, POSE_DIMS};
use signsynth_core::stitch::{
    compute_sampling_rate, pre_stitch_mean, stitch_dataset, stitch_records, stitch_sentence, SignLexicon, StitchConfig,
};
use signsynth_core::template::{count_expansions, expand_all, parse_template, parse_template_file, SlotLexicon};
use signsynth_core::{default_selection, SentenceRecord, WordOrder};

pub type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

#[path = "../common/mod.rs"]
mod common;
mod e2e;
mod oracles;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("keypoint-selection", keypoint_selection),
        ("interpolation", interpolation),
        ("template-engine", template_engine),
        ("corpus-pipeline", corpus_pipeline),
        ("stitcher", stitcher),
        ("curriculum", curriculum),
        ("tokenizer", tokenizer),
        ("metrics", metrics),
        ("end-to-end", e2e::end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let res = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS  {name:<20} {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<20} {why} [{secs:.2}s]");
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn grid(frames: &[RawLandmarkFrame]) -> oracles::Grid {
    frames
        .iter()
        .map(|f| f.landmarks().iter().map(|l| (l.x, l.y, l.confidence)).collect())
        .collect()
}

fn keypoint_selection() -> Outcome {
    let start = Instant::now();
    let sel = default_selection();
    let body: BTreeSet<usize> = sel.body_indices().iter().copied().collect();
    ensure!(
        body == BTreeSet::from([0, 2, 5, 7, 8, 11, 12, 13, 14, 15, 16]),
        "body set {body:?}"
    );
    let face: BTreeSet<usize> = sel.face_indices().iter().copied().collect();
    let want_face = BTreeSet::from([
        0, 9, 17, 33, 61, 70, 105, 107, 133, 153, 158, 161, 163, 263, 291, 300, 334, 336, 362, 380, 385, 388, 390,
    ]);
    ensure!(face.len() == 23 && face == want_face, "face set {face:?}");

    // positions that feed the output, computed from the literal layout
    let mut used: Vec<usize> = body.iter().copied().collect();
    used.extend(want_face.iter().map(|i| 33 + i));
    used.extend(501..543);
    let used_set: BTreeSet<usize> = used.iter().copied().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 0..1000 {
        let frame = common::random_raw_frame(&mut rng, 0.3);
        let out = select_and_flatten(&frame, &sel);
        ensure!(out.values().len() == 152, "frame {k}: {} values", out.values().len());
        for (slot, &g) in used.iter().enumerate() {
            let l = frame.landmarks()[g];
            ensure!(
                out.values()[2 * slot] == l.x && out.values()[2 * slot + 1] == l.y,
                "frame {k}: keypoint {slot} does not come from raw landmark {g}"
            );
        }
        let perturbed: Vec<Landmark> = frame
            .landmarks()
            .iter()
            .enumerate()
            .map(|(g, l)| {
                if used_set.contains(&g) {
                    *l
                } else {
                    Landmark::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen())
                }
            })
            .collect();
        let again = select_and_flatten(&RawLandmarkFrame::from_landmarks(perturbed).unwrap(), &sel);
        ensure!(again == out, "frame {k}: excluded landmark changed the output");
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2}s");
    Ok(format!(
        "1000 frames, 11 body + 23 face + 42 hand keypoints, perturbation-invariant, {secs:.2}s"
    ))
}

fn interpolation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut fully_resolved = 0;
    for case in 0..500 {
        let n = rng.gen_range(1..=50);
        let low_rate = [0.05, 0.3, 0.7, 0.95][case % 4];
        let frames: Vec<RawLandmarkFrame> = (0..n).map(|_| common::random_raw_frame(&mut rng, low_rate)).collect();
        let (got, report) = interpolate_low_confidence(&frames, 0.8).map_err(|e| e.to_string())?;
        let (want, unresolved) = oracles::interpolate(&grid(&frames), 0.8);
        ensure!(grid(&got) == want, "case {case}: output differs from oracle");
        ensure!(
            report.unresolved == unresolved,
            "case {case}: unresolved {} vs {unresolved}",
            report.unresolved
        );
        if unresolved == 0 {
            fully_resolved += 1;
            let (twice, _) = interpolate_low_confidence(&got, 0.8).map_err(|e| e.to_string())?;
            ensure!(twice == got, "case {case}: not idempotent");
        }
    }
    ensure!(fully_resolved > 0, "no fully resolved case to check idempotence on");
    Ok(format!(
        "500 sequences match oracle exactly; idempotent on {fully_resolved} fully resolved"
    ))
}

fn oracle_lexicon(jsonl: &str) -> oracles::OracleLexicon {
    let mut lex = oracles::OracleLexicon::new();
    for line in jsonl.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let feats = v["features"]
            .as_object()
            .map(|m| {
                m.iter()
                    .map(|(k, x)| (k.clone(), x.as_str().unwrap().to_owned()))
                    .collect()
            })
            .unwrap_or_default();
        lex.entry(v["category"].as_str().unwrap().to_owned())
            .or_default()
            .push((v["word"].as_str().unwrap().to_owned(), feats));
    }
    lex
}

fn template_engine() -> Outcome {
    let tsv = std::fs::read_to_string(common::toy_file("templates.tsv")).unwrap();
    let jsonl = std::fs::read_to_string(common::toy_file("lexicon.jsonl")).unwrap();
    let templates = parse_template_file(&tsv).map_err(|e| e.to_string())?;
    let lex = SlotLexicon::from_jsonl(&jsonl).map_err(|e| e.to_string())?;
    let olex = oracle_lexicon(&jsonl);

    let raw_rows: Vec<Vec<&str>> = tsv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').collect())
        .collect();
    ensure!(raw_rows.len() == templates.len(), "template count mismatch");
    let tags: BTreeSet<&str> = raw_rows.iter().map(|r| r[1]).collect();
    ensure!(tags.len() == 12, "pack covers {} phenomena", tags.len());

    let mut total = 0;
    for (t, row) in templates.iter().zip(&raw_rows) {
        let got: Vec<String> = expand_all(t, &lex, None)
            .map_err(|e| e.to_string())?
            .map(|r| r.joined())
            .collect();
        let got_set: BTreeSet<&String> = got.iter().collect();
        ensure!(got_set.len() == got.len(), "{}: duplicate sentences", t.id);
        let want: BTreeSet<String> = oracles::enumerate(&oracles::parse_dsl(row[2]), &olex)
            .into_iter()
            .collect();
        ensure!(
            got_set == want.iter().collect(),
            "{}: expansion set differs from nested-loop oracle",
            t.id
        );
        let counted = count_expansions(t, &lex).map_err(|e| e.to_string())?;
        ensure!(
            counted == got.len() as u128,
            "{}: count {counted} vs {} emitted",
            t.id,
            got.len()
        );
        total += got.len();
    }

    let mut agree = SlotLexicon::new();
    agree.add("Subj", "boy", &[("num", "sg")]);
    agree.add("Subj", "girl", &[("num", "sg")]);
    agree.add("Subj", "boys", &[("num", "pl")]);
    agree.add("V", "runs", &[("num", "sg")]);
    agree.add("V", "run", &[("num", "pl")]);
    agree.add("V", "walk", &[("num", "pl")]);
    let t = parse_template("Subj[num=N] V[num=N]").map_err(|e| e.to_string())?;
    let n = count_expansions(&t, &agree).map_err(|e| e.to_string())?;
    let emitted = expand_all(&t, &agree, None).map_err(|e| e.to_string())?.count();
    ensure!(
        n == 4 && emitted == 4,
        "agreement example: count {n}, emitted {emitted}"
    );
    Ok(format!(
        "12 phenomena, {total} sentences equal oracle enumeration; agreement example = 4"
    ))
}

fn records(texts: &[Vec<String>]) -> Vec<SentenceRecord> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| SentenceRecord::new(format!("s{i}"), t.clone()))
        .collect()
}

fn random_words(rng: &mut impl Rng, vocab: &[String], len: usize) -> Vec<String> {
    (0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect()
}

fn corpus_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let words: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let vocab: BTreeSet<String> = words[..30].iter().cloned().collect();

    // filtering, including sentences sitting exactly on the 0.9 boundary
    let mut texts: Vec<Vec<String>> = (0..2000)
        .map(|_| {
            let len = rng.gen_range(1..=20);
            random_words(&mut rng, &words, len)
        })
        .collect();
    for _ in 0..50 {
        let mut s = random_words(&mut rng, &words[..30], 9);
        s.push("w35".into());
        texts.push(s);
    }
    let kept = filter_corpus(records(&texts), &vocab, 0.9).map_err(|e| e.to_string())?;
    let want: Vec<String> = records(&texts)
        .into_iter()
        .filter(|r| oracles::match_rate(&r.text, &vocab) > 0.9)
        .map(|r| r.id)
        .collect();
    let got: Vec<String> = kept.iter().map(|r| r.id.clone()).collect();
    ensure!(got == want, "filter kept {} vs oracle {}", got.len(), want.len());
    let boundary: BTreeSet<String> = (2000..2050).map(|i| format!("s{i}")).collect();
    ensure!(
        !kept.iter().any(|r| boundary.contains(&r.id)),
        "a sentence at exactly 0.9 was kept"
    );

    // merging: token conservation and output count
    let policy = MergePolicy::default();
    for seed in 0..20u64 {
        let n = rng.gen_range(10..300);
        let texts: Vec<Vec<String>> = (0..n)
            .map(|_| {
                let len = rng.gen_range(1..=14);
                random_words(&mut rng, &words, len)
            })
            .collect();
        let k = texts.iter().filter(|t| t.len() < 8).count();
        let out = merge_short(records(&texts), &policy, seed).map_err(|e| e.to_string())?;
        let groups = (9 * k / 10) / 3;
        ensure!(
            out.len() == n - 2 * groups,
            "seed {seed}: {} out of {n} with k={k}",
            out.len()
        );
        let bag = |rs: &mut dyn Iterator<Item = &String>| {
            let mut m: BTreeMap<String, usize> = BTreeMap::new();
            for w in rs {
                *m.entry(w.clone()).or_default() += 1;
            }
            m
        };
        ensure!(
            bag(&mut texts.iter().flatten()) == bag(&mut out.iter().flat_map(|r| r.text.iter())),
            "seed {seed}: token multiset changed"
        );
    }

    // toy target distribution (right-skewed, like a sign translation train split)
    // and a corpus dominated by short sentences
    let target_lengths: Vec<usize> = (0..5000)
        .map(|_| 3 + (0..24).filter(|_| rng.gen_bool(0.4)).count())
        .collect();
    let target = target_lengths.iter().sum::<usize>() as f64 / target_lengths.len() as f64;
    let corpus: Vec<Vec<String>> = (0..10_000)
        .map(|_| {
            let len = if rng.gen_bool(0.75) {
                rng.gen_range(3..=7)
            } else {
                rng.gen_range(8..=18)
            };
            random_words(&mut rng, &words, len)
        })
        .collect();
    let before = corpus.iter().map(Vec::len).sum::<usize>() as f64 / corpus.len() as f64;
    let merged = merge_short(records(&corpus), &policy, 7).map_err(|e| e.to_string())?;
    let after = merged.iter().map(|r| r.text.len()).sum::<usize>() as f64 / merged.len() as f64;
    let rel = (after - target).abs() / target;
    ensure!(
        rel <= 0.10,
        "post-merge mean {after:.2} vs target {target:.2} ({:.1}%)",
        rel * 100.0
    );
    Ok(format!(
        "filter = oracle ({} kept); merge conserves tokens; mean {before:.2} -> {after:.2} vs target {target:.2} ({:+.1}%)",
        got.len(),
        (after - target) / target * 100.0
    ))
}

fn random_clip(rng: &mut impl Rng, word: &str, len: usize) -> PoseSequence {
    let frames = (0..len)
        .map(|_| {
            let mut v = [0f32; POSE_DIMS];
            v.iter_mut().for_each(|x| *x = rng.gen());
            PoseFrame::new(v).unwrap()
        })
        .collect();
    PoseSequence::new(word, frames)
}

fn stitcher() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let words: Vec<String> = (0..20).map(|i| format!("word{i}")).collect();
    let mut lex = SignLexicon::new();
    for w in &words {
        let n = rng.gen_range(1..=15);
        lex.insert(w, random_clip(&mut rng, w, n)).unwrap();
    }
    let sentences: Vec<SentenceRecord> = (0..300)
        .map(|i| {
            let len = rng.gen_range(1..=8);
            SentenceRecord::new(format!("sent-{i}"), random_words(&mut rng, &words, len))
        })
        .collect();

    // bit-exact clips under SWO, no crossfade, stride 1
    let plain = StitchConfig {
        crossfade_frames: 0,
        ..StitchConfig::default()
    };
    for s in &sentences {
        let res = stitch_sentence(&s.id, &s.text, &lex, &plain).map_err(|e| e.to_string())?;
        ensure!(res.boundaries.len() == s.text.len(), "{}: boundary count", s.id);
        for (span, w) in res.boundaries.iter().zip(&s.text) {
            ensure!(&span.word == w, "{}: order changed under SWO", s.id);
            let clip = lex.get(w).unwrap();
            let slice = &res.sequence.frames[span.start..span.end];
            let exact = slice.len() == clip.frames.len()
                && slice.iter().zip(&clip.frames).all(|(a, b)| {
                    a.values()
                        .iter()
                        .zip(b.values())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
                });
            ensure!(exact, "{}: `{w}` is not bit-identical to its clip", s.id);
        }
    }

    // RWO permutations, length formula, determinism across pools of 1 and 8 threads
    let rwo = StitchConfig {
        word_order: WordOrder::Random,
        jitter_strides: vec![1, 2, 3],
        crossfade_frames: 2,
        seed: 99,
        ..StitchConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| stitch_records(&sentences, &lex, &rwo))
    };
    let one = run(1);
    let eight = run(8);
    for ((s, a), b) in sentences.iter().zip(&one).zip(&eight) {
        let (ra, sa) = a.as_ref().map_err(|e| e.to_string())?;
        let (rb, sb) = b.as_ref().map_err(|e| e.to_string())?;
        ensure!(ra == rb && sa == sb, "{}: differs between 1 and 8 threads", s.id);
        let mut x = sa.order.clone();
        let mut y = s.text.clone();
        x.sort();
        y.sort();
        ensure!(x == y, "{}: RWO order is not a permutation", s.id);
        let stride = sa.applied_stride;
        let want: usize = sa
            .order
            .iter()
            .map(|w| lex.get(w).unwrap().len().div_ceil(stride))
            .sum::<usize>()
            + 2 * (sa.order.len() - 1);
        ensure!(
            sa.sequence.len() == want,
            "{}: length {} vs formula {want}",
            s.id,
            sa.sequence.len()
        );
    }

    // frame-rate matching: synthetic sentences 3x as long as the target
    let mut long_lex = SignLexicon::new();
    for w in &words {
        let n = rng.gen_range(30..=60);
        long_lex.insert(w, random_clip(&mut rng, w, n)).unwrap();
    }
    let cfg = StitchConfig::default();
    let synth_mean = pre_stitch_mean(&sentences, &long_lex, &cfg).unwrap();
    let target = synth_mean / 3.0;
    let rate = compute_sampling_rate(synth_mean, target).map_err(|e| e.to_string())?;
    ensure!(rate == 3, "sampling rate {rate}");
    let ds = stitch_dataset(&sentences, &long_lex, &cfg, Some(target)).map_err(|e| e.to_string())?;
    ensure!(ds.base_stride == 3, "base stride {}", ds.base_stride);
    let post = ds.items.iter().map(|(_, r)| r.sequence.len()).sum::<usize>() as f64 / ds.items.len() as f64;
    ensure!(
        (post - ds.frame_histogram.mean).abs() < 1e-9,
        "histogram mean {} vs recomputed {post}",
        ds.frame_histogram.mean
    );
    let rel = (post - target).abs() / target;
    ensure!(rel <= 0.15, "post-stitch mean {post:.1} vs target {target:.1}");
    Ok(format!(
        "300 SWO sentences bit-exact; RWO permutation + length formula + 1/8-thread identity; stride 3, mean {post:.1} vs target {target:.1} ({:+.1}%)",
        (post - target) / target * 100.0
    ))
}

fn curriculum() -> Outcome {
    let s = AnnealSchedule::default();
    ensure!(
        real_fraction(0, &s) == 0.0,
        "real_fraction(0) = {}",
        real_fraction(0, &s)
    );
    ensure!(
        real_fraction(60_000, &s) == 0.85,
        "real_fraction(60000) = {}",
        real_fraction(60_000, &s)
    );

    let n = 100_000u64;
    let mut worst = 0.0f64;
    for step in [15_000u64, 60_000, 90_000] {
        let p = real_fraction(step, &s);
        let real = (0..n)
            .filter(|&seed| draw(step, &s, seed, 1000, 1000).unwrap().source == Source::Real)
            .count() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let z = (real - n as f64 * p).abs() / sigma;
        ensure!(
            z <= 3.0,
            "step {step}: {real} REAL draws, expected {:.0} (z = {z:.2})",
            n as f64 * p
        );
        worst = worst.max(z);
    }

    let full = emit_schedule(2_000, &s, 5, 300, 700).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..50 {
        let from = rng.gen_range(0..2_000u64);
        for step in from..(from + 20).min(2_000) {
            let d = draw(step, &s, 5, 300, 700).map_err(|e| e.to_string())?;
            ensure!(d == full[step as usize], "replay from step {from} diverges at {step}");
        }
    }
    Ok(format!(
        "endpoints exact; 3 x 10^5 draws within {worst:.2} sigma; replay deterministic"
    ))
}

fn tokenizer() -> Outcome {
    let first = bpe_train(&["aaab aaab", "aaab aaab"], 64, &[]).map_err(|e| e.to_string())?;
    let want = oracles::first_bpe_pair(&["aaab aaab", "aaab aaab"], END_OF_WORD);
    ensure!(
        first.merges().first() == Some(&want),
        "first merge {:?} vs oracle {want:?}",
        first.merges().first()
    );
    ensure!(want == ("a".to_owned(), "a".to_owned()), "oracle pair {want:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let letters: Vec<char> = "abcdefghijklmnopqrstuvwxyz'".chars().collect();
    let lexicon: Vec<String> = (0..300)
        .map(|_| {
            let len = rng.gen_range(1..=9);
            (0..len).map(|_| *letters.choose(&mut rng).unwrap()).collect()
        })
        .collect();
    let specials = default_specials();
    let sentences: Vec<String> = (0..10_000)
        .map(|_| {
            let len = rng.gen_range(1..=12);
            (0..len)
                .map(|_| {
                    if rng.gen_bool(0.05) {
                        specials.choose(&mut rng).unwrap().clone()
                    } else {
                        lexicon.choose(&mut rng).unwrap().clone()
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let model = bpe_train(&sentences, 600, &specials).map_err(|e| e.to_string())?;
    for (i, s) in sentences.iter().enumerate() {
        let ids = model.encode(s);
        let back = model.decode(&ids).map_err(|e| e.to_string())?;
        ensure!(&back == s, "sentence {i}: {s:?} -> {back:?}");
        let n_special = s
            .split_whitespace()
            .filter(|w| specials.contains(&w.to_string()))
            .count();
        let special_ids: BTreeSet<u32> = specials.iter().map(|t| model.token_id(t).unwrap()).collect();
        let emitted = ids.iter().filter(|id| special_ids.contains(id)).count();
        ensure!(
            emitted == n_special,
            "sentence {i}: {n_special} specials became {emitted} ids"
        );
    }
    for (l, r) in model.merges() {
        let joined = format!("{l}{r}").replace(END_OF_WORD, "");
        ensure!(!joined.contains(['<', '>']), "merge ({l}, {r}) splits a special");
    }
    Ok(format!(
        "first merge {want:?}; 10^4 sentences round-trip; {} merges, specials atomic",
        model.merges().len()
    ))
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let vocab: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
    let refs: Vec<Vec<String>> = (0..200)
        .map(|_| {
            let len = rng.gen_range(4..=15);
            random_words(&mut rng, &vocab, len)
        })
        .collect();
    let bleu = bleu_corpus(&refs, &refs, 4, Smoothing::None).map_err(|e| e.to_string())?;
    ensure!(bleu[&4] == 100.0, "identical corpora BLEU-4 = {}", bleu[&4]);

    let c = toks("the the the the the the the");
    let r = toks("the cat is on the mat");
    let stats = BleuStats::collect(std::slice::from_ref(&c), std::slice::from_ref(&r), 1).map_err(|e| e.to_string())?;
    let p1 = stats.precisions(Smoothing::None)[0];
    let (m, t) = oracles::clipped(&c, &r, 1);
    ensure!(p1 == 2.0 / 7.0 && (m, t) == (2, 7), "p1 = {p1}, oracle {m}/{t}");

    let lc = rouge_l(&toks("a b c d"), &toks("a c d b"));
    let ol = oracles::lcs(&toks("a b c d"), &toks("a c d b"));
    ensure!(
        lc.recall == 0.75 && ol == 3,
        "rouge_l recall {} (oracle lcs {ol})",
        lc.recall
    );

    // noisy candidates against the brute-force BLEU and LCS oracles
    let cands: Vec<Vec<String>> = refs
        .iter()
        .map(|r| {
            let keep = rng.gen_range(3..=r.len());
            let mut c = r[..keep].to_vec();
            for w in c.iter_mut() {
                if rng.gen_bool(0.3) {
                    *w = vocab.choose(&mut rng).unwrap().clone();
                }
            }
            c
        })
        .collect();
    let got = bleu_corpus(&cands, &refs, 4, Smoothing::None).map_err(|e| e.to_string())?;
    for n in 1..=4 {
        let want = oracles::bleu(&cands, &refs, n);
        ensure!((got[&n] - want).abs() < 1e-9, "BLEU-{n} {} vs oracle {want}", got[&n]);
    }
    for (c, r) in cands.iter().zip(&refs).take(50) {
        let want = oracles::lcs(c, r) as f64;
        let got = rouge_l(c, r);
        ensure!(
            (got.recall - want / r.len() as f64).abs() < 1e-12 && (got.precision - want / c.len() as f64).abs() < 1e-12,
            "rouge_l disagrees with LCS oracle"
        );
    }

    let mut pairs: Vec<EvalPair> = cands
        .iter()
        .zip(&refs)
        .map(|(c, r)| EvalPair {
            id: None,
            candidate: c.join(" "),
            reference: r.join(" "),
        })
        .collect();
    let base = eval_pairs(&pairs, Smoothing::None).map_err(|e| e.to_string())?;
    for _ in 0..5 {
        pairs.shuffle(&mut rng);
        let again = eval_pairs(&pairs, Smoothing::None).map_err(|e| e.to_string())?;
        ensure!(again.bleu == base.bleu, "BLEU changed under pair permutation");
        for (a, b) in [
            (again.rouge1, base.rouge1),
            (again.rouge2, base.rouge2),
            (again.rouge_l, base.rouge_l),
        ] {
            ensure!(
                (a.f - b.f).abs() < 1e-12 && (a.recall - b.recall).abs() < 1e-12,
                "ROUGE changed under permutation"
            );
        }
    }
    Ok(format!(
        "BLEU-4 identity 100; p1 = 2/7; LCS recall 3/4; oracle agreement; permutation invariant (BLEU-4 {:.2})",
        base.bleu[&4]
    ))
}
