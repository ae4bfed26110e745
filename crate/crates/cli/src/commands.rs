use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde_json::json;

use signsynth_core::bpe::{bpe_train, default_specials, BpeModel, DEFAULT_VOCAB_SIZE};
use signsynth_core::corpus::{self, FrequencyTable, MergePolicy};
use signsynth_core::curriculum::{emit_schedule, schedule_csv, AnnealSchedule, Source};
use signsynth_core::io::{self, compute_stats, POSE_FILE_EXT};
use signsynth_core::keypoints::{process_word_video, DEFAULT_CONFIDENCE_THRESHOLD};
use signsynth_core::metrics::{eval_pairs, EvalPair, Smoothing};
use signsynth_core::stitch::{plan_base_stride, stitch_records, StitchConfig, DEFAULT_CROSSFADE_FRAMES};
use signsynth_core::template::{expand_all, parse_template_file, sample_expansions, SlotLexicon};
use signsynth_core::{default_selection, Error, SentenceRecord, WordOrder};

use crate::settings::Settings;
use crate::{
    Command, EvalArgs, FilterArgs, GenArgs, IngestArgs, MergeArgs, PostprocessArgs, SampleArgs, StatsArgs, StitchArgs,
    TokenizeCommand, UsageError,
};

const STITCH_CHUNK: usize = 2048;

pub fn dispatch(cmd: Command, s: &Settings) -> anyhow::Result<()> {
    match cmd {
        Command::Gen(a) => gen(a, s),
        Command::Filter(a) => filter(a, s),
        Command::Merge(a) => merge(a, s),
        Command::Postprocess(a) => postprocess(a, s),
        Command::Ingest(a) => ingest(a, s),
        Command::Stitch(a) => stitch(a, s),
        Command::Sample(a) => sample(a, s),
        Command::Tokenize(t) => tokenize(t, s),
        Command::Eval(a) => eval(a, s),
        Command::Stats(a) => stats(a),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_manifest(path: &Path) -> anyhow::Result<Vec<SentenceRecord>> {
    Ok(io::read_manifest(path)?)
}

fn write_manifest(path: &Path, records: &[SentenceRecord]) -> anyhow::Result<()> {
    io::write_manifest(path, records).with_context(|| format!("writing {}", path.display()))
}

/// Lowercased words from a word-list file, or the clip names in a pose directory.
fn read_vocab(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    if path.is_dir() {
        let lex = io::load_sign_lexicon(path)?;
        return Ok(lex.words().map(str::to_owned).collect());
    }
    Ok(read_text(path)?
        .lines()
        .map(|l| l.trim().to_ascii_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

fn gen(a: GenArgs, s: &Settings) -> anyhow::Result<()> {
    let templates =
        parse_template_file(&read_text(&a.templates)?).with_context(|| format!("in {}", a.templates.display()))?;
    let mut lex =
        SlotLexicon::from_jsonl(&read_text(&a.lexicon)?).with_context(|| format!("in {}", a.lexicon.display()))?;
    if let Some(v) = &a.sign_vocab {
        lex = lex.restrict_to(&read_vocab(v)?);
    }

    let per_template: Vec<Result<Vec<SentenceRecord>, Error>> = templates
        .par_iter()
        .map(|t| match a.sample {
            Some(n) => match sample_expansions(t, &lex, n, s.seed) {
                Err(Error::EmptyExpansionSpace) => Ok(Vec::new()),
                other => other,
            },
            None => expand_all(t, &lex, a.limit).map(Iterator::collect),
        })
        .collect();

    let mut records = Vec::new();
    let mut by_phenomenon: BTreeMap<String, usize> = BTreeMap::new();
    for (t, res) in templates.iter().zip(per_template) {
        let recs = res.with_context(|| format!("template `{}`", t.id))?;
        if recs.is_empty() {
            eprintln!("warning: template `{}` produced no sentences", t.id);
        }
        *by_phenomenon.entry(t.phenomenon.to_string()).or_default() += recs.len();
        records.extend(recs);
    }
    write_manifest(&a.out, &records)?;
    eprintln!(
        "generated {} sentences from {} templates",
        records.len(),
        templates.len()
    );
    for (p, n) in by_phenomenon {
        eprintln!("  {p}\t{n}");
    }
    Ok(())
}

fn filter(a: FilterArgs, s: &Settings) -> anyhow::Result<()> {
    let input = if a.plain {
        read_text(&a.input)?
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| SentenceRecord::from_text(format!("corpus-{}", i + 1), l))
            .collect()
    } else {
        read_manifest(&a.input)?
    };
    let vocab = read_vocab(&a.vocab)?;
    let min_rate = s.pick(a.min_rate, "min_match_rate", corpus::DEFAULT_MIN_MATCH_RATE)?;
    let n_in = input.len();
    let kept = corpus::filter_corpus(input, &vocab, min_rate)?;
    write_manifest(&a.out, &kept)?;
    eprintln!("kept {} of {n_in} sentences (match rate > {min_rate})", kept.len());
    Ok(())
}

fn merge(a: MergeArgs, s: &Settings) -> anyhow::Result<()> {
    let d = MergePolicy::default();
    let policy = MergePolicy {
        max_len: s.pick(a.max_len, "merge_max_len", d.max_len)?,
        fraction: s.pick(a.fraction, "merge_fraction", d.fraction)?,
        group: s.pick(a.group, "merge_group", d.group)?,
    };
    let input = read_manifest(&a.input)?;
    let before = corpus::length_stats(&input);
    let out = corpus::merge_short(input, &policy, s.seed)?;
    let after = corpus::length_stats(&out);
    write_manifest(&a.out, &out)?;
    eprintln!(
        "{} -> {} sentences, mean length {:.2} -> {:.2}",
        before.total, after.total, before.mean, after.mean
    );
    Ok(())
}

fn postprocess(a: PostprocessArgs, s: &Settings) -> anyhow::Result<()> {
    let names: BTreeSet<String> = match &a.names {
        Some(p) => read_text(p)?
            .lines()
            .map(|l| l.trim().to_ascii_lowercase())
            .filter(|l| !l.is_empty())
            .collect(),
        None => BTreeSet::new(),
    };
    let min_freq = s.pick(a.min_freq, "min_freq", corpus::DEFAULT_MIN_FREQ)?;
    let input = read_manifest(&a.input)?;
    let mut freq = FrequencyTable::new();
    freq.add(&input);
    for extra in &a.count_extra {
        freq.add(&read_manifest(extra)?);
    }
    let out = corpus::apply_replacements(input, &names, &freq, min_freq)?;
    let count = |tok: &str| out.iter().flat_map(|r| r.text.iter()).filter(|t| *t == tok).count();
    eprintln!(
        "{} sentences: {} {} and {} {} tokens",
        out.len(),
        count(corpus::PERSON_TOKEN),
        corpus::PERSON_TOKEN,
        count(corpus::UNKNOWN_TOKEN),
        corpus::UNKNOWN_TOKEN
    );
    write_manifest(&a.out, &out)
}

fn collect_inputs(inputs: &[PathBuf], ext: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for e in fs::read_dir(p).with_context(|| format!("listing {}", p.display()))? {
                let path = e?.path();
                if path.extension().is_some_and(|x| x == ext) {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    Ok(files)
}

fn ingest(a: IngestArgs, s: &Settings) -> anyhow::Result<()> {
    let threshold = s.pick(a.threshold, "confidence_threshold", DEFAULT_CONFIDENCE_THRESHOLD)?;
    let files = collect_inputs(&a.input, "jsonl")?;
    if files.is_empty() {
        return Err(UsageError("no raw landmark files found".into()).into());
    }
    let mut words = BTreeSet::new();
    for f in &files {
        let w = word_of(f)?;
        if !words.insert(w.clone()) {
            bail!("two input files map to the word `{w}`");
        }
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let sel = default_selection();
    let reports = files
        .par_iter()
        .map(|f| -> anyhow::Result<_> {
            let word = word_of(f)?;
            let frames = io::read_raw_landmarks(f)?;
            let (seq, report) = process_word_video(&word, &frames, &sel, threshold)
                .with_context(|| format!("processing {}", f.display()))?;
            io::write_pose_file(&a.out.join(format!("{word}.{POSE_FILE_EXT}")), &seq)?;
            Ok(report)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let filled: usize = reports.iter().map(|r| r.keypoints_filled).sum();
    let unresolved: usize = reports.iter().map(|r| r.unresolved).sum();
    eprintln!(
        "ingested {} clips; filled {filled} low-confidence keypoints, {unresolved} unresolved",
        reports.len()
    );
    Ok(())
}

fn word_of(path: &Path) -> anyhow::Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_ascii_lowercase)
        .with_context(|| format!("no usable file name in {}", path.display()))
}

fn sanitize(id: &str) -> String {
    id.chars()
        .take(48)
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn stitch(a: StitchArgs, s: &Settings) -> anyhow::Result<()> {
    let records = read_manifest(&a.input)?;
    let lex = io::load_sign_lexicon(&a.lexicon)?;
    if lex.is_empty() {
        bail!("no pose files in {}", a.lexicon.display());
    }
    let word_order: WordOrder = match a.word_order.as_deref().or(s_raw(s, "word_order").as_deref()) {
        Some(w) => w.parse()?,
        None => WordOrder::Same,
    };
    let mut cfg = StitchConfig {
        word_order,
        base_stride: s.pick(a.base_stride, "base_stride", 1)?,
        jitter_strides: s.pick_list(a.jitter.as_deref(), "jitter_strides", vec![1])?,
        crossfade_frames: s.pick(a.crossfade, "crossfade_frames", DEFAULT_CROSSFADE_FRAMES)?,
        seed: s.seed,
        skip_oov: s.skip_oov,
    };
    cfg.validate()?;
    if let Some(target) = s.pick_opt(a.target_mean_frames, "target_mean_frames")? {
        cfg.base_stride = plan_base_stride(&records, &lex, &cfg, target)?;
    }

    let pose_dir = a.out.join("poses");
    fs::create_dir_all(&pose_dir).with_context(|| format!("creating {}", pose_dir.display()))?;
    let mut out = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for (chunk_i, chunk) in records.chunks(STITCH_CHUNK).enumerate() {
        let results = stitch_records(chunk, &lex, &cfg);
        let written: Vec<anyhow::Result<Option<SentenceRecord>>> = results
            .into_par_iter()
            .enumerate()
            .map(|(i, res)| match res {
                Ok((mut rec, stitched)) => {
                    let idx = chunk_i * STITCH_CHUNK + i;
                    let name = format!("{idx:08}_{}.{POSE_FILE_EXT}", sanitize(&rec.id));
                    io::write_pose_file(&pose_dir.join(&name), &stitched.sequence)?;
                    rec.pose_path = Some(format!("poses/{name}"));
                    Ok(Some(rec))
                }
                Err(_) => Ok(None),
            })
            .collect();
        for (rec, w) in chunk.iter().zip(written) {
            match w? {
                Some(r) => out.push(r),
                None => skipped.push(rec.id.clone()),
            }
        }
    }
    write_manifest(&a.out.join("manifest.jsonl"), &out)?;
    let stats = compute_stats(&out);
    io::write_atomic(
        &a.out.join("stats.json"),
        serde_json::to_string_pretty(&stats)?.as_bytes(),
    )?;
    eprintln!(
        "stitched {} sentences (base stride {}, mean {:.1} frames), skipped {}",
        out.len(),
        cfg.base_stride,
        stats.frame_histogram.mean,
        skipped.len()
    );
    for id in skipped.iter().take(10) {
        eprintln!("  skipped `{id}`");
    }
    Ok(())
}

fn s_raw(s: &Settings, key: &str) -> Option<String> {
    s.pick_opt::<String>(None, key).ok().flatten()
}

fn sample(a: SampleArgs, s: &Settings) -> anyhow::Result<()> {
    let d = AnnealSchedule::default();
    let sched = AnnealSchedule::new(
        s.pick(a.max_real_fraction, "max_real_fraction", d.max_real_fraction)?,
        s.pick(a.ramp_steps, "ramp_steps", d.ramp_steps)?,
    )?;
    let draws = emit_schedule(a.total_steps, &sched, s.seed, a.real_size, a.synth_size)?;
    io::write_atomic(&a.out, schedule_csv(&draws, &sched).as_bytes())?;
    let real = draws.iter().filter(|d| d.source == Source::Real).count();
    eprintln!("{} steps, {real} real draws", draws.len());
    Ok(())
}

fn tokenize(cmd: TokenizeCommand, s: &Settings) -> anyhow::Result<()> {
    match cmd {
        TokenizeCommand::Train { input, vocab_size, out } => {
            let mut corpus = Vec::new();
            for p in &input {
                corpus.extend(read_manifest(p)?.iter().map(SentenceRecord::joined));
            }
            let vocab_size = s.pick(vocab_size, "vocab_size", DEFAULT_VOCAB_SIZE)?;
            let model = bpe_train(&corpus, vocab_size, &default_specials())?;
            io::write_atomic(&out, model.to_json().as_bytes())?;
            eprintln!("{} merges, vocabulary {}", model.merges().len(), model.vocab_size());
        }
        TokenizeCommand::Encode { model, input, out } => {
            let model = BpeModel::from_json(&read_text(&model)?)?;
            let records = read_manifest(&input)?;
            let lines: Vec<String> = records
                .par_iter()
                .map(|r| json!({"id": r.id, "ids": model.encode(&r.joined())}).to_string())
                .collect();
            let mut text = lines.join("\n");
            if !text.is_empty() {
                text.push('\n');
            }
            io::write_atomic(&out, text.as_bytes())?;
        }
    }
    Ok(())
}

fn eval(a: EvalArgs, s: &Settings) -> anyhow::Result<()> {
    let smoothing: Smoothing = match a.smoothing.as_deref().or(s_raw(s, "smoothing").as_deref()) {
        Some(v) => v.parse()?,
        None => Smoothing::None,
    };
    let pairs: Vec<EvalPair> = match (&a.input, &a.candidates, &a.references) {
        (Some(p), _, _) => read_text(p)?
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}: line {}", p.display(), i + 1)))
            .collect::<anyhow::Result<_>>()?,
        (None, Some(c), Some(r)) => {
            let cands: Vec<String> = read_text(c)?.lines().map(str::to_owned).collect();
            let refs: Vec<String> = read_text(r)?.lines().map(str::to_owned).collect();
            if cands.len() != refs.len() {
                bail!("{} candidates but {} references", cands.len(), refs.len());
            }
            cands
                .into_iter()
                .zip(refs)
                .enumerate()
                .map(|(i, (candidate, reference))| EvalPair {
                    id: Some(i.to_string()),
                    candidate,
                    reference,
                })
                .collect()
        }
        _ => return Err(UsageError("eval needs --input or --candidates with --references".into()).into()),
    };
    let report = eval_pairs(&pairs, smoothing)?;
    print!("{}", report.table());
    if let Some(p) = &a.json {
        io::write_atomic(p, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    Ok(())
}

fn stats(a: StatsArgs) -> anyhow::Result<()> {
    let records = read_manifest(&a.input)?;
    let st = compute_stats(&records);
    let text = serde_json::to_string_pretty(&st)?;
    match &a.out {
        Some(p) => io::write_atomic(p, text.as_bytes())?,
        None => println!("{text}"),
    }
    if let Some(dir) = &a.csv_dir {
        fs::create_dir_all(dir)?;
        io::write_atomic(
            &dir.join("lengths.csv"),
            st.length_histogram.to_csv("length").as_bytes(),
        )?;
        io::write_atomic(&dir.join("frames.csv"), st.frame_histogram.to_csv("frames").as_bytes())?;
    }
    Ok(())
}
