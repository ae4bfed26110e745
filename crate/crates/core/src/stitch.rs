//! Sentence-level pose sequences from word-level clips.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::corpus::LengthHistogram;
use crate::pose::{PoseFrame, PoseSequence, SentenceRecord, WordOrder};
use crate::seed::{derive_seed, rng_from};
use crate::{Error, Result};

pub const DEFAULT_CROSSFADE_FRAMES: usize = 2;

/// Word (case-folded) to processed pose clip.
#[derive(Clone, Debug, Default)]
pub struct SignLexicon {
    clips: BTreeMap<String, PoseSequence>,
}

impl SignLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, clip: PoseSequence) -> Result<()> {
        if clip.is_empty() {
            return Err(Error::invalid(format!("clip for `{word}` has no frames")));
        }
        self.clips.insert(word.to_ascii_lowercase(), clip);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&PoseSequence> {
        self.clips.get(&word.to_ascii_lowercase())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.clips.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn mean_clip_len(&self) -> Option<f64> {
        if self.clips.is_empty() {
            return None;
        }
        let total: usize = self.clips.values().map(PoseSequence::len).sum();
        Some(total as f64 / self.clips.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StitchConfig {
    pub word_order: WordOrder,
    pub base_stride: usize,
    /// Per-sentence stride multipliers drawn uniformly; empty or `[1]` disables jitter.
    pub jitter_strides: Vec<usize>,
    pub crossfade_frames: usize,
    pub seed: u64,
    /// Drop tokens missing from the lexicon instead of failing.
    pub skip_oov: bool,
}

impl Default for StitchConfig {
    fn default() -> Self {
        Self {
            word_order: WordOrder::Same,
            base_stride: 1,
            jitter_strides: vec![1],
            crossfade_frames: DEFAULT_CROSSFADE_FRAMES,
            seed: 0,
            skip_oov: false,
        }
    }
}

impl StitchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_stride < 1 {
            return Err(Error::invalid("base_stride must be at least 1"));
        }
        if self.jitter_strides.iter().any(|s| !(1..=3).contains(s)) {
            return Err(Error::invalid("jitter strides must be within 1..=3"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordSpan {
    pub word: String,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StitchResult {
    pub sequence: PoseSequence,
    pub boundaries: Vec<WordSpan>,
    pub applied_stride: usize,
    /// Words in stitching order after OOV dropping and permutation.
    pub order: Vec<String>,
}

/// `max(1, round(mean_synth / mean_target))`, ties to even.
pub fn compute_sampling_rate(mean_synth_frames: f64, mean_target_frames: f64) -> Result<usize> {
    if !(mean_synth_frames > 0.0 && mean_target_frames > 0.0) {
        return Err(Error::invalid("frame means must be positive"));
    }
    let rate = (mean_synth_frames / mean_target_frames).round_ties_even();
    Ok((rate as usize).max(1))
}

/// Keeps frames `0, stride, 2·stride, …`.
pub fn resample(seq: &PoseSequence, stride: usize) -> PoseSequence {
    let stride = stride.max(1);
    PoseSequence {
        frames: seq.frames.iter().step_by(stride).copied().collect(),
        source_id: seq.source_id.clone(),
        fps_hint: seq.fps_hint.map(|f| f / stride as f32),
    }
}

/// Tokens that will actually be stitched, in sentence order.
fn resolve_words<'a>(words: &'a [String], lex: &SignLexicon, skip_oov: bool) -> Result<Vec<&'a String>> {
    let mut out = Vec::with_capacity(words.len());
    for w in words {
        if lex.contains(w) {
            out.push(w);
        } else if !skip_oov {
            return Err(Error::UnresolvedToken(w.clone()));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Stitches the clips for `words` into one sequence.
///
/// The random choices (jitter stride, then the permutation for random word
/// order) come from a generator keyed by `(cfg.seed, id)`. Between clips,
/// `cfg.crossfade_frames` linearly interpolated frames are inserted.
pub fn stitch_sentence(id: &str, words: &[String], lex: &SignLexicon, cfg: &StitchConfig) -> Result<StitchResult> {
    cfg.validate()?;
    if words.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<String> = resolve_words(words, lex, cfg.skip_oov)?.into_iter().cloned().collect();

    let mut rng = rng_from(derive_seed(cfg.seed, id));
    let jitter = match cfg.jitter_strides.as_slice() {
        [] => 1,
        js => js[rng.gen_range(0..js.len())],
    };
    if cfg.word_order == WordOrder::Random {
        order.shuffle(&mut rng);
    }
    let stride = cfg.base_stride * jitter;

    let mut frames: Vec<PoseFrame> = Vec::new();
    let mut boundaries = Vec::with_capacity(order.len());
    for (i, w) in order.iter().enumerate() {
        let clip = resample(lex.get(w).expect("resolved above"), stride);
        if i > 0 {
            let prev = *frames.last().expect("previous clip is non-empty");
            let next = clip.frames[0];
            let k = cfg.crossfade_frames;
            for j in 1..=k {
                frames.push(prev.lerp(&next, j as f32 / (k + 1) as f32));
            }
        }
        let start = frames.len();
        frames.extend_from_slice(&clip.frames);
        boundaries.push(WordSpan {
            word: w.clone(),
            start,
            end: frames.len(),
        });
    }
    Ok(StitchResult {
        sequence: PoseSequence::new(id, frames),
        boundaries,
        applied_stride: stride,
        order,
    })
}

/// Stitched length of `record` at stride 1, or `None` if it cannot be stitched.
fn unresampled_len(record: &SentenceRecord, lex: &SignLexicon, cfg: &StitchConfig) -> Option<usize> {
    let words = resolve_words(&record.text, lex, cfg.skip_oov).ok()?;
    let clips: usize = words.iter().map(|w| lex.get(w).map_or(0, PoseSequence::len)).sum();
    Some(clips + cfg.crossfade_frames * (words.len() - 1))
}

/// Mean unresampled frame count over stitchable records.
pub fn pre_stitch_mean(records: &[SentenceRecord], lex: &SignLexicon, cfg: &StitchConfig) -> Option<f64> {
    let lens: Vec<usize> = records.iter().filter_map(|r| unresampled_len(r, lex, cfg)).collect();
    if lens.is_empty() {
        None
    } else {
        Some(lens.iter().sum::<usize>() as f64 / lens.len() as f64)
    }
}

/// Base stride that brings the dataset's mean frame count to `target_mean_frames`.
pub fn plan_base_stride(
    records: &[SentenceRecord],
    lex: &SignLexicon,
    cfg: &StitchConfig,
    target_mean_frames: f64,
) -> Result<usize> {
    lex.mean_clip_len().ok_or(Error::EmptyInput)?;
    let mean = pre_stitch_mean(records, lex, cfg)
        .ok_or_else(|| Error::invalid("no record can be stitched with this lexicon"))?;
    compute_sampling_rate(mean, target_mean_frames)
}

#[derive(Clone, Debug)]
pub struct StitchedDataset {
    /// Successfully stitched records (with `n_frames` and `word_order` set)
    /// and their sequences, in input order.
    pub items: Vec<(SentenceRecord, StitchResult)>,
    /// `(record id, reason)` for every skipped record.
    pub skipped: Vec<(String, String)>,
    pub base_stride: usize,
    pub frame_histogram: LengthHistogram,
}

/// Stitches every record in parallel on the current rayon pool. Output order
/// and content do not depend on the number of threads.
pub fn stitch_records(
    records: &[SentenceRecord],
    lex: &SignLexicon,
    cfg: &StitchConfig,
) -> Vec<Result<(SentenceRecord, StitchResult)>> {
    records
        .par_iter()
        .map(|r| {
            let res = stitch_sentence(&r.id, &r.text, lex, cfg)?;
            let mut rec = r.clone();
            rec.n_frames = Some(res.sequence.len() as u64);
            rec.word_order = cfg.word_order;
            Ok((rec, res))
        })
        .collect()
}

/// Frame-rate matched stitching of a whole dataset. With a target mean the
/// base stride is derived from the data, otherwise `cfg.base_stride` is used.
pub fn stitch_dataset(
    records: &[SentenceRecord],
    lex: &SignLexicon,
    cfg: &StitchConfig,
    target_mean_frames: Option<f64>,
) -> Result<StitchedDataset> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if let Some(target) = target_mean_frames {
        cfg.base_stride = plan_base_stride(records, lex, &cfg, target)?;
    }
    let mut items = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for (r, res) in records.iter().zip(stitch_records(records, lex, &cfg)) {
        match res {
            Ok(item) => items.push(item),
            Err(e) => skipped.push((r.id.clone(), e.to_string())),
        }
    }
    let frame_histogram = LengthHistogram::from_lengths(items.iter().map(|(_, s)| s.sequence.len() as u64));
    Ok(StitchedDataset {
        items,
        skipped,
        base_stride: cfg.base_stride,
        frame_histogram,
    })
}
