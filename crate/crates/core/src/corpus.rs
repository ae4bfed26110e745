//! Corpus selection and reshaping: vocabulary-match filtering, short-sentence
//! merging, name/rare-word substitution and length statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::pose::SentenceRecord;
use crate::seed::rng_from;
use crate::template::Phenomenon;
use crate::{Error, Result};

pub const PERSON_TOKEN: &str = "<PERSON>";
pub const UNKNOWN_TOKEN: &str = "<UNKNOWN>";

/// Default match threshold; sentences must match strictly more than this.
pub const DEFAULT_MIN_MATCH_RATE: f64 = 0.9;
pub const DEFAULT_MIN_FREQ: u64 = 3;

fn is_special(tok: &str) -> bool {
    tok == PERSON_TOKEN || tok == UNKNOWN_TOKEN
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub bins: BTreeMap<u64, u64>,
    pub mean: f64,
    pub total: u64,
}

impl LengthHistogram {
    pub fn from_lengths(lengths: impl IntoIterator<Item = u64>) -> Self {
        let mut bins = BTreeMap::new();
        for l in lengths {
            *bins.entry(l).or_insert(0) += 1;
        }
        Self::from_bins(bins)
    }

    pub fn from_bins(bins: BTreeMap<u64, u64>) -> Self {
        let total: u64 = bins.values().sum();
        let sum: u128 = bins.iter().map(|(&l, &c)| u128::from(l) * u128::from(c)).sum();
        let mean = if total == 0 { 0.0 } else { sum as f64 / total as f64 };
        Self { bins, mean, total }
    }

    /// `length,count` rows with a header, ascending by length.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = format!("{header},count\n");
        for (l, c) in &self.bins {
            out.push_str(&format!("{l},{c}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergePolicy {
    /// Sentences strictly shorter than this are merge candidates.
    pub max_len: usize,
    /// Portion of candidates that get merged.
    pub fraction: f64,
    /// Sentences per merged output.
    pub group: usize,
}

impl Default for MergePolicy {
    fn default() -> Self {
        Self {
            max_len: 8,
            fraction: 0.9,
            group: 3,
        }
    }
}

impl MergePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.group < 2 {
            return Err(Error::invalid("merge group must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::invalid(format!(
                "merge fraction {} outside [0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }
}

/// Fraction of (case-folded) tokens found in `vocab`. `vocab` must be lowercase.
pub fn match_rate<S: AsRef<str>>(sentence: &[S], vocab: &BTreeSet<String>) -> Result<f64> {
    if sentence.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = sentence
        .iter()
        .filter(|t| vocab.contains(&t.as_ref().to_ascii_lowercase()))
        .count();
    Ok(hits as f64 / sentence.len() as f64)
}

/// Keeps sentences whose match rate is strictly above `min_rate` and tags them
/// as corpus sentences. Empty sentences are dropped.
pub fn filter_corpus(
    sentences: impl IntoIterator<Item = SentenceRecord>,
    vocab: &BTreeSet<String>,
    min_rate: f64,
) -> Result<Vec<SentenceRecord>> {
    if !(0.0..=1.0).contains(&min_rate) {
        return Err(Error::invalid(format!("min_rate {min_rate} outside [0, 1]")));
    }
    Ok(sentences
        .into_iter()
        .filter(|s| matches!(match_rate(&s.text, vocab), Ok(r) if r > min_rate))
        .map(|s| s.with_phenomenon(Phenomenon::Corpus))
        .collect())
}

/// Merges a seeded random selection of short sentences into longer ones.
///
/// `⌊fraction · k⌋` of the `k` candidates are chosen, grouped in corpus order
/// into runs of `policy.group`, and each full group is joined into a single
/// record placed where its first member was. A trailing partial group and all
/// other sentences pass through unchanged.
pub fn merge_short(sentences: Vec<SentenceRecord>, policy: &MergePolicy, seed: u64) -> Result<Vec<SentenceRecord>> {
    policy.validate()?;
    let candidates: Vec<usize> = sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| s.text.len() < policy.max_len)
        .map(|(i, _)| i)
        .collect();
    let n_selected = (policy.fraction * candidates.len() as f64).floor() as usize;
    let mut rng = rng_from(seed);
    let mut selected: Vec<usize> = index::sample(&mut rng, candidates.len(), n_selected)
        .into_iter()
        .map(|k| candidates[k])
        .collect();
    selected.sort_unstable();

    // group leader -> members; other members are consumed by their leader
    let mut leader_of: HashMap<usize, &[usize]> = HashMap::new();
    let mut absorbed = vec![false; sentences.len()];
    for chunk in selected.chunks_exact(policy.group) {
        leader_of.insert(chunk[0], chunk);
        for &m in &chunk[1..] {
            absorbed[m] = true;
        }
    }

    let mut out = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        if absorbed[i] {
            continue;
        }
        match leader_of.get(&i) {
            Some(members) => {
                let first = &sentences[members[0]];
                let mut merged = first.clone();
                merged.id = members
                    .iter()
                    .map(|&m| sentences[m].id.as_str())
                    .collect::<Vec<_>>()
                    .join("+");
                merged.text = members
                    .iter()
                    .flat_map(|&m| sentences[m].text.iter().cloned())
                    .collect();
                merged.pose_path = None;
                merged.n_frames = None;
                out.push(merged);
            }
            None => out.push(s.clone()),
        }
    }
    Ok(out)
}

/// Case-folded token counts, possibly pooled over several streams.
#[derive(Clone, Debug, Default)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, sentences: &[SentenceRecord]) {
        for s in sentences {
            for t in &s.text {
                *self.counts.entry(t.to_ascii_lowercase()).or_insert(0) += 1;
            }
        }
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(&token.to_ascii_lowercase()).copied().unwrap_or(0)
    }
}

/// Name tokens become `<PERSON>`; other tokens seen fewer than `min_freq`
/// times in `freq` become `<UNKNOWN>`. `names` must be lowercase.
pub fn apply_replacements(
    sentences: Vec<SentenceRecord>,
    names: &BTreeSet<String>,
    freq: &FrequencyTable,
    min_freq: u64,
) -> Result<Vec<SentenceRecord>> {
    if min_freq < 1 {
        return Err(Error::invalid("min_freq must be at least 1"));
    }
    Ok(sentences
        .into_iter()
        .map(|mut s| {
            for tok in s.text.iter_mut() {
                if is_special(tok) {
                    continue;
                }
                if names.contains(&tok.to_ascii_lowercase()) {
                    *tok = PERSON_TOKEN.to_owned();
                } else if freq.get(tok) < min_freq {
                    *tok = UNKNOWN_TOKEN.to_owned();
                }
            }
            s
        })
        .collect())
}

/// Two-pass substitution with frequencies counted over `sentences` alone.
pub fn replace_rare_and_names(
    sentences: Vec<SentenceRecord>,
    names: &BTreeSet<String>,
    min_freq: u64,
) -> Result<Vec<SentenceRecord>> {
    let mut freq = FrequencyTable::new();
    freq.add(&sentences);
    apply_replacements(sentences, names, &freq, min_freq)
}

pub fn length_stats<'a>(sentences: impl IntoIterator<Item = &'a SentenceRecord>) -> LengthHistogram {
    LengthHistogram::from_lengths(sentences.into_iter().map(|s| s.text.len() as u64))
}
