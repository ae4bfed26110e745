//! Corpus BLEU and sentence ROUGE-N / ROUGE-L.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How zero n-gram match counts are treated in BLEU.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Any zero precision gives a score of zero.
    #[default]
    None,
    /// The k-th zero-match order gets precision `1 / (2^k · total_n)`.
    Exp,
}

impl std::str::FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Smoothing::None),
            "exp" => Ok(Smoothing::Exp),
            _ => Err(Error::invalid(format!(
                "unknown smoothing `{s}` (expected none or exp)"
            ))),
        }
    }
}

/// Lowercased whitespace tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Clipped match count and total candidate n-grams for one sentence pair.
fn clipped_matches<S: AsRef<str>>(cand: &[S], reference: &[S], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let matched = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, cand.len().saturating_sub(n - 1))
}

/// Corpus-level n-gram statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn collect<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], max_n: usize) -> Result<Self> {
        if candidates.len() != references.len() {
            return Err(Error::invalid(format!(
                "{} candidates vs {} references",
                candidates.len(),
                references.len()
            )));
        }
        if candidates.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(1..=4).contains(&max_n) {
            return Err(Error::invalid(format!("max_n {max_n} outside 1..=4")));
        }
        let mut s = BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            ..Default::default()
        };
        for (c, r) in candidates.iter().zip(references) {
            s.cand_len += c.len();
            s.ref_len += r.len();
            for n in 1..=max_n {
                let (m, t) = clipped_matches(c, r, n);
                s.matches[n - 1] += m;
                s.totals[n - 1] += t;
            }
        }
        Ok(s)
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.cand_len == 0 {
            0.0
        } else if self.cand_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.cand_len as f64).exp()
        }
    }

    /// Modified precisions `p_1..p_max_n` under `smoothing`.
    pub fn precisions(&self, smoothing: Smoothing) -> Vec<f64> {
        let mut zeros = 0;
        self.matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| {
                if t == 0 {
                    0.0
                } else if m == 0 && smoothing == Smoothing::Exp {
                    zeros += 1;
                    1.0 / (2f64.powi(zeros) * t as f64)
                } else {
                    m as f64 / t as f64
                }
            })
            .collect()
    }

    /// BLEU-n for `n = 1..=max_n`, scaled to [0, 100].
    pub fn scores(&self, smoothing: Smoothing) -> BTreeMap<usize, f64> {
        let p = self.precisions(smoothing);
        let bp = self.brevity_penalty();
        (1..=p.len())
            .map(|n| {
                let score = if p[..n].iter().any(|&x| x <= 0.0) {
                    0.0
                } else {
                    let log_mean = p[..n].iter().map(|x| x.ln()).sum::<f64>() / n as f64;
                    (bp * log_mean.exp() * 100.0).min(100.0)
                };
                (n, score)
            })
            .collect()
    }
}

pub fn bleu_corpus<S: AsRef<str>>(
    candidates: &[Vec<S>],
    references: &[Vec<S>],
    max_n: usize,
    smoothing: Smoothing,
) -> Result<BTreeMap<usize, f64>> {
    Ok(BleuStats::collect(candidates, references, max_n)?.scores(smoothing))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Prf {
    fn from_counts(overlap: usize, cand: usize, reference: usize) -> Self {
        let precision = if cand == 0 { 0.0 } else { overlap as f64 / cand as f64 };
        let recall = if reference == 0 {
            0.0
        } else {
            overlap as f64 / reference as f64
        };
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f }
    }
}

pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Result<Prf> {
    if n == 0 {
        return Err(Error::invalid("rouge n must be at least 1"));
    }
    let (overlap, cand_total) = clipped_matches(candidate, reference, n);
    let ref_total = reference.len().saturating_sub(n - 1);
    Ok(Prf::from_counts(overlap, cand_total, ref_total))
}

fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Prf {
    Prf::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct EvalPair {
    #[serde(default)]
    pub id: Option<String>,
    pub candidate: String,
    pub reference: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu: BTreeMap<usize, f64>,
    pub rouge1: Prf,
    pub rouge2: Prf,
    #[serde(rename = "rougeL")]
    pub rouge_l: Prf,
    pub n_pairs: usize,
    pub smoothing: Smoothing,
    pub tokenization: String,
}

impl EvalReport {
    /// Fixed-order plain-text table.
    pub fn table(&self) -> String {
        let mut out = format!("pairs\t{}\nsmoothing\t{:?}\n", self.n_pairs, self.smoothing);
        for (n, s) in &self.bleu {
            out.push_str(&format!("BLEU-{n}\t{s:.2}\n"));
        }
        for (name, prf) in [
            ("ROUGE-1", self.rouge1),
            ("ROUGE-2", self.rouge2),
            ("ROUGE-L", self.rouge_l),
        ] {
            out.push_str(&format!(
                "{name}\tP={:.4}\tR={:.4}\tF={:.4}\n",
                prf.precision, prf.recall, prf.f
            ));
        }
        out
    }
}

/// BLEU-1..4 over the corpus plus ROUGE averaged per pair. Text is lowercased
/// and whitespace tokenized.
pub fn eval_pairs(pairs: &[EvalPair], smoothing: Smoothing) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cands: Vec<Vec<String>> = pairs.iter().map(|p| tokenize(&p.candidate)).collect();
    let refs: Vec<Vec<String>> = pairs.iter().map(|p| tokenize(&p.reference)).collect();
    let bleu = bleu_corpus(&cands, &refs, 4, smoothing)?;

    let mut sums = [Prf::default(); 3];
    for (c, r) in cands.iter().zip(&refs) {
        let scores = [rouge_n(c, r, 1)?, rouge_n(c, r, 2)?, rouge_l(c, r)];
        for (acc, s) in sums.iter_mut().zip(scores) {
            acc.precision += s.precision;
            acc.recall += s.recall;
            acc.f += s.f;
        }
    }
    let k = pairs.len() as f64;
    let mean = |p: Prf| Prf {
        precision: p.precision / k,
        recall: p.recall / k,
        f: p.f / k,
    };
    Ok(EvalReport {
        bleu,
        rouge1: mean(sums[0]),
        rouge2: mean(sums[1]),
        rouge_l: mean(sums[2]),
        n_pairs: pairs.len(),
        smoothing,
        tokenization: "lowercase+whitespace".to_owned(),
    })
}
