//! Byte-pair encoding over characters with an end-of-word suffix marker.
//!
//! Words are whitespace delimited. The last symbol of every word carries
//! [`END_OF_WORD`], so decoding turns markers back into single spaces.
//! Special tokens are whole words that are never split or merged.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const END_OF_WORD: &str = "</w>";
pub const UNK: &str = "<unk>";
pub const MODEL_VERSION: &str = "bpe-v1";
pub const DEFAULT_VOCAB_SIZE: usize = 15_000;

pub fn default_specials() -> Vec<String> {
    ["<pad>", "<s>", "</s>", UNK, "<PERSON>", "<UNKNOWN>"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: BTreeMap<String, u32>,
    id_to_token: Vec<String>,
    specials: Vec<String>,
    ranks: HashMap<(String, String), usize>,
    unk_id: u32,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    specials: Vec<String>,
    merges: Vec<(String, String)>,
    vocab: BTreeMap<String, u32>,
}

fn word_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    chars
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == n {
                format!("{c}{END_OF_WORD}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

/// Symbol interner used during training.
#[derive(Default)]
struct Symbols {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Symbols {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }
}

fn pairs_of(word: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    word.windows(2).map(|w| (w[0], w[1]))
}

fn merge_word(word: &[u32], pair: (u32, u32), merged: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

/// Learns merges until the vocabulary reaches `vocab_size` or no adjacent
/// pair occurs at least twice. Ties on count go to the lexicographically
/// smaller `(left, right)` pair.
///
/// The base alphabet holds every corpus character both bare and with the end
/// marker. `<unk>` is added to `specials` when missing.
pub fn bpe_train<S: AsRef<str>>(corpus: &[S], vocab_size: usize, specials: &[String]) -> Result<BpeModel> {
    let mut specials: Vec<String> = specials.to_vec();
    if !specials.iter().any(|s| s == UNK) {
        specials.push(UNK.to_owned());
    }
    let special_set: HashSet<&str> = specials.iter().map(String::as_str).collect();

    let mut word_freq: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for w in sentence.as_ref().split_whitespace() {
            if !special_set.contains(w) {
                *word_freq.entry(w).or_insert(0) += 1;
            }
        }
    }
    if word_freq.is_empty() {
        return Err(Error::EmptyInput);
    }

    let alphabet: BTreeSet<String> = word_freq
        .keys()
        .flat_map(|w| w.chars())
        .flat_map(|c| [c.to_string(), format!("{c}{END_OF_WORD}")])
        .collect();
    let base = specials.len() + alphabet.len();
    if vocab_size < base {
        return Err(Error::invalid(format!(
            "vocab_size {vocab_size} is below the {} specials plus {} base symbols",
            specials.len(),
            alphabet.len()
        )));
    }

    let mut vocab: BTreeMap<String, u32> = BTreeMap::new();
    let mut id_to_token = Vec::new();
    for tok in specials.iter().chain(alphabet.iter()) {
        if !vocab.contains_key(tok) {
            vocab.insert(tok.clone(), id_to_token.len() as u32);
            id_to_token.push(tok.clone());
        }
    }

    let mut syms = Symbols::default();
    let freqs: Vec<u64> = word_freq.values().copied().collect();
    let mut words: Vec<Vec<u32>> = word_freq
        .keys()
        .map(|w| word_symbols(w).iter().map(|s| syms.intern(s)).collect())
        .collect();

    let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut where_: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (wi, w) in words.iter().enumerate() {
        for p in pairs_of(w) {
            *pair_counts.entry(p).or_insert(0) += freqs[wi];
            where_.entry(p).or_default().insert(wi);
        }
    }

    let mut merges = Vec::new();
    while id_to_token.len() < vocab_size {
        let best = pair_counts
            .iter()
            .filter(|(_, &c)| c >= 2)
            .max_by(|(pa, ca), (pb, cb)| {
                let ka = (&syms.names[pa.0 as usize], &syms.names[pa.1 as usize]);
                let kb = (&syms.names[pb.0 as usize], &syms.names[pb.1 as usize]);
                ca.cmp(cb).then_with(|| kb.cmp(&ka))
            })
            .map(|(p, _)| *p);
        let Some(pair) = best else { break };

        let left = syms.names[pair.0 as usize].clone();
        let right = syms.names[pair.1 as usize].clone();
        let joined = format!("{left}{right}");
        let merged = syms.intern(&joined);

        let mut affected: Vec<usize> = where_
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        for wi in affected {
            let f = freqs[wi];
            for p in pairs_of(&words[wi]) {
                if let Some(c) = pair_counts.get_mut(&p) {
                    *c -= f;
                    if *c == 0 {
                        pair_counts.remove(&p);
                    }
                }
                if let Some(set) = where_.get_mut(&p) {
                    set.remove(&wi);
                }
            }
            words[wi] = merge_word(&words[wi], pair, merged);
            for p in pairs_of(&words[wi]) {
                *pair_counts.entry(p).or_insert(0) += f;
                where_.entry(p).or_default().insert(wi);
            }
        }

        merges.push((left, right));
        if !vocab.contains_key(&joined) {
            vocab.insert(joined.clone(), id_to_token.len() as u32);
            id_to_token.push(joined);
        }
    }

    Ok(BpeModel::assemble(merges, vocab, id_to_token, specials))
}

impl BpeModel {
    fn assemble(
        merges: Vec<(String, String)>,
        vocab: BTreeMap<String, u32>,
        id_to_token: Vec<String>,
        specials: Vec<String>,
    ) -> Self {
        let ranks = merges.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let unk_id = vocab[UNK];
        Self {
            merges,
            vocab,
            id_to_token,
            specials,
            ranks,
            unk_id,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeMap<String, u32> {
        &self.vocab
    }

    pub fn specials(&self) -> &[String] {
        &self.specials
    }

    pub fn vocab_size(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.vocab.get(token).copied()
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    fn bpe_word(&self, word: &str) -> Vec<String> {
        let mut symbols = word_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| {
                    self.ranks
                        .get(&(w[0].clone(), w[1].clone()))
                        .map(|&r| (r, w[0].clone(), w[1].clone()))
                })
                .min();
            let Some((_, l, r)) = best else { break };
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == l && symbols[i + 1] == r {
                    out.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = out;
        }
        symbols
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        for word in text.split_whitespace() {
            if self.specials.iter().any(|s| s == word) {
                ids.push(self.vocab[word]);
                continue;
            }
            ids.extend(
                self.bpe_word(word)
                    .iter()
                    .map(|s| self.vocab.get(s).copied().unwrap_or(self.unk_id)),
            );
        }
        ids
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut out = String::new();
        for &id in ids {
            let tok = self.id_to_token.get(id as usize).ok_or(Error::UnknownTokenId(id))?;
            if self.specials.contains(tok) {
                out.push_str(tok);
                out.push(' ');
            } else if let Some(stem) = tok.strip_suffix(END_OF_WORD) {
                out.push_str(stem);
                out.push(' ');
            } else {
                out.push_str(tok);
            }
        }
        if out.ends_with(' ') {
            out.pop();
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION.to_owned(),
            specials: self.specials.clone(),
            merges: self.merges.clone(),
            vocab: self.vocab.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::data("bpe model", e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(Error::data(
                "bpe model",
                format!("unsupported version `{}`", file.version),
            ));
        }
        let mut id_to_token = vec![None; file.vocab.len()];
        for (tok, &id) in &file.vocab {
            match id_to_token.get_mut(id as usize) {
                Some(slot @ None) => *slot = Some(tok.clone()),
                _ => return Err(Error::data("bpe model", format!("token ids are not dense (id {id})"))),
            }
        }
        let id_to_token: Vec<String> = id_to_token.into_iter().map(|t| t.expect("dense")).collect();
        if !file.specials.iter().any(|s| s == UNK) || file.specials.iter().any(|s| !file.vocab.contains_key(s)) {
            return Err(Error::data("bpe model", "specials missing from vocab or no <unk>"));
        }
        let mut seen = HashSet::new();
        for (l, r) in &file.merges {
            if !seen.insert((l, r)) || !file.vocab.contains_key(&format!("{l}{r}")) {
                return Err(Error::data("bpe model", format!("bad merge ({l}, {r})")));
            }
        }
        Ok(Self::assemble(file.merges, file.vocab, id_to_token, file.specials))
    }
}
