//! Slow, obviously-correct reference implementations. None of these call into
//! the library code they are compared against.

use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Landmark values `(x, y, c)` per frame per landmark.
pub type Grid = Vec<Vec<(f32, f32, f32)>>;

/// For each low-confidence cell, scan outward one frame at a time, earlier side first.
pub fn interpolate(frames: &Grid, threshold: f32) -> (Grid, usize) {
    let n = frames.len();
    let mut out = frames.clone();
    let mut unresolved = 0;
    for t in 0..n {
        for g in 0..frames[t].len() {
            if frames[t][g].2 >= threshold {
                continue;
            }
            let mut found = None;
            for d in 1..n {
                if t >= d && frames[t - d][g].2 >= threshold {
                    found = Some(t - d);
                    break;
                }
                if t + d < n && frames[t + d][g].2 >= threshold {
                    found = Some(t + d);
                    break;
                }
            }
            match found {
                Some(s) => {
                    out[t][g].0 = frames[s][g].0;
                    out[t][g].1 = frames[s][g].1;
                }
                None => unresolved += 1,
            }
        }
    }
    (out, unresolved)
}

pub struct OracleSlot {
    pub category: String,
    pub constraints: Vec<(String, String)>,
}

pub enum OracleItem {
    Word(String),
    Slot(OracleSlot),
}

/// Reads the template DSL by splitting on whitespace, brackets, commas and `=`.
pub fn parse_dsl(src: &str) -> Vec<OracleItem> {
    src.split_whitespace()
        .map(|tok| match tok.find('[') {
            None => OracleItem::Word(tok.to_owned()),
            Some(b) => {
                let inner = &tok[b + 1..tok.len() - 1];
                let constraints = inner
                    .split(',')
                    .filter(|c| !c.is_empty())
                    .map(|c| {
                        let (k, v) = c.split_once('=').unwrap();
                        (k.to_owned(), v.to_owned())
                    })
                    .collect();
                OracleItem::Slot(OracleSlot {
                    category: tok[..b].to_owned(),
                    constraints,
                })
            }
        })
        .collect()
}

pub type OracleLexicon = BTreeMap<String, Vec<(String, BTreeMap<String, String>)>>;

/// Every slot-filling tuple, visited with an odometer over candidate indices,
/// kept when all constraints hold.
pub fn enumerate(items: &[OracleItem], lex: &OracleLexicon) -> Vec<String> {
    let slots: Vec<&OracleSlot> = items
        .iter()
        .filter_map(|i| match i {
            OracleItem::Slot(s) => Some(s),
            OracleItem::Word(_) => None,
        })
        .collect();
    let cands: Vec<&Vec<(String, BTreeMap<String, String>)>> = slots.iter().map(|s| &lex[&s.category]).collect();
    if cands.iter().any(|c| c.is_empty()) {
        return Vec::new();
    }
    let mut idx = vec![0usize; slots.len()];
    let mut out = Vec::new();
    loop {
        if consistent(&slots, &cands, &idx) {
            let mut k = 0;
            let words: Vec<&str> = items
                .iter()
                .map(|i| match i {
                    OracleItem::Word(w) => w.as_str(),
                    OracleItem::Slot(_) => {
                        k += 1;
                        cands[k - 1][idx[k - 1]].0.as_str()
                    }
                })
                .collect();
            out.push(words.join(" "));
        }
        // advance the rightmost digit
        let mut pos = slots.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < cands[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn consistent(slots: &[&OracleSlot], cands: &[&Vec<(String, BTreeMap<String, String>)>], idx: &[usize]) -> bool {
    let mut vars: HashMap<&str, &str> = HashMap::new();
    for (s, slot) in slots.iter().enumerate() {
        let feats = &cands[s][idx[s]].1;
        for (k, v) in &slot.constraints {
            let Some(actual) = feats.get(k) else { return false };
            let is_var = v.chars().all(|c| c.is_ascii_uppercase());
            if is_var {
                if let Some(prev) = vars.insert(v.as_str(), actual.as_str()) {
                    if prev != actual {
                        return false;
                    }
                }
            } else if actual != v {
                return false;
            }
        }
    }
    true
}

pub fn match_rate(tokens: &[String], vocab: &BTreeSet<String>) -> f64 {
    let mut hits = 0;
    for t in tokens {
        for v in vocab {
            if t.to_ascii_lowercase() == *v {
                hits += 1;
                break;
            }
        }
    }
    hits as f64 / tokens.len() as f64
}

/// Most frequent adjacent symbol pair over whitespace words split into
/// characters with an end marker on the last one; ties to the smaller pair.
pub fn first_bpe_pair(corpus: &[&str], eow: &str) -> (String, String) {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for line in corpus {
        for word in line.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut syms: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
            let last = syms.len() - 1;
            syms[last].push_str(eow);
            for i in 0..last {
                *counts.entry((syms[i].clone(), syms[i + 1].clone())).or_default() += 1;
            }
        }
    }
    let best = counts.values().copied().max().unwrap();
    counts.into_iter().find(|(_, c)| *c == best).unwrap().0
}

/// Clipped n-gram matches and candidate n-gram total by counting with nested loops.
pub fn clipped(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let grams = |s: &[String]| -> Vec<Vec<String>> { s.windows(n).map(|w| w.to_vec()).collect() };
    let c = grams(cand);
    let r = grams(reference);
    let mut seen: Vec<&Vec<String>> = Vec::new();
    let mut matched = 0;
    for g in &c {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let in_c = c.iter().filter(|x| *x == g).count();
        let in_r = r.iter().filter(|x| *x == g).count();
        matched += in_c.min(in_r);
    }
    (matched, c.len())
}

/// Unsmoothed corpus BLEU-`max_n` on a 0..100 scale.
pub fn bleu(cands: &[Vec<String>], refs: &[Vec<String>], max_n: usize) -> f64 {
    let mut logsum = 0.0;
    for n in 1..=max_n {
        let (mut m, mut t) = (0, 0);
        for (c, r) in cands.iter().zip(refs) {
            let (a, b) = clipped(c, r, n);
            m += a;
            t += b;
        }
        if m == 0 {
            return 0.0;
        }
        logsum += (m as f64 / t as f64).ln();
    }
    let c: usize = cands.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * (logsum / max_n as f64).exp()
}

/// LCS length by trying every subsequence of `a` (so keep `a` short).
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| &a[i]).collect();
        if sub.len() <= best {
            continue;
        }
        let mut it = b.iter();
        if sub.iter().all(|w| it.any(|x| x == *w)) {
            best = sub.len();
        }
    }
    best
}
