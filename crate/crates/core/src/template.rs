//! Slot templates with feature agreement, and sentence generation from them.
//!
//! Template DSL: whitespace separated items. `Name[]` is an unconstrained slot,
//! `Name[num=N,gen=G]` binds features to agreement variables (uppercase) or
//! fixes them to a value (lowercase), anything without brackets is a literal
//! token.
//!
//! ```
//! use signsynth_core::template::parse_template;
//! let t = parse_template("Subj[num=N] will V[num=N]").unwrap();
//! assert_eq!(t.slots().count(), 2);
//! assert_eq!(t.render(), "Subj[num=N] will V[num=N]");
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pose::SentenceRecord;
use crate::seed::{derive_seed, rng_from};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phenomenon {
    AnaphorAgreement,
    ArgumentStructure,
    Binding,
    ControlRaising,
    DeterminerNounAgreement,
    Ellipsis,
    FillerGap,
    IrregularForms,
    IslandEffects,
    NpiLicensing,
    Quantifiers,
    SubjectVerbAgreement,
    Custom,
    Corpus,
}

impl Phenomenon {
    /// The twelve linguistic phenomenon families templates are grouped by.
    pub const LINGUISTIC: [Phenomenon; 12] = [
        Phenomenon::AnaphorAgreement,
        Phenomenon::ArgumentStructure,
        Phenomenon::Binding,
        Phenomenon::ControlRaising,
        Phenomenon::DeterminerNounAgreement,
        Phenomenon::Ellipsis,
        Phenomenon::FillerGap,
        Phenomenon::IrregularForms,
        Phenomenon::IslandEffects,
        Phenomenon::NpiLicensing,
        Phenomenon::Quantifiers,
        Phenomenon::SubjectVerbAgreement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phenomenon::AnaphorAgreement => "anaphor_agreement",
            Phenomenon::ArgumentStructure => "argument_structure",
            Phenomenon::Binding => "binding",
            Phenomenon::ControlRaising => "control_raising",
            Phenomenon::DeterminerNounAgreement => "determiner_noun_agreement",
            Phenomenon::Ellipsis => "ellipsis",
            Phenomenon::FillerGap => "filler_gap",
            Phenomenon::IrregularForms => "irregular_forms",
            Phenomenon::IslandEffects => "island_effects",
            Phenomenon::NpiLicensing => "npi_licensing",
            Phenomenon::Quantifiers => "quantifiers",
            Phenomenon::SubjectVerbAgreement => "subject_verb_agreement",
            Phenomenon::Custom => "custom",
            Phenomenon::Corpus => "corpus",
        }
    }
}

impl fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phenomenon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Phenomenon::LINGUISTIC
            .iter()
            .chain([Phenomenon::Custom, Phenomenon::Corpus].iter())
            .find(|p| p.as_str() == norm)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown phenomenon `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Agreement variable shared between slots.
    Var(String),
    /// Feature must take exactly this value.
    Value(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub category: String,
    /// `(feature, constraint)` in declaration order; feature names are unique.
    pub constraints: Vec<(String, Constraint)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemplateItem {
    Slot(Slot),
    Literal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub phenomenon: Phenomenon,
    pub items: Vec<TemplateItem>,
}

impl Template {
    pub fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.items.iter().filter_map(|it| match it {
            TemplateItem::Slot(s) => Some(s),
            TemplateItem::Literal(_) => None,
        })
    }

    pub fn literals(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|it| match it {
            TemplateItem::Literal(l) => Some(l.as_str()),
            TemplateItem::Slot(_) => None,
        })
    }

    /// Canonical DSL form; `parse_template(t.render())` gives back the same items.
    pub fn render(&self) -> String {
        let mut parts = Vec::with_capacity(self.items.len());
        for item in &self.items {
            match item {
                TemplateItem::Literal(l) => parts.push(l.clone()),
                TemplateItem::Slot(s) => {
                    let inner: Vec<String> = s
                        .constraints
                        .iter()
                        .map(|(f, c)| match c {
                            Constraint::Var(v) | Constraint::Value(v) => format!("{f}={v}"),
                        })
                        .collect();
                    parts.push(format!("{}[{}]", s.category, inner.join(",")));
                }
            }
        }
        parts.join(" ")
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::TemplateParse {
        offset,
        message: message.into(),
    }
}

fn parse_slot(tok: &str, at: usize) -> Result<Slot> {
    let open = tok.find('[').ok_or_else(|| parse_err(at, "`]` without `[`"))?;
    let category = &tok[..open];
    if category.is_empty() {
        return Err(parse_err(at, "empty slot category"));
    }
    if !is_ident(category) {
        return Err(parse_err(at, format!("invalid slot category `{category}`")));
    }
    let rest = &tok[open + 1..];
    let close = rest
        .find(']')
        .ok_or_else(|| parse_err(at + tok.len(), "unterminated `[`"))?;
    if close + 1 != rest.len() {
        return Err(parse_err(at + open + 2 + close, "trailing characters after `]`"));
    }
    let body = &rest[..close];
    if body.contains('[') {
        return Err(parse_err(at + open + 1 + body.find('[').unwrap(), "nested `[`"));
    }

    let mut constraints: Vec<(String, Constraint)> = Vec::new();
    if body.is_empty() {
        return Ok(Slot {
            category: category.to_owned(),
            constraints,
        });
    }
    let mut off = at + open + 1;
    for part in body.split(',') {
        let eq = part
            .find('=')
            .ok_or_else(|| parse_err(off, format!("expected `feature=value`, got `{part}`")))?;
        let (key, value) = (&part[..eq], &part[eq + 1..]);
        if key.is_empty() {
            return Err(parse_err(off, "empty feature name"));
        }
        if !is_ident(key) {
            return Err(parse_err(off, format!("invalid feature name `{key}`")));
        }
        let voff = off + eq + 1;
        if value.is_empty() {
            return Err(parse_err(voff, format!("empty value for feature `{key}`")));
        }
        let constraint = if value.starts_with(|c: char| c.is_ascii_uppercase())
            && value
                .chars()
                .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
        {
            Constraint::Var(value.to_owned())
        } else if value
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        {
            Constraint::Value(value.to_owned())
        } else {
            return Err(parse_err(
                voff,
                format!("`{value}` is neither an UPPERCASE variable nor a lowercase value"),
            ));
        };
        if constraints.iter().any(|(k, _)| k == key) {
            return Err(parse_err(off, format!("duplicate feature `{key}`")));
        }
        constraints.push((key.to_owned(), constraint));
        off += part.len() + 1;
    }
    Ok(Slot {
        category: category.to_owned(),
        constraints,
    })
}

/// Parses a DSL string into an anonymous [`Phenomenon::Custom`] template.
pub fn parse_template(src: &str) -> Result<Template> {
    let mut items = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let tok = &src[start..i];
        if tok.contains(['[', ']']) {
            items.push(TemplateItem::Slot(parse_slot(tok, start)?));
        } else {
            items.push(TemplateItem::Literal(tok.to_owned()));
        }
    }
    if items.is_empty() {
        return Err(parse_err(0, "empty template"));
    }
    if !items.iter().any(|it| matches!(it, TemplateItem::Slot(_))) {
        return Err(parse_err(0, "template has no slots"));
    }
    Ok(Template {
        id: String::new(),
        phenomenon: Phenomenon::Custom,
        items,
    })
}

/// Reads a template pack: one `id<TAB>phenomenon<TAB>dsl` per line. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_template_file(text: &str) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let loc = format!("line {}", lineno + 1);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (id, phen, dsl) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), Some(c)) => (a.trim(), b.trim(), c),
            _ => return Err(Error::data(loc, "expected `id<TAB>phenomenon<TAB>template`")),
        };
        if id.is_empty() || !seen.insert(id.to_owned()) {
            return Err(Error::data(loc, format!("missing or duplicate template id `{id}`")));
        }
        let phenomenon = phen.parse().map_err(|e: Error| Error::data(&loc, e.to_string()))?;
        let mut t = parse_template(dsl).map_err(|e| Error::data(&loc, e.to_string()))?;
        t.id = id.to_owned();
        t.phenomenon = phenomenon;
        out.push(t);
    }
    Ok(out)
}

/// Case-folded set intersection.
pub fn intersect_vocab<'a, A, B>(lexicon_words: A, template_words: B) -> BTreeSet<String>
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    let lex: BTreeSet<String> = lexicon_words.into_iter().map(str::to_ascii_lowercase).collect();
    template_words
        .into_iter()
        .map(str::to_ascii_lowercase)
        .filter(|w| lex.contains(w))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub word: String,
    #[serde(default)]
    pub features: BTreeMap<String, String>,
    /// Space separated sign-lexicon ids covering `word`.
    pub pose_source: String,
}

#[derive(Serialize, Deserialize)]
struct LexiconLine {
    category: String,
    word: String,
    #[serde(default)]
    features: BTreeMap<String, String>,
    #[serde(default)]
    pose_source: Option<String>,
}

/// Candidate fillers per slot category.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotLexicon {
    entries: BTreeMap<String, Vec<LexEntry>>,
}

impl SlotLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry unless an identical one is already present.
    pub fn insert(&mut self, category: impl Into<String>, entry: LexEntry) {
        let list = self.entries.entry(category.into()).or_default();
        if !list.contains(&entry) {
            list.push(entry);
        }
    }

    pub fn add(&mut self, category: &str, word: &str, features: &[(&str, &str)]) {
        self.insert(
            category,
            LexEntry {
                word: word.to_owned(),
                features: features.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
                pose_source: word.to_ascii_lowercase(),
            },
        );
    }

    pub fn candidates(&self, category: &str) -> Option<&[LexEntry]> {
        self.entries.get(category).map(Vec::as_slice)
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &LexEntry)> {
        self.entries
            .iter()
            .flat_map(|(c, es)| es.iter().map(move |e| (c.as_str(), e)))
    }

    /// Case-folded sign ids referenced by any entry.
    pub fn pose_sources(&self) -> BTreeSet<String> {
        self.entries()
            .flat_map(|(_, e)| e.pose_source.split_whitespace().map(str::to_ascii_lowercase))
            .collect()
    }

    /// Keeps only entries whose every pose source is in `sign_vocab`.
    /// Categories left without candidates stay present but empty.
    pub fn restrict_to(&self, sign_vocab: &BTreeSet<String>) -> SlotLexicon {
        let usable = intersect_vocab(
            sign_vocab.iter().map(String::as_str),
            self.entries().flat_map(|(_, e)| e.pose_source.split_whitespace()),
        );
        let entries = self
            .entries
            .iter()
            .map(|(c, es)| {
                let kept = es
                    .iter()
                    .filter(|e| {
                        e.pose_source
                            .split_whitespace()
                            .all(|s| usable.contains(&s.to_ascii_lowercase()))
                    })
                    .cloned()
                    .collect();
                (c.clone(), kept)
            })
            .collect();
        SlotLexicon { entries }
    }

    /// JSON-lines, one `{"category", "word", "features", "pose_source"}` per
    /// line. A missing `pose_source` defaults to the lowercased word.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lex = SlotLexicon::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: LexiconLine =
                serde_json::from_str(line).map_err(|e| Error::data(format!("line {}", lineno + 1), e.to_string()))?;
            if row.category.is_empty() || row.word.trim().is_empty() {
                return Err(Error::data(format!("line {}", lineno + 1), "empty category or word"));
            }
            let pose_source = row.pose_source.unwrap_or_else(|| row.word.to_ascii_lowercase());
            lex.insert(
                row.category,
                LexEntry {
                    word: row.word,
                    features: row.features,
                    pose_source,
                },
            );
        }
        Ok(lex)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (category, e) in self.entries() {
            let line = LexiconLine {
                category: category.to_owned(),
                word: e.word.clone(),
                features: e.features.clone(),
                pose_source: Some(e.pose_source.clone()),
            };
            out.push_str(&serde_json::to_string(&line).expect("lexicon rows serialize"));
            out.push('\n');
        }
        out
    }
}

/// Variable bindings indexed by variable id.
type Bindings<'a> = Vec<Option<&'a str>>;

enum Check {
    Var(usize),
    Value(String),
}

struct SlotPlan<'a> {
    candidates: &'a [LexEntry],
    checks: Vec<(String, Check)>,
}

/// A template resolved against a lexicon.
struct Plan<'a> {
    slots: Vec<SlotPlan<'a>>,
    n_vars: usize,
    /// For each slot index `i`, variables used by slots `i..`.
    live_vars: Vec<Vec<usize>>,
}

impl<'a> Plan<'a> {
    fn new(t: &Template, lex: &'a SlotLexicon) -> Result<Self> {
        let mut var_ids: HashMap<&str, usize> = HashMap::new();
        let mut slots = Vec::new();
        for slot in t.slots() {
            let candidates = lex
                .candidates(&slot.category)
                .ok_or_else(|| Error::UnknownCategory(slot.category.clone()))?;
            let checks = slot
                .constraints
                .iter()
                .map(|(f, c)| {
                    let check = match c {
                        Constraint::Var(v) => {
                            let next = var_ids.len();
                            Check::Var(*var_ids.entry(v.as_str()).or_insert(next))
                        }
                        Constraint::Value(v) => Check::Value(v.clone()),
                    };
                    (f.clone(), check)
                })
                .collect();
            slots.push(SlotPlan { candidates, checks });
        }
        let mut live_vars = vec![Vec::new(); slots.len() + 1];
        for i in (0..slots.len()).rev() {
            let mut vars = live_vars[i + 1].clone();
            for (_, c) in &slots[i].checks {
                if let Check::Var(v) = c {
                    if !vars.contains(v) {
                        vars.push(*v);
                    }
                }
            }
            vars.sort_unstable();
            live_vars[i] = vars;
        }
        Ok(Plan {
            slots,
            n_vars: var_ids.len(),
            live_vars,
        })
    }

    /// Bindings after choosing `entry` for slot `i`, or `None` if it clashes.
    fn try_bind(&self, i: usize, entry: &'a LexEntry, binds: &Bindings<'a>) -> Option<Bindings<'a>> {
        let mut out = binds.clone();
        for (feature, check) in &self.slots[i].checks {
            let value = entry.features.get(feature)?.as_str();
            match check {
                Check::Value(v) if v != value => return None,
                Check::Value(_) => {}
                Check::Var(id) => match out[*id] {
                    Some(bound) if bound != value => return None,
                    Some(_) => {}
                    None => out[*id] = Some(value),
                },
            }
        }
        Some(out)
    }

    /// Number of valid completions of slots `i..` under `binds`.
    fn count_from(&self, i: usize, binds: &Bindings<'a>, memo: &mut HashMap<(usize, Bindings<'a>), u128>) -> u128 {
        if i == self.slots.len() {
            return 1;
        }
        let key: Bindings<'a> = self.live_vars[i].iter().map(|&v| binds[v]).collect();
        if let Some(&n) = memo.get(&(i, key.clone())) {
            return n;
        }
        let mut total = 0u128;
        for entry in self.slots[i].candidates {
            if let Some(next) = self.try_bind(i, entry, binds) {
                total += self.count_from(i + 1, &next, memo);
            }
        }
        memo.insert((i, key), total);
        total
    }

    fn count(&self) -> u128 {
        self.count_from(0, &vec![None; self.n_vars], &mut HashMap::new())
    }

    /// Candidate indices of the `rank`-th expansion in lexicographic order.
    fn unrank(&self, mut rank: u128, memo: &mut HashMap<(usize, Bindings<'a>), u128>) -> Vec<usize> {
        let mut binds = vec![None; self.n_vars];
        let mut picks = Vec::with_capacity(self.slots.len());
        for i in 0..self.slots.len() {
            let mut chosen = None;
            for (ci, entry) in self.slots[i].candidates.iter().enumerate() {
                if let Some(next) = self.try_bind(i, entry, &binds) {
                    let n = self.count_from(i + 1, &next, memo);
                    if rank < n {
                        chosen = Some((ci, next));
                        break;
                    }
                    rank -= n;
                }
            }
            let (ci, next) = chosen.expect("rank below expansion count");
            picks.push(ci);
            binds = next;
        }
        picks
    }
}

/// Number of sentences [`expand_all`] emits for `t` without a limit.
pub fn count_expansions(t: &Template, lex: &SlotLexicon) -> Result<u128> {
    Ok(Plan::new(t, lex)?.count())
}

/// Lexicographic walk over valid candidate-index tuples.
pub struct ExpansionIndices<'a> {
    plan: Plan<'a>,
    pos: Vec<usize>,
    binds: Vec<Bindings<'a>>,
    started: bool,
    done: bool,
}

impl<'a> Iterator for ExpansionIndices<'a> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let n = self.plan.slots.len();
        if self.done || n == 0 {
            return None;
        }
        let mut depth;
        if self.started {
            depth = n - 1;
            self.pos[depth] += 1;
        } else {
            self.started = true;
            depth = 0;
            self.pos[0] = 0;
        }
        loop {
            let cands = self.plan.slots[depth].candidates;
            if self.pos[depth] >= cands.len() {
                if depth == 0 {
                    self.done = true;
                    return None;
                }
                depth -= 1;
                self.pos[depth] += 1;
                continue;
            }
            match self.plan.try_bind(depth, &cands[self.pos[depth]], &self.binds[depth]) {
                Some(b) => {
                    self.binds[depth + 1] = b;
                    if depth + 1 == n {
                        return Some(self.pos.clone());
                    }
                    depth += 1;
                    self.pos[depth] = 0;
                }
                None => self.pos[depth] += 1,
            }
        }
    }
}

/// Valid candidate-index tuples (one index per slot) in lexicographic order.
pub fn expand_indices<'a>(t: &Template, lex: &'a SlotLexicon) -> Result<ExpansionIndices<'a>> {
    let plan = Plan::new(t, lex)?;
    let n = plan.slots.len();
    let empty = vec![None; plan.n_vars];
    Ok(ExpansionIndices {
        pos: vec![0; n],
        binds: vec![empty; n + 1],
        plan,
        started: false,
        done: false,
    })
}

/// Builds the sentence record for a candidate-index tuple.
pub fn render_expansion(t: &Template, lex: &SlotLexicon, picks: &[usize], id: String) -> Result<SentenceRecord> {
    let mut text = Vec::new();
    let mut slot_i = 0;
    for item in &t.items {
        match item {
            TemplateItem::Literal(l) => text.push(l.clone()),
            TemplateItem::Slot(s) => {
                let cands = lex
                    .candidates(&s.category)
                    .ok_or_else(|| Error::UnknownCategory(s.category.clone()))?;
                let entry = cands
                    .get(picks[slot_i])
                    .ok_or_else(|| Error::invalid("candidate index out of range"))?;
                text.extend(entry.word.split_whitespace().map(str::to_owned));
                slot_i += 1;
            }
        }
    }
    Ok(SentenceRecord::new(id, text).with_phenomenon(t.phenomenon))
}

/// Every sentence of `t` in lexicographic order of slot-candidate indices,
/// at most `limit` of them.
pub fn expand_all<'a>(
    t: &'a Template,
    lex: &'a SlotLexicon,
    limit: Option<usize>,
) -> Result<impl Iterator<Item = SentenceRecord> + 'a> {
    let indices = expand_indices(t, lex)?;
    Ok(indices
        .take(limit.unwrap_or(usize::MAX))
        .enumerate()
        .map(move |(n, picks)| {
            render_expansion(t, lex, &picks, format!("{}-{n}", t.id)).expect("indices come from the plan")
        }))
}

/// `n` sentences drawn uniformly with replacement from the expansion space.
/// The stream is keyed by `(seed, template id)`.
pub fn sample_expansions(t: &Template, lex: &SlotLexicon, n: usize, seed: u64) -> Result<Vec<SentenceRecord>> {
    let plan = Plan::new(t, lex)?;
    let mut memo = HashMap::new();
    let total = plan.count_from(0, &vec![None; plan.n_vars], &mut memo);
    if total == 0 {
        return Err(Error::EmptyExpansionSpace);
    }
    let mut rng = rng_from(derive_seed(seed, &t.id));
    (0..n)
        .map(|i| {
            let rank = rng.gen_range(0..total);
            let picks = plan.unrank(rank, &mut memo);
            render_expansion(t, lex, &picks, format!("{}-s{i}", t.id))
        })
        .collect()
}
