//! Averaged-perceptron PoS tagger, base-NP chunker and main-verb finder.
//!
//! The tagger predicts a combined label of universal tag plus optional
//! fine-grained tag, decoding greedily left to right. Punctuation-only forms
//! bypass the model through a lexical rule.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rustc_hash::FxHashMap;

use crate::corpus::{AnnotatedSentence, Span, Token, Upos};
use crate::{rng, Error, Result};

pub const MODEL_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "synboot-tagger";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TagLabel {
    pub upos: Upos,
    pub xpos: Option<String>,
}

impl TagLabel {
    fn of(token: &Token) -> Self {
        TagLabel {
            upos: token.upos,
            xpos: token.xpos.clone(),
        }
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.xpos {
            Some(x) => write!(f, "{}|{}", self.upos, x),
            None => write!(f, "{}", self.upos),
        }
    }
}

impl FromStr for TagLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('|') {
            Some((u, x)) => Ok(TagLabel {
                upos: u.parse()?,
                xpos: Some(x.to_string()),
            }),
            None => Ok(TagLabel {
                upos: s.parse()?,
                xpos: None,
            }),
        }
    }
}

fn is_punct(form: &str) -> bool {
    !form.is_empty() && form.chars().all(|c| c.is_ascii_punctuation())
}

fn shape(word: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for c in word.chars() {
        let m = if c.is_lowercase() {
            'x'
        } else if c.is_uppercase() {
            'X'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if last != Some(m) {
            out.push(m);
            last = Some(m);
        }
    }
    out
}

fn affixes(word: &str) -> (Vec<&str>, Vec<&str>) {
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = bounds.len() - 1;
    let mut pre = Vec::new();
    let mut suf = Vec::new();
    for k in 1..=n.min(3) {
        pre.push(&word[..bounds[k]]);
        suf.push(&word[bounds[n - k]..]);
    }
    (pre, suf)
}

/// Feature strings for position `i` given the two previous predicted labels.
fn features(words: &[String], i: usize, prev: &str, prev2: &str) -> Vec<String> {
    let w = words[i].to_lowercase();
    let mut f = Vec::with_capacity(16);
    f.push("bias".to_string());
    f.push(format!("w={w}"));
    let (pre, suf) = affixes(&w);
    for (k, p) in pre.iter().enumerate() {
        f.push(format!("p{}={p}", k + 1));
    }
    for (k, s) in suf.iter().enumerate() {
        f.push(format!("s{}={s}", k + 1));
    }
    f.push(format!("shape={}", shape(&words[i])));
    f.push(format!("t1={prev}"));
    f.push(format!("t2={prev2}"));
    f.push(format!("t12={prev}|{prev2}"));
    let pw = if i > 0 {
        words[i - 1].to_lowercase()
    } else {
        "-START-".into()
    };
    let nw = words
        .get(i + 1)
        .map(|s| s.to_lowercase())
        .unwrap_or_else(|| "-END-".into());
    f.push(format!("pw={pw}"));
    f.push(format!("nw={nw}"));
    f.push(format!("t1w={prev}|{w}"));
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub version: u32,
    /// Labels ordered by descending training frequency; index 0 is the
    /// majority label and wins every tie.
    pub tags: Vec<TagLabel>,
    pub weights: FxHashMap<String, Vec<f64>>,
    pub punct: BTreeMap<String, usize>,
}

impl TaggerModel {
    fn label_names(&self) -> Vec<String> {
        self.tags.iter().map(|t| t.to_string()).collect()
    }

    fn scores(&self, feats: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.tags.len()];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, v) in scores.iter_mut().zip(w) {
                    *s += v;
                }
            }
        }
        scores
    }

    fn punct_label(&self, form: &str) -> TagLabel {
        if let Some(&i) = self.punct.get(form) {
            return self.tags[i].clone();
        }
        TagLabel {
            upos: Upos::Punct,
            xpos: None,
        }
    }

    fn predict_index(&self, words: &[String], i: usize, prev: &str, prev2: &str) -> usize {
        let scores = self.scores(&features(words, i, prev, prev2));
        argmax(&scores)
    }

    /// Tag a token sequence.
    pub fn tag<S: AsRef<str>>(&self, forms: &[S]) -> Vec<TagLabel> {
        let words: Vec<String> = forms.iter().map(|s| s.as_ref().to_string()).collect();
        let mut out = Vec::with_capacity(words.len());
        let mut prev = "-START-".to_string();
        let mut prev2 = "-START2-".to_string();
        for i in 0..words.len() {
            let label = if is_punct(&words[i]) {
                self.punct_label(&words[i])
            } else {
                self.tags[self.predict_index(&words, i, &prev, &prev2)].clone()
            };
            prev2 = std::mem::replace(&mut prev, label.to_string());
            out.push(label);
        }
        out
    }

    /// Tag `forms` and fill in base-NP spans and the main verb.
    pub fn annotate(&self, id: impl Into<String>, forms: Vec<String>) -> AnnotatedSentence {
        let labels = self.tag(&forms);
        let tokens = forms
            .into_iter()
            .zip(labels)
            .map(|(form, l)| Token {
                form,
                upos: l.upos,
                xpos: l.xpos,
                head: None,
                deprel: None,
            })
            .collect();
        let mut s = AnnotatedSentence::new(id, tokens);
        s.np_spans = chunk_nps(&s);
        s.main_verb = find_main_verb(&s);
        s
    }

    /// Universal-tag accuracy against gold sentences.
    pub fn accuracy(&self, gold: &[AnnotatedSentence]) -> f64 {
        let (mut right, mut total) = (0usize, 0usize);
        for s in gold {
            let forms = s.forms();
            for (pred, g) in self.tag(&forms).iter().zip(&s.tokens) {
                total += 1;
                right += (pred.upos == g.upos) as usize;
            }
        }
        if total == 0 {
            0.0
        } else {
            right as f64 / total as f64
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let names = self.label_names();
        let mut lines = Vec::new();
        for (i, name) in names.iter().enumerate() {
            lines.push(format!("tag\t{i:04}\t{name}"));
        }
        for (form, &i) in &self.punct {
            lines.push(format!("punct\t{form}\t{}", names[i]));
        }
        for (feat, ws) in &self.weights {
            for (i, v) in ws.iter().enumerate() {
                if *v != 0.0 {
                    lines.push(format!("weight\t{feat}\t{}\t{v}", names[i]));
                }
            }
        }
        lines.sort();
        writeln!(w, "{MODEL_MAGIC}\tversion\t{}", self.version)?;
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty tagger model"))??;
        let version = match header.split('\t').collect::<Vec<_>>().as_slice() {
            [MODEL_MAGIC, "version", v] => v.parse::<u32>().map_err(|_| Error::parse(1, "bad model version"))?,
            _ => return Err(Error::parse(1, "not a tagger model file")),
        };
        if version != MODEL_VERSION {
            return Err(Error::parse(1, format!("unsupported model version {version}")));
        }
        let mut tags = Vec::new();
        let mut punct_raw = Vec::new();
        let mut weight_raw = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            let line_no = n + 2;
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["tag", idx, name] => {
                    let idx: usize = idx.parse().map_err(|_| Error::parse(line_no, "bad tag index"))?;
                    if idx != tags.len() {
                        return Err(Error::parse(line_no, "tag indices out of order"));
                    }
                    tags.push(
                        name.parse::<TagLabel>()
                            .map_err(|e| Error::parse(line_no, e.to_string()))?,
                    );
                }
                ["punct", form, name] => punct_raw.push((line_no, form.to_string(), name.to_string())),
                ["weight", feat, name, v] => {
                    let v: f64 = v.parse().map_err(|_| Error::parse(line_no, "bad weight"))?;
                    weight_raw.push((line_no, feat.to_string(), name.to_string(), v));
                }
                _ => return Err(Error::parse(line_no, "unrecognised model line")),
            }
        }
        if tags.is_empty() {
            return Err(Error::invalid("tagger model has an empty tag set"));
        }
        let index: HashMap<String, usize> = tags.iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
        let lookup = |line_no: usize, name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::parse(line_no, format!("weight references unknown tag {name}")))
        };
        let mut punct = BTreeMap::new();
        for (line_no, form, name) in punct_raw {
            punct.insert(form, lookup(line_no, &name)?);
        }
        let mut weights: FxHashMap<String, Vec<f64>> = FxHashMap::default();
        for (line_no, feat, name, v) in weight_raw {
            let i = lookup(line_no, &name)?;
            weights.entry(feat).or_insert_with(|| vec![0.0; tags.len()])[i] = v;
        }
        Ok(TaggerModel {
            version,
            tags,
            weights,
            punct,
        })
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

struct Param {
    w: Vec<f64>,
    total: Vec<f64>,
    stamp: Vec<u64>,
}

/// Train an averaged perceptron on gold-tagged sentences. Sentence order is
/// reshuffled every epoch from `seed`.
pub fn train_tagger(gold: &[AnnotatedSentence], epochs: usize, seed: u64) -> Result<TaggerModel> {
    if gold.iter().all(|s| s.is_empty()) {
        return Err(Error::invalid("cannot train a tagger on an empty gold set"));
    }
    let mut freq: BTreeMap<TagLabel, usize> = BTreeMap::new();
    let mut punct_freq: BTreeMap<(String, TagLabel), usize> = BTreeMap::new();
    for s in gold {
        for t in &s.tokens {
            let l = TagLabel::of(t);
            *freq.entry(l.clone()).or_default() += 1;
            if is_punct(&t.form) {
                *punct_freq.entry((t.form.clone(), l)).or_default() += 1;
            }
        }
    }
    let mut tags: Vec<(TagLabel, usize)> = freq.into_iter().collect();
    tags.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let tags: Vec<TagLabel> = tags.into_iter().map(|(t, _)| t).collect();
    let index: HashMap<TagLabel, usize> = tags.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let names: Vec<String> = tags.iter().map(|t| t.to_string()).collect();

    let mut punct: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for ((form, label), n) in punct_freq {
        let idx = index[&label];
        let e = punct.entry(form).or_insert((idx, 0));
        if n > e.1 {
            *e = (idx, n);
        }
    }
    let punct: BTreeMap<String, usize> = punct.into_iter().map(|(f, (i, _))| (f, i)).collect();

    let ntags = tags.len();
    let mut params: FxHashMap<String, Param> = FxHashMap::default();
    let mut clock: u64 = 0;
    let mut order: Vec<usize> = (0..gold.len()).collect();

    for epoch in 0..epochs {
        let mut rng = rng::stream(seed, "tagger/epoch", epoch as u64);
        order.shuffle(&mut rng);
        for &si in &order {
            let s = &gold[si];
            let words: Vec<String> = s.tokens.iter().map(|t| t.form.clone()).collect();
            let mut prev = "-START-".to_string();
            let mut prev2 = "-START2-".to_string();
            for i in 0..words.len() {
                let truth = index[&TagLabel::of(&s.tokens[i])];
                let guess = if is_punct(&words[i]) {
                    punct.get(&words[i]).copied().unwrap_or(truth)
                } else {
                    let feats = features(&words, i, &prev, &prev2);
                    let mut scores = vec![0.0; ntags];
                    for f in &feats {
                        if let Some(p) = params.get(f) {
                            for (sc, v) in scores.iter_mut().zip(&p.w) {
                                *sc += v;
                            }
                        }
                    }
                    let guess = argmax(&scores);
                    if guess != truth {
                        for f in feats {
                            let p = params.entry(f).or_insert_with(|| Param {
                                w: vec![0.0; ntags],
                                total: vec![0.0; ntags],
                                stamp: vec![0; ntags],
                            });
                            for (c, delta) in [(truth, 1.0), (guess, -1.0)] {
                                p.total[c] += (clock - p.stamp[c]) as f64 * p.w[c];
                                p.stamp[c] = clock;
                                p.w[c] += delta;
                            }
                        }
                    }
                    clock += 1;
                    guess
                };
                prev2 = std::mem::replace(&mut prev, names[guess].clone());
            }
        }
    }

    let mut weights = FxHashMap::default();
    if clock > 0 {
        for (feat, mut p) in params {
            let avg: Vec<f64> = (0..ntags)
                .map(|c| {
                    p.total[c] += (clock - p.stamp[c]) as f64 * p.w[c];
                    p.total[c] / clock as f64
                })
                .collect();
            if avg.iter().any(|v| *v != 0.0) {
                weights.insert(feat, avg);
            }
        }
    }
    Ok(TaggerModel {
        version: MODEL_VERSION,
        tags,
        weights,
        punct,
    })
}

const NOMINAL: [Upos; 6] = [Upos::Det, Upos::Num, Upos::Adj, Upos::Noun, Upos::Propn, Upos::Pron];

/// Base noun phrases: `PRON`, `PROPN+`, or `DET? NUM* ADJ* NOUN+`, matched
/// left to right with longest match.
pub fn chunk_nps(sentence: &AnnotatedSentence) -> Vec<Span> {
    let tags: Vec<Upos> = sentence.tokens.iter().map(|t| t.upos).collect();
    let n = tags.len();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        let end = match tags[i] {
            Upos::Pron => Some(i + 1),
            Upos::Propn => {
                let mut j = i;
                while j < n && tags[j] == Upos::Propn {
                    j += 1;
                }
                Some(j)
            }
            _ => {
                let mut j = i;
                if tags[j] == Upos::Det {
                    j += 1;
                }
                while j < n && tags[j] == Upos::Num {
                    j += 1;
                }
                while j < n && tags[j] == Upos::Adj {
                    j += 1;
                }
                let nouns = j;
                while j < n && tags[j] == Upos::Noun {
                    j += 1;
                }
                (j > nouns).then_some(j)
            }
        };
        match end {
            Some(e) => {
                spans.push(Span::new(i, e));
                i = e;
            }
            None => i += 1,
        }
    }
    debug_assert!(spans
        .iter()
        .all(|s| (s.start..s.end).all(|k| NOMINAL.contains(&tags[k]))));
    spans
}

const SUBORDINATORS: [&str; 9] = [
    "because", "when", "if", "while", "before", "after", "until", "unless", "since",
];
const CLAUSE_WINDOW: usize = 4;

fn is_lexical_verb(t: &Token) -> bool {
    t.upos == Upos::Verb && t.xpos.as_deref() != Some("MD")
}

fn is_subordinate(sentence: &AnnotatedSentence, i: usize) -> bool {
    let toks = &sentence.tokens;
    let mut j = i;
    let mut seen = 0;
    while j > 0 && seen < CLAUSE_WINDOW {
        j -= 1;
        seen += 1;
        let t = &toks[j];
        if matches!(t.upos, Upos::Punct | Upos::Cconj) || t.upos == Upos::Verb {
            break;
        }
        if t.upos == Upos::Sconj || SUBORDINATORS.contains(&t.form.as_str()) {
            return true;
        }
    }
    false
}

/// Main verb from tags alone: the leftmost lexical VERB that is not opened by a
/// subordinator in its clause-initial window, else the leftmost lexical VERB.
pub fn heuristic_main_verb(sentence: &AnnotatedSentence) -> Option<usize> {
    let verbs: Vec<usize> = (0..sentence.len())
        .filter(|&i| is_lexical_verb(&sentence.tokens[i]))
        .collect();
    verbs
        .iter()
        .copied()
        .find(|&i| !is_subordinate(sentence, i))
        .or_else(|| verbs.first().copied())
}

/// Main verb from dependencies: the root if it is a VERB, else the VERB
/// closest to the root (leftmost on ties).
pub fn dependency_main_verb(sentence: &AnnotatedSentence) -> Option<usize> {
    let n = sentence.len();
    let root = sentence.tokens.iter().position(|t| t.head == Some(0))?;
    let mut children = vec![Vec::new(); n];
    for (i, t) in sentence.tokens.iter().enumerate() {
        if let Some(h) = t.head {
            if h >= 1 && h <= n && h - 1 != i {
                children[h - 1].push(i);
            }
        }
    }
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &c in &children[u] {
            if depth[c] == usize::MAX {
                depth[c] = depth[u] + 1;
                queue.push_back(c);
            }
        }
    }
    (0..n)
        .filter(|&i| depth[i] != usize::MAX && is_lexical_verb(&sentence.tokens[i]))
        .min_by_key(|&i| (depth[i], i))
}

pub fn find_main_verb(sentence: &AnnotatedSentence) -> Option<usize> {
    if !sentence.tokens.iter().any(is_lexical_verb) {
        return None;
    }
    if sentence.has_dependencies() {
        if let Some(v) = dependency_main_verb(sentence) {
            return Some(v);
        }
    }
    heuristic_main_verb(sentence)
}

/// Agreement between the heuristic and the dependency-based main verb over
/// sentences that carry dependencies: `(agreeing, compared)`.
pub fn main_verb_agreement(sentences: &[AnnotatedSentence]) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    for s in sentences.iter().filter(|s| s.has_dependencies()) {
        total += 1;
        agree += (heuristic_main_verb(s) == dependency_main_verb(s)) as usize;
    }
    (agree, total)
}
