//! Interpolated Kneser-Ney n-gram language model with a single absolute
//! discount.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const UNK_ID: u32 = 2;
const ID_BITS: u32 = 21;
const MAX_ORDER: usize = 6;
const MODEL_HEADER: &str = "synboot-ngram";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramOptions {
    pub order: usize,
    pub discount: f64,
    pub unk_threshold: u64,
}

impl Default for NGramOptions {
    fn default() -> Self {
        NGramOptions {
            order: 3,
            discount: 0.75,
            unk_threshold: 2,
        }
    }
}

impl NGramOptions {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::invalid(format!("order must be in 1..={MAX_ORDER}")));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::invalid("discount must lie strictly between 0 and 1"));
        }
        if self.unk_threshold == 0 {
            return Err(Error::invalid("unk threshold must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct Level {
    counts: FxHashMap<u128, u64>,
    // Per context: (total count, number of distinct continuations).
    contexts: FxHashMap<u128, (u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct NGramModel {
    opts: NGramOptions,
    forms: Vec<String>,
    ids: FxHashMap<String, u32>,
    // levels[k - 1] holds k-grams.
    levels: Vec<Level>,
}

fn push(key: u128, id: u32) -> u128 {
    (key << ID_BITS) | (id as u128 + 1)
}

fn pack(ids: &[u32]) -> u128 {
    ids.iter().fold(0, |k, &id| push(k, id))
}

fn suffix(key: u128, len: usize) -> u128 {
    key & ((1u128 << (ID_BITS as usize * len)) - 1)
}

fn context_of(key: u128) -> u128 {
    key >> ID_BITS
}

fn last_id(key: u128) -> u32 {
    (key & ((1 << ID_BITS) - 1)) as u32 - 1
}

impl NGramModel {
    pub fn options(&self) -> NGramOptions {
        self.opts
    }

    pub fn order(&self) -> usize {
        self.opts.order
    }

    /// Size of the predicted vocabulary: known forms, `<unk>` and `</s>`.
    pub fn vocab_size(&self) -> usize {
        self.forms.len() - 1
    }

    /// Known forms, excluding the markers.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.forms[3..].iter().map(String::as_str)
    }

    pub fn contains(&self, form: &str) -> bool {
        self.ids.get(form).is_some_and(|&id| id > UNK_ID)
    }

    fn id(&self, form: &str) -> u32 {
        match self.ids.get(form) {
            Some(&id) if id != BOS_ID => id,
            _ => UNK_ID,
        }
    }

    fn build(opts: NGramOptions, forms: Vec<String>, top: FxHashMap<u128, u64>) -> Self {
        let ids = forms.iter().enumerate().map(|(i, f)| (f.clone(), i as u32)).collect();
        let n = opts.order;
        let mut levels = vec![Level::default(); n];
        levels[n - 1].counts = top;
        for k in (1..n).rev() {
            let mut lower: FxHashMap<u128, u64> = FxHashMap::default();
            for &key in levels[k].counts.keys() {
                *lower.entry(suffix(key, k)).or_insert(0) += 1;
            }
            levels[k - 1].counts = lower;
        }
        for level in &mut levels {
            let mut contexts: FxHashMap<u128, (u64, u64)> = FxHashMap::default();
            for (&key, &c) in &level.counts {
                let e = contexts.entry(context_of(key)).or_insert((0, 0));
                e.0 += c;
                e.1 += 1;
            }
            level.contexts = contexts;
        }
        NGramModel {
            opts,
            forms,
            ids,
            levels,
        }
    }

    /// P(w | history); `history` holds the last `order - 1` ids.
    fn prob_id(&self, history: &[u32], w: u32) -> f64 {
        let d = self.opts.discount;
        let mut p = 1.0 / self.vocab_size() as f64;
        for k in 1..=self.opts.order {
            let ctx = pack(&history[history.len() + 1 - k..]);
            let level = &self.levels[k - 1];
            if let Some(&(total, types)) = level.contexts.get(&ctx) {
                let c = level.counts.get(&push(ctx, w)).copied().unwrap_or(0) as f64;
                p = ((c - d).max(0.0) + d * types as f64 * p) / total as f64;
            }
        }
        p
    }

    /// P(word | history) for surface forms; the history is padded with `<s>`
    /// and truncated to the model order.
    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let h = self.history_ids(history);
        let w = if word == EOS { EOS_ID } else { self.id(word) };
        self.prob_id(&h, w)
    }

    fn history_ids(&self, history: &[&str]) -> Vec<u32> {
        let n = self.opts.order - 1;
        let mut h = vec![BOS_ID; n];
        let start = history.len().saturating_sub(n);
        for (i, f) in history[start..].iter().enumerate() {
            h[n - (history.len() - start) + i] = if *f == BOS { BOS_ID } else { self.id(f) };
        }
        h
    }

    fn padded<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        let mut seq = vec![BOS_ID; self.opts.order - 1];
        seq.extend(tokens.iter().map(|t| self.id(t.as_ref())));
        seq.push(EOS_ID);
        seq
    }

    fn sum_logprob(&self, seq: &[u32], from: usize, to: usize) -> f64 {
        let n = self.opts.order;
        (from..to).map(|q| self.prob_id(&seq[q + 1 - n..q], seq[q]).ln()).sum()
    }

    /// Natural-log probability of a sentence with `order - 1` start pads and
    /// one end marker.
    pub fn sentence_logprob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let seq = self.padded(tokens);
        self.sum_logprob(&seq, self.opts.order - 1, seq.len())
    }

    /// Score of each candidate at `mask_index`: the log-probability of every
    /// n-gram that covers the position.
    pub fn masked_scores<S: AsRef<str>, C: AsRef<str>>(
        &self,
        tokens: &[S],
        mask_index: usize,
        candidates: &[C],
    ) -> Result<Vec<f64>> {
        if mask_index >= tokens.len() {
            return Err(Error::invalid(format!(
                "mask index {mask_index} out of range for {} tokens",
                tokens.len()
            )));
        }
        let mut seq = self.padded(tokens);
        let p = mask_index + self.opts.order - 1;
        let end = (p + self.opts.order).min(seq.len());
        Ok(candidates
            .iter()
            .map(|c| {
                seq[p] = self.id(c.as_ref());
                self.sum_logprob(&seq, p, end)
            })
            .collect())
    }

    /// The best candidate at `mask_index` and its score; ties go to the
    /// lexicographically smaller form.
    pub fn masked_argmax<S: AsRef<str>, C: AsRef<str>>(
        &self,
        tokens: &[S],
        mask_index: usize,
        candidates: &[C],
    ) -> Result<(String, f64)> {
        if candidates.is_empty() {
            return Err(Error::invalid("candidate set is empty"));
        }
        let scores = self.masked_scores(tokens, mask_index, candidates)?;
        Ok(argmax(candidates, &scores))
    }

    /// Sorted plain-text tables: header, options, vocabulary and top-order
    /// counts. Lower orders are derived on load.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MODEL_HEADER}\tversion\t{MODEL_VERSION}")?;
        writeln!(w, "order\t{}", self.opts.order)?;
        writeln!(w, "discount\t{}", self.opts.discount)?;
        writeln!(w, "unk_threshold\t{}", self.opts.unk_threshold)?;
        for f in self.vocabulary() {
            writeln!(w, "vocab\t{f}")?;
        }
        let n = self.opts.order;
        let mut lines: Vec<(Vec<&str>, u64)> = self.levels[n - 1]
            .counts
            .iter()
            .map(|(&key, &c)| {
                let mut ids = Vec::with_capacity(n);
                let mut k = key;
                for _ in 0..n {
                    ids.push(last_id(k));
                    k = context_of(k);
                }
                ids.reverse();
                (ids.iter().map(|&i| self.forms[i as usize].as_str()).collect(), c)
            })
            .collect();
        lines.sort();
        for (gram, c) in lines {
            writeln!(w, "ngram\t{}\t{c}", gram.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::parse(0, format!("missing {what}"))),
            }
        };
        let (ln, header) = next("header")?;
        if header != format!("{MODEL_HEADER}\tversion\t{MODEL_VERSION}") {
            return Err(Error::parse(ln, "not an n-gram model file of a supported version"));
        }
        let mut field = |name: &str| -> Result<(usize, String)> {
            let (ln, l) = next(name)?;
            match l.split_once('\t') {
                Some((k, v)) if k == name => Ok((ln, v.to_string())),
                _ => Err(Error::parse(ln, format!("expected {name}"))),
            }
        };
        let bad = |ln: usize, what: &str| Error::parse(ln, format!("invalid {what}"));
        let (ln, v) = field("order")?;
        let order = v.parse().map_err(|_| bad(ln, "order"))?;
        let (ln, v) = field("discount")?;
        let discount = v.parse().map_err(|_| bad(ln, "discount"))?;
        let (ln, v) = field("unk_threshold")?;
        let unk_threshold = v.parse().map_err(|_| bad(ln, "unk_threshold"))?;
        let opts = NGramOptions {
            order,
            discount,
            unk_threshold,
        };
        opts.validate()?;
        let mut forms: Vec<String> = vec![BOS.into(), EOS.into(), UNK.into()];
        let mut grams: Vec<(usize, Vec<String>, u64)> = Vec::new();
        for (i, l) in lines {
            let l = l?;
            let ln = i + 1;
            let cols: Vec<&str> = l.split('\t').collect();
            match cols.as_slice() {
                ["vocab", f] if grams.is_empty() => forms.push(f.to_string()),
                ["ngram", g, c] => {
                    let c = c.parse().map_err(|_| bad(ln, "count"))?;
                    grams.push((ln, g.split(' ').map(String::from).collect(), c));
                }
                _ => return Err(Error::parse(ln, "unrecognised line")),
            }
        }
        let ids: FxHashMap<&str, u32> = forms.iter().enumerate().map(|(i, f)| (f.as_str(), i as u32)).collect();
        if ids.len() != forms.len() {
            return Err(Error::invalid("duplicate vocabulary entry"));
        }
        let mut top = FxHashMap::default();
        for (ln, g, c) in grams {
            if g.len() != order || c == 0 {
                return Err(bad(ln, "n-gram"));
            }
            let mut key = 0;
            for f in &g {
                let id = *ids.get(f.as_str()).ok_or_else(|| bad(ln, "n-gram form"))?;
                key = push(key, id);
            }
            top.insert(key, c);
        }
        Ok(Self::build(opts, forms, top))
    }
}

fn argmax<C: AsRef<str>>(candidates: &[C], scores: &[f64]) -> (String, f64) {
    let mut best = 0;
    for i in 1..candidates.len() {
        let (s, b) = (scores[i], scores[best]);
        if s > b || (s == b && candidates[i].as_ref() < candidates[best].as_ref()) {
            best = i;
        }
    }
    (candidates[best].as_ref().to_string(), scores[best])
}

/// Train on whitespace-tokenized sentences.
pub fn train_ngram<S: AsRef<str> + Sync>(sentences: &[Vec<S>], opts: NGramOptions) -> Result<NGramModel> {
    opts.validate()?;
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(Error::invalid("cannot train an n-gram model on an empty corpus"));
    }
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for s in sentences {
        for t in s {
            *freq.entry(t.as_ref()).or_insert(0) += 1;
        }
    }
    let mut forms: Vec<String> = vec![BOS.into(), EOS.into(), UNK.into()];
    forms.extend(
        freq.into_iter()
            .filter(|(f, c)| *c >= opts.unk_threshold && ![BOS, EOS, UNK].contains(f))
            .map(|(f, _)| f.to_string()),
    );
    if forms.len() >= (1 << ID_BITS) - 1 {
        return Err(Error::invalid("vocabulary too large"));
    }
    let ids: FxHashMap<&str, u32> = forms.iter().enumerate().map(|(i, f)| (f.as_str(), i as u32)).collect();
    let n = opts.order;
    let top = sentences
        .par_chunks(4096)
        .map(|chunk| {
            let mut counts: FxHashMap<u128, u64> = FxHashMap::default();
            let mut seq = Vec::new();
            for s in chunk {
                seq.clear();
                seq.resize(n - 1, BOS_ID);
                seq.extend(s.iter().map(|t| match ids.get(t.as_ref()) {
                    Some(&id) if id > UNK_ID => id,
                    _ => UNK_ID,
                }));
                seq.push(EOS_ID);
                for w in seq.windows(n) {
                    *counts.entry(pack(w)).or_insert(0) += 1;
                }
            }
            counts
        })
        .reduce(FxHashMap::default, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(NGramModel::build(opts, forms, top))
}

/// Distinct forms seen in `sentences`, for candidate sets.
pub fn distinct_forms<S: AsRef<str>>(sentences: &[Vec<S>]) -> Vec<String> {
    let set: FxHashSet<&str> = sentences.iter().flatten().map(AsRef::as_ref).collect();
    let mut v: Vec<String> = set.into_iter().map(String::from).collect();
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashMap};

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    fn opts(order: usize, unk_threshold: u64) -> NGramOptions {
        NGramOptions {
            order,
            discount: 0.75,
            unk_threshold,
        }
    }

    /// Textbook recursion over explicit n-gram lists, kept apart from the
    /// packed-key implementation.
    struct Oracle {
        n: usize,
        d: f64,
        v: usize,
        grams: Vec<HashMap<Vec<String>, f64>>,
    }

    impl Oracle {
        fn new(sents: &[Vec<String>], n: usize, d: f64, vocab: &BTreeSet<String>) -> Self {
            let mut top: HashMap<Vec<String>, f64> = HashMap::new();
            for s in sents {
                let mut seq: Vec<String> = vec![BOS.to_string(); n - 1];
                for t in s {
                    seq.push(if vocab.contains(t) { t.clone() } else { UNK.to_string() });
                }
                seq.push(EOS.to_string());
                for i in 0..=seq.len() - n {
                    *top.entry(seq[i..i + n].to_vec()).or_default() += 1.0;
                }
            }
            let mut grams = vec![top];
            for k in (1..n).rev() {
                let mut lower: HashMap<Vec<String>, f64> = HashMap::new();
                for g in grams[0].keys() {
                    *lower.entry(g[1..].to_vec()).or_default() += 1.0;
                }
                assert!(lower.keys().all(|g| g.len() == k));
                grams.insert(0, lower);
            }
            Oracle {
                n,
                d,
                v: vocab.len() + 2,
                grams,
            }
        }

        fn p(&self, ctx: &[String], w: &str) -> f64 {
            let k = ctx.len() + 1;
            let lower = if k == 1 {
                1.0 / self.v as f64
            } else {
                self.p(&ctx[1..], w)
            };
            let level = &self.grams[k - 1];
            let mut total = 0.0;
            let mut types = 0.0;
            let mut c = 0.0;
            for (g, &n) in level {
                if g[..k - 1] == *ctx {
                    total += n;
                    types += 1.0;
                    if g[k - 1] == w {
                        c = n;
                    }
                }
            }
            if total == 0.0 {
                return lower;
            }
            (f64::max(c - self.d, 0.0) + self.d * types * lower) / total
        }

        fn logprob(&self, s: &[String], vocab: &BTreeSet<String>) -> f64 {
            let mut seq: Vec<String> = vec![BOS.to_string(); self.n - 1];
            for t in s {
                seq.push(if vocab.contains(t) { t.clone() } else { UNK.to_string() });
            }
            seq.push(EOS.to_string());
            (self.n - 1..seq.len())
                .map(|q| self.p(&seq[q + 1 - self.n..q], &seq[q]).ln())
                .sum()
        }
    }

    fn vocab_of(m: &NGramModel) -> BTreeSet<String> {
        m.vocabulary().map(String::from).collect()
    }

    #[test]
    fn bigram_matches_hand_formula() {
        let c = corpus(&["a b", "a b", "a c"]);
        let m = train_ngram(&c, opts(2, 1)).unwrap();
        // Continuation counts: a:1 (<s>), b:1 (a), c:1 (a), </s>:2 (b, c).
        // Unigram: P1(b) = (1 - .75 + .75 * 4 / 5) / 5; V = {a, b, c, <unk>, </s>}.
        let p1_b = (1.0 - 0.75 + 0.75 * 4.0 * (1.0 / 5.0)) / 5.0;
        // Context a: c(a b) = 2, c(a c) = 1, total 3, 2 types.
        let p_b_a = (2.0 - 0.75 + 0.75 * 2.0 * p1_b) / 3.0;
        assert!((m.prob(&["a"], "b") - p_b_a).abs() < 1e-15);
        let o = Oracle::new(&c, 2, 0.75, &vocab_of(&m));
        assert!((o.p(&["a".into()], "b") - p_b_a).abs() < 1e-15);
    }

    #[test]
    fn unigram_closed_form() {
        let c = corpus(&["x x x y y z"]);
        let m = train_ngram(&c, opts(1, 1)).unwrap();
        // Counts x:3 y:2 z:1 </s>:1, total 7, 4 types, V = 5.
        let base = 0.75 * 4.0 / 5.0;
        for (w, n) in [("x", 3.0), ("y", 2.0), ("z", 1.0), (EOS, 1.0), (UNK, 0.0)] {
            let want = (f64::max(n - 0.75, 0.0) + base) / 7.0;
            assert!((m.prob(&[], w) - want).abs() < 1e-15, "{w}");
        }
    }

    fn check_normalized(m: &NGramModel, contexts: &[Vec<&str>]) {
        let mut words: Vec<&str> = m.vocabulary().collect();
        words.push(UNK);
        words.push(EOS);
        for ctx in contexts {
            let total: f64 = words.iter().map(|w| m.prob(ctx, w)).sum();
            assert!((total - 1.0).abs() < 1e-9, "{ctx:?}: {total}");
        }
    }

    #[test]
    fn repeated_token_corpus_is_normalized() {
        let m = train_ngram(&corpus(&["a a a"]), opts(3, 1)).unwrap();
        assert!(m.prob(&["a", "a"], "a") > 0.5);
        check_normalized(
            &m,
            &[vec![], vec!["a"], vec!["a", "a"], vec!["<s>", "a"], vec!["q", "r"]],
        );
    }

    #[test]
    fn unk_threshold_maps_rare_forms() {
        let m = train_ngram(&corpus(&["a b", "a c", "a b"]), opts(2, 2)).unwrap();
        assert!(m.contains("a") && m.contains("b"));
        assert!(!m.contains("c"));
        assert_eq!(m.prob(&["a"], "c"), m.prob(&["a"], "zebra"));
        assert_eq!(m.vocab_size(), 4);
    }

    #[test]
    fn empty_corpus_and_bad_options_are_errors() {
        assert!(train_ngram::<String>(&[], NGramOptions::default()).is_err());
        assert!(train_ngram(&corpus(&[""]), NGramOptions::default()).is_err());
        let c = corpus(&["a"]);
        assert!(train_ngram(
            &c,
            NGramOptions {
                discount: 1.0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(train_ngram(
            &c,
            NGramOptions {
                order: 0,
                ..Default::default()
            }
        )
        .is_err());
    }

    fn toy() -> Vec<Vec<String>> {
        corpus(&[
            "you can eat your supper .",
            "can you tell me more ?",
            "you want to eat it .",
            "i know you want it .",
            "eat your supper .",
            "tell me more .",
            "do you want more ?",
            "you can tell me .",
        ])
    }

    #[test]
    fn sentence_logprob_matches_oracle() {
        let c = toy();
        for order in 1..=4 {
            let m = train_ngram(&c, opts(order, 1)).unwrap();
            let v = vocab_of(&m);
            let o = Oracle::new(&c, order, 0.75, &v);
            for s in c.iter().chain(&corpus(&["more eat you can", "zebra", ""])) {
                let got = m.sentence_logprob(s);
                let want = o.logprob(s, &v);
                assert!((got - want).abs() < 1e-10, "order {order} {s:?}: {got} vs {want}");
                assert!(got.is_finite() && got < 0.0);
            }
        }
    }

    #[test]
    fn empty_sentence_scores_end_marker_only() {
        let m = train_ngram(&toy(), opts(3, 1)).unwrap();
        let want = m.prob(&[], EOS).ln();
        assert_eq!(m.sentence_logprob::<&str>(&[]), want);
    }

    #[test]
    fn every_observed_context_is_normalized() {
        let c = toy();
        let m = train_ngram(&c, opts(3, 1)).unwrap();
        let mut contexts = vec![vec![], vec!["zebra"]];
        for s in &c {
            let mut seq = vec![BOS, BOS];
            seq.extend(s.iter().map(String::as_str));
            for w in seq.windows(2) {
                contexts.push(w.to_vec());
                contexts.push(w[1..].to_vec());
            }
        }
        check_normalized(&m, &contexts);
    }

    #[test]
    fn masked_argmax_agrees_with_full_rescoring() {
        let c = toy();
        let m = train_ngram(&c, opts(3, 1)).unwrap();
        let cands: Vec<String> = m.vocabulary().map(String::from).collect();
        assert!(cands.len() <= 20);
        for s in &c {
            for i in 0..s.len() {
                let (best, _) = m.masked_argmax(s, i, &cands).unwrap();
                let full: Vec<f64> = cands
                    .iter()
                    .map(|w| {
                        let mut t = s.clone();
                        t[i] = w.clone();
                        m.sentence_logprob(&t)
                    })
                    .collect();
                assert_eq!(best, argmax(&cands, &full).0, "{s:?} @ {i}");
            }
        }
    }

    #[test]
    fn masked_argmax_edge_cases() {
        let m = train_ngram(&toy(), opts(3, 1)).unwrap();
        let s = ["you", "can", "eat"];
        assert_eq!(m.masked_argmax(&s, 2, &["zebra"]).unwrap().0, "zebra");
        // Both unknown: identical scores, lexicographic winner.
        assert_eq!(m.masked_argmax(&s, 2, &["yak", "gnu"]).unwrap().0, "gnu");
        assert!(m.masked_argmax::<&str, &str>(&s, 2, &[]).is_err());
        assert!(m.masked_argmax(&s, 3, &["eat"]).is_err());
    }

    #[test]
    fn model_file_round_trip_is_byte_stable() {
        let m = train_ngram(&toy(), opts(3, 2)).unwrap();
        let mut a = Vec::new();
        m.write(&mut a).unwrap();
        let back = NGramModel::read(&a[..]).unwrap();
        let mut b = Vec::new();
        back.write(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("synboot-ngram\tversion\t1\norder\t3\ndiscount\t0.75\nunk_threshold\t2\n"));
        for s in &toy() {
            assert_eq!(m.sentence_logprob(s), back.sentence_logprob(s));
        }
        let again = train_ngram(&toy(), opts(3, 2)).unwrap();
        let mut c = Vec::new();
        again.write(&mut c).unwrap();
        assert_eq!(text.as_bytes(), &c[..]);
    }

    #[test]
    fn corrupt_model_files_are_rejected() {
        assert!(NGramModel::read(&b"nope\n"[..]).is_err());
        let m = train_ngram(&toy(), opts(2, 1)).unwrap();
        let mut a = Vec::new();
        m.write(&mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(NGramModel::read(text.replace("ngram\tyou can", "ngram\tyou cannot").as_bytes()).is_err());
        assert!(NGramModel::read(text.replace("order\t2", "order\t3").as_bytes()).is_err());
    }

    #[test]
    fn ordered_text_beats_its_shuffles() {
        use rand::seq::SliceRandom;
        let train: Vec<Vec<String>> = toy().into_iter().cycle().take(200).collect();
        let m = train_ngram(&train, opts(3, 1)).unwrap();
        let mut r = crate::rng::stream(1, "ngram-test", 0);
        let (mut orig, mut shuf) = (0.0, 0.0);
        for s in toy() {
            orig += m.sentence_logprob(&s);
            let mut t = s.clone();
            t.shuffle(&mut r);
            shuf += m.sentence_logprob(&t);
        }
        assert!(orig > shuf);
    }
}
