//! Targeted evaluation sets: masked prediction and minimal pairs for verbs and
//! nouns, plus their line-delimited record format.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, CorpusSplit, Upos};
use crate::lexicon::{sample_same_bin, BinTable};
use crate::score::{classify_word, WordClass};
use crate::{rng, Error, Result};

pub const EVAL_HEADER: &str = "# synboot eval records v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TargetPos {
    Verb,
    Noun,
}

impl TargetPos {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetPos::Verb => "VERB",
            TargetPos::Noun => "NOUN",
        }
    }

    pub fn upos(self) -> Upos {
        match self {
            TargetPos::Verb => Upos::Verb,
            TargetPos::Noun => Upos::Noun,
        }
    }
}

impl fmt::Display for TargetPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetPos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "VERB" => Ok(TargetPos::Verb),
            "NOUN" => Ok(TargetPos::Noun),
            _ => Err(Error::invalid(format!("unknown target pos {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Masked,
    MinimalPair,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Masked => "masked",
            Task::MinimalPair => "minimal_pair",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "masked" => Ok(Task::Masked),
            "minimal_pair" => Ok(Task::MinimalPair),
            _ => Err(Error::invalid(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedItem {
    pub id: String,
    pub source_sentence_id: String,
    pub tokens: Vec<String>,
    pub mask_index: usize,
    pub answer: String,
    pub target_pos: TargetPos,
    pub word_class: WordClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalPairItem {
    pub id: String,
    pub source_sentence_id: String,
    pub tokens: Vec<String>,
    pub target_index: usize,
    pub answer: String,
    pub alternatives: Vec<String>,
    pub target_pos: TargetPos,
    pub word_class: WordClass,
    pub bin: usize,
}

impl MinimalPairItem {
    /// The sentence with alternative `j` substituted at the target.
    pub fn variant(&self, j: usize) -> Vec<String> {
        let mut t = self.tokens.clone();
        t[self.target_index] = self.alternatives[j].clone();
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalItem {
    Masked(MaskedItem),
    MinimalPair(MinimalPairItem),
}

impl EvalItem {
    pub fn id(&self) -> &str {
        match self {
            EvalItem::Masked(m) => &m.id,
            EvalItem::MinimalPair(p) => &p.id,
        }
    }

    pub fn task(&self) -> Task {
        match self {
            EvalItem::Masked(_) => Task::Masked,
            EvalItem::MinimalPair(_) => Task::MinimalPair,
        }
    }
}

/// Forms the downstream model treats as single tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabPredicate {
    forms: BTreeSet<String>,
}

impl VocabPredicate {
    pub fn new<I, S>(forms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let forms: BTreeSet<String> = forms.into_iter().map(Into::into).collect();
        if forms.is_empty() {
            return Err(Error::invalid("vocabulary is empty"));
        }
        Ok(VocabPredicate { forms })
    }

    /// One form per line; blank lines ignored.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut forms = Vec::new();
        for line in r.lines() {
            let line = line?;
            let f = line.trim();
            if !f.is_empty() {
                forms.push(f.to_string());
            }
        }
        Self::new(forms)
    }

    pub fn contains(&self, form: &str) -> bool {
        self.forms.contains(form)
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.forms.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub sentences: usize,
    pub items: usize,
    pub no_target: usize,
    pub not_in_vocab: usize,
    pub too_short: usize,
    pub unbinned: usize,
    pub insufficient_bin: usize,
}

impl BuildStats {
    pub fn skipped(&self) -> usize {
        self.no_target + self.not_in_vocab + self.too_short + self.unbinned + self.insufficient_bin
    }

    fn add(&mut self, o: &BuildStats) {
        self.sentences += o.sentences;
        self.items += o.items;
        self.no_target += o.no_target;
        self.not_in_vocab += o.not_in_vocab;
        self.too_short += o.too_short;
        self.unbinned += o.unbinned;
        self.insufficient_bin += o.insufficient_bin;
    }
}

fn item_id(task: Task, pos: TargetPos, source: &str) -> String {
    let t = match task {
        Task::Masked => "mask",
        Task::MinimalPair => "pair",
    };
    format!("{t}-{}-{source}", pos.as_str().to_ascii_lowercase())
}

fn forms_of(s: &AnnotatedSentence) -> Vec<String> {
    s.tokens.iter().map(|t| t.form.clone()).collect()
}

fn collect<T: Send>(results: Vec<(Option<T>, BuildStats)>) -> (Vec<T>, BuildStats) {
    let mut stats = BuildStats::default();
    let mut items = Vec::new();
    for (item, st) in results {
        stats.add(&st);
        items.extend(item);
    }
    (items, stats)
}

/// One masked item per sentence. Verb mode masks the main verb; noun mode
/// masks one noun chosen uniformly among those the vocabulary accepts.
pub fn build_masked_set(
    test: &CorpusSplit,
    target_pos: TargetPos,
    vocab: &VocabPredicate,
    seed: u64,
) -> Result<(Vec<MaskedItem>, BuildStats)> {
    if vocab.is_empty() {
        return Err(Error::invalid("vocabulary is empty"));
    }
    let label = format!("evalgen/masked/{target_pos}");
    let results = test
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut st = BuildStats {
                sentences: 1,
                ..Default::default()
            };
            let index = match target_pos {
                TargetPos::Verb => match s.main_verb {
                    None => {
                        st.no_target = 1;
                        return (None, st);
                    }
                    Some(v) if !vocab.contains(&s.tokens[v].form) => {
                        st.not_in_vocab = 1;
                        return (None, st);
                    }
                    Some(v) => v,
                },
                TargetPos::Noun => {
                    let nouns: Vec<usize> = (0..s.len()).filter(|&j| s.tokens[j].upos == Upos::Noun).collect();
                    if nouns.is_empty() {
                        st.no_target = 1;
                        return (None, st);
                    }
                    let ok: Vec<usize> = nouns
                        .into_iter()
                        .filter(|&j| vocab.contains(&s.tokens[j].form))
                        .collect();
                    let mut r = rng::stream(seed, &label, i as u64);
                    match ok.choose(&mut r) {
                        Some(&j) => j,
                        None => {
                            st.not_in_vocab = 1;
                            return (None, st);
                        }
                    }
                }
            };
            let answer = s.tokens[index].form.clone();
            st.items = 1;
            let item = MaskedItem {
                id: item_id(Task::Masked, target_pos, &s.id),
                source_sentence_id: s.id.clone(),
                tokens: forms_of(s),
                mask_index: index,
                word_class: classify_word(&answer, target_pos),
                answer,
                target_pos,
            };
            (Some(item), st)
        })
        .collect();
    Ok(collect(results))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOptions {
    pub n_alt: usize,
    /// Sentences must be strictly longer than this.
    pub min_len: usize,
    pub count_punct: bool,
    pub seed: u64,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            n_alt: 5,
            min_len: 10,
            count_punct: true,
            seed: 0,
        }
    }
}

pub fn sentence_length(s: &AnnotatedSentence, count_punct: bool) -> usize {
    if count_punct {
        s.len()
    } else {
        s.tokens.iter().filter(|t| t.upos != Upos::Punct).count()
    }
}

/// Minimal pairs: each long-enough sentence yields one item whose target is
/// swapped for `n_alt` distinct same-bin forms. Bins are looked up under the
/// coarse key of `target_pos`.
pub fn build_minimal_pairs(
    test: &CorpusSplit,
    target_pos: TargetPos,
    bins: &BinTable,
    opts: &PairOptions,
) -> (Vec<MinimalPairItem>, BuildStats) {
    let key = target_pos.as_str();
    let label = format!("evalgen/minimal_pair/{target_pos}");
    let none = BTreeSet::new();
    let results = test
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut st = BuildStats {
                sentences: 1,
                ..Default::default()
            };
            if sentence_length(s, opts.count_punct) <= opts.min_len {
                st.too_short = 1;
                return (None, st);
            }
            let mut r = rng::stream(opts.seed, &label, i as u64);
            let index = match target_pos {
                TargetPos::Verb => s.main_verb,
                TargetPos::Noun => {
                    let nouns: Vec<usize> = (0..s.len()).filter(|&j| s.tokens[j].upos == Upos::Noun).collect();
                    nouns.choose(&mut r).copied()
                }
            };
            let Some(index) = index else {
                st.no_target = 1;
                return (None, st);
            };
            let answer = s.tokens[index].form.clone();
            let Some(bin) = bins.bin_of(key, &answer) else {
                st.unbinned = 1;
                return (None, st);
            };
            let alternatives = match sample_same_bin(bins, key, &answer, opts.n_alt, &none, &mut r) {
                Ok(a) => a,
                Err(_) => {
                    st.insufficient_bin = 1;
                    return (None, st);
                }
            };
            st.items = 1;
            let item = MinimalPairItem {
                id: item_id(Task::MinimalPair, target_pos, &s.id),
                source_sentence_id: s.id.clone(),
                tokens: forms_of(s),
                target_index: index,
                word_class: classify_word(&answer, target_pos),
                answer,
                alternatives,
                target_pos,
                bin,
            };
            (Some(item), st)
        })
        .collect();
    collect(results)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    task: String,
    source_sentence_id: String,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_index: Option<usize>,
    answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alternatives: Option<Vec<String>>,
    target_pos: TargetPos,
    word_class: WordClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin: Option<usize>,
}

impl From<&EvalItem> for Record {
    fn from(item: &EvalItem) -> Self {
        match item {
            EvalItem::Masked(m) => Record {
                id: m.id.clone(),
                task: Task::Masked.to_string(),
                source_sentence_id: m.source_sentence_id.clone(),
                tokens: m.tokens.clone(),
                mask_index: Some(m.mask_index),
                target_index: None,
                answer: m.answer.clone(),
                alternatives: None,
                target_pos: m.target_pos,
                word_class: m.word_class,
                bin: None,
            },
            EvalItem::MinimalPair(p) => Record {
                id: p.id.clone(),
                task: Task::MinimalPair.to_string(),
                source_sentence_id: p.source_sentence_id.clone(),
                tokens: p.tokens.clone(),
                mask_index: None,
                target_index: Some(p.target_index),
                answer: p.answer.clone(),
                alternatives: Some(p.alternatives.clone()),
                target_pos: p.target_pos,
                word_class: p.word_class,
                bin: Some(p.bin),
            },
        }
    }
}

impl Record {
    fn into_item(self) -> std::result::Result<EvalItem, String> {
        let task: Task = self.task.parse().map_err(|e: Error| e.to_string())?;
        let index = match task {
            Task::Masked => {
                if self.target_index.is_some() || self.alternatives.is_some() || self.bin.is_some() {
                    return Err("masked record carries minimal_pair fields".into());
                }
                self.mask_index.ok_or("missing field `mask_index`")?
            }
            Task::MinimalPair => {
                if self.mask_index.is_some() {
                    return Err("minimal_pair record carries `mask_index`".into());
                }
                self.target_index.ok_or("missing field `target_index`")?
            }
        };
        if self.tokens.get(index) != Some(&self.answer) {
            return Err(format!("tokens[{index}] is not the answer {:?}", self.answer));
        }
        Ok(match task {
            Task::Masked => EvalItem::Masked(MaskedItem {
                id: self.id,
                source_sentence_id: self.source_sentence_id,
                tokens: self.tokens,
                mask_index: index,
                answer: self.answer,
                target_pos: self.target_pos,
                word_class: self.word_class,
            }),
            Task::MinimalPair => {
                let alternatives = self.alternatives.ok_or("missing field `alternatives`")?;
                let bin = self.bin.ok_or("missing field `bin`")?;
                let distinct: BTreeSet<&String> = alternatives.iter().collect();
                if distinct.len() != alternatives.len() || distinct.contains(&self.answer) {
                    return Err("alternatives must be distinct and differ from the answer".into());
                }
                EvalItem::MinimalPair(MinimalPairItem {
                    id: self.id,
                    source_sentence_id: self.source_sentence_id,
                    tokens: self.tokens,
                    target_index: index,
                    answer: self.answer,
                    alternatives,
                    target_pos: self.target_pos,
                    word_class: self.word_class,
                    bin,
                })
            }
        })
    }
}

/// Header comment line, then one JSON object per item.
pub fn write_eval_records<W: Write>(mut w: W, items: &[EvalItem]) -> Result<()> {
    writeln!(w, "{EVAL_HEADER}")?;
    for item in items {
        let line = serde_json::to_string(&Record::from(item)).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Read an eval file; `#` lines and blank lines are skipped. Errors carry the
/// 1-based line number.
pub fn read_eval_records<R: BufRead>(r: R) -> Result<Vec<EvalItem>> {
    let mut items = Vec::new();
    let mut ids = BTreeSet::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let item = rec.into_item().map_err(|e| Error::parse(lineno, e))?;
        if !ids.insert(item.id().to_string()) {
            return Err(Error::parse(lineno, format!("duplicate id {:?}", item.id())));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn masked_items(items: Vec<EvalItem>) -> Result<Vec<MaskedItem>> {
    items
        .into_iter()
        .map(|i| match i {
            EvalItem::Masked(m) => Ok(m),
            other => Err(Error::invalid(format!("{} is not a masked item", other.id()))),
        })
        .collect()
}

pub fn pair_items(items: Vec<EvalItem>) -> Result<Vec<MinimalPairItem>> {
    items
        .into_iter()
        .map(|i| match i {
            EvalItem::MinimalPair(p) => Ok(p),
            other => Err(Error::invalid(format!("{} is not a minimal-pair item", other.id()))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, SplitName, Token};
    use crate::lexicon::{bin_by_log_rank, FrequencyTable, Granularity};
    use crate::tagger::find_main_verb;

    fn tagged(id: &str, spec: &[(&str, Upos)]) -> AnnotatedSentence {
        let mut s = AnnotatedSentence::new(id, spec.iter().map(|(f, u)| Token::new(*f, *u)).collect());
        s.main_verb = find_main_verb(&s);
        s
    }

    fn tell() -> AnnotatedSentence {
        use Upos::*;
        tagged(
            "test-1",
            &[
                ("can", Aux),
                ("you", Pron),
                ("tell", Verb),
                ("me", Pron),
                ("more", Adj),
                ("?", Punct),
            ],
        )
    }

    fn birthday() -> AnnotatedSentence {
        use Upos::*;
        tagged(
            "test-2",
            &[
                ("can", Aux),
                ("you", Pron),
                ("sing", Verb),
                ("happy", Adj),
                ("birthday", Noun),
                ("?", Punct),
            ],
        )
    }

    fn mother() -> AnnotatedSentence {
        use Upos::*;
        let forms = tokenize("if you don't want a new mother you better be good .");
        let tags = [Sconj, Pron, Aux, Verb, Det, Adj, Noun, Pron, Adv, Aux, Adj, Punct];
        let spec: Vec<(&str, Upos)> = forms.iter().map(String::as_str).zip(tags).collect();
        tagged("test-3", &spec)
    }

    fn split(s: Vec<AnnotatedSentence>) -> CorpusSplit {
        CorpusSplit::new(SplitName::Test, s).unwrap()
    }

    fn vocab() -> VocabPredicate {
        VocabPredicate::new(["tell", "sing", "birthday", "want", "mother"]).unwrap()
    }

    #[test]
    fn masked_verb_item() {
        let (items, st) = build_masked_set(&split(vec![tell()]), TargetPos::Verb, &vocab(), 0).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].mask_index, 2);
        assert_eq!(items[0].answer, "tell");
        assert_eq!(st.items, 1);
    }

    #[test]
    fn masked_noun_item() {
        let (items, _) = build_masked_set(&split(vec![birthday()]), TargetPos::Noun, &vocab(), 0).unwrap();
        assert_eq!(items[0].answer, "birthday");
        assert_eq!(items[0].word_class, WordClass::Other);
    }

    #[test]
    fn masked_skips_are_counted() {
        use Upos::*;
        let verbless = tagged("test-9", &[("the", Det), ("red", Adj), ("ball", Noun), (".", Punct)]);
        let s = split(vec![verbless, tell(), mother()]);
        let v = VocabPredicate::new(["tell"]).unwrap();
        let (items, st) = build_masked_set(&s, TargetPos::Verb, &v, 0).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(st.no_target, 1);
        assert_eq!(st.not_in_vocab, 1);
        assert_eq!(st.sentences, 3);
        assert_eq!(st.skipped(), 2);
    }

    #[test]
    fn empty_vocab_is_an_error() {
        assert!(VocabPredicate::new(Vec::<String>::new()).is_err());
        assert!(VocabPredicate::read(&b"\n\n"[..]).is_err());
    }

    fn verb_bins() -> BinTable {
        // 22 verbs: ranks 5..=10 form bin 2, which is exactly the six below.
        let mut counts: Vec<(String, u64)> = (0..4).map(|i| (format!("a{i}"), 1000 - i)).collect();
        for f in ["want", "play", "push", "give", "stick", "listen"] {
            counts.push((f.to_string(), 50));
        }
        counts.extend((0..12).map(|i| (format!("z{i:02}"), 1)));
        let t = FrequencyTable::from_counts(
            Granularity::Coarse,
            counts.iter().map(|(f, c)| ("VERB", f.as_str(), *c)),
        );
        let bins = bin_by_log_rank(&t, "VERB", 4).unwrap();
        assert_eq!(bins.cell("VERB", 2).len(), 6);
        bins
    }

    #[test]
    fn minimal_pair_for_want() {
        let bins = verb_bins();
        let (items, st) = build_minimal_pairs(&split(vec![mother()]), TargetPos::Verb, &bins, &PairOptions::default());
        assert_eq!(st.items, 1);
        let p = &items[0];
        assert_eq!(p.answer, "want");
        assert_eq!(p.word_class, WordClass::Mental);
        let got: BTreeSet<&str> = p.alternatives.iter().map(String::as_str).collect();
        let want: BTreeSet<&str> = ["play", "push", "give", "stick", "listen"].into();
        assert_eq!(got, want);
        for a in &p.alternatives {
            assert_eq!(bins.bin_of("VERB", a), Some(p.bin));
        }
        assert_eq!(p.variant(0)[p.target_index], p.alternatives[0]);
    }

    #[test]
    fn length_filter_is_strict() {
        use Upos::*;
        let mut nine = Vec::new();
        for i in 0..8 {
            nine.push((if i == 0 { "want" } else { "x" }, if i == 0 { Verb } else { Noun }));
        }
        nine.push((".", Punct));
        let s9 = tagged("test-4", &nine);
        let mut ten = nine.clone();
        ten.insert(1, ("x", Noun));
        let s10 = tagged("test-5", &ten);
        let mut eleven = ten.clone();
        eleven.insert(1, ("x", Noun));
        let s11 = tagged("test-6", &eleven);
        let bins = verb_bins();
        let (items, st) = build_minimal_pairs(
            &split(vec![s9, s10, s11]),
            TargetPos::Verb,
            &bins,
            &PairOptions::default(),
        );
        assert_eq!(st.too_short, 2);
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].source_sentence_id, "test-6");
        let no_punct = PairOptions {
            count_punct: false,
            ..Default::default()
        };
        let (items, _) = build_minimal_pairs(
            &split(vec![tagged("test-6", &eleven)]),
            TargetPos::Verb,
            &bins,
            &no_punct,
        );
        assert!(items.is_empty());
    }

    #[test]
    fn insufficient_bin_is_skipped() {
        let opts = PairOptions {
            n_alt: 6,
            ..Default::default()
        };
        let (items, st) = build_minimal_pairs(&split(vec![mother()]), TargetPos::Verb, &verb_bins(), &opts);
        assert!(items.is_empty());
        assert_eq!(st.insufficient_bin, 1);
    }

    fn sample_items() -> Vec<EvalItem> {
        let (m, _) = build_masked_set(&split(vec![tell()]), TargetPos::Verb, &vocab(), 0).unwrap();
        let (p, _) = build_minimal_pairs(
            &split(vec![mother()]),
            TargetPos::Verb,
            &verb_bins(),
            &PairOptions::default(),
        );
        m.into_iter()
            .map(EvalItem::Masked)
            .chain(p.into_iter().map(EvalItem::MinimalPair))
            .collect()
    }

    #[test]
    fn records_round_trip() {
        let items = sample_items();
        let mut buf = Vec::new();
        write_eval_records(&mut buf, &items).unwrap();
        assert_eq!(read_eval_records(&buf[..]).unwrap(), items);
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().nth(1).unwrap();
        assert!(
            first.starts_with(r#"{"id":"mask-verb-test-1","task":"masked","source_sentence_id":"test-1","tokens":"#)
        );
        assert!(first.ends_with(r#""mask_index":2,"answer":"tell","target_pos":"VERB","word_class":"other"}"#));
    }

    #[test]
    fn empty_file_has_header_only() {
        let mut buf = Vec::new();
        write_eval_records(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{EVAL_HEADER}\n"));
    }

    #[test]
    fn missing_answer_names_the_line() {
        let mut buf = Vec::new();
        write_eval_records(&mut buf, &sample_items()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let broken = text.replace(r#""answer":"want","#, "");
        match read_eval_records(broken.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("answer"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violations_are_rejected() {
        let ok = r#"{"id":"a","task":"masked","source_sentence_id":"s","tokens":["x"],"mask_index":0,"answer":"x","target_pos":"VERB","word_class":"other"}"#;
        assert!(read_eval_records(ok.as_bytes()).is_ok());
        for bad in [
            ok.replace(r#""answer":"x""#, r#""answer":"y""#),
            ok.replace(r#""word_class":"other""#, r#""word_class":"other","extra":1"#),
            ok.replace(r#""task":"masked""#, r#""task":"cloze""#),
            ok.replace(r#""mask_index":0"#, r#""target_index":0"#),
        ] {
            assert!(read_eval_records(bad.as_bytes()).is_err(), "{bad}");
        }
        let dup = format!("{ok}\n{ok}\n");
        assert!(read_eval_records(dup.as_bytes()).is_err());
    }
}
