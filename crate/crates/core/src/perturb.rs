//! Corpus ablations: content-word replacement (verb and noun modes) and
//! within-sentence word-order shuffling (unigram and base-NP modes).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{AnnotatedSentence, CorpusSplit, Span, Upos};
use crate::lexicon::{pos_key, sample_same_pos, FrequencyTable, Granularity};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerturbKind {
    Original,
    ReplaceWordVerb,
    ReplaceWordNoun,
    Shuffle1gram,
    ShuffleNp,
}

impl PerturbKind {
    pub const ALL: [PerturbKind; 5] = [
        PerturbKind::Original,
        PerturbKind::ReplaceWordVerb,
        PerturbKind::ReplaceWordNoun,
        PerturbKind::Shuffle1gram,
        PerturbKind::ShuffleNp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbKind::Original => "original",
            PerturbKind::ReplaceWordVerb => "replace_word_verb",
            PerturbKind::ReplaceWordNoun => "replace_word_noun",
            PerturbKind::Shuffle1gram => "shuffle_1gram",
            PerturbKind::ShuffleNp => "shuffle_np",
        }
    }

    pub fn is_shuffle(self) -> bool {
        matches!(self, PerturbKind::Shuffle1gram | PerturbKind::ShuffleNp)
    }

    pub fn is_replacement(self) -> bool {
        matches!(self, PerturbKind::ReplaceWordVerb | PerturbKind::ReplaceWordNoun)
    }
}

impl fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PerturbKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown perturbation kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbationSpec {
    pub kind: PerturbKind,
    pub seed: u64,
    pub granularity: Granularity,
}

/// Per-sentence replacement tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplaceStats {
    pub replaced: usize,
    pub no_ops: usize,
}

impl std::ops::AddAssign for ReplaceStats {
    fn add_assign(&mut self, rhs: Self) {
        self.replaced += rhs.replaced;
        self.no_ops += rhs.no_ops;
    }
}

fn replace_positions<R: Rng + ?Sized>(
    s: &AnnotatedSentence,
    positions: &[usize],
    table: &FrequencyTable,
    rng: &mut R,
) -> Result<(AnnotatedSentence, ReplaceStats)> {
    let mut out = s.clone();
    let mut stats = ReplaceStats::default();
    for &i in positions {
        let tok = &mut out.tokens[i];
        let key = pos_key(tok, table.granularity)?;
        let sample = sample_same_pos(table, &key, Some(&tok.form), rng)?;
        if sample.no_op {
            stats.no_ops += 1;
            continue;
        }
        stats.replaced += 1;
        tok.form = sample.form;
        tok.head = None;
        tok.deprel = None;
        if table.granularity == Granularity::Coarse {
            tok.xpos = None;
        }
    }
    Ok((out, stats))
}

/// Replace every NOUN, ADJ and ADV and every VERB except the main verb with a
/// frequency-sampled form of the same PoS key.
pub fn replace_word_verb<R: Rng + ?Sized>(
    s: &AnnotatedSentence,
    table: &FrequencyTable,
    rng: &mut R,
) -> Result<(AnnotatedSentence, ReplaceStats)> {
    let positions: Vec<usize> = s
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| match t.upos {
            Upos::Noun | Upos::Adj | Upos::Adv => true,
            Upos::Verb => Some(*i) != s.main_verb,
            _ => false,
        })
        .map(|(i, _)| i)
        .collect();
    replace_positions(s, &positions, table, rng)
}

/// Keep one uniformly chosen NOUN; replace every other NOUN and every VERB,
/// ADJ and ADV.
pub fn replace_word_noun<R: Rng + ?Sized>(
    s: &AnnotatedSentence,
    table: &FrequencyTable,
    rng: &mut R,
) -> Result<(AnnotatedSentence, ReplaceStats)> {
    let nouns: Vec<usize> = (0..s.len()).filter(|&i| s.tokens[i].upos == Upos::Noun).collect();
    let keep = nouns.choose(rng).copied();
    let positions: Vec<usize> = s
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| Some(*i) != keep && matches!(t.upos, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv))
        .map(|(i, _)| i)
        .collect();
    replace_positions(s, &positions, table, rng)
}

fn pinned_final(s: &AnnotatedSentence) -> Option<usize> {
    s.tokens.last().filter(|t| t.upos == Upos::Punct).map(|_| s.len() - 1)
}

/// Permute atomic blocks of tokens with a Fisher-Yates shuffle, keeping a
/// sentence-final punctuation token in place. Returns the new sentence and,
/// for each output block, its index in `blocks` and its new span.
fn shuffle_blocks<R: Rng + ?Sized>(
    s: &AnnotatedSentence,
    blocks: &[Span],
    rng: &mut R,
) -> (AnnotatedSentence, Vec<(usize, Span)>) {
    let mut perm: Vec<usize> = (0..blocks.len()).collect();
    perm.shuffle(rng);
    let mut order: Vec<usize> = Vec::with_capacity(s.len());
    let mut placed = Vec::with_capacity(blocks.len());
    for &k in &perm {
        let start = order.len();
        order.extend(blocks[k].start..blocks[k].end);
        placed.push((k, Span::new(start, order.len())));
    }
    order.extend(pinned_final(s));
    let mut new_pos = vec![0; s.len()];
    for (new, &old) in order.iter().enumerate() {
        new_pos[old] = new;
    }
    let tokens = order
        .iter()
        .map(|&i| {
            let mut t = s.tokens[i].clone();
            t.head = None;
            t.deprel = None;
            t
        })
        .collect();
    let mut out = AnnotatedSentence::new(s.id.clone(), tokens);
    out.main_verb = s.main_verb.map(|v| new_pos[v]);
    (out, placed)
}

fn free_len(s: &AnnotatedSentence) -> usize {
    pinned_final(s).unwrap_or(s.len())
}

/// Shuffle all tokens except a pinned sentence-final punctuation mark.
pub fn shuffle_1gram<R: Rng + ?Sized>(s: &AnnotatedSentence, rng: &mut R) -> AnnotatedSentence {
    let blocks: Vec<Span> = (0..free_len(s)).map(|i| Span::new(i, i + 1)).collect();
    shuffle_blocks(s, &blocks, rng).0
}

/// Shuffle with every base-NP span moving as one block. With no spans this
/// consumes the RNG exactly as [`shuffle_1gram`] does.
pub fn shuffle_np<R: Rng + ?Sized>(s: &AnnotatedSentence, rng: &mut R) -> AnnotatedSentence {
    let limit = free_len(s);
    let mut spans: Vec<Span> = s
        .np_spans
        .iter()
        .copied()
        .filter(|sp| sp.end <= limit && !sp.is_empty())
        .collect();
    spans.sort();
    let mut blocks = Vec::new();
    let mut is_span = Vec::new();
    let mut i = 0;
    let mut next = spans.iter().peekable();
    while i < limit {
        while next.peek().is_some_and(|sp| sp.start < i) {
            next.next();
        }
        match next.peek() {
            Some(sp) if sp.start == i => {
                blocks.push(**sp);
                is_span.push(true);
                i = sp.end;
                next.next();
            }
            _ => {
                blocks.push(Span::new(i, i + 1));
                is_span.push(false);
                i += 1;
            }
        }
    }
    let (mut out, placed) = shuffle_blocks(s, &blocks, rng);
    out.np_spans = placed
        .into_iter()
        .filter(|(k, _)| is_span[*k])
        .map(|(_, sp)| sp)
        .collect();
    out
}

/// Apply one perturbation to a single sentence.
pub fn perturb_sentence<R: Rng + ?Sized>(
    s: &AnnotatedSentence,
    kind: PerturbKind,
    table: &FrequencyTable,
    rng: &mut R,
) -> Result<(AnnotatedSentence, ReplaceStats)> {
    match kind {
        PerturbKind::Original => Ok((s.clone(), ReplaceStats::default())),
        PerturbKind::ReplaceWordVerb => replace_word_verb(s, table, rng),
        PerturbKind::ReplaceWordNoun => replace_word_noun(s, table, rng),
        PerturbKind::Shuffle1gram => Ok((shuffle_1gram(s, rng), ReplaceStats::default())),
        PerturbKind::ShuffleNp => Ok((shuffle_np(s, rng), ReplaceStats::default())),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PerturbStats {
    pub sentences: usize,
    pub tokens: usize,
    pub replaced: usize,
    pub no_ops: usize,
    pub errors: usize,
}

/// Perturb a whole split. Sentence `i` draws from the stream
/// `(seed, "perturb/<split>", i)`, so the output does not depend on scheduling. A
/// sentence whose perturbation fails passes through unchanged and is counted.
pub fn perturb_corpus(
    corpus: &CorpusSplit,
    spec: &PerturbationSpec,
    table: &FrequencyTable,
) -> Result<(CorpusSplit, PerturbStats)> {
    if spec.kind.is_replacement() && table.granularity != spec.granularity {
        return Err(Error::invalid(format!(
            "frequency table is {} but the perturbation asks for {}",
            table.granularity, spec.granularity
        )));
    }
    let label = format!("perturb/{}", corpus.name);
    let results: Vec<(AnnotatedSentence, ReplaceStats, bool)> = corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = rng::stream(spec.seed, &label, i as u64);
            match perturb_sentence(s, spec.kind, table, &mut r) {
                Ok((out, st)) => (out, st, false),
                Err(e) => {
                    log::warn!("{}: perturbation failed: {e}", s.id);
                    (s.clone(), ReplaceStats::default(), true)
                }
            }
        })
        .collect();
    let mut stats = PerturbStats::default();
    let mut sentences = Vec::with_capacity(results.len());
    for (s, st, failed) in results {
        stats.sentences += 1;
        stats.tokens += s.len();
        stats.replaced += st.replaced;
        stats.no_ops += st.no_ops;
        stats.errors += failed as usize;
        sentences.push(s);
    }
    Ok((
        CorpusSplit {
            name: corpus.name,
            sentences,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::lexicon::build_frequency_table;
    use crate::tagger::chunk_nps;
    use std::collections::BTreeSet;

    fn supper() -> AnnotatedSentence {
        use Upos::*;
        let spec = [
            ("you", Pron, "PRP"),
            ("can", Aux, "MD"),
            ("eat", Verb, "VB"),
            ("your", Det, "PRP$"),
            ("supper", Noun, "NN"),
            ("when", Sconj, "WRB"),
            ("it's", Pron, "PRP"),
            ("cooked", Verb, "VBN"),
            (".", Punct, "."),
        ];
        let mut s = AnnotatedSentence::new(
            "test-1",
            spec.iter().map(|(f, u, x)| Token::new(*f, *u).with_xpos(*x)).collect(),
        );
        s.np_spans = chunk_nps(&s);
        s.main_verb = Some(2);
        s
    }

    fn table() -> FrequencyTable {
        FrequencyTable::from_counts(
            Granularity::Fine,
            [
                ("NOUN:NN", "supper", 3),
                ("NOUN:NN", "one", 5),
                ("NOUN:NN", "ball", 7),
                ("VERB:VBN", "cooked", 2),
                ("VERB:VBN", "built", 2),
                ("VERB:VB", "eat", 4),
                ("VERB:VB", "say", 4),
                ("ADJ:JJ", "red", 1),
                ("ADJ:JJ", "big", 1),
                ("ADV:RB", "now", 1),
            ],
        )
    }

    #[test]
    fn verb_mode_replaces_co_occurring_words_only() {
        let s = supper();
        for seed in 0..20 {
            let mut r = rng::stream(seed, "t", 0);
            let (out, st) = replace_word_verb(&s, &table(), &mut r).unwrap();
            assert_eq!(out.len(), s.len());
            assert_eq!(st.replaced, 2);
            for i in [0, 1, 2, 3, 5, 6, 8] {
                assert_eq!(out.tokens[i].form, s.tokens[i].form);
            }
            assert_ne!(out.tokens[4].form, "supper");
            assert_eq!(out.tokens[7].form, "built");
            assert_eq!(out.tokens[4].xpos.as_deref(), Some("NN"));
        }
    }

    #[test]
    fn verb_mode_leaves_bare_imperative() {
        use Upos::*;
        let mut s = AnnotatedSentence::new(
            "g",
            vec![
                Token::new("go", Verb).with_xpos("VB"),
                Token::new(".", Punct).with_xpos("."),
            ],
        );
        s.main_verb = Some(0);
        let mut r = rng::stream(1, "t", 0);
        let (out, st) = replace_word_verb(&s, &table(), &mut r).unwrap();
        assert_eq!(out, s);
        assert_eq!(st, ReplaceStats::default());
    }

    #[test]
    fn verb_mode_on_verbless_sentence_replaces_all_content() {
        use Upos::*;
        let s = AnnotatedSentence::new(
            "v",
            vec![
                Token::new("the", Det).with_xpos("DT"),
                Token::new("red", Adj).with_xpos("JJ"),
                Token::new("ball", Noun).with_xpos("NN"),
                Token::new("now", Adv).with_xpos("RB"),
            ],
        );
        let mut r = rng::stream(2, "t", 0);
        let (out, st) = replace_word_verb(&s, &table(), &mut r).unwrap();
        assert_eq!(out.tokens[0].form, "the");
        assert_eq!(out.tokens[1].form, "big");
        assert_ne!(out.tokens[2].form, "ball");
        // "now" is alone in its class.
        assert_eq!(st, ReplaceStats { replaced: 2, no_ops: 1 });
    }

    #[test]
    fn noun_mode_keeps_one_noun() {
        let s = supper();
        let mut r = rng::stream(3, "t", 0);
        let (out, _) = replace_word_noun(&s, &table(), &mut r).unwrap();
        // Single noun: always kept; both verbs replaced.
        assert_eq!(out.tokens[4].form, "supper");
        assert_eq!(out.tokens[2].form, "say");
        assert_eq!(out.tokens[7].form, "built");
        assert_eq!(out.tokens[3].form, "your");
    }

    #[test]
    fn noun_mode_without_nouns() {
        use Upos::*;
        let s = AnnotatedSentence::new(
            "n",
            vec![
                Token::new("eat", Verb).with_xpos("VB"),
                Token::new("now", Adv).with_xpos("RB"),
            ],
        );
        let mut r = rng::stream(3, "t", 1);
        let (out, st) = replace_word_noun(&s, &table(), &mut r).unwrap();
        assert_eq!(out.tokens[0].form, "say");
        assert_eq!(st.replaced, 1);
    }

    fn multiset(s: &AnnotatedSentence) -> Vec<String> {
        let mut v: Vec<String> = s.tokens.iter().map(|t| t.form.clone()).collect();
        v.sort();
        v
    }

    #[test]
    fn shuffles_preserve_multiset_and_final_punct() {
        let s = supper();
        let mut seen = BTreeSet::new();
        for seed in 0..50 {
            let mut r = rng::stream(seed, "s", 0);
            let out = shuffle_1gram(&s, &mut r);
            assert_eq!(multiset(&out), multiset(&s));
            assert_eq!(out.tokens.last().unwrap().form, ".");
            let mv = out.main_verb.unwrap();
            assert_eq!(out.tokens[mv].form, "eat");
            seen.insert(out.forms().join(" "));
        }
        assert!(seen.len() > 40);
    }

    #[test]
    fn shuffle_trivial_sentences() {
        use Upos::*;
        let mut r = rng::stream(0, "s", 0);
        let one = AnnotatedSentence::new("a", vec![Token::new("hi", Intj)]);
        assert_eq!(shuffle_1gram(&one, &mut r).forms(), ["hi"]);
        let two = AnnotatedSentence::new("b", vec![Token::new("hi", Intj), Token::new(".", Punct)]);
        assert_eq!(shuffle_1gram(&two, &mut r).forms(), ["hi", "."]);
        let mut np = AnnotatedSentence::new(
            "c",
            vec![Token::new("the", Det), Token::new("red", Adj), Token::new("ball", Noun)],
        );
        np.np_spans = chunk_nps(&np);
        assert_eq!(shuffle_np(&np, &mut r).forms(), ["the", "red", "ball"]);
    }

    #[test]
    fn np_shuffle_keeps_spans_contiguous() {
        let s = supper();
        for seed in 0..50 {
            let mut r = rng::stream(seed, "np", 0);
            let out = shuffle_np(&s, &mut r);
            let forms = out.forms().join(" ");
            assert!(forms.contains("your supper"), "{forms}");
            assert_eq!(multiset(&out), multiset(&s));
            assert!(out
                .np_spans
                .iter()
                .any(|sp| out.tokens[sp.start].form == "your" && sp.len() == 2));
            out.validate().unwrap();
        }
    }

    #[test]
    fn np_shuffle_without_spans_matches_unigram_shuffle() {
        let mut s = supper();
        s.np_spans.clear();
        for seed in 0..20 {
            let a = shuffle_1gram(&s, &mut rng::stream(seed, "eq", 0));
            let b = shuffle_np(&s, &mut rng::stream(seed, "eq", 0));
            assert_eq!(a.forms(), b.forms());
        }
    }

    #[test]
    fn np_shuffle_reaches_every_block_order() {
        // Blocks: [you] [can] [eat] [your supper] with "." pinned → 4! orders.
        use Upos::*;
        let mut s = AnnotatedSentence::new(
            "x",
            vec![
                Token::new("you", Pron),
                Token::new("can", Aux),
                Token::new("eat", Verb),
                Token::new("your", Det),
                Token::new("supper", Noun),
                Token::new(".", Punct),
            ],
        );
        s.np_spans = chunk_nps(&s);
        let mut seen = BTreeSet::new();
        for seed in 0..2000 {
            let out = shuffle_np(&s, &mut rng::stream(seed, "perm", 0));
            let line = out.forms().join(" ");
            assert!(line.contains("your supper") && line.ends_with(" ."));
            seen.insert(line);
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn corpus_perturbation_is_deterministic_and_identity_for_original() {
        let mut sents = Vec::new();
        for i in 0..30 {
            let mut s = supper();
            s.id = format!("train-{i}");
            sents.push(s);
        }
        let split = CorpusSplit::new(crate::corpus::SplitName::Train, sents).unwrap();
        let table = build_frequency_table(&split.sentences, Granularity::Fine).unwrap();
        let orig = PerturbationSpec {
            kind: PerturbKind::Original,
            seed: 9,
            granularity: Granularity::Fine,
        };
        assert_eq!(perturb_corpus(&split, &orig, &table).unwrap().0, split);
        for kind in PerturbKind::ALL {
            let spec = PerturbationSpec { kind, ..orig };
            let (a, sa) = perturb_corpus(&split, &spec, &table).unwrap();
            let (b, _) = perturb_corpus(&split, &spec, &table).unwrap();
            assert_eq!(a, b);
            assert_eq!(sa.sentences, 30);
            assert_eq!(a.token_count(), split.token_count());
        }
    }

    #[test]
    fn granularity_mismatch_is_rejected() {
        let split = CorpusSplit::new(crate::corpus::SplitName::Dev, vec![supper()]).unwrap();
        let spec = PerturbationSpec {
            kind: PerturbKind::ReplaceWordVerb,
            seed: 0,
            granularity: Granularity::Coarse,
        };
        assert!(perturb_corpus(&split, &spec, &table()).is_err());
    }
}
