//! Annotated sentences, raw-text ingestion and CoNLL-U reading/writing.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::tagger::TaggerModel;
use crate::{Error, Result};

/// The 17 universal part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }

    /// Open-class content tags.
    pub fn is_content(self) -> bool {
        matches!(self, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv)
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Upos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Upos::ALL
            .iter()
            .copied()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown UPOS tag {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub upos: Upos,
    pub xpos: Option<String>,
    /// 1-based head index, 0 for the root.
    pub head: Option<usize>,
    pub deprel: Option<String>,
}

impl Token {
    pub fn new(form: impl Into<String>, upos: Upos) -> Self {
        Token {
            form: form.into(),
            upos,
            xpos: None,
            head: None,
            deprel: None,
        }
    }

    pub fn with_xpos(mut self, xpos: impl Into<String>) -> Self {
        self.xpos = Some(xpos.into());
        self
    }
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub main_verb: Option<usize>,
    pub np_spans: Vec<Span>,
}

impl AnnotatedSentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Self {
        AnnotatedSentence {
            id: id.into(),
            tokens,
            main_verb: None,
            np_spans: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// Whether every token carries a dependency head.
    pub fn has_dependencies(&self) -> bool {
        !self.tokens.is_empty() && self.tokens.iter().all(|t| t.head.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.form.is_empty() || tok.form.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!(
                    "{}: token {i} has an empty or whitespace-bearing form",
                    self.id
                )));
            }
            if let Some(h) = tok.head {
                if h > n {
                    return Err(Error::invalid(format!(
                        "{}: token {i} has head {h} beyond sentence length {n}",
                        self.id
                    )));
                }
            }
        }
        let mut spans = self.np_spans.clone();
        spans.sort();
        for (k, s) in spans.iter().enumerate() {
            if s.is_empty() || s.end > n {
                return Err(Error::invalid(format!("{}: bad span {s:?}", self.id)));
            }
            if k > 0 && spans[k - 1].end > s.start {
                return Err(Error::invalid(format!("{}: overlapping spans", self.id)));
            }
        }
        if let Some(v) = self.main_verb {
            if self.tokens.get(v).map(|t| t.upos) != Some(Upos::Verb) {
                return Err(Error::invalid(format!(
                    "{}: main verb index {v} is not a VERB token",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::invalid(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub name: SplitName,
    pub sentences: Vec<AnnotatedSentence>,
}

impl CorpusSplit {
    pub fn new(name: SplitName, sentences: Vec<AnnotatedSentence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sentences.len());
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate sentence id {:?} in {name} split",
                    s.id
                )));
            }
        }
        Ok(CorpusSplit { name, sentences })
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }
}

const SPLIT_PUNCT: [char; 6] = ['.', ',', '!', '?', ';', ':'];

/// Lower-case a raw utterance and split it into word tokens.
///
/// Clause punctuation `. , ! ? ; :` at either edge of a whitespace-separated
/// chunk becomes its own token; apostrophe-internal strings stay whole.
pub fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in line.split_whitespace() {
        let lower = chunk.to_lowercase();
        let chars: Vec<char> = lower.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && SPLIT_PUNCT.contains(&chars[start]) {
            out.push(chars[start].to_string());
            start += 1;
        }
        let mut trailing = Vec::new();
        while end > start && SPLIT_PUNCT.contains(&chars[end - 1]) {
            trailing.push(chars[end - 1].to_string());
            end -= 1;
        }
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Render a sentence as a single space-joined training line.
pub fn detokenize(sentence: &AnnotatedSentence) -> String {
    sentence.forms().join(" ")
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub max_tokens: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { max_tokens: 512 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub lines: usize,
    pub sentences: usize,
    pub skipped_empty: usize,
    pub skipped_too_long: usize,
}

/// Tokenize and annotate utterance-per-line text. Sentence ids are
/// `<split>-<line number>` with 1-based line numbers.
pub fn ingest_raw<R: BufRead>(
    reader: R,
    split: SplitName,
    tagger: &TaggerModel,
    opts: &IngestOptions,
) -> Result<(Vec<AnnotatedSentence>, IngestStats)> {
    let mut stats = IngestStats::default();
    let mut pending = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        stats.lines += 1;
        let forms = tokenize(&line);
        if forms.is_empty() {
            log::warn!("{split}-{}: empty line skipped", i + 1);
            stats.skipped_empty += 1;
            continue;
        }
        if forms.len() > opts.max_tokens {
            log::warn!(
                "{split}-{}: {} tokens exceeds limit {}, skipped",
                i + 1,
                forms.len(),
                opts.max_tokens
            );
            stats.skipped_too_long += 1;
            continue;
        }
        pending.push((format!("{split}-{}", i + 1), forms));
    }
    let sentences: Vec<AnnotatedSentence> = pending
        .into_par_iter()
        .map(|(id, forms)| tagger.annotate(id, forms))
        .collect();
    stats.sentences = sentences.len();
    Ok((sentences, stats))
}

fn parse_spans(value: &str, line: usize) -> Result<Vec<Span>> {
    value
        .split_whitespace()
        .map(|part| {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| Error::parse(line, format!("bad span {part:?}")))?;
            let start = a
                .parse()
                .map_err(|_| Error::parse(line, format!("bad span start {a:?}")))?;
            let end = b
                .parse()
                .map_err(|_| Error::parse(line, format!("bad span end {b:?}")))?;
            Ok(Span::new(start, end))
        })
        .collect()
}

#[derive(Default)]
struct BlockState {
    start_line: usize,
    id: Option<String>,
    main_verb: Option<Option<usize>>,
    np_spans: Option<Vec<Span>>,
    tokens: Vec<Token>,
}

/// Read CoNLL-U. Multiword-token range lines and empty nodes are dropped in
/// favour of their parts. `# sent_id`, `# main_verb` and `# np_spans` comments
/// are honoured; missing main-verb or span annotations are computed from the
/// tags with the tagger module's finder and chunker.
pub fn ingest_conllu<R: BufRead>(reader: R, split: SplitName) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    let mut block = BlockState::default();
    let mut line_no = 0;
    for line in reader.lines() {
        let line = line?;
        line_no += 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            if !block.tokens.is_empty() {
                out.push(finish_block(std::mem::take(&mut block), split, out.len())?);
            } else {
                block = BlockState::default();
            }
            continue;
        }
        if block.start_line == 0 {
            block.start_line = line_no;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "sent_id" => block.id = Some(value.to_string()),
                    "main_verb" => {
                        let v = if value == "_" {
                            None
                        } else {
                            Some(
                                value
                                    .parse()
                                    .map_err(|_| Error::parse(line_no, format!("bad main_verb {value:?}")))?,
                            )
                        };
                        block.main_verb = Some(v);
                    }
                    "np_spans" => block.np_spans = Some(parse_spans(value, line_no)?),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                line_no,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id_col = cols[0];
        if id_col.contains('-') || id_col.contains('.') {
            continue;
        }
        let idx: usize = id_col
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad token id {id_col:?}")))?;
        if idx != block.tokens.len() + 1 {
            return Err(Error::parse(line_no, format!("token id {idx} out of sequence")));
        }
        let form = cols[1];
        if form.is_empty() {
            return Err(Error::parse(line_no, "missing form"));
        }
        let upos: Upos = cols[3]
            .parse()
            .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
        let xpos = (cols[4] != "_").then(|| cols[4].to_string());
        let head = if cols[6] == "_" {
            None
        } else {
            Some(
                cols[6]
                    .parse::<usize>()
                    .map_err(|_| Error::parse(line_no, format!("non-integer head {:?}", cols[6])))?,
            )
        };
        let deprel = (cols[7] != "_").then(|| cols[7].to_string());
        block.tokens.push(Token {
            form: form.to_string(),
            upos,
            xpos,
            head,
            deprel,
        });
    }
    if !block.tokens.is_empty() {
        out.push(finish_block(block, split, out.len())?);
    }
    Ok(out)
}

fn finish_block(block: BlockState, split: SplitName, ordinal: usize) -> Result<AnnotatedSentence> {
    let id = block.id.unwrap_or_else(|| format!("{split}-{}", ordinal + 1));
    let mut sentence = AnnotatedSentence::new(id, block.tokens);
    sentence.main_verb = match block.main_verb {
        Some(v) => v,
        None => crate::tagger::find_main_verb(&sentence),
    };
    sentence.np_spans = match block.np_spans {
        Some(s) => s,
        None => crate::tagger::chunk_nps(&sentence),
    };
    sentence
        .validate()
        .map_err(|e| Error::parse(block.start_line, e.to_string()))?;
    Ok(sentence)
}

pub fn write_conllu<W: Write>(mut w: W, sentences: &[AnnotatedSentence]) -> Result<()> {
    for s in sentences {
        writeln!(w, "# sent_id = {}", s.id)?;
        writeln!(w, "# text = {}", detokenize(s))?;
        match s.main_verb {
            Some(v) => writeln!(w, "# main_verb = {v}")?,
            None => writeln!(w, "# main_verb = _")?,
        }
        let spans: Vec<String> = s.np_spans.iter().map(|sp| format!("{}-{}", sp.start, sp.end)).collect();
        writeln!(w, "# np_spans = {}", spans.join(" "))?;
        for (i, t) in s.tokens.iter().enumerate() {
            writeln!(
                w,
                "{}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_",
                i + 1,
                t.form,
                t.upos,
                t.xpos.as_deref().unwrap_or("_"),
                t.head.map(|h| h.to_string()).unwrap_or_else(|| "_".into()),
                t.deprel.as_deref().unwrap_or("_"),
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Write one space-joined sentence per line.
pub fn write_text<W: Write>(mut w: W, sentences: &[AnnotatedSentence]) -> Result<()> {
    for s in sentences {
        writeln!(w, "{}", detokenize(s))?;
    }
    Ok(())
}
