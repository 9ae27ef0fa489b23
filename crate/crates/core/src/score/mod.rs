//! Scoring model responses against eval sets, verb-class lookup, logistic
//! interaction fits and the summary report.

mod regress;
mod report;
mod trials;

pub use regress::{cluster_bootstrap, fit_logistic, BootstrapResult, Formula, RegressionFit};
pub use report::{build_report, condition_of, ConditionRows, FitSummary, Ordering, ReportRow, ScoreReport};
pub use trials::{read_trials, write_trials, TRIALS_HEADER};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evalgen::{MaskedItem, MinimalPairItem, TargetPos, Task};
use crate::perturb::PerturbKind;
use crate::{Error, Result};

pub const RESPONSE_HEADER: &str = "# synboot responses v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordClass {
    Mental,
    Physical,
    Other,
}

impl WordClass {
    pub fn as_str(self) -> &'static str {
        match self {
            WordClass::Mental => "mental",
            WordClass::Physical => "physical",
            WordClass::Other => "other",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mental" => Ok(WordClass::Mental),
            "physical" => Ok(WordClass::Physical),
            "other" => Ok(WordClass::Other),
            _ => Err(Error::invalid(format!("unknown word class {s:?}"))),
        }
    }
}

pub const MENTAL_VERBS: [&str; 6] = ["see", "look", "want", "know", "like", "think"];

pub const PHYSICAL_VERBS: [&str; 13] = [
    "take", "say", "come", "play", "push", "sit", "pull", "eat", "make", "call", "catch", "put", "find",
];

/// Inflected form to lemma for the listed verbs.
pub const INFLECTIONS: [(&str, &str); 60] = [
    ("sees", "see"),
    ("saw", "see"),
    ("seen", "see"),
    ("seeing", "see"),
    ("looks", "look"),
    ("looked", "look"),
    ("looking", "look"),
    ("wants", "want"),
    ("wanted", "want"),
    ("wanting", "want"),
    ("knows", "know"),
    ("knew", "know"),
    ("known", "know"),
    ("knowing", "know"),
    ("likes", "like"),
    ("liked", "like"),
    ("liking", "like"),
    ("thinks", "think"),
    ("thought", "think"),
    ("thinking", "think"),
    ("takes", "take"),
    ("took", "take"),
    ("taken", "take"),
    ("taking", "take"),
    ("says", "say"),
    ("said", "say"),
    ("saying", "say"),
    ("comes", "come"),
    ("came", "come"),
    ("coming", "come"),
    ("plays", "play"),
    ("played", "play"),
    ("playing", "play"),
    ("pushes", "push"),
    ("pushed", "push"),
    ("pushing", "push"),
    ("sits", "sit"),
    ("sat", "sit"),
    ("sitting", "sit"),
    ("pulls", "pull"),
    ("pulled", "pull"),
    ("pulling", "pull"),
    ("eats", "eat"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("eating", "eat"),
    ("makes", "make"),
    ("made", "make"),
    ("making", "make"),
    ("calls", "call"),
    ("called", "call"),
    ("calling", "call"),
    ("catches", "catch"),
    ("caught", "catch"),
    ("catching", "catch"),
    ("puts", "put"),
    ("putting", "put"),
    ("finds", "find"),
    ("found", "find"),
    ("finding", "find"),
];

pub fn lemma(form: &str) -> &str {
    INFLECTIONS.iter().find(|(f, _)| *f == form).map_or(form, |(_, l)| l)
}

/// Mental or physical for the listed verbs and their inflections; nouns and
/// unlisted verbs are `Other`.
pub fn classify_word(form: &str, target_pos: TargetPos) -> WordClass {
    if target_pos != TargetPos::Verb {
        return WordClass::Other;
    }
    let form = form.to_lowercase();
    let l = lemma(&form);
    if MENTAL_VERBS.contains(&l) {
        WordClass::Mental
    } else if PHYSICAL_VERBS.contains(&l) {
        WordClass::Physical
    } else {
        WordClass::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub form: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Masked {
        id: String,
        prediction: String,
        topk: Option<Vec<TopK>>,
    },
    Pair {
        id: String,
        logprob_original: f64,
        logprob_alternatives: Vec<f64>,
    },
    /// The model could not answer, e.g. the answer is outside its vocabulary.
    Skipped { id: String, reason: String },
}

impl Response {
    pub fn id(&self) -> &str {
        match self {
            Response::Masked { id, .. } | Response::Pair { id, .. } | Response::Skipped { id, .. } => id,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topk: Option<Vec<TopK>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logprob_original: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logprob_alternatives: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skip: Option<String>,
}

fn finite(x: f64, what: &str) -> std::result::Result<f64, String> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{what} must be finite"))
    }
}

impl ResponseRecord {
    fn from_response(r: &Response) -> Result<Self> {
        let rec = match r {
            Response::Masked { id, prediction, topk } => ResponseRecord {
                id: id.clone(),
                prediction: Some(prediction.clone()),
                topk: topk.clone(),
                ..Default::default()
            },
            Response::Pair {
                id,
                logprob_original,
                logprob_alternatives,
            } => ResponseRecord {
                id: id.clone(),
                logprob_original: Some(*logprob_original),
                logprob_alternatives: Some(logprob_alternatives.clone()),
                ..Default::default()
            },
            Response::Skipped { id, reason } => ResponseRecord {
                id: id.clone(),
                skip: Some(reason.clone()),
                ..Default::default()
            },
        };
        rec.to_response().map_err(Error::invalid)?;
        Ok(rec)
    }

    fn to_response(&self) -> std::result::Result<Response, String> {
        let masked = self.prediction.is_some() || self.topk.is_some();
        let pair = self.logprob_original.is_some() || self.logprob_alternatives.is_some();
        let id = self.id.clone();
        if let Some(reason) = &self.skip {
            if masked || pair {
                return Err("skipped record carries scores".into());
            }
            return Ok(Response::Skipped {
                id,
                reason: reason.clone(),
            });
        }
        match (masked, pair) {
            (true, false) => {
                let prediction = self.prediction.clone().ok_or("missing field `prediction`")?;
                if let Some(t) = &self.topk {
                    for e in t {
                        finite(e.score, "topk score")?;
                    }
                }
                Ok(Response::Masked {
                    id,
                    prediction,
                    topk: self.topk.clone(),
                })
            }
            (false, true) => {
                let o = self.logprob_original.ok_or("missing field `logprob_original`")?;
                let alts = self
                    .logprob_alternatives
                    .clone()
                    .ok_or("missing field `logprob_alternatives`")?;
                finite(o, "logprob_original")?;
                for &a in &alts {
                    finite(a, "logprob_alternatives")?;
                }
                Ok(Response::Pair {
                    id,
                    logprob_original: o,
                    logprob_alternatives: alts,
                })
            }
            (true, true) => Err("record mixes masked and minimal-pair fields".into()),
            (false, false) => Err("record has neither a prediction, log-probabilities nor a skip marker".into()),
        }
    }
}

pub fn write_responses<W: Write>(mut w: W, responses: &[Response]) -> Result<()> {
    writeln!(w, "{RESPONSE_HEADER}")?;
    for r in responses {
        let rec = ResponseRecord::from_response(r)?;
        let line = serde_json::to_string(&rec).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Read and schema-check a response file; errors carry the 1-based line.
pub fn read_responses<R: BufRead>(r: R) -> Result<Vec<Response>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let rec: ResponseRecord = serde_json::from_str(&line).map_err(|e| Error::parse(n + 1, e.to_string()))?;
        out.push(rec.to_response().map_err(|e| Error::parse(n + 1, e))?);
    }
    Ok(out)
}

/// One scored trial: a masked item or one minimal pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRow {
    pub item_id: String,
    pub correct: bool,
    pub tie: bool,
    pub perturb: PerturbKind,
    pub task: Task,
    pub target_pos: TargetPos,
    pub word_class: WordClass,
    pub correct_answer_id: String,
    pub model: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreStats {
    pub items: usize,
    pub rows: usize,
    pub skipped: usize,
    pub ties: usize,
}

/// Label attached to every row: which training condition produced the model
/// and a free-form model name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelLabel {
    pub perturb: PerturbKind,
    pub model: String,
}

fn join_ids<'a>(
    item_ids: impl Iterator<Item = &'a str>,
    responses: &'a [Response],
) -> Result<BTreeMap<&'a str, &'a Response>> {
    let items: BTreeSet<&str> = item_ids.collect();
    let mut map = BTreeMap::new();
    let mut dup = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    for r in responses {
        if !items.contains(r.id()) {
            unknown.insert(r.id());
        } else if map.insert(r.id(), r).is_some() {
            dup.insert(r.id());
        }
    }
    let missing: Vec<&str> = items.iter().filter(|i| !map.contains_key(*i)).copied().collect();
    let mut problems = Vec::new();
    for (what, ids) in [
        ("missing", missing),
        ("duplicate", dup.into_iter().collect()),
        ("unknown", unknown.into_iter().collect()),
    ] {
        if !ids.is_empty() {
            problems.push(format!("{what} response ids: {}", ids.join(", ")));
        }
    }
    if problems.is_empty() {
        Ok(map)
    } else {
        Err(Error::invalid(problems.join("; ")))
    }
}

/// Masked trials: correct when the prediction equals the answer, ignoring
/// case.
pub fn score_masked(
    items: &[MaskedItem],
    responses: &[Response],
    label: &ModelLabel,
) -> Result<(Vec<TrialRow>, ScoreStats)> {
    let map = join_ids(items.iter().map(|i| i.id.as_str()), responses)?;
    let mut rows = Vec::with_capacity(items.len());
    let mut st = ScoreStats {
        items: items.len(),
        ..Default::default()
    };
    for item in items {
        let correct = match map[item.id.as_str()] {
            Response::Masked { prediction, .. } => prediction.to_lowercase() == item.answer.to_lowercase(),
            Response::Skipped { .. } => {
                st.skipped += 1;
                continue;
            }
            Response::Pair { .. } => {
                return Err(Error::invalid(format!("{}: expected a masked prediction", item.id)));
            }
        };
        rows.push(TrialRow {
            item_id: item.id.clone(),
            correct,
            tie: false,
            perturb: label.perturb,
            task: Task::Masked,
            target_pos: item.target_pos,
            word_class: item.word_class,
            correct_answer_id: item.source_sentence_id.clone(),
            model: label.model.clone(),
        });
    }
    st.rows = rows.len();
    Ok((rows, st))
}

/// Minimal-pair trials: one row per alternative, correct only when the
/// original is strictly more probable.
pub fn score_pairs(
    items: &[MinimalPairItem],
    responses: &[Response],
    label: &ModelLabel,
) -> Result<(Vec<TrialRow>, ScoreStats)> {
    let map = join_ids(items.iter().map(|i| i.id.as_str()), responses)?;
    let mut rows = Vec::with_capacity(items.len() * 5);
    let mut st = ScoreStats {
        items: items.len(),
        ..Default::default()
    };
    for item in items {
        let (orig, alts) = match map[item.id.as_str()] {
            Response::Pair {
                logprob_original,
                logprob_alternatives,
                ..
            } => (*logprob_original, logprob_alternatives),
            Response::Skipped { .. } => {
                st.skipped += 1;
                continue;
            }
            Response::Masked { .. } => {
                return Err(Error::invalid(format!(
                    "{}: expected minimal-pair log-probabilities",
                    item.id
                )));
            }
        };
        if alts.len() != item.alternatives.len() {
            return Err(Error::invalid(format!(
                "{}: {} alternative scores for {} alternatives",
                item.id,
                alts.len(),
                item.alternatives.len()
            )));
        }
        for &a in alts {
            let tie = orig == a;
            st.ties += tie as usize;
            rows.push(TrialRow {
                item_id: item.id.clone(),
                correct: orig > a,
                tie,
                perturb: label.perturb,
                task: Task::MinimalPair,
                target_pos: item.target_pos,
                word_class: item.word_class,
                correct_answer_id: item.source_sentence_id.clone(),
                model: label.model.clone(),
            });
        }
    }
    st.rows = rows.len();
    Ok((rows, st))
}

pub fn accuracy(rows: &[TrialRow]) -> Option<f64> {
    if rows.is_empty() {
        None
    } else {
        Some(rows.iter().filter(|r| r.correct).count() as f64 / rows.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label() -> ModelLabel {
        ModelLabel {
            perturb: PerturbKind::Original,
            model: "ngram3".into(),
        }
    }

    fn masked(id: &str, answer: &str) -> MaskedItem {
        MaskedItem {
            id: id.into(),
            source_sentence_id: format!("test-{id}"),
            tokens: vec!["can".into(), "you".into(), answer.into()],
            mask_index: 2,
            answer: answer.into(),
            target_pos: TargetPos::Verb,
            word_class: classify_word(answer, TargetPos::Verb),
        }
    }

    fn pair(id: &str) -> MinimalPairItem {
        MinimalPairItem {
            id: id.into(),
            source_sentence_id: format!("test-{id}"),
            tokens: vec!["want".into()],
            target_index: 0,
            answer: "want".into(),
            alternatives: ["play", "push", "give", "stick", "listen"].map(String::from).to_vec(),
            target_pos: TargetPos::Verb,
            word_class: WordClass::Mental,
            bin: 2,
        }
    }

    fn predict(id: &str, p: &str) -> Response {
        Response::Masked {
            id: id.into(),
            prediction: p.into(),
            topk: None,
        }
    }

    fn scores(id: &str, o: f64, a: &[f64]) -> Response {
        Response::Pair {
            id: id.into(),
            logprob_original: o,
            logprob_alternatives: a.to_vec(),
        }
    }

    #[test]
    fn classify_listed_verbs() {
        assert_eq!(classify_word("think", TargetPos::Verb), WordClass::Mental);
        assert_eq!(classify_word("thought", TargetPos::Verb), WordClass::Mental);
        assert_eq!(classify_word("thinks", TargetPos::Verb), WordClass::Mental);
        assert_eq!(classify_word("push", TargetPos::Verb), WordClass::Physical);
        assert_eq!(classify_word("caught", TargetPos::Verb), WordClass::Physical);
        assert_eq!(classify_word("run", TargetPos::Verb), WordClass::Other);
        assert_eq!(classify_word("think", TargetPos::Noun), WordClass::Other);
    }

    #[test]
    fn inflection_table_targets_listed_lemmas() {
        let forms: BTreeSet<&str> = INFLECTIONS.iter().map(|(f, _)| *f).collect();
        assert_eq!(forms.len(), INFLECTIONS.len());
        for (_, l) in INFLECTIONS {
            assert!(MENTAL_VERBS.contains(&l) || PHYSICAL_VERBS.contains(&l), "{l}");
        }
    }

    #[test]
    fn masked_scoring() {
        let items = [masked("1", "tell"), masked("2", "tell")];
        let resp = [predict("2", "show"), predict("1", "Tell")];
        let (rows, st) = score_masked(&items, &resp, &label()).unwrap();
        assert!(rows[0].correct);
        assert!(!rows[1].correct);
        assert_eq!(rows[0].correct_answer_id, "test-1");
        assert_eq!(st.rows, 2);
    }

    #[test]
    fn id_mismatches_are_listed() {
        let items = [masked("1", "tell"), masked("2", "tell")];
        let err = score_masked(
            &items,
            &[predict("1", "tell"), predict("1", "x"), predict("9", "x")],
            &label(),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("missing response ids: 2"), "{err}");
        assert!(err.contains("duplicate response ids: 1"), "{err}");
        assert!(err.contains("unknown response ids: 9"), "{err}");
    }

    #[test]
    fn pair_scoring_is_strict() {
        let (rows, _) = score_pairs(
            &[pair("p")],
            &[scores("p", -10.0, &[-12.0, -11.0, -13.0, -12.5, -11.2])],
            &label(),
        )
        .unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.correct));
        let (rows, st) = score_pairs(
            &[pair("p")],
            &[scores("p", -10.0, &[-10.0, -9.0, -11.0, -10.0, -12.0])],
            &label(),
        )
        .unwrap();
        assert_eq!(
            rows.iter().map(|r| r.correct as u8).collect::<Vec<_>>(),
            [0, 0, 1, 0, 1]
        );
        assert_eq!(st.ties, 2);
        assert!(score_pairs(&[pair("p")], &[scores("p", -10.0, &[-11.0])], &label()).is_err());
    }

    #[test]
    fn skipped_responses_are_excluded_and_counted() {
        let items = [masked("1", "tell"), masked("2", "tell")];
        let resp = [
            predict("1", "tell"),
            Response::Skipped {
                id: "2".into(),
                reason: "answer not in vocabulary".into(),
            },
        ];
        let (rows, st) = score_masked(&items, &resp, &label()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(st.skipped, 1);
    }

    #[test]
    fn responses_round_trip() {
        let resp = vec![
            predict("a", "tell"),
            Response::Masked {
                id: "b".into(),
                prediction: "eat".into(),
                topk: Some(vec![TopK {
                    form: "eat".into(),
                    score: -0.1,
                }]),
            },
            scores("c", -10.5, &[-11.0, -0.1 - 0.2]),
            Response::Skipped {
                id: "d".into(),
                reason: "oov".into(),
            },
        ];
        let mut buf = Vec::new();
        write_responses(&mut buf, &resp).unwrap();
        assert_eq!(read_responses(&buf[..]).unwrap(), resp);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(RESPONSE_HEADER));
        assert!(
            text.contains(r#"{"id":"c","logprob_original":-10.5,"logprob_alternatives":[-11.0,-0.30000000000000004]}"#)
        );
    }

    #[test]
    fn malformed_responses_are_rejected() {
        for bad in [
            r#"{"id":"a"}"#,
            r#"{"id":"a","prediction":"x","logprob_original":-1.0}"#,
            r#"{"id":"a","logprob_original":-1.0}"#,
            r#"{"id":"a","logprob_original":null,"logprob_alternatives":[]}"#,
            r#"{"id":"a","prediction":"x","extra":1}"#,
            r#"{"id":"a","prediction":"x","skip":"oov"}"#,
        ] {
            let text = format!("{RESPONSE_HEADER}\n{bad}\n");
            match read_responses(text.as_bytes()) {
                Err(Error::Parse { line: 2, .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
        assert!(write_responses(Vec::new(), &[scores("x", f64::NEG_INFINITY, &[])]).is_err());
    }

    #[test]
    fn pair_scoring_ignores_constant_shifts() {
        let base = [-12.0, -9.5, -10.0, -30.0, -1.0];
        let (a, _) = score_pairs(&[pair("p")], &[scores("p", -10.0, &base)], &label()).unwrap();
        for shift in [-100.0, 0.5, 37.0] {
            let moved: Vec<f64> = base.iter().map(|x| x + shift).collect();
            let (b, _) = score_pairs(&[pair("p")], &[scores("p", -10.0 + shift, &moved)], &label()).unwrap();
            assert_eq!(a, b);
        }
    }
}
