//! Trial files: the scored rows of one model on one eval set.
//!
//! A metadata line carries the group fields, followed by CSV rows:
//!
//! ```text
//! # synboot trials v1 perturb=original task=minimal_pair target_pos=VERB chance=0.5 skipped=0
//! item_id,correct,tie,word_class,correct_answer_id,model
//! pair-verb-test-12,1,0,physical,test-12,ngram3
//! ```

use std::io::{BufRead, Write};

use super::{ConditionRows, TrialRow, WordClass};
use crate::{Error, Result};

pub const TRIALS_HEADER: &str = "# synboot trials v1";
const COLUMNS: [&str; 6] = ["item_id", "correct", "tie", "word_class", "correct_answer_id", "model"];

pub fn write_trials<W: Write>(mut w: W, group: &ConditionRows) -> Result<()> {
    writeln!(
        w,
        "{TRIALS_HEADER} perturb={} task={} target_pos={} chance={} skipped={}",
        group.perturb,
        group.task.as_str(),
        group.target_pos.as_str(),
        group.chance,
        group.skipped
    )?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(COLUMNS).map_err(csv_err)?;
    for r in &group.rows {
        if r.perturb != group.perturb || r.task != group.task || r.target_pos != group.target_pos {
            return Err(Error::invalid(format!(
                "{}: row does not belong to its group",
                r.item_id
            )));
        }
        csv.write_record([
            r.item_id.as_str(),
            if r.correct { "1" } else { "0" },
            if r.tie { "1" } else { "0" },
            r.word_class.as_str(),
            r.correct_answer_id.as_str(),
            r.model.as_str(),
        ])
        .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Stream(e),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

fn flag(v: &str, line: usize) -> Result<bool> {
    match v {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(Error::parse(line, format!("expected 0 or 1, got {v:?}"))),
    }
}

pub fn read_trials<R: BufRead>(mut r: R) -> Result<ConditionRows> {
    let mut meta = String::new();
    r.read_line(&mut meta)?;
    let rest = meta
        .trim_end()
        .strip_prefix(TRIALS_HEADER)
        .ok_or_else(|| Error::parse(1, "missing trials header"))?;
    let mut fields = std::collections::BTreeMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header field {kv:?}")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::parse(1, format!("header lacks {k}")))
    };
    let at_header = |e: Error| Error::parse(1, e.to_string());
    let perturb = get("perturb")?.parse().map_err(at_header)?;
    let task = get("task")?.parse().map_err(at_header)?;
    let target_pos = get("target_pos")?.parse().map_err(at_header)?;
    let chance: f64 = get("chance")?
        .parse()
        .map_err(|_| Error::parse(1, "bad chance value"))?;
    let skipped: usize = get("skipped")?
        .parse()
        .map_err(|_| Error::parse(1, "bad skipped count"))?;

    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = csv.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(Error::parse(2, "unexpected trial columns"));
    }
    let mut rows = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let line = i + 3;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != COLUMNS.len() {
            return Err(Error::parse(line, "wrong column count"));
        }
        rows.push(TrialRow {
            item_id: rec[0].to_string(),
            correct: flag(&rec[1], line)?,
            tie: flag(&rec[2], line)?,
            perturb,
            task,
            target_pos,
            word_class: rec[3]
                .parse::<WordClass>()
                .map_err(|e| Error::parse(line, e.to_string()))?,
            correct_answer_id: rec[4].to_string(),
            model: rec[5].to_string(),
        });
    }
    Ok(ConditionRows {
        perturb,
        task,
        target_pos,
        chance,
        rows,
        skipped,
    })
}
