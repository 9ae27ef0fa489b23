//! Accuracy tables, expected-ordering flags and fit tables, as CSV and
//! markdown.

use std::fmt::Write as _;
use std::io::Write;

use super::{accuracy, BootstrapResult, RegressionFit, TrialRow, WordClass};
use crate::evalgen::{TargetPos, Task};
use crate::perturb::PerturbKind;
use crate::Result;

/// Condition and subtype labels of a training perturbation.
pub fn condition_of(kind: PerturbKind) -> (&'static str, &'static str) {
    match kind {
        PerturbKind::Original => ("original", "-"),
        PerturbKind::ReplaceWordVerb => ("replace.word", "verb_mode"),
        PerturbKind::ReplaceWordNoun => ("replace.word", "noun_mode"),
        PerturbKind::Shuffle1gram => ("shuffle.order", "1gram"),
        PerturbKind::ShuffleNp => ("shuffle.order", "np"),
    }
}

/// Scored rows of one model on one eval set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRows {
    pub perturb: PerturbKind,
    pub task: Task,
    pub target_pos: TargetPos,
    /// 1/|candidates| for masked sets, 0.5 for minimal pairs.
    pub chance: f64,
    pub rows: Vec<TrialRow>,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub task: Task,
    pub perturb: PerturbKind,
    pub target_pos: TargetPos,
    /// "all", "mental" or "physical".
    pub word_class: &'static str,
    pub n: usize,
    pub correct: usize,
    pub ties: usize,
    pub chance: f64,
}

impl ReportRow {
    pub fn accuracy(&self) -> Option<f64> {
        (self.n > 0).then(|| self.correct as f64 / self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    pub task: Task,
    pub target_pos: TargetPos,
    pub expected: Vec<PerturbKind>,
    pub accuracies: Vec<f64>,
    pub holds: bool,
}

impl Ordering {
    pub fn describe(&self) -> String {
        self.expected
            .iter()
            .map(|&k| condition_of(k).0)
            .collect::<Vec<_>>()
            .join(" > ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub name: String,
    pub fit: RegressionFit,
    pub bootstrap: Option<BootstrapResult>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreReport {
    pub rows: Vec<ReportRow>,
    pub orderings: Vec<Ordering>,
    pub fits: Vec<FitSummary>,
}

fn expected_order(pos: TargetPos) -> [PerturbKind; 3] {
    match pos {
        TargetPos::Verb => [
            PerturbKind::Original,
            PerturbKind::ReplaceWordVerb,
            PerturbKind::Shuffle1gram,
        ],
        TargetPos::Noun => [
            PerturbKind::Original,
            PerturbKind::Shuffle1gram,
            PerturbKind::ReplaceWordNoun,
        ],
    }
}

pub fn build_report(groups: &[ConditionRows], fits: Vec<FitSummary>) -> ScoreReport {
    let mut rows = Vec::new();
    for g in groups {
        let classes: &[(&str, Option<WordClass>)] = match g.target_pos {
            TargetPos::Verb => &[
                ("all", None),
                ("mental", Some(WordClass::Mental)),
                ("physical", Some(WordClass::Physical)),
            ],
            TargetPos::Noun => &[("all", None)],
        };
        for &(name, class) in classes {
            let sel: Vec<&TrialRow> = g
                .rows
                .iter()
                .filter(|r| class.is_none_or(|c| r.word_class == c))
                .collect();
            rows.push(ReportRow {
                task: g.task,
                perturb: g.perturb,
                target_pos: g.target_pos,
                word_class: name,
                n: sel.len(),
                correct: sel.iter().filter(|r| r.correct).count(),
                ties: sel.iter().filter(|r| r.tie).count(),
                chance: g.chance,
            });
        }
    }
    let mut orderings = Vec::new();
    let mut keys: Vec<(Task, TargetPos)> = groups.iter().map(|g| (g.task, g.target_pos)).collect();
    keys.sort_by_key(|&(t, p)| (t.as_str(), p));
    keys.dedup();
    for (task, pos) in keys {
        let expected = expected_order(pos);
        let acc: Option<Vec<f64>> = expected
            .iter()
            .map(|&k| {
                groups
                    .iter()
                    .find(|g| g.task == task && g.target_pos == pos && g.perturb == k)
                    .and_then(|g| accuracy(&g.rows))
            })
            .collect();
        if let Some(accuracies) = acc {
            let holds = accuracies.windows(2).all(|w| w[0] > w[1]);
            orderings.push(Ordering {
                task,
                target_pos: pos,
                expected: expected.to_vec(),
                accuracies,
                holds,
            });
        }
    }
    ScoreReport { rows, orderings, fits }
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or_else(String::new, |a| format!("{a:.6}"))
}

impl ScoreReport {
    pub fn rows_for(&self, task: Task) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.task == task)
    }

    pub fn accuracy(&self, task: Task, pos: TargetPos, perturb: PerturbKind, word_class: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.task == task && r.target_pos == pos && r.perturb == perturb && r.word_class == word_class)
            .and_then(ReportRow::accuracy)
    }

    /// Columns: condition, subtype, target_pos, word_class, n, accuracy,
    /// chance.
    pub fn write_csv<W: Write>(&self, w: W, task: Task) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| crate::Error::invalid(e.to_string());
        out.write_record([
            "condition",
            "subtype",
            "target_pos",
            "word_class",
            "n",
            "accuracy",
            "chance",
        ])
        .map_err(err)?;
        for r in self.rows_for(task) {
            let (c, s) = condition_of(r.perturb);
            out.write_record([
                c,
                s,
                r.target_pos.as_str(),
                r.word_class,
                &r.n.to_string(),
                &fmt_acc(r.accuracy()),
                &format!("{:.8}", r.chance),
            ])
            .map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Columns: fit, term, estimate, se, p_boot.
    pub fn write_fits_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| crate::Error::invalid(e.to_string());
        out.write_record(["fit", "term", "estimate", "se", "p_boot"])
            .map_err(err)?;
        for f in &self.fits {
            for (j, term) in f.fit.terms.iter().enumerate() {
                let p = f
                    .bootstrap
                    .as_ref()
                    .map_or_else(String::new, |b| format!("{:.6}", b.p_boot[j]));
                out.write_record([
                    f.name.as_str(),
                    term,
                    &format!("{:.6}", f.fit.estimates[j]),
                    &format!("{:.6}", f.fit.se[j]),
                    &p,
                ])
                .map_err(err)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        for task in [Task::Masked, Task::MinimalPair] {
            let rows: Vec<&ReportRow> = self.rows_for(task).collect();
            if rows.is_empty() {
                continue;
            }
            let _ = writeln!(s, "## {task}\n");
            let _ = writeln!(
                s,
                "| condition | subtype | target_pos | word_class | n | accuracy | chance | ties |"
            );
            let _ = writeln!(s, "|---|---|---|---|---:|---:|---:|---:|");
            for r in rows {
                let (c, st) = condition_of(r.perturb);
                let _ = writeln!(
                    s,
                    "| {c} | {st} | {} | {} | {} | {} | {:.8} | {} |",
                    r.target_pos,
                    r.word_class,
                    r.n,
                    fmt_acc(r.accuracy()),
                    r.chance,
                    r.ties
                );
            }
            let _ = writeln!(s);
        }
        if !self.orderings.is_empty() {
            let _ = writeln!(s, "## Expected orderings\n");
            let _ = writeln!(s, "| task | target_pos | ordering | accuracies | holds |");
            let _ = writeln!(s, "|---|---|---|---|---|");
            for o in &self.orderings {
                let acc: Vec<String> = o.accuracies.iter().map(|a| format!("{a:.4}")).collect();
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} |",
                    o.task,
                    o.target_pos,
                    o.describe(),
                    acc.join(" / "),
                    o.holds
                );
            }
            let _ = writeln!(s);
        }
        for f in &self.fits {
            let _ = writeln!(s, "## Fit: {} (`{}`)\n", f.name, f.fit.formula.as_str());
            let _ = writeln!(
                s,
                "Fixed-effects logistic fit; the random intercept for correct_answer_id is approximated by a cluster bootstrap over correct_answer_id. n = {}, iterations = {}, gradient norm = {:.2e}.\n",
                f.fit.n, f.fit.iterations, f.fit.gradient_norm
            );
            if let Some(w) = f.fit.warning() {
                let _ = writeln!(s, "**Warning:** {w}\n");
            }
            let _ = writeln!(s, "| term | estimate | se | p_wald | ci_2.5 | ci_97.5 | p_boot |");
            let _ = writeln!(s, "|---|---:|---:|---:|---:|---:|---:|");
            for (j, term) in f.fit.terms.iter().enumerate() {
                let (lo, hi, p) = match &f.bootstrap {
                    Some(b) => (
                        format!("{:.4}", b.lower[j]),
                        format!("{:.4}", b.upper[j]),
                        format!("{:.4}", b.p_boot[j]),
                    ),
                    None => Default::default(),
                };
                let _ = writeln!(
                    s,
                    "| {term} | {:.4} | {:.4} | {:.4} | {lo} | {hi} | {p} |",
                    f.fit.estimates[j], f.fit.se[j], f.fit.p_wald[j]
                );
            }
            if let Some(b) = &f.bootstrap {
                let _ = writeln!(s, "\nBootstrap: {} of {} resamples usable.", b.usable, b.replicates);
            }
            let _ = writeln!(s);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(perturb: PerturbKind, pos: TargetPos, outcomes: &[(WordClass, bool)]) -> ConditionRows {
        ConditionRows {
            perturb,
            task: Task::MinimalPair,
            target_pos: pos,
            chance: 0.5,
            rows: outcomes
                .iter()
                .enumerate()
                .map(|(i, &(c, ok))| TrialRow {
                    item_id: format!("i{i}"),
                    correct: ok,
                    tie: false,
                    perturb,
                    task: Task::MinimalPair,
                    target_pos: pos,
                    word_class: c,
                    correct_answer_id: format!("s{i}"),
                    model: "m".into(),
                })
                .collect(),
            skipped: 0,
        }
    }

    #[test]
    fn empty_report() {
        let r = build_report(&[], Vec::new());
        assert!(r.rows.is_empty() && r.orderings.is_empty());
        let mut buf = Vec::new();
        r.write_csv(&mut buf, Task::Masked).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "condition,subtype,target_pos,word_class,n,accuracy,chance\n"
        );
    }

    #[test]
    fn verb_and_noun_orderings() {
        use WordClass::*;
        let g = vec![
            rows(
                PerturbKind::Original,
                TargetPos::Verb,
                &[(Mental, true), (Physical, true), (Other, false)],
            ),
            rows(
                PerturbKind::ReplaceWordVerb,
                TargetPos::Verb,
                &[(Mental, true), (Physical, false), (Other, false)],
            ),
            rows(
                PerturbKind::Shuffle1gram,
                TargetPos::Verb,
                &[(Mental, false), (Physical, false), (Other, false)],
            ),
            rows(PerturbKind::Original, TargetPos::Noun, &[(Other, true), (Other, true)]),
            rows(
                PerturbKind::Shuffle1gram,
                TargetPos::Noun,
                &[(Other, true), (Other, false)],
            ),
            rows(
                PerturbKind::ReplaceWordNoun,
                TargetPos::Noun,
                &[(Other, true), (Other, false)],
            ),
        ];
        let r = build_report(&g, Vec::new());
        assert_eq!(r.rows.len(), 3 * 3 + 3);
        assert_eq!(r.orderings.len(), 2);
        let verb = r.orderings.iter().find(|o| o.target_pos == TargetPos::Verb).unwrap();
        assert!(verb.holds);
        assert_eq!(verb.describe(), "original > replace.word > shuffle.order");
        let noun = r.orderings.iter().find(|o| o.target_pos == TargetPos::Noun).unwrap();
        assert!(!noun.holds);
        assert_eq!(noun.describe(), "original > shuffle.order > replace.word");
        assert_eq!(
            r.accuracy(
                Task::MinimalPair,
                TargetPos::Verb,
                PerturbKind::ReplaceWordVerb,
                "physical"
            ),
            Some(0.0)
        );
        let mut buf = Vec::new();
        r.write_csv(&mut buf, Task::MinimalPair).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("replace.word,verb_mode,VERB,all,3,0.333333,0.50000000\n"));
        assert!(r.to_markdown().contains("| original > replace.word > shuffle.order |"));
    }

    #[test]
    fn report_accuracy_is_mean_of_rows() {
        use WordClass::*;
        let g = rows(
            PerturbKind::Original,
            TargetPos::Verb,
            &[(Mental, true), (Mental, false), (Physical, true), (Other, true)],
        );
        let r = build_report(std::slice::from_ref(&g), Vec::new());
        let mean = g.rows.iter().filter(|x| x.correct).count() as f64 / g.rows.len() as f64;
        assert_eq!(r.rows[0].accuracy(), Some(mean));
        assert_eq!(r.rows[1].accuracy(), Some(0.5));
        assert_eq!(r.rows[2].accuracy(), Some(1.0));
    }
}
