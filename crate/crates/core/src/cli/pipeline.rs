//! The full experiment as a sequence of stage commands in one run directory.
//!
//! ```text
//! <run>/corpus/{gold.conllu,train.txt,test.txt}   synthesized unless corpus_dir is set
//! <run>/tagger.model
//! <run>/corpus/{train,test}.conllu
//! <run>/train/<condition>.conllu                  plus freq.tsv from the first condition
//! <run>/models/<condition>.ngram                   plus vocab.txt from original
//! <run>/eval/<task>-<POS>.jsonl
//! <run>/responses/<condition>/<task>-<POS>.jsonl
//! <run>/trials/<condition>/<task>-<POS>.csv
//! <run>/report/{masked.csv,minimal_pair.csv,fits.csv,report.md}
//! <run>/manifests/NN-<stage>.jsonl                one replayable manifest per stage
//! <run>/manifest.jsonl
//! ```

use std::path::{Path, PathBuf};

use anyhow::bail;

use super::commands::{Command, Outcome};
use super::config::Config;
use super::execute;
use super::manifest::{unix_now, Counter, FileHash, RunManifest};
use crate::evalgen::{TargetPos, Task};
use crate::perturb::PerturbKind;
use crate::Error;

/// Keys the pipeline reads; every stage inherits them.
pub const PIPELINE_KEYS: &[&str] = &[
    "seed",
    "output",
    "corpus_dir",
    "train_sentences",
    "test_sentences",
    "gold_sentences",
    "epochs",
    "max_tokens",
    "granularity",
    "conditions",
    "order",
    "discount",
    "unk_threshold",
    "n_alt",
    "min_len",
    "count_punct",
    "bins",
    "topk",
    "bootstrap",
    "model_name",
];

pub const EVAL_SETS: [(Task, TargetPos); 4] = [
    (Task::MinimalPair, TargetPos::Verb),
    (Task::MinimalPair, TargetPos::Noun),
    (Task::Masked, TargetPos::Verb),
    (Task::Masked, TargetPos::Noun),
];

pub fn eval_name(task: Task, pos: TargetPos) -> String {
    format!("{}-{}", task.as_str(), pos.as_str())
}

pub fn conditions(cfg: &Config) -> anyhow::Result<Vec<PerturbKind>> {
    let mut kinds = Vec::new();
    for c in cfg.list("conditions") {
        let k: PerturbKind = c
            .parse()
            .map_err(|e: Error| Error::Usage(format!("--conditions: {e}")))?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if !kinds.contains(&PerturbKind::Original) {
        bail!(Error::Usage("--conditions must include original".into()));
    }
    kinds.sort();
    Ok(kinds)
}

struct Run<'a> {
    base: &'a Config,
    dir: PathBuf,
    step: usize,
    manifest: RunManifest,
}

impl Run<'_> {
    fn stage(&mut self, cmd: Command, tag: &str, settings: &[(&str, String)]) -> anyhow::Result<Outcome> {
        self.step += 1;
        let name = if tag.is_empty() {
            cmd.name().to_string()
        } else {
            format!("{}-{tag}", cmd.name())
        };
        let mut cfg = self.base.clone().with(
            "manifest",
            self.dir
                .join(format!("manifests/{:02}-{name}.jsonl", self.step))
                .display(),
        );
        for (k, v) in settings {
            cfg.set(k, v.clone())?;
        }
        log::info!("stage {:02} {name}", self.step);
        let (_, out) = execute(cmd, &cfg)?;
        let mpath = self.dir.join("manifest.jsonl");
        for p in &out.outputs {
            let fh = FileHash::of(p, &mpath)?;
            if !self.manifest.outputs.iter().any(|f| f.path == fh.path) {
                self.manifest.outputs.push(fh);
            }
        }
        for (k, v) in &out.counters {
            self.manifest.counters.push(Counter {
                stage: name.clone(),
                name: k.clone(),
                value: v.clone(),
            });
        }
        for s in &out.streams {
            if !self.manifest.header.streams.contains(s) {
                self.manifest.header.streams.push(s.clone());
            }
        }
        Ok(out)
    }

    fn path(&self, rel: &str) -> String {
        self.dir.join(rel).display().to_string()
    }
}

/// Run every stage; returns the path of the top-level manifest.
pub fn run_pipeline(cfg: &Config) -> anyhow::Result<PathBuf> {
    let dir = cfg.path("output")?;
    let kinds = conditions(cfg)?;
    let seed: u64 = cfg.parsed("seed")?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let dir = dir.canonicalize().map_err(|e| Error::io(&dir, e))?;
    let mut run = Run {
        base: cfg,
        dir: dir.clone(),
        step: 0,
        manifest: RunManifest::new("pipeline", cfg.snapshot(PIPELINE_KEYS), seed),
    };

    let (gold, train_txt, test_txt) = match cfg.opt_path("corpus_dir") {
        Some(src) => {
            let files = ["gold.conllu", "train.txt", "test.txt"].map(|f| src.join(f));
            for f in &files {
                if !f.exists() {
                    bail!(Error::Usage(format!("--corpus-dir: missing {}", f.display())));
                }
                run.manifest.inputs.push(FileHash::of(f, &dir.join("manifest.jsonl"))?);
            }
            let [g, tr, te] = files.map(|f| f.display().to_string());
            (g, tr, te)
        }
        None => {
            let specs = [
                ("gold", "gold_sentences", "conllu", "corpus/gold.conllu"),
                ("train", "train_sentences", "raw", "corpus/train.txt"),
                ("test", "test_sentences", "raw", "corpus/test.txt"),
            ];
            let mut paths = Vec::new();
            for (split, n_key, format, rel) in specs {
                let n = cfg.get(n_key).to_string();
                run.stage(
                    Command::Synth,
                    split,
                    &[
                        ("split", split.into()),
                        ("sentences", n),
                        ("format", format.into()),
                        ("output", run.path(rel)),
                    ],
                )?;
                paths.push(run.path(rel));
            }
            let [g, tr, te]: [String; 3] = paths.try_into().expect("three corpus files");
            (g, tr, te)
        }
    };

    let tagger = run.path("tagger.model");
    run.stage(Command::TrainTagger, "", &[("input", gold), ("output", tagger.clone())])?;
    for (split, raw) in [("train", train_txt), ("test", test_txt)] {
        run.stage(
            Command::Ingest,
            split,
            &[
                ("input", raw),
                ("output", run.path(&format!("corpus/{split}.conllu"))),
                ("split", split.into()),
                ("format", "raw".into()),
                ("tagger", tagger.clone()),
            ],
        )?;
    }

    let train = run.path("corpus/train.conllu");
    let test = run.path("corpus/test.conllu");
    let mut vocab_size = 0;
    for (i, &kind) in kinds.iter().enumerate() {
        let corpus = run.path(&format!("train/{kind}.conllu"));
        let mut settings = vec![
            ("input", train.clone()),
            ("output", corpus.clone()),
            ("split", "train".into()),
            ("kind", kind.to_string()),
        ];
        if i == 0 {
            settings.push(("freq_output", run.path("freq.tsv")));
        }
        run.stage(Command::Perturb, kind.as_str(), &settings)?;
        let mut settings = vec![("input", corpus), ("output", run.path(&format!("models/{kind}.ngram")))];
        if kind == PerturbKind::Original {
            settings.push(("vocab_output", run.path("vocab.txt")));
        }
        let out = run.stage(Command::NgramTrain, kind.as_str(), &settings)?;
        if kind == PerturbKind::Original {
            vocab_size = out.counter("vocab_size").and_then(|v| v.as_u64()).unwrap_or(0);
        }
    }

    for (task, pos) in EVAL_SETS {
        let name = eval_name(task, pos);
        run.stage(
            Command::BuildEval,
            &name,
            &[
                ("input", test.clone()),
                ("output", run.path(&format!("eval/{name}.jsonl"))),
                ("split", "test".into()),
                ("task", task.as_str().into()),
                ("target_pos", pos.as_str().into()),
                ("vocab", run.path("vocab.txt")),
            ],
        )?;
    }

    let mut trials = Vec::new();
    for &kind in &kinds {
        for (task, pos) in EVAL_SETS {
            let name = eval_name(task, pos);
            let tag = format!("{kind}-{name}");
            let eval = run.path(&format!("eval/{name}.jsonl"));
            let responses = run.path(&format!("responses/{kind}/{name}.jsonl"));
            let out = run.stage(
                Command::NgramRespond,
                &tag,
                &[
                    ("model", run.path(&format!("models/{kind}.ngram"))),
                    ("eval", eval.clone()),
                    ("output", responses.clone()),
                ],
            )?;
            let candidates = out.counter("candidates").and_then(|v| v.as_u64()).unwrap_or(vocab_size);
            let t = run.path(&format!("trials/{kind}/{name}.csv"));
            run.stage(
                Command::Score,
                &tag,
                &[
                    ("eval", eval),
                    ("responses", responses),
                    ("output", t.clone()),
                    ("perturb", kind.to_string()),
                    ("candidates", candidates.to_string()),
                ],
            )?;
            trials.push(t);
        }
    }

    run.stage(
        Command::Report,
        "",
        &[("trials", trials.join(",")), ("output", run.path("report"))],
    )?;

    run.manifest.header.finished_unix = unix_now();
    let mpath = dir.join("manifest.jsonl");
    run.manifest.write(&mpath)?;
    Ok(mpath)
}

/// Directory a pipeline run reports into.
pub fn report_dir(run: &Path) -> PathBuf {
    run.join("report")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditions_require_original_and_sort() {
        let cfg = Config::default().with("conditions", "shuffle_np,original,shuffle_np");
        assert_eq!(
            conditions(&cfg).unwrap(),
            [PerturbKind::Original, PerturbKind::ShuffleNp]
        );
        let cfg = Config::default().with("conditions", "shuffle_np");
        assert!(conditions(&cfg).is_err());
        let cfg = Config::default().with("conditions", "original,sideways");
        assert!(conditions(&cfg).is_err());
    }
}
