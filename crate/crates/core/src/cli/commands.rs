//! Stage commands. Each reads its settings from a [`Config`], writes its
//! outputs and reports what it read, wrote and counted.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde_json::Value;

use super::config::Config;
use crate::corpus::{
    ingest_conllu, ingest_raw, write_conllu, AnnotatedSentence, CorpusSplit, IngestOptions, SplitName,
};
use crate::evalgen::{
    build_masked_set, build_minimal_pairs, masked_items, pair_items, read_eval_records, write_eval_records, BuildStats,
    EvalItem, PairOptions, TargetPos, Task, VocabPredicate,
};
use crate::lexicon::{bin_by_log_rank, build_frequency_table, BinTable, FrequencyTable, Granularity};
use crate::ngram::{train_ngram, NGramModel, NGramOptions};
use crate::perturb::{perturb_corpus, PerturbKind, PerturbationSpec};
use crate::score::{
    build_report, cluster_bootstrap, fit_logistic, read_responses, read_trials, score_masked, score_pairs,
    write_responses, write_trials, ConditionRows, FitSummary, Formula, ModelLabel, Response, TopK,
};
use crate::tagger::{main_verb_agreement, train_tagger, TaggerModel};
use crate::{synth, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    TrainTagger,
    Ingest,
    Tag,
    Perturb,
    BuildEval,
    NgramTrain,
    NgramRespond,
    Score,
    Report,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Synth,
        Command::TrainTagger,
        Command::Ingest,
        Command::Tag,
        Command::Perturb,
        Command::BuildEval,
        Command::NgramTrain,
        Command::NgramRespond,
        Command::Score,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::TrainTagger => "train-tagger",
            Command::Ingest => "ingest",
            Command::Tag => "tag",
            Command::Perturb => "perturb",
            Command::BuildEval => "build-eval",
            Command::NgramTrain => "ngram-train",
            Command::NgramRespond => "ngram-respond",
            Command::Score => "score",
            Command::Report => "report",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Synth => "Generate synthetic child-directed speech (raw text or gold CoNLL-U)",
            Command::TrainTagger => "Train the averaged-perceptron tagger on gold CoNLL-U",
            Command::Ingest => "Tokenize and tag raw utterances, or normalize CoNLL-U",
            Command::Tag => "Re-tag a CoNLL-U corpus",
            Command::Perturb => "Apply one perturbation to a corpus split",
            Command::BuildEval => "Build a masked or minimal-pair eval set",
            Command::NgramTrain => "Train a Kneser-Ney n-gram model",
            Command::NgramRespond => "Answer an eval set with an n-gram model",
            Command::Score => "Score a response file against its eval set",
            Command::Report => "Accuracy tables, ordering checks and regression fits",
        }
    }

    /// Config keys the command reads besides `seed`, `threads` and `manifest`.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Synth => &["output", "split", "sentences", "format"],
            Command::TrainTagger => &["input", "output", "epochs"],
            Command::Ingest => &["input", "output", "split", "format", "tagger", "max_tokens"],
            Command::Tag => &["input", "output", "split", "tagger"],
            Command::Perturb => &[
                "input",
                "output",
                "split",
                "kind",
                "granularity",
                "freq_table",
                "freq_output",
            ],
            Command::BuildEval => &[
                "input",
                "output",
                "split",
                "task",
                "target_pos",
                "vocab",
                "n_alt",
                "min_len",
                "count_punct",
                "bins",
            ],
            Command::NgramTrain => &["input", "output", "order", "discount", "unk_threshold", "vocab_output"],
            Command::NgramRespond => &["model", "eval", "output", "topk"],
            Command::Score => &["eval", "responses", "output", "perturb", "model_name", "candidates"],
            Command::Report => &["trials", "output", "bootstrap"],
        }
    }

    /// Whether `output` names a directory rather than a file.
    pub fn writes_dir(self) -> bool {
        matches!(self, Command::Report)
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown command {s:?}")))
    }
}

/// What a stage touched.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub counters: Vec<(String, Value)>,
    pub streams: Vec<String>,
}

impl Outcome {
    fn count(&mut self, name: &str, v: impl Into<Value>) {
        self.counters.push((name.to_string(), v.into()));
    }

    pub fn counter(&self, name: &str) -> Option<&Value> {
        self.counters.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

pub fn run_stage(cmd: Command, cfg: &Config) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Synth => synth(cfg),
        Command::TrainTagger => train_tagger_cmd(cfg),
        Command::Ingest => ingest(cfg),
        Command::Tag => tag(cfg),
        Command::Perturb => perturb(cfg),
        Command::BuildEval => build_eval(cfg),
        Command::NgramTrain => ngram_train(cfg),
        Command::NgramRespond => ngram_respond(cfg),
        Command::Score => score(cfg),
        Command::Report => report(cfg),
    }
}

fn reader(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f))
}

fn writer(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::new(f))
}

/// Write through `f`, then flush, naming the file on failure.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> crate::Result<()>) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_file<T>(path: &Path, f: impl FnOnce(BufReader<File>) -> crate::Result<T>) -> anyhow::Result<T> {
    let r = reader(path)?;
    f(r).with_context(|| format!("reading {}", path.display()))
}

fn split_name(cfg: &Config) -> anyhow::Result<SplitName> {
    Ok(SplitName::from_str(cfg.get("split")).map_err(|e| Error::Usage(e.to_string()))?)
}

fn usage<T: FromStr<Err = Error>>(cfg: &Config, key: &str) -> anyhow::Result<T> {
    Ok(cfg
        .get(key)
        .parse::<T>()
        .map_err(|e| Error::Usage(format!("--{}: {e}", super::config::flag_name(key))))?)
}

fn read_conllu(path: &Path, split: SplitName) -> anyhow::Result<Vec<AnnotatedSentence>> {
    read_file(path, |r| ingest_conllu(r, split))
}

fn synth(cfg: &Config) -> anyhow::Result<Outcome> {
    let out = cfg.path("output")?;
    let n: usize = cfg.parsed("sentences")?;
    let seed: u64 = cfg.parsed("seed")?;
    let split = cfg.get("split");
    if split.is_empty() {
        bail!(Error::Usage("--split is required".into()));
    }
    let label = format!("synth/{split}");
    let sents = synth::generate(seed, &label, n, split);
    match cfg.get("format") {
        "" | "raw" => write_file(&out, |w| {
            for s in &sents {
                writeln!(w, "{}", synth::render_raw(s))?;
            }
            Ok(())
        })?,
        "conllu" => write_file(&out, |w| write_conllu(w, &sents))?,
        other => bail!(Error::Usage(format!("--format: expected raw or conllu, got {other:?}"))),
    }
    let mut o = Outcome {
        outputs: vec![out],
        streams: vec![label],
        ..Default::default()
    };
    o.count("sentences", sents.len());
    o.count("tokens", sents.iter().map(|s| s.len()).sum::<usize>());
    o.count("longer_than_10", sents.iter().filter(|s| s.len() > 10).count());
    Ok(o)
}

fn train_tagger_cmd(cfg: &Config) -> anyhow::Result<Outcome> {
    let input = cfg.path("input")?;
    let out = cfg.path("output")?;
    let epochs: usize = cfg.parsed("epochs")?;
    let seed: u64 = cfg.parsed("seed")?;
    let gold = read_conllu(&input, SplitName::Train)?;
    let model = train_tagger(&gold, epochs, seed)?;
    write_file(&out, |w| model.write(w))?;
    let mut o = Outcome {
        inputs: vec![input],
        outputs: vec![out],
        streams: vec!["tagger/epoch".into()],
        ..Default::default()
    };
    o.count("sentences", gold.len());
    o.count("tokens", gold.iter().map(|s| s.len()).sum::<usize>());
    o.count("train_accuracy", model.accuracy(&gold));
    let (agree, compared) = main_verb_agreement(&gold);
    if compared > 0 {
        let rate = agree as f64 / compared as f64;
        log::info!("main verb: heuristic agrees with the dependency root on {agree} of {compared} gold sentences");
        o.count("main_verb_compared", compared);
        o.count("main_verb_heuristic_agreement", rate);
    }
    Ok(o)
}

fn load_tagger(cfg: &Config) -> anyhow::Result<(PathBuf, TaggerModel)> {
    let path = cfg.path("tagger")?;
    let model = read_file(&path, TaggerModel::read)?;
    Ok((path, model))
}

fn ingest(cfg: &Config) -> anyhow::Result<Outcome> {
    let input = cfg.path("input")?;
    let out = cfg.path("output")?;
    let split = split_name(cfg)?;
    let mut o = Outcome::default();
    let sents = match cfg.get("format") {
        "" | "raw" => {
            let (tpath, tagger) = load_tagger(cfg)?;
            let opts = IngestOptions {
                max_tokens: cfg.parsed("max_tokens")?,
            };
            let (sents, st) = read_file(&input, |r| ingest_raw(r, split, &tagger, &opts))?;
            o.inputs.push(tpath);
            o.count("lines", st.lines);
            o.count("skipped_empty", st.skipped_empty);
            o.count("skipped_too_long", st.skipped_too_long);
            sents
        }
        "conllu" => read_conllu(&input, split)?,
        other => bail!(Error::Usage(format!("--format: expected raw or conllu, got {other:?}"))),
    };
    write_file(&out, |w| write_conllu(w, &sents))?;
    o.inputs.insert(0, input);
    o.outputs.push(out);
    o.count("sentences", sents.len());
    o.count("tokens", sents.iter().map(|s| s.len()).sum::<usize>());
    o.count("with_main_verb", sents.iter().filter(|s| s.main_verb.is_some()).count());
    Ok(o)
}

fn tag(cfg: &Config) -> anyhow::Result<Outcome> {
    let input = cfg.path("input")?;
    let out = cfg.path("output")?;
    let split = split_name(cfg)?;
    let (tpath, tagger) = load_tagger(cfg)?;
    let gold = read_conllu(&input, split)?;
    let tagged: Vec<AnnotatedSentence> = gold
        .par_iter()
        .map(|s| tagger.annotate(s.id.clone(), s.forms().into_iter().map(String::from).collect()))
        .collect();
    write_file(&out, |w| write_conllu(w, &tagged))?;
    let mut o = Outcome {
        inputs: vec![input, tpath],
        outputs: vec![out],
        ..Default::default()
    };
    o.count("sentences", tagged.len());
    o.count("upos_agreement_with_input", tagger.accuracy(&gold));
    Ok(o)
}

fn granularity(cfg: &Config, sents: &[AnnotatedSentence]) -> anyhow::Result<Granularity> {
    Ok(match cfg.get("granularity") {
        "auto" => Granularity::detect(sents),
        g => g
            .parse()
            .map_err(|e: Error| Error::Usage(format!("--granularity: {e}")))?,
    })
}

fn perturb(cfg: &Config) -> anyhow::Result<Outcome> {
    let input = cfg.path("input")?;
    let out = cfg.path("output")?;
    let split = split_name(cfg)?;
    let kind: PerturbKind = usage(cfg, "kind")?;
    let seed: u64 = cfg.parsed("seed")?;
    let sents = read_conllu(&input, split)?;
    let gran = granularity(cfg, &sents)?;
    let mut o = Outcome {
        inputs: vec![input],
        ..Default::default()
    };
    let table = match cfg.opt_path("freq_table") {
        Some(p) => {
            let t = read_file(&p, |r| FrequencyTable::read_tsv(r, gran))?;
            o.inputs.push(p);
            t
        }
        None => build_frequency_table(&sents, gran)?,
    };
    let corpus = CorpusSplit::new(split, sents)?;
    let spec = PerturbationSpec {
        kind,
        seed,
        granularity: gran,
    };
    let (perturbed, st) = perturb_corpus(&corpus, &spec, &table).with_context(|| format!("perturbing {split}"))?;
    write_file(&out, |w| write_conllu(w, &perturbed.sentences))?;
    o.outputs.push(out);
    if let Some(p) = cfg.opt_path("freq_output") {
        write_file(&p, |w| table.write_tsv(w, None))?;
        o.outputs.push(p);
    }
    o.streams.push(format!("perturb/{split}"));
    o.count("granularity", gran.as_str());
    o.count("sentences", st.sentences);
    o.count("tokens", st.tokens);
    o.count("replaced", st.replaced);
    o.count("no_ops", st.no_ops);
    o.count("errors", st.errors);
    Ok(o)
}

fn count_build(o: &mut Outcome, st: &BuildStats) {
    o.count("sentences", st.sentences);
    o.count("items", st.items);
    o.count("skipped_no_target", st.no_target);
    o.count("skipped_not_in_vocab", st.not_in_vocab);
    o.count("skipped_too_short", st.too_short);
    o.count("skipped_unbinned", st.unbinned);
    o.count("skipped_insufficient_bin", st.insufficient_bin);
}

fn build_eval(cfg: &Config) -> anyhow::Result<Outcome> {
    let input = cfg.path("input")?;
    let out = cfg.path("output")?;
    let split = split_name(cfg)?;
    let task: Task = usage(cfg, "task")?;
    let pos: TargetPos = usage(cfg, "target_pos")?;
    let seed: u64 = cfg.parsed("seed")?;
    let sents = read_conllu(&input, split)?;
    let corpus = CorpusSplit::new(split, sents)?;
    let mut o = Outcome {
        inputs: vec![input],
        ..Default::default()
    };
    let items: Vec<EvalItem> = match task {
        Task::Masked => {
            let vpath = cfg.path("vocab")?;
            let vocab = read_file(&vpath, VocabPredicate::read)?;
            o.inputs.push(vpath);
            let (items, st) = build_masked_set(&corpus, pos, &vocab, seed)?;
            count_build(&mut o, &st);
            o.streams.push(format!("evalgen/masked/{}", pos.as_str()));
            items.into_iter().map(EvalItem::Masked).collect()
        }
        Task::MinimalPair => {
            let k: usize = cfg.parsed("bins")?;
            let table = build_frequency_table(&corpus.sentences, Granularity::Coarse)?;
            let bins: BinTable = bin_by_log_rank(&table, pos.as_str(), k)?;
            let opts = PairOptions {
                n_alt: cfg.parsed("n_alt")?,
                min_len: cfg.parsed("min_len")?,
                count_punct: cfg.flag("count_punct")?,
                seed,
            };
            let (items, st) = build_minimal_pairs(&corpus, pos, &bins, &opts);
            count_build(&mut o, &st);
            o.streams.push(format!("evalgen/minimal_pair/{}", pos.as_str()));
            o.count("binning", "equal-width ln(rank) over [0, ln N], coarse PoS");
            o.count("alternative_sampling", "uniform over same-bin types");
            items.into_iter().map(EvalItem::MinimalPair).collect()
        }
    };
    write_file(&out, |w| write_eval_records(w, &items))?;
    o.outputs.push(out);
    Ok(o)
}

fn forms_of(sents: &[AnnotatedSentence]) -> Vec<Vec<String>> {
    sents
        .iter()
        .map(|s| s.tokens.iter().map(|t| t.form.clone()).collect())
        .collect()
}

fn ngram_train(cfg: &Config) -> anyhow::Result<Outcome> {
    let input = cfg.path("input")?;
    let out = cfg.path("output")?;
    let opts = NGramOptions {
        order: cfg.parsed("order")?,
        discount: cfg.parsed("discount")?,
        unk_threshold: cfg.parsed("unk_threshold")?,
    };
    opts.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let sents = read_conllu(&input, SplitName::Train)?;
    let model = train_ngram(&forms_of(&sents), opts)?;
    write_file(&out, |w| model.write(w))?;
    let mut o = Outcome {
        inputs: vec![input],
        outputs: vec![out],
        ..Default::default()
    };
    if let Some(p) = cfg.opt_path("vocab_output") {
        write_file(&p, |w| {
            for f in model.vocabulary() {
                writeln!(w, "{f}")?;
            }
            Ok(())
        })?;
        o.outputs.push(p);
    }
    o.count("sentences", sents.len());
    o.count("vocab_size", model.vocab_size());
    Ok(o)
}

/// Best candidate by score, ties to the lexicographically smallest form.
fn best(cands: &[String], scores: &[f64]) -> usize {
    let mut bi = 0;
    for i in 1..cands.len() {
        if scores[i] > scores[bi] || (scores[i] == scores[bi] && cands[i] < cands[bi]) {
            bi = i;
        }
    }
    bi
}

fn ngram_respond(cfg: &Config) -> anyhow::Result<Outcome> {
    let mpath = cfg.path("model")?;
    let epath = cfg.path("eval")?;
    let out = cfg.path("output")?;
    let topk: usize = cfg.parsed("topk")?;
    let model = read_file(&mpath, NGramModel::read)?;
    let items = read_file(&epath, read_eval_records)?;
    let cands: Vec<String> = model.vocabulary().map(String::from).collect();
    let responses: Vec<Response> = items
        .par_iter()
        .map(|item| -> crate::Result<Response> {
            Ok(match item {
                EvalItem::Masked(m) => {
                    if !model.contains(&m.answer) {
                        Response::Skipped {
                            id: m.id.clone(),
                            reason: "answer_oov".into(),
                        }
                    } else {
                        let scores = model.masked_scores(&m.tokens, m.mask_index, &cands)?;
                        let bi = best(&cands, &scores);
                        let topk = (topk > 0).then(|| {
                            let mut order: Vec<usize> = (0..cands.len()).collect();
                            order.sort_by(|&a, &b| {
                                scores[b].total_cmp(&scores[a]).then_with(|| cands[a].cmp(&cands[b]))
                            });
                            order
                                .into_iter()
                                .take(topk)
                                .map(|i| TopK {
                                    form: cands[i].clone(),
                                    score: scores[i],
                                })
                                .collect()
                        });
                        Response::Masked {
                            id: m.id.clone(),
                            prediction: cands[bi].clone(),
                            topk,
                        }
                    }
                }
                EvalItem::MinimalPair(p) => Response::Pair {
                    id: p.id.clone(),
                    logprob_original: model.sentence_logprob(&p.tokens),
                    logprob_alternatives: (0..p.alternatives.len())
                        .map(|j| model.sentence_logprob(&p.variant(j)))
                        .collect(),
                },
            })
        })
        .collect::<crate::Result<_>>()?;
    write_file(&out, |w| write_responses(w, &responses))?;
    let mut o = Outcome {
        inputs: vec![mpath, epath],
        outputs: vec![out],
        ..Default::default()
    };
    o.count("items", items.len());
    o.count(
        "skipped",
        responses
            .iter()
            .filter(|r| matches!(r, Response::Skipped { .. }))
            .count(),
    );
    o.count("candidates", cands.len());
    Ok(o)
}

fn single_pos(mut pos: impl Iterator<Item = TargetPos>, fallback: &Config) -> anyhow::Result<TargetPos> {
    let Some(first) = pos.next() else {
        return usage(fallback, "target_pos");
    };
    if pos.any(|p| p != first) {
        bail!(Error::invalid("eval set mixes target parts of speech"));
    }
    Ok(first)
}

fn score(cfg: &Config) -> anyhow::Result<Outcome> {
    let epath = cfg.path("eval")?;
    let rpath = cfg.path("responses")?;
    let out = cfg.path("output")?;
    let label = ModelLabel {
        perturb: usage(cfg, "perturb")?,
        model: cfg.get("model_name").to_string(),
    };
    let items = read_file(&epath, read_eval_records)?;
    let responses = read_file(&rpath, read_responses)?;
    let task = items
        .first()
        .map_or(Task::from_str(cfg.get("task")), |i| Ok(i.task()))?;
    let (group, st) = match task {
        Task::Masked => {
            let items = masked_items(items)?;
            let candidates: usize = cfg.parsed("candidates")?;
            if candidates == 0 {
                bail!(Error::Usage("--candidates is required for masked eval sets".into()));
            }
            let target_pos = single_pos(items.iter().map(|i| i.target_pos), cfg)?;
            let (rows, st) =
                score_masked(&items, &responses, &label).with_context(|| format!("scoring {}", rpath.display()))?;
            (
                ConditionRows {
                    perturb: label.perturb,
                    task,
                    target_pos,
                    chance: 1.0 / candidates as f64,
                    rows,
                    skipped: st.skipped,
                },
                st,
            )
        }
        Task::MinimalPair => {
            let items = pair_items(items)?;
            let target_pos = single_pos(items.iter().map(|i| i.target_pos), cfg)?;
            let (rows, st) =
                score_pairs(&items, &responses, &label).with_context(|| format!("scoring {}", rpath.display()))?;
            (
                ConditionRows {
                    perturb: label.perturb,
                    task,
                    target_pos,
                    chance: 0.5,
                    rows,
                    skipped: st.skipped,
                },
                st,
            )
        }
    };
    write_file(&out, |w| write_trials(w, &group))?;
    let mut o = Outcome {
        inputs: vec![epath, rpath],
        outputs: vec![out],
        ..Default::default()
    };
    o.count("items", st.items);
    o.count("rows", st.rows);
    o.count("skipped", st.skipped);
    o.count("ties", st.ties);
    Ok(o)
}

fn report(cfg: &Config) -> anyhow::Result<Outcome> {
    let paths: Vec<PathBuf> = cfg.list("trials").into_iter().map(PathBuf::from).collect();
    if paths.is_empty() {
        bail!(Error::Usage("--trials is required".into()));
    }
    let dir = cfg.path("output")?;
    let b: usize = cfg.parsed("bootstrap")?;
    let seed: u64 = cfg.parsed("seed")?;
    let mut groups = Vec::new();
    for p in &paths {
        groups.push(read_file(p, read_trials)?);
    }
    let mut o = Outcome {
        inputs: paths,
        ..Default::default()
    };
    let mut keys: Vec<(Task, TargetPos)> = groups.iter().map(|g| (g.task, g.target_pos)).collect();
    keys.sort_by_key(|&(t, p)| (t.as_str(), p));
    keys.dedup();
    let mut fits = Vec::new();
    for (task, pos) in keys {
        let rows: Vec<_> = groups
            .iter()
            .filter(|g| g.task == task && g.target_pos == pos)
            .flat_map(|g| g.rows.iter().cloned())
            .collect();
        let formula = match pos {
            TargetPos::Verb => Formula::Interaction,
            TargetPos::Noun => Formula::PerturbOnly,
        };
        let name = format!("{}/{}", task.as_str(), pos.as_str());
        let fit = match fit_logistic(&rows, formula) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("{name}: fit skipped: {e}");
                o.count(&format!("fit_skipped/{name}"), e.to_string());
                continue;
            }
        };
        let bootstrap = if b > 0 {
            match cluster_bootstrap(&rows, formula, b, seed) {
                Ok(r) => Some(r),
                Err(e) => {
                    log::warn!("{name}: bootstrap skipped: {e}");
                    o.count(&format!("bootstrap_skipped/{name}"), e.to_string());
                    None
                }
            }
        } else {
            None
        };
        if let Some(w) = fit.warning() {
            o.count(&format!("fit_warning/{name}"), w);
        }
        fits.push(FitSummary { name, fit, bootstrap });
    }
    if b > 0 {
        o.streams.push("bootstrap".into());
    }
    let rep = build_report(&groups, fits);
    for task in [Task::Masked, Task::MinimalPair] {
        let p = dir.join(format!("{}.csv", task.as_str()));
        write_file(&p, |w| rep.write_csv(w, task))?;
        o.outputs.push(p);
    }
    let p = dir.join("fits.csv");
    write_file(&p, |w| rep.write_fits_csv(w))?;
    o.outputs.push(p);
    let p = dir.join("report.md");
    write_file(&p, |w| Ok(w.write_all(rep.to_markdown().as_bytes())?))?;
    o.outputs.push(p);
    for ord in &rep.orderings {
        o.count(
            &format!("ordering/{}/{}", ord.task.as_str(), ord.target_pos.as_str()),
            format!("{}: {}", ord.describe(), ord.holds),
        );
    }
    o.count("trial_files", groups.len());
    Ok(o)
}
