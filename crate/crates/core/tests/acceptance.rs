//! Acceptance criteria. Each test prints one `PASS` or `FAIL` line to stderr
//! (uncaptured) and then asserts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use synboot::corpus::{ingest_conllu, AnnotatedSentence, CorpusSplit, SplitName, Upos};
use synboot::evalgen::{masked_items, pair_items, read_eval_records};
use synboot::evalgen::{TargetPos, Task};
use synboot::lexicon::{bin_by_log_rank, build_frequency_table, FrequencyTable, Granularity};
use synboot::ngram::NGramModel;
use synboot::perturb::{perturb_corpus, PerturbKind, PerturbationSpec};
use synboot::score::{cluster_bootstrap, fit_logistic, Formula, TrialRow, WordClass};

const BIN: &str = env!("CARGO_BIN_EXE_synboot");

/// Spec tolerances.
const INVARIANT_BUDGET: Duration = Duration::from_secs(120);
const TV_MAX: f64 = 0.02;
const TV_MIN_EVENTS: usize = 10_000;
const BIN_TABLES: usize = 100;
const BIN_MAX_FORMS: usize = 50;
const N_ALT: usize = 5;
const MIN_LEN: usize = 10;
const IRLS_TOL: f64 = 1e-8;
const NULL_SIMS: usize = 200;
const ALPHA: f64 = 0.05;
const NULL_RATE: (f64, f64) = (0.02, 0.09);
const MIN_GAP: f64 = 0.05;
const E2E_BUDGET: Duration = Duration::from_secs(30 * 60);
const MASKED_ITEMS: usize = 1000;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("{} [{id}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

struct Run {
    dir: PathBuf,
    elapsed: Duration,
}

fn pipeline(name: &str, extra: &[&str]) -> Run {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    let t = Instant::now();
    let out = Command::new(BIN)
        .args(["pipeline", "--seed", "1", "--output"])
        .arg(&dir)
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run synboot");
    assert!(
        out.status.success(),
        "pipeline {name} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Run {
        dir,
        elapsed: t.elapsed(),
    }
}

/// All five conditions with the default thread pool.
fn run_a() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| pipeline("a", &["--all"]))
}

/// Same seed and conditions as A with a different pool size.
fn run_b() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| pipeline("b", &["--all", "--threads", "2"]))
}

/// The three default conditions only.
fn run_c() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| pipeline("c", &["--threads", "1"]))
}

fn read_corpus(path: &Path, split: SplitName) -> Vec<AnnotatedSentence> {
    ingest_conllu(BufReader::new(File::open(path).unwrap()), split).unwrap()
}

fn sha(path: &Path) -> String {
    synboot::cli::hash_file(path).unwrap().0
}

fn csv_accuracy(path: &Path, condition: &str, subtype: &str, pos: &str) -> f64 {
    let mut r = csv::Reader::from_path(path).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        if &rec[0] == condition && &rec[1] == subtype && &rec[2] == pos && &rec[3] == "all" {
            return rec[5].parse().unwrap();
        }
    }
    panic!("{condition}/{subtype}/{pos} missing from {}", path.display());
}

fn content(u: Upos) -> bool {
    matches!(u, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv)
}

fn multiset(s: &AnnotatedSentence) -> Vec<(String, Upos, Option<String>)> {
    let mut v: Vec<_> = s
        .tokens
        .iter()
        .map(|t| (t.form.clone(), t.upos, t.xpos.clone()))
        .collect();
    v.sort_by(|a, b| (&a.0, a.1.as_str(), &a.2).cmp(&(&b.0, b.1.as_str(), &b.2)));
    v
}

fn final_punct_pinned(i: &AnnotatedSentence, o: &AnnotatedSentence) -> bool {
    match i.tokens.last() {
        Some(t) if t.upos == Upos::Punct => o.tokens.last().map(|x| &x.form) == Some(&t.form),
        _ => true,
    }
}

fn contains_run(hay: &[&str], needle: &[&str]) -> bool {
    needle.is_empty() || hay.windows(needle.len()).any(|w| w == needle)
}

fn spans_kept(i: &AnnotatedSentence, o: &AnnotatedSentence) -> bool {
    let limit = match i.tokens.last() {
        Some(t) if t.upos == Upos::Punct => i.len() - 1,
        _ => i.len(),
    };
    let fi = i.forms();
    let fo = o.forms();
    let mut want: Vec<Vec<&str>> = i
        .np_spans
        .iter()
        .filter(|sp| sp.end <= limit && !sp.is_empty())
        .map(|sp| fi[sp.start..sp.end].to_vec())
        .collect();
    let mut got: Vec<Vec<&str>> = o.np_spans.iter().map(|sp| fo[sp.start..sp.end].to_vec()).collect();
    want.sort();
    got.sort();
    want == got && want.iter().all(|w| contains_run(&fo, w))
}

fn replace_kept(i: &AnnotatedSentence, o: &AnnotatedSentence, verb_mode: bool) -> bool {
    i.len() == o.len()
        && i.tokens
            .iter()
            .zip(&o.tokens)
            .all(|(a, b)| a.upos == b.upos && (content(a.upos) || a.form == b.form))
        && (!verb_mode || i.main_verb.is_none_or(|v| i.tokens[v].form == o.tokens[v].form))
}

#[test]
fn c1_perturbation_invariants() {
    let t = Instant::now();
    let sents = synboot::synth::generate(7, "synth/train", 100_000, "inv");
    let corpus = CorpusSplit::new(SplitName::Train, sents).unwrap();
    let g = Granularity::detect(&corpus.sentences);
    let table = build_frequency_table(&corpus.sentences, g).unwrap();
    let mut failures = BTreeMap::new();
    for kind in [
        PerturbKind::Shuffle1gram,
        PerturbKind::ShuffleNp,
        PerturbKind::ReplaceWordVerb,
        PerturbKind::ReplaceWordNoun,
    ] {
        let spec = PerturbationSpec {
            kind,
            seed: 7,
            granularity: g,
        };
        let (out, stats) = perturb_corpus(&corpus, &spec, &table).unwrap();
        assert_eq!(stats.errors, 0);
        let bad = corpus
            .sentences
            .par_iter()
            .zip(&out.sentences)
            .filter(|(i, o)| !match kind {
                PerturbKind::Shuffle1gram => multiset(i) == multiset(o) && final_punct_pinned(i, o),
                PerturbKind::ShuffleNp => multiset(i) == multiset(o) && final_punct_pinned(i, o) && spans_kept(i, o),
                PerturbKind::ReplaceWordVerb => replace_kept(i, o, true),
                PerturbKind::ReplaceWordNoun => replace_kept(i, o, false),
                PerturbKind::Original => true,
            })
            .count();
        failures.insert(kind.as_str(), bad);
    }
    let elapsed = t.elapsed();
    let pass = failures.values().all(|&n| n == 0) && elapsed < INVARIANT_BUDGET;
    verdict(
        1,
        "perturbation invariants",
        pass,
        &format!(
            "100000 sentences, violations {failures:?}, {:.1}s (< {}s)",
            elapsed.as_secs_f64(),
            INVARIANT_BUDGET.as_secs()
        ),
    );
}

fn tv_distance(p: &BTreeMap<&str, u64>, q: &BTreeMap<&str, u64>) -> f64 {
    let (np, nq) = (p.values().sum::<u64>() as f64, q.values().sum::<u64>() as f64);
    let forms: BTreeSet<&str> = p.keys().chain(q.keys()).copied().collect();
    0.5 * forms
        .iter()
        .map(|f| {
            let a = p.get(f).copied().unwrap_or(0) as f64 / np;
            let b = q.get(f).copied().unwrap_or(0) as f64 / nq;
            (a - b).abs()
        })
        .sum::<f64>()
}

#[test]
fn c2_noun_replacement_preserves_frequency() {
    let run = run_a();
    let orig = read_corpus(&run.dir.join("corpus/train.conllu"), SplitName::Train);
    let mut corpus: BTreeMap<&str, u64> = BTreeMap::new();
    for t in orig.iter().flat_map(|s| &s.tokens).filter(|t| t.upos == Upos::Noun) {
        *corpus.entry(&t.form).or_default() += 1;
    }
    let mut all: BTreeMap<String, u64> = BTreeMap::new();
    let mut per_mode = Vec::new();
    for kind in [PerturbKind::ReplaceWordVerb, PerturbKind::ReplaceWordNoun] {
        let repl = read_corpus(&run.dir.join(format!("train/{kind}.conllu")), SplitName::Train);
        assert_eq!(orig.len(), repl.len());
        let mut drawn: BTreeMap<String, u64> = BTreeMap::new();
        for (i, o) in orig.iter().zip(&repl) {
            for (a, b) in i.tokens.iter().zip(&o.tokens) {
                if a.upos == Upos::Noun && a.form != b.form {
                    *drawn.entry(b.form.clone()).or_default() += 1;
                }
            }
        }
        for (f, n) in &drawn {
            *all.entry(f.clone()).or_default() += n;
        }
        let view: BTreeMap<&str, u64> = drawn.iter().map(|(f, n)| (f.as_str(), *n)).collect();
        per_mode.push(format!(
            "{kind}: {} events TV {:.5}",
            drawn.values().sum::<u64>(),
            tv_distance(&corpus, &view)
        ));
    }
    let view: BTreeMap<&str, u64> = all.iter().map(|(f, n)| (f.as_str(), *n)).collect();
    let nd = all.values().sum::<u64>() as usize;
    let tv = tv_distance(&corpus, &view);
    let pass = nd >= TV_MIN_EVENTS && tv < TV_MAX;
    verdict(
        2,
        "frequency preservation",
        pass,
        &format!(
            "{nd} NOUN replacements (>= {TV_MIN_EVENTS}), TV = {tv:.5} (< {TV_MAX}); {}",
            per_mode.join("; ")
        ),
    );
}

/// Independent oracle: rank by (count desc, form asc), then count the
/// interior edges j·ln N / k that ln(rank) reaches.
fn oracle_bins(counts: &[(String, u64)], k: usize) -> BTreeMap<String, usize> {
    let mut v = counts.to_vec();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let ln_n = (v.len() as f64).ln();
    v.iter()
        .enumerate()
        .map(|(r, (f, _))| {
            let lr = ((r + 1) as f64).ln();
            let bin = (1..k)
                .filter(|&j| {
                    let edge = j as f64 * ln_n / k as f64;
                    lr >= edge - 1e-12 * edge.max(1.0)
                })
                .count();
            (f.clone(), bin)
        })
        .collect()
}

fn lib_bins(counts: &[(String, u64)], k: usize) -> BTreeMap<String, usize> {
    let table = FrequencyTable::from_counts(
        Granularity::Coarse,
        counts.iter().map(|(f, n)| ("VERB", f.as_str(), *n)),
    );
    let bins = bin_by_log_rank(&table, "VERB", k).unwrap();
    counts
        .iter()
        .map(|(f, _)| (f.clone(), bins.bin_of("VERB", f).unwrap()))
        .collect()
}

#[test]
fn c3_binning_oracle() {
    let worked: Vec<(String, u64)> = [("a", 100), ("b", 50), ("c", 10), ("d", 5), ("e", 2), ("f", 1)]
        .iter()
        .map(|&(f, n)| (f.to_string(), n))
        .collect();
    let want: BTreeMap<String, usize> = [("a", 0), ("b", 1), ("c", 2), ("d", 3), ("e", 3), ("f", 3)]
        .iter()
        .map(|&(f, b)| (f.to_string(), b))
        .collect();
    let worked_ok = lib_bins(&worked, 4) == want && oracle_bins(&worked, 4) == want;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..BIN_TABLES {
        let k = r.gen_range(2..=6);
        let n = r.gen_range(k..=BIN_MAX_FORMS);
        let counts: Vec<(String, u64)> = (0..n).map(|i| (format!("w{i:02}"), r.gen_range(1..=12))).collect();
        if lib_bins(&counts, k) != oracle_bins(&counts, k) {
            mismatches += 1;
        }
    }
    verdict(
        3,
        "binning oracle",
        worked_ok && mismatches == 0,
        &format!(
            "worked example {}, {mismatches} of {BIN_TABLES} random tables differ",
            if worked_ok { "matches" } else { "differs" }
        ),
    );
}

#[test]
fn c4_eval_set_contract() {
    let a = run_a();
    let c = run_c();
    let test = read_corpus(&a.dir.join("corpus/test.conllu"), SplitName::Test);
    let table = build_frequency_table(&test, Granularity::Coarse).unwrap();
    let mut problems = Vec::new();
    let mut n_items = 0;
    for pos in [TargetPos::Verb, TargetPos::Noun] {
        let bins = bin_by_log_rank(&table, pos.as_str(), 4).unwrap();
        let path = a.dir.join(format!("eval/minimal_pair-{pos}.jsonl"));
        let items = pair_items(read_eval_records(BufReader::new(File::open(&path).unwrap())).unwrap()).unwrap();
        n_items += items.len();
        for it in &items {
            let key = pos.as_str();
            let distinct: BTreeSet<&String> = it.alternatives.iter().collect();
            let b = bins.bin_of(key, &it.answer);
            let ok = it.alternatives.len() == N_ALT
                && distinct.len() == N_ALT
                && !distinct.contains(&it.answer)
                && b == Some(it.bin)
                && it.alternatives.iter().all(|x| bins.bin_of(key, x) == b)
                && sentence_length_ok(&it.tokens)
                && it.tokens[it.target_index] == it.answer;
            if !ok {
                problems.push(it.id.clone());
            }
        }
    }
    let mut differing = Vec::new();
    for (task, pos) in synboot::cli::pipeline::EVAL_SETS {
        let rel = format!("eval/{}.jsonl", synboot::cli::pipeline::eval_name(task, pos));
        if sha(&a.dir.join(&rel)) != sha(&c.dir.join(&rel)) {
            differing.push(rel);
        }
    }
    let pass = n_items > 0 && problems.is_empty() && differing.is_empty();
    verdict(
        4,
        "eval-set contract",
        pass,
        &format!(
            "{n_items} minimal-pair items, {} violate the contract; eval files differing between 5- and 3-condition runs: {differing:?}",
            problems.len()
        ),
    );
}

/// Default `count_punct = true`: every token counts.
fn sentence_length_ok(tokens: &[String]) -> bool {
    tokens.len() > MIN_LEN
}

fn trial(perturb: PerturbKind, class: WordClass, correct: bool, cluster: usize) -> TrialRow {
    TrialRow {
        item_id: format!("i{cluster}-{perturb}"),
        correct,
        tie: false,
        perturb,
        task: Task::MinimalPair,
        target_pos: TargetPos::Verb,
        word_class: class,
        correct_answer_id: format!("v{cluster}"),
        model: "sim".into(),
    }
}

/// Clustered data with random intercepts and no interaction.
fn null_dataset(sim: u64) -> Vec<TrialRow> {
    let mut r = synboot::rng::stream(sim, "acceptance/null", 0);
    let u = Normal::new(0.0, 0.8).unwrap();
    let mut rows = Vec::new();
    for c in 0..30 {
        let class = if c % 2 == 0 {
            WordClass::Mental
        } else {
            WordClass::Physical
        };
        let ui = u.sample(&mut r);
        for (perturb, shift) in [(PerturbKind::Original, 0.0), (PerturbKind::Shuffle1gram, -0.6)] {
            let phys: f64 = if class == WordClass::Physical { 0.3 } else { 0.0 };
            let p = 1.0 / (1.0 + (-(0.5 + shift + phys + ui)).exp());
            for _ in 0..12 {
                rows.push(trial(perturb, class, r.gen_bool(p), c));
            }
        }
    }
    rows
}

#[test]
fn c5_regression_correctness() {
    let mut rows = Vec::new();
    for i in 0..100 {
        rows.push(trial(PerturbKind::Original, WordClass::Mental, i < 75, i));
        rows.push(trial(PerturbKind::Shuffle1gram, WordClass::Mental, i < 50, i));
    }
    let fit = fit_logistic(&rows, Formula::PerturbOnly).unwrap();
    let err = (fit.estimates[0] - 3f64.ln())
        .abs()
        .max((fit.estimates[1] + 3f64.ln()).abs());
    let closed_ok = err < IRLS_TOL;

    let term = "perturb[shuffle_1gram]:class[physical]";
    let pvals: Vec<f64> = (0..NULL_SIMS as u64)
        .into_par_iter()
        .map(|s| {
            let d = null_dataset(s);
            let b = cluster_bootstrap(&d, Formula::Interaction, 500, s).unwrap();
            let j = b.fit.terms.iter().position(|t| t == term).unwrap();
            b.p_boot[j]
        })
        .collect();
    let rate = pvals.iter().filter(|&&p| p < ALPHA).count() as f64 / NULL_SIMS as f64;
    let rate_ok = (NULL_RATE.0..=NULL_RATE.1).contains(&rate);

    let d = null_dataset(999);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let x = one.install(|| cluster_bootstrap(&d, Formula::Interaction, 1000, 11).unwrap());
    let y = three.install(|| cluster_bootstrap(&d, Formula::Interaction, 1000, 11).unwrap());
    let bits = |b: &synboot::score::BootstrapResult| -> Vec<u64> {
        b.lower
            .iter()
            .chain(&b.upper)
            .chain(&b.p_boot)
            .chain(&b.fit.estimates)
            .map(|v| v.to_bits())
            .collect()
    };
    let det_ok = bits(&x) == bits(&y) && x.usable == y.usable;

    verdict(
        5,
        "regression correctness",
        closed_ok && rate_ok && det_ok,
        &format!(
            "closed-form error {err:.2e} (< {IRLS_TOL:e}); null rejection {rate:.3} over {NULL_SIMS} sims in [{}, {}]; bootstrap bit-identical across pools: {det_ok}",
            NULL_RATE.0, NULL_RATE.1
        ),
    );
}

#[test]
fn c6_end_to_end_direction() {
    let a = run_a();
    let csv = a.dir.join("report/minimal_pair.csv");
    let orig = csv_accuracy(&csv, "original", "-", "VERB");
    let repl = csv_accuracy(&csv, "replace.word", "verb_mode", "VERB");
    let shuf = csv_accuracy(&csv, "shuffle.order", "1gram", "VERB");
    let report = std::fs::read_to_string(a.dir.join("report/report.md")).unwrap();
    let reported = [
        "| minimal_pair | VERB | original > replace.word > shuffle.order |",
        "| minimal_pair | NOUN | original > shuffle.order > replace.word |",
    ]
    .iter()
    .all(|o| {
        report
            .lines()
            .any(|l| l.starts_with(o) && (l.ends_with("| true |") || l.ends_with("| false |")))
    });
    let train_n = read_corpus(&a.dir.join("corpus/train.conllu"), SplitName::Train).len();
    let pass = train_n >= 100_000
        && orig - shuf >= MIN_GAP
        && orig > repl
        && orig > shuf
        && reported
        && a.elapsed < E2E_BUDGET;
    verdict(
        6,
        "end-to-end direction",
        pass,
        &format!(
            "{train_n} training sentences, verb minimal pair ORIGINAL {orig:.4} REPLACE {repl:.4} SHUFFLE {shuf:.4} (gap {:.4} >= {MIN_GAP}), orderings reported: {reported}, pipeline {:.0}s (< {}s)",
            orig - shuf,
            a.elapsed.as_secs_f64(),
            E2E_BUDGET.as_secs()
        ),
    );
}

#[test]
fn c7_masked_prediction_path() {
    let a = run_a();
    let model = NGramModel::read(BufReader::new(File::open(a.dir.join("models/original.ngram")).unwrap())).unwrap();
    let vocab: Vec<&str> = model.vocabulary().collect();
    let mut items = Vec::new();
    for pos in [TargetPos::Verb, TargetPos::Noun] {
        let path = a.dir.join(format!("eval/masked-{pos}.jsonl"));
        items.extend(masked_items(read_eval_records(BufReader::new(File::open(path).unwrap())).unwrap()).unwrap());
    }
    let step = (items.len() / MASKED_ITEMS).max(1);
    let sample: Vec<_> = items.iter().step_by(step).take(MASKED_ITEMS).collect();
    let disagree = sample
        .par_iter()
        .filter(|it| {
            let (fast, _) = model.masked_argmax(&it.tokens, it.mask_index, &vocab).unwrap();
            let mut toks = it.tokens.clone();
            let mut best: Option<(&str, f64)> = None;
            for &c in &vocab {
                toks[it.mask_index] = c.to_string();
                let lp = model.sentence_logprob(&toks);
                if best.is_none_or(|(_, b)| lp > b) {
                    best = Some((c, lp));
                }
            }
            best.unwrap().0 != fast
        })
        .count();
    let csv = a.dir.join("report/masked.csv");
    let orig = csv_accuracy(&csv, "original", "-", "VERB");
    let shuf = csv_accuracy(&csv, "shuffle.order", "1gram", "VERB");
    let pass = sample.len() == MASKED_ITEMS && disagree == 0 && orig > shuf;
    verdict(
        7,
        "masked prediction path",
        pass,
        &format!(
            "{disagree} of {} items disagree with full rescoring over {} candidates; verb masked ORIGINAL {orig:.4} > SHUFFLE {shuf:.4}",
            sample.len(),
            vocab.len()
        ),
    );
}

fn cli(args: &[&str]) -> (bool, String) {
    let out = Command::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap();
    (out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn c8_determinism() {
    let a = run_a();
    let b = run_b();
    let mut differing = Vec::new();
    for f in ["masked.csv", "minimal_pair.csv", "fits.csv", "report.md"] {
        let rel = Path::new("report").join(f);
        if std::fs::read(a.dir.join(&rel)).unwrap() != std::fs::read(b.dir.join(&rel)).unwrap() {
            differing.push(f);
        }
    }
    let mut stage_manifests: Vec<PathBuf> = std::fs::read_dir(b.dir.join("manifests"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    stage_manifests.sort();
    let mut failed = Vec::new();
    for m in &stage_manifests {
        let name = m.file_name().unwrap().to_string_lossy().into_owned();
        let ms = m.to_str().unwrap();
        for cmd in ["replay", "verify"] {
            let (ok, err) = cli(&[cmd, ms]);
            if !ok {
                failed.push(format!("{cmd} {name}: {}", err.trim()));
            }
        }
    }
    let (top_ok, err) = cli(&["verify", b.dir.join("manifest.jsonl").to_str().unwrap()]);
    if !top_ok {
        failed.push(format!("verify manifest.jsonl: {}", err.trim()));
    }
    let pass = differing.is_empty() && failed.is_empty();
    verdict(
        8,
        "determinism",
        pass,
        &format!(
            "report files differing between runs (threads default vs 2): {differing:?}; replay+verify over {} stage manifests, failures: {failed:?}",
            stage_manifests.len()
        ),
    );
}
