//! Flat `key = value` configuration shared by the config file and the
//! command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

/// Names the default config file when `--config` is absent.
pub const CONFIG_ENV: &str = "SYNBOOT_CONFIG";

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
    /// Accepts several values, stored comma-separated.
    pub list: bool,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
        list: false,
    }
}

pub static KEYS: &[Key] = &[
    key("seed", "0", "Top-level seed for every random stream"),
    key("threads", "0", "Worker threads (0 uses all cores)"),
    key("manifest", "", "Manifest path (default derived from the output path)"),
    key("input", "", "Input file"),
    key("output", "", "Output file or directory"),
    key("split", "train", "Split name used in sentence ids and stream labels"),
    key("format", "", "File format: raw or conllu"),
    key("sentences", "100000", "Number of sentences to synthesize"),
    key("tagger", "", "Tagger model file"),
    key("epochs", "5", "Tagger training epochs"),
    key("max_tokens", "512", "Longest accepted line, in tokens"),
    key("kind", "original", "Perturbation kind"),
    key("granularity", "auto", "PoS granularity: auto, coarse or fine"),
    key("freq_table", "", "Frequency table to sample replacements from"),
    key("freq_output", "", "Where to write the frequency table"),
    key("task", "minimal_pair", "Evaluation task: masked or minimal_pair"),
    key("target_pos", "VERB", "Target part of speech: VERB or NOUN"),
    key("vocab", "", "Vocabulary file, one form per line"),
    key("n_alt", "5", "Alternatives per minimal pair"),
    key("min_len", "10", "Source sentences must be longer than this"),
    key("count_punct", "true", "Count punctuation toward sentence length"),
    key("bins", "4", "Number of log-rank frequency bins"),
    key("order", "3", "N-gram order"),
    key("discount", "0.75", "Kneser-Ney discount"),
    key("unk_threshold", "2", "Forms seen fewer times map to <unk>"),
    key("vocab_output", "", "Where to write the model vocabulary"),
    key("model", "", "N-gram model file"),
    key("topk", "0", "Top-k predictions to record per masked item"),
    key("eval", "", "Eval record file"),
    key("responses", "", "Response record file"),
    key("perturb", "original", "Training condition of the scored model"),
    key("model_name", "ngram", "Model label written into trial rows"),
    key("candidates", "0", "Candidate set size behind masked predictions"),
    Key {
        name: "trials",
        default: "",
        help: "Trial files to report on",
        list: true,
    },
    key("bootstrap", "1000", "Cluster bootstrap replicates (0 disables)"),
    key("corpus_dir", "", "Directory with train.txt, test.txt and gold.conllu"),
    key("train_sentences", "100000", "Synthetic training sentences"),
    key("test_sentences", "10000", "Synthetic test sentences"),
    key("gold_sentences", "10000", "Synthetic gold-tagged sentences"),
    key(
        "conditions",
        "original,replace_word_verb,shuffle_1gram",
        "Training conditions run by the pipeline",
    ),
];

pub fn find_key(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

/// Resolved settings: defaults, then the config file, then flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            values: KEYS
                .iter()
                .map(|k| (k.name.to_string(), k.default.to_string()))
                .collect(),
        }
    }
}

impl Config {
    /// Parse `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got {line:?}")))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if find_key(key).is_none() {
            return Err(Error::Usage(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Builder form of [`Config::set`] for known keys.
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value.to_string()).expect("known config key");
        self
    }

    pub fn get(&self, key: &str) -> &str {
        debug_assert!(find_key(key).is_some(), "unknown key {key}");
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.get(key).is_empty()
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.get(key);
        v.parse()
            .map_err(|e| Error::Usage(format!("--{}: bad value {v:?}: {e}", flag_name(key))))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(Error::Usage(format!(
                "--{}: expected true or false, got {v:?}",
                flag_name(key)
            ))),
        }
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.opt_path(key)
            .ok_or_else(|| Error::Usage(format!("--{} is required", flag_name(key))))
    }

    pub fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.is_set(key).then(|| PathBuf::from(self.get(key)))
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    /// The subset of keys a command reads, for its manifest.
    pub fn snapshot(&self, keys: &[&str]) -> BTreeMap<String, String> {
        keys.iter().map(|k| (k.to_string(), self.get(k).to_string())).collect()
    }

    pub fn from_snapshot(snapshot: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Config::default();
        for (k, v) in snapshot {
            cfg.set(k, v.clone())?;
        }
        Ok(cfg)
    }
}

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}
