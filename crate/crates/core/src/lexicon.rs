//! Per-PoS frequency tables, frequency-weighted replacement sampling and
//! log-rank frequency bins.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::corpus::{AnnotatedSentence, Token};
use crate::{Error, Result};

/// Which tag a frequency class is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    /// Universal tag, e.g. `NOUN`.
    Coarse,
    /// Universal plus fine-grained tag, e.g. `VERB:VBN`.
    Fine,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Coarse => "coarse",
            Granularity::Fine => "fine",
        }
    }

    /// Fine when every token carries a fine-grained tag, else coarse.
    pub fn detect<'a>(sentences: impl IntoIterator<Item = &'a AnnotatedSentence>) -> Granularity {
        let mut any = false;
        for s in sentences {
            for t in &s.tokens {
                any = true;
                if t.xpos.is_none() {
                    return Granularity::Coarse;
                }
            }
        }
        if any {
            Granularity::Fine
        } else {
            Granularity::Coarse
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Granularity::Coarse),
            "fine" => Ok(Granularity::Fine),
            _ => Err(Error::invalid(format!("unknown granularity {s:?}"))),
        }
    }
}

/// The frequency-class key of a token.
pub fn pos_key(token: &Token, granularity: Granularity) -> Result<String> {
    match granularity {
        Granularity::Coarse => Ok(token.upos.to_string()),
        Granularity::Fine => match &token.xpos {
            Some(x) => Ok(format!("{}:{x}", token.upos)),
            None => Err(Error::invalid(format!(
                "token {:?} has no fine-grained tag; use coarse granularity",
                token.form
            ))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct PosClass {
    counts: BTreeMap<String, u64>,
    total: u64,
    // Forms in lexicographic order with running count totals, for sampling.
    forms: Vec<String>,
    cumulative: Vec<u64>,
}

impl PosClass {
    fn reindex(&mut self) {
        self.forms = self.counts.keys().cloned().collect();
        let mut acc = 0;
        self.cumulative = self
            .counts
            .values()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        self.total = acc;
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        let x = rng.gen_range(0..self.total);
        let i = self.cumulative.partition_point(|&c| c <= x);
        &self.forms[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub granularity: Granularity,
    classes: BTreeMap<String, PosClass>,
}

/// Outcome of a replacement draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub form: String,
    /// The class held nothing but the excluded form.
    pub no_op: bool,
}

impl FrequencyTable {
    pub fn new(granularity: Granularity) -> Self {
        FrequencyTable {
            granularity,
            classes: BTreeMap::new(),
        }
    }

    /// Add `n` occurrences without reindexing; call [`FrequencyTable::finish`]
    /// before sampling.
    fn add_raw(&mut self, key: &str, form: &str, n: u64) {
        if n == 0 {
            return;
        }
        let class = self.classes.entry(key.to_string()).or_default();
        *class.counts.entry(form.to_string()).or_default() += n;
    }

    fn finish(mut self) -> Self {
        for c in self.classes.values_mut() {
            c.reindex();
        }
        self
    }

    pub fn from_counts<I, K, F>(granularity: Granularity, counts: I) -> Self
    where
        I: IntoIterator<Item = (K, F, u64)>,
        K: AsRef<str>,
        F: AsRef<str>,
    {
        let mut t = FrequencyTable::new(granularity);
        for (k, f, n) in counts {
            t.add_raw(k.as_ref(), f.as_ref(), n);
        }
        t.finish()
    }

    /// Combine partial tables built over disjoint shards.
    pub fn merge(mut self, other: &FrequencyTable) -> Result<Self> {
        if self.granularity != other.granularity {
            return Err(Error::invalid("cannot merge tables of different granularity"));
        }
        for (key, class) in &other.classes {
            for (form, n) in &class.counts {
                self.add_raw(key, form, *n);
            }
        }
        Ok(self.finish())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn count(&self, key: &str, form: &str) -> u64 {
        self.classes
            .get(key)
            .and_then(|c| c.counts.get(form))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self, key: &str) -> u64 {
        self.classes.get(key).map(|c| c.total).unwrap_or(0)
    }

    /// `(form, count)` pairs of one class in lexicographic order.
    pub fn class(&self, key: &str) -> Option<impl Iterator<Item = (&str, u64)>> {
        self.classes
            .get(key)
            .map(|c| c.counts.iter().map(|(f, n)| (f.as_str(), *n)))
    }

    /// Write `pos\tform\tcount\tbin` rows sorted by key then form; the bin
    /// column is `-` for forms without a bin.
    pub fn write_tsv<W: Write>(&self, mut w: W, bins: Option<&BinTable>) -> Result<()> {
        writeln!(w, "pos\tform\tcount\tbin")?;
        for (key, class) in &self.classes {
            for (form, n) in &class.counts {
                let bin = bins
                    .and_then(|b| b.bin_of(key, form))
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "-".into());
                writeln!(w, "{key}\t{form}\t{n}\t{bin}")?;
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R, granularity: Granularity) -> Result<Self> {
        let mut t = FrequencyTable::new(granularity);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line != "pos\tform\tcount\tbin" {
                    return Err(Error::parse(1, "missing frequency table header"));
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(i + 1, "expected 4 columns"));
            }
            let n: u64 = cols[2]
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad count {:?}", cols[2])))?;
            if n == 0 {
                return Err(Error::parse(i + 1, "counts must be at least 1"));
            }
            t.add_raw(cols[0], cols[1], n);
        }
        Ok(t.finish())
    }
}

/// Count surface forms per PoS key.
pub fn build_frequency_table<'a>(
    corpus: impl IntoIterator<Item = &'a AnnotatedSentence>,
    granularity: Granularity,
) -> Result<FrequencyTable> {
    let mut t = FrequencyTable::new(granularity);
    for s in corpus {
        for tok in &s.tokens {
            let key = pos_key(tok, granularity)?;
            t.add_raw(&key, &tok.form, 1);
        }
    }
    Ok(t.finish())
}

/// Draw a form of class `key` with probability proportional to its count,
/// never returning `exclude` unless it is the only form in the class.
pub fn sample_same_pos<R: Rng + ?Sized>(
    table: &FrequencyTable,
    key: &str,
    exclude: Option<&str>,
    rng: &mut R,
) -> Result<Sample> {
    let class = table
        .classes
        .get(key)
        .ok_or_else(|| Error::UnknownPosKey(key.to_string()))?;
    if let Some(x) = exclude {
        if class.forms.len() == 1 && class.forms[0] == x {
            return Ok(Sample {
                form: x.to_string(),
                no_op: true,
            });
        }
    }
    loop {
        let form = class.draw(rng);
        if Some(form) != exclude {
            return Ok(Sample {
                form: form.to_string(),
                no_op: false,
            });
        }
    }
}

/// Rank of each form within a class: descending count, ties lexicographic.
pub fn rank_forms(table: &FrequencyTable, key: &str) -> Vec<(String, u64)> {
    let mut forms: Vec<(String, u64)> = table
        .class(key)
        .map(|it| it.map(|(f, n)| (f.to_string(), n)).collect())
        .unwrap_or_default();
    forms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    forms
}

/// Bin of 1-based `rank` among `n` forms: the number of interior edges
/// `j·ln(n)/k` (j = 1..k-1) that `ln(rank)` reaches, evaluated exactly as
/// `rank^k >= n^j` where the integers fit.
pub fn log_rank_bin(rank: usize, n: usize, k: usize) -> usize {
    debug_assert!(rank >= 1 && rank <= n && k >= 1);
    let exact = (|| {
        let kk = u32::try_from(k).ok()?;
        let lhs = (rank as u128).checked_pow(kk)?;
        let mut bin = 0;
        for j in 1..k {
            let rhs = (n as u128).checked_pow(j as u32)?;
            if lhs >= rhs {
                bin = j;
            }
        }
        Some(bin)
    })();
    exact.unwrap_or_else(|| {
        let lr = (rank as f64).ln();
        let ln_n = (n as f64).ln();
        (1..k).filter(|&j| lr >= j as f64 * ln_n / k as f64).count()
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinTable {
    pub k: usize,
    bins: BTreeMap<(String, String), usize>,
    /// Per key: the k+1 interval edges on ln(rank), from 0 to ln(N).
    pub boundaries: BTreeMap<String, Vec<f64>>,
    // Per (key, bin): forms in rank order.
    cells: BTreeMap<(String, usize), Vec<String>>,
}

impl BinTable {
    pub fn bin_of(&self, key: &str, form: &str) -> Option<usize> {
        self.bins.get(&(key.to_string(), form.to_string())).copied()
    }

    pub fn cell(&self, key: &str, bin: usize) -> &[String] {
        self.cells
            .get(&(key.to_string(), bin))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.boundaries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Union with a table over other keys.
    pub fn merge(mut self, other: BinTable) -> Result<Self> {
        if !self.bins.is_empty() && self.k != other.k {
            return Err(Error::invalid("cannot merge bin tables with different k"));
        }
        self.k = other.k;
        self.bins.extend(other.bins);
        self.boundaries.extend(other.boundaries);
        self.cells.extend(other.cells);
        Ok(self)
    }
}

/// Split one class into `k` frequency bins by equal-width intervals on
/// ln(rank) over `[0, ln N]`, top edge inclusive.
pub fn bin_by_log_rank(table: &FrequencyTable, key: &str, k: usize) -> Result<BinTable> {
    if k == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    if !table.classes.contains_key(key) {
        return Err(Error::UnknownPosKey(key.to_string()));
    }
    let ranked = rank_forms(table, key);
    let n = ranked.len();
    if n < k {
        return Err(Error::invalid(format!(
            "class {key} has {n} forms, fewer than {k} bins"
        )));
    }
    let ln_n = (n as f64).ln();
    let edges = (0..=k).map(|j| j as f64 * ln_n / k as f64).collect();
    let mut out = BinTable {
        k,
        ..Default::default()
    };
    out.boundaries.insert(key.to_string(), edges);
    for (r, (form, _)) in ranked.into_iter().enumerate() {
        let b = log_rank_bin(r + 1, n, k);
        out.cells.entry((key.to_string(), b)).or_default().push(form.clone());
        out.bins.insert((key.to_string(), form), b);
    }
    Ok(out)
}

/// Draw `n` distinct forms uniformly from the bin of `form`, excluding `form`
/// itself and everything in `exclude`.
pub fn sample_same_bin<R: Rng + ?Sized>(
    bins: &BinTable,
    key: &str,
    form: &str,
    n: usize,
    exclude: &BTreeSet<String>,
    rng: &mut R,
) -> Result<Vec<String>> {
    let bin = bins
        .bin_of(key, form)
        .ok_or_else(|| Error::invalid(format!("{form:?} has no bin under {key}")))?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let pool: Vec<&String> = bins
        .cell(key, bin)
        .iter()
        .filter(|f| f.as_str() != form && !exclude.contains(*f))
        .collect();
    if pool.len() < n {
        return Err(Error::InsufficientBin(pool.len()));
    }
    Ok(index::sample(rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}
