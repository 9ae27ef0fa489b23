//! Logistic regression by iteratively reweighted least squares, and a cluster
//! bootstrap over `correct_answer_id`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{TrialRow, WordClass};
use crate::perturb::PerturbKind;
use crate::{rng, Error, Result};

pub const GRADIENT_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 100;
/// Coefficients beyond this magnitude are taken as a sign of separation.
pub const SEPARATION_BOUND: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `correct ~ perturb * class`, on mental and physical rows only.
    Interaction,
    /// `correct ~ perturb`, on all rows.
    PerturbOnly,
}

impl Formula {
    pub fn as_str(self) -> &'static str {
        match self {
            Formula::Interaction => "correct ~ perturb_type * verb_type",
            Formula::PerturbOnly => "correct ~ perturb_type",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub formula: Formula,
    pub terms: Vec<String>,
    pub estimates: Vec<f64>,
    pub se: Vec<f64>,
    pub p_wald: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub separation: bool,
    pub n: usize,
}

impl RegressionFit {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms.iter().position(|t| t == term).map(|i| self.estimates[i])
    }

    pub fn warning(&self) -> Option<String> {
        if !self.separation {
            return None;
        }
        Some(if self.converged {
            format!("coefficients exceed {SEPARATION_BOUND} in magnitude; likely separation")
        } else {
            format!(
                "did not converge in {} iterations (gradient norm {:.3e}); likely separation",
                self.iterations, self.gradient_norm
            )
        })
    }
}

/// Covariate patterns and their binomial counts.
#[derive(Debug, Clone)]
struct Design {
    terms: Vec<String>,
    x: DMatrix<f64>,
    n_rows: usize,
    // Cell of each usable row, or None for excluded rows.
    cell_of: Vec<Option<usize>>,
}

fn perturb_term(k: PerturbKind) -> String {
    format!("perturb[{k}]")
}

fn design(rows: &[TrialRow], formula: Formula) -> Result<Design> {
    let use_row = |r: &TrialRow| formula == Formula::PerturbOnly || r.word_class != WordClass::Other;
    let mut perturbs: Vec<PerturbKind> = rows.iter().filter(|r| use_row(r)).map(|r| r.perturb).collect();
    perturbs.sort();
    perturbs.dedup();
    if perturbs.first() != Some(&PerturbKind::Original) {
        return Err(Error::invalid("regression needs ORIGINAL rows as the reference level"));
    }
    if perturbs.len() < 2 {
        return Err(Error::invalid("regression needs at least two perturbation levels"));
    }
    let mut terms = vec!["(Intercept)".to_string()];
    terms.extend(perturbs[1..].iter().map(|&k| perturb_term(k)));
    let classes = formula == Formula::Interaction;
    if classes {
        let physical = rows.iter().any(|r| r.word_class == WordClass::Physical);
        let mental = rows.iter().any(|r| r.word_class == WordClass::Mental);
        if !(physical && mental) {
            return Err(Error::invalid("regression needs both mental and physical rows"));
        }
        terms.push("class[physical]".into());
        terms.extend(
            perturbs[1..]
                .iter()
                .map(|&k| format!("{}:class[physical]", perturb_term(k))),
        );
    }
    let n_class = if classes { 2 } else { 1 };
    let n_cells = perturbs.len() * n_class;
    let p = terms.len();
    let mut x = DMatrix::zeros(n_cells, p);
    for (pi, _) in perturbs.iter().enumerate() {
        for ci in 0..n_class {
            let row = pi * n_class + ci;
            x[(row, 0)] = 1.0;
            if pi > 0 {
                x[(row, pi)] = 1.0;
            }
            if ci == 1 {
                x[(row, perturbs.len())] = 1.0;
                if pi > 0 {
                    x[(row, perturbs.len() + pi)] = 1.0;
                }
            }
        }
    }
    let cell_of = rows
        .iter()
        .map(|r| {
            if !use_row(r) {
                return None;
            }
            let pi = perturbs.binary_search(&r.perturb).ok()?;
            let ci = usize::from(classes && r.word_class == WordClass::Physical);
            Some(pi * n_class + ci)
        })
        .collect::<Vec<_>>();
    Ok(Design {
        terms,
        x,
        n_rows: cell_of.iter().flatten().count(),
        cell_of,
    })
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

struct CellFit {
    beta: DVector<f64>,
    cov: Option<DMatrix<f64>>,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
}

/// Newton-Raphson on grouped binomial data: `n[i]` trials and `y[i]`
/// successes for covariate row `i`.
fn fit_cells(x: &DMatrix<f64>, n: &[f64], y: &[f64]) -> Result<CellFit> {
    let keep: Vec<usize> = (0..x.nrows()).filter(|&i| n[i] > 0.0).collect();
    let x = x.select_rows(&keep);
    let n = DVector::from_iterator(keep.len(), keep.iter().map(|&i| n[i]));
    let y = DVector::from_iterator(keep.len(), keep.iter().map(|&i| y[i]));
    let p = x.ncols();
    if x.nrows() < p || x.clone().svd(false, false).rank(1e-9) < p {
        return Err(Error::RankDeficient);
    }
    let hessian = |beta: &DVector<f64>| {
        let eta = &x * beta;
        let w = DVector::from_iterator(
            eta.len(),
            eta.iter().zip(n.iter()).map(|(&e, &ni)| {
                let mu = sigmoid(e);
                ni * mu * (1.0 - mu)
            }),
        );
        let xw = DMatrix::from_fn(x.nrows(), p, |i, j| x[(i, j)] * w[i]);
        x.transpose() * xw
    };
    let mut beta = DVector::zeros(p);
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;
    let mut converged = false;
    while iterations <= MAX_ITER {
        let eta = &x * &beta;
        let resid = DVector::from_iterator(eta.len(), (0..eta.len()).map(|i| y[i] - n[i] * sigmoid(eta[i])));
        let grad = x.transpose() * resid;
        gradient_norm = grad.norm();
        if gradient_norm < GRADIENT_TOL {
            converged = true;
            break;
        }
        if iterations == MAX_ITER {
            break;
        }
        let Some(chol) = hessian(&beta).cholesky() else {
            break;
        };
        let step = chol.solve(&grad);
        if !step.iter().all(|s| s.is_finite()) {
            break;
        }
        beta += &step;
        iterations += 1;
        // Once the step is at rounding level the gradient cannot shrink
        // further; accept a fit whose gradient is negligible per trial.
        if step.amax() < 1e-13 * (1.0 + beta.amax()) {
            let eta = &x * &beta;
            let resid = DVector::from_iterator(eta.len(), (0..eta.len()).map(|i| y[i] - n[i] * sigmoid(eta[i])));
            gradient_norm = (x.transpose() * resid).norm();
            converged = gradient_norm < GRADIENT_TOL.max(1e-14 * n.sum());
            break;
        }
    }
    let cov = hessian(&beta).cholesky().map(|c| c.inverse());
    Ok(CellFit {
        beta,
        cov,
        iterations,
        gradient_norm,
        converged,
    })
}

fn cell_counts(d: &Design, rows: &[TrialRow]) -> (Vec<f64>, Vec<f64>) {
    let cells = d.x.nrows();
    let mut n = vec![0.0; cells];
    let mut y = vec![0.0; cells];
    for (r, c) in rows.iter().zip(&d.cell_of) {
        if let Some(c) = *c {
            n[c] += 1.0;
            y[c] += r.correct as u8 as f64;
        }
    }
    (n, y)
}

fn finish(formula: Formula, d: &Design, f: CellFit) -> RegressionFit {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = d.terms.len();
    let se: Vec<f64> = (0..p)
        .map(|j| f.cov.as_ref().map_or(f64::NAN, |c| c[(j, j)].sqrt()))
        .collect();
    let p_wald = (0..p).map(|j| 2.0 * normal.cdf(-(f.beta[j] / se[j]).abs())).collect();
    let separation = !f.converged || f.beta.amax() > SEPARATION_BOUND;
    RegressionFit {
        formula,
        terms: d.terms.clone(),
        estimates: f.beta.iter().copied().collect(),
        se,
        p_wald,
        iterations: f.iterations,
        gradient_norm: f.gradient_norm,
        converged: f.converged,
        separation,
        n: d.n_rows,
    }
}

/// Maximum-likelihood logistic fit with ORIGINAL and mental as reference
/// levels. Separation is flagged rather than treated as an error.
pub fn fit_logistic(rows: &[TrialRow], formula: Formula) -> Result<RegressionFit> {
    let d = design(rows, formula)?;
    let (n, y) = cell_counts(&d, rows);
    let f = fit_cells(&d.x, &n, &y)?;
    Ok(finish(formula, &d, f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub fit: RegressionFit,
    pub replicates: usize,
    /// Replicates that produced a full-rank, non-separated fit.
    pub usable: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub p_boot: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Resample `correct_answer_id` clusters with replacement `b` times and refit.
/// Replicate `i` draws from the stream `(seed, "bootstrap", i)`. Intervals are
/// 2.5% and 97.5% percentiles; the two-sided p-value is
/// `min(1, (2 * flipped + 1) / (usable + 1))`, where `flipped` counts
/// replicates whose estimate does not share the sign of the full-data fit.
pub fn cluster_bootstrap(rows: &[TrialRow], formula: Formula, b: usize, seed: u64) -> Result<BootstrapResult> {
    if b < 100 {
        return Err(Error::invalid(format!(
            "bootstrap needs at least 100 resamples, got {b}"
        )));
    }
    let d = design(rows, formula)?;
    let (n, y) = cell_counts(&d, rows);
    let fit = finish(formula, &d, fit_cells(&d.x, &n, &y)?);
    let cells = d.x.nrows();
    let mut by_cluster: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for (r, c) in rows.iter().zip(&d.cell_of) {
        if let Some(c) = *c {
            by_cluster
                .entry(r.correct_answer_id.as_str())
                .or_default()
                .push((c, r.correct as u8 as f64));
        }
    }
    let clusters: Vec<Vec<(usize, f64)>> = by_cluster.into_values().collect();
    let m = clusters.len();
    if m < 2 {
        return Err(Error::invalid("cluster bootstrap needs at least two clusters"));
    }
    let draws: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, "bootstrap", i as u64);
            let mut n = vec![0.0; cells];
            let mut y = vec![0.0; cells];
            for _ in 0..m {
                for &(c, v) in &clusters[r.gen_range(0..m)] {
                    n[c] += 1.0;
                    y[c] += v;
                }
            }
            let f = fit_cells(&d.x, &n, &y).ok()?;
            (f.converged && f.beta.amax() <= SEPARATION_BOUND).then(|| f.beta.iter().copied().collect())
        })
        .collect();
    let ok: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let p = d.terms.len();
    let mut lower = Vec::with_capacity(p);
    let mut upper = Vec::with_capacity(p);
    let mut p_boot = Vec::with_capacity(p);
    for j in 0..p {
        let mut v: Vec<f64> = ok.iter().map(|beta| beta[j]).collect();
        v.sort_by(f64::total_cmp);
        lower.push(quantile(&v, 0.025));
        upper.push(quantile(&v, 0.975));
        let est = fit.estimates[j];
        let flipped = v
            .iter()
            .filter(|&&x| {
                if est > 0.0 {
                    x <= 0.0
                } else if est < 0.0 {
                    x >= 0.0
                } else {
                    true
                }
            })
            .count();
        p_boot.push(((2 * flipped + 1) as f64 / (ok.len() + 1) as f64).min(1.0));
    }
    Ok(BootstrapResult {
        fit,
        replicates: b,
        usable: ok.len(),
        lower,
        upper,
        p_boot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalgen::{TargetPos, Task};

    pub(crate) fn row(perturb: PerturbKind, class: WordClass, correct: bool, cluster: usize) -> TrialRow {
        TrialRow {
            item_id: format!("i{cluster}"),
            correct,
            tie: false,
            perturb,
            task: Task::MinimalPair,
            target_pos: TargetPos::Verb,
            word_class: class,
            correct_answer_id: format!("test-{cluster}"),
            model: "m".into(),
        }
    }

    fn two_groups() -> Vec<TrialRow> {
        let mut rows = Vec::new();
        for i in 0..100 {
            rows.push(row(PerturbKind::Original, WordClass::Mental, i < 75, i));
            rows.push(row(PerturbKind::Shuffle1gram, WordClass::Mental, i < 50, i));
        }
        rows
    }

    #[test]
    fn two_group_log_odds() {
        let fit = fit_logistic(&two_groups(), Formula::PerturbOnly).unwrap();
        assert!(fit.converged && !fit.separation);
        assert!(fit.gradient_norm < GRADIENT_TOL);
        assert!((fit.estimates[0] - 3f64.ln()).abs() < 1e-8);
        assert!((fit.estimates[1] + 3f64.ln()).abs() < 1e-8);
        assert_eq!(fit.terms, ["(Intercept)", "perturb[shuffle_1gram]"]);
        // Closed-form Wald SE for a difference of two log-odds.
        let se = (1.0_f64 / (100.0 * 0.75 * 0.25) + 1.0 / (100.0 * 0.25)).sqrt();
        assert!((fit.se[1] - se).abs() < 1e-8);
    }

    #[test]
    fn all_correct_is_flagged() {
        let rows: Vec<TrialRow> = two_groups()
            .into_iter()
            .map(|r| TrialRow { correct: true, ..r })
            .collect();
        let fit = fit_logistic(&rows, Formula::PerturbOnly).unwrap();
        assert!(fit.separation);
        assert!(fit.warning().unwrap().contains("separation"));
    }

    #[test]
    fn design_requirements() {
        let only_orig: Vec<TrialRow> = (0..10)
            .map(|i| row(PerturbKind::Original, WordClass::Mental, i % 2 == 0, i))
            .collect();
        assert!(fit_logistic(&only_orig, Formula::PerturbOnly).is_err());
        // Interaction needs both classes.
        assert!(fit_logistic(&two_groups(), Formula::Interaction).is_err());
    }

    fn saturated() -> Vec<TrialRow> {
        let mut rows = Vec::new();
        let cells = [
            (PerturbKind::Original, WordClass::Mental, 80),
            (PerturbKind::Original, WordClass::Physical, 70),
            (PerturbKind::ReplaceWordVerb, WordClass::Mental, 60),
            (PerturbKind::ReplaceWordVerb, WordClass::Physical, 55),
            (PerturbKind::Shuffle1gram, WordClass::Mental, 40),
            (PerturbKind::Shuffle1gram, WordClass::Physical, 45),
        ];
        for (k, (p, c, hits)) in cells.into_iter().enumerate() {
            for i in 0..100 {
                rows.push(row(p, c, i < hits, k * 1000 + i));
            }
        }
        for i in 0..50 {
            rows.push(row(PerturbKind::Original, WordClass::Other, true, 9000 + i));
        }
        rows
    }

    #[test]
    fn saturated_interaction_matches_cell_log_odds() {
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let fit = fit_logistic(&saturated(), Formula::Interaction).unwrap();
        assert_eq!(fit.n, 600);
        let b = |t: &str| fit.coefficient(t).unwrap();
        assert!((b("(Intercept)") - logit(0.8)).abs() < 1e-8);
        assert!((b("class[physical]") - (logit(0.7) - logit(0.8))).abs() < 1e-8);
        let want = logit(0.45) - logit(0.4) - (logit(0.7) - logit(0.8));
        assert!((b("perturb[shuffle_1gram]:class[physical]") - want).abs() < 1e-8);
        assert_eq!(fit.terms.len(), 6);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let rows = saturated();
        let a = cluster_bootstrap(&rows, Formula::Interaction, 200, 5).unwrap();
        let b = cluster_bootstrap(&rows, Formula::Interaction, 200, 5).unwrap();
        assert_eq!(a, b);
        let c = cluster_bootstrap(&rows, Formula::Interaction, 200, 6).unwrap();
        assert_ne!(a.lower, c.lower);
        for j in 0..a.p_boot.len() {
            assert!(a.lower[j] <= a.fit.estimates[j] && a.fit.estimates[j] <= a.upper[j]);
            assert!(a.p_boot[j] > 0.0 && a.p_boot[j] <= 1.0);
        }
    }

    #[test]
    fn bootstrap_rejects_degenerate_requests() {
        let rows = saturated();
        assert!(cluster_bootstrap(&rows, Formula::Interaction, 99, 0).is_err());
        let one: Vec<TrialRow> = two_groups()
            .into_iter()
            .map(|r| TrialRow {
                correct_answer_id: "only".into(),
                ..r
            })
            .collect();
        assert!(cluster_bootstrap(&one, Formula::PerturbOnly, 100, 0).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.125), 1.5);
        assert_eq!(quantile(&v, 1.0), 5.0);
    }
}
