//! Cross-validated circle prediction and F1 reporting.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train, Mlp, OutputMode, TrainHyper};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{build_dataset, FeatureVariant, InstanceSet};
use crate::graph::Dataset;
use crate::rng::{derive_rng, derive_seed, Stream};
use crate::scalar::Scalar;

/// Disjoint test folds covering `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[derive(Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Every index outside fold `i`, ascending.
    pub fn train_rows(&self, i: usize) -> Vec<usize> {
        let mut held = vec![false; self.n];
        self.folds[i].iter().for_each(|&r| held[r] = true);
        (0..self.n).filter(|&r| !held[r]).collect()
    }
}

/// Seeded shuffle, then contiguous slices; the first `n mod k` folds get one
/// extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig("k-fold needs k >= 2".into()));
    }
    if n < k {
        return Err(Error::TooFewInstances { n, k });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derive_rng(seed, Stream::Folds, n as u128, k as u64));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(FoldPlan { n, folds, seed })
}

/// Single train/test split; returned as a one-fold plan whose fold is the
/// test set.
pub fn holdout_split(n: usize, train_fraction: f64, seed: u64) -> Result<FoldPlan> {
    if !(0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::InvalidConfig("train_fraction must lie in (0, 1)".into()));
    }
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::TooFewInstances { n, k: 2 });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derive_rng(seed, Stream::Folds, n as u128, u64::MAX));
    let mut test = idx[n_train..].to_vec();
    test.sort_unstable();
    Ok(FoldPlan { n, folds: vec![test], seed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct F1Scores {
    pub micro: f64,
    pub macro_f1: f64,
    pub per_label: Vec<f64>,
    /// Labels with no true and no predicted positives; scored 1.0.
    pub vacuous_labels: usize,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> Option<f64> {
    let denom = 2 * tp + fp + fn_;
    (denom > 0).then(|| 2.0 * tp as f64 / denom as f64)
}

/// Micro-F1 pools confusion counts over every (instance, label) cell;
/// macro-F1 averages per-label F1.
pub fn f1_scores(truth: &[&[u8]], predicted: &[Vec<usize>], n_labels: usize) -> Result<F1Scores> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction rows",
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    let mut tp = vec![0usize; n_labels];
    let mut fp = vec![0usize; n_labels];
    let mut fn_ = vec![0usize; n_labels];
    let mut hit = vec![false; n_labels];
    for (t, p) in truth.iter().zip(predicted) {
        if t.len() != n_labels {
            return Err(Error::DimensionMismatch { what: "label row", expected: n_labels, got: t.len() });
        }
        hit.fill(false);
        for &j in p {
            if j >= n_labels {
                return Err(Error::DimensionMismatch { what: "predicted label id", expected: n_labels, got: j });
            }
            hit[j] = true;
        }
        for j in 0..n_labels {
            match (t[j] == 1, hit[j]) {
                (true, true) => tp[j] += 1,
                (false, true) => fp[j] += 1,
                (true, false) => fn_[j] += 1,
                (false, false) => {}
            }
        }
    }
    let sum = |v: &[usize]| v.iter().sum::<usize>();
    let micro = f1(sum(&tp), sum(&fp), sum(&fn_)).unwrap_or(1.0);
    let mut vacuous = 0;
    let per_label: Vec<f64> = (0..n_labels)
        .map(|j| {
            f1(tp[j], fp[j], fn_[j]).unwrap_or_else(|| {
                vacuous += 1;
                1.0
            })
        })
        .collect();
    let macro_f1 = if n_labels == 0 { 1.0 } else { per_label.iter().sum::<f64>() / n_labels as f64 };
    Ok(F1Scores { micro, macro_f1, per_label, vacuous_labels: vacuous })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    KFold,
    Holdout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub protocol: Protocol,
    pub k: usize,
    pub train_fraction: f64,
    pub modes: Vec<OutputMode>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            protocol: Protocol::KFold,
            k: 10,
            train_fraction: 0.7,
            modes: vec![OutputMode::Softmax, OutputMode::Sigmoid],
            seed: 0x5eed,
        }
    }
}

impl EvalConfig {
    pub fn plan(&self, n: usize) -> Result<FoldPlan> {
        match self.protocol {
            Protocol::KFold => kfold_split(n, self.k, self.seed),
            Protocol::Holdout => holdout_split(n, self.train_fraction, self.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldScore {
    pub fold: usize,
    pub test_size: usize,
    pub micro: f64,
    pub macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantResult {
    pub variant: FeatureVariant,
    pub mode: OutputMode,
    pub folds: Vec<FoldScore>,
    pub per_label_mean: Vec<f64>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl VariantResult {
    pub fn micro(&self) -> (f64, f64) {
        mean_std(&self.folds.iter().map(|f| f.micro).collect::<Vec<_>>())
    }

    pub fn macro_f1(&self) -> (f64, f64) {
        mean_std(&self.folds.iter().map(|f| f.macro_f1).collect::<Vec<_>>())
    }
}

/// Hyperparameters for the model of one fold; only the seed differs.
pub fn fold_hyper(hyper: &TrainHyper, fold: usize, mode: OutputMode) -> TrainHyper {
    let seed = derive_seed(hyper.seed, Stream::Folds, fold as u128, mode as u64);
    TrainHyper { seed, ..hyper.clone() }
}

/// Fits a fresh model on every row outside test fold `fold`.
pub fn train_fold<T: Scalar>(
    set: &InstanceSet<T>,
    plan: &FoldPlan,
    fold: usize,
    mode: OutputMode,
    batch_size: usize,
    hyper: &TrainHyper,
) -> Result<(Mlp<T>, TrainHyper)> {
    if plan.n != set.len() {
        return Err(Error::DimensionMismatch { what: "fold plan size", expected: set.len(), got: plan.n });
    }
    let h = fold_hyper(hyper, fold, mode);
    let mut model = Mlp::new(set.width, h.hidden_units, set.n_labels(), mode, h.seed);
    train(&mut model, set.training_data(), &plan.train_rows(fold), batch_size, &h)?;
    Ok((model, h))
}

/// Scores `model` on the given rows of `set`.
pub fn score_rows<T: Scalar>(set: &InstanceSet<T>, rows: &[usize], model: &Mlp<T>, hyper: &TrainHyper) -> Result<F1Scores> {
    let rule = hyper.decision_rule(model.mode, set.n_labels());
    let mut truth = Vec::with_capacity(rows.len());
    let mut pred = Vec::with_capacity(rows.len());
    for &i in rows {
        truth.push(set.y_row(i));
        pred.push(rule.apply(&model.forward(set.x_row(i))?.scores));
    }
    f1_scores(&truth, &pred, set.n_labels())
}

impl VariantResult {
    /// Collects per-fold scores given in fold order.
    pub fn from_folds(variant: FeatureVariant, mode: OutputMode, scores: Vec<(usize, F1Scores)>) -> Self {
        let k = scores.first().map_or(0, |(_, f)| f.per_label.len());
        let mut per_label_mean = vec![0.0; k];
        for (_, f) in &scores {
            for (m, v) in per_label_mean.iter_mut().zip(&f.per_label) {
                *m += v / scores.len() as f64;
            }
        }
        let folds = scores
            .into_iter()
            .enumerate()
            .map(|(fold, (test_size, f))| FoldScore { fold, test_size, micro: f.micro, macro_f1: f.macro_f1 })
            .collect();
        VariantResult { variant, mode, folds, per_label_mean }
    }
}

/// Trains one model per fold on the remaining rows and scores the held-out
/// fold. Folds run in parallel; each has its own seed, so the result does
/// not depend on scheduling.
pub fn cross_validate<T: Scalar>(
    set: &InstanceSet<T>,
    plan: &FoldPlan,
    mode: OutputMode,
    batch_size: usize,
    hyper: &TrainHyper,
) -> Result<VariantResult> {
    let scores = (0..plan.k())
        .into_par_iter()
        .map(|fi| {
            let (model, h) = train_fold(set, plan, fi, mode, batch_size, hyper)?;
            Ok((plan.folds[fi].len(), score_rows(set, &plan.folds[fi], &model, &h)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VariantResult::from_folds(set.variant, mode, scores))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub dataset: String,
    pub instances: usize,
    pub labels: usize,
    pub protocol: Protocol,
    pub folds: usize,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<VariantResult>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(dataset: &str, protocol: Protocol, folds: usize, seed: u64, config_hash: &str) -> Self {
        Report {
            dataset: dataset.to_owned(),
            instances: 0,
            labels: 0,
            protocol,
            folds,
            seed,
            config_hash: config_hash.to_owned(),
            rows: Vec::new(),
            notes: vec![
                "embeddings trained once on the full graph; held-out labels hidden (transductive)".into(),
                "macro-F1 scores labels with no true and no predicted positives as 1.0".into(),
                "std is the sample standard deviation over folds".into(),
            ],
        }
    }

    pub fn row(&self, variant: FeatureVariant, mode: OutputMode) -> Option<&VariantResult> {
        self.rows.iter().find(|r| r.variant == variant && r.mode == mode)
    }

    fn modes(&self) -> Vec<OutputMode> {
        let mut modes: Vec<OutputMode> = Vec::new();
        for r in &self.rows {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        modes
    }

    fn variants(&self) -> Vec<FeatureVariant> {
        FeatureVariant::ALL.into_iter().filter(|v| self.rows.iter().any(|r| r.variant == *v)).collect()
    }

    /// Aligned text table: one row per variant, mean ± std micro-F1 (and
    /// macro-F1) per output mode.
    pub fn to_table(&self) -> String {
        let modes = self.modes();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} | {} instances | {} labels | {} | seed {} | config {}",
            self.dataset,
            self.instances,
            self.labels,
            match self.protocol {
                Protocol::KFold => format!("{}-fold CV", self.folds),
                Protocol::Holdout => "holdout".to_string(),
            },
            self.seed,
            self.config_hash
        );
        let mut header = format!("{:<14}", "Approach");
        for m in &modes {
            let _ = write!(header, " | {:>24} | {:>24}", format!("{m} micro-F1"), format!("{m} macro-F1"));
        }
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{}", "-".repeat(header.len()));
        for (i, v) in self.variants().into_iter().enumerate() {
            if i == 3 {
                let _ = writeln!(out, "{}", "-".repeat(header.len()));
            }
            let mut line = format!("{:<14}", v.name());
            for m in &modes {
                match self.row(v, *m) {
                    Some(r) => {
                        let (mi, ms) = r.micro();
                        let (ma, mas) = r.macro_f1();
                        let _ = write!(line, " | {:>24} | {:>24}", format!("{mi:.4} ± {ms:.4}"), format!("{ma:.4} ± {mas:.4}"));
                    }
                    None => {
                        let _ = write!(line, " | {:>24} | {:>24}", "-", "-");
                    }
                }
            }
            let _ = writeln!(out, "{line}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }

    /// One `key=value` record per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut emit = |variant: &str, mode: &str, fold: &str, metric: &str, value: f64| {
            let _ = writeln!(
                out,
                "variant={variant} mode={mode} fold={fold} metric={metric} value={value:.6} seed={} config_hash={}",
                self.seed, self.config_hash
            );
        };
        for r in &self.rows {
            let (v, m) = (r.variant.name(), r.mode.name());
            for f in &r.folds {
                emit(v, m, &f.fold.to_string(), "micro_f1", f.micro);
                emit(v, m, &f.fold.to_string(), "macro_f1", f.macro_f1);
            }
            let (mi, ms) = r.micro();
            let (ma, mas) = r.macro_f1();
            emit(v, m, "mean", "micro_f1", mi);
            emit(v, m, "std", "micro_f1", ms);
            emit(v, m, "mean", "macro_f1", ma);
            emit(v, m, "std", "macro_f1", mas);
        }
        out
    }
}

/// Builds each variant's instances and cross-validates it under every
/// configured output mode.
#[allow(clippy::too_many_arguments)]
pub fn run_experiment<T: Scalar>(
    ds: &Dataset,
    variants: &[FeatureVariant],
    glo: &EmbeddingTable<T>,
    loc: Option<&EmbeddingTable<T>>,
    profile_bits: usize,
    match_ones_only: bool,
    hyper: &TrainHyper,
    cfg: &EvalConfig,
    config_hash: &str,
) -> Result<Report> {
    let mut sets = Vec::with_capacity(variants.len());
    for &v in variants {
        sets.push(build_dataset(ds, v, glo, loc, profile_bits, match_ones_only)?);
    }
    let batch = hyper.batch_size.unwrap_or_else(|| ds.kind.default_batch_size());
    evaluate_sets(ds.kind.as_str(), &sets, batch, hyper, cfg, config_hash)
}

/// Cross-validates prebuilt instance sets. All sets must describe the same
/// instances in the same order.
pub fn evaluate_sets<T: Scalar>(
    dataset: &str,
    sets: &[InstanceSet<T>],
    batch_size: usize,
    hyper: &TrainHyper,
    cfg: &EvalConfig,
    config_hash: &str,
) -> Result<Report> {
    let mut report = Report::new(dataset, cfg.protocol, cfg.k, cfg.seed, config_hash);
    let Some(first) = sets.first() else { return Ok(report) };
    report.instances = first.len();
    report.labels = first.n_labels();
    let plan = cfg.plan(first.len())?;
    if cfg.protocol == Protocol::Holdout {
        report.folds = 1;
    }
    for set in sets {
        if set.pairs != first.pairs {
            return Err(Error::InvalidConfig(format!("variant {} has a different instance list", set.variant)));
        }
        for &mode in &cfg.modes {
            log::info!("evaluating {} ({mode})", set.variant);
            report.rows.push(cross_validate(set, &plan, mode, batch_size, hyper)?);
        }
    }
    Ok(report)
}
