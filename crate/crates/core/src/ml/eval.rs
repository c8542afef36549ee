//! Precision/recall/F-measure, PR-curve AUC and k-fold cross-validation
//! with majority-class undersampling on the training folds only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ml::dataset::{Dataset, E1Definition, FeatureCombo};
use crate::ml::forest::{predict_proba, train_forest, ForestParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_scores(scores: &[(f64, bool)], theta: f64) -> Confusion {
        let mut c = Confusion::default();
        for &(score, label) in scores {
            let predicted = score > theta;
            match (predicted, label) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f_measure(&self) -> f64 {
        f_measure(self.precision(), self.recall())
    }
}

/// Harmonic mean of precision and recall.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub theta: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision-recall points swept over every distinct score threshold,
/// descending (predicted positive iff score >= theta). The final point has
/// recall 1 and precision equal to the positive prevalence.
pub fn pr_curve(scores: &[(f64, bool)]) -> Vec<PrPoint> {
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let total_pos = sorted.iter().filter(|&&(_, l)| l).count() as f64;
    let mut points = Vec::new();
    if total_pos == 0.0 {
        return points;
    }
    let mut tp = 0u64;
    let mut predicted = 0u64;
    for i in 0..sorted.len() {
        predicted += 1;
        if sorted[i].1 {
            tp += 1;
        }
        let last_of_tie = i + 1 == sorted.len() || sorted[i + 1].0 < sorted[i].0;
        if last_of_tie {
            points.push(PrPoint {
                theta: sorted[i].0,
                precision: tp as f64 / predicted as f64,
                recall: tp as f64 / total_pos,
            });
        }
    }
    points
}

/// Trapezoidal area under the PR curve, anchored at recall 0 with the
/// highest-threshold precision.
pub fn auc_pr(curve: &[PrPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    let mut prev_precision = curve[0].precision;
    for p in curve {
        area += (p.recall - prev_recall) * (p.precision + prev_precision) / 2.0;
        prev_recall = p.recall;
        prev_precision = p.precision;
    }
    area
}

/// Keep every positive row; keep each majority-class (negative) row
/// independently with probability `rate`. Rate 1.0 is the exact identity.
pub fn undersample(
    indices: &[usize],
    labels: &[bool],
    rate: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::validation(format!(
            "undersampling rate {rate} outside (0, 1]"
        )));
    }
    if rate == 1.0 {
        return Ok(indices.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(indices
        .iter()
        .copied()
        .filter(|&i| labels[i] || rng.random::<f64>() < rate)
        .collect())
}

/// Seeded random fold assignment: a shuffled round-robin over rows.
pub fn make_folds(n_rows: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..n_rows).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut assign = vec![0usize; n_rows];
    for (pos, &row) in order.iter().enumerate() {
        assign[row] = pos % folds;
    }
    assign
}

#[derive(Debug, Clone, Copy)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub undersample_rate: f64,
    pub forest: ForestParams,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: 0,
            undersample_rate: 0.3,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoldStats {
    pub fold: usize,
    pub test_rows: usize,
    pub test_positives: usize,
    pub train_rows_after_undersampling: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Headline metrics at theta = 0.5.
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub confusion: Confusion,
    /// Metrics at the best-F threshold of the sweep.
    pub best_f_theta: f64,
    pub best_f: f64,
    pub pr_curve: Vec<PrPoint>,
    pub auc_pr: f64,
    pub folds_used: usize,
    pub folds_skipped: usize,
    pub per_fold: Vec<FoldStats>,
    pub seed: u64,
}

/// Pooled metrics over externally supplied test scores (used by both CV and
/// the formula checks).
pub fn report_from_scores(scores: &[(f64, bool)], seed: u64) -> EvalReport {
    let curve = pr_curve(scores);
    let auc = auc_pr(&curve);
    let confusion = Confusion::from_scores(scores, 0.5);
    let (mut best_f, mut best_theta) = (0.0, 0.5);
    for p in &curve {
        let f = f_measure(p.precision, p.recall);
        if f > best_f {
            best_f = f;
            best_theta = p.theta;
        }
    }
    EvalReport {
        precision: confusion.precision(),
        recall: confusion.recall(),
        f_measure: confusion.f_measure(),
        confusion,
        best_f_theta: best_theta,
        best_f,
        pr_curve: curve,
        auc_pr: auc,
        folds_used: 0,
        folds_skipped: 0,
        per_fold: Vec::new(),
        seed,
    }
}

/// 10-fold (by default) cross-validation: undersampling on training folds
/// only, test distribution untouched, scores pooled across folds.
pub fn evaluate_cv(ds: &Dataset, cfg: &CvConfig) -> Result<EvalReport> {
    let assign = make_folds(ds.len(), cfg.folds, cfg.seed);
    evaluate_cv_with_folds(ds, &assign, cfg)
}

/// CV against a fixed fold assignment, so feature combos can be compared on
/// identical splits.
pub fn evaluate_cv_with_folds(
    ds: &Dataset,
    fold_assign: &[usize],
    cfg: &CvConfig,
) -> Result<EvalReport> {
    if ds.positives() < cfg.folds {
        return Err(Error::data(format!(
            "{} positives for {} folds",
            ds.positives(),
            cfg.folds
        )));
    }
    let mut scores: Vec<(f64, bool)> = Vec::with_capacity(ds.len());
    let mut per_fold = Vec::new();
    let mut skipped = 0usize;
    for fold in 0..cfg.folds {
        let test: Vec<usize> = (0..ds.len()).filter(|&i| fold_assign[i] == fold).collect();
        let train: Vec<usize> = (0..ds.len()).filter(|&i| fold_assign[i] != fold).collect();
        let test_pos = test.iter().filter(|&&i| ds.labels[i]).count();
        if test_pos == 0 {
            skipped += 1;
            continue;
        }
        let train = undersample(
            &train,
            &ds.labels,
            cfg.undersample_rate,
            cfg.seed ^ (fold as u64).wrapping_mul(0xA24B_AED4_963E_E407),
        )?;
        let sub = ds.select_rows(&train);
        let model = train_forest(
            &sub.rows,
            &sub.labels,
            &cfg.forest,
            cfg.seed.wrapping_add(fold as u64),
        )?;
        for &i in &test {
            scores.push((predict_proba(&model, &ds.rows[i])?, ds.labels[i]));
        }
        per_fold.push(FoldStats {
            fold,
            test_rows: test.len(),
            test_positives: test_pos,
            train_rows_after_undersampling: train.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::data("all folds skipped; no test scores"));
    }
    let mut report = report_from_scores(&scores, cfg.seed);
    report.folds_used = cfg.folds - skipped;
    report.folds_skipped = skipped;
    report.per_fold = per_fold;
    Ok(report)
}

/// One report per feature combo, on identical folds and seeds (paired
/// comparison across combos).
pub fn feature_set_experiment(
    ds: &Dataset,
    combos: &[FeatureCombo],
    e1: E1Definition,
    cfg: &CvConfig,
) -> Result<Vec<(String, EvalReport)>> {
    let assign = make_folds(ds.len(), cfg.folds, cfg.seed);
    let mut out = Vec::with_capacity(combos.len());
    for combo in combos {
        let cols = ds.combo_columns(combo, e1)?;
        let sub = ds.select_columns(&cols);
        let report = evaluate_cv_with_folds(&sub, &assign, cfg)?;
        out.push((combo.name(), report));
    }
    Ok(out)
}
