//! ROC curves, AUC, threshold selection and bootstrap intervals.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint<T> {
    pub fpr: T,
    pub tpr: T,
    /// Rates are those of the rule `z ≥ threshold`; `+∞` marks the origin.
    pub threshold: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    pub points: Vec<RocPoint<T>>,
    pub auc: T,
    pub n_healthy: usize,
    pub n_defective: usize,
}

fn split_counts(labels: &[Label]) -> (usize, usize) {
    let nd = labels.iter().filter(|&&l| l == Label::Defective).count();
    (labels.len() - nd, nd)
}

/// Sweeps the unique scores from high to low. Tied scores enter in one step,
/// so the trapezoidal AUC equals the Mann–Whitney statistic with ties as ½.
pub fn roc_curve<T: Scalar>(scores: &[T], labels: &[Label]) -> Result<RocCurve<T>> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidParams(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParams("scores contain NaN".into()));
    }
    let (nh, nd) = split_counts(labels);
    if nh == 0 || nd == 0 {
        return Err(Error::SingleClassInput(format!(
            "ROC needs both classes, got {nh} healthy and {nd} defective"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("no NaN"));

    let rate = |count: usize, total: usize| T::from_count(count) / T::from_count(total);
    let mut points = vec![RocPoint {
        fpr: T::zero(),
        tpr: T::zero(),
        threshold: T::infinity(),
    }];
    // Twice the area, in pair counts, so the sum is exact for moderate sizes.
    let mut area2: u128 = 0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            match labels[order[i]] {
                Label::Defective => tp += 1,
                Label::Healthy => fp += 1,
            }
            i += 1;
        }
        area2 += ((fp - fp0) * (tp + tp0)) as u128;
        points.push(RocPoint {
            fpr: rate(fp, nh),
            tpr: rate(tp, nd),
            threshold: s,
        });
    }
    let auc = T::lit(area2 as f64) / (T::lit(2.0) * T::from_count(nh) * T::from_count(nd));
    Ok(RocCurve {
        points,
        auc,
        n_healthy: nh,
        n_defective: nd,
    })
}

pub fn auc<T: Scalar>(scores: &[T], labels: &[Label]) -> Result<T> {
    Ok(roc_curve(scores, labels)?.auc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdCriterion {
    #[default]
    Youden,
    Accuracy,
    /// Maximises the AUC of the thresholded binary rule, `(1 + TPR - FPR)/2`,
    /// which selects the same point as Youden's index.
    AucValidation,
}

impl ThresholdCriterion {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdCriterion::Youden => "youden",
            ThresholdCriterion::Accuracy => "accuracy",
            ThresholdCriterion::AucValidation => "auc_validation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "youden" => Ok(Self::Youden),
            "accuracy" => Ok(Self::Accuracy),
            "auc_validation" => Ok(Self::AucValidation),
            other => Err(Error::Parse(format!("unknown threshold criterion '{other}'"))),
        }
    }
}

/// Threshold `τ` for the rule "defective iff `z > τ`".
///
/// The winning point's cut lies between its score and the next lower unique
/// score; the midpoint is returned. Ties go to the larger threshold. The last
/// point (everything defective) maps to `s_min - 1`, the origin to `s_max`.
pub fn select_threshold<T: Scalar>(roc: &RocCurve<T>, criterion: ThresholdCriterion) -> T {
    let pts = &roc.points;
    if pts.len() == 1 {
        return pts[0].threshold;
    }
    let (nh, nd) = (T::from_count(roc.n_healthy), T::from_count(roc.n_defective));
    let objective = |p: &RocPoint<T>| match criterion {
        ThresholdCriterion::Youden | ThresholdCriterion::AucValidation => p.tpr - p.fpr,
        ThresholdCriterion::Accuracy => (p.tpr * nd + (T::one() - p.fpr) * nh) / (nh + nd),
    };
    let mut best = 0;
    for i in 1..pts.len() {
        if objective(&pts[i]) > objective(&pts[best]) {
            best = i;
        }
    }
    let last = pts.len() - 1;
    if best == 0 {
        pts[1].threshold
    } else if best == last {
        pts[last].threshold - T::one()
    } else {
        T::lit(0.5) * (pts[best].threshold + pts[best + 1].threshold)
    }
}

/// Confusion rates of the rule "defective iff `z > τ`".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryMetrics<T> {
    pub accuracy: T,
    pub sensitivity: T,
    pub specificity: T,
}

pub fn binary_metrics<T: Scalar>(scores: &[T], labels: &[Label], tau: T) -> BinaryMetrics<T> {
    let (nh, nd) = split_counts(labels);
    let tp = scores
        .iter()
        .zip(labels)
        .filter(|(&z, &l)| l == Label::Defective && z > tau)
        .count();
    let tn = scores
        .iter()
        .zip(labels)
        .filter(|(&z, &l)| l == Label::Healthy && z <= tau)
        .count();
    let ratio = |a: usize, b: usize| {
        if b == 0 {
            T::nan()
        } else {
            T::from_count(a) / T::from_count(b)
        }
    };
    BinaryMetrics {
        accuracy: ratio(tp + tn, nh + nd),
        sensitivity: ratio(tp, nd),
        specificity: ratio(tn, nh),
    }
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
fn quantile<T: Scalar>(sorted: &[T], q: f64) -> T {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::lit(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// 95% stratified percentile bootstrap interval for the AUC. Replicate `b`
/// draws from its own ChaCha stream, so the result does not depend on the
/// thread schedule.
pub fn bootstrap_auc_ci<T: Scalar>(
    scores: &[T],
    labels: &[Label],
    n_boot: usize,
    seed: u64,
) -> Result<(T, T)> {
    if n_boot < 100 {
        return Err(Error::InvalidParams(format!("n_boot = {n_boot} is below 100")));
    }
    roc_curve(scores, labels)?;
    let h: Vec<T> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Healthy)
        .map(|(&s, _)| s)
        .collect();
    let d: Vec<T> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Defective)
        .map(|(&s, _)| s)
        .collect();
    let mut labels_b = vec![Label::Healthy; h.len()];
    labels_b.extend(std::iter::repeat_n(Label::Defective, d.len()));
    let mut aucs: Vec<T> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let mut sample: Vec<T> = Vec::with_capacity(h.len() + d.len());
            sample.extend((0..h.len()).map(|_| h[rng.random_range(0..h.len())]));
            sample.extend((0..d.len()).map(|_| d[rng.random_range(0..d.len())]));
            roc_curve(&sample, &labels_b).map(|r| r.auc)
        })
        .collect::<Result<Vec<_>>>()?;
    aucs.sort_by(|a, b| a.partial_cmp(b).expect("finite AUC"));
    Ok((quantile(&aucs, 0.025), quantile(&aucs, 0.975)))
}

/// Writes `threshold,fpr,tpr`; the origin's threshold is written `inf`.
pub fn write_roc_csv<T: Scalar, W: Write>(
    roc: &RocCurve<T>,
    metadata: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "threshold,fpr,tpr")?;
    for p in &roc.points {
        if p.threshold.is_infinite() {
            writeln!(out, "inf,{:.16e},{:.16e}", p.fpr, p.tpr)?;
        } else {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", p.threshold, p.fpr, p.tpr)?;
        }
    }
    Ok(())
}
