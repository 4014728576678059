//! Stratified K-fold evaluation, held-out model evaluation and the report
//! CSV.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::baseline::{baseline_fourier_energy, baseline_wavelet_band, wavelet_band_region};
use super::roc::{binary_metrics, bootstrap_auc_ci, roc_curve, select_threshold, BinaryMetrics, RocCurve};
use super::{score, train, DetectorConfig, DetectorModel};
use crate::dataset::{Label, LabeledDataset};
use crate::energy::Region;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};
use crate::separability::{welch_t_test, WelchTest};

/// Fold index per item. Each class is shuffled with its own ChaCha stream and
/// dealt round-robin; the defective deal starts where the healthy one ended so
/// fold sizes stay balanced when a class has fewer than `k` items.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > labels.len() {
        return Err(Error::InsufficientSamples(format!(
            "{k}-fold split of {} items is impossible",
            labels.len()
        )));
    }
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for (stream, class) in [Label::Healthy, Label::Defective].into_iter().enumerate() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            folds[i] = (offset + pos) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport<T> {
    pub fold: usize,
    pub train_ids: Vec<String>,
    pub eval_ids: Vec<String>,
    pub region: Region,
    pub tau: T,
    /// NaN when the held-out fold lacks one class.
    pub auc: T,
    pub metrics: BinaryMetrics<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Fourier,
    WaveletBand,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Fourier => "baseline_fourier",
            BaselineKind::WaveletBand => "baseline_waveletband",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport<T> {
    pub kind: BaselineKind,
    pub auc: T,
    pub auc_ci: (T, T),
    pub metrics: BinaryMetrics<T>,
    pub tau: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub auc: T,
    pub auc_ci: (T, T),
    pub metrics: BinaryMetrics<T>,
    /// Model threshold, or the mean of the fold thresholds under CV.
    pub tau: T,
    pub folds: Vec<FoldReport<T>>,
    pub ids: Vec<String>,
    /// Scores aligned with `ids`: ECI values for a fixed model, held-out
    /// margins `z - τ_fold` under cross-validation.
    pub scores: Vec<T>,
    pub labels: Vec<Label>,
    pub roc: RocCurve<T>,
    pub welch: Option<WelchTest>,
    pub baselines: Vec<BaselineReport<T>>,
    /// Items skipped for zero energy.
    pub excluded: Vec<String>,
}

fn mean<T: Scalar>(v: &[T]) -> T {
    pairwise_sum(v) / T::from_count(v.len())
}

fn split<T: Scalar>(scores: &[T], labels: &[Label]) -> (Vec<T>, Vec<T>) {
    let pick = |c| scores.iter().zip(labels).filter(|(_, &l)| l == c).map(|(&s, _)| s).collect();
    (pick(Label::Healthy), pick(Label::Defective))
}

/// Sign that makes the defective class score higher on the training data,
/// followed by the threshold fitted on the oriented training scores.
fn fit_oriented<T: Scalar>(scores: &[T], labels: &[Label], config: &DetectorConfig<T>) -> Result<(T, T)> {
    let (h, d) = split(scores, labels);
    let sign = if mean(&d) >= mean(&h) { T::one() } else { -T::one() };
    let oriented: Vec<T> = scores.iter().map(|&s| s * sign).collect();
    let tau = select_threshold(&roc_curve(&oriented, labels)?, config.criterion);
    Ok((sign, tau))
}

struct Features<T> {
    fourier: Vec<T>,
    band: Vec<T>,
}

fn baseline_features<T: Scalar>(data: &LabeledDataset<T>, config: &DetectorConfig<T>, idx: &[usize]) -> Result<Features<T>> {
    let fs = data.items()[idx[0]].signal.sample_rate();
    let band = wavelet_band_region(&config.grid, config.wavelet_band_hz, fs)?;
    let pairs: Vec<(T, T)> = idx
        .par_iter()
        .map(|&i| {
            let x = &data.items()[i].signal;
            Ok((
                baseline_fourier_energy(x, config.fourier_band_hz)?,
                baseline_wavelet_band(x, &config.grid, &band)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(Features {
        fourier: pairs.iter().map(|p| p.0).collect(),
        band: pairs.iter().map(|p| p.1).collect(),
    })
}

fn summarize<T: Scalar>(
    scores: &[T],
    margins: &[T],
    labels: &[Label],
    config: &DetectorConfig<T>,
) -> Result<(RocCurve<T>, (T, T), BinaryMetrics<T>)> {
    let roc = roc_curve(scores, labels)?;
    let ci = bootstrap_auc_ci(scores, labels, config.n_boot, config.seed)?;
    Ok((roc, ci, binary_metrics(margins, labels, T::zero())))
}

fn require_both_classes(labels: &[Label]) -> Result<()> {
    for class in [Label::Healthy, Label::Defective] {
        if !labels.contains(&class) {
            return Err(Error::SingleClassInput(format!("no usable {class} items to evaluate")));
        }
    }
    Ok(())
}

fn nonzero_indices<T: Scalar>(data: &LabeledDataset<T>) -> (Vec<usize>, Vec<String>) {
    let mut keep = Vec::new();
    let mut excluded = Vec::new();
    for (i, item) in data.items().iter().enumerate() {
        if item.signal.discrete_energy() > T::zero() {
            keep.push(i);
        } else {
            excluded.push(item.id.clone());
        }
    }
    (keep, excluded)
}

/// Stratified `k`-fold cross-validation. Region search and threshold fitting
/// see only the training folds.
///
/// Folds may select different regions, so raw ECI values from different
/// folds are not comparable. The pooled summary therefore uses each held-out
/// item's margin `z - τ_fold`, the quantity its fold's rule compares with 0.
pub fn cross_validate<T: Scalar>(
    data: &LabeledDataset<T>,
    k: usize,
    config: &DetectorConfig<T>,
    with_baselines: bool,
) -> Result<EvalReport<T>> {
    let (keep, excluded) = nonzero_indices(data);
    let labels: Vec<Label> = keep.iter().map(|&i| data.items()[i].label).collect();
    require_both_classes(&labels)?;
    let ids: Vec<String> = keep.iter().map(|&i| data.items()[i].id.clone()).collect();
    let assignment = stratified_folds(&labels, k, config.seed)?;

    struct FoldOut<T> {
        report: FoldReport<T>,
        eval_pos: Vec<usize>,
        scores: Vec<T>,
    }
    let folds: Vec<FoldOut<T>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train_pos: Vec<usize> = (0..keep.len()).filter(|&p| assignment[p] != f).collect();
            let eval_pos: Vec<usize> = (0..keep.len()).filter(|&p| assignment[p] == f).collect();
            let train_ids: Vec<String> = train_pos.iter().map(|&p| ids[p].clone()).collect();
            let eval_ids: Vec<String> = eval_pos.iter().map(|&p| ids[p].clone()).collect();
            let seen: HashSet<&String> = train_ids.iter().collect();
            if eval_ids.iter().any(|id| seen.contains(id)) {
                return Err(Error::InvalidParams(format!("fold {f} leaks held-out ids into training")));
            }
            let train_idx: Vec<usize> = train_pos.iter().map(|&p| keep[p]).collect();
            let model = train(&data.subset(&train_idx), config)?.model;
            let scores: Vec<T> = eval_pos
                .iter()
                .map(|&p| score(&model, &data.items()[keep[p]].signal))
                .collect::<Result<_>>()?;
            let fold_labels: Vec<Label> = eval_pos.iter().map(|&p| labels[p]).collect();
            let auc = roc_curve(&scores, &fold_labels).map(|r| r.auc).unwrap_or(T::nan());
            let metrics = binary_metrics(&scores, &fold_labels, model.tau);
            Ok(FoldOut {
                report: FoldReport {
                    fold: f,
                    train_ids,
                    eval_ids,
                    region: model.region,
                    tau: model.tau,
                    auc,
                    metrics,
                },
                eval_pos,
                scores,
            })
        })
        .collect::<Result<_>>()?;

    let mut margins = vec![T::zero(); keep.len()];
    for fo in &folds {
        for (&p, &z) in fo.eval_pos.iter().zip(&fo.scores) {
            margins[p] = z - fo.report.tau;
        }
    }
    let (roc, auc_ci, metrics) = summarize(&margins, &margins, &labels, config)?;
    let taus: Vec<T> = folds.iter().map(|f| f.report.tau).collect();
    let (h, d) = split(&margins, &labels);

    let mut baselines = Vec::new();
    if with_baselines {
        let feats = baseline_features(data, config, &keep)?;
        for (kind, values) in [
            (BaselineKind::Fourier, &feats.fourier),
            (BaselineKind::WaveletBand, &feats.band),
        ] {
            let mut oriented = vec![T::zero(); keep.len()];
            let mut b_margins = vec![T::zero(); keep.len()];
            let mut b_taus = Vec::with_capacity(k);
            for f in 0..k {
                let tr: Vec<usize> = (0..keep.len()).filter(|&p| assignment[p] != f).collect();
                let tr_scores: Vec<T> = tr.iter().map(|&p| values[p]).collect();
                let tr_labels: Vec<Label> = tr.iter().map(|&p| labels[p]).collect();
                let (sign, tau) = fit_oriented(&tr_scores, &tr_labels, config)?;
                b_taus.push(tau);
                for p in (0..keep.len()).filter(|&p| assignment[p] == f) {
                    oriented[p] = values[p] * sign;
                    b_margins[p] = oriented[p] - tau;
                }
            }
            let (b_roc, b_ci, b_metrics) = summarize(&b_margins, &b_margins, &labels, config)?;
            baselines.push(BaselineReport {
                kind,
                auc: b_roc.auc,
                auc_ci: b_ci,
                metrics: b_metrics,
                tau: mean(&b_taus),
            });
        }
    }

    Ok(EvalReport {
        auc: roc.auc,
        auc_ci,
        metrics,
        tau: mean(&taus),
        folds: folds.into_iter().map(|f| f.report).collect(),
        ids,
        welch: welch_t_test(&h, &d).ok(),
        scores: margins,
        labels,
        roc,
        baselines,
        excluded,
    })
}

/// Scores every item with a fixed model. Baseline orientation and thresholds
/// are fitted on the same items, so their figures are in-sample.
pub fn evaluate_model<T: Scalar>(
    data: &LabeledDataset<T>,
    model: &DetectorModel<T>,
    config: &DetectorConfig<T>,
    with_baselines: bool,
) -> Result<EvalReport<T>> {
    let (keep, excluded) = nonzero_indices(data);
    let labels: Vec<Label> = keep.iter().map(|&i| data.items()[i].label).collect();
    require_both_classes(&labels)?;
    let ids: Vec<String> = keep.iter().map(|&i| data.items()[i].id.clone()).collect();
    let scores: Vec<T> = keep
        .par_iter()
        .map(|&i| score(model, &data.items()[i].signal))
        .collect::<Result<_>>()?;
    let margins: Vec<T> = scores.iter().map(|&z| z - model.tau).collect();
    let (roc, auc_ci, metrics) = summarize(&scores, &margins, &labels, config)?;
    let (h, d) = split(&scores, &labels);

    let mut baselines = Vec::new();
    if with_baselines {
        let feats = baseline_features(data, config, &keep)?;
        for (kind, values) in [
            (BaselineKind::Fourier, feats.fourier),
            (BaselineKind::WaveletBand, feats.band),
        ] {
            let (sign, tau) = fit_oriented(&values, &labels, config)?;
            let oriented: Vec<T> = values.iter().map(|&v| v * sign).collect();
            let b_margins: Vec<T> = oriented.iter().map(|&v| v - tau).collect();
            let (b_roc, b_ci, b_metrics) = summarize(&oriented, &b_margins, &labels, config)?;
            baselines.push(BaselineReport {
                kind,
                auc: b_roc.auc,
                auc_ci: b_ci,
                metrics: b_metrics,
                tau,
            });
        }
    }

    Ok(EvalReport {
        auc: roc.auc,
        auc_ci,
        metrics,
        tau: model.tau,
        folds: Vec::new(),
        ids,
        welch: welch_t_test(&h, &d).ok(),
        scores,
        labels,
        roc,
        baselines,
        excluded,
    })
}

impl<T: Scalar> EvalReport<T> {
    /// Writes `fold,auc,accuracy,sensitivity,specificity,tau`: one row per
    /// fold, a `pooled` row, then one row per baseline. Confidence intervals
    /// and the Welch test go into leading comment lines.
    pub fn write_csv<W: Write>(&self, metadata: &[(&str, String)], mut out: W) -> io::Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "# pooled_auc_ci={:.16e},{:.16e}", self.auc_ci.0, self.auc_ci.1)?;
        for b in &self.baselines {
            writeln!(out, "# {}_auc_ci={:.16e},{:.16e}", b.kind.name(), b.auc_ci.0, b.auc_ci.1)?;
        }
        if let Some(w) = &self.welch {
            writeln!(out, "# welch_t={:.16e}", w.t)?;
            writeln!(out, "# welch_df={:.16e}", w.df)?;
            writeln!(out, "# welch_p={:.16e}", w.p)?;
        }
        if !self.excluded.is_empty() {
            writeln!(out, "# excluded={}", self.excluded.join(";"))?;
        }
        writeln!(out, "fold,auc,accuracy,sensitivity,specificity,tau")?;
        let row = |out: &mut W, name: &str, auc: T, m: &BinaryMetrics<T>, tau: T| {
            writeln!(
                out,
                "{name},{auc:.16e},{:.16e},{:.16e},{:.16e},{tau:.16e}",
                m.accuracy, m.sensitivity, m.specificity
            )
        };
        for f in &self.folds {
            row(&mut out, &f.fold.to_string(), f.auc, &f.metrics, f.tau)?;
        }
        row(&mut out, "pooled", self.auc, &self.metrics, self.tau)?;
        for b in &self.baselines {
            row(&mut out, b.kind.name(), b.auc, &b.metrics, b.tau)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_plus_twenty_in_ten_folds_is_two_plus_two() {
        let labels: Vec<Label> = (0..40).map(|i| if i % 2 == 0 { Label::Healthy } else { Label::Defective }).collect();
        let folds = stratified_folds(&labels, 10, 42).unwrap();
        for f in 0..10 {
            let h = (0..40).filter(|&i| folds[i] == f && labels[i] == Label::Healthy).count();
            let d = (0..40).filter(|&i| folds[i] == f && labels[i] == Label::Defective).count();
            assert_eq!((h, d), (2, 2));
        }
        assert_eq!(folds, stratified_folds(&labels, 10, 42).unwrap());
        assert_ne!(folds, stratified_folds(&labels, 10, 43).unwrap());
    }

    #[test]
    fn small_classes_spread_across_folds() {
        let labels = [Label::Healthy, Label::Healthy, Label::Healthy, Label::Defective, Label::Defective];
        let folds = stratified_folds(&labels, 5, 1).unwrap();
        let mut sizes = [0; 5];
        folds.iter().for_each(|&f| sizes[f] += 1);
        assert_eq!(sizes, [1; 5]);
        assert!(stratified_folds(&labels, 6, 1).is_err());
        assert!(stratified_folds(&labels, 1, 1).is_err());
    }

    fn small_setup() -> (LabeledDataset<f64>, DetectorConfig<f64>) {
        use crate::signal::SampleGrid;
        use crate::synth::{generate_dataset, SyntheticConfig};
        use crate::transform::{GridSpec, StftSpec, WindowKind};
        let cfg = SyntheticConfig {
            grid: SampleGrid::new(17000.0, 1024).unwrap(),
            n_healthy: 6,
            n_defective: 6,
            ..SyntheticConfig::default()
        };
        let grid = GridSpec::stft(StftSpec::new(WindowKind::Hann, 64, 16).unwrap(), 1024).unwrap();
        let mut config = DetectorConfig::new(grid, 3);
        config.n_boot = 100;
        (generate_dataset(&cfg).unwrap(), config)
    }

    #[test]
    fn pooled_scores_are_fold_margins() {
        let (data, config) = small_setup();
        let report = cross_validate(&data, 3, &config, false).unwrap();
        for fold in &report.folds {
            let idx: Vec<usize> = (0..data.len()).filter(|&i| !fold.eval_ids.contains(&data.items()[i].id)).collect();
            let model = train(&data.subset(&idx), &config).unwrap().model;
            assert_eq!(model.tau, fold.tau);
            for id in &fold.eval_ids {
                let p = report.ids.iter().position(|x| x == id).unwrap();
                let z = score(&model, &data.find(id).unwrap().signal).unwrap();
                assert_eq!(report.scores[p], z - fold.tau);
            }
        }
    }

    #[test]
    fn one_class_datasets_are_rejected() {
        let (data, config) = small_setup();
        let healthy: Vec<usize> = (0..data.len()).filter(|&i| data.items()[i].label == Label::Healthy).collect();
        let only = data.subset(&healthy);
        assert!(matches!(cross_validate(&only, 2, &config, false), Err(Error::SingleClassInput(_))));
        let model = train(&data, &config).unwrap().model;
        assert!(matches!(evaluate_model(&only, &model, &config, false), Err(Error::SingleClassInput(_))));
    }
}
