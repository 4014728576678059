//! Train / score / classify pipeline and its evaluation tooling.

mod baseline;
mod cv;
mod model_io;
mod roc;

pub use baseline::{baseline_fourier_energy, baseline_wavelet_band, wavelet_band_region};
pub use cv::{
    cross_validate, evaluate_model, stratified_folds, BaselineKind, BaselineReport, EvalReport,
    FoldReport,
};
pub use model_io::{read_model, write_model, MODEL_FORMAT_VERSION};
pub use roc::{
    auc, binary_metrics, bootstrap_auc_ci, roc_curve, select_threshold, write_roc_csv,
    BinaryMetrics, RocCurve, RocPoint, ThresholdCriterion,
};

use rayon::prelude::*;

use crate::dataset::{Label, LabeledDataset};
use crate::energy::{eci, Region};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::separability::{
    class_stats, optimize_region, AdmissibleFamily, ClassStats, FamilyGenerator, Orientation,
};
use crate::signal::{normalize, Signal};
use crate::transform::{project, CoefficientField, GridSpec};

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 2000;
pub const DEFAULT_BAND_HZ: (f64, f64) = (2500.0, 3500.0);

/// Everything the pipeline needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig<T> {
    pub grid: GridSpec<T>,
    pub family: FamilyGenerator,
    pub orientation: Orientation,
    pub criterion: ThresholdCriterion,
    pub n_boot: usize,
    pub fourier_band_hz: (T, T),
    pub wavelet_band_hz: (T, T),
    pub seed: u64,
    pub fingerprint: String,
}

impl<T: Scalar> DetectorConfig<T> {
    /// Defaults around `grid`: a lattice family, defective-high orientation,
    /// Youden thresholds and the 2.5–3.5 kHz baseline band.
    pub fn new(grid: GridSpec<T>, seed: u64) -> Self {
        Self {
            grid,
            family: FamilyGenerator::RectGrid {
                scale_step: 4,
                time_step: 8,
                min_scale_extent: 1,
                max_scale_extent: usize::MAX,
                min_time_extent: 1,
                max_time_extent: usize::MAX,
            },
            orientation: Orientation::DefectiveHigh,
            criterion: ThresholdCriterion::Youden,
            n_boot: DEFAULT_BOOTSTRAP_REPLICATES,
            fourier_band_hz: (T::lit(DEFAULT_BAND_HZ.0), T::lit(DEFAULT_BAND_HZ.1)),
            wavelet_band_hz: (T::lit(DEFAULT_BAND_HZ.0), T::lit(DEFAULT_BAND_HZ.1)),
            seed,
            fingerprint: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel<T> {
    pub grid: GridSpec<T>,
    pub region: Region,
    pub tau: T,
    pub healthy: ClassStats<T>,
    pub defective: ClassStats<T>,
    pub j_star: T,
    pub seed: u64,
    pub fingerprint: String,
}

/// A trained model plus the ids left out for having zero energy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T> {
    pub model: DetectorModel<T>,
    pub excluded: Vec<String>,
    pub train_scores: Vec<T>,
    pub train_labels: Vec<Label>,
}

fn check_length<T: Scalar>(grid: &GridSpec<T>, x: &Signal<T>) -> Result<()> {
    if x.len() != grid.num_samples() {
        return Err(Error::InvalidParams(format!(
            "signal has {} samples, grid expects {}",
            x.len(),
            grid.num_samples()
        )));
    }
    Ok(())
}

/// Coefficient field of the unit-energy version of `x`.
pub fn normalized_field<T: Scalar>(grid: &GridSpec<T>, x: &Signal<T>) -> Result<CoefficientField<T>> {
    check_length(grid, x)?;
    project(&normalize(x)?, grid)
}

/// Normalises, projects, selects `Ω*` on the training data and fits `τ`
/// on the training scores. Zero-energy items are skipped and reported.
pub fn train<T: Scalar>(data: &LabeledDataset<T>, config: &DetectorConfig<T>) -> Result<TrainOutcome<T>> {
    let fields: Vec<Result<CoefficientField<T>>> = data
        .items()
        .par_iter()
        .map(|item| normalized_field(&config.grid, &item.signal))
        .collect();
    let mut excluded = Vec::new();
    let mut kept: Vec<(Label, CoefficientField<T>)> = Vec::new();
    for (item, field) in data.items().iter().zip(fields) {
        match field {
            Ok(f) => kept.push((item.label, f)),
            Err(Error::ZeroEnergySignal(_)) => excluded.push(item.id.clone()),
            Err(e) => return Err(e),
        }
    }
    let (healthy, defective): (Vec<_>, Vec<_>) = kept.iter().partition(|(l, _)| *l == Label::Healthy);
    let healthy: Vec<CoefficientField<T>> = healthy.into_iter().map(|(_, f)| f.clone()).collect();
    let defective: Vec<CoefficientField<T>> = defective.into_iter().map(|(_, f)| f.clone()).collect();
    if healthy.len() < 2 || defective.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "training needs >= 2 usable items per class, got {} healthy and {} defective",
            healthy.len(),
            defective.len()
        )));
    }
    let family = AdmissibleFamily::new(config.family.clone(), &config.grid)?;
    let search = optimize_region(&healthy, &defective, &family, config.orientation)?;

    let train_scores: Vec<T> = kept
        .par_iter()
        .map(|(_, f)| eci(f, &search.region).map(|v| v.value))
        .collect::<Result<_>>()?;
    let train_labels: Vec<Label> = kept.iter().map(|(l, _)| *l).collect();
    let roc = roc_curve(&train_scores, &train_labels)?;
    let tau = select_threshold(&roc, config.criterion);
    let pick = |label| -> Vec<T> {
        train_scores
            .iter()
            .zip(&train_labels)
            .filter(|(_, &l)| l == label)
            .map(|(&s, _)| s)
            .collect()
    };
    let model = DetectorModel {
        grid: config.grid.clone(),
        region: search.region,
        tau,
        healthy: class_stats(&pick(Label::Healthy))?,
        defective: class_stats(&pick(Label::Defective))?,
        j_star: search.j_star,
        seed: config.seed,
        fingerprint: config.fingerprint.clone(),
    };
    Ok(TrainOutcome {
        model,
        excluded,
        train_scores,
        train_labels,
    })
}

/// `z = ECI_Ω*` of the normalised signal.
pub fn score<T: Scalar>(model: &DetectorModel<T>, x: &Signal<T>) -> Result<T> {
    Ok(eci(&normalized_field(&model.grid, x)?, &model.region)?.value)
}

/// Defective iff `z > τ`; `z = τ` is healthy.
pub fn decide<T: Scalar>(z: T, tau: T) -> Label {
    if z > tau {
        Label::Defective
    } else {
        Label::Healthy
    }
}

pub fn classify<T: Scalar>(model: &DetectorModel<T>, x: &Signal<T>) -> Result<Label> {
    Ok(decide(score(model, x)?, model.tau))
}
