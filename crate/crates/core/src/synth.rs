//! Parametric healthy/defective datasets and first-order sensitivity of the
//! coefficient field and of the ECI to damping and frequency perturbations.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataset::{Label, LabeledDataset, LabeledItem};
use crate::energy::{eci, Region};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};
use crate::signal::{add_noise, damped_impulse, perturb, ImpulseParams, NoiseSpec, SampleGrid, Signal};
use crate::transform::{project, CoefficientField, GridSpec};

pub const DEFAULT_SEED: u64 = 42;

/// Largest relative perturbations treated as "small" for the first-order
/// checks.
pub const SMALL_RELATIVE_DAMPING: f64 = 0.05;
pub const SMALL_RELATIVE_FREQUENCY: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig<T> {
    pub base: ImpulseParams<T>,
    pub delta_alpha: T,
    pub delta_omega: T,
    pub grid: SampleGrid<T>,
    /// Noise level; its seed is the root seed of the whole dataset.
    pub noise: NoiseSpec<T>,
    pub n_healthy: usize,
    pub n_defective: usize,
    /// Log-normal relative spread applied independently to `α` and `ω`.
    pub jitter: T,
}

impl<T: Scalar> Default for SyntheticConfig<T> {
    fn default() -> Self {
        let two_pi = T::TAU();
        Self {
            base: ImpulseParams::new(T::one(), T::lit(150.0), two_pi * T::lit(3000.0))
                .expect("valid default"),
            delta_alpha: T::lit(100.0),
            delta_omega: -two_pi * T::lit(150.0),
            grid: SampleGrid::new(T::lit(17000.0), 8192).expect("valid default"),
            noise: NoiseSpec::white(T::lit(20.0), DEFAULT_SEED),
            n_healthy: 20,
            n_defective: 20,
            jitter: T::lit(0.05),
        }
    }
}

impl<T: Scalar> SyntheticConfig<T> {
    pub fn seed(&self) -> u64 {
        self.noise.seed
    }

    /// Same configuration with both classes drawn from the healthy parameters.
    pub fn null(&self) -> Self {
        Self {
            delta_alpha: T::zero(),
            delta_omega: T::zero(),
            ..self.clone()
        }
    }

    pub fn defective_params(&self) -> Result<ImpulseParams<T>> {
        perturb(&self.base, self.delta_alpha, self.delta_omega)
    }

    pub fn validate(&self) -> Result<()> {
        self.defective_params()?;
        if self.n_healthy == 0 || self.n_defective == 0 {
            return Err(Error::InvalidParams("each class needs at least one sample".into()));
        }
        if !(self.jitter >= T::zero() && self.jitter.is_finite()) {
            return Err(Error::InvalidParams(format!("jitter {} must be finite and >= 0", self.jitter)));
        }
        Ok(())
    }
}

fn sample_item<T: Scalar>(cfg: &SyntheticConfig<T>, nominal: &ImpulseParams<T>, label: Label, index: usize) -> Result<LabeledItem<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let class_stream = match label {
        Label::Healthy => 0u64,
        Label::Defective => 1u64,
    };
    rng.set_stream((class_stream << 32) | index as u64);
    let mut jitter = || {
        let z: f64 = StandardNormal.sample(&mut rng);
        (cfg.jitter * T::lit(z)).exp()
    };
    let (fa, fw) = (jitter(), jitter());
    let params = ImpulseParams::new(
        nominal.amplitude(),
        nominal.damping() * fa,
        nominal.angular_frequency() * fw,
    )?;
    let noise = NoiseSpec {
        seed: rng.next_u64(),
        ..cfg.noise
    };
    let signal = add_noise(&damped_impulse(&params, cfg.grid), &noise)?;
    let prefix = &label.name()[..1];
    Ok(LabeledItem {
        id: format!("{prefix}{index:03}"),
        label,
        signal,
    })
}

/// Healthy items first, then defective. Every item draws its jitter and noise
/// from a ChaCha stream keyed by (class, index), so the output does not depend
/// on generation order.
pub fn generate_dataset<T: Scalar>(cfg: &SyntheticConfig<T>) -> Result<LabeledDataset<T>> {
    cfg.validate()?;
    let defective = cfg.defective_params()?;
    let jobs: Vec<(Label, usize)> = (0..cfg.n_healthy)
        .map(|i| (Label::Healthy, i))
        .chain((0..cfg.n_defective).map(|i| (Label::Defective, i)))
        .collect();
    let items = jobs
        .par_iter()
        .map(|&(label, i)| {
            let nominal = if label == Label::Healthy { &cfg.base } else { &defective };
            sample_item(cfg, nominal, label, i)
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(items)
}

/// `(∂h/∂α, ∂h/∂ω)` sampled on `grid`.
pub fn param_derivatives<T: Scalar>(params: &ImpulseParams<T>, grid: SampleGrid<T>) -> Result<(Signal<T>, Signal<T>)> {
    let (a, alpha, w) = (params.amplitude(), params.damping(), params.angular_frequency());
    let (mut da, mut dw) = (Vec::with_capacity(grid.num_samples()), Vec::with_capacity(grid.num_samples()));
    for n in 0..grid.num_samples() {
        let t = grid.time(n);
        let env = -t * a * (-alpha * t).exp();
        da.push(env * (w * t).cos());
        dw.push(env * (w * t).sin());
    }
    Ok((
        Signal::new(da, grid.sample_rate())?,
        Signal::new(dw, grid.sample_rate())?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSensitivity<T> {
    pub predicted: CoefficientField<T>,
    pub exact: CoefficientField<T>,
    /// Weighted norm of `exact - predicted`.
    pub residual: T,
}

fn check_lengths<T: Scalar>(grid_spec: &GridSpec<T>, grid: SampleGrid<T>) -> Result<()> {
    if grid_spec.num_samples() != grid.num_samples() {
        return Err(Error::InvalidParams(format!(
            "transform grid expects {} samples, sample grid has {}",
            grid_spec.num_samples(),
            grid.num_samples()
        )));
    }
    Ok(())
}

struct Linearisation<T> {
    base_field: CoefficientField<T>,
    predicted: CoefficientField<T>,
    exact: CoefficientField<T>,
    perturbed_field: CoefficientField<T>,
}

fn linearise<T: Scalar>(
    base: &ImpulseParams<T>,
    delta_alpha: T,
    delta_omega: T,
    grid_spec: &GridSpec<T>,
    grid: SampleGrid<T>,
) -> Result<Linearisation<T>> {
    check_lengths(grid_spec, grid)?;
    let perturbed = perturb(base, delta_alpha, delta_omega)?;
    let (da, dw) = param_derivatives(base, grid)?;
    let base_field = project(&damped_impulse(base, grid), grid_spec)?;
    let perturbed_field = project(&damped_impulse(&perturbed, grid), grid_spec)?;
    let predicted = project(&da, grid_spec)?
        .scaled(num_complex::Complex::new(delta_alpha, T::zero()))
        .add_scaled(&project(&dw, grid_spec)?, delta_omega)?;
    let exact = perturbed_field.difference(&base_field)?;
    Ok(Linearisation {
        base_field,
        predicted,
        exact,
        perturbed_field,
    })
}

/// First-order prediction of the coefficient change against the exact one.
pub fn coefficient_sensitivity<T: Scalar>(
    base: &ImpulseParams<T>,
    delta_alpha: T,
    delta_omega: T,
    grid_spec: &GridSpec<T>,
    grid: SampleGrid<T>,
) -> Result<CoefficientSensitivity<T>> {
    let lin = linearise(base, delta_alpha, delta_omega, grid_spec, grid)?;
    let residual = lin.exact.difference(&lin.predicted)?.weighted_norm();
    Ok(CoefficientSensitivity {
        predicted: lin.predicted,
        exact: lin.exact,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EciVariation<T> {
    pub predicted: T,
    pub exact: T,
}

fn predicted_eci_change<T: Scalar>(base: &CoefficientField<T>, delta: &CoefficientField<T>, region: &Region) -> Result<T> {
    let grid = base.grid();
    region.validate(grid.num_rows(), grid.num_translations())?;
    let (w, dw) = (base.coefficients(), delta.coefficients());
    let mut rows: Vec<Vec<T>> = vec![Vec::new(); grid.num_rows()];
    for (k, m) in region.cells() {
        rows[k].push((w[(k, m)] * dw[(k, m)].conj()).re);
    }
    let per_row: Vec<T> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty())
        .map(|(k, r)| pairwise_sum(r) * grid.measure_weights()[k])
        .collect();
    Ok(T::lit(2.0) * pairwise_sum(&per_row) * grid.translation_step())
}

/// `δECI ≈ 2 Re Σ_Ω W conj(δW) w_k Δb` against `ECI(h_d) - ECI(h_h)`.
pub fn eci_first_order_variation<T: Scalar>(
    base: &ImpulseParams<T>,
    delta_alpha: T,
    delta_omega: T,
    grid_spec: &GridSpec<T>,
    grid: SampleGrid<T>,
    region: &Region,
) -> Result<EciVariation<T>> {
    let lin = linearise(base, delta_alpha, delta_omega, grid_spec, grid)?;
    let predicted = predicted_eci_change(&lin.base_field, &lin.predicted, region)?;
    let exact = eci(&lin.perturbed_field, region)?.value - eci(&lin.base_field, region)?.value;
    Ok(EciVariation { predicted, exact })
}

/// Largest factor `s ≤ 1` keeping `s·(Δα, Δω)` inside the small-perturbation
/// box around `base`.
pub fn small_perturbation_scale<T: Scalar>(base: &ImpulseParams<T>, delta_alpha: T, delta_omega: T) -> T {
    let mut s = T::one();
    if delta_alpha != T::zero() {
        s = s.min(T::lit(SMALL_RELATIVE_DAMPING) * base.damping() / delta_alpha.abs());
    }
    if delta_omega != T::zero() && base.angular_frequency() > T::zero() {
        s = s.min(T::lit(SMALL_RELATIVE_FREQUENCY) * base.angular_frequency() / delta_omega.abs());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow<T> {
    pub scale: T,
    pub delta_alpha: T,
    pub delta_omega: T,
    pub residual_coeff: T,
    pub eci_predicted: T,
    pub eci_exact: T,
    pub residual_eci: T,
    /// `residual(previous row) / residual(this row)`; NaN on the first row.
    pub ratio_coeff: T,
    pub ratio_eci: T,
}

/// Evaluates `steps` rows at perturbation `start_scale · 2^{-j} · (Δα, Δω)`.
pub fn sensitivity_ladder<T: Scalar>(
    cfg: &SyntheticConfig<T>,
    grid_spec: &GridSpec<T>,
    region: &Region,
    start_scale: T,
    steps: usize,
) -> Result<Vec<LadderRow<T>>> {
    let scales: Vec<T> = (0..steps).map(|j| start_scale * T::lit(0.5).powi(j as i32)).collect();
    let mut rows = scales
        .par_iter()
        .map(|&s| evaluate_row(cfg, grid_spec, region, s))
        .collect::<Result<Vec<_>>>()?;
    for j in 1..rows.len() {
        rows[j].ratio_coeff = rows[j - 1].residual_coeff / rows[j].residual_coeff;
        rows[j].ratio_eci = rows[j - 1].residual_eci / rows[j].residual_eci;
    }
    Ok(rows)
}

/// One ladder row at `scale · (Δα, Δω)`; scale 0 gives exact zeros.
pub fn evaluate_row<T: Scalar>(
    cfg: &SyntheticConfig<T>,
    grid_spec: &GridSpec<T>,
    region: &Region,
    scale: T,
) -> Result<LadderRow<T>> {
    let (da, dw) = (cfg.delta_alpha * scale, cfg.delta_omega * scale);
    let coeff = coefficient_sensitivity(&cfg.base, da, dw, grid_spec, cfg.grid)?;
    let var = eci_first_order_variation(&cfg.base, da, dw, grid_spec, cfg.grid, region)?;
    Ok(LadderRow {
        scale,
        delta_alpha: da,
        delta_omega: dw,
        residual_coeff: coeff.residual,
        eci_predicted: var.predicted,
        eci_exact: var.exact,
        residual_eci: (var.exact - var.predicted).abs(),
        ratio_coeff: T::nan(),
        ratio_eci: T::nan(),
    })
}
