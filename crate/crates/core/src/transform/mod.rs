//! Discrete time-frequency analysis operator.
//!
//! A [`GridSpec`] fixes the backend (complex Morlet wavelet or STFT), the
//! signal length, the row axis (scales or one-sided DFT bins) and the
//! translation axis. [`project`] computes the coefficient field
//! `W(k, m) = Σ_n x[n] conj(ψ_{k,m}[n])` with one FFT correlation per row;
//! [`project_direct`] evaluates the same sum literally and serves as the
//! reference implementation.
//!
//! Every grid declares per-row measure weights `w_k` and a translation step
//! `Δb`, so the weighted energy `Σ_k Σ_m |W|² w_k Δb` is backend-agnostic.
//! Wavelet rows carry `w_k = Δa_k / a_k²` with geometric cell widths; STFT
//! rows carry the one-sided folding weights (1 at DC/Nyquist, 2 elsewhere)
//! and coefficients are window-energy compensated so that a signal covered
//! by a squared-window partition of unity keeps its energy exactly.

mod export;
mod frame;
mod stft;
mod wavelet;

pub use export::{
    read_energy_map_csv, write_energy_map_csv, write_energy_map_pgm, EnergyMapTable,
};
pub use frame::{
    apply_frame_operator, estimate_frame_bounds, estimate_frame_bounds_refined, FrameBounds,
};
pub use stft::{StftSpec, WindowKind, DEFAULT_HOP, DEFAULT_WINDOW_LENGTH};
pub use wavelet::{
    admissibility_constant, admissibility_integral, WaveletFamily, WaveletSpec,
    ATOM_TRUNCATION_SIGMAS, DEFAULT_MORLET_CENTER_FREQUENCY,
};

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend<T> {
    Wavelet(WaveletSpec<T>),
    Stft(StftSpec),
}

impl<T> Backend<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Wavelet(_) => "wavelet",
            Backend::Stft(_) => "stft",
        }
    }
}

/// Sampled scale/translation grid bound to a signal length.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    backend: Backend<T>,
    num_samples: usize,
    rows: Vec<T>,
    translations: Vec<usize>,
    measure_weights: Vec<T>,
    translation_step: T,
}

impl<T: Scalar> GridSpec<T> {
    /// Wavelet grid with explicit scales (in samples) and translations.
    pub fn wavelet(
        spec: WaveletSpec<T>,
        num_samples: usize,
        scales: Vec<T>,
        translations: Vec<usize>,
    ) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidGrid("at least one scale is required".into()));
        }
        for (k, &a) in scales.iter().enumerate() {
            if !(a.is_finite() && a > T::zero()) {
                return Err(Error::InvalidGrid(format!("scale {k} = {a} is not > 0")));
            }
            if spec.half_support(a) > num_samples {
                return Err(Error::InvalidGrid(format!(
                    "scale {a} has a truncated half-support wider than the {num_samples}-sample signal"
                )));
            }
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "scales must be strictly increasing".into(),
            ));
        }
        let translation_step = validate_translations::<T>(&translations, num_samples)?;
        let measure_weights = geometric_measure_weights(&scales);
        Ok(Self {
            backend: Backend::Wavelet(spec),
            num_samples,
            rows: scales,
            translations,
            measure_weights,
            translation_step,
        })
    }

    /// Wavelet grid with `num_scales` log-spaced scales in `[min_scale, max_scale]`
    /// and translations every `translation_step` samples.
    pub fn wavelet_log(
        spec: WaveletSpec<T>,
        num_samples: usize,
        min_scale: T,
        max_scale: T,
        num_scales: usize,
        translation_step: usize,
    ) -> Result<Self> {
        if num_scales == 0 || translation_step == 0 {
            return Err(Error::InvalidGrid(
                "num_scales and translation_step must be > 0".into(),
            ));
        }
        if !(min_scale > T::zero() && max_scale >= min_scale) {
            return Err(Error::InvalidGrid(format!(
                "scale range [{min_scale}, {max_scale}] is invalid"
            )));
        }
        let scales = log_space(min_scale, max_scale, num_scales);
        let translations = (0..num_samples).step_by(translation_step).collect();
        Self::wavelet(spec, num_samples, scales, translations)
    }

    /// STFT grid with frames starting every `hop` samples from 0.
    pub fn stft(spec: StftSpec, num_samples: usize) -> Result<Self> {
        let translations = (0..spec.padded_len(num_samples)).step_by(spec.hop()).collect();
        Self::stft_with_translations(spec, num_samples, translations)
    }

    /// STFT grid with explicit frame starts in the padded signal (see
    /// [`StftSpec::lead`]); samples outside the signal are zero.
    pub fn stft_with_translations(
        spec: StftSpec,
        num_samples: usize,
        translations: Vec<usize>,
    ) -> Result<Self> {
        if num_samples == 0 {
            return Err(Error::InvalidGrid("signal length must be > 0".into()));
        }
        validate_translations::<T>(&translations, spec.padded_len(num_samples))?;
        let l = T::from_count(spec.window_length());
        let rows = (0..spec.num_bins())
            .map(|k| T::from_count(k) / l)
            .collect();
        Ok(Self {
            backend: Backend::Stft(spec),
            num_samples,
            rows,
            translations,
            measure_weights: spec.bin_weights(),
            translation_step: T::one(),
        })
    }

    pub fn backend(&self) -> &Backend<T> {
        &self.backend
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    /// Row coordinates: scales in samples (wavelet) or bin frequencies in
    /// cycles per sample (STFT).
    pub fn rows(&self) -> &[T] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn translations(&self) -> &[usize] {
        &self.translations
    }

    pub fn num_translations(&self) -> usize {
        self.translations.len()
    }

    /// Per-row measure weights `w_k`.
    pub fn measure_weights(&self) -> &[T] {
        &self.measure_weights
    }

    /// Translation spacing `Δb`.
    pub fn translation_step(&self) -> T {
        self.translation_step
    }

    /// Row coordinate expressed in Hz, for labelling.
    pub fn row_frequency_hz(&self, row: usize, sample_rate: T) -> T {
        match &self.backend {
            Backend::Stft(_) => self.rows[row] * sample_rate,
            Backend::Wavelet(w) => {
                w.scale_to_angular_frequency(self.rows[row]) * sample_rate / T::TAU()
            }
        }
    }

    /// Rows whose centre frequency lies in `[lo_hz, hi_hz]`, as an inclusive
    /// index range into the ascending row axis.
    pub fn rows_in_band(&self, lo_hz: T, hi_hz: T, sample_rate: T) -> Option<(usize, usize)> {
        let inside: Vec<usize> = (0..self.num_rows())
            .filter(|&k| {
                let f = self.row_frequency_hz(k, sample_rate);
                f >= lo_hz && f <= hi_hz
            })
            .collect();
        Some((*inside.first()?, *inside.last()?))
    }

    /// Columns whose analysis support is clipped by the signal boundary.
    pub fn boundary_columns(&self, row: usize) -> Vec<usize> {
        let n = self.num_samples;
        let reach = match &self.backend {
            Backend::Wavelet(w) => w.half_support(self.rows[row]),
            Backend::Stft(s) => s.window_length(),
        };
        self.translations
            .iter()
            .enumerate()
            .filter(|(_, &b)| match &self.backend {
                Backend::Wavelet(_) => b < reach || b + reach >= n,
                Backend::Stft(s) => b < s.lead() || b + reach > n + s.lead(),
            })
            .map(|(m, _)| m)
            .collect()
    }

    fn check_signal(&self, x: &Signal<T>) -> Result<()> {
        if x.len() != self.num_samples {
            return Err(Error::InvalidGrid(format!(
                "grid is bound to {} samples but the signal has {}",
                self.num_samples,
                x.len()
            )));
        }
        Ok(())
    }
}

fn validate_translations<T: Scalar>(translations: &[usize], num_samples: usize) -> Result<T> {
    if translations.is_empty() {
        return Err(Error::InvalidGrid(
            "at least one translation is required".into(),
        ));
    }
    if let Some(&b) = translations.iter().find(|&&b| b >= num_samples) {
        return Err(Error::InvalidGrid(format!(
            "translation {b} outside 0..{num_samples}"
        )));
    }
    if translations.len() == 1 {
        return Ok(T::one());
    }
    let step = translations[1].saturating_sub(translations[0]);
    if step == 0 || translations.windows(2).any(|w| w[1] != w[0] + step) {
        return Err(Error::InvalidGrid(
            "translations must be uniformly spaced and increasing".into(),
        ));
    }
    Ok(T::from_count(step))
}

fn log_space<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (llo + (lhi - llo) * T::from_count(k) / T::from_count(n - 1)).exp())
        .collect()
}

/// `Δa_k / a_k²` with cell boundaries at geometric midpoints; the outer cells
/// mirror their neighbour's ratio. A single scale gets `Δa = a`.
fn geometric_measure_weights<T: Scalar>(scales: &[T]) -> Vec<T> {
    let m = scales.len();
    if m == 1 {
        return vec![T::one() / scales[0]];
    }
    (0..m)
        .map(|k| {
            let a = scales[k];
            let lower = if k == 0 {
                a * (scales[0] / scales[1]).sqrt()
            } else {
                (scales[k - 1] * a).sqrt()
            };
            let upper = if k == m - 1 {
                a * (scales[m - 1] / scales[m - 2]).sqrt()
            } else {
                (a * scales[k + 1]).sqrt()
            };
            (upper - lower) / (a * a)
        })
        .collect()
}

/// Complex coefficients over a grid, with the energy of the projected signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField<T> {
    coefficients: Array2<Complex<T>>,
    grid: GridSpec<T>,
    source_energy: T,
}

impl<T: Scalar> CoefficientField<T> {
    pub fn new(coefficients: Array2<Complex<T>>, grid: GridSpec<T>, source_energy: T) -> Result<Self> {
        if coefficients.dim() != (grid.num_rows(), grid.num_translations()) {
            return Err(Error::InvalidGrid(format!(
                "coefficient shape {:?} does not match grid {}x{}",
                coefficients.dim(),
                grid.num_rows(),
                grid.num_translations()
            )));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        Ok(Self {
            coefficients,
            grid,
            source_energy,
        })
    }

    pub fn coefficients(&self) -> &Array2<Complex<T>> {
        &self.coefficients
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn measure_weights(&self) -> &[T] {
        self.grid.measure_weights()
    }

    /// `Σ x[n]²` of the signal this field was projected from.
    pub fn source_energy(&self) -> T {
        self.source_energy
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            coefficients: self.coefficients.mapv(|c| c * factor),
            grid: self.grid.clone(),
            source_energy: self.source_energy * factor.norm_sqr(),
        }
    }

    /// Entry-wise `self - other` on the same grid. The source energy of the
    /// result is unknown and set to NaN.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            coefficients: &self.coefficients - &other.coefficients,
            grid: self.grid.clone(),
            source_energy: T::nan(),
        })
    }

    /// Entry-wise `self + factor * other`; source energy is NaN.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Result<Self> {
        self.check_same_grid(other)?;
        let f = Complex::new(factor, T::zero());
        let mut coefficients = self.coefficients.clone();
        coefficients.zip_mut_with(&other.coefficients, |a, &b| *a = *a + b * f);
        Ok(Self {
            coefficients,
            grid: self.grid.clone(),
            source_energy: T::nan(),
        })
    }

    /// Weighted norm `√(Σ |W|² w_k Δb)`.
    pub fn weighted_norm(&self) -> T {
        total_transform_energy(self).sqrt()
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid(
                "coefficient fields live on different grids".into(),
            ));
        }
        Ok(())
    }
}

/// Non-negative energy density `|W|²` over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMap<T> {
    density: Array2<T>,
    grid: GridSpec<T>,
}

impl<T: Scalar> EnergyMap<T> {
    pub fn density(&self) -> &Array2<T> {
        &self.density
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// `Σ_m E(k, m) w_k Δb` for every row.
    pub fn row_energies(&self) -> Vec<T> {
        let db = self.grid.translation_step();
        self.density
            .outer_iter()
            .zip(self.grid.measure_weights())
            .map(|(row, &w)| pairwise_sum(row.as_slice().expect("row-major")) * w * db)
            .collect()
    }
}

pub fn energy_density<T: Scalar>(field: &CoefficientField<T>) -> EnergyMap<T> {
    EnergyMap {
        density: field.coefficients.mapv(|c| c.norm_sqr()),
        grid: field.grid.clone(),
    }
}

/// `Σ_k Σ_m |W(k, m)|² w_k Δb`.
pub fn total_transform_energy<T: Scalar>(field: &CoefficientField<T>) -> T {
    let row_sums: Vec<T> = field
        .coefficients
        .outer_iter()
        .zip(field.grid.measure_weights())
        .map(|(row, &w)| {
            let sq: Vec<T> = row.iter().map(|c| c.norm_sqr()).collect();
            pairwise_sum(&sq) * w
        })
        .collect();
    pairwise_sum(&row_sums) * field.grid.translation_step()
}

/// FFT-accelerated projection onto the grid's atoms.
pub fn project<T: Scalar>(x: &Signal<T>, grid: &GridSpec<T>) -> Result<CoefficientField<T>> {
    grid.check_signal(x)?;
    let coefficients = match grid.backend {
        Backend::Wavelet(spec) => wavelet_fft(x.samples(), grid, &spec),
        Backend::Stft(spec) => stft_fft(x.samples(), grid, &spec),
    };
    CoefficientField::new(coefficients, grid.clone(), x.discrete_energy())
}

/// Literal `O(M·B·support)` summation of `Σ_n x[n] conj(ψ_{k,m}[n])`.
pub fn project_direct<T: Scalar>(x: &Signal<T>, grid: &GridSpec<T>) -> Result<CoefficientField<T>> {
    grid.check_signal(x)?;
    let samples = x.samples();
    let n = samples.len();
    let (m_rows, b_cols) = (grid.num_rows(), grid.num_translations());
    let rows: Vec<Vec<Complex<T>>> = (0..m_rows)
        .into_par_iter()
        .map(|k| match grid.backend {
            Backend::Wavelet(spec) => {
                let a = grid.rows[k];
                let h = spec.half_support(a);
                let amp = T::one() / a.sqrt();
                grid.translations
                    .iter()
                    .map(|&b| {
                        let lo = b.saturating_sub(h);
                        let hi = (b + h).min(n - 1);
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for (i, &v) in samples.iter().enumerate().take(hi + 1).skip(lo) {
                            let t = (T::from_count(i) - T::from_count(b)) / a;
                            acc = acc + (spec.time_domain(t) * amp).conj() * v;
                        }
                        acc
                    })
                    .collect()
            }
            Backend::Stft(spec) => {
                let l = spec.window_length();
                let window = spec.coefficients::<T>();
                let norm = spec.normalization::<T>();
                grid.translations
                    .iter()
                    .map(|&b| {
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for (j, &w) in window.iter().enumerate() {
                            let Some(i) = spec.sample_index(b, j, n) else {
                                continue;
                            };
                            let phase = -T::TAU() * T::from_count((k * j) % l) / T::from_count(l);
                            acc = acc + Complex::from_polar(w * norm, phase) * samples[i];
                        }
                        acc
                    })
                    .collect()
            }
        })
        .collect();
    let flat: Vec<Complex<T>> = rows.into_iter().flatten().collect();
    let coefficients = Array2::from_shape_vec((m_rows, b_cols), flat).expect("grid shape");
    CoefficientField::new(coefficients, grid.clone(), x.discrete_energy())
}

/// Sampled, truncated atom `a^{-1/2} ψ(j/a)` for `j = -h..=h`, stored
/// circularly in a buffer of length `len`.
fn circular_atom<T: Scalar>(spec: &WaveletSpec<T>, scale: T, len: usize) -> Vec<Complex<T>> {
    let h = spec.half_support(scale);
    let amp = T::one() / scale.sqrt();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    buf[0] = spec.time_domain(T::zero()) * amp;
    for j in 1..=h {
        let t = T::from_count(j) / scale;
        buf[j] = spec.time_domain(t) * amp;
        buf[len - j] = spec.time_domain(-t) * amp;
    }
    buf
}

struct WaveletPlan<T: Scalar> {
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> WaveletPlan<T> {
    fn new(grid: &GridSpec<T>, spec: &WaveletSpec<T>) -> Self {
        let h_max = grid
            .rows
            .iter()
            .map(|&a| spec.half_support(a))
            .max()
            .unwrap_or(0);
        // Linear (non-wrapping) correlation needs len >= N + h.
        let len = (grid.num_samples + h_max + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    fn spectrum(&self, data: impl Iterator<Item = Complex<T>>) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = data.collect();
        buf.resize(self.len, Complex::new(T::zero(), T::zero()));
        self.forward.process(&mut buf);
        buf
    }

    fn atom_spectrum(&self, spec: &WaveletSpec<T>, scale: T) -> Vec<Complex<T>> {
        let mut buf = circular_atom(spec, scale, self.len);
        self.forward.process(&mut buf);
        buf
    }
}

fn wavelet_fft<T: Scalar>(x: &[T], grid: &GridSpec<T>, spec: &WaveletSpec<T>) -> Array2<Complex<T>> {
    let plan = WaveletPlan::new(grid, spec);
    let xs = plan.spectrum(x.iter().map(|&v| Complex::new(v, T::zero())));
    let inv_len = T::one() / T::from_count(plan.len);
    let rows: Vec<Vec<Complex<T>>> = grid
        .rows
        .par_iter()
        .map(|&a| {
            let g = plan.atom_spectrum(spec, a);
            let mut buf: Vec<Complex<T>> = xs.iter().zip(&g).map(|(&u, v)| u * v.conj()).collect();
            plan.inverse.process(&mut buf);
            grid.translations.iter().map(|&b| buf[b] * inv_len).collect()
        })
        .collect();
    let flat: Vec<Complex<T>> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((grid.num_rows(), grid.num_translations()), flat).expect("grid shape")
}

fn stft_fft<T: Scalar>(x: &[T], grid: &GridSpec<T>, spec: &StftSpec) -> Array2<Complex<T>> {
    let l = spec.window_length();
    let window = spec.coefficients::<T>();
    let norm = spec.normalization::<T>();
    let bins = spec.num_bins();
    let fft = FftPlanner::new().plan_fft_forward(l);
    let columns: Vec<Vec<Complex<T>>> = grid
        .translations
        .par_iter()
        .map(|&b| {
            let mut frame: Vec<Complex<T>> = window
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let v = spec.sample_index(b, j, x.len()).map_or_else(T::zero, |i| x[i]);
                    Complex::new(v * w * norm, T::zero())
                })
                .collect();
            fft.process(&mut frame);
            frame.truncate(bins);
            frame
        })
        .collect();
    Array2::from_shape_fn((bins, grid.num_translations()), |(k, m)| columns[m][k])
}

/// Synthesis `Σ_{k,m} c(k, m) ψ_{k,m}[n]`, the adjoint of [`project`].
pub(crate) fn adjoint<T: Scalar>(grid: &GridSpec<T>, coeffs: &Array2<Complex<T>>) -> Vec<Complex<T>> {
    let n = grid.num_samples;
    let zero = Complex::new(T::zero(), T::zero());
    let partials: Vec<Vec<Complex<T>>> = match grid.backend {
        Backend::Wavelet(spec) => {
            let plan = WaveletPlan::new(grid, &spec);
            let inv_len = T::one() / T::from_count(plan.len);
            grid.rows
                .par_iter()
                .enumerate()
                .map(|(k, &a)| {
                    let mut scattered = vec![zero; plan.len];
                    for (m, &b) in grid.translations.iter().enumerate() {
                        scattered[b] = scattered[b] + coeffs[(k, m)];
                    }
                    plan.forward.process(&mut scattered);
                    let g = plan.atom_spectrum(&spec, a);
                    let mut buf: Vec<Complex<T>> =
                        scattered.iter().zip(&g).map(|(&u, &v)| u * v).collect();
                    plan.inverse.process(&mut buf);
                    buf.truncate(n);
                    buf.iter().map(|&v| v * inv_len).collect()
                })
                .collect()
        }
        Backend::Stft(spec) => {
            let l = spec.window_length();
            let window = spec.coefficients::<T>();
            let norm = spec.normalization::<T>();
            let ifft = FftPlanner::new().plan_fft_inverse(l);
            grid.translations
                .par_iter()
                .enumerate()
                .map(|(m, &b)| {
                    let mut buf = vec![zero; l];
                    for (k, slot) in buf.iter_mut().enumerate().take(spec.num_bins()) {
                        *slot = coeffs[(k, m)];
                    }
                    ifft.process(&mut buf);
                    let mut out = vec![zero; n];
                    for (j, (&w, &v)) in window.iter().zip(&buf).enumerate() {
                        if let Some(i) = spec.sample_index(b, j, n) {
                            out[i] = v * (w * norm);
                        }
                    }
                    out
                })
                .collect()
        }
    };
    // Fixed summation order keeps the result independent of thread scheduling.
    let mut total = vec![zero; n];
    for part in &partials {
        for (t, &p) in total.iter_mut().zip(part) {
            *t = *t + p;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{damped_impulse, ImpulseParams, SampleGrid};

    fn morlet() -> WaveletSpec<f64> {
        WaveletSpec::morlet(6.0).unwrap()
    }

    fn test_signal(n: usize) -> Signal<f64> {
        let p = ImpulseParams::new(1.0, 0.01, 0.4).unwrap();
        let x = damped_impulse(&p, SampleGrid::new(1.0, n).unwrap());
        let mut s = x.into_samples();
        for (i, v) in s.iter_mut().enumerate() {
            *v += 0.3 * ((i as f64) * 1.3).sin();
        }
        Signal::new(s, 1.0).unwrap()
    }

    fn max_abs_diff(a: &CoefficientField<f64>, b: &CoefficientField<f64>) -> (f64, f64) {
        let scale = a.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let diff = a
            .coefficients()
            .iter()
            .zip(b.coefficients().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        (diff, scale)
    }

    #[test]
    fn fft_and_direct_agree_for_wavelets() {
        let x = test_signal(512);
        let grid = GridSpec::wavelet_log(morlet(), 512, 2.0, 40.0, 12, 3).unwrap();
        let (d, s) = max_abs_diff(&project(&x, &grid).unwrap(), &project_direct(&x, &grid).unwrap());
        assert!(d <= 1e-10 * s, "diff {d}, scale {s}");
    }

    #[test]
    fn fft_and_direct_agree_for_stft() {
        let x = test_signal(500);
        for (window, l, hop) in [(WindowKind::Hann, 64, 16), (WindowKind::Rectangular, 50, 50), (WindowKind::Hann, 33, 7)] {
            let grid = GridSpec::stft(StftSpec::new(window, l, hop).unwrap(), 500).unwrap();
            let (d, s) = max_abs_diff(&project(&x, &grid).unwrap(), &project_direct(&x, &grid).unwrap());
            assert!(d <= 1e-10 * s, "{window:?} {l}/{hop}: diff {d}, scale {s}");
        }
    }

    #[test]
    fn zero_signal_projects_to_zero() {
        let x = Signal::zeros(SampleGrid::new(1.0, 128).unwrap());
        let grid = GridSpec::wavelet_log(morlet(), 128, 2.0, 16.0, 4, 1).unwrap();
        for field in [project(&x, &grid).unwrap(), project_direct(&x, &grid).unwrap()] {
            assert!(field.coefficients().iter().all(|c| c.norm() == 0.0));
            assert_eq!(total_transform_energy(&field), 0.0);
        }
    }

    #[test]
    fn rectangular_full_length_frame_satisfies_parseval() {
        let x = test_signal(256);
        let spec = StftSpec::new(WindowKind::Rectangular, 256, 256).unwrap();
        let grid = GridSpec::stft(spec, 256).unwrap();
        let field = project(&x, &grid).unwrap();
        assert_eq!(grid.num_translations(), 1);
        let e = total_transform_energy(&field);
        assert!((e - x.discrete_energy()).abs() <= 1e-12 * x.discrete_energy());
    }

    #[test]
    fn padded_hann_frames_conserve_energy_at_both_edges() {
        // Energy piled at the first and last samples is where unpadded
        // framing would lose it.
        let mut v = vec![0.0f64; 512];
        v[0] = 1.0;
        v[1] = -0.5;
        v[511] = 0.75;
        let x = Signal::new(v, 1.0).unwrap();
        let grid = GridSpec::stft(StftSpec::new(WindowKind::Hann, 64, 16).unwrap(), 512).unwrap();
        let e = total_transform_energy(&project(&x, &grid).unwrap());
        assert!((e - x.discrete_energy()).abs() <= 1e-12 * x.discrete_energy(), "{e}");
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let spec = morlet();
        assert!(matches!(
            GridSpec::wavelet(spec, 64, vec![-1.0, 2.0], vec![0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(GridSpec::wavelet(spec, 64, vec![2.0, 2.0], vec![0]).is_err());
        assert!(GridSpec::wavelet(spec, 64, vec![2.0], vec![64]).is_err());
        assert!(GridSpec::wavelet(spec, 64, vec![2.0], vec![0, 2, 3]).is_err());
        assert!(GridSpec::wavelet(spec, 64, vec![40.0], vec![0]).is_err());
        let x = test_signal(32);
        let grid = GridSpec::wavelet(spec, 64, vec![2.0], vec![0]).unwrap();
        assert!(matches!(project(&x, &grid), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn log_grid_weights_are_proportional_to_inverse_scale() {
        let grid = GridSpec::wavelet_log(morlet(), 1024, 2.0, 64.0, 6, 1).unwrap();
        let c: Vec<f64> = grid
            .rows()
            .iter()
            .zip(grid.measure_weights())
            .map(|(a, w)| a * w)
            .collect();
        for v in &c {
            assert!((v - c[0]).abs() < 1e-12);
        }
        let r: f64 = 2.0;
        assert!((c[0] - (r.sqrt() - 1.0 / r.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn energy_density_is_quadratic() {
        let x = test_signal(256);
        let grid = GridSpec::stft(StftSpec::new(WindowKind::Hann, 32, 8).unwrap(), 256).unwrap();
        let field = project(&x, &grid).unwrap();
        let map = energy_density(&field);
        let scaled = energy_density(&field.scaled(Complex::new(0.0, -3.0)));
        assert!(map.density().iter().all(|&v| v >= 0.0));
        for (a, b) in map.density().iter().zip(scaled.density().iter()) {
            assert!((b - 9.0 * a).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        let from_rows: f64 = map.row_energies().iter().sum();
        assert!((from_rows - total_transform_energy(&field)).abs() < 1e-12);
    }

    #[test]
    fn adjoint_matches_inner_product_identity() {
        let x = test_signal(300);
        let y = test_signal(300).scaled(-0.5);
        for grid in [
            GridSpec::wavelet_log(morlet(), 300, 2.0, 30.0, 7, 2).unwrap(),
            GridSpec::stft(StftSpec::new(WindowKind::Hann, 40, 10).unwrap(), 300).unwrap(),
        ] {
            // <T x, c> == <x, T* c> for c = T y
            let tx = project(&x, &grid).unwrap();
            let ty = project(&y, &grid).unwrap();
            let lhs: Complex<f64> = tx
                .coefficients()
                .iter()
                .zip(ty.coefficients().iter())
                .map(|(a, b)| a * b.conj())
                .sum();
            let synth = adjoint(&grid, ty.coefficients());
            let rhs: Complex<f64> = x
                .samples()
                .iter()
                .zip(&synth)
                .map(|(&a, b)| b.conj() * a)
                .sum();
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        }
    }
}
