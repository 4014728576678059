//! Impulse-excited signal model: damped responses, parameter perturbation,
//! additive white noise at a prescribed SNR, and l2 normalization.
//!
//! Two energy conventions coexist and are never mixed implicitly:
//! [`Signal::discrete_energy`] is the dimensionless `Σ x[n]²` used by the
//! transform and normalization code, while [`Signal::physical_energy`]
//! carries the `1/fs` Riemann factor and approximates `∫ |x(t)|² dt`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

/// Amplitude, damping and angular frequency of `A e^{-αt} cos(ωt) u(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseParams<T> {
    amplitude: T,
    damping: T,
    angular_frequency: T,
}

impl<T: Scalar> ImpulseParams<T> {
    pub fn new(amplitude: T, damping: T, angular_frequency: T) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "amplitude must be finite and > 0, got {amplitude}"
            )));
        }
        if !(damping.is_finite() && damping > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "damping must be finite and > 0, got {damping}"
            )));
        }
        if !(angular_frequency.is_finite() && angular_frequency >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "angular frequency must be finite and >= 0, got {angular_frequency}"
            )));
        }
        Ok(Self {
            amplitude,
            damping,
            angular_frequency,
        })
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn damping(&self) -> T {
        self.damping
    }

    pub fn angular_frequency(&self) -> T {
        self.angular_frequency
    }

    /// Closed-form `∫₀^∞ (A e^{-αt} cos ωt)² dt = A²[1/(4α) + α/(8(α²+ω²))]`.
    pub fn continuous_energy(&self) -> T {
        let a2 = self.amplitude * self.amplitude;
        let alpha = self.damping;
        let w = self.angular_frequency;
        a2 * (T::one() / (T::lit(4.0) * alpha) + alpha / (T::lit(4.0) * (alpha * alpha + w * w)))
    }
}

/// Shifts damping and angular frequency by `(Δα, Δω)`; the input is untouched.
pub fn perturb<T: Scalar>(
    params: &ImpulseParams<T>,
    delta_damping: T,
    delta_omega: T,
) -> Result<ImpulseParams<T>> {
    ImpulseParams::new(
        params.amplitude,
        params.damping + delta_damping,
        params.angular_frequency + delta_omega,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid<T> {
    sample_rate: T,
    num_samples: usize,
}

impl<T: Scalar> SampleGrid<T> {
    pub fn new(sample_rate: T, num_samples: usize) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "sample rate must be finite and > 0, got {sample_rate}"
            )));
        }
        if num_samples == 0 {
            return Err(Error::InvalidParams("num_samples must be > 0".into()));
        }
        Ok(Self {
            sample_rate,
            num_samples,
        })
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    /// Duration `N / fs` in seconds.
    pub fn duration(&self) -> T {
        T::from_count(self.num_samples) / self.sample_rate
    }

    /// Time of sample `n`, `n / fs`.
    #[inline]
    pub fn time(&self, n: usize) -> T {
        T::from_count(n) / self.sample_rate
    }
}

/// Uniformly sampled, finite, real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    grid: SampleGrid<T>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate: T) -> Result<Self> {
        let grid = SampleGrid::new(sample_rate, samples.len())?;
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self { samples, grid })
    }

    pub fn zeros(grid: SampleGrid<T>) -> Self {
        Self {
            samples: vec![T::zero(); grid.num_samples],
            grid,
        }
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn grid(&self) -> SampleGrid<T> {
        self.grid
    }

    pub fn sample_rate(&self) -> T {
        self.grid.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Dimensionless `Σ x[n]²`.
    pub fn discrete_energy(&self) -> T {
        let squares: Vec<T> = self.samples.iter().map(|&v| v * v).collect();
        pairwise_sum(&squares)
    }

    /// `Σ x[n]² / fs`, the Riemann approximation of `∫ |x(t)|² dt`.
    pub fn physical_energy(&self) -> T {
        self.discrete_energy() / self.grid.sample_rate
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| v * factor).collect(),
            grid: self.grid,
        }
    }

    /// Sample-wise `self + factor * other`.
    pub fn add_scaled(&self, other: &Signal<T>, factor: T) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| a + factor * b)
                .collect(),
            grid: self.grid,
        })
    }

    fn check_compatible(&self, other: &Signal<T>) -> Result<()> {
        if self.len() != other.len() || self.sample_rate() != other.sample_rate() {
            return Err(Error::InvalidParams(format!(
                "signals differ in length or sample rate ({} @ {} vs {} @ {})",
                self.len(),
                self.sample_rate(),
                other.len(),
                other.sample_rate()
            )));
        }
        Ok(())
    }
}

/// Samples `A e^{-α n/fs} cos(ω n/fs)` for `n = 0..N`; `u(0) = 1`.
pub fn damped_impulse<T: Scalar>(params: &ImpulseParams<T>, grid: SampleGrid<T>) -> Signal<T> {
    let samples = (0..grid.num_samples)
        .map(|n| {
            let t = grid.time(n);
            params.amplitude * (-params.damping * t).exp() * (params.angular_frequency * t).cos()
        })
        .collect();
    Signal { samples, grid }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    #[default]
    WhiteGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    pub model: NoiseModel,
    /// Signal-to-noise ratio in dB relative to the clean signal energy.
    /// `+∞` disables the noise.
    pub snr_db: T,
    pub seed: u64,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn white(snr_db: T, seed: u64) -> Self {
        Self {
            model: NoiseModel::WhiteGaussian,
            snr_db,
            seed,
        }
    }
}

/// Adds zero-mean white Gaussian noise whose empirical energy is exactly
/// `E_clean / 10^{snr/10}`.
pub fn add_noise<T: Scalar>(clean: &Signal<T>, spec: &NoiseSpec<T>) -> Result<Signal<T>> {
    if spec.snr_db == T::infinity() {
        return Ok(clean.clone());
    }
    if !spec.snr_db.is_finite() {
        return Err(Error::InvalidParams(format!(
            "snr_db must be finite or +inf, got {}",
            spec.snr_db
        )));
    }
    let clean_energy = clean.discrete_energy();
    if clean_energy <= T::zero() {
        return Err(Error::ZeroEnergySignal(
            "SNR is undefined for a zero-energy clean signal".into(),
        ));
    }
    if clean.len() < 2 {
        return Err(Error::InvalidParams(
            "zero-mean noise needs at least two samples".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw: Vec<f64> = match spec.model {
        NoiseModel::WhiteGaussian => (0..clean.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect(),
    };
    let mut noise: Vec<T> = raw.into_iter().map(T::lit).collect();
    let mean = pairwise_sum(&noise) / T::from_count(noise.len());
    noise.iter_mut().for_each(|v| *v = *v - mean);

    let squares: Vec<T> = noise.iter().map(|&v| v * v).collect();
    let raw_energy = pairwise_sum(&squares);
    let target_energy = clean_energy / T::lit(10.0).powf(spec.snr_db / T::lit(10.0));
    let gain = (target_energy / raw_energy).sqrt();

    let samples = clean
        .samples
        .iter()
        .zip(&noise)
        .map(|(&c, &n)| c + gain * n)
        .collect();
    Ok(Signal {
        samples,
        grid: clean.grid,
    })
}

/// Dimensionless l2 norm `√(Σ x[n]²)`.
pub fn l2_norm<T: Scalar>(x: &Signal<T>) -> T {
    x.discrete_energy().sqrt()
}

/// Scales `x` to unit l2 norm. Zero-energy signals are rejected: they carry
/// nothing to analyse and are excluded from further processing.
pub fn normalize<T: Scalar>(x: &Signal<T>) -> Result<Signal<T>> {
    let norm = l2_norm(x);
    if norm <= T::zero() || !norm.is_finite() {
        return Err(Error::ZeroEnergySignal(format!(
            "cannot normalize a signal with l2 norm {norm}"
        )));
    }
    Ok(Signal {
        samples: x.samples.iter().map(|&v| v / norm).collect(),
        grid: x.grid,
    })
}

/// Natural frequency `(1/2π) √(k/m)` in Hz of a single-degree-of-freedom oscillator.
pub fn resonance_frequency<T: Scalar>(stiffness: T, mass: T) -> Result<T> {
    if !(stiffness.is_finite() && stiffness > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "stiffness must be > 0, got {stiffness}"
        )));
    }
    if !(mass.is_finite() && mass > T::zero()) {
        return Err(Error::InvalidParams(format!("mass must be > 0, got {mass}")));
    }
    Ok((stiffness / mass).sqrt() / T::TAU())
}
