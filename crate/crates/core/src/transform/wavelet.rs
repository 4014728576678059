use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gaussian envelope truncation, in standard deviations of the unit-scale atom.
pub const ATOM_TRUNCATION_SIGMAS: f64 = 4.0;

/// Smallest Morlet centre frequency for which the DC correction term can be dropped.
pub const MIN_MORLET_CENTER_FREQUENCY: f64 = 5.0;

pub const DEFAULT_MORLET_CENTER_FREQUENCY: f64 = 6.0;

/// Largest tolerated `|ψ̂(0)|² / max |ψ̂|²` before the admissibility integral is
/// treated as divergent.
pub const DC_LEAKAGE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveletFamily {
    /// `ψ(t) = π^{-1/4} e^{iω_c t} e^{-t²/2}`, correction term omitted.
    #[default]
    Morlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletSpec<T> {
    family: WaveletFamily,
    center_frequency: T,
}

impl<T: Scalar> WaveletSpec<T> {
    pub fn morlet(center_frequency: T) -> Result<Self> {
        if !center_frequency.is_finite() {
            return Err(Error::InvalidParams(
                "Morlet centre frequency must be finite".into(),
            ));
        }
        if center_frequency < T::lit(MIN_MORLET_CENTER_FREQUENCY) {
            return Err(Error::NotAdmissible(format!(
                "uncorrected Morlet needs ω_c >= {MIN_MORLET_CENTER_FREQUENCY}, got {center_frequency}"
            )));
        }
        Ok(Self {
            family: WaveletFamily::Morlet,
            center_frequency,
        })
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn center_frequency(&self) -> T {
        self.center_frequency
    }

    /// Mother wavelet `ψ(t)` at unit scale.
    pub fn time_domain(&self, t: T) -> Complex<T> {
        match self.family {
            WaveletFamily::Morlet => {
                let norm = T::PI().powf(T::lit(-0.25));
                let envelope = norm * (-(t * t) / T::lit(2.0)).exp();
                let phase = self.center_frequency * t;
                Complex::new(envelope * phase.cos(), envelope * phase.sin())
            }
        }
    }

    /// `|ψ̂(ω)|` with `ψ̂(ω) = ∫ ψ(t) e^{-iωt} dt`.
    pub fn fourier_magnitude(&self, omega: T) -> T {
        match self.family {
            WaveletFamily::Morlet => {
                let d = omega - self.center_frequency;
                T::PI().powf(T::lit(-0.25)) * T::TAU().sqrt() * (-(d * d) / T::lit(2.0)).exp()
            }
        }
    }

    /// Centre angular frequency (rad/sample) of the atom at `scale` samples.
    pub fn scale_to_angular_frequency(&self, scale: T) -> T {
        self.center_frequency / scale
    }

    /// Scale (samples) whose atom is centred at `frequency_hz` for sample rate `fs`.
    pub fn frequency_to_scale(&self, frequency_hz: T, sample_rate: T) -> T {
        self.center_frequency * sample_rate / (T::TAU() * frequency_hz)
    }

    /// Half-width in samples of the truncated atom at `scale`.
    pub fn half_support(&self, scale: T) -> usize {
        (T::lit(ATOM_TRUNCATION_SIGMAS) * scale)
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX)
    }
}

/// Admissibility constant of `spec`, see [`admissibility_integral`].
pub fn admissibility_constant<T: Scalar>(spec: &WaveletSpec<T>, tolerance: T) -> Result<T> {
    let spec = *spec;
    admissibility_integral(move |w| spec.fourier_magnitude(w), tolerance)
}

/// `C_ψ = ½ ∫₀^∞ (|ψ̂(ω)|² + |ψ̂(-ω)|²) / ω dω` for a wavelet given by its
/// Fourier magnitude.
///
/// For real wavelets this is `∫₀^∞ |ψ̂(ω)|²/ω dω`. The symmetrised form is the
/// constant in `Σ∫∫ |W|² da db / a² = C_ψ ‖x‖²` for real signals, which also
/// covers progressive wavelets such as Morlet.
///
/// The integral is evaluated in `u = ln ω` with adaptive Simpson panels over
/// `ω ∈ [1e-8, 1e4]`; `tolerance` is the absolute error target per unit of
/// peak integrand.
pub fn admissibility_integral<T, F>(psi_hat: F, tolerance: T) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    let sq = |w: T| {
        let m = psi_hat(w);
        m * m
    };
    let peak = probe_peak(&sq);
    if !(peak.is_finite() && peak > T::zero()) {
        return Err(Error::NotAdmissible(format!(
            "Fourier magnitude has no finite positive peak ({peak})"
        )));
    }
    let dc = sq(T::zero());
    if !(dc / peak <= T::lit(DC_LEAKAGE_TOLERANCE)) {
        return Err(Error::NotAdmissible(format!(
            "|ψ̂(0)|²/peak = {} exceeds {DC_LEAKAGE_TOLERANCE}; the integral diverges at ω = 0",
            (dc / peak).as_f64()
        )));
    }

    let u_lo = T::lit(1e-8).ln();
    let u_hi = T::lit(1e4).ln();
    let integrand = |u: T| {
        let w = u.exp();
        (sq(w) + sq(-w)) / T::lit(2.0)
    };
    let abs_tol = tolerance * peak;
    let value = simpson_panels(&integrand, u_lo, u_hi, 1024, abs_tol);
    if !(value.is_finite() && value > T::zero()) {
        return Err(Error::NotAdmissible(format!(
            "admissibility integral is not finite and positive ({value})"
        )));
    }
    Ok(value)
}

fn probe_peak<T: Scalar>(sq: &impl Fn(T) -> T) -> T {
    let mut peak = T::zero();
    for i in 0..=2400 {
        let w = T::lit(10f64.powf(-8.0 + 12.0 * i as f64 / 2400.0));
        peak = peak.max(sq(w)).max(sq(-w));
    }
    peak
}

/// Adaptive Simpson over `panels` equal sub-intervals of `[a, b]`.
pub(crate) fn simpson_panels<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    panels: usize,
    abs_tol: T,
) -> T {
    let width = (b - a) / T::from_count(panels);
    let panel_tol = abs_tol / T::from_count(panels);
    (0..panels)
        .map(|i| {
            let lo = a + width * T::from_count(i);
            let hi = lo + width;
            let (flo, fhi) = (f(lo), f(hi));
            let mid = (lo + hi) / T::lit(2.0);
            let fmid = f(mid);
            let whole = (hi - lo) / T::lit(6.0) * (flo + T::lit(4.0) * fmid + fhi);
            adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, panel_tol, 40)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let m = (a + b) / T::lit(2.0);
    let lm = (a + m) / T::lit(2.0);
    let rm = (m + b) / T::lit(2.0);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / T::lit(6.0) * (fa + T::lit(4.0) * flm + fm);
    let right = (b - m) / T::lit(6.0) * (fm + T::lit(4.0) * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        left + right + delta / T::lit(15.0)
    } else {
        let half = tol / T::lit(2.0);
        adaptive_simpson(f, a, m, fa, flm, fm, left, half, depth - 1)
            + adaptive_simpson(f, m, b, fm, frm, fb, right, half, depth - 1)
    }
}
