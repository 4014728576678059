//! Reference detectors: global Fourier-band energy and a fixed, unoptimised
//! time-frequency band.

use num_complex::Complex;
use rustfft::FftPlanner;

use super::normalized_field;
use crate::energy::{eci, Rect, Region};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};
use crate::signal::{normalize, Signal};
use crate::transform::GridSpec;

fn check_band<T: Scalar>(lo: T, hi: T, sample_rate: T) -> Result<()> {
    let nyquist = sample_rate / T::lit(2.0);
    if !(lo >= T::zero() && lo < hi && hi <= nyquist) {
        return Err(Error::InvalidBand(format!(
            "band [{lo}, {hi}] Hz must satisfy 0 <= lo < hi <= {nyquist}"
        )));
    }
    Ok(())
}

/// Fraction of the one-sided DFT energy of the normalised signal that falls in
/// `[lo_hz, hi_hz]`.
pub fn baseline_fourier_energy<T: Scalar>(x: &Signal<T>, band_hz: (T, T)) -> Result<T> {
    let fs = x.sample_rate();
    check_band(band_hz.0, band_hz.1, fs)?;
    let xn = normalize(x)?;
    let n = xn.len();
    let mut buf: Vec<Complex<T>> = xn.samples().iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut inside = Vec::new();
    let mut all = Vec::with_capacity(n / 2 + 1);
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
        let fold = if k == 0 || (n % 2 == 0 && k == n / 2) {
            T::one()
        } else {
            T::lit(2.0)
        };
        let e = c.norm_sqr() * fold;
        all.push(e);
        let f = T::from_count(k) * fs / T::from_count(n);
        if f >= band_hz.0 && f <= band_hz.1 {
            inside.push(e);
        }
    }
    Ok(pairwise_sum(&inside) / pairwise_sum(&all))
}

/// Rows of `grid` whose centre frequency lies in the band, over every
/// translation.
pub fn wavelet_band_region<T: Scalar>(grid: &GridSpec<T>, band_hz: (T, T), sample_rate: T) -> Result<Region> {
    check_band(band_hz.0, band_hz.1, sample_rate)?;
    let (lo, hi) = grid
        .rows_in_band(band_hz.0, band_hz.1, sample_rate)
        .ok_or_else(|| Error::InvalidBand(format!("no grid row lies in [{}, {}] Hz", band_hz.0, band_hz.1)))?;
    Ok(Region::single(Rect::new(lo, hi, 0, grid.num_translations() - 1)?))
}

/// ECI of the normalised signal over a frozen region.
pub fn baseline_wavelet_band<T: Scalar>(x: &Signal<T>, grid: &GridSpec<T>, fixed_band: &Region) -> Result<T> {
    Ok(eci(&normalized_field(grid, x)?, fixed_band)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{project, total_transform_energy, StftSpec, WindowKind};
    use std::f64::consts::PI;

    fn tone(f: f64, fs: f64, n: usize) -> Signal<f64> {
        Signal::new((0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect(), fs).unwrap()
    }

    #[test]
    fn full_band_holds_all_energy() {
        let x = tone(123.4, 1000.0, 300);
        assert!((baseline_fourier_energy(&x, (0.0, 500.0)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tone_inside_and_outside_the_band() {
        let x = tone(250.0, 1000.0, 400);
        assert!((baseline_fourier_energy(&x, (200.0, 300.0)).unwrap() - 1.0).abs() < 1e-2);
        assert!(baseline_fourier_energy(&x, (350.0, 500.0)).unwrap() < 1e-2);
    }

    #[test]
    fn invalid_bands_are_rejected() {
        let x = tone(250.0, 1000.0, 64);
        for band in [(300.0, 200.0), (-1.0, 100.0), (0.0, 600.0)] {
            assert!(matches!(baseline_fourier_energy(&x, band), Err(Error::InvalidBand(_))));
        }
    }

    #[test]
    fn full_grid_band_is_total_energy_of_normalised_signal() {
        let x = tone(80.0, 1000.0, 256).scaled(3.0);
        let grid = GridSpec::stft(StftSpec::new(WindowKind::Hann, 32, 8).unwrap(), 256).unwrap();
        let full = Region::full(grid.num_rows(), grid.num_translations());
        let v = baseline_wavelet_band(&x, &grid, &full).unwrap();
        let e = total_transform_energy(&project(&normalize(&x).unwrap(), &grid).unwrap());
        assert!((v - e).abs() <= 1e-12 * e);
        let band = wavelet_band_region(&grid, (60.0, 100.0), 1000.0).unwrap();
        assert_eq!(band.rects()[0].scale_lo, 2);
        assert_eq!(band.rects()[0].scale_hi, 3);
    }
}
