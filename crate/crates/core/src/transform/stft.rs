use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_WINDOW_LENGTH: usize = 256;
pub const DEFAULT_HOP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    /// Periodic Hann, `0.5 (1 - cos(2πj/L))`.
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "hann" => Ok(WindowKind::Hann),
            "rectangular" | "rect" => Ok(WindowKind::Rectangular),
            other => Err(Error::Parse(format!("unknown window kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftSpec {
    window: WindowKind,
    window_length: usize,
    hop: usize,
}

impl StftSpec {
    pub fn new(window: WindowKind, window_length: usize, hop: usize) -> Result<Self> {
        if window_length == 0 || hop == 0 {
            return Err(Error::InvalidGrid(
                "window length and hop must be > 0".into(),
            ));
        }
        if hop > window_length {
            return Err(Error::InvalidGrid(format!(
                "hop {hop} exceeds window length {window_length}"
            )));
        }
        Ok(Self {
            window,
            window_length,
            hop,
        })
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Zero padding ahead of the signal, `L - hop`.
    ///
    /// Translation `b` is the frame start in the padded signal, so frame `b`
    /// reads samples `b - lead .. b - lead + L`. With the lead every sample is
    /// covered by the same number of frames, the first one included.
    pub fn lead(&self) -> usize {
        self.window_length - self.hop
    }

    /// Number of frame starts that overlap an `n`-sample signal.
    pub fn padded_len(&self, num_samples: usize) -> usize {
        num_samples + self.lead()
    }

    /// Signal index read by tap `j` of frame `b`, if it lies inside `0..n`.
    pub fn sample_index(&self, b: usize, j: usize, num_samples: usize) -> Option<usize> {
        (b + j).checked_sub(self.lead()).filter(|&i| i < num_samples)
    }

    /// One-sided bin count `L/2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.window_length / 2 + 1
    }

    pub fn coefficients<T: Scalar>(&self) -> Vec<T> {
        let l = self.window_length;
        match self.window {
            WindowKind::Rectangular => vec![T::one(); l],
            WindowKind::Hann => (0..l)
                .map(|j| {
                    let phase = T::TAU() * T::from_count(j) / T::from_count(l);
                    T::lit(0.5) * (T::one() - phase.cos())
                })
                .collect(),
        }
    }

    /// Coefficient scale `1/√(L · Σw²/hop)`.
    ///
    /// With it, a signal covered by a squared-window partition of unity has
    /// full-plane weighted energy equal to `Σ x[n]²`.
    pub fn normalization<T: Scalar>(&self) -> T {
        let w = self.coefficients::<T>();
        let window_energy: T = w.iter().map(|&v| v * v).sum();
        let overlap = window_energy / T::from_count(self.hop);
        T::one() / (T::from_count(self.window_length) * overlap).sqrt()
    }

    /// One-sided folding weights: 1 for DC and (even `L`) Nyquist, 2 otherwise.
    pub fn bin_weights<T: Scalar>(&self) -> Vec<T> {
        let l = self.window_length;
        (0..self.num_bins())
            .map(|k| {
                if k == 0 || (l % 2 == 0 && k == l / 2) {
                    T::one()
                } else {
                    T::lit(2.0)
                }
            })
            .collect()
    }
}

impl Default for StftSpec {
    fn default() -> Self {
        Self {
            window: WindowKind::Hann,
            window_length: DEFAULT_WINDOW_LENGTH,
            hop: DEFAULT_HOP,
        }
    }
}
