//! Empirical frame bounds of a discretised analysis grid.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{adjoint, project, total_transform_energy, GridSpec};
use crate::error::Result;
use crate::scalar::{pairwise_sum, Scalar};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> FrameBounds<T> {
    pub fn ratio(&self) -> T {
        self.upper / self.lower
    }
}

/// Applies the real frame operator `S x = Re(T* D T x)`, where `D` holds the
/// measure weights `w_k Δb`. `⟨x, Sx⟩` is the weighted transform energy of `x`.
pub fn apply_frame_operator<T: Scalar>(grid: &GridSpec<T>, x: &Signal<T>) -> Result<Vec<T>> {
    let field = project(x, grid)?;
    let db = grid.translation_step();
    let mut weighted = field.coefficients().clone();
    for (mut row, &w) in weighted.outer_iter_mut().zip(grid.measure_weights()) {
        let f = Complex::new(w * db, T::zero());
        row.mapv_inplace(|c| c * f);
    }
    Ok(adjoint(grid, &weighted).into_iter().map(|c| c.re).collect())
}

fn random_unit_probe<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let raw: Vec<T> = (0..n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            T::lit(v)
        })
        .collect();
    normalized(raw)
}

fn normalized<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    let sq: Vec<T> = v.iter().map(|&a| a * a).collect();
    let norm = pairwise_sum(&sq).sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|a| *a = *a / norm);
    }
    v
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let p: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    pairwise_sum(&p)
}

/// Min and max of `energy(T x) / ‖x‖²` over `probe_count` random unit-norm
/// white Gaussian probes.
pub fn estimate_frame_bounds<T: Scalar>(
    grid: &GridSpec<T>,
    probe_count: usize,
    seed: u64,
) -> Result<FrameBounds<T>> {
    let probe_count = probe_count.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = T::infinity();
    let mut upper = T::neg_infinity();
    for _ in 0..probe_count {
        let probe = random_unit_probe::<T>(&mut rng, grid.num_samples());
        let x = Signal::new(probe, T::one())?;
        let ratio = total_transform_energy(&project(&x, grid)?) / x.discrete_energy();
        lower = lower.min(ratio);
        upper = upper.max(ratio);
    }
    Ok(FrameBounds { lower, upper })
}

/// Like [`estimate_frame_bounds`], but every probe is refined by
/// `iterations` steps of power iteration on the frame operator (for the upper
/// bound) and on its spectral reflection `σ I - S` (for the lower bound).
///
/// Rayleigh quotients never leave the spectrum, so the result is still an
/// inner estimate, but it approaches the extreme eigenvalues instead of the
/// spectral mean that white probes concentrate around.
pub fn estimate_frame_bounds_refined<T: Scalar>(
    grid: &GridSpec<T>,
    probe_count: usize,
    iterations: usize,
    seed: u64,
) -> Result<FrameBounds<T>> {
    let probe_count = probe_count.max(1);
    let n = grid.num_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<Vec<T>> = (0..probe_count)
        .map(|_| random_unit_probe(&mut rng, n))
        .collect();
    let apply = |v: &[T]| -> Result<Vec<T>> {
        apply_frame_operator(grid, &Signal::new(v.to_vec(), T::one())?)
    };

    let mut upper = T::neg_infinity();
    for probe in &probes {
        let mut v = probe.clone();
        let mut sv = apply(&v)?;
        upper = upper.max(dot(&v, &sv));
        for _ in 0..iterations {
            v = normalized(sv);
            sv = apply(&v)?;
            upper = upper.max(dot(&v, &sv));
        }
    }

    let shift = upper;
    let mut lower = T::infinity();
    for probe in &probes {
        let mut v = probe.clone();
        let mut sv = apply(&v)?;
        lower = lower.min(dot(&v, &sv));
        for _ in 0..iterations {
            let reflected: Vec<T> = v.iter().zip(&sv).map(|(&a, &b)| shift * a - b).collect();
            v = normalized(reflected);
            sv = apply(&v)?;
            lower = lower.min(dot(&v, &sv));
        }
    }
    Ok(FrameBounds {
        lower: lower.max(T::zero()),
        upper,
    })
}
