//! Class statistics over ECI scores, the Fisher-type separability
//! functional, exhaustive region search and Welch's two-sample test.

use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::energy::{EnergyTable, Rect, Region};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};
use crate::transform::{CoefficientField, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats<T> {
    pub mean: T,
    /// Unbiased (`n - 1`) sample variance; 0 for a single score.
    pub variance: T,
    pub count: usize,
}

pub fn class_stats<T: Scalar>(scores: &[T]) -> Result<ClassStats<T>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("class_stats needs at least one score".into()));
    }
    let n = scores.len();
    let mean = pairwise_sum(scores) / T::from_count(n);
    let variance = if n == 1 {
        T::zero()
    } else {
        let sq: Vec<T> = scores.iter().map(|&z| (z - mean) * (z - mean)).collect();
        pairwise_sum(&sq) / T::from_count(n - 1)
    };
    Ok(ClassStats {
        mean,
        variance,
        count: n,
    })
}

/// `J = (μ_d - μ_h)² / (σ_d² + σ_h²)`.
///
/// With zero total variance the ratio is `+∞` when the means differ and `0`
/// when they coincide.
pub fn fisher_j<T: Scalar>(h: &ClassStats<T>, d: &ClassStats<T>) -> T {
    let gap = d.mean - h.mean;
    let spread = h.variance + d.variance;
    if spread > T::zero() {
        gap * gap / spread
    } else if gap == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

/// Which mean ordering a candidate region must show to be eligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Rank purely by `J`.
    #[default]
    Any,
    /// Only regions with `μ_d ≥ μ_h`, so that larger scores mean defective.
    DefectiveHigh,
}

impl Orientation {
    pub fn name(&self) -> &'static str {
        match self {
            Orientation::Any => "any",
            Orientation::DefectiveHigh => "defective_high",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "any" => Ok(Orientation::Any),
            "defective_high" => Ok(Orientation::DefectiveHigh),
            other => Err(Error::Parse(format!("unknown orientation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyGenerator {
    /// Every contiguous band of `width` rows spanning all translations.
    ScaleBands { widths: Vec<usize> },
    /// Rectangles whose edges lie on a lattice with the given steps; extents
    /// are in cells and inclusive.
    RectGrid {
        scale_step: usize,
        time_step: usize,
        min_scale_extent: usize,
        max_scale_extent: usize,
        min_time_extent: usize,
        max_time_extent: usize,
    },
}

/// Finite enumerated family of candidate regions on a fixed grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibleFamily {
    generator: FamilyGenerator,
    rows: usize,
    cols: usize,
    regions: Vec<Region>,
}

fn lattice_spans(len: usize, step: usize, min: usize, max: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<usize> = (0..len).step_by(step).collect();
    edges.push(len);
    let mut spans = Vec::new();
    for (i, &lo) in edges.iter().enumerate() {
        for &end in &edges[i + 1..] {
            let extent = end - lo;
            if extent >= min && extent <= max {
                spans.push((lo, end - 1));
            }
        }
    }
    spans
}

impl AdmissibleFamily {
    pub fn new<T: Scalar>(generator: FamilyGenerator, grid: &GridSpec<T>) -> Result<Self> {
        Self::with_dims(generator, grid.num_rows(), grid.num_translations())
    }

    pub fn with_dims(generator: FamilyGenerator, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams("family needs a nonempty grid".into()));
        }
        let regions: Vec<Region> = match &generator {
            FamilyGenerator::ScaleBands { widths } => {
                if widths.contains(&0) {
                    return Err(Error::InvalidParams("band widths must be >= 1".into()));
                }
                widths
                    .iter()
                    .filter(|&&w| w <= rows)
                    .flat_map(|&w| {
                        (0..=rows - w).map(move |s| {
                            Region::single(Rect {
                                scale_lo: s,
                                scale_hi: s + w - 1,
                                time_lo: 0,
                                time_hi: cols - 1,
                            })
                        })
                    })
                    .collect()
            }
            FamilyGenerator::RectGrid {
                scale_step,
                time_step,
                min_scale_extent,
                max_scale_extent,
                min_time_extent,
                max_time_extent,
            } => {
                if *scale_step == 0 || *time_step == 0 {
                    return Err(Error::InvalidParams("lattice steps must be >= 1".into()));
                }
                let scale_spans = lattice_spans(rows, *scale_step, *min_scale_extent, *max_scale_extent);
                let time_spans = lattice_spans(cols, *time_step, *min_time_extent, *max_time_extent);
                scale_spans
                    .iter()
                    .flat_map(|&(s_lo, s_hi)| {
                        time_spans.iter().map(move |&(t_lo, t_hi)| {
                            Region::single(Rect {
                                scale_lo: s_lo,
                                scale_hi: s_hi,
                                time_lo: t_lo,
                                time_hi: t_hi,
                            })
                        })
                    })
                    .collect()
            }
        };
        if regions.is_empty() {
            return Err(Error::InvalidParams(
                "admissible family enumerates no regions on this grid".into(),
            ));
        }
        Ok(Self {
            generator,
            rows,
            cols,
            regions,
        })
    }

    /// Family holding exactly the given regions.
    pub fn explicit(regions: Vec<Region>, rows: usize, cols: usize) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::InvalidParams("explicit family is empty".into()));
        }
        for r in &regions {
            r.validate(rows, cols)?;
        }
        Ok(Self {
            generator: FamilyGenerator::ScaleBands { widths: Vec::new() },
            rows,
            cols,
            regions,
        })
    }

    pub fn generator(&self) -> &FamilyGenerator {
        &self.generator
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSearch<T> {
    pub region: Region,
    pub j_star: T,
    pub index: usize,
    pub healthy: ClassStats<T>,
    pub defective: ClassStats<T>,
    /// `J` for every candidate, in family order.
    pub table: Vec<T>,
}

/// Total order used for the argmax: larger `J` first, then smaller area, then
/// lexicographically smaller rectangle list.
fn better<T: Scalar>(a: (T, &Region), b: (T, &Region)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.area().cmp(&b.1.area()))
        .then_with(|| a.1.rects().cmp(b.1.rects()))
}

/// Argmax of `J` over candidates whose per-sample scores are supplied by
/// `scores(index) -> (healthy, defective)`.
fn search<T, F>(regions: &[Region], orientation: Orientation, scores: F) -> Result<RegionSearch<T>>
where
    T: Scalar,
    F: Fn(usize) -> (Vec<T>, Vec<T>) + Sync,
{
    let evaluated: Vec<(T, bool, ClassStats<T>, ClassStats<T>)> = (0..regions.len())
        .into_par_iter()
        .map(|i| {
            let (h, d) = scores(i);
            let hs = class_stats(&h)?;
            let ds = class_stats(&d)?;
            let eligible = match orientation {
                Orientation::Any => true,
                Orientation::DefectiveHigh => ds.mean >= hs.mean,
            };
            Ok((fisher_j(&hs, &ds), eligible, hs, ds))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<usize> = None;
    for (i, e) in evaluated.iter().enumerate() {
        if !e.1 {
            continue;
        }
        best = match best {
            Some(b) if better((evaluated[b].0, &regions[b]), (e.0, &regions[i])) != Ordering::Greater => Some(b),
            _ => Some(i),
        };
    }
    // With no eligible candidate every region has μ_d < μ_h; fall back to the
    // plain ranking rather than failing.
    let best = match best {
        Some(b) => b,
        None => (0..regions.len())
            .min_by(|&a, &b| better((evaluated[a].0, &regions[a]), (evaluated[b].0, &regions[b])))
            .expect("nonempty family"),
    };
    Ok(RegionSearch {
        region: regions[best].clone(),
        j_star: evaluated[best].0,
        index: best,
        healthy: evaluated[best].2,
        defective: evaluated[best].3,
        table: evaluated.iter().map(|e| e.0).collect(),
    })
}

/// Exhaustive `Ω* = argmax J(Ω)` over `family`, scoring every field with the
/// region's ECI.
pub fn optimize_region<T: Scalar>(
    healthy: &[CoefficientField<T>],
    defective: &[CoefficientField<T>],
    family: &AdmissibleFamily,
    orientation: Orientation,
) -> Result<RegionSearch<T>> {
    if healthy.len() < 2 || defective.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "region search needs >= 2 samples per class, got {} healthy and {} defective",
            healthy.len(),
            defective.len()
        )));
    }
    let (rows, cols) = family.dims();
    for f in healthy.iter().chain(defective) {
        let g = f.grid();
        if g.num_rows() != rows || g.num_translations() != cols {
            return Err(Error::InvalidGrid(format!(
                "field is {}x{}, family is bound to {rows}x{cols}",
                g.num_rows(),
                g.num_translations()
            )));
        }
    }
    let th: Vec<EnergyTable<T>> = healthy.par_iter().map(EnergyTable::new).collect();
    let td: Vec<EnergyTable<T>> = defective.par_iter().map(EnergyTable::new).collect();
    let regions = family.regions();
    search(regions, orientation, |i| {
        let r = &regions[i];
        (
            th.iter().map(|t| t.region_sum(r)).collect(),
            td.iter().map(|t| t.region_sum(r)).collect(),
        )
    })
}

/// Argmax over precomputed scores: `healthy[i][r]` is sample `i` on region `r`.
pub fn optimize_over_scores<T: Scalar>(
    regions: &[Region],
    healthy: &[Vec<T>],
    defective: &[Vec<T>],
    orientation: Orientation,
) -> Result<RegionSearch<T>> {
    if healthy.len() < 2 || defective.len() < 2 {
        return Err(Error::InsufficientSamples(
            "region search needs >= 2 samples per class".into(),
        ));
    }
    if regions.is_empty() {
        return Err(Error::InvalidParams("no candidate regions".into()));
    }
    if healthy.iter().chain(defective).any(|s| s.len() != regions.len()) {
        return Err(Error::InvalidParams("score rows must cover every region".into()));
    }
    search(regions, orientation, |r| {
        (
            healthy.iter().map(|s| s[r]).collect(),
            defective.iter().map(|s| s[r]).collect(),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance t-test; `t` is positive when the defective mean
/// is larger.
pub fn welch_t_test<T: Scalar>(healthy: &[T], defective: &[T]) -> Result<WelchTest> {
    if healthy.len() < 2 || defective.len() < 2 {
        return Err(Error::InsufficientSamples(
            "welch test needs >= 2 scores per class".into(),
        ));
    }
    let h = class_stats(healthy)?;
    let d = class_stats(defective)?;
    let (nh, nd) = (h.count as f64, d.count as f64);
    let vh = h.variance.as_f64() / nh;
    let vd = d.variance.as_f64() / nd;
    let se2 = vh + vd;
    if !(se2 > 0.0) {
        return Err(Error::DegenerateVariances(
            "both classes have zero variance".into(),
        ));
    }
    let t = (d.mean.as_f64() - h.mean.as_f64()) / se2.sqrt();
    let df = se2 * se2 / (vh * vh / (nh - 1.0) + vd * vd / (nd - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::DegenerateVariances(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchTest { t, df, p })
}

/// Writes `region_id,scale_lo,scale_hi,time_lo,time_hi,J`, one line per
/// rectangle.
pub fn write_j_table<T: Scalar, W: Write>(
    regions: &[Region],
    j: &[T],
    metadata: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "region_id,scale_lo,scale_hi,time_lo,time_hi,J")?;
    for (id, (region, j)) in regions.iter().zip(j).enumerate() {
        for r in region.rects() {
            writeln!(
                out,
                "{id},{},{},{},{},{j:.16e}",
                r.scale_lo, r.scale_hi, r.time_lo, r.time_hi
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::eci;
    use crate::signal::Signal;
    use crate::transform::{project, StftSpec, WindowKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn class_stats_examples() {
        let s = class_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.variance, s.count), (2.0, 1.0, 3));
        let one = class_stats(&[5.0]).unwrap();
        assert_eq!((one.mean, one.variance), (5.0, 0.0));
        assert!(matches!(class_stats::<f64>(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn fisher_j_on_rounded_table_statistics() {
        let h = ClassStats::<f64> { mean: 0.01814, variance: 0.00008, count: 20 };
        let d = ClassStats { mean: 0.04503, variance: 0.00029, count: 20 };
        let j = fisher_j(&h, &d);
        assert!((j - 1.954).abs() < 0.03);
        assert!((j - 1.9631).abs() / 1.9631 < 0.015);
        assert_eq!(fisher_j(&d, &h), j);
        assert_eq!(fisher_j(&h, &h), 0.0);
    }

    #[test]
    fn fisher_j_degenerate_variances() {
        let a = ClassStats { mean: 1.0, variance: 0.0, count: 3 };
        let b = ClassStats { mean: 2.0, variance: 0.0, count: 3 };
        assert_eq!(fisher_j(&a, &b), f64::INFINITY);
        assert_eq!(fisher_j(&a, &a), 0.0);
    }

    #[test]
    fn welch_examples() {
        let h: Vec<f64> = (0..20).map(|i| 1.0 + 0.01 * i as f64).collect();
        let d: Vec<f64> = h.iter().map(|v| v + 5.0).collect();
        assert!(welch_t_test(&h, &d).unwrap().p < 1e-3);
        let same = welch_t_test(&h, &h).unwrap();
        assert_eq!(same.t, 0.0);
        assert!((same.p - 1.0).abs() < 1e-12);
        let mixed: Vec<f64> = h.iter().map(|v| v + 0.05).collect();
        let base = welch_t_test(&h, &mixed).unwrap();
        let h2: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
        let m2: Vec<f64> = mixed.iter().map(|v| 2.0 * v).collect();
        assert_relative_eq!(welch_t_test(&h2, &m2).unwrap().t, base.t, max_relative = 1e-10);
        assert!(matches!(welch_t_test(&[1.0], &[2.0, 3.0]), Err(Error::InsufficientSamples(_))));
        assert!(matches!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::DegenerateVariances(_))));
    }

    #[test]
    fn welch_p_matches_reference_value() {
        // scipy.stats.ttest_ind([1,2,3,4], [3,5,7,9,11], equal_var=False)
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0, 11.0]).unwrap();
        let t = (7.0 - 2.5) / (1.666_666_666_666_666_7_f64 / 4.0 + 10.0 / 5.0).sqrt();
        assert_relative_eq!(r.t, t, max_relative = 1e-12);
        let vh: f64 = 1.666_666_666_666_666_7 / 4.0;
        let vd: f64 = 2.0;
        let df = (vh + vd).powi(2) / (vh * vh / 3.0 + vd * vd / 4.0);
        assert_relative_eq!(r.df, df, max_relative = 1e-12);
        assert_relative_eq!(r.p, 0.030_286_153_937_034_273, max_relative = 1e-6);
        assert_relative_eq!(r.df, 5.520_787_746_170_677, max_relative = 1e-12);
    }

    #[test]
    fn lattice_family_counts() {
        let fam = AdmissibleFamily::with_dims(
            FamilyGenerator::RectGrid {
                scale_step: 2,
                time_step: 3,
                min_scale_extent: 1,
                max_scale_extent: usize::MAX,
                min_time_extent: 1,
                max_time_extent: usize::MAX,
            },
            5,
            6,
        )
        .unwrap();
        // scale edges {0,2,4,5}: 6 spans; time edges {0,3,6}: 3 spans
        assert_eq!(fam.len(), 18);
        for r in fam.regions() {
            r.validate(5, 6).unwrap();
        }
        let bands = AdmissibleFamily::with_dims(FamilyGenerator::ScaleBands { widths: vec![1, 3, 9] }, 5, 4).unwrap();
        assert_eq!(bands.len(), 5 + 3);
    }

    fn band_dataset() -> (Vec<CoefficientField<f64>>, Vec<CoefficientField<f64>>, GridSpec<f64>) {
        let grid = GridSpec::stft(StftSpec::new(WindowKind::Hann, 32, 16).unwrap(), 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut make = |extra: f64| {
            let samples: Vec<f64> = (0..256)
                .map(|n| {
                    let t = n as f64;
                    rng.random_range(-0.3..0.3)
                        + (0.5 * t).sin()
                        + extra * (2.0 * std::f64::consts::PI * 10.0 / 32.0 * t).cos()
                })
                .collect();
            project(&Signal::new(samples, 1.0).unwrap(), &grid).unwrap()
        };
        let h: Vec<_> = (0..8).map(|_| make(0.0)).collect();
        let d: Vec<_> = (0..8).map(|_| make(1.5)).collect();
        (h, d, grid)
    }

    #[test]
    fn search_finds_the_band_that_carries_the_difference() {
        let (h, d, grid) = band_dataset();
        let fam = AdmissibleFamily::new(FamilyGenerator::ScaleBands { widths: vec![1, 2, 4] }, &grid).unwrap();
        let res = optimize_region(&h, &d, &fam, Orientation::Any).unwrap();
        // Hann leakage spreads the bin-10 tone over bins 9..=11.
        assert!(res.region.cells().iter().any(|&(k, _)| (9..=11).contains(&k)), "{:?}", res.region);
        for (i, r) in fam.regions().iter().enumerate() {
            let zh: Vec<f64> = h.iter().map(|f| eci(f, r).unwrap().value).collect();
            let zd: Vec<f64> = d.iter().map(|f| eci(f, r).unwrap().value).collect();
            let j = fisher_j(&class_stats(&zh).unwrap(), &class_stats(&zd).unwrap());
            assert_relative_eq!(res.table[i], j, max_relative = 1e-9);
            assert!(res.j_star >= j * (1.0 - 1e-9));
        }
    }

    #[test]
    fn singleton_family_returns_its_region() {
        let (h, d, grid) = band_dataset();
        let only = Region::single(Rect::new(3, 5, 2, 9).unwrap());
        let fam = AdmissibleFamily::explicit(vec![only.clone()], grid.num_rows(), grid.num_translations()).unwrap();
        assert_eq!(optimize_region(&h, &d, &fam, Orientation::Any).unwrap().region, only);
        assert!(matches!(
            optimize_region(&h[..1], &d, &fam, Orientation::Any),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn ties_prefer_the_smaller_region() {
        let regions = vec![
            Region::single(Rect::new(0, 1, 0, 0).unwrap()),
            Region::single(Rect::new(0, 0, 0, 0).unwrap()),
            Region::single(Rect::new(1, 1, 0, 0).unwrap()),
        ];
        let h = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let d = vec![vec![3.0, 3.0, 3.0], vec![4.0, 4.0, 4.0]];
        let res = optimize_over_scores(&regions, &h, &d, Orientation::Any).unwrap();
        assert_eq!(res.index, 1);
    }

    #[test]
    fn orientation_filters_reversed_regions() {
        let regions = vec![
            Region::single(Rect::new(0, 0, 0, 0).unwrap()),
            Region::single(Rect::new(1, 1, 0, 0).unwrap()),
        ];
        // region 0 separates strongly with healthy higher; region 1 weakly with defective higher
        let h = vec![vec![10.0, 1.0], vec![10.5, 1.2]];
        let d = vec![vec![1.0, 1.5], vec![1.5, 1.9]];
        assert_eq!(optimize_over_scores(&regions, &h, &d, Orientation::Any).unwrap().index, 0);
        assert_eq!(optimize_over_scores(&regions, &h, &d, Orientation::DefectiveHigh).unwrap().index, 1);
    }

    #[test]
    fn j_table_csv_layout() {
        let regions = vec![Region::new(vec![Rect::new(0, 1, 2, 3).unwrap(), Rect::new(4, 4, 0, 0).unwrap()])];
        let mut out = Vec::new();
        write_j_table(&regions, &[0.5], &[], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "region_id,scale_lo,scale_hi,time_lo,time_hi,J");
        assert!(lines[1].starts_with("0,0,1,2,3,5.0"));
        assert!(lines[2].starts_with("0,4,4,0,0,"));
    }
}
