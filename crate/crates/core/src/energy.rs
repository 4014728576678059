//! Energy Concentration Index over rectangular time-frequency regions.
//!
//! `ECI_Ω = Σ_{(k,m) ∈ Ω} |W(k, m)|² w_k Δb`, where the measure weights come
//! from the field's grid, so nothing here depends on the backend. Regions are
//! unions of inclusive index rectangles; overlapping rectangles are reduced
//! to a disjoint cell set before summation.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};
use crate::signal::{l2_norm, Signal};
use crate::transform::{project, CoefficientField, GridSpec};

/// Inclusive index rectangle `[scale_lo, scale_hi] × [time_lo, time_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rect {
    pub scale_lo: usize,
    pub scale_hi: usize,
    pub time_lo: usize,
    pub time_hi: usize,
}

impl Rect {
    pub fn new(scale_lo: usize, scale_hi: usize, time_lo: usize, time_hi: usize) -> Result<Self> {
        if scale_lo > scale_hi || time_lo > time_hi {
            return Err(Error::RegionOutOfBounds(format!(
                "rectangle [{scale_lo},{scale_hi}]x[{time_lo},{time_hi}] has lo > hi"
            )));
        }
        Ok(Self {
            scale_lo,
            scale_hi,
            time_lo,
            time_hi,
        })
    }

    pub fn area(&self) -> usize {
        (self.scale_hi - self.scale_lo + 1) * (self.time_hi - self.time_lo + 1)
    }

    fn fits(&self, rows: usize, cols: usize) -> bool {
        self.scale_hi < rows && self.time_hi < cols
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rect {} {} {} {}",
            self.scale_lo, self.scale_hi, self.time_lo, self.time_hi
        )
    }
}

/// Finite union of index rectangles. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Region {
    rects: Vec<Rect>,
}

impl Region {
    pub fn new(rects: Vec<Rect>) -> Self {
        Self { rects }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(rect: Rect) -> Self {
        Self { rects: vec![rect] }
    }

    /// Every cell of a `rows x cols` grid.
    pub fn full(rows: usize, cols: usize) -> Self {
        if rows == 0 || cols == 0 {
            return Self::empty();
        }
        Self::single(Rect {
            scale_lo: 0,
            scale_hi: rows - 1,
            time_lo: 0,
            time_hi: cols - 1,
        })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut rects = self.rects.clone();
        rects.extend_from_slice(&other.rects);
        Region { rects }
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        match self.rects.iter().find(|r| !r.fits(rows, cols)) {
            Some(r) => Err(Error::RegionOutOfBounds(format!(
                "{r} does not fit a {rows}x{cols} grid"
            ))),
            None => Ok(()),
        }
    }

    /// Disjoint, row-major ordered cell set.
    pub fn cells(&self) -> BTreeSet<(usize, usize)> {
        self.rects
            .iter()
            .flat_map(|r| {
                (r.scale_lo..=r.scale_hi)
                    .flat_map(move |k| (r.time_lo..=r.time_hi).map(move |m| (k, m)))
            })
            .collect()
    }

    /// Number of distinct cells.
    pub fn area(&self) -> usize {
        match self.rects.as_slice() {
            [] => 0,
            [r] => r.area(),
            _ => self.cells().len(),
        }
    }

    /// `rect a b c d; rect ...` on a single line.
    pub fn to_inline(&self) -> String {
        self.rects
            .iter()
            .map(Rect::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn parse_inline(s: &str) -> Result<Self> {
        let rects = s
            .split(';')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(parse_rect)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rects })
    }
}

fn parse_rect(s: &str) -> Result<Rect> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "rect" {
        return Err(Error::Parse(format!("expected 'rect a b c d', got '{s}'")));
    }
    let nums = parts[1..]
        .iter()
        .map(|p| p.parse::<usize>().map_err(|e| Error::Parse(format!("'{p}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Rect::new(nums[0], nums[1], nums[2], nums[3])
}

/// Writes `region rows=M cols=B` followed by one `rect` line per rectangle.
pub fn write_region<W: Write>(region: &Region, rows: usize, cols: usize, mut out: W) -> io::Result<()> {
    writeln!(out, "region rows={rows} cols={cols}")?;
    for r in region.rects() {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

/// Parses the [`write_region`] format and checks the rectangles against the
/// declared grid. Returns the region and its `(rows, cols)` binding.
pub fn read_region<R: BufRead>(input: R) -> Result<(Region, usize, usize)> {
    let mut lines = input
        .lines()
        .map(|l| l.map_err(|e| Error::Parse(e.to_string())))
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing region header".into()))??;
    let mut rows = None;
    let mut cols = None;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("region") {
        return Err(Error::Parse(format!("bad region header '{header}'")));
    }
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field '{p}'")))?;
        let v: usize = v.parse().map_err(|_| Error::Parse(format!("bad number '{v}'")))?;
        match k {
            "rows" => rows = Some(v),
            "cols" => cols = Some(v),
            _ => return Err(Error::Parse(format!("unknown header field '{k}'"))),
        }
    }
    let (rows, cols) = rows
        .zip(cols)
        .ok_or_else(|| Error::Parse("region header needs rows= and cols=".into()))?;
    let rects = lines
        .map(|l| parse_rect(l?.trim()))
        .collect::<Result<Vec<_>>>()?;
    let region = Region::new(rects);
    region.validate(rows, cols)?;
    Ok((region, rows, cols))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EciValue<T> {
    pub value: T,
    pub region: Region,
    /// `value / source_energy`, when the source energy is positive.
    pub normalized: Option<T>,
}

/// Energy Concentration Index of `field` over `region`.
pub fn eci<T: Scalar>(field: &CoefficientField<T>, region: &Region) -> Result<EciValue<T>> {
    let grid = field.grid();
    let (rows, cols) = (grid.num_rows(), grid.num_translations());
    region.validate(rows, cols)?;
    let mut mask = vec![false; rows * cols];
    for r in region.rects() {
        for k in r.scale_lo..=r.scale_hi {
            mask[k * cols + r.time_lo..=k * cols + r.time_hi].fill(true);
        }
    }
    let coeffs = field.coefficients();
    let row_sums: Vec<T> = (0..rows)
        .filter_map(|k| {
            let sq: Vec<T> = (0..cols)
                .filter(|&m| mask[k * cols + m])
                .map(|m| coeffs[(k, m)].norm_sqr())
                .collect();
            (!sq.is_empty()).then(|| pairwise_sum(&sq) * grid.measure_weights()[k])
        })
        .collect();
    let value = pairwise_sum(&row_sums) * grid.translation_step();
    let source = field.source_energy();
    let normalized = (source > T::zero()).then(|| value / source);
    Ok(EciValue {
        value,
        region: region.clone(),
        normalized,
    })
}

/// `ρ_Ω = ECI_Ω / ‖x‖²`, invariant under amplitude scaling of the source.
pub fn concentration_ratio<T: Scalar>(field: &CoefficientField<T>, region: &Region) -> Result<T> {
    if !(field.source_energy() > T::zero()) {
        return Err(Error::ZeroEnergySignal(
            "concentration ratio needs a source with positive energy".into(),
        ));
    }
    Ok(eci(field, region)?.value / field.source_energy())
}

/// Continuity check `|ECI(x) - ECI(y)| ≤ B ‖x - y‖ (‖x‖ + ‖y‖)`.
/// Returns `(lhs, rhs)` with `rhs` built from `upper_frame_bound`.
pub fn eci_stability_gap<T: Scalar>(
    x: &Signal<T>,
    y: &Signal<T>,
    grid: &GridSpec<T>,
    region: &Region,
    upper_frame_bound: T,
) -> Result<(T, T)> {
    let ex = eci(&project(x, grid)?, region)?.value;
    let ey = eci(&project(y, grid)?, region)?.value;
    let diff = x.add_scaled(y, -T::one())?;
    let rhs = upper_frame_bound * l2_norm(&diff) * (l2_norm(x) + l2_norm(y));
    Ok(((ex - ey).abs(), rhs))
}

/// Summed-area table of the weighted energy `|W|² w_k Δb`, for O(1)
/// rectangle sums during region search.
#[derive(Debug, Clone)]
pub struct EnergyTable<T> {
    rows: usize,
    cols: usize,
    cells: Vec<T>,
    prefix: Vec<T>,
}

impl<T: Scalar> EnergyTable<T> {
    pub fn new(field: &CoefficientField<T>) -> Self {
        let grid = field.grid();
        let (rows, cols) = (grid.num_rows(), grid.num_translations());
        let db = grid.translation_step();
        let coeffs = field.coefficients();
        let mut cells = Vec::with_capacity(rows * cols);
        for k in 0..rows {
            let w = grid.measure_weights()[k] * db;
            cells.extend((0..cols).map(|m| coeffs[(k, m)].norm_sqr() * w));
        }
        let stride = cols + 1;
        let mut prefix = vec![T::zero(); (rows + 1) * stride];
        for k in 0..rows {
            let mut run = T::zero();
            for m in 0..cols {
                run = run + cells[k * cols + m];
                prefix[(k + 1) * stride + m + 1] = prefix[k * stride + m + 1] + run;
            }
        }
        Self {
            rows,
            cols,
            cells,
            prefix,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rect_sum(&self, r: &Rect) -> T {
        let s = self.cols + 1;
        let at = |k: usize, m: usize| self.prefix[k * s + m];
        let v = at(r.scale_hi + 1, r.time_hi + 1) - at(r.scale_lo, r.time_hi + 1)
            - at(r.scale_hi + 1, r.time_lo)
            + at(r.scale_lo, r.time_lo);
        v.max(T::zero())
    }

    /// Region sum; single rectangles use the prefix table, unions are summed
    /// over their disjoint cell set.
    pub fn region_sum(&self, region: &Region) -> T {
        match region.rects() {
            [] => T::zero(),
            [r] => self.rect_sum(r),
            _ => {
                let v: Vec<T> = region
                    .cells()
                    .into_iter()
                    .map(|(k, m)| self.cells[k * self.cols + m])
                    .collect();
                pairwise_sum(&v)
            }
        }
    }
}
