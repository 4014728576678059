//! Energy-map export: CSV matrix and 8-bit plain (P2) PGM image.

use std::io::{self, BufRead, Write};

use super::EnergyMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Writes `# key=value` comment lines, then header `scale_or_freq,t0,t1,...`
/// and one row per grid row. The first column is the row frequency in Hz
/// when `sample_rate` is given, the raw row coordinate otherwise.
pub fn write_energy_map_csv<T: Scalar, W: Write>(
    map: &EnergyMap<T>,
    sample_rate: Option<T>,
    metadata: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    let cols = map.grid().num_translations();
    let header: Vec<String> = std::iter::once("scale_or_freq".to_string())
        .chain((0..cols).map(|m| format!("t{m}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (k, row) in map.density().outer_iter().enumerate() {
        let label = match sample_rate {
            Some(fs) => map.grid().row_frequency_hz(k, fs),
            None => map.grid().rows()[k],
        };
        let mut line = format!("{label:.16e}");
        for v in row.iter() {
            line.push_str(&format!(",{v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parsed energy-map CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMapTable {
    pub metadata: Vec<(String, String)>,
    pub row_labels: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_energy_map_csv<R: BufRead>(input: R) -> Result<EnergyMapTable> {
    let mut metadata = Vec::new();
    let mut row_labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for line in input.lines() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                metadata.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if width.is_none() {
            if cells.first() != Some(&"scale_or_freq") {
                return Err(Error::Parse("missing scale_or_freq header".into()));
            }
            width = Some(cells.len());
            continue;
        }
        if Some(cells.len()) != width {
            return Err(Error::Parse(format!(
                "row has {} cells, header has {}",
                cells.len(),
                width.unwrap_or(0)
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        let parsed = parsed.map_err(|e| Error::Parse(e.to_string()))?;
        row_labels.push(parsed[0]);
        values.push(parsed[1..].to_vec());
    }
    if width.is_none() {
        return Err(Error::Parse("empty energy map".into()));
    }
    Ok(EnergyMapTable {
        metadata,
        row_labels,
        values,
    })
}

/// Plain PGM (`P2`), rows in the same order as the CSV, linear min-max
/// scaling to `0..=255`. A constant map renders as all zeros.
pub fn write_energy_map_pgm<T: Scalar, W: Write>(
    map: &EnergyMap<T>,
    metadata: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    let (rows, cols) = map.density().dim();
    let lo = map.density().iter().copied().fold(T::infinity(), T::min);
    let hi = map.density().iter().copied().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    writeln!(out, "P2")?;
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{cols} {rows}")?;
    writeln!(out, "255")?;
    for row in map.density().outer_iter() {
        let levels: Vec<String> = row
            .iter()
            .map(|&v| {
                let level = if span > T::zero() {
                    ((v - lo) / span * T::lit(255.0)).round()
                } else {
                    T::zero()
                };
                level.to_u8().unwrap_or(0).to_string()
            })
            .collect();
        writeln!(out, "{}", levels.join(" "))?;
    }
    Ok(())
}
