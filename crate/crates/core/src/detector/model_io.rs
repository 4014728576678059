//! Versioned `key = value` model files.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use super::DetectorModel;
use crate::energy::Region;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::separability::ClassStats;
use crate::transform::{Backend, GridSpec, StftSpec, WaveletSpec, WindowKind};

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn join<T: Scalar>(values: &[T]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
}

/// Floats are written with 17 significant digits, so reading back restores
/// every value bit for bit.
pub fn write_model<T: Scalar, W: Write>(model: &DetectorModel<T>, mut out: W) -> io::Result<()> {
    let g = &model.grid;
    let mut kv: Vec<(&str, String)> = vec![("format_version", MODEL_FORMAT_VERSION.to_string())];
    kv.push(("backend", g.backend().name().to_string()));
    match g.backend() {
        Backend::Stft(s) => {
            kv.push(("window", s.window().name().to_string()));
            kv.push(("window_length", s.window_length().to_string()));
            kv.push(("hop", s.hop().to_string()));
        }
        Backend::Wavelet(w) => {
            kv.push(("wavelet", "morlet".to_string()));
            kv.push(("omega_c", format!("{:.16e}", w.center_frequency())));
            kv.push(("window_length", "na".to_string()));
            kv.push(("hop", "na".to_string()));
        }
    }
    let tr = g.translations();
    let step = if tr.len() > 1 { tr[1] - tr[0] } else { 1 };
    kv.push(("num_samples", g.num_samples().to_string()));
    kv.push(("translation_start", tr.first().copied().unwrap_or(0).to_string()));
    kv.push(("translation_step", step.to_string()));
    kv.push(("num_translations", tr.len().to_string()));
    kv.push(("scales", join(g.rows())));
    kv.push(("region", model.region.to_inline()));
    kv.push(("tau", format!("{:.16e}", model.tau)));
    kv.push(("mu_h", format!("{:.16e}", model.healthy.mean)));
    kv.push(("var_h", format!("{:.16e}", model.healthy.variance)));
    kv.push(("n_h", model.healthy.count.to_string()));
    kv.push(("mu_d", format!("{:.16e}", model.defective.mean)));
    kv.push(("var_d", format!("{:.16e}", model.defective.variance)));
    kv.push(("n_d", model.defective.count.to_string()));
    kv.push(("j_star", format!("{:.16e}", model.j_star)));
    kv.push(("seed", model.seed.to_string()));
    kv.push(("config_fingerprint", model.fingerprint.clone()));
    for (k, v) in kv {
        writeln!(out, "{k} = {v}")?;
    }
    Ok(())
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("model file lacks '{key}'")))
    }

    fn float<T: Scalar>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse::<f64>()
            .map(T::lit)
            .map_err(|e| Error::Parse(format!("{key} = '{v}': {e}")))
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse::<usize>().map_err(|e| Error::Parse(format!("{key} = '{v}': {e}")))
    }
}

pub fn read_model<T: Scalar, R: BufRead>(input: R) -> Result<DetectorModel<T>> {
    let mut map = BTreeMap::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected 'key = value', got '{line}'")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let f = Fields(map);
    let version = f.count("format_version")?;
    if version != MODEL_FORMAT_VERSION as usize {
        return Err(Error::Parse(format!("unsupported model format_version {version}")));
    }
    let n = f.count("num_samples")?;
    let start = f.count("translation_start")?;
    let step = f.count("translation_step")?;
    let translations: Vec<usize> = (0..f.count("num_translations")?).map(|m| start + m * step).collect();
    let scales = f
        .get("scales")?
        .split(',')
        .map(|s| s.trim().parse::<f64>().map(T::lit).map_err(|e| Error::Parse(format!("scales: {e}"))))
        .collect::<Result<Vec<T>>>()?;
    let grid = match f.get("backend")? {
        "stft" => {
            let spec = StftSpec::new(
                WindowKind::parse(f.get("window")?)?,
                f.count("window_length")?,
                f.count("hop")?,
            )?;
            let grid = GridSpec::stft_with_translations(spec, n, translations)?;
            if grid.rows() != scales.as_slice() {
                return Err(Error::Parse("scales do not match the STFT bins".into()));
            }
            grid
        }
        "wavelet" => GridSpec::wavelet(WaveletSpec::morlet(f.float("omega_c")?)?, n, scales, translations)?,
        other => return Err(Error::Parse(format!("unknown backend '{other}'"))),
    };
    let region = Region::parse_inline(f.get("region")?)?;
    region.validate(grid.num_rows(), grid.num_translations())?;
    let tau: T = f.float("tau")?;
    if !tau.is_finite() {
        return Err(Error::Parse("tau must be finite".into()));
    }
    Ok(DetectorModel {
        grid,
        region,
        tau,
        healthy: ClassStats {
            mean: f.float("mu_h")?,
            variance: f.float("var_h")?,
            count: f.count("n_h").unwrap_or(0),
        },
        defective: ClassStats {
            mean: f.float("mu_d")?,
            variance: f.float("var_d")?,
            count: f.count("n_d").unwrap_or(0),
        },
        j_star: f.float("j_star").unwrap_or(T::nan()),
        seed: f
            .get("seed")?
            .parse()
            .map_err(|e| Error::Parse(format!("seed: {e}")))?,
        fingerprint: f.get("config_fingerprint")?.to_string(),
    })
}
