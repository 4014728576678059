//! One function per verb. Every artifact carries `config_fingerprint` and
//! `seed`, and is rendered into memory before it is written, so identical
//! inputs give identical bytes.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use imred_core::dataset::{read_dataset_csv, write_dataset_csv, Label, LabeledDataset};
use imred_core::detector::{
    cross_validate, evaluate_model, read_model, train, wavelet_band_region, write_model,
    write_roc_csv, EvalReport,
};
use imred_core::signal::normalize;
use imred_core::synth::{
    evaluate_row, generate_dataset, sensitivity_ladder, small_perturbation_scale, LadderRow,
};
use imred_core::transform::{energy_density, project, write_energy_map_csv, write_energy_map_pgm};

use crate::config::RunConfig;
use crate::error::CliError;

pub const DATASET_FILE: &str = "dataset.csv";
pub const ENERGY_MAP_CSV: &str = "energy_map.csv";
pub const ENERGY_MAP_PGM: &str = "energy_map.pgm";
pub const MODEL_FILE: &str = "model.txt";
pub const REPORT_FILE: &str = "report.csv";
pub const ROC_FILE: &str = "roc.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";

pub struct Context {
    cfg: RunConfig,
    fingerprint: String,
    out: PathBuf,
    quiet: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, out: PathBuf, quiet: bool) -> Self {
        let fingerprint = cfg.fingerprint();
        Self { cfg, fingerprint, out, quiet }
    }

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("config_fingerprint", self.fingerprint.clone()),
            ("seed", self.cfg.seed.to_string()),
        ]
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn emit<F>(&self, name: &str, render: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let path = self.out.join(name);
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| CliError::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    fn read_dataset(&self, path: &Path) -> Result<LabeledDataset<f64>, CliError> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        Ok(read_dataset_csv(BufReader::new(file))?.dataset)
    }

    fn num_samples(data: &LabeledDataset<f64>) -> Result<usize, CliError> {
        data.items()
            .first()
            .map(|i| i.signal.len())
            .ok_or_else(|| imred_core::Error::EmptyInput("dataset has no items".into()).into())
    }

    pub fn synth(&self, null: bool) -> Result<(), CliError> {
        let mut cfg = self.cfg.synthetic()?;
        if null {
            cfg = cfg.null();
        }
        let data = generate_dataset(&cfg)?;
        let mut meta = self.metadata();
        meta.push(("null", null.to_string()));
        let path = self.emit(DATASET_FILE, |w| write_dataset_csv(&data, &meta, w))?;
        self.say(format!("wrote {}", path.display()));
        for label in [Label::Healthy, Label::Defective] {
            let energies: Vec<f64> = data
                .items()
                .iter()
                .filter(|i| i.label == label)
                .map(|i| i.signal.discrete_energy())
                .collect();
            let mean = energies.iter().sum::<f64>() / energies.len().max(1) as f64;
            self.say(format!("{label}: {} signals, mean energy {mean:.6e}", energies.len()));
        }
        Ok(())
    }

    pub fn transform(&self, data: &Path, id: Option<&str>) -> Result<(), CliError> {
        let data = self.read_dataset(data)?;
        let item = match id {
            Some(id) => data
                .find(id)
                .ok_or_else(|| imred_core::Error::InvalidParams(format!("no item with id '{id}'")))?,
            None => data
                .items()
                .first()
                .ok_or_else(|| imred_core::Error::EmptyInput("dataset has no items".into()))?,
        };
        let x = normalize(&item.signal)?;
        let grid = self.cfg.grid(x.len())?;
        let map = energy_density(&project(&x, &grid)?);
        let mut meta = self.metadata();
        meta.push(("id", item.id.clone()));
        let fs = x.sample_rate();
        let csv = self.emit(ENERGY_MAP_CSV, |w| write_energy_map_csv(&map, Some(fs), &meta, w))?;
        let pgm = self.emit(ENERGY_MAP_PGM, |w| write_energy_map_pgm(&map, &meta, w))?;
        self.say(format!("wrote {} and {}", csv.display(), pgm.display()));
        let row_energy: Vec<f64> = map.density().outer_iter().map(|r| r.sum()).collect();
        if let Some((k, _)) = row_energy.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            self.say(format!(
                "{}: peak row {k} at {:.1} Hz",
                item.id,
                grid.row_frequency_hz(k, fs)
            ));
        }
        Ok(())
    }

    pub fn train(&self, data: &Path) -> Result<(), CliError> {
        let data = self.read_dataset(data)?;
        let grid = self.cfg.grid(Self::num_samples(&data)?)?;
        let outcome = train(&data, &self.cfg.detector(grid)?)?;
        let m = &outcome.model;
        let path = self.emit(MODEL_FILE, |w| write_model(m, w))?;
        self.say(format!("wrote {}", path.display()));
        self.say(format!("region {}", m.region.to_inline()));
        self.say(format!("J* = {:.6}, tau = {:.6e}", m.j_star, m.tau));
        self.say(format!(
            "healthy mean {:.6e} var {:.3e} (n={}); defective mean {:.6e} var {:.3e} (n={})",
            m.healthy.mean, m.healthy.variance, m.healthy.count, m.defective.mean, m.defective.variance, m.defective.count
        ));
        if !outcome.excluded.is_empty() {
            self.say(format!("excluded (zero energy): {}", outcome.excluded.join(" ")));
        }
        Ok(())
    }

    pub fn eval(&self, data: &Path, model: Option<&Path>, cv: Option<usize>, baselines: bool) -> Result<(), CliError> {
        let data = self.read_dataset(data)?;
        let report: EvalReport<f64> = match (model, cv) {
            (Some(path), None) => {
                let file = File::open(path).map_err(|e| CliError::io(path, e))?;
                let model = read_model::<f64, _>(BufReader::new(file))?;
                let config = self.cfg.detector(model.grid.clone())?;
                evaluate_model(&data, &model, &config, baselines)?
            }
            (None, k) => {
                let grid = self.cfg.grid(Self::num_samples(&data)?)?;
                let k = k.unwrap_or(self.cfg.eval.folds);
                cross_validate(&data, k, &self.cfg.detector(grid)?, baselines)?
            }
            (Some(_), Some(_)) => return Err(CliError::Config("--model and --cv are exclusive".into())),
        };
        let mut meta = self.metadata();
        meta.push(("mode", if model.is_some() { "model".into() } else { "cv".into() }));
        let rep = self.emit(REPORT_FILE, |w| report.write_csv(&meta, w))?;
        let roc = self.emit(ROC_FILE, |w| write_roc_csv(&report.roc, &meta, w))?;
        self.say(format!("wrote {} and {}", rep.display(), roc.display()));
        self.say(format!(
            "AUC {:.4} [{:.4}, {:.4}], accuracy {:.4}, sensitivity {:.4}, specificity {:.4}, tau {:.6e}",
            report.auc,
            report.auc_ci.0,
            report.auc_ci.1,
            report.metrics.accuracy,
            report.metrics.sensitivity,
            report.metrics.specificity,
            report.tau
        ));
        for b in &report.baselines {
            self.say(format!("{}: AUC {:.4} [{:.4}, {:.4}]", b.kind.name(), b.auc, b.auc_ci.0, b.auc_ci.1));
        }
        if let Some(w) = &report.welch {
            self.say(format!("welch t = {:.4}, df = {:.2}, p = {:.3e}", w.t, w.df, w.p));
        }
        Ok(())
    }

    pub fn sensitivity(&self) -> Result<(), CliError> {
        let cfg = self.cfg.synthetic()?;
        let grid = self.cfg.grid(cfg.grid.num_samples())?;
        let region = wavelet_band_region(&grid, self.cfg.band_hz(), cfg.grid.sample_rate())?;
        let start = match self.cfg.sensitivity.start_scale {
            s if s > 0.0 => s,
            _ => small_perturbation_scale(&cfg.base, cfg.delta_alpha, cfg.delta_omega),
        };
        let mut rows = vec![evaluate_row(&cfg, &grid, &region, 0.0)?];
        rows.extend(sensitivity_ladder(&cfg, &grid, &region, start, self.cfg.sensitivity.steps)?);
        let meta = self.metadata();
        let path = self.emit(SENSITIVITY_FILE, |w| write_ladder(&rows, &meta, w))?;
        self.say(format!("wrote {}", path.display()));
        for r in &rows[1..] {
            self.say(format!(
                "scale {:.6}: residual coeff {:.3e} eci {:.3e}, ratio {:.3}/{:.3}",
                r.scale, r.residual_coeff, r.residual_eci, r.ratio_coeff, r.ratio_eci
            ));
        }
        Ok(())
    }
}

/// `scale,...,ratio_eci`; the first row is the unperturbed reference.
pub fn write_ladder<W: Write>(rows: &[LadderRow<f64>], metadata: &[(&str, String)], mut out: W) -> std::io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(
        out,
        "scale,delta_alpha,delta_omega,residual_coeff,eci_predicted,eci_exact,residual_eci,ratio_coeff,ratio_eci"
    )?;
    for r in rows {
        let cells = [
            r.scale,
            r.delta_alpha,
            r.delta_omega,
            r.residual_coeff,
            r.eci_predicted,
            r.eci_exact,
            r.residual_eci,
            r.ratio_coeff,
            r.ratio_eci,
        ];
        // `+ 0.0` turns the -0 of a zero perturbation into 0
        let line: Vec<String> = cells.iter().map(|v| format!("{:.16e}", v + 0.0)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
