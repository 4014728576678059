//! Labelled signal collections and their CSV exchange format.
//!
//! Layout: `# key=value` comment lines, a metadata block headed
//! `id,label,fs,n_samples`, a blank line, then a data block headed
//! `id,label,s0,s1,...` with one row per signal.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Healthy,
    Defective,
}

impl Label {
    pub fn name(&self) -> &'static str {
        match self {
            Label::Healthy => "healthy",
            Label::Defective => "defective",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "healthy" | "h" => Ok(Label::Healthy),
            "defective" | "d" => Ok(Label::Defective),
            other => Err(Error::Parse(format!("unknown label '{other}'"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem<T> {
    pub id: String,
    pub label: Label,
    pub signal: Signal<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset<T> {
    items: Vec<LabeledItem<T>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.contains([',', '\n', '\r', '#']) && id.trim() == id
}

impl<T: Scalar> LabeledDataset<T> {
    /// Rejects duplicate ids and ids that would break the CSV layout.
    pub fn new(items: Vec<LabeledItem<T>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for item in &items {
            if !valid_id(&item.id) {
                return Err(Error::InvalidParams(format!("invalid item id '{}'", item.id)));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(Error::InvalidParams(format!("duplicate item id '{}'", item.id)));
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[LabeledItem<T>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.items.iter().filter(|i| i.label == label).count()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// Items at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    pub fn find(&self, id: &str) -> Option<&LabeledItem<T>> {
        self.items.iter().find(|i| i.id == id)
    }
}

pub fn write_dataset_csv<T: Scalar, W: Write>(
    data: &LabeledDataset<T>,
    metadata: &[(&str, String)],
    mut out: W,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "id,label,fs,n_samples")?;
    for item in data.items() {
        writeln!(
            out,
            "{},{},{:.16e},{}",
            item.id,
            item.label,
            item.signal.sample_rate(),
            item.signal.len()
        )?;
    }
    writeln!(out)?;
    let width = data.items().iter().map(|i| i.signal.len()).max().unwrap_or(0);
    let mut header = String::from("id,label");
    for n in 0..width {
        header.push_str(&format!(",s{n}"));
    }
    writeln!(out, "{header}")?;
    for item in data.items() {
        let mut line = format!("{},{}", item.id, item.label);
        for v in item.signal.samples() {
            line.push_str(&format!(",{v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parsed dataset plus its `# key=value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile<T> {
    pub metadata: Vec<(String, String)>,
    pub dataset: LabeledDataset<T>,
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {line}: '{s}': {e}")))
}

pub fn read_dataset_csv<T: Scalar, R: BufRead>(input: R) -> Result<DatasetFile<T>> {
    enum Stage {
        Start,
        Meta,
        Data,
    }
    let mut stage = Stage::Start;
    let mut metadata = Vec::new();
    let mut meta_rows: Vec<(String, Label, f64, usize)> = Vec::new();
    let mut items = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match stage {
            Stage::Start => {
                if cells != ["id", "label", "fs", "n_samples"] {
                    return Err(Error::Parse(format!(
                        "line {lineno}: expected header 'id,label,fs,n_samples'"
                    )));
                }
                stage = Stage::Meta;
            }
            Stage::Meta if cells.len() >= 2 && cells[0] == "id" && cells[1] == "label" => {
                stage = Stage::Data;
            }
            Stage::Meta => {
                if cells.len() != 4 {
                    return Err(Error::Parse(format!("line {lineno}: metadata rows have 4 fields")));
                }
                let n = cells[3]
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {lineno}: n_samples: {e}")))?;
                meta_rows.push((
                    cells[0].to_string(),
                    Label::parse(cells[1])?,
                    parse_num(cells[2], lineno)?,
                    n,
                ));
            }
            Stage::Data => {
                let k = items.len();
                let (id, label, fs, n) = meta_rows.get(k).ok_or_else(|| {
                    Error::Parse(format!("line {lineno}: more signal rows than metadata rows"))
                })?;
                if cells.len() < 2 || cells[0] != id || Label::parse(cells[1])? != *label {
                    return Err(Error::Parse(format!(
                        "line {lineno}: signal row does not match metadata row for '{id}'"
                    )));
                }
                let samples = cells[2..]
                    .iter()
                    .filter(|c| !c.is_empty())
                    .map(|c| parse_num(c, lineno).map(T::lit))
                    .collect::<Result<Vec<T>>>()?;
                if samples.len() != *n {
                    return Err(Error::Parse(format!(
                        "line {lineno}: '{id}' declares {n} samples, row has {}",
                        samples.len()
                    )));
                }
                items.push(LabeledItem {
                    id: id.clone(),
                    label: *label,
                    signal: Signal::new(samples, T::lit(*fs))?,
                });
            }
        }
    }
    if items.len() != meta_rows.len() {
        return Err(Error::Parse(format!(
            "{} metadata rows but {} signal rows",
            meta_rows.len(),
            items.len()
        )));
    }
    Ok(DatasetFile {
        metadata,
        dataset: LabeledDataset::new(items)?,
    })
}
