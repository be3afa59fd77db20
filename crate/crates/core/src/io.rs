//! Network, dataset and report files.
//!
//! Networks are JSON with row-major weights; datasets are CSV with an
//! `id,f0,...,f{N-1},label` header. Reports are written as canonical JSON:
//! object keys sorted, floats in shortest round-trip form, wrapped in an
//! envelope carrying `schema_version` and `kind`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{validate_network, Activation, Dataset, Layer, Network, Sample, Split, Violation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub schema_version: u32,
    pub input_dim: usize,
    pub layers: Vec<LayerFile>,
    pub labels: Vec<String>,
}

impl NetworkFile {
    pub fn from_network(net: &Network) -> Self {
        NetworkFile {
            schema_version: SCHEMA_VERSION,
            input_dim: net.input_dim,
            layers: net
                .layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.rows(),
                    cols: l.cols(),
                    weights: l.weights.iter().flatten().copied().collect(),
                    biases: l.biases.clone(),
                    activation: l.activation.name().to_string(),
                })
                .collect(),
            labels: net.labels.clone(),
        }
    }

    pub fn into_network(self) -> Result<Network> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::parse(
                "schema_version",
                format!("unsupported version {}", self.schema_version),
            ));
        }
        let mut violations = Vec::new();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, lf) in self.layers.into_iter().enumerate() {
            if lf.rows.checked_mul(lf.cols) != Some(lf.weights.len()) {
                return Err(Error::parse(
                    format!("layers[{k}].weights"),
                    format!(
                        "{} values for a {}x{} matrix",
                        lf.weights.len(),
                        lf.rows,
                        lf.cols
                    ),
                ));
            }
            let activation = match Activation::from_name(&lf.activation) {
                Ok(a) => a,
                Err(_) => {
                    violations.push(Violation::UnsupportedActivation {
                        layer: k,
                        name: lf.activation.clone(),
                    });
                    Activation::Identity
                }
            };
            let weights = if lf.cols == 0 {
                vec![Vec::new(); lf.rows]
            } else {
                lf.weights.chunks(lf.cols).map(<[f64]>::to_vec).collect()
            };
            layers.push(Layer::new(weights, lf.biases, activation));
        }
        let net = Network {
            input_dim: self.input_dim,
            layers,
            labels: self.labels,
        };
        violations.extend(validate_network(&net));
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(Error::Validation(violations))
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_network(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e))?;
    file.into_network()
}

/// Reads and validates a network; every violation is reported at once.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    parse_network(&read_text(path.as_ref())?)
}

pub fn network_to_json(net: &Network) -> String {
    canonical_json(&NetworkFile::from_network(net))
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &network_to_json(net))
}

pub fn parse_dataset(text: &str, net: &Network, split: Split) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let n = net.input_dim;
    let header = rdr
        .headers()
        .map_err(|e| Error::parse("header", e))?
        .clone();
    if header.len() != n + 2 {
        return Err(Error::DimensionMismatch {
            expected: n + 2,
            actual: header.len(),
        });
    }
    if &header[0] != "id" || &header[n + 1] != "label" {
        return Err(Error::parse("header", "expected `id,f0,...,label`"));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // 1-based line numbers, header is line 1
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(format!("row {row}"), e))?;
        if rec.len() != n + 2 {
            return Err(Error::RowDimension {
                row,
                expected: n,
                actual: rec.len().saturating_sub(2),
            });
        }
        let id: u64 = rec[0]
            .parse()
            .map_err(|e| Error::parse(format!("row {row} id"), e))?;
        let features = (1..=n)
            .map(|c| {
                let v: f64 = rec[c]
                    .parse()
                    .map_err(|e| Error::parse(format!("row {row} column {c}"), e))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::parse(format!("row {row} column {c}"), "non-finite value"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let label_text = &rec[n + 1];
        let label = net
            .label_by_name(label_text)
            .ok_or_else(|| Error::LabelUnknown {
                label: label_text.to_string(),
                row,
            })?;
        samples.push(Sample::new(id, features, label));
    }
    Dataset::new(split, samples)
}

pub fn load_dataset(path: impl AsRef<Path>, net: &Network, split: Split) -> Result<Dataset> {
    parse_dataset(&read_text(path.as_ref())?, net, split)
}

pub fn dataset_to_csv(ds: &Dataset, net: &Network) -> String {
    let mut out = String::from("id");
    for i in 0..net.input_dim {
        out.push_str(&format!(",f{i}"));
    }
    out.push_str(",label\n");
    for s in &ds.samples {
        out.push_str(&s.id.to_string());
        for v in &s.features {
            out.push_str(&format!(",{v}"));
        }
        out.push(',');
        out.push_str(net.label_name(s.true_label));
        out.push('\n');
    }
    out
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // serde_json::Value keeps object keys in a BTreeMap, hence sorted
    let v = serde_json::to_value(value).expect("report types serialize to JSON");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values print");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    kind: String,
    #[serde(flatten)]
    body: T,
}

/// Report kinds name both the JSON envelope tag and the schema file.
pub trait Report: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Report for crate::verify::BaselineReport {
    const KIND: &'static str = "baseline";
}
impl Report for crate::tolerance::ToleranceReport {
    const KIND: &'static str = "tolerance";
}
impl Report for crate::analysis::CounterexampleStore {
    const KIND: &'static str = "counterexample_store";
}
impl Report for crate::analysis::BiasReport {
    const KIND: &'static str = "bias";
}
impl Report for crate::analysis::SensitivityReport {
    const KIND: &'static str = "sensitivity";
}
impl Report for crate::analysis::BoundaryProfile {
    const KIND: &'static str = "boundary";
}
impl Report for crate::CheckReport {
    const KIND: &'static str = "check";
}

pub fn report_to_json<R: Report>(report: &R) -> String {
    canonical_json(&Envelope {
        schema_version: SCHEMA_VERSION,
        kind: R::KIND.to_string(),
        body: report,
    })
}

pub fn report_from_json<R: Report>(text: &str) -> Result<R> {
    let env: Envelope<R> = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e))?;
    if env.kind != R::KIND {
        return Err(Error::parse(
            "kind",
            format!("expected `{}`, found `{}`", R::KIND, env.kind),
        ));
    }
    if env.schema_version != SCHEMA_VERSION {
        return Err(Error::parse(
            "schema_version",
            format!("unsupported version {}", env.schema_version),
        ));
    }
    Ok(env.body)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_report<R: Report>(report: &R, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &report_to_json(report))
}

pub fn read_report<R: Report>(path: impl AsRef<Path>) -> Result<R> {
    report_from_json(&read_text(path.as_ref())?)
}
