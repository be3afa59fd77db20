//! Python bindings: `import fannet`.
//!
//! Samples are passed as `(features, label_name)`; noise as either a symmetric
//! bound `delta` or a list of `(lo, hi)` ranges. Reports come back as the same
//! canonical JSON the CLI writes.

use std::path::PathBuf;

use fannet_core as core;
use fannet_core::io::report_to_json;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(fannet, FannetError, PyValueError);

fn err(e: core::Error) -> PyErr {
    FannetError::new_err(e.to_string())
}

#[derive(FromPyObject)]
enum NoiseArg {
    Delta(u32),
    Ranges(Vec<(i32, i32)>),
}

impl NoiseArg {
    fn spec(&self, dim: usize) -> PyResult<core::NoiseSpec> {
        match self {
            NoiseArg::Delta(d) => Ok(core::NoiseSpec::symmetric(*d, dim)),
            NoiseArg::Ranges(r) => {
                core::NoiseSpec::new(r.iter().map(|&(lo, hi)| core::IntRange::new(lo, hi)).collect())
                    .map_err(err)
            }
        }
    }
}

#[pyclass(name = "Network", module = "fannet", frozen)]
struct PyNetwork {
    inner: core::Network,
}

impl PyNetwork {
    fn sample(&self, features: Vec<f64>, label: &str) -> PyResult<core::Sample> {
        let l = self
            .inner
            .label_by_name(label)
            .ok_or_else(|| FannetError::new_err(format!("unknown label `{label}`")))?;
        Ok(core::Sample::new(0, features, l))
    }

    fn dataset(&self, path: PathBuf, split: &str) -> PyResult<core::Dataset> {
        let split = match split {
            "train" => core::Split::Train,
            "test" => core::Split::Test,
            other => return Err(FannetError::new_err(format!("unknown split `{other}`"))),
        };
        core::io::load_dataset(path, &self.inner, split).map_err(err)
    }
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: core::io::parse_network(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: core::io::load_network(path).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        core::io::network_to_json(&self.inner)
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.clone()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&x).map_err(err)
    }

    /// Predicted label name, or `"tie"`.
    fn classify(&self, x: Vec<f64>) -> PyResult<String> {
        let p = self.inner.classify(&x).map_err(err)?;
        Ok(self.inner.prediction_name(p))
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(input_dim={}, layers={}, labels={:?})",
            self.inner.input_dim,
            self.inner.layers.len(),
            self.inner.labels
        )
    }
}

#[pyclass(name = "Verdict", module = "fannet", frozen, get_all)]
struct PyVerdict {
    verified: bool,
    witness: Option<Vec<i32>>,
    /// Label name or `"tie"` for a falsified verdict.
    predicted: Option<String>,
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        match (&self.witness, &self.predicted) {
            (Some(w), Some(p)) => format!("Verdict(falsified, witness={w:?}, predicted={p:?})"),
            _ => "Verdict(verified)".to_string(),
        }
    }
}

fn verdict(net: &core::Network, v: core::Verdict) -> PyVerdict {
    match v {
        core::Verdict::Verified => PyVerdict {
            verified: true,
            witness: None,
            predicted: None,
        },
        core::Verdict::Falsified { witness, predicted } => PyVerdict {
            verified: false,
            witness: Some(witness.0),
            predicted: Some(net.prediction_name(predicted)),
        },
    }
}

fn search_mode(mode: &str) -> PyResult<core::SearchMode> {
    match mode {
        "binary" => Ok(core::SearchMode::BinarySearch),
        "linear" => Ok(core::SearchMode::LinearDescent),
        other => Err(FannetError::new_err(format!("unknown mode `{other}`"))),
    }
}

#[pyfunction]
fn apply_noise(x: Vec<f64>, nv: Vec<i32>) -> PyResult<Vec<f64>> {
    core::apply_noise(&x, &core::NoiseVector(nv)).map_err(err)
}

#[pyfunction]
fn verify_noise_level(
    net: &PyNetwork,
    x: Vec<f64>,
    label: &str,
    noise: NoiseArg,
) -> PyResult<PyVerdict> {
    let s = net.sample(x, label)?;
    let spec = noise.spec(net.inner.input_dim)?;
    let v = core::verify_noise_level(&net.inner, &s, &spec).map_err(err)?;
    Ok(verdict(&net.inner, v))
}

#[pyfunction]
fn brute_force_check(
    net: &PyNetwork,
    x: Vec<f64>,
    label: &str,
    noise: NoiseArg,
) -> PyResult<PyVerdict> {
    let s = net.sample(x, label)?;
    let spec = noise.spec(net.inner.input_dim)?;
    let v = core::brute_force_check(&net.inner, &s, &spec).map_err(err)?;
    Ok(verdict(&net.inner, v))
}

/// Returns `(tolerance, first_failing_witness)`; the witness is `None` when
/// the sample holds at `init`.
#[pyfunction]
#[pyo3(signature = (net, x, label, init = 50, mode = "binary"))]
fn per_sample_tolerance(
    net: &PyNetwork,
    x: Vec<f64>,
    label: &str,
    init: u32,
    mode: &str,
) -> PyResult<(u32, Option<Vec<i32>>)> {
    let s = net.sample(x, label)?;
    let e = core::per_sample_tolerance(&net.inner, &s, init, search_mode(mode)?).map_err(err)?;
    Ok((e.tolerance.unwrap_or(0), e.witness.map(|w| w.0)))
}

/// Tolerance report over a CSV dataset, as JSON.
#[pyfunction]
#[pyo3(signature = (net, csv_path, init = 50, mode = "binary", split = "test"))]
fn global_tolerance(
    net: &PyNetwork,
    csv_path: PathBuf,
    init: u32,
    mode: &str,
    split: &str,
) -> PyResult<String> {
    let ds = net.dataset(csv_path, split)?;
    let rep = core::global_tolerance(&net.inner, &ds, init, search_mode(mode)?).map_err(err)?;
    Ok(report_to_json(&rep))
}

/// Baseline report over a CSV dataset, as JSON.
#[pyfunction]
#[pyo3(signature = (net, csv_path, split = "test"))]
fn check_baseline(net: &PyNetwork, csv_path: PathBuf, split: &str) -> PyResult<String> {
    let ds = net.dataset(csv_path, split)?;
    let rep = core::check_baseline(&net.inner, &ds).map_err(err)?;
    Ok(report_to_json(&rep))
}

/// Falsifying noise vectors in lexicographic order as `(nv, predicted)`.
#[pyfunction]
#[pyo3(signature = (net, x, label, noise, cap = 1000))]
fn extract_adversarial_vectors(
    net: &PyNetwork,
    x: Vec<f64>,
    label: &str,
    noise: NoiseArg,
    cap: usize,
) -> PyResult<Vec<(Vec<i32>, String)>> {
    let s = net.sample(x, label)?;
    let spec = noise.spec(net.inner.input_dim)?;
    let found = core::extract_adversarial_vectors(&net.inner, &s, &spec, cap).map_err(err)?;
    Ok(found
        .into_iter()
        .map(|a| (a.nv.0, net.inner.prediction_name(a.predicted)))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (net, x, label, noise, property = "p2"))]
fn emit_smv(
    net: &PyNetwork,
    x: Vec<f64>,
    label: &str,
    noise: NoiseArg,
    property: &str,
) -> PyResult<String> {
    let property = match property {
        "p1" => core::smv::Property::P1,
        "p2" => core::smv::Property::P2,
        other => return Err(FannetError::new_err(format!("unknown property `{other}`"))),
    };
    let s = net.sample(x, label)?;
    let spec = noise.spec(net.inner.input_dim)?;
    let model = core::smv::emit_smv(&net.inner, &s, &spec, property).map_err(err)?;
    Ok(model.text)
}

#[pymodule]
fn fannet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FannetError", m.py().get_type::<FannetError>())?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(apply_noise, m)?)?;
    m.add_function(wrap_pyfunction!(verify_noise_level, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_check, m)?)?;
    m.add_function(wrap_pyfunction!(per_sample_tolerance, m)?)?;
    m.add_function(wrap_pyfunction!(global_tolerance, m)?)?;
    m.add_function(wrap_pyfunction!(check_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(extract_adversarial_vectors, m)?)?;
    m.add_function(wrap_pyfunction!(emit_smv, m)?)?;
    Ok(())
}
