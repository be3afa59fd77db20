//! Feed-forward fully-connected networks and their float semantics.
//!
//! Every layer computes `act(W·x + b)` with 64-bit floats. The dot product is
//! accumulated left to right starting from `0.0`, and the bias is added last;
//! the interval code in [`crate::bounds`] mirrors exactly this order.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::Identity => v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::UnsupportedActivation(other.to_string())),
        }
    }
}

/// One dense layer. `weights[r][c]` connects input `c` to output neuron `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>, activation: Activation) -> Self {
        Layer {
            weights,
            biases,
            activation,
        }
    }

    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    pub fn cols(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn eval_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, &b) in self.weights.iter().zip(&self.biases) {
            let mut acc = 0.0;
            for (&w, &x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(self.activation.apply(acc + b));
        }
    }
}

/// Index of an output neuron, i.e. a class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub usize);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// Outcome of argmax classification. A maximum shared by two or more output
/// neurons is a [`Prediction::Tie`], which never equals a true label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prediction {
    Label(Label),
    Tie,
}

impl Prediction {
    pub fn is(self, label: Label) -> bool {
        self == Prediction::Label(label)
    }

    pub fn label(self) -> Option<Label> {
        match self {
            Prediction::Label(l) => Some(l),
            Prediction::Tie => None,
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prediction::Label(l) => l.fmt(f),
            Prediction::Tie => f.write_str("tie"),
        }
    }
}

// Serialized as the label index, or the string "tie".
impl Serialize for Prediction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Prediction::Label(l) => s.serialize_u64(l.0 as u64),
            Prediction::Tie => s.serialize_str("tie"),
        }
    }
}

impl<'de> Deserialize<'de> for Prediction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(Prediction::Label(Label(i))),
            Raw::Text(t) if t == "tie" => Ok(Prediction::Tie),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected label index or \"tie\", got {t:?}"
            ))),
        }
    }
}

/// A structural problem found by [`validate_network`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoLayers,
    ZeroInputDim,
    TooFewOutputs { outputs: usize },
    ColumnMismatch { layer: usize, expected: usize, actual: usize },
    RaggedRow { layer: usize, row: usize },
    BiasLengthMismatch { layer: usize },
    NonFiniteWeight { layer: usize, row: usize, col: usize },
    NonFiniteBias { layer: usize, index: usize },
    LabelCountMismatch { labels: usize, outputs: usize },
    DuplicateLabel { name: String },
    UnsupportedActivation { layer: usize, name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLayers => write!(f, "network has no layers"),
            Violation::ZeroInputDim => write!(f, "input dimension is zero"),
            Violation::TooFewOutputs { outputs } => {
                write!(f, "last layer has {outputs} outputs, need at least 2")
            }
            Violation::ColumnMismatch {
                layer,
                expected,
                actual,
            } => write!(
                f,
                "layer {layer} takes {actual} inputs but the previous stage yields {expected}"
            ),
            Violation::RaggedRow { layer, row } => {
                write!(f, "layer {layer} row {row} has the wrong length")
            }
            Violation::BiasLengthMismatch { layer } => {
                write!(f, "layer {layer} bias length differs from its row count")
            }
            Violation::NonFiniteWeight { layer, row, col } => {
                write!(f, "layer {layer} weight ({row}, {col}) is not finite")
            }
            Violation::NonFiniteBias { layer, index } => {
                write!(f, "layer {layer} bias {index} is not finite")
            }
            Violation::LabelCountMismatch { labels, outputs } => {
                write!(f, "{labels} labels for {outputs} output neurons")
            }
            Violation::DuplicateLabel { name } => write!(f, "label `{name}` appears twice"),
            Violation::UnsupportedActivation { layer, name } => {
                write!(f, "layer {layer} uses unsupported activation `{name}`")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
    pub labels: Vec<String>,
}

impl Network {
    /// Builds a network and rejects it if [`validate_network`] reports anything.
    pub fn new(input_dim: usize, layers: Vec<Layer>, labels: Vec<String>) -> Result<Self> {
        let net = Network {
            input_dim,
            layers,
            labels,
        };
        let violations = validate_network(&net);
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::rows)
    }

    pub fn label_name(&self, label: Label) -> &str {
        self.labels.get(label.0).map_or("?", String::as_str)
    }

    pub fn label_by_name(&self, name: &str) -> Option<Label> {
        self.labels.iter().position(|l| l == name).map(Label)
    }

    pub fn prediction_name(&self, p: Prediction) -> String {
        match p {
            Prediction::Label(l) => self.label_name(l).to_string(),
            Prediction::Tie => "tie".to_string(),
        }
    }

    pub(crate) fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: input.len(),
            });
        }
        if let Some(index) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(())
    }

    /// Forward pass without input checks. Callers guarantee the length.
    pub(crate) fn eval_unchecked(&self, input: &[f64]) -> Vec<f64> {
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.eval_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub(crate) fn classify_unchecked(&self, input: &[f64]) -> Prediction {
        argmax(&self.eval_unchecked(input))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.eval_unchecked(input))
    }

    /// Post-activation values of every layer, input excluded.
    pub fn forward_trace(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(input)?;
        let mut trace: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let prev = trace.last().map_or(input, Vec::as_slice);
            let mut out = Vec::new();
            layer.eval_into(prev, &mut out);
            trace.push(out);
        }
        Ok(trace)
    }

    pub fn classify(&self, input: &[f64]) -> Result<Prediction> {
        self.check_input(input)?;
        Ok(self.classify_unchecked(input))
    }
}

pub fn forward_eval(net: &Network, input: &[f64]) -> Result<Vec<f64>> {
    net.forward(input)
}

pub fn classify(net: &Network, input: &[f64]) -> Result<Prediction> {
    net.classify(input)
}

/// Strict argmax; a shared maximum is a tie.
pub fn argmax(values: &[f64]) -> Prediction {
    let mut best = 0;
    let mut tied = false;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
            tied = false;
        } else if v == values[best] {
            tied = true;
        }
    }
    if tied || values.is_empty() {
        Prediction::Tie
    } else {
        Prediction::Label(Label(best))
    }
}

pub fn validate_network(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    if net.input_dim == 0 {
        out.push(Violation::ZeroInputDim);
    }
    if net.layers.is_empty() {
        out.push(Violation::NoLayers);
        return out;
    }
    let mut expected = net.input_dim;
    for (k, layer) in net.layers.iter().enumerate() {
        let cols = layer.cols();
        if cols != expected {
            out.push(Violation::ColumnMismatch {
                layer: k,
                expected,
                actual: cols,
            });
        }
        for (r, row) in layer.weights.iter().enumerate() {
            if row.len() != cols {
                out.push(Violation::RaggedRow { layer: k, row: r });
            }
            for (c, w) in row.iter().enumerate() {
                if !w.is_finite() {
                    out.push(Violation::NonFiniteWeight {
                        layer: k,
                        row: r,
                        col: c,
                    });
                }
            }
        }
        if layer.biases.len() != layer.rows() {
            out.push(Violation::BiasLengthMismatch { layer: k });
        }
        for (i, b) in layer.biases.iter().enumerate() {
            if !b.is_finite() {
                out.push(Violation::NonFiniteBias { layer: k, index: i });
            }
        }
        expected = layer.rows();
    }
    let outputs = net.output_dim();
    if outputs < 2 {
        out.push(Violation::TooFewOutputs { outputs });
    }
    if net.labels.len() != outputs {
        out.push(Violation::LabelCountMismatch {
            labels: net.labels.len(),
            outputs,
        });
    }
    let mut seen = HashSet::new();
    for l in &net.labels {
        if !seen.insert(l.as_str()) {
            out.push(Violation::DuplicateLabel { name: l.clone() });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub true_label: Label,
}

impl Sample {
    pub fn new(id: u64, features: Vec<f64>, true_label: Label) -> Self {
        Sample {
            id,
            features,
            true_label,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Fails with a parse error naming the first repeated sample id.
    pub fn new(split: Split, samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &samples {
            if !seen.insert(s.id) {
                return Err(Error::parse(
                    format!("sample {}", s.id),
                    "duplicate sample id",
                ));
            }
        }
        Ok(Dataset { split, samples })
    }

    pub fn get(&self, id: u64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::t1;
    use super::*;

    #[test]
    fn t1_forward() {
        assert_eq!(t1().forward(&[2.0, 1.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::new(
            3,
            vec![
                Layer::new(vec![vec![0.0; 3]; 4], vec![0.0; 4], Activation::Relu),
                Layer::new(vec![vec![0.0; 4]; 2], vec![0.0; 2], Activation::Identity),
            ],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(net.forward(&[1.5, -7.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn t1_classification() {
        let net = t1();
        assert_eq!(net.classify(&[2.0, 1.0]).unwrap(), Prediction::Label(Label(0)));
        assert_eq!(net.classify(&[1.0, 1.0]).unwrap(), Prediction::Tie);
        assert_eq!(net.classify(&[1.0, 2.0]).unwrap(), Prediction::Label(Label(1)));
    }

    #[test]
    fn input_errors() {
        let net = t1();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
        assert!(matches!(
            net.classify(&[1.0, f64::NAN]),
            Err(Error::NonFiniteInput { index: 1 })
        ));
        assert!(matches!(
            net.forward(&[f64::INFINITY, 0.0]),
            Err(Error::NonFiniteInput { index: 0 })
        ));
    }

    #[test]
    fn validation() {
        assert!(validate_network(&t1()).is_empty());

        let mut net = t1();
        net.layers[1].biases.truncate(1);
        assert_eq!(
            validate_network(&net),
            vec![Violation::BiasLengthMismatch { layer: 1 }]
        );

        let mut net = t1();
        net.layers[0].weights[1][0] = f64::NAN;
        assert_eq!(
            validate_network(&net),
            vec![Violation::NonFiniteWeight {
                layer: 0,
                row: 1,
                col: 0
            }]
        );

        let mut net = t1();
        net.layers[1].weights.truncate(1);
        net.layers[1].biases.truncate(1);
        net.labels.truncate(1);
        assert_eq!(
            validate_network(&net),
            vec![Violation::TooFewOutputs { outputs: 1 }]
        );

        let mut net = t1();
        net.input_dim = 3;
        assert_eq!(
            validate_network(&net),
            vec![Violation::ColumnMismatch {
                layer: 0,
                expected: 3,
                actual: 2
            }]
        );
    }

    #[test]
    fn trace_matches_forward() {
        let net = t1();
        let trace = net.forward_trace(&[-3.0, 0.5]).unwrap();
        assert_eq!(trace[0], vec![0.0, 0.5]);
        assert_eq!(trace.last().unwrap(), &net.forward(&[-3.0, 0.5]).unwrap());
    }

    #[test]
    fn argmax_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Prediction::Tie);
        assert_eq!(argmax(&[3.0, 3.0, 4.0]), Prediction::Label(Label(2)));
        assert_eq!(argmax(&[5.0, 3.0, 3.0]), Prediction::Label(Label(0)));
    }

    #[test]
    fn prediction_json() {
        let s = serde_json::to_string(&[Prediction::Label(Label(1)), Prediction::Tie]).unwrap();
        assert_eq!(s, r#"[1,"tie"]"#);
        let back: Vec<Prediction> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Prediction::Label(Label(1)), Prediction::Tie]);
    }

    #[test]
    fn duplicate_sample_ids_rejected() {
        let s = Sample::new(3, vec![1.0, 2.0], Label(0));
        assert!(Dataset::new(Split::Test, vec![s.clone(), s]).is_err());
    }
}
