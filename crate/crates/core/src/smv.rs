//! SMV encoding of a network under relative input noise, for cross-checking
//! with an external symbolic model checker, and parsing of its verdicts.
//!
//! The encoding is combinational: one frozen integer variable per input node
//! holds the noise percentage, every neuron is a `DEFINE` over real-typed
//! literals, and a single `INVARSPEC` states that the true label is the
//! strict maximum of the output layer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Activation, Network, Sample};
use crate::noise::{apply_noise, NoiseSpec, NoiseVector};
use crate::verify::{verify_noise_level, Verdict};

/// Environment variable naming the model checker binary.
pub const CHECKER_ENV: &str = "FANNET_NUXMV";
/// Optional override for the command script fed to the checker.
pub const CHECKER_SCRIPT_ENV: &str = "FANNET_NUXMV_SCRIPT";
pub const DEFAULT_CHECKER_SCRIPT: &str = "go_msat\ncheck_invar_ic3\nquit\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    /// Baseline: every noise variable fixed to zero.
    P1,
    /// Label stability over the whole noise range.
    P2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum VarRole {
    Noise { node: usize, lo: i32, hi: i32 },
    FixedNoise { node: usize },
    Input { node: usize },
    PreActivation { layer: usize, neuron: usize },
    Neuron { layer: usize, neuron: usize },
    Verdict,
    Property,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmvModel {
    pub text: String,
    pub var_map: BTreeMap<String, VarRole>,
    pub property: Property,
    pub input_dim: usize,
}

impl SmvModel {
    fn count(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.var_map.values().filter(|r| pred(r)).count()
    }

    pub fn free_noise_vars(&self) -> usize {
        self.count(|r| matches!(r, VarRole::Noise { .. }))
    }

    pub fn neuron_defs(&self) -> usize {
        self.count(|r| matches!(r, VarRole::Neuron { .. }))
    }

    pub fn properties(&self) -> usize {
        self.count(|r| matches!(r, VarRole::Property))
    }

    pub fn noise_var(&self, node: usize) -> String {
        format!("n_{node}")
    }
}

/// Shortest round-trip decimal, never in exponent form, always with a point.
pub fn real_literal(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let mut s = format!("{v}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    if v < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

pub fn emit_smv(net: &Network, s: &Sample, spec: &NoiseSpec, property: Property) -> Result<SmvModel> {
    net.check_input(&s.features)?;
    if spec.dim() != net.input_dim {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim,
            actual: spec.dim(),
        });
    }
    if s.true_label.0 >= net.output_dim() {
        return Err(Error::parse(
            format!("sample {}", s.id),
            "true label outside the output layer",
        ));
    }
    let mut var_map = BTreeMap::new();
    let mut t = String::new();
    let name = match property {
        Property::P1 => "p1",
        Property::P2 => "p2",
    };
    let _ = writeln!(
        t,
        "-- sample {} true label {} ({}), property {}",
        s.id,
        s.true_label.0,
        net.label_name(s.true_label),
        name
    );
    let _ = writeln!(t, "MODULE main");

    let mut defines = String::new();
    match property {
        Property::P2 => {
            let _ = writeln!(t, "FROZENVAR");
            for (i, r) in spec.ranges.iter().enumerate() {
                let _ = writeln!(t, "  n_{i} : {}..{};", r.lo, r.hi);
                var_map.insert(
                    format!("n_{i}"),
                    VarRole::Noise {
                        node: i,
                        lo: r.lo,
                        hi: r.hi,
                    },
                );
            }
        }
        Property::P1 => {
            for i in 0..net.input_dim {
                let _ = writeln!(defines, "  n_{i} := 0;");
                var_map.insert(format!("n_{i}"), VarRole::FixedNoise { node: i });
            }
        }
    }

    for (i, &x) in s.features.iter().enumerate() {
        let _ = writeln!(
            defines,
            "  x_{i} := {} * (1.0 + n_{i} / 100.0);",
            real_literal(x)
        );
        var_map.insert(format!("x_{i}"), VarRole::Input { node: i });
    }

    let mut prev: Vec<String> = (0..net.input_dim).map(|i| format!("x_{i}")).collect();
    for (k, layer) in net.layers.iter().enumerate() {
        let mut cur = Vec::with_capacity(layer.rows());
        for (r, (row, &b)) in layer.weights.iter().zip(&layer.biases).enumerate() {
            let terms: Vec<String> = row
                .iter()
                .zip(&prev)
                .map(|(&w, x)| format!("{} * {x}", real_literal(w)))
                .chain(std::iter::once(real_literal(b)))
                .collect();
            let z = format!("z{k}_{r}");
            let a = format!("a{k}_{r}");
            let _ = writeln!(defines, "  {z} := {};", terms.join(" + "));
            match layer.activation {
                Activation::Relu => {
                    let _ = writeln!(defines, "  {a} := max({z}, 0.0);");
                }
                Activation::Identity => {
                    let _ = writeln!(defines, "  {a} := {z};");
                }
            }
            var_map.insert(z, VarRole::PreActivation { layer: k, neuron: r });
            var_map.insert(a.clone(), VarRole::Neuron { layer: k, neuron: r });
            cur.push(a);
        }
        prev = cur;
    }

    let target = &prev[s.true_label.0];
    let cmp: Vec<String> = prev
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != s.true_label.0)
        .map(|(_, o)| format!("{target} > {o}"))
        .collect();
    let _ = writeln!(defines, "  correct := {};", cmp.join(" & "));
    var_map.insert("correct".into(), VarRole::Verdict);

    let _ = writeln!(t, "DEFINE");
    t.push_str(&defines);
    let _ = writeln!(t, "INVARSPEC NAME {name} := correct;");
    var_map.insert(name.into(), VarRole::Property);

    Ok(SmvModel {
        text: t,
        var_map,
        property,
        input_dim: net.input_dim,
    })
}

/// Outcome reported by the external checker. A falsifying vector from the
/// checker need not be the canonical (lexicographically smallest) one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CheckerVerdict {
    Verified,
    Falsified { witness: NoiseVector },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckerTrace {
    pub assignments: BTreeMap<String, String>,
}

impl CheckerTrace {
    /// Collects `name = value` lines; the first assignment of a name wins.
    pub fn parse(output: &str) -> Self {
        let mut assignments = BTreeMap::new();
        for line in output.lines() {
            let line = line.trim();
            if line.starts_with("--") || line.starts_with("->") {
                continue;
            }
            if let Some((k, v)) = line.split_once(" = ") {
                let k = k.trim();
                if !k.is_empty() && k.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
                    assignments
                        .entry(k.to_string())
                        .or_insert_with(|| v.trim().to_string());
                }
            }
        }
        CheckerTrace { assignments }
    }
}

pub fn parse_checker_trace(output: &str, model: &SmvModel) -> Result<CheckerVerdict> {
    let verdict_line = output
        .lines()
        .map(str::trim)
        .find(|l| l.starts_with("-- invariant") && (l.ends_with("is true") || l.ends_with("is false")))
        .ok_or(Error::UnrecognizedOutput)?;
    if verdict_line.ends_with("is true") {
        return Ok(CheckerVerdict::Verified);
    }
    let trace = CheckerTrace::parse(output);
    let mut deltas = Vec::with_capacity(model.input_dim);
    for node in 0..model.input_dim {
        let name = model.noise_var(node);
        match model.var_map.get(&name) {
            Some(VarRole::FixedNoise { .. }) => deltas.push(0),
            Some(VarRole::Noise { lo, hi, .. }) => {
                let v: i32 = trace
                    .assignments
                    .get(&name)
                    .and_then(|v| v.parse().ok())
                    .ok_or(Error::UnrecognizedOutput)?;
                if v < *lo || v > *hi {
                    return Err(Error::UnrecognizedOutput);
                }
                deltas.push(v);
            }
            _ => return Err(Error::UnrecognizedOutput),
        }
    }
    Ok(CheckerVerdict::Falsified {
        witness: NoiseVector(deltas),
    })
}

/// Checker verdict next to the engine's verdict for the same instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub sample_id: u64,
    pub property: Property,
    pub checker: CheckerVerdict,
    pub engine: Verdict,
    pub agree: bool,
    /// Whether the checker's witness misclassifies under float inference.
    pub witness_replays: Option<bool>,
}

pub fn cross_validate(
    net: &Network,
    s: &Sample,
    spec: &NoiseSpec,
    model: &SmvModel,
    checker_output: &str,
) -> Result<CheckReport> {
    let checker = parse_checker_trace(checker_output, model)?;
    let engine_spec = match model.property {
        Property::P1 => NoiseSpec::symmetric(0, net.input_dim),
        Property::P2 => spec.clone(),
    };
    let engine = match verify_noise_level(net, s, &engine_spec) {
        Ok(v) => v,
        // P1 on a misclassified sample: the baseline itself is the witness
        Err(Error::BaselineMisclassified { .. }) => Verdict::Falsified {
            witness: NoiseVector::zeros(net.input_dim),
            predicted: net.classify(&s.features)?,
        },
        Err(e) => return Err(e),
    };
    let witness_replays = match &checker {
        CheckerVerdict::Verified => None,
        CheckerVerdict::Falsified { witness } => {
            let x = apply_noise(&s.features, witness)?;
            Some(!net.classify(&x)?.is(s.true_label))
        }
    };
    Ok(CheckReport {
        sample_id: s.id,
        property: model.property,
        agree: matches!(checker, CheckerVerdict::Verified) == engine.is_verified(),
        checker,
        engine,
        witness_replays,
    })
}

/// Writes the model next to a command script and runs `binary` on it.
pub fn run_checker(binary: &Path, model: &SmvModel, workdir: &Path) -> Result<String> {
    let model_path = workdir.join("model.smv");
    let script_path = workdir.join("commands.txt");
    std::fs::write(&model_path, &model.text).map_err(|e| Error::io(&model_path, e))?;
    let script = std::env::var(CHECKER_SCRIPT_ENV).unwrap_or_else(|_| DEFAULT_CHECKER_SCRIPT.to_string());
    std::fs::write(&script_path, script).map_err(|e| Error::io(&script_path, e))?;
    let out = Command::new(binary)
        .arg("-source")
        .arg(&script_path)
        .arg(&model_path)
        .output()
        .map_err(|e| Error::io(binary, e))?;
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    if !out.status.success() && !text.contains("-- invariant") {
        return Err(Error::Checker(String::from_utf8_lossy(&out.stderr).into_owned()));
    }
    Ok(text)
}
