//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fannet_core::io::{load_dataset, load_network};
use fannet_core::{Activation, Dataset, Label, Layer, Network, Sample, Split};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn schema(kind: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{kind}.schema.json"))
}

pub fn net(name: &str) -> Network {
    load_network(fixture(name)).unwrap()
}

pub fn data(net: &Network, name: &str, split: Split) -> Dataset {
    load_dataset(fixture(name), net, split).unwrap()
}

pub fn fannet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fannet"))
        .args(args)
        .output()
        .expect("fannet binary runs")
}

/// Textbook dense forward pass, written without the library's helpers.
#[allow(clippy::needless_range_loop)]
pub fn oracle_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    for layer in &net.layers {
        let mut next = vec![0.0; layer.weights.len()];
        for r in 0..layer.weights.len() {
            let mut acc = 0.0;
            for c in 0..cur.len() {
                acc += layer.weights[r][c] * cur[c];
            }
            acc += layer.biases[r];
            next[r] = match layer.activation {
                Activation::Relu => {
                    if acc > 0.0 {
                        acc
                    } else {
                        0.0
                    }
                }
                Activation::Identity => acc,
            };
        }
        cur = next;
    }
    cur
}

/// `Some(i)` when output `i` is strictly the largest, `None` on a tie.
pub fn oracle_argmax(out: &[f64]) -> Option<usize> {
    let best = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = (0..out.len()).filter(|&i| out[i] == best).collect();
    (winners.len() == 1).then(|| winners[0])
}

pub fn oracle_noisy(x: &[f64], nv: &[i32]) -> Vec<f64> {
    x.iter()
        .zip(nv)
        .map(|(&v, &d)| v + v * f64::from(d) / 100.0)
        .collect()
}

/// Every falsifying grid point of `[-delta, delta]^n`, in lexicographic order,
/// by nested recursion rather than the library's grid iterator.
pub fn oracle_scan(net: &Network, s: &Sample, ranges: &[(i32, i32)]) -> Vec<Vec<i32>> {
    fn rec(
        net: &Network,
        s: &Sample,
        ranges: &[(i32, i32)],
        prefix: &mut Vec<i32>,
        out: &mut Vec<Vec<i32>>,
    ) {
        if prefix.len() == ranges.len() {
            let y = oracle_forward(net, &oracle_noisy(&s.features, prefix));
            if oracle_argmax(&y) != Some(s.true_label.0) {
                out.push(prefix.clone());
            }
            return;
        }
        let (lo, hi) = ranges[prefix.len()];
        for d in lo..=hi {
            prefix.push(d);
            rec(net, s, ranges, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(net, s, ranges, &mut Vec::new(), &mut out);
    out
}

pub fn symmetric(delta: i32, dim: usize) -> Vec<(i32, i32)> {
    vec![(-delta, delta); dim]
}

/// Random `in -> hidden (ReLU) -> out (identity)` net, weights and biases in [-1, 1].
pub fn random_net(rng: &mut impl Rng, input: usize, hidden: usize, outputs: usize) -> Network {
    let mut dense = |rows: usize, cols: usize, act: Activation| {
        Layer::new(
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect(),
            (0..rows).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            act,
        )
    };
    let layers = vec![
        dense(hidden, input, Activation::Relu),
        dense(outputs, hidden, Activation::Identity),
    ];
    let labels = (0..outputs).map(|i| format!("L{i}")).collect();
    Network::new(input, layers, labels).unwrap()
}

/// A random input the net classifies without a tie, labelled with its prediction.
pub fn random_correct_sample(rng: &mut impl Rng, net: &Network) -> Sample {
    loop {
        let x: Vec<f64> = (0..net.input_dim).map(|_| rng.random_range(-2.0..=2.0)).collect();
        if let Some(l) = oracle_argmax(&oracle_forward(net, &x)) {
            return Sample::new(0, x, Label(l));
        }
    }
}

pub fn validate_json(kind: &str, text: &str) -> Result<(), String> {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema(kind)).unwrap()).unwrap();
    let instance: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("; "))
    }
}

/// Runs every report-producing subcommand on the fixtures, writing into
/// `dir`, and returns the file contents by name.
pub fn cli_matrix(dir: &Path, threads: usize) -> std::collections::BTreeMap<String, Vec<u8>> {
    let t = threads.to_string();
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let f = |name: &str| fixture(name).to_str().unwrap().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec!["baseline", "--net", &f("f5.json"), "--data", &f("leukemia_test.csv"), "--out", &p("baseline.json")],
        vec!["tolerance", "--net", &f("t1.json"), "--data", &f("t1.csv"), "--out", &p("t1_tol.json")],
        vec!["tolerance", "--net", &f("f5.json"), "--data", &f("leukemia_test.csv"), "--init", "30", "--out", &p("f5_tol.json")],
        vec!["tolerance", "--net", &f("f5.json"), "--data", &f("leukemia_test.csv"), "--init", "30", "--mode", "linear", "--out", &p("f5_tol_linear.json")],
        vec!["extract", "--net", &f("f5.json"), "--data", &f("leukemia_test.csv"), "--noise", "8", "--cap", "200", "--out", &p("f5_store.json")],
        vec!["extract", "--net", &f("g.json"), "--data", &f("g.csv"), "--noise", "10", "--out", &p("g_store.json")],
        vec!["bias", "--net", &f("f5.json"), "--store", &p("f5_store.json"), "--train", &f("leukemia_train.csv"), "--test", &f("leukemia_test.csv"), "--out", &p("bias.json")],
        vec!["sensitivity", "--store", &p("g_store.json"), "--net", &f("g.json"), "--data", &f("g.csv"), "--out", &p("sensitivity.json")],
        vec!["boundary", "--report", &p("f5_tol.json"), "--out", &p("boundary.json")],
        vec!["emit-smv", "--net", &f("t1.json"), "--data", &f("t1.csv"), "--sample", "0", "--noise", "34", "--out", &p("t1.smv")],
        vec!["emit-smv", "--net", &f("f5.json"), "--data", &f("leukemia_test.csv"), "--sample", "3", "--noise", "5", "--out", &p("f5.smv")],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(String::from).collect())
    .collect();
    for run in &runs {
        let mut args = vec!["--threads", t.as_str()];
        args.extend(run.iter().map(String::as_str));
        let out = fannet(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}
