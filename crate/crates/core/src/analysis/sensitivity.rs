use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::store::CounterexampleStore;
use crate::error::{Error, Result};
use crate::network::{Dataset, Network, Prediction, Sample};
use crate::noise::perturb;
use crate::verify::ensure_baseline;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSensitivity {
    pub node: usize,
    pub pos_ce_count: usize,
    pub neg_ce_count: usize,
    pub zero_ce_count: usize,
    pub no_positive_ce: bool,
    pub no_negative_ce: bool,
    /// Every sample behind the counterexamples has a zero feature here.
    pub noise_inert: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub total_ce: usize,
    /// Distinct `spec_delta` values of the counterexamples counted.
    pub spec_deltas: Vec<u32>,
    pub nodes: Vec<NodeSensitivity>,
}

/// Sign histogram of counterexample deltas per input node. `samples`, when
/// given, supplies the features used for the `noise_inert` flag.
pub fn sensitivity_report(
    store: &CounterexampleStore,
    samples: Option<&Dataset>,
) -> SensitivityReport {
    let dim = store.iter().map(|c| c.nv.len()).max().unwrap_or(0);
    let mut nodes: Vec<NodeSensitivity> = (0..dim)
        .map(|node| NodeSensitivity {
            node,
            pos_ce_count: 0,
            neg_ce_count: 0,
            zero_ce_count: 0,
            no_positive_ce: false,
            no_negative_ce: false,
            noise_inert: false,
        })
        .collect();
    let mut deltas = BTreeSet::new();
    for ce in store.iter() {
        deltas.insert(ce.spec_delta);
        for (n, &d) in nodes.iter_mut().zip(ce.nv.deltas()) {
            match d.signum() {
                1 => n.pos_ce_count += 1,
                -1 => n.neg_ce_count += 1,
                _ => n.zero_ce_count += 1,
            }
        }
    }
    let total = store.len();
    let referenced: HashSet<u64> = store.iter().map(|c| c.sample_id).collect();
    for n in &mut nodes {
        n.no_positive_ce = total > 0 && n.pos_ce_count == 0;
        n.no_negative_ce = total > 0 && n.neg_ce_count == 0;
        if let Some(ds) = samples {
            let feats: Vec<f64> = ds
                .samples
                .iter()
                .filter(|s| referenced.contains(&s.id))
                .filter_map(|s| s.features.get(n.node).copied())
                .collect();
            n.noise_inert = !feats.is_empty() && feats.iter().all(|&v| v == 0.0);
        }
    }
    SensitivityReport {
        total_ce: total,
        spec_deltas: deltas.into_iter().collect(),
        nodes,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    /// `x_a * (1 + alpha/100)`, consistent with the rest of the toolkit.
    #[default]
    Relative,
    /// `x_a + alpha`, in raw feature units.
    Additive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeProbe {
    pub alpha: i32,
    pub predicted: Prediction,
    pub insensitive: bool,
}

/// Perturbs only `node` by each `alpha` and reports whether the label holds.
pub fn single_node_sensitivity(
    net: &Network,
    s: &Sample,
    node: usize,
    alphas: &[i32],
    mode: ProbeMode,
) -> Result<Vec<NodeProbe>> {
    ensure_baseline(net, s)?;
    if node >= net.input_dim {
        return Err(Error::NodeOutOfRange {
            node,
            input_dim: net.input_dim,
        });
    }
    let mut x = s.features.clone();
    alphas
        .iter()
        .map(|&alpha| {
            let base = s.features[node];
            x[node] = match mode {
                ProbeMode::Relative => perturb(base, alpha),
                ProbeMode::Additive => base + f64::from(alpha),
            };
            let predicted = net.classify(&x)?;
            Ok(NodeProbe {
                alpha,
                predicted,
                insensitive: predicted.is(s.true_label),
            })
        })
        .collect()
}
