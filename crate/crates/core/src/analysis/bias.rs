//! Per-class vulnerability and paired witnesses of training bias.
//!
//! A witness pair `(x1, x2, nv)` satisfies
//! `f(x1 + nv) != label(x1)` and `f(x2 + nv) == label(x2)`.

use serde::{Deserialize, Serialize};

use super::store::CounterexampleStore;
use crate::network::{Dataset, Label, Network, Sample};
use crate::noise::{apply_noise_unchecked, NoiseVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub label: Label,
    pub name: String,
    pub n_samples: usize,
    pub n_samples_with_ce: usize,
    pub ce_count: usize,
    /// `n_samples_with_ce / n_samples`, zero for an empty class.
    pub misclassification_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub label: Label,
    pub name: String,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasWitness {
    pub flipped_sample: u64,
    pub kept_sample: u64,
    pub nv: NoiseVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_label: Vec<LabelStats>,
    pub training_class_balance: Vec<ClassShare>,
    pub majority_label: Option<Label>,
    /// Label with the highest misclassification rate, if unique.
    pub most_vulnerable_label: Option<Label>,
    pub bias_witness_pairs: Vec<BiasWitness>,
    pub pairs_cap: usize,
}

fn keeps_label(net: &Network, s: &Sample, nv: &NoiseVector, buf: &mut Vec<f64>) -> bool {
    apply_noise_unchecked(&s.features, nv.deltas(), buf);
    net.classify_unchecked(buf).is(s.true_label)
}

fn unique_argmax<T: PartialOrd + Copy>(values: impl Iterator<Item = (Label, T)>) -> Option<Label> {
    let mut best: Option<(Label, T)> = None;
    let mut tied = false;
    for (l, v) in values {
        match best {
            Some((_, b)) if v < b => {}
            Some((_, b)) if v == b => tied = true,
            _ => {
                best = Some((l, v));
                tied = false;
            }
        }
    }
    if tied {
        None
    } else {
        best.map(|(l, _)| l)
    }
}

pub fn bias_report(
    store: &CounterexampleStore,
    train: &Dataset,
    test: &Dataset,
    net: &Network,
    pairs_cap: usize,
) -> BiasReport {
    let labels = net.labels.len();
    let mut per_label: Vec<LabelStats> = (0..labels)
        .map(|i| LabelStats {
            label: Label(i),
            name: net.labels[i].clone(),
            n_samples: 0,
            n_samples_with_ce: 0,
            ce_count: 0,
            misclassification_rate: 0.0,
        })
        .collect();
    for s in &test.samples {
        let Some(stats) = per_label.get_mut(s.true_label.0) else {
            continue;
        };
        stats.n_samples += 1;
        let n = store.iter().filter(|c| c.sample_id == s.id).count();
        stats.ce_count += n;
        if n > 0 {
            stats.n_samples_with_ce += 1;
        }
    }
    for stats in &mut per_label {
        if stats.n_samples > 0 {
            stats.misclassification_rate = stats.n_samples_with_ce as f64 / stats.n_samples as f64;
        }
    }

    let mut counts = vec![0usize; labels];
    for s in &train.samples {
        if let Some(c) = counts.get_mut(s.true_label.0) {
            *c += 1;
        }
    }
    let total = train.len();
    let training_class_balance: Vec<ClassShare> = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| ClassShare {
            label: Label(i),
            name: net.labels[i].clone(),
            count,
            fraction: if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            },
        })
        .collect();
    let majority_label = if total == 0 {
        None
    } else {
        unique_argmax(training_class_balance.iter().map(|c| (c.label, c.count)))
    };
    let most_vulnerable_label = if store.is_empty() {
        None
    } else {
        unique_argmax(per_label.iter().map(|s| (s.label, s.misclassification_rate)))
    };

    let mut pairs = Vec::new();
    let mut buf = Vec::with_capacity(net.input_dim);
    'outer: for ce in store.iter() {
        if pairs.len() >= pairs_cap {
            break;
        }
        let Some(x1) = test.get(ce.sample_id) else {
            continue;
        };
        if ce.nv.len() != net.input_dim || keeps_label(net, x1, &ce.nv, &mut buf) {
            continue;
        }
        for x2 in &test.samples {
            if x2.id == x1.id || x2.features.len() != net.input_dim {
                continue;
            }
            if keeps_label(net, x2, &ce.nv, &mut buf) {
                pairs.push(BiasWitness {
                    flipped_sample: x1.id,
                    kept_sample: x2.id,
                    nv: ce.nv.clone(),
                });
                if pairs.len() >= pairs_cap {
                    break 'outer;
                }
            }
        }
    }

    BiasReport {
        per_label,
        training_class_balance,
        majority_label,
        most_vulnerable_label,
        bias_witness_pairs: pairs,
        pairs_cap,
    }
}
