//! Complete decision procedures over the integer noise grid.
//!
//! [`verify_noise_level`] runs a best-first branch-and-bound: boxes are kept in
//! a queue ordered by their lexicographically smallest point, boxes whose
//! interval bounds certify the true label are dropped, the rest are split,
//! and singleton boxes are evaluated exactly. A child box never has a smaller
//! lower corner than its parent, so grid points are decided in lexicographic
//! order and the first falsifying point found is the canonical witness.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::bounds::{noisy_input_box, propagate_unchecked};
use crate::error::{Error, Result};
use crate::network::{Dataset, Label, Network, Prediction, Sample};
use crate::noise::{apply_noise_unchecked, split_box, NoiseBox, NoiseSpec, NoiseVector};

/// Grid size limit for [`brute_force_check`].
pub const BRUTE_FORCE_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Verified,
    Falsified {
        witness: NoiseVector,
        predicted: Prediction,
    },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn witness(&self) -> Option<&NoiseVector> {
        match self {
            Verdict::Verified => None,
            Verdict::Falsified { witness, .. } => Some(witness),
        }
    }
}

/// A grid point whose noisy input is not classified as the true label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialVector {
    pub nv: NoiseVector,
    pub predicted: Prediction,
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    /// Singleton boxes evaluated with the float forward pass.
    pub exact_evals: u64,
    pub boxes_pruned: u64,
    pub boxes_split: u64,
    /// Filled only when requested through [`SearchOptions::record_pruned`].
    pub pruned: Vec<NoiseBox>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SearchOptions {
    pub record_pruned: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub sample_id: u64,
    pub true_label: Label,
    pub predicted: Prediction,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub samples: Vec<BaselineEntry>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Classifies every sample without noise; ties count as incorrect.
pub fn check_baseline(net: &Network, ds: &Dataset) -> Result<BaselineReport> {
    let mut samples = Vec::with_capacity(ds.len());
    for s in &ds.samples {
        let predicted = net.classify(&s.features)?;
        samples.push(BaselineEntry {
            sample_id: s.id,
            true_label: s.true_label,
            predicted,
            correct: predicted.is(s.true_label),
        });
    }
    let correct = samples.iter().filter(|e| e.correct).count();
    let total = samples.len();
    Ok(BaselineReport {
        samples,
        correct,
        total,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
    })
}

pub(crate) fn ensure_baseline(net: &Network, s: &Sample) -> Result<()> {
    if net.classify(&s.features)?.is(s.true_label) {
        Ok(())
    } else {
        Err(Error::BaselineMisclassified { sample_id: s.id })
    }
}

fn check_spec(net: &Network, spec: &NoiseSpec) -> Result<u64> {
    if spec.dim() != net.input_dim {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim,
            actual: spec.dim(),
        });
    }
    spec.cardinality().ok_or(Error::GridTooLarge { cap: u64::MAX })
}

struct Queued(NoiseBox);

impl Queued {
    fn corner(&self) -> impl Iterator<Item = i32> + '_ {
        self.0.ranges.iter().map(|r| r.lo)
    }
}

// Boxes partition the grid, so distinct queued boxes have distinct corners.
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.corner().cmp(other.corner())
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

/// Visits falsifying grid points in lexicographic order until `visit` breaks.
fn search<F>(
    net: &Network,
    s: &Sample,
    spec: &NoiseSpec,
    opts: SearchOptions,
    stats: &mut SearchStats,
    mut visit: F,
) where
    F: FnMut(NoiseVector, Prediction) -> ControlFlow<()>,
{
    let mut queue = BinaryHeap::new();
    queue.push(Reverse(Queued(spec.as_box())));
    let mut noisy = Vec::with_capacity(s.features.len());
    while let Some(Reverse(Queued(b))) = queue.pop() {
        if b.is_singleton() {
            stats.exact_evals += 1;
            let nv = b.lower_corner();
            apply_noise_unchecked(&s.features, nv.deltas(), &mut noisy);
            let p = net.classify_unchecked(&noisy);
            if !p.is(s.true_label) && visit(nv, p).is_break() {
                return;
            }
            continue;
        }
        let out = propagate_unchecked(net, &noisy_input_box(&s.features, &b).0);
        if out.certifies(s.true_label) {
            stats.boxes_pruned += 1;
            if opts.record_pruned {
                stats.pruned.push(b);
            }
            continue;
        }
        stats.boxes_split += 1;
        let (l, r) = split_box(&b).expect("non-singleton box splits");
        queue.push(Reverse(Queued(l)));
        queue.push(Reverse(Queued(r)));
    }
}

/// Decides whether any grid point of `spec` changes the label of `s`.
pub fn verify_noise_level(net: &Network, s: &Sample, spec: &NoiseSpec) -> Result<Verdict> {
    verify_noise_level_with_stats(net, s, spec, SearchOptions::default()).map(|(v, _)| v)
}

pub fn verify_noise_level_with_stats(
    net: &Network,
    s: &Sample,
    spec: &NoiseSpec,
    opts: SearchOptions,
) -> Result<(Verdict, SearchStats)> {
    ensure_baseline(net, s)?;
    check_spec(net, spec)?;
    let mut stats = SearchStats::default();
    let mut verdict = Verdict::Verified;
    search(net, s, spec, opts, &mut stats, |witness, predicted| {
        verdict = Verdict::Falsified { witness, predicted };
        ControlFlow::Break(())
    });
    Ok((verdict, stats))
}

/// Exhaustive oracle: walks the whole grid in lexicographic order.
pub fn brute_force_check(net: &Network, s: &Sample, spec: &NoiseSpec) -> Result<Verdict> {
    brute_force_check_counted(net, s, spec, BRUTE_FORCE_CAP).map(|(v, _)| v)
}

/// Like [`brute_force_check`], also returning the number of evaluations.
pub fn brute_force_check_counted(
    net: &Network,
    s: &Sample,
    spec: &NoiseSpec,
    cap: u64,
) -> Result<(Verdict, u64)> {
    ensure_baseline(net, s)?;
    let n = check_spec(net, spec)?;
    if n > cap {
        return Err(Error::GridTooLarge { cap });
    }
    let mut evals = 0;
    let mut noisy = Vec::with_capacity(s.features.len());
    for nv in spec.grid()? {
        evals += 1;
        apply_noise_unchecked(&s.features, nv.deltas(), &mut noisy);
        let predicted = net.classify_unchecked(&noisy);
        if !predicted.is(s.true_label) {
            return Ok((
                Verdict::Falsified {
                    witness: nv,
                    predicted,
                },
                evals,
            ));
        }
    }
    Ok((Verdict::Verified, evals))
}

/// Every falsifying grid point in lexicographic order, at most `cap` of them.
pub fn extract_adversarial_vectors(
    net: &Network,
    s: &Sample,
    spec: &NoiseSpec,
    cap: usize,
) -> Result<Vec<AdversarialVector>> {
    ensure_baseline(net, s)?;
    check_spec(net, spec)?;
    let mut found = Vec::new();
    if cap == 0 {
        return Ok(found);
    }
    let mut stats = SearchStats::default();
    search(
        net,
        s,
        spec,
        SearchOptions::default(),
        &mut stats,
        |nv, predicted| {
            found.push(AdversarialVector { nv, predicted });
            if found.len() >= cap {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    );
    Ok(found)
}
