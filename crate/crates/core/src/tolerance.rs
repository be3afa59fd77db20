//! Per-sample and dataset-wide noise tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Dataset, Label, Network, Prediction, Sample, Split};
use crate::noise::{NoiseSpec, NoiseVector};
use crate::verify::{ensure_baseline, verify_noise_level, Verdict};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Start at the initial bound and lower it one percent at a time.
    LinearDescent,
    /// Bisect `[0, init]`; valid because the symmetric grids are nested.
    #[default]
    BinarySearch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToleranceEntry {
    pub sample_id: u64,
    pub true_label: Label,
    pub baseline_prediction: Prediction,
    pub baseline_correct: bool,
    /// Largest verified symmetric bound; `None` for misclassified samples.
    pub tolerance: Option<u32>,
    /// Set when the initial bound itself verified, so the true tolerance may be larger.
    pub reached_init: bool,
    pub first_failing_delta: Option<u32>,
    pub witness: Option<NoiseVector>,
    pub witness_prediction: Option<Prediction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub split: Split,
    pub init_delta: u32,
    pub mode: SearchMode,
    pub global_tolerance: u32,
    pub samples: Vec<ToleranceEntry>,
}

impl ToleranceReport {
    /// Minimum over baseline-correct entries, recomputed from the entries.
    pub fn recompute_global(&self) -> Option<u32> {
        self.samples
            .iter()
            .filter(|e| e.baseline_correct)
            .filter_map(|e| e.tolerance)
            .min()
    }
}

fn entry(s: &Sample, tolerance: u32, failing: Option<(u32, Verdict)>, init: u32) -> ToleranceEntry {
    let (first_failing_delta, witness, witness_prediction) = match failing {
        Some((d, Verdict::Falsified { witness, predicted })) => {
            (Some(d), Some(witness), Some(predicted))
        }
        _ => (None, None, None),
    };
    ToleranceEntry {
        sample_id: s.id,
        true_label: s.true_label,
        baseline_prediction: Prediction::Label(s.true_label),
        baseline_correct: true,
        tolerance: Some(tolerance),
        reached_init: tolerance == init,
        first_failing_delta,
        witness,
        witness_prediction,
    }
}

pub fn per_sample_tolerance(
    net: &Network,
    s: &Sample,
    init: u32,
    mode: SearchMode,
) -> Result<ToleranceEntry> {
    ensure_baseline(net, s)?;
    let dim = net.input_dim;
    let check = |d: u32| verify_noise_level(net, s, &NoiseSpec::symmetric(d, dim));
    match mode {
        SearchMode::LinearDescent => {
            let mut failing = None;
            for d in (0..=init).rev() {
                let v = check(d)?;
                if v.is_verified() {
                    return Ok(entry(s, d, failing, init));
                }
                failing = Some((d, v));
            }
            // symmetric(0) is the baseline, which was checked above
            unreachable!("zero noise falsified a baseline-correct sample")
        }
        SearchMode::BinarySearch => {
            let top = check(init)?;
            if top.is_verified() {
                return Ok(entry(s, init, None, init));
            }
            let (mut lo, mut hi, mut failing) = (0, init, top);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let v = check(mid)?;
                if v.is_verified() {
                    lo = mid;
                } else {
                    hi = mid;
                    failing = v;
                }
            }
            Ok(entry(s, lo, Some((hi, failing)), init))
        }
    }
}

/// Tolerances of every sample; the global value is the minimum over the
/// baseline-correct ones. Samples are processed in parallel, results keep
/// dataset order.
pub fn global_tolerance(
    net: &Network,
    ds: &Dataset,
    init: u32,
    mode: SearchMode,
) -> Result<ToleranceReport> {
    let samples = ds
        .samples
        .par_iter()
        .map(|s| {
            let predicted = net.classify(&s.features)?;
            if predicted.is(s.true_label) {
                per_sample_tolerance(net, s, init, mode)
            } else {
                Ok(ToleranceEntry {
                    sample_id: s.id,
                    true_label: s.true_label,
                    baseline_prediction: predicted,
                    baseline_correct: false,
                    tolerance: None,
                    reached_init: false,
                    first_failing_delta: None,
                    witness: None,
                    witness_prediction: None,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ToleranceReport {
        split: ds.split,
        init_delta: init,
        mode,
        global_tolerance: 0,
        samples,
    };
    report.global_tolerance = report.recompute_global().ok_or(Error::NoCorrectSamples)?;
    Ok(report)
}
