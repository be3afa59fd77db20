//! Formal noise analysis for feed-forward ReLU classifiers.
//!
//! Inputs are perturbed by integer-percent relative noise. On that grid the
//! crate decides label stability exactly (branch-and-bound over interval
//! bounds, with an exhaustive oracle alongside), searches each sample's noise
//! tolerance, collects every adversarial noise vector at a given level, and
//! derives class-bias, input-sensitivity and boundary reports from them. An
//! SMV encoding is emitted for cross-checking with an external model checker.

pub mod analysis;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod io;
pub mod network;
pub mod noise;
pub mod smv;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use network::{
    classify, forward_eval, validate_network, Activation, Dataset, Label, Layer, Network,
    Prediction, Sample, Split, Violation,
};
pub use noise::{apply_noise, grid_iterator, split_box, IntRange, NoiseBox, NoiseSpec, NoiseVector};
pub use smv::CheckReport;
pub use tolerance::{global_tolerance, per_sample_tolerance, SearchMode, ToleranceEntry, ToleranceReport};
pub use verify::{
    brute_force_check, check_baseline, extract_adversarial_vectors, verify_noise_level,
    AdversarialVector, BaselineReport, Verdict,
};
