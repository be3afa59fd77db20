//! Reports derived from collected counterexamples: per-class bias, input
//! node sensitivity and classification-boundary banding.

pub mod bias;
pub mod boundary;
pub mod sensitivity;
pub mod store;

pub use bias::{bias_report, BiasReport, BiasWitness, ClassShare, LabelStats};
pub use boundary::{
    band_of, boundary_profile, Band, BandEntry, BoundaryProfile, DEFAULT_FRAGILE_CUT,
    DEFAULT_ROBUST_CUT,
};
pub use sensitivity::{
    sensitivity_report, single_node_sensitivity, NodeProbe, NodeSensitivity, ProbeMode,
    SensitivityReport,
};
pub use store::{enclosing_delta, store_insert, Counterexample, CounterexampleStore};
