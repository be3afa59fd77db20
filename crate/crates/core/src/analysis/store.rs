use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::network::{Label, Prediction, Sample};
use crate::noise::{NoiseSpec, NoiseVector};
use crate::verify::AdversarialVector;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub sample_id: u64,
    pub nv: NoiseVector,
    pub predicted: Prediction,
    pub true_label: Label,
    /// Smallest symmetric bound enclosing the range the vector was found in.
    pub spec_delta: u32,
}

/// Smallest `d` with `spec` inside `[-d, d]` on every node.
pub fn enclosing_delta(spec: &NoiseSpec) -> u32 {
    spec.ranges
        .iter()
        .map(|r| r.lo.unsigned_abs().max(r.hi.unsigned_abs()))
        .max()
        .unwrap_or(0)
}

/// Deduplicated counterexamples keyed by `(sample_id, nv)`, iterated in key order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CounterexampleStore {
    entries: BTreeMap<(u64, NoiseVector), Counterexample>,
}

impl CounterexampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns whether the entry was new.
    pub fn insert(&mut self, ce: Counterexample) -> Result<bool> {
        if ce.predicted.is(ce.true_label) {
            return Err(Error::InvalidCounterexample {
                sample_id: ce.sample_id,
            });
        }
        let key = (ce.sample_id, ce.nv.clone());
        if self.entries.contains_key(&key) {
            return Ok(false);
        }
        self.entries.insert(key, ce);
        Ok(true)
    }

    /// Adds extraction results for one sample; returns how many were new.
    pub fn extend_from(
        &mut self,
        sample: &Sample,
        spec: &NoiseSpec,
        found: impl IntoIterator<Item = AdversarialVector>,
    ) -> Result<usize> {
        let spec_delta = enclosing_delta(spec);
        let mut added = 0;
        for av in found {
            let ce = Counterexample {
                sample_id: sample.id,
                nv: av.nv,
                predicted: av.predicted,
                true_label: sample.true_label,
                spec_delta,
            };
            if self.insert(ce)? {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Counterexample> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, sample_id: u64, nv: &NoiseVector) -> bool {
        self.entries.contains_key(&(sample_id, nv.clone()))
    }
}

pub fn store_insert(store: &mut CounterexampleStore, ce: Counterexample) -> Result<bool> {
    store.insert(ce)
}

#[derive(Serialize, Deserialize)]
struct StoreRepr {
    entries: Vec<Counterexample>,
}

impl Serialize for CounterexampleStore {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StoreRepr {
            entries: self.entries.values().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CounterexampleStore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = StoreRepr::deserialize(d)?;
        let mut store = CounterexampleStore::new();
        for ce in repr.entries {
            store.insert(ce).map_err(serde::de::Error::custom)?;
        }
        Ok(store)
    }
}
