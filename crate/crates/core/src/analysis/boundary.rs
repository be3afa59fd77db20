use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::ToleranceReport;

pub const DEFAULT_FRAGILE_CUT: u32 = 12;
pub const DEFAULT_ROBUST_CUT: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Fragile,
    Middle,
    Robust,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandEntry {
    pub sample_id: u64,
    pub tolerance: u32,
    pub band: Band,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub fragile_cut: u32,
    pub robust_cut: u32,
    pub samples: Vec<BandEntry>,
    pub fragile: usize,
    pub middle: usize,
    pub robust: usize,
}

pub fn band_of(tolerance: u32, fragile_cut: u32, robust_cut: u32) -> Band {
    if tolerance < fragile_cut {
        Band::Fragile
    } else if tolerance >= robust_cut {
        Band::Robust
    } else {
        Band::Middle
    }
}

/// Bands baseline-correct samples: `tol < fragile_cut` is fragile,
/// `tol >= robust_cut` robust, anything between is middle.
pub fn boundary_profile(
    report: &ToleranceReport,
    fragile_cut: u32,
    robust_cut: u32,
) -> Result<BoundaryProfile> {
    if fragile_cut > robust_cut {
        return Err(Error::InvalidCuts {
            fragile: fragile_cut,
            robust: robust_cut,
        });
    }
    let samples: Vec<BandEntry> = report
        .samples
        .iter()
        .filter(|e| e.baseline_correct)
        .filter_map(|e| {
            e.tolerance.map(|t| BandEntry {
                sample_id: e.sample_id,
                tolerance: t,
                band: band_of(t, fragile_cut, robust_cut),
            })
        })
        .collect();
    let count = |b: Band| samples.iter().filter(|e| e.band == b).count();
    Ok(BoundaryProfile {
        fragile_cut,
        robust_cut,
        fragile: count(Band::Fragile),
        middle: count(Band::Middle),
        robust: count(Band::Robust),
        samples,
    })
}
