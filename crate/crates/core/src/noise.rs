//! Integer-percent relative noise.
//!
//! A noise vector `d` perturbs an input as `x_i * (1 + d_i / 100)`, computed
//! as `x_i + x_i * d_i / 100`. Ranges are closed integer intervals, one per
//! input node.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: i32,
    pub hi: i32,
}

impl IntRange {
    pub fn new(lo: i32, hi: i32) -> Self {
        IntRange { lo, hi }
    }

    pub fn width(&self) -> u64 {
        (i64::from(self.hi) - i64::from(self.lo) + 1).max(0) as u64
    }

    pub fn contains(&self, v: i32) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub ranges: Vec<IntRange>,
}

impl NoiseSpec {
    pub fn new(ranges: Vec<IntRange>) -> Result<Self> {
        for (node, r) in ranges.iter().enumerate() {
            if r.lo > r.hi {
                return Err(Error::InvalidRange {
                    node,
                    lo: r.lo,
                    hi: r.hi,
                });
            }
        }
        Ok(NoiseSpec { ranges })
    }

    /// `[-delta, +delta]` on every node.
    pub fn symmetric(delta: u32, dim: usize) -> Self {
        let d = delta as i32;
        NoiseSpec {
            ranges: vec![IntRange::new(-d, d); dim],
        }
    }

    /// Parses `lo0:hi0,lo1:hi1,...`.
    pub fn parse_ranges(text: &str) -> Result<Self> {
        let ranges = text
            .split(',')
            .enumerate()
            .map(|(i, part)| {
                let (lo, hi) = part
                    .split_once(':')
                    .ok_or_else(|| Error::parse(format!("range {i}"), "expected lo:hi"))?;
                let lo = lo
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse(format!("range {i}"), e))?;
                let hi = hi
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse(format!("range {i}"), e))?;
                Ok(IntRange::new(lo, hi))
            })
            .collect::<Result<Vec<_>>>()?;
        NoiseSpec::new(ranges)
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    /// Number of grid points, or `None` on u64 overflow.
    pub fn cardinality(&self) -> Option<u64> {
        self.ranges
            .iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r.width()))
    }

    pub fn contains(&self, nv: &NoiseVector) -> bool {
        nv.0.len() == self.ranges.len() && self.ranges.iter().zip(&nv.0).all(|(r, &d)| r.contains(d))
    }

    pub fn as_box(&self) -> NoiseBox {
        NoiseBox {
            ranges: self.ranges.clone(),
        }
    }

    /// The symmetric bound, if every node has the same `[-d, d]` range.
    pub fn symmetric_delta(&self) -> Option<u32> {
        let first = self.ranges.first()?;
        (first.lo == -first.hi && self.ranges.iter().all(|r| r == first)).then_some(first.hi as u32)
    }

    pub fn grid(&self) -> Result<GridIter> {
        grid_iterator(self)
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = self.symmetric_delta() {
            return write!(f, "±{d}%");
        }
        let parts: Vec<String> = self.ranges.iter().map(|r| format!("{}:{}", r.lo, r.hi)).collect();
        f.write_str(&parts.join(","))
    }
}

/// One point of the noise grid, in percent per node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseVector(pub Vec<i32>);

impl NoiseVector {
    pub fn zeros(dim: usize) -> Self {
        NoiseVector(vec![0; dim])
    }

    pub fn deltas(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<i32>> for NoiseVector {
    fn from(v: Vec<i32>) -> Self {
        NoiseVector(v)
    }
}

impl fmt::Display for NoiseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d:+}")?;
        }
        f.write_str("]")
    }
}

/// `x * (1 + d/100)`, evaluated as `x + x*d/100`: exact at `d = 0`, and
/// integer percentages of integer-valued inputs stay exact.
#[inline]
pub fn perturb(x: f64, delta: i32) -> f64 {
    x + x * f64::from(delta) / 100.0
}

pub(crate) fn apply_noise_unchecked(x: &[f64], deltas: &[i32], out: &mut Vec<f64>) {
    out.clear();
    out.extend(x.iter().zip(deltas).map(|(&v, &d)| perturb(v, d)));
}

pub fn apply_noise(x: &[f64], nv: &NoiseVector) -> Result<Vec<f64>> {
    if x.len() != nv.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: nv.len(),
        });
    }
    let mut out = Vec::with_capacity(x.len());
    apply_noise_unchecked(x, &nv.0, &mut out);
    Ok(out)
}

/// Odometer over the grid in lexicographic order; the last node turns fastest.
#[derive(Clone, Debug)]
pub struct GridIter {
    ranges: Vec<IntRange>,
    next: Option<Vec<i32>>,
    remaining: u64,
}

pub fn grid_iterator(spec: &NoiseSpec) -> Result<GridIter> {
    let remaining = spec.cardinality().ok_or(Error::GridTooLarge { cap: u64::MAX })?;
    Ok(GridIter {
        ranges: spec.ranges.clone(),
        next: (remaining > 0).then(|| spec.ranges.iter().map(|r| r.lo).collect()),
        remaining,
    })
}

impl Iterator for GridIter {
    type Item = NoiseVector;

    fn next(&mut self) -> Option<NoiseVector> {
        let cur = self.next.take()?;
        self.remaining -= 1;
        let mut succ = cur.clone();
        let mut i = succ.len();
        let mut carried = true;
        while i > 0 {
            i -= 1;
            if succ[i] < self.ranges[i].hi {
                succ[i] += 1;
                carried = false;
                break;
            }
            succ[i] = self.ranges[i].lo;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(NoiseVector(cur))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).ok();
        (n.unwrap_or(usize::MAX), n)
    }
}

/// Axis-aligned sub-box of the integer grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseBox {
    pub ranges: Vec<IntRange>,
}

impl NoiseBox {
    pub fn new(ranges: Vec<IntRange>) -> Self {
        NoiseBox { ranges }
    }

    pub fn is_singleton(&self) -> bool {
        self.ranges.iter().all(|r| r.lo == r.hi)
    }

    pub fn cardinality(&self) -> Option<u64> {
        self.ranges
            .iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r.width()))
    }

    /// Lexicographically smallest point of the box.
    pub fn lower_corner(&self) -> NoiseVector {
        NoiseVector(self.ranges.iter().map(|r| r.lo).collect())
    }

    pub fn contains(&self, nv: &NoiseVector) -> bool {
        nv.0.len() == self.ranges.len() && self.ranges.iter().zip(&nv.0).all(|(r, &d)| r.contains(d))
    }

    pub fn as_spec(&self) -> NoiseSpec {
        NoiseSpec {
            ranges: self.ranges.clone(),
        }
    }
}

/// Splits along the widest node (lowest index on ties) at `floor((a+b)/2)`.
pub fn split_box(b: &NoiseBox) -> Result<(NoiseBox, NoiseBox)> {
    let mut widest: Option<(usize, u64)> = None;
    for (i, r) in b.ranges.iter().enumerate() {
        let w = r.width();
        if w >= 2 && widest.is_none_or(|(_, best)| w > best) {
            widest = Some((i, w));
        }
    }
    let (dim, _) = widest.ok_or(Error::SingletonBox)?;
    let r = b.ranges[dim];
    let mid = (i64::from(r.lo) + i64::from(r.hi)).div_euclid(2) as i32;
    let mut left = b.clone();
    let mut right = b.clone();
    left.ranges[dim].hi = mid;
    right.ranges[dim].lo = mid + 1;
    Ok((left, right))
}
