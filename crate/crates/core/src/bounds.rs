//! Interval bound propagation with outward rounding.
//!
//! Each endpoint is computed with the same operation order as
//! [`Network::forward`](crate::network::Network::forward), rounded down for
//! lower bounds and up for upper bounds. Directed rounding is emulated with
//! error-free transformations (TwoSum, FMA residuals), so exact operations
//! stay exact and inexact ones move by one ulp. Because round-to-nearest is
//! monotone, the float forward pass of any point in the box lands inside the
//! result, as does the real-arithmetic value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Activation, Label, Layer, Network};
use crate::noise::NoiseBox;

// Below this magnitude FMA residuals may underflow; widen unconditionally.
const TINY: f64 = 1e-290;

#[inline]
fn widen(v: f64, residual: f64) -> (f64, f64) {
    if residual > 0.0 {
        (v, v.next_up())
    } else if residual < 0.0 {
        (v.next_down(), v)
    } else {
        (v, v)
    }
}

#[inline]
fn widen_both(v: f64) -> (f64, f64) {
    (v.next_down(), v.next_up())
}

// TwoSum is exact for finite operands, subnormals included.
#[inline]
fn add_round(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return widen_both(s);
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    widen(s, err)
}

#[inline]
fn mul_round(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if a == 0.0 || b == 0.0 {
        return (p, p);
    }
    if !p.is_finite() || p.abs() < TINY {
        return widen_both(p);
    }
    widen(p, a.mul_add(b, -p))
}

#[inline]
fn div_round(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    if a == 0.0 {
        return (q, q);
    }
    if !q.is_finite() || q.abs() < TINY {
        return widen_both(q);
    }
    // a/b - q = r/b with r = a - q*b exact
    let r = (-q).mul_add(b, a);
    widen(q, if b > 0.0 { r } else { -r })
}

pub fn add_down(a: f64, b: f64) -> f64 {
    add_round(a, b).0
}

pub fn add_up(a: f64, b: f64) -> f64 {
    add_round(a, b).1
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    mul_round(a, b).0
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    mul_round(a, b).1
}

pub fn div_down(a: f64, b: f64) -> f64 {
    div_round(a, b).0
}

pub fn div_up(a: f64, b: f64) -> f64 {
    div_round(a, b).1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundsVector(pub Vec<Interval>);

impl BoundsVector {
    pub fn points(values: &[f64]) -> Self {
        BoundsVector(values.iter().copied().map(Interval::point).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.0.len() && self.0.iter().zip(values).all(|(iv, &v)| iv.contains(v))
    }

    /// True when `label`'s lower bound strictly beats every other upper bound.
    pub fn certifies(&self, label: Label) -> bool {
        let Some(target) = self.0.get(label.0) else {
            return false;
        };
        self.0
            .iter()
            .enumerate()
            .all(|(j, iv)| j == label.0 || target.lo > iv.hi)
    }
}

fn propagate_layer(layer: &Layer, input: &[Interval], out: &mut Vec<Interval>) {
    out.clear();
    for (row, &b) in layer.weights.iter().zip(&layer.biases) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (&w, x) in row.iter().zip(input) {
            let (pl, pu) = if w >= 0.0 {
                (mul_down(w, x.lo), mul_up(w, x.hi))
            } else {
                (mul_down(w, x.hi), mul_up(w, x.lo))
            };
            lo = add_down(lo, pl);
            hi = add_up(hi, pu);
        }
        lo = add_down(lo, b);
        hi = add_up(hi, b);
        if layer.activation == Activation::Relu {
            lo = lo.max(0.0);
            hi = hi.max(0.0);
        }
        out.push(Interval { lo, hi });
    }
}

pub(crate) fn propagate_unchecked(net: &Network, input: &[Interval]) -> BoundsVector {
    let mut cur = input.to_vec();
    let mut next = Vec::new();
    for layer in &net.layers {
        propagate_layer(layer, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    BoundsVector(cur)
}

/// Sound output bounds for every input inside `input_box`.
pub fn propagate_bounds(net: &Network, input_box: &BoundsVector) -> Result<BoundsVector> {
    if input_box.len() != net.input_dim {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim,
            actual: input_box.len(),
        });
    }
    if let Some(index) = input_box
        .0
        .iter()
        .position(|iv| !iv.lo.is_finite() || !iv.hi.is_finite())
    {
        return Err(Error::NonFiniteInput { index });
    }
    Ok(propagate_unchecked(net, &input_box.0))
}

/// Input intervals covering the noisy input for every `d` in the box.
pub fn noisy_input_box(x: &[f64], b: &NoiseBox) -> BoundsVector {
    BoundsVector(
        x.iter()
            .zip(&b.ranges)
            .map(|(&v, r)| {
                // x + x*d/100 is monotone in d; the sign of x picks the ends
                let (d_lo, d_hi) = if v >= 0.0 { (r.lo, r.hi) } else { (r.hi, r.lo) };
                let lo = add_down(v, div_down(mul_down(v, f64::from(d_lo)), 100.0));
                let hi = add_up(v, div_up(mul_up(v, f64::from(d_hi)), 100.0));
                Interval::new(lo, hi)
            })
            .collect(),
    )
}
