//! Successive-cancellation decoders.
//!
//! LLRs follow `ln P(bit = 0) / P(bit = 1)`; a zero LLR decides 0. The decoders work in natural
//! order on `x = u · T_N`: the left half of the input vector is decoded from the check-node
//! combination of the two codeword halves, the right half from the variable-node combination.
//!
//! The path metric of a candidate accumulates, for every input bit (frozen ones included), a
//! penalty against the decision LLR `α` seen by that bit:
//!
//! * [`MetricMode::Exact`]: `ln(1 + e^{-(1-2u)α})`, with exact check-node updates. The metric
//!   of a complete path is then `-ln P(u | y)`, so a list holding every codeword selects the
//!   maximum-likelihood one.
//! * [`MetricMode::Approximate`]: `|α|` when `u` disagrees with the sign of `α`, else 0, with
//!   min-sum check-node updates.

use serde::{Deserialize, Serialize};

use crate::construction::FrozenSet;
use crate::error::{invalid, Result};
use crate::polar::{polar_transform_in_place, BitVector};

/// Arithmetic used for check-node updates and path-metric penalties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    Exact,
    #[default]
    Approximate,
}

impl MetricMode {
    #[inline]
    fn check_node(self, a: f64, b: f64) -> f64 {
        let magnitude = a.abs().min(b.abs());
        let signed = if (a < 0.0) != (b < 0.0) { -magnitude } else { magnitude };
        match self {
            MetricMode::Approximate => signed,
            MetricMode::Exact => {
                signed + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
            }
        }
    }

    #[inline]
    fn penalty(self, llr: f64, bit: u8) -> f64 {
        match self {
            MetricMode::Approximate => {
                if bit != hard_decision(llr) {
                    llr.abs()
                } else {
                    0.0
                }
            }
            MetricMode::Exact => {
                let x = if bit == 0 { -llr } else { llr };
                x.max(0.0) + (-x.abs()).exp().ln_1p()
            }
        }
    }
}

#[inline]
fn variable_node(top: f64, bottom: f64, partial: u8) -> f64 {
    if partial == 0 {
        bottom + top
    } else {
        bottom - top
    }
}

/// Decision on a single LLR: negative means 1, anything else 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// One decoding path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ListCandidate {
    /// Input vector estimate; zero on every frozen position.
    pub u_hat: BitVector,
    /// Codeword estimate, `u_hat · T_N`.
    pub x_hat: BitVector,
    pub metric: f64,
}

fn check_input(llrs: &[f64], frozen: &[bool]) -> Result<()> {
    if llrs.len() != frozen.len() {
        return invalid(format!(
            "{} LLRs for a code of length {}",
            llrs.len(),
            frozen.len()
        ));
    }
    if !llrs.len().is_power_of_two() {
        return invalid(format!("length {} is not a power of two", llrs.len()));
    }
    Ok(())
}

/// Successive-cancellation decoder with reusable scratch space.
#[derive(Clone, Debug, Default)]
pub struct ScDecoder {
    mode: MetricMode,
    scratch: Vec<f64>,
}

impl ScDecoder {
    pub fn new(mode: MetricMode) -> Self {
        Self { mode, scratch: Vec::new() }
    }

    /// Decodes `llrs` against a frozen mask (`true` = frozen).
    pub fn decode_masked(&mut self, llrs: &[f64], frozen: &[bool]) -> Result<ListCandidate> {
        check_input(llrs, frozen)?;
        let n = llrs.len();
        self.scratch.resize(n, 0.0);
        let mut u = vec![0u8; n];
        let mut x = vec![0u8; n];
        let mut metric = 0.0;
        sc_node(self.mode, llrs, frozen, &mut u, &mut x, &mut self.scratch, &mut metric);
        Ok(ListCandidate {
            u_hat: BitVector::from_raw(u),
            x_hat: BitVector::from_raw(x),
            metric,
        })
    }

    pub fn decode(&mut self, llrs: &[f64], frozen: &FrozenSet) -> Result<ListCandidate> {
        self.decode_masked(llrs, &frozen.mask())
    }
}

fn sc_node(
    mode: MetricMode,
    alpha: &[f64],
    frozen: &[bool],
    u: &mut [u8],
    beta: &mut [u8],
    scratch: &mut [f64],
    metric: &mut f64,
) {
    let n = alpha.len();
    if n == 1 {
        let bit = if frozen[0] { 0 } else { hard_decision(alpha[0]) };
        *metric += mode.penalty(alpha[0], bit);
        u[0] = bit;
        beta[0] = bit;
        return;
    }
    let h = n / 2;
    let (child, rest) = scratch.split_at_mut(h);
    let (top, bottom) = alpha.split_at(h);
    for ((c, &a), &b) in child.iter_mut().zip(top).zip(bottom) {
        *c = mode.check_node(a, b);
    }
    let (u_left, u_right) = u.split_at_mut(h);
    let (beta_left, beta_right) = beta.split_at_mut(h);
    sc_node(mode, child, &frozen[..h], u_left, beta_left, rest, metric);
    for (((c, &a), &b), &p) in child.iter_mut().zip(top).zip(bottom).zip(beta_left.iter()) {
        *c = variable_node(a, b, p);
    }
    sc_node(mode, child, &frozen[h..], u_right, beta_right, rest, metric);
    for (l, &r) in beta_left.iter_mut().zip(beta_right.iter()) {
        *l ^= r;
    }
}

/// Successive-cancellation decoding.
pub fn sc_decode(llrs: &[f64], frozen: &FrozenSet, mode: MetricMode) -> Result<ListCandidate> {
    ScDecoder::new(mode).decode(llrs, frozen)
}

/// Successive-cancellation list decoder.
///
/// Every information bit forks each surviving path into both values and the `L` lowest
/// metrics survive. Among equal metrics, paths are ranked by creation order: parents in list
/// order, and for each parent the child agreeing with the LLR sign first. With `L = 1` this
/// makes the decoder coincide with [`ScDecoder`].
#[derive(Clone, Debug)]
pub struct SclDecoder {
    list_size: usize,
    mode: MetricMode,
    metrics: Vec<f64>,
}

struct Fork {
    metric: f64,
    parent: usize,
    bit: u8,
}

impl SclDecoder {
    pub fn new(list_size: usize, mode: MetricMode) -> Result<Self> {
        if list_size == 0 {
            return invalid("list size must be at least 1");
        }
        Ok(Self { list_size, mode, metrics: Vec::new() })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    /// Returns the surviving candidates sorted by ascending metric.
    pub fn decode_masked(&mut self, llrs: &[f64], frozen: &[bool]) -> Result<Vec<ListCandidate>> {
        check_input(llrs, frozen)?;
        let n = llrs.len();
        self.metrics.clear();
        self.metrics.push(0.0);
        let (beta, _) = self.node(0, n, llrs, 1, frozen);
        let paths = self.metrics.len();
        let mut candidates: Vec<ListCandidate> = (0..paths)
            .map(|p| {
                let x = beta[p * n..(p + 1) * n].to_vec();
                let mut u = x.clone();
                polar_transform_in_place(&mut u);
                ListCandidate {
                    u_hat: BitVector::from_raw(u),
                    x_hat: BitVector::from_raw(x),
                    metric: self.metrics[p],
                }
            })
            .collect();
        candidates.sort_by(|a, b| a.metric.total_cmp(&b.metric));
        Ok(candidates)
    }

    pub fn decode(&mut self, llrs: &[f64], frozen: &FrozenSet) -> Result<Vec<ListCandidate>> {
        self.decode_masked(llrs, &frozen.mask())
    }

    /// Decodes the subtree of size `n` whose first leaf is `offset`. `alpha` holds `paths`
    /// blocks of `n` LLRs. Returns the partial sums of every surviving path together with the
    /// index of the input path each survivor descends from.
    fn node(
        &mut self,
        offset: usize,
        n: usize,
        alpha: &[f64],
        paths: usize,
        frozen: &[bool],
    ) -> (Vec<u8>, Vec<usize>) {
        if n == 1 {
            return self.leaf(alpha, paths, frozen[offset]);
        }
        let h = n / 2;
        let mode = self.mode;

        let mut left = Vec::with_capacity(paths * h);
        for p in 0..paths {
            let block = &alpha[p * n..(p + 1) * n];
            left.extend((0..h).map(|j| mode.check_node(block[j], block[h + j])));
        }
        let (beta_left, origin_left) = self.node(offset, h, &left, paths, frozen);

        let survivors = origin_left.len();
        let mut right = Vec::with_capacity(survivors * h);
        for (q, &parent) in origin_left.iter().enumerate() {
            let block = &alpha[parent * n..(parent + 1) * n];
            let partial = &beta_left[q * h..(q + 1) * h];
            right.extend((0..h).map(|j| variable_node(block[j], block[h + j], partial[j])));
        }
        let (beta_right, origin_right) = self.node(offset + h, h, &right, survivors, frozen);

        let mut beta = Vec::with_capacity(origin_right.len() * n);
        let mut origin = Vec::with_capacity(origin_right.len());
        for (r, &q) in origin_right.iter().enumerate() {
            let lo = &beta_left[q * h..(q + 1) * h];
            let hi = &beta_right[r * h..(r + 1) * h];
            beta.extend(lo.iter().zip(hi).map(|(a, b)| a ^ b));
            beta.extend_from_slice(hi);
            origin.push(origin_left[q]);
        }
        (beta, origin)
    }

    fn leaf(&mut self, alpha: &[f64], paths: usize, frozen: bool) -> (Vec<u8>, Vec<usize>) {
        let mode = self.mode;
        if frozen {
            for (m, &a) in self.metrics.iter_mut().zip(alpha) {
                *m += mode.penalty(a, 0);
            }
            return (vec![0; paths], (0..paths).collect());
        }
        let mut forks: Vec<Fork> = Vec::with_capacity(2 * paths);
        for (parent, (&m, &a)) in self.metrics.iter().zip(alpha).enumerate() {
            let hd = hard_decision(a);
            for bit in [hd, 1 - hd] {
                forks.push(Fork { metric: m + mode.penalty(a, bit), parent, bit });
            }
        }
        forks.sort_by(|a, b| a.metric.total_cmp(&b.metric));
        forks.truncate(self.list_size);
        self.metrics = forks.iter().map(|f| f.metric).collect();
        (forks.iter().map(|f| f.bit).collect(), forks.iter().map(|f| f.parent).collect())
    }
}

/// Successive-cancellation list decoding; candidates sorted by ascending metric.
pub fn scl_decode(
    llrs: &[f64],
    frozen: &FrozenSet,
    list_size: usize,
    mode: MetricMode,
) -> Result<Vec<ListCandidate>> {
    SclDecoder::new(list_size, mode)?.decode(llrs, frozen)
}

/// Bitwise reliabilities extracted from a decoded list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftOutput {
    pub lambda: Vec<f64>,
}

/// Soft output of a candidate list: for every code bit, the smallest metric among candidates
/// with that bit set to 1 minus the smallest among those with it set to 0. Bits on which all
/// candidates agree get `±agreement`; every value is clamped to `[-agreement, agreement]`.
///
/// A zero difference takes the sign of the best candidate's bit, so `λ_i >= 0` exactly when
/// the minimum-metric candidate has `x_i = 0`.
pub fn list_soft_output(candidates: &[ListCandidate], agreement: f64) -> Result<SoftOutput> {
    let Some(best) = candidates.iter().min_by(|a, b| a.metric.total_cmp(&b.metric)) else {
        return invalid("soft output needs at least one candidate");
    };
    if agreement.is_nan() || agreement <= 0.0 {
        return invalid("agreement constant must be positive");
    }
    let n = best.x_hat.len();
    let mut min_metric = vec![[f64::INFINITY; 2]; n];
    for c in candidates {
        for (slot, &bit) in min_metric.iter_mut().zip(c.x_hat.iter()) {
            let m = &mut slot[bit as usize];
            *m = m.min(c.metric);
        }
    }
    let lambda = min_metric
        .iter()
        .zip(best.x_hat.iter())
        .map(|(&[zero, one], &best_bit)| {
            let sign = if best_bit == 0 { 1.0 } else { -1.0 };
            if zero.is_infinite() || one.is_infinite() {
                sign * agreement
            } else {
                let diff = (one - zero).clamp(-agreement, agreement);
                if diff == 0.0 {
                    sign * 0.0
                } else {
                    diff
                }
            }
        })
        .collect();
    Ok(SoftOutput { lambda })
}
