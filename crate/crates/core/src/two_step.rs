//! Two-step decoding of polar codes viewed as product codes.
//!
//! Step 1 decodes every row and every column of the `N_c x N_r` LLR matrix with short
//! component decoders and compares the two codeword estimates. Row and column decoders
//! exchange hard decisions (mismatch localization followed by saturation / erasure of LLRs)
//! or list-based soft outputs, for at most `t` iterations. When the estimates agree, the input
//! vector follows by re-encoding the agreed codeword. Otherwise step 2 decodes the received
//! vector as a single length-`N` polar code.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::CodeSpec;
use crate::decoders::{list_soft_output, MetricMode, ScDecoder, SclDecoder};
use crate::error::{invalid, Error, Result};
use crate::latency::{Cost, LatencyParams};
use crate::polar::{polar_transform_in_place, BitMatrix, BitVector, LlrMatrix};

/// Component decoder and information exchanged during step 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// SC components, hard-decision exchange.
    #[serde(rename = "sc-hd")]
    ScHd,
    /// SCL components, hard-decision exchange.
    #[serde(rename = "scl-hd")]
    SclHd,
    /// SCL components, soft outputs from the candidate lists.
    #[serde(rename = "scl-sd")]
    SclSd,
}

impl Variant {
    pub fn uses_list(self) -> bool {
        !matches!(self, Variant::ScHd)
    }

    pub fn is_soft(self) -> bool {
        matches!(self, Variant::SclSd)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::ScHd => "sc-hd",
            Variant::SclHd => "scl-hd",
            Variant::SclSd => "scl-sd",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sc-hd" => Ok(Variant::ScHd),
            "scl-hd" => Ok(Variant::SclHd),
            "scl-sd" => Ok(Variant::SclSd),
            other => invalid(format!("unknown two-step variant {other:?}")),
        }
    }
}

pub const DEFAULT_SATURATION: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepConfig {
    pub variant: Variant,
    /// Maximum number of step-1 iterations.
    pub max_iterations: usize,
    pub list_size: usize,
    /// Finite stand-in for infinite LLRs in the hard-decision update.
    pub saturation: f64,
    /// Soft output assigned to bits on which every list candidate agrees.
    pub agreement: f64,
    /// Reject step-1 agreements whose input vector has a one on a frozen position.
    pub frozen_check: bool,
    pub metric_mode: MetricMode,
    /// Weight of the channel LLRs added to the exchanged soft outputs. Zero substitutes the
    /// partner's soft output outright.
    pub blend: f64,
}

impl Default for TwoStepConfig {
    fn default() -> Self {
        Self {
            variant: Variant::ScHd,
            max_iterations: 4,
            list_size: 8,
            saturation: DEFAULT_SATURATION,
            agreement: DEFAULT_SATURATION,
            frozen_check: true,
            metric_mode: MetricMode::Approximate,
            blend: 0.0,
        }
    }
}

impl TwoStepConfig {
    pub fn new(variant: Variant) -> Self {
        Self { variant, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return invalid("at least one step-1 iteration is required");
        }
        if self.list_size == 0 {
            return invalid("list size must be at least 1");
        }
        if [self.saturation, self.agreement].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return invalid("saturation and agreement constants must be positive");
        }
        if self.blend.is_nan() || self.blend < 0.0 {
            return invalid("blend factor must be non-negative");
        }
        Ok(())
    }

    /// Cost model matching this configuration.
    pub fn cost(&self) -> Cost {
        match self.variant {
            Variant::ScHd => Cost::ScHd,
            Variant::SclHd => Cost::SclHd,
            Variant::SclSd => Cost::SclSd,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepOutcome {
    pub u_hat: BitVector,
    /// Step-1 iterations performed, in `1..=t`.
    pub iterations_used: usize,
    pub step2_used: bool,
    /// Time steps charged by the latency model.
    pub time_steps: u64,
    /// Row and column estimates agreed at some iteration (even if the frozen check then
    /// rejected the agreement).
    pub agreement_achieved: bool,
}

/// Rows and columns flagged as erroneous.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub err_rows: BTreeSet<usize>,
    pub err_cols: BTreeSet<usize>,
}

impl MismatchReport {
    pub fn is_empty(&self) -> bool {
        self.err_rows.is_empty() && self.err_cols.is_empty()
    }
}

/// Greedy localization of the lines responsible for a mismatch pattern `X_d`.
///
/// While mismatches remain, the row with the most of them is flagged if its count is strictly
/// larger than the best column count, otherwise that column is; the flagged line is then
/// cleared. Ties among rows (or among columns) go to the lowest index.
pub fn find_erroneous(mismatch: &BitMatrix) -> MismatchReport {
    let mut xd = mismatch.clone();
    let mut report = MismatchReport::default();
    let (rows, cols) = (xd.rows(), xd.cols());
    let mut row_counts: Vec<usize> = (0..rows).map(|i| xd.row(i).iter().map(|&b| b as usize).sum()).collect();
    let mut col_counts: Vec<usize> = (0..cols).map(|j| (0..rows).map(|i| xd[(i, j)] as usize).sum()).collect();

    // first index of the maximum
    fn arg_max(counts: &[usize]) -> (usize, usize) {
        counts.iter().enumerate().fold((0, 0), |best, (i, &c)| if c > best.1 { (i, c) } else { best })
    }

    loop {
        let (er, max_row) = arg_max(&row_counts);
        let (ec, max_col) = arg_max(&col_counts);
        if max_row + max_col == 0 {
            break;
        }
        if max_row > max_col {
            report.err_rows.insert(er);
            for j in 0..cols {
                if xd[(er, j)] == 1 {
                    xd[(er, j)] = 0;
                    col_counts[j] -= 1;
                }
            }
            row_counts[er] = 0;
        } else {
            report.err_cols.insert(ec);
            for i in 0..rows {
                if xd[(i, ec)] == 1 {
                    xd[(i, ec)] = 0;
                    row_counts[i] -= 1;
                }
            }
            col_counts[ec] = 0;
        }
    }
    report
}

/// Hard-decision LLR update.
///
/// On a flagged row, entries in unflagged columns are pinned to `±saturation` according to
/// the column decoders' estimate (`col_estimate`); entries in flagged columns become erasures
/// (0). Flagged columns are updated symmetrically from the row decoders' estimate
/// (`row_estimate`). Everything else is left as is. Returns the new `(row input, column input)`.
pub fn update_llrs_hd(
    row_input: &LlrMatrix,
    col_input: &LlrMatrix,
    report: &MismatchReport,
    row_estimate: &BitMatrix,
    col_estimate: &BitMatrix,
    saturation: f64,
) -> (LlrMatrix, LlrMatrix) {
    let pin = |bit: u8| if bit == 0 { saturation } else { -saturation };
    let mut rows_out = row_input.clone();
    let mut cols_out = col_input.clone();
    for &r in &report.err_rows {
        for j in 0..rows_out.cols() {
            rows_out[(r, j)] =
                if report.err_cols.contains(&j) { 0.0 } else { pin(col_estimate[(r, j)]) };
        }
    }
    for &c in &report.err_cols {
        for i in 0..cols_out.rows() {
            cols_out[(i, c)] =
                if report.err_rows.contains(&i) { 0.0 } else { pin(row_estimate[(i, c)]) };
        }
    }
    (rows_out, cols_out)
}

/// Soft exchange: the column soft outputs feed the next row decoding and vice versa,
/// optionally with `blend` times the channel LLRs added. Returns `(row input, column input)`.
pub fn step1_sd_exchange(
    row_soft: &LlrMatrix,
    col_soft: &LlrMatrix,
    channel: &LlrMatrix,
    blend: f64,
) -> (LlrMatrix, LlrMatrix) {
    let mix = |soft: &LlrMatrix| {
        let mut out = soft.clone();
        if blend != 0.0 {
            for (o, &y) in out.as_mut_slice().iter_mut().zip(channel.as_slice()) {
                *o += blend * y;
            }
        }
        out
    };
    (mix(col_soft), mix(row_soft))
}

/// Per-codeword two-step decoder. Holds scratch state; one instance per worker.
pub struct TwoStepDecoder<'a> {
    spec: &'a CodeSpec,
    cfg: TwoStepConfig,
    row_masks: Vec<Vec<bool>>,
    col_masks: Vec<Vec<bool>>,
    full_mask: Vec<bool>,
    sc: ScDecoder,
    scl: SclDecoder,
    step_cost: u64,
    full_cost: u64,
}

struct Step1Pass {
    row_estimate: BitMatrix,
    col_estimate: BitMatrix,
    row_soft: Option<LlrMatrix>,
    col_soft: Option<LlrMatrix>,
}

impl<'a> TwoStepDecoder<'a> {
    pub fn new(spec: &'a CodeSpec, cfg: TwoStepConfig) -> Result<Self> {
        cfg.validate()?;
        let profile = spec.profile();
        let params = LatencyParams::from_spec(spec);
        let cost = cfg.cost();
        Ok(Self {
            spec,
            row_masks: profile.row_frozen_sets.iter().map(|f| f.mask()).collect(),
            col_masks: profile.col_frozen_sets.iter().map(|f| f.mask()).collect(),
            full_mask: spec.frozen().mask(),
            sc: ScDecoder::new(cfg.metric_mode),
            scl: SclDecoder::new(cfg.list_size, cfg.metric_mode)?,
            step_cost: cost.iteration_steps(&params),
            full_cost: cost.full_steps(&params),
            cfg,
        })
    }

    pub fn config(&self) -> &TwoStepConfig {
        &self.cfg
    }

    /// Time steps of one step-1 iteration.
    pub fn iteration_cost(&self) -> u64 {
        self.step_cost
    }

    /// Time steps of the step-2 full-length decode.
    pub fn full_cost(&self) -> u64 {
        self.full_cost
    }

    pub fn decode(&mut self, y: &LlrMatrix) -> Result<TwoStepOutcome> {
        let (n_c, n_r) = (self.spec.n_c(), self.spec.n_r());
        if y.rows() != n_c || y.cols() != n_r {
            return invalid(format!(
                "LLR matrix is {}x{}, code expects {n_c}x{n_r}",
                y.rows(),
                y.cols()
            ));
        }
        let mut row_input = y.clone();
        let mut col_input = y.clone();
        let mut pass = Step1Pass {
            row_estimate: BitMatrix::zeros(n_c, n_r),
            col_estimate: BitMatrix::zeros(n_c, n_r),
            row_soft: None,
            col_soft: None,
        };
        let mut redo_rows: Vec<usize> = (0..n_c).collect();
        let mut redo_cols: Vec<usize> = (0..n_r).collect();
        let mut time_steps = 0;
        let mut agreement_achieved = false;

        for iteration in 1..=self.cfg.max_iterations {
            time_steps += self.step_cost;
            self.decode_lines(&row_input, &col_input, &redo_rows, &redo_cols, &mut pass)?;

            if pass.row_estimate == pass.col_estimate {
                agreement_achieved = true;
                let mut u = pass.col_estimate.as_slice().to_vec();
                polar_transform_in_place(&mut u);
                let violates = self.cfg.frozen_check
                    && self.full_mask.iter().zip(&u).any(|(&frozen, &bit)| frozen && bit == 1);
                if !violates {
                    return Ok(TwoStepOutcome {
                        u_hat: BitVector::from_raw(u),
                        iterations_used: iteration,
                        step2_used: false,
                        time_steps,
                        agreement_achieved,
                    });
                }
                return self.step2(y, iteration, time_steps, agreement_achieved);
            }
            if iteration == self.cfg.max_iterations {
                break;
            }
            if self.cfg.variant.is_soft() {
                let (rs, cs) = (pass.row_soft.as_ref().unwrap(), pass.col_soft.as_ref().unwrap());
                (row_input, col_input) = step1_sd_exchange(rs, cs, y, self.cfg.blend);
            } else {
                let report = find_erroneous(&pass.row_estimate.xor(&pass.col_estimate));
                (row_input, col_input) = update_llrs_hd(
                    &row_input,
                    &col_input,
                    &report,
                    &pass.row_estimate,
                    &pass.col_estimate,
                    self.cfg.saturation,
                );
                redo_rows = report.err_rows.into_iter().collect();
                redo_cols = report.err_cols.into_iter().collect();
            }
        }
        self.step2(y, self.cfg.max_iterations, time_steps, agreement_achieved)
    }

    fn step2(
        &mut self,
        y: &LlrMatrix,
        iterations_used: usize,
        time_steps: u64,
        agreement_achieved: bool,
    ) -> Result<TwoStepOutcome> {
        let llrs = y.as_slice();
        let best = if self.cfg.variant.uses_list() {
            self.scl.decode_masked(llrs, &self.full_mask)?.swap_remove(0)
        } else {
            self.sc.decode_masked(llrs, &self.full_mask)?
        };
        Ok(TwoStepOutcome {
            u_hat: best.u_hat,
            iterations_used,
            step2_used: true,
            time_steps: time_steps + self.full_cost,
            agreement_achieved,
        })
    }

    fn decode_lines(
        &mut self,
        row_input: &LlrMatrix,
        col_input: &LlrMatrix,
        rows: &[usize],
        cols: &[usize],
        pass: &mut Step1Pass,
    ) -> Result<()> {
        let (n_c, n_r) = (row_input.rows(), row_input.cols());
        let soft = self.cfg.variant.is_soft();
        if soft {
            pass.row_soft.get_or_insert_with(|| LlrMatrix::zeros(n_c, n_r));
            pass.col_soft.get_or_insert_with(|| LlrMatrix::zeros(n_c, n_r));
        }
        for &i in rows {
            let (x, lambda) = self.decode_component(row_input.row(i), LineKind::Row(i))?;
            pass.row_estimate.row_mut(i).copy_from_slice(&x);
            if let Some(l) = lambda {
                pass.row_soft.as_mut().unwrap().row_mut(i).copy_from_slice(&l);
            }
        }
        for &j in cols {
            let (x, lambda) = self.decode_component(&col_input.column(j), LineKind::Column(j))?;
            pass.col_estimate.set_column(j, &x);
            if let Some(l) = lambda {
                pass.col_soft.as_mut().unwrap().set_column(j, &l);
            }
        }
        Ok(())
    }

    fn decode_component(&mut self, llrs: &[f64], line: LineKind) -> Result<(Vec<u8>, Option<Vec<f64>>)> {
        let mask = match line {
            LineKind::Row(i) => &self.row_masks[i],
            LineKind::Column(j) => &self.col_masks[j],
        };
        match self.cfg.variant {
            Variant::ScHd => Ok((self.sc.decode_masked(llrs, mask)?.x_hat.into_inner(), None)),
            Variant::SclHd => {
                let best = self.scl.decode_masked(llrs, mask)?.swap_remove(0);
                Ok((best.x_hat.into_inner(), None))
            }
            Variant::SclSd => {
                let candidates = self.scl.decode_masked(llrs, mask)?;
                let soft = list_soft_output(&candidates, self.cfg.agreement)?;
                Ok((candidates[0].x_hat.to_vec(), Some(soft.lambda)))
            }
        }
    }
}

#[derive(Clone, Copy)]
enum LineKind {
    Row(usize),
    Column(usize),
}

/// Convenience wrapper building a [`TwoStepDecoder`] for a single decode.
pub fn two_step_decode(y: &LlrMatrix, spec: &CodeSpec, cfg: &TwoStepConfig) -> Result<TwoStepOutcome> {
    TwoStepDecoder::new(spec, cfg.clone())?.decode(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(rows: &[&[u8]]) -> BitMatrix {
        BitMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn clean_pattern_flags_nothing() {
        assert!(find_erroneous(&BitMatrix::zeros(4, 8)).is_empty());
    }

    #[test]
    fn single_mismatch_goes_to_column() {
        let mut xd = BitMatrix::zeros(4, 8);
        xd[(2, 5)] = 1;
        let r = find_erroneous(&xd);
        assert!(r.err_rows.is_empty());
        assert_eq!(r.err_cols.iter().copied().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn string_of_mismatches_flags_its_row() {
        let xd = bits(&[
            &[0, 0, 0, 0, 0, 0],
            &[0, 1, 1, 1, 0, 1],
            &[0, 0, 0, 1, 0, 0],
            &[0, 0, 0, 1, 0, 0],
        ]);
        let r = find_erroneous(&xd);
        // row 1 (4 mismatches) beats column 3 (3); afterwards column 3 holds the last two
        assert_eq!(r.err_rows.iter().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(r.err_cols.iter().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn hd_update_rules() {
        let y = LlrMatrix::from_vec(4, 4, (0..16).map(|v| v as f64 * 0.25 - 1.3).collect()).unwrap();
        let empty = MismatchReport::default();
        let zeros = BitMatrix::zeros(4, 4);
        let (r, c) = update_llrs_hd(&y, &y, &empty, &zeros, &zeros, 1000.0);
        assert_eq!((r, c), (y.clone(), y.clone()));

        let mut col_est = BitMatrix::zeros(4, 4);
        col_est.row_mut(1).copy_from_slice(&[0, 1, 0, 1]);
        let report = MismatchReport { err_rows: [1].into(), err_cols: BTreeSet::new() };
        let (r, c) = update_llrs_hd(&y, &y, &report, &zeros, &col_est, 1000.0);
        assert_eq!(r.row(1), &[1000.0, -1000.0, 1000.0, -1000.0]);
        assert_eq!(c, y);
        for i in [0, 2, 3] {
            assert_eq!(r.row(i), y.row(i));
        }
    }

    #[test]
    fn hd_update_row_and_column_meet_at_erasure() {
        let y = LlrMatrix::from_vec(4, 4, vec![0.5; 16]).unwrap();
        let mut row_est = BitMatrix::zeros(4, 4);
        let mut col_est = BitMatrix::zeros(4, 4);
        row_est.set_column(3, &[1, 0, 1, 1]);
        col_est.row_mut(2).copy_from_slice(&[1, 1, 0, 0]);
        let report = MismatchReport { err_rows: [2].into(), err_cols: [3].into() };
        let (r, c) = update_llrs_hd(&y, &y, &report, &row_est, &col_est, 9.0);
        assert_eq!(r.row(2), &[-9.0, -9.0, 9.0, 0.0]);
        assert_eq!(c.column(3), vec![-9.0, 9.0, 0.0, -9.0]);
        for i in [0, 1, 3] {
            assert_eq!(r.row(i), y.row(i));
        }
        for j in 0..3 {
            assert_eq!(c.column(j), y.column(j));
        }
    }

    #[test]
    fn sd_exchange_substitutes_partner_output() {
        let row_soft = LlrMatrix::from_vec(2, 2, vec![5.0, -5.0, 5.0, 5.0]).unwrap();
        let col_soft = LlrMatrix::from_vec(2, 2, vec![-1.0, 2.0, 3.0, -4.0]).unwrap();
        let y = LlrMatrix::from_vec(2, 2, vec![0.5; 4]).unwrap();
        let (r, c) = step1_sd_exchange(&row_soft, &col_soft, &y, 0.0);
        assert_eq!(r, col_soft);
        assert_eq!(c, row_soft);
        let (r, _) = step1_sd_exchange(&row_soft, &col_soft, &y, 2.0);
        assert_eq!(r.as_slice(), &[0.0, 3.0, 4.0, -3.0]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TwoStepConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.max_iterations = 0;
        assert!(cfg.validate().is_err());
        let cfg = TwoStepConfig { saturation: 0.0, ..TwoStepConfig::default() };
        assert!(cfg.validate().is_err());
        assert_eq!("SCL-SD".parse::<Variant>().unwrap(), Variant::SclSd);
        assert!("bp".parse::<Variant>().is_err());
    }
}
