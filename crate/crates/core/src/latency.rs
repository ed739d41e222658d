//! Time-step latency model for fully parallel SC-based decoders.
//!
//! A length-`N` SC decoder needs `2N - 2` steps and an SCL decoder `2N + K - 2`. Two-step
//! decoding costs `t_avg` step-1 iterations plus, with probability `γ`, one full-length decode.
//! A hard-decision iteration runs rows and columns concurrently (the slower of the two
//! counts); a soft-decision iteration runs them one after the other.

use serde::{Deserialize, Serialize};

use crate::construction::CodeSpec;

/// Steps of a length-`n` SC decoder.
pub fn delta_sc(n: u64) -> u64 {
    2 * n - 2
}

/// Steps of a length-`n`, dimension-`k` SCL decoder.
pub fn delta_scl(n: u64, k: u64) -> u64 {
    2 * n + k - 2
}

/// Lengths and dimensions entering the model. `k` is the dimension of the full code, which
/// equals `k_r * k_c` for plain product codes and is smaller under the hybrid design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyParams {
    pub n_r: u64,
    pub n_c: u64,
    pub k_r: u64,
    pub k_c: u64,
    pub k: u64,
}

impl LatencyParams {
    pub fn product(n_r: u64, k_r: u64, n_c: u64, k_c: u64) -> Self {
        Self { n_r, n_c, k_r, k_c, k: k_r * k_c }
    }

    /// Component dimensions `ceil(R_r N_r)`, `ceil(R_c N_c)` and full dimension
    /// `ceil(R_r R_c N)`.
    pub fn from_rates(n_r: u64, r_r: f64, n_c: u64, r_c: f64) -> Self {
        let ceil = |x: f64| x.ceil() as u64;
        Self {
            n_r,
            n_c,
            k_r: ceil(r_r * n_r as f64),
            k_c: ceil(r_c * n_c as f64),
            k: ceil(r_r * r_c * (n_r * n_c) as f64),
        }
    }

    pub fn with_dimension(self, k: u64) -> Self {
        Self { k, ..self }
    }

    /// Uses the largest row and column dimensions of the code's component profile.
    pub fn from_spec(spec: &CodeSpec) -> Self {
        Self {
            n_r: spec.n_r() as u64,
            n_c: spec.n_c() as u64,
            k_r: spec.max_row_dimension() as u64,
            k_c: spec.max_col_dimension() as u64,
            k: spec.dimension() as u64,
        }
    }

    pub fn length(&self) -> u64 {
        self.n_r * self.n_c
    }
}

/// Decoding scheme being costed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cost {
    ScHd,
    SclHd,
    SclSd,
}

impl Cost {
    pub const ALL: [Cost; 3] = [Cost::ScHd, Cost::SclHd, Cost::SclSd];

    /// Steps of one step-1 iteration.
    pub fn iteration_steps(self, p: &LatencyParams) -> u64 {
        match self {
            Cost::ScHd => delta_sc(p.n_r.max(p.n_c)),
            Cost::SclHd => delta_scl(p.n_r, p.k_r).max(delta_scl(p.n_c, p.k_c)),
            Cost::SclSd => delta_scl(p.n_r, p.k_r) + delta_scl(p.n_c, p.k_c),
        }
    }

    /// Steps of the full-length decoder, also the cost of plain polar decoding.
    pub fn full_steps(self, p: &LatencyParams) -> u64 {
        match self {
            Cost::ScHd => delta_sc(p.length()),
            Cost::SclHd | Cost::SclSd => delta_scl(p.length(), p.k),
        }
    }

    /// Expected steps `t_avg * iteration + γ * full`.
    pub fn expected_steps(self, p: &LatencyParams, t_avg: f64, gamma: f64) -> f64 {
        t_avg * self.iteration_steps(p) as f64 + gamma * self.full_steps(p) as f64
    }

    /// `t` iterations followed by step 2.
    pub fn worst_case(self, p: &LatencyParams, t: u64) -> u64 {
        t * self.iteration_steps(p) + self.full_steps(p)
    }

    /// A single iteration, no step 2.
    pub fn best_case(self, p: &LatencyParams) -> u64 {
        self.iteration_steps(p)
    }

    /// Largest `γ` for which two-step decoding beats a competitor needing `competitor_steps`.
    pub fn gamma_threshold(self, p: &LatencyParams, competitor_steps: u64, t_avg: f64) -> f64 {
        (competitor_steps as f64 - t_avg * self.iteration_steps(p) as f64) / self.full_steps(p) as f64
    }
}

/// Largest `γ` for which SC-HD on an `N_r x N_r` product code is faster than SC decoding of a
/// length-`n_flat` code: `(t_avg (1 - N_r) + n_flat - 1) / (N_r^2 - 1)`.
pub fn gamma_max_sc(n_r: f64, n_flat: f64, t_avg: f64) -> f64 {
    (t_avg * (1.0 - n_r) + n_flat - 1.0) / (n_r * n_r - 1.0)
}

/// Large-length form of [`gamma_max_sc`]: `(n_flat / N_r - t_avg) / N_r`.
pub fn gamma_max_sc_approx(n_r: f64, n_flat: f64, t_avg: f64) -> f64 {
    (n_flat / n_r - t_avg) / n_r
}

/// Approximate threshold for SCL-HD against SCL decoding of a length-`n_flat`, rate-`r_flat`
/// code, with row code rate `r_r`:
/// `(n_flat / N_r (2 + R) - t_avg (2 + R_r)) / (N_r (2 + R_r^2))`.
pub fn gamma_max_scl(n_r: f64, n_flat: f64, t_avg: f64, r_flat: f64, r_r: f64) -> f64 {
    (n_flat / n_r * (2.0 + r_flat) - t_avg * (2.0 + r_r)) / (n_r * (2.0 + r_r * r_r))
}
