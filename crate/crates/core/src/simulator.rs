//! Monte-Carlo simulation over a BPSK / AWGN channel.
//!
//! Every frame draws its information bits and noise from a ChaCha stream keyed by
//! `(seed, frame index)`, and frames run in fixed-size batches whose counters are merged by
//! integer addition. Results therefore depend on the seed and configuration only, never on
//! the number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{place_information, CodeSpec};
use crate::decoders::{MetricMode, ScDecoder, SclDecoder};
use crate::error::{invalid, Result};
use crate::latency::{delta_sc, delta_scl};
use crate::polar::{polar_transform_in_place, LlrMatrix};
use crate::two_step::{TwoStepConfig, TwoStepDecoder};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "PRODPOLAR_WORKERS";

/// Frames simulated between two checks of the stopping rule.
pub const BATCH_FRAMES: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// SNR per information bit, dB.
    pub eb_n0_db: f64,
    pub rate: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(eb_n0_db: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return invalid(format!("code rate {rate} outside (0, 1]"));
        }
        if !eb_n0_db.is_finite() {
            return invalid("Eb/N0 must be finite");
        }
        Ok(Self { eb_n0_db, rate, seed })
    }

    /// `σ² = 1 / (2 R 10^{Eb/N0 / 10})`.
    pub fn noise_variance(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.eb_n0_db / 10.0))
    }
}

/// Maps 0 to +1 and 1 to -1, adds Gaussian noise and returns the channel LLRs `2y / σ²`.
pub fn modulate_and_transmit<R: Rng + ?Sized>(x: &[u8], ch: &ChannelConfig, rng: &mut R) -> Vec<f64> {
    let variance = ch.noise_variance();
    let sigma = variance.sqrt();
    x.iter()
        .map(|&bit| {
            let symbol = if bit == 0 { 1.0 } else { -1.0 };
            let noise: f64 = rng.sample(StandardNormal);
            2.0 * (symbol + sigma * noise) / variance
        })
        .collect()
}

/// RNG of frame `frame` under `seed`.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Decoder driven by the simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecoderConfig {
    TwoStep(TwoStepConfig),
    /// Plain SC decoding of the full code.
    Sc { mode: MetricMode },
    /// Plain SCL decoding of the full code.
    Scl { list_size: usize, mode: MetricMode },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_frames: u64,
    /// Stop early once this many frame errors were seen.
    pub min_frame_errors: Option<u64>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_frames: 1_000_000, min_frame_errors: Some(100) }
    }
}

impl StopRule {
    pub fn frames(max_frames: u64) -> Self {
        Self { max_frames, min_frame_errors: None }
    }

    fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return invalid("max_frames must be positive");
        }
        if self.min_frame_errors == Some(0) {
            return invalid("min_frame_errors must be positive when set");
        }
        Ok(())
    }
}

/// Counters aggregated over the frames of one grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub eb_n0_db: f64,
    pub frames: u64,
    /// Information bits per frame.
    pub info_bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub step2_count: u64,
    pub iteration_sum: u64,
    pub time_step_sum: u64,
}

impl TrialStats {
    fn merge(mut self, other: &TrialStats) -> TrialStats {
        self.frames += other.frames;
        self.bit_errors += other.bit_errors;
        self.frame_errors += other.frame_errors;
        self.step2_count += other.step2_count;
        self.iteration_sum += other.iteration_sum;
        self.time_step_sum += other.time_step_sum;
        self
    }

    fn ratio(num: u64, den: u64) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn ber(&self) -> f64 {
        Self::ratio(self.bit_errors, self.frames * self.info_bits)
    }

    pub fn fer(&self) -> f64 {
        Self::ratio(self.frame_errors, self.frames)
    }

    /// Fraction of frames that needed step 2.
    pub fn gamma(&self) -> f64 {
        Self::ratio(self.step2_count, self.frames)
    }

    /// Mean step-1 iterations; zero for plain decoders.
    pub fn t_avg(&self) -> f64 {
        Self::ratio(self.iteration_sum, self.frames)
    }

    pub fn avg_time_steps(&self) -> f64 {
        Self::ratio(self.time_step_sum, self.frames)
    }
}

enum FrameDecoder<'a> {
    TwoStep(TwoStepDecoder<'a>),
    Sc(ScDecoder, Vec<bool>),
    Scl(SclDecoder, Vec<bool>),
}

struct FrameResult {
    u_hat: Vec<u8>,
    iterations: u64,
    step2: bool,
    time_steps: u64,
}

impl<'a> FrameDecoder<'a> {
    fn new(spec: &'a CodeSpec, cfg: &DecoderConfig) -> Result<Self> {
        Ok(match cfg {
            DecoderConfig::TwoStep(c) => FrameDecoder::TwoStep(TwoStepDecoder::new(spec, c.clone())?),
            DecoderConfig::Sc { mode } => FrameDecoder::Sc(ScDecoder::new(*mode), spec.frozen().mask()),
            DecoderConfig::Scl { list_size, mode } => {
                FrameDecoder::Scl(SclDecoder::new(*list_size, *mode)?, spec.frozen().mask())
            }
        })
    }

    fn decode(&mut self, spec: &CodeSpec, llrs: Vec<f64>) -> Result<FrameResult> {
        let n = spec.length() as u64;
        match self {
            FrameDecoder::TwoStep(dec) => {
                let y = LlrMatrix::from_vec(spec.n_c(), spec.n_r(), llrs)?;
                let out = dec.decode(&y)?;
                Ok(FrameResult {
                    u_hat: out.u_hat.into_inner(),
                    iterations: out.iterations_used as u64,
                    step2: out.step2_used,
                    time_steps: out.time_steps,
                })
            }
            FrameDecoder::Sc(dec, mask) => Ok(FrameResult {
                u_hat: dec.decode_masked(&llrs, mask)?.u_hat.into_inner(),
                iterations: 0,
                step2: false,
                time_steps: delta_sc(n),
            }),
            FrameDecoder::Scl(dec, mask) => Ok(FrameResult {
                u_hat: dec.decode_masked(&llrs, mask)?.swap_remove(0).u_hat.into_inner(),
                iterations: 0,
                step2: false,
                time_steps: delta_scl(n, spec.dimension() as u64),
            }),
        }
    }
}

fn simulate_frame(
    spec: &CodeSpec,
    info_positions: &[usize],
    ch: &ChannelConfig,
    frame: u64,
    decoder: &mut FrameDecoder<'_>,
) -> Result<TrialStats> {
    let mut rng = frame_rng(ch.seed, frame);
    let info: Vec<u8> = (0..info_positions.len()).map(|_| u8::from(rng.random::<bool>())).collect();
    let mut x = place_information(spec.frozen(), &info)?;
    polar_transform_in_place(&mut x);
    let llrs = modulate_and_transmit(&x, ch, &mut rng);
    let out = decoder.decode(spec, llrs)?;
    let bit_errors = info_positions
        .iter()
        .zip(&info)
        .filter(|(&p, &b)| out.u_hat[p] != b)
        .count() as u64;
    Ok(TrialStats {
        eb_n0_db: ch.eb_n0_db,
        frames: 1,
        info_bits: info_positions.len() as u64,
        bit_errors,
        frame_errors: u64::from(bit_errors > 0),
        step2_count: u64::from(out.step2),
        iteration_sum: out.iterations,
        time_step_sum: out.time_steps,
    })
}

/// Simulates one grid point until the stopping rule fires.
pub fn run_point(spec: &CodeSpec, cfg: &DecoderConfig, ch: &ChannelConfig, stop: &StopRule) -> Result<TrialStats> {
    stop.validate()?;
    FrameDecoder::new(spec, cfg)?;
    let info_positions = spec.frozen().information_positions();
    let mut total = TrialStats {
        eb_n0_db: ch.eb_n0_db,
        info_bits: info_positions.len() as u64,
        ..TrialStats::default()
    };
    while total.frames < stop.max_frames
        && stop.min_frame_errors.is_none_or(|m| total.frame_errors < m)
    {
        let start = total.frames;
        let end = (start + BATCH_FRAMES).min(stop.max_frames);
        let batch = (start..end)
            .into_par_iter()
            .map_init(
                || FrameDecoder::new(spec, cfg).expect("validated decoder config"),
                |dec, frame| simulate_frame(spec, &info_positions, ch, frame, dec),
            )
            .try_reduce(TrialStats::default, |a, b| Ok(a.merge(&b)))?;
        total = total.merge(&batch);
    }
    Ok(total)
}

/// Runs every grid point in order.
pub fn run_experiment(
    spec: &CodeSpec,
    cfg: &DecoderConfig,
    grid: &[ChannelConfig],
    stop: &StopRule,
) -> Result<Vec<TrialStats>> {
    stop.validate()?;
    if grid.is_empty() {
        return invalid("empty SNR grid");
    }
    grid.iter().map(|ch| run_point(spec, cfg, ch, stop)).collect()
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` inside a dedicated pool of `workers` threads (rayon's default pool when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub const CSV_HEADER: &str = "eb_n0_db,frames,ber,fer,gamma,t_avg,avg_time_steps";

#[derive(Serialize)]
struct ResultRow {
    eb_n0_db: f64,
    frames: u64,
    ber: f64,
    fer: f64,
    gamma: f64,
    t_avg: f64,
    avg_time_steps: f64,
    bit_errors: u64,
    frame_errors: u64,
}

impl From<&TrialStats> for ResultRow {
    fn from(s: &TrialStats) -> Self {
        Self {
            eb_n0_db: s.eb_n0_db,
            frames: s.frames,
            ber: s.ber(),
            fer: s.fer(),
            gamma: s.gamma(),
            t_avg: s.t_avg(),
            avg_time_steps: s.avg_time_steps(),
            bit_errors: s.bit_errors,
            frame_errors: s.frame_errors,
        }
    }
}

/// Writes the CSV table. Floats use Rust's shortest round-trip formatting.
pub fn write_csv<W: Write>(stats: &[TrialStats], mut out: W) -> Result<()> {
    if stats.is_empty() {
        return invalid("no results to write");
    }
    writeln!(out, "{CSV_HEADER}")?;
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.eb_n0_db,
            s.frames,
            s.ber(),
            s.fer(),
            s.gamma(),
            s.t_avg(),
            s.avg_time_steps()
        )?;
    }
    Ok(())
}

/// Writes one JSON object per grid point.
pub fn write_jsonl<W: Write>(stats: &[TrialStats], mut out: W) -> Result<()> {
    if stats.is_empty() {
        return invalid("no results to write");
    }
    for s in stats {
        serde_json::to_writer(&mut out, &ResultRow::from(s)).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

/// Writes `stats` to `path` in the requested format.
pub fn emit_results(stats: &[TrialStats], path: &std::path::Path, format: OutputFormat) -> Result<()> {
    if stats.is_empty() {
        return invalid("no results to write");
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(stats, file),
        OutputFormat::JsonLines => write_jsonl(stats, file),
    }
}
