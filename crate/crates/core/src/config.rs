//! Plain-text `key = value` experiment description used by the `simulate` command.
//!
//! ```text
//! # 32x32 product code, R_r = R_c = 7/8
//! n_r = 32
//! n_c = 32
//! k_r = 28
//! k_c = 28
//! variant = scl-sd
//! list_size = 8
//! ebn0 = 3.0:0.5:5.0
//! seed = 1
//! max_frames = 10000
//! output = results.csv
//! ```
//!
//! The code is taken from `frozen_file` when present. Otherwise `k_r`/`k_c` (or
//! `row_rate`/`col_rate`) select a product code of Bhattacharyya-designed components,
//! turned into a hybrid design when `k` is also given; `k` alone designs an ordinary polar
//! code of length `n_r * n_c`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::construction::{
    bhattacharyya_order, frozen_from_order, hybrid_frozen_set, CodeSpec, FrozenSet, ReliabilityOrder,
};
use crate::decoders::MetricMode;
use crate::error::{invalid, Error, Result};
use crate::simulator::{ChannelConfig, DecoderConfig, StopRule};
use crate::two_step::{TwoStepConfig, Variant};

#[derive(Clone, Debug, PartialEq)]
pub enum CodeSource {
    /// Product (`k = None`) or hybrid design from component dimensions.
    Product { k_r: usize, k_c: usize, k: Option<usize> },
    /// Ordinary polar code of dimension `k`.
    Flat { k: usize },
    /// Frozen set read from a file.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_r: usize,
    pub n_c: usize,
    pub code: CodeSource,
    /// Initial Bhattacharyya parameter for every designed code.
    pub z0: f64,
    /// Length-`N` reliability order replacing the Bhattacharyya one for hybrid/flat designs.
    pub order_file: Option<PathBuf>,
    pub decoder: DecoderConfig,
    pub eb_n0_db: Vec<f64>,
    pub seed: u64,
    pub stop: StopRule,
    pub output: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "n_r", "n_c", "k_r", "k_c", "row_rate", "col_rate", "k", "frozen_file", "order_file", "z0",
    "variant", "t", "list_size", "saturation", "agreement", "frozen_check", "metric", "blend",
    "ebn0", "seed", "max_frames", "min_frame_errors", "output", "jsonl",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("bad value {value:?} for {key}"),
            }),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::InvalidArgument(format!("missing required key {key}")))
    }
}

fn parse_bool(line: usize, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Parse { line, message: format!("bad boolean {value:?}") }),
    }
}

/// Parses `a,b,c` or `start:step:stop` (inclusive, to within a small tolerance).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let number = |s: &str| -> Result<f64> {
        s.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad number {s:?} in SNR grid")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (number(start)?, number(step)?, number(stop)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return invalid(format!("bad SNR range {spec:?}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(number).collect::<Result<Vec<_>>>()?,
        _ => return invalid(format!("bad SNR grid {spec:?}")),
    };
    if grid.is_empty() {
        return invalid("empty SNR grid");
    }
    Ok(grid)
}

impl ExperimentConfig {
    /// Parses a configuration; relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Parse { line: line_no, message: format!("unknown key {key:?}") });
            }
            if map.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(Error::Parse { line: line_no, message: format!("duplicate key {key:?}") });
            }
        }
        let e = Entries { map };
        let path = |key: &str| e.raw(key).map(|(_, v)| base_dir.join(v));

        let n_r: usize = e.require("n_r")?;
        let n_c: usize = e.require("n_c")?;
        let k: Option<usize> = e.get("k")?;
        let dim = |k_key: &str, rate_key: &str, n: usize| -> Result<Option<usize>> {
            match (e.get::<usize>(k_key)?, e.get::<f64>(rate_key)?) {
                (Some(_), Some(_)) => invalid(format!("give either {k_key} or {rate_key}, not both")),
                (Some(k), None) => Ok(Some(k)),
                (None, Some(r)) if (0.0..=1.0).contains(&r) => Ok(Some((r * n as f64).round() as usize)),
                (None, Some(r)) => invalid(format!("{rate_key}={r} outside [0, 1]")),
                (None, None) => Ok(None),
            }
        };
        let code = if let Some(file) = path("frozen_file") {
            CodeSource::File(file)
        } else {
            match (dim("k_r", "row_rate", n_r)?, dim("k_c", "col_rate", n_c)?) {
                (Some(k_r), Some(k_c)) => CodeSource::Product { k_r, k_c, k },
                (None, None) => CodeSource::Flat {
                    k: k.ok_or_else(|| Error::InvalidArgument("no code dimension given".into()))?,
                },
                _ => return invalid("row and column dimensions must both be given"),
            }
        };

        let variant = e.get::<String>("variant")?.unwrap_or_else(|| "sc-hd".into());
        let mode = match e.get::<String>("metric")?.as_deref() {
            None | Some("approximate") => MetricMode::Approximate,
            Some("exact") => MetricMode::Exact,
            Some(other) => return invalid(format!("unknown metric mode {other:?}")),
        };
        let list_size = e.get("list_size")?.unwrap_or(8);
        let decoder = match variant.as_str() {
            "sc" => DecoderConfig::Sc { mode },
            "scl" => DecoderConfig::Scl { list_size, mode },
            other => {
                let defaults = TwoStepConfig::default();
                let frozen_check = match e.raw("frozen_check") {
                    Some((line, v)) => parse_bool(*line, v)?,
                    None => defaults.frozen_check,
                };
                let cfg = TwoStepConfig {
                    variant: other.parse::<Variant>()?,
                    max_iterations: e.get("t")?.unwrap_or(defaults.max_iterations),
                    list_size,
                    saturation: e.get("saturation")?.unwrap_or(defaults.saturation),
                    agreement: e.get("agreement")?.unwrap_or(defaults.agreement),
                    frozen_check,
                    metric_mode: mode,
                    blend: e.get("blend")?.unwrap_or(defaults.blend),
                };
                cfg.validate()?;
                DecoderConfig::TwoStep(cfg)
            }
        };

        let min_frame_errors = match e.raw("min_frame_errors") {
            None => StopRule::default().min_frame_errors,
            Some((_, v)) if v == "none" || v == "0" => None,
            Some(_) => Some(e.require("min_frame_errors")?),
        };
        let stop = StopRule {
            max_frames: e.get("max_frames")?.unwrap_or(StopRule::default().max_frames),
            min_frame_errors,
        };
        let eb_n0_db = parse_grid(&e.require::<String>("ebn0")?)?;

        Ok(Self {
            n_r,
            n_c,
            code,
            z0: e.get("z0")?.unwrap_or(0.5),
            order_file: path("order_file"),
            decoder,
            eb_n0_db,
            seed: e.get("seed")?.unwrap_or(0),
            stop,
            output: path("output"),
            jsonl: path("jsonl"),
        })
    }

    fn full_order(&self) -> Result<ReliabilityOrder> {
        match &self.order_file {
            Some(p) => ReliabilityOrder::parse(&std::fs::read_to_string(p)?),
            None => bhattacharyya_order(self.n_r * self.n_c, self.z0),
        }
    }

    /// Builds the code described by the configuration.
    pub fn build_code(&self) -> Result<CodeSpec> {
        match &self.code {
            CodeSource::File(p) => {
                let frozen = FrozenSet::parse(&std::fs::read_to_string(p)?)?;
                CodeSpec::flat(frozen, self.n_r, self.n_c)
            }
            CodeSource::Flat { k } => CodeSpec::flat(frozen_from_order(&self.full_order()?, *k)?, self.n_r, self.n_c),
            CodeSource::Product { k_r, k_c, k } => {
                let row = frozen_from_order(&bhattacharyya_order(self.n_r, self.z0)?, *k_r)?;
                let col = frozen_from_order(&bhattacharyya_order(self.n_c, self.z0)?, *k_c)?;
                match k {
                    None => CodeSpec::product(&row, &col),
                    Some(k) => hybrid_frozen_set(&row, &col, *k, &self.full_order()?),
                }
            }
        }
    }

    /// Channel configurations for every grid point, all sharing the configured seed.
    pub fn grid(&self, rate: f64) -> Result<Vec<ChannelConfig>> {
        self.eb_n0_db.iter().map(|&snr| ChannelConfig::new(snr, rate, self.seed)).collect()
    }
}
