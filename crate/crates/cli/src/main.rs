use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prodpolar::config::ExperimentConfig;
use prodpolar::construction::{
    bhattacharyya_order, frozen_from_order, hybrid_frozen_set, product_frozen_set, CodeSpec, FrozenSet,
    ReliabilityOrder,
};
use prodpolar::decoders::{MetricMode, ScDecoder, SclDecoder};
use prodpolar::latency::{delta_sc, delta_scl, gamma_max_sc, gamma_max_scl, Cost, LatencyParams};
use prodpolar::simulator::{run_experiment, with_workers, workers_from_env, write_csv, write_jsonl, OutputFormat};
use prodpolar::two_step::{TwoStepConfig, TwoStepDecoder, Variant};
use prodpolar::LlrMatrix;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "prodpolar", version, about = "Product-polar code construction, decoding and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a frozen set (or reliability order) and print it in the frozen-set file format.
    Construct(ConstructArgs),
    /// Decode one LLR vector.
    Decode(DecodeArgs),
    /// Evaluate the time-step latency model.
    Latency(LatencyArgs),
    /// Run a Monte-Carlo experiment described by a key=value file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Length of an ordinary polar code (with --k).
    #[arg(long, conflicts_with_all = ["nr", "nc"])]
    n: Option<usize>,
    /// Dimension of the full code: ordinary design with --n, hybrid target with --nr/--nc.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, requires_all = ["nc", "kr", "kc"])]
    nr: Option<usize>,
    #[arg(long)]
    nc: Option<usize>,
    #[arg(long)]
    kr: Option<usize>,
    #[arg(long)]
    kc: Option<usize>,
    /// Initial Bhattacharyya parameter.
    #[arg(long, default_value_t = 0.5)]
    z0: f64,
    /// Length-N reliability order file used instead of the Bhattacharyya order.
    #[arg(long)]
    order_file: Option<PathBuf>,
    /// Print the length-N reliability order instead of a frozen set.
    #[arg(long)]
    emit_order: bool,
    /// Output file (standard output when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Exact,
    Approximate,
}

impl From<MetricArg> for MetricMode {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Exact => MetricMode::Exact,
            MetricArg::Approximate => MetricMode::Approximate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    ScHd,
    SclHd,
    SclSd,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::ScHd => Variant::ScHd,
            VariantArg::SclHd => Variant::SclHd,
            VariantArg::SclSd => Variant::SclSd,
        }
    }
}

#[derive(Args)]
struct DecodeArgs {
    /// Frozen-set file.
    #[arg(long)]
    frozen: PathBuf,
    /// Whitespace-separated LLRs (standard input when absent).
    #[arg(long)]
    llr: Option<PathBuf>,
    /// List size; 1 selects plain SC decoding.
    #[arg(long, default_value_t = 1)]
    list_size: usize,
    /// Print every list candidate, best first.
    #[arg(long)]
    all_candidates: bool,
    #[arg(long, value_enum, default_value_t = MetricArg::Approximate)]
    metric: MetricArg,
    /// Use the two-step product decoder.
    #[arg(long)]
    two_step: bool,
    #[arg(long, value_enum, default_value_t = VariantArg::ScHd)]
    variant: VariantArg,
    /// Maximum step-1 iterations.
    #[arg(long, default_value_t = 4)]
    t: usize,
    #[arg(long, default_value_t = prodpolar::two_step::DEFAULT_SATURATION)]
    saturation: f64,
    #[arg(long, default_value_t = prodpolar::two_step::DEFAULT_SATURATION)]
    agreement: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    frozen_check: bool,
    /// Row component length.
    #[arg(long)]
    nr: Option<usize>,
    /// Column component length.
    #[arg(long)]
    nc: Option<usize>,
}

#[derive(Args)]
struct LatencyArgs {
    /// Maximum step-1 iterations used for the worst case.
    #[arg(long, default_value_t = 4)]
    t: u64,
    /// Row component length; prints a single row instead of the default table.
    #[arg(long, requires = "kr")]
    nr: Option<u64>,
    /// Column component length (defaults to --nr).
    #[arg(long)]
    nc: Option<u64>,
    #[arg(long)]
    kr: Option<u64>,
    /// Column component dimension (defaults to --kr).
    #[arg(long)]
    kc: Option<u64>,
    /// Full-code dimension (defaults to kr * kc).
    #[arg(long)]
    k: Option<u64>,
    /// Also print the expected steps for these t_avg and gamma.
    #[arg(long, requires = "gamma")]
    t_avg: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Length of a competing ordinary polar code for the gamma thresholds.
    #[arg(long)]
    compare_n: Option<u64>,
    /// Rate of the competing code (defaults to the product rate).
    #[arg(long)]
    compare_rate: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment configuration file.
    config: PathBuf,
    /// Worker threads; overrides the PRODPOLAR_WORKERS environment variable.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Construct(a) => construct(a),
        Command::Decode(a) => decode(a),
        Command::Latency(a) => latency(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).map_err(Into::into),
    }
}

fn load_order(path: Option<&Path>, n: usize, z0: f64) -> Result<ReliabilityOrder> {
    let order = match path {
        Some(p) => ReliabilityOrder::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => bhattacharyya_order(n, z0)?,
    };
    if order.len() != n {
        bail!("reliability order has length {}, expected {n}", order.len());
    }
    Ok(order)
}

fn construct(a: ConstructArgs) -> Result<()> {
    let text = match (a.n, a.nr, a.nc, a.kr, a.kc) {
        (Some(n), None, None, _, _) => {
            let order = load_order(a.order_file.as_deref(), n, a.z0)?;
            if a.emit_order {
                order.to_text()
            } else {
                let k = a.k.context("--k is required with --n")?;
                frozen_from_order(&order, k)?.to_text()
            }
        }
        (None, Some(nr), Some(nc), Some(kr), Some(kc)) => {
            let row = frozen_from_order(&bhattacharyya_order(nr, a.z0)?, kr)?;
            let col = frozen_from_order(&bhattacharyya_order(nc, a.z0)?, kc)?;
            let order = || load_order(a.order_file.as_deref(), nr * nc, a.z0);
            if a.emit_order {
                order()?.to_text()
            } else {
                match a.k {
                    None => product_frozen_set(&row, &col).to_text(),
                    Some(k) => hybrid_frozen_set(&row, &col, k, &order()?)?.frozen().to_text(),
                }
            }
        }
        _ => bail!("give either --n/--k or --nr/--nc/--kr/--kc [--k]"),
    };
    write_output(a.output.as_deref(), &text)
}

fn read_llrs(path: Option<&Path>) -> Result<Vec<f64>> {
    let mut text = String::new();
    match path {
        Some(p) => text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    text.split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("bad LLR value {t:?}")))
        .collect()
}

#[derive(Serialize)]
struct CandidateLine<'a> {
    rank: usize,
    u_hat: &'a [u8],
    x_hat: &'a [u8],
    metric: f64,
}

fn decode(a: DecodeArgs) -> Result<()> {
    let frozen = FrozenSet::parse(&fs::read_to_string(&a.frozen).with_context(|| format!("reading {}", a.frozen.display()))?)?;
    let llrs = read_llrs(a.llr.as_deref())?;
    let mode = MetricMode::from(a.metric);
    let mut out = io::stdout().lock();

    if a.two_step {
        let n = frozen.code_length();
        let (nr, nc) = match (a.nr, a.nc) {
            (Some(r), Some(c)) => (r, c),
            (Some(r), None) => (r, n / r),
            (None, Some(c)) => (n / c, c),
            (None, None) => {
                let r = 1usize << (n.trailing_zeros() / 2);
                (n / r, r)
            }
        };
        let spec = CodeSpec::flat(frozen, nr, nc)?;
        let cfg = TwoStepConfig {
            variant: a.variant.into(),
            max_iterations: a.t,
            list_size: a.list_size.max(1),
            saturation: a.saturation,
            agreement: a.agreement,
            frozen_check: a.frozen_check,
            metric_mode: mode,
            blend: 0.0,
        };
        let y = LlrMatrix::from_vec(nc, nr, llrs)?;
        let outcome = TwoStepDecoder::new(&spec, cfg)?.decode(&y)?;
        serde_json::to_writer(&mut out, &outcome)?;
        writeln!(out)?;
        return Ok(());
    }

    let candidates = if a.list_size <= 1 {
        vec![ScDecoder::new(mode).decode(&llrs, &frozen)?]
    } else {
        SclDecoder::new(a.list_size, mode)?.decode(&llrs, &frozen)?
    };
    let shown = if a.all_candidates { candidates.len() } else { 1 };
    for (rank, c) in candidates.iter().take(shown).enumerate() {
        let line = CandidateLine { rank, u_hat: &c.u_hat, x_hat: &c.x_hat, metric: c.metric };
        serde_json::to_writer(&mut out, &line)?;
        writeln!(out)?;
    }
    Ok(())
}

fn latency_row(out: &mut impl Write, p: &LatencyParams, t: u64) -> io::Result<()> {
    let n = p.length();
    writeln!(
        out,
        "{:>7} {:>7} | {:>7} {:>7} {:>5} | {:>7} {:>7} {:>5} {:>7} {:>5}",
        n,
        p.k,
        delta_sc(n),
        Cost::ScHd.worst_case(p, t),
        Cost::ScHd.best_case(p),
        delta_scl(n, p.k),
        Cost::SclHd.worst_case(p, t),
        Cost::SclHd.best_case(p),
        Cost::SclSd.worst_case(p, t),
        Cost::SclSd.best_case(p),
    )
}

fn latency(a: LatencyArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{:>7} {:>7} | {:>7} {:>7} {:>5} | {:>7} {:>7} {:>5} {:>7} {:>5}",
        "N", "K", "SC", "HD-WC", "HD-BC", "SCL", "HD-WC", "HD-BC", "SD-WC", "SD-BC")?;
    let Some(nr) = a.nr else {
        for rate in [7.0 / 8.0, 0.9] {
            for nr in [32u64, 64, 128, 256, 512] {
                latency_row(&mut out, &LatencyParams::from_rates(nr, rate, nr, rate), a.t)?;
            }
        }
        return Ok(());
    };
    let kr = a.kr.context("--kr is required with --nr")?;
    let mut p = LatencyParams::product(nr, kr, a.nc.unwrap_or(nr), a.kc.unwrap_or(kr));
    if let Some(k) = a.k {
        p = p.with_dimension(k);
    }
    latency_row(&mut out, &p, a.t)?;
    if let (Some(t_avg), Some(gamma)) = (a.t_avg, a.gamma) {
        for cost in Cost::ALL {
            writeln!(out, "expected {cost:?}: {}", cost.expected_steps(&p, t_avg, gamma))?;
        }
    }
    if let Some(n_flat) = a.compare_n {
        let t_avg = a.t_avg.unwrap_or(1.0);
        let rate = p.k as f64 / p.length() as f64;
        let r_flat = a.compare_rate.unwrap_or(rate);
        let k_flat = (r_flat * n_flat as f64).round() as u64;
        let r_r = p.k_r as f64 / p.n_r as f64;
        writeln!(out, "gamma_max_sc  (exact)   : {}", gamma_max_sc(nr as f64, n_flat as f64, t_avg))?;
        writeln!(out, "gamma_max_scl (approx.) : {}", gamma_max_scl(nr as f64, n_flat as f64, t_avg, r_flat, r_r))?;
        writeln!(out, "gamma_max_scl (exact)   : {}", Cost::SclHd.gamma_threshold(&p, delta_scl(n_flat, k_flat), t_avg))?;
        writeln!(out, "gamma_max_sd  (exact)   : {}", Cost::SclSd.gamma_threshold(&p, delta_scl(n_flat, k_flat), t_avg))?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let cfg = ExperimentConfig::parse(&text, base)?;
    let spec = cfg.build_code()?;
    let grid = cfg.grid(spec.rate())?;
    eprintln!(
        "code N={} K={} ({}x{}), {} grid points",
        spec.length(),
        spec.dimension(),
        spec.n_c(),
        spec.n_r(),
        grid.len()
    );
    let workers = a.workers.or_else(workers_from_env);
    let stats = with_workers(workers, || run_experiment(&spec, &cfg.decoder, &grid, &cfg.stop))??;
    match &cfg.output {
        Some(p) => prodpolar::simulator::emit_results(&stats, p, OutputFormat::Csv)?,
        None => write_csv(&stats, io::stdout().lock())?,
    }
    if let Some(p) = &cfg.jsonl {
        prodpolar::simulator::emit_results(&stats, p, OutputFormat::JsonLines)?;
    } else if cfg.output.is_some() {
        write_jsonl(&stats, io::stdout().lock())?;
    }
    Ok(())
}
