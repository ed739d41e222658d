use prodpolar::construction::{bhattacharyya_order, frozen_from_order, place_information};
use prodpolar::decoders::{sc_decode, MetricMode};
use prodpolar::latency::{delta_sc, LatencyParams};
use prodpolar::polar::polar_encode;
use prodpolar::simulator::{
    frame_rng, modulate_and_transmit, run_experiment, run_point, with_workers, write_csv, write_jsonl,
};
use prodpolar::{ChannelConfig, CodeSpec, DecoderConfig, StopRule, TwoStepConfig, Variant};
use rand::Rng;

fn product(n: usize, k: usize) -> CodeSpec {
    let f = frozen_from_order(&bhattacharyya_order(n, 0.5).unwrap(), k).unwrap();
    CodeSpec::product(&f, &f).unwrap()
}

fn grid(rate: f64, points: &[f64], seed: u64) -> Vec<ChannelConfig> {
    points.iter().map(|&e| ChannelConfig::new(e, rate, seed).unwrap()).collect()
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let spec = product(8, 6);
    for variant in [Variant::ScHd, Variant::SclSd] {
        let cfg = DecoderConfig::TwoStep(TwoStepConfig::new(variant));
        let g = grid(spec.rate(), &[1.0, 3.0], 99);
        let stop = StopRule { max_frames: 1500, min_frame_errors: Some(40) };
        let one = with_workers(Some(1), || run_experiment(&spec, &cfg, &g, &stop)).unwrap().unwrap();
        let three = with_workers(Some(3), || run_experiment(&spec, &cfg, &g, &stop)).unwrap().unwrap();
        assert_eq!(one, three);
        // a different seed gives a different sample
        let other = run_experiment(&spec, &cfg, &grid(spec.rate(), &[1.0, 3.0], 100), &stop).unwrap();
        assert_ne!(one, other);
    }
}

#[test]
fn early_stop_fires_on_batch_boundaries() {
    let spec = product(8, 6);
    let cfg = DecoderConfig::TwoStep(TwoStepConfig::new(Variant::ScHd));
    let ch = ChannelConfig::new(-2.0, spec.rate(), 5).unwrap();
    let s = run_point(&spec, &cfg, &ch, &StopRule { max_frames: 100_000, min_frame_errors: Some(10) }).unwrap();
    assert_eq!(s.frames, 256);
    assert!(s.frame_errors >= 10);
}

/// Recomputes a plain SC run frame by frame with the public building blocks.
#[test]
fn counters_match_a_frame_by_frame_replay() {
    let spec = product(8, 5);
    let ch = ChannelConfig::new(2.0, spec.rate(), 7).unwrap();
    let frames = 300;
    let stats = run_point(&spec, &DecoderConfig::Sc { mode: MetricMode::Approximate }, &ch, &StopRule::frames(frames)).unwrap();
    let (mut bit_errors, mut frame_errors) = (0, 0);
    for frame in 0..frames {
        let mut rng = frame_rng(7, frame);
        let info: Vec<u8> = (0..spec.dimension()).map(|_| u8::from(rng.random::<bool>())).collect();
        let u = place_information(spec.frozen(), &info).unwrap();
        let x = polar_encode(&u).unwrap();
        let llrs = modulate_and_transmit(&x, &ch, &mut rng);
        let out = sc_decode(&llrs, spec.frozen(), MetricMode::Approximate).unwrap();
        let errs = spec.frozen().information_positions().iter().filter(|&&p| out.u_hat[p] != u[p]).count() as u64;
        bit_errors += errs;
        frame_errors += u64::from(errs > 0);
    }
    assert_eq!((stats.bit_errors, stats.frame_errors), (bit_errors, frame_errors));
    assert_eq!(stats.time_step_sum, frames * delta_sc(64));
    assert_eq!(stats.t_avg(), 0.0);
}

#[test]
fn time_steps_stay_within_the_latency_bounds() {
    let spec = product(16, 12);
    let p = LatencyParams::from_spec(&spec);
    for variant in [Variant::ScHd, Variant::SclHd, Variant::SclSd] {
        let mut tc = TwoStepConfig::new(variant);
        tc.list_size = 4;
        let cost = tc.cost();
        let stats = run_experiment(
            &spec,
            &DecoderConfig::TwoStep(tc),
            &grid(spec.rate(), &[1.0, 2.5, 4.0], 3),
            &StopRule::frames(512),
        )
        .unwrap();
        for s in &stats {
            let avg = s.avg_time_steps();
            assert!(avg >= cost.best_case(&p) as f64 && avg <= cost.worst_case(&p, 4) as f64);
            let model = cost.expected_steps(&p, s.t_avg(), s.gamma());
            assert!((avg - model).abs() < 1e-9 * avg, "{avg} vs {model}");
            assert!(s.t_avg() >= 1.0 && s.t_avg() <= 4.0);
        }
    }
}

#[test]
fn golden_csv() {
    let spec = product(8, 6);
    let stats = run_experiment(
        &spec,
        &DecoderConfig::TwoStep(TwoStepConfig::new(Variant::ScHd)),
        &grid(spec.rate(), &[2.0, 4.0], 2024),
        &StopRule::frames(1000),
    )
    .unwrap();
    let mut csv = Vec::new();
    write_csv(&stats, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text, GOLDEN_CSV);

    let mut jsonl = Vec::new();
    write_jsonl(&stats, &mut jsonl).unwrap();
    let rows: Vec<serde_json::Value> = String::from_utf8(jsonl)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["frames"], 1000);
}

const GOLDEN_CSV: &str = "\
eb_n0_db,frames,ber,fer,gamma,t_avg,avg_time_steps
2,1000,0.15602777777777777,0.584,0.502,3.132,107.1
4,1000,0.03338888888888889,0.144,0.218,2.153,57.61
";
