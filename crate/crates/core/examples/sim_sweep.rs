//! Runs the synthetic benchmark over several seeds and prints one line per run.
//!
//! `cargo run --release -p fastscreen-core --example sim_sweep -- [signal] [seeds]`

use std::time::Instant;

use fastscreen_core::sim::{generate_synthetic, simulate_with_truth, SyntheticParams};
use fastscreen_core::SessionConfig;

fn main() -> fastscreen_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let signal: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.6);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let synth = generate_synthetic(&SyntheticParams {
        signal,
        ..SyntheticParams::default()
    })?;
    for seed in 1..=seeds {
        let started = Instant::now();
        let config = SessionConfig {
            rng_seed: seed,
            ..SessionConfig::default()
        };
        let r = simulate_with_truth(synth.corpus.clone(), &synth.truth, &config, 0.0)?;
        println!(
            "seed {seed:>2}: screened {:>5} cost {:.3} true {:.3} est {:.3} ({:?}) in {:.1?}",
            r.stop_screened,
            r.cost,
            r.true_recall,
            r.estimated_recall.unwrap_or(f64::NAN),
            r.stop_reason,
            started.elapsed()
        );
    }
    Ok(())
}
