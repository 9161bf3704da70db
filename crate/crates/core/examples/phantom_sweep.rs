//! Segments randomised phantoms and prints per-scan boundary errors.
//!
//! cargo run --release -p choroidseg-core --example phantom_sweep -- [count] [gamma]

use choroidseg_core::phantom::{mean_abs_error, PhantomSpec};
use choroidseg_core::{segment, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);
    let gamma: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(0.2);
    let cfg = PipelineConfig {
        gamma,
        ..PipelineConfig::default()
    };
    let (mut rpe_total, mut choroid_total) = (0.0, 0.0);
    for seed in 0..count {
        let phantom = PhantomSpec::randomized(seed).generate()?;
        let result = segment(&phantom.image, &cfg)?;
        let rpe = mean_abs_error(&result.rpe, &phantom.rpe_truth);
        let choroid = mean_abs_error(&result.choroid, &phantom.choroid_truth);
        rpe_total += rpe;
        choroid_total += choroid;
        println!(
            "seed {seed:>3}: rpe {rpe:6.2} px  choroid {choroid:6.2} px  {:7.1} ms  flags {:?}",
            result.timings.total_ms, result.flags
        );
    }
    println!(
        "mean: rpe {:.3} px  choroid {:.3} px",
        rpe_total / count as f64,
        choroid_total / count as f64
    );
    Ok(())
}
