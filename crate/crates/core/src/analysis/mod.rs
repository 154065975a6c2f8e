//! Closed-form predictions, Monte Carlo estimators and the probes built on
//! top of the simulator.
//!
//! Every estimator derives its per-run seeds from one base seed and collects
//! per-run values in run order before folding them, so the thread count never
//! changes a result.

mod closed_form;
mod estimate;
mod heartbeat;
mod probes;
mod stats;

pub use closed_form::{
    avg_cost_prediction, ceil_div, crash_regime_coefficient, hb_term, heartbeat_prediction,
    no_detector_predictions, z_cost, NoDetectorPredictions, Prediction,
};
pub use estimate::{EstimateReport, Estimator, Metric, Verdict};
pub use heartbeat::{estimate_lambda, optimize_delta, LambdaReport, OptimizeReport};
pub use probes::{
    c1_growth, completion_curve, divergence_probe, impossibility_probe, CompletionPoint,
    GrowthReport, GrowthRow, GrowthVerdict, ImpossibilityReport, ScenarioReport,
};
pub use stats::Moments;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Per-run seeds for `n` runs derived from `base`.
pub fn run_seeds(base: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Applies `f` to every seed, in order. `jobs == 1` runs inline, `0` uses the
/// global pool, anything else a dedicated pool of that size.
pub(crate) fn map_runs<T, F>(seeds: &[u64], jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match jobs {
        1 => seeds.iter().map(|&s| f(s)).collect(),
        0 => seeds.par_iter().map(|&s| f(s)).collect(),
        n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()),
            Err(_) => seeds.par_iter().map(|&s| f(s)).collect(),
        },
    }
}
