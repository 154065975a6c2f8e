//! Choosing the heartbeat period. With correct processes the prediction is
//! exact enough to optimize directly; with faulty ones the crash-regime
//! constant is estimated first.
//!
//!     cargo run --release --example optimize_delta

use relcost::analysis::{estimate_lambda, optimize_delta, Estimator};
use relcost::{CostParams, SystemParams};

fn main() {
    let costs = CostParams::default();
    let deltas: Vec<u64> = (1..=50).collect();

    let correct = SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.0,
        tau: 2,
        delta: 2,
        sigma: 0.01,
    };
    let r = optimize_delta(&correct, &costs, None, &deltas).expect("optimize");
    println!(
        "correct processes: delta* = {} (predicted cost {:.3})",
        r.delta_star, r.cost_star
    );

    let faulty = SystemParams {
        alpha_p: 0.0,
        alpha_q: 0.0,
        beta_p: 1e-3,
        beta_q: 1e-3,
        ..correct
    };
    let mut est = Estimator::new(500, 1_000_000, 11);
    est.n_runs = 500;
    let lambda = estimate_lambda(
        &SystemParams {
            sigma: 0.05,
            ..faulty
        },
        &costs,
        &est,
    )
    .expect("lambda");
    println!(
        "lambda estimate {:.3} (95% CI [{:.3}, {:.3}], {:.1} invocations per run)",
        lambda.lambda_hat,
        lambda.ci95[0],
        lambda.ci95[1],
        lambda.c_avg.mean_invocations.unwrap_or(0.0)
    );
    let r = optimize_delta(&faulty, &costs, Some(lambda.clamped), &deltas).expect("optimize");
    println!(
        "faulty processes: delta* = {} (predicted cost {:.3})",
        r.delta_star, r.cost_star
    );

    let cheap_wait = CostParams {
        c_send: 50.0,
        c_wait: 1.0,
        n_exp: 2.0,
    };
    let pricey_wait = CostParams {
        c_send: 1.0,
        c_wait: 50.0,
        n_exp: 2.0,
    };
    for (name, c) in [
        ("expensive sends", cheap_wait),
        ("expensive waiting", pricey_wait),
    ] {
        let r = optimize_delta(&correct, &c, None, &deltas).expect("optimize");
        println!("{name}: delta* = {}", r.delta_star);
    }
}
