//! The exponential waiting cost of the trivial protocol between two correct
//! processes: capped at the horizon, its mean grows without bound.
//!
//!     cargo run --example c1_growth

use relcost::analysis::c1_growth;
use relcost::{CostParams, ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.1,
        tau: 3,
        delta: 2,
        sigma: 0.0,
    };
    let costs = CostParams {
        c_send: 1.0,
        c_wait: 1.0,
        n_exp: 1.5,
    };
    let horizons: Vec<u64> = (6..=10).map(|k| 1 << k).collect();
    let r = c1_growth(
        &ProtocolSpec::trivial(),
        &params,
        &costs,
        &horizons,
        100,
        1,
        0,
        1.3,
    )
    .expect("probe");
    for row in &r.rows {
        println!("horizon {:>5}  mean c1 {:.4e}", row.horizon, row.mean);
    }
    println!("verdict: {}", r.verdict);
}
