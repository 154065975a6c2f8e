//! Conditional probability that the receiver has finished after `t` ticks,
//! given both processes are still up, next to `1 - gamma^(t - tau)`.
//!
//!     cargo run --release --example completion_curve

use relcost::analysis::completion_curve;
use relcost::{ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.2,
        tau: 3,
        delta: 1,
        sigma: 0.0,
    };
    let grid: Vec<u64> = (0..=14).collect();
    let curve = completion_curve(&ProtocolSpec::sender_driven(), &params, &grid, 20_000, 3, 0)
        .expect("curve");
    println!("{:>3} {:>9} {:>9} {:>9}", "t", "p", "stderr", "1-g^(t-tau)");
    for pt in curve {
        let expected = if pt.t > params.tau {
            1.0 - params.gamma.powi((pt.t - params.tau) as i32)
        } else {
            0.0
        };
        println!(
            "{:>3} {:>9.5} {:>9.5} {:>9.5}",
            pt.t,
            pt.p.unwrap_or(f64::NAN),
            pt.stderr.unwrap_or(f64::NAN),
            expected
        );
    }
}
