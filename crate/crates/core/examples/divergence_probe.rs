//! Growth of the truncated mean send count with the horizon: the delayed-ack
//! protocol with `ack_base * gamma = 1.5` keeps growing, the heartbeat
//! protocol levels off.
//!
//!     cargo run --release --example divergence_probe

use relcost::analysis::divergence_probe;
use relcost::{ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.75,
        tau: 3,
        delta: 2,
        sigma: 0.0,
    };
    let horizons: Vec<u64> = (10..=14).map(|k| 1 << k).collect();
    for spec in [ProtocolSpec::pathological(2.0), ProtocolSpec::srhb()] {
        let r = divergence_probe(&spec, &params, &horizons, 1_000, 5, 0, 1.3).expect("probe");
        println!("{}:", spec.kind);
        for row in &r.rows {
            let ratio = row.ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
            println!(
                "  horizon {:>6}  mean sends {:>9.2} +- {:>6.2}  ratio {ratio}",
                row.horizon, row.mean, row.stderr
            );
        }
        println!("  verdict: {}", r.verdict);
    }
}
