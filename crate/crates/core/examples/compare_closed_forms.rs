//! Monte Carlo means of waiting time and send count next to the first-order
//! predictions, for all four delivery protocols with faulty processes.
//!
//!     cargo run --release --example compare_closed_forms

use relcost::analysis::{Estimator, Metric};
use relcost::{CostParams, ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 0.0,
        alpha_q: 0.0,
        beta_p: 1e-3,
        beta_q: 1e-3,
        gamma: 1e-3,
        tau: 5,
        delta: 3,
        sigma: 0.0,
    };
    let costs = CostParams::default();
    let est = Estimator::new(20_000, 1_000_000, 42);

    println!(
        "{:<10} {:<7} {:>10} {:>8} {:>10} {:>8}  verdict",
        "protocol", "metric", "mean", "stderr", "predicted", "rel_dev"
    );
    for spec in [
        ProtocolSpec::trivial(),
        ProtocolSpec::sender_driven(),
        ProtocolSpec::receiver_driven(),
        ProtocolSpec::srhb(),
    ] {
        for metric in [Metric::TWait, Metric::NSend] {
            let r = est
                .estimate(&spec, &params, &costs, metric)
                .expect("estimate");
            println!(
                "{:<10} {:<7} {:>10.3} {:>8.3} {:>10.3} {:>8.4}  {}",
                spec.kind.to_string(),
                metric.to_string(),
                r.mean,
                r.stderr,
                r.closed_form.unwrap_or(f64::NAN),
                r.rel_dev.unwrap_or(f64::NAN),
                r.verdict
            );
        }
    }
}
