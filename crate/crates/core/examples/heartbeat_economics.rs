//! Repeated invocations of the heartbeat protocol: the running average cost
//! per invocation of one long run, then the mean over many runs against the
//! prediction `Z + c_send / (delta sigma)`.
//!
//!     cargo run --release --example heartbeat_economics

use relcost::analysis::{avg_cost_prediction, z_cost, Estimator, Metric};
use relcost::cost::avg_cost_series;
use relcost::{run_repeated, CostParams, ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.0,
        tau: 2,
        delta: 2,
        sigma: 0.01,
    };
    let costs = CostParams::default();

    let rt = run_repeated(&params, 1, 100_000);
    let series = avg_cost_series(&rt, &costs);
    println!(
        "one run: {} invocations, {} heartbeats, final ratio {:.3}, running sup {:.3}",
        rt.invocations.len(),
        rt.total_heartbeats(),
        series.final_ratio,
        series.running_sup
    );
    for p in series.points.iter().step_by(series.points.len() / 10 + 1) {
        println!(
            "  t={:>6}  completed={:>5}  heartbeats={:>6}  ratio={:.3}",
            p.t, p.num_completed, p.num_hb, p.ratio
        );
    }

    let predicted = avg_cost_prediction(&params, &costs, None).expect("both processes are correct");
    println!(
        "Z = {}, predicted average cost = {predicted}",
        z_cost(&params, &costs)
    );
    let r = Estimator::new(50, 100_000, 7)
        .estimate(&ProtocolSpec::srhb(), &params, &costs, Metric::CAvg)
        .expect("estimate");
    println!(
        "simulated mean over {} runs: {:.3} +- {:.3} ({})",
        r.n_used, r.mean, r.stderr, r.verdict
    );
}
