//! The predicted optimal heartbeat period against a brute-force simulation
//! of the average cost at every period.

use relcost::analysis::{optimize_delta, Estimator, Metric};
use relcost::{CostParams, ProtocolSpec, SystemParams};

#[test]
fn predicted_argmin_matches_simulation() {
    let base = SystemParams {
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
    let deltas: Vec<u64> = (1..=50).collect();
    let predicted = optimize_delta(&base, &costs, None, &deltas)
        .unwrap()
        .delta_star;

    // the same seeds at every period keep the invocation pattern fixed
    let est = Estimator::new(100, 20_000, 0);
    let (simulated, _) = deltas
        .iter()
        .map(|&delta| {
            let p = SystemParams { delta, ..base };
            (
                delta,
                est.estimate(&ProtocolSpec::srhb(), &p, &costs, Metric::CAvg)
                    .unwrap()
                    .mean,
            )
        })
        .fold(
            (0, f64::INFINITY),
            |best, (d, m)| if m < best.1 { (d, m) } else { best },
        );
    assert!(
        predicted.abs_diff(simulated) <= 1,
        "predicted {predicted}, simulated {simulated}"
    );
}
