//! One deterministic run of the heartbeat protocol: the event trace, the
//! cost breakdown and the trace audit.
//!
//!     cargo run --example simulate_trace

use relcost::engine::audit_trace;
use relcost::{run_single, CostBreakdown, CostParams, ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.0,
        tau: 4,
        delta: 3,
        sigma: 0.0,
    };
    let trace = run_single(&ProtocolSpec::srhb(), &params, 0, 1_000);
    print!("{}", trace.to_event_lines());

    let costs = CostParams::default();
    let b = CostBreakdown::of(&trace, &costs);
    println!();
    println!(
        "finished at {}, quiescent after tick {:?}",
        trace.t_f, trace.quiescent_at
    );
    println!(
        "sends {:?}, wait {:?}, c0 {:?}, c1 {}",
        b.num_sends, b.wait, b.c0, b.c1
    );

    let violations = audit_trace(&trace);
    println!(
        "audit: {}",
        if violations.is_empty() {
            "clean".to_string()
        } else {
            format!("{violations:?}")
        }
    );
}
