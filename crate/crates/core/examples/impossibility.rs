//! The three forced scenarios (receiver dead, sender dead, long blackout)
//! for each protocol. Protocols without heartbeats show an unbounded cost
//! signature in at least one scenario; the heartbeat protocol does not.
//!
//!     cargo run --example impossibility

use relcost::analysis::impossibility_probe;
use relcost::{ProtocolSpec, SystemParams};

fn main() {
    let params = SystemParams {
        alpha_p: 0.5,
        alpha_q: 0.5,
        beta_p: 0.01,
        beta_q: 0.01,
        gamma: 0.1,
        tau: 3,
        delta: 2,
        sigma: 0.0,
    };
    for spec in [
        ProtocolSpec::trivial(),
        ProtocolSpec::sender_driven(),
        ProtocolSpec::receiver_driven(),
        ProtocolSpec::srhb(),
    ] {
        let r = impossibility_probe(&spec, &params, 1_001, 9).expect("probe");
        println!("{} (blackout until {}):", spec.kind, r.blackout_until);
        for s in &r.scenarios {
            println!(
                "  {}  stopped={:<5} sends={:<5} heartbeats={:<5} finished={:<5} unbounded={}",
                s.name, s.stopped, s.sends, s.heartbeats, s.finished, s.unbounded
            );
        }
        println!("  {}", r.note);
    }
}
