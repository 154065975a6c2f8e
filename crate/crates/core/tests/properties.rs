use proptest::prelude::*;

use relcost::analysis::{completion_curve, optimize_delta, Moments};
use relcost::cost::{cost_c0, Cost};
use relcost::engine::{audit_repeated, audit_trace, run_single_with, Forcing};
use relcost::protocols::Payload;
use relcost::{run_repeated, run_single, CostParams, ProtocolKind, ProtocolSpec, SystemParams};

fn spec_of(kind: ProtocolKind) -> ProtocolSpec {
    match kind {
        ProtocolKind::Pathological => ProtocolSpec::pathological(2.0),
        k => ProtocolSpec::new(k),
    }
}

fn any_kind() -> impl Strategy<Value = ProtocolKind> {
    prop::sample::select(ProtocolKind::ALL.to_vec())
}

prop_compose! {
    fn any_params()(
        alpha_p in prop::sample::select(vec![0.0, 0.5, 1.0]),
        alpha_q in prop::sample::select(vec![0.0, 0.5, 1.0]),
        beta_p in 0.001f64..0.2,
        beta_q in 0.001f64..0.2,
        gamma in 0.0f64..0.9,
        tau in 1u64..8,
        delta in 1u64..8,
        sigma in 0.0f64..0.2,
    ) -> SystemParams {
        SystemParams { alpha_p, alpha_q, beta_p, beta_q, gamma, tau, delta, sigma }
    }
}

fn ideal(tau: u64, delta: u64) -> SystemParams {
    SystemParams {
        alpha_p: 1.0,
        alpha_q: 1.0,
        beta_p: 0.5,
        beta_q: 0.5,
        gamma: 0.0,
        tau,
        delta,
        sigma: 0.0,
    }
}

fn count(tr: &relcost::RunTrace, kind: Payload) -> u64 {
    tr.messages.iter().filter(|m| m.kind == kind).count() as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_trace(kind in any_kind(), p in any_params(), seed in any::<u64>()) {
        let spec = spec_of(kind);
        let a = run_single(&spec, &p, seed, 1_500);
        let b = run_single(&spec, &p, seed, 1_500);
        prop_assert_eq!(a.to_event_lines(), b.to_event_lines());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn single_runs_pass_the_audit(kind in any_kind(), p in any_params(), seed in any::<u64>()) {
        let tr = run_single(&spec_of(kind), &p, seed, 1_500);
        prop_assert_eq!(audit_trace(&tr), vec![]);
        for r in &tr.receipts {
            let m = &tr.messages[r.message];
            prop_assert_eq!(m.send_time + p.tau, r.time);
            prop_assert!(!m.lost);
        }
    }

    #[test]
    fn repeated_runs_pass_the_audit(p in any_params(), seed in any::<u64>()) {
        let rt = run_repeated(&p, seed, 800);
        prop_assert_eq!(audit_repeated(&rt), vec![]);
        prop_assert_eq!(rt.to_event_lines(), run_repeated(&p, seed, 800).to_event_lines());
    }

    #[test]
    fn event_lines_are_well_formed(kind in any_kind(), p in any_params(), seed in any::<u64>()) {
        let lines = run_single(&spec_of(kind), &p, seed, 500).to_event_lines();
        let mut last = 0u64;
        for line in lines.lines() {
            let fields: Vec<&str> = line.split(' ').collect();
            prop_assert_eq!(fields.len(), 6, "{}", line);
            let t: u64 = fields[0].parse().unwrap();
            prop_assert!(t >= last);
            last = t;
            prop_assert!(["p", "q"].contains(&fields[1]));
            prop_assert!(["recv", "crash", "finish", "send"].contains(&fields[2]));
        }
    }

    /// Without loss or crashes each protocol runs one fixed schedule.
    #[test]
    fn lossless_schedules(tau in 1u64..20, delta in 1u64..30) {
        let p = ideal(tau, delta);
        let k = (2 * tau).div_ceil(delta);

        let s = run_single(&ProtocolSpec::sender_driven(), &p, 0, 10_000);
        prop_assert_eq!((count(&s, Payload::Msg), count(&s, Payload::Ack)), (k, k));
        prop_assert_eq!(s.t_f, tau);

        let r = run_single(&ProtocolSpec::receiver_driven(), &p, 0, 10_000);
        prop_assert_eq!((count(&r, Payload::Req), count(&r, Payload::Msg)), (k, k));
        prop_assert_eq!(r.t_f, 2 * tau);

        let h = run_single(&ProtocolSpec::srhb(), &p, 0, 10_000);
        prop_assert_eq!((count(&h, Payload::Msg), count(&h, Payload::Ack)), (k, k));
        prop_assert_eq!(h.t_f, 2 * tau);

        let t = run_single(&ProtocolSpec::trivial(), &p, 0, 10_000);
        prop_assert!(t.messages.is_empty());
        prop_assert!(t.t_f.is_never());
    }

    #[test]
    fn heartbeat_quiesces_within_two_delays_of_the_ack(
        gamma in 0.0f64..0.6, tau in 1u64..8, delta in 1u64..8, seed in any::<u64>()
    ) {
        let p = SystemParams { gamma, ..ideal(tau, delta) };
        let tr = run_single(&ProtocolSpec::srhb(), &p, seed, 200_000);
        let ack = tr.receipts.iter()
            .filter(|r| tr.messages[r.message].kind == Payload::Ack)
            .map(|r| r.time)
            .min()
            .expect("an ack eventually arrives");
        let q = tr.quiescent_at.expect("quiescent");
        prop_assert!(q >= ack && q - ack <= 2 * tau, "ack {} quiescent {}", ack, q);
    }

    #[test]
    fn forced_receiver_crash_counts(horizon in 1u64..3_000, delta in 1u64..20, tau in 1u64..10) {
        let p = ideal(tau, delta);
        let s = run_single_with(&ProtocolSpec::sender_driven(), &p, 1, horizon, &Forcing::receiver_dead());
        prop_assert_eq!(s.protocol_messages().count() as u64, horizon.div_ceil(delta));
        let h = run_single_with(&ProtocolSpec::srhb(), &p, 1, horizon, &Forcing::receiver_dead());
        prop_assert_eq!(h.protocol_messages().count(), 0);
    }

    #[test]
    fn c0_is_linear_in_the_costs(
        kind in any_kind(), p in any_params(), seed in any::<u64>(),
        c_send in 0.0f64..10.0, c_wait in 0.0f64..10.0, k in 0.01f64..100.0
    ) {
        let tr = run_single(&spec_of(kind), &p, seed, 3_000);
        let base = CostParams { c_send, c_wait, n_exp: 2.0 };
        let scaled = CostParams { c_send: k * c_send, c_wait: k * c_wait, n_exp: 2.0 };
        match (cost_c0(&tr, &base), cost_c0(&tr, &scaled)) {
            (Cost::Value(a), Cost::Value(b)) => prop_assert!((k * a - b).abs() <= 1e-9 * b.abs().max(1.0)),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn moment_merge_is_associative(
        a in prop::collection::vec(-1e3f64..1e3, 0..50),
        b in prop::collection::vec(-1e3f64..1e3, 0..50),
        c in prop::collection::vec(-1e3f64..1e3, 2..50),
    ) {
        let (ma, mb, mc) = (
            Moments::from_values(a.iter().copied()),
            Moments::from_values(b.iter().copied()),
            Moments::from_values(c.iter().copied()),
        );
        let left = ma.merge(mb).merge(mc);
        let right = ma.merge(mb.merge(mc));
        let seq = Moments::from_values(a.iter().chain(&b).chain(&c).copied());
        prop_assert_eq!(left.n, seq.n);
        for m in [left, right] {
            prop_assert!((m.mean() - seq.mean()).abs() <= 1e-9 * seq.mean().abs().max(1.0));
            prop_assert!((m.variance() - seq.variance()).abs() <= 1e-6 * seq.variance().max(1.0));
        }
    }

    #[test]
    fn argmin_ignores_joint_cost_scaling(
        tau in 1u64..10, sigma in 0.001f64..0.5, c_send in 0.1f64..10.0, c_wait in 0.1f64..10.0,
        k in 0.001f64..1000.0, alpha in prop::sample::select(vec![0.0, 1.0]), lambda in 0.05f64..0.95
    ) {
        let p = SystemParams { alpha_p: alpha, alpha_q: alpha, sigma, ..ideal(tau, 1) };
        let deltas: Vec<u64> = (1..=60).collect();
        let base = CostParams { c_send, c_wait, n_exp: 2.0 };
        let scaled = CostParams { c_send: k * c_send, c_wait: k * c_wait, n_exp: 2.0 };
        let a = optimize_delta(&p, &base, Some(lambda), &deltas).unwrap();
        let b = optimize_delta(&p, &scaled, Some(lambda), &deltas).unwrap();
        // exact ties can flip under rounding; the optimal costs must still agree
        let cost_at = |d: u64| b.curve.iter().find(|c| c.0 == d).unwrap().1;
        prop_assert!(a.delta_star == b.delta_star || (cost_at(a.delta_star) - b.cost_star).abs() <= 1e-9 * b.cost_star);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn completion_curve_is_monotone(gamma in 0.0f64..0.8, tau in 1u64..6, delta in 1u64..4, seed in any::<u64>()) {
        let grid: Vec<u64> = (0..40).collect();
        // both processes correct: the conditioning is trivial and the curve
        // is a running count over fixed runs
        let p = SystemParams { gamma, ..ideal(tau, delta) };
        let curve = completion_curve(&ProtocolSpec::sender_driven(), &p, &grid, 300, seed, 1).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].p.unwrap() >= w[0].p.unwrap());
        }
        // with crashes the denominator shrinks; allow estimator noise
        let q = SystemParams { alpha_p: 0.0, alpha_q: 0.0, beta_p: 0.02, beta_q: 0.02, ..p };
        let curve = completion_curve(&ProtocolSpec::sender_driven(), &q, &grid, 2_000, seed, 1).unwrap();
        let mut best = 0.0f64;
        for c in &curve {
            if let (Some(v), Some(se)) = (c.p, c.stderr) {
                prop_assert!(v >= best - 4.0 * se.max(1.0 / c.eligible as f64), "t {} p {} after {}", c.t, v, best);
                best = best.max(v);
            }
        }
    }
}
