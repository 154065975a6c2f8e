//! Discrete-time simulation of the sender, the receiver, the lossy link and
//! the heartbeat layer.
//!
//! Tick contract at integer time `t`, in order:
//!
//! 1. every message with delivery time `t` reaches its destination; messages
//!    addressed to a process that crashes at or before `t` vanish;
//! 2. a process whose sampled lifetime equals `t` crashes;
//! 3. each live process (first `p`, then `q`) samples its invocation coin in
//!    repeated mode, handles the delivered protocol messages and then the
//!    delivered heartbeats, runs its timers, and finally lets its heartbeat
//!    layer send (at `0, delta, 2 delta, ...`).
//!
//! Everything a run does is a function of `(protocol, params, seed, horizon)`.
//! Randomness comes from three independent ChaCha streams (lifetimes, losses,
//! invocations) so that e.g. changing `delta` leaves the invocation pattern of
//! a seed unchanged.

mod audit;
mod trace;

pub use audit::{audit_repeated, audit_trace, AuditViolation};
pub use trace::{At, InvocationRecord, MessageRecord, Process, Receipt, RepeatedTrace, RunTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::model::{ProtocolSpec, SystemParams};
use crate::protocols::{self, Machine, Payload, ProtocolStep};

const STREAM_LIFETIME: u64 = 0;
const STREAM_LOSS: u64 = 1;
const STREAM_INVOKE: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Conditioning applied on top of the random model, used by the scenario
/// probes and by tests that need a specific loss pattern.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Forcing {
    pub lifetime_p: Option<At>,
    pub lifetime_q: Option<At>,
    /// Every transmission sent strictly before this tick is lost.
    pub lose_before: Option<u64>,
    /// Lose the `n`-th (0-based) transmission of the given kind.
    pub lose_nth: Vec<(Payload, u32)>,
}

impl Forcing {
    /// Receiver crashed at 0, sender correct.
    pub fn receiver_dead() -> Self {
        Self {
            lifetime_p: Some(At::Never),
            lifetime_q: Some(At::Time(0)),
            ..Self::default()
        }
    }

    /// Sender crashed at 0, receiver correct.
    pub fn sender_dead() -> Self {
        Self {
            lifetime_p: Some(At::Time(0)),
            lifetime_q: Some(At::Never),
            ..Self::default()
        }
    }

    /// Both correct and every message sent before `until` lost.
    pub fn blackout(until: u64) -> Self {
        Self {
            lifetime_p: Some(At::Never),
            lifetime_q: Some(At::Never),
            lose_before: Some(until),
            ..Self::default()
        }
    }
}

fn sample_one(rng: &mut ChaCha8Rng, alpha: f64, beta: f64) -> At {
    let coin: f64 = rng.gen();
    if coin < alpha {
        return At::Never;
    }
    // failures before the first success: support {0, 1, 2, ...}
    let geo = Geometric::new(beta).expect("beta must be in (0, 1]");
    At::Time(geo.sample(rng))
}

/// Samples crash times `(t_p, t_q)`: never with probability `alpha_x`,
/// otherwise geometric with per-round rate `beta_x` starting at 0.
pub fn sample_lifetimes(params: &SystemParams, seed: u64) -> (At, At) {
    let mut rng = stream(seed, STREAM_LIFETIME);
    let t_p = sample_one(&mut rng, params.alpha_p, params.beta_p);
    let t_q = sample_one(&mut rng, params.alpha_q, params.beta_q);
    (t_p, t_q)
}

struct Invocation {
    id: u32,
    sender: Process,
    start: u64,
    /// Machine run by `p` and by `q`.
    machines: [Box<dyn Machine>; 2],
    ticking: [bool; 2],
    listening: [bool; 2],
    finish: At,
    sends: u64,
    last_send: Option<u64>,
}

struct Sim {
    tau: u64,
    delta: u64,
    gamma: f64,
    sigma: f64,
    lifetimes: [At; 2],
    heartbeats: bool,
    loss_rng: ChaCha8Rng,
    invoke_rng: ChaCha8Rng,
    forcing: Forcing,
    sent_by_kind: [u32; 4],
    messages: Vec<MessageRecord>,
    receipts: Vec<Receipt>,
    /// Ring of `tau + 1` delivery buckets holding message indices.
    link: Vec<Vec<usize>>,
    invocations: Vec<Invocation>,
    tickers: [Vec<usize>; 2],
    listeners: [Vec<usize>; 2],
    hb_sent: [u64; 2],
    inbox: Vec<usize>,
}

fn kind_slot(kind: Payload) -> usize {
    match kind {
        Payload::Msg => 0,
        Payload::Ack => 1,
        Payload::Hbmsg => 2,
        Payload::Req => 3,
    }
}

impl Sim {
    fn new(
        params: &SystemParams,
        seed: u64,
        lifetimes: (At, At),
        heartbeats: bool,
        forcing: Forcing,
    ) -> Self {
        let slots = (params.tau + 1) as usize;
        Self {
            tau: params.tau,
            delta: params.delta,
            gamma: params.gamma,
            sigma: params.sigma,
            lifetimes: [lifetimes.0, lifetimes.1],
            heartbeats,
            loss_rng: stream(seed, STREAM_LOSS),
            invoke_rng: stream(seed, STREAM_INVOKE),
            forcing,
            sent_by_kind: [0; 4],
            messages: Vec::new(),
            receipts: Vec::new(),
            link: vec![Vec::new(); slots],
            invocations: Vec::new(),
            tickers: [Vec::new(), Vec::new()],
            listeners: [Vec::new(), Vec::new()],
            hb_sent: [0; 2],
            inbox: Vec::new(),
        }
    }

    fn alive(&self, x: Process, t: u64) -> bool {
        self.lifetimes[x.index()].after(t)
    }

    fn slot(&self, t: u64) -> usize {
        (t % (self.tau + 1)) as usize
    }

    fn transmit(&mut self, t: u64, from: Process, kind: Payload, invocation: Option<u32>) {
        let coin: f64 = self.loss_rng.gen();
        let mut lost = coin < self.gamma;
        let slot = kind_slot(kind);
        let nth = self.sent_by_kind[slot];
        self.sent_by_kind[slot] += 1;
        if matches!(self.forcing.lose_before, Some(until) if t < until)
            || self
                .forcing
                .lose_nth
                .iter()
                .any(|&(k, n)| k == kind && n == nth)
        {
            lost = true;
        }
        let idx = self.messages.len();
        let deliver_time = (!lost).then_some(t + self.tau);
        self.messages.push(MessageRecord {
            sender: from,
            kind,
            invocation,
            send_time: t,
            lost,
            deliver_time,
        });
        if !lost {
            let s = self.slot(t + self.tau);
            self.link[s].push(idx);
        }
    }

    fn apply(&mut self, t: u64, inv: usize, x: Process, step: ProtocolStep) {
        if step.finished && self.invocations[inv].finish.is_never() {
            self.invocations[inv].finish = At::Time(t);
        }
        for kind in step.sends {
            let id = self.invocations[inv].id;
            self.invocations[inv].sends += 1;
            self.invocations[inv].last_send = Some(t);
            self.transmit(t, x, kind, Some(id));
        }
        self.track(inv, x);
    }

    fn track(&mut self, inv: usize, x: Process) {
        let i = x.index();
        let m = &self.invocations[inv].machines[i];
        let (quiet, awaits) = (m.is_quiet(), m.awaits_heartbeat());
        if !quiet && !self.invocations[inv].ticking[i] {
            self.invocations[inv].ticking[i] = true;
            self.tickers[i].push(inv);
        }
        if awaits && !self.invocations[inv].listening[i] {
            self.invocations[inv].listening[i] = true;
            self.listeners[i].push(inv);
        }
    }

    fn start_invocation(
        &mut self,
        t: u64,
        sender: Process,
        machines: protocols::MachinePair,
    ) -> usize {
        let (snd, rcv) = machines;
        let machines: [Box<dyn Machine>; 2] = match sender {
            Process::P => [snd, rcv],
            Process::Q => [rcv, snd],
        };
        let idx = self.invocations.len();
        self.invocations.push(Invocation {
            id: idx as u32,
            sender,
            start: t,
            machines,
            ticking: [false; 2],
            listening: [false; 2],
            finish: At::Never,
            sends: 0,
            last_send: None,
        });
        idx
    }

    fn start_machine(&mut self, t: u64, inv: usize, x: Process) {
        let step = self.invocations[inv].machines[x.index()].on_start(t);
        self.apply(t, inv, x, step);
    }

    /// Step 1: this tick's deliveries. Only live processes act on them in
    /// step 3, so messages for crashed processes vanish.
    fn deliver(&mut self, t: u64) -> Vec<usize> {
        let s = self.slot(t);
        std::mem::take(&mut self.link[s])
    }

    /// Step 3 for a live process: handle deliveries, run timers.
    fn act(&mut self, t: u64, x: Process, delivered: &[usize]) {
        let i = x.index();
        self.inbox.clear();
        // protocol messages first, then heartbeats
        for pass in [false, true] {
            for &m in delivered {
                let rec = &self.messages[m];
                if rec.sender.other() == x && rec.kind.is_heartbeat() == pass {
                    self.inbox.push(m);
                }
            }
        }
        let inbox = std::mem::take(&mut self.inbox);
        for &m in &inbox {
            self.receipts.push(Receipt {
                time: t,
                process: x,
                message: m,
            });
            let (kind, invocation) = (self.messages[m].kind, self.messages[m].invocation);
            match invocation {
                Some(id) => {
                    let inv = id as usize;
                    let step = self.invocations[inv].machines[i].on_deliver(t, kind);
                    self.apply(t, inv, x, step);
                }
                None => {
                    let listeners = std::mem::take(&mut self.listeners[i]);
                    let mut keep = Vec::with_capacity(listeners.len());
                    for inv in listeners {
                        let step = self.invocations[inv].machines[i].on_deliver(t, kind);
                        self.apply(t, inv, x, step);
                        if self.invocations[inv].machines[i].awaits_heartbeat() {
                            keep.push(inv);
                        } else {
                            self.invocations[inv].listening[i] = false;
                        }
                    }
                    // listeners added while fanning out stay registered
                    keep.append(&mut self.listeners[i]);
                    self.listeners[i] = keep;
                }
            }
        }
        self.inbox = inbox;

        let tickers = std::mem::take(&mut self.tickers[i]);
        let mut keep = Vec::with_capacity(tickers.len());
        for inv in tickers {
            let step = self.invocations[inv].machines[i].on_tick(t);
            self.invocations[inv].ticking[i] = false;
            self.apply(t, inv, x, step);
            if !self.invocations[inv].ticking[i] && !self.invocations[inv].machines[i].is_quiet() {
                self.invocations[inv].ticking[i] = true;
                keep.push(inv);
            }
        }
        keep.append(&mut self.tickers[i]);
        self.tickers[i] = keep;
        self.prune_listeners(x);

        if self.heartbeats && t.is_multiple_of(self.delta) {
            self.hb_sent[i] += 1;
            self.transmit(t, x, Payload::Hbmsg, None);
        }
    }

    fn prune_listeners(&mut self, x: Process) {
        let i = x.index();
        let invs = &mut self.invocations;
        self.listeners[i].retain(|&inv| {
            let keep = invs[inv].machines[i].awaits_heartbeat();
            if !keep {
                invs[inv].listening[i] = false;
            }
            keep
        });
    }

    fn in_flight(&self) -> impl Iterator<Item = &MessageRecord> {
        self.link.iter().flatten().map(|&m| &self.messages[m])
    }

    /// Whether a heartbeat could still reach `x` after tick `t`.
    fn heartbeat_possible(&self, x: Process, t: u64) -> bool {
        if !self.heartbeats {
            return false;
        }
        let in_flight = self.in_flight().any(|m| {
            m.kind.is_heartbeat() && m.sender == x.other() && self.alive(x, m.deliver_time.unwrap())
        });
        if in_flight {
            return true;
        }
        let next = (t / self.delta + 1) * self.delta;
        self.alive(x.other(), next) && self.alive(x, next + self.tau)
    }

    /// A protocol message of `inv` (or any, if `None`) is still in flight to
    /// a process that will be alive to receive it.
    fn protocol_in_flight(&self, inv: Option<u32>) -> bool {
        self.in_flight().any(|m| {
            !m.kind.is_heartbeat()
                && (inv.is_none() || m.invocation == inv)
                && self.alive(m.sender.other(), m.deliver_time.unwrap())
        })
    }

    /// No machine of `inv` can send again after tick `t`.
    fn invocation_quiet(&self, inv: usize, t: u64) -> bool {
        let invocation = &self.invocations[inv];
        for x in [Process::P, Process::Q] {
            if !self.alive(x, t + 1) {
                continue;
            }
            let m = &invocation.machines[x.index()];
            if !m.is_quiet() || (m.awaits_heartbeat() && self.heartbeat_possible(x, t)) {
                return false;
            }
        }
        !self.protocol_in_flight(Some(invocation.id))
    }

    fn quiescent(&self, t: u64) -> bool {
        !self.protocol_in_flight(None)
            && (0..self.invocations.len()).all(|i| self.invocation_quiet(i, t))
    }
}

/// Simulates one invocation started at time 0.
pub fn run_single(
    protocol: &ProtocolSpec,
    params: &SystemParams,
    seed: u64,
    horizon: u64,
) -> RunTrace {
    run_single_with(protocol, params, seed, horizon, &Forcing::default())
}

/// [`run_single`] under additional conditioning.
pub fn run_single_with(
    protocol: &ProtocolSpec,
    params: &SystemParams,
    seed: u64,
    horizon: u64,
    forcing: &Forcing,
) -> RunTrace {
    assert!(horizon >= 1, "horizon must be >= 1");
    let (mut t_p, mut t_q) = sample_lifetimes(params, seed);
    if let Some(l) = forcing.lifetime_p {
        t_p = l;
    }
    if let Some(l) = forcing.lifetime_q {
        t_q = l;
    }
    let heartbeats = protocols::uses_heartbeats(protocol.kind);
    let mut sim = Sim::new(params, seed, (t_p, t_q), heartbeats, forcing.clone());
    let inv = sim.start_invocation(0, Process::P, protocols::build(protocol, params.delta));

    let mut quiescent_at = None;
    for t in 0..horizon {
        let delivered = sim.deliver(t);
        for x in [Process::P, Process::Q] {
            if !sim.alive(x, t) {
                continue;
            }
            if t == 0 {
                sim.start_machine(0, inv, x);
            }
            sim.act(t, x, &delivered);
        }
        if sim.quiescent(t) {
            quiescent_at = Some(t);
            break;
        }
    }

    let t_f = sim.invocations[inv].finish;
    RunTrace {
        protocol: protocol.kind,
        tau: params.tau,
        t_s: 0,
        t_p,
        t_q,
        t_f,
        messages: sim.messages,
        receipts: sim.receipts,
        horizon,
        seed,
        truncated: quiescent_at.is_none(),
        quiescent_at,
    }
}

/// Simulates both processes invoking the heartbeat protocol with
/// probability `sigma` per tick while alive, sharing one heartbeat stream.
pub fn run_repeated(params: &SystemParams, seed: u64, horizon: u64) -> RepeatedTrace {
    assert!(horizon >= 1, "horizon must be >= 1");
    let (t_p, t_q) = sample_lifetimes(params, seed);
    let mut sim = Sim::new(params, seed, (t_p, t_q), true, Forcing::default());

    let mut stopped_at = None;
    let mut last = horizon - 1;
    for t in 0..horizon {
        let delivered = sim.deliver(t);
        for x in [Process::P, Process::Q] {
            if !sim.alive(x, t) {
                continue;
            }
            let coin: f64 = sim.invoke_rng.gen();
            if coin < sim.sigma {
                let inv = sim.start_invocation(t, x, protocols::srhb_pair());
                sim.start_machine(t, inv, x);
                sim.start_machine(t, inv, x.other());
            }
            sim.act(t, x, &delivered);
        }
        if !sim.alive(Process::P, t + 1) && !sim.alive(Process::Q, t + 1) {
            stopped_at = Some(t);
            last = t;
            break;
        }
    }

    let invocations = (0..sim.invocations.len())
        .map(|i| {
            let inv = &sim.invocations[i];
            let complete = sim.invocation_quiet(i, last);
            let end = t_p.min(t_q).min(inv.finish).min(At::Time(horizon));
            let wait = end.time().unwrap().max(inv.start) - inv.start;
            InvocationRecord {
                id: inv.id,
                sender: inv.sender,
                start: inv.start,
                finish: inv.finish,
                sends: inv.sends,
                last_send: inv.last_send,
                wait,
                complete,
                completion: complete.then(|| inv.last_send.unwrap_or(inv.start)),
            }
        })
        .collect();

    RepeatedTrace {
        tau: params.tau,
        t_p,
        t_q,
        invocations,
        hb_sent: sim.hb_sent,
        messages: sim.messages,
        receipts: sim.receipts,
        horizon,
        seed,
        stopped_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn send_times(trace: &RunTrace, kind: Payload) -> Vec<u64> {
        trace
            .messages
            .iter()
            .filter(|m| m.kind == kind)
            .map(|m| m.send_time)
            .collect()
    }

    #[test]
    fn sender_driven_deterministic_schedule() {
        let tr = run_single(&ProtocolSpec::sender_driven(), &ideal(3, 2), 7, 1000);
        assert_eq!(tr.t_f, At::Time(3));
        assert_eq!(send_times(&tr, Payload::Msg), vec![0, 2, 4]);
        assert_eq!(send_times(&tr, Payload::Ack), vec![3, 5, 7]);
        assert_eq!(tr.protocol_messages().count(), 6);
        assert!(!tr.truncated);
        assert_eq!(tr.quiescent_at, Some(10));
    }

    #[test]
    fn trivial_sends_nothing() {
        let tr = run_single(&ProtocolSpec::trivial(), &ideal(3, 2), 1, 10_000);
        assert!(tr.messages.is_empty());
        assert_eq!(tr.t_f, At::Never);
        assert_eq!(tr.quiescent_at, Some(0));
    }

    #[test]
    fn srhb_deterministic_schedule() {
        let tr = run_single(&ProtocolSpec::srhb(), &ideal(4, 3), 3, 1000);
        assert_eq!(send_times(&tr, Payload::Msg), vec![4, 7, 10]);
        assert_eq!(send_times(&tr, Payload::Ack), vec![8, 11, 14]);
        assert_eq!(tr.t_f, At::Time(8));
        assert_eq!(tr.protocol_messages().count(), 6);
        // first heartbeat from q reaches p at tau
        let first_hb = tr
            .receipts
            .iter()
            .find(|r| r.process == Process::P && tr.messages[r.message].kind == Payload::Hbmsg)
            .unwrap();
        assert_eq!(first_hb.time, 4);
    }

    #[test]
    fn receiver_driven_deterministic_schedule() {
        let tr = run_single(&ProtocolSpec::receiver_driven(), &ideal(3, 2), 3, 1000);
        assert_eq!(tr.t_f, At::Time(6));
        assert_eq!(send_times(&tr, Payload::Req), vec![0, 2, 4]);
        assert_eq!(send_times(&tr, Payload::Msg), vec![3, 5, 7]);
    }

    #[test]
    fn forced_first_msg_loss() {
        let forcing = Forcing {
            lose_nth: vec![(Payload::Msg, 0)],
            ..Forcing::default()
        };
        let tr = run_single_with(
            &ProtocolSpec::sender_driven(),
            &ideal(3, 2),
            3,
            1000,
            &forcing,
        );
        assert!(tr.messages[0].lost);
        assert_eq!(tr.t_f, At::Time(5));
    }

    #[test]
    fn sender_driven_keeps_sending_to_dead_receiver() {
        let tr = run_single_with(
            &ProtocolSpec::sender_driven(),
            &ideal(3, 2),
            3,
            101,
            &Forcing::receiver_dead(),
        );
        assert!(tr.truncated);
        assert_eq!(tr.protocol_messages().count(), 51);
        assert!(tr.receipts.is_empty());
    }

    #[test]
    fn receiver_driven_keeps_requesting_dead_sender() {
        let tr = run_single_with(
            &ProtocolSpec::receiver_driven(),
            &ideal(3, 2),
            3,
            100,
            &Forcing::sender_dead(),
        );
        assert!(tr.truncated);
        assert_eq!(send_times(&tr, Payload::Req).len(), 50);
        assert!(send_times(&tr, Payload::Msg).is_empty());
    }

    #[test]
    fn srhb_quiet_when_receiver_dead() {
        let tr = run_single_with(
            &ProtocolSpec::srhb(),
            &ideal(4, 3),
            3,
            1000,
            &Forcing::receiver_dead(),
        );
        assert_eq!(tr.protocol_messages().count(), 0);
        assert!(!tr.truncated);
        assert_eq!(tr.t_f, At::Never);
    }

    #[test]
    fn pathological_without_loss() {
        // ack delayed by ceil(2) = 2; sender acked at 3 + 2 + 3 = 8
        let tr = run_single(&ProtocolSpec::pathological(2.0), &ideal(3, 5), 1, 10_000);
        assert_eq!(tr.t_f, At::Time(3));
        assert_eq!(send_times(&tr, Payload::Msg), (0..8).collect::<Vec<_>>());
        let acks = send_times(&tr, Payload::Ack);
        assert_eq!(acks[0], 5);
        assert_eq!(acks[1], 4 + 4);
        assert_eq!(acks[2], 5 + 8);
        assert!(!tr.truncated);
    }

    #[test]
    fn lifetimes_correct_when_alpha_one() {
        let p = ideal(1, 1);
        for seed in 0..100 {
            assert_eq!(sample_lifetimes(&p, seed), (At::Never, At::Never));
        }
    }

    #[test]
    fn geometric_lifetime_mean() {
        let p = SystemParams {
            alpha_p: 0.0,
            alpha_q: 0.5,
            ..ideal(1, 1)
        };
        let n = 100_000u64;
        let mut sum = 0u64;
        let mut infinite = 0u64;
        for seed in 0..n {
            let (tp, tq) = sample_lifetimes(&p, seed);
            sum += tp.time().unwrap();
            if tq.is_never() {
                infinite += 1;
            }
        }
        let mean = sum as f64 / n as f64;
        // (1 - beta) / beta = 1, variance (1 - beta) / beta^2 = 2
        assert!(
            (mean - 1.0).abs() < 3.0 * (2.0f64 / n as f64).sqrt() + 1e-3,
            "mean {mean}"
        );
        let frac = infinite as f64 / n as f64;
        assert!(
            (frac - 0.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt(),
            "frac {frac}"
        );
    }

    #[test]
    fn repeated_without_invocations_counts_heartbeats() {
        let p = ideal(2, 3);
        let rt = run_repeated(&p, 5, 100);
        assert!(rt.invocations.is_empty());
        assert_eq!(rt.hb_sent, [34, 34]);
    }

    #[test]
    fn repeated_ideal_invocations() {
        let p = SystemParams {
            sigma: 1.0,
            delta: 1,
            ..ideal(3, 1)
        };
        let rt = run_repeated(&p, 5, 200);
        assert_eq!(rt.invocations.len(), 400);
        let mut checked = 0;
        for inv in rt.completed().filter(|i| i.start >= p.tau) {
            assert_eq!(inv.wait, p.tau);
            assert_eq!(inv.sends, 4 * p.tau);
            checked += 1;
        }
        assert!(checked > 350);
        // the last few invocations are still running at the horizon
        assert!(rt.invocations.iter().any(|i| !i.complete));
    }

    #[test]
    fn repeated_stops_after_both_crash() {
        let p = SystemParams {
            alpha_p: 0.0,
            alpha_q: 0.0,
            beta_p: 0.2,
            beta_q: 0.2,
            gamma: 0.0,
            tau: 2,
            delta: 2,
            sigma: 0.3,
        };
        for seed in 0..100 {
            let rt = run_repeated(&p, seed, 100_000);
            assert!(rt.stopped_at.is_some());
            assert!(rt.invocations.iter().all(|i| i.complete));
        }
    }
}
