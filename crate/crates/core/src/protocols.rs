//! Protocol state machines.
//!
//! A protocol is a pair of machines, one run by the sender `p` and one by the
//! receiver `q`. Machines are driven by the engine through [`Machine`] and
//! never consume randomness; all chance lives in the engine. Heartbeats are
//! not a protocol concern: machines may react to a delivered `Hbmsg` but never
//! emit one.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ProtocolKind, ProtocolSpec};

/// Kinds of messages carried by the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Payload {
    Msg,
    Ack,
    Hbmsg,
    Req,
}

impl Payload {
    pub fn is_heartbeat(self) -> bool {
        self == Payload::Hbmsg
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Payload::Msg => "Msg",
            Payload::Ack => "Ack",
            Payload::Hbmsg => "Hbmsg",
            Payload::Req => "Req",
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of one machine step. The engine tags each send with the
/// invocation the machine belongs to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProtocolStep {
    pub sends: Vec<Payload>,
    /// Set on the step in which a receiver finishes RECEIVE.
    pub finished: bool,
}

impl ProtocolStep {
    fn idle() -> Self {
        Self::default()
    }

    fn send(kind: Payload) -> Self {
        Self {
            sends: vec![kind],
            finished: false,
        }
    }
}

/// Common step interface. Within a tick the engine calls `on_start` (only on
/// the invocation tick), then `on_deliver` for each delivered message
/// (protocol messages before heartbeats), then `on_tick`.
pub trait Machine: Send {
    fn on_start(&mut self, _now: u64) -> ProtocolStep {
        ProtocolStep::idle()
    }

    fn on_deliver(&mut self, now: u64, kind: Payload) -> ProtocolStep;

    fn on_tick(&mut self, _now: u64) -> ProtocolStep {
        ProtocolStep::idle()
    }

    /// No send will happen unless some message is delivered first.
    fn is_quiet(&self) -> bool;

    /// A heartbeat delivery could still make this machine send.
    fn awaits_heartbeat(&self) -> bool {
        false
    }

    fn finished(&self) -> bool {
        false
    }
}

/// The "do nothing" protocol, used for both roles.
#[derive(Debug, Clone, Default)]
pub struct Idle;

impl Machine for Idle {
    fn on_deliver(&mut self, _now: u64, _kind: Payload) -> ProtocolStep {
        ProtocolStep::idle()
    }

    fn is_quiet(&self) -> bool {
        true
    }
}

/// Sender that transmits `Msg` every `period` ticks from its start until an
/// `Ack` arrives.
#[derive(Debug, Clone)]
pub struct PeriodicSender {
    period: u64,
    start: Option<u64>,
    acked: bool,
}

impl PeriodicSender {
    pub fn new(period: u64) -> Self {
        assert!(period >= 1, "period must be >= 1");
        Self {
            period,
            start: None,
            acked: false,
        }
    }
}

impl Machine for PeriodicSender {
    fn on_start(&mut self, now: u64) -> ProtocolStep {
        self.start = Some(now);
        ProtocolStep::idle()
    }

    fn on_deliver(&mut self, _now: u64, kind: Payload) -> ProtocolStep {
        if kind == Payload::Ack {
            self.acked = true;
        }
        ProtocolStep::idle()
    }

    fn on_tick(&mut self, now: u64) -> ProtocolStep {
        match self.start {
            Some(s) if !self.acked && (now - s).is_multiple_of(self.period) => {
                ProtocolStep::send(Payload::Msg)
            }
            _ => ProtocolStep::idle(),
        }
    }

    fn is_quiet(&self) -> bool {
        self.acked || self.start.is_none()
    }
}

/// Receiver that acknowledges every `Msg` copy and finishes on the first.
#[derive(Debug, Clone, Default)]
pub struct AckingReceiver {
    finished: bool,
}

impl Machine for AckingReceiver {
    fn on_deliver(&mut self, _now: u64, kind: Payload) -> ProtocolStep {
        if kind != Payload::Msg {
            return ProtocolStep::idle();
        }
        let first = !self.finished;
        self.finished = true;
        ProtocolStep {
            sends: vec![Payload::Ack],
            finished: first,
        }
    }

    fn is_quiet(&self) -> bool {
        true
    }

    fn finished(&self) -> bool {
        self.finished
    }
}

/// Receiver of the receiver-driven protocol: requests every `period` ticks
/// until the message arrives.
#[derive(Debug, Clone)]
pub struct RequestingReceiver {
    period: u64,
    start: Option<u64>,
    finished: bool,
}

impl RequestingReceiver {
    pub fn new(period: u64) -> Self {
        assert!(period >= 1, "period must be >= 1");
        Self {
            period,
            start: None,
            finished: false,
        }
    }
}

impl Machine for RequestingReceiver {
    fn on_start(&mut self, now: u64) -> ProtocolStep {
        self.start = Some(now);
        ProtocolStep::idle()
    }

    fn on_deliver(&mut self, _now: u64, kind: Payload) -> ProtocolStep {
        if kind == Payload::Msg && !self.finished {
            self.finished = true;
            return ProtocolStep {
                sends: Vec::new(),
                finished: true,
            };
        }
        ProtocolStep::idle()
    }

    fn on_tick(&mut self, now: u64) -> ProtocolStep {
        match self.start {
            Some(s) if !self.finished && (now - s).is_multiple_of(self.period) => {
                ProtocolStep::send(Payload::Req)
            }
            _ => ProtocolStep::idle(),
        }
    }

    fn is_quiet(&self) -> bool {
        self.finished || self.start.is_none()
    }

    fn finished(&self) -> bool {
        self.finished
    }
}

/// Sender of the receiver-driven protocol: answers each `Req` with `Msg`.
#[derive(Debug, Clone, Default)]
pub struct RespondingSender;

impl Machine for RespondingSender {
    fn on_deliver(&mut self, _now: u64, kind: Payload) -> ProtocolStep {
        if kind == Payload::Req {
            ProtocolStep::send(Payload::Msg)
        } else {
            ProtocolStep::idle()
        }
    }

    fn is_quiet(&self) -> bool {
        true
    }
}

/// Heartbeat-driven sender: sends `Msg` on every heartbeat delivered after
/// the invocation started, until the first `Ack`.
#[derive(Debug, Clone, Default)]
pub struct HeartbeatSender {
    started: bool,
    acked: bool,
}

impl Machine for HeartbeatSender {
    fn on_start(&mut self, _now: u64) -> ProtocolStep {
        self.started = true;
        ProtocolStep::idle()
    }

    fn on_deliver(&mut self, _now: u64, kind: Payload) -> ProtocolStep {
        match kind {
            Payload::Ack => {
                self.acked = true;
                ProtocolStep::idle()
            }
            Payload::Hbmsg if self.started && !self.acked => ProtocolStep::send(Payload::Msg),
            _ => ProtocolStep::idle(),
        }
    }

    fn is_quiet(&self) -> bool {
        true
    }

    fn awaits_heartbeat(&self) -> bool {
        self.started && !self.acked
    }
}

/// Receiver that delays its `k`-th acknowledgement by `ceil(base^k)` ticks
/// after the `k`-th receipt of `Msg`.
#[derive(Debug, Clone)]
pub struct DelayedAckReceiver {
    base: f64,
    receipts: u32,
    /// due tick -> number of acks due
    due: BTreeMap<u64, u32>,
    finished: bool,
}

impl DelayedAckReceiver {
    pub fn new(base: f64) -> Self {
        assert!(base > 1.0, "ack base must be > 1");
        Self {
            base,
            receipts: 0,
            due: BTreeMap::new(),
            finished: false,
        }
    }

    /// Delay of the `k`-th acknowledgement (1-based).
    pub fn delay(base: f64, k: u32) -> u64 {
        let d = base.powi(k as i32).ceil();
        if d >= u64::MAX as f64 {
            u64::MAX
        } else {
            d as u64
        }
    }
}

impl Machine for DelayedAckReceiver {
    fn on_deliver(&mut self, now: u64, kind: Payload) -> ProtocolStep {
        if kind != Payload::Msg {
            return ProtocolStep::idle();
        }
        self.receipts += 1;
        let at = now.saturating_add(Self::delay(self.base, self.receipts));
        *self.due.entry(at).or_insert(0) += 1;
        let first = !self.finished;
        self.finished = true;
        ProtocolStep {
            sends: Vec::new(),
            finished: first,
        }
    }

    fn on_tick(&mut self, now: u64) -> ProtocolStep {
        match self.due.remove(&now) {
            Some(n) => ProtocolStep {
                sends: vec![Payload::Ack; n as usize],
                finished: false,
            },
            None => ProtocolStep::idle(),
        }
    }

    fn is_quiet(&self) -> bool {
        self.due.is_empty()
    }

    fn finished(&self) -> bool {
        self.finished
    }
}

/// `(sender machine, receiver machine)`.
pub type MachinePair = (Box<dyn Machine>, Box<dyn Machine>);

pub fn trivial() -> MachinePair {
    (Box::new(Idle), Box::new(Idle))
}

pub fn sender_driven(delta: u64) -> MachinePair {
    (
        Box::new(PeriodicSender::new(delta)),
        Box::new(AckingReceiver::default()),
    )
}

pub fn receiver_driven(delta: u64) -> MachinePair {
    (
        Box::new(RespondingSender),
        Box::new(RequestingReceiver::new(delta)),
    )
}

pub fn srhb_pair() -> MachinePair {
    (
        Box::new(HeartbeatSender::default()),
        Box::new(AckingReceiver::default()),
    )
}

/// Sender retransmits every tick; receiver delays acknowledgements
/// geometrically.
pub fn pathological(ack_base: f64) -> MachinePair {
    (
        Box::new(PeriodicSender::new(1)),
        Box::new(DelayedAckReceiver::new(ack_base)),
    )
}

/// Builds the machine pair for `spec`. `delta` is the retransmission period
/// used by the sender- and receiver-driven protocols.
pub fn build(spec: &ProtocolSpec, delta: u64) -> MachinePair {
    match spec.kind {
        ProtocolKind::Trivial => trivial(),
        ProtocolKind::SenderDriven => sender_driven(delta),
        ProtocolKind::ReceiverDriven => receiver_driven(delta),
        ProtocolKind::SrHb => srhb_pair(),
        ProtocolKind::Pathological => pathological(
            spec.ack_base
                .expect("pathological protocol requires ack_base"),
        ),
    }
}

/// Whether the protocol relies on the heartbeat layer.
pub fn uses_heartbeats(kind: ProtocolKind) -> bool {
    kind == ProtocolKind::SrHb
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_never_sends() {
        let (mut s, mut r) = trivial();
        for k in [Payload::Msg, Payload::Ack, Payload::Hbmsg, Payload::Req] {
            assert!(s.on_deliver(0, k).sends.is_empty());
            assert!(r.on_deliver(0, k).sends.is_empty());
        }
        assert!(s.on_tick(5).sends.is_empty());
        assert!(!r.finished());
    }

    #[test]
    fn periodic_sender_stops_on_ack() {
        let mut s = PeriodicSender::new(2);
        s.on_start(0);
        let sent: Vec<u64> = (0..7).filter(|&t| !s.on_tick(t).sends.is_empty()).collect();
        assert_eq!(sent, vec![0, 2, 4, 6]);
        s.on_deliver(7, Payload::Ack);
        assert!(s.is_quiet());
        assert!(s.on_tick(8).sends.is_empty());
    }

    #[test]
    fn acking_receiver_finishes_once_and_keeps_acking() {
        let mut r = AckingReceiver::default();
        let a = r.on_deliver(3, Payload::Msg);
        assert!(a.finished);
        assert_eq!(a.sends, vec![Payload::Ack]);
        let b = r.on_deliver(5, Payload::Msg);
        assert!(!b.finished);
        assert_eq!(b.sends, vec![Payload::Ack]);
        assert!(r.finished());
    }

    #[test]
    fn requesting_receiver() {
        let mut r = RequestingReceiver::new(3);
        r.on_start(0);
        assert_eq!(r.on_tick(0).sends, vec![Payload::Req]);
        assert!(r.on_tick(1).sends.is_empty());
        assert_eq!(r.on_tick(3).sends, vec![Payload::Req]);
        assert!(r.on_deliver(6, Payload::Msg).finished);
        assert!(r.on_tick(6).sends.is_empty());
        assert!(r.is_quiet());
    }

    #[test]
    fn heartbeat_sender_loop_guard() {
        let mut s = HeartbeatSender::default();
        assert!(s.on_deliver(0, Payload::Hbmsg).sends.is_empty());
        s.on_start(1);
        assert!(s.awaits_heartbeat());
        assert_eq!(s.on_deliver(4, Payload::Hbmsg).sends, vec![Payload::Msg]);
        s.on_deliver(8, Payload::Ack);
        assert!(!s.awaits_heartbeat());
        assert!(s.on_deliver(10, Payload::Hbmsg).sends.is_empty());
    }

    #[test]
    fn delayed_acks_follow_powers() {
        let mut r = DelayedAckReceiver::new(1.5);
        // receipts at 10, 11, 12: delays ceil(1.5)=2, ceil(2.25)=3, ceil(3.375)=4
        for t in 10..13 {
            r.on_deliver(t, Payload::Msg);
        }
        let due: Vec<u64> = (10..20)
            .filter(|&t| !r.on_tick(t).sends.is_empty())
            .collect();
        assert_eq!(due, vec![12, 14, 16]);
        assert!(r.is_quiet());
        assert_eq!(DelayedAckReceiver::delay(2.0, 3), 8);
        assert_eq!(DelayedAckReceiver::delay(2.0, 2000), u64::MAX);
    }

    #[test]
    fn machines_never_emit_heartbeats() {
        let kinds = [Payload::Msg, Payload::Ack, Payload::Hbmsg, Payload::Req];
        let pairs = [
            trivial(),
            sender_driven(2),
            receiver_driven(2),
            srhb_pair(),
            pathological(2.0),
        ];
        for (mut s, mut r) in pairs {
            s.on_start(0);
            r.on_start(0);
            for t in 0..50 {
                for m in [&mut s, &mut r] {
                    for k in kinds {
                        assert!(!m.on_deliver(t, k).sends.contains(&Payload::Hbmsg));
                    }
                    assert!(!m.on_tick(t).sends.contains(&Payload::Hbmsg));
                }
            }
        }
    }
}
