//! Trace audits: link integrity, crash discipline and the no-fabrication
//! property (a receive always traces back to a real send).

use std::collections::HashMap;
use std::fmt;

use super::trace::{At, MessageRecord, Process, Receipt, RepeatedTrace, RunTrace};
use crate::protocols::Payload;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    /// A receipt points at a lost message, the wrong recipient, or a delivery
    /// time other than `send_time + tau`.
    BadReceipt {
        receipt: usize,
    },
    DuplicateReceipt {
        message: usize,
    },
    /// Lost flag and delivery time disagree, or the delay is not `tau`.
    MalformedMessage {
        message: usize,
    },
    SendAfterCrash {
        message: usize,
    },
    /// An acknowledgement sent without a prior receipt of the message.
    UnmatchedAck {
        message: usize,
    },
    /// The receiver finished without receiving the message at that tick.
    FinishWithoutReceipt {
        time: u64,
    },
    /// The sender transmitted again after its acknowledgement arrived.
    SendAfterAck {
        message: usize,
    },
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditViolation::BadReceipt { receipt } => {
                write!(f, "receipt #{receipt} has no matching delivery")
            }
            AuditViolation::DuplicateReceipt { message } => {
                write!(f, "message #{message} received twice")
            }
            AuditViolation::MalformedMessage { message } => {
                write!(f, "message #{message} has an inconsistent delivery")
            }
            AuditViolation::SendAfterCrash { message } => {
                write!(f, "message #{message} sent by a crashed process")
            }
            AuditViolation::UnmatchedAck { message } => {
                write!(f, "ack #{message} sent before any receipt")
            }
            AuditViolation::FinishWithoutReceipt { time } => {
                write!(f, "finish at {time} without receipt")
            }
            AuditViolation::SendAfterAck { message } => {
                write!(f, "message #{message} sent after ack receipt")
            }
        }
    }
}

fn crash_of(t_p: At, t_q: At, x: Process) -> At {
    match x {
        Process::P => t_p,
        Process::Q => t_q,
    }
}

fn link_checks(
    messages: &[MessageRecord],
    receipts: &[Receipt],
    tau: u64,
    t_p: At,
    t_q: At,
    out: &mut Vec<AuditViolation>,
) {
    let mut seen = vec![false; messages.len()];
    for (i, r) in receipts.iter().enumerate() {
        let Some(m) = messages.get(r.message) else {
            out.push(AuditViolation::BadReceipt { receipt: i });
            continue;
        };
        let ok = !m.lost
            && m.deliver_time == Some(r.time)
            && m.send_time + tau == r.time
            && m.sender.other() == r.process
            && crash_of(t_p, t_q, r.process).after(r.time);
        if !ok {
            out.push(AuditViolation::BadReceipt { receipt: i });
        }
        if std::mem::replace(&mut seen[r.message], true) {
            out.push(AuditViolation::DuplicateReceipt { message: r.message });
        }
    }
    for (i, m) in messages.iter().enumerate() {
        if !crash_of(t_p, t_q, m.sender).after(m.send_time) {
            out.push(AuditViolation::SendAfterCrash { message: i });
        }
        if m.deliver_time.is_some() == m.lost
            || m.deliver_time.is_some_and(|d| d != m.send_time + tau)
        {
            out.push(AuditViolation::MalformedMessage { message: i });
        }
    }
}

/// Earliest receipt time of each `(process, kind, invocation)`.
fn first_receipts(
    messages: &[MessageRecord],
    receipts: &[Receipt],
) -> HashMap<(Process, Payload, Option<u32>), u64> {
    let mut first = HashMap::new();
    for r in receipts {
        let m = &messages[r.message];
        first
            .entry((r.process, m.kind, m.invocation))
            .and_modify(|t: &mut u64| *t = (*t).min(r.time))
            .or_insert(r.time);
    }
    first
}

fn protocol_checks(
    messages: &[MessageRecord],
    receipts: &[Receipt],
    out: &mut Vec<AuditViolation>,
) {
    let first = first_receipts(messages, receipts);
    for (i, m) in messages.iter().enumerate() {
        match m.kind {
            Payload::Ack => {
                let got = first.get(&(m.sender, Payload::Msg, m.invocation));
                if !got.is_some_and(|&t| t <= m.send_time) {
                    out.push(AuditViolation::UnmatchedAck { message: i });
                }
            }
            Payload::Msg
                if first
                    .get(&(m.sender, Payload::Ack, m.invocation))
                    .is_some_and(|&t| m.send_time >= t) =>
            {
                out.push(AuditViolation::SendAfterAck { message: i });
            }
            _ => {}
        }
    }
}

/// Checks a single-mode trace. An empty result means the trace is clean.
/// Beyond the link checks this enforces that an `Ack` follows a receipt of
/// the message and that no `Msg` is sent once the sender holds an `Ack`.
pub fn audit_trace(trace: &RunTrace) -> Vec<AuditViolation> {
    let mut out = Vec::new();
    link_checks(
        &trace.messages,
        &trace.receipts,
        trace.tau,
        trace.t_p,
        trace.t_q,
        &mut out,
    );
    protocol_checks(&trace.messages, &trace.receipts, &mut out);
    if let At::Time(tf) = trace.t_f {
        let received = trace.receipts.iter().any(|r| {
            r.time == tf
                && r.process == Process::Q
                && trace.messages[r.message].kind == Payload::Msg
        });
        if !received || tf < trace.t_s + trace.tau {
            out.push(AuditViolation::FinishWithoutReceipt { time: tf });
        }
    }
    out
}

/// Same checks as [`audit_trace`], per invocation.
pub fn audit_repeated(trace: &RepeatedTrace) -> Vec<AuditViolation> {
    let mut out = Vec::new();
    link_checks(
        &trace.messages,
        &trace.receipts,
        trace.tau,
        trace.t_p,
        trace.t_q,
        &mut out,
    );
    protocol_checks(&trace.messages, &trace.receipts, &mut out);
    let first = first_receipts(&trace.messages, &trace.receipts);
    for inv in &trace.invocations {
        if let At::Time(tf) = inv.finish {
            let got = first.get(&(inv.sender.other(), Payload::Msg, Some(inv.id)));
            if got != Some(&tf) {
                out.push(AuditViolation::FinishWithoutReceipt { time: tf });
            }
        }
    }
    out
}
