//! Run records produced by the engine and their line-oriented serialization.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};

use crate::model::ProtocolKind;
use crate::protocols::Payload;

/// A point in simulated time, or never. `Never` orders after every time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum At {
    Time(u64),
    Never,
}

impl At {
    pub fn time(self) -> Option<u64> {
        match self {
            At::Time(t) => Some(t),
            At::Never => None,
        }
    }

    pub fn is_never(self) -> bool {
        self == At::Never
    }

    /// `true` if the event has not happened by (and including) `t`.
    pub fn after(self, t: u64) -> bool {
        self > At::Time(t)
    }
}

impl From<u64> for At {
    fn from(t: u64) -> Self {
        At::Time(t)
    }
}

impl PartialEq<u64> for At {
    fn eq(&self, other: &u64) -> bool {
        *self == At::Time(*other)
    }
}

impl PartialOrd<u64> for At {
    fn partial_cmp(&self, other: &u64) -> Option<Ordering> {
        Some(self.cmp(&At::Time(*other)))
    }
}

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            At::Time(t) => write!(f, "{t}"),
            At::Never => f.write_str("inf"),
        }
    }
}

impl Serialize for At {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            At::Time(t) => s.serialize_u64(*t),
            At::Never => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Process {
    #[serde(rename = "p")]
    P,
    #[serde(rename = "q")]
    Q,
}

impl Process {
    pub fn other(self) -> Process {
        match self {
            Process::P => Process::Q,
            Process::Q => Process::P,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Process::P => 0,
            Process::Q => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Process::P => "p",
            Process::Q => "q",
        }
    }
}

/// One transmission over the link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageRecord {
    pub sender: Process,
    pub kind: Payload,
    pub invocation: Option<u32>,
    pub send_time: u64,
    pub lost: bool,
    /// `send_time + tau` unless lost.
    pub deliver_time: Option<u64>,
}

/// A delivery that a live process acted on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub time: u64,
    pub process: Process,
    /// Index into the trace's message list.
    pub message: usize,
}

/// Full record of one single-invocation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub protocol: ProtocolKind,
    pub tau: u64,
    /// Invocation time; always 0 in single mode.
    pub t_s: u64,
    pub t_p: At,
    pub t_q: At,
    /// Time `q` finished RECEIVE.
    pub t_f: At,
    pub messages: Vec<MessageRecord>,
    pub receipts: Vec<Receipt>,
    pub horizon: u64,
    pub seed: u64,
    /// Horizon reached while the protocol could still send.
    pub truncated: bool,
    /// Tick at whose end no further protocol message was possible.
    pub quiescent_at: Option<u64>,
}

impl RunTrace {
    pub fn crash_time(&self, x: Process) -> At {
        match x {
            Process::P => self.t_p,
            Process::Q => self.t_q,
        }
    }

    /// Protocol (non-heartbeat) transmissions.
    pub fn protocol_messages(&self) -> impl Iterator<Item = &MessageRecord> {
        self.messages.iter().filter(|m| !m.kind.is_heartbeat())
    }

    /// Last tick the engine simulated.
    pub fn last_tick(&self) -> u64 {
        self.quiescent_at.unwrap_or(self.horizon.saturating_sub(1))
    }

    /// Serializes the run as one event per line:
    /// `time actor action kind invocation lost`.
    pub fn to_event_lines(&self) -> String {
        let end = self.last_tick();
        let mut crashes = Vec::new();
        for (x, at) in [(Process::P, self.t_p), (Process::Q, self.t_q)] {
            if let At::Time(t) = at {
                if t <= end {
                    crashes.push((t, x));
                }
            }
        }
        let finish = self.t_f.time().map(|t| (t, Process::Q));
        render_events(&self.messages, &self.receipts, &crashes, finish.into_iter())
    }
}

/// One invocation of the heartbeat protocol in repeated mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvocationRecord {
    pub id: u32,
    pub sender: Process,
    pub start: u64,
    /// First `Msg` receipt at the receiver.
    pub finish: At,
    /// `Msg` and `Ack` transmissions belonging to this invocation.
    pub sends: u64,
    pub last_send: Option<u64>,
    /// Waiting time relative to `start`, truncated at crashes and the horizon.
    pub wait: u64,
    /// No further message of this invocation is possible.
    pub complete: bool,
    /// Time the last message was sent (or `start` if none was).
    pub completion: Option<u64>,
}

/// Record of a repeated-invocation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatedTrace {
    pub tau: u64,
    pub t_p: At,
    pub t_q: At,
    pub invocations: Vec<InvocationRecord>,
    /// Heartbeats sent by `p` and `q`.
    pub hb_sent: [u64; 2],
    pub messages: Vec<MessageRecord>,
    pub receipts: Vec<Receipt>,
    pub horizon: u64,
    pub seed: u64,
    /// Tick after which nothing could happen any more, if reached early.
    pub stopped_at: Option<u64>,
}

impl RepeatedTrace {
    pub fn completed(&self) -> impl Iterator<Item = &InvocationRecord> {
        self.invocations.iter().filter(|i| i.complete)
    }

    pub fn total_heartbeats(&self) -> u64 {
        self.hb_sent[0] + self.hb_sent[1]
    }

    pub fn to_event_lines(&self) -> String {
        let end = self.stopped_at.unwrap_or(self.horizon.saturating_sub(1));
        let mut crashes = Vec::new();
        for (x, at) in [(Process::P, self.t_p), (Process::Q, self.t_q)] {
            if let At::Time(t) = at {
                if t <= end {
                    crashes.push((t, x));
                }
            }
        }
        let finishes = self
            .invocations
            .iter()
            .filter_map(|i| i.finish.time().map(|t| (t, i.sender.other(), i.id)));
        let invokes = self.invocations.iter().map(|i| (i.start, i.sender, i.id));
        render_repeated(&self.messages, &self.receipts, &crashes, finishes, invokes)
    }
}

// Phase order inside a tick: deliveries, crashes, then process actions.
const PH_RECV: u8 = 0;
const PH_CRASH: u8 = 1;
const PH_INVOKE: u8 = 2;
const PH_FINISH: u8 = 3;
const PH_SEND: u8 = 4;

struct Line {
    time: u64,
    phase: u8,
    text: String,
}

fn inv(i: Option<u32>) -> String {
    i.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn collect_lines(
    messages: &[MessageRecord],
    receipts: &[Receipt],
    crashes: &[(u64, Process)],
) -> Vec<Line> {
    let mut lines = Vec::with_capacity(messages.len() + receipts.len() + 4);
    for r in receipts {
        let m = &messages[r.message];
        lines.push(Line {
            time: r.time,
            phase: PH_RECV,
            text: format!(
                "{} {} recv {} {} 0",
                r.time,
                r.process.as_str(),
                m.kind,
                inv(m.invocation)
            ),
        });
    }
    for &(t, x) in crashes {
        lines.push(Line {
            time: t,
            phase: PH_CRASH,
            text: format!("{t} {} crash - - -", x.as_str()),
        });
    }
    for m in messages {
        lines.push(Line {
            time: m.send_time,
            phase: PH_SEND,
            text: format!(
                "{} {} send {} {} {}",
                m.send_time,
                m.sender.as_str(),
                m.kind,
                inv(m.invocation),
                u8::from(m.lost)
            ),
        });
    }
    lines
}

fn finish_lines(lines: Vec<Line>) -> String {
    let mut lines = lines;
    // stable: keeps engine order within a (time, phase) group
    lines.sort_by_key(|l| (l.time, l.phase));
    let mut out = String::new();
    for l in lines {
        let _ = writeln!(out, "{}", l.text);
    }
    out
}

fn render_events(
    messages: &[MessageRecord],
    receipts: &[Receipt],
    crashes: &[(u64, Process)],
    finishes: impl Iterator<Item = (u64, Process)>,
) -> String {
    let mut lines = collect_lines(messages, receipts, crashes);
    for (t, x) in finishes {
        lines.push(Line {
            time: t,
            phase: PH_FINISH,
            text: format!("{t} {} finish Msg 0 -", x.as_str()),
        });
    }
    finish_lines(lines)
}

fn render_repeated(
    messages: &[MessageRecord],
    receipts: &[Receipt],
    crashes: &[(u64, Process)],
    finishes: impl Iterator<Item = (u64, Process, u32)>,
    invokes: impl Iterator<Item = (u64, Process, u32)>,
) -> String {
    let mut lines = collect_lines(messages, receipts, crashes);
    for (t, x, id) in invokes {
        lines.push(Line {
            time: t,
            phase: PH_INVOKE,
            text: format!("{t} {} invoke - {id} -", x.as_str()),
        });
    }
    for (t, x, id) in finishes {
        lines.push(Line {
            time: t,
            phase: PH_FINISH,
            text: format!("{t} {} finish Msg {id} -", x.as_str()),
        });
    }
    finish_lines(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_orders_last() {
        assert!(At::Never > At::Time(u64::MAX));
        assert!(At::Time(3) < At::Time(4));
        assert_eq!(At::Time(3).min(At::Never), At::Time(3));
        assert!(At::Never.after(1_000_000));
        assert!(!At::Time(5).after(5));
        assert_eq!(serde_json::to_string(&At::Never).unwrap(), "\"inf\"");
        assert_eq!(At::Never.to_string(), "inf");
    }
}
