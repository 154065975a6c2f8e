//! Random variables read off traces, and the three cost functions.

use serde::{Serialize, Serializer};

use crate::engine::{At, RepeatedTrace, RunTrace};
use crate::model::CostParams;

/// A trace-derived quantity. `Censored` means the horizon cut the run off
/// before the value was determined; `Infinite` means it is known to be
/// unbounded (e.g. nobody ever crashes and the receiver never finishes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Finite(u64),
    Infinite,
    Censored,
}

impl Quantity {
    pub fn finite(self) -> Option<u64> {
        match self {
            Quantity::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Quantity::Finite(v) => s.serialize_u64(*v),
            Quantity::Infinite => s.serialize_str("inf"),
            Quantity::Censored => s.serialize_str("censored"),
        }
    }
}

/// A cost value with the same unresolved cases as [`Quantity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Value(f64),
    Infinite,
    Censored,
}

impl Cost {
    pub fn value(self) -> Option<f64> {
        match self {
            Cost::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cost::Value(v) => s.serialize_f64(*v),
            Cost::Infinite => s.serialize_str("inf"),
            Cost::Censored => s.serialize_str("censored"),
        }
    }
}

/// `#-send`, `t-wait` and the two single-invocation costs of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub num_sends: Quantity,
    pub wait: Quantity,
    pub c0: Cost,
    /// `n_exp^wait`; `f64::INFINITY` when the wait is unresolved or infinite.
    #[serde(serialize_with = "inf_as_string")]
    pub c1: f64,
}

fn inf_as_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl CostBreakdown {
    pub fn of(trace: &RunTrace, costs: &CostParams) -> Self {
        Self {
            num_sends: num_sends(trace),
            wait: t_wait(trace),
            c0: cost_c0(trace, costs),
            c1: cost_c1(trace, costs),
        }
    }
}

/// `max(min(t_p, t_q, t_f), t_s) - t_s`.
pub fn t_wait(trace: &RunTrace) -> Quantity {
    let end = trace.t_p.min(trace.t_q).min(trace.t_f);
    match end {
        // a finish could still happen between the horizon and the first crash
        At::Time(e) if trace.truncated && trace.t_f.is_never() && e >= trace.horizon => {
            Quantity::Censored
        }
        At::Time(e) => Quantity::Finite(e.max(trace.t_s) - trace.t_s),
        At::Never if trace.truncated => Quantity::Censored,
        At::Never => Quantity::Infinite,
    }
}

/// Waiting time with unresolved cases capped at the horizon.
pub fn t_wait_capped(trace: &RunTrace) -> u64 {
    match t_wait(trace) {
        Quantity::Finite(v) => v,
        _ => trace.horizon - trace.t_s,
    }
}

/// Protocol transmissions (`Msg`, `Ack`, `Req`); heartbeats are excluded.
pub fn num_sends(trace: &RunTrace) -> Quantity {
    if trace.truncated {
        Quantity::Censored
    } else {
        Quantity::Finite(trace.protocol_messages().count() as u64)
    }
}

/// Protocol transmissions sent strictly before `horizon`.
pub fn sends_before(trace: &RunTrace, horizon: u64) -> u64 {
    trace
        .protocol_messages()
        .filter(|m| m.send_time < horizon)
        .count() as u64
}

fn linear(sends: f64, wait: f64, costs: &CostParams) -> f64 {
    sends * costs.c_send + wait * costs.c_wait
}

/// `#-send * c_send + t-wait * c_wait`.
pub fn cost_c0(trace: &RunTrace, costs: &CostParams) -> Cost {
    match (num_sends(trace), t_wait(trace)) {
        (Quantity::Censored, _) | (_, Quantity::Censored) => Cost::Censored,
        (Quantity::Finite(n), Quantity::Finite(w)) => {
            Cost::Value(linear(n as f64, w as f64, costs))
        }
        (Quantity::Finite(n), Quantity::Infinite) if costs.c_wait == 0.0 => {
            Cost::Value(linear(n as f64, 0.0, costs))
        }
        _ => Cost::Infinite,
    }
}

/// `n_exp^t-wait`.
pub fn cost_c1(trace: &RunTrace, costs: &CostParams) -> f64 {
    match t_wait(trace) {
        Quantity::Finite(w) => exp_cost(costs.n_exp, w),
        _ => f64::INFINITY,
    }
}

/// `n_exp^wait` with the wait capped at the horizon.
pub fn cost_c1_capped(trace: &RunTrace, costs: &CostParams) -> f64 {
    exp_cost(costs.n_exp, t_wait_capped(trace))
}

fn exp_cost(base: f64, wait: u64) -> f64 {
    if wait > i32::MAX as u64 {
        return f64::INFINITY;
    }
    base.powi(wait as i32)
}

/// One sample of the running average cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgCostPoint {
    pub t: u64,
    pub c_total: f64,
    pub num_completed: u64,
    pub num_hb: u64,
    pub ratio: f64,
}

impl AvgCostPoint {
    pub const CSV_HEADER: &'static str = "t,c_total,num_completed,num_hb,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.t, self.c_total, self.num_completed, self.num_hb, self.ratio
        )
    }
}

/// Average cost per invocation over a repeated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvgCostSeries {
    pub points: Vec<AvgCostPoint>,
    /// Ratio after every event of the run.
    pub final_ratio: f64,
    /// Supremum of the ratio over the run.
    pub running_sup: f64,
}

impl AvgCostSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(AvgCostPoint::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&p.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Single-invocation cost of one repeated-mode invocation.
pub fn invocation_cost(sends: u64, wait: u64, costs: &CostParams) -> f64 {
    linear(sends as f64, wait as f64, costs)
}

fn walk(rt: &RepeatedTrace, costs: &CostParams, mut visit: impl FnMut(AvgCostPoint)) {
    let mut completions: Vec<(u64, f64)> = rt
        .completed()
        .map(|i| {
            (
                i.completion.unwrap(),
                invocation_cost(i.sends, i.wait, costs),
            )
        })
        .collect();
    completions.sort_by_key(|c| c.0);
    let mut hbs = rt
        .messages
        .iter()
        .filter(|m| m.kind.is_heartbeat())
        .map(|m| m.send_time)
        .peekable();
    let mut done = completions.into_iter().peekable();

    let (mut sr_cost, mut n, mut h) = (0.0, 0u64, 0u64);
    loop {
        let t = match (done.peek(), hbs.peek()) {
            (Some(&(a, _)), Some(&b)) => a.min(b),
            (Some(&(a, _)), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while let Some(&(a, c)) = done.peek() {
            if a != t {
                break;
            }
            sr_cost += c;
            n += 1;
            done.next();
        }
        while hbs.next_if(|&b| b == t).is_some() {
            h += 1;
        }
        let c_total = sr_cost + h as f64 * costs.c_send;
        visit(AvgCostPoint {
            t,
            c_total,
            num_completed: n,
            num_hb: h,
            ratio: c_total / (n + 1) as f64,
        });
    }
}

/// `c_total(t) / (#-SR(t) + 1)` sampled at every completion and heartbeat,
/// where `c_total` adds the cost of completed invocations to
/// `c_send` times the heartbeats sent so far.
pub fn avg_cost_series(rt: &RepeatedTrace, costs: &CostParams) -> AvgCostSeries {
    let mut points = Vec::new();
    walk(rt, costs, |p| points.push(p));
    let final_ratio = points.last().map_or(0.0, |p| p.ratio);
    let running_sup = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    AvgCostSeries {
        points,
        final_ratio,
        running_sup,
    }
}

/// `(final ratio, running sup)` without materializing the series.
pub fn avg_cost_summary(rt: &RepeatedTrace, costs: &CostParams) -> (f64, f64) {
    let (mut last, mut sup) = (0.0, 0.0f64);
    walk(rt, costs, |p| {
        last = p.ratio;
        sup = sup.max(p.ratio);
    });
    (last, sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{InvocationRecord, MessageRecord, Process};
    use crate::model::ProtocolKind;
    use crate::protocols::Payload;

    fn trace(t_p: At, t_q: At, t_f: At, sends: usize, truncated: bool) -> RunTrace {
        let messages = (0..sends)
            .map(|i| MessageRecord {
                sender: Process::P,
                kind: Payload::Msg,
                invocation: Some(0),
                send_time: i as u64,
                lost: true,
                deliver_time: None,
            })
            .collect();
        RunTrace {
            protocol: ProtocolKind::SenderDriven,
            tau: 1,
            t_s: 0,
            t_p,
            t_q,
            t_f,
            messages,
            receipts: Vec::new(),
            horizon: 100,
            seed: 0,
            truncated,
            quiescent_at: (!truncated).then_some(10),
        }
    }

    #[test]
    fn wait_formula() {
        assert_eq!(
            t_wait(&trace(At::Never, At::Never, At::Time(3), 0, false)),
            Quantity::Finite(3)
        );
        assert_eq!(
            t_wait(&trace(At::Time(5), At::Never, At::Never, 0, false)),
            Quantity::Finite(5)
        );
        assert_eq!(
            t_wait(&trace(At::Never, At::Never, At::Never, 0, false)),
            Quantity::Infinite
        );
        assert_eq!(
            t_wait(&trace(At::Never, At::Never, At::Never, 0, true)),
            Quantity::Censored
        );
        // crash after the horizon in a truncated run: unresolved
        assert_eq!(
            t_wait(&trace(At::Time(500), At::Never, At::Never, 0, true)),
            Quantity::Censored
        );
        // crash inside the horizon resolves a truncated run
        assert_eq!(
            t_wait(&trace(At::Time(50), At::Never, At::Never, 0, true)),
            Quantity::Finite(50)
        );
        assert_eq!(
            t_wait_capped(&trace(At::Never, At::Never, At::Never, 0, true)),
            100
        );
    }

    #[test]
    fn wait_relative_to_start() {
        let mut tr = trace(At::Time(4), At::Never, At::Never, 0, false);
        tr.t_s = 10;
        assert_eq!(t_wait(&tr), Quantity::Finite(0));
        tr.t_p = At::Time(13);
        assert_eq!(t_wait(&tr), Quantity::Finite(3));
    }

    #[test]
    fn c0_values() {
        let c = CostParams {
            c_send: 1.0,
            c_wait: 1.0,
            n_exp: 2.0,
        };
        assert_eq!(
            cost_c0(&trace(At::Never, At::Never, At::Time(3), 6, false), &c),
            Cost::Value(9.0)
        );
        let c = CostParams {
            c_send: 5.0,
            c_wait: 2.0,
            n_exp: 2.0,
        };
        assert_eq!(
            cost_c0(&trace(At::Time(49), At::Never, At::Never, 0, false), &c),
            Cost::Value(98.0)
        );
        assert_eq!(
            cost_c0(&trace(At::Never, At::Never, At::Never, 3, true), &c),
            Cost::Censored
        );
        assert_eq!(
            cost_c0(&trace(At::Never, At::Never, At::Never, 0, false), &c),
            Cost::Infinite
        );
    }

    #[test]
    fn c1_values() {
        let c = CostParams {
            c_send: 1.0,
            c_wait: 1.0,
            n_exp: 2.0,
        };
        assert_eq!(
            cost_c1(&trace(At::Never, At::Never, At::Time(3), 0, false), &c),
            8.0
        );
        assert_eq!(
            cost_c1(&trace(At::Never, At::Never, At::Time(0), 0, false), &c),
            1.0
        );
        assert_eq!(
            cost_c1(&trace(At::Never, At::Never, At::Never, 0, true), &c),
            f64::INFINITY
        );
    }

    fn repeated(invocations: Vec<InvocationRecord>, hb_times: &[u64]) -> RepeatedTrace {
        let messages = hb_times
            .iter()
            .map(|&t| MessageRecord {
                sender: Process::P,
                kind: Payload::Hbmsg,
                invocation: None,
                send_time: t,
                lost: false,
                deliver_time: Some(t + 1),
            })
            .collect();
        RepeatedTrace {
            tau: 1,
            t_p: At::Never,
            t_q: At::Never,
            invocations,
            hb_sent: [hb_times.len() as u64, 0],
            messages,
            receipts: Vec::new(),
            horizon: 100,
            seed: 0,
            stopped_at: None,
        }
    }

    #[test]
    fn avg_cost_without_invocations() {
        let c = CostParams {
            c_send: 3.0,
            c_wait: 1.0,
            n_exp: 2.0,
        };
        let s = avg_cost_series(&repeated(Vec::new(), &[0, 2, 4, 6]), &c);
        assert_eq!(s.points.len(), 4);
        assert_eq!(s.final_ratio, 12.0);
        assert_eq!(s.running_sup, 12.0);
    }

    #[test]
    fn avg_cost_with_one_invocation() {
        let c = CostParams {
            c_send: 1.0,
            c_wait: 2.0,
            n_exp: 2.0,
        };
        let inv = InvocationRecord {
            id: 0,
            sender: Process::P,
            start: 1,
            finish: At::Time(4),
            sends: 4,
            last_send: Some(7),
            wait: 3,
            complete: true,
            completion: Some(7),
        };
        // Z = 4 + 3 * 2 = 10, h = 3 heartbeats
        let s = avg_cost_series(&repeated(vec![inv], &[0, 5, 10]), &c);
        assert_eq!(s.final_ratio, (10.0 + 3.0) / 2.0);
        let p7 = s.points.iter().find(|p| p.t == 7).unwrap();
        assert_eq!(p7.num_completed, 1);
        assert_eq!(p7.num_hb, 2);
        assert_eq!(
            avg_cost_summary(&repeated(Vec::new(), &[0, 5]), &c),
            (2.0, 2.0)
        );
        assert!(s
            .to_csv()
            .starts_with("t,c_total,num_completed,num_hb,ratio\n0,"));
    }
}
