//! Empirical checks of claims that have no finite closed form: the
//! completion-probability curve, growth signatures of expectations that
//! diverge, and the forced scenarios behind the impossibility argument.

use std::fmt;

use serde::Serialize;

use super::{map_runs, run_seeds, Moments};
use crate::cost::{sends_before, t_wait, t_wait_capped, Quantity};
use crate::engine::{run_single, run_single_with, At, Forcing, RunTrace};
use crate::model::{CostParams, ProtocolSpec, SystemParams};
use crate::protocols::uses_heartbeats;
use crate::{Error, Result};

/// One point of the completion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionPoint {
    pub t: u64,
    /// Runs in which both processes were up through tick `t - 1`.
    pub eligible: u64,
    /// Eligible runs in which the receiver finished before tick `t`.
    pub finished: u64,
    /// `None` when no run was eligible.
    pub p: Option<f64>,
    pub stderr: Option<f64>,
}

fn up_through(lifetime: At, t: u64) -> bool {
    t == 0 || lifetime.after(t - 1)
}

/// Estimates `Pr(receiver finished within t ticks | both processes up for
/// those t ticks)` for every `t` in `t_grid`.
pub fn completion_curve(
    protocol: &ProtocolSpec,
    params: &SystemParams,
    t_grid: &[u64],
    n_runs: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<CompletionPoint>> {
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "t_grid must be strictly increasing".into(),
        ));
    }
    let Some(&last) = t_grid.last() else {
        return Ok(Vec::new());
    };
    let horizon = last + 1;
    let runs = map_runs(&run_seeds(seed, n_runs), jobs, |s| {
        let tr = run_single(protocol, params, s, horizon);
        (tr.t_p, tr.t_q, tr.t_f)
    });
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (mut eligible, mut finished) = (0u64, 0u64);
            for &(t_p, t_q, t_f) in &runs {
                if up_through(t_p, t) && up_through(t_q, t) {
                    eligible += 1;
                    if t_f < t {
                        finished += 1;
                    }
                }
            }
            let p = (eligible > 0).then(|| finished as f64 / eligible as f64);
            CompletionPoint {
                t,
                eligible,
                finished,
                p,
                stderr: p.map(|p| (p * (1.0 - p) / eligible as f64).sqrt()),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GrowthVerdict {
    Divergent,
    Bounded,
    Inconclusive,
}

impl fmt::Display for GrowthVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthVerdict::Divergent => "DIVERGENT",
            GrowthVerdict::Bounded => "BOUNDED",
            GrowthVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub horizon: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / previous mean`.
    pub ratio: Option<f64>,
}

/// A truncated mean tabulated over increasing horizons. The verdict is a
/// heuristic: simulation can show a growth signature, not prove divergence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub quantity: &'static str,
    pub rows: Vec<GrowthRow>,
    pub threshold: f64,
    pub tolerance: f64,
    pub verdict: GrowthVerdict,
}

impl GrowthReport {
    fn build(
        quantity: &'static str,
        horizons: &[u64],
        per_run: &[Vec<f64>],
        threshold: f64,
        tolerance: f64,
    ) -> Self {
        let mut rows: Vec<GrowthRow> = Vec::with_capacity(horizons.len());
        for (i, &h) in horizons.iter().enumerate() {
            let m = Moments::from_values(per_run.iter().map(|v| v[i]));
            let mean = m.mean();
            let ratio = rows
                .last()
                .and_then(|r| (r.mean > 0.0).then(|| mean / r.mean));
            rows.push(GrowthRow {
                horizon: h,
                mean,
                stderr: m.stderr(),
                ratio,
            });
        }
        let ratios: Vec<Option<f64>> = rows.iter().skip(1).map(|r| r.ratio).collect();
        let flat = |r: &GrowthRow, prev: &GrowthRow| {
            (r.mean - prev.mean).abs() <= tolerance * prev.mean.abs()
        };
        let verdict =
            if !ratios.is_empty() && ratios.iter().all(|r| r.is_some_and(|r| r >= threshold)) {
                GrowthVerdict::Divergent
            } else if rows.len() >= 2 && flat(&rows[rows.len() - 1], &rows[rows.len() - 2]) {
                GrowthVerdict::Bounded
            } else {
                GrowthVerdict::Inconclusive
            };
        Self {
            quantity,
            rows,
            threshold,
            tolerance,
            verdict,
        }
    }
}

fn check_horizons(horizons: &[u64]) -> Result<u64> {
    if horizons.is_empty() || horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "horizons must be positive and strictly increasing".into(),
        ));
    }
    Ok(*horizons.last().unwrap())
}

/// Mean protocol sends before each horizon. Each seed is simulated once up
/// to the largest horizon, so all rows share the same runs.
pub fn divergence_probe(
    protocol: &ProtocolSpec,
    params: &SystemParams,
    horizons: &[u64],
    n_runs: usize,
    seed: u64,
    jobs: usize,
    threshold: f64,
) -> Result<GrowthReport> {
    let max = check_horizons(horizons)?;
    let per_run = map_runs(&run_seeds(seed, n_runs), jobs, |s| {
        let tr = run_single(protocol, params, s, max);
        horizons
            .iter()
            .map(|&h| sends_before(&tr, h) as f64)
            .collect::<Vec<_>>()
    });
    Ok(GrowthReport::build(
        "n_send", horizons, &per_run, threshold, 0.05,
    ))
}

/// Mean of `n_exp^wait` with the wait capped at each horizon.
#[allow(clippy::too_many_arguments)]
pub fn c1_growth(
    protocol: &ProtocolSpec,
    params: &SystemParams,
    costs: &CostParams,
    horizons: &[u64],
    n_runs: usize,
    seed: u64,
    jobs: usize,
    threshold: f64,
) -> Result<GrowthReport> {
    let max = check_horizons(horizons)?;
    let per_run = map_runs(&run_seeds(seed, n_runs), jobs, |s| {
        let tr = run_single(protocol, params, s, max);
        horizons
            .iter()
            .map(|&h| costs.n_exp.powf(wait_by(&tr, h) as f64))
            .collect::<Vec<_>>()
    });
    Ok(GrowthReport::build(
        "c1", horizons, &per_run, threshold, 0.05,
    ))
}

fn wait_by(tr: &RunTrace, h: u64) -> u64 {
    match t_wait(tr) {
        Quantity::Finite(w) => w.min(h),
        _ => t_wait_capped(tr).min(h),
    }
}

/// Outcome of one forced scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: &'static str,
    pub description: &'static str,
    /// No further protocol message was possible before the horizon.
    pub stopped: bool,
    pub stop_time: Option<u64>,
    pub sends: u64,
    pub heartbeats: u64,
    pub finished: bool,
    /// Waiting time, capped at the horizon.
    pub wait: u64,
    /// Sends still growing at the horizon, or a correct receiver that never
    /// finished.
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpossibilityReport {
    pub protocol: String,
    pub horizon: u64,
    /// End of the total-loss window in the third scenario.
    pub blackout_until: u64,
    pub scenarios: Vec<ScenarioReport>,
    pub any_unbounded: bool,
    /// Bounded everywhere because the heartbeat layer kept working.
    pub heartbeat_escape: bool,
    pub note: String,
}

fn scenario(name: &'static str, description: &'static str, tr: &RunTrace) -> ScenarioReport {
    let sends = tr.protocol_messages().count() as u64;
    let finished = !tr.t_f.is_never();
    let both_correct = tr.t_p.is_never() && tr.t_q.is_never();
    ScenarioReport {
        name,
        description,
        stopped: !tr.truncated,
        stop_time: tr.quiescent_at,
        sends,
        heartbeats: tr.messages.len() as u64 - sends,
        finished,
        wait: t_wait_capped(tr),
        unbounded: tr.truncated || (both_correct && !finished),
    }
}

/// Runs the three forced scenarios: receiver dead at 0 with a correct
/// sender, sender dead at 0 with a correct receiver, and both correct with
/// every message lost until one tick past the later of the first two stop
/// times (the horizon if either never stops).
pub fn impossibility_probe(
    protocol: &ProtocolSpec,
    params: &SystemParams,
    horizon: u64,
    seed: u64,
) -> Result<ImpossibilityReport> {
    if horizon < 1 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    let r1 = run_single_with(protocol, params, seed, horizon, &Forcing::receiver_dead());
    let r2 = run_single_with(protocol, params, seed, horizon, &Forcing::sender_dead());
    let blackout_until = match (r1.quiescent_at, r2.quiescent_at) {
        (Some(a), Some(b)) => (a.max(b) + 1).min(horizon),
        _ => horizon,
    };
    let r3 = run_single_with(
        protocol,
        params,
        seed,
        horizon,
        &Forcing::blackout(blackout_until),
    );
    let scenarios = vec![
        scenario(
            "receiver-dead",
            "receiver crashed at 0, sender correct",
            &r1,
        ),
        scenario("sender-dead", "sender crashed at 0, receiver correct", &r2),
        scenario(
            "blackout",
            "both correct, every message lost during the blackout",
            &r3,
        ),
    ];
    let any_unbounded = scenarios.iter().any(|s| s.unbounded);
    let hb = uses_heartbeats(protocol.kind);
    let heartbeat_escape = hb && !any_unbounded;
    let note = if heartbeat_escape {
        "bounded in every scenario: heartbeats, which the send count ignores, tell the sender when to stop".to_string()
    } else if any_unbounded {
        let names: Vec<&str> = scenarios
            .iter()
            .filter(|s| s.unbounded)
            .map(|s| s.name)
            .collect();
        format!("unbounded cost signature in {}", names.join(", "))
    } else {
        "no unbounded signature within the horizon".to_string()
    };
    Ok(ImpossibilityReport {
        protocol: protocol.kind.to_string(),
        horizon,
        blackout_until,
        scenarios,
        any_unbounded,
        heartbeat_escape,
        note,
    })
}
