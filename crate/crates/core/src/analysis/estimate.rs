//! Monte Carlo estimation of one metric, with the matching prediction
//! attached when the parameters are in its small-rate regime.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::closed_form::{avg_cost_prediction, heartbeat_prediction, no_detector_predictions};
use super::{map_runs, run_seeds, Moments};
use crate::cost::{avg_cost_summary, cost_c0, cost_c1, num_sends, t_wait, Cost, Quantity};
use crate::engine::{run_repeated, run_single};
use crate::model::{validate, validate_c1, CostParams, ProtocolKind, ProtocolSpec, SystemParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TWait,
    NSend,
    C0,
    C1,
    CAvg,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::TWait,
        Metric::NSend,
        Metric::C0,
        Metric::C1,
        Metric::CAvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TWait => "t_wait",
            Metric::NSend => "n_send",
            Metric::C0 => "c0",
            Metric::C1 => "c1",
            Metric::CAvg => "c_avg",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NoPrediction,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NoPrediction => "NO-PREDICTION",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub protocol: ProtocolKind,
    pub metric: Metric,
    pub n_runs: usize,
    /// Runs that entered the mean.
    pub n_used: u64,
    pub censored: usize,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub closed_form: Option<f64>,
    pub rel_dev: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Mean number of completed invocations per run (average cost only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_invocations: Option<f64>,
}

impl EstimateReport {
    pub fn moments_line(&self) -> String {
        format!(
            "{} {} mean={} stderr={} n={} censored={}",
            self.protocol, self.metric, self.mean, self.stderr, self.n_used, self.censored
        )
    }
}

/// Run-count, horizon and seeding settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Estimator {
    pub n_runs: usize,
    pub horizon: u64,
    pub seed: u64,
    /// Worker threads; 0 means all cores.
    #[serde(skip)]
    pub jobs: usize,
    /// Predictions attach only when every relevant rate is at most this.
    pub epsilon_gate: f64,
    /// Relative deviation accepted as PASS.
    pub tolerance: f64,
    /// Crash-regime constant for the average-cost prediction.
    pub lambda: Option<f64>,
}

impl Default for Estimator {
    fn default() -> Self {
        Self {
            n_runs: 10_000,
            horizon: 100_000,
            seed: 0,
            jobs: 0,
            epsilon_gate: 1e-2,
            tolerance: 0.05,
            lambda: None,
        }
    }
}

enum Sample {
    Value(f64, u64),
    Censored,
}

impl Estimator {
    pub fn new(n_runs: usize, horizon: u64, seed: u64) -> Self {
        Self {
            n_runs,
            horizon,
            seed,
            ..Self::default()
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        run_seeds(self.seed, self.n_runs)
    }

    /// Whether the crash and loss rates are small enough for the first-order
    /// predictions. Crash rates of correct processes are irrelevant.
    pub fn in_regime(&self, params: &SystemParams) -> bool {
        let eps = self.epsilon_gate;
        (params.alpha_p >= 1.0 || params.beta_p <= eps)
            && (params.alpha_q >= 1.0 || params.beta_q <= eps)
            && params.gamma <= eps
    }

    /// The prediction for `metric`, if one applies to these parameters.
    pub fn prediction(
        &self,
        protocol: &ProtocolSpec,
        params: &SystemParams,
        costs: &CostParams,
        metric: Metric,
    ) -> Option<f64> {
        if !self.in_regime(params) {
            return None;
        }
        let single = |p: super::Prediction| match metric {
            Metric::TWait => Some(p.t_wait),
            Metric::NSend => Some(p.n_send),
            Metric::C0 => Some(p.c0(costs)),
            _ => None,
        };
        match (protocol.kind, metric) {
            (_, Metric::C1) => None,
            (ProtocolKind::SrHb, Metric::CAvg) => {
                avg_cost_prediction(params, costs, self.lambda).ok()
            }
            (_, Metric::CAvg) => None,
            (ProtocolKind::SrHb, _) => single(heartbeat_prediction(params)),
            (ProtocolKind::Pathological, _) => None,
            (kind, _) => {
                let p = no_detector_predictions(params).ok()?;
                single(match kind {
                    ProtocolKind::Trivial => p.trivial,
                    ProtocolKind::SenderDriven => p.sender,
                    _ => p.receiver,
                })
            }
        }
    }

    /// Estimates `E(metric)` over `n_runs` independent runs. Censored runs are
    /// excluded from the mean and counted.
    pub fn estimate(
        &self,
        protocol: &ProtocolSpec,
        params: &SystemParams,
        costs: &CostParams,
        metric: Metric,
    ) -> Result<EstimateReport> {
        if self.n_runs < 2 {
            return Err(Error::Precondition(format!(
                "n_runs must be >= 2, got {}",
                self.n_runs
            )));
        }
        if self.horizon < 1 {
            return Err(Error::Precondition("horizon must be >= 1".into()));
        }
        let mut violations = validate(params, costs);
        violations.extend(protocol.violations());
        if metric == Metric::C1 {
            violations.extend(validate_c1(params, costs));
        }
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        if metric == Metric::CAvg {
            if protocol.kind != ProtocolKind::SrHb {
                return Err(Error::Precondition(format!(
                    "average cost is defined for the heartbeat protocol only, not {}",
                    protocol.kind
                )));
            }
            if !(params.sigma > 0.0) {
                return Err(Error::Precondition(
                    "average cost requires sigma > 0".into(),
                ));
            }
        }

        let horizon = self.horizon;
        let samples = map_runs(&self.seeds(), self.jobs, |seed| {
            if metric == Metric::CAvg {
                let rt = run_repeated(params, seed, horizon);
                let (ratio, _) = avg_cost_summary(&rt, costs);
                return Sample::Value(ratio, rt.completed().count() as u64);
            }
            let trace = run_single(protocol, params, seed, horizon);
            let q = match metric {
                Metric::TWait => quantity(t_wait(&trace)),
                Metric::NSend => quantity(num_sends(&trace)),
                Metric::C0 => match cost_c0(&trace, costs) {
                    Cost::Value(v) => Some(v),
                    _ => None,
                },
                Metric::C1 => Some(cost_c1(&trace, costs)).filter(|v| v.is_finite()),
                Metric::CAvg => unreachable!(),
            };
            q.map_or(Sample::Censored, |v| Sample::Value(v, 0))
        });

        let mut m = Moments::default();
        let (mut censored, mut invocations) = (0, 0u64);
        for s in &samples {
            match *s {
                Sample::Value(v, k) => {
                    m.push(v);
                    invocations += k;
                }
                Sample::Censored => censored += 1,
            }
        }
        if m.n == 0 {
            return Err(Error::Precondition(format!(
                "all {} runs were censored at horizon {horizon} or infinite",
                self.n_runs
            )));
        }

        let mean = m.mean();
        let closed_form = self.prediction(protocol, params, costs, metric);
        let rel_dev = closed_form.map(|cf| {
            if cf == 0.0 {
                mean.abs()
            } else {
                ((mean - cf) / cf).abs()
            }
        });
        let verdict = match rel_dev {
            None => Verdict::NoPrediction,
            Some(d) if d <= self.tolerance => Verdict::Pass,
            Some(_) => Verdict::Fail,
        };
        Ok(EstimateReport {
            protocol: protocol.kind,
            metric,
            n_runs: self.n_runs,
            n_used: m.n,
            censored,
            mean,
            stderr: m.stderr(),
            ci95: m.ci95(),
            closed_form,
            rel_dev,
            tolerance: self.tolerance,
            verdict,
            mean_invocations: (metric == Metric::CAvg).then(|| invocations as f64 / m.n as f64),
        })
    }
}

fn quantity(q: Quantity) -> Option<f64> {
    q.finite().map(|v| v as f64)
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

    #[test]
    fn deterministic_sender_has_zero_stderr() {
        let est = Estimator::new(50, 1000, 3);
        let r = est
            .estimate(
                &ProtocolSpec::sender_driven(),
                &ideal(3, 2),
                &CostParams::default(),
                Metric::NSend,
            )
            .unwrap();
        assert_eq!(r.mean, 6.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.censored, 0);
        // alpha = 1 is outside the faulty-process hypothesis
        assert_eq!(r.verdict, Verdict::NoPrediction);
    }

    #[test]
    fn heartbeat_prediction_attaches_for_correct_processes() {
        let est = Estimator::new(20, 1000, 3);
        let r = est
            .estimate(
                &ProtocolSpec::srhb(),
                &ideal(4, 3),
                &CostParams::default(),
                Metric::TWait,
            )
            .unwrap();
        assert_eq!(r.mean, 8.0);
        assert_eq!(r.closed_form, Some(8.0));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn gate_blocks_large_rates() {
        let mut p = ideal(4, 3);
        p.alpha_p = 0.0;
        p.alpha_q = 0.0;
        p.beta_p = 0.3;
        p.beta_q = 0.3;
        let est = Estimator::new(20, 1000, 3);
        let r = est
            .estimate(
                &ProtocolSpec::trivial(),
                &p,
                &CostParams::default(),
                Metric::TWait,
            )
            .unwrap();
        assert_eq!(r.verdict, Verdict::NoPrediction);
    }

    #[test]
    fn refusals() {
        let est = Estimator::new(1, 1000, 3);
        assert!(est
            .estimate(
                &ProtocolSpec::trivial(),
                &ideal(2, 2),
                &CostParams::default(),
                Metric::TWait
            )
            .is_err());
        let est = Estimator::new(10, 1000, 3);
        // nobody crashes and nothing is sent: every wait is infinite
        let err = est
            .estimate(
                &ProtocolSpec::trivial(),
                &ideal(2, 2),
                &CostParams::default(),
                Metric::TWait,
            )
            .unwrap_err();
        assert!(err.to_string().contains("censored"));
        assert!(est
            .estimate(
                &ProtocolSpec::sender_driven(),
                &ideal(2, 2),
                &CostParams::default(),
                Metric::CAvg
            )
            .is_err());
        let mut bad = ideal(2, 2);
        bad.gamma = 1.0;
        assert!(matches!(
            est.estimate(
                &ProtocolSpec::srhb(),
                &bad,
                &CostParams::default(),
                Metric::TWait
            ),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn thread_count_does_not_change_report() {
        let p = SystemParams {
            alpha_p: 0.0,
            alpha_q: 0.0,
            beta_p: 0.01,
            beta_q: 0.02,
            gamma: 0.1,
            tau: 3,
            delta: 2,
            sigma: 0.0,
        };
        let mut est = Estimator::new(500, 10_000, 11);
        est.jobs = 1;
        let a = est
            .estimate(
                &ProtocolSpec::sender_driven(),
                &p,
                &CostParams::default(),
                Metric::C0,
            )
            .unwrap();
        est.jobs = 3;
        let b = est
            .estimate(
                &ProtocolSpec::sender_driven(),
                &p,
                &CostParams::default(),
                Metric::C0,
            )
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.name())
            );
        }
    }
}
