//! First-order predictions for small crash and loss rates.

use serde::Serialize;

use crate::model::{CostParams, SystemParams};
use crate::{Error, Result};

pub fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Expected waiting time and send count of one invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub t_wait: f64,
    pub n_send: f64,
}

impl Prediction {
    pub fn c0(&self, costs: &CostParams) -> f64 {
        self.n_send * costs.c_send + self.t_wait * costs.c_wait
    }
}

/// Predictions for the three protocols without a failure detector, valid
/// when neither process is correct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoDetectorPredictions {
    pub trivial: Prediction,
    pub sender: Prediction,
    pub receiver: Prediction,
}

/// Requires `alpha_p = alpha_q = 0`.
pub fn no_detector_predictions(params: &SystemParams) -> Result<NoDetectorPredictions> {
    if params.alpha_p != 0.0 || params.alpha_q != 0.0 {
        return Err(Error::Precondition(format!(
            "the trivial/sender/receiver predictions require alpha_p = alpha_q = 0 (got {}, {})",
            params.alpha_p, params.alpha_q
        )));
    }
    let beta = params.combined_crash_rate();
    let (tau, delta) = (params.tau as f64, params.delta as f64);
    let handshake = 2.0 * ceil_div(2 * params.tau, params.delta) as f64;
    Ok(NoDetectorPredictions {
        trivial: Prediction {
            t_wait: (1.0 - beta) / beta,
            n_send: 0.0,
        },
        sender: Prediction {
            t_wait: tau,
            n_send: (tau + 1.0) * params.beta_q / (delta * params.beta_p) + handshake,
        },
        receiver: Prediction {
            t_wait: 2.0 * tau,
            n_send: (tau + 1.0) * params.beta_p / (delta * params.beta_q) + handshake,
        },
    })
}

/// Heartbeat protocol: one round trip of waiting, and `ceil(2 tau / delta)`
/// messages in each direction.
pub fn heartbeat_prediction(params: &SystemParams) -> Prediction {
    Prediction {
        t_wait: 2.0 * params.tau as f64,
        n_send: 2.0 * ceil_div(2 * params.tau, params.delta) as f64,
    }
}

/// Per-invocation protocol cost of the heartbeat protocol in repeated mode:
/// `2 ceil(2 tau / delta) c_send + (tau + (delta - 1) / 2) c_wait`.
pub fn z_cost(params: &SystemParams, costs: &CostParams) -> f64 {
    let tau = params.tau as f64;
    2.0 * ceil_div(2 * params.tau, params.delta) as f64 * costs.c_send
        + (tau + (params.delta as f64 - 1.0) / 2.0) * costs.c_wait
}

/// Heartbeat share of the average cost, `c_send / (delta sigma)`.
pub fn hb_term(params: &SystemParams, costs: &CostParams) -> f64 {
    costs.c_send / (params.delta as f64 * params.sigma)
}

/// `(1 - alpha_p)(1 - alpha_q) lambda + alpha_p alpha_q`. `lambda` is only
/// needed when both processes can crash.
pub fn crash_regime_coefficient(params: &SystemParams, lambda: Option<f64>) -> Result<f64> {
    let mixed = (1.0 - params.alpha_p) * (1.0 - params.alpha_q);
    let both = params.alpha_p * params.alpha_q;
    if mixed == 0.0 {
        return Ok(both);
    }
    match lambda {
        Some(l) if l > 0.0 && l < 1.0 => Ok(mixed * l + both),
        Some(l) => Err(Error::Precondition(format!(
            "lambda must be in (0, 1), got {l}"
        ))),
        None => Err(Error::Precondition(
            "lambda is required when both processes may crash".into(),
        )),
    }
}

/// Expected average cost per invocation in repeated mode.
pub fn avg_cost_prediction(
    params: &SystemParams,
    costs: &CostParams,
    lambda: Option<f64>,
) -> Result<f64> {
    if !(params.sigma > 0.0) {
        return Err(Error::Precondition(
            "sigma must be > 0 for the average cost".into(),
        ));
    }
    Ok(crash_regime_coefficient(params, lambda)? * z_cost(params, costs) + hb_term(params, costs))
}
