//! Repeated-mode analysis of the heartbeat protocol: the crash-regime
//! constant and the choice of heartbeat period.

use serde::Serialize;

use super::closed_form::{avg_cost_prediction, hb_term, z_cost};
use super::estimate::{EstimateReport, Estimator, Metric};
use crate::model::{CostParams, ProtocolSpec, SystemParams};
use crate::{Error, Result};

/// Below this many completed invocations per run the estimate is dominated
/// by the heartbeat term and the `+1` in the denominator.
const LOW_INVOCATIONS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaReport {
    pub lambda_hat: f64,
    pub ci95: [f64; 2],
    /// `lambda_hat` clamped to `[0, 1]`.
    pub clamped: f64,
    pub z: f64,
    pub hb_term: f64,
    /// The interval does not meet `[0, 1]`.
    pub inconsistent: bool,
    pub low_invocations: bool,
    /// Crash and loss rates small enough for the prediction to apply.
    pub in_regime: bool,
    pub c_avg: EstimateReport,
}

/// `(mean c_avg - c_send / (delta sigma)) / Z` for two faulty processes.
pub fn estimate_lambda(
    params: &SystemParams,
    costs: &CostParams,
    est: &Estimator,
) -> Result<LambdaReport> {
    if params.alpha_p != 0.0 || params.alpha_q != 0.0 {
        return Err(Error::Precondition(format!(
            "lambda estimation requires alpha_p = alpha_q = 0 (got {}, {})",
            params.alpha_p, params.alpha_q
        )));
    }
    let z = z_cost(params, costs);
    if !(z > 0.0) {
        return Err(Error::Precondition(
            "Z must be > 0: c_send and c_wait are both zero".into(),
        ));
    }
    let est = Estimator {
        lambda: None,
        ..*est
    };
    let c_avg = est.estimate(&ProtocolSpec::srhb(), params, costs, Metric::CAvg)?;
    let hb = hb_term(params, costs);
    let lambda_hat = (c_avg.mean - hb) / z;
    let ci95 = [(c_avg.ci95[0] - hb) / z, (c_avg.ci95[1] - hb) / z];
    Ok(LambdaReport {
        lambda_hat,
        ci95,
        clamped: lambda_hat.clamp(0.0, 1.0),
        z,
        hb_term: hb,
        inconsistent: ci95[1] < 0.0 || ci95[0] > 1.0,
        low_invocations: c_avg.mean_invocations.unwrap_or(0.0) < LOW_INVOCATIONS,
        in_regime: est.in_regime(params),
        c_avg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub delta_star: u64,
    pub cost_star: f64,
    /// `(delta, predicted average cost)` over the whole range.
    pub curve: Vec<(u64, f64)>,
}

/// Minimizes the predicted average cost over `deltas`; ties go to the
/// smaller period.
pub fn optimize_delta(
    params: &SystemParams,
    costs: &CostParams,
    lambda: Option<f64>,
    deltas: &[u64],
) -> Result<OptimizeReport> {
    if deltas.is_empty() {
        return Err(Error::Precondition("delta range is empty".into()));
    }
    if deltas.contains(&0) {
        return Err(Error::Precondition("delta must be >= 1".into()));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let curve = sorted
        .iter()
        .map(|&delta| {
            Ok((
                delta,
                avg_cost_prediction(&SystemParams { delta, ..*params }, costs, lambda)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (delta_star, cost_star) = curve
        .iter()
        .copied()
        .fold(None, |best: Option<(u64, f64)>, (d, c)| match best {
            Some((_, bc)) if bc <= c => best,
            _ => Some((d, c)),
        })
        .unwrap();
    Ok(OptimizeReport {
        delta_star,
        cost_star,
        curve,
    })
}
