//! Model parameters for the two-process system and the cost functions.
//!
//! Everything here is a plain value type. Validation reports violations as
//! data so that config loaders can print all of them at once.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Stochastic parameters of the system: crash process, link and heartbeat
/// layer, plus the invocation rate used in repeated mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Probability that the sender `p` never crashes.
    pub alpha_p: f64,
    /// Probability that the receiver `q` never crashes.
    pub alpha_q: f64,
    /// Per-tick crash probability of `p` when it is not correct.
    pub beta_p: f64,
    /// Per-tick crash probability of `q` when it is not correct.
    pub beta_q: f64,
    /// Independent per-message loss probability.
    pub gamma: f64,
    /// Link delay in ticks.
    pub tau: u64,
    /// Heartbeat / retransmission period in ticks.
    pub delta: u64,
    /// Per-tick invocation probability (repeated mode only).
    #[serde(default)]
    pub sigma: f64,
}

/// Utility constants. Costs are non-negative magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub c_send: f64,
    pub c_wait: f64,
    /// Base `N` of the exponential waiting cost `N^t-wait`.
    #[serde(default = "default_n_exp")]
    pub n_exp: f64,
}

fn default_n_exp() -> f64 {
    2.0
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            c_send: 1.0,
            c_wait: 1.0,
            n_exp: default_n_exp(),
        }
    }
}

/// One violated bound on a parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn unit_closed(out: &mut Vec<Violation>, field: &'static str, v: f64) {
    if !(0.0..=1.0).contains(&v) {
        out.push(Violation::new(
            field,
            format!("{field} must be in [0, 1], got {v}"),
        ));
    }
}

fn rate(out: &mut Vec<Violation>, field: &'static str, v: f64) {
    if v.is_nan() || v <= 0.0 {
        out.push(Violation::new(
            field,
            format!("{field} must be > 0, got {v}"),
        ));
    } else if v > 1.0 {
        out.push(Violation::new(
            field,
            format!("{field} must be <= 1, got {v}"),
        ));
    }
}

impl SystemParams {
    /// Probability that at least one of the two processes crashes in a given
    /// round when both are faulty: `beta_p + beta_q - beta_p * beta_q`.
    pub fn combined_crash_rate(&self) -> f64 {
        self.beta_p + self.beta_q - self.beta_p * self.beta_q
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        unit_closed(&mut out, "alpha_p", self.alpha_p);
        unit_closed(&mut out, "alpha_q", self.alpha_q);
        rate(&mut out, "beta_p", self.beta_p);
        rate(&mut out, "beta_q", self.beta_q);
        if self.gamma.is_nan() || self.gamma < 0.0 {
            out.push(Violation::new(
                "gamma",
                format!("gamma must be >= 0, got {}", self.gamma),
            ));
        } else if self.gamma >= 1.0 {
            out.push(Violation::new(
                "gamma",
                format!("gamma must be < 1, got {}", self.gamma),
            ));
        }
        if self.tau < 1 {
            out.push(Violation::new("tau", "tau must be >= 1"));
        }
        if self.delta < 1 {
            out.push(Violation::new("delta", "delta must be >= 1"));
        }
        unit_closed(&mut out, "sigma", self.sigma);
        out
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    /// `true` when neither process can crash.
    pub fn crash_free(&self) -> bool {
        self.alpha_p == 1.0 && self.alpha_q == 1.0
    }
}

impl CostParams {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (field, v) in [("c_send", self.c_send), ("c_wait", self.c_wait)] {
            if !(v >= 0.0) || !v.is_finite() {
                out.push(Violation::new(
                    field,
                    format!("{field} must be a finite value >= 0, got {v}"),
                ));
            }
        }
        if !(self.n_exp > 1.0) {
            out.push(Violation::new(
                "n_exp",
                format!("n_exp must be > 1, got {}", self.n_exp),
            ));
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Checks every type invariant of both parameter sets. An empty list means
/// the combination is legal.
pub fn validate(params: &SystemParams, costs: &CostParams) -> Vec<Violation> {
    let mut out = params.violations();
    out.extend(costs.violations());
    out
}

/// Extra condition needed before the exponential cost `c1` is analysed:
/// `n_exp * (1 - beta_p) * (1 - beta_q) > 1`.
pub fn validate_c1(params: &SystemParams, costs: &CostParams) -> Vec<Violation> {
    let survive = (1.0 - params.beta_p) * (1.0 - params.beta_q);
    if costs.n_exp * survive > 1.0 {
        Vec::new()
    } else {
        vec![Violation::new(
            "n_exp",
            format!(
                "n_exp * (1 - beta_p) * (1 - beta_q) must be > 1, got {}",
                costs.n_exp * survive
            ),
        )]
    }
}

/// The five protocol families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Trivial,
    #[serde(rename = "sender")]
    SenderDriven,
    #[serde(rename = "receiver")]
    ReceiverDriven,
    #[serde(rename = "srhb")]
    SrHb,
    Pathological,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Trivial,
        ProtocolKind::SenderDriven,
        ProtocolKind::ReceiverDriven,
        ProtocolKind::SrHb,
        ProtocolKind::Pathological,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Trivial => "trivial",
            ProtocolKind::SenderDriven => "sender",
            ProtocolKind::ReceiverDriven => "receiver",
            ProtocolKind::SrHb => "srhb",
            ProtocolKind::Pathological => "pathological",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown protocol {s:?}")))
    }
}

/// Selects one protocol state machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Acknowledgement delay base for the pathological protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_base: Option<f64>,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            ack_base: None,
        }
    }

    pub fn trivial() -> Self {
        Self::new(ProtocolKind::Trivial)
    }

    pub fn sender_driven() -> Self {
        Self::new(ProtocolKind::SenderDriven)
    }

    pub fn receiver_driven() -> Self {
        Self::new(ProtocolKind::ReceiverDriven)
    }

    pub fn srhb() -> Self {
        Self::new(ProtocolKind::SrHb)
    }

    pub fn pathological(ack_base: f64) -> Self {
        Self {
            kind: ProtocolKind::Pathological,
            ack_base: Some(ack_base),
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        match (self.kind, self.ack_base) {
            (ProtocolKind::Pathological, None) => {
                vec![Violation::new(
                    "ack_base",
                    "pathological protocol requires ack_base",
                )]
            }
            (ProtocolKind::Pathological, Some(n)) if !(n > 1.0) => {
                vec![Violation::new(
                    "ack_base",
                    format!("ack_base must be > 1, got {n}"),
                )]
            }
            _ => Vec::new(),
        }
    }

    /// Whether `ack_base * gamma > 1`, the regime where the pathological
    /// protocol's expected send count diverges.
    pub fn diverges_under(&self, params: &SystemParams) -> bool {
        matches!(self.ack_base, Some(n) if self.kind == ProtocolKind::Pathological && n * params.gamma > 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn legal() -> SystemParams {
        SystemParams {
            alpha_p: 0.0,
            alpha_q: 0.0,
            beta_p: 0.01,
            beta_q: 0.01,
            gamma: 0.001,
            tau: 3,
            delta: 2,
            sigma: 0.0,
        }
    }

    #[test]
    fn legal_params_have_no_violations() {
        assert!(validate(&legal(), &CostParams::default()).is_empty());
    }

    #[test]
    fn gamma_one_rejected() {
        let p = SystemParams {
            gamma: 1.0,
            ..legal()
        };
        let v = p.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "gamma");
        assert!(v[0].message.contains("gamma must be < 1"));
    }

    #[test]
    fn zero_beta_rejected() {
        let p = SystemParams {
            beta_p: 0.0,
            ..legal()
        };
        let v = p.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("beta_p must be > 0"));
    }

    #[test]
    fn zero_period_and_delay_rejected() {
        let p = SystemParams {
            tau: 0,
            delta: 0,
            ..legal()
        };
        let fields: Vec<_> = p.violations().iter().map(|v| v.field).collect();
        assert_eq!(fields, vec!["tau", "delta"]);
    }

    #[test]
    fn combined_rate_values() {
        let p = legal();
        assert!((p.combined_crash_rate() - 0.0199).abs() < 1e-15);
        let b = SystemParams {
            beta_p: 1.0,
            beta_q: 1.0,
            ..legal()
        };
        assert_eq!(b.combined_crash_rate(), 1.0);
    }

    #[test]
    fn c1_condition() {
        let p = legal();
        let mut c = CostParams::default();
        assert!(validate_c1(&p, &c).is_empty());
        c.n_exp = 1.01;
        assert_eq!(validate_c1(&p, &c).len(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"alpha_p":0,"alpha_q":0,"beta_p":0.1,"beta_q":0.1,"gamma":0,"tau":1,"delta":1,"gama":0.2}"#;
        assert!(SystemParams::from_json(text).is_err());
        let ok =
            r#"{"alpha_p":0,"alpha_q":0,"beta_p":0.1,"beta_q":0.1,"gamma":0,"tau":1,"delta":1}"#;
        assert_eq!(SystemParams::from_json(ok).unwrap().sigma, 0.0);
    }

    #[test]
    fn protocol_names_round_trip() {
        for k in ProtocolKind::ALL {
            assert_eq!(k.name().parse::<ProtocolKind>().unwrap(), k);
            let js = serde_json::to_string(&k).unwrap();
            assert_eq!(js, format!("\"{}\"", k.name()));
        }
        assert!("sdrc".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn pathological_needs_base() {
        assert_eq!(
            ProtocolSpec::new(ProtocolKind::Pathological)
                .violations()
                .len(),
            1
        );
        let spec = ProtocolSpec::pathological(2.0);
        assert!(spec.violations().is_empty());
        assert!(spec.diverges_under(&SystemParams {
            gamma: 0.75,
            ..legal()
        }));
        assert!(!spec.diverges_under(&SystemParams {
            gamma: 0.25,
            ..legal()
        }));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn combined_rate_symmetric_and_bounded(a in 1e-9f64..=1.0, b in 1e-9f64..=1.0) {
            let p = SystemParams { alpha_p: 0.0, alpha_q: 0.0, beta_p: a, beta_q: b, gamma: 0.0, tau: 1, delta: 1, sigma: 0.0 };
            let q = SystemParams { beta_p: b, beta_q: a, ..p };
            let r = p.combined_crash_rate();
            prop_assert!((r - q.combined_crash_rate()).abs() < 1e-15);
            prop_assert!(r >= a.max(b) - 1e-15);
            prop_assert!(r <= 1.0 + 1e-15);
        }

        #[test]
        fn validate_is_pure(g in -0.5f64..1.5, b in -0.5f64..1.5) {
            let p = SystemParams { alpha_p: 0.5, alpha_q: 0.5, beta_p: b, beta_q: 0.1, gamma: g, tau: 2, delta: 2, sigma: 0.0 };
            let c = CostParams::default();
            prop_assert_eq!(validate(&p, &c), validate(&p, &c));
        }
    }
}
