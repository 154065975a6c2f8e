//! JSON-configured experiments. Each command turns one config into a set of
//! named output files; nothing here touches the filesystem except
//! [`Outputs::write_to`] and [`ExperimentConfig::load`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    c1_growth, completion_curve, divergence_probe, estimate_lambda, impossibility_probe,
    optimize_delta, EstimateReport, Estimator, GrowthReport, Metric, Verdict,
};
use crate::cost::{avg_cost_series, CostBreakdown};
use crate::engine::{run_repeated, run_single};
use crate::model::{
    validate, validate_c1, CostParams, ProtocolKind, ProtocolSpec, SystemParams, Violation,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Compare,
    S2,
    Probe,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::S2 => "s2",
            Command::Probe => "probe",
            Command::Optimize => "optimize",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Command::Simulate,
            Command::Compare,
            Command::S2,
            Command::Probe,
            Command::Optimize,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Single,
    Repeated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Divergence,
    Impossibility,
    C1,
}

/// Either an explicit list of periods or an inclusive span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaRange {
    Span { from: u64, to: u64 },
    List(Vec<u64>),
}

impl DeltaRange {
    pub fn values(&self) -> Vec<u64> {
        match self {
            DeltaRange::Span { from, to } => (*from..=*to).collect(),
            DeltaRange::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative deviation accepted between a mean and its prediction.
    pub relative: f64,
    pub epsilon_gate: f64,
    /// Minimum per-step growth ratio for a DIVERGENT verdict.
    pub growth_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relative: 0.05,
            epsilon_gate: 1e-2,
            growth_threshold: 1.3,
        }
    }
}

fn default_protocol() -> ProtocolKind {
    ProtocolKind::SrHb
}

fn default_n_runs() -> usize {
    1
}

fn default_horizon() -> u64 {
    10_000
}

fn default_max_traces() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_protocol")]
    pub protocol: ProtocolKind,
    #[serde(default)]
    pub ack_base: Option<f64>,
    /// Protocols to compare; defaults to `[protocol]`.
    #[serde(default)]
    pub protocols: Vec<ProtocolKind>,
    pub system: SystemParams,
    #[serde(default)]
    pub costs: CostParams,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub t_grid: Vec<u64>,
    #[serde(default)]
    pub delta_range: Option<DeltaRange>,
    #[serde(default)]
    pub horizons: Vec<u64>,
    #[serde(default)]
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Also simulate the average cost at every period when optimizing.
    #[serde(default)]
    pub verify: bool,
    /// Trace files written by `simulate`.
    #[serde(default = "default_max_traces")]
    pub max_traces: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn violation(field: &'static str, message: impl Into<String>) -> Violation {
    Violation {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn spec_for(&self, kind: ProtocolKind) -> ProtocolSpec {
        ProtocolSpec {
            kind,
            ack_base: if kind == ProtocolKind::Pathological {
                self.ack_base
            } else {
                None
            },
        }
    }

    pub fn spec(&self) -> ProtocolSpec {
        self.spec_for(self.protocol)
    }

    pub fn compared(&self) -> Vec<ProtocolKind> {
        if self.protocols.is_empty() {
            vec![self.protocol]
        } else {
            self.protocols.clone()
        }
    }

    pub fn estimator(&self, jobs: usize) -> Estimator {
        Estimator {
            n_runs: self.n_runs,
            horizon: self.horizon,
            seed: self.seed,
            jobs,
            epsilon_gate: self.tolerances.epsilon_gate,
            tolerance: self.tolerances.relative,
            lambda: self.lambda,
        }
    }

    fn probes(&self) -> Vec<Probe> {
        if self.probes.is_empty() {
            vec![Probe::Divergence, Probe::Impossibility]
        } else {
            self.probes.clone()
        }
    }

    /// Re-checks the preconditions of the operation `command` wraps.
    pub fn check(&self, command: Command) -> Result<()> {
        let mut out = validate(&self.system, &self.costs);
        let kinds = match command {
            Command::Compare => self.compared(),
            _ => vec![self.protocol],
        };
        for k in &kinds {
            out.extend(self.spec_for(*k).violations());
        }
        if self.horizon < 1 {
            out.push(violation("horizon", "horizon must be >= 1"));
        }
        let tol = &self.tolerances;
        if !(tol.relative >= 0.0) || !(tol.epsilon_gate >= 0.0) || !(tol.growth_threshold > 0.0) {
            out.push(violation("tolerances", "tolerances must be non-negative"));
        }
        match command {
            Command::Simulate => {
                if self.n_runs < 1 {
                    out.push(violation("n_runs", "n_runs must be >= 1"));
                }
                if self.mode == Mode::Repeated && self.protocol != ProtocolKind::SrHb {
                    out.push(violation(
                        "mode",
                        "repeated mode runs the heartbeat protocol only",
                    ));
                }
            }
            Command::Compare => {
                if self.n_runs < 2 {
                    out.push(violation("n_runs", "n_runs must be >= 2"));
                }
                if self.metrics.is_empty() {
                    out.push(violation("metrics", "at least one metric is required"));
                }
                let repeated = self.metrics.contains(&Metric::CAvg);
                if repeated && kinds.iter().any(|k| *k != ProtocolKind::SrHb) {
                    out.push(violation(
                        "metrics",
                        "c_avg is defined for the heartbeat protocol only",
                    ));
                }
                if repeated && !(self.system.sigma > 0.0) {
                    out.push(violation("sigma", "c_avg requires sigma > 0"));
                }
                if self.metrics.contains(&Metric::C1) {
                    out.extend(validate_c1(&self.system, &self.costs));
                }
            }
            Command::S2 => {
                if self.t_grid.is_empty() {
                    out.push(violation("t_grid", "t_grid must not be empty"));
                }
                if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
                    out.push(violation("t_grid", "t_grid must be strictly increasing"));
                }
                if self.n_runs < 1 {
                    out.push(violation("n_runs", "n_runs must be >= 1"));
                }
            }
            Command::Probe => {
                let probes = self.probes();
                let needs_horizons = probes
                    .iter()
                    .any(|p| matches!(p, Probe::Divergence | Probe::C1));
                if needs_horizons
                    && (self.horizons.is_empty()
                        || self.horizons[0] == 0
                        || self.horizons.windows(2).any(|w| w[0] >= w[1]))
                {
                    out.push(violation(
                        "horizons",
                        "horizons must be positive and strictly increasing",
                    ));
                }
                if probes.contains(&Probe::C1) {
                    out.extend(validate_c1(&self.system, &self.costs));
                }
                if self.n_runs < 1 {
                    out.push(violation("n_runs", "n_runs must be >= 1"));
                }
            }
            Command::Optimize => match &self.delta_range {
                None => out.push(violation("delta_range", "delta_range is required")),
                Some(r) => {
                    let v = r.values();
                    if v.is_empty() {
                        out.push(violation("delta_range", "delta_range is empty"));
                    }
                    if v.contains(&0) {
                        out.push(violation("delta_range", "delta must be >= 1"));
                    }
                    if !(self.system.sigma > 0.0) {
                        out.push(violation("sigma", "optimizing delta requires sigma > 0"));
                    }
                }
            },
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(out))
        }
    }
}

/// Named output files, in the order they were produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

/// Left-aligned text table.
fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), num)
}

fn pretty(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Runs `command` on `config`. `jobs` is the worker count (0 = all cores).
pub fn run(command: Command, config: &ExperimentConfig, jobs: usize) -> Result<Outputs> {
    config.check(command)?;
    match command {
        Command::Simulate => simulate(config),
        Command::Compare => compare(config, jobs),
        Command::S2 => s2(config, jobs),
        Command::Probe => probe(config, jobs),
        Command::Optimize => optimize(config, jobs),
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::default();
    let seeds: Vec<u64> = (0..cfg.n_runs as u64)
        .map(|i| cfg.seed.wrapping_add(i))
        .collect();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut traces = Vec::new();
    match cfg.mode {
        Mode::Single => {
            let spec = cfg.spec();
            let mut csv = String::from("seed,num_sends,wait,c0,c1\n");
            for (i, &seed) in seeds.iter().enumerate() {
                let tr = run_single(&spec, &cfg.system, seed, cfg.horizon);
                let b = CostBreakdown::of(&tr, &cfg.costs);
                let cells = [
                    seed.to_string(),
                    quantity_cell(b.num_sends),
                    quantity_cell(b.wait),
                    cost_cell(b.c0),
                    num(b.c1),
                ];
                let _ = writeln!(csv, "{}", cells.join(","));
                rows.push(cells.to_vec());
                runs.push(json!({
                    "seed": seed,
                    "t_p": tr.t_p,
                    "t_q": tr.t_q,
                    "t_f": tr.t_f,
                    "truncated": tr.truncated,
                    "breakdown": b,
                }));
                if i < cfg.max_traces {
                    traces.push((format!("trace-{seed}.log"), tr.to_event_lines()));
                }
            }
            out.add(
                "summary.json",
                pretty(&json!({"command": "simulate", "protocol": spec.kind, "mode": cfg.mode, "runs": runs}))?,
            );
            out.add(
                "table.txt",
                render_table(&["seed", "num_sends", "wait", "c0", "c1"], &rows),
            );
            out.add("series.csv", csv);
        }
        Mode::Repeated => {
            let mut first_series = None;
            for (i, &seed) in seeds.iter().enumerate() {
                let rt = run_repeated(&cfg.system, seed, cfg.horizon);
                let series = avg_cost_series(&rt, &cfg.costs);
                let completed = rt.completed().count();
                rows.push(vec![
                    seed.to_string(),
                    rt.invocations.len().to_string(),
                    completed.to_string(),
                    rt.total_heartbeats().to_string(),
                    num(series.final_ratio),
                    num(series.running_sup),
                ]);
                runs.push(json!({
                    "seed": seed,
                    "t_p": rt.t_p,
                    "t_q": rt.t_q,
                    "invocations": rt.invocations.len(),
                    "completed": completed,
                    "heartbeats": rt.total_heartbeats(),
                    "final_ratio": series.final_ratio,
                    "running_sup": series.running_sup,
                }));
                if i < cfg.max_traces {
                    traces.push((format!("trace-{seed}.log"), rt.to_event_lines()));
                }
                if first_series.is_none() {
                    first_series = Some(series.to_csv());
                }
            }
            out.add(
                "summary.json",
                pretty(&json!({"command": "simulate", "protocol": cfg.protocol, "mode": cfg.mode, "runs": runs}))?,
            );
            out.add(
                "table.txt",
                render_table(
                    &[
                        "seed",
                        "invocations",
                        "completed",
                        "heartbeats",
                        "final_ratio",
                        "running_sup",
                    ],
                    &rows,
                ),
            );
            out.add("series.csv", first_series.unwrap_or_default());
        }
    }
    for (name, content) in traces {
        out.add(name, content);
    }
    Ok(out)
}

fn quantity_cell(q: crate::cost::Quantity) -> String {
    match q {
        crate::cost::Quantity::Finite(v) => v.to_string(),
        crate::cost::Quantity::Infinite => "inf".into(),
        crate::cost::Quantity::Censored => "censored".into(),
    }
}

fn cost_cell(c: crate::cost::Cost) -> String {
    match c {
        crate::cost::Cost::Value(v) => num(v),
        crate::cost::Cost::Infinite => "inf".into(),
        crate::cost::Cost::Censored => "censored".into(),
    }
}

#[derive(Serialize)]
struct CompareRow {
    protocol: ProtocolKind,
    metric: Metric,
    report: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn compare(cfg: &ExperimentConfig, jobs: usize) -> Result<Outputs> {
    let est = cfg.estimator(jobs);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for kind in cfg.compared() {
        let spec = cfg.spec_for(kind);
        for &metric in &cfg.metrics {
            let (report, error) = match est.estimate(&spec, &cfg.system, &cfg.costs, metric) {
                Ok(r) => (Some(r), None),
                // a refused estimate is a result, not an operational failure
                Err(e @ Error::Precondition(_)) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            table.push(match &report {
                Some(r) => vec![
                    kind.to_string(),
                    metric.to_string(),
                    num(r.mean),
                    num(r.stderr),
                    format!("[{}, {}]", num(r.ci95[0]), num(r.ci95[1])),
                    r.censored.to_string(),
                    opt(r.closed_form),
                    opt(r.rel_dev),
                    r.verdict.to_string(),
                ],
                None => vec![
                    kind.to_string(),
                    metric.to_string(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "REFUSED".into(),
                ],
            });
            rows.push(CompareRow {
                protocol: kind,
                metric,
                report,
                error,
            });
        }
    }
    let all_pass = rows.iter().all(|r| {
        r.report
            .as_ref()
            .is_some_and(|r| r.verdict != Verdict::Fail)
    });
    let mut out = Outputs::default();
    out.add(
        "summary.json",
        pretty(&json!({
            "command": "compare",
            "n_runs": cfg.n_runs,
            "horizon": cfg.horizon,
            "seed": cfg.seed,
            "tolerance": cfg.tolerances.relative,
            "epsilon_gate": cfg.tolerances.epsilon_gate,
            "no_failures": all_pass,
            "rows": rows,
        }))?,
    );
    out.add(
        "table.txt",
        render_table(
            &[
                "protocol",
                "metric",
                "mean",
                "stderr",
                "ci95",
                "censored",
                "closed_form",
                "rel_dev",
                "verdict",
            ],
            &table,
        ),
    );
    Ok(out)
}

fn s2(cfg: &ExperimentConfig, jobs: usize) -> Result<Outputs> {
    let curve = completion_curve(
        &cfg.spec(),
        &cfg.system,
        &cfg.t_grid,
        cfg.n_runs,
        cfg.seed,
        jobs,
    )?;
    let mut csv = String::from("t,eligible,finished,p,stderr\n");
    let mut rows = Vec::new();
    for p in &curve {
        let cells = vec![
            p.t.to_string(),
            p.eligible.to_string(),
            p.finished.to_string(),
            p.p.map_or_else(|| "undefined".into(), num),
            p.stderr.map_or_else(|| "undefined".into(), num),
        ];
        let _ = writeln!(csv, "{}", cells.join(","));
        rows.push(cells);
    }
    let mut out = Outputs::default();
    out.add(
        "summary.json",
        pretty(&json!({"command": "s2", "protocol": cfg.protocol, "n_runs": cfg.n_runs, "seed": cfg.seed, "curve": curve}))?,
    );
    out.add(
        "table.txt",
        render_table(&["t", "eligible", "finished", "p", "stderr"], &rows),
    );
    out.add("series.csv", csv);
    Ok(out)
}

fn growth_table(r: &GrowthReport) -> String {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|g| {
            vec![
                g.horizon.to_string(),
                num(g.mean),
                num(g.stderr),
                opt(g.ratio),
            ]
        })
        .collect();
    let mut t = render_table(
        &[
            "horizon",
            &format!("mean_{}", r.quantity),
            "stderr",
            "ratio",
        ],
        &rows,
    );
    let _ = writeln!(
        t,
        "verdict: {} (growth threshold {} per step; a heuristic signature, not a proof)",
        r.verdict, r.threshold
    );
    t
}

fn growth_csv(r: &GrowthReport) -> String {
    let mut csv = String::from("quantity,horizon,mean,stderr,ratio\n");
    for g in &r.rows {
        let ratio = g.ratio.map_or_else(String::new, |v| v.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.quantity, g.horizon, g.mean, g.stderr, ratio
        );
    }
    csv
}

fn probe(cfg: &ExperimentConfig, jobs: usize) -> Result<Outputs> {
    let spec = cfg.spec();
    let mut summary = serde_json::Map::new();
    summary.insert("command".into(), json!("probe"));
    summary.insert("protocol".into(), json!(spec.kind));
    let mut table = String::new();
    let mut csv = String::new();
    for p in cfg.probes() {
        match p {
            Probe::Divergence => {
                let r = divergence_probe(
                    &spec,
                    &cfg.system,
                    &cfg.horizons,
                    cfg.n_runs,
                    cfg.seed,
                    jobs,
                    cfg.tolerances.growth_threshold,
                )?;
                let _ = writeln!(table, "# send-count growth\n{}", growth_table(&r));
                csv.push_str(&growth_csv(&r));
                summary.insert("divergence".into(), serde_json::to_value(&r)?);
            }
            Probe::C1 => {
                let r = c1_growth(
                    &spec,
                    &cfg.system,
                    &cfg.costs,
                    &cfg.horizons,
                    cfg.n_runs,
                    cfg.seed,
                    jobs,
                    cfg.tolerances.growth_threshold,
                )?;
                let _ = writeln!(
                    table,
                    "# exponential waiting cost growth\n{}",
                    growth_table(&r)
                );
                let body = growth_csv(&r);
                if csv.is_empty() {
                    csv.push_str(&body);
                } else {
                    csv.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
                }
                summary.insert("c1".into(), serde_json::to_value(&r)?);
            }
            Probe::Impossibility => {
                let r = impossibility_probe(&spec, &cfg.system, cfg.horizon, cfg.seed)?;
                let rows: Vec<Vec<String>> = r
                    .scenarios
                    .iter()
                    .map(|s| {
                        vec![
                            s.name.to_string(),
                            s.stopped.to_string(),
                            s.sends.to_string(),
                            s.heartbeats.to_string(),
                            s.finished.to_string(),
                            s.wait.to_string(),
                            s.unbounded.to_string(),
                        ]
                    })
                    .collect();
                let _ = writeln!(
                    table,
                    "# forced scenarios (horizon {}, blackout until {})\n{}note: {}\n",
                    r.horizon,
                    r.blackout_until,
                    render_table(
                        &[
                            "scenario",
                            "stopped",
                            "sends",
                            "heartbeats",
                            "finished",
                            "wait",
                            "unbounded"
                        ],
                        &rows
                    ),
                    r.note
                );
                summary.insert("impossibility".into(), serde_json::to_value(&r)?);
            }
        }
    }
    let mut out = Outputs::default();
    out.add("summary.json", pretty(&summary)?);
    out.add("table.txt", table);
    if !csv.is_empty() {
        out.add("series.csv", csv);
    }
    Ok(out)
}

fn optimize(cfg: &ExperimentConfig, jobs: usize) -> Result<Outputs> {
    let deltas = cfg
        .delta_range
        .as_ref()
        .map(DeltaRange::values)
        .unwrap_or_default();
    let needs_lambda = (1.0 - cfg.system.alpha_p) * (1.0 - cfg.system.alpha_q) > 0.0;
    let mut lambda = cfg.lambda;
    let mut lambda_report = None;
    if needs_lambda && lambda.is_none() {
        let r = estimate_lambda(&cfg.system, &cfg.costs, &cfg.estimator(jobs))?;
        if r.inconsistent || !(r.lambda_hat > 0.0 && r.lambda_hat < 1.0) {
            return Err(Error::Precondition(format!(
                "estimated lambda {} is outside (0, 1); supply lambda in the config",
                r.lambda_hat
            )));
        }
        lambda = Some(r.lambda_hat);
        lambda_report = Some(r);
    }
    let report = optimize_delta(&cfg.system, &cfg.costs, lambda, &deltas)?;

    let mut simulated = Vec::new();
    if cfg.verify {
        let est = cfg.estimator(jobs);
        for &(delta, _) in &report.curve {
            let p = SystemParams {
                delta,
                ..cfg.system
            };
            let r = est.estimate(&ProtocolSpec::srhb(), &p, &cfg.costs, Metric::CAvg)?;
            simulated.push((delta, r.mean, r.stderr));
        }
    }
    let sim_star = simulated
        .iter()
        .fold(None, |best: Option<(u64, f64)>, &(d, m, _)| match best {
            Some((_, bm)) if bm <= m => best,
            _ => Some((d, m)),
        })
        .map(|(d, _)| d);

    let mut csv = String::from(if cfg.verify {
        "delta,predicted,simulated,stderr\n"
    } else {
        "delta,predicted\n"
    });
    let mut rows = Vec::new();
    for (i, &(d, c)) in report.curve.iter().enumerate() {
        let mut cells = vec![d.to_string(), num(c)];
        if let Some(&(_, m, se)) = simulated.get(i) {
            cells.push(num(m));
            cells.push(num(se));
        }
        let _ = writeln!(csv, "{}", cells.join(","));
        rows.push(cells);
    }
    let header: &[&str] = if cfg.verify {
        &["delta", "predicted", "simulated", "stderr"]
    } else {
        &["delta", "predicted"]
    };
    let mut table = render_table(header, &rows);
    let _ = writeln!(
        table,
        "delta*: {} (predicted cost {})",
        report.delta_star,
        num(report.cost_star)
    );
    if let Some(d) = sim_star {
        let _ = writeln!(table, "simulated argmin: {d}");
    }
    let mut out = Outputs::default();
    out.add(
        "summary.json",
        pretty(&json!({
            "command": "optimize",
            "lambda": lambda,
            "lambda_estimate": lambda_report,
            "delta_star": report.delta_star,
            "cost_star": report.cost_star,
            "curve": report.curve,
            "simulated_argmin": sim_star,
        }))?,
    );
    out.add("table.txt", table);
    out.add("series.csv", csv);
    Ok(out)
}
