//! The subcommands. Each one takes a validated configuration, writes its
//! artifacts under the output directory and returns what it computed so
//! callers (the binary, tests) can inspect it.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::Serialize;

use offload_core::artifact::{self, ValueCheckpoint};
use offload_core::simulator::{audit_event_log, mm1_reference, simulate_replication, EventRecord, LogAudit};
use offload_core::solver::value_iterate_from;
use offload_core::structure::{self, ARRIVAL_GAP_SLACK};
use offload_core::{
    build_problem, coupled_compare, simulate, Baseline, CoupledReport, DelayReport, ModelParams,
    Policy, PolicyTable, StateSpace, StructureReport, TablePolicy, ValueTable, ViOutcome, ViStatus,
};

use crate::config::{ConfigError, RunConfig, SolverSettings};
use crate::format::{fmt_g, LINE_END};

pub const SCHEMA_VERSION: u32 = 1;

pub const VALUE_FILE: &str = "value.bin";
pub const POLICY_FILE: &str = "policy.bin";

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exit {
    Ok = 0,
    Config = 1,
    CheckFailed = 2,
    NotConverged = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push_str(LINE_END);
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: T,
}

fn versioned<T: Serialize>(kind: &str, body: T) -> Versioned<'_, T> {
    Versioned {
        schema_version: SCHEMA_VERSION,
        kind,
        body,
    }
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, Serialize)]
pub struct SolveMetadata {
    pub status: &'static str,
    pub iterations: u64,
    pub residual: f64,
    pub error_bound: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_max: u32,
    pub states: usize,
    pub tol: f64,
    pub max_iters: u64,
    pub sweep: &'static str,
    pub resumed_from: Option<u64>,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub outcome: ViOutcome,
    pub metadata: SolveMetadata,
    pub out_dir: PathBuf,
    pub exit: Exit,
}

/// Runs value iteration from zero or, with `resume`, from the checkpoint
/// left in the output directory. The value file doubles as the checkpoint
/// and is rewritten every `checkpoint_every` sweeps.
pub fn cmd_solve(cfg: &RunConfig, resume: bool) -> Result<SolveResult> {
    let params = cfg.model_params()?;
    let settings = cfg.solver_settings()?;
    let out_dir = cfg.out_dir();
    ensure_dir(&out_dir)?;
    let value_path = out_dir.join(VALUE_FILE);

    let kernel = build_problem(&params, settings.n_max, settings.discount)?;
    let mut start = ValueTable::zeros(&kernel);
    let mut resumed_from = None;
    if resume && value_path.exists() {
        let ck = artifact::load_values(&value_path)?;
        if ck.params != params || ck.table.n_max != settings.n_max || ck.table.discount != *kernel.discount() {
            return Err(ConfigError(format!(
                "checkpoint {} was written for a different model, discount or n_max",
                value_path.display()
            ))
            .into());
        }
        resumed_from = Some(ck.table.iterations);
        start = ck.table;
    }

    let mut checkpoint_error = None;
    let outcome = value_iterate_from(&kernel, start, &settings.vi, |table| {
        let ck = ValueCheckpoint {
            table: table.clone(),
            status: ViStatus::MaxIterations,
            params,
        };
        if let Err(e) = artifact::save_values(&value_path, &ck) {
            checkpoint_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = checkpoint_error {
        return Err(anyhow::Error::new(e).context(format!("checkpoint {}", value_path.display())));
    }

    artifact::save_values(
        &value_path,
        &ValueCheckpoint {
            table: outcome.values.clone(),
            status: outcome.status,
            params,
        },
    )
    .with_context(|| format!("cannot write {}", value_path.display()))?;
    let policy_path = out_dir.join(POLICY_FILE);
    artifact::save_policy(&policy_path, &outcome.policy)
        .with_context(|| format!("cannot write {}", policy_path.display()))?;

    let metadata = solve_metadata(&outcome, &settings, &params, resumed_from);
    write_json(&out_dir.join("solve.json"), &versioned("solve", &metadata))?;
    let exit = match outcome.status {
        ViStatus::Converged => Exit::Ok,
        ViStatus::MaxIterations => Exit::NotConverged,
    };
    Ok(SolveResult {
        outcome,
        metadata,
        out_dir,
        exit,
    })
}

fn solve_metadata(
    outcome: &ViOutcome,
    settings: &SolverSettings,
    params: &ModelParams,
    resumed_from: Option<u64>,
) -> SolveMetadata {
    let v = &outcome.values;
    SolveMetadata {
        status: outcome.status.as_str(),
        iterations: v.iterations,
        residual: v.residual,
        error_bound: v.error_bound(),
        nu: v.discount.nu,
        alpha: v.discount.alpha,
        beta: v.discount.beta,
        n_max: v.n_max,
        states: v.values.len(),
        tol: settings.vi.tol,
        max_iters: settings.vi.max_iters,
        sweep: settings.vi.sweep.as_str(),
        resumed_from,
        params: *params,
    }
}

/// Solves in memory without touching the output directory.
pub fn solve_optimal(params: &ModelParams, settings: &SolverSettings) -> Result<ViOutcome> {
    let kernel = build_problem(params, settings.n_max, settings.discount)?;
    let vi = offload_core::ViOptions {
        checkpoint_every: 0,
        ..settings.vi
    };
    Ok(offload_core::value_iterate(&kernel, &vi)?)
}

// ---------------------------------------------------------------- grid

pub const GRID_HEADER: &str = "n0,n2,action,also_sm2";

/// CSV of one `(i2, i1)` slice: rows over `n0 >= 1` (outer) and `n2`.
pub fn grid_csv(pi: &PolicyTable, i2: u32, i1: u32) -> Result<String> {
    if i2 > 1 || i1 > 1 {
        return Err(ConfigError(format!("unknown slice i2={i2}, i1={i1} (each must be 0 or 1)")).into());
    }
    let mut out = String::new();
    out.push_str(GRID_HEADER);
    out.push_str(LINE_END);
    for n0 in 1..=pi.n_max {
        for n2 in 0..=pi.n_max {
            let (code, also) = pi.action(offload_core::State::new(n0, i2, i1, n2)).grid_code();
            write!(out, "{n0},{n2},{code},{}{LINE_END}", also as u8).expect("write to string");
        }
    }
    Ok(out)
}

pub fn cmd_grid(cfg: &RunConfig, policy: Option<&Path>, i2: u32, i1: u32, output: Option<&Path>) -> Result<PathBuf> {
    let out_dir = cfg.out_dir();
    let policy_path = policy.map(Path::to_path_buf).unwrap_or_else(|| out_dir.join(POLICY_FILE));
    let pi = artifact::load_policy(&policy_path).with_context(|| format!("cannot load {}", policy_path.display()))?;
    let csv = grid_csv(&pi, i2, i1)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            ensure_dir(&out_dir)?;
            out_dir.join(format!("grid_i2{i2}_i1{i1}.csv"))
        }
    };
    write_text(&path, &csv)?;
    Ok(path)
}

// ---------------------------------------------------------------- analyze

/// Where the analyzed policy comes from.
#[derive(Debug, Clone)]
pub enum AnalyzeInput {
    /// Artifacts from `solve`; the value file is optional.
    Artifacts { policy: PathBuf, values: Option<PathBuf> },
    /// A baseline tabulated on the configured truncation.
    Baseline(Baseline),
}

#[derive(Debug, Clone)]
pub struct AnalyzeResult {
    pub report: StructureReport,
    pub text: String,
    pub exit: Exit,
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

const MAX_LISTED: usize = 20;

fn list<T>(items: &[T], show: impl Fn(&T) -> String) -> String {
    let mut parts: Vec<String> = items.iter().take(MAX_LISTED).map(show).collect();
    if items.len() > MAX_LISTED {
        parts.push(format!("...(+{})", items.len() - MAX_LISTED));
    }
    parts.join(";")
}

fn thresholds_line(seq: &[Option<u32>]) -> String {
    seq.iter()
        .map(|t| t.map_or_else(|| "none".to_owned(), |v| v.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

/// Key-value text rendering of a structure report, one `key=value` per line.
///
/// `N` lists thresholds on `(., 0, 1, k)` for `k = 0, 1, ...`; `N_prime` lists
/// those on `(., 0, 0, k)` for `k = 1, 2, ...`.
pub fn report_text(r: &StructureReport) -> String {
    let mut lines = vec![
        format!("n_max={}", r.n_max),
        format!("margin={}", r.margin),
        format!("cloud_first={}", pass(r.cloud_first.pass)),
        format!("cloud_first.counterexamples={}", list(&r.cloud_first.counterexamples, |s| s.to_string())),
        format!("switch_type={}", pass(r.switch_type.pass)),
        format!(
            "switch_type.counterexamples={}",
            list(&r.switch_type.counterexamples, |v| format!("{}->{}", v.assigns, v.shifted))
        ),
        format!("thresholds_non_increasing={}", pass(r.thresholds_non_increasing)),
        format!("N={}", thresholds_line(&r.thresholds.sm1_busy)),
        format!("N_prime={}", thresholds_line(&r.thresholds.sm1_idle)),
        format!("urgency_monotone={}", pass(r.urgency_monotone.pass)),
        format!(
            "urgency_monotone.counterexamples={}",
            list(&r.urgency_monotone.counterexamples, |s| s.to_string())
        ),
    ];
    match &r.value_gaps {
        Some(g) => {
            let at = |s: &Option<offload_core::State>| s.map_or_else(String::new, |s| s.to_string());
            lines.push(format!("value_gaps={}", pass(g.pass(ARRIVAL_GAP_SLACK))));
            lines.push(format!("value_gaps.sm1_vs_sm2_min={}", fmt_g(g.sm1_vs_sm2_min)));
            lines.push(format!("value_gaps.sm1_vs_sm2_at={}", at(&g.sm1_vs_sm2_at)));
            lines.push(format!("value_gaps.arrival_min={}", fmt_g(g.arrival_min)));
            lines.push(format!("value_gaps.arrival_at={}", at(&g.arrival_at)));
            lines.push(format!("value_gaps.degenerate={}", g.degenerate));
        }
        None => lines.push("value_gaps=SKIPPED".to_owned()),
    }
    lines.push(format!("all={}", pass(r.all_pass())));
    let mut text = lines.join(LINE_END);
    text.push_str(LINE_END);
    text
}

pub fn cmd_analyze(cfg: &RunConfig, input: &AnalyzeInput) -> Result<AnalyzeResult> {
    let margin = cfg
        .solver
        .margin
        .unwrap_or(structure::DEFAULT_MARGIN);
    let (pi, values) = match input {
        AnalyzeInput::Artifacts { policy, values } => {
            let pi = artifact::load_policy(policy).with_context(|| format!("cannot load {}", policy.display()))?;
            let values = match values {
                Some(p) => {
                    let ck = artifact::load_values(p).with_context(|| format!("cannot load {}", p.display()))?;
                    if ck.table.n_max != pi.n_max {
                        return Err(ConfigError(format!(
                            "value table n_max {} does not match policy n_max {}",
                            ck.table.n_max, pi.n_max
                        ))
                        .into());
                    }
                    Some(ck.table)
                }
                None => None,
            };
            (pi, values)
        }
        AnalyzeInput::Baseline(b) => {
            let n_max = cfg.solver.n_max.unwrap_or(crate::config::DEFAULT_N_MAX);
            (b.table(StateSpace::new(n_max)?), None)
        }
    };
    let report = offload_core::analyze(&pi, values.as_ref(), margin);
    let text = report_text(&report);
    let out_dir = cfg.out_dir();
    ensure_dir(&out_dir)?;
    write_text(&out_dir.join("analysis.txt"), &text)?;
    write_json(&out_dir.join("analysis.json"), &versioned("structure_report", &report))?;
    let exit = if report.all_pass() { Exit::Ok } else { Exit::CheckFailed };
    Ok(AnalyzeResult { report, text, exit })
}

// ---------------------------------------------------------------- policies

/// `optimal`, a baseline name, or the path of a policy table.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Optimal,
    Baseline(Baseline),
    File(PathBuf),
}

impl FromStr for PolicySpec {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "optimal" => PolicySpec::Optimal,
            other => match Baseline::from_str(other) {
                Ok(b) => PolicySpec::Baseline(b),
                Err(_) => PolicySpec::File(PathBuf::from(other)),
            },
        })
    }
}

/// A policy ready for simulation, plus the solve status when it was solved
/// here.
pub struct LoadedPolicy {
    pub policy: Box<dyn Policy>,
    pub solve_status: Option<ViStatus>,
}

pub fn load_policy_spec(cfg: &RunConfig, params: &ModelParams, spec: &PolicySpec) -> Result<LoadedPolicy> {
    Ok(match spec {
        PolicySpec::Baseline(b) => LoadedPolicy {
            policy: Box::new(*b),
            solve_status: None,
        },
        PolicySpec::File(path) => {
            let pi = artifact::load_policy(path).with_context(|| format!("cannot load policy {}", path.display()))?;
            LoadedPolicy {
                policy: Box::new(TablePolicy::new(pi, path.display().to_string())),
                solve_status: None,
            }
        }
        PolicySpec::Optimal => {
            let out = solve_optimal(params, &cfg.solver_settings()?)?;
            LoadedPolicy {
                policy: Box::new(TablePolicy::new(out.policy, "optimal")),
                solve_status: Some(out.status),
            }
        }
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub report: DelayReport,
    pub little_law_gap: f64,
    pub little_law_tolerance: f64,
    pub little_law: bool,
    pub conserves_jobs: bool,
    /// M/M/1 sojourn `1 / (mu_c1 - lambda)`; exact for offload_only.
    pub mm1_reference: Option<f64>,
    /// Replay of the written event log, when one was requested.
    pub event_log_audit: Option<LogAudit>,
    pub event_log_violation: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SimulateResult {
    pub summary: SimulateSummary,
    pub exit: Exit,
}

/// Simulates one policy. With `event_log`, replication 0 is replayed and
/// every event written as CSV (`time,kind,n0,i2,i1,n2`).
pub fn cmd_simulate(cfg: &RunConfig, spec: &PolicySpec, event_log: Option<&Path>) -> Result<SimulateResult> {
    let params = cfg.model_params()?;
    let sim = cfg.sim_config()?;
    let loaded = load_policy_spec(cfg, &params, spec)?;
    let report = simulate(loaded.policy.as_ref(), &params, &sim)?;
    let mut event_log_audit = None;
    let mut event_log_violation = None;
    if let Some(path) = event_log {
        let mut records = Vec::new();
        simulate_replication(loaded.policy.as_ref(), &params, &sim, 0, |e| records.push(*e))?;
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
        write!(w, "{}{LINE_END}", EventRecord::CSV_HEADER)?;
        for e in &records {
            write!(w, "{}{LINE_END}", e.csv_line())?;
        }
        w.flush()?;
        match audit_event_log(&records) {
            Ok(a) => event_log_audit = Some(a),
            Err(v) => event_log_violation = Some(v.to_string()),
        }
    }
    let (gap, tol) = report.little_law_gap();
    let summary = SimulateSummary {
        little_law_gap: gap,
        little_law_tolerance: tol,
        little_law: gap <= tol,
        conserves_jobs: report.conserves_jobs(),
        mm1_reference: mm1_reference(params.lambda, params.mu_c1).ok(),
        event_log_audit,
        event_log_violation,
        report,
    };
    let out_dir = cfg.out_dir();
    ensure_dir(&out_dir)?;
    write_json(&out_dir.join("simulate.json"), &versioned("delay_report", &summary))?;
    let exit = if summary.event_log_violation.is_some() || !summary.conserves_jobs {
        Exit::CheckFailed
    } else if loaded.solve_status == Some(ViStatus::MaxIterations) {
        Exit::NotConverged
    } else {
        Exit::Ok
    };
    Ok(SimulateResult { summary, exit })
}

// ---------------------------------------------------------------- sweep

pub const SWEEP_HEADER: &str = "rho,policy,mean_delay,ci_halfwidth,avg_jobs,status";
pub const DEFAULT_RHOS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Unstable,
    /// The optimal policy was simulated from a solve that hit `max_iters`.
    NotConverged,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Unstable => "unstable",
            RowStatus::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub policy: String,
    pub status: RowStatus,
    pub delay: Option<DelayReport>,
}

impl SweepRow {
    pub fn mean_delay(&self) -> Option<f64> {
        self.delay.as_ref().map(|d| d.sojourn.mean)
    }

    fn csv(&self) -> String {
        let (m, h, n) = match &self.delay {
            Some(d) => (fmt_g(d.sojourn.mean), fmt_g(d.sojourn.half_width), fmt_g(d.time_avg_jobs.mean)),
            None => Default::default(),
        };
        format!("{},{},{m},{h},{n},{}{LINE_END}", fmt_g(self.rho), self.policy, self.status.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub csv: String,
    pub path: PathBuf,
    pub exit: Exit,
}

/// A policy is flagged unstable when its service capacity cannot keep up:
/// offload-only is an M/M/1 queue at `mu_c1`; the others use both servers,
/// capacity `(K + 1) mu0`, i.e. `rho < 1`.
pub fn is_unstable(spec: &PolicySpec, p: &ModelParams) -> bool {
    match spec {
        PolicySpec::Baseline(Baseline::OffloadOnly) => p.lambda >= p.mu_c1,
        _ => p.utilization() >= 1.0,
    }
}

fn spec_name(spec: &PolicySpec) -> String {
    match spec {
        PolicySpec::Optimal => "optimal".into(),
        PolicySpec::Baseline(b) => b.as_str().into(),
        PolicySpec::File(p) => p.display().to_string(),
    }
}

/// Delay versus utilization. The model block's arrival rate is replaced by
/// each `rho`; the optimal policy is re-solved per `rho` with the shared
/// solver settings. All policies at one `rho` see the same seed, hence the
/// same arrivals and service triplets.
pub fn cmd_sweep(cfg: &RunConfig, rhos: &[f64], policies: &[PolicySpec]) -> Result<SweepResult> {
    if rhos.is_empty() || policies.is_empty() {
        return Err(ConfigError("sweep needs at least one rho and one policy".into()).into());
    }
    let sim = cfg.sim_config()?;
    let mut rows = Vec::new();
    let mut any_unconverged = false;
    for &rho in rhos {
        let mut at_rho = cfg.clone();
        at_rho.set_rho(rho);
        let params = at_rho.model_params()?;
        for spec in policies {
            let name = spec_name(spec);
            if is_unstable(spec, &params) {
                rows.push(SweepRow {
                    rho,
                    policy: name,
                    status: RowStatus::Unstable,
                    delay: None,
                });
                continue;
            }
            let loaded = load_policy_spec(&at_rho, &params, spec)?;
            let status = match loaded.solve_status {
                Some(ViStatus::MaxIterations) => {
                    any_unconverged = true;
                    RowStatus::NotConverged
                }
                _ => RowStatus::Ok,
            };
            let mut report = simulate(loaded.policy.as_ref(), &params, &sim)?;
            report.policy = name.clone();
            rows.push(SweepRow {
                rho,
                policy: name,
                status,
                delay: Some(report),
            });
        }
    }
    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push_str(LINE_END);
    for r in &rows {
        csv.push_str(&r.csv());
    }
    let out_dir = cfg.out_dir();
    ensure_dir(&out_dir)?;
    let path = out_dir.join("sweep.csv");
    write_text(&path, &csv)?;
    let exit = if any_unconverged { Exit::NotConverged } else { Exit::Ok };
    Ok(SweepResult { rows, csv, path, exit })
}

// ---------------------------------------------------------------- couple

#[derive(Debug, Clone)]
pub struct CoupleResult {
    pub report: CoupledReport,
    pub text: String,
    pub exit: Exit,
}

pub fn couple_text(r: &CoupledReport) -> String {
    let lines = [
        format!("policy_a={}", r.a.policy),
        format!("policy_b={}", r.b.policy),
        format!("mean_delay_a={}", fmt_g(r.a.sojourn.mean)),
        format!("mean_delay_b={}", fmt_g(r.b.sojourn.mean)),
        format!("difference_b_minus_a={}", fmt_g(r.difference.mean)),
        format!("difference_ci_halfwidth={}", fmt_g(r.difference.half_width)),
        format!("dominance_fraction={}", fmt_g(r.dominance_fraction)),
        format!("pathwise_dominance={}", r.pathwise_dominance()),
        format!("replications={}", r.paired.len()),
    ];
    let mut text = lines.join(LINE_END);
    text.push_str(LINE_END);
    text
}

/// Paired comparison of `a` and `b` on shared arrivals and triplets.
pub fn cmd_couple(cfg: &RunConfig, a: &PolicySpec, b: &PolicySpec) -> Result<CoupleResult> {
    let params = cfg.model_params()?;
    let sim = cfg.sim_config()?;
    let pa = load_policy_spec(cfg, &params, a)?;
    let pb = load_policy_spec(cfg, &params, b)?;
    let report = coupled_compare(pa.policy.as_ref(), pb.policy.as_ref(), &params, &sim)?;
    let text = couple_text(&report);
    let out_dir = cfg.out_dir();
    ensure_dir(&out_dir)?;
    write_text(&out_dir.join("couple.txt"), &text)?;
    write_json(&out_dir.join("couple.json"), &versioned("coupled_report", &report))?;
    let unconverged = [pa.solve_status, pb.solve_status].contains(&Some(ViStatus::MaxIterations));
    let exit = if unconverged { Exit::NotConverged } else { Exit::Ok };
    Ok(CoupleResult { report, text, exit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use offload_core::{Action, State};

    #[test]
    fn grid_encodes_composite_and_skips_empty_base() {
        let space = StateSpace::new(2).unwrap();
        let mut pi = PolicyTable::from_fn(space, |_| Action::Idle);
        pi.set(State::new(1, 0, 0, 0), Action::AssignSm1ThenSm2);
        pi.set(State::new(2, 0, 0, 1), Action::AssignSm2);
        let csv = grid_csv(&pi, 0, 0).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], GRID_HEADER);
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "1,0,1,1");
        assert_eq!(lines[5], "2,1,2,0");
        assert!(grid_csv(&pi, 2, 0).is_err());
    }

    #[test]
    fn policy_specs_parse() {
        assert_eq!("optimal".parse::<PolicySpec>().unwrap(), PolicySpec::Optimal);
        assert_eq!(
            "non_idling".parse::<PolicySpec>().unwrap(),
            PolicySpec::Baseline(Baseline::NonIdling)
        );
        assert_eq!(
            "runs/policy.bin".parse::<PolicySpec>().unwrap(),
            PolicySpec::File("runs/policy.bin".into())
        );
    }

    #[test]
    fn instability_rules() {
        let p = ModelParams::from_utilization(0.95, 1.0, 10.0, 0.6).unwrap();
        assert!(is_unstable(&PolicySpec::Baseline(Baseline::OffloadOnly), &p));
        assert!(!is_unstable(&PolicySpec::Baseline(Baseline::NonIdling), &p));
        let q = ModelParams::from_utilization(1.0, 1.0, 10.0, 0.6).unwrap();
        assert!(is_unstable(&PolicySpec::Optimal, &q));
    }
}
