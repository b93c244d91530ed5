//! Continuous-time simulation of the offloading system under any policy.
//!
//! Replications are independent (derived seeds) and run in parallel; each
//! replication's event loop is sequential. Coupled comparisons feed two
//! systems the same arrival times and the same per-job service triplets.

mod audit;
mod rng;
mod system;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::model::{Action, ModelParams, State};
use crate::par;
use crate::policy::Policy;

pub use audit::{audit_event_log, LogAudit, LogViolation};
pub use rng::{gen_triplet, substream, JobSource, JobTriplet, Stream};
pub use system::{EventKind, EventRecord};
use system::System;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("replication {replication}: policy chose inadmissible {action} at {state} (t = {time})")]
    PolicyFailure {
        replication: usize,
        time: f64,
        state: State,
        action: Action,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    Independent,
    SharedArrivalsAndTriplets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: f64,
    /// Statistics only cover `[warmup, horizon]`.
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
    pub coupling: CouplingMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 1e5,
            warmup: 1e4,
            replications: 20,
            seed: 1,
            coupling: CouplingMode::SharedArrivalsAndTriplets,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(SimError::BadConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(SimError::BadConfig(format!(
                "warmup {} must lie in [0, horizon = {})",
                self.warmup, self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(SimError::BadConfig("at least one replication is required".into()));
        }
        Ok(())
    }

    fn window(&self) -> f64 {
        self.horizon - self.warmup
    }
}

/// Statistics of one replication over the measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationStats {
    /// Mean sojourn of jobs completing in the window; 0 if none did.
    pub mean_sojourn: f64,
    pub time_avg_jobs: f64,
    pub completed_in_window: u64,
    /// Completions per unit time in the window.
    pub throughput: f64,
    pub arrivals: u64,
    pub completed: u64,
    pub in_system_at_end: u64,
    pub saturation_events: u64,
}

impl ReplicationStats {
    fn from_counters(c: &system::Counters, in_system: u64, window: f64) -> Self {
        Self {
            mean_sojourn: if c.completed_in_window > 0 {
                c.sojourn_sum / c.completed_in_window as f64
            } else {
                0.0
            },
            time_avg_jobs: c.area / window,
            completed_in_window: c.completed_in_window,
            throughput: c.completed_in_window as f64 / window,
            arrivals: c.arrivals,
            completed: c.completed,
            in_system_at_end: in_system,
            saturation_events: c.saturation_events,
        }
    }

    /// Jobs completed plus jobs left equals jobs arrived.
    pub fn conserves_jobs(&self) -> bool {
        self.completed + self.in_system_at_end == self.arrivals
    }
}

/// Mean with a two-sided 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self {
                mean,
                half_width: f64::INFINITY,
                std_err: f64::INFINITY,
            };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_err = (var / n as f64).sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Self {
            mean,
            half_width: t * std_err,
            std_err,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub policy: String,
    pub sojourn: Estimate,
    pub time_avg_jobs: Estimate,
    pub throughput: Estimate,
    pub jobs_completed: u64,
    pub saturation_events: u64,
    pub replications: Vec<ReplicationStats>,
}

impl DelayReport {
    fn from_replications(policy: String, reps: Vec<ReplicationStats>) -> Self {
        let col = |f: fn(&ReplicationStats) -> f64| reps.iter().map(f).collect::<Vec<_>>();
        Self {
            policy,
            sojourn: Estimate::from_samples(&col(|r| r.mean_sojourn)),
            time_avg_jobs: Estimate::from_samples(&col(|r| r.time_avg_jobs)),
            throughput: Estimate::from_samples(&col(|r| r.throughput)),
            jobs_completed: reps.iter().map(|r| r.completed_in_window).sum(),
            saturation_events: reps.iter().map(|r| r.saturation_events).sum(),
            replications: reps,
        }
    }

    pub fn mean_sojourn(&self) -> f64 {
        self.sojourn.mean
    }

    /// `(|mean N - mean(throughput * sojourn)|, 3 combined standard errors)`.
    pub fn little_law_gap(&self) -> (f64, f64) {
        let lw: Vec<f64> = self
            .replications
            .iter()
            .map(|r| r.throughput * r.mean_sojourn)
            .collect();
        let lw = Estimate::from_samples(&lw);
        let gap = (self.time_avg_jobs.mean - lw.mean).abs();
        (gap, 3.0 * (self.time_avg_jobs.std_err + lw.std_err))
    }

    pub fn satisfies_little_law(&self) -> bool {
        let (gap, tol) = self.little_law_gap();
        gap <= tol
    }

    pub fn conserves_jobs(&self) -> bool {
        self.replications.iter().all(ReplicationStats::conserves_jobs)
    }
}

fn run_until<P: Policy + ?Sized>(
    sys: &mut System<'_, P>,
    horizon: f64,
    log: &mut impl FnMut(&EventRecord),
) -> Result<(), SimError> {
    while sys.next_event_time() <= horizon {
        sys.step(log)?;
    }
    sys.advance_to(horizon);
    Ok(())
}

/// One replication, reporting every event to `log`.
pub fn simulate_replication<P: Policy + ?Sized>(
    policy: &P,
    params: &ModelParams,
    cfg: &SimConfig,
    replication: usize,
    mut log: impl FnMut(&EventRecord),
) -> Result<ReplicationStats, SimError> {
    cfg.validate()?;
    let source = JobSource::new(params, cfg.seed, replication as u64, 0);
    let mut sys = System::new(policy, source, cfg.warmup, replication);
    run_until(&mut sys, cfg.horizon, &mut log)?;
    Ok(ReplicationStats::from_counters(&sys.counters, sys.jobs(), cfg.window()))
}

/// Independent replications of `policy`, merged by replication index.
pub fn simulate<P: Policy + ?Sized>(
    policy: &P,
    params: &ModelParams,
    cfg: &SimConfig,
) -> Result<DelayReport, SimError> {
    cfg.validate()?;
    let reps = par::map_range(cfg.replications, |r| {
        simulate_replication(policy, params, cfg, r, |_| {})
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(DelayReport::from_replications(policy.name(), reps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedReplication {
    /// Event instants (union of both systems) observed in the run.
    pub events: u64,
    /// Event instants with `n_b <= n_a`.
    pub dominated: u64,
    pub delay_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledReport {
    pub a: DelayReport,
    pub b: DelayReport,
    /// Per-replication `mean_sojourn(b) - mean_sojourn(a)`.
    pub difference: Estimate,
    /// Fraction of all event instants with `n_b(t) <= n_a(t)`.
    pub dominance_fraction: f64,
    pub paired: Vec<PairedReplication>,
}

impl CoupledReport {
    /// Every replication had `n_b <= n_a` at every event instant.
    pub fn pathwise_dominance(&self) -> bool {
        self.paired.iter().all(|p| p.dominated == p.events)
    }
}

fn coupled_replication<A: Policy + ?Sized, B: Policy + ?Sized>(
    a: &A,
    b: &B,
    params: &ModelParams,
    cfg: &SimConfig,
    replication: usize,
) -> Result<(ReplicationStats, ReplicationStats, PairedReplication), SimError> {
    let tag_b = match cfg.coupling {
        CouplingMode::SharedArrivalsAndTriplets => 0,
        CouplingMode::Independent => 1,
    };
    let rep = replication as u64;
    let mut sa = System::new(a, JobSource::new(params, cfg.seed, rep, 0), cfg.warmup, replication);
    let mut sb = System::new(b, JobSource::new(params, cfg.seed, rep, tag_b), cfg.warmup, replication);
    let (mut events, mut dominated) = (0u64, 0u64);
    let mut noop = |_: &EventRecord| {};
    loop {
        let ta = sa.next_event_time();
        let tb = sb.next_event_time();
        let t = ta.min(tb);
        if t > cfg.horizon {
            break;
        }
        if ta <= t {
            sa.step(&mut noop)?;
        } else {
            sa.advance_to(t);
        }
        if tb <= t {
            sb.step(&mut noop)?;
        } else {
            sb.advance_to(t);
        }
        events += 1;
        if sb.jobs() <= sa.jobs() {
            dominated += 1;
        }
    }
    sa.advance_to(cfg.horizon);
    sb.advance_to(cfg.horizon);
    let window = cfg.window();
    let ra = ReplicationStats::from_counters(&sa.counters, sa.jobs(), window);
    let rb = ReplicationStats::from_counters(&sb.counters, sb.jobs(), window);
    let paired = PairedReplication {
        events,
        dominated,
        delay_difference: rb.mean_sojourn - ra.mean_sojourn,
    };
    Ok((ra, rb, paired))
}

/// Runs `a` and `b` side by side on coupled inputs.
pub fn coupled_compare<A: Policy + ?Sized, B: Policy + ?Sized>(
    a: &A,
    b: &B,
    params: &ModelParams,
    cfg: &SimConfig,
) -> Result<CoupledReport, SimError> {
    cfg.validate()?;
    let runs = par::map_range(cfg.replications, |r| coupled_replication(a, b, params, cfg, r))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut ra = Vec::with_capacity(runs.len());
    let mut rb = Vec::with_capacity(runs.len());
    let mut paired = Vec::with_capacity(runs.len());
    for (x, y, p) in runs {
        ra.push(x);
        rb.push(y);
        paired.push(p);
    }
    let diffs: Vec<f64> = paired.iter().map(|p| p.delay_difference).collect();
    let events: u64 = paired.iter().map(|p| p.events).sum();
    let dominated: u64 = paired.iter().map(|p| p.dominated).sum();
    Ok(CoupledReport {
        a: DelayReport::from_replications(a.name(), ra),
        b: DelayReport::from_replications(b.name(), rb),
        difference: Estimate::from_samples(&diffs),
        dominance_fraction: if events > 0 { dominated as f64 / events as f64 } else { 1.0 },
        paired,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("unstable queue: service rate {mu} does not exceed arrival rate {lambda}")]
pub struct Unstable {
    pub lambda: f64,
    pub mu: f64,
}

/// M/M/1 mean sojourn `1 / (mu - lambda)`.
pub fn mm1_reference(lambda: f64, mu: f64) -> Result<f64, Unstable> {
    if mu <= lambda {
        return Err(Unstable { lambda, mu });
    }
    Ok(1.0 / (mu - lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Baseline;

    #[test]
    fn mm1_examples() {
        assert!((mm1_reference(3.6, 8.0).unwrap() - 0.227_272_727_272_727_27).abs() < 1e-15);
        assert_eq!(mm1_reference(0.0, 8.0).unwrap(), 0.125);
        assert!(mm1_reference(10.45, 10.0).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SimConfig { warmup: 2e5, ..ok }.validate().is_err());
        assert!(SimConfig { replications: 0, ..ok }.validate().is_err());
        assert!(SimConfig { horizon: -1.0, ..ok }.validate().is_err());
    }

    #[test]
    fn estimate_of_constant_samples() {
        let e = Estimate::from_samples(&[2.0, 2.0, 2.0]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.half_width, 0.0);
        assert!(Estimate::from_samples(&[1.0]).half_width.is_infinite());
    }

    #[test]
    fn t_quantile_for_twenty_replications() {
        // t_{0.975, 19} = 2.093
        let e = Estimate::from_samples(&(0..20).map(|i| i as f64).collect::<Vec<_>>());
        let t = e.half_width / e.std_err;
        assert!((t - 2.093).abs() < 1e-3, "{t}");
    }

    #[test]
    fn no_arrivals_means_no_jobs() {
        let p = ModelParams::derive_rates(3.6, 1.0, 8.0, 0.4).unwrap().without_arrivals();
        let cfg = SimConfig { horizon: 100.0, warmup: 10.0, replications: 2, ..Default::default() };
        let r = simulate(&Baseline::OffloadOnly, &p, &cfg).unwrap();
        assert_eq!(r.jobs_completed, 0);
        assert_eq!(r.mean_sojourn(), 0.0);
        assert_eq!(r.time_avg_jobs.mean, 0.0);
    }

    struct Broken;
    impl Policy for Broken {
        fn action(&self, _: State) -> Action {
            Action::AssignSm2
        }
        fn name(&self) -> String {
            "broken".into()
        }
    }

    #[test]
    fn inadmissible_policy_aborts() {
        let p = ModelParams::derive_rates(3.6, 1.0, 8.0, 0.4).unwrap();
        let cfg = SimConfig { horizon: 100.0, warmup: 10.0, replications: 2, ..Default::default() };
        assert!(matches!(
            simulate(&Broken, &p, &cfg),
            Err(SimError::PolicyFailure { .. })
        ));
    }
}
