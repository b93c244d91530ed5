use offload_core::policy::LazyOffload;
use offload_core::simulator::{audit_event_log, mm1_reference, simulate_replication, CouplingMode, EventKind, EventRecord};
use offload_core::solver::ViOptions;
use offload_core::{
    build_problem, coupled_compare, simulate, value_iterate, Baseline, Discount, ModelParams, Policy, SimConfig, State,
    TablePolicy,
};

fn config_a() -> ModelParams {
    ModelParams::from_utilization(0.4, 1.0, 8.0, 0.4).unwrap()
}

fn short(seed: u64) -> SimConfig {
    SimConfig {
        horizon: 2_000.0,
        warmup: 200.0,
        replications: 4,
        seed,
        ..SimConfig::default()
    }
}

fn event_log<P: Policy + ?Sized>(policy: &P, params: &ModelParams, cfg: &SimConfig, rep: usize) -> Vec<EventRecord> {
    let mut log = Vec::new();
    simulate_replication(policy, params, cfg, rep, |e| log.push(*e)).unwrap();
    log
}

/// Replays a log and checks that every record follows from its predecessor
/// by exactly the move its kind names.
fn replay(log: &[EventRecord]) -> (u64, u64) {
    let mut prev = State::EMPTY;
    let mut t = 0.0;
    let (mut arrivals, mut done) = (0u64, 0u64);
    for e in log {
        assert!(e.time >= t, "time went backwards at {:?}", e);
        t = e.time;
        let s = e.state;
        let expect = match e.kind {
            EventKind::Arrival => {
                arrivals += 1;
                State { n0: prev.n0 + 1, ..prev }
            }
            EventKind::AssignSm1 => {
                assert!(!prev.i1 && prev.n0 > 0, "second SM1 job or empty base queue: {prev} -> {s}");
                State { n0: prev.n0 - 1, i1: true, ..prev }
            }
            EventKind::AssignSm2 => {
                assert!(!prev.i2 && prev.n0 > 0, "second local job or empty base queue: {prev} -> {s}");
                State { n0: prev.n0 - 1, i2: true, ..prev }
            }
            EventKind::LocalCompletion => {
                assert!(prev.i2);
                State { i2: false, n2: prev.n2 + 1, ..prev }
            }
            EventKind::CloudSm2Completion => {
                assert!(prev.n2 > 0);
                done += 1;
                State { n2: prev.n2 - 1, ..prev }
            }
            EventKind::CloudSm1Completion => {
                assert!(prev.i1);
                assert_eq!(prev.n2, 0, "SM1 job served while SM2 work waits at {prev}");
                done += 1;
                State { i1: false, ..prev }
            }
        };
        assert_eq!(s, expect, "{:?} from {prev}", e.kind);
        assert_eq!(u64::from(s.total_jobs()), arrivals - done);
        prev = s;
    }
    (arrivals, done)
}

fn small_optimal() -> TablePolicy {
    let p = config_a();
    let k = build_problem(&p, 15, Discount::Alpha(0.99)).unwrap();
    let out = value_iterate(&k, &ViOptions::default()).unwrap();
    TablePolicy::new(out.policy, "optimal")
}

#[test]
fn logs_replay_exactly_for_every_policy() {
    let p = ModelParams::from_utilization(0.7, 1.0, 8.0, 0.4).unwrap();
    let cfg = short(5);
    let opt = small_optimal();
    let policies: [&dyn Policy; 4] = [&Baseline::OffloadOnly, &Baseline::NonIdling, &opt, &LazyOffload { start_at: 3 }];
    for pol in policies {
        let log = event_log(pol, &p, &cfg, 0);
        let (arrivals, done) = replay(&log);
        let audit = audit_event_log(&log).unwrap();
        assert_eq!((audit.arrivals, audit.departures), (arrivals, done));
        assert!(arrivals > 1000 && done > 0, "{}", pol.name());
    }
}

#[test]
fn replications_are_deterministic_in_the_seed() {
    let p = config_a();
    let a = event_log(&Baseline::NonIdling, &p, &short(9), 1);
    let b = event_log(&Baseline::NonIdling, &p, &short(9), 1);
    assert_eq!(a, b);
    let c = event_log(&Baseline::NonIdling, &p, &short(10), 1);
    assert_ne!(a, c);
    let d = event_log(&Baseline::NonIdling, &p, &short(9), 2);
    assert_ne!(a, d);
    let r1 = simulate(&Baseline::NonIdling, &p, &short(9)).unwrap();
    let r2 = simulate(&Baseline::NonIdling, &p, &short(9)).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn conservation_and_littles_law() {
    let p = config_a();
    let cfg = SimConfig {
        horizon: 20_000.0,
        warmup: 2_000.0,
        replications: 10,
        seed: 21,
        ..SimConfig::default()
    };
    for pol in [Baseline::OffloadOnly, Baseline::NonIdling] {
        let r = simulate(&pol, &p, &cfg).unwrap();
        assert!(r.conserves_jobs());
        let (gap, tol) = r.little_law_gap();
        assert!(r.satisfies_little_law(), "{pol}: gap {gap} tol {tol}");
    }
}

#[test]
fn no_arrivals_no_events() {
    let p = config_a().without_arrivals();
    let log = event_log(&Baseline::NonIdling, &p, &short(1), 0);
    assert!(log.is_empty());
    let r = simulate(&Baseline::NonIdling, &p, &short(1)).unwrap();
    assert_eq!(r.time_avg_jobs.mean, 0.0);
    assert_eq!(r.jobs_completed, 0);
}

#[test]
fn offload_only_matches_mm1() {
    let p = config_a();
    let cfg = SimConfig {
        horizon: 30_000.0,
        warmup: 3_000.0,
        replications: 10,
        seed: 4,
        ..SimConfig::default()
    };
    let r = simulate(&Baseline::OffloadOnly, &p, &cfg).unwrap();
    let target = mm1_reference(p.lambda, p.mu_c1).unwrap();
    assert!((target - 0.227272).abs() < 1e-6);
    assert!(r.sojourn.contains(target), "{:?} vs {target}", r.sojourn);
    assert!(r.sojourn.half_width < 0.03 * r.sojourn.mean);
}

#[test]
fn lazy_offload_is_pathwise_dominated() {
    let p = config_a();
    let r = coupled_compare(&LazyOffload { start_at: 4 }, &Baseline::OffloadOnly, &p, &short(3)).unwrap();
    assert!(r.pathwise_dominance(), "dominance fraction {}", r.dominance_fraction);
    assert!(r.difference.mean < 0.0);
}

#[test]
fn identical_policies_have_zero_difference() {
    let p = config_a();
    let r = coupled_compare(&Baseline::NonIdling, &Baseline::NonIdling, &p, &short(8)).unwrap();
    assert_eq!(r.difference.mean, 0.0);
    assert_eq!(r.difference.half_width, 0.0);
    assert_eq!(r.a.sojourn, r.b.sojourn);
    let indep = SimConfig {
        coupling: CouplingMode::Independent,
        ..short(8)
    };
    let r = coupled_compare(&Baseline::NonIdling, &Baseline::NonIdling, &p, &indep).unwrap();
    assert_ne!(r.difference.mean, 0.0);
}
