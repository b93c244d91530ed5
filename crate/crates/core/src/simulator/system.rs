//! Event-by-event evolution of one offloading system.
//!
//! The cloud serves the head of the SM2 queue whenever it is non-empty and
//! the SM1 job otherwise (preemptive-resume; the SM1 job keeps its remaining
//! work while preempted). After every event the policy is consulted
//! repeatedly until it idles.

use std::collections::VecDeque;

use crate::model::{admissible_actions, Action, State};
use crate::policy::Policy;

use super::rng::{JobSource, JobTriplet};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    LocalCompletion,
    CloudSm1Completion,
    CloudSm2Completion,
    AssignSm1,
    AssignSm2,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::LocalCompletion => "local_done",
            EventKind::CloudSm1Completion => "cloud_sm1_done",
            EventKind::CloudSm2Completion => "cloud_sm2_done",
            EventKind::AssignSm1 => "assign_sm1",
            EventKind::AssignSm2 => "assign_sm2",
        }
    }
}

/// One event-log line: `time,kind,n0,i2,i1,n2` with the state after the
/// event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub state: State,
}

impl EventRecord {
    pub const CSV_HEADER: &'static str = "time,kind,n0,i2,i1,n2";

    pub fn csv_line(&self) -> String {
        format!(
            "{:e},{},{},{},{},{}",
            self.time,
            self.kind.as_str(),
            self.state.n0,
            self.state.i2 as u8,
            self.state.i1 as u8,
            self.state.n2
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    arrival: f64,
    triplet: JobTriplet,
}

/// Time-window accumulators.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Counters {
    pub arrivals: u64,
    pub completed: u64,
    pub completed_in_window: u64,
    pub sojourn_sum: f64,
    pub area: f64,
    pub saturation_events: u64,
}

pub(crate) struct System<'a, P: Policy + ?Sized> {
    policy: &'a P,
    source: JobSource,
    warmup: f64,
    now: f64,
    next_arrival: f64,
    base: VecDeque<Job>,
    local: Option<(Job, f64)>,
    sm1: Option<(Job, f64)>,
    sm2: VecDeque<(Job, f64)>,
    replication: usize,
    pub counters: Counters,
}

impl<'a, P: Policy + ?Sized> System<'a, P> {
    pub fn new(policy: &'a P, mut source: JobSource, warmup: f64, replication: usize) -> Self {
        let next_arrival = source.next_gap();
        Self {
            policy,
            source,
            warmup,
            now: 0.0,
            next_arrival,
            base: VecDeque::new(),
            local: None,
            sm1: None,
            sm2: VecDeque::new(),
            replication,
            counters: Counters::default(),
        }
    }

    pub fn state(&self) -> State {
        State {
            n0: self.base.len() as u32,
            i2: self.local.is_some(),
            i1: self.sm1.is_some(),
            n2: self.sm2.len() as u32,
        }
    }

    pub fn jobs(&self) -> u64 {
        (self.base.len() + self.sm2.len()) as u64 + self.local.is_some() as u64 + self.sm1.is_some() as u64
    }

    fn cloud_completion_time(&self) -> f64 {
        if let Some((_, rem)) = self.sm2.front() {
            self.now + rem
        } else if let Some((_, rem)) = &self.sm1 {
            self.now + rem
        } else {
            f64::INFINITY
        }
    }

    fn local_completion_time(&self) -> f64 {
        self.local.map_or(f64::INFINITY, |(_, t)| t)
    }

    pub fn next_event_time(&self) -> f64 {
        self.next_arrival
            .min(self.local_completion_time())
            .min(self.cloud_completion_time())
    }

    /// Moves the clock to `t` without processing an event.
    pub fn advance_to(&mut self, t: f64) {
        debug_assert!(t >= self.now);
        let dt = t - self.now;
        if dt > 0.0 {
            let lo = self.now.max(self.warmup);
            if t > lo {
                self.counters.area += self.jobs() as f64 * (t - lo);
            }
            if let Some((_, rem)) = self.sm2.front_mut() {
                *rem -= dt;
            } else if let Some((_, rem)) = &mut self.sm1 {
                *rem -= dt;
            }
        }
        self.now = t;
    }

    fn complete(&mut self, job: Job) {
        self.counters.completed += 1;
        if self.now >= self.warmup {
            self.counters.completed_in_window += 1;
            self.counters.sojourn_sum += self.now - job.arrival;
        }
    }

    /// Processes the next event (ties: arrival, local, cloud) and the
    /// decisions that follow it.
    pub fn step(&mut self, log: &mut impl FnMut(&EventRecord)) -> Result<(), SimError> {
        let t_arr = self.next_arrival;
        let t_loc = self.local_completion_time();
        let t_cloud = self.cloud_completion_time();
        let t = t_arr.min(t_loc).min(t_cloud);
        self.advance_to(t);
        let kind = if t_arr <= t {
            let triplet = self.source.next_triplet();
            self.base.push_back(Job { arrival: t, triplet });
            self.counters.arrivals += 1;
            self.next_arrival = t + self.source.next_gap();
            EventKind::Arrival
        } else if t_loc <= t {
            let (job, _) = self.local.take().expect("local job in service");
            self.sm2.push_back((job, job.triplet.sigma_c2));
            EventKind::LocalCompletion
        } else if let Some((job, _)) = self.sm2.pop_front() {
            self.complete(job);
            EventKind::CloudSm2Completion
        } else {
            let (job, _) = self.sm1.take().expect("cloud job in service");
            self.complete(job);
            EventKind::CloudSm1Completion
        };
        log(&EventRecord {
            time: t,
            kind,
            state: self.state(),
        });
        self.decide(log)
    }

    fn decide(&mut self, log: &mut impl FnMut(&EventRecord)) -> Result<(), SimError> {
        // every non-idle action removes a base-queue job and fills a unit slot
        for _ in 0..3 {
            let s = self.state();
            if self.policy.saturates(s) {
                self.counters.saturation_events += 1;
            }
            let action = self.policy.action(s);
            if !admissible_actions(s).contains(action) {
                return Err(SimError::PolicyFailure {
                    replication: self.replication,
                    time: self.now,
                    state: s,
                    action,
                });
            }
            match action {
                Action::Idle => return Ok(()),
                Action::AssignSm1 => self.assign_sm1(log),
                Action::AssignSm2 => self.assign_sm2(log),
                Action::AssignSm1ThenSm2 => {
                    self.assign_sm1(log);
                    self.assign_sm2(log);
                }
            }
        }
        Ok(())
    }

    fn assign_sm1(&mut self, log: &mut impl FnMut(&EventRecord)) {
        let job = self.base.pop_front().expect("admissible SM1 has a base job");
        self.sm1 = Some((job, job.triplet.sigma_c1));
        log(&EventRecord {
            time: self.now,
            kind: EventKind::AssignSm1,
            state: self.state(),
        });
    }

    fn assign_sm2(&mut self, log: &mut impl FnMut(&EventRecord)) {
        let job = self.base.pop_front().expect("admissible SM2 has a base job");
        self.local = Some((job, self.now + job.triplet.sigma_l2));
        log(&EventRecord {
            time: self.now,
            kind: EventKind::AssignSm2,
            state: self.state(),
        });
    }
}
