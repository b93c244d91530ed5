//! Replay check for event logs.

use std::fmt;

use serde::Serialize;

use crate::model::State;

use super::system::{EventKind, EventRecord};

/// Totals of a log that replayed cleanly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LogAudit {
    pub events: u64,
    pub arrivals: u64,
    pub departures: u64,
    pub in_system: u64,
}

/// First record that does not follow from its predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct LogViolation {
    pub index: usize,
    pub before: State,
    pub record: EventRecord,
    pub reason: &'static str,
}

impl fmt::Display for LogViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "event {} ({} at t = {}): {} -> {}: {}",
            self.index,
            self.record.kind.as_str(),
            self.record.time,
            self.before,
            self.record.state,
            self.reason
        )
    }
}

impl std::error::Error for LogViolation {}

/// Replays `log` from the empty system. Every record must be exactly the
/// move its kind names, which covers unit storage (no second job at the
/// local server or in the SM1 slot), SEPT (no SM1 completion while SM2 jobs
/// are at the cloud), job conservation and non-decreasing time.
pub fn audit_event_log(log: &[EventRecord]) -> Result<LogAudit, LogViolation> {
    let mut prev = State::EMPTY;
    let mut t = 0.0;
    let mut audit = LogAudit::default();
    for (index, rec) in log.iter().enumerate() {
        let fail = |reason| LogViolation {
            index,
            before: prev,
            record: *rec,
            reason,
        };
        if !(rec.time >= t) {
            return Err(fail("time decreased"));
        }
        t = rec.time;
        let expect = match rec.kind {
            EventKind::Arrival => {
                audit.arrivals += 1;
                State { n0: prev.n0 + 1, ..prev }
            }
            EventKind::AssignSm1 => {
                if prev.n0 == 0 {
                    return Err(fail("assignment from an empty base queue"));
                }
                if prev.i1 {
                    return Err(fail("second job in the SM1 slot"));
                }
                State { n0: prev.n0 - 1, i1: true, ..prev }
            }
            EventKind::AssignSm2 => {
                if prev.n0 == 0 {
                    return Err(fail("assignment from an empty base queue"));
                }
                if prev.i2 {
                    return Err(fail("second job at the local server"));
                }
                State { n0: prev.n0 - 1, i2: true, ..prev }
            }
            EventKind::LocalCompletion => {
                if !prev.i2 {
                    return Err(fail("local completion with an idle local server"));
                }
                State { i2: false, n2: prev.n2 + 1, ..prev }
            }
            EventKind::CloudSm2Completion => {
                if prev.n2 == 0 {
                    return Err(fail("SM2 completion with no SM2 job at the cloud"));
                }
                audit.departures += 1;
                State { n2: prev.n2 - 1, ..prev }
            }
            EventKind::CloudSm1Completion => {
                if !prev.i1 {
                    return Err(fail("SM1 completion with an empty SM1 slot"));
                }
                if prev.n2 > 0 {
                    return Err(fail("SM1 job served while SM2 jobs wait at the cloud"));
                }
                audit.departures += 1;
                State { i1: false, ..prev }
            }
        };
        if rec.state != expect {
            return Err(fail("state does not match the event"));
        }
        audit.events += 1;
        prev = rec.state;
    }
    audit.in_system = u64::from(prev.total_jobs());
    Ok(audit)
}
