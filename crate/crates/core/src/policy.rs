//! Policies usable by the simulator: solved tables and rule-based baselines.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kernel::StateSpace;
use crate::model::{admissible_actions, Action, State};
use crate::solver::PolicyTable;

pub trait Policy: Sync {
    fn action(&self, s: State) -> Action;

    /// True when the lookup for `s` had to clamp it into a truncation.
    fn saturates(&self, _s: State) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// SM1 whenever admissible, never SM2.
pub fn offload_only(s: State) -> Action {
    if admissible_actions(s).contains(Action::AssignSm1) {
        Action::AssignSm1
    } else {
        Action::Idle
    }
}

/// Cloud-first, then SM2 whenever admissible.
pub fn non_idling(s: State) -> Action {
    let adm = admissible_actions(s);
    if s.in_cloud_idle_region() {
        if adm.contains(Action::AssignSm1ThenSm2) {
            Action::AssignSm1ThenSm2
        } else {
            Action::AssignSm1
        }
    } else if adm.contains(Action::AssignSm2) {
        Action::AssignSm2
    } else {
        Action::Idle
    }
}

#[derive(Debug, Error)]
#[error("unknown policy {0:?} (expected offload_only or non_idling)")]
pub struct UnknownPolicy(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    OffloadOnly,
    NonIdling,
}

impl Baseline {
    pub const ALL: [Baseline; 2] = [Baseline::OffloadOnly, Baseline::NonIdling];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::OffloadOnly => "offload_only",
            Baseline::NonIdling => "non_idling",
        }
    }

    pub fn table(self, space: StateSpace) -> PolicyTable {
        PolicyTable::from_fn(space, |s| self.action(s))
    }
}

impl FromStr for Baseline {
    type Err = UnknownPolicy;

    fn from_str(name: &str) -> Result<Self, Self::Err> {
        match name {
            "offload_only" => Ok(Baseline::OffloadOnly),
            "non_idling" => Ok(Baseline::NonIdling),
            other => Err(UnknownPolicy(other.to_owned())),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn baseline(name: &str) -> Result<Baseline, UnknownPolicy> {
    name.parse()
}

impl Policy for Baseline {
    fn action(&self, s: State) -> Action {
        match self {
            Baseline::OffloadOnly => offload_only(s),
            Baseline::NonIdling => non_idling(s),
        }
    }

    fn name(&self) -> String {
        self.as_str().to_owned()
    }
}

/// Offload-only, except that it idles with an otherwise empty system until
/// `start_at` jobs have queued up.
#[derive(Debug, Clone, Copy)]
pub struct LazyOffload {
    pub start_at: u32,
}

impl Policy for LazyOffload {
    fn action(&self, s: State) -> Action {
        let empty_elsewhere = !s.i2 && !s.i1 && s.n2 == 0;
        if empty_elsewhere && s.n0 < self.start_at {
            Action::Idle
        } else {
            offload_only(s)
        }
    }

    fn name(&self) -> String {
        format!("lazy_offload_{}", self.start_at)
    }
}

/// Lookup into a solved table. States beyond the truncation are clamped to
/// `n_max` in each queue, which never changes admissibility.
#[derive(Debug, Clone)]
pub struct TablePolicy {
    table: PolicyTable,
    space: StateSpace,
    label: String,
}

impl TablePolicy {
    pub fn new(table: PolicyTable, label: impl Into<String>) -> Self {
        let space = table.space();
        Self {
            table,
            space,
            label: label.into(),
        }
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }
}

impl Policy for TablePolicy {
    fn action(&self, s: State) -> Action {
        let id = self
            .space
            .id_of(self.space.saturate(s))
            .expect("saturated state lies in the space");
        self.table.actions[id]
    }

    fn saturates(&self, s: State) -> bool {
        !self.space.contains(s)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}
