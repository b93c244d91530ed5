//! Domain types for the two-stage offloading system.
//!
//! Jobs wait in a base queue until the mode selector assigns them either to
//! SM1 (served entirely at the cloud at rate `mu_c1 = K mu0`) or to SM2
//! (a local stage at `mu_l2 = mu0 / f` followed by a cloud stage at
//! `mu_c2 = K mu0 / (1 - f)`). The cloud serves SM2 jobs with preemptive
//! priority over the single SM1 job.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("arrival rate must be positive, got {0}")]
    NonPositiveArrivalRate(f64),
    #[error("local capacity mu0 must be positive, got {0}")]
    NonPositiveCapacity(f64),
    #[error("cloud speed-up K must exceed 1, got {0}")]
    SpeedupTooSmall(f64),
    #[error("local fraction f must lie in (0, 1), got {0}")]
    FractionOutOfRange(f64),
    #[error("dominance condition violated: f = {f} must exceed 1/K = {inv_k}")]
    DominanceViolated { f: f64, inv_k: f64 },
    #[error("utilization must be positive, got {0}")]
    NonPositiveUtilization(f64),
    #[error("heterogeneous rates must be positive, got mu_c1={mu_c1}, mu_l2={mu_l2}, mu_c2={mu_c2}")]
    NonPositiveServiceRate { mu_c1: f64, mu_l2: f64, mu_c2: f64 },
    #[error("no feasible split: mu_c2 = {mu_c2} must exceed mu_c1 = {mu_c1}")]
    CloudStageNotFaster { mu_c1: f64, mu_c2: f64 },
    #[error("dominance condition violated: mu_c1 = {mu_c1} must exceed mu_l2 = {mu_l2}")]
    HeterogeneousDominance { mu_c1: f64, mu_l2: f64 },
    #[error("operator {op} is undefined at state {state}: {reason}")]
    OperatorDomain {
        op: Operator,
        state: State,
        reason: &'static str,
    },
    #[error("action {action} is not admissible at state {state}")]
    Inadmissible { action: Action, state: State },
    #[error("indicator components must be 0 or 1, got i2={i2}, i1={i1}")]
    BadIndicator { i2: u32, i1: u32 },
}

/// Arrival rate plus the three service-mode rates derived from `(mu0, K, f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu0: f64,
    pub k: f64,
    pub f: f64,
    pub mu_c1: f64,
    pub mu_l2: f64,
    pub mu_c2: f64,
}

/// The `(mu0, K, f)` triple that reproduces a given set of stage rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceScale {
    pub mu0: f64,
    pub k: f64,
    pub f: f64,
}

impl ModelParams {
    /// Validates the primitive parameters and fills in the mode rates.
    pub fn derive_rates(lambda: f64, mu0: f64, k: f64, f: f64) -> Result<Self, ModelError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ModelError::NonPositiveArrivalRate(lambda));
        }
        if !(mu0 > 0.0) || !mu0.is_finite() {
            return Err(ModelError::NonPositiveCapacity(mu0));
        }
        if !(k > 1.0) || !k.is_finite() {
            return Err(ModelError::SpeedupTooSmall(k));
        }
        if !(f > 0.0 && f < 1.0) {
            return Err(ModelError::FractionOutOfRange(f));
        }
        if f * k <= 1.0 {
            return Err(ModelError::DominanceViolated { f, inv_k: 1.0 / k });
        }
        Ok(Self {
            lambda,
            mu0,
            k,
            f,
            mu_c1: k * mu0,
            mu_l2: mu0 / f,
            mu_c2: k * mu0 / (1.0 - f),
        })
    }

    /// Builds parameters from utilization `rho = lambda / ((K + 1) mu0)`.
    pub fn from_utilization(rho: f64, mu0: f64, k: f64, f: f64) -> Result<Self, ModelError> {
        let lambda = lambda_from_utilization(rho, mu0, k)?;
        Self::derive_rates(lambda, mu0, k, f)
    }

    /// Casts a heterogeneous two-stage system `(mu_c1, mu_l2, mu_c2)` into the
    /// homogeneous parametrisation.
    pub fn from_heterogeneous(
        lambda: f64,
        mu_c1: f64,
        mu_l2: f64,
        mu_c2: f64,
    ) -> Result<Self, ModelError> {
        let scale = ServiceScale::from_heterogeneous(mu_c1, mu_l2, mu_c2)?;
        let mut p = Self::derive_rates(lambda, scale.mu0, scale.k, scale.f)?;
        // Keep the caller's rates bit-exact rather than the recomputed ones.
        p.mu_c1 = mu_c1;
        p.mu_l2 = mu_l2;
        p.mu_c2 = mu_c2;
        Ok(p)
    }

    /// Same service rates, no arrivals. Only meaningful as the `lambda -> 0`
    /// limit in simulations and uniformization; `derive_rates` never
    /// produces it.
    pub fn without_arrivals(&self) -> Self {
        Self { lambda: 0.0, ..*self }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ModelError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ModelError::NonPositiveArrivalRate(lambda));
        }
        Ok(Self { lambda, ..*self })
    }

    /// `rho = lambda / ((K + 1) mu0)`.
    pub fn utilization(&self) -> f64 {
        self.lambda / ((self.k + 1.0) * self.mu0)
    }

    pub fn scale(&self) -> ServiceScale {
        ServiceScale {
            mu0: self.mu0,
            k: self.k,
            f: self.f,
        }
    }
}

impl ServiceScale {
    pub fn from_heterogeneous(mu_c1: f64, mu_l2: f64, mu_c2: f64) -> Result<Self, ModelError> {
        if !(mu_c1 > 0.0 && mu_l2 > 0.0 && mu_c2 > 0.0) {
            return Err(ModelError::NonPositiveServiceRate { mu_c1, mu_l2, mu_c2 });
        }
        if mu_c2 <= mu_c1 {
            return Err(ModelError::CloudStageNotFaster { mu_c1, mu_c2 });
        }
        if mu_c1 <= mu_l2 {
            return Err(ModelError::HeterogeneousDominance { mu_c1, mu_l2 });
        }
        let gap = mu_c2 - mu_c1;
        Ok(Self {
            mu0: mu_l2 * gap / mu_c2,
            k: mu_c1 * mu_c2 / (mu_l2 * gap),
            f: gap / mu_c2,
        })
    }
}

/// `lambda = rho (K + 1) mu0`.
pub fn lambda_from_utilization(rho: f64, mu0: f64, k: f64) -> Result<f64, ModelError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(ModelError::NonPositiveUtilization(rho));
    }
    Ok(rho * (k + 1.0) * mu0)
}

/// System state `(n0, i2, i1, n2)`.
///
/// `n0` jobs wait in the base queue, `i2` flags an SM2 job at the local
/// server, `i1` flags the SM1 job at the cloud and `n2` counts SM2 jobs at the
/// cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub n0: u32,
    pub i2: bool,
    pub i1: bool,
    pub n2: u32,
}

impl State {
    pub const EMPTY: State = State {
        n0: 0,
        i2: false,
        i1: false,
        n2: 0,
    };

    /// Panics if an indicator is not 0 or 1; use [`State::try_new`] for
    /// untrusted input.
    pub const fn new(n0: u32, i2: u32, i1: u32, n2: u32) -> Self {
        assert!(i2 <= 1 && i1 <= 1, "indicator components must be 0 or 1");
        State {
            n0,
            i2: i2 == 1,
            i1: i1 == 1,
            n2,
        }
    }

    pub fn try_new(n0: u32, i2: u32, i1: u32, n2: u32) -> Result<Self, ModelError> {
        if i2 > 1 || i1 > 1 {
            return Err(ModelError::BadIndicator { i2, i1 });
        }
        Ok(Self::new(n0, i2, i1, n2))
    }

    /// Total number of jobs `n(s)`.
    pub fn total_jobs(&self) -> u32 {
        self.n0 + self.i2 as u32 + self.i1 as u32 + self.n2
    }

    /// Cloud queues empty and base queue non-empty.
    pub fn in_cloud_idle_region(&self) -> bool {
        self.n0 >= 1 && !self.i1 && self.n2 == 0
    }

    pub fn shifted(&self, dn0: u32, dn2: u32) -> Self {
        State {
            n0: self.n0 + dn0,
            n2: self.n2 + dn2,
            ..*self
        }
    }

    pub fn apply(&self, op: Operator) -> Result<State, ModelError> {
        apply_operator(op, *self)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{})",
            self.n0, self.i2 as u8, self.i1 as u8, self.n2
        )
    }
}

/// `n0 + i2 + i1 + n2`.
pub fn total_jobs(s: State) -> u32 {
    s.total_jobs()
}

/// Control available to the mode selector at a decision instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Idle,
    AssignSm1,
    AssignSm2,
    /// SM1 assignment immediately followed by an SM2 assignment.
    AssignSm1ThenSm2,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::Idle,
        Action::AssignSm1,
        Action::AssignSm2,
        Action::AssignSm1ThenSm2,
    ];

    /// Tie-breaking order used when extracting greedy policies, most
    /// preferred first. A bare SM1 commitment while the cloud holds SM2
    /// work can always be deferred at no cost, so Idle outranks it.
    pub const PREFERENCE: [Action; 4] = [
        Action::AssignSm1ThenSm2,
        Action::AssignSm2,
        Action::Idle,
        Action::AssignSm1,
    ];

    pub fn assigns_sm1(self) -> bool {
        matches!(self, Action::AssignSm1 | Action::AssignSm1ThenSm2)
    }

    pub fn assigns_sm2(self) -> bool {
        matches!(self, Action::AssignSm2 | Action::AssignSm1ThenSm2)
    }

    /// Stable one-byte encoding used by policy artifacts.
    pub fn code(self) -> u8 {
        match self {
            Action::Idle => 0,
            Action::AssignSm1 => 1,
            Action::AssignSm2 => 2,
            Action::AssignSm1ThenSm2 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.get(code as usize).copied()
    }

    /// Grid alphabet `{0, 1, 2}`; the composite shows as `1` with the second
    /// flag set.
    pub fn grid_code(self) -> (u8, bool) {
        match self {
            Action::Idle => (0, false),
            Action::AssignSm1 => (1, false),
            Action::AssignSm2 => (2, false),
            Action::AssignSm1ThenSm2 => (1, true),
        }
    }

    fn bit(self) -> u8 {
        1 << self.code()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Action::Idle => "idle",
            Action::AssignSm1 => "SM1",
            Action::AssignSm2 => "SM2",
            Action::AssignSm1ThenSm2 => "SM1+SM2",
        };
        f.write_str(name)
    }
}

/// Small bit set over [`Action`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub fn contains(self, a: Action) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn insert(&mut self, a: Action) {
        self.0 |= a.bit();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in [`Action::ALL`] order.
    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    /// Members in [`Action::PREFERENCE`] order.
    pub fn iter_preferred(self) -> impl Iterator<Item = Action> {
        Action::PREFERENCE
            .into_iter()
            .filter(move |a| self.contains(*a))
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut set = ActionSet::default();
        for a in iter {
            set.insert(a);
        }
        set
    }
}

pub fn admissible_actions(s: State) -> ActionSet {
    let mut set = ActionSet::default();
    set.insert(Action::Idle);
    if s.n0 >= 1 {
        let sm1 = !s.i1;
        let sm2 = !s.i2;
        if sm1 {
            set.insert(Action::AssignSm1);
        }
        if sm2 {
            set.insert(Action::AssignSm2);
        }
        if sm1 && sm2 && s.n0 >= 2 {
            set.insert(Action::AssignSm1ThenSm2);
        }
    }
    set
}

/// State transition operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// Arrival to the base queue.
    A,
    /// Cloud SM1 departure.
    D1,
    /// Cloud SM2 departure.
    D2,
    /// Local SM2 completion; the job moves to the cloud.
    DL,
    /// Assign a base-queue job to SM1.
    U1,
    /// Assign a base-queue job to SM2.
    U2,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::A,
        Operator::D1,
        Operator::D2,
        Operator::DL,
        Operator::U1,
        Operator::U2,
    ];
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Operator::A => "A",
            Operator::D1 => "D1",
            Operator::D2 => "D2",
            Operator::DL => "DL",
            Operator::U1 => "U1",
            Operator::U2 => "U2",
        };
        f.write_str(name)
    }
}

pub fn apply_operator(op: Operator, s: State) -> Result<State, ModelError> {
    let domain = |reason| ModelError::OperatorDomain { op, state: s, reason };
    match op {
        Operator::A => Ok(State { n0: s.n0 + 1, ..s }),
        Operator::D1 => {
            if !s.i1 {
                return Err(domain("requires i1 = 1"));
            }
            Ok(State { i1: false, ..s })
        }
        Operator::D2 => {
            if s.n2 == 0 {
                return Err(domain("requires n2 >= 1"));
            }
            Ok(State { n2: s.n2 - 1, ..s })
        }
        Operator::DL => {
            if !s.i2 {
                return Err(domain("requires i2 = 1"));
            }
            Ok(State {
                i2: false,
                n2: s.n2 + 1,
                ..s
            })
        }
        Operator::U1 => {
            if s.n0 == 0 {
                return Err(domain("requires n0 >= 1"));
            }
            if s.i1 {
                return Err(domain("requires i1 = 0"));
            }
            Ok(State {
                n0: s.n0 - 1,
                i1: true,
                ..s
            })
        }
        Operator::U2 => {
            if s.n0 == 0 {
                return Err(domain("requires n0 >= 1"));
            }
            if s.i2 {
                return Err(domain("requires i2 = 0"));
            }
            Ok(State {
                n0: s.n0 - 1,
                i2: true,
                ..s
            })
        }
    }
}

/// Post-decision state of `a` taken in `s`.
pub fn apply_action(a: Action, s: State) -> Result<State, ModelError> {
    if !admissible_actions(s).contains(a) {
        return Err(ModelError::Inadmissible { action: a, state: s });
    }
    match a {
        Action::Idle => Ok(s),
        Action::AssignSm1 => apply_operator(Operator::U1, s),
        Action::AssignSm2 => apply_operator(Operator::U2, s),
        Action::AssignSm1ThenSm2 => {
            apply_operator(Operator::U2, apply_operator(Operator::U1, s)?)
        }
    }
}
