//! Structural checks on a computed policy: cloud-first, switch-type,
//! urgency-monotonicity, switching thresholds and value-function gaps.
//!
//! Every check is restricted to the interior of the truncation, i.e. states
//! with `n0, n2 <= n_max - margin`, because the blocked-arrival boundary
//! distorts the policy near the cap.

use serde::Serialize;

use crate::kernel::StateSpace;
use crate::model::{Action, State};
use crate::par;
use crate::solver::{PolicyTable, ValueTable};

pub const DEFAULT_MARGIN: u32 = 5;

/// Pass/fail with the offending states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult<T> {
    pub pass: bool,
    pub counterexamples: Vec<T>,
}

impl<T> CheckResult<T> {
    fn from_violations(counterexamples: Vec<T>) -> Self {
        Self {
            pass: counterexamples.is_empty(),
            counterexamples,
        }
    }
}

/// A state where SM2 is assigned next to a unit-shifted state where it is not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SwitchViolation {
    pub assigns: State,
    pub shifted: State,
}

/// Switching thresholds on the slices `(., 0, 1, k)` and `(., 0, 0, k)`.
///
/// `None` means no interior `n` has SM2 assigned at every `m >= n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThresholdProfile {
    /// `sm1_busy[k]` is the threshold on `(., 0, 1, k)`, `k >= 0`.
    pub sm1_busy: Vec<Option<u32>>,
    /// `sm1_idle[k - 1]` is the threshold on `(., 0, 0, k)`, `k >= 1`.
    pub sm1_idle: Vec<Option<u32>>,
    /// Largest interior queue length the profile was extracted over.
    pub cap: u32,
}

fn le_with_none_as_infinity(a: Option<u32>, b: Option<u32>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

fn non_increasing(seq: &[Option<u32>]) -> bool {
    seq.windows(2).all(|w| le_with_none_as_infinity(w[1], w[0]))
}

impl ThresholdProfile {
    /// Threshold on `(., 0, 1, k)`.
    pub fn n_k(&self, k: u32) -> Option<u32> {
        self.sm1_busy.get(k as usize).copied().flatten()
    }

    /// Threshold on `(., 0, 0, k)` for `k >= 1`.
    pub fn n_prime_k(&self, k: u32) -> Option<u32> {
        if k == 0 {
            return None;
        }
        self.sm1_idle.get(k as usize - 1).copied().flatten()
    }

    /// Both sequences non-increasing in `k`, reading `None` as infinity.
    pub fn is_non_increasing(&self) -> bool {
        non_increasing(&self.sm1_busy) && non_increasing(&self.sm1_idle)
    }

    /// Element-wise `self <= other` on both sequences, `None` as infinity.
    /// Profiles of different lengths compare on the common prefix.
    pub fn all_le(&self, other: &ThresholdProfile) -> bool {
        let cmp = |a: &[Option<u32>], b: &[Option<u32>]| {
            a.iter().zip(b).all(|(x, y)| le_with_none_as_infinity(*x, *y))
        };
        cmp(&self.sm1_busy, &other.sm1_busy) && cmp(&self.sm1_idle, &other.sm1_idle)
    }

    /// Whether the threshold rule assigns SM2 at `s`; `None` off the covered
    /// slices.
    pub fn predicts_sm2(&self, s: State) -> Option<bool> {
        if s.i2 || s.n0 == 0 || s.n0 > self.cap || s.n2 > self.cap {
            return None;
        }
        let threshold = if s.i1 {
            self.n_k(s.n2)
        } else if s.n2 >= 1 {
            self.n_prime_k(s.n2)
        } else {
            return None;
        };
        Some(threshold.is_some_and(|t| s.n0 >= t))
    }
}

/// Minimum observed value-function gaps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueGaps {
    /// `min_n V(n,0,1,0) - V(n,0,0,1)` over interior `n >= 1`.
    pub sm1_vs_sm2_min: f64,
    pub sm1_vs_sm2_at: Option<State>,
    /// `min_s V(A s) - V(s)` over interior `s`.
    pub arrival_min: f64,
    pub arrival_at: Option<State>,
    /// The table is constant, so both gaps are trivially zero.
    pub degenerate: bool,
}

impl ValueGaps {
    pub fn pass(&self, arrival_slack: f64) -> bool {
        self.sm1_vs_sm2_min > 0.0 && self.arrival_min >= -arrival_slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub margin: u32,
    pub n_max: u32,
    pub cloud_first: CheckResult<State>,
    pub switch_type: CheckResult<SwitchViolation>,
    pub thresholds: ThresholdProfile,
    pub thresholds_non_increasing: bool,
    pub urgency_monotone: CheckResult<State>,
    pub value_gaps: Option<ValueGaps>,
}

/// Slack on `V(A s) - V(s) >= 0` accepted as a pass.
pub const ARRIVAL_GAP_SLACK: f64 = 1e-9;

impl StructureReport {
    pub fn all_pass(&self) -> bool {
        self.cloud_first.pass
            && self.switch_type.pass
            && self.thresholds_non_increasing
            && self.urgency_monotone.pass
            && self
                .value_gaps
                .as_ref()
                .is_none_or(|g| g.pass(ARRIVAL_GAP_SLACK))
    }
}

fn interior_states(space: StateSpace, margin: u32) -> impl Iterator<Item = State> {
    let cap = space.n_max().saturating_sub(margin);
    (0..=cap).flat_map(move |n0| {
        (0..4u32).flat_map(move |ind| {
            (0..=cap).map(move |n2| State::new(n0, ind >> 1, ind & 1, n2))
        })
    })
}

pub fn check_cloud_first(pi: &PolicyTable, margin: u32) -> CheckResult<State> {
    let space = pi.space();
    let bad = interior_states(space, margin)
        .filter(|s| s.in_cloud_idle_region() && !pi.action(*s).assigns_sm1())
        .collect();
    CheckResult::from_violations(bad)
}

/// Unit steps in `n0` and `n2` suffice: the shifted order is their
/// transitive closure.
pub fn check_switch_type(pi: &PolicyTable, margin: u32) -> CheckResult<SwitchViolation> {
    let space = pi.space();
    let mut bad = Vec::new();
    for s in interior_states(space, margin) {
        if !pi.action(s).assigns_sm2() {
            continue;
        }
        for t in [s.shifted(1, 0), s.shifted(0, 1)] {
            if space.is_interior(t, margin) && !pi.action(t).assigns_sm2() {
                bad.push(SwitchViolation {
                    assigns: s,
                    shifted: t,
                });
            }
        }
    }
    CheckResult::from_violations(bad)
}

pub fn check_urgency_monotonicity(pi: &PolicyTable, margin: u32) -> CheckResult<State> {
    let space = pi.space();
    let bad = interior_states(space, margin)
        .filter(|s| {
            let up = s.shifted(1, 0);
            space.is_interior(up, margin)
                && pi.action(up) == Action::Idle
                && pi.action(*s) != Action::Idle
        })
        .collect();
    CheckResult::from_violations(bad)
}

fn slice_threshold(pi: &PolicyTable, i1: u32, k: u32, cap: u32) -> Option<u32> {
    let mut threshold = None;
    for m in (1..=cap).rev() {
        if pi.action(State::new(m, 0, i1, k)).assigns_sm2() {
            threshold = Some(m);
        } else {
            break;
        }
    }
    threshold
}

pub fn extract_thresholds(pi: &PolicyTable, margin: u32) -> ThresholdProfile {
    let cap = pi.n_max.saturating_sub(margin);
    let slices = cap as usize + 1;
    let sm1_busy = par::map_range(slices, |k| slice_threshold(pi, 1, k as u32, cap));
    let sm1_idle = par::map_range(slices - 1, |k| slice_threshold(pi, 0, k as u32 + 1, cap));
    ThresholdProfile {
        sm1_busy,
        sm1_idle,
        cap,
    }
}

pub fn check_value_inequalities(v: &ValueTable, margin: u32) -> ValueGaps {
    let space = v.space();
    let cap = space.n_max().saturating_sub(margin);
    let mut gaps = ValueGaps {
        sm1_vs_sm2_min: f64::INFINITY,
        sm1_vs_sm2_at: None,
        arrival_min: f64::INFINITY,
        arrival_at: None,
        degenerate: v.values.windows(2).all(|w| w[0] == w[1]),
    };
    if cap >= 1 {
        for n in 1..=cap {
            let g = v.value(State::new(n, 0, 1, 0)) - v.value(State::new(n, 0, 0, 1));
            if g < gaps.sm1_vs_sm2_min {
                gaps.sm1_vs_sm2_min = g;
                gaps.sm1_vs_sm2_at = Some(State::new(n, 0, 1, 0));
            }
        }
    }
    for s in interior_states(space, margin) {
        let up = s.shifted(1, 0);
        if !space.is_interior(up, margin) {
            continue;
        }
        let g = v.value(up) - v.value(s);
        if g < gaps.arrival_min {
            gaps.arrival_min = g;
            gaps.arrival_at = Some(s);
        }
    }
    gaps
}

/// Runs every check; `values` is optional so policies without a solved table
/// (baselines, planted fixtures) can be analysed too.
pub fn analyze(pi: &PolicyTable, values: Option<&ValueTable>, margin: u32) -> StructureReport {
    let thresholds = extract_thresholds(pi, margin);
    StructureReport {
        margin,
        n_max: pi.n_max,
        cloud_first: check_cloud_first(pi, margin),
        switch_type: check_switch_type(pi, margin),
        thresholds_non_increasing: thresholds.is_non_increasing(),
        thresholds,
        urgency_monotone: check_urgency_monotonicity(pi, margin),
        value_gaps: values.map(|v| check_value_inequalities(v, margin)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::admissible_actions;
    use crate::policy::{offload_only, non_idling};
    use proptest::prelude::*;

    fn table_of(n_max: u32, f: impl Fn(State) -> Action) -> PolicyTable {
        PolicyTable::from_fn(StateSpace::new(n_max).unwrap(), f)
    }

    #[test]
    fn baselines_are_cloud_first_and_switch_type() {
        for pi in [table_of(12, offload_only), table_of(12, non_idling)] {
            let r = analyze(&pi, None, 2);
            assert!(r.cloud_first.pass);
            assert!(r.switch_type.pass);
            assert!(r.urgency_monotone.pass, "{:?}", r.urgency_monotone);
            assert!(r.thresholds_non_increasing);
            assert!(r.all_pass());
        }
    }

    #[test]
    fn baseline_thresholds() {
        let r = extract_thresholds(&table_of(12, non_idling), 2);
        assert_eq!(r.cap, 10);
        assert_eq!(r.sm1_busy.len(), 11);
        assert_eq!(r.sm1_idle.len(), 10);
        assert!(r.sm1_busy.iter().all(|t| *t == Some(1)));
        assert!(r.sm1_idle.iter().all(|t| *t == Some(1)));

        let r = extract_thresholds(&table_of(12, offload_only), 2);
        assert!(r.sm1_busy.iter().chain(&r.sm1_idle).all(Option::is_none));
    }

    #[test]
    fn planted_cloud_first_violation() {
        let mut pi = table_of(10, non_idling);
        pi.set(State::new(1, 0, 0, 0), Action::Idle);
        let r = check_cloud_first(&pi, 2);
        assert!(!r.pass);
        assert_eq!(r.counterexamples, vec![State::new(1, 0, 0, 0)]);
    }

    #[test]
    fn planted_switch_violation() {
        let mut pi = table_of(10, offload_only);
        pi.set(State::new(2, 0, 1, 1), Action::AssignSm2);
        pi.set(State::new(3, 0, 1, 1), Action::Idle);
        let r = check_switch_type(&pi, 2);
        assert!(!r.pass);
        assert!(r.counterexamples.contains(&SwitchViolation {
            assigns: State::new(2, 0, 1, 1),
            shifted: State::new(3, 0, 1, 1),
        }));
        assert!(r.counterexamples.iter().all(|v| v.assigns == State::new(2, 0, 1, 1)));
    }

    #[test]
    fn planted_urgency_violation() {
        let mut pi = table_of(10, non_idling);
        pi.set(State::new(4, 0, 1, 2), Action::Idle);
        let r = check_urgency_monotonicity(&pi, 2);
        assert!(!r.pass);
        assert_eq!(r.counterexamples, vec![State::new(3, 0, 1, 2)]);
    }

    #[test]
    fn margin_excludes_boundary() {
        let mut pi = table_of(10, non_idling);
        pi.set(State::new(10, 0, 0, 0), Action::Idle);
        assert!(check_cloud_first(&pi, 1).pass);
        assert!(!check_cloud_first(&pi, 0).pass);
    }

    #[test]
    fn constant_value_table_is_degenerate() {
        let space = StateSpace::new(8).unwrap();
        let v = ValueTable {
            values: vec![3.0; space.len()],
            iterations: 0,
            residual: 0.0,
            discount: crate::kernel::DiscountSpec::from_alpha(1.0, 0.5).unwrap(),
            n_max: 8,
        };
        let g = check_value_inequalities(&v, 2);
        assert_eq!(g.sm1_vs_sm2_min, 0.0);
        assert_eq!(g.arrival_min, 0.0);
        assert!(g.degenerate);
        assert!(!g.pass(ARRIVAL_GAP_SLACK));
    }

    #[test]
    fn threshold_ordering_treats_none_as_infinite() {
        let a = ThresholdProfile { sm1_busy: vec![None, Some(3)], sm1_idle: vec![Some(2)], cap: 1 };
        let b = ThresholdProfile { sm1_busy: vec![None, Some(4)], sm1_idle: vec![None], cap: 1 };
        assert!(a.all_le(&b));
        assert!(!b.all_le(&a));
        assert!(a.is_non_increasing());
        let c = ThresholdProfile { sm1_busy: vec![Some(2), Some(3)], sm1_idle: vec![], cap: 1 };
        assert!(!c.is_non_increasing());
    }

    /// Policy whose SM2 region is the up-set of a few generator points per
    /// slice, which is switch-type by construction.
    fn staircase(n_max: u32, generators: &[(u32, u32, u32)]) -> PolicyTable {
        table_of(n_max, |s| {
            let adm = admissible_actions(s);
            if s.in_cloud_idle_region() {
                return Action::AssignSm1;
            }
            let up = generators
                .iter()
                .any(|&(i1, g0, g2)| (s.i1 as u32) == i1 && s.n0 >= g0 && s.n2 >= g2);
            if up && adm.contains(Action::AssignSm2) {
                Action::AssignSm2
            } else {
                Action::Idle
            }
        })
    }

    proptest! {
        #[test]
        fn thresholds_from_switch_type_policies(
            gens in proptest::collection::vec((0u32..2, 1u32..12, 0u32..12), 0..6)
        ) {
            let pi = staircase(14, &gens);
            let margin = 2;
            prop_assert!(check_switch_type(&pi, margin).pass);
            let t = extract_thresholds(&pi, margin);
            prop_assert!(t.is_non_increasing());
            let space = pi.space();
            for s in interior_states(space, margin) {
                if let Some(pred) = t.predicts_sm2(s) {
                    prop_assert_eq!(pred, pi.action(s).assigns_sm2(), "at {}", s);
                }
            }
        }

        #[test]
        fn checks_are_idempotent(gens in proptest::collection::vec((0u32..2, 1u32..12, 0u32..12), 0..4)) {
            let pi = staircase(12, &gens);
            prop_assert_eq!(analyze(&pi, None, 3), analyze(&pi, None, 3));
        }
    }
}
