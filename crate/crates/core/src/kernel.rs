//! Truncated state space and the uniformized discrete-time kernel.
//!
//! The continuous-time MDP is sampled at the constant rate
//! `nu = lambda + mu_l2 + mu_c2`; in every state the events that are not
//! active (or are blocked by truncation) become self-loops on the
//! post-decision state. Discounting at continuous rate `beta` turns into the
//! per-step factor `alpha = nu / (nu + beta)`, and the stage cost of a
//! decision is `n(s') / (beta + nu)`.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{admissible_actions, apply_action, Action, ModelParams, State};
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("buffer limit must be at least 1")]
    EmptySpace,
    #[error("buffer limit {0} is too large for 32-bit state ids")]
    SpaceTooLarge(u32),
    #[error("discrete discount alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("continuous discount beta must be positive, got {0}")]
    BadBeta(f64),
    #[error("uniformization rate must be positive, got {0}")]
    BadRate(f64),
    #[error("discount spec was built for nu = {spec}, parameters require nu = {params}")]
    RateMismatch { spec: f64, params: f64 },
}

/// All `(n0, i2, i1, n2)` with `n0, n2 <= n_max`, indexed lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    n_max: u32,
}

impl StateSpace {
    pub fn new(n_max: u32) -> Result<Self, KernelError> {
        if n_max == 0 {
            return Err(KernelError::EmptySpace);
        }
        let side = n_max as u64 + 1;
        if 4 * side * side > u32::MAX as u64 {
            return Err(KernelError::SpaceTooLarge(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    fn side(&self) -> usize {
        self.n_max as usize + 1
    }

    pub fn len(&self) -> usize {
        4 * self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: State) -> bool {
        s.n0 <= self.n_max && s.n2 <= self.n_max
    }

    /// Dense id of `s`, or `None` outside the truncation.
    pub fn id_of(&self, s: State) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let m = self.side();
        Some((((s.n0 as usize * 2) + s.i2 as usize) * 2 + s.i1 as usize) * m + s.n2 as usize)
    }

    /// Panics if `id >= len()`.
    pub fn state_of(&self, id: usize) -> State {
        assert!(id < self.len(), "state id {id} out of range");
        let m = self.side();
        let n2 = id % m;
        let rest = id / m;
        let i1 = rest % 2;
        let rest = rest / 2;
        let i2 = rest % 2;
        let n0 = rest / 2;
        State::new(n0 as u32, i2 as u32, i1 as u32, n2 as u32)
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(|id| self.state_of(id))
    }

    /// Both queue lengths at most `n_max - margin`.
    pub fn is_interior(&self, s: State, margin: u32) -> bool {
        let cap = self.n_max.saturating_sub(margin);
        s.n0 <= cap && s.n2 <= cap
    }

    /// Clamps both queue lengths into the truncation.
    pub fn saturate(&self, s: State) -> State {
        State {
            n0: s.n0.min(self.n_max),
            n2: s.n2.min(self.n_max),
            ..s
        }
    }
}

pub fn build_state_space(n_max: u32) -> Result<StateSpace, KernelError> {
    StateSpace::new(n_max)
}

/// `nu = lambda + mu_l2 + mu_c2`, the largest total event rate of any state.
pub fn uniformization_rate(p: &ModelParams) -> f64 {
    p.lambda + p.mu_l2 + p.mu_c2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSpec {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl DiscountSpec {
    fn check_nu(nu: f64) -> Result<(), KernelError> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(KernelError::BadRate(nu));
        }
        Ok(())
    }

    pub fn from_alpha(nu: f64, alpha: f64) -> Result<Self, KernelError> {
        Self::check_nu(nu)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(KernelError::BadAlpha(alpha));
        }
        Ok(Self {
            nu,
            alpha,
            beta: nu * (1.0 - alpha) / alpha,
        })
    }

    pub fn from_beta(nu: f64, beta: f64) -> Result<Self, KernelError> {
        Self::check_nu(nu)?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(KernelError::BadBeta(beta));
        }
        Ok(Self {
            nu,
            alpha: nu / (nu + beta),
            beta,
        })
    }

    /// Per-step cost weight `1 / (beta + nu)`.
    pub fn cost_scale(&self) -> f64 {
        1.0 / (self.beta + self.nu)
    }
}

/// One admissible decision of a state: its stage cost and sparse next-state
/// distribution.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub action: Action,
    pub cost: f64,
    pub next: &'a [u32],
    pub prob: &'a [f64],
}

impl Row<'_> {
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.next
            .iter()
            .zip(self.prob)
            .map(|(&j, &p)| p * values[j as usize])
            .sum()
    }
}

/// Immutable sparse kernel: for each state, one row per admissible action.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    params: ModelParams,
    space: StateSpace,
    discount: DiscountSpec,
    row_offsets: Vec<u32>,
    actions: Vec<Action>,
    costs: Vec<f64>,
    entry_offsets: Vec<u32>,
    next: Vec<u32>,
    prob: Vec<f64>,
}

struct LocalRow {
    action: Action,
    cost: f64,
    entries: Vec<(u32, f64)>,
}

fn push_entry(entries: &mut Vec<(u32, f64)>, id: u32, p: f64) {
    if p == 0.0 {
        return;
    }
    if let Some(e) = entries.iter_mut().find(|e| e.0 == id) {
        e.1 += p;
    } else {
        entries.push((id, p));
    }
}

fn build_rows(p: &ModelParams, space: &StateSpace, d: &DiscountSpec, s: State) -> Vec<LocalRow> {
    let n_max = space.n_max();
    let id = |t: State| space.id_of(t).expect("transition stays inside the truncation") as u32;
    let scale = d.cost_scale();
    admissible_actions(s)
        .iter()
        .map(|a| {
            let post = apply_action(a, s).expect("admissible action");
            let here = id(post);
            let mut entries = Vec::with_capacity(4);

            let p_arr = p.lambda / d.nu;
            if post.n0 < n_max {
                push_entry(&mut entries, id(State { n0: post.n0 + 1, ..post }), p_arr);
            } else {
                push_entry(&mut entries, here, p_arr);
            }

            let p_loc = p.mu_l2 / d.nu;
            if post.i2 && post.n2 < n_max {
                let done = State {
                    i2: false,
                    n2: post.n2 + 1,
                    ..post
                };
                push_entry(&mut entries, id(done), p_loc);
            } else {
                push_entry(&mut entries, here, p_loc);
            }

            if post.n2 >= 1 {
                let done = State {
                    n2: post.n2 - 1,
                    ..post
                };
                push_entry(&mut entries, id(done), p.mu_c2 / d.nu);
            } else if post.i1 {
                push_entry(&mut entries, id(State { i1: false, ..post }), p.mu_c1 / d.nu);
                push_entry(&mut entries, here, (p.mu_c2 - p.mu_c1) / d.nu);
            } else {
                push_entry(&mut entries, here, p.mu_c2 / d.nu);
            }

            entries.sort_by_key(|e| e.0);
            LocalRow {
                action: a,
                cost: post.total_jobs() as f64 * scale,
                entries,
            }
        })
        .collect()
}

impl TransitionKernel {
    pub fn build(
        params: &ModelParams,
        space: StateSpace,
        discount: DiscountSpec,
    ) -> Result<Self, KernelError> {
        let nu = uniformization_rate(params);
        if ((discount.nu - nu) / nu).abs() > 1e-12 {
            return Err(KernelError::RateMismatch {
                spec: discount.nu,
                params: nu,
            });
        }
        let per_state = par::map_range(space.len(), |i| {
            build_rows(params, &space, &discount, space.state_of(i))
        });

        let n_rows: usize = per_state.iter().map(Vec::len).sum();
        let n_entries: usize = per_state
            .iter()
            .flat_map(|rows| rows.iter().map(|r| r.entries.len()))
            .sum();
        let mut k = TransitionKernel {
            params: *params,
            space,
            discount,
            row_offsets: Vec::with_capacity(space.len() + 1),
            actions: Vec::with_capacity(n_rows),
            costs: Vec::with_capacity(n_rows),
            entry_offsets: Vec::with_capacity(n_rows + 1),
            next: Vec::with_capacity(n_entries),
            prob: Vec::with_capacity(n_entries),
        };
        k.row_offsets.push(0);
        k.entry_offsets.push(0);
        for rows in per_state {
            for r in rows {
                k.actions.push(r.action);
                k.costs.push(r.cost);
                for (j, q) in r.entries {
                    k.next.push(j);
                    k.prob.push(q);
                }
                k.entry_offsets.push(k.next.len() as u32);
            }
            k.row_offsets.push(k.actions.len() as u32);
        }
        Ok(k)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn discount(&self) -> &DiscountSpec {
        &self.discount
    }

    pub fn alpha(&self) -> f64 {
        self.discount.alpha
    }

    pub fn num_states(&self) -> usize {
        self.space.len()
    }

    pub fn num_rows(&self) -> usize {
        self.actions.len()
    }

    fn row(&self, r: usize) -> Row<'_> {
        let lo = self.entry_offsets[r] as usize;
        let hi = self.entry_offsets[r + 1] as usize;
        Row {
            action: self.actions[r],
            cost: self.costs[r],
            next: &self.next[lo..hi],
            prob: &self.prob[lo..hi],
        }
    }

    /// Rows of state `id`, in [`Action::ALL`] order.
    pub fn rows(&self, id: usize) -> impl Iterator<Item = Row<'_>> + '_ {
        let lo = self.row_offsets[id] as usize;
        let hi = self.row_offsets[id + 1] as usize;
        (lo..hi).map(move |r| self.row(r))
    }

    pub fn row_for(&self, id: usize, action: Action) -> Option<Row<'_>> {
        self.rows(id).find(|r| r.action == action)
    }

    /// Largest `|sum_j p(j) - 1|` over all rows.
    pub fn max_row_error(&self) -> f64 {
        (0..self.num_rows())
            .map(|r| (self.row(r).prob.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Debug dump, tab separated:
    /// `state_id action next_id probability cost`, one line per entry.
    /// Not a stable format.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "state_id\taction\tnext_id\tprobability\tcost")?;
        for id in 0..self.num_states() {
            for row in self.rows(id) {
                for (j, p) in row.next.iter().zip(row.prob) {
                    writeln!(w, "{id}\t{}\t{j}\t{p:e}\t{:e}", row.action.code(), row.cost)?;
                }
            }
        }
        Ok(())
    }
}

/// Discount as supplied by the user; the other one is derived through `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discount {
    Alpha(f64),
    Beta(f64),
}

impl Discount {
    pub fn resolve(self, params: &ModelParams) -> Result<DiscountSpec, KernelError> {
        let nu = uniformization_rate(params);
        match self {
            Discount::Alpha(a) => DiscountSpec::from_alpha(nu, a),
            Discount::Beta(b) => DiscountSpec::from_beta(nu, b),
        }
    }
}

/// Space, discount and kernel in one go.
pub fn build_problem(
    params: &ModelParams,
    n_max: u32,
    discount: Discount,
) -> Result<TransitionKernel, KernelError> {
    let space = StateSpace::new(n_max)?;
    TransitionKernel::build(params, space, discount.resolve(params)?)
}

pub fn build_kernel(
    params: &ModelParams,
    space: StateSpace,
    discount: DiscountSpec,
) -> Result<TransitionKernel, KernelError> {
    TransitionKernel::build(params, space, discount)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config_a() -> ModelParams {
        ModelParams::derive_rates(3.6, 1.0, 8.0, 0.4).unwrap()
    }

    fn kernel(p: &ModelParams, n_max: u32, alpha: f64) -> TransitionKernel {
        let d = DiscountSpec::from_alpha(uniformization_rate(p), alpha).unwrap();
        TransitionKernel::build(p, StateSpace::new(n_max).unwrap(), d).unwrap()
    }

    fn distribution(k: &TransitionKernel, s: State, a: Action) -> Vec<(State, f64)> {
        let space = k.space();
        let row = k.row_for(space.id_of(s).unwrap(), a).unwrap();
        row.next
            .iter()
            .zip(row.prob)
            .map(|(&j, &p)| (space.state_of(j as usize), p))
            .collect()
    }

    fn prob_of(dist: &[(State, f64)], t: State) -> f64 {
        dist.iter().filter(|e| e.0 == t).map(|e| e.1).sum()
    }

    #[test]
    fn space_sizes() {
        assert_eq!(StateSpace::new(1).unwrap().len(), 16);
        assert_eq!(StateSpace::new(300).unwrap().len(), 362_404);
        assert_eq!(StateSpace::new(60).unwrap().len(), 14_884);
        assert_eq!(StateSpace::new(0), Err(KernelError::EmptySpace));
    }

    #[test]
    fn space_index_round_trip_and_order() {
        let space = StateSpace::new(7).unwrap();
        let mut prev = None;
        for id in 0..space.len() {
            let s = space.state_of(id);
            assert_eq!(space.id_of(s), Some(id));
            let key = (s.n0, s.i2, s.i1, s.n2);
            if let Some(p) = prev {
                assert!(key > p, "ordering must be lexicographic");
            }
            prev = Some(key);
        }
        assert_eq!(space.id_of(State::new(8, 0, 0, 0)), None);
    }

    #[test]
    fn uniformization_examples() {
        let p = config_a();
        assert_relative_eq!(uniformization_rate(&p), 3.6 + 2.5 + 40.0 / 3.0, max_relative = 1e-15);
        let p72 = p.with_lambda(7.2).unwrap();
        assert_relative_eq!(uniformization_rate(&p72), 7.2 + 2.5 + 40.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(uniformization_rate(&p.without_arrivals()), 2.5 + 40.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn discount_specs_agree() {
        for alpha in [0.5, 0.9, 0.999, 1.0 - 1e-5] {
            let d = DiscountSpec::from_alpha(19.4, alpha).unwrap();
            let back = DiscountSpec::from_beta(19.4, d.beta).unwrap();
            assert!(((back.alpha - alpha) / alpha).abs() <= 1e-12);
            let recomputed_beta = d.nu * (1.0 - d.alpha) / d.alpha;
            assert!(((recomputed_beta - d.beta) / d.beta).abs() <= 1e-12);
        }
        assert!(DiscountSpec::from_alpha(1.0, 1.0).is_err());
        assert!(DiscountSpec::from_beta(1.0, 0.0).is_err());
    }

    #[test]
    fn rate_mismatch_rejected() {
        let p = config_a();
        let d = DiscountSpec::from_alpha(10.0, 0.9).unwrap();
        assert!(matches!(
            TransitionKernel::build(&p, StateSpace::new(2).unwrap(), d),
            Err(KernelError::RateMismatch { .. })
        ));
    }

    #[test]
    fn empty_state_distribution() {
        let p = config_a();
        let k = kernel(&p, 4, 0.99);
        let nu = k.discount().nu;
        let d = distribution(&k, State::EMPTY, Action::Idle);
        assert_eq!(d.len(), 2);
        assert_relative_eq!(prob_of(&d, State::new(1, 0, 0, 0)), 3.6 / nu, max_relative = 1e-14);
        assert_relative_eq!(prob_of(&d, State::EMPTY), (2.5 + 40.0 / 3.0) / nu, max_relative = 1e-14);
    }

    #[test]
    fn sm1_service_distribution() {
        let p = config_a();
        let k = kernel(&p, 4, 0.99);
        let nu = k.discount().nu;
        let d = distribution(&k, State::new(1, 0, 1, 0), Action::Idle);
        assert_relative_eq!(prob_of(&d, State::new(2, 0, 1, 0)), 3.6 / nu, max_relative = 1e-14);
        assert_relative_eq!(prob_of(&d, State::new(1, 0, 0, 0)), 8.0 / nu, max_relative = 1e-14);
        assert_relative_eq!(
            prob_of(&d, State::new(1, 0, 1, 0)),
            (2.5 + 40.0 / 3.0 - 8.0) / nu,
            max_relative = 1e-14
        );
    }

    #[test]
    fn all_events_active() {
        let p = config_a();
        let k = kernel(&p, 4, 0.99);
        let nu = k.discount().nu;
        let d = distribution(&k, State::new(1, 1, 0, 1), Action::Idle);
        assert_eq!(d.len(), 3);
        assert_relative_eq!(prob_of(&d, State::new(2, 1, 0, 1)), 3.6 / nu, max_relative = 1e-14);
        assert_relative_eq!(prob_of(&d, State::new(1, 0, 0, 2)), 2.5 / nu, max_relative = 1e-14);
        assert_relative_eq!(prob_of(&d, State::new(1, 1, 0, 0)), (40.0 / 3.0) / nu, max_relative = 1e-14);
        assert!((d.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn stage_cost_uses_post_decision_state() {
        let p = config_a();
        let k = kernel(&p, 4, 0.9);
        let space = *k.space();
        let scale = k.discount().cost_scale();
        for id in 0..k.num_states() {
            let s = space.state_of(id);
            for row in k.rows(id) {
                let post = apply_action(row.action, s).unwrap();
                assert_eq!(row.cost, post.total_jobs() as f64 * scale);
            }
        }
    }

    #[test]
    fn priority_and_boundaries() {
        let p = config_a();
        let n_max = 6;
        let k = kernel(&p, n_max, 0.9);
        let space = *k.space();
        for id in 0..k.num_states() {
            let s = space.state_of(id);
            for row in k.rows(id) {
                let post = apply_action(row.action, s).unwrap();
                let next: Vec<State> = row.next.iter().map(|&j| space.state_of(j as usize)).collect();
                if post.n2 >= 1 && post.i1 {
                    assert!(next.contains(&State { n2: post.n2 - 1, ..post }));
                    assert!(!next.contains(&State { i1: false, ..post }), "SM1 served while SM2 waits at {post}");
                }
                if post.n0 == n_max {
                    assert!(next.iter().all(|t| t.n0 <= n_max));
                    assert!(next.contains(&post));
                }
                assert!(row.next.iter().all(|&j| (j as usize) < space.len()));
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let p = config_a();
        let a = kernel(&p, 20, 0.999);
        let b = kernel(&p, 20, 0.999);
        assert_eq!(a, b);
        assert!(a.max_row_error() <= 1e-12);
    }

    #[test]
    fn dump_has_one_line_per_entry() {
        let p = config_a();
        let k = kernel(&p, 1, 0.9);
        let mut buf = Vec::new();
        k.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + k.next.len());
        assert!(text.starts_with("state_id\taction"));
    }
}
