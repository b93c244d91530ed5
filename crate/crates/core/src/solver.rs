//! Value iteration on the uniformized MDP, greedy policy extraction and
//! exact policy evaluation.

use thiserror::Error;

use crate::banded::BandMatrix;
use crate::kernel::{DiscountSpec, Row, StateSpace, TransitionKernel};
use crate::model::{admissible_actions, Action, State};
use crate::par;

/// Value ties closer than this are broken by [`Action::PREFERENCE`].
pub const TIE_EPS: f64 = 1e-10;

/// Default size limit for the direct policy-evaluation solve.
pub const DIRECT_STATE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("table has {got} entries, kernel has {expected} states")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("direct solve limited to {limit} states, kernel has {states}")]
    DirectTooLarge { states: usize, limit: usize },
    #[error("policy prescribes inadmissible {action} at {state}")]
    InadmissiblePolicy { state: State, action: Action },
    #[error("linear solve broke down at row {0}")]
    Singular(usize),
}

/// Discounted values indexed by state id, plus how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<f64>,
    /// Bellman sweeps applied so far (cumulative across resumes).
    pub iterations: u64,
    /// Sup-norm change of the last sweep; infinite before the first one.
    pub residual: f64,
    pub discount: DiscountSpec,
    pub n_max: u32,
}

impl ValueTable {
    pub fn zeros(kernel: &TransitionKernel) -> Self {
        Self {
            values: vec![0.0; kernel.num_states()],
            iterations: 0,
            residual: f64::INFINITY,
            discount: *kernel.discount(),
            n_max: kernel.space().n_max(),
        }
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.n_max).expect("value table built on a valid space")
    }

    /// Panics if `s` lies outside the truncation.
    pub fn value(&self, s: State) -> f64 {
        let id = self.space().id_of(s).expect("state inside truncation");
        self.values[id]
    }

    /// Sup-norm distance to the fixed point implied by the last residual,
    /// `alpha * residual / (1 - alpha)`.
    pub fn error_bound(&self) -> f64 {
        let a = self.discount.alpha;
        a * self.residual / (1.0 - a)
    }
}

/// One action per state id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTable {
    pub n_max: u32,
    pub actions: Vec<Action>,
}

impl PolicyTable {
    pub fn from_fn(space: StateSpace, mut f: impl FnMut(State) -> Action) -> Self {
        Self {
            n_max: space.n_max(),
            actions: space.states().map(|s| f(s)).collect(),
        }
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.n_max).expect("policy table built on a valid space")
    }

    /// Panics if `s` lies outside the truncation.
    pub fn action(&self, s: State) -> Action {
        let id = self.space().id_of(s).expect("state inside truncation");
        self.actions[id]
    }

    pub fn set(&mut self, s: State, a: Action) {
        let id = self.space().id_of(s).expect("state inside truncation");
        self.actions[id] = a;
    }

    /// First state whose prescribed action is not admissible.
    pub fn first_inadmissible(&self) -> Option<(State, Action)> {
        let space = self.space();
        self.actions
            .iter()
            .enumerate()
            .map(|(id, &a)| (space.state_of(id), a))
            .find(|(s, a)| !admissible_actions(*s).contains(*a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Synchronous sweeps reading only the previous table. Deterministic
    /// under any parallel schedule.
    Jacobi,
    /// In-place sequential sweeps. Usually converges in fewer sweeps but can
    /// settle on different actions at near-ties.
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViStatus {
    Converged,
    MaxIterations,
}

impl ViStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ViStatus::Converged => "converged",
            ViStatus::MaxIterations => "max_iterations",
        }
    }
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::Jacobi => "jacobi",
            SweepMode::GaussSeidel => "gauss_seidel",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ViOptions {
    pub tol: f64,
    pub max_iters: u64,
    pub sweep: SweepMode,
    /// Invoke the checkpoint callback every this many sweeps; 0 disables it.
    pub checkpoint_every: u64,
}

impl Default for ViOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 1_000_000,
            sweep: SweepMode::Jacobi,
            checkpoint_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ViOutcome {
    pub values: ValueTable,
    pub policy: PolicyTable,
    pub status: ViStatus,
}

fn check_dims(kernel: &TransitionKernel, len: usize) -> Result<(), SolverError> {
    if len != kernel.num_states() {
        return Err(SolverError::DimensionMismatch {
            expected: kernel.num_states(),
            got: len,
        });
    }
    Ok(())
}

fn q_value(row: &Row<'_>, alpha: f64, values: &[f64]) -> f64 {
    row.cost + alpha * row.expect(values)
}

/// Minimum over actions and the preferred near-minimizer.
fn backup_state(kernel: &TransitionKernel, id: usize, values: &[f64]) -> (f64, Action) {
    let alpha = kernel.alpha();
    let mut qs = [(Action::Idle, f64::INFINITY); 4];
    let mut n = 0;
    let mut best = f64::INFINITY;
    for row in kernel.rows(id) {
        let q = q_value(&row, alpha, values);
        best = best.min(q);
        qs[n] = (row.action, q);
        n += 1;
    }
    let chosen = Action::PREFERENCE
        .into_iter()
        .find(|a| qs[..n].iter().any(|(b, q)| b == a && *q <= best + TIE_EPS))
        .expect("every state admits idle");
    (best, chosen)
}

/// Applies the Bellman operator once: the new table and its greedy policy.
pub fn bellman_backup(
    kernel: &TransitionKernel,
    values: &[f64],
) -> Result<(Vec<f64>, PolicyTable), SolverError> {
    check_dims(kernel, values.len())?;
    let mut out = vec![(0.0, Action::Idle); kernel.num_states()];
    par::fill_indexed(&mut out, |id, slot| *slot = backup_state(kernel, id, values));
    let (next, actions) = out.into_iter().unzip();
    Ok((
        next,
        PolicyTable {
            n_max: kernel.space().n_max(),
            actions,
        },
    ))
}

/// Greedy policy with respect to `values`.
pub fn greedy_policy(kernel: &TransitionKernel, values: &[f64]) -> Result<PolicyTable, SolverError> {
    bellman_backup(kernel, values).map(|(_, p)| p)
}

fn jacobi_sweep(kernel: &TransitionKernel, prev: &[f64], next: &mut [f64]) -> f64 {
    par::fill_indexed(next, |id, v| *v = backup_state(kernel, id, prev).0);
    par::max_over(prev.len(), |i| (next[i] - prev[i]).abs())
}

fn gauss_seidel_sweep(kernel: &TransitionKernel, values: &mut [f64]) -> f64 {
    let mut residual: f64 = 0.0;
    for id in 0..values.len() {
        let v = backup_state(kernel, id, values).0;
        residual = residual.max((v - values[id]).abs());
        values[id] = v;
    }
    residual
}

/// Value iteration from `V = 0`.
pub fn value_iterate(kernel: &TransitionKernel, opts: &ViOptions) -> Result<ViOutcome, SolverError> {
    value_iterate_from(kernel, ValueTable::zeros(kernel), opts, |_| {})
}

/// Value iteration resumed from `start`. `max_iters` counts sweeps performed
/// by this call. `on_checkpoint` sees the table every
/// `opts.checkpoint_every` sweeps.
pub fn value_iterate_from(
    kernel: &TransitionKernel,
    start: ValueTable,
    opts: &ViOptions,
    mut on_checkpoint: impl FnMut(&ValueTable),
) -> Result<ViOutcome, SolverError> {
    if !(opts.tol > 0.0) {
        return Err(SolverError::BadTolerance(opts.tol));
    }
    check_dims(kernel, start.values.len())?;
    let mut table = ValueTable {
        discount: *kernel.discount(),
        n_max: kernel.space().n_max(),
        ..start
    };
    let mut scratch = vec![0.0; table.values.len()];
    let mut status = if table.residual <= opts.tol {
        ViStatus::Converged
    } else {
        ViStatus::MaxIterations
    };
    let mut done = 0;
    while status != ViStatus::Converged && done < opts.max_iters {
        let residual = match opts.sweep {
            SweepMode::Jacobi => {
                let r = jacobi_sweep(kernel, &table.values, &mut scratch);
                std::mem::swap(&mut table.values, &mut scratch);
                r
            }
            SweepMode::GaussSeidel => gauss_seidel_sweep(kernel, &mut table.values),
        };
        done += 1;
        table.iterations += 1;
        table.residual = residual;
        if residual <= opts.tol {
            status = ViStatus::Converged;
        }
        if opts.checkpoint_every > 0 && table.iterations % opts.checkpoint_every == 0 {
            on_checkpoint(&table);
        }
    }
    let policy = greedy_policy(kernel, &table.values)?;
    Ok(ViOutcome {
        values: table,
        policy,
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMethod {
    /// Repeated policy backups until the sup-norm change is at most `tol`.
    Iterative { tol: f64, max_iters: u64 },
    /// Exact banded linear solve of `(I - alpha P) V = c`.
    Direct { max_states: usize },
}

impl EvalMethod {
    pub fn direct() -> Self {
        EvalMethod::Direct {
            max_states: DIRECT_STATE_LIMIT,
        }
    }
}

fn policy_rows<'k>(
    kernel: &'k TransitionKernel,
    policy: &PolicyTable,
) -> Result<Vec<Row<'k>>, SolverError> {
    check_dims(kernel, policy.actions.len())?;
    let space = kernel.space();
    policy
        .actions
        .iter()
        .enumerate()
        .map(|(id, &a)| {
            kernel
                .row_for(id, a)
                .ok_or(SolverError::InadmissiblePolicy {
                    state: space.state_of(id),
                    action: a,
                })
        })
        .collect()
}

/// Discounted cost-to-go of a fixed policy.
pub fn evaluate_policy(
    kernel: &TransitionKernel,
    policy: &PolicyTable,
    method: EvalMethod,
) -> Result<ValueTable, SolverError> {
    let rows = policy_rows(kernel, policy)?;
    let alpha = kernel.alpha();
    let n = kernel.num_states();
    let mut table = ValueTable::zeros(kernel);
    match method {
        EvalMethod::Iterative { tol, max_iters } => {
            if !(tol > 0.0) {
                return Err(SolverError::BadTolerance(tol));
            }
            let mut scratch = vec![0.0; n];
            while table.iterations < max_iters {
                let prev = &table.values;
                par::fill_indexed(&mut scratch, |id, v| *v = q_value(&rows[id], alpha, prev));
                let r = par::max_over(n, |i| (scratch[i] - prev[i]).abs());
                std::mem::swap(&mut table.values, &mut scratch);
                table.iterations += 1;
                table.residual = r;
                if r <= tol {
                    break;
                }
            }
        }
        EvalMethod::Direct { max_states } => {
            if n > max_states {
                return Err(SolverError::DirectTooLarge {
                    states: n,
                    limit: max_states,
                });
            }
            let (mut lower, mut upper) = (0, 0);
            for (i, row) in rows.iter().enumerate() {
                for &j in row.next {
                    let j = j as usize;
                    lower = lower.max(i.saturating_sub(j));
                    upper = upper.max(j.saturating_sub(i));
                }
            }
            let mut a = BandMatrix::zeros(n, lower, upper);
            let mut b = vec![0.0; n];
            for (i, row) in rows.iter().enumerate() {
                a.add(i, i, 1.0);
                for (&j, &p) in row.next.iter().zip(row.prob) {
                    a.add(i, j as usize, -alpha * p);
                }
                b[i] = row.cost;
            }
            a.solve(&mut b).map_err(SolverError::Singular)?;
            table.values = b;
            table.residual = 0.0;
        }
    }
    Ok(table)
}
