//! Delay-optimal service mode assignment for a two-stage computation
//! offloading system.
//!
//! * [`model`]: parameters, states, actions and transition operators.
//! * [`kernel`]: truncation and uniformization into a discounted MDP.
//! * [`solver`]: value iteration and policy evaluation.
//! * [`structure`]: cloud-first, switch-type and threshold checks.
//! * [`simulator`]: coupled discrete-event simulation.
//!
//! Inner loops (Bellman sweeps, kernel construction, replications) run on
//! rayon when the default `parallel` feature is enabled and sequentially
//! otherwise; both paths produce bit-identical results.

pub mod artifact;
mod banded;
pub mod kernel;
pub mod model;
pub mod par;
pub mod policy;
pub mod simulator;
pub mod solver;
pub mod structure;

pub use kernel::{build_problem, Discount, DiscountSpec, StateSpace, TransitionKernel};
pub use model::{Action, ModelParams, State};
pub use policy::{Baseline, Policy, TablePolicy};
pub use simulator::{coupled_compare, simulate, CoupledReport, DelayReport, SimConfig};
pub use solver::{value_iterate, PolicyTable, ValueTable, ViOptions, ViOutcome, ViStatus};
pub use structure::{analyze, StructureReport, ThresholdProfile};
