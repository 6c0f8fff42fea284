//! REM-derived MDP and its policy-iteration solver.

mod finite;
mod model;
mod policy;

pub use finite::{evaluate_policy, improve_policy, policy_iteration as solve, FiniteMdp, PiOutcome, SolverConfig};
pub use model::{
    advance_probability, argmax, build_state_space, reward, reward_from_means, transition, RemMdp, RewardParams,
    State, StateSpace, Successor, NOT_STRONGEST_PENALTY, RLF_PENALTY, SWITCH_PENALTY,
};
pub use policy::{policy_iteration, policy_label, Policy, PolicyMeta, TrainingConfig, TrainingOutcome, POLICY_MAGIC};
