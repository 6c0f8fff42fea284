//! Tabular MDP with sparse transition kernels, and policy iteration over it.

use crate::error::{Error, Result};
use crate::exec::{fill_max, map_range, Execution};

/// Finite MDP. Transitions for `(s, a)` are stored contiguously (CSR).
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    rewards: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
}

impl FiniteMdp {
    /// Builds the MDP from `f(s, a) -> (reward, [(next, prob)])`.
    ///
    /// Every kernel must be a proper distribution (non-negative, summing to
    /// one within 1e-9) over valid state indices.
    pub fn from_fn<F>(n_states: usize, n_actions: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<(f64, Vec<(usize, f64)>)>,
    {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Config("MDP needs at least one state and one action".into()));
        }
        if n_states > u32::MAX as usize {
            return Err(Error::Config("too many states".into()));
        }
        let mut mdp = FiniteMdp {
            n_states,
            n_actions,
            rewards: Vec::with_capacity(n_states * n_actions),
            offsets: Vec::with_capacity(n_states * n_actions + 1),
            targets: Vec::new(),
            probs: Vec::new(),
        };
        mdp.offsets.push(0);
        for s in 0..n_states {
            for a in 0..n_actions {
                let (r, kernel) = f(s, a)?;
                if !r.is_finite() {
                    return Err(Error::Contract(format!("non-finite reward at ({s}, {a})")));
                }
                let mut total = 0.0;
                for &(next, p) in &kernel {
                    if next >= n_states || !(p >= 0.0) {
                        return Err(Error::Contract(format!("bad transition ({s}, {a}) -> ({next}, {p})")));
                    }
                    total += p;
                    mdp.targets.push(next as u32);
                    mdp.probs.push(p);
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Contract(format!("kernel at ({s}, {a}) sums to {total}")));
                }
                mdp.rewards.push(r);
                mdp.offsets.push(mdp.targets.len());
            }
        }
        Ok(mdp)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn transitions(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let k = s * self.n_actions + a;
        let range = self.offsets[k]..self.offsets[k + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.probs[range])
            .map(|(&t, &p)| (t as usize, p))
    }

    /// One-step lookahead `r(s, a) + γ Σ p(s'|s, a) V(s')`.
    pub fn q_value(&self, s: usize, a: usize, values: &[f64], gamma: f64) -> f64 {
        let k = s * self.n_actions + a;
        let mut ev = 0.0;
        for i in self.offsets[k]..self.offsets[k + 1] {
            ev += self.probs[i] * values[self.targets[i] as usize];
        }
        self.rewards[k] + gamma * ev
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    /// Max-norm Bellman residual at which evaluation stops.
    pub tol: f64,
    pub max_sweeps: usize,
    pub max_rounds: usize,
    pub exec: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 0.9,
            tol: 1e-6,
            max_sweeps: 100_000,
            max_rounds: 1000,
            exec: Execution::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("discount must be in [0, 1), got {}", self.gamma)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Smallest q-value gain that counts as a real improvement during policy
    /// iteration. It bounds the q error that an evaluation stopped at `tol`
    /// can produce, so near-ties cannot make the policy oscillate.
    fn switch_threshold(&self) -> f64 {
        2.0 * self.tol / (1.0 - self.gamma)
    }
}

fn check_policy(mdp: &FiniteMdp, policy: &[usize]) -> Result<()> {
    if policy.len() != mdp.n_states {
        return Err(Error::Contract(format!(
            "policy covers {} states, MDP has {}",
            policy.len(),
            mdp.n_states
        )));
    }
    if let Some(a) = policy.iter().find(|&&a| a >= mdp.n_actions) {
        return Err(Error::Contract(format!("policy action {a} out of range")));
    }
    Ok(())
}

/// Iterative policy evaluation with synchronous (Jacobi) sweeps, so the
/// result does not depend on sweep order or thread count.
///
/// Returns `V` with `‖V − T_π V‖_∞ < tol`.
pub fn evaluate_policy(mdp: &FiniteMdp, policy: &[usize], cfg: &SolverConfig, init: Option<&[f64]>) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_policy(mdp, policy)?;
    let mut v = match init {
        Some(v0) if v0.len() == mdp.n_states => v0.to_vec(),
        Some(_) => return Err(Error::Contract("initial values have the wrong length".into())),
        None => vec![0.0; mdp.n_states],
    };
    let mut next = vec![0.0; mdp.n_states];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        residual = {
            let cur = &v;
            fill_max(
                cfg.exec,
                &mut next,
                |s| mdp.q_value(s, policy[s], cur, cfg.gamma),
                |s, nv| (nv - cur[s]).abs(),
            )
        };
        std::mem::swap(&mut v, &mut next);
        if residual < cfg.tol {
            return Ok(v);
        }
    }
    Err(Error::EvaluationDiverged {
        sweeps: cfg.max_sweeps,
        residual,
    })
}

/// Best action at `s` and its q-value; near-ties go to the lowest index.
fn greedy_action(mdp: &FiniteMdp, s: usize, values: &[f64], gamma: f64) -> (usize, f64) {
    let q: Vec<f64> = (0..mdp.n_actions).map(|a| mdp.q_value(s, a, values, gamma)).collect();
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-9 * best.abs().max(1.0);
    let a = q.iter().position(|&x| x >= best - eps).unwrap_or(0);
    (a, q[a])
}

/// Greedy one-step-lookahead policy: `argmax_a r(s, a) + γ E V(s')`, lowest
/// index on ties.
pub fn improve_policy(mdp: &FiniteMdp, values: &[f64], gamma: f64, exec: Execution) -> Vec<usize> {
    map_range(exec, mdp.n_states, |s| greedy_action(mdp, s, values, gamma).0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiOutcome {
    pub policy: Vec<usize>,
    pub values: Vec<f64>,
    /// Number of evaluate/improve rounds performed.
    pub rounds: usize,
    /// Sum of state values after each evaluation.
    pub value_sums: Vec<f64>,
}

/// Policy iteration from `initial` until no state changes its action.
///
/// A state switches action only when the greedy action beats the current
/// one by more than the evaluation error bound.
pub fn policy_iteration(mdp: &FiniteMdp, initial: Vec<usize>, cfg: &SolverConfig) -> Result<PiOutcome> {
    cfg.validate()?;
    check_policy(mdp, &initial)?;
    let threshold = cfg.switch_threshold();
    let mut policy = initial;
    let mut values: Option<Vec<f64>> = None;
    let mut value_sums = Vec::new();
    for round in 1..=cfg.max_rounds {
        let v = evaluate_policy(mdp, &policy, cfg, values.as_deref())?;
        value_sums.push(v.iter().sum());
        let next = map_range(cfg.exec, mdp.n_states, |s| {
            let cur = policy[s];
            let q_cur = mdp.q_value(s, cur, &v, cfg.gamma);
            let (best, q_best) = greedy_action(mdp, s, &v, cfg.gamma);
            if q_best > q_cur + threshold {
                best
            } else {
                cur
            }
        });
        if next == policy {
            return Ok(PiOutcome {
                policy,
                values: v,
                rounds: round,
                value_sums,
            });
        }
        policy = next;
        values = Some(v);
    }
    Err(Error::PolicyIterationCap { rounds: cfg.max_rounds })
}
