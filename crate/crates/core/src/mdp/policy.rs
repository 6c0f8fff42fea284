use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rem::{num, parse_header, Motion, Rem, TileIndex};

use super::finite::{policy_iteration as solve, SolverConfig};
use super::model::{RemMdp, RewardParams, State};

pub const POLICY_MAGIC: &str = "POLv1";
const POLICY_COLUMNS: &str = "tile_x,tile_y,v,alpha,source_beam,action";

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyMeta {
    pub beta: f64,
    pub gamma: f64,
    pub rem_checksum: String,
    pub n_beams: usize,
}

/// Deterministic state → beam mapping.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub meta: PolicyMeta,
    actions: BTreeMap<State, usize>,
}

impl Policy {
    pub fn new(meta: PolicyMeta, actions: BTreeMap<State, usize>) -> Result<Self> {
        if let Some((s, a)) = actions.iter().find(|(s, a)| **a >= meta.n_beams || s.source >= meta.n_beams) {
            return Err(Error::Contract(format!("policy entry {s:?} -> {a} exceeds {} beams", meta.n_beams)));
        }
        Ok(Policy { meta, actions })
    }

    pub fn action(&self, state: &State) -> Option<usize> {
        self.actions.get(state).copied()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, usize)> {
        self.actions.iter().map(|(s, a)| (s, *a))
    }

    /// Human label: BR-MIN for β = 1, RSRP-MAX for β = 0.
    pub fn label(&self) -> String {
        policy_label(self.meta.beta)
    }

    pub fn to_artifact(&self) -> String {
        let m = &self.meta;
        let mut out = format!(
            "{POLICY_MAGIC} beta={} gamma={} rem_checksum={} nbeams={}\n{POLICY_COLUMNS}\n",
            m.beta, m.gamma, m.rem_checksum, m.n_beams
        );
        for (s, a) in &self.actions {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.tile.x, s.tile.y, s.motion.speed, s.motion.heading, s.source, a
            )
            .unwrap();
        }
        out
    }

    pub fn from_artifact(text: &str) -> Result<Self> {
        const WHAT: &str = "policy artifact";
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(WHAT, 1, "empty input"))?;
        let kv = parse_header(header, POLICY_MAGIC, WHAT)?;
        let get = |k: &str| -> Result<&str> {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(WHAT, 1, format!("missing header key `{k}`")))
        };
        let meta = PolicyMeta {
            beta: num(get("beta")?, WHAT, 1)?,
            gamma: num(get("gamma")?, WHAT, 1)?,
            rem_checksum: get("rem_checksum")?.to_string(),
            n_beams: num(get("nbeams")?, WHAT, 1)?,
        };
        match lines.next() {
            Some((_, l)) if l == POLICY_COLUMNS => {}
            Some((n, _)) => return Err(Error::parse(WHAT, n, "expected column header")),
            None => return Err(Error::parse(WHAT, 2, "missing column header")),
        }
        let mut actions = BTreeMap::new();
        for (n, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::parse(WHAT, n, "row needs 6 fields"));
            }
            let motion = Motion::new(num(f[2], WHAT, n)?, num(f[3], WHAT, n)?)
                .map_err(|e| Error::parse(WHAT, n, e.to_string()))?;
            let state = State {
                tile: TileIndex::new(num(f[0], WHAT, n)?, num(f[1], WHAT, n)?),
                motion,
                source: num(f[4], WHAT, n)?,
            };
            if actions.insert(state, num(f[5], WHAT, n)?).is_some() {
                return Err(Error::parse(WHAT, n, "duplicate state"));
            }
        }
        Policy::new(meta, actions).map_err(|e| Error::parse(WHAT, 0, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_artifact()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_artifact(&text)
    }
}

pub fn policy_label(beta: f64) -> String {
    if beta == 1.0 {
        "BR-MIN".to_string()
    } else if beta == 0.0 {
        "RSRP-MAX".to_string()
    } else {
        format!("policy/beta={beta}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    pub params: RewardParams,
    pub gamma: f64,
    pub tol: f64,
    pub burst_period_ms: f64,
    pub exec: Execution,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            params: RewardParams::br_min(),
            gamma: 0.9,
            tol: 1e-6,
            burst_period_ms: 20.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub policy: Policy,
    pub rounds: usize,
    pub value_sums: Vec<f64>,
    /// Final state values in state-space order (exit state excluded).
    pub values: Vec<f64>,
    pub model: RemMdp,
}

/// Trains a policy on `rem` by policy iteration, starting from "keep the
/// serving beam" in every state.
pub fn policy_iteration(rem: &Rem, cfg: &TrainingConfig) -> Result<TrainingOutcome> {
    let model = RemMdp::build(rem, &cfg.params, cfg.burst_period_ms)?;
    let solver = SolverConfig {
        gamma: cfg.gamma,
        tol: cfg.tol,
        exec: cfg.exec,
        ..SolverConfig::default()
    };
    let mut initial: Vec<usize> = model.space.states().iter().map(|s| s.source).collect();
    initial.push(0);
    let out = solve(&model.mdp, initial, &solver)?;
    let actions = model
        .space
        .states()
        .iter()
        .zip(&out.policy)
        .map(|(s, a)| (*s, *a))
        .collect();
    let policy = Policy::new(
        PolicyMeta {
            beta: cfg.params.beta,
            gamma: cfg.gamma,
            rem_checksum: rem.checksum(),
            n_beams: rem.n_beams(),
        },
        actions,
    )?;
    let mut values = out.values;
    values.truncate(model.space.len());
    Ok(TrainingOutcome {
        policy,
        rounds: out.rounds,
        value_sums: out.value_sums,
        values,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Policy {
        let mut actions = BTreeMap::new();
        for (i, src) in [0usize, 3, 15].into_iter().enumerate() {
            actions.insert(
                State {
                    tile: TileIndex::new(124, i as u32),
                    motion: Motion::new(25, 180).unwrap(),
                    source: src,
                },
                (src + 1) % 16,
            );
        }
        Policy::new(
            PolicyMeta {
                beta: 1.0,
                gamma: 0.9,
                rem_checksum: "ab12".into(),
                n_beams: 16,
            },
            actions,
        )
        .unwrap()
    }

    #[test]
    fn artifact_round_trip() {
        let p = sample();
        let a = p.to_artifact();
        assert!(a.starts_with("POLv1 beta=1 gamma=0.9 rem_checksum=ab12 nbeams=16\n"));
        let back = Policy::from_artifact(&a).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_artifact(), a);
    }

    #[test]
    fn rejects_out_of_range_actions() {
        let a = sample().to_artifact().replace(",0,1\n", ",0,16\n");
        assert!(Policy::from_artifact(&a).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(policy_label(1.0), "BR-MIN");
        assert_eq!(policy_label(0.0), "RSRP-MAX");
        assert_eq!(policy_label(0.5), "policy/beta=0.5");
    }
}
