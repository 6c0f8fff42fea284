//! The beam-selection MDP derived from a REM.
//!
//! A state is (tile, current quantised motion, serving beam); an action is
//! the beam to serve next. Rewards trade beam switches against RSRP:
//!
//! ```text
//! r(s, a)  = β · f_br(s, a) + (1 − β) · f_rsrp(s, a)
//! f_br     = −1000 if beam a would be in radio link failure at s.tile,
//!            −1    else if a ≠ serving beam,
//!             0    otherwise
//! f_rsrp   =  0    if a is the strongest beam at s.tile, −1000 otherwise
//! ```
//!
//! RSRP comparisons use the REM tile means.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::rem::{Motion, Rem, TileIndex};

use super::finite::FiniteMdp;

pub const RLF_PENALTY: f64 = -1000.0;
pub const SWITCH_PENALTY: f64 = -1.0;
pub const NOT_STRONGEST_PENALTY: f64 = -1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub tile: TileIndex,
    pub motion: Motion,
    pub source: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardParams {
    /// Weight of the reselection objective, in `[0, 1]`.
    pub beta: f64,
    /// Radio-link-failure margin δ_th in dB.
    pub rlf_margin_db: f64,
}

impl RewardParams {
    pub fn new(beta: f64, rlf_margin_db: f64) -> Result<Self> {
        let p = RewardParams { beta, rlf_margin_db };
        p.validate()?;
        Ok(p)
    }

    /// Minimise reselections while avoiding radio link failures.
    pub fn br_min() -> Self {
        RewardParams {
            beta: 1.0,
            rlf_margin_db: 8.0,
        }
    }

    /// Always serve the strongest beam.
    pub fn rsrp_max() -> Self {
        RewardParams {
            beta: 0.0,
            rlf_margin_db: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if !(self.rlf_margin_db >= 0.0) {
            return Err(Error::Config(format!("RLF margin must be non-negative, got {}", self.rlf_margin_db)));
        }
        Ok(())
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Reward for choosing `action` while served by `source`, given the tile's
/// per-beam mean RSRPs.
pub fn reward_from_means(means: &[f64], source: usize, action: usize, params: &RewardParams) -> f64 {
    let best = argmax(means);
    let f_br = if means[action] < means[best] - params.rlf_margin_db {
        RLF_PENALTY
    } else if action != source {
        SWITCH_PENALTY
    } else {
        0.0
    };
    let f_rsrp = if action == best { 0.0 } else { NOT_STRONGEST_PENALTY };
    params.beta * f_br + (1.0 - params.beta) * f_rsrp
}

pub fn reward(state: &State, action: usize, rem: &Rem, params: &RewardParams) -> Result<f64> {
    let n = rem.n_beams();
    if action >= n || state.source >= n {
        return Err(Error::BeamIndex {
            beam: action.max(state.source),
            n_beams: n,
        });
    }
    let means = rem.rsrp.tile_means(state.tile).ok_or(Error::MissingRsrp {
        x: state.tile.x,
        y: state.tile.y,
    })?;
    Ok(reward_from_means(&means, state.source, action, params))
}

/// Enumerated MDP states in canonical (sorted) order.
#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<State>,
    index: HashMap<State, usize>,
    tiles: BTreeSet<TileIndex>,
    motions: Vec<Motion>,
    n_beams: usize,
}

impl StateSpace {
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn tiles(&self) -> &BTreeSet<TileIndex> {
        &self.tiles
    }

    pub fn motions(&self) -> &[Motion] {
        &self.motions
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }
}

/// Known tiles × observed motions × serving beams. A tile is known when
/// every beam has a mean in the REM.
pub fn build_state_space(rem: &Rem) -> Result<StateSpace> {
    let tiles: BTreeSet<TileIndex> = rem.rsrp.complete_tiles().collect();
    if tiles.is_empty() {
        return Err(Error::EmptyRem);
    }
    let motions = rem.mobility.observed_motions();
    if motions.is_empty() {
        return Err(Error::Config("REM has no mobility observations".into()));
    }
    let n_beams = rem.n_beams();
    let mut states = Vec::with_capacity(tiles.len() * motions.len() * n_beams);
    for &tile in &tiles {
        for &motion in &motions {
            for source in 0..n_beams {
                states.push(State { tile, motion, source });
            }
        }
    }
    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(StateSpace {
        states,
        index,
        tiles,
        motions,
        n_beams,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Successor {
    State(State),
    /// Absorbing zero-reward state for UEs leaving the mapped area.
    Exit,
}

/// Probability that a UE moving at `speed` m/s leaves its tile toward the
/// neighbour in `motion`'s heading within one burst.
pub fn advance_probability(motion: Motion, tile_size: f64, burst_period_ms: f64) -> f64 {
    let (dx, dy) = motion.heading.tile_step();
    let hop = tile_size * ((dx * dx + dy * dy) as f64).sqrt();
    (motion.speed as f64 * burst_period_ms / 1000.0 / hop).clamp(0.0, 1.0)
}

/// Next-state distribution for taking `action` in `state`: the serving beam
/// becomes `action`, the next motion is drawn from the REM mobility map, and
/// the UE crosses into the neighbouring tile with [`advance_probability`].
/// Mass that would land on an unknown tile goes to [`Successor::Exit`].
pub fn transition(state: &State, action: usize, rem: &Rem, burst_period_ms: f64) -> Result<Vec<(Successor, f64)>> {
    if action >= rem.n_beams() {
        return Err(Error::BeamIndex {
            beam: action,
            n_beams: rem.n_beams(),
        });
    }
    let known = |t: TileIndex| rem.rsrp.tile_means(t).is_some();
    let mut out: BTreeMap<Successor, f64> = BTreeMap::new();
    let mut put = |tile: Option<TileIndex>, motion: Motion, p: f64| {
        if p <= 0.0 {
            return;
        }
        let succ = match tile {
            Some(t) if known(t) => Successor::State(State {
                tile: t,
                motion,
                source: action,
            }),
            _ => Successor::Exit,
        };
        *out.entry(succ).or_insert(0.0) += p;
    };
    for (motion, q) in rem.mobility.distribution(state.tile, state.motion) {
        let p = advance_probability(motion, rem.grid.tile_size, burst_period_ms);
        let (dx, dy) = motion.heading.tile_step();
        put(Some(state.tile), motion, q * (1.0 - p));
        put(rem.grid.offset(state.tile, dx, dy), motion, q * p);
    }
    Ok(out.into_iter().collect())
}

/// A REM-derived MDP ready for the solver. State `i < space.len()` is
/// `space.states()[i]`; the last state is the absorbing exit.
#[derive(Clone, Debug)]
pub struct RemMdp {
    pub space: StateSpace,
    pub mdp: FiniteMdp,
}

impl RemMdp {
    pub fn build(rem: &Rem, params: &RewardParams, burst_period_ms: f64) -> Result<Self> {
        params.validate()?;
        if !(burst_period_ms > 0.0) {
            return Err(Error::Config("burst period must be positive".into()));
        }
        let space = build_state_space(rem)?;
        let n_beams = rem.n_beams();
        let exit = space.len();
        let means: HashMap<TileIndex, Vec<f64>> =
            space.tiles.iter().map(|&t| (t, rem.rsrp.tile_means(t).expect("known tile"))).collect();
        let mdp = FiniteMdp::from_fn(space.len() + 1, n_beams, |s, a| {
            if s == exit {
                return Ok((0.0, vec![(exit, 1.0)]));
            }
            let st = &space.states[s];
            let r = reward_from_means(&means[&st.tile], st.source, a, params);
            let kernel = transition(st, a, rem, burst_period_ms)?
                .into_iter()
                .map(|(succ, p)| match succ {
                    Successor::State(n) => (space.index[&n], p),
                    Successor::Exit => (exit, p),
                })
                .collect();
            Ok((r, kernel))
        })?;
        Ok(RemMdp { space, mdp })
    }

    pub fn exit_state(&self) -> usize {
        self.space.len()
    }
}
