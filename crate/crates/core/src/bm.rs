//! Runtime beam-management controllers.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::mdp::{argmax, Policy, State};
use crate::rem::{Grid, Heading, Motion, SpeedQuantizer};

/// RSRP of every beam from one SSB burst, as reported by one UE.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub ue: u32,
    pub t_ms: u64,
    pub rsrp: Vec<f64>,
}

impl MeasurementSet {
    /// Strongest beam, lowest index on ties.
    pub fn best_beam(&self) -> usize {
        argmax(&self.rsrp)
    }

    pub fn best_rsrp(&self) -> f64 {
        self.rsrp[self.best_beam()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reason {
    BaselineMargin,
    Policy,
    RlfFallback,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::BaselineMargin => "baseline-margin",
            Reason::Policy => "policy",
            Reason::RlfFallback => "rlf-fallback",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline-margin" => Some(Reason::BaselineMargin),
            "policy" => Some(Reason::Policy),
            "rlf-fallback" => Some(Reason::RlfFallback),
            _ => None,
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Keep,
    Switch(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub action: Action,
    pub reason: Reason,
}

impl Decision {
    /// Switch to `target`, or keep when it already is the serving beam.
    pub fn toward(source: usize, target: usize, reason: Reason) -> Self {
        let action = if target == source {
            Action::Keep
        } else {
            Action::Switch(target)
        };
        Decision { action, reason }
    }

    pub fn keep(reason: Reason) -> Self {
        Decision {
            action: Action::Keep,
            reason,
        }
    }

    pub fn target(&self) -> Option<usize> {
        match self.action {
            Action::Switch(b) => Some(b),
            Action::Keep => None,
        }
    }
}

/// Radio link failure: the serving beam is more than `margin_db` below the
/// strongest beam (strict).
pub fn detect_rlf(m: &MeasurementSet, source: usize, margin_db: f64) -> bool {
    m.rsrp[source] < m.best_rsrp() - margin_db
}

/// Margin-based reselection: switch to the strongest beam when it beats the
/// serving beam by more than `delta_ho_db`. Callers pass the measurement of
/// the previous burst; this controller acts one burst late.
pub fn baseline_decide(m: &MeasurementSet, source: usize, delta_ho_db: f64) -> Decision {
    if m.rsrp[source] < m.best_rsrp() - delta_ho_db {
        Decision::toward(source, m.best_beam(), Reason::BaselineMargin)
    } else {
        Decision::keep(Reason::BaselineMargin)
    }
}

/// Switch to the strongest measured beam.
pub fn rlf_fallback(m: &MeasurementSet, source: usize) -> Decision {
    Decision::toward(source, m.best_beam(), Reason::RlfFallback)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyOutcome {
    Decided(Decision),
    /// The UE's state is not covered by the policy.
    FallbackNeeded,
}

/// Policy plus the quantisers needed to map a UE report onto a state.
#[derive(Clone, Debug)]
pub struct PolicyLookup {
    pub policy: Policy,
    pub grid: Grid,
    pub speeds: SpeedQuantizer,
}

impl PolicyLookup {
    pub fn state(&self, reported_pos: (f64, f64), speed: f64, heading_deg: f64, source: usize) -> Option<State> {
        let tile = self.grid.quantize(reported_pos).ok()?;
        Some(State {
            tile,
            motion: Motion {
                speed: self.speeds.quantize(speed),
                heading: Heading::quantize(heading_deg),
            },
            source,
        })
    }

    pub fn decide(&self, reported_pos: (f64, f64), speed: f64, heading_deg: f64, source: usize) -> PolicyOutcome {
        policy_decide(self, reported_pos, speed, heading_deg, source)
    }
}

pub fn policy_decide(
    lookup: &PolicyLookup,
    reported_pos: (f64, f64),
    speed: f64,
    heading_deg: f64,
    source: usize,
) -> PolicyOutcome {
    match lookup
        .state(reported_pos, speed, heading_deg, source)
        .and_then(|s| lookup.policy.action(&s))
    {
        Some(a) => PolicyOutcome::Decided(Decision::toward(source, a, Reason::Policy)),
        None => PolicyOutcome::FallbackNeeded,
    }
}

/// Baseline controller with the one-burst measurement buffer per UE.
#[derive(Clone, Debug)]
pub struct BaselineController {
    pub delta_ho_db: f64,
    previous: HashMap<u32, MeasurementSet>,
}

impl BaselineController {
    pub fn new(delta_ho_db: f64) -> Self {
        BaselineController {
            delta_ho_db,
            previous: HashMap::new(),
        }
    }

    /// Decides on the measurement buffered from the previous burst, then
    /// buffers `current`. The first burst of a UE always keeps.
    pub fn step(&mut self, current: &MeasurementSet, source: usize) -> Decision {
        let d = match self.previous.get(&current.ue) {
            Some(prev) => baseline_decide(prev, source, self.delta_ho_db),
            None => Decision::keep(Reason::BaselineMargin),
        };
        self.previous.insert(current.ue, current.clone());
        d
    }

    pub fn forget(&mut self, ue: u32) {
        self.previous.remove(&ue);
    }
}

/// One applied beam switch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionLogEntry {
    pub t_ms: u64,
    pub ue: u32,
    pub reason: Reason,
    pub from_beam: usize,
    pub to_beam: usize,
}

pub fn write_decision_log<W: Write>(mut w: W, entries: &[DecisionLogEntry]) -> std::io::Result<()> {
    writeln!(w, "t_ms,ue,reason,from_beam,to_beam")?;
    for e in entries {
        writeln!(w, "{},{},{},{},{}", e.t_ms, e.ue, e.reason, e.from_beam, e.to_beam)?;
    }
    Ok(())
}

pub fn check_measurement(m: &MeasurementSet, n_beams: usize) -> Result<()> {
    if m.rsrp.len() != n_beams {
        return Err(Error::Contract(format!(
            "measurement has {} beams, expected {n_beams}",
            m.rsrp.len()
        )));
    }
    Ok(())
}
