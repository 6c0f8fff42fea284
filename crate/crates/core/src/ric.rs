//! In-process model of the O-RAN split.
//!
//! The Non-RT side builds or loads a REM, trains a policy and wraps it in an
//! [`A1PolicyMessage`]. The Near-RT side ([`BmXapp`]) deploys that message
//! and turns per-burst UE reports into [`E2Command`]s. Both sides talk only
//! through these message records.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::bm::{detect_rlf, policy_decide, rlf_fallback, Action, BaselineController, Decision, MeasurementSet, PolicyLookup, PolicyOutcome, Reason};
use crate::error::{Error, Result};
use crate::mdp::{policy_iteration, Policy, TrainingConfig};
use crate::rem::{num, parse_header, Averaging, Grid, Motion, Rem, SpeedQuantizer};

pub const A1_MAGIC: &str = "A1v1";

/// Policy transfer from the Non-RT to the Near-RT RIC.
#[derive(Clone, Debug, PartialEq)]
pub struct A1PolicyMessage {
    pub policy_artifact: String,
    pub beta: f64,
    pub gamma: f64,
    pub rem_checksum: String,
    pub issued_at_ms: u64,
}

impl A1PolicyMessage {
    pub fn new(policy: &Policy, issued_at_ms: u64) -> Self {
        A1PolicyMessage {
            policy_artifact: policy.to_artifact(),
            beta: policy.meta.beta,
            gamma: policy.meta.gamma,
            rem_checksum: policy.meta.rem_checksum.clone(),
            issued_at_ms,
        }
    }

    /// Checksum of the policy body; independent of `issued_at_ms`.
    pub fn policy_checksum(&self) -> String {
        crate::sha256_hex(self.policy_artifact.as_bytes())
    }

    /// Parses the carried policy and checks it agrees with the envelope.
    pub fn policy(&self) -> Result<Policy> {
        let p = Policy::from_artifact(&self.policy_artifact)?;
        if p.meta.rem_checksum != self.rem_checksum {
            return Err(Error::ChecksumMismatch {
                expected: self.rem_checksum.clone(),
                found: p.meta.rem_checksum,
            });
        }
        if p.meta.beta != self.beta || p.meta.gamma != self.gamma {
            return Err(Error::Contract("A1 envelope disagrees with policy metadata".into()));
        }
        Ok(p)
    }

    /// Rejects the message unless it was trained on a REM with `rem_checksum`.
    pub fn verify(&self, rem_checksum: &str) -> Result<()> {
        if self.rem_checksum != rem_checksum {
            return Err(Error::ChecksumMismatch {
                expected: self.rem_checksum.clone(),
                found: rem_checksum.to_string(),
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "{A1_MAGIC} beta={} gamma={} rem_checksum={} issued_at_ms={} policy_sha256={}\n{}",
            self.beta,
            self.gamma,
            self.rem_checksum,
            self.issued_at_ms,
            self.policy_checksum(),
            self.policy_artifact
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        const WHAT: &str = "A1 message";
        let (header, body) = text.split_once('\n').ok_or_else(|| Error::parse(WHAT, 1, "missing body"))?;
        let kv = parse_header(header, A1_MAGIC, WHAT)?;
        let get = |k: &str| -> Result<&str> {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(WHAT, 1, format!("missing header key `{k}`")))
        };
        let msg = A1PolicyMessage {
            policy_artifact: body.to_string(),
            beta: num(get("beta")?, WHAT, 1)?,
            gamma: num(get("gamma")?, WHAT, 1)?,
            rem_checksum: get("rem_checksum")?.to_string(),
            issued_at_ms: num(get("issued_at_ms")?, WHAT, 1)?,
        };
        let sha = get("policy_sha256")?;
        if sha != msg.policy_checksum() {
            return Err(Error::ChecksumMismatch {
                expected: sha.to_string(),
                found: msg.policy_checksum(),
            });
        }
        Ok(msg)
    }
}

/// Beam switch order for one UE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct E2Command {
    pub ue: u32,
    pub target_beam: usize,
    pub issued_at_ms: u64,
    pub reason: Reason,
}

impl fmt::Display for E2Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E2 t_ms={} ue={} target={} reason={}",
            self.issued_at_ms, self.ue, self.target_beam, self.reason
        )
    }
}

impl E2Command {
    pub fn parse(line: &str) -> Result<Self> {
        const WHAT: &str = "E2 command";
        let kv = parse_header(line, "E2", WHAT)?;
        let get = |k: &str| -> Result<&str> {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(WHAT, 1, format!("missing field `{k}`")))
        };
        Ok(E2Command {
            ue: num(get("ue")?, WHAT, 1)?,
            target_beam: num(get("target")?, WHAT, 1)?,
            issued_at_ms: num(get("t_ms")?, WHAT, 1)?,
            reason: Reason::parse(get("reason")?).ok_or_else(|| Error::parse(WHAT, 1, "unknown reason"))?,
        })
    }
}

/// One location-tagged measurement report as collected over O1.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationReport {
    pub pos: (f64, f64),
    pub rsrp: Vec<f64>,
    pub motion: Motion,
    /// Motion reported at the following burst, when there was one.
    pub next_motion: Option<Motion>,
}

/// Layout of a REM built from a report stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemLayout {
    pub grid: Grid,
    pub n_beams: usize,
    pub averaging: Averaging,
    pub speeds: SpeedQuantizer,
}

pub enum RemSource<'a> {
    Reports {
        layout: RemLayout,
        reports: Box<dyn Iterator<Item = LocationReport> + 'a>,
    },
    /// REM artifact on disk, optionally pinned to a checksum.
    File {
        path: &'a Path,
        expected_checksum: Option<&'a str>,
    },
    Rem(&'a Rem),
}

/// Builds a REM from location reports.
pub fn build_rem<I: IntoIterator<Item = LocationReport>>(layout: RemLayout, reports: I) -> Result<Rem> {
    let mut rem = Rem::new(layout.grid, layout.n_beams, layout.averaging, layout.speeds);
    let mut n = 0usize;
    for r in reports {
        let tile = rem.ingest_measurement(r.pos, &r.rsrp)?;
        if let Some(next) = r.next_motion {
            rem.mobility.observe(tile, r.motion, next)?;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyRem);
    }
    Ok(rem)
}

pub fn load_rem(source: RemSource<'_>) -> Result<Rem> {
    match source {
        RemSource::Reports { layout, reports } => build_rem(layout, reports),
        RemSource::File { path, expected_checksum } => {
            let rem = Rem::read(path)?;
            if let Some(want) = expected_checksum {
                let got = rem.checksum();
                if got != want {
                    return Err(Error::ChecksumMismatch {
                        expected: want.to_string(),
                        found: got,
                    });
                }
            }
            Ok(rem)
        }
        RemSource::Rem(rem) => Ok(rem.clone()),
    }
}

#[derive(Clone, Debug)]
pub struct NonRtOutput {
    pub message: A1PolicyMessage,
    pub rem: Rem,
    pub rounds: usize,
}

/// Non-RT pipeline: REM, policy iteration, A1 message.
pub fn nonrt_train(source: RemSource<'_>, cfg: &TrainingConfig, issued_at_ms: u64) -> Result<NonRtOutput> {
    let rem = load_rem(source)?;
    let out = policy_iteration(&rem, cfg)?;
    Ok(NonRtOutput {
        message: A1PolicyMessage::new(&out.policy, issued_at_ms),
        rem,
        rounds: out.rounds,
    })
}

/// Everything the xApp learns about one UE in one burst.
#[derive(Clone, Debug, PartialEq)]
pub struct UeReport {
    /// Position from the localization feed.
    pub reported_pos: (f64, f64),
    pub speed: f64,
    pub heading_deg: f64,
    pub serving: usize,
    pub measurement: MeasurementSet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XappConfig {
    pub rlf_margin_db: f64,
    /// Baseline margin used where the policy has no state.
    pub fallback_delta_ho_db: f64,
    pub grid: Grid,
    pub speeds: SpeedQuantizer,
}

#[derive(Debug)]
struct Deployed {
    checksum: String,
    lookup: PolicyLookup,
}

/// Near-RT beam-management xApp.
#[derive(Debug)]
pub struct BmXapp {
    cfg: XappConfig,
    deployed: Option<Arc<Deployed>>,
    baseline: BaselineController,
}

impl BmXapp {
    pub fn new(cfg: XappConfig) -> Self {
        BmXapp {
            cfg,
            deployed: None,
            baseline: BaselineController::new(cfg.fallback_delta_ho_db),
        }
    }

    /// Installs the policy carried by `msg`. Returns false when the same
    /// policy body is already deployed.
    pub fn deploy(&mut self, msg: &A1PolicyMessage) -> Result<bool> {
        let checksum = msg.policy_checksum();
        if self.deployed.as_ref().is_some_and(|d| d.checksum == checksum) {
            return Ok(false);
        }
        let policy = msg.policy()?;
        let lookup = PolicyLookup {
            policy,
            grid: self.cfg.grid,
            speeds: self.cfg.speeds,
        };
        // swapped whole, so a burst sees either the old or the new policy
        self.deployed = Some(Arc::new(Deployed { checksum, lookup }));
        Ok(true)
    }

    pub fn deployed_checksum(&self) -> Option<&str> {
        self.deployed.as_deref().map(|d| d.checksum.as_str())
    }

    pub fn policy(&self) -> Option<&Policy> {
        self.deployed.as_deref().map(|d| &d.lookup.policy)
    }

    /// Decision for one UE: RLF fallback, else policy, else delayed baseline.
    pub fn decide(&mut self, r: &UeReport) -> Decision {
        // always advance the one-burst buffer
        let baseline = self.baseline.step(&r.measurement, r.serving);
        if detect_rlf(&r.measurement, r.serving, self.cfg.rlf_margin_db) {
            return rlf_fallback(&r.measurement, r.serving);
        }
        if let Some(d) = &self.deployed {
            if let PolicyOutcome::Decided(dec) = policy_decide(&d.lookup, r.reported_pos, r.speed, r.heading_deg, r.serving)
            {
                return dec;
            }
        }
        baseline
    }

    /// One burst: at most one command per UE, never targeting the serving beam.
    pub fn step(&mut self, t_ms: u64, reports: &[UeReport]) -> Vec<E2Command> {
        let mut out = Vec::new();
        for r in reports {
            let d = self.decide(r);
            if let Action::Switch(target) = d.action {
                out.push(E2Command {
                    ue: r.measurement.ue,
                    target_beam: target,
                    issued_at_ms: t_ms,
                    reason: d.reason,
                });
            }
        }
        out
    }

    /// Drops per-UE state once a UE leaves the cell.
    pub fn release(&mut self, ue: u32) {
        self.baseline.forget(ue);
    }
}
