//! Burst-clocked road scenario and KPI collection.
//!
//! UEs drive along a straight vertical road through the cell. Every SSB
//! burst each active UE measures all beams, RLFs are counted against the
//! serving beam, the controller decides, and the UE moves on. Cell extent
//! and gNB placement come from the [`Channel`].

mod populate;
mod stats;

pub use populate::{populate_rem, probe_reports};
pub use stats::{percentile, smooth_trace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bm::{detect_rlf, Action, BaselineController, DecisionLogEntry, MeasurementSet, Reason};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::exec::{map_mut, Execution};
use crate::mdp::{argmax, policy_label};
use crate::rem::Heading;
use crate::ric::{A1PolicyMessage, BmXapp, UeReport, XappConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub burst_period_ms: u64,
    pub n_ues: usize,
    pub speed_mps: f64,
    /// Headings in degrees, assigned to UEs round-robin.
    pub directions: Vec<u16>,
    pub rlf_margin_db: f64,
    pub duration_s: f64,
    pub road_x: f64,
    /// Std of the Gaussian error on positions fed to controllers, metres.
    pub position_noise_m: f64,
    /// Traffic seed: fading draws, position noise, probe passes.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            burst_period_ms: 20,
            n_ues: 300,
            speed_mps: 25.0,
            directions: vec![0, 180],
            rlf_margin_db: 8.0,
            duration_s: 15.0,
            road_x: 250.0,
            position_noise_m: 0.0,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.burst_period_ms == 0 {
            return bad("burst period must be positive".into());
        }
        if self.n_ues == 0 {
            return bad("need at least one UE".into());
        }
        for (name, v) in [
            ("speed", self.speed_mps),
            ("rlf margin", self.rlf_margin_db),
            ("duration", self.duration_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.position_noise_m >= 0.0) {
            return bad("position noise must be non-negative".into());
        }
        if self.directions.is_empty() {
            return bad("need at least one direction".into());
        }
        for &d in &self.directions {
            Heading::new(d).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn n_bursts(&self) -> u64 {
        (self.duration_s * 1000.0 / self.burst_period_ms as f64).round() as u64
    }

    /// Distance travelled per burst in metres.
    pub fn step_m(&self) -> f64 {
        self.speed_mps * self.burst_period_ms as f64 / 1000.0
    }

    /// Where a UE heading `heading` enters the road.
    pub fn entry_point(&self, heading: Heading, cell: (f64, f64)) -> (f64, f64) {
        let (_, uy) = heading.unit_vector();
        let y = if uy < -1e-9 {
            cell.1
        } else if uy > 1e-9 {
            0.0
        } else {
            cell.1 / 2.0
        };
        (self.road_x, y)
    }

    fn check_against(&self, channel: &Channel) -> Result<()> {
        self.validate()?;
        if !(0.0..=channel.cell.0).contains(&self.road_x) {
            return Err(Error::Config(format!("road x = {} lies outside the cell", self.road_x)));
        }
        Ok(())
    }
}

/// Independent RNG stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Beam-management controller under test.
#[derive(Clone, Debug)]
pub enum ControllerSpec {
    Baseline { delta_ho_db: f64 },
    Policy { message: A1PolicyMessage, xapp: XappConfig },
}

impl ControllerSpec {
    pub fn label(&self) -> String {
        match self {
            ControllerSpec::Baseline { delta_ho_db } => baseline_label(*delta_ho_db),
            ControllerSpec::Policy { message, .. } => policy_label(message.beta),
        }
    }
}

pub fn baseline_label(delta_ho_db: f64) -> String {
    format!("baseline/{delta_ho_db}dB")
}

enum Controller {
    Baseline(BaselineController),
    Xapp(Box<BmXapp>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UeKpi {
    pub ue: u32,
    pub reselections: u64,
    pub rlfs: u64,
    pub active_bursts: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpiReport {
    pub controller: String,
    pub delta_ho_db: Option<f64>,
    pub beta: Option<f64>,
    pub burst_period_ms: u64,
    pub per_ue: Vec<UeKpi>,
    /// Serving-beam RSRP of every active UE at every burst, dBm.
    pub samples: Vec<f64>,
}

impl KpiReport {
    pub fn active_seconds(&self) -> f64 {
        self.per_ue.iter().map(|u| u.active_bursts).sum::<u64>() as f64 * self.burst_period_ms as f64 / 1000.0
    }

    pub fn total_reselections(&self) -> u64 {
        self.per_ue.iter().map(|u| u.reselections).sum()
    }

    pub fn total_rlfs(&self) -> u64 {
        self.per_ue.iter().map(|u| u.rlfs).sum()
    }

    /// Reselections per user per second.
    pub fn reselection_rate(&self) -> f64 {
        rate(self.total_reselections(), self.active_seconds())
    }

    /// RLFs per user per second.
    pub fn rlf_rate(&self) -> f64 {
        rate(self.total_rlfs(), self.active_seconds())
    }

    pub fn rsrp_percentile(&self, p: f64) -> Result<f64> {
        percentile(&self.samples, p)
    }
}

fn rate(events: u64, seconds: f64) -> f64 {
    if seconds > 0.0 {
        events as f64 / seconds
    } else {
        0.0
    }
}

/// Serving beam and RSRP of one UE at one burst.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t_ms: u64,
    pub ue: u32,
    pub beam: usize,
    pub rsrp_dbm: f64,
}

/// A full measurement with the beam that was serving when it was taken.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    /// True UE position.
    pub pos: (f64, f64),
    pub serving: usize,
    pub measurement: MeasurementSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub record_trace: bool,
    pub record_measurements: bool,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_trace: true,
            record_measurements: false,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub report: KpiReport,
    pub trace: Vec<TraceRow>,
    pub decisions: Vec<DecisionLogEntry>,
    pub measurements: Vec<MeasurementRecord>,
}

/// Measurement, true position and reported position of one UE in one burst.
type Measured = (Vec<f64>, (f64, f64), (f64, f64));

struct Ue {
    id: u32,
    start_burst: u64,
    heading: Heading,
    entry: (f64, f64),
    steps: u64,
    serving: Option<usize>,
    departed: bool,
    rng: ChaCha8Rng,
    kpi: UeKpi,
}

impl Ue {
    fn position(&self, step_m: f64) -> (f64, f64) {
        let (ux, uy) = self.heading.unit_vector();
        let d = self.steps as f64 * step_m;
        (self.entry.0 + ux * d, self.entry.1 + uy * d)
    }
}

/// Runs the scenario under one controller.
///
/// UE `i` enters at burst `⌊i·n_bursts/n_ues⌋` at the road end matching its
/// heading and leaves when it exits the cell. Its fading and position noise
/// come from its own RNG stream, so results do not depend on `opts.exec`.
pub fn run(cfg: &ScenarioConfig, controller: &ControllerSpec, channel: &Channel, opts: RunOptions) -> Result<SimOutput> {
    cfg.check_against(channel)?;
    let mut ctl = match controller {
        ControllerSpec::Baseline { delta_ho_db } => {
            if !(*delta_ho_db >= 0.0) {
                return Err(Error::Config(format!("delta_ho must be non-negative, got {delta_ho_db}")));
            }
            Controller::Baseline(BaselineController::new(*delta_ho_db))
        }
        ControllerSpec::Policy { message, xapp } => {
            let mut x = BmXapp::new(*xapp);
            x.deploy(message)?;
            if x.policy().map(|p| p.meta.n_beams) != Some(channel.n_beams()) {
                return Err(Error::Config("policy beam count does not match the channel".into()));
            }
            Controller::Xapp(Box::new(x))
        }
    };
    let n_bursts = cfg.n_bursts();
    let step_m = cfg.step_m();
    let noise = if cfg.position_noise_m > 0.0 {
        Some(Normal::new(0.0, cfg.position_noise_m).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let mut ues: Vec<Ue> = (0..cfg.n_ues)
        .map(|i| {
            let heading = Heading::new(cfg.directions[i % cfg.directions.len()]).expect("validated");
            Ue {
                id: i as u32,
                start_burst: i as u64 * n_bursts / cfg.n_ues as u64,
                heading,
                entry: cfg.entry_point(heading, channel.cell),
                steps: 0,
                serving: None,
                departed: false,
                rng: stream_rng(cfg.seed, i as u64),
                kpi: UeKpi {
                    ue: i as u32,
                    ..UeKpi::default()
                },
            }
        })
        .collect();

    let mut samples = Vec::new();
    let mut trace = Vec::new();
    let mut decisions = Vec::new();
    let mut measurements = Vec::new();
    let mut first_active = 0usize;
    for k in 0..n_bursts {
        let t_ms = k * cfg.burst_period_ms;
        let arrived = ues.partition_point(|u| u.start_burst <= k);
        while first_active < arrived && ues[first_active].departed {
            first_active += 1;
        }
        let window = &mut ues[first_active..arrived];
        let measured: Vec<Option<Result<Measured>>> = map_mut(opts.exec, window, |ue| {
            if ue.departed {
                return None;
            }
            let pos = ue.position(step_m);
            Some(channel.measure(pos, &mut ue.rng).map(|m| {
                let reported = match &noise {
                    Some(n) => (pos.0 + n.sample(&mut ue.rng), pos.1 + n.sample(&mut ue.rng)),
                    None => pos,
                };
                (m, pos, reported)
            }))
        });

        let mut reports = Vec::new();
        let mut slots = Vec::new();
        for (ue, m) in window.iter_mut().zip(measured) {
            let Some(m) = m else { continue };
            let (rsrp, pos, reported_pos) = m?;
            let ms = MeasurementSet {
                ue: ue.id,
                t_ms,
                rsrp,
            };
            let serving = *ue.serving.get_or_insert_with(|| argmax(&ms.rsrp));
            samples.push(ms.rsrp[serving]);
            if opts.record_trace {
                trace.push(TraceRow {
                    t_ms,
                    ue: ue.id,
                    beam: serving,
                    rsrp_dbm: ms.rsrp[serving],
                });
            }
            if detect_rlf(&ms, serving, cfg.rlf_margin_db) {
                ue.kpi.rlfs += 1;
            }
            ue.kpi.active_bursts += 1;
            if opts.record_measurements {
                measurements.push(MeasurementRecord {
                    pos,
                    serving,
                    measurement: ms.clone(),
                });
            }
            slots.push(ue.id);
            reports.push(UeReport {
                reported_pos,
                speed: cfg.speed_mps,
                heading_deg: ue.heading.degrees() as f64,
                serving,
                measurement: ms,
            });
        }

        let switches: Vec<(u32, usize, Reason)> = match &mut ctl {
            Controller::Baseline(b) => reports
                .iter()
                .filter_map(|r| {
                    let d = b.step(&r.measurement, r.serving);
                    match d.action {
                        Action::Switch(t) => Some((r.measurement.ue, t, d.reason)),
                        Action::Keep => None,
                    }
                })
                .collect(),
            Controller::Xapp(x) => x
                .step(t_ms, &reports)
                .into_iter()
                .map(|c| (c.ue, c.target_beam, c.reason))
                .collect(),
        };
        for (id, target, reason) in switches {
            let ue = &mut ues[id as usize];
            let from = ue.serving.expect("measured this burst");
            debug_assert_ne!(from, target);
            ue.serving = Some(target);
            ue.kpi.reselections += 1;
            decisions.push(DecisionLogEntry {
                t_ms,
                ue: id,
                reason,
                from_beam: from,
                to_beam: target,
            });
        }

        for id in slots {
            let ue = &mut ues[id as usize];
            ue.steps += 1;
            if !channel.contains(ue.position(step_m)) {
                ue.departed = true;
                match &mut ctl {
                    Controller::Baseline(b) => b.forget(id),
                    Controller::Xapp(x) => x.release(id),
                }
            }
        }
    }

    let (delta_ho_db, beta) = match controller {
        ControllerSpec::Baseline { delta_ho_db } => (Some(*delta_ho_db), None),
        ControllerSpec::Policy { message, .. } => (None, Some(message.beta)),
    };
    Ok(SimOutput {
        report: KpiReport {
            controller: controller.label(),
            delta_ho_db,
            beta,
            burst_period_ms: cfg.burst_period_ms,
            per_ue: ues.iter().map(|u| u.kpi).collect(),
            samples,
        },
        trace,
        decisions,
        measurements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_codebook, ArrayConfig, ShadowingField};

    fn flat_channel() -> Channel {
        let array = ArrayConfig::default();
        let codebook = build_codebook(&array, 16).unwrap();
        Channel::new(array, codebook, ShadowingField::zeros(500.0, 500.0, 1.0, 16), (500.0, 500.0)).unwrap()
    }

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_ues: 6,
            duration_s: 4.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn rate_arithmetic() {
        let r = KpiReport {
            controller: "x".into(),
            delta_ho_db: None,
            beta: None,
            burst_period_ms: 20,
            per_ue: vec![UeKpi {
                ue: 0,
                reselections: 3,
                rlfs: 0,
                active_bursts: 750,
            }],
            samples: vec![],
        };
        assert!((r.reselection_rate() - 0.2).abs() < 1e-12);
        assert_eq!(r.rlf_rate(), 0.0);
    }

    #[test]
    fn never_switching_ue_hits_rlf() {
        let ch = flat_channel();
        let cfg = ScenarioConfig {
            n_ues: 1,
            directions: vec![180],
            duration_s: 21.0,
            ..ScenarioConfig::default()
        };
        // a margin nothing can exceed means the baseline never switches
        let out = run(&cfg, &ControllerSpec::Baseline { delta_ho_db: 1e9 }, &ch, RunOptions::default()).unwrap();
        assert_eq!(out.report.total_reselections(), 0);
        assert!(out.report.total_rlfs() > 0);
        assert_eq!(out.report.per_ue[0].active_bursts, 1001);
    }

    #[test]
    fn staggered_arrivals_and_exits() {
        let ch = flat_channel();
        let cfg = small();
        let out = run(&cfg, &ControllerSpec::Baseline { delta_ho_db: 3.0 }, &ch, RunOptions::default()).unwrap();
        let bursts: Vec<u64> = out.report.per_ue.iter().map(|u| u.active_bursts).collect();
        // UE i starts at burst 200·i/6 and stays until the end
        let want: Vec<u64> = (0..6).map(|i| 200 - i * 200 / 6).collect();
        assert_eq!(bursts, want);
        assert_eq!(out.report.samples.len() as u64, want.iter().sum::<u64>());
        assert_eq!(out.trace.len(), out.report.samples.len());
    }

    #[test]
    fn same_seeds_same_report_and_modes_agree() {
        let ch = flat_channel();
        let cfg = small();
        let spec = ControllerSpec::Baseline { delta_ho_db: 3.0 };
        let seq = RunOptions {
            exec: Execution::Sequential,
            ..RunOptions::default()
        };
        let a = run(&cfg, &spec, &ch, RunOptions::default()).unwrap();
        let b = run(&cfg, &spec, &ch, RunOptions::default()).unwrap();
        let c = run(&cfg, &spec, &ch, seq).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.report, c.report);
        assert_eq!(a.trace, c.trace);
        let other = run(&ScenarioConfig { seed: 2, ..cfg }, &spec, &ch, RunOptions::default()).unwrap();
        assert_ne!(a.report.samples, other.report.samples);
    }

    #[test]
    fn reselections_match_decision_log() {
        let ch = flat_channel();
        let out = run(&small(), &ControllerSpec::Baseline { delta_ho_db: 3.0 }, &ch, RunOptions::default()).unwrap();
        for u in &out.report.per_ue {
            let logged = out.decisions.iter().filter(|d| d.ue == u.ue).count() as u64;
            assert_eq!(logged, u.reselections);
        }
        assert!(out.report.total_reselections() > 0);
        assert!(out.decisions.iter().all(|d| d.from_beam != d.to_beam));
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        assert!(ScenarioConfig { directions: vec![30], ..ScenarioConfig::default() }.validate().is_err());
        assert!(ScenarioConfig { n_ues: 0, ..ScenarioConfig::default() }.validate().is_err());
        assert!(ScenarioConfig { speed_mps: -1.0, ..ScenarioConfig::default() }.validate().is_err());
        let ch = flat_channel();
        let far = ScenarioConfig { road_x: 900.0, ..small() };
        assert!(run(&far, &ControllerSpec::Baseline { delta_ho_db: 3.0 }, &ch, RunOptions::default()).is_err());
        assert_eq!(ScenarioConfig::default().n_bursts(), 750);
        assert_eq!(ScenarioConfig::default().step_m(), 0.5);
    }
}
