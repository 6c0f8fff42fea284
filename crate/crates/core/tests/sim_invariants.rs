use std::collections::{BTreeMap, BTreeSet};

use gobrem::bm::Reason;
use gobrem::channel::Channel;
use gobrem::config::RunConfig;
use gobrem::mdp::{self, RewardParams, TrainingConfig};
use gobrem::rem::Rem;
use gobrem::ric::A1PolicyMessage;
use gobrem::sim::{self, ControllerSpec, MeasurementRecord, RunOptions, ScenarioConfig, SimOutput};
use gobrem::Execution;

fn setup(passes: usize, fading: bool) -> (RunConfig, Channel, Rem) {
    let mut cfg = RunConfig::default();
    cfg.scenario.n_ues = 8;
    cfg.scenario.duration_s = 12.0;
    let mut channel = Channel::generate(&cfg.channel_config(), Execution::default()).unwrap();
    if !fading {
        channel = channel.without_fading();
    }
    let rem = sim::populate_rem(
        &cfg.scenario(),
        &channel,
        cfg.rem_layout().unwrap(),
        passes,
        cfg.seeds.traffic,
        Execution::default(),
    )
    .unwrap();
    (cfg, channel, rem)
}

fn policy_run(cfg: &RunConfig, channel: &Channel, rem: &Rem, beta: f64, exec: Execution) -> SimOutput {
    let training = TrainingConfig {
        params: RewardParams::new(beta, cfg.scenario.rlf_margin_db).unwrap(),
        ..TrainingConfig::default()
    };
    let policy = mdp::policy_iteration(rem, &training).unwrap().policy;
    let spec = ControllerSpec::Policy {
        message: A1PolicyMessage::new(&policy, 0),
        xapp: cfg.xapp_config(rem.grid, rem.mobility.speed_quantizer()),
    };
    let opts = RunOptions {
        record_measurements: true,
        exec,
        ..RunOptions::default()
    };
    sim::run(&cfg.scenario(), &spec, channel, opts).unwrap()
}

fn by_ue(records: &[MeasurementRecord]) -> BTreeMap<u32, Vec<&MeasurementRecord>> {
    let mut out: BTreeMap<u32, Vec<&MeasurementRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.measurement.ue).or_default().push(r);
    }
    out
}

fn strongest(rsrp: &[f64]) -> usize {
    let mut best = 0;
    for (b, v) in rsrp.iter().enumerate() {
        if *v > rsrp[best] {
            best = b;
        }
    }
    best
}

#[test]
fn rlf_count_and_fallback_replay() {
    let (cfg, channel, rem) = setup(3, true);
    let out = policy_run(&cfg, &channel, &rem, 1.0, Execution::default());
    let margin = cfg.scenario.rlf_margin_db;
    let switches: BTreeMap<(u64, u32), usize> = out.decisions.iter().map(|d| ((d.t_ms, d.ue), d.to_beam)).collect();
    assert_eq!(switches.len(), out.decisions.len(), "two commands for one UE in one burst");

    let mut total_rlf = 0;
    for (ue, recs) in by_ue(&out.measurements) {
        let kpi = out.report.per_ue.iter().find(|k| k.ue == ue).unwrap();
        let mut rlfs = 0;
        let mut changes = 0;
        for (i, r) in recs.iter().enumerate() {
            let m = &r.measurement.rsrp;
            let rlf = m.iter().cloned().fold(f64::MIN, f64::max) - m[r.serving] > margin;
            if rlf {
                rlfs += 1;
            }
            if let Some(next) = recs.get(i + 1) {
                if rlf {
                    assert_eq!(next.serving, strongest(m), "ue {ue} after RLF at {}", r.measurement.t_ms);
                }
                if next.serving != r.serving {
                    changes += 1;
                    assert_eq!(switches.get(&(r.measurement.t_ms, ue)), Some(&next.serving));
                }
            }
        }
        assert_eq!(kpi.rlfs, rlfs, "ue {ue}");
        assert_eq!(kpi.active_bursts as usize, recs.len());
        let last_t = recs.last().unwrap().measurement.t_ms;
        let tail = switches.contains_key(&(last_t, ue)) as u64;
        assert_eq!(kpi.reselections, changes + tail, "ue {ue}");
        total_rlf += rlfs;
    }
    assert!(total_rlf > 0, "the replay should exercise at least one RLF");
    assert!(out.decisions.iter().any(|d| d.reason == Reason::RlfFallback));
}

#[test]
fn rsrp_max_tracks_tile_argmax_without_fading() {
    let (cfg, channel, rem) = setup(1, false);
    let out = policy_run(&cfg, &channel, &rem, 0.0, Execution::default());
    let mut checked = 0;
    for recs in by_ue(&out.measurements).values() {
        for w in recs.windows(2) {
            let tile = rem.grid.quantize(w[0].pos).unwrap();
            let means = rem.rsrp.tile_means(tile).unwrap();
            assert_eq!(w[1].serving, strongest(&means), "tile {tile:?}");
            checked += 1;
        }
    }
    assert!(checked > 1000);
    assert_eq!(out.report.total_rlfs(), 0);
}

#[test]
fn policy_runs_agree_across_execution_modes() {
    let (cfg, channel, rem) = setup(2, true);
    let seq = policy_run(&cfg, &channel, &rem, 1.0, Execution::Sequential);
    let par = policy_run(&cfg, &channel, &rem, 1.0, Execution::Parallel);
    assert_eq!(seq.report, par.report);
    assert_eq!(seq.decisions, par.decisions);
    let ues: BTreeSet<u32> = seq.measurements.iter().map(|r| r.measurement.ue).collect();
    assert_eq!(ues.len(), 8);
}

#[test]
fn staggered_entry_matches_scenario() {
    let cfg = ScenarioConfig {
        n_ues: 4,
        duration_s: 4.0,
        ..ScenarioConfig::default()
    };
    let channel = Channel::generate(&Default::default(), Execution::default()).unwrap().without_fading();
    let opts = RunOptions {
        record_measurements: true,
        ..RunOptions::default()
    };
    let out = sim::run(&cfg, &ControllerSpec::Baseline { delta_ho_db: 5.0 }, &channel, opts).unwrap();
    for (ue, recs) in by_ue(&out.measurements) {
        assert_eq!(recs[0].measurement.t_ms, ue as u64 * 50 * 20);
        let y0 = if ue % 2 == 0 { 500.0 } else { 0.0 };
        assert_eq!(recs[0].pos, (250.0, y0));
    }
}
