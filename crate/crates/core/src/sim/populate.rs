use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::rem::{Heading, Motion, Rem};
use crate::ric::{build_rem, LocationReport, RemLayout};

use super::{stream_rng, ScenarioConfig};

/// Probe streams live above the per-UE streams used by [`super::run`].
const PROBE_STREAM_BASE: u64 = 1 << 32;

/// Reports from one probe UE driving the whole road with `heading`.
pub fn probe_reports(
    cfg: &ScenarioConfig,
    channel: &Channel,
    layout: &RemLayout,
    heading: Heading,
    seed: u64,
    stream: u64,
) -> Result<Vec<LocationReport>> {
    let mut rng = stream_rng(seed, PROBE_STREAM_BASE + stream);
    let motion = Motion {
        speed: layout.speeds.quantize(cfg.speed_mps),
        heading,
    };
    let (ux, uy) = heading.unit_vector();
    let entry = cfg.entry_point(heading, channel.cell);
    let step = cfg.step_m();
    let mut out: Vec<LocationReport> = Vec::new();
    for k in 0.. {
        let d = k as f64 * step;
        let pos = (entry.0 + ux * d, entry.1 + uy * d);
        if !channel.contains(pos) {
            break;
        }
        out.push(LocationReport {
            pos,
            rsrp: channel.measure(pos, &mut rng)?,
            motion,
            next_motion: Some(motion),
        });
    }
    if let Some(last) = out.last_mut() {
        last.next_motion = None;
    }
    Ok(out)
}

/// Builds a REM from `n_passes` probe traversals per configured direction.
/// Passes are generated independently (in parallel under `exec`) and
/// ingested in pass order.
pub fn populate_rem(
    cfg: &ScenarioConfig,
    channel: &Channel,
    layout: RemLayout,
    n_passes: usize,
    seed: u64,
    exec: Execution,
) -> Result<Rem> {
    if n_passes == 0 {
        return Err(Error::Config("REM population needs at least one pass".into()));
    }
    cfg.check_against(channel)?;
    if layout.n_beams != channel.n_beams() {
        return Err(Error::Config(format!(
            "REM layout has {} beams, channel has {}",
            layout.n_beams,
            channel.n_beams()
        )));
    }
    let n_dirs = cfg.directions.len();
    let passes = map_range(exec, n_passes * n_dirs, |i| {
        let heading = Heading::new(cfg.directions[i % n_dirs]).expect("validated");
        probe_reports(cfg, channel, &layout, heading, seed, i as u64)
    });
    let mut all = Vec::new();
    for p in passes {
        all.extend(p?);
    }
    build_rem(layout, all)
}
