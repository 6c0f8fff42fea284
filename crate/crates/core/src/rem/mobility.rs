//! UE mobility-pattern map: empirical `P(v, α | tile, ṽ, α̃)`.

use std::collections::BTreeMap;
use std::fmt;

use super::grid::TileIndex;
use crate::error::{Error, Result};

pub const HEADING_STEP_DEG: u16 = 45;

/// Direction of travel quantised to 45°. 0° points toward −y ("down"), 90°
/// toward +x, 180° toward +y, 270° toward −x.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Heading(u16);

impl Heading {
    /// Accepts an already-quantised heading (a multiple of 45 in `[0, 360)`).
    pub fn new(deg: u16) -> Result<Self> {
        if !deg.is_multiple_of(HEADING_STEP_DEG) || deg >= 360 {
            return Err(Error::Contract(format!("heading {deg} is not a multiple of 45 in [0, 360)")));
        }
        Ok(Heading(deg))
    }

    /// Nearest quantised heading to an arbitrary angle in degrees.
    pub fn quantize(deg: f64) -> Self {
        let step = HEADING_STEP_DEG as f64;
        let k = (deg.rem_euclid(360.0) / step).round() as u16 % (360 / HEADING_STEP_DEG);
        Heading(k * HEADING_STEP_DEG)
    }

    pub fn degrees(self) -> u16 {
        self.0
    }

    /// Unit displacement vector in metres per metre travelled.
    pub fn unit_vector(self) -> (f64, f64) {
        const D: f64 = std::f64::consts::FRAC_1_SQRT_2;
        const UNIT: [(f64, f64); 8] = [(0.0, -1.0), (D, -D), (1.0, 0.0), (D, D), (0.0, 1.0), (-D, D), (-1.0, 0.0), (-D, -D)];
        UNIT[(self.0 / HEADING_STEP_DEG) as usize]
    }

    /// Neighbouring-tile step `(dx, dy)` for this heading.
    pub fn tile_step(self) -> (i32, i32) {
        let (ux, uy) = self.unit_vector();
        (ux.round() as i32, uy.round() as i32)
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Speed bucketing: nearest multiple of `bucket` in `[0, max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedQuantizer {
    pub bucket: f64,
    pub max: f64,
}

impl Default for SpeedQuantizer {
    fn default() -> Self {
        SpeedQuantizer { bucket: 5.0, max: 50.0 }
    }
}

impl SpeedQuantizer {
    pub fn quantize(&self, speed: f64) -> u32 {
        let top = (self.max / self.bucket).floor();
        ((speed.max(0.0) / self.bucket).round().min(top) * self.bucket).round() as u32
    }

    pub fn is_quantized(&self, speed: u32) -> bool {
        self.quantize(speed as f64) == speed
    }
}

/// Quantised speed (m/s) and heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Motion {
    pub speed: u32,
    pub heading: Heading,
}

impl Motion {
    pub fn new(speed: u32, heading_deg: u16) -> Result<Self> {
        Ok(Motion {
            speed,
            heading: Heading::new(heading_deg)?,
        })
    }
}

/// Categorical distribution over next motions, sorted by motion.
pub type MotionDist = Vec<(Motion, f64)>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MobilityMap {
    speeds: SpeedQuantizer,
    counts: BTreeMap<(TileIndex, Motion), BTreeMap<Motion, u64>>,
}

impl MobilityMap {
    pub fn new(speeds: SpeedQuantizer) -> Self {
        MobilityMap {
            speeds,
            counts: BTreeMap::new(),
        }
    }

    pub fn speed_quantizer(&self) -> SpeedQuantizer {
        self.speeds
    }

    fn check(&self, m: Motion) -> Result<()> {
        if self.speeds.is_quantized(m.speed) {
            Ok(())
        } else {
            Err(Error::Contract(format!("speed {} m/s is not a quantised bucket value", m.speed)))
        }
    }

    pub fn observe(&mut self, tile: TileIndex, current: Motion, next: Motion) -> Result<()> {
        self.observe_n(tile, current, next, 1)
    }

    pub(crate) fn observe_n(&mut self, tile: TileIndex, current: Motion, next: Motion, n: u64) -> Result<()> {
        self.check(current)?;
        self.check(next)?;
        *self.counts.entry((tile, current)).or_default().entry(next).or_insert(0) += n;
        Ok(())
    }

    /// Empirical distribution of the next motion. Unseen conditioning states
    /// fall back to "keep the current motion".
    pub fn distribution(&self, tile: TileIndex, current: Motion) -> MotionDist {
        match self.counts.get(&(tile, current)) {
            Some(next) => {
                let total: u64 = next.values().sum();
                next.iter().map(|(m, &c)| (*m, c as f64 / total as f64)).collect()
            }
            None => vec![(current, 1.0)],
        }
    }

    /// Every motion that appears as a condition or an outcome, sorted.
    pub fn observed_motions(&self) -> Vec<Motion> {
        let mut all: Vec<Motion> = self
            .counts
            .iter()
            .flat_map(|((_, cur), next)| std::iter::once(*cur).chain(next.keys().copied()))
            .collect();
        all.sort();
        all.dedup();
        all
    }

    /// `(tile, current, next, count)` entries in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (TileIndex, Motion, Motion, u64)> + '_ {
        self.counts
            .iter()
            .flat_map(|((t, cur), next)| next.iter().map(move |(n, c)| (*t, *cur, *n, *c)))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}
