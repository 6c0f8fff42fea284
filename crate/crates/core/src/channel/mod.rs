//! Ground-truth radio layer.
//!
//! RSRP toward beam `b` at UE position `p`:
//!
//! ```text
//! rsrp = tx_ref + gain_b(az, el) - path_loss(d3d) + shadow_b(p) + 10 log10(fading)
//! ```
//!
//! `tx_ref` is the configured power density taken on a 1 MHz reference
//! bandwidth. The constant offset this implies cancels in every comparison
//! between beams or controllers.

mod antenna;
mod codebook;
mod fading;
mod pathloss;
mod shadowing;

pub use antenna::{array_factor_db, beam_gain, element_gain_db, wrap_degrees};
pub use codebook::{build_codebook, dft_column, Beam, BeamCodebook};
pub use fading::rayleigh_power;
pub use pathloss::path_loss;
pub use shadowing::{generate_shadowing, ShadowingField};

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// UE antenna height in metres.
pub const UE_HEIGHT_M: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// Array height above ground, metres.
    pub height: f64,
    /// gNB position in the cell, metres.
    pub position: (f64, f64),
    pub tx_power_dbm_per_mhz: f64,
    pub bandwidth_mhz: f64,
    pub center_frequency_ghz: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            rows: 8,
            cols: 8,
            element_spacing: 0.5,
            height: 10.0,
            position: (0.0, 250.0),
            tx_power_dbm_per_mhz: 10.0,
            bandwidth_mhz: 100.0,
            center_frequency_ghz: 26.0,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("antenna array needs at least one row and column".into()));
        }
        for (name, v) in [
            ("element_spacing", self.element_spacing),
            ("height", self.height),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("center_frequency_ghz", self.center_frequency_ghz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.tx_power_dbm_per_mhz.is_finite() {
            return Err(Error::Config("tx power must be finite".into()));
        }
        Ok(())
    }

    /// Reference transmit power in dBm on a 1 MHz bandwidth.
    pub fn reference_tx_dbm(&self) -> f64 {
        self.tx_power_dbm_per_mhz
    }
}

/// Distance and angles from the gNB array to a UE at `ue_pos`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkGeometry {
    pub d3d: f64,
    /// Azimuth in degrees, 0 along +x (array boresight), positive toward +y.
    pub azimuth: f64,
    /// Elevation in degrees, negative below the array.
    pub elevation: f64,
}

pub fn link_geometry(cfg: &ArrayConfig, ue_pos: (f64, f64)) -> LinkGeometry {
    let dx = ue_pos.0 - cfg.position.0;
    let dy = ue_pos.1 - cfg.position.1;
    let d2d = dx.hypot(dy);
    let dz = UE_HEIGHT_M - cfg.height;
    LinkGeometry {
        d3d: d2d.hypot(dz),
        azimuth: dy.atan2(dx).to_degrees(),
        elevation: dz.atan2(d2d).to_degrees(),
    }
}

/// RSRP in dBm of one beam at one position for a given fading power draw.
pub fn rsrp(
    cfg: &ArrayConfig,
    codebook: &BeamCodebook,
    shadowing: &ShadowingField,
    ue_pos: (f64, f64),
    beam: usize,
    fading_draw: f64,
) -> Result<f64> {
    let g = link_geometry(cfg, ue_pos);
    let gain = beam_gain(codebook, beam, g.azimuth, g.elevation)?;
    let shadow = shadowing.value(beam, ue_pos.0, ue_pos.1)?;
    Ok(cfg.reference_tx_dbm() + gain - path_loss(g.d3d, cfg.center_frequency_ghz) + shadow
        + 10.0 * fading_draw.log10())
}

/// Everything needed to evaluate RSRP anywhere in the cell.
#[derive(Clone, Debug)]
pub struct Channel {
    pub array: ArrayConfig,
    pub codebook: BeamCodebook,
    pub shadowing: ShadowingField,
    /// Cell extent `(width, height)` in metres, origin at `(0, 0)`.
    pub cell: (f64, f64),
    /// When false, `measure` returns the fading-free RSRP.
    pub fading: bool,
}

/// Parameters for [`Channel::generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelConfig {
    pub array: ArrayConfig,
    pub n_beams: usize,
    pub cell: (f64, f64),
    pub shadowing_sigma_db: f64,
    pub shadowing_correlation_m: f64,
    pub shadowing_resolution_m: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            array: ArrayConfig::default(),
            n_beams: 16,
            cell: (500.0, 500.0),
            shadowing_sigma_db: 4.0,
            shadowing_correlation_m: 10.0,
            shadowing_resolution_m: 1.0,
            seed: 1,
        }
    }
}

impl Channel {
    pub fn generate(cfg: &ChannelConfig, exec: Execution) -> Result<Self> {
        let codebook = build_codebook(&cfg.array, cfg.n_beams)?;
        let shadowing = generate_shadowing(
            cfg.seed,
            cfg.cell,
            cfg.shadowing_resolution_m,
            cfg.shadowing_correlation_m,
            cfg.shadowing_sigma_db,
            cfg.n_beams,
            exec,
        )?;
        Self::new(cfg.array.clone(), codebook, shadowing, cfg.cell)
    }

    pub fn new(array: ArrayConfig, codebook: BeamCodebook, shadowing: ShadowingField, cell: (f64, f64)) -> Result<Self> {
        if shadowing.n_beams() != codebook.len() {
            return Err(Error::Config(format!(
                "shadowing has {} beams, codebook has {}",
                shadowing.n_beams(),
                codebook.len()
            )));
        }
        if !(cell.0 > 0.0 && cell.1 > 0.0) {
            return Err(Error::Config("cell size must be positive".into()));
        }
        Ok(Channel {
            array,
            codebook,
            shadowing,
            cell,
            fading: true,
        })
    }

    pub fn without_fading(mut self) -> Self {
        self.fading = false;
        self
    }

    pub fn n_beams(&self) -> usize {
        self.codebook.len()
    }

    pub fn contains(&self, pos: (f64, f64)) -> bool {
        (0.0..=self.cell.0).contains(&pos.0) && (0.0..=self.cell.1).contains(&pos.1)
    }

    fn check_pos(&self, pos: (f64, f64)) -> Result<()> {
        if self.contains(pos) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { x: pos.0, y: pos.1 })
        }
    }

    /// RSRP of one beam for a given fading draw.
    pub fn rsrp(&self, pos: (f64, f64), beam: usize, fading_draw: f64) -> Result<f64> {
        self.check_pos(pos)?;
        rsrp(&self.array, &self.codebook, &self.shadowing, pos, beam, fading_draw)
    }

    /// Fading-free RSRP of every beam at `pos`.
    pub fn mean_rsrp_all(&self, pos: (f64, f64)) -> Result<Vec<f64>> {
        self.check_pos(pos)?;
        let g = link_geometry(&self.array, pos);
        let base = self.array.reference_tx_dbm() - path_loss(g.d3d, self.array.center_frequency_ghz);
        (0..self.n_beams())
            .map(|b| {
                Ok(base
                    + beam_gain(&self.codebook, b, g.azimuth, g.elevation)?
                    + self.shadowing.value(b, pos.0, pos.1)?)
            })
            .collect()
    }

    /// One SSB burst worth of RSRP for every beam, each with an independent
    /// Rayleigh fading draw taken from `rng` in beam order.
    pub fn measure<R: Rng + ?Sized>(&self, pos: (f64, f64), rng: &mut R) -> Result<Vec<f64>> {
        let mut m = self.mean_rsrp_all(pos)?;
        if !self.fading {
            return Ok(m);
        }
        for v in &mut m {
            *v += 10.0 * rayleigh_power(rng).log10();
        }
        Ok(m)
    }
}
