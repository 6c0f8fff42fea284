//! DFT grid-of-beams codebook for a uniform planar array.
//!
//! Element `(m, n)` sits in row `m` (vertical, z axis) and column `n`
//! (horizontal, y axis) of a panel in the y-z plane facing +x. A beam is the
//! outer product of one vertical and one horizontal DFT column, so distinct
//! beams are exactly orthogonal.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::ArrayConfig;
use crate::error::{Error, Result};

/// Unit-norm DFT column `k` of size `n`: `exp(j 2π i k / n) / sqrt(n)`.
pub fn dft_column(n: usize, k: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| Complex64::from_polar(scale, 2.0 * PI * ((i * k) % n) as f64 / n as f64))
        .collect()
}

/// Wraps DFT index `k` of an `n`-point transform to a signed spatial
/// frequency bin in `[-n/2, n/2)`.
fn signed_bin(k: usize, n: usize) -> i64 {
    let k = k as i64;
    let n = n as i64;
    if k >= (n + 1) / 2 {
        k - n
    } else {
        k
    }
}

#[derive(Clone, Debug)]
pub struct Beam {
    /// Row-major `rows × cols` weights, unit norm.
    pub weights: Vec<Complex64>,
    /// Horizontal DFT column index.
    pub azimuth_bin: usize,
    /// Vertical DFT column index (0 = horizon, `rows-1` = first downtilt bin).
    pub elevation_bin: usize,
}

#[derive(Clone, Debug)]
pub struct BeamCodebook {
    rows: usize,
    cols: usize,
    spacing: f64,
    beams: Vec<Beam>,
}

impl BeamCodebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    pub fn beam(&self, b: usize) -> Result<&Beam> {
        self.beams.get(b).ok_or(Error::BeamIndex {
            beam: b,
            n_beams: self.beams.len(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn element_spacing(&self) -> f64 {
        self.spacing
    }

    /// Direction `(azimuth, elevation)` in degrees at which beam `b` peaks,
    /// or `None` when the bin lies outside the visible region.
    pub fn steering_direction(&self, b: usize) -> Option<(f64, f64)> {
        let beam = self.beams.get(b)?;
        let u_z = signed_bin(beam.elevation_bin, self.rows) as f64 / (self.rows as f64 * self.spacing);
        let u_y = signed_bin(beam.azimuth_bin, self.cols) as f64 / (self.cols as f64 * self.spacing);
        if u_z.abs() > 1.0 {
            return None;
        }
        let el = u_z.asin();
        let s = u_y / el.cos();
        if s.abs() > 1.0 {
            return None;
        }
        Some((s.asin().to_degrees(), el.to_degrees()))
    }
}

/// Builds `n_beams` orthogonal DFT beams.
///
/// Beams are laid out elevation-major: beam `b` uses horizontal bin
/// `b % cols` and the `b / cols`-th vertical bin in the order horizon,
/// one bin of downtilt, two bins, and so on. `n_beams` must therefore be a
/// multiple of `cols` and at most `rows * cols`.
pub fn build_codebook(cfg: &ArrayConfig, n_beams: usize) -> Result<BeamCodebook> {
    cfg.validate()?;
    let (rows, cols) = (cfg.rows, cfg.cols);
    if n_beams == 0 || n_beams > rows * cols {
        return Err(Error::Config(format!(
            "{n_beams} beams requested but a {rows}x{cols} array supports at most {}",
            rows * cols
        )));
    }
    if !n_beams.is_multiple_of(cols) {
        return Err(Error::Config(format!(
            "{n_beams} beams is not a whole number of {cols}-beam azimuth rows"
        )));
    }
    let beams = (0..n_beams)
        .map(|b| {
            let azimuth_bin = b % cols;
            let elevation_bin = (rows - b / cols) % rows;
            let v = dft_column(rows, elevation_bin);
            let h = dft_column(cols, azimuth_bin);
            let weights = v.iter().flat_map(|&vm| h.iter().map(move |&hn| vm * hn)).collect();
            Beam {
                weights,
                azimuth_bin,
                elevation_bin,
            }
        })
        .collect();
    Ok(BeamCodebook {
        rows,
        cols,
        spacing: cfg.element_spacing,
        beams,
    })
}
