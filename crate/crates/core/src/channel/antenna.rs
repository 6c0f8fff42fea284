//! Element pattern and array factor.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::codebook::BeamCodebook;
use crate::error::Result;

pub const ELEMENT_MAX_GAIN_DBI: f64 = 8.0;
pub const ELEMENT_BEAMWIDTH_DEG: f64 = 65.0;
pub const ELEMENT_MAX_ATTENUATION_DB: f64 = 30.0;

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// Synthetic directional element: 8 dBi peak, 65° half-power beamwidth in
/// both planes, 30 dB front-to-back and side-lobe floor.
pub fn element_gain_db(azimuth_deg: f64, elevation_deg: f64) -> f64 {
    let az = wrap_degrees(azimuth_deg);
    let el = wrap_degrees(elevation_deg);
    let vertical = -(12.0 * (el / ELEMENT_BEAMWIDTH_DEG).powi(2)).min(ELEMENT_MAX_ATTENUATION_DB);
    let horizontal = -(12.0 * (az / ELEMENT_BEAMWIDTH_DEG).powi(2)).min(ELEMENT_MAX_ATTENUATION_DB);
    ELEMENT_MAX_GAIN_DBI - (-(vertical + horizontal)).min(ELEMENT_MAX_ATTENUATION_DB)
}

/// Array factor `|w^H a(az, el)|^2` of beam `b`, in dB.
pub fn array_factor_db(codebook: &BeamCodebook, b: usize, azimuth_deg: f64, elevation_deg: f64) -> Result<f64> {
    let beam = codebook.beam(b)?;
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    let u_y = el.cos() * az.sin();
    let u_z = el.sin();
    let d = codebook.element_spacing();
    let cols = codebook.cols();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, w) in beam.weights.iter().enumerate() {
        let (m, n) = (idx / cols, idx % cols);
        let phase = 2.0 * PI * d * (n as f64 * u_y + m as f64 * u_z);
        acc += w.conj() * Complex64::from_polar(1.0, phase);
    }
    Ok(10.0 * acc.norm_sqr().max(1e-30).log10())
}

/// Total gain toward `(azimuth, elevation)`: element gain plus array factor.
pub fn beam_gain(codebook: &BeamCodebook, b: usize, azimuth_deg: f64, elevation_deg: f64) -> Result<f64> {
    Ok(element_gain_db(azimuth_deg, elevation_deg) + array_factor_db(codebook, b, azimuth_deg, elevation_deg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_codebook, ArrayConfig};

    fn codebook() -> BeamCodebook {
        build_codebook(&ArrayConfig::default(), 16).unwrap()
    }

    #[test]
    fn element_pattern_shape() {
        assert_eq!(element_gain_db(0.0, 0.0), 8.0);
        assert!((element_gain_db(32.5, 0.0) - 5.0).abs() < 1e-12);
        assert_eq!(element_gain_db(180.0, 0.0), 8.0 - 30.0);
        assert_eq!(element_gain_db(360.0 + 10.0, 0.0), element_gain_db(10.0, 0.0));
    }

    #[test]
    fn uniform_beam_peak_is_full_array_gain() {
        // 64 unit-amplitude in-phase elements with unit-norm weights: |sum|^2 = 64
        let af = array_factor_db(&codebook(), 0, 0.0, 0.0).unwrap();
        assert!((af - 10.0 * 64f64.log10()).abs() < 1e-9);
        assert!((af - 18.061_799_739_838_87).abs() < 1e-9);
        assert!((beam_gain(&codebook(), 0, 0.0, 0.0).unwrap() - (8.0 + af)).abs() < 1e-12);
    }

    #[test]
    fn steering_direction_maximises_array_factor() {
        let cb = codebook();
        for b in 0..cb.len() {
            let Some((az_b, el_b)) = cb.steering_direction(b) else { continue };
            let peak = array_factor_db(&cb, b, az_b, el_b).unwrap();
            for step in -900..=900 {
                let az = step as f64 * 0.1;
                assert!(array_factor_db(&cb, b, az, el_b).unwrap() <= peak + 1e-9);
            }
        }
    }

    #[test]
    fn other_beams_are_weaker_at_a_beams_peak() {
        let cb = codebook();
        for b in 0..cb.len() {
            let Some((az, el)) = cb.steering_direction(b) else { continue };
            let own = beam_gain(&cb, b, az, el).unwrap();
            for o in (0..cb.len()).filter(|&o| o != b) {
                assert!(beam_gain(&cb, o, az, el).unwrap() < own);
            }
        }
    }

    #[test]
    fn angles_wrap() {
        let cb = codebook();
        let a = beam_gain(&cb, 3, 20.0, -2.0).unwrap();
        let b = beam_gain(&cb, 3, 20.0 + 720.0, -2.0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}
