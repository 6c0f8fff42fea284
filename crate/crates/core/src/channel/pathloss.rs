/// UMi street-canyon LOS path loss in dB for a 3D distance in metres and a
/// carrier in GHz. Distances below 1 m are clamped to 1 m.
pub fn path_loss(d3d_m: f64, fc_ghz: f64) -> f64 {
    let d = if d3d_m < 1.0 {
        log::warn!("path loss distance {d3d_m} m clamped to 1 m");
        1.0
    } else {
        d3d_m
    };
    32.4 + 21.0 * d.log10() + 20.0 * fc_ghz.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // 32.4 + 21*2 + 20*log10(26)
        assert!((path_loss(100.0, 26.0) - 102.69969666).abs() < 0.01);
        assert!((path_loss(1.0, 26.0) - 60.69969666).abs() < 0.01);
        assert_eq!(path_loss(0.2, 26.0), path_loss(1.0, 26.0));
        assert!(path_loss(200.0, 26.0) > path_loss(100.0, 26.0));
    }
}
