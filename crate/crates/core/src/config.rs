//! TOML run configuration. Every key has a default; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayConfig, ChannelConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mdp::{RewardParams, TrainingConfig};
use crate::rem::{Averaging, Grid, SpeedQuantizer};
use crate::ric::{RemLayout, XappConfig};
use crate::sim::ScenarioConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: SeedsSection,
    pub channel: ChannelSection,
    pub rem: RemSection,
    pub solver: SolverSection,
    pub scenario: ScenarioSection,
    pub xapp: XappSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsSection {
    /// Shadowing fields.
    pub channel: u64,
    /// Fading, position noise and probe passes.
    pub traffic: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { channel: 1, traffic: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub n_beams: usize,
    pub rows: usize,
    pub cols: usize,
    pub element_spacing: f64,
    pub gnb_height_m: f64,
    pub gnb_x: f64,
    pub gnb_y: f64,
    pub tx_power_dbm_per_mhz: f64,
    pub bandwidth_mhz: f64,
    pub center_frequency_ghz: f64,
    pub cell_width_m: f64,
    pub cell_height_m: f64,
    pub shadowing_sigma_db: f64,
    pub shadowing_correlation_m: f64,
    pub shadowing_resolution_m: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let a = ArrayConfig::default();
        let c = ChannelConfig::default();
        ChannelSection {
            n_beams: c.n_beams,
            rows: a.rows,
            cols: a.cols,
            element_spacing: a.element_spacing,
            gnb_height_m: a.height,
            gnb_x: a.position.0,
            gnb_y: a.position.1,
            tx_power_dbm_per_mhz: a.tx_power_dbm_per_mhz,
            bandwidth_mhz: a.bandwidth_mhz,
            center_frequency_ghz: a.center_frequency_ghz,
            cell_width_m: c.cell.0,
            cell_height_m: c.cell.1,
            shadowing_sigma_db: c.shadowing_sigma_db,
            shadowing_correlation_m: c.shadowing_correlation_m,
            shadowing_resolution_m: c.shadowing_resolution_m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemSection {
    pub tile_size_m: f64,
    pub averaging: Averaging,
    pub speed_bucket_mps: f64,
    pub speed_max_mps: f64,
    /// Probe traversals per direction when building the REM.
    pub passes: usize,
}

impl Default for RemSection {
    fn default() -> Self {
        let s = SpeedQuantizer::default();
        RemSection {
            tile_size_m: 2.0,
            averaging: Averaging::Db,
            speed_bucket_mps: s.bucket,
            speed_max_mps: s.max,
            passes: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub beta: f64,
    pub gamma: f64,
    pub tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            beta: 1.0,
            gamma: 0.9,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub burst_period_ms: u64,
    pub n_ues: usize,
    pub speed_mps: f64,
    pub directions: Vec<u16>,
    pub rlf_margin_db: f64,
    pub duration_s: f64,
    pub road_x_m: f64,
    pub position_noise_m: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        ScenarioSection {
            burst_period_ms: s.burst_period_ms,
            n_ues: s.n_ues,
            speed_mps: s.speed_mps,
            directions: s.directions,
            rlf_margin_db: s.rlf_margin_db,
            duration_s: s.duration_s,
            road_x_m: s.road_x,
            position_noise_m: s.position_noise_m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XappSection {
    /// Baseline margin applied where the policy has no state.
    pub fallback_delta_ho_db: f64,
}

impl Default for XappSection {
    fn default() -> Self {
        XappSection {
            fallback_delta_ho_db: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML: every key present, fixed order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn checksum(&self) -> String {
        crate::sha256_hex(self.canonical().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        let ch = self.channel_config();
        ch.array.validate()?;
        crate::channel::build_codebook(&ch.array, ch.n_beams)?;
        self.scenario().validate()?;
        self.reward_params()?;
        self.grid()?;
        let s = &self.solver;
        if !(0.0..1.0).contains(&s.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1), got {}", s.gamma)));
        }
        if !(s.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", s.tol)));
        }
        let r = &self.rem;
        if !(r.speed_bucket_mps > 0.0 && r.speed_max_mps >= r.speed_bucket_mps) {
            return Err(Error::Config("speed buckets must be positive and fit under the maximum".into()));
        }
        if r.passes == 0 {
            return Err(Error::Config("rem.passes must be at least 1".into()));
        }
        if !(self.xapp.fallback_delta_ho_db >= 0.0) {
            return Err(Error::Config("xapp.fallback_delta_ho_db must be non-negative".into()));
        }
        Ok(())
    }

    pub fn channel_config(&self) -> ChannelConfig {
        let c = &self.channel;
        ChannelConfig {
            array: ArrayConfig {
                rows: c.rows,
                cols: c.cols,
                element_spacing: c.element_spacing,
                height: c.gnb_height_m,
                position: (c.gnb_x, c.gnb_y),
                tx_power_dbm_per_mhz: c.tx_power_dbm_per_mhz,
                bandwidth_mhz: c.bandwidth_mhz,
                center_frequency_ghz: c.center_frequency_ghz,
            },
            n_beams: c.n_beams,
            cell: (c.cell_width_m, c.cell_height_m),
            shadowing_sigma_db: c.shadowing_sigma_db,
            shadowing_correlation_m: c.shadowing_correlation_m,
            shadowing_resolution_m: c.shadowing_resolution_m,
            seed: self.seeds.channel,
        }
    }

    pub fn scenario(&self) -> ScenarioConfig {
        let s = &self.scenario;
        ScenarioConfig {
            burst_period_ms: s.burst_period_ms,
            n_ues: s.n_ues,
            speed_mps: s.speed_mps,
            directions: s.directions.clone(),
            rlf_margin_db: s.rlf_margin_db,
            duration_s: s.duration_s,
            road_x: s.road_x_m,
            position_noise_m: s.position_noise_m,
            seed: self.seeds.traffic,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::covering(
            (0.0, 0.0),
            self.rem.tile_size_m,
            self.channel.cell_width_m,
            self.channel.cell_height_m,
        )
    }

    pub fn speeds(&self) -> SpeedQuantizer {
        SpeedQuantizer {
            bucket: self.rem.speed_bucket_mps,
            max: self.rem.speed_max_mps,
        }
    }

    pub fn rem_layout(&self) -> Result<RemLayout> {
        Ok(RemLayout {
            grid: self.grid()?,
            n_beams: self.channel.n_beams,
            averaging: self.rem.averaging,
            speeds: self.speeds(),
        })
    }

    pub fn reward_params(&self) -> Result<RewardParams> {
        RewardParams::new(self.solver.beta, self.scenario.rlf_margin_db)
    }

    pub fn training(&self, exec: Execution) -> Result<TrainingConfig> {
        Ok(TrainingConfig {
            params: self.reward_params()?,
            gamma: self.solver.gamma,
            tol: self.solver.tol,
            burst_period_ms: self.scenario.burst_period_ms as f64,
            exec,
        })
    }

    /// xApp settings for a REM laid out on `grid` with `speeds`.
    pub fn xapp_config(&self, grid: Grid, speeds: SpeedQuantizer) -> XappConfig {
        XappConfig {
            rlf_margin_db: self.scenario.rlf_margin_db,
            fallback_delta_ho_db: self.xapp.fallback_delta_ho_db,
            grid,
            speeds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_scenario_table() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.channel.n_beams, 16);
        assert_eq!((c.channel.rows, c.channel.cols), (8, 8));
        assert_eq!(c.channel.center_frequency_ghz, 26.0);
        assert_eq!(c.rem.tile_size_m, 2.0);
        assert_eq!(c.scenario.n_ues, 300);
        assert_eq!(c.scenario.burst_period_ms, 20);
        assert_eq!(c.scenario.rlf_margin_db, 8.0);
        assert_eq!(c.scenario.directions, vec![0, 180]);
        assert_eq!(c.channel_config(), ChannelConfig::default());
        assert_eq!(c.scenario(), ScenarioConfig::default());
    }

    #[test]
    fn canonical_round_trip() {
        let c = RunConfig::from_toml_str("[solver]\nbeta = 0.0\n[scenario]\nn_ues = 60\n").unwrap();
        assert_eq!(c.solver.beta, 0.0);
        assert_eq!(c.scenario.n_ues, 60);
        let canon = c.canonical();
        let back = RunConfig::from_toml_str(&canon).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.canonical(), canon);
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
        assert_ne!(c.checksum(), RunConfig::default().checksum());
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        for bad in [
            "[solver]\nbetta = 1.0\n",
            "colour = 3\n",
            "[solver]\nbeta = 1.5\n",
            "[solver]\ngamma = 1.0\n",
            "[rem]\ntile_size_m = 3.0\n",
            "[channel]\nn_beams = 65\n",
            "[scenario]\ndirections = [10]\n",
            "[rem]\npasses = 0\n",
        ] {
            let e = RunConfig::from_toml_str(bad).unwrap_err();
            assert!(e.is_config(), "{bad}: {e}");
        }
    }
}
