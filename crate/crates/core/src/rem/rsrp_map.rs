use std::collections::BTreeMap;

use super::grid::TileIndex;
use crate::error::{Error, Result};

/// Domain in which reports for a (tile, beam) are averaged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Arithmetic mean of dBm values.
    #[default]
    Db,
    /// Mean of linear power, reported back in dBm.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RsrpCell {
    /// Mean in dBm. Meaningless while `count == 0`.
    pub mean_dbm: f64,
    pub count: u64,
}

impl RsrpCell {
    const EMPTY: RsrpCell = RsrpCell { mean_dbm: 0.0, count: 0 };
}

/// Per-tile, per-beam running RSRP means.
#[derive(Clone, Debug, PartialEq)]
pub struct RsrpMap {
    n_beams: usize,
    averaging: Averaging,
    tiles: BTreeMap<TileIndex, Vec<RsrpCell>>,
}

impl RsrpMap {
    pub fn new(n_beams: usize, averaging: Averaging) -> Self {
        RsrpMap {
            n_beams,
            averaging,
            tiles: BTreeMap::new(),
        }
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    pub fn averaging(&self) -> Averaging {
        self.averaging
    }

    fn check_beam(&self, beam: usize) -> Result<()> {
        if beam < self.n_beams {
            Ok(())
        } else {
            Err(Error::BeamIndex {
                beam,
                n_beams: self.n_beams,
            })
        }
    }

    pub fn ingest(&mut self, tile: TileIndex, beam: usize, rsrp_dbm: f64) -> Result<()> {
        self.check_beam(beam)?;
        if !rsrp_dbm.is_finite() {
            return Err(Error::Contract(format!("non-finite RSRP report {rsrp_dbm}")));
        }
        let n_beams = self.n_beams;
        let cell = &mut self.tiles.entry(tile).or_insert_with(|| vec![RsrpCell::EMPTY; n_beams])[beam];
        cell.count += 1;
        let n = cell.count as f64;
        cell.mean_dbm = match (self.averaging, cell.count) {
            (_, 1) => rsrp_dbm,
            (Averaging::Db, _) => cell.mean_dbm + (rsrp_dbm - cell.mean_dbm) / n,
            (Averaging::Linear, _) => {
                let prev = 10f64.powf(cell.mean_dbm / 10.0);
                let cur = 10f64.powf(rsrp_dbm / 10.0);
                10.0 * (prev + (cur - prev) / n).log10()
            }
        };
        Ok(())
    }

    /// Stored mean, or `None` if the (tile, beam) has no reports.
    pub fn query(&self, tile: TileIndex, beam: usize) -> Result<Option<f64>> {
        self.check_beam(beam)?;
        Ok(self
            .tiles
            .get(&tile)
            .map(|cells| cells[beam])
            .filter(|c| c.count > 0)
            .map(|c| c.mean_dbm))
    }

    pub fn cell(&self, tile: TileIndex, beam: usize) -> Option<RsrpCell> {
        self.tiles.get(&tile).and_then(|c| c.get(beam)).copied().filter(|c| c.count > 0)
    }

    /// All beams' means at `tile`, if every beam has at least one report.
    pub fn tile_means(&self, tile: TileIndex) -> Option<Vec<f64>> {
        let cells = self.tiles.get(&tile)?;
        cells.iter().map(|c| (c.count > 0).then_some(c.mean_dbm)).collect()
    }

    /// Tiles with at least one report, in index order.
    pub fn tiles(&self) -> impl Iterator<Item = (TileIndex, &[RsrpCell])> {
        self.tiles.iter().map(|(t, c)| (*t, c.as_slice()))
    }

    /// Tiles where every beam has a known mean, in index order.
    pub fn complete_tiles(&self) -> impl Iterator<Item = TileIndex> + '_ {
        self.tiles
            .iter()
            .filter(|(_, c)| c.iter().all(|c| c.count > 0))
            .map(|(t, _)| *t)
    }

    pub(crate) fn insert_cell(&mut self, tile: TileIndex, beam: usize, cell: RsrpCell) -> Result<()> {
        self.check_beam(beam)?;
        let n_beams = self.n_beams;
        self.tiles.entry(tile).or_insert_with(|| vec![RsrpCell::EMPTY; n_beams])[beam] = cell;
        Ok(())
    }
}
