//! Radio Environment Map: location-indexed per-beam RSRP and mobility data.

mod grid;
mod mobility;
mod rsrp_map;

pub use grid::{Grid, TileIndex};
pub use mobility::{Heading, MobilityMap, Motion, MotionDist, SpeedQuantizer, HEADING_STEP_DEG};
pub use rsrp_map::{Averaging, RsrpCell, RsrpMap};

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const REM_MAGIC: &str = "REMv1";
const RSRP_SECTION: &str = "RSRP: tile_x,tile_y,beam,mean_dbm,count";
const MOB_SECTION: &str = "MOB: tile_x,tile_y,vq,aq,v,a,count";

#[derive(Clone, Debug, PartialEq)]
pub struct Rem {
    pub grid: Grid,
    pub rsrp: RsrpMap,
    pub mobility: MobilityMap,
}

impl Rem {
    pub fn new(grid: Grid, n_beams: usize, averaging: Averaging, speeds: SpeedQuantizer) -> Self {
        Rem {
            grid,
            rsrp: RsrpMap::new(n_beams, averaging),
            mobility: MobilityMap::new(speeds),
        }
    }

    pub fn n_beams(&self) -> usize {
        self.rsrp.n_beams()
    }

    /// Quantises a position and ingests one RSRP report per beam.
    pub fn ingest_measurement(&mut self, pos: (f64, f64), rsrp: &[f64]) -> Result<TileIndex> {
        let tile = self.grid.quantize(pos)?;
        if rsrp.len() != self.n_beams() {
            return Err(Error::Contract(format!(
                "measurement has {} beams, REM expects {}",
                rsrp.len(),
                self.n_beams()
            )));
        }
        for (b, &v) in rsrp.iter().enumerate() {
            self.rsrp.ingest(tile, b, v)?;
        }
        Ok(tile)
    }

    /// Serialises to the `REMv1` text artifact.
    pub fn to_artifact(&self) -> String {
        let mut out = String::new();
        let g = &self.grid;
        write!(out, "{REM_MAGIC} g={} nx={} ny={} nbeams={}", g.tile_size, g.nx, g.ny, self.n_beams()).unwrap();
        if g.origin != (0.0, 0.0) {
            write!(out, " ox={} oy={}", g.origin.0, g.origin.1).unwrap();
        }
        if self.rsrp.averaging() == Averaging::Linear {
            out.push_str(" avg=linear");
        }
        let sq = self.mobility.speed_quantizer();
        if sq != SpeedQuantizer::default() {
            write!(out, " vbucket={} vmax={}", sq.bucket, sq.max).unwrap();
        }
        out.push('\n');
        out.push_str(RSRP_SECTION);
        out.push('\n');
        for (t, cells) in self.rsrp.tiles() {
            for (b, c) in cells.iter().enumerate().filter(|(_, c)| c.count > 0) {
                writeln!(out, "{},{},{},{},{}", t.x, t.y, b, c.mean_dbm, c.count).unwrap();
            }
        }
        out.push_str(MOB_SECTION);
        out.push('\n');
        for (t, cur, next, count) in self.mobility.entries() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t.x, t.y, cur.speed, cur.heading, next.speed, next.heading, count
            )
            .unwrap();
        }
        out
    }

    pub fn checksum(&self) -> String {
        crate::sha256_hex(self.to_artifact().as_bytes())
    }

    pub fn from_artifact(text: &str) -> Result<Self> {
        const WHAT: &str = "REM artifact";
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(WHAT, 1, "empty input"))?;
        let kv = parse_header(header, REM_MAGIC, WHAT)?;
        let get = |k: &str| -> Result<&str> {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(WHAT, 1, format!("missing header key `{k}`")))
        };
        let opt = |k: &str| kv.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let tile_size: f64 = num(get("g")?, WHAT, 1)?;
        let nx: u32 = num(get("nx")?, WHAT, 1)?;
        let ny: u32 = num(get("ny")?, WHAT, 1)?;
        let n_beams: usize = num(get("nbeams")?, WHAT, 1)?;
        let origin = (
            opt("ox").map(|v| num(v, WHAT, 1)).transpose()?.unwrap_or(0.0),
            opt("oy").map(|v| num(v, WHAT, 1)).transpose()?.unwrap_or(0.0),
        );
        let averaging = match opt("avg") {
            None | Some("db") => Averaging::Db,
            Some("linear") => Averaging::Linear,
            Some(other) => return Err(Error::parse(WHAT, 1, format!("unknown averaging `{other}`"))),
        };
        let mut speeds = SpeedQuantizer::default();
        if let Some(v) = opt("vbucket") {
            speeds.bucket = num(v, WHAT, 1)?;
        }
        if let Some(v) = opt("vmax") {
            speeds.max = num(v, WHAT, 1)?;
        }
        if !(tile_size > 0.0) || nx == 0 || ny == 0 || n_beams == 0 {
            return Err(Error::parse(WHAT, 1, "grid dimensions must be positive"));
        }
        let grid = Grid {
            origin,
            tile_size,
            nx,
            ny,
        };
        let mut rem = Rem::new(grid, n_beams, averaging, speeds);

        match lines.next() {
            Some((_, l)) if l == RSRP_SECTION => {}
            Some((n, _)) => return Err(Error::parse(WHAT, n, "expected RSRP section header")),
            None => return Err(Error::parse(WHAT, 2, "missing RSRP section")),
        }
        let mut in_mob = false;
        for (n, line) in lines {
            if line == MOB_SECTION {
                if in_mob {
                    return Err(Error::parse(WHAT, n, "duplicate MOB section"));
                }
                in_mob = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if !in_mob {
                if f.len() != 5 {
                    return Err(Error::parse(WHAT, n, "RSRP row needs 5 fields"));
                }
                let tile = TileIndex::new(num(f[0], WHAT, n)?, num(f[1], WHAT, n)?);
                if !grid.contains_tile(tile) {
                    return Err(Error::parse(WHAT, n, "tile outside grid"));
                }
                let cell = RsrpCell {
                    mean_dbm: num(f[3], WHAT, n)?,
                    count: num(f[4], WHAT, n)?,
                };
                if cell.count == 0 {
                    return Err(Error::parse(WHAT, n, "zero report count"));
                }
                rem.rsrp
                    .insert_cell(tile, num(f[2], WHAT, n)?, cell)
                    .map_err(|e| Error::parse(WHAT, n, e.to_string()))?;
            } else {
                if f.len() != 7 {
                    return Err(Error::parse(WHAT, n, "MOB row needs 7 fields"));
                }
                let tile = TileIndex::new(num(f[0], WHAT, n)?, num(f[1], WHAT, n)?);
                let motion = |v: &str, a: &str| -> Result<Motion> {
                    Motion::new(num(v, WHAT, n)?, num(a, WHAT, n)?).map_err(|e| Error::parse(WHAT, n, e.to_string()))
                };
                let cur = motion(f[2], f[3])?;
                let next = motion(f[4], f[5])?;
                let count: u64 = num(f[6], WHAT, n)?;
                rem.mobility
                    .observe_n(tile, cur, next, count)
                    .map_err(|e| Error::parse(WHAT, n, e.to_string()))?;
            }
        }
        if !in_mob {
            return Err(Error::parse(WHAT, text.lines().count(), "missing MOB section"));
        }
        Ok(rem)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_artifact()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_artifact(&text)
    }
}

/// Parses `MAGIC k=v k=v ...`.
pub(crate) fn parse_header(line: &str, magic: &str, what: &'static str) -> Result<Vec<(String, String)>> {
    let mut parts = line.split(' ');
    if parts.next() != Some(magic) {
        return Err(Error::parse(what, 1, format!("expected `{magic}` header")));
    }
    parts
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::parse(what, 1, format!("bad header field `{p}`")))
        })
        .collect()
}

pub(crate) fn num<T: std::str::FromStr>(s: &str, what: &'static str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::parse(what, line, format!("bad number `{s}`")))
}
