use crate::error::{Error, Result};

/// A REM tile, indexed by column (`x`) and row (`y`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TileIndex {
    pub x: u32,
    pub y: u32,
}

impl TileIndex {
    pub fn new(x: u32, y: u32) -> Self {
        TileIndex { x, y }
    }
}

/// Square tiling of the cell area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub origin: (f64, f64),
    pub tile_size: f64,
    pub nx: u32,
    pub ny: u32,
}

impl Grid {
    /// Tiles exactly covering `width × height` metres from `origin`.
    pub fn covering(origin: (f64, f64), tile_size: f64, width: f64, height: f64) -> Result<Self> {
        if !(tile_size > 0.0) {
            return Err(Error::Config(format!("tile size must be positive, got {tile_size}")));
        }
        let nx = (width / tile_size).round();
        let ny = (height / tile_size).round();
        if nx < 1.0 || ny < 1.0 || (nx * tile_size - width).abs() > 1e-9 || (ny * tile_size - height).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "tile size {tile_size} m does not evenly cover a {width} x {height} m area"
            )));
        }
        Ok(Grid {
            origin,
            tile_size,
            nx: nx as u32,
            ny: ny as u32,
        })
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.tile_size
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.tile_size
    }

    pub fn contains_tile(&self, t: TileIndex) -> bool {
        t.x < self.nx && t.y < self.ny
    }

    pub fn center(&self, t: TileIndex) -> (f64, f64) {
        (
            self.origin.0 + (t.x as f64 + 0.5) * self.tile_size,
            self.origin.1 + (t.y as f64 + 0.5) * self.tile_size,
        )
    }

    fn axis(&self, offset: f64, n: u32) -> u32 {
        // nearest centre; a point on a tile boundary goes to the lower tile
        let k = (offset / self.tile_size).ceil() as i64 - 1;
        k.clamp(0, n as i64 - 1) as u32
    }

    /// Tile whose centre is closest to `pos`. Boundary points, which are
    /// equidistant to two centres, resolve to the lower index.
    pub fn quantize(&self, pos: (f64, f64)) -> Result<TileIndex> {
        let dx = pos.0 - self.origin.0;
        let dy = pos.1 - self.origin.1;
        if !(0.0..=self.width()).contains(&dx) || !(0.0..=self.height()).contains(&dy) {
            return Err(Error::OutOfBounds { x: pos.0, y: pos.1 });
        }
        Ok(TileIndex {
            x: self.axis(dx, self.nx),
            y: self.axis(dy, self.ny),
        })
    }

    /// Neighbouring tile offset by `(dx, dy)` tiles, if it lies on the grid.
    pub fn offset(&self, t: TileIndex, dx: i32, dy: i32) -> Option<TileIndex> {
        let x = t.x as i64 + dx as i64;
        let y = t.y as i64 + dy as i64;
        if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
            None
        } else {
            Some(TileIndex::new(x as u32, y as u32))
        }
    }
}
