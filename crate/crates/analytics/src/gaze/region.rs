use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GazeError, Point};

pub const DEFAULT_SCREEN_W: u32 = 1366;
pub const DEFAULT_SCREEN_H: u32 = 768;

/// One cell of the 3×3 screen grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub row: u8,
    pub col: u8,
}

const ROWS: [&str; 3] = ["top", "middle", "bottom"];
const COLS: [&str; 3] = ["left", "centre", "right"];

impl Region {
    pub fn new(row: u8, col: u8) -> Self {
        assert!(row < 3 && col < 3, "region indices must be below 3");
        Region { row, col }
    }

    pub fn all() -> impl Iterator<Item = Region> {
        (0..3).flat_map(|row| (0..3).map(move |col| Region { row, col }))
    }

    /// Row-major index 0..9.
    pub fn index(self) -> usize {
        self.row as usize * 3 + self.col as usize
    }

    pub fn label(self) -> String {
        format!("{}-{}", ROWS[self.row as usize], COLS[self.col as usize])
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Region {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Region::all()
            .find(|r| r.label() == s)
            .ok_or_else(|| GazeError::InvalidInput(format!("unknown region {s:?}")))
    }
}

impl Ord for Region {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.label().cmp(&other.label())
    }
}

impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Screen size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screen {
    pub width: u32,
    pub height: u32,
}

impl Default for Screen {
    fn default() -> Self {
        Screen {
            width: DEFAULT_SCREEN_W,
            height: DEFAULT_SCREEN_H,
        }
    }
}

impl FromStr for Screen {
    type Err = GazeError;

    /// Parses `WIDTHxHEIGHT`, e.g. `1366x768`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GazeError::InvalidInput(format!("screen must look like 1366x768, got {s:?}"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: u32 = w.trim().parse().map_err(|_| bad())?;
        let height: u32 = h.trim().parse().map_err(|_| bad())?;
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Screen { width, height })
    }
}

/// Maps a point to its 3×3 grid cell.
pub fn map_region(point: Point, screen: Screen) -> Result<Region, GazeError> {
    let (w, h) = (screen.width as f64, screen.height as f64);
    let [x, y] = point;
    if !(x >= 0.0 && x < w && y >= 0.0 && y < h) {
        return Err(GazeError::OutOfBounds { x, y, width: screen.width, height: screen.height });
    }
    let col = ((x * 3.0 / w).floor() as u8).min(2);
    let row = ((y * 3.0 / h).floor() as u8).min(2);
    Ok(Region { row, col })
}
