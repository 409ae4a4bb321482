//! Rectilinear state-space grids, the per-cell code table and the integer
//! encoding of attractors and basins.
//!
//! A grid axis `[min, max]` with `len` points has cell centers
//! `min + i * step` with `step = (max - min) / (len - 1)`. Every cell owns the
//! half-open box `[center - step/2, center + step/2)` along each axis, so the
//! covered region extends half a step beyond `min` and `max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of an attractor. Allocated in discovery order starting at 1.
pub type AttractorId = u32;

/// One axis of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, len: usize) -> Result<Self> {
        let axis = Axis { min, max, len };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!(
                "axis bounds must be finite, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.min >= self.max {
            return Err(Error::Config(format!(
                "axis min must be below max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.len < 2 {
            return Err(Error::Config(format!(
                "axis length must be at least 2, got {}",
                self.len
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.len - 1) as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }
}

/// A regular rectilinear grid with row-major cell numbering (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    steps: Vec<f64>,
    strides: Vec<usize>,
    total: usize,
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.axes.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let axes = Vec::<Axis>::deserialize(d)?;
        Grid::new(axes).map_err(serde::de::Error::custom)
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("grid needs at least one axis".into()));
        }
        for axis in &axes {
            axis.validate()?;
        }
        let steps = axes.iter().map(Axis::step).collect();
        let mut strides = vec![1usize; axes.len()];
        for d in (0..axes.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1]
                .checked_mul(axes[d + 1].len)
                .ok_or_else(|| Error::Config("grid too large".into()))?;
        }
        let total = strides[0]
            .checked_mul(axes[0].len)
            .ok_or_else(|| Error::Config("grid too large".into()))?;
        Ok(Grid {
            axes,
            steps,
            strides,
            total,
        })
    }

    /// Shorthand for `Grid::new` from `(min, max, len)` triples.
    pub fn from_ranges(ranges: &[(f64, f64, usize)]) -> Result<Self> {
        Grid::new(
            ranges
                .iter()
                .map(|&(min, max, len)| Axis { min, max, len })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().cloned().fold(0.0, f64::max)
    }

    pub fn mean_step(&self) -> f64 {
        self.steps.iter().sum::<f64>() / self.steps.len() as f64
    }

    /// Index of the cell containing `point`, or `None` when the point lies
    /// outside the grid. Non-finite coordinates are outside.
    pub fn cell_index(&self, point: &[f64]) -> Result<Option<Vec<usize>>> {
        self.check_dim(point.len())?;
        Ok(point
            .iter()
            .enumerate()
            .map(|(d, &x)| self.axis_index(d, x))
            .collect())
    }

    /// Like [`Grid::cell_index`] but returns the linear (row-major) index and
    /// skips the dimension check. Used in the hot loop.
    #[inline]
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        debug_assert_eq!(point.len(), self.axes.len());
        let mut linear = 0usize;
        for (d, &x) in point.iter().enumerate() {
            linear += self.axis_index(d, x)? * self.strides[d];
        }
        Some(linear)
    }

    #[inline]
    fn axis_index(&self, d: usize, x: f64) -> Option<usize> {
        let axis = &self.axes[d];
        let r = ((x - axis.min) / self.steps[d] + 0.5).floor();
        // NaN fails both comparisons
        if r >= 0.0 && r < axis.len as f64 {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Grid point (cell center) of a multi-index.
    pub fn cell_center(&self, index: &[usize]) -> Result<Vec<f64>> {
        self.check_dim(index.len())?;
        index
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| {
                if i < axis.len {
                    Ok(axis.center(i))
                } else {
                    Err(Error::Contract(format!(
                        "index {i} out of range for axis of length {}",
                        axis.len
                    )))
                }
            })
            .collect()
    }

    /// Writes the center of the cell with the given linear index into `out`.
    pub fn center_of_linear(&self, linear: usize, out: &mut [f64]) {
        debug_assert!(linear < self.total);
        for (d, axis) in self.axes.iter().enumerate() {
            let i = (linear / self.strides[d]) % axis.len;
            out[d] = axis.center(i);
        }
    }

    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        self.check_dim(index.len())?;
        let mut linear = 0;
        for (d, (&i, axis)) in index.iter().zip(&self.axes).enumerate() {
            if i >= axis.len {
                return Err(Error::Contract(format!(
                    "index {i} out of range for axis of length {}",
                    axis.len
                )));
            }
            linear += i * self.strides[d];
        }
        Ok(linear)
    }

    pub fn multi_index(&self, linear: usize) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .map(|(d, axis)| (linear / self.strides[d]) % axis.len)
            .collect()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.axes.len() {
            return Err(Error::Contract(format!(
                "expected {} coordinates, got {n}",
                self.axes.len()
            )));
        }
        Ok(())
    }
}

/// Integer code stored in one grid cell.
///
/// `-1` diverged, `0` marked (only during a run), `1` unknown,
/// `2k` attractor `k`, `2k + 1` basin of attractor `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(transparent)]
pub struct CellCode(pub i32);

/// What a cell code means once the run is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeMeaning {
    Attractor(AttractorId),
    Diverged,
    Unknown,
}

impl CellCode {
    pub const DIVERGED: CellCode = CellCode(-1);
    pub const MARKED: CellCode = CellCode(0);
    pub const UNKNOWN: CellCode = CellCode(1);

    pub fn attractor(k: AttractorId) -> CellCode {
        debug_assert!(k >= 1);
        CellCode(2 * k as i32)
    }

    pub fn basin(k: AttractorId) -> CellCode {
        debug_assert!(k >= 1);
        CellCode(2 * k as i32 + 1)
    }

    #[inline]
    pub fn is_attractor(self) -> bool {
        self.0 >= 2 && self.0 % 2 == 0
    }

    #[inline]
    pub fn is_basin(self) -> bool {
        self.0 >= 3 && self.0 % 2 == 1
    }

    /// Attractor ID for even and odd codes above 1.
    #[inline]
    pub fn attractor_id(self) -> Option<AttractorId> {
        (self.0 >= 2).then_some((self.0 / 2) as AttractorId)
    }

    pub fn meaning(self) -> Result<CodeMeaning> {
        match self.0 {
            -1 => Ok(CodeMeaning::Diverged),
            1 => Ok(CodeMeaning::Unknown),
            c if c >= 2 => Ok(CodeMeaning::Attractor((c / 2) as AttractorId)),
            0 => Err(Error::Consistency(
                "marked cell code survived a completed run".into(),
            )),
            c => Err(Error::Consistency(format!("invalid cell code {c}"))),
        }
    }
}

/// Even code of attractor `k`.
pub fn code_of_attractor(k: AttractorId) -> Result<CellCode> {
    check_id(k)?;
    Ok(CellCode::attractor(k))
}

/// Odd code of the basin of attractor `k`.
pub fn code_of_basin(k: AttractorId) -> Result<CellCode> {
    check_id(k)?;
    Ok(CellCode::basin(k))
}

pub fn id_of_code(code: CellCode) -> Result<CodeMeaning> {
    code.meaning()
}

fn check_id(k: AttractorId) -> Result<()> {
    if k == 0 || k > (i32::MAX as u32 - 1) / 2 {
        return Err(Error::Contract(format!("attractor id {k} out of range")));
    }
    Ok(())
}

/// Dense row-major table of cell codes over a grid.
#[derive(Debug, Clone)]
pub struct CellStore {
    grid: Grid,
    codes: Vec<CellCode>,
    attractor_count: u32,
}

impl CellStore {
    /// Store with every cell unknown.
    pub fn new(grid: Grid) -> Self {
        let codes = vec![CellCode::UNKNOWN; grid.len()];
        CellStore {
            grid,
            codes,
            attractor_count: 0,
        }
    }

    pub fn from_codes(grid: Grid, codes: Vec<CellCode>) -> Result<Self> {
        if codes.len() != grid.len() {
            return Err(Error::Contract(format!(
                "expected {} codes, got {}",
                grid.len(),
                codes.len()
            )));
        }
        let attractor_count = codes
            .iter()
            .filter(|c| c.is_attractor() || c.is_basin())
            .filter_map(|c| c.attractor_id())
            .max()
            .unwrap_or(0);
        Ok(CellStore {
            grid,
            codes,
            attractor_count,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn codes(&self) -> &[CellCode] {
        &self.codes
    }

    #[inline]
    pub fn get(&self, cell: usize) -> CellCode {
        self.codes[cell]
    }

    #[inline]
    pub fn set(&mut self, cell: usize, code: CellCode) {
        self.codes[cell] = code;
    }

    pub fn attractor_count(&self) -> u32 {
        self.attractor_count
    }

    /// Reserves the next attractor ID.
    pub fn allocate_attractor(&mut self) -> AttractorId {
        self.attractor_count += 1;
        self.attractor_count
    }

    pub fn count_code(&self, code: CellCode) -> usize {
        self.codes.iter().filter(|&&c| c == code).count()
    }
}
