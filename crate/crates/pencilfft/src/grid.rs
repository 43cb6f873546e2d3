//! Domain geometry: data layouts, boundary conditions and index/coordinate maps.

use crate::error::{Error, Result};

/// Where samples live relative to the N cells of a direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    /// N samples at cell midpoints (j + 1/2) h.
    CellCentered,
    /// N + 1 samples at cell corners j h, both ends included.
    NodeCentered,
}

/// Boundary condition on one side of one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bc {
    Even,
    Odd,
    Periodic,
    Unbounded,
}

/// Validated (left, right) boundary-condition pair for one direction.
///
/// Periodic pairs only with itself; Even/Odd/Unbounded combine freely,
/// giving exactly 10 constructible values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BcPair {
    left: Bc,
    right: Bc,
}

impl BcPair {
    pub fn new(left: Bc, right: Bc) -> Result<Self> {
        let periodic = (left == Bc::Periodic) as u8 + (right == Bc::Periodic) as u8;
        if periodic == 1 {
            return Err(Error::InvalidBcPair(format!(
                "{left:?}-{right:?}: periodic pairs only with periodic"
            )));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> Bc {
        self.left
    }

    pub fn right(&self) -> Bc {
        self.right
    }

    pub fn is_periodic(&self) -> bool {
        self.left == Bc::Periodic
    }

    /// Both sides unbounded.
    pub fn is_fully_unbounded(&self) -> bool {
        self.left == Bc::Unbounded && self.right == Bc::Unbounded
    }

    /// Exactly one side unbounded.
    pub fn is_semi_unbounded(&self) -> bool {
        (self.left == Bc::Unbounded) != (self.right == Bc::Unbounded)
    }

    pub fn has_unbounded(&self) -> bool {
        self.left == Bc::Unbounded || self.right == Bc::Unbounded
    }

    /// Both sides Even or Odd (pure symmetry direction).
    pub fn is_symmetric(&self) -> bool {
        matches!(self.left, Bc::Even | Bc::Odd) && matches!(self.right, Bc::Even | Bc::Odd)
    }
}

/// Uniform 3D grid: cell counts, physical lengths, one layout for all
/// directions and a boundary-condition pair per direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    cells: [usize; 3],
    length: [f64; 3],
    layout: Layout,
    bcs: [BcPair; 3],
}

impl Domain {
    pub fn new(cells: [usize; 3], length: [f64; 3], layout: Layout, bcs: [BcPair; 3]) -> Result<Self> {
        for d in 0..3 {
            if cells[d] < 4 {
                return Err(Error::InvalidDomain(format!(
                    "direction {d}: need at least 4 cells, got {}",
                    cells[d]
                )));
            }
            if !(length[d] > 0.0) || !length[d].is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "direction {d}: length must be positive and finite, got {}",
                    length[d]
                )));
            }
        }
        Ok(Self { cells, length, layout, bcs })
    }

    pub fn cells(&self, dir: usize) -> usize {
        self.cells[dir]
    }

    pub fn length(&self, dir: usize) -> f64 {
        self.length[dir]
    }

    pub fn spacing(&self, dir: usize) -> f64 {
        self.length[dir] / self.cells[dir] as f64
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn bc(&self, dir: usize) -> BcPair {
        self.bcs[dir]
    }

    /// Number of stored samples along `dir`: N cell-centered, N+1 node-centered.
    pub fn sample_count(&self, dir: usize) -> usize {
        match self.layout {
            Layout::CellCentered => self.cells[dir],
            Layout::NodeCentered => self.cells[dir] + 1,
        }
    }

    pub fn sample_counts(&self) -> [usize; 3] {
        [self.sample_count(0), self.sample_count(1), self.sample_count(2)]
    }

    /// Physical position of sample `j` along `dir`.
    pub fn coordinate(&self, dir: usize, j: usize) -> Result<f64> {
        let n = self.sample_count(dir);
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, extent: n });
        }
        let h = self.spacing(dir);
        Ok(match self.layout {
            Layout::CellCentered => (j as f64 + 0.5) * h,
            Layout::NodeCentered => j as f64 * h,
        })
    }
}
