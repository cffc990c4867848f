//! Uniform cell-centred meshes on an interval or a rectangle.
//!
//! Cells are stored row-major: cell `(i, j)` (x index `i`, y index `j`) lives
//! at `j * nx + i`. A 1D grid is the special case `ny = 1`.
//!
//! Faces normal to x are indexed `j * (nx + 1) + k` for `k = 0..=nx`; faces
//! normal to y are indexed `k * nx + i` for `k = 0..=ny`. Faces with `k = 0`
//! or `k = n` lie on the boundary.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Located, Result};

pub const MIN_CELLS_PER_AXIS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    length: [f64; 2],
    h: [f64; 2],
}

impl Grid {
    /// `n` cells on `(0, length)`.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::build(1, [n, 1], [length, 1.0])
    }

    /// `nx × ny` cells on `(0, lx) × (0, ly)`.
    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::build(2, [nx, ny], [lx, ly])
    }

    fn build(dim: usize, n: [usize; 2], length: [f64; 2]) -> Result<Self> {
        for axis in 0..dim {
            if n[axis] < MIN_CELLS_PER_AXIS {
                return Err(Error::InvalidGrid("need at least 4 cells per axis"));
            }
            if !(length[axis] > 0.0) || !length[axis].is_finite() {
                return Err(Error::InvalidGrid("domain length must be finite and positive"));
            }
        }
        let h = [length[0] / n[0] as f64, length[1] / n[1] as f64];
        Ok(Grid { dim, n, length, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n[1]
    }

    /// Cells per axis; only the first `dim` entries are meaningful.
    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn length(&self) -> [f64; 2] {
        self.length
    }

    pub fn h(&self) -> [f64; 2] {
        self.h
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Cell measure: `h` in 1D, `hx * hy` in 2D.
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.h[0]
        } else {
            self.h[0] * self.h[1]
        }
    }

    /// Domain measure `|Ω|`.
    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            self.length[0]
        } else {
            self.length[0] * self.length[1]
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    /// `(i, j)` of a flat cell index.
    pub fn position(&self, cell: usize) -> (usize, usize) {
        (cell % self.n[0], cell / self.n[0])
    }

    /// Cell centre. The y coordinate is 0 on 1D grids.
    pub fn center(&self, cell: usize) -> [f64; 2] {
        let (i, j) = self.position(cell);
        let y = if self.dim == 1 {
            0.0
        } else {
            (j as f64 + 0.5) * self.h[1]
        };
        [(i as f64 + 0.5) * self.h[0], y]
    }

    pub fn x_faces(&self) -> usize {
        (self.n[0] + 1) * self.n[1]
    }

    pub fn y_faces(&self) -> usize {
        if self.dim == 1 {
            0
        } else {
            self.n[0] * (self.n[1] + 1)
        }
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.cells()]
    }

    pub(crate) fn check_cells(&self, field: &[f64]) -> Result<()> {
        if field.len() == self.cells() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: Located::Cells,
                expected: self.cells(),
                found: field.len(),
            })
        }
    }

    /// Calls `f(face, left, right, inv_h)` for every interior face normal to x,
    /// where `left`/`right` are the adjacent cells.
    #[inline]
    pub(crate) fn for_each_x_face(&self, mut f: impl FnMut(usize, usize, usize, f64)) {
        let [nx, ny] = self.n;
        let inv_h = 1.0 / self.h[0];
        for j in 0..ny {
            let row = j * nx;
            let face_row = j * (nx + 1);
            for k in 1..nx {
                f(face_row + k, row + k - 1, row + k, inv_h);
            }
        }
    }

    /// Same as [`Grid::for_each_x_face`] for faces normal to y; a no-op in 1D.
    #[inline]
    pub(crate) fn for_each_y_face(&self, mut f: impl FnMut(usize, usize, usize, f64)) {
        if self.dim == 1 {
            return;
        }
        let [nx, ny] = self.n;
        let inv_h = 1.0 / self.h[1];
        for k in 1..ny {
            for i in 0..nx {
                f(k * nx + i, (k - 1) * nx + i, k * nx + i, inv_h);
            }
        }
    }
}

/// Values on the faces of a [`Grid`], split by face orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub x: Vec<f64>,
    /// Empty on 1D grids.
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        FaceField {
            x: vec![0.0; grid.x_faces()],
            y: vec![0.0; grid.y_faces()],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.x.iter().chain(self.y.iter())
    }

    /// Largest absolute face value.
    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}
