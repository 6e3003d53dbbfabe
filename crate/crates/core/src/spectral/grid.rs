//! Uniform periodic grid on a rectangular box centered at the origin.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid metadata: point counts and box side lengths per axis.
///
/// Coordinates run over `x_j = -L/2 + j h`, `j = 0..n`, with `h = L/n`; the
/// origin sits at index `n/2`.  Flat storage order is row-major with the
/// x-axis slowest and the z-axis fastest:
/// `flat = (ix * n[1] + iy) * n[2] + iz`.
///
/// The frequency set per axis is the standard symmetric one,
/// `xi = (2 pi / L) k` for integer `k` in `[-n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: [usize; 3],
    box_len: [f64; 3],
}

impl Grid3 {
    /// Validates evenness (`n >= 8`, even) and positive box lengths.
    pub fn new(n: [usize; 3], box_len: [f64; 3]) -> Result<Self, CoreError> {
        if n.iter().any(|&v| v < 8 || v % 2 != 0) {
            return Err(CoreError::InvalidGrid { n });
        }
        if box_len.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(CoreError::InvalidBox { box_len });
        }
        Ok(Self { n, box_len })
    }

    /// Cubic grid: same point count and side length on every axis.
    pub fn cubic(n: usize, box_len: f64) -> Result<Self, CoreError> {
        Self::new([n; 3], [box_len; 3])
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn box_len(&self) -> [f64; 3] {
        self.box_len
    }

    /// Total number of points.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.box_len[axis] / self.n[axis] as f64
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing(0) * self.spacing(1) * self.spacing(2)
    }

    pub fn volume(&self) -> f64 {
        self.box_len[0] * self.box_len[1] * self.box_len[2]
    }

    /// Coordinate of index `j` along `axis`.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        -0.5 * self.box_len[axis] + j as f64 * self.spacing(axis)
    }

    /// Index of the origin along `axis`.
    pub fn origin_index(&self, axis: usize) -> usize {
        self.n[axis] / 2
    }

    /// Angular frequency of DFT bin `k` along `axis` (symmetric convention).
    pub fn freq(&self, axis: usize, k: usize) -> f64 {
        let n = self.n[axis];
        let signed = if k <= n / 2 - 1 {
            k as isize
        } else {
            k as isize - n as isize
        };
        2.0 * PI / self.box_len[axis] * signed as f64
    }

    /// Frequency table for one axis.
    pub fn freq_table(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|k| self.freq(axis, k)).collect()
    }

    /// Flat index of `(ix, iy, iz)`.
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n[1] + iy) * self.n[2] + iz
    }

    /// `(ix, iy, iz)` of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let iz = flat % self.n[2];
        let rest = flat / self.n[2];
        let iy = rest % self.n[1];
        let ix = rest / self.n[1];
        [ix, iy, iz]
    }
}
