//! Complex field samples on a [`Grid3`].

use super::grid::Grid3;
use crate::error::CoreError;
use crate::numeric::pairwise_map_sum;
use num_complex::Complex64;

/// A complex-valued function sampled on a periodic grid.
///
/// `purely_real` is metadata set by constructors and operations that
/// guarantee a real-valued field; it is stored in snapshots.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid3,
    values: Vec<Complex64>,
    purely_real: bool,
}

impl Field {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![Complex64::ZERO; grid.len()],
            purely_real: true,
        }
    }

    /// Sample a complex function of the coordinates.
    pub fn from_fn<F: FnMut(f64, f64, f64) -> Complex64>(grid: Grid3, mut f: F) -> Self {
        let [n0, n1, n2] = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..n0 {
            let x = grid.coord(0, ix);
            for iy in 0..n1 {
                let y = grid.coord(1, iy);
                for iz in 0..n2 {
                    values.push(f(x, y, grid.coord(2, iz)));
                }
            }
        }
        Self {
            grid,
            values,
            purely_real: false,
        }
    }

    /// Sample a real function of the coordinates.
    pub fn from_real_fn<F: FnMut(f64, f64, f64) -> f64>(grid: Grid3, mut f: F) -> Self {
        let mut out = Self::from_fn(grid, |x, y, z| Complex64::new(f(x, y, z), 0.0));
        out.purely_real = true;
        out
    }

    pub fn from_values(grid: Grid3, values: Vec<Complex64>) -> Result<Self, CoreError> {
        if values.len() != grid.len() {
            return Err(CoreError::GridMismatch);
        }
        let purely_real = values.iter().all(|v| v.im == 0.0);
        Ok(Self {
            grid,
            values,
            purely_real,
        })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.purely_real = false;
        &mut self.values
    }

    pub fn is_purely_real(&self) -> bool {
        self.purely_real
    }

    pub fn set_purely_real(&mut self, flag: bool) {
        self.purely_real = flag;
    }

    /// Same grid check for binary operations.
    pub fn check_same_grid(&self, other: &Field) -> Result<(), CoreError> {
        if self.grid != other.grid {
            return Err(CoreError::GridMismatch);
        }
        Ok(())
    }

    /// `||u||_2 = sqrt(dV sum |u_j|^2)`.
    pub fn mass(&self) -> f64 {
        (self.grid.cell_volume() * pairwise_map_sum(self.values.len(), |i| self.values[i].norm_sqr()))
            .sqrt()
    }

    /// `L^2` inner product `dV sum u_j conj(v_j)`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        debug_assert_eq!(self.grid, other.grid);
        let re = pairwise_map_sum(self.values.len(), |i| {
            (self.values[i] * other.values[i].conj()).re
        });
        let im = pairwise_map_sum(self.values.len(), |i| {
            (self.values[i] * other.values[i].conj()).im
        });
        self.grid.cell_volume() * Complex64::new(re, im)
    }

    /// `dV sum f(u_j)` for a real reduction of the samples.
    pub fn integrate<F: Fn(Complex64) -> f64 + Copy>(&self, f: F) -> f64 {
        self.grid.cell_volume() * pairwise_map_sum(self.values.len(), |i| f(self.values[i]))
    }

    /// `self + a * other`, grid-checked.
    pub fn axpy(&self, a: Complex64, other: &Field) -> Result<Field, CoreError> {
        self.check_same_grid(other)?;
        let values = (0..self.values.len())
            .map(|i| self.values[i] + a * other.values[i])
            .collect();
        let mut out = Field {
            grid: self.grid,
            values,
            purely_real: false,
        };
        out.purely_real =
            self.purely_real && other.purely_real && a.im == 0.0;
        Ok(out)
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * a).collect(),
            purely_real: self.purely_real,
        }
    }

    /// Pointwise density `|u_j|^2` (kept as complex storage for the FFT).
    pub fn density(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect()
    }

    /// Largest `|u_j|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest real part (positivity diagnostic for real ground states).
    pub fn min_re(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    /// Drop roundoff-level imaginary parts (real-sector flows).
    pub(crate) fn scrub_imaginary(&mut self) {
        for v in &mut self.values {
            v.im = 0.0;
        }
        self.purely_real = true;
    }
}
