//! Three-dimensional FFT built from per-axis 1D transforms.
//!
//! Forward is unnormalized; inverse carries the full `1/N`.  Plans and
//! scratch buffers live in the workspace, which is created per worker and
//! never shared mutably.

use super::grid::Grid3;
use super::ops::khat;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft3 {
    grid: Grid3,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    /// transpose buffer, grid-sized
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    /// flat `|xi|^2` table, built on first use
    freq_sq: Option<Arc<Vec<f64>>>,
    /// flat `lambda1 + lambda2 Khat` table keyed by the coupling bits
    pairing: Option<((u64, u64), Arc<Vec<f64>>)>,
}

impl Fft3 {
    pub fn new(grid: Grid3) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        let fwd = [
            planner.plan_fft_forward(n[0]),
            planner.plan_fft_forward(n[1]),
            planner.plan_fft_forward(n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(n[0]),
            planner.plan_fft_inverse(n[1]),
            planner.plan_fft_inverse(n[2]),
        ];
        let scratch_len = fwd
            .iter()
            .chain(inv.iter())
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            grid,
            fwd,
            inv,
            buf: vec![Complex64::ZERO; grid.len()],
            scratch: vec![Complex64::ZERO; scratch_len],
            freq_sq: None,
            pairing: None,
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    /// Flat table of `|xi|^2` in storage order (cached).
    pub fn freq_sq(&mut self) -> Arc<Vec<f64>> {
        if let Some(t) = &self.freq_sq {
            return t.clone();
        }
        let fx = self.grid.freq_table(0);
        let fy = self.grid.freq_table(1);
        let fz = self.grid.freq_table(2);
        let mut table = Vec::with_capacity(self.grid.len());
        for &x in &fx {
            for &y in &fy {
                for &z in &fz {
                    table.push(x * x + y * y + z * z);
                }
            }
        }
        let table = Arc::new(table);
        self.freq_sq = Some(table.clone());
        table
    }

    /// Flat table of the pairing multiplier `lambda1 + lambda2 Khat(xi)`
    /// (cached for the last coupling pair).
    pub fn pairing_table(&mut self, lambda1: f64, lambda2: f64) -> Arc<Vec<f64>> {
        let key = (lambda1.to_bits(), lambda2.to_bits());
        if let Some((k, t)) = &self.pairing {
            if *k == key {
                return t.clone();
            }
        }
        let fx = self.grid.freq_table(0);
        let fy = self.grid.freq_table(1);
        let fz = self.grid.freq_table(2);
        let mut table = Vec::with_capacity(self.grid.len());
        for &x in &fx {
            for &y in &fy {
                for &z in &fz {
                    table.push(lambda1 + lambda2 * khat([x, y, z]));
                }
            }
        }
        let table = Arc::new(table);
        self.pairing = Some((key, table.clone()));
        table
    }

    /// In-place forward DFT along all three axes (unnormalized).
    pub fn forward(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.grid.len());
        self.axis_transform(data, 2, true);
        self.axis_transform(data, 1, true);
        self.axis_transform(data, 0, true);
    }

    /// In-place inverse DFT along all three axes, scaled by `1/N`.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.grid.len());
        self.axis_transform(data, 2, false);
        self.axis_transform(data, 1, false);
        self.axis_transform(data, 0, false);
        let scale = 1.0 / self.grid.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn axis_transform(&mut self, data: &mut [Complex64], axis: usize, forward: bool) {
        let [n0, n1, n2] = self.grid.n();
        let plan = if forward {
            self.fwd[axis].clone()
        } else {
            self.inv[axis].clone()
        };
        match axis {
            2 => {
                // z lines are contiguous: one batched call over the array
                plan.process_with_scratch(data, &mut self.scratch);
            }
            1 => {
                // per x-slab transpose (n1 x n2) -> (n2 x n1), batch, restore
                for ix in 0..n0 {
                    let plane = &mut data[ix * n1 * n2..(ix + 1) * n1 * n2];
                    let buf = &mut self.buf[..n1 * n2];
                    for iy in 0..n1 {
                        for iz in 0..n2 {
                            buf[iz * n1 + iy] = plane[iy * n2 + iz];
                        }
                    }
                    plan.process_with_scratch(buf, &mut self.scratch);
                    for iz in 0..n2 {
                        for iy in 0..n1 {
                            plane[iy * n2 + iz] = buf[iz * n1 + iy];
                        }
                    }
                }
            }
            0 => {
                // full transpose (n0 x n1 n2) -> (n1 n2 x n0), batch, restore
                let stride = n1 * n2;
                for ix in 0..n0 {
                    for r in 0..stride {
                        self.buf[r * n0 + ix] = data[ix * stride + r];
                    }
                }
                plan.process_with_scratch(&mut self.buf, &mut self.scratch);
                for ix in 0..n0 {
                    for r in 0..stride {
                        data[ix * stride + r] = self.buf[r * n0 + ix];
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}
