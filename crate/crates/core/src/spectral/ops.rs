//! Spectral operations: the dipolar multiplier, the nonlocal potential,
//! norms and the Laplacian.

use super::fft::Fft3;
use super::field::Field;
use crate::error::CoreError;
use crate::numeric::pairwise_map_sum;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Fourier multiplier of the dipolar kernel,
/// `(4 pi / 3) (3 xi_3^2 / |xi|^2 - 1)`, in `[-4 pi/3, 8 pi/3]`.
///
/// `khat(0) = 0` by the principal-value convention (see the module docs).
pub fn khat(xi: [f64; 3]) -> f64 {
    let nsq = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if nsq == 0.0 {
        return 0.0;
    }
    4.0 * PI / 3.0 * (3.0 * xi[2] * xi[2] / nsq - 1.0)
}

/// The dipolar mean-field potential `K * |u|^2`, computed spectrally.
///
/// The output is real up to roundoff (the density is real and the multiplier
/// even); the imaginary part is dropped and the field flagged purely real.
pub fn dipolar_potential(fft: &mut Fft3, u: &Field) -> Result<Field, CoreError> {
    if u.grid() != fft.grid() {
        return Err(CoreError::GridMismatch);
    }
    let grid = u.grid();
    let mut rho = u.density();
    fft.forward(&mut rho);
    apply_khat(&grid, &mut rho);
    fft.inverse(&mut rho);
    for v in &mut rho {
        v.im = 0.0;
    }
    let mut out = Field::from_values(grid, rho)?;
    out.set_purely_real(true);
    Ok(out)
}

/// Multiply a spectrum in place by the dipolar multiplier.
pub(crate) fn apply_khat(grid: &super::grid::Grid3, spec: &mut [Complex64]) {
    let fx = grid.freq_table(0);
    let fy = grid.freq_table(1);
    let fz = grid.freq_table(2);
    let mut flat = 0;
    for &x in &fx {
        for &y in &fy {
            for &z in &fz {
                spec[flat] *= khat([x, y, z]);
                flat += 1;
            }
        }
    }
}

/// The norms used by the energy functional.
#[derive(Debug, Clone, Copy)]
pub struct Norms {
    /// `||u||_2`
    pub mass: f64,
    /// `||grad u||_2`
    pub grad: f64,
    /// `||u||_p`
    pub lp: f64,
    /// `||u||_4`
    pub l4: f64,
}

/// Mass, gradient norm (spectral), `L^p` and `L^4` norms.
pub fn norms(fft: &mut Fft3, u: &Field, p: f64) -> Result<Norms, CoreError> {
    if u.grid() != fft.grid() {
        return Err(CoreError::GridMismatch);
    }
    let grid = u.grid();
    let mut spec = u.values().to_vec();
    fft.forward(&mut spec);
    let fx = grid.freq_table(0);
    let fy = grid.freq_table(1);
    let fz = grid.freq_table(2);
    let [_, n1, n2] = grid.n();
    let factor = grid.cell_volume() / grid.len() as f64;
    let grad_sq = factor
        * pairwise_map_sum(grid.len(), |flat| {
            let iz = flat % n2;
            let iy = (flat / n2) % n1;
            let ix = flat / (n1 * n2);
            let k2 = fx[ix] * fx[ix] + fy[iy] * fy[iy] + fz[iz] * fz[iz];
            k2 * spec[flat].norm_sqr()
        });
    let lp = u.integrate(|v| v.norm().powf(p)).powf(1.0 / p);
    let l4 = u.integrate(|v| v.norm_sqr().powi(2)).powf(0.25);
    Ok(Norms {
        mass: u.mass(),
        grad: grad_sq.max(0.0).sqrt(),
        lp,
        l4,
    })
}

/// `Laplacian u` via the `-|xi|^2` multiplier; exact for band-limited fields.
pub fn laplacian_apply(fft: &mut Fft3, u: &Field) -> Result<Field, CoreError> {
    if u.grid() != fft.grid() {
        return Err(CoreError::GridMismatch);
    }
    let grid = u.grid();
    let mut spec = u.values().to_vec();
    fft.forward(&mut spec);
    let fx = grid.freq_table(0);
    let fy = grid.freq_table(1);
    let fz = grid.freq_table(2);
    let mut flat = 0;
    for &x in &fx {
        for &y in &fy {
            for &z in &fz {
                spec[flat] *= -(x * x + y * y + z * z);
                flat += 1;
            }
        }
    }
    fft.inverse(&mut spec);
    let mut out = Field::from_values(grid, spec)?;
    out.set_purely_real(u.is_purely_real());
    if u.is_purely_real() {
        out.scrub_imaginary();
    }
    Ok(out)
}

/// Mass fraction inside the central half of the box (`|x_i| <= L_i/4` on
/// every axis).  Solvers require this to stay above 0.9999 so that the
/// periodic images of the convolution stay negligible.
pub fn support_fraction(u: &Field) -> f64 {
    let grid = u.grid();
    let [n0, n1, n2] = grid.n();
    let inside = |axis: usize, j: usize| -> bool {
        grid.coord(axis, j).abs() <= 0.25 * grid.box_len()[axis] + 1e-12
    };
    let values = u.values();
    let mut num = 0.0;
    for ix in 0..n0 {
        if !inside(0, ix) {
            continue;
        }
        for iy in 0..n1 {
            if !inside(1, iy) {
                continue;
            }
            for iz in 0..n2 {
                if inside(2, iz) {
                    num += values[grid.idx(ix, iy, iz)].norm_sqr();
                }
            }
        }
    }
    let total = pairwise_map_sum(values.len(), |i| values[i].norm_sqr());
    if total == 0.0 {
        1.0
    } else {
        num / total
    }
}

/// Circular shift by whole lattice steps: `out(x) = u(x + shift)` with
/// `shift = (d0 h0, d1 h1, d2 h2)`.
pub fn shift_lattice(u: &Field, steps: [i64; 3]) -> Field {
    let grid = u.grid();
    let [n0, n1, n2] = grid.n();
    let values = u.values();
    let wrap = |j: usize, d: i64, n: usize| -> usize {
        (((j as i64 + d) % n as i64 + n as i64) % n as i64) as usize
    };
    let mut out = Vec::with_capacity(grid.len());
    for ix in 0..n0 {
        let sx = wrap(ix, steps[0], n0);
        for iy in 0..n1 {
            let sy = wrap(iy, steps[1], n1);
            for iz in 0..n2 {
                out.push(values[grid.idx(sx, sy, wrap(iz, steps[2], n2))]);
            }
        }
    }
    let mut f = Field::from_values(grid, out).expect("same grid by construction");
    f.set_purely_real(u.is_purely_real());
    f
}
