//! Verification campaigns on top of the minimizer: the vanishing-mass
//! asymptotics of the ground-state family and orbital stability under the
//! time-dependent flow.
//!
//! Distances to the ground-state orbit are measured in `H^1` after
//! minimizing over the global phase (analytic) and over lattice
//! translations (all of them at once, via the cross-correlation computed by
//! one inverse transform).

mod evolve;
mod sweep;

pub use evolve::{splitstep_evolve, stability_probe, EvolutionStats, EvolveOptions, StabilityReport, StabilityTrial};
pub use sweep::{asymptotic_sweep, fit_sweep, sweep_targets, SweepFits, SweepRecord, SweepTargets};

use crate::error::CoreError;
use crate::numeric::pairwise_map_sum;
use crate::params::{rescaling, ModelParams, WellGeometry};
use crate::spectral::{shift_lattice, Fft3, Field, Grid3};

/// Shift the density peak onto the grid origin (periodic wrap-around).
///
/// Returns the recentered field and the translation `y` that was removed:
/// `out(x) = u(x + y)`.  Fails when the density has no unique peak.
pub fn recenter(u: &Field) -> Result<(Field, [f64; 3]), CoreError> {
    let grid = u.grid();
    let values = u.values();
    let mut best = 0usize;
    let mut best_val = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        let d = v.norm_sqr();
        if d > best_val {
            best_val = d;
            best = i;
        }
    }
    if best_val == 0.0 {
        return Err(CoreError::FlatDensity);
    }
    let near_peak = values
        .iter()
        .filter(|v| v.norm_sqr() >= best_val * (1.0 - 1e-9))
        .count();
    if near_peak > 1 {
        return Err(CoreError::FlatDensity);
    }
    let peak = grid.unflatten(best);
    let mut steps = [0i64; 3];
    let mut shift = [0.0f64; 3];
    for axis in 0..3 {
        let origin = grid.origin_index(axis);
        steps[axis] = peak[axis] as i64 - origin as i64;
        shift[axis] = steps[axis] as f64 * grid.spacing(axis);
    }
    Ok((shift_lattice(u, steps), shift))
}

/// Amplitude and coordinate rescaling of a converged state onto the scale of
/// the limit profile: `v(x) = u((x + y)/rate) / amp` on the stretched grid.
///
/// Output mass equals `[p/(2 C_p^p)]^{1/(p-2)}` (the limit-profile mass) up
/// to quadrature error, at every mass.
pub fn rescale_to_limit(
    u: &Field,
    params: &ModelParams,
    geom: &WellGeometry,
) -> Result<Field, CoreError> {
    let (centered, _) = recenter(u)?;
    let rs = rescaling(params, geom);
    let grid = u.grid();
    let b = grid.box_len();
    let new_grid = Grid3::new(
        grid.n(),
        [b[0] * rs.rate, b[1] * rs.rate, b[2] * rs.rate],
    )?;
    let values = centered.values().iter().map(|v| v / rs.amp).collect();
    let mut out = Field::from_values(new_grid, values)?;
    out.set_purely_real(centered.is_purely_real());
    Ok(out)
}

/// `H^1` distance minimized over the global phase and all lattice
/// translations of `reference`.
pub fn h1_distance_min(fft: &mut Fft3, psi: &Field, reference: &Field) -> Result<f64, CoreError> {
    psi.check_same_grid(reference)?;
    let grid = psi.grid();
    let mut a = psi.values().to_vec();
    let mut b = reference.values().to_vec();
    fft.forward(&mut a);
    fft.forward(&mut b);
    let fx = grid.freq_table(0);
    let fy = grid.freq_table(1);
    let fz = grid.freq_table(2);
    let [_, n1, n2] = grid.n();
    let weight = |flat: usize| -> f64 {
        let iz = flat % n2;
        let iy = (flat / n2) % n1;
        let ix = flat / (n1 * n2);
        1.0 + fx[ix] * fx[ix] + fy[iy] * fy[iy] + fz[iz] * fz[iz]
    };
    let factor = grid.cell_volume() / grid.len() as f64;
    let norm_a = factor * pairwise_map_sum(grid.len(), |i| weight(i) * a[i].norm_sqr());
    let norm_b = factor * pairwise_map_sum(grid.len(), |i| weight(i) * b[i].norm_sqr());
    // weighted cross-correlation over every lattice offset in one transform:
    // <psi, ref(. - y_d)>_{H^1} = dV * ifft(w psi^ conj(ref^))[d]
    let mut corr: Vec<_> = (0..grid.len())
        .map(|i| weight(i) * a[i] * b[i].conj())
        .collect();
    fft.inverse(&mut corr);
    let best = grid.cell_volume() * corr.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dist_sq = (norm_a + norm_b - 2.0 * best).max(0.0);
    Ok(dist_sq.sqrt())
}

/// `H^1` norm of a field.
pub fn h1_norm(fft: &mut Fft3, u: &Field) -> Result<f64, CoreError> {
    let n = crate::spectral::norms(fft, u, 2.0)?;
    Ok((n.mass * n.mass + n.grad * n.grad).sqrt())
}

/// Plain `L^2` overlap `|<psi, reference>| / (||psi|| ||reference||)`.
pub fn overlap(psi: &Field, reference: &Field) -> f64 {
    let inner = psi.inner(reference).norm();
    inner / (psi.mass() * reference.mass())
}
