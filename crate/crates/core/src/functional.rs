//! The energy functional and its derived quantities.
//!
//! ```text
//! E(u) = 1/2 ||grad u||^2 + 1/2 B(u) + (2 lambda3 / p) ||u||_p^p
//! B(u) = Int lambda1 |u|^4 + lambda2 (K * |u|^2) |u|^2
//! P(u) = 2 ||grad u||^2 + 3 B(u) + 4 lambda3 delta_p ||u||_p^p
//! ```
//!
//! `B(u)` is implemented along two independent routes: the direct pairing of
//! the density with the spectrally computed potential, and the multiplier
//! form `(2 pi)^{-3} Int (lambda1 + lambda2 Khat) |FT(|u|^2)|^2`.  On the
//! grid both reduce to weighted sums over the same DFT and agree to roundoff,
//! which is asserted by tests rather than assumed.
//!
//! Convention for the Euler-Lagrange residual: with
//! `R(u, mu) = -1/2 Lap u + lambda1 |u|^2 u + lambda2 (K*|u|^2) u
//!             + lambda3 |u|^{p-2} u + mu u`
//! the Gateaux derivative of the energy along a direction `phi` is
//! `d/de E(u + e phi) = 2 Re <R(u, 0), phi>_{L^2}`, and the multiplier that
//! makes `R` tangent to the mass sphere at `u` is
//! `mu = -(1/2 ||grad u||^2 + B(u) + lambda3 ||u||_p^p) / c^2`.

use crate::error::CoreError;
use crate::numeric::pairwise_map_sum;
use crate::params::{delta_p, ModelParams};
use crate::spectral::{dipolar_potential, Fft3, Field};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The scalar functionals of a field that the energy is assembled from.
#[derive(Debug, Clone, Copy)]
pub struct FieldComponents {
    /// `||u||_2^2`
    pub mass_sq: f64,
    /// `||grad u||_2^2`
    pub grad_sq: f64,
    /// `B(u)`
    pub b_pair: f64,
    /// `||u||_p^p`
    pub lp_pow: f64,
    /// `||u||_4^4`
    pub l4_pow: f64,
}

/// Energy split by term, plus the Pohozaev value and multiplier estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `1/2 ||grad u||^2`
    pub kinetic: f64,
    /// `1/2 B(u)`
    pub b_pair: f64,
    /// `(2 lambda3 / p) ||u||_p^p`
    pub attractive: f64,
    /// `kinetic + b_pair + attractive`
    pub total: f64,
    /// `P(u)`
    pub p_value: f64,
    /// Multiplier estimate at `u`
    pub mu_est: f64,
}

/// Evaluate every component with two forward transforms.
pub fn components(
    fft: &mut Fft3,
    u: &Field,
    params: &ModelParams,
) -> Result<FieldComponents, CoreError> {
    if u.grid() != fft.grid() {
        return Err(CoreError::GridMismatch);
    }
    let grid = u.grid();
    let freq_sq = fft.freq_sq();
    let pairing = fft.pairing_table(params.lambda1, params.lambda2);
    let mut spec = u.values().to_vec();
    fft.forward(&mut spec);
    let factor = grid.cell_volume() / grid.len() as f64;
    let grad_sq = factor
        * pairwise_map_sum(grid.len(), |flat| freq_sq[flat] * spec[flat].norm_sqr());

    let mut rho = u.density();
    fft.forward(&mut rho);
    let b_pair =
        factor * pairwise_map_sum(grid.len(), |flat| pairing[flat] * rho[flat].norm_sqr());

    Ok(FieldComponents {
        mass_sq: u.integrate(|v| v.norm_sqr()),
        grad_sq,
        b_pair,
        lp_pow: u.integrate(|v| v.norm().powf(params.p)),
        l4_pow: u.integrate(|v| v.norm_sqr().powi(2)),
    })
}

impl FieldComponents {
    /// Assemble the breakdown from precomputed components.
    pub fn breakdown(&self, params: &ModelParams) -> EnergyBreakdown {
        let kinetic = 0.5 * self.grad_sq;
        let b_pair = 0.5 * self.b_pair;
        let attractive = 2.0 * params.lambda3 / params.p * self.lp_pow;
        let dp = delta_p(params.p);
        EnergyBreakdown {
            kinetic,
            b_pair,
            attractive,
            total: kinetic + b_pair + attractive,
            p_value: 2.0 * self.grad_sq + 3.0 * self.b_pair + 4.0 * params.lambda3 * dp * self.lp_pow,
            mu_est: self.multiplier(params),
        }
    }

    /// `mu = -(1/2 grad^2 + B + lambda3 lp) / mass^2`.
    pub fn multiplier(&self, params: &ModelParams) -> f64 {
        -(0.5 * self.grad_sq + self.b_pair + params.lambda3 * self.lp_pow) / self.mass_sq
    }

    /// `E(u)`.
    pub fn energy(&self, params: &ModelParams) -> f64 {
        0.5 * self.grad_sq + 0.5 * self.b_pair + 2.0 * params.lambda3 / params.p * self.lp_pow
    }
}

/// `B(u)` as the real-space pairing of the density with `K * |u|^2` plus the
/// quartic term (the direct route).
pub fn b_pair_direct(fft: &mut Fft3, u: &Field, params: &ModelParams) -> Result<f64, CoreError> {
    let phi = dipolar_potential(fft, u)?;
    let vals = u.values();
    let pv = phi.values();
    let quartic = params.lambda1 * u.integrate(|v| v.norm_sqr().powi(2));
    let pairing = u.grid().cell_volume()
        * pairwise_map_sum(vals.len(), |i| pv[i].re * vals[i].norm_sqr());
    Ok(quartic + params.lambda2 * pairing)
}

/// `B(u)` in Plancherel form (the multiplier route).
pub fn b_pair_fourier(fft: &mut Fft3, u: &Field, params: &ModelParams) -> Result<f64, CoreError> {
    if u.grid() != fft.grid() {
        return Err(CoreError::GridMismatch);
    }
    let grid = u.grid();
    let pairing = fft.pairing_table(params.lambda1, params.lambda2);
    let mut rho = u.density();
    fft.forward(&mut rho);
    let factor = grid.cell_volume() / grid.len() as f64;
    Ok(factor
        * pairwise_map_sum(grid.len(), |flat| pairing[flat] * rho[flat].norm_sqr()))
}

/// Full energy breakdown of a field.
pub fn energy(fft: &mut Fft3, u: &Field, params: &ModelParams) -> Result<EnergyBreakdown, CoreError> {
    Ok(components(fft, u, params)?.breakdown(params))
}

/// The Pohozaev functional `P(u)`; vanishes at constrained critical points.
pub fn pohozaev(fft: &mut Fft3, u: &Field, params: &ModelParams) -> Result<f64, CoreError> {
    let c = components(fft, u, params)?;
    Ok(c.breakdown(params).p_value)
}

/// Energy along the mass-preserving dilation `u_s = s^{3/2} u(s x)`,
/// evaluated algebraically from precomputed components.
#[derive(Debug, Clone, Copy)]
pub struct FiberMap {
    grad_sq: f64,
    b_pair: f64,
    lp_pow: f64,
    lambda3: f64,
    p: f64,
    dp: f64,
}

impl FiberMap {
    pub fn new(components: &FieldComponents, params: &ModelParams) -> Self {
        Self {
            grad_sq: components.grad_sq,
            b_pair: components.b_pair,
            lp_pow: components.lp_pow,
            lambda3: params.lambda3,
            p: params.p,
            dp: delta_p(params.p),
        }
    }

    /// `(Psi(s), Psi'(s))`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64), CoreError> {
        if !(s > 0.0) {
            return Err(CoreError::NonPositiveDilation { s });
        }
        let pd = self.p * self.dp;
        let psi = 0.5 * s * s * self.grad_sq
            + 0.5 * s * s * s * self.b_pair
            + 2.0 * self.lambda3 / self.p * s.powf(pd) * self.lp_pow;
        let dpsi = s * self.grad_sq
            + 1.5 * s * s * self.b_pair
            + 2.0 * self.lambda3 * self.dp * s.powf(pd - 1.0) * self.lp_pow;
        Ok((psi, dpsi))
    }
}

/// `(Psi_u(s), Psi_u'(s))` for a field.
pub fn fiber_map(
    fft: &mut Fft3,
    u: &Field,
    params: &ModelParams,
    s: f64,
) -> Result<(f64, f64), CoreError> {
    let c = components(fft, u, params)?;
    FiberMap::new(&c, params).eval(s)
}

/// Lagrange multiplier estimate at `u`.
pub fn multiplier_estimate(fft: &mut Fft3, u: &Field, params: &ModelParams) -> Result<f64, CoreError> {
    let c = components(fft, u, params)?;
    Ok(c.multiplier(params))
}

/// Euler-Lagrange residual field `R(u, mu)` (see the module docs for the
/// factor conventions).
pub fn el_residual(
    fft: &mut Fft3,
    u: &Field,
    mu: f64,
    params: &ModelParams,
) -> Result<Field, CoreError> {
    let ev = evaluate_at(fft, u, params, Some(mu))?;
    Ok(ev.residual)
}

/// A full evaluation at a field: components, multiplier, energy breakdown
/// and the residual field, sharing transforms.
pub struct Evaluation {
    pub components: FieldComponents,
    pub breakdown: EnergyBreakdown,
    pub mu: f64,
    pub residual: Field,
    /// `||R||_2`
    pub residual_l2: f64,
}

/// Evaluate everything at `u`; `mu_override` replaces the tangency
/// multiplier in the residual when given.
pub fn evaluate_at(
    fft: &mut Fft3,
    u: &Field,
    params: &ModelParams,
    mu_override: Option<f64>,
) -> Result<Evaluation, CoreError> {
    if u.grid() != fft.grid() {
        return Err(CoreError::GridMismatch);
    }
    let grid = u.grid();
    let freq_sq = fft.freq_sq();
    let pairing = fft.pairing_table(params.lambda1, params.lambda2);
    let factor = grid.cell_volume() / grid.len() as f64;

    // forward transform of u: gradient square and the Laplacian term
    let mut spec = u.values().to_vec();
    fft.forward(&mut spec);
    let grad_sq = factor
        * pairwise_map_sum(grid.len(), |flat| freq_sq[flat] * spec[flat].norm_sqr());
    let mut half_lap = spec;
    for (v, &k2) in half_lap.iter_mut().zip(freq_sq.iter()) {
        *v *= -0.5 * k2;
    }
    fft.inverse(&mut half_lap);

    // forward transform of the density: B(u) and the dipolar potential
    let mut rho = u.density();
    fft.forward(&mut rho);
    let b_pair =
        factor * pairwise_map_sum(grid.len(), |flat| pairing[flat] * rho[flat].norm_sqr());
    let mut phi = rho;
    crate::spectral::ops_apply_khat(&grid, &mut phi);
    fft.inverse(&mut phi);

    let comps = FieldComponents {
        mass_sq: u.integrate(|v| v.norm_sqr()),
        grad_sq,
        b_pair,
        lp_pow: u.integrate(|v| v.norm().powf(params.p)),
        l4_pow: u.integrate(|v| v.norm_sqr().powi(2)),
    };
    let mu = mu_override.unwrap_or_else(|| comps.multiplier(params));

    let vals = u.values();
    let pm2 = params.p - 2.0;
    let residual_values: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let v = vals[i];
            let dens = v.norm_sqr();
            let nonlocal = params.lambda2 * phi[i].re;
            -half_lap[i]
                + (params.lambda1 * dens + nonlocal + params.lambda3 * dens.powf(0.5 * pm2) + mu)
                    * v
        })
        .collect();
    let mut residual = Field::from_values(grid, residual_values)?;
    if u.is_purely_real() {
        residual.scrub_imaginary();
    }
    let residual_l2 = residual.mass();
    Ok(Evaluation {
        components: comps,
        breakdown: comps.breakdown(params),
        mu,
        residual,
        residual_l2,
    })
}
