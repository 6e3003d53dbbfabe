//! Problem instances and the closed-form well geometry.
//!
//! A [`ModelParams`] fixes the couplings `(lambda1, lambda2, lambda3)`, the
//! exponent `p` and the mass `c`.  From the two Gagliardo-Nirenberg constants
//! `C_p` and `C_4` (supplied by the [`crate::wp`] oracle) every constant of
//! the local-minimization construction follows in closed form: the scaling
//! exponent `delta_p`, the multiplier bound `Lambda`, the mass thresholds
//! `c_*` and `c^*`, the radii `t_bar_c < R_0 < (c/c_*) t_{c_*} < t_{c_*} <
//! t_c < R_1`, and the scalar-problem constants `kappa`, `beta_c`, `gamma_c`.
//!
//! The roots `R_0 < R_1` of the lower envelope
//!
//! ```text
//! h_c(t) = t^2/2 - (Lambda C_4^4 c / 2) t^3
//!          - (2 |lambda3| C_p^p c^{p(1-delta_p)} / p) t^{p delta_p}
//! ```
//!
//! delimit the barrier separating the well from the region where the energy
//! is unbounded below.  They are found by bisection on brackets that the
//! ordering above guarantees to contain exactly one sign change each.
//!
//! The pure scalar instance `lambda1 = lambda2 = 0` makes `Lambda = 0`; the
//! cubic term of `h_c` drops, `c_*`, `t_{c_*}`, `t_c` and `R_1` become
//! infinite and `R_0 = t_bar_c` exactly.  It is not a member of `D_0` (both
//! branches are strict), but the scalar problem is well posed for every mass,
//! so regime reports carry an explicit `scalar_case` flag and downstream
//! solvers accept it alongside `D_0`.

use crate::error::CoreError;
use crate::numeric::bisect;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Upper end of the admissible exponent range.
pub const P_MAX: f64 = 10.0 / 3.0;
/// Reject exponents within this distance of `10/3`: every derived constant
/// diverges as `p delta_p -> 2`.
pub const P_DEGENERACY_MARGIN: f64 = 1e-6;
/// Relative tolerance of the `R_0`, `R_1` bisections.
pub const ROOT_REL_TOL: f64 = 1e-12;

/// A problem instance: couplings, exponent and mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub p: f64,
    pub c: f64,
}

impl ModelParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, p: f64, c: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            lambda3,
            p,
            c,
        }
    }

    /// Same couplings and exponent, different mass.
    pub fn with_mass(&self, c: f64) -> Self {
        Self { c, ..*self }
    }

    /// True for the reduced scalar problem (no quartic, no dipolar term).
    pub fn is_scalar(&self) -> bool {
        self.lambda1 == 0.0 && self.lambda2 == 0.0
    }
}

/// `delta_p = 3(p-2)/(2p)`, the Gagliardo-Nirenberg interpolation exponent.
pub fn delta_p(p: f64) -> f64 {
    3.0 * (p - 2.0) / (2.0 * p)
}

/// Validate `2 < p < 10/3` with the degeneracy margin near the upper end.
pub fn check_exponent(p: f64) -> Result<(), CoreError> {
    if !(p > 2.0 && p < P_MAX) || !p.is_finite() {
        return Err(CoreError::ExponentOutOfRange {
            p,
            lo: 2.0,
            hi: P_MAX,
        });
    }
    if P_MAX - p < P_DEGENERACY_MARGIN {
        return Err(CoreError::ExponentDegenerate {
            p,
            margin: P_DEGENERACY_MARGIN,
        });
    }
    Ok(())
}

/// Multiplier bound `Lambda = max(|l1 - (4pi/3) l2|, |l1 + (8pi/3) l2|)`:
/// the supremum of `|l1 + l2 Khat(xi)|` over frequencies, normalized so that
/// `|B(u)| <= Lambda ||u||_4^4` holds for every field (the Plancherel pairing
/// carries the `(2 pi)^{-3}` that cancels against `||FT(|u|^2)||^2`, leaving
/// the bare multiplier supremum as the sharp constant; the bound and the
/// energy envelope `E >= h_c(||grad u||)` built on it are tested directly).
pub fn lambda_max(lambda1: f64, lambda2: f64) -> f64 {
    let lo = (lambda1 - 4.0 * PI / 3.0 * lambda2).abs();
    let hi = (lambda1 + 8.0 * PI / 3.0 * lambda2).abs();
    lo.max(hi)
}

/// Which branch of the unstable coupling region `D_0` an instance satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum D0Branch {
    /// `lambda1 < (4pi/3) lambda2 <= 0`
    First,
    /// `lambda1 < -(8pi/3) lambda2 <= 0`
    Second,
}

/// `D_0` membership test; `None` outside both branches.
pub fn d0_branch(lambda1: f64, lambda2: f64) -> Option<D0Branch> {
    let four = 4.0 * PI / 3.0 * lambda2;
    let eight = -8.0 * PI / 3.0 * lambda2;
    if lambda1 < four && four <= 0.0 {
        Some(D0Branch::First)
    } else if lambda1 < eight && eight <= 0.0 {
        Some(D0Branch::Second)
    } else {
        None
    }
}

/// Every derived constant of the well construction.
///
/// For `c > c_star` the barrier is empty and `r0`, `r1` are NaN; in the
/// scalar case `c_star`, `c_upper`, `t_cstar`, `t_c` and `r1` are infinite.
/// Non-finite entries serialize to JSON null.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WellGeometry {
    /// `3(p-2)/(2p)`
    pub delta_p: f64,
    /// Multiplier bound on `|B(u)| / ||u||_4^4`
    pub lambda_max: f64,
    /// Gagliardo-Nirenberg constant at the instance exponent
    pub c_p: f64,
    /// Gagliardo-Nirenberg constant at p = 4 (enters the cubic term of `h_c`)
    pub c_4: f64,
    /// Mass threshold below which the barrier region of `h_c` is nonempty
    pub c_star: f64,
    /// Larger auxiliary threshold below which `h_c` has two critical points
    pub c_upper: f64,
    /// Barrier radius at the threshold mass (independent of `c`)
    pub t_cstar: f64,
    /// Location of the maximum of `phi_c`
    pub t_c: f64,
    /// Zero of the cubic-free envelope `g_c`; lower bound for `R_0`
    pub t_bar_c: f64,
    /// Lower zero of `h_c` (the well radius)
    pub r0: f64,
    /// Upper zero of `h_c`
    pub r1: f64,
    /// Energy-scale constant of the scalar problem
    pub kappa: f64,
    /// Multiplier of the scalar problem at mass `c`
    pub beta_c: f64,
    /// Rescaling constant `beta_c / (1 - delta_p)`
    pub gamma_c: f64,
}

/// Scaling exponents of the vanishing-mass ratios.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingExponents {
    /// Exponent of `c` normalizing energy, `|B|`, gradient square and `||u||_p^p`
    pub energy: f64,
    /// Exponent of `c` normalizing the multiplier
    pub mu: f64,
    /// Decay rate of the normalized `|B|` ratio
    pub b_decay: f64,
}

/// `(6-p)/(2 - p delta_p)`, `2(p-2)/(2 - p delta_p)`, `4(4-p)/(10-3p)`.
pub fn scaling_exponents(p: f64) -> ScalingExponents {
    let two_m = 2.0 - p * delta_p(p);
    ScalingExponents {
        energy: (6.0 - p) / two_m,
        mu: 2.0 * (p - 2.0) / two_m,
        b_decay: 4.0 * (4.0 - p) / (10.0 - 3.0 * p),
    }
}

/// Fill [`WellGeometry`] from the instance and the two oracle constants.
///
/// Requires a valid exponent, `lambda3 < 0`, `c > 0` and positive constants;
/// does not require `c <= c_star` (the threshold check needs the geometry).
pub fn derive_geometry(params: &ModelParams, c_p: f64, c4: f64) -> Result<WellGeometry, CoreError> {
    check_exponent(params.p)?;
    if params.lambda3 >= 0.0 {
        return Err(CoreError::NonNegativeLambda3 {
            lambda3: params.lambda3,
        });
    }
    if !(params.c > 0.0) {
        return Err(CoreError::NonPositiveMass { c: params.c });
    }
    assert!(c_p > 0.0 && c4 > 0.0, "oracle constants must be positive");

    let p = params.p;
    let c = params.c;
    let l3 = params.lambda3.abs();
    let dp = delta_p(p);
    let two_m = 2.0 - p * dp; // = (10 - 3p)/2 > 0
    let three_m = 3.0 - p * dp;
    let lam = lambda_max(params.lambda1, params.lambda2);
    let cpp = c_p.powf(p);
    let c44 = c4.powi(4);

    let kappa = (10.0 - 3.0 * p) / (6.0 * (p - 2.0)) * (2.0 * dp * cpp * l3).powf(2.0 / two_m);
    let beta_c = (1.0 - dp)
        * (2.0 * dp).powf(p * dp / two_m)
        * (cpp * l3).powf(2.0 / two_m)
        * c.powf(2.0 * (p - 2.0) / two_m);
    let gamma_c = beta_c / (1.0 - dp);
    let t_bar_c = (4.0 * l3 * cpp * c.powf(p * (1.0 - dp)) / p).powf(1.0 / two_m);

    let (c_star, c_upper, t_cstar, t_c) = if lam == 0.0 {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        let c_star = (p / (4.0 * three_m * l3 * cpp)
            * (two_m / (three_m * lam * c44)).powf(two_m))
        .powf(1.0 / (2.0 * (4.0 - p)));
        let c_upper = (1.0 / (2.0 * l3 * dp * three_m * cpp)
            * (2.0 * two_m / (3.0 * three_m * lam * c44)).powf(two_m))
        .powf(1.0 / (2.0 * (4.0 - p)));
        let t_cstar = two_m / (three_m * lam * c44 * c_star);
        let t_c = two_m / (three_m * lam * c44 * c);
        (c_star, c_upper, t_cstar, t_c)
    };

    let mut geom = WellGeometry {
        delta_p: dp,
        lambda_max: lam,
        c_p,
        c_4: c4,
        c_star,
        c_upper,
        t_cstar,
        t_c,
        t_bar_c,
        r0: f64::NAN,
        r1: f64::NAN,
        kappa,
        beta_c,
        gamma_c,
    };
    if c <= c_star * (1.0 + ROOT_REL_TOL) {
        let (r0, r1) = well_radii(params, &geom)?;
        geom.r0 = r0;
        geom.r1 = r1;
    }
    Ok(geom)
}

/// Coefficients of `h_c(t) = t^2/2 - a3 t^3 - ap t^{p delta_p}`.
fn hc_coefficients(params: &ModelParams, geom: &WellGeometry) -> (f64, f64) {
    let p = params.p;
    let l3 = params.lambda3.abs();
    let a3 = geom.lambda_max * geom.c_4.powi(4) * params.c / 2.0;
    let ap = 2.0 * l3 * geom.c_p.powf(p) * params.c.powf(p * (1.0 - geom.delta_p)) / p;
    (a3, ap)
}

/// Lower envelope of the energy over `S_c` as a function of the gradient norm.
pub fn h_c(t: f64, params: &ModelParams, geom: &WellGeometry) -> f64 {
    debug_assert!(t >= 0.0);
    if t == 0.0 {
        return 0.0;
    }
    let (a3, ap) = hc_coefficients(params, geom);
    0.5 * t * t - a3 * t * t * t - ap * t.powf(params.p * geom.delta_p)
}

/// `d h_c / dt`.
pub fn h_c_prime(t: f64, params: &ModelParams, geom: &WellGeometry) -> f64 {
    let (a3, ap) = hc_coefficients(params, geom);
    let pd = params.p * geom.delta_p;
    t - 3.0 * a3 * t * t - ap * pd * t.powf(pd - 1.0)
}

/// Envelope without the cubic term; `g_c(t_bar_c) = 0` and `h_c <= g_c`.
pub fn g_c(t: f64, params: &ModelParams, geom: &WellGeometry) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let (_, ap) = hc_coefficients(params, geom);
    0.5 * t * t - ap * t.powf(params.p * geom.delta_p)
}

/// `phi_c(t) = t^{2-p dp}/2 - (Lambda C_4^4 c / 2) t^{3-p dp}`;
/// `h_c(t) > 0` iff `phi_c(t)` exceeds the p-power coefficient of `h_c`.
pub fn phi_c(t: f64, params: &ModelParams, geom: &WellGeometry) -> f64 {
    let (a3, _) = hc_coefficients(params, geom);
    let pd = params.p * geom.delta_p;
    0.5 * t.powf(2.0 - pd) - a3 * t.powf(3.0 - pd)
}

/// `psi_c(t) = t^{2-p dp} - (3 Lambda C_4^4 c / 2) t^{3-p dp}`;
/// critical points of `h_c` solve `psi_c(t) = 2 |lambda3| dp C_p^p c^{p(1-dp)}`.
pub fn psi_c(t: f64, params: &ModelParams, geom: &WellGeometry) -> f64 {
    let (a3, _) = hc_coefficients(params, geom);
    let pd = params.p * geom.delta_p;
    t.powf(2.0 - pd) - 3.0 * a3 * t.powf(3.0 - pd)
}

/// The two zeros `R_0 <= R_1` of `h_c`.
///
/// Brackets come from the proven ordering: `R_0` in `(t_bar_c, (c/c_*)
/// t_{c_*})` and `R_1` in `(t_c, T)` with `T` doubled until the sign flips.
/// At `c = c_star` both collapse onto `t_{c_*}`; in the scalar case the roots
/// are `(t_bar_c, +inf)` exactly.
pub fn well_radii(params: &ModelParams, geom: &WellGeometry) -> Result<(f64, f64), CoreError> {
    if geom.lambda_max == 0.0 {
        return Ok((geom.t_bar_c, f64::INFINITY));
    }
    let c = params.c;
    if c > geom.c_star * (1.0 + ROOT_REL_TOL) {
        return Err(CoreError::MassAboveThreshold {
            c,
            c_star: geom.c_star,
        });
    }
    if c >= geom.c_star * (1.0 - ROOT_REL_TOL) {
        return Ok((geom.t_cstar, geom.t_cstar));
    }
    let h = |t: f64| h_c(t, params, geom);
    let r0 = bisect(
        h,
        geom.t_bar_c,
        c / geom.c_star * geom.t_cstar,
        ROOT_REL_TOL,
        200,
    )?;
    let mut hi = 2.0 * geom.t_c;
    let mut doublings = 0;
    while h(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(CoreError::BracketFailure { lo: geom.t_c, hi });
        }
    }
    let r1 = bisect(h, geom.t_c, hi, ROOT_REL_TOL, 200)?;
    Ok((r0, r1))
}

/// One checked condition of a regime report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeCondition {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// Outcome of [`validate_regime`]: overall verdict plus per-condition detail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeReport {
    pub pass: bool,
    /// The reduced problem `lambda1 = lambda2 = 0`, accepted outside `D_0`.
    pub scalar_case: bool,
    pub d0: Option<D0Branch>,
    pub c_star: f64,
    pub conditions: Vec<RegimeCondition>,
}

/// Check every instance invariant plus the mass threshold `c <= c_star`.
///
/// Report-valued: never errors, each violated condition is listed.
pub fn validate_regime(params: &ModelParams, c_p: f64, c4: f64) -> RegimeReport {
    let mut conditions = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| {
        conditions.push(RegimeCondition {
            name: name.to_string(),
            ok,
            detail,
        });
        ok
    };

    let p_ok = push(
        "exponent in range",
        check_exponent(params.p).is_ok(),
        format!("p = {} must lie in (2, 10/3)", params.p),
    );
    let l3_ok = push(
        "lambda3 negative",
        params.lambda3 < 0.0,
        format!("lambda3 = {}", params.lambda3),
    );
    let c_ok = push(
        "mass positive",
        params.c > 0.0,
        format!("c = {}", params.c),
    );

    let branch = d0_branch(params.lambda1, params.lambda2);
    let scalar_case = params.is_scalar();
    push(
        "couplings in D0",
        branch.is_some() || scalar_case,
        match branch {
            Some(D0Branch::First) => "lambda1 < (4pi/3) lambda2 <= 0".to_string(),
            Some(D0Branch::Second) => "lambda1 < -(8pi/3) lambda2 <= 0".to_string(),
            None if scalar_case => "scalar case lambda1 = lambda2 = 0 (reduced problem)".to_string(),
            None => format!(
                "({}, {}) lies in neither branch",
                params.lambda1, params.lambda2
            ),
        },
    );

    let mut c_star = f64::NAN;
    if p_ok && l3_ok && c_ok {
        match derive_geometry(params, c_p, c4) {
            Ok(geom) => {
                c_star = geom.c_star;
                push(
                    "mass below threshold",
                    params.c <= c_star * (1.0 + ROOT_REL_TOL),
                    format!("mass above threshold: c = {} vs c* = {}", params.c, c_star),
                );
            }
            Err(e) => {
                push("mass below threshold", false, format!("geometry failed: {e}"));
            }
        }
    } else {
        push(
            "mass below threshold",
            false,
            "not evaluated: instance invariants already violated".to_string(),
        );
    }

    RegimeReport {
        pass: conditions.iter().all(|c| c.ok),
        scalar_case,
        d0: branch,
        c_star,
        conditions,
    }
}

/// Amplitude/length factors of the vanishing-mass rescaling
/// `v(x) = u(x / rate) / amp`, and the coupling `eps = amp^2 / rate^2`
/// multiplying `(lambda1, lambda2)` after the change of variables.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rescaling {
    pub amp: f64,
    pub rate: f64,
    pub eps: f64,
    /// Mass of the rescaled problem, `[p / (2 C_p^p)]^{1/(p-2)}` (the mass of
    /// the limit profile, independent of `c`)
    pub mass: f64,
    /// Attractive coupling of the rescaled problem, `-1/(p delta_p)`
    pub lambda3: f64,
}

/// Closed-form rescaling factors at the instance mass.
pub fn rescaling(params: &ModelParams, geom: &WellGeometry) -> Rescaling {
    let p = params.p;
    let dp = geom.delta_p;
    let l3 = params.lambda3.abs();
    let amp = (2.0 * geom.beta_c / (p * (1.0 - dp) * l3)).powf(1.0 / (p - 2.0));
    let rate = (2.0 * dp * geom.beta_c / (1.0 - dp)).sqrt();
    Rescaling {
        amp,
        rate,
        eps: amp * amp / (rate * rate),
        mass: (p / (2.0 * geom.c_p.powf(p))).powf(1.0 / (p - 2.0)),
        lambda3: -1.0 / (p * dp),
    }
}

/// Structural self-test of the geometry: critical-point count of `h_c` and
/// the peak margins of the auxiliary functions `phi_c`, `psi_c`.
#[derive(Debug, Clone, Serialize)]
pub struct AuxStructureReport {
    pub critical_points: usize,
    pub expected_critical_points: usize,
    /// `psi_c` peak over its critical-level right-hand side, minus one
    pub psi_peak_margin: f64,
    /// `phi_c` peak over its sign-level right-hand side, minus one
    pub phi_peak_margin: f64,
    pub local_min_t: Option<f64>,
    pub global_max_t: Option<f64>,
    pub min_before_max: Option<bool>,
    pub pass: bool,
}

/// Scan `h_c'` on a log grid and compare against the closed-form structure.
pub fn aux_structure_check(params: &ModelParams, geom: &WellGeometry) -> AuxStructureReport {
    let p = params.p;
    let dp = geom.delta_p;
    let two_m = 2.0 - p * dp;
    let three_m = 3.0 - p * dp;
    let l3 = params.lambda3.abs();
    let cpp = geom.c_p.powf(p);
    let cp16 = params.c.powf(p * (1.0 - dp));

    let scalar = geom.lambda_max == 0.0;
    let expected = if scalar { 1 } else { 2 };
    let t_hi = if scalar {
        50.0 * geom.t_bar_c
    } else {
        4.0 * geom.t_c
    };
    let t_lo = 1e-6 * geom.t_bar_c;

    // sign changes of a densely sampled derivative
    let samples = 40_000;
    let log_lo = t_lo.ln();
    let log_hi = t_hi.ln();
    let mut crossings: Vec<f64> = Vec::new();
    let mut prev_t = t_lo;
    let mut prev = h_c_prime(prev_t, params, geom);
    for i in 1..=samples {
        let t = (log_lo + (log_hi - log_lo) * i as f64 / samples as f64).exp();
        let val = h_c_prime(t, params, geom);
        if prev != 0.0 && val != 0.0 && prev.signum() != val.signum() {
            crossings.push(bisect(|s| h_c_prime(s, params, geom), prev_t, t, 1e-12, 200).unwrap_or(0.5 * (prev_t + t)));
        }
        prev_t = t;
        prev = val;
    }

    // peak levels of the auxiliary functions against their right-hand sides
    let psi_margin = if scalar {
        f64::INFINITY
    } else {
        let t_hat = 2.0 * two_m / (3.0 * three_m * geom.lambda_max * geom.c_4.powi(4) * params.c);
        let rhs = 2.0 * l3 * dp * cpp * cp16;
        psi_c(t_hat, params, geom) / rhs - 1.0
    };
    let phi_margin = if scalar {
        f64::INFINITY
    } else {
        let rhs = 2.0 * l3 * cpp * cp16 / p;
        phi_c(geom.t_c, params, geom) / rhs - 1.0
    };

    let (local_min_t, global_max_t) = if crossings.len() >= 2 {
        (Some(crossings[0]), Some(crossings[1]))
    } else if crossings.len() == 1 {
        (Some(crossings[0]), None)
    } else {
        (None, None)
    };
    let min_before_max = match (local_min_t, global_max_t) {
        (Some(a), Some(b)) => Some(a < b),
        _ => None,
    };

    let pass = crossings.len() == expected
        && (scalar || (psi_margin > 0.0 && phi_margin > 0.0))
        && min_before_max.unwrap_or(scalar);

    AuxStructureReport {
        critical_points: crossings.len(),
        expected_critical_points: expected,
        psi_peak_margin: psi_margin,
        phi_peak_margin: phi_margin,
        local_min_t,
        global_max_t,
        min_before_max,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Synthetic oracle constants: the root structure of h_c holds for any
    // positive values, so unit tests need not run the profile solver.
    const CP: f64 = 0.6;
    const C4: f64 = 0.55;

    fn dipolar(c_frac: f64) -> (ModelParams, WellGeometry) {
        let mut params = ModelParams::new(-1.0, -0.05, -1.0, 3.0, 1.0);
        let geom = derive_geometry(&params, CP, C4).unwrap();
        params.c = c_frac * geom.c_star;
        let geom = derive_geometry(&params, CP, C4).unwrap();
        (params, geom)
    }

    #[test]
    fn delta_p_examples() {
        assert_relative_eq!(delta_p(3.0), 0.5);
        // p delta_p -> 2 at the upper end
        assert_relative_eq!(P_MAX * delta_p(P_MAX), 2.0, max_relative = 1e-12);
        assert!(check_exponent(10.0 / 3.0 - 1e-9).is_err());
        assert!(check_exponent(2.0).is_err());
        assert!(check_exponent(3.0).is_ok());
    }

    #[test]
    fn kappa_vanishes_at_upper_exponent() {
        // the prefactor (10 - 3p) kills kappa as p delta_p -> 2 whenever the
        // bracket 2 delta_p C_p^p |l3| stays below one
        let mut last = f64::INFINITY;
        for p in [3.0, 3.2, 3.3, 10.0 / 3.0 - 1e-4] {
            let params = ModelParams::new(-1.0, 0.0, -1.0, p, 0.1);
            let geom = derive_geometry(&params, CP, C4).unwrap();
            assert!(geom.kappa < last, "kappa must decrease toward the upper exponent");
            last = geom.kappa;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn lambda_max_examples() {
        // both absolute values reduce to |lambda1| when lambda2 = 0
        assert_relative_eq!(lambda_max(-1.0, 0.0), 1.0, max_relative = 1e-15);
        assert_eq!(lambda_max(0.0, 0.0), 0.0);
        // generic instance: the larger of the two kernel endpoints
        assert_relative_eq!(
            lambda_max(-1.0, -0.05),
            1.0 + 8.0 * PI / 3.0 * 0.05,
            max_relative = 1e-14
        );
    }

    #[test]
    fn d0_membership_examples() {
        // lambda2 = 0 satisfies both branches (boundary case); first match wins
        assert_eq!(d0_branch(-1.0, 0.0), Some(D0Branch::First));
        assert_eq!(d0_branch(1.0, 1.0), None);
        assert_eq!(d0_branch(-1.0, -0.05), Some(D0Branch::First));
        // positive lambda2 can only satisfy the second branch
        assert_eq!(d0_branch(-2.0, 0.1), Some(D0Branch::Second));
        assert_eq!(d0_branch(-0.1, 0.1), None);
        assert_eq!(d0_branch(0.0, 0.0), None);
    }

    #[test]
    fn validate_passes_in_d0_and_fails_outside() {
        let params = ModelParams::new(-1.0, 0.0, -1.0, 3.0, 1e-3);
        let report = validate_regime(&params, CP, C4);
        assert!(report.pass, "{report:?}");

        let bad = ModelParams::new(1.0, 1.0, -1.0, 3.0, 1e-3);
        let report = validate_regime(&bad, CP, C4);
        assert!(!report.pass);
        assert!(report
            .conditions
            .iter()
            .any(|c| c.name == "couplings in D0" && !c.ok));
    }

    #[test]
    fn validate_flags_mass_above_threshold() {
        let (params, geom) = dipolar(0.5);
        let too_heavy = params.with_mass(2.0 * geom.c_star);
        let report = validate_regime(&too_heavy, CP, C4);
        assert!(!report.pass);
        let cond = report
            .conditions
            .iter()
            .find(|c| c.name == "mass below threshold")
            .unwrap();
        assert!(!cond.ok);
        assert!(cond.detail.contains("mass above threshold"));
    }

    #[test]
    fn scalar_case_is_flagged_and_degenerate() {
        let params = ModelParams::new(0.0, 0.0, -1.0, 3.0, 1.0);
        let report = validate_regime(&params, CP, C4);
        assert!(report.pass);
        assert!(report.scalar_case);
        let geom = derive_geometry(&params, CP, C4).unwrap();
        assert!(geom.c_star.is_infinite());
        assert!(geom.r1.is_infinite());
        assert_relative_eq!(geom.r0, geom.t_bar_c);
    }

    #[test]
    fn ordering_chain_holds_on_random_regime_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..1000 {
            let p = rng.gen_range(2.15..3.25);
            let l3 = -(10f64.powf(rng.gen_range(-1.5..0.5)));
            let l2 = -(10f64.powf(rng.gen_range(-3.0..0.0)));
            let l1 = -(10f64.powf(rng.gen_range(-2.0..0.5)));
            let cp = rng.gen_range(0.3..1.4);
            let c4 = rng.gen_range(0.3..1.4);
            let Some(_) = d0_branch(l1, l2) else { continue };
            let probe = ModelParams::new(l1, l2, l3, p, 1.0);
            let c_star = derive_geometry(&probe, cp, c4).unwrap().c_star;
            let c = rng.gen_range(0.05..0.95) * c_star;
            let params = ModelParams::new(l1, l2, l3, p, c);
            let geom = derive_geometry(&params, cp, c4).unwrap();

            let chain = [
                geom.t_bar_c,
                geom.r0,
                c / geom.c_star * geom.t_cstar,
                geom.t_cstar,
                geom.t_c,
                geom.r1,
            ];
            // strict ordering; adjacent gaps may be tiny (R0 approaches
            // t_bar_c when the cubic term is negligible) but never close
            for w in chain.windows(2) {
                assert!(
                    w[0] < w[1],
                    "ordering violated: {chain:?} for p={p} l3={l3} c/c*={}",
                    c / c_star
                );
            }
            assert!(chain[0] > 0.0);
            assert!(geom.c_star < geom.c_upper);
            // root residuals
            assert!(h_c(geom.r0, &params, &geom).abs() < 1e-9 * geom.r0 * geom.r0);
            assert!(h_c(geom.r1, &params, &geom).abs() < 1e-9 * geom.r1 * geom.r1);
        }
    }

    #[test]
    fn roots_collapse_at_threshold_mass() {
        let (params, geom) = dipolar(1.0);
        assert_relative_eq!(params.c, geom.c_star, max_relative = 1e-14);
        assert_relative_eq!(geom.r0, geom.t_cstar, max_relative = 1e-10);
        assert_relative_eq!(geom.r1, geom.t_cstar, max_relative = 1e-10);
        // h_c at the collapsed root sits at the zero level
        assert!(h_c(geom.t_cstar, &params, &geom).abs() < 1e-10 * geom.t_cstar.powi(2));
    }

    #[test]
    fn hc_sign_pattern_negative_positive_negative() {
        let (params, geom) = dipolar(0.5);
        // dense scan: negative on (0, R0), positive on (R0, R1), negative beyond
        for i in 1..400 {
            let t = geom.r0 * i as f64 / 400.0;
            assert!(h_c(t, &params, &geom) < 0.0, "t={t}");
        }
        for i in 1..400 {
            let t = geom.r0 + (geom.r1 - geom.r0) * i as f64 / 401.0;
            assert!(h_c(t, &params, &geom) > 0.0, "t={t}");
        }
        for i in 1..100 {
            let t = geom.r1 * (1.0 + i as f64 / 10.0);
            assert!(h_c(t, &params, &geom) < 0.0, "t={t}");
        }
        assert_eq!(h_c(0.0, &params, &geom), 0.0);
    }

    #[test]
    fn hc_bounded_by_envelope_without_cubic_term() {
        let (params, geom) = dipolar(0.4);
        for i in 0..2000 {
            let t = geom.r1 * 2.0 * i as f64 / 1999.0;
            assert!(h_c(t, &params, &geom) <= g_c(t, &params, &geom) + 1e-14);
        }
        // g_c vanishes exactly at t_bar_c
        assert!(g_c(geom.t_bar_c, &params, &geom).abs() < 1e-12 * geom.t_bar_c.powi(2));
    }

    #[test]
    fn well_radii_rejects_mass_above_threshold() {
        let (params, geom) = dipolar(0.5);
        let heavy = params.with_mass(1.5 * geom.c_star);
        let heavy_geom = derive_geometry(&heavy, CP, C4).unwrap();
        assert!(heavy_geom.r0.is_nan());
        assert!(matches!(
            well_radii(&heavy, &heavy_geom),
            Err(CoreError::MassAboveThreshold { .. })
        ));
    }

    #[test]
    fn r0_shrinks_as_lambda3_vanishes() {
        let (params, _) = dipolar(0.5);
        let mut last = f64::INFINITY;
        for l3 in [-1.0, -0.5, -0.25, -0.1] {
            let p = ModelParams { lambda3: l3, ..params };
            let geom = derive_geometry(&p, CP, C4).unwrap();
            assert!(geom.r0 < last, "R0 must shrink with |lambda3|");
            last = geom.r0;
        }
        // and the threshold mass grows
        let loose = ModelParams {
            lambda3: -0.5,
            ..params
        };
        let tight_geom = derive_geometry(&params, CP, C4).unwrap();
        let loose_geom = derive_geometry(&loose, CP, C4).unwrap();
        assert!(loose_geom.c_star > tight_geom.c_star);
    }

    #[test]
    fn multiplier_constants_are_consistent() {
        let (params, geom) = dipolar(0.7);
        assert_relative_eq!(
            geom.beta_c,
            (1.0 - geom.delta_p) * geom.gamma_c,
            max_relative = 1e-15
        );
        assert!(geom.kappa > 0.0 && geom.beta_c > 0.0);
        // beta_c coincides with the mu-ratio target of the scalar problem
        let exps = scaling_exponents(params.p);
        let target = params.p * (1.0 - geom.delta_p) / (2.0 - params.p * geom.delta_p) * geom.kappa;
        assert_relative_eq!(
            geom.beta_c,
            target * params.c.powf(exps.mu),
            max_relative = 1e-12
        );
    }

    #[test]
    fn structure_check_counts_critical_points() {
        let (params, geom) = dipolar(0.5);
        let report = aux_structure_check(&params, &geom);
        assert_eq!(report.critical_points, 2, "{report:?}");
        assert!(report.pass);
        assert!(report.min_before_max.unwrap());

        // slightly above the auxiliary threshold: the two critical points merge away
        let heavy = params.with_mass(1.02 * geom.c_upper);
        let heavy_geom = derive_geometry(&heavy, CP, C4).unwrap();
        let report = aux_structure_check(&heavy, &heavy_geom);
        assert!(report.critical_points < 2, "{report:?}");
        assert!(report.psi_peak_margin < 0.0);
    }

    #[test]
    fn structure_check_quarter_mass() {
        let (params, geom) = dipolar(0.25);
        let report = aux_structure_check(&params, &geom);
        assert!(report.pass);
        assert!(report.local_min_t.unwrap() < report.global_max_t.unwrap());
    }

    #[test]
    fn rescaled_instance_reduces_to_limit_profile_scales() {
        let (params, geom) = dipolar(0.5);
        let rs = rescaling(&params, &geom);
        assert!(rs.eps > 0.0);
        assert_relative_eq!(rs.lambda3, -1.0 / (params.p * geom.delta_p));
        // the rescaled scalar instance has unit amplitude and rate
        let scalar = ModelParams::new(0.0, 0.0, rs.lambda3, params.p, rs.mass);
        let sg = derive_geometry(&scalar, CP, C4).unwrap();
        let srs = rescaling(&scalar, &sg);
        assert_relative_eq!(srs.amp, 1.0, max_relative = 1e-12);
        assert_relative_eq!(srs.rate, 1.0, max_relative = 1e-12);
        assert_relative_eq!(sg.beta_c, (1.0 - sg.delta_p) / (2.0 * sg.delta_p), max_relative = 1e-12);
    }
}
