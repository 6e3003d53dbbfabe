//! Small numerical utilities: deterministic reductions, bracketed root
//! finding, composite quadrature, an embedded Runge-Kutta pair and cubic
//! Hermite interpolation on uniform meshes.
//!
//! All reductions in the crate go through [`pairwise_sum`] so that results do
//! not depend on worker count or chunking decisions made elsewhere.

use crate::error::CoreError;

/// Pairwise (cascade) summation with a fixed traversal order.
///
/// Error grows like O(log n) in the number of terms instead of O(n) for the
/// naive left fold, and the result is bit-reproducible for a given slice.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const BASE: usize = 32;
    if x.len() <= BASE {
        let mut acc = 0.0;
        for &v in x {
            acc += v;
        }
        return acc;
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Pairwise summation of `f(i)` for `i in 0..n` without materializing the terms.
pub fn pairwise_map_sum<F: Fn(usize) -> f64 + Copy>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
        const BASE: usize = 32;
        if hi - lo <= BASE {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

/// Bracketed bisection for a continuous function with a sign change on `[lo, hi]`.
///
/// Converges unconditionally; `rel_tol` is measured against the bracket scale.
pub fn bisect<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64, CoreError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::BracketFailure { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Composite Simpson rule on a uniform mesh (odd interval count handled with
/// a trailing 3/8 panel). Needs at least 4 samples.
pub fn simpson_uniform(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    assert!(n >= 4, "simpson_uniform needs at least 4 samples");
    let intervals = n - 1;
    let (simpson_end, tail) = if intervals % 2 == 0 {
        (n - 1, 0.0)
    } else {
        // 3/8 rule on the last three intervals
        let m = n - 4;
        let t = 3.0 * h / 8.0 * (y[m] + 3.0 * y[m + 1] + 3.0 * y[m + 2] + y[m + 3]);
        (m, t)
    };
    let body = if simpson_end >= 2 {
        let weighted = pairwise_map_sum(simpson_end + 1, |i| {
            let w = if i == 0 || i == simpson_end {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * y[i]
        });
        h / 3.0 * weighted
    } else {
        0.0
    };
    body + tail
}

/// Least-squares straight line fit `y ~ slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx = pairwise_sum(x);
    let sy = pairwise_sum(y);
    let sxx = pairwise_map_sum(x.len(), |i| x[i] * x[i]);
    let sxy = pairwise_map_sum(x.len(), |i| x[i] * y[i]);
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// One accepted step of the integrator, with the derivative at both ends.
#[derive(Debug, Clone, Copy)]
pub struct OdeStep<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub dy0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
    pub dy1: [f64; N],
}

/// Whether to keep integrating after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeControl {
    Continue,
    Stop,
}

/// Adaptive Dormand-Prince 5(4) integration of `y' = f(t, y)` from `t0` to
/// `t_end`.
///
/// `on_step` sees every accepted step (with derivatives, so callers can build
/// dense output by cubic Hermite interpolation) and may stop the integration
/// early. Returns the final accepted `(t, y)`.
pub fn integrate_dp45<const N: usize, F, G>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    rtol: f64,
    atol: f64,
    h0: f64,
    mut on_step: G,
) -> (f64, [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: FnMut(&OdeStep<N>) -> OdeControl,
{
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // 4th-order weights (error estimator)
    const E1: f64 = 5179.0 / 57600.0;
    const E3: f64 = 7571.0 / 16695.0;
    const E4: f64 = 393.0 / 640.0;
    const E5: f64 = -92097.0 / 339200.0;
    const E6: f64 = 187.0 / 2100.0;
    const E7: f64 = 1.0 / 40.0;
    const C2: f64 = 1.0 / 5.0;
    const C3: f64 = 3.0 / 10.0;
    const C4: f64 = 4.0 / 5.0;
    const C5: f64 = 8.0 / 9.0;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = h0.min(t_end - t0).max(1e-300);

    let comb = |y: &[f64; N], parts: &[(f64, &[f64; N])], h: f64| -> [f64; N] {
        let mut out = *y;
        for (w, k) in parts {
            for i in 0..N {
                out[i] += h * w * k[i];
            }
        }
        out
    };

    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let y2 = comb(&y, &[(A21, &k1)], h);
        let k2 = f(t + C2 * h, &y2);
        let y3 = comb(&y, &[(A31, &k1), (A32, &k2)], h);
        let k3 = f(t + C3 * h, &y3);
        let y4 = comb(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h);
        let k4 = f(t + C4 * h, &y4);
        let y5 = comb(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h);
        let k5 = f(t + C5 * h, &y5);
        let y6 = comb(
            &y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        );
        let k6 = f(t + h, &y6);
        let ynew = comb(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &ynew);
        let ylow = comb(
            &y,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            h,
        );

        let mut err: f64 = 0.0;
        for i in 0..N {
            let scale = atol + rtol * ynew[i].abs().max(y[i].abs());
            let e = (ynew[i] - ylow[i]) / scale;
            err += e * e;
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let step = OdeStep {
                t0: t,
                y0: y,
                dy0: k1,
                t1: t + h,
                y1: ynew,
                dy1: k7,
            };
            t += h;
            y = ynew;
            k1 = k7; // FSAL
            if on_step(&step) == OdeControl::Stop {
                return (t, y);
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * t.abs().max(1.0) {
            // step underflow: give up and report where we are
            return (t, y);
        }
    }
    (t, y)
}

/// Cubic Hermite interpolant on a uniform mesh with prescribed derivatives.
///
/// Evaluates to 0 outside `[x0, x0 + h*(len-1)]`; radial profiles built on
/// top of this decay below truncation level before the boundary.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    pub x0: f64,
    pub h: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl CubicHermite {
    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_pair(x).0
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        self.eval_pair(x).1
    }

    /// (value, derivative) at `x`.
    pub fn eval_pair(&self, x: f64) -> (f64, f64) {
        hermite_eval_uniform(self.x0, self.h, &self.y, &self.dy, x)
    }
}

/// Cubic Hermite evaluation on a uniform mesh given values and derivatives;
/// (0, 0) outside the mesh.
pub fn hermite_eval_uniform(x0: f64, h: f64, y: &[f64], dy: &[f64], x: f64) -> (f64, f64) {
    let n = y.len();
    if x < x0 || n < 2 || x > x0 + h * (n - 1) as f64 {
        return (0.0, 0.0);
    }
    let s = (x - x0) / h;
    let mut i = s.floor() as usize;
    if i >= n - 1 {
        i = n - 2;
    }
    let t = s - i as f64;
    let (y0, y1) = (y[i], y[i + 1]);
    let (d0, d1) = (dy[i] * h, dy[i + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let dv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = x.iter().sum();
        assert_relative_eq!(pairwise_sum(&x), naive, max_relative = 1e-12);
        assert_relative_eq!(
            pairwise_map_sum(x.len(), |i| x[i]),
            pairwise_sum(&x),
            max_relative = 0.0
        );
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|t| t * t - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert_relative_eq!(r, 2.0_f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn bisect_rejects_signless_bracket() {
        assert!(bisect(|t| t * t + 1.0, 0.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        // x^3 on [0, 1] with both even and odd interval counts
        for n in [5usize, 8, 9, 101, 128] {
            let h = 1.0 / (n - 1) as f64;
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert_relative_eq!(simpson_uniform(&y, h), 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn dp45_solves_exponential_decay() {
        let (_, y) = integrate_dp45(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            5.0,
            1e-12,
            1e-14,
            0.1,
            |_| OdeControl::Continue,
        );
        assert_relative_eq!(y[0], (-5.0_f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let n = 11;
        let h = 0.3;
        let f = |x: f64| 1.0 + x - 0.5 * x * x + 0.125 * x * x * x;
        let df = |x: f64| 1.0 - x + 0.375 * x * x;
        let y: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
        let dy: Vec<f64> = (0..n).map(|i| df(i as f64 * h)).collect();
        let interp = CubicHermite { x0: 0.0, h, y, dy };
        for k in 0..50 {
            let x = 3.0 * k as f64 / 49.0;
            assert_relative_eq!(interp.eval(x), f(x), max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(interp.eval_deriv(x), df(x), max_relative = 1e-11, epsilon = 1e-11);
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.5 * v - 1.25).collect();
        let (m, b) = linear_fit(&x, &y);
        assert_relative_eq!(m, 3.5, max_relative = 1e-12);
        assert_relative_eq!(b, -1.25, max_relative = 1e-10);
    }
}
