//! Chebyshev acceleration of a preconditioned fixed-point iteration and
//! the power-iteration eigenvalue estimate that drives it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dot, norm2};

pub const POWER_ITERATION_SEED: u64 = 0x5EED;
pub const POWER_ITERATIONS: usize = 10;

/// Weight used when no usable eigenvalue estimate is available.
pub const FALLBACK_WEIGHT: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaEstimate {
    pub value: f64,
    /// Set when the operator mapped the iterate to zero.
    pub degenerate: bool,
}

/// Estimates the largest eigenvalue magnitude of `apply_mk` by power
/// iteration from a fixed-seed random start vector. The result is the
/// magnitude of the final Rayleigh quotient.
pub fn estimate_lambda_max(
    mut apply_mk: impl FnMut(&[f64], &mut [f64]),
    n: usize,
    iters: usize,
) -> LambdaEstimate {
    assert!(n >= 1, "power iteration needs a non-empty space");
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut rq = 0.0;
    for _ in 0..iters.max(1) {
        apply_mk(&x, &mut y);
        let ny = norm2(&y);
        if ny == 0.0 || !ny.is_finite() {
            return LambdaEstimate { value: 0.0, degenerate: true };
        }
        rq = dot(&x, &y) / dot(&x, &x);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    LambdaEstimate { value: rq.abs(), degenerate: false }
}

/// Target interval `[lower * lambda_max, upper * lambda_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevBounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ChebyshevBounds {
    fn default() -> Self {
        ChebyshevBounds { lower: 0.3, upper: 1.1 }
    }
}

/// Runs `nu` Chebyshev steps on `K x = b` preconditioned by `M^{-1}`,
/// updating `x` in place.
///
/// With `nu = 1` this is one Richardson step with weight
/// `2 / ((lower + upper) * lambda_max)`. A non-positive `lambda_max`
/// falls back to plain Richardson with [`FALLBACK_WEIGHT`].
#[allow(clippy::too_many_arguments)]
pub fn chebyshev(
    mut apply_k: impl FnMut(&[f64], &mut [f64]),
    mut apply_minv: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    nu: usize,
    lambda_max: f64,
    bounds: ChebyshevBounds,
    x_is_zero: bool,
) {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut residual = |x: &[f64], r: &mut [f64], skip: bool| {
        if skip {
            r.copy_from_slice(b);
        } else {
            apply_k(x, r);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
        }
    };

    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        for step in 0..nu {
            residual(x, &mut r, x_is_zero && step == 0);
            apply_minv(&r, &mut z);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += FALLBACK_WEIGHT * zi;
            }
        }
        return;
    }

    let a = bounds.lower * lambda_max;
    let bb = bounds.upper * lambda_max;
    let theta = 0.5 * (bb + a);
    let delta = 0.5 * (bb - a);

    if delta <= 0.0 {
        for step in 0..nu {
            residual(x, &mut r, x_is_zero && step == 0);
            apply_minv(&r, &mut z);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += zi / theta;
            }
        }
        return;
    }

    let sigma = theta / delta;
    let mut rho_old = 1.0 / sigma;
    let mut d = vec![0.0; n];
    for step in 0..nu {
        residual(x, &mut r, x_is_zero && step == 0);
        apply_minv(&r, &mut z);
        if step == 0 {
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = zi / theta;
            }
        } else {
            let rho = 1.0 / (2.0 * sigma - rho_old);
            let (c1, c2) = (rho * rho_old, 2.0 * rho / delta);
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = c1 * *di + c2 * zi;
            }
            rho_old = rho;
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
    }
}
