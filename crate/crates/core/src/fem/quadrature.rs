//! Quadrature on the reference triangle `{(x, y) : x, y >= 0, x + y <= 1}`
//! and on the unit interval.

use crate::error::{Error, Result};

/// Highest polynomial degree a rule can be requested for.
pub const MAX_DEGREE: usize = 60;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Points in reference coordinates `(x, y)`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of point `q`.
    pub fn barycentric(&self, q: usize) -> [f64; 3] {
        let [x, y] = self.points[q];
        [1.0 - x - y, x, y]
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            let dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // recompute the derivative at the converged node
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n > 1 { n as f64 * (x * p1 - p0) / (x * x - 1.0) } else { 1.0 };
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn centroid_rule() -> QuadratureRule {
    QuadratureRule { points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5], degree: 1 }
}

fn three_point_rule() -> QuadratureRule {
    let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
    QuadratureRule { points: vec![[a, a], [b, a], [a, b]], weights: vec![1.0 / 6.0; 3], degree: 2 }
}

fn seven_point_rule() -> QuadratureRule {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 2400.0;
    let wb = (155.0 + s15) / 2400.0;
    QuadratureRule {
        points: vec![
            [1.0 / 3.0, 1.0 / 3.0],
            [a, a],
            [1.0 - 2.0 * a, a],
            [a, 1.0 - 2.0 * a],
            [b, b],
            [1.0 - 2.0 * b, b],
            [b, 1.0 - 2.0 * b],
        ],
        weights: vec![9.0 / 80.0, wa, wa, wa, wb, wb, wb],
        degree: 5,
    }
}

/// Conical product rule through the collapsed map
/// `(u, v) -> (u, v (1 - u))`.
fn collapsed_rule(degree: usize) -> QuadratureRule {
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            let v = x[j];
            points.push([u, v * (1.0 - u)]);
            weights.push(w[i] * w[j] * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, degree }
}

/// Rule with positive weights that integrates every polynomial of total
/// degree `<= degree` exactly on the reference triangle.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    match degree {
        0 => Err(Error::InvalidArgument("quadrature degree must be at least 1".into())),
        1 => Ok(centroid_rule()),
        2 => Ok(three_point_rule()),
        3..=5 => Ok(seven_point_rule()),
        d if d <= MAX_DEGREE => Ok(collapsed_rule(d)),
        d => Err(Error::Unsupported(format!("quadrature of degree {d}"))),
    }
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `<= degree`.
pub fn interval_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(degree / 2 + 1)
}
