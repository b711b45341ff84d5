//! Small numerical kernels shared across the crate: Gauss-Legendre rules,
//! least-squares line fits, and a power-iteration spectral norm.

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on the Legendre recurrence from Chebyshev initial
/// guesses; exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre integral of f over [a, b] with an n-point rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Least-squares (slope, intercept) of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Spectral norm of a 4x4 matrix by power iteration on M^T M. The start
/// vector is fixed and generic, so the result is deterministic.
pub fn spectral_norm4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                s += m[k][i] * m[k][j];
            }
            a[i][j] = s;
        }
    }
    let mut v = [1.0f64, 0.9, 0.8, 0.7];
    let mut lambda = 0.0f64;
    for _ in 0..300 {
        let mut w = [0.0f64; 4];
        for i in 0..4 {
            for j in 0..4 {
                w[i] += a[i][j] * v[j];
            }
        }
        let norm = (w.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for i in 0..4 {
            v[i] = w[i] / norm;
        }
        lambda = norm;
    }
    lambda.sqrt()
}

/// Refine an integral by doubling panels until two successive composite
/// Gauss-Legendre values agree within tol.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut panels = 1usize;
    let mut prev = integrate(f, a, b, 32);
    for _ in 0..12 {
        panels *= 2;
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            total += integrate(f, a + p as f64 * h, a + (p + 1) as f64 * h, 32);
        }
        if (total - prev).abs() <= tol * (1.0 + total.abs()) {
            return Ok(total);
        }
        prev = total;
    }
    Err(Error::Quadrature(format!(
        "integral failed to converge to {tol} over [{a}, {b}]"
    )))
}
