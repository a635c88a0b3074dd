//! Gauss–Legendre rules and the polar tensor grid.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point rule on `[-1, 1]` (Newton on `P_m`).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d != 0.0 { d } else { dp };
        let wgt = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = wgt;
        weights[m - 1 - i] = wgt;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite radial rule on `[0, outer]`: geometric panels halving toward 0
/// below `inner`, one panel on `[inner, outer]`, `m` points per panel.
pub fn radial_rule(inner: f64, outer: f64, m: usize, levels: usize) -> Vec<(f64, f64)> {
    let (x, wx) = gauss_legendre(m);
    let mut breaks = vec![0.0];
    let mut r = inner * 0.5f64.powi(levels as i32);
    for _ in 0..=levels {
        breaks.push(r);
        r *= 2.0;
    }
    breaks.push(outer);
    let mut out = Vec::with_capacity((breaks.len() - 1) * m);
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        for (xi, wi) in x.iter().zip(&wx) {
            out.push((lo + half * (xi + 1.0), half * wi));
        }
    }
    out
}
