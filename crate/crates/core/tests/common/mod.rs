//! Deterministic quadrature references, independent of the crate's estimators.
#![allow(dead_code)]

use std::f64::consts::{LN_2, PI};

/// Gauss-Hermite nodes and weights for weight `exp(-x^2)`, by Newton
/// iteration on the orthonormal recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[f(X, Y)]` for i.i.d. `X, Y ~ N(0, var)` on a tensor Gauss-Hermite grid.
pub fn gh_expect_2d(n: usize, var: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s = (2.0 * var).sqrt();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += w[i] * w[j] * f(s * x[i], s * x[j]);
        }
    }
    acc / PI
}

/// Coherent AMI of equiprobable `points` with noise variance `sigma_sq` per component.
pub fn coherent_capacity_gh(points: &[(f64, f64)], sigma_sq: f64, nodes: usize) -> f64 {
    let m = points.len() as f64;
    let mut loss = 0.0;
    for &(sr, si) in points {
        loss += gh_expect_2d(nodes, sigma_sq, |nr, ni| {
            let base = nr * nr + ni * ni;
            let exps: Vec<f64> = points
                .iter()
                .map(|&(tr, ti)| {
                    let (dr, di) = (sr + nr - tr, si + ni - ti);
                    (base - dr * dr - di * di) / (2.0 * sigma_sq)
                })
                .collect();
            let mx = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (mx + exps.iter().map(|e| (e - mx).exp()).sum::<f64>().ln()) / LN_2
        });
    }
    m.log2() - loss / m
}

/// BPSK `+-a` AMI in one real dimension, noise variance `var`.
pub fn bpsk_capacity_gh(a: f64, var: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let s = (2.0 * var).sqrt();
    let mut e = 0.0;
    for i in 0..nodes {
        let n = s * x[i];
        let t = -2.0 * a * (a + n) / var;
        let softplus = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        e += w[i] * softplus / LN_2;
    }
    1.0 - e / PI.sqrt()
}

/// `e^{-x} I0(x)` from `(1/pi) int_0^pi e^{x (cos t - 1)} dt`, trapezoid rule.
pub fn i0_scaled(x: f64) -> f64 {
    let n = 2048;
    let h = PI / n as f64;
    let mut acc = 0.5 * (1.0 + (-2.0 * x).exp());
    for k in 1..n {
        acc += (x * ((k as f64 * h).cos() - 1.0)).exp();
    }
    acc * h / PI
}

/// Information carried by a uniform continuous phase on amplitude `a`:
/// `a^2 / (sigma^2 ln 2) - E[ln I0(a rho / sigma^2)] / ln 2` with `rho` Rician.
pub fn wyner_phase_info(a: f64, sigma_sq: f64) -> f64 {
    let sd = sigma_sq.sqrt();
    let hi = a + 14.0 * sd;
    let n = 20_000;
    let h = hi / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let rho = k as f64 * h;
        let x = a * rho / sigma_sq;
        let ie = i0_scaled(x);
        let density = rho / sigma_sq * (-(rho - a).powi(2) / (2.0 * sigma_sq)).exp() * ie;
        let ln_i0 = x + ie.ln();
        let wt = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += wt * density * ln_i0;
    }
    let e_ln_i0 = acc * h / 3.0;
    (a * a / sigma_sq - e_ln_i0) / LN_2
}
