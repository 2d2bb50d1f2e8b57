//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver paths of `cfran_core::map_engine`: the
//! combining oracle goes through an eigen-decomposition and the fusion oracle
//! is a derivative-free search over weight directions.

#![allow(dead_code)]

use cfran_core::channel::complex_normal;
use cfran_core::{Complex64, DMatrix, DVector};
use nalgebra::SymmetricEigen;
use rand::Rng;

pub fn random_channel<R: Rng>(rng: &mut R, rows: usize, users: usize) -> DMatrix<Complex64> {
    let scales: Vec<f64> = (0..users).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect();
    DMatrix::from_fn(rows, users, |_, c| complex_normal(rng) * scales[c])
}

/// Interference-plus-noise covariance built entry by entry.
pub fn interference_covariance(h: &DMatrix<Complex64>, p: f64, s2: f64, k: usize) -> DMatrix<Complex64> {
    let n = h.nrows();
    DMatrix::from_fn(n, n, |r, c| {
        let mut acc = Complex64::new(if r == c { s2 } else { 0.0 }, 0.0);
        for i in (0..h.ncols()).filter(|&i| i != k) {
            acc += h[(r, i)] * h[(c, i)].conj() * p;
        }
        acc
    })
}

/// Largest generalized Rayleigh quotient `max_v p|v^H h_k|^2 / v^H Psi v`,
/// as the top eigenvalue of `p Psi^{-1/2} h_k h_k^H Psi^{-1/2}`.
pub fn max_rayleigh_quotient(h: &DMatrix<Complex64>, p: f64, s2: f64, k: usize) -> f64 {
    let psi = interference_covariance(h, p, s2, k);
    let eig = SymmetricEigen::new(psi);
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.powf(-0.5), 0.0)));
    let psi_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let u = &psi_inv_sqrt * h.column(k);
    let m = &u * u.adjoint() * Complex64::new(p, 0.0);
    SymmetricEigen::new(m).eigenvalues.max()
}

/// `p |w^H a|^2 / (w^H F w)`.
pub fn quotient(w: &DVector<Complex64>, a: &DVector<Complex64>, f: &DMatrix<Complex64>, p: f64) -> f64 {
    let num = (w.adjoint() * a)[(0, 0)].norm_sqr() * p;
    let den = (w.adjoint() * f * w)[(0, 0)].re;
    num / den
}

// Unit vector modulo common phase, from J-1 magnitude angles and J-1 phases.
fn direction(params: &[f64], j: usize) -> DVector<Complex64> {
    let (mag, phase) = params.split_at(j - 1);
    let mut w = DVector::<Complex64>::zeros(j);
    let mut rest = 1.0;
    for idx in 0..j {
        let r = if idx + 1 < j { rest * mag[idx].cos() } else { rest };
        if idx + 1 < j {
            rest *= mag[idx].sin();
        }
        let theta = if idx == 0 { 0.0 } else { phase[idx - 1] };
        w[idx] = Complex64::from_polar(r, theta);
    }
    w
}

/// Brute-force maximum of the fusion quotient: exhaustive coarse grid over
/// hyperspherical weight directions, then a shrinking full 3^d local grid
/// around the incumbent until the step drops below `min_step`.
pub fn brute_force_fusion(a: &DVector<Complex64>, f: &DMatrix<Complex64>, p: f64, min_step: f64) -> f64 {
    let j = a.len();
    if j == 1 {
        return p * a[0].norm_sqr() / f[(0, 0)].re;
    }
    let dims = 2 * (j - 1);
    let eval = |x: &[f64]| quotient(&direction(x, j), a, f, p);

    let n_mag = 7;
    let n_phase = 8;
    let axis = |d: usize, i: usize| {
        if d < j - 1 {
            std::f64::consts::FRAC_PI_2 * i as f64 / (n_mag - 1) as f64
        } else {
            std::f64::consts::TAU * i as f64 / n_phase as f64
        }
    };
    let counts: Vec<usize> = (0..dims).map(|d| if d < j - 1 { n_mag } else { n_phase }).collect();
    let total: usize = counts.iter().product();
    let mut best = vec![0.0; dims];
    let mut best_val = f64::NEG_INFINITY;
    let mut x = vec![0.0; dims];
    for mut code in 0..total {
        for d in 0..dims {
            x[d] = axis(d, code % counts[d]);
            code /= counts[d];
        }
        let v = eval(&x);
        if v > best_val {
            best_val = v;
            best.copy_from_slice(&x);
        }
    }

    let mut step = std::f64::consts::FRAC_PI_2 / (n_mag - 1) as f64;
    let neighbours = 3usize.pow(dims as u32);
    while step > min_step {
        let center = best.clone();
        let mut moved = false;
        for mut code in 0..neighbours {
            for d in 0..dims {
                x[d] = center[d] + step * ((code % 3) as f64 - 1.0);
                code /= 3;
            }
            let v = eval(&x);
            if v > best_val {
                best_val = v;
                best.copy_from_slice(&x);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best_val
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `a <= b` up to `tol` relative.
pub fn le_rel(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * a.abs().max(b.abs())
}
