//! Largest eigenvalue of a big symmetric matrix by Lanczos with full
//! reorthogonalization. The returned Ritz value is certified by its residual.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const START_SEED: u64 = 0x5eed_1a2c;
const CHECK_EVERY: usize = 4;

pub fn largest_eigenvalue_lanczos(s: &DMatrix<f64>, rel_tol: f64) -> Result<f64> {
    let n = s.nrows();
    if s.ncols() != n || n == 0 {
        return Err(Error::dim(format!("matrix is {}x{}, expected nonempty square", n, s.ncols())));
    }
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut q);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];

    for k in 0..n {
        matvec(s, &q, &mut w);
        let a = dot(&q, &w);
        basis.push(q.clone());
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let b_next = dot(&w, &w).sqrt();
        let exhausted = k + 1 == n || b_next <= 1e-14 * scale * (n as f64).sqrt();

        if exhausted || (k + 1) % CHECK_EVERY == 0 {
            let theta = tridiagonal_max_eigenvalue(&alpha, &beta);
            if exhausted {
                return Ok(theta);
            }
            let last = ritz_last_component(&alpha, &beta, theta);
            if (b_next * last).abs() <= rel_tol * theta.abs().max(scale) {
                return Ok(theta);
            }
        }
        beta.push(b_next);
        q.copy_from_slice(&w);
        for v in q.iter_mut() {
            *v /= b_next;
        }
    }
    unreachable!("Krylov space exhausted inside the loop")
}

fn matvec(s: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let n = s.nrows();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &xj) in x.iter().enumerate() {
        let col = s.column(j);
        for i in 0..n {
            out[i] += col[i] * xj;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - b2 / d;
        if d == 0.0 {
            d = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_max_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let radius = |i: usize| {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { beta[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..k).map(|i| alpha[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| alpha[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Last component of the unit eigenvector of the tridiagonal matrix for the
/// eigenvalue `theta`, by two steps of inverse iteration.
fn ritz_last_component(alpha: &[f64], beta: &[f64], theta: f64) -> f64 {
    let k = alpha.len();
    if k == 1 {
        return 1.0;
    }
    let scale = alpha.iter().chain(beta.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let shift = theta + 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut x = vec![1.0; k];
    for _ in 0..2 {
        x = solve_shifted_tridiagonal(alpha, &beta[..k - 1], shift, &x);
        normalize(&mut x);
    }
    x[k - 1]
}

/// Solves `(T − σI) x = b` by LU with partial pivoting.
fn solve_shifted_tridiagonal(alpha: &[f64], beta: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = alpha.len();
    let tiny = f64::EPSILON * alpha.iter().chain(beta).fold(1e-300f64, |m, v| m.max(v.abs()));
    let mut d: Vec<f64> = alpha.iter().map(|a| a - sigma).collect();
    let mut dl = beta.to_vec();
    let mut du = beta.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if swapped[i] {
            x.swap(i, i + 1);
        }
        x[i + 1] -= dl[i] * x[i];
    }
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}
