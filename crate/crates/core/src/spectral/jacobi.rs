use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-12;
const SYM_TOL: f64 = 1e-10;

/// Eigenpairs of a real symmetric matrix. `vectors` holds one eigenvector
/// per column, in the same (unsorted) order as `values`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for q in 0..n {
        for p in 0..n {
            if p != q {
                sum += a[(p, q)] * a[(p, q)];
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass drops below
/// `1e-12·‖S‖_F`.
pub fn symmetric_eigen(s: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::dim(format!("matrix is {}x{}, expected square", n, s.ncols())));
    }
    let mut asym: f64 = 0.0;
    for q in 0..n {
        for p in (q + 1)..n {
            asym = asym.max((s[(p, q)] - s[(q, p)]).abs());
        }
    }
    if asym >= SYM_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }

    let mut a = s.clone();
    let mut v = DMatrix::identity(n, n);
    let target = OFF_TOL * s.norm();

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence(format!(
                "Jacobi iteration exceeded {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                off_diagonal_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
    }

    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok(SymmetricEigen { values, vectors: v })
}

fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eig_oracle(s: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut values = symmetric_eigen(s)?.values;
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}
