//! Spectra of circulant and reversed-circulant matrices.
//!
//! A real circulant `circ(a)` is diagonalized by the unitary DFT matrix with
//! eigenvalues `λ_m = Σ_k a_k e^{−2πjmk/N}`. Reversing its rows gives the
//! symmetric matrix `R = T_N circ(a)`, whose eigenvalues are
//! `λ_0`, `±|λ_m|` for `0 < m < N/2`, and `−λ_{N/2}` when `N` is even.

mod jacobi;
mod lanczos;

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lifting::CirculantSpec;

pub use jacobi::{symmetric_eig_oracle, symmetric_eigen, SymmetricEigen};
pub use lanczos::largest_eigenvalue_lanczos;

/// Largest batch length for which [`reset_based_gain`] runs the dense Jacobi
/// oracle; above it a Lanczos iteration is used.
pub const JACOBI_MAX_DIM: usize = 256;

/// `T_N v`: `out[l] = v[N−1−l]`.
pub fn time_reverse(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// The anti-diagonal permutation `T_N`.
pub fn time_reversal_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |p, q| if p + q + 1 == n { 1.0 } else { 0.0 })
}

/// `e^{−2πj r/N}` for `r = 0..N`.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64))
        .collect()
}

/// Unitary DFT matrix, entries `W_N^{pq}/√N` with `W_N = e^{−2πj/N}`.
#[derive(Debug, Clone)]
pub struct DftMatrix {
    entries: DMatrix<Complex64>,
}

impl DftMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("DFT size must be at least 1"));
        }
        let tw = twiddles(n);
        let scale = 1.0 / (n as f64).sqrt();
        let entries = DMatrix::from_fn(n, n, |p, q| tw[(p * q) % n] * scale);
        Ok(DftMatrix { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// `max(‖F*F − I‖_max, ‖FF* − I‖_max)`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.size();
        let id = DMatrix::<Complex64>::identity(n, n);
        let adj = self.entries.adjoint();
        let r1 = (&adj * &self.entries - &id).map(|z| z.norm()).max();
        let r2 = (&self.entries * &adj - &id).map(|z| z.norm()).max();
        r1.max(r2)
    }
}

/// Eigenvalues `λ_0 … λ_{N−1}` of a circulant, in DFT-bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpectrum {
    values: Vec<Complex64>,
}

impl CirculantSpectrum {
    pub fn new(values: Vec<Complex64>) -> Self {
        CirculantSpectrum { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(m, |λ_m|)` with the largest magnitude; ties go to the smallest `m`.
    pub fn max_magnitude(&self) -> (usize, f64) {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (m, z)| {
                if z.norm() > best.1 {
                    (m, z.norm())
                } else {
                    best
                }
            })
    }

    /// `max_m |λ_{N−m} − conj(λ_m)|`; zero for exact real coefficients.
    pub fn conjugate_symmetry_residual(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|m| (self.values[(n - m) % n] - self.values[m].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// `λ_m = Σ_k a_k e^{−2πjmk/N}` by direct summation.
pub fn circulant_eigenvalues(spec: &CirculantSpec) -> CirculantSpectrum {
    let a = spec.coeffs();
    let n = a.len();
    let tw = twiddles(n);
    let values = (0..n)
        .map(|m| {
            a.iter()
                .enumerate()
                .map(|(k, &ak)| tw[(m * k) % n] * ak)
                .sum()
        })
        .collect();
    CirculantSpectrum { values }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizationResidual {
    /// Largest off-diagonal magnitude of `F* M F`.
    pub max_off_diag: f64,
    pub diag: Vec<Complex64>,
}

/// Transforms `M` into the Fourier basis, `F* M F`.
pub fn diagonalization_residual(m: &DMatrix<f64>, dft: &DftMatrix) -> Result<DiagonalizationResidual> {
    let n = dft.size();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::dim(format!("matrix is {}x{}, DFT is {n}x{n}", m.nrows(), m.ncols())));
    }
    let mc = m.map(|v| Complex64::new(v, 0.0));
    let t = dft.matrix().adjoint() * (mc * dft.matrix());
    let mut max_off_diag: f64 = 0.0;
    for q in 0..n {
        for p in 0..n {
            if p != q {
                max_off_diag = max_off_diag.max(t[(p, q)].norm());
            }
        }
    }
    let diag = t.diagonal().iter().copied().collect();
    Ok(DiagonalizationResidual { max_off_diag, diag })
}

fn max_asymmetry(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut worst: f64 = 0.0;
    for q in 0..n {
        for p in (q + 1)..n {
            worst = worst.max((s[(p, q)] - s[(q, p)]).abs());
        }
    }
    worst
}

/// `R = T_N circ(a)`, built by reversing the row order of `circ(a)`.
pub fn reversed_circulant(spec: &CirculantSpec) -> Result<DMatrix<f64>> {
    let circ = spec.matrix();
    let n = circ.nrows();
    let r = DMatrix::from_fn(n, n, |p, q| circ[(n - 1 - p, q)]);
    let asym = max_asymmetry(&r);
    if asym != 0.0 {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    Ok(r)
}

/// Eigenvalues of `T_N circ(a)` indexed like the underlying `λ_m`, not sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversedSpectrum {
    values: Vec<f64>,
}

impl ReversedSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(m, λᵀ_m)` for the largest eigenvalue; ties go to the smallest `m`.
    pub fn max(&self) -> (usize, f64) {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (m, &v)| if v > best.1 { (m, v) } else { best })
    }

    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// Maps `λ_m` to the eigenvalues of the reversed circulant. `λ_0` (and
/// `λ_{N/2}` for even `N`) must be real up to `1e-10·(1 + max|λ|)`, and the
/// spectrum conjugate-symmetric to the same tolerance.
pub fn reversed_spectrum(spectrum: &CirculantSpectrum) -> Result<ReversedSpectrum> {
    let lam = spectrum.values();
    let n = lam.len();
    if n == 0 {
        return Err(Error::invalid("empty spectrum"));
    }
    let tol = 1e-10 * (1.0 + spectrum.max_magnitude().1);
    if lam[0].im.abs() > tol {
        return Err(Error::NotRealSpectrum(format!("lambda_0 has imaginary part {:e}", lam[0].im)));
    }
    if n.is_multiple_of(2) && lam[n / 2].im.abs() > tol {
        return Err(Error::NotRealSpectrum(format!("lambda_N/2 has imaginary part {:e}", lam[n / 2].im)));
    }
    let asym = spectrum.conjugate_symmetry_residual();
    if asym > tol {
        return Err(Error::NotRealSpectrum(format!("conjugate symmetry violated by {asym:e}")));
    }

    let mut values = vec![0.0; n];
    values[0] = lam[0].re;
    for m in 1..n.div_ceil(2) {
        let mag = lam[m].norm();
        values[m] = mag;
        values[n - m] = -mag;
    }
    if n.is_multiple_of(2) && n > 1 {
        values[n / 2] = -lam[n / 2].re;
    }
    Ok(ReversedSpectrum { values })
}

/// `‖J‖_{i2}` as the largest eigenvalue of the symmetric matrix `T_N J`,
/// computed with the Jacobi oracle.
pub fn max_gain_reset_based(j: &DMatrix<f64>) -> Result<f64> {
    let s = reversed_rows(j)?;
    let eig = symmetric_eig_oracle(&s)?;
    Ok(eig[0])
}

/// Same quantity as [`max_gain_reset_based`], switching to Lanczos above
/// [`JACOBI_MAX_DIM`] so long batches stay tractable.
pub fn reset_based_gain(j: &DMatrix<f64>) -> Result<f64> {
    if j.nrows() <= JACOBI_MAX_DIM {
        return max_gain_reset_based(j);
    }
    let s = reversed_rows(j)?;
    largest_eigenvalue_lanczos(&s, 1e-12)
}

/// Bin `m ∈ [0, N/2]` with the largest DFT magnitude of a real signal; ties go
/// to the smallest `m`.
pub fn dominant_dft_bin(v: &[f64]) -> usize {
    let n = v.len();
    if n == 0 {
        return 0;
    }
    let tw = twiddles(n);
    let mut best = (0, f64::NEG_INFINITY);
    for m in 0..=n / 2 {
        let mag = v
            .iter()
            .enumerate()
            .map(|(k, &x)| tw[(m * k) % n] * x)
            .sum::<Complex64>()
            .norm();
        if mag > best.1 {
            best = (m, mag);
        }
    }
    best.0
}

fn reversed_rows(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = j.nrows();
    if j.ncols() != n {
        return Err(Error::dim(format!("J is {}x{}, expected square", n, j.ncols())));
    }
    let s = DMatrix::from_fn(n, n, |p, q| j[(n - 1 - p, q)]);
    let scale = 1.0 + s.amax();
    let asym = max_asymmetry(&s);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(a: &[f64]) -> CirculantSpec {
        CirculantSpec::new(a.to_vec()).unwrap()
    }

    #[test]
    fn time_reversal() {
        assert_eq!(time_reverse(&[1.0, 2.0, 3.0]), vec![3.0, 2.0, 1.0]);
        let pal = [1.0, 4.0, 1.0];
        assert_eq!(time_reverse(&pal), pal.to_vec());
        let v = [0.3, -1.2, 5.5, 2.0];
        assert_eq!(time_reverse(&time_reverse(&v)), v.to_vec());
        let t = time_reversal_matrix(3);
        assert_eq!(t[(0, 2)], 1.0);
        assert_eq!(&t * &t, DMatrix::identity(3, 3));
    }

    #[test]
    fn dft_is_unitary() {
        for n in [1, 2, 5, 16] {
            assert!(DftMatrix::new(n).unwrap().unitarity_residual() < 1e-10);
        }
        assert!(DftMatrix::new(0).is_err());
    }

    #[test]
    fn circulant_eigenvalue_examples() {
        let id = circulant_eigenvalues(&spec(&[1.0, 0.0, 0.0, 0.0, 0.0]));
        assert!(id.values().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));

        let two = circulant_eigenvalues(&spec(&[0.0, 1.0]));
        assert!((two.values()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((two.values()[1] - c(-1.0, 0.0)).norm() < 1e-15);

        let four = circulant_eigenvalues(&spec(&[1.0, 2.0, 3.0, 4.0]));
        let expected = [c(10.0, 0.0), c(-2.0, 2.0), c(-2.0, 0.0), c(-2.0, -2.0)];
        for (z, e) in four.values().iter().zip(expected) {
            assert!((z - e).norm() < 1e-12, "{z} vs {e}");
        }
    }

    #[test]
    fn diagonalization_examples() {
        let dft = DftMatrix::new(4).unwrap();
        let r = diagonalization_residual(&(DMatrix::identity(4, 4) * 3.0), &dft).unwrap();
        assert!(r.max_off_diag < 1e-15);
        assert!(r.diag.iter().all(|z| (z - c(3.0, 0.0)).norm() < 1e-14));

        let shift = spec(&[0.0, 0.0, 0.0, 1.0]).matrix();
        let r = diagonalization_residual(&shift, &dft).unwrap();
        assert!(r.max_off_diag < 1e-12);
        let expected = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (z, e) in r.diag.iter().zip(expected) {
            assert!((z - e).norm() < 1e-12);
        }

        // symmetric but not circulant
        let s = DMatrix::from_row_slice(4, 4, &[
            2.0, 1.0, 0.0, 0.5, 1.0, -1.0, 0.3, 0.0, 0.0, 0.3, 4.0, 0.2, 0.5, 0.0, 0.2, 1.0,
        ]);
        assert!(diagonalization_residual(&s, &dft).unwrap().max_off_diag > 0.1);
        assert!(diagonalization_residual(&DMatrix::zeros(3, 3), &dft).is_err());
    }

    #[test]
    fn reversed_circulant_examples() {
        assert_eq!(reversed_circulant(&spec(&[0.0, 1.0])).unwrap(), DMatrix::identity(2, 2));
        let r = reversed_circulant(&spec(&[2.5, 0.0, 0.0])).unwrap();
        assert_eq!(r, time_reversal_matrix(3) * 2.5);
        let r = reversed_circulant(&spec(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(r.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 3.0, 4.0, 1.0]);
        assert_eq!(r.row(3).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn reversed_spectrum_examples() {
        let rs = reversed_spectrum(&circulant_eigenvalues(&spec(&[0.0, 1.0]))).unwrap();
        assert_eq!(rs.values(), &[1.0, 1.0]);

        let rs = reversed_spectrum(&circulant_eigenvalues(&spec(&[1.0, 2.0, 3.0, 4.0]))).unwrap();
        let expected = [10.0, 2.0 * 2f64.sqrt(), 2.0, -2.0 * 2f64.sqrt()];
        for (v, e) in rs.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }

        for n in [5usize, 6] {
            let mut a = vec![0.0; n];
            a[0] = 1.0;
            let rs = reversed_spectrum(&circulant_eigenvalues(&spec(&a))).unwrap();
            for (m, v) in rs.values().iter().enumerate() {
                let expected = if m == 0 || (m < n.div_ceil(2) && 2 * m != n) { 1.0 } else { -1.0 };
                assert!((v - expected).abs() < 1e-12, "n={n} m={m} v={v}");
            }
        }
    }

    #[test]
    fn zero_eigenvalues_pair_to_zero() {
        // a = (1, 1, 1, 1) has λ = (4, 0, 0, 0)
        let rs = reversed_spectrum(&circulant_eigenvalues(&spec(&[1.0; 4]))).unwrap();
        assert!((rs.values()[0] - 4.0).abs() < 1e-12);
        assert!(rs.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn non_real_spectrum_rejected() {
        let bad = CirculantSpectrum::new(vec![c(1.0, 0.5), c(2.0, 0.0)]);
        assert!(matches!(reversed_spectrum(&bad), Err(Error::NotRealSpectrum(_))));
        let bad = CirculantSpectrum::new(vec![c(1.0, 0.0), c(2.0, 1.0), c(3.0, 0.0), c(2.0, 1.0)]);
        assert!(matches!(reversed_spectrum(&bad), Err(Error::NotRealSpectrum(_))));
    }

    #[test]
    fn reset_based_gain_examples() {
        assert_eq!(max_gain_reset_based(&DMatrix::zeros(6, 6)).unwrap(), 0.0);
        let g = max_gain_reset_based(&(DMatrix::identity(5, 5) * 1.7)).unwrap();
        assert!((g - 1.7).abs() < 1e-12);
        let not_toeplitz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 3.0]);
        assert!(matches!(max_gain_reset_based(&not_toeplitz), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn dominant_bin_of_a_sinusoid() {
        let n = 50;
        let v: Vec<f64> = (0..n).map(|k| (2.0 * PI * 10.0 * k as f64 / n as f64 + 0.4).sin()).collect();
        assert_eq!(dominant_dft_bin(&v), 10);
        assert_eq!(dominant_dft_bin(&[1.0; 8]), 0);
    }

    #[test]
    fn max_index_ties_take_smallest_m() {
        let spectrum = CirculantSpectrum::new(vec![c(1.0, 0.0), c(0.0, 2.0), c(1.0, 0.0), c(0.0, -2.0)]);
        assert_eq!(spectrum.max_magnitude(), (1, 2.0));
    }
}
