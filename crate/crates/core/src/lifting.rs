//! Batch lifting of a sample-wise system and the periodic response matrix.
//!
//! Over batches of `N` samples the plant becomes
//! `x(N(j+1)) = F x(Nj) + G u_j`, `y_j = H x(Nj) + J u_j`. Holding a
//! period-`N` input drives the state to `x∞ = (I−F)⁻¹ G u`, and the batch
//! output settles to `M u` with `M = H (I−F)⁻¹ G + J`. `M` is circulant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::StateSpace;

/// Reciprocal pivot-ratio threshold below which `I − F` is treated as singular.
const MIN_PIVOT_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedBatchSystem {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub batch_len: usize,
}

impl LiftedBatchSystem {
    /// One batch of the lifted recursion: returns `(y_j, x(N(j+1)))`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let y = &self.h * x + &self.j * u;
        let next = &self.f * x + &self.g * u;
        (y, next)
    }
}

/// `A^N` by repeated squaring.
pub fn matrix_power(a: &DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = a.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Lower-triangular Toeplitz matrix with first column `h`.
pub fn lower_toeplitz(h: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    DMatrix::from_fn(n, n, |p, q| if p >= q { h[p - q] } else { 0.0 })
}

/// The finite-horizon impulse-response matrix `J` on its own.
pub fn markov_matrix(ss: &StateSpace, batch_len: usize) -> Result<DMatrix<f64>> {
    check_batch_len(batch_len)?;
    Ok(lower_toeplitz(&ss.impulse_response(batch_len)))
}

fn check_batch_len(batch_len: usize) -> Result<()> {
    if batch_len == 0 {
        return Err(Error::invalid("batch length N must be at least 1"));
    }
    Ok(())
}

pub fn lift(ss: &StateSpace, batch_len: usize) -> Result<LiftedBatchSystem> {
    check_batch_len(batch_len)?;
    let n = ss.order();
    let a = ss.a();

    let f = matrix_power(a, batch_len);

    // column q of G is A^{N-1-q} B
    let mut g = DMatrix::zeros(n, batch_len);
    let mut w = ss.b().clone();
    for q in (0..batch_len).rev() {
        g.set_column(q, &w);
        if q > 0 {
            w = a * w;
        }
    }

    // row p of H is C A^p
    let mut h = DMatrix::zeros(batch_len, n);
    let mut row = ss.c().transpose();
    for p in 0..batch_len {
        h.set_row(p, &row);
        if p + 1 < batch_len {
            row = &row * a;
        }
    }

    let j = lower_toeplitz(&ss.impulse_response(batch_len));
    Ok(LiftedBatchSystem { f, g, h, j, batch_len })
}

fn solve_i_minus(f: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let lu = (DMatrix::identity(n, n) - f).lu();
    let u = lu.u();
    let pivots = u.diagonal().map(f64::abs);
    let (min, max) = (pivots.min(), pivots.max());
    if min.is_nan() || min <= MIN_PIVOT_RATIO * max {
        return Err(Error::Singular(format!(
            "I - A^N is near-singular (pivot ratio {:e}); is rho(A) close to 1?",
            if max > 0.0 { min / max } else { 0.0 }
        )));
    }
    lu.solve(rhs)
        .ok_or_else(|| Error::Singular("LU solve of I - A^N failed".into()))
}

/// Fixed point `x∞ = (I−F)⁻¹ G u` of a held batch input.
pub fn periodic_state(lift: &LiftedBatchSystem, u: &[f64]) -> Result<DVector<f64>> {
    if u.len() != lift.batch_len {
        return Err(Error::dim(format!("input batch has length {}, expected {}", u.len(), lift.batch_len)));
    }
    let gu = &lift.g * DVector::from_column_slice(u);
    let x = solve_i_minus(&lift.f, &DMatrix::from_column_slice(gu.len(), 1, gu.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// `M = H (I−F)⁻¹ G + J`, via an LU solve rather than an explicit inverse.
pub fn periodic_response_matrix(lift: &LiftedBatchSystem) -> Result<DMatrix<f64>> {
    let x = solve_i_minus(&lift.f, &lift.g)?;
    Ok(&lift.h * x + &lift.j)
}

/// First row `(a_0, …, a_{N−1})` of a circulant matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    coeffs: Vec<f64>,
}

impl CirculantSpec {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("circulant needs at least one coefficient"));
        }
        Ok(CirculantSpec { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `circ(a)`: entry `(p, q)` is `a_{(q−p) mod N}`, each row the previous
    /// one shifted right.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |p, q| self.coeffs[(q + n - p) % n])
    }
}

/// Circulant coefficients of `M` straight from the realization:
/// `a_0 = D + C A^{N−1} v`, `a_k = C A^{N−k−1} v` with `v = (I − A^N)⁻¹ B`.
/// Costs `O(N n²)` and never forms `M`.
pub fn circulant_coefficients(ss: &StateSpace, batch_len: usize) -> Result<CirculantSpec> {
    check_batch_len(batch_len)?;
    let a = ss.a();
    let f = matrix_power(a, batch_len);
    let b = DMatrix::from_column_slice(ss.order(), 1, ss.b().as_slice());
    let v = solve_i_minus(&f, &b)?;
    let mut w = v.column(0).into_owned();
    let mut coeffs = vec![0.0; batch_len];
    for i in 0..batch_len {
        coeffs[batch_len - 1 - i] = ss.c().dot(&w);
        if i + 1 < batch_len {
            w = a * w;
        }
    }
    coeffs[0] += ss.d();
    CirculantSpec::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::RationalTransferFunction;

    fn first_order(pole: f64) -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, pole),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.0,
        )
        .unwrap()
    }

    fn unit_delay() -> StateSpace {
        RationalTransferFunction::new(vec![0.0, 1.0], vec![1.0], 0).unwrap().to_state_space()
    }

    fn example() -> StateSpace {
        RationalTransferFunction::new(vec![0.0, 5.0, 4.0], vec![10.0, -5.0, 6.0], 50)
            .unwrap()
            .to_state_space()
    }

    #[test]
    fn batch_of_one_is_the_original_system() {
        let ss = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]),
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![0.5, 2.0]),
            0.7,
        )
        .unwrap();
        let l = lift(&ss, 1).unwrap();
        assert_eq!(&l.f, ss.a());
        assert_eq!(l.g.column(0), ss.b().column(0));
        assert_eq!(l.h.row(0).transpose(), *ss.c());
        assert_eq!(l.j[(0, 0)], 0.7);
    }

    #[test]
    fn two_sample_feedthrough_pattern() {
        let ss = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(1, 2.0),
            DVector::from_element(1, 3.0),
            1.5,
        )
        .unwrap();
        let j = lift(&ss, 2).unwrap().j;
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 6.0, 1.5]));
    }

    #[test]
    fn zero_batch_length_rejected() {
        assert!(matches!(lift(&unit_delay(), 0), Err(Error::InvalidArgument(_))));
        assert!(circulant_coefficients(&unit_delay(), 0).is_err());
    }

    #[test]
    fn strict_delay_makes_j_vanish_but_not_m() {
        let l = lift(&example(), 50).unwrap();
        assert!(l.j.iter().all(|v| *v == 0.0));
        let m = periodic_response_matrix(&l).unwrap();
        assert!(m.amax() > 0.1);
    }

    #[test]
    fn static_gain_periodic_matrix() {
        let l = lift(&StateSpace::static_gain(2.0), 5).unwrap();
        let m = periodic_response_matrix(&l).unwrap();
        assert!((m - DMatrix::identity(5, 5) * 2.0).amax() == 0.0);
        let a = circulant_coefficients(&StateSpace::static_gain(2.0), 5).unwrap();
        assert_eq!(a.coeffs(), &[2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_delay_is_cyclic_shift() {
        let a = circulant_coefficients(&unit_delay(), 4).unwrap();
        assert_eq!(a.coeffs(), &[0.0, 0.0, 0.0, 1.0]);
        let m = periodic_response_matrix(&lift(&unit_delay(), 4).unwrap()).unwrap();
        assert_eq!(m, a.matrix());
        // y_p = u_{p-1} cyclically
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(m[(0, 3)], 1.0);
    }

    #[test]
    fn circulant_matches_periodic_matrix_for_first_order() {
        let ss = first_order(0.5);
        let a = circulant_coefficients(&ss, 8).unwrap();
        let m = periodic_response_matrix(&lift(&ss, 8).unwrap()).unwrap();
        assert!((a.matrix() - m).amax() < 1e-12);
    }

    #[test]
    fn matrix_power_by_squaring() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let mut naive = DMatrix::identity(2, 2);
        for _ in 0..13 {
            naive = &naive * &a;
        }
        assert!((matrix_power(&a, 13) - naive).amax() < 1e-15);
        assert_eq!(matrix_power(&a, 0), DMatrix::identity(2, 2));
    }
}
