//! Discrete-time SISO LTI systems.
//!
//! [`StateSpace`] is the simulation model; [`RationalTransferFunction`] is the
//! polynomial form in `z⁻¹` with an explicit input delay. Both implement
//! [`FrequencyResponse`], which is all the H∞ grid oracle needs.

mod spec_file;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use spec_file::{parse_system_spec, read_system_spec};

/// `x(k+1) = A x(k) + B u(k)`, `y(k) = C x(k) + D u(k)` with `ρ(A) < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
}

impl StateSpace {
    /// Validates dimensions and strict stability.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim(format!("A is {}x{}, expected square", n, a.ncols())));
        }
        if n == 0 {
            return Err(Error::dim("state dimension must be at least 1"));
        }
        if b.len() != n {
            return Err(Error::dim(format!("B has length {}, expected {n}", b.len())));
        }
        if c.len() != n {
            return Err(Error::dim(format!("C has length {}, expected {n}", c.len())));
        }
        let finite = a.iter().chain(b.iter()).chain(c.iter()).all(|v| v.is_finite());
        if !finite || !d.is_finite() {
            return Err(Error::invalid("state-space entries must be finite"));
        }
        let rho = spectral_radius(&a)?;
        if rho >= 1.0 {
            return Err(Error::Unstable { magnitudes: vec![rho] });
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// Memoryless gain `y = c·u`, realized with one inert state.
    pub fn static_gain(c: f64) -> Self {
        StateSpace {
            a: DMatrix::zeros(1, 1),
            b: DVector::zeros(1),
            c: DVector::zeros(1),
            d: c,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Output row `C`, stored as a column vector.
    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Runs the state recursion from `x0` over the whole input sequence and
    /// returns the outputs together with the final state, so consecutive calls
    /// chain without a reset.
    pub fn simulate(&self, x0: &[f64], u: &[f64]) -> Result<(Vec<f64>, DVector<f64>)> {
        let n = self.order();
        if x0.len() != n {
            return Err(Error::dim(format!("initial state has length {}, expected {n}", x0.len())));
        }
        let mut x = DVector::from_column_slice(x0);
        let mut next = DVector::zeros(n);
        let mut y = Vec::with_capacity(u.len());
        for &uk in u {
            y.push(self.c.dot(&x) + self.d * uk);
            next.copy_from(&self.b);
            next *= uk;
            next.gemv(1.0, &self.a, &x, 1.0);
            std::mem::swap(&mut x, &mut next);
        }
        Ok((y, x))
    }

    /// Markov parameters `D, CB, CAB, …` (first `len` samples of the impulse response).
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut h = Vec::with_capacity(len);
        if len == 0 {
            return h;
        }
        h.push(self.d);
        let mut w = self.b.clone();
        for _ in 1..len {
            h.push(self.c.dot(&w));
            w = &self.a * w;
        }
        h
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<Complex64> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

/// `P(z) = z^{-d} (b₀ + b₁z⁻¹ + …) / (a₀ + a₁z⁻¹ + …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    delay: usize,
}

impl RationalTransferFunction {
    /// Rejects an empty or zero-leading denominator and any pole on or
    /// outside the unit circle.
    pub fn new(num: Vec<f64>, den: Vec<f64>, delay: usize) -> Result<Self> {
        if den.is_empty() {
            return Err(Error::invalid("denominator must not be empty"));
        }
        if den[0] == 0.0 {
            return Err(Error::invalid("denominator leading coefficient must be nonzero"));
        }
        if num.iter().chain(den.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("transfer-function coefficients must be finite"));
        }
        let mut num = if num.is_empty() { vec![0.0] } else { num };
        let mut den = den;
        trim_trailing_zeros(&mut num);
        trim_trailing_zeros(&mut den);
        let tf = RationalTransferFunction { num, den, delay };
        let offending: Vec<f64> = tf
            .poles()
            .iter()
            .map(|p| p.norm())
            .filter(|m| *m >= 1.0 || !m.is_finite())
            .collect();
        if !offending.is_empty() {
            return Err(Error::Unstable { magnitudes: offending });
        }
        Ok(tf)
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Roots of the denominator in `z` (excluding the delay's poles at the origin).
    pub fn poles(&self) -> Vec<Complex64> {
        let p = self.den.len() - 1;
        match p {
            0 => Vec::new(),
            1 => vec![Complex64::new(-self.den[1] / self.den[0], 0.0)],
            _ => companion(&self.den).complex_eigenvalues().iter().copied().collect(),
        }
    }

    /// Impulse response by long division, shifted by the delay.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut h = vec![0.0; len];
        let a0 = self.den[0];
        for k in 0..len.saturating_sub(self.delay) {
            let mut acc = self.num.get(k).copied().unwrap_or(0.0);
            for i in 1..self.den.len().min(k + 1) {
                acc -= self.den[i] * h[self.delay + k - i];
            }
            h[self.delay + k] = acc / a0;
        }
        h
    }

    /// Controllable canonical form of the rational part followed by a chain
    /// of `delay` pure-delay states on its output.
    pub fn to_state_space(&self) -> StateSpace {
        let a0 = self.den[0];
        let p = self.den.len() - 1;
        let q = self.num.len() - 1;
        let nr = p.max(q);
        let coef = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0) / a0;
        let dr = coef(&self.num, 0);

        let n = nr + self.delay;
        if n == 0 {
            return StateSpace::static_gain(dr);
        }
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        let mut c = DVector::zeros(n);
        let d;

        for i in 0..nr {
            a[(0, i)] = -coef(&self.den, i + 1);
            if i > 0 {
                a[(i, i - 1)] = 1.0;
            }
        }
        if nr > 0 {
            b[0] = 1.0;
        }
        let cr: Vec<f64> = (1..=nr)
            .map(|i| coef(&self.num, i) - dr * coef(&self.den, i))
            .collect();

        if self.delay == 0 {
            for (i, v) in cr.iter().enumerate() {
                c[i] = *v;
            }
            d = dr;
        } else {
            // first delay state latches the rational part's output
            for (i, v) in cr.iter().enumerate() {
                a[(nr, i)] = *v;
            }
            b[nr] = dr;
            for i in 1..self.delay {
                a[(nr + i, nr + i - 1)] = 1.0;
            }
            c[n - 1] = 1.0;
            d = 0.0;
        }
        StateSpace { a, b, c, d }
    }
}

fn trim_trailing_zeros(v: &mut Vec<f64>) {
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
}

fn companion(den: &[f64]) -> DMatrix<f64> {
    let p = den.len() - 1;
    let mut m = DMatrix::zeros(p, p);
    for i in 0..p {
        m[(0, i)] = -den[i + 1] / den[0];
        if i > 0 {
            m[(i, i - 1)] = 1.0;
        }
    }
    m
}

/// Anything whose frequency response `P(e^{jω})` can be evaluated.
pub trait FrequencyResponse {
    /// `P(e^{jω})` for `ω` in radians/sample. Real-coefficient systems satisfy
    /// `P(e^{-jω}) = conj(P(e^{jω}))`, so any real `ω` is accepted.
    fn freq_response(&self, omega: f64) -> Complex64;
}

impl FrequencyResponse for StateSpace {
    fn freq_response(&self, omega: f64) -> Complex64 {
        let n = self.order();
        let z = Complex64::from_polar(1.0, omega);
        let resolvent = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = self.b.map(|v| Complex64::new(v, 0.0));
        // ρ(A) < 1 keeps the resolvent invertible on the unit circle
        let x = resolvent
            .lu()
            .solve(&rhs)
            .expect("resolvent is nonsingular for a stable system");
        let cx: Complex64 = self.c.iter().zip(x.iter()).map(|(c, x)| x * *c).sum();
        cx + self.d
    }
}

impl FrequencyResponse for RationalTransferFunction {
    fn freq_response(&self, omega: f64) -> Complex64 {
        let zinv = Complex64::from_polar(1.0, -omega);
        let horner = |coef: &[f64]| {
            coef.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * zinv + c)
        };
        let delay = Complex64::from_polar(1.0, -omega * self.delay as f64);
        delay * horner(&self.num) / horner(&self.den)
    }
}

/// A system as read from a spec file: either form, one simulation model.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemModel {
    Transfer(RationalTransferFunction),
    StateSpace(StateSpace),
}

impl SystemModel {
    pub fn to_state_space(&self) -> StateSpace {
        match self {
            SystemModel::Transfer(tf) => tf.to_state_space(),
            SystemModel::StateSpace(ss) => ss.clone(),
        }
    }

    pub fn poles(&self) -> Vec<Complex64> {
        match self {
            SystemModel::Transfer(tf) => tf.poles(),
            SystemModel::StateSpace(ss) => ss.poles(),
        }
    }
}

impl FrequencyResponse for SystemModel {
    fn freq_response(&self, omega: f64) -> Complex64 {
        match self {
            SystemModel::Transfer(tf) => tf.freq_response(omega),
            SystemModel::StateSpace(ss) => ss.freq_response(omega),
        }
    }
}

/// Peak of `|P(e^{jω})|` and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakGain {
    pub value: f64,
    pub omega: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Dense-grid H∞ estimate with golden-section refinement around the grid
/// argmax. The grid is uniform over `[0, π]`, which covers the whole circle for
/// real-coefficient systems. Every reported value is an evaluated `|P|`, hence
/// a lower bound on `‖P‖∞`.
pub fn hinf_grid_oracle<S: FrequencyResponse + ?Sized>(sys: &S, grid_size: usize) -> Result<PeakGain> {
    if grid_size < 2 {
        return Err(Error::invalid("grid size must be at least 2"));
    }
    let mag = |w: f64| sys.freq_response(w).norm();
    let step = PI / (grid_size - 1) as f64;
    let mut best = PeakGain { value: f64::NEG_INFINITY, omega: 0.0 };
    let mut best_idx = 0;
    for i in 0..grid_size {
        let w = i as f64 * step;
        let v = mag(w);
        if v > best.value {
            best = PeakGain { value: v, omega: w };
            best_idx = i;
        }
    }

    let mut lo = best_idx.saturating_sub(1) as f64 * step;
    let mut hi = ((best_idx + 1).min(grid_size - 1)) as f64 * step;
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (mag(x1), mag(x2));
    let mut prev = best.value;
    for _ in 0..400 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = mag(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = mag(x2);
        }
        for (w, v) in [(x1, f1), (x2, f2)] {
            if v > best.value {
                best = PeakGain { value: v, omega: w };
            }
        }
        let settled = (best.value - prev).abs() <= 1e-10 * best.value.abs();
        if settled && hi - lo < 1e-9 {
            break;
        }
        prev = best.value;
    }
    Ok(best)
}

/// Spectral radius from `‖A^{2^k}‖^{1/2^k}`, squaring a normalized iterate and
/// accumulating the log scale so nothing over- or underflows.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    const MAX_SQUARINGS: usize = 200;
    const REL_TOL: f64 = 1e-14;

    if a.nrows() != a.ncols() {
        return Err(Error::dim(format!("spectral radius needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let norm0 = a.norm();
    if norm0 == 0.0 {
        return Ok(0.0);
    }
    if !norm0.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    // A^{2^k} = exp(log_scale) * m, with ‖m‖ = 1
    let mut m = a / norm0;
    let mut log_scale = norm0.ln();
    let mut estimate = norm0;
    for k in 1..=MAX_SQUARINGS {
        let sq = &m * &m;
        let s = sq.norm();
        if s == 0.0 {
            return Ok(0.0);
        }
        m = sq / s;
        log_scale = 2.0 * log_scale + s.ln();
        let next = (log_scale / 2f64.powi(k as i32)).exp();
        if k >= 8 && (next - estimate).abs() <= REL_TOL * next {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NonConvergence(format!(
        "spectral radius did not settle after {MAX_SQUARINGS} squarings (last estimate {estimate})"
    )))
}
