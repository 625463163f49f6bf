//! The experiment boundary.
//!
//! An estimator only ever sees [`BatchExperiment`]: it applies a length-`N`
//! input batch and observes the output batch. [`PlantSession`] simulates a
//! hidden state-space system, either continuously (state carried across
//! batches) or with the state zeroed before every batch. [`SteadyStatePlant`]
//! returns the periodic steady-state response directly, which is what a
//! reset-free plant delivers once transients have died out.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lifting::{lift, periodic_response_matrix};
use crate::lti::StateSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantMode {
    /// State evolves continuously across batches.
    ResetFree,
    /// State is forced to zero at the start of every batch.
    ResetPerBatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    /// Zero-based batch index within the session.
    pub j: usize,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

/// What an estimator is allowed to do with a plant.
pub trait BatchExperiment {
    fn batch_len(&self) -> usize;
    fn mode(&self) -> PlantMode;
    fn batches_applied(&self) -> usize;
    fn apply_batch(&mut self, u: &[f64]) -> Result<BatchRecord>;
}

/// Additive output perturbation, one sample per call.
pub trait OutputNoise: Send {
    fn sample(&mut self) -> f64;
}

/// Uniform noise on `[-amplitude, amplitude)`, seeded.
pub struct UniformNoise {
    amplitude: f64,
    rng: ChaCha8Rng,
}

impl UniformNoise {
    pub fn new(amplitude: f64, seed: u64) -> Self {
        UniformNoise { amplitude, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl OutputNoise for UniformNoise {
    fn sample(&mut self) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.rng.random_range(-self.amplitude..self.amplitude)
    }
}

/// A simulated plant behind the experiment boundary. The system matrices are
/// not reachable from outside the session.
pub struct PlantSession {
    system: StateSpace,
    state: DVector<f64>,
    mode: PlantMode,
    batch_len: usize,
    batch_counter: usize,
    noise: Option<Box<dyn OutputNoise>>,
}

impl std::fmt::Debug for PlantSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlantSession")
            .field("mode", &self.mode)
            .field("batch_len", &self.batch_len)
            .field("batch_counter", &self.batch_counter)
            .finish_non_exhaustive()
    }
}

impl PlantSession {
    /// `x0 = None` starts at rest. A nonzero `x0` is rejected in
    /// [`PlantMode::ResetPerBatch`].
    pub fn new(system: StateSpace, batch_len: usize, mode: PlantMode, x0: Option<&[f64]>) -> Result<Self> {
        if batch_len == 0 {
            return Err(Error::invalid("batch length N must be at least 1"));
        }
        let n = system.order();
        let state = match x0 {
            Some(x) if x.len() != n => {
                return Err(Error::dim(format!("initial state has length {}, expected {n}", x.len())))
            }
            Some(x) => DVector::from_column_slice(x),
            None => DVector::zeros(n),
        };
        if mode == PlantMode::ResetPerBatch && state.iter().any(|v| *v != 0.0) {
            return Err(Error::invalid("a reset-per-batch session must start from the zero state"));
        }
        Ok(PlantSession { system, state, mode, batch_len, batch_counter: 0, noise: None })
    }

    /// Adds measurement noise to every output sample. Off by default.
    pub fn with_output_noise(mut self, noise: Box<dyn OutputNoise>) -> Self {
        self.noise = Some(noise);
        self
    }
}

impl BatchExperiment for PlantSession {
    fn batch_len(&self) -> usize {
        self.batch_len
    }

    fn mode(&self) -> PlantMode {
        self.mode
    }

    fn batches_applied(&self) -> usize {
        self.batch_counter
    }

    fn apply_batch(&mut self, u: &[f64]) -> Result<BatchRecord> {
        if u.len() != self.batch_len {
            return Err(Error::dim(format!("input batch has length {}, expected {}", u.len(), self.batch_len)));
        }
        if self.mode == PlantMode::ResetPerBatch {
            self.state.fill(0.0);
        }
        let (mut y, x_end) = self.system.simulate(self.state.as_slice(), u)?;
        self.state = match self.mode {
            PlantMode::ResetFree => x_end,
            PlantMode::ResetPerBatch => DVector::zeros(self.system.order()),
        };
        if let Some(noise) = self.noise.as_mut() {
            for v in y.iter_mut() {
                *v += noise.sample();
            }
        }
        let record = BatchRecord { j: self.batch_counter, u: u.to_vec(), y };
        self.batch_counter += 1;
        Ok(record)
    }
}

/// Reset-free plant with transients removed: every batch returns `M u`.
#[derive(Debug, Clone)]
pub struct SteadyStatePlant {
    response: DMatrix<f64>,
    batch_counter: usize,
}

impl SteadyStatePlant {
    pub fn new(system: &StateSpace, batch_len: usize) -> Result<Self> {
        let response = periodic_response_matrix(&lift(system, batch_len)?)?;
        Ok(SteadyStatePlant { response, batch_counter: 0 })
    }
}

impl BatchExperiment for SteadyStatePlant {
    fn batch_len(&self) -> usize {
        self.response.nrows()
    }

    fn mode(&self) -> PlantMode {
        PlantMode::ResetFree
    }

    fn batches_applied(&self) -> usize {
        self.batch_counter
    }

    fn apply_batch(&mut self, u: &[f64]) -> Result<BatchRecord> {
        let n = self.response.nrows();
        if u.len() != n {
            return Err(Error::dim(format!("input batch has length {}, expected {n}", u.len())));
        }
        let y = &self.response * DVector::from_column_slice(u);
        let record = BatchRecord { j: self.batch_counter, u: u.to_vec(), y: y.as_slice().to_vec() };
        self.batch_counter += 1;
        Ok(record)
    }
}

/// `M u` for a period-`N` input held forever.
pub fn steady_state_response(system: &StateSpace, batch_len: usize, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != batch_len {
        return Err(Error::dim(format!("input batch has length {}, expected {batch_len}", u.len())));
    }
    let m = periodic_response_matrix(&lift(system, batch_len)?)?;
    Ok((m * DVector::from_column_slice(u)).as_slice().to_vec())
}

/// `‖y − y_prev‖ / ‖y‖`; zero when both are zero.
pub fn relative_change(prev: &[f64], current: &[f64]) -> f64 {
    let diff: f64 = prev.iter().zip(current).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = current.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / norm
    }
}

/// Flags steady state once consecutive output batches differ by less than
/// `eps` relative.
#[derive(Debug, Clone)]
pub struct SteadyStateDetector {
    eps: f64,
    previous: Option<Vec<f64>>,
}

impl Default for SteadyStateDetector {
    fn default() -> Self {
        SteadyStateDetector::new(1e-8)
    }
}

impl SteadyStateDetector {
    pub fn new(eps: f64) -> Self {
        SteadyStateDetector { eps, previous: None }
    }

    /// Feeds the next output batch; true once it matches the previous one.
    pub fn observe(&mut self, y: &[f64]) -> bool {
        let steady = self
            .previous
            .as_deref()
            .is_some_and(|prev| relative_change(prev, y) < self.eps);
        self.previous = Some(y.to_vec());
        steady
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }
}

/// Writes `j,k,u,y`, one row per sample.
pub fn write_batch_log<W: Write>(records: &[BatchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "k", "u", "y"])?;
    for r in records {
        for (k, (u, y)) in r.u.iter().zip(&r.y).enumerate() {
            w.write_record([r.j.to_string(), k.to_string(), u.to_string(), y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
