//! Data-driven power iterations run purely through batch experiments.
//!
//! The reset-free iteration holds each input for `n_update` batches so the
//! plant settles to its periodic response `y = M u`, then forms
//! `z = T_N y + λ̃ u` and rescales it to input power one (`‖u‖² = N`). This is
//! power iteration on `T_N M + λ̃ I`; the shift makes the largest positive
//! eigenvalue of the reversed circulant `T_N M` dominant. The norm estimate is
//! the Rayleigh-type quotient `β = uᵀ y / N`.
//!
//! The reset-based baseline zeroes the plant before each batch, so `y = J u`,
//! and feeds back `T_N y` every batch.

use std::io::Write;

use log::warn;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plant::{BatchExperiment, PlantMode, SteadyStateDetector};
use crate::spectral::time_reverse;

/// Default `|Δβ|` stopping tolerance on a transient-free plant.
pub const IDEAL_PLANT_TOL: f64 = 1e-10;
/// Default `|Δβ|` stopping tolerance on a simulated reset-free plant.
pub const TRANSIENT_PLANT_TOL: f64 = 1e-6;

const SHIFT_FLOOR: f64 = 1e-6;
const PROBE_MAX_BATCHES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterationConfig {
    pub batch_len: usize,
    /// Batches each input is held before the next update.
    pub n_update: usize,
    /// `λ̃`; `None` picks one with [`select_shift`].
    pub shift: Option<f64>,
    pub max_updates: usize,
    pub convergence_tol: f64,
    pub seed: u64,
}

impl PowerIterationConfig {
    pub fn new(batch_len: usize) -> Self {
        PowerIterationConfig {
            batch_len,
            n_update: 10,
            shift: None,
            max_updates: 1000,
            convergence_tol: TRANSIENT_PLANT_TOL,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_len == 0 {
            return Err(Error::invalid("batch length N must be at least 1"));
        }
        if self.n_update == 0 {
            return Err(Error::invalid("n_update must be at least 1"));
        }
        if self.max_updates == 0 {
            return Err(Error::invalid("max_updates must be at least 1"));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::invalid("convergence tolerance must be positive"));
        }
        if let Some(s) = self.shift {
            if s == 0.0 || !s.is_finite() {
                return Err(Error::invalid("shift must be finite and nonzero"));
            }
        }
        Ok(())
    }
}

/// One input update: the held input, the output it produced, and the
/// quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    /// 1-based update counter.
    pub update_index: usize,
    /// Session batch index whose output fed this update.
    pub batch_index: usize,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖y‖/√N`.
    pub mu: f64,
    /// `uᵀ T_N y / N`, the Rayleigh quotient of `T_N M`.
    pub beta: f64,
    /// `uᵀy/N`, the Rayleigh quotient of `M` itself.
    pub beta_direct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrace {
    pub updates: Vec<UpdateRecord>,
    /// `uᵀ T_N y / N` for every batch applied, including those inside a hold.
    pub batch_beta: Vec<f64>,
    pub shift: f64,
    /// Reset-free: final `β`. Reset-based: final `μ`, the gain `‖y‖/‖u‖`.
    pub estimate: f64,
    pub converged: bool,
    /// The plant returned an all-zero output batch.
    pub zero_output: bool,
}

impl EstimateTrace {
    pub fn last(&self) -> Option<&UpdateRecord> {
        self.updates.last()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `uᵀ T_N y / N` without forming the reversed output.
fn reversed_rayleigh(u: &[f64], y: &[f64]) -> f64 {
    u.iter().zip(y.iter().rev()).map(|(a, b)| a * b).sum::<f64>() / u.len() as f64
}

fn scale_to_power(v: &mut [f64]) {
    let s = (v.len() as f64).sqrt() / norm(v);
    v.iter_mut().for_each(|x| *x *= s);
}

/// Seeded random input with `‖u‖² = N`.
pub fn init_input(batch_len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (0..batch_len).map(|_| rng.random_range(-1.0..1.0)).collect();
    if norm(&u) == 0.0 {
        u.iter_mut().for_each(|x| *x = 1.0);
    }
    scale_to_power(&mut u);
    u
}

/// Probe-based shift: applies one random unit-power input (held until the
/// output settles on a reset-free plant) and returns `max(‖y‖/‖u‖, 1e-6)`.
/// A silent plant falls back to `1`.
pub fn select_shift<P: BatchExperiment + ?Sized>(plant: &mut P, seed: u64) -> Result<f64> {
    let u = init_input(plant.batch_len(), seed.wrapping_add(0x9e37_79b9));
    let mut y = plant.apply_batch(&u)?.y;
    if plant.mode() == PlantMode::ResetFree {
        let mut detector = SteadyStateDetector::default();
        detector.observe(&y);
        for _ in 1..PROBE_MAX_BATCHES {
            y = plant.apply_batch(&u)?.y;
            if detector.observe(&y) {
                break;
            }
        }
    }
    let gain = norm(&y) / norm(&u);
    if gain == 0.0 {
        warn!("shift probe produced a zero output; falling back to shift 1");
        return Ok(1.0);
    }
    Ok(gain.max(SHIFT_FLOOR))
}

fn update_record(update_index: usize, batch_index: usize, u: Vec<f64>, y: Vec<f64>) -> UpdateRecord {
    let n = u.len() as f64;
    let mu = norm(&y) / n.sqrt();
    let beta = reversed_rayleigh(&u, &y);
    let beta_direct = dot(&u, &y) / n;
    UpdateRecord { update_index, batch_index, u, y, mu, beta, beta_direct }
}

/// Shifted power iteration on a reset-free plant (simulated or ideal).
///
/// Stops when `|β_q − β_{q−1}| < convergence_tol` or after `max_updates`
/// updates; the latter returns the trace with `converged = false`.
pub fn iterate_reset_free<P: BatchExperiment + ?Sized>(
    plant: &mut P,
    config: &PowerIterationConfig,
) -> Result<EstimateTrace> {
    config.validate()?;
    if plant.mode() != PlantMode::ResetFree {
        return Err(Error::invalid("reset-free iteration needs a reset-free plant"));
    }
    if plant.batch_len() != config.batch_len {
        return Err(Error::dim(format!(
            "plant batch length {} differs from configured {}",
            plant.batch_len(),
            config.batch_len
        )));
    }
    let shift = match config.shift {
        Some(s) => s,
        None => select_shift(plant, config.seed)?,
    };

    let mut u = init_input(config.batch_len, config.seed);
    let mut trace = EstimateTrace {
        updates: Vec::new(),
        batch_beta: Vec::new(),
        shift,
        estimate: 0.0,
        converged: false,
        zero_output: false,
    };

    for q in 1..=config.max_updates {
        let mut last = None;
        for _ in 0..config.n_update {
            let rec = plant.apply_batch(&u)?;
            trace.batch_beta.push(reversed_rayleigh(&rec.u, &rec.y));
            last = Some(rec);
        }
        let rec = last.expect("n_update >= 1");
        let record = update_record(q, rec.j, rec.u, rec.y);
        let beta = record.beta;
        let previous = trace.updates.last().map(|r| r.beta);
        trace.estimate = beta;
        trace.zero_output = norm(&record.y) == 0.0;

        let mut z = time_reverse(&record.y);
        for (zi, ui) in z.iter_mut().zip(&record.u) {
            *zi += shift * ui;
        }
        trace.updates.push(record);

        if previous.is_some_and(|p| (beta - p).abs() < config.convergence_tol) {
            trace.converged = true;
            break;
        }
        if norm(&z) == 0.0 || !norm(&z).is_finite() {
            return Err(Error::DegenerateUpdate);
        }
        scale_to_power(&mut z);
        u = z;
    }
    Ok(trace)
}

/// Time-reversal power iteration on a plant reset before every batch.
///
/// Each batch is an update. The estimate is the gain `μ = ‖y‖/√N`, which
/// converges to the dominant `|λ(T_N J)|`. An all-zero output ends the run
/// at once with estimate `0` and `zero_output` set.
pub fn iterate_reset_based<P: BatchExperiment + ?Sized>(
    plant: &mut P,
    config: &PowerIterationConfig,
) -> Result<EstimateTrace> {
    config.validate()?;
    if plant.mode() != PlantMode::ResetPerBatch {
        return Err(Error::invalid("reset-based iteration needs a reset-per-batch plant"));
    }
    if plant.batch_len() != config.batch_len {
        return Err(Error::dim(format!(
            "plant batch length {} differs from configured {}",
            plant.batch_len(),
            config.batch_len
        )));
    }

    let mut u = init_input(config.batch_len, config.seed);
    let mut trace = EstimateTrace {
        updates: Vec::new(),
        batch_beta: Vec::new(),
        shift: 0.0,
        estimate: 0.0,
        converged: false,
        zero_output: false,
    };

    for q in 1..=config.max_updates {
        let rec = plant.apply_batch(&u)?;
        trace.batch_beta.push(reversed_rayleigh(&rec.u, &rec.y));
        let record = update_record(q, rec.j, rec.u, rec.y);
        let mu = record.mu;
        let previous = trace.updates.last().map(|r| r.mu);
        if mu == 0.0 {
            trace.updates.push(record);
            trace.estimate = 0.0;
            trace.zero_output = true;
            return Ok(trace);
        }
        let mut next = time_reverse(&record.y);
        trace.updates.push(record);
        trace.estimate = mu;
        if previous.is_some_and(|p| (mu - p).abs() < config.convergence_tol) {
            trace.converged = true;
            break;
        }
        scale_to_power(&mut next);
        u = next;
    }
    Ok(trace)
}

/// `updateIndex,batchIndex,mu,beta,betaDirect`, one row per update.
pub fn write_trace_csv<W: Write>(trace: &EstimateTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["updateIndex", "batchIndex", "mu", "beta", "betaDirect"])?;
    for r in &trace.updates {
        w.write_record([
            r.update_index.to_string(),
            r.batch_index.to_string(),
            r.mu.to_string(),
            r.beta.to_string(),
            r.beta_direct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `batchIndex,beta` for every applied batch.
pub fn write_batch_beta_csv<W: Write>(trace: &EstimateTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["batchIndex", "beta"])?;
    for (j, b) in trace.batch_beta.iter().enumerate() {
        w.write_record([j.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Side file of input and output snapshots at the given 1-based update
/// indices: `k,u_<q>…,y_<q>…`. Unknown indices are skipped.
pub fn write_snapshots_csv<W: Write>(trace: &EstimateTrace, update_indices: &[usize], out: W) -> Result<()> {
    let picked: Vec<&UpdateRecord> = update_indices
        .iter()
        .filter_map(|&q| trace.updates.iter().find(|r| r.update_index == q))
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend(picked.iter().map(|r| format!("u_{}", r.update_index)));
    header.extend(picked.iter().map(|r| format!("y_{}", r.update_index)));
    w.write_record(&header)?;
    let len = picked.first().map_or(0, |r| r.u.len());
    for k in 0..len {
        let mut row = vec![k.to_string()];
        row.extend(picked.iter().map(|r| r.u[k].to_string()));
        row.extend(picked.iter().map(|r| r.y[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{RationalTransferFunction, StateSpace};
    use crate::plant::{PlantSession, SteadyStatePlant};

    #[test]
    fn init_input_is_seeded_and_normalized() {
        for n in [1usize, 7, 50] {
            let a = init_input(n, 11);
            assert_eq!(a, init_input(n, 11));
            let power: f64 = a.iter().map(|x| x * x).sum();
            assert!((power - n as f64).abs() < 1e-10);
        }
        assert_ne!(init_input(16, 1), init_input(16, 2));
    }

    #[test]
    fn config_validation() {
        let mut c = PowerIterationConfig::new(8);
        assert!(c.validate().is_ok());
        c.shift = Some(0.0);
        assert!(c.validate().is_err());
        c.shift = Some(1.0);
        c.n_update = 0;
        assert!(c.validate().is_err());
        c.n_update = 1;
        c.convergence_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn shift_probe() {
        let mut gain = SteadyStatePlant::new(&StateSpace::static_gain(2.5), 8).unwrap();
        assert!((select_shift(&mut gain, 3).unwrap() - 2.5).abs() < 1e-12);
        let mut silent = PlantSession::new(StateSpace::static_gain(0.0), 8, PlantMode::ResetFree, None).unwrap();
        assert_eq!(select_shift(&mut silent, 3).unwrap(), 1.0);
    }

    #[test]
    fn static_gain_reset_free_is_bounded() {
        let mut plant = SteadyStatePlant::new(&StateSpace::static_gain(2.0), 6).unwrap();
        let mut config = PowerIterationConfig::new(6);
        config.shift = Some(2.0);
        config.n_update = 1;
        config.max_updates = 50;
        let trace = iterate_reset_free(&mut plant, &config).unwrap();
        for r in &trace.updates {
            assert!(r.beta >= -2.0 - 1e-12 && r.beta <= 2.0 + 1e-12);
            assert!((dot(&r.u, &r.u) - 6.0).abs() < 1e-8);
        }
    }

    #[test]
    fn static_gain_reset_based_one_step() {
        let mut plant = PlantSession::new(StateSpace::static_gain(1.5), 9, PlantMode::ResetPerBatch, None).unwrap();
        let mut config = PowerIterationConfig::new(9);
        config.max_updates = 5;
        let trace = iterate_reset_based(&mut plant, &config).unwrap();
        assert!((trace.updates[0].beta_direct - 1.5).abs() < 1e-12);
        assert!((trace.updates[0].mu - 1.5).abs() < 1e-12);
        assert!((trace.estimate - 1.5).abs() < 1e-12);
        assert!(trace.converged);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let ss = RationalTransferFunction::new(vec![1.0], vec![1.0, -0.5], 0).unwrap().to_state_space();
        let config = PowerIterationConfig::new(4);
        let mut reset = PlantSession::new(ss.clone(), 4, PlantMode::ResetPerBatch, None).unwrap();
        assert!(iterate_reset_free(&mut reset, &config).is_err());
        let mut free = PlantSession::new(ss, 4, PlantMode::ResetFree, None).unwrap();
        assert!(iterate_reset_based(&mut free, &config).is_err());
        let mut wrong_len = PlantSession::new(StateSpace::static_gain(1.0), 5, PlantMode::ResetFree, None).unwrap();
        assert!(matches!(iterate_reset_free(&mut wrong_len, &config), Err(Error::Dimension(_))));
    }

    #[test]
    fn cancelling_shift_is_degenerate() {
        // M = -I, N = 1: T y + λ̃ u = -u + u = 0
        let mut plant = SteadyStatePlant::new(&StateSpace::static_gain(-1.0), 1).unwrap();
        let mut config = PowerIterationConfig::new(1);
        config.shift = Some(1.0);
        config.n_update = 1;
        assert!(matches!(iterate_reset_free(&mut plant, &config), Err(Error::DegenerateUpdate)));
    }

    #[test]
    fn csv_exports() {
        let mut plant = SteadyStatePlant::new(&StateSpace::static_gain(1.0), 2).unwrap();
        let mut config = PowerIterationConfig::new(2);
        config.shift = Some(1.0);
        config.n_update = 2;
        config.max_updates = 3;
        let trace = iterate_reset_free(&mut plant, &config).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("updateIndex,batchIndex,mu,beta,betaDirect\n1,1,"));
        let mut buf = Vec::new();
        write_snapshots_csv(&trace, &[1, 99], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,u_1,y_1\n0,"));
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        write_batch_beta_csv(&trace, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + trace.batch_beta.len());
    }

    #[test]
    fn lowpass_converges_to_constant_input() {
        // 1/(1 - 0.5 z^-1): peak at m = 0, λmax = 2
        let ss = RationalTransferFunction::new(vec![1.0], vec![1.0, -0.5], 0).unwrap().to_state_space();
        let mut plant = SteadyStatePlant::new(&ss, 8).unwrap();
        let mut config = PowerIterationConfig::new(8);
        config.n_update = 1;
        config.max_updates = 200;
        config.convergence_tol = IDEAL_PLANT_TOL;
        let trace = iterate_reset_free(&mut plant, &config).unwrap();
        assert!(trace.converged);
        assert!((trace.estimate - 2.0).abs() < 1e-6, "{}", trace.estimate);
        let u = &trace.last().unwrap().u;
        let sign = u[0].signum();
        assert!(u.iter().all(|v| (v * sign - 1.0).abs() < 1e-3));
    }

    #[test]
    fn delayed_system_gives_zero_reset_output() {
        let ss = RationalTransferFunction::new(vec![0.0, 5.0, 4.0], vec![10.0, -5.0, 6.0], 50)
            .unwrap()
            .to_state_space();
        let mut plant = PlantSession::new(ss, 50, PlantMode::ResetPerBatch, None).unwrap();
        let trace = iterate_reset_based(&mut plant, &PowerIterationConfig::new(50)).unwrap();
        assert!(trace.zero_output);
        assert_eq!(trace.estimate, 0.0);
        assert_eq!(trace.updates.len(), 1);
    }
}
