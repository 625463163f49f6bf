//! The experiments behind the `rcgain` CLI: structural analysis for one batch
//! length, the batch-length sweep, a full data-driven estimate, and the
//! frequency-grid oracle. Every command writes CSV with a header row and
//! shortest round-trip float formatting, so identical inputs give
//! byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimator::{self, EstimateTrace, PowerIterationConfig};
use crate::lifting::{circulant_coefficients, lift, markov_matrix, periodic_response_matrix};
use crate::lti::{hinf_grid_oracle, PeakGain, SystemModel};
use crate::plant::{PlantMode, PlantSession, SteadyStatePlant};
use crate::spectral::{
    circulant_eigenvalues, diagonalization_residual, dominant_dft_bin, reset_based_gain, reversed_spectrum, DftMatrix,
};

/// Frequency grid used for the sweep's reference column.
pub const SWEEP_ORACLE_GRID: usize = 8192;

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    fs::create_dir_all(dir)?;
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

fn write_summary(dir: &Path, name: &str, rows: &[(&str, String)]) -> Result<()> {
    let mut w = csv_writer(dir, name)?;
    w.write_record(["quantity", "value"])?;
    for (k, v) in rows {
        w.write_record([*k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Largest eigenvalue of `T_N M` together with the bin it comes from.
fn reset_free_peak(system: &SystemModel, batch_len: usize) -> Result<(usize, f64)> {
    let ss = system.to_state_space();
    let spectrum = circulant_eigenvalues(&circulant_coefficients(&ss, batch_len)?);
    Ok(reversed_spectrum(&spectrum)?.max())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub batch_len: usize,
    pub coeffs: Vec<f64>,
    pub lambda: Vec<Complex64>,
    pub reversed: Vec<f64>,
    /// Largest off-diagonal magnitude of `F* M F`.
    pub max_off_diag: f64,
    /// `max_m |λ_m|`, the spectral radius of `F* M F`.
    pub max_abs_lambda: f64,
    /// Largest eigenvalue of `T_N M` and its bin.
    pub reset_free_max: f64,
    pub reset_free_bin: usize,
    /// Largest eigenvalue of `T_N J`.
    pub reset_based_max: f64,
    pub j_is_zero: bool,
}

pub fn analyze(system: &SystemModel, batch_len: usize) -> Result<AnalyzeReport> {
    let ss = system.to_state_space();
    let lifted = lift(&ss, batch_len)?;
    let m = periodic_response_matrix(&lifted)?;
    let spec = circulant_coefficients(&ss, batch_len)?;
    let spectrum = circulant_eigenvalues(&spec);
    let reversed = reversed_spectrum(&spectrum)?;
    let residual = diagonalization_residual(&m, &DftMatrix::new(batch_len)?)?;
    let (reset_free_bin, reset_free_max) = reversed.max();
    Ok(AnalyzeReport {
        batch_len,
        coeffs: spec.coeffs().to_vec(),
        lambda: spectrum.values().to_vec(),
        reversed: reversed.values().to_vec(),
        max_off_diag: residual.max_off_diag,
        max_abs_lambda: spectrum.max_magnitude().1,
        reset_free_max,
        reset_free_bin,
        reset_based_max: reset_based_gain(&lifted.j)?,
        j_is_zero: lifted.j.iter().all(|v| *v == 0.0),
    })
}

/// `analyze_spectrum.csv` (per bin) and `analyze_summary.csv`.
pub fn write_analyze(report: &AnalyzeReport, dir: &Path) -> Result<()> {
    let mut w = csv_writer(dir, "analyze_spectrum.csv")?;
    w.write_record(["m", "a", "lambdaRe", "lambdaIm", "lambdaAbs", "reversed"])?;
    for m in 0..report.batch_len {
        let l = report.lambda[m];
        w.write_record([
            m.to_string(),
            report.coeffs[m].to_string(),
            l.re.to_string(),
            l.im.to_string(),
            l.norm().to_string(),
            report.reversed[m].to_string(),
        ])?;
    }
    w.flush()?;
    write_summary(
        dir,
        "analyze_summary.csv",
        &[
            ("N", report.batch_len.to_string()),
            ("maxOffDiagonal", report.max_off_diag.to_string()),
            ("maxAbsLambda", report.max_abs_lambda.to_string()),
            ("resetFreeMax", report.reset_free_max.to_string()),
            ("resetFreeBin", report.reset_free_bin.to_string()),
            ("resetBasedMax", report.reset_based_max.to_string()),
            ("jIsZero", report.j_is_zero.to_string()),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub batch_len: usize,
    pub reset_free: f64,
    pub reset_based: f64,
    pub oracle: f64,
    pub reset_free_rel_err: f64,
    pub reset_based_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub oracle: PeakGain,
}

impl SweepResult {
    /// Least-squares slopes of `−log2(rel. error)` against `log2 N` for the
    /// reset-free and reset-based columns, over rows with nonzero error below
    /// one. `None` for a column with fewer than two such rows.
    pub fn convergence_orders(&self) -> (Option<f64>, Option<f64>) {
        let fit = |err: fn(&SweepRow) -> f64| {
            let pts: Vec<(f64, f64)> = self
                .rows
                .iter()
                .filter(|r| err(r) > 0.0 && err(r) < 1.0)
                .map(|r| ((r.batch_len as f64).log2(), -err(r).log2()))
                .collect();
            if pts.len() < 2 {
                return None;
            }
            let n = pts.len() as f64;
            let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            Some(sxy / sxx)
        };
        (fit(|r| r.reset_free_rel_err), fit(|r| r.reset_based_rel_err))
    }
}

/// `N = n_start · 2^k`, `k = 0..=doublings`.
pub fn doubling_schedule(n_start: usize, doublings: u32) -> Result<Vec<usize>> {
    if n_start == 0 {
        return Err(Error::invalid("n-start must be at least 1"));
    }
    (0..=doublings)
        .map(|k| {
            n_start
                .checked_mul(1usize.checked_shl(k).unwrap_or(0))
                .filter(|v| *v > 0)
                .ok_or_else(|| Error::invalid("batch length overflows"))
        })
        .collect()
}

/// Compares both finite-`N` estimates to the grid oracle along a doubling
/// schedule. Rows are computed in parallel and returned in schedule order.
pub fn sweep(system: &SystemModel, schedule: &[usize], oracle_grid: usize) -> Result<SweepResult> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) || schedule.is_empty() {
        return Err(Error::invalid("N schedule must be nonempty and strictly increasing"));
    }
    let oracle = hinf_grid_oracle(system, oracle_grid)?;
    let ss = system.to_state_space();
    let rows: Vec<Result<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = schedule
            .iter()
            .map(|&n| {
                let ss = &ss;
                scope.spawn(move || -> Result<SweepRow> {
                    let (_, reset_free) = reset_free_peak(system, n)?;
                    let reset_based = reset_based_gain(&markov_matrix(ss, n)?)?;
                    let rel = |v: f64| (oracle.value - v).abs() / oracle.value;
                    Ok(SweepRow {
                        batch_len: n,
                        reset_free,
                        reset_based,
                        oracle: oracle.value,
                        reset_free_rel_err: rel(reset_free),
                        reset_based_rel_err: rel(reset_based),
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    Ok(SweepResult { rows: rows.into_iter().collect::<Result<_>>()?, oracle })
}

/// `sweep.csv`, one row per `N`.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<()> {
    let mut w = csv_writer(dir, "sweep.csv")?;
    w.write_record(["N", "resetFree", "resetBased", "oracle", "resetFreeRelErr", "resetBasedRelErr"])?;
    for r in &result.rows {
        w.write_record([
            r.batch_len.to_string(),
            r.reset_free.to_string(),
            r.reset_based.to_string(),
            r.oracle.to_string(),
            r.reset_free_rel_err.to_string(),
            r.reset_based_rel_err.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub trace: EstimateTrace,
    /// Largest eigenvalue of `T_N M`, the value `β` should converge to.
    pub reference: f64,
    /// `argmax_m |P(e^{−jω_m})|` over `0 ≤ m ≤ N/2`.
    pub peak_bin: usize,
    /// Dominant DFT bin of the final input.
    pub final_input_bin: usize,
}

/// Runs the reset-free iteration on a simulated plant (or the transient-free
/// plant when `ideal` is set) started at rest.
pub fn estimate(system: &SystemModel, config: &PowerIterationConfig, ideal: bool) -> Result<EstimateOutcome> {
    config.validate()?;
    let ss = system.to_state_space();
    let trace = if ideal {
        let mut plant = SteadyStatePlant::new(&ss, config.batch_len)?;
        estimator::iterate_reset_free(&mut plant, config)?
    } else {
        let mut plant = PlantSession::new(ss.clone(), config.batch_len, PlantMode::ResetFree, None)?;
        estimator::iterate_reset_free(&mut plant, config)?
    };
    let spectrum = circulant_eigenvalues(&circulant_coefficients(&ss, config.batch_len)?);
    let reference = reversed_spectrum(&spectrum)?.max().1;
    let half = &spectrum.values()[..=config.batch_len / 2];
    let peak_bin = half
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (m, z)| if z.norm() > b.1 { (m, z.norm()) } else { b })
        .0;
    let final_input_bin = trace.last().map_or(0, |r| dominant_dft_bin(&r.u));
    Ok(EstimateOutcome { trace, reference, peak_bin, final_input_bin })
}

/// `estimate_trace.csv`, `estimate_batches.csv`, `estimate_snapshots.csv`
/// (first input, first updated input, final input) and `estimate_summary.csv`.
pub fn write_estimate(outcome: &EstimateOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let trace = &outcome.trace;
    let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    estimator::write_trace_csv(trace, open("estimate_trace.csv")?)?;
    estimator::write_batch_beta_csv(trace, open("estimate_batches.csv")?)?;
    let mut picks = vec![1, 2, trace.updates.len()];
    picks.dedup();
    picks.retain(|q| *q >= 1 && *q <= trace.updates.len());
    estimator::write_snapshots_csv(trace, &picks, open("estimate_snapshots.csv")?)?;
    write_summary(
        dir,
        "estimate_summary.csv",
        &[
            ("estimate", trace.estimate.to_string()),
            ("reference", outcome.reference.to_string()),
            ("shift", trace.shift.to_string()),
            ("updates", trace.updates.len().to_string()),
            ("converged", trace.converged.to_string()),
            ("peakBin", outcome.peak_bin.to_string()),
            ("finalInputBin", outcome.final_input_bin.to_string()),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub peak: PeakGain,
    /// `(|p|, arg p)` of the pole with the largest modulus and nonnegative
    /// angle, if the system has poles away from the origin.
    pub dominant_pole: Option<(f64, f64)>,
}

pub fn oracle(system: &SystemModel, grid: usize) -> Result<OracleReport> {
    let peak = hinf_grid_oracle(system, grid)?;
    let dominant_pole = system
        .poles()
        .into_iter()
        .filter(|p| p.norm() > 0.0 && p.im >= 0.0)
        .map(|p| (p.norm(), p.arg()))
        .fold(None, |best: Option<(f64, f64)>, p| match best {
            Some(b) if b.0 >= p.0 => Some(b),
            _ => Some(p),
        });
    Ok(OracleReport { peak, dominant_pole })
}

pub fn write_oracle(report: &OracleReport, dir: &Path) -> Result<()> {
    let (pole_mag, pole_angle) = report
        .dominant_pole
        .map_or((String::new(), String::new()), |(m, a)| (m.to_string(), a.to_string()));
    write_summary(
        dir,
        "oracle.csv",
        &[
            ("hinfNorm", report.peak.value.to_string()),
            ("peakFrequency", report.peak.omega.to_string()),
            ("dominantPoleMagnitude", pole_mag),
            ("dominantPoleAngle", pole_angle),
        ],
    )
}

/// Human-readable one-screen summary of a sweep.
pub fn print_sweep<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "oracle ||P||inf = {} at omega = {}", result.oracle.value, result.oracle.omega)?;
    writeln!(out, "{:>6} {:>22} {:>12} {:>22} {:>12}", "N", "reset-free", "rel.err", "reset-based", "rel.err")?;
    for r in &result.rows {
        writeln!(
            out,
            "{:>6} {:>22} {:>12.3e} {:>22} {:>12.3e}",
            r.batch_len, r.reset_free, r.reset_free_rel_err, r.reset_based, r.reset_based_rel_err
        )?;
    }
    let fmt = |o: Option<f64>| o.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
    let (free, based) = result.convergence_orders();
    writeln!(out, "observed order (error ~ N^-p): reset-free p = {}, reset-based p = {}", fmt(free), fmt(based))?;
    Ok(())
}
