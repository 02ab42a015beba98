//! Empirical checks of the asymptotic construction: residual norms, the
//! defect of the approximation in the full equations, convergence slopes
//! over `eps`, the fast-mode diagnostic and the boundedness monitor.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

use crate::expr::FluxExpr;
use crate::full::FieldState;
use crate::kdv::KdvState;
use crate::params::PhysicalParams;
use crate::pipeline::{PipelineError, Problem};
use crate::spectral::{PeriodicGrid, Spectral};

/// Minimum samples per expected fast period.
pub const MIN_SAMPLES_PER_FAST_PERIOD: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("grids or times differ between the compared states")]
    GridMismatch,
    #[error("need at least 3 equally spaced snapshots, got {0}")]
    InsufficientSnapshots(usize),
    #[error("snapshots are not equally spaced in time")]
    UnevenSnapshots,
    #[error("trajectory has {per_period:.2} samples per fast period, need at least {needed}")]
    Undersampled { per_period: f64, needed: f64 },
    #[error("eps list must hold at least 3 strictly decreasing positive values")]
    BadEpsList,
    #[error("slope fit needs at least 2 points with positive finite values")]
    DegenerateFit,
}

/// Bounds reported for one KdV state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub t: f64,
    pub max_s: f64,
    pub max_d1: f64,
    pub max_d2: f64,
    pub max_d3: f64,
    /// `max(|s_0|, |s_{M-1}|)`, the decay proxy.
    pub boundary_magnitude: f64,
}

/// `max|S|`, `max|S^(k)|` for `k = 1, 2, 3` (spectral) and the end-cell
/// magnitude.
pub fn condition_monitor(state: &KdvState) -> ConditionReport {
    let sp = Spectral::new(state.grid);
    let modes = sp.forward(&state.s);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = state.s.len();
    ConditionReport {
        t: state.t,
        max_s: sup(&state.s),
        max_d1: sup(&sp.derivative_of_modes(&modes, 1)),
        max_d2: sup(&sp.derivative_of_modes(&modes, 2)),
        max_d3: sup(&sp.derivative_of_modes(&modes, 3)),
        boundary_magnitude: state.s[0].abs().max(state.s[n - 1].abs()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub eps: f64,
    pub t: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub pde_residual_sup: Option<f64>,
    pub monitors: Vec<ConditionReport>,
}

pub fn sup_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `sqrt(sum d_j^2 dx)` on a periodic grid.
pub fn l2_norm(v: impl IntoIterator<Item = f64>, dx: f64) -> f64 {
    (v.into_iter().map(|x| x * x).sum::<f64>() * dx).sqrt()
}

/// Norms of `full - ap` for `u` and `v`.
pub fn compare_fields(full: &FieldState, ap: &FieldState, eps: f64) -> Result<ErrorReport, ValidationError> {
    if full.grid != ap.grid || full.t != ap.t {
        return Err(ValidationError::GridMismatch);
    }
    let dx = full.grid.spacing();
    let du = || full.u.iter().zip(&ap.u).map(|(a, b)| a - b);
    let dv = || full.v.iter().zip(&ap.v).map(|(a, b)| a - b);
    Ok(ErrorReport {
        eps,
        t: full.t,
        sup_u: sup_norm(du()),
        sup_v: sup_norm(dv()),
        l2_u: l2_norm(du(), dx),
        l2_v: l2_norm(dv(), dx),
        pde_residual_sup: None,
        monitors: Vec::new(),
    })
}

/// Sup-norm defect of both lines of the full system at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Defect {
    pub t: f64,
    pub line_u: f64,
    pub line_v: f64,
}

impl Defect {
    pub fn sup(&self) -> f64 {
        self.line_u.max(self.line_v)
    }
}

/// Substitutes a trajectory into the full equations, using centered second
/// differences in time and spectral second derivatives in space. Returns
/// one entry per interior snapshot.
pub fn pde_residual(
    trajectory: &[FieldState],
    p: &PhysicalParams,
    f: &FluxExpr,
) -> Result<Vec<Defect>, ValidationError> {
    if trajectory.len() < 3 {
        return Err(ValidationError::InsufficientSnapshots(trajectory.len()));
    }
    let grid = trajectory[0].grid;
    if trajectory.iter().any(|s| s.grid != grid) {
        return Err(ValidationError::GridMismatch);
    }
    let h = trajectory[1].t - trajectory[0].t;
    for w in trajectory.windows(2) {
        let step = w[1].t - w[0].t;
        if !(h > 0.0 && (step - h).abs() <= 1e-9 * h.max(w[1].t.abs())) {
            return Err(ValidationError::UnevenSnapshots);
        }
    }
    let sp = Spectral::new(grid);
    let e3 = p.eps.powi(3);
    let e2 = p.eps * p.eps;
    let mut out = Vec::with_capacity(trajectory.len() - 2);
    for w in trajectory.windows(3) {
        let (prev, mid, next) = (&w[0], &w[1], &w[2]);
        let uxx = sp.derivative(&mid.u, 2);
        let vxx = sp.derivative(&mid.v, 2);
        let mut line_u: f64 = 0.0;
        let mut line_v: f64 = 0.0;
        for j in 0..grid.n {
            let utt = (next.u[j] - 2.0 * mid.u[j] + prev.u[j]) / (h * h);
            let vtt = (next.v[j] - 2.0 * mid.v[j] + prev.v[j]) / (h * h);
            let q = p.a * mid.u[j] - p.b * mid.v[j];
            let fv = e2 * f.eval(mid.u[j], mid.v[j]);
            let ru = e3 * (utt - p.k1 * p.k1 * uxx[j]) + q - fv;
            let rv = e3 * (vtt - p.k2 * p.k2 * vxx[j]) - q + fv;
            line_u = line_u.max(ru.abs());
            line_v = line_v.max(rv.abs());
        }
        out.push(Defect {
            t: mid.t,
            line_u,
            line_v,
        });
    }
    Ok(out)
}

/// Least-squares slope of `log(error)` against `log(eps)`.
pub fn fit_loglog_slope(eps: &[f64], errors: &[f64]) -> Result<f64, ValidationError> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(errors)
        .filter(|(e, r)| **e > 0.0 && **r > 0.0 && e.is_finite() && r.is_finite())
        .map(|(e, r)| (e.ln(), r.ln()))
        .collect();
    if pts.len() < 2 || pts.len() != eps.len() {
        return Err(ValidationError::DegenerateFit);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(ValidationError::DegenerateFit);
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSlopes {
    pub t: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub pde_residual_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<ErrorReport>,
    /// Slopes at the final output time.
    pub slopes: SweepSlopes,
    /// Whether the sup-norm of `R_u` at the final time decreases with eps.
    pub monotone_sup_u: bool,
}

pub fn check_eps_list(eps_list: &[f64]) -> Result<(), ValidationError> {
    let ok = eps_list.len() >= 3
        && eps_list.iter().all(|e| e.is_finite() && *e > 0.0)
        && eps_list.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(ValidationError::BadEpsList)
    }
}

/// Slopes of each metric over `rows` at time `t`.
pub fn sweep_slopes(rows: &[ErrorReport], t: f64) -> Result<SweepSlopes, ValidationError> {
    let at_t: Vec<&ErrorReport> = rows.iter().filter(|r| r.t == t).collect();
    let eps: Vec<f64> = at_t.iter().map(|r| r.eps).collect();
    let fit = |get: &dyn Fn(&ErrorReport) -> f64| -> Result<f64, ValidationError> {
        let e: Vec<f64> = at_t.iter().map(|r| get(r)).collect();
        fit_loglog_slope(&eps, &e)
    };
    let pde = if at_t.iter().all(|r| r.pde_residual_sup.is_some()) {
        Some(fit(&|r| r.pde_residual_sup.unwrap_or(0.0))?)
    } else {
        None
    };
    Ok(SweepSlopes {
        t,
        sup_u: fit(&|r| r.sup_u)?,
        sup_v: fit(&|r| r.sup_v)?,
        l2_u: fit(&|r| r.l2_u)?,
        l2_v: fit(&|r| r.l2_v)?,
        pde_residual_sup: pde,
    })
}

/// Runs the comparison for every `eps` (in parallel when a rayon pool with
/// more than one thread is active) and fits convergence slopes. Rows are
/// ordered by decreasing `eps`, then time.
pub fn eps_sweep(problem: &Problem, eps_list: &[f64]) -> Result<SweepResult, PipelineError> {
    check_eps_list(eps_list)?;
    use rayon::prelude::*;
    let per_eps: Vec<Result<Vec<ErrorReport>, PipelineError>> = eps_list
        .par_iter()
        .map(|&eps| {
            problem
                .with_eps(eps)
                .and_then(|p| p.compare())
                .map(|run| run.reports)
                .map_err(|e| e.at_eps(eps))
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_eps {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps).then(a.t.total_cmp(&b.t)));
    let t_final = problem.outputs().last().copied().unwrap_or(problem.t_end);
    let slopes = sweep_slopes(&rows, t_final)?;
    let finals: Vec<f64> = rows.iter().filter(|r| r.t == t_final).map(|r| r.sup_u).collect();
    let monotone_sup_u = finals.windows(2).all(|w| w[1] < w[0]);
    Ok(SweepResult {
        rows,
        slopes,
        monotone_sup_u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FastModeReport {
    pub probe_x: f64,
    /// `max_t sum (a u - b v)^2 dx`
    pub max_energy: f64,
    pub max_probe_amplitude: f64,
    /// Angular frequency of the spectral peak of `a u - b v` at the probe.
    pub dominant_frequency: f64,
    pub expected_frequency: f64,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub probe: Vec<f64>,
}

impl FastModeReport {
    pub fn relative_frequency_error(&self) -> f64 {
        (self.dominant_frequency - self.expected_frequency).abs() / self.expected_frequency
    }
}

/// Fast-coordinate energy over time and the dominant oscillation frequency
/// at the grid point nearest `x = 0`.
pub fn fast_mode_diagnostic(
    trajectory: &[FieldState],
    p: &PhysicalParams,
) -> Result<FastModeReport, ValidationError> {
    if trajectory.len() < 3 {
        return Err(ValidationError::InsufficientSnapshots(trajectory.len()));
    }
    let grid: PeriodicGrid = trajectory[0].grid;
    let h = trajectory[1].t - trajectory[0].t;
    for w in trajectory.windows(2) {
        let step = w[1].t - w[0].t;
        if !(h > 0.0 && (step - h).abs() <= 1e-9 * h.max(w[1].t.abs())) {
            return Err(ValidationError::UnevenSnapshots);
        }
        if w[1].grid != grid {
            return Err(ValidationError::GridMismatch);
        }
    }
    let expected = p.fast_frequency();
    let period = 2.0 * PI / expected;
    let per_period = period / h;
    if per_period < MIN_SAMPLES_PER_FAST_PERIOD {
        return Err(ValidationError::Undersampled {
            per_period,
            needed: MIN_SAMPLES_PER_FAST_PERIOD,
        });
    }
    let probe_index = grid.n / 2;
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    let energy: Vec<f64> = trajectory.iter().map(|s| s.fast_mode_energy(p)).collect();
    let probe: Vec<f64> = trajectory
        .iter()
        .map(|s| p.a * s.u[probe_index] - p.b * s.v[probe_index])
        .collect();
    Ok(FastModeReport {
        probe_x: grid.point(probe_index),
        max_energy: energy.iter().copied().fold(0.0, f64::max),
        max_probe_amplitude: sup_norm(probe.iter().copied()),
        dominant_frequency: dominant_angular_frequency(&probe, h),
        expected_frequency: expected,
        times,
        energy,
        probe,
    })
}

/// Peak of the Hann-windowed, zero-padded spectrum of `signal - mean`,
/// refined by a parabola through the three bins around the maximum.
pub fn dominant_angular_frequency(signal: &[f64], dt: f64) -> f64 {
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let padded = (n * 16).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); padded];
    for (j, x) in signal.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * j as f64 / (n - 1) as f64).cos();
        buf[j] = Complex64::new((x - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let mags: Vec<f64> = buf[..padded / 2].iter().map(|z| z.norm()).collect();
    // Skip the bins dominated by the window's DC leakage.
    let start = (2 * padded / n).max(1);
    let (mut best, mut best_mag) = (start, 0.0);
    for (j, &m) in mags.iter().enumerate().skip(start) {
        if m > best_mag {
            best = j;
            best_mag = m;
        }
    }
    let mut offset = 0.0;
    if best > 0 && best + 1 < mags.len() {
        let (a, b, c) = (mags[best - 1], mags[best], mags[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            offset = 0.5 * (a - c) / denom;
        }
    }
    2.0 * PI * (best as f64 + offset) / (padded as f64 * dt)
}
