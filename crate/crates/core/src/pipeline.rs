//! One fully specified run: parameters, flux, profiles, grids and times,
//! with the glue that drives both solvers and the assembly on shared grids.

use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::{kdv_box_length, COVERAGE_BAND, Assembler, AsymptoticsError, StretchedFrame};
use crate::expr::FluxExpr;
use crate::full::{full_initial_condition, required_length, resolved_grid, FieldState, FullError, FullSolver};
use crate::kdv::{kdv_initial_condition, power_of_two_grid, Branch, KdvError, KdvSolver, KdvState, DECAY_TOLERANCE};
use crate::params::{Closure, DerivedParams, ModelError, PhysicalParams};
use crate::profiles::Profile;
use crate::spectral::PeriodicGrid;
use crate::validation::{compare_fields, condition_monitor, pde_residual, ErrorReport, ValidationError};

/// Upper bound on the KdV grid spacing.
pub const MAX_KDV_SPACING: f64 = 0.1;
/// Wavenumber whose linear group velocity `3|K| kappa^2` bounds the reach of
/// dispersive radiation when sizing the KdV box.
pub const RADIATION_WAVENUMBER: f64 = 4.0;
/// Default separation of the three AP snapshots used for time differencing,
/// as a multiple of `eps`.
pub const DEFECT_SPACING_PER_EPS: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("full solver: {0}")]
    Full(#[from] FullError),
    #[error("KdV solver: {0}")]
    Kdv(#[from] KdvError),
    #[error("assembly: {0}")]
    Asymptotics(#[from] AsymptoticsError),
    #[error("validation: {0}")]
    Validation(#[from] ValidationError),
    #[error("invalid run setup: {0}")]
    Setup(String),
    #[error("at eps = {eps}: {source}")]
    AtEps {
        eps: f64,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub fn at_eps(self, eps: f64) -> Self {
        match self {
            tagged @ PipelineError::AtEps { .. } => tagged,
            other => PipelineError::AtEps {
                eps,
                source: Box::new(other),
            },
        }
    }
}

/// Optional overrides of the automatically sized grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Number of x points.
    pub n: Option<usize>,
    /// Number of zeta points (power of two).
    pub m: Option<usize>,
    /// Length of the x box.
    pub length: Option<f64>,
    /// Extra half-width added to the x box.
    pub margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: None,
            m: None,
            length: None,
            margin: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub params: PhysicalParams,
    pub closure: Closure,
    pub flux: FluxExpr,
    pub u0: Profile,
    pub phi: Profile,
    pub grid: GridSpec,
    pub t_end: f64,
    pub dt_full: Option<f64>,
    pub dt_kdv: Option<f64>,
    pub output_times: Vec<f64>,
    pub consistent: bool,
    /// Separation of the snapshots used for the AP defect; `None` gives
    /// `DEFECT_SPACING_PER_EPS * eps`; `Some(0.0)` skips the defect.
    pub defect_spacing: Option<f64>,
}

impl Problem {
    pub fn new(params: PhysicalParams, flux: FluxExpr, t_end: f64) -> Self {
        Self {
            params,
            closure: Closure::default(),
            flux,
            u0: Profile::sech2(),
            phi: Profile::Zero,
            grid: GridSpec::default(),
            t_end,
            dt_full: None,
            dt_kdv: None,
            output_times: Vec::new(),
            consistent: true,
            defect_spacing: None,
        }
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self, PipelineError> {
        let mut out = self.clone();
        out.params = self.params.with_eps(eps)?;
        Ok(out)
    }

    pub fn derived(&self) -> Result<DerivedParams, PipelineError> {
        Ok(DerivedParams::new(&self.params, self.closure)?)
    }

    pub fn outputs(&self) -> Vec<f64> {
        if self.output_times.is_empty() {
            vec![self.t_end]
        } else {
            let mut v = self.output_times.clone();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        }
    }

    fn defect_delta(&self) -> f64 {
        self.defect_spacing
            .unwrap_or(DEFECT_SPACING_PER_EPS * self.params.eps)
    }

    fn support_radius(&self) -> f64 {
        self.u0
            .support_radius(DECAY_TOLERANCE)
            .max(self.phi.support_radius(DECAY_TOLERANCE))
    }

    pub fn x_grid(&self) -> PeriodicGrid {
        let length = self.grid.length.unwrap_or_else(|| {
            required_length(&self.params, self.support_radius(), self.t_end, self.grid.margin)
        });
        match self.grid.n {
            Some(n) => PeriodicGrid::new(n, length),
            None => resolved_grid(&self.params, length),
        }
    }

    /// KdV grid covering the x box up to `t_max`.
    pub fn kdv_grid(&self, x_grid: &PeriodicGrid, t_max: f64) -> Result<PeriodicGrid, PipelineError> {
        let d = self.derived()?;
        let frame = StretchedFrame::new(d.k, self.params.eps);
        let reach = self.support_radius()
            + 3.0 * d.cap_k.abs() * RADIATION_WAVENUMBER * RADIATION_WAVENUMBER * t_max;
        let length = kdv_box_length(&frame, x_grid.length, t_max)
            .max(2.0 * reach / (1.0 - 2.0 * COVERAGE_BAND) * 1.02);
        Ok(match self.grid.m {
            Some(m) => PeriodicGrid::new(m, length),
            None => power_of_two_grid(length, (x_grid.spacing() / self.params.eps).min(MAX_KDV_SPACING)),
        })
    }

    pub fn full_solver(&self) -> FullSolver {
        FullSolver::new(self.x_grid(), self.params, self.flux.clone())
    }

    pub fn initial_fields(&self) -> Result<FieldState, PipelineError> {
        Ok(full_initial_condition(
            &self.params,
            &self.u0,
            &self.phi,
            self.x_grid(),
            self.consistent,
        )?)
    }

    pub fn solve_full(&self) -> Result<Vec<FieldState>, PipelineError> {
        self.solve_full_at(&self.outputs())
    }

    pub fn solve_full_at(&self, times: &[f64]) -> Result<Vec<FieldState>, PipelineError> {
        let state0 = self.initial_fields()?;
        let t_max = times.iter().copied().fold(0.0, f64::max);
        Ok(self.full_solver().solve(&state0, t_max, self.dt_full, times)?)
    }

    fn kdv_setup(&self, t_max: f64) -> Result<(KdvSolver, KdvState, KdvState), PipelineError> {
        let x_grid = self.x_grid();
        let zgrid = self.kdv_grid(&x_grid, t_max)?;
        let solver = KdvSolver::new(zgrid, &self.params, self.derived()?, self.flux.clone())?;
        let s1 = kdv_initial_condition(|z| self.u0.eval(z), zgrid, Branch::I)?;
        let s2 = kdv_initial_condition(|z| self.u0.eval(z), zgrid, Branch::II)?;
        Ok((solver, s1, s2))
    }

    /// Both KdV trajectories at the given times.
    pub fn solve_kdv(&self, times: &[f64]) -> Result<(Vec<KdvState>, Vec<KdvState>), PipelineError> {
        let t_max = times.iter().copied().fold(0.0, f64::max);
        let (solver, s1, s2) = self.kdv_setup(t_max)?;
        let (a, b) = rayon::join(
            || solver.solve(&s1, t_max, self.dt_kdv, times),
            || solver.solve(&s2, t_max, self.dt_kdv, times),
        );
        Ok((a?, b?))
    }

    /// Assembled leading-order fields at the given times, together with the
    /// KdV states they were built from.
    pub fn assemble_at(&self, times: &[f64]) -> Result<ApTrajectory, PipelineError> {
        let t_max = times.iter().copied().fold(0.0, f64::max);
        let (solver, s1, s2) = self.kdv_setup(t_max)?;
        let (a, b) = rayon::join(
            || solver.solve(&s1, t_max, self.dt_kdv, times),
            || solver.solve(&s2, t_max, self.dt_kdv, times),
        );
        let (traj1, traj2) = (a?, b?);
        let x_grid = self.x_grid();
        let asm = Assembler::new(solver, self.params);
        let fields = traj1
            .iter()
            .zip(&traj2)
            .map(|(s1, s2)| asm.assemble(s1, s2, &x_grid, s1.t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ApTrajectory {
            fields,
            branch_i: traj1,
            branch_ii: traj2,
        })
    }

    /// Residual `R = full - AP` at every output time, with the AP defect
    /// measured from snapshots at `t - delta, t, t + delta`.
    pub fn compare(&self) -> Result<ComparisonRun, PipelineError> {
        let outputs = self.outputs();
        let delta = self.defect_delta();
        let mut ap_times = outputs.clone();
        if delta > 0.0 {
            for &t in &outputs {
                if t - delta >= 0.0 {
                    ap_times.push(t - delta);
                    ap_times.push(t + delta);
                }
            }
        }
        ap_times.sort_by(f64::total_cmp);
        ap_times.dedup();

        let full = self.solve_full_at(&outputs)?;
        let ap = self.assemble_at(&ap_times)?;
        let index_of = |t: f64| ap.fields.iter().position(|s| s.t == t);

        let mut reports = Vec::with_capacity(outputs.len());
        let mut ap_at_outputs = Vec::with_capacity(outputs.len());
        for (full_state, &t) in full.iter().zip(&outputs) {
            let i = index_of(t).expect("output time is in the AP schedule");
            let mut report = compare_fields(full_state, &ap.fields[i], self.params.eps)?;
            if delta > 0.0 && t - delta >= 0.0 {
                let (lo, hi) = (index_of(t - delta), index_of(t + delta));
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    let window = [ap.fields[lo].clone(), ap.fields[i].clone(), ap.fields[hi].clone()];
                    let defect = pde_residual(&window, &self.params, &self.flux)?;
                    report.pde_residual_sup = Some(defect[0].sup());
                }
            }
            report.monitors = vec![
                condition_monitor(&ap.branch_i[i]),
                condition_monitor(&ap.branch_ii[i]),
            ];
            reports.push(report);
            ap_at_outputs.push(ap.fields[i].clone());
        }
        Ok(ComparisonRun {
            reports,
            full,
            ap: ap_at_outputs,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ApTrajectory {
    pub fields: Vec<FieldState>,
    pub branch_i: Vec<KdvState>,
    pub branch_ii: Vec<KdvState>,
}

#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub reports: Vec<ErrorReport>,
    pub full: Vec<FieldState>,
    pub ap: Vec<FieldState>,
}
