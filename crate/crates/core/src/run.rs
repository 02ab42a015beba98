//! Executes the configured mode and collects its artifacts and manifest.
//! Pipelines only compute; the single write happens in [`run`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::full::FieldState;
use crate::output::{fields_csv, kdv_csv, series_csv, sweep_csv, write_artifacts, Artifact, OutputError};
use crate::params::{Closure, DerivedParams, PhysicalParams};
use crate::pipeline::{PipelineError, Problem};
use crate::profiles::Profile;
use crate::validation::{eps_sweep, fast_mode_diagnostic, ErrorReport, FastModeReport, SweepSlopes};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const PLOT_NAME: &str = "plot.gp";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
}

impl ErrorRecord {
    pub fn from_pipeline(e: &PipelineError) -> Self {
        let kind = match e {
            PipelineError::AtEps { source, .. } => return Self::from_pipeline(source).with_message(e.to_string()),
            PipelineError::Model(_) => "model",
            PipelineError::Full(_) => "full-solver",
            PipelineError::Kdv(_) => "kdv-solver",
            PipelineError::Asymptotics(_) => "assembly",
            PipelineError::Validation(_) => "validation",
            PipelineError::Setup(_) => "setup",
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }

    fn with_message(mut self, message: String) -> Self {
        self.message = message;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRecord {
    pub n: usize,
    pub length: f64,
    pub dx: f64,
    pub m: usize,
    pub zeta_length: f64,
    pub dzeta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeRecord {
    pub t_end: f64,
    pub dt_full: f64,
    pub dt_kdv: Option<f64>,
    pub output_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    /// `full`, `ap`, `residual`, `kdv`, `sweep`, `fast-mode` or `plot`.
    pub source: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct FastModeRecord {
    pub samples_per_period: f64,
    pub expected_frequency: f64,
    pub probe_x: f64,
    pub inconsistent_frequency: f64,
    pub inconsistent_max_energy: f64,
    pub consistent_frequency: f64,
    pub consistent_max_energy: f64,
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub software: &'static str,
    pub version: &'static str,
    pub mode: Mode,
    pub status: &'static str,
    pub error: Option<ErrorRecord>,
    pub wall_time_s: f64,
    pub params: PhysicalParams,
    pub closure: Closure,
    pub derived: Option<DerivedParams>,
    pub flux: String,
    pub u0: Profile,
    pub phi: Profile,
    pub consistent: bool,
    pub grid: Option<GridRecord>,
    pub time: Option<TimeRecord>,
    pub eps_list: Option<Vec<f64>>,
    pub reports: Vec<ErrorReport>,
    pub slopes: Option<SweepSlopes>,
    pub monotone_sup_u: Option<bool>,
    pub fast_mode: Option<FastModeRecord>,
    pub files: Vec<FileRecord>,
}

impl Manifest {
    fn new(config: &RunConfig) -> Self {
        let pr = &config.problem;
        Self {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            mode: config.mode,
            status: "ok",
            error: None,
            wall_time_s: 0.0,
            params: pr.params,
            closure: pr.closure,
            derived: pr.derived().ok(),
            flux: pr.flux.source().to_string(),
            u0: pr.u0,
            phi: pr.phi,
            consistent: pr.consistent,
            grid: None,
            time: None,
            eps_list: None,
            reports: Vec::new(),
            slopes: None,
            monotone_sup_u: None,
            fast_mode: None,
            files: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: Manifest,
    /// Data files and plot script; the manifest is rendered separately.
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    /// Every file to write, manifest last. A failed run keeps only the
    /// manifest.
    pub fn files(&self) -> Vec<Artifact> {
        let mut out = if self.manifest.is_ok() {
            self.artifacts.clone()
        } else {
            Vec::new()
        };
        out.push(Artifact::new(MANIFEST_NAME, self.manifest.to_json()));
        out
    }
}

struct Collected {
    artifacts: Vec<Artifact>,
    files: Vec<FileRecord>,
}

impl Collected {
    fn new() -> Self {
        Self {
            artifacts: Vec::new(),
            files: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, source: &'static str, contents: String) {
        self.files.push(FileRecord {
            name: name.to_string(),
            source,
        });
        self.artifacts.push(Artifact::new(name, contents));
    }
}

fn grid_record(pr: &Problem) -> Result<GridRecord, PipelineError> {
    let x = pr.x_grid();
    let z = pr.kdv_grid(&x, pr.t_end)?;
    Ok(GridRecord {
        n: x.n,
        length: x.length,
        dx: x.spacing(),
        m: z.n,
        zeta_length: z.length,
        dzeta: z.spacing(),
    })
}

fn time_record(pr: &Problem) -> TimeRecord {
    TimeRecord {
        t_end: pr.t_end,
        dt_full: pr.dt_full.unwrap_or_else(|| pr.full_solver().default_dt()),
        dt_kdv: pr.dt_kdv,
        output_times: pr.outputs(),
    }
}

fn last_time_plot(file: &str, t: f64, columns: &[(usize, &str)], logy: bool) -> String {
    let mut s = String::from("set datafile separator ','\nset key top right\nset xlabel 'x'\n");
    if logy {
        s.push_str("set logscale y\n");
    }
    let parts: Vec<String> = columns
        .iter()
        .enumerate()
        .map(|(i, (col, title))| {
            let f = if i == 0 { format!("'{file}'") } else { "''".to_string() };
            format!("{f} using 2:(abs($1 - {t:e}) < 1e-12 ? ${col} : 1/0) every ::1 with lines title '{title}'")
        })
        .collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    s
}

fn sweep_plot(t: f64) -> String {
    format!(
        "set datafile separator ','\nset logscale xy\nset xlabel 'eps'\nset ylabel 'error'\nset key top left\n\
         sel(c) = abs($2 - {t:e}) < 1e-12 ? column(c) : 1/0\n\
         plot 'sweep.csv' every ::1 using 1:(sel(3)) with linespoints title 'sup_u', \\\n     \
         '' every ::1 using 1:(sel(4)) with linespoints title 'sup_v', \\\n     \
         '' every ::1 using 1:(sel(7)) with linespoints title 'pde_residual_sup', \\\n     \
         x title 'slope 1'\n"
    )
}

fn fast_mode_plot() -> String {
    "set datafile separator ','\nset logscale y\nset xlabel 't'\nset ylabel 'sum (a u - b v)^2 dx'\n\
     plot 'fast_mode.csv' every ::1 using 1:2 with lines title 'consistent', \\\n     \
     '' every ::1 using 1:3 with lines title 'inconsistent'\n"
        .to_string()
}

fn residual(full: &FieldState, ap: &FieldState) -> FieldState {
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
    FieldState {
        grid: full.grid,
        u: diff(&full.u, &ap.u),
        ut: diff(&full.ut, &ap.ut),
        v: diff(&full.v, &ap.v),
        vt: diff(&full.vt, &ap.vt),
        t: full.t,
    }
}

/// Equally spaced sample times on `[0, t_end]` with at least
/// `samples_per_period` points per fast period.
pub fn fast_sample_times(p: &PhysicalParams, t_end: f64, samples_per_period: f64) -> Vec<f64> {
    let h = 2.0 * PI / p.fast_frequency() / samples_per_period;
    let n = (t_end / h).ceil().max(2.0) as usize;
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

fn fast_mode_pair(config: &RunConfig) -> Result<(FastModeReport, FastModeReport), PipelineError> {
    let pr = &config.problem;
    if pr.t_end <= 0.0 {
        return Err(PipelineError::Setup(
            "diagnose-fast-mode needs t_end > 0".to_string(),
        ));
    }
    let times = fast_sample_times(&pr.params, pr.t_end, config.fast_samples_per_period);
    let run = |consistent: bool| -> Result<FastModeReport, PipelineError> {
        let mut p = pr.clone();
        p.consistent = consistent;
        let traj = p.solve_full_at(&times)?;
        Ok(fast_mode_diagnostic(&traj, &p.params)?)
    };
    let (c, i) = rayon::join(|| run(true), || run(false));
    Ok((c?, i?))
}

fn execute_mode(config: &RunConfig, manifest: &mut Manifest, out: &mut Collected) -> Result<(), PipelineError> {
    let pr = &config.problem;
    pr.derived()?;
    let t_last = pr.outputs().last().copied().unwrap_or(pr.t_end);
    match config.mode {
        Mode::SolveFull => {
            manifest.grid = Some(grid_record(pr)?);
            manifest.time = Some(time_record(pr));
            let traj = pr.solve_full()?;
            out.push("fields_full.csv", "full", fields_csv(&traj));
            out.push(PLOT_NAME, "plot", last_time_plot("fields_full.csv", t_last, &[(3, "u"), (5, "v")], false));
        }
        Mode::SolveKdv => {
            manifest.grid = Some(grid_record(pr)?);
            manifest.time = Some(time_record(pr));
            let (a, b) = pr.solve_kdv(&pr.outputs())?;
            out.push("kdv_I.csv", "kdv", kdv_csv(&a));
            out.push("kdv_II.csv", "kdv", kdv_csv(&b));
            let mut plot = last_time_plot("kdv_I.csv", t_last, &[(3, "S_I")], false);
            plot = plot.replace("set xlabel 'x'", "set xlabel 'zeta'");
            out.push(PLOT_NAME, "plot", plot);
        }
        Mode::Assemble => {
            manifest.grid = Some(grid_record(pr)?);
            manifest.time = Some(time_record(pr));
            let ap = pr.assemble_at(&pr.outputs())?;
            out.push("fields_ap.csv", "ap", fields_csv(&ap.fields));
            out.push(PLOT_NAME, "plot", last_time_plot("fields_ap.csv", t_last, &[(3, "u_ap"), (5, "v_ap")], false));
        }
        Mode::Compare => {
            manifest.grid = Some(grid_record(pr)?);
            manifest.time = Some(time_record(pr));
            let run = pr.compare()?;
            let res: Vec<FieldState> = run.full.iter().zip(&run.ap).map(|(f, a)| residual(f, a)).collect();
            out.push("fields_full.csv", "full", fields_csv(&run.full));
            out.push("fields_ap.csv", "ap", fields_csv(&run.ap));
            out.push("fields_residual.csv", "residual", fields_csv(&res));
            out.push(PLOT_NAME, "plot", last_time_plot("fields_residual.csv", t_last, &[(3, "R_u"), (5, "R_v")], false));
            manifest.reports = run.reports;
        }
        Mode::Sweep => {
            manifest.eps_list = Some(config.eps_list.clone());
            manifest.time = Some(time_record(pr));
            let sweep = eps_sweep(pr, &config.eps_list)?;
            out.push("sweep.csv", "sweep", sweep_csv(&sweep.rows));
            out.push(PLOT_NAME, "plot", sweep_plot(t_last));
            manifest.reports = sweep.rows;
            manifest.slopes = Some(sweep.slopes);
            manifest.monotone_sup_u = Some(sweep.monotone_sup_u);
        }
        Mode::DiagnoseFastMode => {
            manifest.grid = Some(grid_record(pr)?);
            manifest.time = Some(time_record(pr));
            let (c, i) = fast_mode_pair(config)?;
            out.push(
                "fast_mode.csv",
                "fast-mode",
                series_csv(
                    &["t", "energy_consistent", "energy_inconsistent", "probe_consistent", "probe_inconsistent"],
                    &[&c.times, &c.energy, &i.energy, &c.probe, &i.probe],
                ),
            );
            out.push(PLOT_NAME, "plot", fast_mode_plot());
            manifest.fast_mode = Some(FastModeRecord {
                samples_per_period: config.fast_samples_per_period,
                expected_frequency: i.expected_frequency,
                probe_x: i.probe_x,
                inconsistent_frequency: i.dominant_frequency,
                inconsistent_max_energy: i.max_energy,
                consistent_frequency: c.dominant_frequency,
                consistent_max_energy: c.max_energy,
                energy_ratio: i.max_energy / c.max_energy,
            });
        }
    }
    Ok(())
}

/// Runs the configured mode without touching the filesystem. Pipeline
/// failures are recorded in the manifest.
pub fn execute(config: &RunConfig) -> RunOutput {
    let start = Instant::now();
    let mut manifest = Manifest::new(config);
    let mut out = Collected::new();
    if let Err(e) = execute_mode(config, &mut manifest, &mut out) {
        manifest.status = "error";
        manifest.error = Some(ErrorRecord::from_pipeline(&e));
        out = Collected::new();
    }
    manifest.files = out.files;
    manifest.files.push(FileRecord {
        name: MANIFEST_NAME.to_string(),
        source: "manifest",
    });
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    RunOutput {
        manifest,
        artifacts: out.artifacts,
    }
}

/// Executes and writes the outputs into `out_dir` (the configured directory
/// when `None`). Returns the written paths along with the run output.
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<(RunOutput, Vec<PathBuf>), OutputError> {
    let output = execute(config);
    let dir = out_dir.unwrap_or(&config.out_dir);
    let paths = write_artifacts(dir, &output.files())?;
    Ok((output, paths))
}
