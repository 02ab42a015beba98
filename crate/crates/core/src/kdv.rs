//! Pseudospectral integration of the two leading-order travelling-wave
//! problems
//!
//! ```text
//! branch I :  S_t =  K S_zzz - h(S)_z
//! branch II:  S_t = -K S_zzz + h(S)_z
//! ```
//!
//! on a periodic box. The dispersive term is integrated exactly per mode
//! (integrating factor) and the flux divergence with classical RK4 in the
//! integrating-factor variables (Lawson RK4).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::FluxExpr;
use crate::params::{DerivedParams, PhysicalParams};
use crate::profiles::decays_at_ends;
use crate::spectral::{boundary_energy_fraction, PeriodicGrid, Spectral};

/// Relative threshold for the end-cell decay check of initial data.
pub const DECAY_TOLERANCE: f64 = 1e-8;
/// Largest admissible fraction of `sum s^2` in the boundary band.
pub const WRAP_TOLERANCE: f64 = 1e-6;
/// Stability constant in `dt <= C * dzeta / max|h'|`.
pub const NONLINEAR_CFL: f64 = 1.0;
/// Safety factor used by the default step `0.25 * dzeta / max(1, max|h'|)`.
pub const DEFAULT_CFL: f64 = 0.25;
/// The default step is re-estimated after this many steps.
pub const DT_REESTIMATE_INTERVAL: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdvError {
    #[error("KdV grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("initial profile does not decay at the box ends: end value {boundary:e} vs peak {peak:e}")]
    NonDecayingProfile { boundary: f64, peak: f64 },
    #[error("solution blew up at t = {t}: max|S| = {max_abs} exceeds the admissible bound {omega_u}")]
    BlowUp { t: f64, max_abs: f64, omega_u: f64 },
    #[error("step dt = {dt} at t = {t} exceeds the nonlinear stability limit {limit}")]
    StepTooLarge { t: f64, dt: f64, limit: f64 },
    #[error("boundary band carries a fraction {fraction:e} of the L2 mass at t = {t}; the periodic box is too small")]
    WrapAround { t: f64, fraction: f64 },
    #[error("invalid time arguments: {0}")]
    InvalidTime(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    I,
    II,
}

impl Branch {
    /// `+1` for branch I, `-1` for branch II.
    pub fn sign(self) -> f64 {
        match self {
            Branch::I => 1.0,
            Branch::II => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::I => "I",
            Branch::II => "II",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdvState {
    pub branch: Branch,
    pub grid: PeriodicGrid,
    pub s: Vec<f64>,
    pub t: f64,
}

impl KdvState {
    pub fn new(branch: Branch, grid: PeriodicGrid, s: Vec<f64>, t: f64) -> Result<Self, KdvError> {
        if !grid.n.is_power_of_two() {
            return Err(KdvError::NotPowerOfTwo(grid.n));
        }
        assert_eq!(s.len(), grid.n, "sample count must match the grid");
        Ok(Self { branch, grid, s, t })
    }

    /// `sum s * dzeta`
    pub fn mass(&self) -> f64 {
        self.s.iter().sum::<f64>() * self.grid.spacing()
    }

    /// `sum s^2 * dzeta`
    pub fn l2_squared(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum::<f64>() * self.grid.spacing()
    }

    pub fn max_abs(&self) -> f64 {
        self.s.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Mirror image `s(-zeta)` on the same periodic grid.
    pub fn reflected(&self) -> Self {
        let n = self.grid.n;
        let s = (0..n).map(|j| self.s[(n - j) % n]).collect();
        Self {
            s,
            ..self.clone()
        }
    }
}

/// Samples `0.5 * u0(zeta_j)` for either branch.
pub fn kdv_initial_condition(
    u0: impl Fn(f64) -> f64,
    grid: PeriodicGrid,
    branch: Branch,
) -> Result<KdvState, KdvError> {
    let s: Vec<f64> = grid.points().into_iter().map(|z| 0.5 * u0(z)).collect();
    if !decays_at_ends(&s, DECAY_TOLERANCE) {
        let peak = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        return Err(KdvError::NonDecayingProfile {
            boundary: s[0].abs().max(s[grid.n - 1].abs()),
            peak,
        });
    }
    KdvState::new(branch, grid, s, 0.0)
}

/// Stepping machinery for one grid, one flux and one set of coefficients.
#[derive(Debug, Clone)]
pub struct KdvSolver {
    spectral: Spectral,
    derived: DerivedParams,
    flux: FluxExpr,
    omega_u: f64,
    wrap_guard: bool,
}

impl KdvSolver {
    pub fn new(
        grid: PeriodicGrid,
        params: &PhysicalParams,
        derived: DerivedParams,
        flux: FluxExpr,
    ) -> Result<Self, KdvError> {
        if !grid.n.is_power_of_two() {
            return Err(KdvError::NotPowerOfTwo(grid.n));
        }
        Ok(Self {
            spectral: Spectral::new(grid),
            derived,
            flux,
            omega_u: params.omega_u,
            wrap_guard: true,
        })
    }

    /// Disables the boundary-band check, for genuinely periodic data.
    pub fn without_wrap_guard(mut self) -> Self {
        self.wrap_guard = false;
        self
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.spectral.grid()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    pub fn flux(&self) -> &FluxExpr {
        &self.flux
    }

    /// Linear symbol `L(kappa) = -i sign K kappa^3`, so `s_hat' = L s_hat + N`.
    fn linear_symbol(&self, j: usize, sign: f64) -> Complex64 {
        let kappa = self.grid().odd_wavenumber(j);
        Complex64::new(0.0, -sign * self.derived.cap_k * kappa * kappa * kappa)
    }

    /// Flux divergence term `-sign * i kappa * FFT(h(P s))`, dealiased.
    fn nonlinear(&self, modes: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = modes.len();
        if self.flux.is_zero() || self.derived.flux_scale == 0.0 {
            return vec![Complex64::new(0.0, 0.0); n];
        }
        let mut buf = modes.to_vec();
        self.spectral.dealias(&mut buf);
        self.spectral.inverse_in_place(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(self.derived.h(&self.flux, z.re), 0.0);
        }
        self.spectral.forward_in_place(&mut buf);
        for (j, z) in buf.iter_mut().enumerate() {
            if self.spectral.keep_mode(j) {
                let kappa = self.grid().odd_wavenumber(j);
                *z *= Complex64::new(0.0, -sign * kappa);
            } else {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        buf
    }

    /// `S_t` in physical space.
    pub fn rhs(&self, state: &KdvState) -> Vec<f64> {
        let sign = state.branch.sign();
        let modes = self.spectral.forward(&state.s);
        let nl = self.nonlinear(&modes, sign);
        let total: Vec<Complex64> = modes
            .iter()
            .zip(&nl)
            .enumerate()
            .map(|(j, (z, n))| self.linear_symbol(j, sign) * z + n)
            .collect();
        self.spectral.inverse(&total)
    }

    /// `max |h'(s_j)|` by central differences.
    pub fn max_flux_slope(&self, s: &[f64]) -> f64 {
        if self.flux.is_zero() || self.derived.flux_scale == 0.0 {
            return 0.0;
        }
        s.iter()
            .map(|&x| {
                let d = 1e-6 * x.abs().max(1.0);
                ((self.derived.h(&self.flux, x + d) - self.derived.h(&self.flux, x - d)) / (2.0 * d))
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn default_dt(&self, state: &KdvState) -> f64 {
        DEFAULT_CFL * self.grid().spacing() / self.max_flux_slope(&state.s).max(1.0)
    }

    /// One Lawson-RK4 step of size `dt > 0`.
    pub fn step(&self, state: &KdvState, dt: f64) -> Result<KdvState, KdvError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(KdvError::InvalidTime(format!("dt must be > 0, got {dt}")));
        }
        let slope = self.max_flux_slope(&state.s);
        if slope > 0.0 {
            let limit = NONLINEAR_CFL * self.grid().spacing() / slope;
            if dt > limit {
                return Err(KdvError::StepTooLarge {
                    t: state.t,
                    dt,
                    limit,
                });
            }
        }
        let sign = state.branch.sign();
        let n = state.s.len();
        let s0 = self.spectral.forward(&state.s);
        let e_full: Vec<Complex64> = (0..n).map(|j| (self.linear_symbol(j, sign) * dt).exp()).collect();
        let e_half: Vec<Complex64> = (0..n)
            .map(|j| (self.linear_symbol(j, sign) * (0.5 * dt)).exp())
            .collect();

        let next = if self.flux.is_zero() || self.derived.flux_scale == 0.0 {
            s0.iter().zip(&e_full).map(|(z, e)| z * e).collect::<Vec<_>>()
        } else {
            let h = 0.5 * dt;
            let k1 = self.nonlinear(&s0, sign);
            let a: Vec<Complex64> = (0..n).map(|j| e_half[j] * (s0[j] + h * k1[j])).collect();
            let k2 = self.nonlinear(&a, sign);
            let b: Vec<Complex64> = (0..n).map(|j| e_half[j] * s0[j] + h * k2[j]).collect();
            let k3 = self.nonlinear(&b, sign);
            let c: Vec<Complex64> = (0..n)
                .map(|j| e_full[j] * s0[j] + dt * e_half[j] * k3[j])
                .collect();
            let k4 = self.nonlinear(&c, sign);
            (0..n)
                .map(|j| {
                    e_full[j] * s0[j]
                        + (dt / 6.0)
                            * (e_full[j] * k1[j] + 2.0 * e_half[j] * (k2[j] + k3[j]) + k4[j])
                })
                .collect()
        };

        let s = self.spectral.inverse(&next);
        let t = state.t + dt;
        let out = KdvState {
            branch: state.branch,
            grid: state.grid,
            s,
            t,
        };
        let max_abs = out.max_abs();
        if max_abs.is_nan() || max_abs > self.omega_u {
            return Err(KdvError::BlowUp {
                t,
                max_abs,
                omega_u: self.omega_u,
            });
        }
        Ok(out)
    }

    fn check_wrap(&self, state: &KdvState) -> Result<(), KdvError> {
        if !self.wrap_guard {
            return Ok(());
        }
        let fraction = boundary_energy_fraction(&state.grid, &[&state.s]);
        if fraction > WRAP_TOLERANCE {
            return Err(KdvError::WrapAround {
                t: state.t,
                fraction,
            });
        }
        Ok(())
    }

    /// Integrates to `t_end`, returning snapshots at `output_times`
    /// (absolute times in `[state0.t, t_end]`; defaults to `[t_end]`).
    /// With `dt = None` the default step is used and re-estimated every
    /// [`DT_REESTIMATE_INTERVAL`] steps.
    pub fn solve(
        &self,
        state0: &KdvState,
        t_end: f64,
        dt: Option<f64>,
        output_times: &[f64],
    ) -> Result<Vec<KdvState>, KdvError> {
        let outputs = normalize_outputs(state0.t, t_end, output_times)?;
        if let Some(dt) = dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(KdvError::InvalidTime(format!("dt must be > 0, got {dt}")));
            }
        }
        self.check_wrap(state0)?;
        let mut state = state0.clone();
        let mut snapshots = Vec::with_capacity(outputs.len());
        let mut step_dt = dt.unwrap_or_else(|| self.default_dt(state0));
        let mut steps = 0usize;
        for target in outputs {
            while state.t < target {
                let remaining = target - state.t;
                let h = if remaining <= step_dt * (1.0 + 1e-12) {
                    remaining
                } else {
                    step_dt
                };
                let mut next = self.step(&state, h)?;
                if h == remaining {
                    next.t = target;
                }
                state = next;
                steps += 1;
                if steps.is_multiple_of(DT_REESTIMATE_INTERVAL) {
                    self.check_wrap(&state)?;
                    if dt.is_none() {
                        step_dt = self.default_dt(&state);
                    }
                }
            }
            self.check_wrap(&state)?;
            snapshots.push(state.clone());
        }
        Ok(snapshots)
    }
}

/// Validates and sorts output times; an empty list means `[t_end]`.
pub(crate) fn normalize_outputs(t0: f64, t_end: f64, output_times: &[f64]) -> Result<Vec<f64>, KdvError> {
    if !(t_end.is_finite() && t_end >= t0) {
        return Err(KdvError::InvalidTime(format!(
            "t_end = {t_end} must be finite and >= the initial time {t0}"
        )));
    }
    let mut outs: Vec<f64> = if output_times.is_empty() {
        vec![t_end]
    } else {
        output_times.to_vec()
    };
    for &t in &outs {
        if !(t.is_finite() && t >= t0 && t <= t_end) {
            return Err(KdvError::InvalidTime(format!(
                "output time {t} is outside [{t0}, {t_end}]"
            )));
        }
    }
    outs.sort_by(f64::total_cmp);
    outs.dedup();
    Ok(outs)
}

/// Grid of `n` (power of two) points whose spacing does not exceed `max_dz`
/// over a box of at least `length`.
pub fn power_of_two_grid(length: f64, max_dz: f64) -> PeriodicGrid {
    let n = ((length / max_dz).ceil() as usize).next_power_of_two().max(16);
    PeriodicGrid::new(n, length)
}

/// Exact single-mode phase: the solution of `S_t = sign K S_zzz` with
/// `S(z, 0) = cos(kappa z)` is `cos(kappa z - sign K kappa^3 t)`.
pub fn linear_mode_phase(kappa: f64, cap_k: f64, sign: f64, t: f64) -> f64 {
    (sign * cap_k * kappa.powi(3) * t).rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_flux;
    use crate::params::Closure;
    use crate::profiles::Profile;
    use approx::assert_abs_diff_eq;

    fn setup(flux: &str) -> (PhysicalParams, DerivedParams, FluxExpr) {
        let p = PhysicalParams::new(0.1, 1.0, 2.0, 1.0, 1.0).unwrap();
        let d = DerivedParams::new(&p, Closure::Printed).unwrap();
        (p, d, parse_flux(flux).unwrap())
    }

    #[test]
    fn initial_condition_halves_profile() {
        let g = PeriodicGrid::new(256, 60.0);
        let sech2 = Profile::sech2();
        let st = kdv_initial_condition(|z| sech2.eval(z), g, Branch::I).unwrap();
        assert_eq!(st.s[128], 0.5);
        assert_eq!(st.t, 0.0);
        let zero = kdv_initial_condition(|_| 0.0, g, Branch::II).unwrap();
        assert!(zero.s.iter().all(|&x| x == 0.0));
        let err = kdv_initial_condition(|z| sech2.eval(z / 10.0), g, Branch::I).unwrap_err();
        assert!(matches!(err, KdvError::NonDecayingProfile { .. }));
        assert!(matches!(
            KdvState::new(Branch::I, PeriodicGrid::new(100, 1.0), vec![0.0; 100], 0.0),
            Err(KdvError::NotPowerOfTwo(100))
        ));
    }

    #[test]
    fn initial_mass_converges_to_one() {
        let sech2 = Profile::sech2();
        let mut last = f64::INFINITY;
        for n in [64, 128, 256, 512] {
            let st = kdv_initial_condition(|z| sech2.eval(z), PeriodicGrid::new(n, 60.0), Branch::I)
                .unwrap();
            let err = (st.mass() - 1.0).abs();
            assert!(err <= last || err < 1e-13);
            last = err;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn single_mode_amplitude_preserved() {
        let (p, d, f) = setup("0");
        let g = PeriodicGrid::new(64, 2.0 * PI);
        let solver = KdvSolver::new(g, &p, d, f).unwrap().without_wrap_guard();
        let kappa = 3.0;
        let s: Vec<f64> = g.points().iter().map(|z| (kappa * z).cos()).collect();
        for branch in [Branch::I, Branch::II] {
            let st = KdvState::new(branch, g, s.clone(), 0.0).unwrap();
            let dt = 0.37;
            let next = solver.step(&st, dt).unwrap();
            let before = solver.spectral().forward(&st.s);
            let after = solver.spectral().forward(&next.s);
            assert_abs_diff_eq!(before[3].norm(), after[3].norm(), epsilon = 1e-12 * before[3].norm());
            let shift = linear_mode_phase(kappa, d.cap_k, branch.sign(), dt);
            for (j, z) in g.points().iter().enumerate() {
                assert_abs_diff_eq!(next.s[j], (kappa * z - shift).cos(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_dispersion_zero_flux_is_identity() {
        let p = PhysicalParams::new(0.1, 1.5, 1.5, 1.0, 2.0).unwrap();
        let d = DerivedParams::new(&p, Closure::Printed).unwrap();
        assert_eq!(d.cap_k, 0.0);
        let g = PeriodicGrid::new(128, 40.0);
        let solver = KdvSolver::new(g, &p, d, FluxExpr::zero()).unwrap();
        let sech2 = Profile::sech2();
        let st = kdv_initial_condition(|z| sech2.eval(z), g, Branch::I).unwrap();
        let next = solver.step(&st, 0.1).unwrap();
        for (a, b) in st.s.iter().zip(&next.s) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn mass_conserved_per_step_with_bilinear_flux() {
        let (p, d, f) = setup("u*v");
        let g = PeriodicGrid::new(512, 60.0);
        let solver = KdvSolver::new(g, &p, d, f).unwrap();
        let sech2 = Profile::sech2();
        for branch in [Branch::I, Branch::II] {
            let st = kdv_initial_condition(|z| 2.0 * sech2.eval(z), g, branch).unwrap();
            let next = solver.step(&st, solver.default_dt(&st)).unwrap();
            assert!((next.mass() - st.mass()).abs() <= 1e-10 * st.mass().abs());
        }
    }

    #[test]
    fn solve_edge_cases() {
        let (p, d, f) = setup("u*v");
        let g = PeriodicGrid::new(512, 120.0);
        let solver = KdvSolver::new(g, &p, d, f).unwrap();
        let sech2 = Profile::sech2();
        let st = kdv_initial_condition(|z| sech2.eval(z), g, Branch::I).unwrap();
        let traj = solver.solve(&st, 0.0, None, &[]).unwrap();
        assert_eq!(traj, vec![st.clone()]);
        assert!(solver.solve(&st, -1.0, None, &[]).is_err());
        assert!(solver.solve(&st, 1.0, None, &[2.0]).is_err());
        let traj = solver.solve(&st, 1.0, Some(0.3), &[1.0, 0.5]).unwrap();
        assert_eq!(traj.iter().map(|s| s.t).collect::<Vec<_>>(), vec![0.5, 1.0]);
        assert!(matches!(
            solver.step(&st, 10.0),
            Err(KdvError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        let (p, d, f) = setup("u*v");
        let p = p.with_bounds(1.0, 1.0).unwrap();
        let g = PeriodicGrid::new(256, 60.0);
        let solver = KdvSolver::new(g, &p, d, f).unwrap();
        let sech2 = Profile::sech2();
        let st = kdv_initial_condition(|z| 4.0 * sech2.eval(z), g, Branch::I).unwrap();
        assert!(matches!(
            solver.step(&st, 0.01),
            Err(KdvError::BlowUp { .. })
        ));
    }

    #[test]
    fn wrap_guard_trips_on_small_box() {
        let (p, d, f) = setup("0");
        let g = PeriodicGrid::new(64, 14.0);
        let solver = KdvSolver::new(g, &p, d, f).unwrap();
        let gaussian = Profile::Gaussian {
            amplitude: 1.0,
            scale: 0.4,
            shift: 0.0,
        };
        let st = kdv_initial_condition(|z| gaussian.eval(z), g, Branch::I).unwrap();
        // Dispersive radiation from the narrow hump reaches the ends.
        let err = solver.solve(&st, 20.0, None, &[]).unwrap_err();
        assert!(matches!(err, KdvError::WrapAround { .. }), "{err}");
    }
}
