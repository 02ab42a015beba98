//! Periodic pseudospectral solver for the full coupled-string system
//!
//! ```text
//! eps^3 (u_tt - k1^2 u_xx) = -a u + b v + eps^2 f(u, v)
//! eps^3 (v_tt - k2^2 v_xx) =  a u - b v - eps^2 f(u, v)
//! ```
//!
//! Time stepping is Strang splitting: a half kick by the nonlinearity, an
//! exact step of the linear constant-coefficient system, and another half
//! kick. The linear part is advanced mode by mode with its closed-form
//! propagator, so the `eps^-3` coupling imposes no step restriction.

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::FluxExpr;
use crate::kdv::{normalize_outputs, KdvError, DECAY_TOLERANCE, DT_REESTIMATE_INTERVAL, WRAP_TOLERANCE};
use crate::params::PhysicalParams;
use crate::profiles::{decays_at_ends, Profile};
use crate::spectral::{boundary_energy_fraction, PeriodicGrid, Spectral};

/// The splitting needs `|dt| <= NONLINEAR_STEP_FACTOR * eps` when `f != 0`.
pub const NONLINEAR_STEP_FACTOR: f64 = 1.0;
/// Required resolution `dx <= eps / CELLS_PER_EPS`.
pub const CELLS_PER_EPS: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FullError {
    #[error("initial profile does not decay at the box ends: end value {boundary:e} vs peak {peak:e}")]
    NonDecayingProfile { boundary: f64, peak: f64 },
    #[error("box length {length} is too small: the initial data need at least {required}")]
    GridTooSmall { length: f64, required: f64 },
    #[error("grid spacing {dx} is coarser than eps/{cells} = {max_dx}", cells = CELLS_PER_EPS)]
    GridTooCoarse { dx: f64, max_dx: f64 },
    #[error("solution left the admissible box at t = {t}: max|u| = {max_u}, max|v| = {max_v}")]
    BlowUp { t: f64, max_u: f64, max_v: f64 },
    #[error("step dt = {dt} at t = {t} exceeds the splitting limit {limit}")]
    StepTooLarge { t: f64, dt: f64, limit: f64 },
    #[error("boundary band carries a fraction {fraction:e} of the field energy at t = {t}; the periodic box is too small")]
    WrapAround { t: f64, fraction: f64 },
    #[error("mode {mode} propagator is ill-conditioned")]
    NonDiagonalizableMode { mode: usize },
    #[error("invalid time arguments: {0}")]
    InvalidTime(String),
}

impl From<KdvError> for FullError {
    fn from(e: KdvError) -> Self {
        match e {
            KdvError::InvalidTime(msg) => FullError::InvalidTime(msg),
            other => FullError::InvalidTime(other.to_string()),
        }
    }
}

/// `(u, u_t, v, v_t)` sampled on a periodic grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: PeriodicGrid,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(grid: PeriodicGrid, t: f64) -> Self {
        let z = vec![0.0; grid.n];
        Self {
            grid,
            u: z.clone(),
            ut: z.clone(),
            v: z.clone(),
            vt: z,
            t,
        }
    }

    pub fn max_abs_u(&self) -> f64 {
        max_abs(&self.u)
    }

    pub fn max_abs_v(&self) -> f64 {
        max_abs(&self.v)
    }

    /// Fast coordinate `a u - b v` at every grid point.
    pub fn fast_coordinate(&self, p: &PhysicalParams) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| p.a * u - p.b * v)
            .collect()
    }

    /// `sum (a u - b v)^2 dx`
    pub fn fast_mode_energy(&self, p: &PhysicalParams) -> f64 {
        self.fast_coordinate(p).iter().map(|q| q * q).sum::<f64>() * self.grid.spacing()
    }

    /// `sum (a u_t + b v_t) dx`
    pub fn momentum(&self, p: &PhysicalParams) -> f64 {
        self.ut
            .iter()
            .zip(&self.vt)
            .map(|(ut, vt)| p.a * ut + p.b * vt)
            .sum::<f64>()
            * self.grid.spacing()
    }

    /// Weighted energy conserved by the linear system:
    /// `sum [ a/2 eps^3 (u_t^2 + k1^2 u_x^2) + b/2 eps^3 (v_t^2 + k2^2 v_x^2)
    /// + (a u - b v)^2 / 2 ] dx`.
    pub fn weighted_energy(&self, p: &PhysicalParams, spectral: &Spectral) -> f64 {
        let ux = spectral.derivative(&self.u, 1);
        let vx = spectral.derivative(&self.v, 1);
        let e3 = p.eps.powi(3);
        let mut acc = 0.0;
        for j in 0..self.grid.n {
            let q = p.a * self.u[j] - p.b * self.v[j];
            acc += 0.5 * p.a * e3 * (self.ut[j].powi(2) + p.k1 * p.k1 * ux[j].powi(2))
                + 0.5 * p.b * e3 * (self.vt[j].powi(2) + p.k2 * p.k2 * vx[j].powi(2))
                + 0.5 * q * q;
        }
        acc * self.grid.spacing()
    }

    pub fn sup_distance(&self, other: &FieldState) -> f64 {
        [
            (&self.u, &other.u),
            (&self.ut, &other.ut),
            (&self.v, &other.v),
            (&self.vt, &other.vt),
        ]
        .iter()
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Box length `2 (r0 eps + max(k1, k2) T + margin)` for profiles whose
/// `1e-8` support radius in `xi` is `r0`.
pub fn required_length(p: &PhysicalParams, support_radius: f64, t_end: f64, margin: f64) -> f64 {
    2.0 * (support_radius * p.eps + p.max_speed() * t_end + margin)
}

/// Smallest power-of-two grid over `length` with `dx <= eps/8`.
pub fn resolved_grid(p: &PhysicalParams, length: f64) -> PeriodicGrid {
    let max_dx = p.eps / CELLS_PER_EPS;
    let n = ((length / max_dx).ceil() as usize).next_power_of_two().max(16);
    PeriodicGrid::new(n, length)
}

/// Initial data from arbitrary profile functions of `xi = x/eps`.
///
/// Consistent data: `v = (a/b) u`, `v_t = (a/b) u_t`. Otherwise `v = v_t = 0`.
pub fn full_initial_condition_with(
    p: &PhysicalParams,
    u0: impl Fn(f64) -> f64,
    phi: impl Fn(f64) -> f64,
    grid: PeriodicGrid,
    consistent: bool,
) -> Result<FieldState, FullError> {
    let dx = grid.spacing();
    let max_dx = p.eps / CELLS_PER_EPS;
    if dx > max_dx * (1.0 + 1e-12) {
        return Err(FullError::GridTooCoarse { dx, max_dx });
    }
    let x = grid.points();
    let u: Vec<f64> = x.iter().map(|&x| u0(x / p.eps)).collect();
    let ut: Vec<f64> = x.iter().map(|&x| phi(x / p.eps)).collect();
    for field in [&u, &ut] {
        if !decays_at_ends(field, DECAY_TOLERANCE) {
            return Err(FullError::NonDecayingProfile {
                boundary: field[0].abs().max(field[grid.n - 1].abs()),
                peak: max_abs(field),
            });
        }
    }
    let r = p.v_ratio();
    let (v, vt) = if consistent {
        (
            u.iter().map(|x| r * x).collect(),
            ut.iter().map(|x| r * x).collect(),
        )
    } else {
        (vec![0.0; grid.n], vec![0.0; grid.n])
    };
    Ok(FieldState {
        grid,
        u,
        ut,
        v,
        vt,
        t: 0.0,
    })
}

/// Initial data from built-in profiles, checking that the box holds their
/// support.
pub fn full_initial_condition(
    p: &PhysicalParams,
    u0: &Profile,
    phi: &Profile,
    grid: PeriodicGrid,
    consistent: bool,
) -> Result<FieldState, FullError> {
    let radius = u0
        .support_radius(DECAY_TOLERANCE)
        .max(phi.support_radius(DECAY_TOLERANCE));
    let required = 2.0 * radius * p.eps;
    if grid.length < required {
        return Err(FullError::GridTooSmall {
            length: grid.length,
            required,
        });
    }
    full_initial_condition_with(p, |xi| u0.eval(xi), |xi| phi.eval(xi), grid, consistent)
}

type Mat2 = [[f64; 2]; 2];

/// Exact propagator of `w_tt = -B w` for one mode over a fixed step:
/// `w(t+dt) = C w + S w_t`, `w_t(t+dt) = -BS w + C w_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePropagator {
    pub c: Mat2,
    pub s: Mat2,
    pub bs: Mat2,
}

impl ModePropagator {
    /// `B = kappa^2 diag(k1^2, k2^2) + eps^-3 [[a, -b], [-a, b]]`.
    ///
    /// With `T = diag(sqrt a, sqrt b)`, `T B T^-1` is symmetric positive
    /// semidefinite, so `B` is diagonalised by a rotation and the matrix
    /// functions `cos(sqrt(B) dt)`, `sin(sqrt(B) dt)/sqrt(B)` and
    /// `sqrt(B) sin(sqrt(B) dt)` are formed from its two eigenvalues.
    pub fn new(p: &PhysicalParams, kappa: f64, dt: f64) -> Self {
        let e3 = p.eps.powi(3);
        let k2 = kappa * kappa;
        let d1 = k2 * p.k1 * p.k1 + p.a / e3;
        let d2 = k2 * p.k2 * p.k2 + p.b / e3;
        let off = -(p.a * p.b).sqrt() / e3;
        let theta = 0.5 * (2.0 * off).atan2(d1 - d2);
        let (sn, cs) = theta.sin_cos();
        let mut l1 = d1 * cs * cs + 2.0 * off * cs * sn + d2 * sn * sn;
        let mut l2 = d1 * sn * sn - 2.0 * off * cs * sn + d2 * cs * cs;
        // The small eigenvalue suffers cancellation; recover it from the
        // determinant, which has no cancellation.
        let det = k2 * k2 * p.k1 * p.k1 * p.k2 * p.k2
            + k2 * (p.k1 * p.k1 * p.b + p.k2 * p.k2 * p.a) / e3;
        if l1 >= l2 {
            l2 = if l1 > 0.0 { det / l1 } else { 0.0 };
        } else {
            l1 = if l2 > 0.0 { det / l2 } else { 0.0 };
        }
        let q = [[cs, -sn], [sn, cs]];
        let t = [p.a.sqrt(), p.b.sqrt()];
        let build = |g: [f64; 2]| -> Mat2 {
            let mut m = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let sym = q[i][0] * g[0] * q[j][0] + q[i][1] * g[1] * q[j][1];
                    m[i][j] = sym * t[j] / t[i];
                }
            }
            m
        };
        let lams = [l1.max(0.0), l2.max(0.0)];
        let cosf = lams.map(|l| (l.sqrt() * dt).cos());
        let sinc = lams.map(|l| sinc_dt(l, dt));
        let lsin = lams.map(|l| l.sqrt() * (l.sqrt() * dt).sin());
        Self {
            c: build(cosf),
            s: build(sinc),
            bs: build(lsin),
        }
    }

    #[inline]
    fn apply(&self, w: [Complex64; 2], wt: [Complex64; 2]) -> ([Complex64; 2], [Complex64; 2]) {
        let mv = |m: &Mat2, x: [Complex64; 2]| -> [Complex64; 2] {
            [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
        };
        let cw = mv(&self.c, w);
        let swt = mv(&self.s, wt);
        let bsw = mv(&self.bs, w);
        let cwt = mv(&self.c, wt);
        (
            [cw[0] + swt[0], cw[1] + swt[1]],
            [cwt[0] - bsw[0], cwt[1] - bsw[1]],
        )
    }
}

/// `sin(sqrt(l) dt) / sqrt(l)`, continuous at `l = 0`.
fn sinc_dt(l: f64, dt: f64) -> f64 {
    let w = l.sqrt();
    let x = w * dt;
    if x.abs() < 1e-4 {
        dt * (1.0 - x * x / 6.0 + x.powi(4) / 120.0)
    } else {
        x.sin() / w
    }
}

/// Per-mode propagator table for one step size.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    dt: f64,
    modes: Vec<ModePropagator>,
}

impl LinearPropagator {
    pub fn new(grid: &PeriodicGrid, p: &PhysicalParams, dt: f64) -> Self {
        let modes = (0..grid.n)
            .map(|j| ModePropagator::new(p, grid.wavenumber(j), dt))
            .collect();
        Self { dt, modes }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self, j: usize) -> &ModePropagator {
        &self.modes[j]
    }

    fn apply(&self, spectral: &Spectral, state: &mut FieldState) {
        let u = spectral.forward(&state.u);
        let ut = spectral.forward(&state.ut);
        let v = spectral.forward(&state.v);
        let vt = spectral.forward(&state.vt);
        let n = u.len();
        let (mut nu, mut nut, mut nv, mut nvt) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for j in 0..n {
            let (w, wt) = self.modes[j].apply([u[j], v[j]], [ut[j], vt[j]]);
            nu.push(w[0]);
            nv.push(w[1]);
            nut.push(wt[0]);
            nvt.push(wt[1]);
        }
        state.u = spectral.inverse(&nu);
        state.v = spectral.inverse(&nv);
        state.ut = spectral.inverse(&nut);
        state.vt = spectral.inverse(&nvt);
    }
}

#[derive(Debug, Clone)]
pub struct FullSolver {
    spectral: Spectral,
    params: PhysicalParams,
    flux: FluxExpr,
    wrap_guard: bool,
}

impl FullSolver {
    pub fn new(grid: PeriodicGrid, params: PhysicalParams, flux: FluxExpr) -> Self {
        Self {
            spectral: Spectral::new(grid),
            params,
            flux,
            wrap_guard: true,
        }
    }

    pub fn without_wrap_guard(mut self) -> Self {
        self.wrap_guard = false;
        self
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn flux(&self) -> &FluxExpr {
        &self.flux
    }

    /// `min(0.25 eps, 0.25 dx / max(k1, k2))`.
    pub fn default_dt(&self) -> f64 {
        (0.25 * self.params.eps).min(0.25 * self.spectral.grid().spacing() / self.params.max_speed())
    }

    pub fn propagator(&self, dt: f64) -> LinearPropagator {
        LinearPropagator::new(self.spectral.grid(), &self.params, dt)
    }

    fn kick(&self, state: &mut FieldState, dt: f64) {
        if self.flux.is_zero() {
            return;
        }
        let scale = dt / self.params.eps;
        for j in 0..state.u.len() {
            let force = scale * self.flux.eval(state.u[j], state.v[j]);
            state.ut[j] += force;
            state.vt[j] -= force;
        }
    }

    /// One Strang step with a precomputed linear propagator. Negative steps
    /// are allowed and invert a forward step exactly when `f = 0`.
    pub fn step_with(&self, state: &FieldState, prop: &LinearPropagator) -> Result<FieldState, FullError> {
        let dt = prop.dt();
        if !self.flux.is_zero() {
            let limit = NONLINEAR_STEP_FACTOR * self.params.eps;
            if dt.abs() > limit {
                return Err(FullError::StepTooLarge {
                    t: state.t,
                    dt,
                    limit,
                });
            }
        }
        let mut next = state.clone();
        self.kick(&mut next, 0.5 * dt);
        prop.apply(&self.spectral, &mut next);
        self.kick(&mut next, 0.5 * dt);
        next.t = state.t + dt;
        let (max_u, max_v) = (next.max_abs_u(), next.max_abs_v());
        if !(max_u < self.params.omega_u && max_v < self.params.omega_v) {
            return Err(FullError::BlowUp {
                t: next.t,
                max_u,
                max_v,
            });
        }
        Ok(next)
    }

    pub fn step(&self, state: &FieldState, dt: f64) -> Result<FieldState, FullError> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(FullError::InvalidTime(format!("dt must be finite and nonzero, got {dt}")));
        }
        self.step_with(state, &self.propagator(dt))
    }

    fn check_wrap(&self, state: &FieldState) -> Result<(), FullError> {
        if !self.wrap_guard {
            return Ok(());
        }
        let fraction = boundary_energy_fraction(&state.grid, &[&state.u, &state.v]);
        if fraction > WRAP_TOLERANCE {
            return Err(FullError::WrapAround {
                t: state.t,
                fraction,
            });
        }
        Ok(())
    }

    /// Steps to each output time exactly (shortening the last sub-step) and
    /// returns the snapshots; an empty `output_times` means `[t_end]`.
    pub fn solve(
        &self,
        state0: &FieldState,
        t_end: f64,
        dt: Option<f64>,
        output_times: &[f64],
    ) -> Result<Vec<FieldState>, FullError> {
        let outputs = normalize_outputs(state0.t, t_end, output_times)?;
        let dt = dt.unwrap_or_else(|| self.default_dt());
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FullError::InvalidTime(format!("dt must be > 0, got {dt}")));
        }
        self.check_wrap(state0)?;
        let main = self.propagator(dt);
        let mut state = state0.clone();
        let mut out = Vec::with_capacity(outputs.len());
        let mut steps = 0usize;
        for target in outputs {
            while state.t < target {
                let remaining = target - state.t;
                if remaining <= dt * (1.0 + 1e-12) {
                    let partial = if remaining == dt {
                        main.clone()
                    } else {
                        self.propagator(remaining)
                    };
                    state = self.step_with(&state, &partial)?;
                    state.t = target;
                } else {
                    state = self.step_with(&state, &main)?;
                }
                steps += 1;
                if steps.is_multiple_of(DT_REESTIMATE_INTERVAL) {
                    self.check_wrap(&state)?;
                }
            }
            self.check_wrap(&state)?;
            out.push(state.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_flux;

    fn canonical(eps: f64) -> PhysicalParams {
        PhysicalParams::new(eps, 1.0, 2.0, 1.0, 1.0).unwrap()
    }

    fn companion_exp(p: &PhysicalParams, kappa: f64, dt: f64) -> [[f64; 4]; 4] {
        // Oracle: exp(dt * A) for the first-order companion form
        // d/dt (u, v, u_t, v_t) = A (u, v, u_t, v_t), by scaling and squaring
        // of a Taylor series.
        let e3 = p.eps.powi(3);
        let b = [
            [kappa * kappa * p.k1 * p.k1 + p.a / e3, -p.b / e3],
            [-p.a / e3, kappa * kappa * p.k2 * p.k2 + p.b / e3],
        ];
        let mut a = [[0.0; 4]; 4];
        a[0][2] = 1.0;
        a[1][3] = 1.0;
        for i in 0..2 {
            for j in 0..2 {
                a[2 + i][j] = -b[i][j];
            }
        }
        let norm: f64 = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        let squarings = ((norm * dt.abs()).log2().ceil().max(0.0) as u32) + 4;
        let h = dt / 2f64.powi(squarings as i32);
        let mul = |x: &[[f64; 4]; 4], y: &[[f64; 4]; 4]| {
            let mut z = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        z[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            z
        };
        let mut term = [[0.0; 4]; 4];
        let mut sum = [[0.0; 4]; 4];
        for i in 0..4 {
            term[i][i] = 1.0;
            sum[i][i] = 1.0;
        }
        let mut ah = a;
        for row in ah.iter_mut() {
            for x in row.iter_mut() {
                *x *= h;
            }
        }
        for k in 1..=20 {
            term = mul(&term, &ah);
            for row in term.iter_mut() {
                for x in row.iter_mut() {
                    *x /= k as f64;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            sum = mul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn mode_propagator_matches_matrix_exponential() {
        for (eps, kappa, dt) in [(0.1, 0.0, 0.01), (0.1, 7.3, 0.004), (0.4, 2.0, 0.1), (0.2, 40.0, 0.002)] {
            let p = PhysicalParams::new(eps, 1.0, 2.0, 1.5, 0.7).unwrap();
            let m = ModePropagator::new(&p, kappa, dt);
            let e = companion_exp(&p, kappa, dt);
            let scale = e.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m.c[i][j] - e[i][j]).abs() < 1e-10 * scale, "C {eps} {kappa}");
                    assert!((m.s[i][j] - e[i][2 + j]).abs() < 1e-10 * scale, "S {eps} {kappa}");
                    assert!((-m.bs[i][j] - e[2 + i][j]).abs() < 1e-10 * scale, "BS {eps} {kappa}");
                    assert!((m.c[i][j] - e[2 + i][2 + j]).abs() < 1e-10 * scale);
                }
            }
        }
    }

    fn sech2_state(p: &PhysicalParams, consistent: bool) -> FieldState {
        let grid = resolved_grid(p, required_length(p, Profile::sech2().support_radius(1e-8), 0.5, 0.5));
        full_initial_condition(p, &Profile::sech2(), &Profile::Zero, grid, consistent).unwrap()
    }

    #[test]
    fn initial_condition_structure() {
        let p = canonical(0.1);
        let st = sech2_state(&p, true);
        assert!(st.u.iter().zip(&st.v).all(|(u, v)| p.a * u - p.b * v == 0.0));
        let zero = full_initial_condition(&p, &Profile::Zero, &Profile::Zero, st.grid, true).unwrap();
        assert!(zero.u.iter().chain(&zero.vt).all(|&x| x == 0.0));
        let inconsistent = sech2_state(&p, false);
        assert!(inconsistent.v.iter().all(|&x| x == 0.0));
        // Narrow cap: half-maximum width scales with eps.
        let half_width = |st: &FieldState| {
            st.u.iter().filter(|&&u| u >= 0.5).count() as f64 * st.grid.spacing()
        };
        let wide = sech2_state(&canonical(0.4), true);
        let ratio = half_width(&st) / half_width(&wide);
        assert!((ratio - 0.25).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn initial_condition_errors() {
        let p = canonical(0.1);
        let small = PeriodicGrid::new(64, 0.5);
        assert!(matches!(
            full_initial_condition(&p, &Profile::sech2(), &Profile::Zero, small, true),
            Err(FullError::GridTooSmall { .. })
        ));
        let coarse = PeriodicGrid::new(64, 10.0);
        assert!(matches!(
            full_initial_condition(&p, &Profile::sech2(), &Profile::Zero, coarse, true),
            Err(FullError::GridTooCoarse { .. })
        ));
        let grid = PeriodicGrid::new(512, 4.0);
        assert!(matches!(
            full_initial_condition_with(&p, |xi| (1.0 + xi * xi).recip(), |_| 0.0, grid, true),
            Err(FullError::NonDecayingProfile { .. })
        ));
    }

    #[test]
    fn zero_is_fixed_point() {
        let p = canonical(0.1);
        let solver = FullSolver::new(PeriodicGrid::new(64, 4.0), p, parse_flux("u*v").unwrap());
        let zero = FieldState::zeros(PeriodicGrid::new(64, 4.0), 0.0);
        for dt in [0.01, 0.1, -0.05] {
            let next = solver.step(&zero, dt).unwrap();
            assert_eq!(next.sup_distance(&zero), 0.0);
        }
    }

    #[test]
    fn reversible_without_flux() {
        let p = canonical(0.1);
        let st = sech2_state(&p, false);
        let solver = FullSolver::new(st.grid, p, FluxExpr::zero());
        for dt in [0.001, 0.05, 0.7] {
            let fwd = solver.step(&st, dt).unwrap();
            let back = solver.step(&fwd, -dt).unwrap();
            assert!(back.sup_distance(&st) < 1e-10, "{dt}: {}", back.sup_distance(&st));
        }
    }

    #[test]
    fn momentum_conserved_with_equal_couplings() {
        let p = canonical(0.2);
        let mut st = sech2_state(&p, true);
        // Nonzero initial velocity so the momentum is not trivially zero.
        st.ut = st.u.iter().map(|u| 0.3 * u).collect();
        st.vt = st.ut.clone();
        let solver = FullSolver::new(st.grid, p, FluxExpr::zero());
        let m0 = st.momentum(&p);
        let traj = solver.solve(&st, 0.5, None, &[0.1, 0.3, 0.5]).unwrap();
        for s in traj {
            assert!((s.momentum(&p) - m0).abs() <= 1e-10 * m0.abs());
        }
    }

    #[test]
    fn splitting_step_limit() {
        let p = canonical(0.1);
        let st = sech2_state(&p, true);
        let solver = FullSolver::new(st.grid, p, parse_flux("u*v").unwrap());
        assert!(matches!(solver.step(&st, 0.2), Err(FullError::StepTooLarge { .. })));
        let linear = FullSolver::new(st.grid, p, FluxExpr::zero());
        assert!(linear.step(&st, 0.2).is_ok());
    }

    #[test]
    fn blow_up_detected() {
        let p = canonical(0.1).with_bounds(0.5, 0.5).unwrap();
        let st = sech2_state(&p, true);
        let solver = FullSolver::new(st.grid, p, FluxExpr::zero());
        assert!(matches!(solver.step(&st, 0.001), Err(FullError::BlowUp { .. })));
    }
}
