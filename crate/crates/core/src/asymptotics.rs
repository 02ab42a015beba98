//! Leading-order asymptotic approximation
//! `u ~ S_I((x - k t)/eps, t) + S_II((x + k t)/eps, t)`, `v ~ (a/b) u`.

use thiserror::Error;

use crate::full::FieldState;
use crate::kdv::{KdvSolver, KdvState};
use crate::params::PhysicalParams;
use crate::spectral::PeriodicGrid;

/// Fraction of the KdV box at each end that mapped points must avoid.
pub const COVERAGE_BAND: f64 = 0.025;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("mapped coordinate zeta = {zeta} leaves the KdV box interior [{lo}, {hi}]")]
    Coverage { zeta: f64, lo: f64, hi: f64 },
    #[error("KdV states are at times {t_i} and {t_ii}, requested t = {t}")]
    TimeMismatch { t_i: f64, t_ii: f64, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchedFrame {
    pub k: f64,
    pub eps: f64,
}

impl StretchedFrame {
    pub fn new(k: f64, eps: f64) -> Self {
        assert!(eps > 0.0, "eps must be positive");
        Self { k, eps }
    }

    /// `((x - k t)/eps, (x + k t)/eps)`
    pub fn map_zeta(&self, x: f64, t: f64) -> (f64, f64) {
        ((x - self.k * t) / self.eps, (x + self.k * t) / self.eps)
    }

    pub fn x_from_zeta1(&self, zeta1: f64, t: f64) -> f64 {
        self.eps * zeta1 + self.k * t
    }

    pub fn x_from_zeta2(&self, zeta2: f64, t: f64) -> f64 {
        self.eps * zeta2 - self.k * t
    }
}

/// KdV box length holding the images of `[-L/2, L/2]` for all `t <= t_end`,
/// with the coverage band kept clear.
pub fn kdv_box_length(frame: &StretchedFrame, x_length: f64, t_end: f64) -> f64 {
    let half = (0.5 * x_length + frame.k.abs() * t_end) / frame.eps;
    2.0 * half / (1.0 - 2.0 * COVERAGE_BAND) * 1.02
}

/// Builds field snapshots from pairs of KdV states.
#[derive(Debug, Clone)]
pub struct Assembler {
    kdv: KdvSolver,
    params: PhysicalParams,
    frame: StretchedFrame,
}

impl Assembler {
    pub fn new(kdv: KdvSolver, params: PhysicalParams) -> Self {
        let frame = StretchedFrame::new(kdv.derived().k, params.eps);
        Self { kdv, params, frame }
    }

    pub fn frame(&self) -> &StretchedFrame {
        &self.frame
    }

    pub fn kdv(&self) -> &KdvSolver {
        &self.kdv
    }

    fn check_coverage(&self, zetas: &[f64]) -> Result<(), AsymptoticsError> {
        let g = self.kdv.grid();
        let band = COVERAGE_BAND * g.length;
        let lo = g.origin() + band;
        let hi = g.origin() + g.length - band;
        for &zeta in zetas {
            if !(zeta >= lo && zeta <= hi) {
                return Err(AsymptoticsError::Coverage { zeta, lo, hi });
            }
        }
        Ok(())
    }

    /// `u = S_I(zeta_1) + S_II(zeta_2)`, `v = (a/b) u`, with
    /// `u_t = S_I,t - (k/eps) S_I,z + S_II,t + (k/eps) S_II,z` and
    /// `v_t = (a/b) u_t`, all evaluated by trigonometric interpolation.
    pub fn assemble(
        &self,
        s_i: &KdvState,
        s_ii: &KdvState,
        x_grid: &PeriodicGrid,
        t: f64,
    ) -> Result<FieldState, AsymptoticsError> {
        if s_i.t != t || s_ii.t != t {
            return Err(AsymptoticsError::TimeMismatch {
                t_i: s_i.t,
                t_ii: s_ii.t,
                t,
            });
        }
        let x = x_grid.points();
        let (z1, z2): (Vec<f64>, Vec<f64>) = x.iter().map(|&x| self.frame.map_zeta(x, t)).unzip();
        self.check_coverage(&z1)?;
        self.check_coverage(&z2)?;

        let sp = self.kdv.spectral();
        let transport = self.frame.k / self.frame.eps;
        let eval_branch = |state: &KdvState, zetas: &[f64], dir: f64| -> (Vec<f64>, Vec<f64>) {
            let modes = sp.forward(&state.s);
            let value = sp.interpolate(&modes, zetas);
            let sz = sp.derivative_of_modes(&modes, 1);
            let st = self.kdv.rhs(state);
            // Chain rule: d/dt S(zeta(x, t), t) = S_t + zeta_t S_z.
            let dt: Vec<f64> = st
                .iter()
                .zip(&sz)
                .map(|(st, sz)| st + dir * transport * sz)
                .collect();
            let rate = sp.interpolate(&sp.forward(&dt), zetas);
            (value, rate)
        };
        let (u1, ut1) = eval_branch(s_i, &z1, -1.0);
        let (u2, ut2) = eval_branch(s_ii, &z2, 1.0);
        let r = self.params.v_ratio();
        let u: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let ut: Vec<f64> = ut1.iter().zip(&ut2).map(|(a, b)| a + b).collect();
        let v = u.iter().map(|x| r * x).collect();
        let vt = ut.iter().map(|x| r * x).collect();
        Ok(FieldState {
            grid: *x_grid,
            u,
            ut,
            v,
            vt,
            t,
        })
    }
}
