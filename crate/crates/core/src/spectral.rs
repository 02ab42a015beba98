//! Uniform periodic grids and the Fourier machinery shared by both solvers.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

/// `n` points `x_j = -length/2 + j * length/n`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub n: usize,
    pub length: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Self {
        assert!(n >= 2, "grid needs at least two points");
        assert!(length.is_finite() && length > 0.0, "grid length must be positive");
        Self { n, length }
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn origin(&self) -> f64 {
        -0.5 * self.length
    }

    pub fn point(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed mode index of FFT bin `j`.
    pub fn mode_index(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        self.n.is_multiple_of(2) && j == self.n / 2
    }

    /// Angular wavenumber of bin `j`; the Nyquist bin gets `+pi/dx`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_index(j) as f64 / self.length
    }

    /// Wavenumber used by odd-order operators: zero at the Nyquist bin so
    /// real fields stay real.
    pub fn odd_wavenumber(&self, j: usize) -> f64 {
        if self.is_nyquist(j) {
            0.0
        } else {
            self.wavenumber(j)
        }
    }

    /// Indices of the `fraction` of cells nearest the two ends, split evenly.
    pub fn boundary_band(&self, fraction: f64) -> impl Iterator<Item = usize> {
        let per_side = ((fraction * self.n as f64) / 2.0).ceil().max(1.0) as usize;
        let n = self.n;
        (0..per_side).chain(n - per_side..n)
    }
}

/// Fraction of `sum w_j^2` carried by the 5% of cells nearest the ends,
/// maximised over the given fields. Zero fields give zero.
pub fn boundary_energy_fraction(grid: &PeriodicGrid, fields: &[&[f64]]) -> f64 {
    let band: Vec<usize> = grid.boundary_band(0.05).collect();
    let mut worst: f64 = 0.0;
    for field in fields {
        let total: f64 = field.iter().map(|x| x * x).sum();
        if total > 0.0 {
            let edge: f64 = band.iter().map(|&j| field[j] * field[j]).sum();
            worst = worst.max(edge / total);
        }
    }
    worst
}

/// FFT plans and derivative helpers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: PeriodicGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Unnormalised forward transform.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.grid.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform with the `1/n` normalisation; keeps the real part.
    pub fn inverse(&self, modes: &[Complex64]) -> Vec<f64> {
        let mut buf = modes.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.grid.n as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.grid.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Multiplier `(i kappa)^order` for bin `j`.
    pub fn derivative_symbol(&self, j: usize, order: u32) -> Complex64 {
        let kappa = if order % 2 == 1 {
            self.grid.odd_wavenumber(j)
        } else {
            self.grid.wavenumber(j)
        };
        Complex64::new(0.0, kappa).powu(order)
    }

    pub fn derivative_of_modes(&self, modes: &[Complex64], order: u32) -> Vec<f64> {
        let scaled: Vec<Complex64> = modes
            .iter()
            .enumerate()
            .map(|(j, z)| z * self.derivative_symbol(j, order))
            .collect();
        self.inverse(&scaled)
    }

    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        self.derivative_of_modes(&self.forward(values), order)
    }

    /// 2/3 rule: keeps bins with `|mode| < n/3`.
    pub fn keep_mode(&self, j: usize) -> bool {
        (self.grid.mode_index(j).unsigned_abs() as usize) * 3 < self.grid.n
    }

    pub fn dealias(&self, modes: &mut [Complex64]) {
        for (j, z) in modes.iter_mut().enumerate() {
            if !self.keep_mode(j) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Evaluates the trigonometric interpolant of `modes` (the forward FFT of
    /// real samples) at arbitrary points.
    pub fn interpolate(&self, modes: &[Complex64], points: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let dk = 2.0 * PI / self.grid.length;
        let half = n / 2;
        let inv_n = 1.0 / n as f64;
        points
            .iter()
            .map(|&x| {
                let theta = dk * (x - self.grid.origin());
                let step = Complex64::from_polar(1.0, theta);
                let mut phase = Complex64::new(1.0, 0.0);
                let mut acc = modes[0].re;
                let top = if n.is_multiple_of(2) { half } else { half + 1 };
                for (m, z) in modes.iter().enumerate().take(top).skip(1) {
                    // Re-anchor the recurrence periodically to bound drift.
                    phase = if m % 64 == 0 {
                        Complex64::from_polar(1.0, theta * m as f64)
                    } else {
                        phase * step
                    };
                    acc += 2.0 * (z * phase).re;
                }
                if n.is_multiple_of(2) {
                    let nyq = Complex64::from_polar(1.0, theta * half as f64);
                    acc += modes[half].re * nyq.re;
                }
                acc * inv_n
            })
            .collect()
    }
}
