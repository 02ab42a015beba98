//! Physical constants of the coupled-string system and the derived
//! coefficients of the leading-order travelling-wave equations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::FluxExpr;

/// Default half-width of the admissible box for both `u` and `v`.
pub const DEFAULT_OMEGA: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: must be finite and > 0")]
    InvalidParams { name: &'static str, value: f64 },
    #[error("point (u, v) = ({u}, {v}) lies outside the admissible box |u| < {omega_u}, |v| < {omega_v}")]
    OutOfDomain {
        u: f64,
        v: f64,
        omega_u: f64,
        omega_v: f64,
    },
}

/// Constants of the system
/// `eps^3 (u_tt - k1^2 u_xx) = -a u + b v + eps^2 f(u, v)` (and its partner line)
/// together with the bounds of the admissible box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub eps: f64,
    pub k1: f64,
    pub k2: f64,
    pub a: f64,
    pub b: f64,
    pub omega_u: f64,
    pub omega_v: f64,
}

impl PhysicalParams {
    pub fn new(eps: f64, k1: f64, k2: f64, a: f64, b: f64) -> Result<Self, ModelError> {
        let p = Self {
            eps,
            k1,
            k2,
            a,
            b,
            omega_u: DEFAULT_OMEGA,
            omega_v: DEFAULT_OMEGA,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bounds(mut self, omega_u: f64, omega_v: f64) -> Result<Self, ModelError> {
        self.omega_u = omega_u;
        self.omega_v = omega_v;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, ModelError> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("eps", self.eps),
            ("k1", self.k1),
            ("k2", self.k2),
            ("a", self.a),
            ("b", self.b),
            ("omega_u", self.omega_u),
            ("omega_v", self.omega_v),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParams { name, value });
            }
        }
        Ok(())
    }

    /// Ratio `a/b` tying the slow-manifold component `v = (a/b) u`.
    pub fn v_ratio(&self) -> f64 {
        self.a / self.b
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u.abs() < self.omega_u && v.abs() < self.omega_v
    }

    pub fn max_speed(&self) -> f64 {
        self.k1.max(self.k2)
    }

    /// Angular frequency of the fast coordinate `a u - b v` at zero wavenumber.
    pub fn fast_frequency(&self) -> f64 {
        (self.a + self.b).sqrt() / self.eps.powf(1.5)
    }
}

/// Which closure is used for the pseudo-characteristic speed and the flux.
///
/// `Printed` is the linear speed average `(b k1 + a k2)/(a+b)` together with
/// the `O(1)` flux `-b (k^2-k2^2)/(2k(a+b)) f`. `Consistent` uses the speed
/// for which the `O(eps)` solvability condition of the squared-speed system
/// holds, `k^2 = (b k1^2 + a k2^2)/(a+b)`, and the flux that the same
/// expansion produces one order later, `eps (k^2-k2^2)/(2k(a+b)) f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    Printed,
    #[default]
    Consistent,
}

impl std::fmt::Display for Closure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Closure::Printed => f.write_str("printed"),
            Closure::Consistent => f.write_str("consistent"),
        }
    }
}

/// Effective speed `(b k1 + a k2)/(a + b)`.
pub fn effective_speed(p: &PhysicalParams) -> Result<f64, ModelError> {
    p.validate()?;
    Ok((p.b * p.k1 + p.a * p.k2) / (p.a + p.b))
}

/// Speed `sqrt((b k1^2 + a k2^2)/(a + b))` annihilating
/// `b (k^2 - k1^2) + a (k^2 - k2^2)`.
pub fn consistent_speed(p: &PhysicalParams) -> Result<f64, ModelError> {
    p.validate()?;
    Ok(((p.b * p.k1 * p.k1 + p.a * p.k2 * p.k2) / (p.a + p.b)).sqrt())
}

/// Dispersion coefficient `K = (k^2 - k2^2)(k^2 - k1^2) / (2k(a+b))`.
pub fn dispersion_coefficient(p: &PhysicalParams, k: f64) -> Result<f64, ModelError> {
    p.validate()?;
    if !(k.is_finite() && k > 0.0) {
        return Err(ModelError::InvalidParams { name: "k", value: k });
    }
    let k2 = k * k;
    Ok((k2 - p.k2 * p.k2) * (k2 - p.k1 * p.k1) / (2.0 * k * (p.a + p.b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub closure: Closure,
    /// Speed of the pseudo-characteristics `x -/+ k t`.
    pub k: f64,
    /// Dispersion coefficient `K`.
    pub cap_k: f64,
    /// Scalar multiplying `f(s, (a/b) s)` in the flux `h(s)`.
    pub flux_scale: f64,
    /// `a/b`.
    pub v_ratio: f64,
    /// Set when `k1 == k2`: `K` vanishes and the wave equations reduce to
    /// transport plus flux.
    pub degenerate: bool,
}

impl DerivedParams {
    pub fn new(p: &PhysicalParams, closure: Closure) -> Result<Self, ModelError> {
        let k = match closure {
            Closure::Printed => effective_speed(p)?,
            Closure::Consistent => consistent_speed(p)?,
        };
        // Equal speeds: both closures reduce to k = k1 = k2 exactly.
        let k = if p.k1 == p.k2 { p.k1 } else { k };
        let cap_k = dispersion_coefficient(p, k)?;
        let denom = 2.0 * k * (p.a + p.b);
        let flux_scale = match closure {
            Closure::Printed => -p.b * (k * k - p.k2 * p.k2) / denom,
            Closure::Consistent => p.eps * (k * k - p.k2 * p.k2) / denom,
        };
        Ok(Self {
            closure,
            k,
            cap_k,
            flux_scale,
            v_ratio: p.v_ratio(),
            degenerate: p.k1 == p.k2,
        })
    }

    /// `h(s)` without the domain check.
    pub fn h(&self, f: &FluxExpr, s: f64) -> f64 {
        self.flux_scale * f.eval(s, self.v_ratio * s)
    }
}

/// `h(s) = flux_scale * f(s, (a/b) s)`, rejecting points outside the box.
pub fn flux_h(
    p: &PhysicalParams,
    d: &DerivedParams,
    f: &FluxExpr,
    s: f64,
) -> Result<f64, ModelError> {
    let v = d.v_ratio * s;
    if s.abs() > p.omega_u || v.abs() > p.omega_v {
        return Err(ModelError::OutOfDomain {
            u: s,
            v,
            omega_u: p.omega_u,
            omega_v: p.omega_v,
        });
    }
    Ok(d.h(f, s))
}
