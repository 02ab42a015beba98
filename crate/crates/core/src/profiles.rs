//! Built-in initial profiles, written as functions of the stretched
//! coordinate `xi = x / eps`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `amplitude * sech^2((xi - shift) / scale)`
    Sech2 {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `amplitude * exp(-((xi - shift) / scale)^2)`
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

impl Default for Profile {
    fn default() -> Self {
        Profile::sech2()
    }
}

impl Profile {
    pub fn sech2() -> Self {
        Profile::Sech2 {
            amplitude: 1.0,
            scale: 1.0,
            shift: 0.0,
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            Profile::Sech2 {
                amplitude,
                scale,
                shift,
            } => {
                let z = ((xi - shift) / scale).abs();
                // sech^2 z = 4 e^{-2z} / (1 + e^{-2z})^2, stable for large z.
                let e = (-2.0 * z).exp();
                amplitude * 4.0 * e / ((1.0 + e) * (1.0 + e))
            }
            Profile::Gaussian {
                amplitude,
                scale,
                shift,
            } => {
                let z = (xi - shift) / scale;
                amplitude * (-z * z).exp()
            }
            Profile::Zero => 0.0,
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Profile::Sech2 { amplitude, .. } | Profile::Gaussian { amplitude, .. } => {
                amplitude.abs()
            }
            Profile::Zero => 0.0,
        }
    }

    /// Smallest `r` with `|profile(xi)| <= tol * peak` whenever `|xi| >= r`.
    pub fn support_radius(&self, tol: f64) -> f64 {
        match *self {
            Profile::Sech2 { scale, shift, .. } => {
                // 4 e^{-2z} >= sech^2 z, so z = ln(4/tol)/2 is sufficient.
                shift.abs() + scale.abs() * 0.5 * (4.0 / tol).ln()
            }
            Profile::Gaussian { scale, shift, .. } => {
                shift.abs() + scale.abs() * (1.0 / tol).ln().sqrt()
            }
            Profile::Zero => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Profile::Sech2 {
                amplitude,
                scale,
                shift,
            }
            | Profile::Gaussian {
                amplitude,
                scale,
                shift,
            } => {
                if !(amplitude.is_finite() && shift.is_finite()) {
                    return Err("amplitude and shift must be finite".into());
                }
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(format!("scale must be > 0, got {scale}"));
                }
                Ok(())
            }
            Profile::Zero => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero) || self.peak() == 0.0
    }
}

/// Checks that a sampled profile has decayed at the two end cells:
/// `max(|s_0|, |s_{n-1}|) < tol * max|s|`.
pub fn decays_at_ends(samples: &[f64], tol: f64) -> bool {
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return true;
    }
    let n = samples.len();
    samples[0].abs().max(samples[n - 1].abs()) < tol * peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sech2_values() {
        let p = Profile::sech2();
        assert_eq!(p.eval(0.0), 1.0);
        let c = 1.3f64.cosh();
        assert_relative_eq!(p.eval(1.3), 1.0 / (c * c), max_relative = 1e-14);
        assert_relative_eq!(p.eval(-1.3), p.eval(1.3));
        assert!(p.eval(400.0) >= 0.0);
        let r = p.support_radius(1e-8);
        assert!(p.eval(r) <= 1e-8);
        assert!(p.eval(0.9 * r) > 1e-8);
    }

    #[test]
    fn gaussian_support() {
        let p = Profile::Gaussian {
            amplitude: 2.0,
            scale: 0.5,
            shift: 1.0,
        };
        let r = p.support_radius(1e-8);
        assert!(p.eval(r).abs() <= 1e-8 * 2.0 * (1.0 + 1e-12));
        assert!(p.eval(-r).abs() <= 1e-8 * 2.0);
    }

    #[test]
    fn parses_from_toml() {
        let p: Profile = toml::from_str("kind = \"gaussian\"\nscale = 2.0").unwrap();
        assert_eq!(
            p,
            Profile::Gaussian {
                amplitude: 1.0,
                scale: 2.0,
                shift: 0.0
            }
        );
        let z: Profile = toml::from_str("kind = \"zero\"").unwrap();
        assert!(z.is_zero());
        assert!(toml::from_str::<Profile>("kind = \"box\"").is_err());
    }
}
