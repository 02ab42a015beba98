//! Two-component string with a nonlinear coupling: a pseudo-spectral full
//! solver, a KdV solver for the slow amplitudes, assembly of the leading-order
//! asymptotic approximation, and validation of one against the other.

pub mod asymptotics;
pub mod config;
pub mod expr;
pub mod full;
pub mod kdv;
pub mod output;
pub mod params;
pub mod pipeline;
pub mod profiles;
pub mod run;
pub mod spectral;
pub mod validation;

pub use asymptotics::{Assembler, AsymptoticsError, StretchedFrame};
pub use config::{load_config, ConfigError, Mode, RunConfig};
pub use expr::{parse_flux, ExprError, FluxExpr};
pub use full::{FieldState, FullError, FullSolver};
pub use kdv::{Branch, KdvError, KdvSolver, KdvState};
pub use params::{Closure, DerivedParams, ModelError, PhysicalParams};
pub use pipeline::{GridSpec, PipelineError, Problem};
pub use profiles::Profile;
pub use run::{execute, run, Manifest, RunOutput};
pub use spectral::{PeriodicGrid, Spectral};
pub use validation::{ErrorReport, FastModeReport, SweepResult, ValidationError};
