//! CSV rendering and all-or-nothing writes into an output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::full::FieldState;
use crate::kdv::KdvState;
use crate::validation::ErrorReport;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot prepare output directory {path}: {source}")]
    Directory {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("artifact name `{0}` does not stay inside the output directory")]
    UnsafeName(String),
}

/// A named file body, not yet on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }
}

/// Plain decimal in `[1e-4, 1e6)`, shortest round-trip exponent form
/// otherwise.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `t,x,u,ut,v,vt`, one block per snapshot.
pub fn fields_csv(states: &[FieldState]) -> String {
    let mut out = String::from("t,x,u,ut,v,vt\n");
    for s in states {
        let t = fmt_num(s.t);
        for (j, x) in s.grid.points().iter().enumerate() {
            let _ = writeln!(
                out,
                "{t},{},{},{},{},{}",
                fmt_num(*x),
                fmt_num(s.u[j]),
                fmt_num(s.ut[j]),
                fmt_num(s.v[j]),
                fmt_num(s.vt[j])
            );
        }
    }
    out
}

/// `t,zeta,s`, one block per snapshot.
pub fn kdv_csv(states: &[KdvState]) -> String {
    let mut out = String::from("t,zeta,s\n");
    for s in states {
        let t = fmt_num(s.t);
        for (z, v) in s.grid.points().iter().zip(&s.s) {
            let _ = writeln!(out, "{t},{},{}", fmt_num(*z), fmt_num(*v));
        }
    }
    out
}

/// `eps,t,sup_u,sup_v,l2_u,l2_v,pde_residual_sup`; a missing defect is an
/// empty field.
pub fn sweep_csv(rows: &[ErrorReport]) -> String {
    let mut out = String::from("eps,t,sup_u,sup_v,l2_u,l2_v,pde_residual_sup\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_num(r.eps),
            fmt_num(r.t),
            fmt_num(r.sup_u),
            fmt_num(r.sup_v),
            fmt_num(r.l2_u),
            fmt_num(r.l2_v),
            r.pde_residual_sup.map(fmt_num).unwrap_or_default()
        );
    }
    out
}

/// Columns given by `header`, one row per index of the equally long series.
pub fn series_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_num(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn check_name(name: &str) -> Result<(), OutputError> {
    let p = Path::new(name);
    let simple = p.components().count() == 1
        && matches!(p.components().next(), Some(std::path::Component::Normal(_)));
    if simple {
        Ok(())
    } else {
        Err(OutputError::UnsafeName(name.to_string()))
    }
}

/// Writes every artifact into a staging directory inside `dir`, then renames
/// them into place. On failure before the renames nothing is left behind.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, OutputError> {
    for a in artifacts {
        check_name(&a.name)?;
    }
    fs::create_dir_all(dir).map_err(|source| OutputError::Directory {
        path: dir.to_path_buf(),
        source,
    })?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(dir)
        .map_err(|source| OutputError::Directory {
            path: dir.to_path_buf(),
            source,
        })?;
    for a in artifacts {
        let path = staging.path().join(&a.name);
        let mut f = fs::File::create(&path).map_err(|source| OutputError::Write {
            path: path.clone(),
            source,
        })?;
        f.write_all(a.contents.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|source| OutputError::Write {
                path: path.clone(),
                source,
            })?;
    }
    let mut placed = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let from = staging.path().join(&a.name);
        let to = dir.join(&a.name);
        fs::rename(&from, &to).map_err(|source| OutputError::Write {
            path: to.clone(),
            source,
        })?;
        placed.push(to);
    }
    Ok(placed)
}
