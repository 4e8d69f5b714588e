//! JSON exchange format for systems and CSV writers for pipeline results.
//!
//! A system is an object with integers `n`, `m1`, `m2` and row-major arrays
//! `A`, `B`, `C`, `D`; a `sigma` field marks a discrete-time system.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pipelines::SParams;
use crate::simulate::ResonanceList;
use crate::system::{DiscreteSystem, StateSpaceSystem};

/// Either kind of system stored in the exchange format.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemFile {
    Continuous(StateSpaceSystem),
    Discrete(DiscreteSystem),
}

impl SystemFile {
    pub fn n(&self) -> usize {
        match self {
            SystemFile::Continuous(s) => s.a.nrows(),
            SystemFile::Discrete(s) => s.a.nrows(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Raw {
    n: usize,
    m1: usize,
    m2: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sigma: Option<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, data: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>> {
    let bad = |what: String| Error::DimensionMismatch(format!("field \"{name}\": {what}"));
    // A matrix without columns may be written as `[]` regardless of its row count.
    if nc == 0 && data.is_empty() {
        return Ok(DMatrix::zeros(nr, 0));
    }
    if data.len() != nr {
        return Err(bad(format!("expected {nr} rows, found {}", data.len())));
    }
    for (i, r) in data.iter().enumerate() {
        if r.len() != nc {
            return Err(bad(format!("row {i} has {} entries, expected {nc}", r.len())));
        }
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| data[i][j]))
}

fn from_raw(raw: Raw) -> Result<SystemFile> {
    let m = raw.m1 + raw.m2;
    let a = matrix("A", &raw.a, raw.n, raw.n)?;
    let b = matrix("B", &raw.b, raw.n, m)?;
    let c = matrix("C", &raw.c, m, raw.n)?;
    let d = matrix("D", &raw.d, m, m)?;
    if a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix entries must be finite".into()));
    }
    Ok(match raw.sigma {
        Some(sigma) => SystemFile::Discrete(DiscreteSystem::new(a, b, c, d, sigma, raw.m1, raw.m2)?),
        None => SystemFile::Continuous(StateSpaceSystem::new(a, b, c, d, raw.m1, raw.m2)?),
    })
}

/// Parses a system from JSON text.
pub fn parse_system(text: &str) -> Result<SystemFile> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    for key in ["n", "m1", "m2", "A", "B", "C", "D"] {
        if value.get(key).is_none() {
            return Err(Error::Json(format!("missing field \"{key}\"")));
        }
    }
    let raw: Raw = serde_json::from_value(value).map_err(|e| Error::Json(e.to_string()))?;
    from_raw(raw)
}

/// Parses a continuous-time system, rejecting discrete ones.
pub fn parse_continuous(text: &str) -> Result<StateSpaceSystem> {
    match parse_system(text)? {
        SystemFile::Continuous(s) => Ok(s),
        SystemFile::Discrete(_) => Err(Error::InvalidArgument("expected a continuous-time system".into())),
    }
}

/// Pretty JSON for either kind of system.
pub fn system_file_json(sys: &SystemFile) -> String {
    let raw = match sys {
        SystemFile::Continuous(s) => Raw {
            n: s.a.nrows(),
            m1: s.m1,
            m2: s.m2,
            a: rows(&s.a),
            b: rows(&s.b),
            c: rows(&s.c),
            d: rows(&s.d),
            sigma: None,
        },
        SystemFile::Discrete(s) => Raw {
            n: s.a.nrows(),
            m1: s.m1,
            m2: s.m2,
            a: rows(&s.a),
            b: rows(&s.b),
            c: rows(&s.c),
            d: rows(&s.d),
            sigma: Some(s.sigma),
        },
    };
    serde_json::to_string_pretty(&raw).expect("finite matrices serialise")
}

pub fn system_json(sys: &StateSpaceSystem) -> String {
    system_file_json(&SystemFile::Continuous(sys.clone()))
}

pub fn discrete_json(sys: &DiscreteSystem) -> String {
    system_file_json(&SystemFile::Discrete(sys.clone()))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes `f_hz,s11_re,s11_im,s21_re,s21_im,s11_db,s21_db`.
pub fn write_sparams_csv<W: Write>(points: &[SParams], w: &mut W) -> Result<()> {
    writeln!(w, "f_hz,s11_re,s11_im,s21_re,s21_im,s11_db,s21_db").map_err(io_err)?;
    for p in points {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.frequency,
            p.s11.re,
            p.s11.im,
            p.s21.re,
            p.s21.im,
            p.s11_db(),
            p.s21_db()
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Writes `f_hz,decay_rate` for every resonance.
pub fn write_resonances_csv<W: Write>(list: &ResonanceList, w: &mut W) -> Result<()> {
    writeln!(w, "f_hz,decay_rate").map_err(io_err)?;
    for r in &list.entries {
        writeln!(w, "{:.16e},{:.16e}", r.frequency, r.decay_rate).map_err(io_err)?;
    }
    Ok(())
}
