//! Plain-text system-spec files.
//!
//! One `key = value` pair per line. `#` starts a comment; blank lines are
//! ignored; keys are case-sensitive. A file describes a system in exactly one
//! of two forms:
//!
//! ```text
//! # transfer function in powers of z^-1, with an input delay
//! num   = 0, 5, 4
//! den   = 10, -5, 6
//! delay = 50          # optional, default 0
//! ```
//!
//! ```text
//! # state space; rows of A are separated by ';', entries by ','
//! A = 0.5, 0.1; 0, -0.2
//! B = 1; 0            # column, ';' or ',' separated
//! C = 1, 1            # row, ',' or ';' separated
//! D = 0               # optional, default 0
//! ```
//!
//! Errors carry the 1-based line number; line 0 refers to the file as a whole
//! (for example a missing key).

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{RationalTransferFunction, StateSpace, SystemModel};
use crate::error::{Error, Result};

const KEYS: [&str; 7] = ["num", "den", "delay", "A", "B", "C", "D"];

pub fn read_system_spec(path: &Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path)?;
    parse_system_spec(&text)
}

pub fn parse_system_spec(text: &str) -> Result<SystemModel> {
    let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Parse { line, message: format!("unknown key `{key}`") });
        }
        if let Some((first, _)) = entries.insert(key, (line, value.trim())) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}` (first on line {first})") });
        }
    }

    let has_tf = ["num", "den", "delay"].iter().any(|k| entries.contains_key(k));
    let has_ss = ["A", "B", "C", "D"].iter().any(|k| entries.contains_key(k));
    match (has_tf, has_ss) {
        (true, true) => {
            let line = entries.values().map(|(l, _)| *l).max().unwrap_or(0);
            Err(Error::Parse { line, message: "mixes transfer-function and state-space keys".into() })
        }
        (true, false) => parse_tf(&entries).map(SystemModel::Transfer),
        (false, true) => parse_ss(&entries).map(SystemModel::StateSpace),
        (false, false) => Err(Error::Parse { line: 0, message: "no system description found".into() }),
    }
}

type Entries<'a> = HashMap<&'a str, (usize, &'a str)>;

fn required<'a>(entries: &Entries<'a>, key: &str) -> Result<(usize, &'a str)> {
    entries
        .get(key)
        .copied()
        .ok_or_else(|| Error::Parse { line: 0, message: format!("missing key `{key}`") })
}

fn parse_list(line: usize, value: &str, seps: &[char]) -> Result<Vec<f64>> {
    value
        .split(seps)
        .map(str::trim)
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, message: format!("invalid number `{tok}`") })
        })
        .collect()
}

fn with_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line, message: other.to_string() },
    })
}

fn parse_tf(entries: &Entries) -> Result<RationalTransferFunction> {
    let (num_line, num) = required(entries, "num")?;
    let (den_line, den) = required(entries, "den")?;
    let num = parse_list(num_line, num, &[','])?;
    let den = parse_list(den_line, den, &[','])?;
    let delay = match entries.get("delay") {
        Some(&(line, v)) => v
            .parse::<usize>()
            .map_err(|_| Error::Parse { line, message: format!("delay must be a nonnegative integer, found `{v}`") })?,
        None => 0,
    };
    with_line(den_line, RationalTransferFunction::new(num, den, delay))
}

fn parse_ss(entries: &Entries) -> Result<StateSpace> {
    let (a_line, a_text) = required(entries, "A")?;
    let rows: Vec<Vec<f64>> = a_text
        .split(';')
        .map(|row| parse_list(a_line, row, &[',']))
        .collect::<Result<_>>()?;
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Parse {
            line: a_line,
            message: format!("A must be square: {n} rows but a row has {} entries", bad.len()),
        });
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);

    let (b_line, b_text) = required(entries, "B")?;
    let b = parse_list(b_line, b_text, &[';', ','])?;
    if b.len() != n {
        return Err(Error::Parse { line: b_line, message: format!("B has {} entries, expected {n}", b.len()) });
    }
    let (c_line, c_text) = required(entries, "C")?;
    let c = parse_list(c_line, c_text, &[',', ';'])?;
    if c.len() != n {
        return Err(Error::Parse { line: c_line, message: format!("C has {} entries, expected {n}", c.len()) });
    }
    let d = match entries.get("D") {
        Some(&(line, v)) => {
            let vals = parse_list(line, v, &[','])?;
            if vals.len() != 1 {
                return Err(Error::Parse { line, message: "D must be a single scalar".into() });
            }
            vals[0]
        }
        None => 0.0,
    };
    with_line(a_line, StateSpace::new(a, DVector::from_vec(b), DVector::from_vec(c), d))
}
