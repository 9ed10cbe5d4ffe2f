//! Text formats for trajectories and Lyapunov traces.
//!
//! Every number is written with Rust's `{:?}` formatting of `f64`: the
//! shortest decimal that parses back to the same bits, in scientific
//! notation below `1e-5` or from `1e16` up.

use std::fmt::Write as _;
use std::path::Path;

use switchnet::{OpinionProfile, OrderedValue};

use crate::error::{CliError, Result};

pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Scalars as a single number, lexicographic values as their sorted
/// entries joined by `;`.
pub fn format_value(v: &OrderedValue) -> String {
    match v {
        OrderedValue::Scalar(s) => format_f64(*s),
        OrderedValue::Lex(l) => l.entries().iter().map(|&e| format_f64(e)).collect::<Vec<_>>().join(";"),
    }
}

/// Header `t,agent,coord_0,…,coord_{d−1}`, then one row per agent per step.
pub fn trajectory_csv(states: &[OpinionProfile]) -> String {
    let d = states.first().map_or(0, |x| x.d());
    let mut out = String::from("t,agent");
    for k in 0..d {
        let _ = write!(out, ",coord_{k}");
    }
    out.push('\n');
    for (t, x) in states.iter().enumerate() {
        for i in 0..x.n() {
            let _ = write!(out, "{t},{i}");
            for k in 0..x.d() {
                let _ = write!(out, ",{}", format_f64(x.get(i, k)));
            }
            out.push('\n');
        }
    }
    out
}

/// Header `t,value`, then one row per step.
pub fn lyapunov_csv(values: &[OrderedValue]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{t},{}", format_value(v));
    }
    out
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
