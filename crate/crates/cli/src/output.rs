//! Artifact serialization: trajectory CSV and sorted-key JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hflow_core::flow::TrajectoryRecord;
use serde::Serialize;

use crate::error::{CliError, CliResult};

const LEADING: [&str; 6] = ["t", "dt", "l2_sq", "h1_sq", "E", "D"];
const TRAILING: [&str; 5] = ["f", "fprime", "fsecond", "concavity", "energy_residual"];

pub fn delta_column(delta: f64) -> String {
    format!("D_delta_{delta}")
}

pub fn csv_header(deltas: &[f64]) -> Vec<String> {
    LEADING
        .iter()
        .map(|s| s.to_string())
        .chain(deltas.iter().map(|&d| delta_column(d)))
        .chain(TRAILING.iter().map(|s| s.to_string()))
        .collect()
}

/// 17 significant digits, enough to round-trip every `f64`.
fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn trajectory_csv(tr: &TrajectoryRecord) -> String {
    let mut out = csv_header(&tr.deltas).join(",");
    out.push('\n');
    for s in &tr.samples {
        let row = [s.t, s.dt, s.l2_sq, s.h1_sq, s.energy, s.nehari]
            .into_iter()
            .chain(s.nehari_delta.iter().copied())
            .chain([s.f, s.fprime, s.fsecond, s.concavity, s.energy_residual]);
        for (k, v) in row.enumerate() {
            if k > 0 {
                out.push(',');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// A trajectory CSV read back: the monitored `δ` values and the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub deltas: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

/// Parses a trajectory CSV, checking the exact column order and that every
/// cell is a number.
pub fn parse_trajectory_csv(text: &str) -> Result<ParsedCsv, String> {
    if text.contains('\r') {
        return Err("CR line ending".into());
    }
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split(',').collect();
    if header.len() < LEADING.len() + TRAILING.len() {
        return Err(format!("{} columns is too few", header.len()));
    }
    let nd = header.len() - LEADING.len() - TRAILING.len();
    let deltas = header[LEADING.len()..LEADING.len() + nd]
        .iter()
        .map(|c| {
            c.strip_prefix("D_delta_")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| format!("bad delta column {c:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expect = csv_header(&deltas);
    if header != expect {
        return Err(format!("header {header:?} != {expect:?}"));
    }
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| format!("row {i}: {c:?}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != header.len() {
                return Err(format!("row {i} has {} cells", row.len()));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedCsv { deltas, rows })
}

/// Pretty JSON with keys sorted at every level.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    // serde_json's Map is a BTreeMap unless `preserve_order` is enabled,
    // so going through Value sorts the keys.
    let v = serde_json::to_value(value).map_err(|e| CliError::Numerical(format!("serialize: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(format!("serialize: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_column_order() {
        assert_eq!(
            csv_header(&[0.5, 1.25]).join(","),
            "t,dt,l2_sq,h1_sq,E,D,D_delta_0.5,D_delta_1.25,f,fprime,fsecond,concavity,energy_residual"
        );
    }

    #[test]
    fn rejects_reordered_or_crlf() {
        assert!(parse_trajectory_csv("dt,t,l2_sq,h1_sq,E,D,f,fprime,fsecond,concavity,energy_residual\n").is_err());
        assert!(parse_trajectory_csv("t,dt,l2_sq,h1_sq,E,D,f,fprime,fsecond,concavity,energy_residual\r\n").is_err());
        assert!(
            parse_trajectory_csv("t,dt,l2_sq,h1_sq,E,D,f,fprime,fsecond,concavity,energy_residual\n1,2\n").is_err()
        );
    }

    #[test]
    fn json_keys_are_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let s = to_json(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }

    proptest! {
        #[test]
        fn header_round_trips(deltas in prop::collection::vec(1e-3f64..1.499, 0..5)) {
            let text = csv_header(&deltas).join(",") + "\n";
            let parsed = parse_trajectory_csv(&text).unwrap();
            prop_assert_eq!(parsed.deltas, deltas);
        }

        #[test]
        fn floats_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let mut s = String::new();
            num(&mut s, v);
            prop_assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
