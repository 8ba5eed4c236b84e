//! Trace export: CSV rows or an SVG polyline per output vertex.

use std::fmt::Write;
use std::str::FromStr;

use super::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Svg,
}

impl FromStr for TraceFormat {
    type Err = IoError;
    fn from_str(s: &str) -> Result<Self, IoError> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "svg" => Ok(TraceFormat::Svg),
            other => Err(IoError::Invalid(format!("unknown trace format '{other}' (csv|svg)"))),
        }
    }
}

/// `points[i][j]` is output vertex j at path point i.
pub fn export_trace(points: &[Vec<Vec<f64>>], format: TraceFormat, plane: (usize, usize)) -> Result<Vec<u8>, IoError> {
    let first = points.first().ok_or_else(|| IoError::Invalid("empty trace".into()))?;
    let n = first.first().map_or(0, Vec::len);
    if first.is_empty() || points.iter().any(|p| p.len() != first.len() || p.iter().any(|y| y.len() != n)) {
        return Err(IoError::Invalid("trace rows must all hold the same number of n-vectors".into()));
    }
    if plane.0 >= n || plane.1 >= n || plane.0 == plane.1 {
        return Err(IoError::Invalid(format!("plane ({}, {}) is not a pair of distinct coordinates below {n}", plane.0, plane.1)));
    }
    let mut out = String::new();
    match format {
        TraceFormat::Csv => {
            let header: Vec<String> = (0..first.len()).flat_map(|j| (0..n).map(move |c| format!("y{}_{}", j + 1, c + 1))).collect();
            writeln!(out, "{}", header.join(",")).expect("string write");
            for row in points {
                let cells: Vec<String> = row.iter().flatten().map(|v| format!("{v:?}")).collect();
                writeln!(out, "{}", cells.join(",")).expect("string write");
            }
        }
        TraceFormat::Svg => {
            let (a, b) = plane;
            let xs = points.iter().flatten().map(|y| y[a]);
            let ys = points.iter().flatten().map(|y| -y[b]);
            let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let span = (x1 - x0).max(y1 - y0).max(1e-9);
            let pad = 0.05 * span;
            let stroke = span / 200.0;
            writeln!(
                out,
                r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:?} {:?} {:?} {:?}">"#,
                x0 - pad,
                y0 - pad,
                (x1 - x0) + 2.0 * pad,
                (y1 - y0) + 2.0 * pad
            )
            .expect("string write");
            for j in 0..first.len() {
                let pts: Vec<String> = points.iter().map(|p| format!("{:?},{:?}", p[j][a], -p[j][b])).collect();
                writeln!(out, r#"<polyline fill="none" stroke="black" stroke-width="{stroke:?}" points="{}"/>"#, pts.join(" "))
                    .expect("string write");
            }
            writeln!(out, "</svg>").expect("string write");
        }
    }
    Ok(out.into_bytes())
}
