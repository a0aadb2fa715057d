//! CSV, JSON and SVG writers. Numbers are printed with Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use liegeo::algebra::SoBasis;
use liegeo::flows::Trajectory;

use crate::CliError;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Renders a trajectory as CSV: `t`, the wedge coordinates in lexicographic
/// order, optionally the row-major entries of `g`, then one column per
/// monitor. An optional `source` label column comes first.
pub fn trajectory_csv(
    traj: &Trajectory,
    n: usize,
    include_g: bool,
    source: Option<&str>,
) -> String {
    let basis = SoBasis::new(n);
    let mut out = String::new();
    if source.is_some() {
        out.push_str("source,");
    }
    out.push('t');
    for k in 0..basis.dim() {
        write!(out, ",{}", basis.coord_name(k)).unwrap();
    }
    if include_g {
        for r in 1..=n {
            for c in 1..=n {
                write!(out, ",g_{r}{c}").unwrap();
            }
        }
    }
    for (name, _) in &traj.monitors {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');

    for (idx, t) in traj.times.iter().enumerate() {
        if let Some(label) = source {
            write!(out, "{label},").unwrap();
        }
        write!(out, "{t}").unwrap();
        let (g, x) = &traj.states[idx];
        for k in 0..basis.dim() {
            write!(out, ",{}", x.coeffs()[k]).unwrap();
        }
        if include_g {
            for r in 0..n {
                for c in 0..n {
                    write!(out, ",{}", g.matrix()[(r, c)]).unwrap();
                }
            }
        }
        for (_, series) in &traj.monitors {
            write!(out, ",{}", series[idx]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// CSV for projected curve data: `t` plus the named projection columns.
pub fn projection_csv(names: &[&str], times: &[f64], rows: &[Vec<f64>]) -> String {
    let mut out = String::from("t");
    for name in names {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for (t, row) in times.iter().zip(rows) {
        write!(out, "{t}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// A single polyline over the first two projection columns, autoscaled into
/// a square viewport.
pub fn polyline_svg(rows: &[Vec<f64>]) -> String {
    const SIZE: f64 = 512.0;
    const MARGIN: f64 = 16.0;
    let (mut xmin, mut xmax, mut ymin, mut ymax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for row in rows {
        xmin = xmin.min(row[0]);
        xmax = xmax.max(row[0]);
        ymin = ymin.min(row[1]);
        ymax = ymax.max(row[1]);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let mut points = String::new();
    for row in rows {
        let px = MARGIN + (row[0] - xmin) * scale;
        let py = SIZE - MARGIN - (row[1] - ymin) * scale;
        write!(points, "{px:.2},{py:.2} ").unwrap();
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n\
         </svg>\n",
        points.trim_end()
    )
}
