use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::convergence::ConvergenceReport;
use crate::spectral::Snapshot;
use crate::{Error, Result};

/// Shortest decimal that round-trips to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// `t,x,component,re,im` rows for every node and component of each snapshot.
pub fn snapshot_csv(snapshots: &[Snapshot]) -> String {
    let mut s = String::from("t,x,component,re,im\n");
    for snap in snapshots {
        let nodes = snap.state.grid.nodes();
        for (c, field) in snap.state.components.iter().enumerate() {
            for (x, z) in nodes.iter().zip(field) {
                let _ = writeln!(s, "{},{},{},{},{}", fmt_num(snap.t), fmt_num(*x), c, fmt_num(z.re), fmt_num(z.im));
            }
        }
    }
    s
}

pub(crate) fn push_field_rows(s: &mut String, run: &str, t: f64, nodes: &[f64], component: usize, field: &[Complex64]) {
    for (x, z) in nodes.iter().zip(field) {
        let _ = writeln!(
            s,
            "{run},{},{},{component},{},{}",
            fmt_num(t),
            fmt_num(*x),
            fmt_num(z.re),
            fmt_num(z.im)
        );
    }
}

/// `tau,error,norm,T,model`.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut s = String::from("tau,error,norm,T,model\n");
    for (tau, err) in report.tau_values.iter().zip(&report.errors) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_num(*tau),
            fmt_num(*err),
            report.norm.id(),
            fmt_num(report.t_final),
            report.model
        );
    }
    s
}

/// One polyline of an SVG plot.
pub(crate) struct Series {
    label: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Series {
    pub(crate) fn new(label: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.to_string(),
            x,
            y,
        }
    }
}

const PALETTE: [&str; 6] = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Plain line plot on a fixed 800x400 viewport.
pub(crate) fn svg_plot(title: &str, series: &[Series]) -> String {
    let (w, h, pad) = (800.0, 400.0, 40.0);
    let finite = |v: &[f64]| v.iter().copied().filter(|x| x.is_finite()).collect::<Vec<f64>>();
    let xs: Vec<f64> = series.iter().flat_map(|s| finite(&s.x)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| finite(&s.y)).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-300 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, "<text x=\"{pad}\" y=\"24\" font-size=\"14\">{}</text>", escape(title));
    let _ = writeln!(
        s,
        "<text x=\"{pad}\" y=\"{}\" font-size=\"11\">x in [{x0:.3}, {x1:.3}], y in [{y0:.3e}, {y1:.3e}]</text>",
        h - 12.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(&ser.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            w - pad - 130.0,
            pad + 14.0 * (i + 1) as f64,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
