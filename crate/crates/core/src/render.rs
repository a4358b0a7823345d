//! Plot data as CSV and self-contained SVG.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::estimate::{AngularScan, EntityFit};
use crate::model::PhasePoint;
use crate::panel::fmt_f64;
use crate::simulate::{Bounds, StreamlineField, Trajectory};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;
const MAX_VERTICES: usize = 500;

/// One polyline per streamline: `polyline_id, t, e, i`.
pub fn write_streamlines_csv<W: Write>(sink: W, field: &StreamlineField) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["polyline_id", "t", "e", "i", "termination"])?;
    for line in &field.lines {
        let term = format!("{:?}", line.termination);
        for (t, p) in line.times.iter().zip(&line.points) {
            w.write_record([
                line.id.to_string(),
                fmt_f64(*t),
                fmt_f64(p.e),
                fmt_f64(p.i),
                term.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectories_csv<W: Write>(sink: W, trajs: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["polyline_id", "t", "e", "i"])?;
    for tr in trajs {
        for (t, p) in tr.times.iter().zip(&tr.points) {
            w.write_record([tr.entity_id.clone(), fmt_f64(*t), fmt_f64(p.e), fmt_f64(p.i)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `theta, count, parabola` at every grid angle.
pub fn write_scan_csv<W: Write>(sink: W, scan: &AngularScan) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["theta", "count", "parabola"])?;
    for (t, c) in scan.thetas.iter().zip(&scan.counts) {
        w.write_record([fmt_f64(*t), c.to_string(), fmt_f64(scan.parabola_at(*t))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fits_csv<W: Write>(sink: W, fits: &[EntityFit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "entity",
        "theta",
        "tau",
        "amplitude",
        "offset",
        "p_value",
        "rms_residual",
        "status",
        "error",
    ])?;
    for f in fits {
        let mut rec = vec![f.entity.clone(), fmt_f64(f.theta)];
        match &f.fit {
            Some(r) => rec.extend([
                fmt_f64(r.tau),
                fmt_f64(r.amplitude),
                fmt_f64(r.offset),
                fmt_f64(r.p_value),
                fmt_f64(r.rms_residual),
                format!("{:?}", r.status),
                String::new(),
            ]),
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 6));
                rec.push(f.error.clone().unwrap_or_default());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn open(&self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for (v, anchor, x, y) in [
            (self.x0, "start", MARGIN, HEIGHT - MARGIN + 14.0),
            (self.x1, "end", WIDTH - MARGIN, HEIGHT - MARGIN + 14.0),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{y}" font-size="10" text-anchor="{anchor}">{}</text>"#,
                tick(v)
            );
        }
        for (v, y) in [(self.y0, HEIGHT - MARGIN), (self.y1, MARGIN + 8.0)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{}</text>"#,
                MARGIN - 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 8.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="12" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
        s
    }

    fn polyline(&self, s: &mut String, pts: &[(f64, f64)], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let stride = pts.len().div_ceil(MAX_VERTICES).max(1);
        let mut coords = String::new();
        let last = pts.len() - 1;
        for (k, (x, y)) in pts.iter().enumerate() {
            if k % stride == 0 || k == last {
                let _ = write!(coords, "{:.2},{:.2} ", self.px(*x), self.py(*y));
            }
        }
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" {style}/>"#, coords.trim_end());
    }
}

fn tick(v: f64) -> String {
    format!("{}", (v * 100.0).round() / 100.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Phase portrait of arbitrary polylines in `bounds`, with an optional
/// equilibrium marker. Axes through the origin are drawn when visible.
pub fn phase_svg(title: &str, bounds: &Bounds, lines: &[Vec<PhasePoint>], marker: Option<PhasePoint>) -> String {
    let f = Frame {
        x0: bounds.e_min,
        x1: bounds.e_max,
        y0: bounds.i_min,
        y1: bounds.i_max,
    };
    let mut s = f.open(title, "E", "I");
    let _ = writeln!(
        s,
        r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
    if bounds.e_min < 0.0 && bounds.e_max > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{MARGIN}" x2="{0:.2}" y2="{1}" stroke="#999"/>"##,
            f.px(0.0),
            HEIGHT - MARGIN
        );
    }
    if bounds.i_min < 0.0 && bounds.i_max > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#999"/>"##,
            f.py(0.0),
            WIDTH - MARGIN
        );
    }
    for line in lines {
        let pts: Vec<(f64, f64)> = line.iter().map(|p| (p.e, p.i)).collect();
        f.polyline(&mut s, &pts, r##"stroke="#1f5fa8" stroke-width="0.8""##);
    }
    if let Some(m) = marker {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#c0392b"/>"##,
            f.px(m.e),
            f.py(m.i)
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn streamlines_svg(field: &StreamlineField) -> String {
    let lines: Vec<Vec<PhasePoint>> = field.lines.iter().map(|l| l.points.clone()).collect();
    phase_svg(
        &format!("{} streamlines", field.system),
        &field.bounds,
        &lines,
        field.equilibrium,
    )
}

/// Trajectories in a box padded around their extent.
pub fn trajectories_svg(title: &str, trajs: &[Trajectory]) -> Result<String> {
    let all = trajs.iter().flat_map(|t| t.points.iter());
    let (mut e0, mut e1, mut i0, mut i1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        e0 = e0.min(p.e);
        e1 = e1.max(p.e);
        i0 = i0.min(p.i);
        i1 = i1.max(p.i);
    }
    let pad = 0.05 * (e1 - e0).max(i1 - i0).max(1e-9);
    let bounds = Bounds::new(e0 - pad, e1 + pad, i0 - pad, i1 + pad)?;
    let lines: Vec<Vec<PhasePoint>> = trajs.iter().map(|t| t.points.clone()).collect();
    Ok(phase_svg(title, &bounds, &lines, None))
}

/// Counts as dots and the fitted parabola as a curve over the window.
pub fn scan_svg(scan: &AngularScan) -> String {
    let lo = scan.window_thetas.first().copied().unwrap_or(0.0);
    let hi = scan.window_thetas.last().copied().unwrap_or(90.0);
    let curve: Vec<(f64, f64)> = (0..=100)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / 100.0;
            let (a, b, c) = scan.parabola;
            (x, a * x * x + b * x + c)
        })
        .collect();
    let ys = scan
        .window_counts
        .iter()
        .map(|c| *c as f64)
        .chain(curve.iter().map(|p| p.1));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let pad = 0.1 * (y1 - y0).max(1.0);
    let f = Frame {
        x0: lo,
        x1: hi,
        y0: y0 - pad,
        y1: y1 + pad,
    };
    let title = format!(
        "sound fits vs angle: peak {:.1} deg, p = {:.2e}",
        scan.theta_star, scan.fit_p_value
    );
    let mut s = f.open(&title, "theta (deg)", "count");
    f.polyline(&mut s, &curve, r##"stroke="#c0392b" stroke-width="1.5""##);
    for (t, c) in scan.window_thetas.iter().zip(&scan.window_counts) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            f.px(*t),
            f.py(*c as f64)
        );
    }
    s.push_str("</svg>\n");
    s
}
