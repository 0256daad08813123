//! Deterministic CSV and SVG writers.
//!
//! Floats are written with 12 significant digits in scientific notation,
//! lines end in LF and rows keep the order they are given in, so equal
//! inputs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::sweep::{point_means, series, CrlbCell, ExperimentRecord};

pub const RECORD_HEADER: &str = "axis,value,algorithm,stream,seed,sr,crlb_theta,crlb_phi,feasible,status";

/// 12 significant digits; `nan`, `inf` and `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

fn field(s: &str) -> String {
    s.replace([',', '\n', '\r'], " ")
}

pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            field(&r.axis),
            fmt_f64(r.value),
            field(&r.algorithm),
            field(&r.stream),
            r.seed,
            fmt_f64(r.sr),
            fmt_f64(r.crlb_theta),
            fmt_f64(r.crlb_phi),
            fmt_f64(r.feasible),
            field(&r.status)
        );
    }
    out
}

pub fn crlb_csv(cells: &[CrlbCell]) -> String {
    let mut out = String::from("alpha_deg,beta_deg,crlb_theta,crlb_phi,feasible\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(c.alpha_deg),
            fmt_f64(c.beta_deg),
            fmt_f64(c.crlb_theta),
            fmt_f64(c.crlb_phi),
            u8::from(c.feasible)
        );
    }
    out
}

/// Per-episode training curve.
pub fn reward_csv(rewards: &[f64], smoothed: &[f64], gated: &[f64]) -> String {
    let mut out = String::from("episode,reward,smoothed,gated\n");
    for (i, ((r, s), g)) in rewards.iter().zip(smoothed).zip(gated).enumerate() {
        let _ = writeln!(out, "{i},{},{},{}", fmt_f64(*r), fmt_f64(*s), fmt_f64(*g));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the records as CSV and, when `svg` is given, the mean-SR plot.
pub fn emit_outputs(records: &[ExperimentRecord], csv: &Path, svg: Option<&Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to write".into()));
    }
    write_text(csv, &records_csv(records))?;
    if let Some(svg) = svg {
        write_text(svg, &sweep_svg(records))?;
    }
    Ok(())
}

/// A named polyline for [`line_plot`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-2) {
        format!("{x:.1e}")
    } else {
        format!("{:.2}", x).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Self-contained SVG line chart with axes, five ticks per axis and a
/// legend. Non-finite points are skipped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    y0 = y0.min(0.0);
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{left:.1},{top:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for k in 0..5 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, top + ph + 19.0, tick(xv));
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{py:.1}" x2="{left:.1}" y2="{py:.1}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r##"<line x1="{left:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#dddddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 8.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, coords.join(" "));
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{colour}"/>"#);
        }
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

/// Mean SR against the swept value, one series per algorithm and stream.
pub fn sweep_svg(records: &[ExperimentRecord]) -> String {
    let means = point_means(records);
    let mut keys: Vec<(String, String)> = Vec::new();
    for m in &means {
        let k = (m.algorithm.clone(), m.stream.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let lines: Vec<Series> = keys
        .iter()
        .map(|(a, s)| Series {
            name: format!("{a} / {s}"),
            points: series(&means, a, s),
        })
        .collect();
    let axis = records.first().map_or("value", |r| r.axis.as_str());
    line_plot(&format!("Secrecy rate versus {axis}"), axis, "mean SR (bit/s/Hz)", &lines)
}

/// Training curve: raw and smoothed per-episode reward.
pub fn reward_svg(rewards: &[f64], smoothed: &[f64]) -> String {
    let idx = |v: &[f64]| v.iter().enumerate().map(|(i, y)| (i as f64, *y)).collect();
    line_plot(
        "Reward versus training episode",
        "episode",
        "mean reward per step",
        &[
            Series { name: "reward".into(), points: idx(rewards) },
            Series { name: "smoothed".into(), points: idx(smoothed) },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: f64, algo: &str, sr: f64) -> ExperimentRecord {
        ExperimentRecord {
            axis: "tx_power".into(),
            value: v,
            algorithm: algo.into(),
            stream: "combined".into(),
            seed: 3,
            sr,
            crlb_theta: 1e-4,
            crlb_phi: f64::INFINITY,
            feasible: 1.0,
            status: "ok".into(),
        }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_f64(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn csv_has_header_plus_one_line_per_record() {
        let rows = vec![rec(20.0, "el", 1.0), rec(25.0, "el", 2.0)];
        let csv = records_csv(&rows);
        assert_eq!(csv.lines().count(), rows.len() + 1);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
        assert_eq!(csv.lines().next(), Some(RECORD_HEADER));
        assert_eq!(csv, records_csv(&rows));
    }

    #[test]
    fn status_cannot_break_columns() {
        let mut r = rec(1.0, "el", 0.0);
        r.status = "bad, worse\nworst".into();
        let csv = records_csv(&[r]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), RECORD_HEADER.split(',').count());
    }

    #[test]
    fn plots_are_deterministic() {
        let rows = vec![rec(20.0, "el", 1.0), rec(25.0, "el", 2.0), rec(20.0, "mnpl", 1.5), rec(25.0, "mnpl", f64::NAN)];
        let a = sweep_svg(&rows);
        assert_eq!(a, sweep_svg(&rows));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(reward_svg(&[1.0, 2.0], &[1.0, 1.5]).contains("polyline"));
    }
}
