//! CSV and SVG emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::trace::{Trace, TraceBuilder, TraceMetadata};

use super::HarnessError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Csv(format!("{}: {e}", path.display()))
}

/// CSV text: a `t` column followed by every channel, 17 significant digits.
pub fn csv_string(trace: &Trace<f64>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("t").chain(trace.names().iter().map(String::as_str)).collect();
    w.write_record(&header).expect("in-memory write");
    for (t, row) in trace.times().iter().zip(trace.rows()) {
        let rec: Vec<String> = std::iter::once(t).chain(row).map(|v| format!("{v:.16e}")).collect();
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn emit_csv(trace: &Trace<f64>, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, csv_string(trace)).map_err(io_err(path))
}

/// Inverse of [`csv_string`]; the first column must be `t`.
pub fn parse_csv(text: &str, source: &Path) -> Result<Trace<f64>, HarnessError> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err(source))?.clone();
    if header.get(0) != Some("t") {
        return Err(HarnessError::Csv(format!("{}: first column must be `t`", source.display())));
    }
    let mut b = TraceBuilder::new(header.iter().skip(1));
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(source))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::Csv(format!("{} row {}: {e}", source.display(), i + 2)))?;
        b.push(vals[0], vals[1..].to_vec())
            .map_err(|e| HarnessError::Csv(format!("{} row {}: {e}", source.display(), i + 2)))?;
    }
    Ok(b.finish(TraceMetadata::default()))
}

pub fn read_csv(path: &Path) -> Result<Trace<f64>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_csv(&text, path)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of `channel` against time, one polyline per labelled trace.
pub fn svg_string(traces: &[(&str, &Trace<f64>)], channel: &str) -> Result<String, HarnessError> {
    let mut series = Vec::with_capacity(traces.len());
    for (label, tr) in traces {
        let ys = tr.channel(channel).map_err(|e| HarnessError::ChannelMismatch(format!("{label}: {e}")))?;
        series.push((*label, tr.times(), ys));
    }
    let finite = |v: &&f64| v.is_finite();
    let (mut t0, mut t1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, ts, ys) in &series {
        for t in ts.iter().filter(finite) {
            t0 = t0.min(*t);
            t1 = t1.max(*t);
        }
        for y in ys.iter().filter(finite) {
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
    }
    if !(t0 < t1) {
        t0 = 0.0;
        t1 = t0 + 1.0;
    }
    if !(y0 < y1) {
        let c = if y0.is_finite() { y0 } else { 0.0 };
        y0 = c - 1.0;
        y1 = c + 1.0;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |t: f64| MARGIN_L + (t - t0) / (t1 - t0) * pw;
    let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (t, y) = (t0 + f * (t1 - t0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            sx(t),
            HEIGHT - MARGIN_B + 16.0,
            format_tick(t)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            sy(y) + 4.0,
            format_tick(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">t (s)</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(channel)
    );
    for (i, (label, ts, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ts
            .iter()
            .zip(ys)
            .filter(|(t, y)| t.is_finite() && y.is_finite())
            .map(|(t, y)| format!("{:.2},{:.2}", sx(*t), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 16.0 + 16.0 * i as f64;
        let lx = MARGIN_L + pw - 130.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="12">{}</text>"#,
            lx + 26.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

pub fn emit_svg(traces: &[(&str, &Trace<f64>)], channel: &str, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, svg_string(traces, channel)?).map_err(io_err(path))
}
