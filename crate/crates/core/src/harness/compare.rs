//! Cross-model trace comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::posture::perimeter;
use crate::trace::{uniform_grid, Trace};

use super::HarnessError;

/// Metrics that depend on one trace only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub label: String,
    /// Heading at the last common sample minus heading at the first (deg).
    pub heading_deflection_deg: Option<f64>,
    /// max |P(t) − P(t_0)| / P(t_0) over the grid.
    pub max_perimeter_drift: Option<f64>,
    pub grf_min: Option<f64>,
    /// First grid time with `f_n <= 0`.
    pub contact_loss_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
    pub heading_rmse_deg: Option<f64>,
    pub com_path_rmse: Option<f64>,
    pub v_tumble_rmse: Option<f64>,
    pub models: [ModelSummary; 2],
    pub channel_rmse: BTreeMap<String, f64>,
}

fn mean_spacing(tr: &Trace<f64>) -> f64 {
    let t = tr.times();
    (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64
}

/// Trapezoid-rule time average of `f` over the grid.
fn time_mean(grid: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    if grid.len() < 2 {
        return grid.first().map_or(0.0, |_| f(0));
    }
    let mut acc = 0.0;
    for k in 1..grid.len() {
        acc += 0.5 * (f(k - 1) + f(k)) * (grid[k] - grid[k - 1]);
    }
    acc / (grid[grid.len() - 1] - grid[0])
}

struct Resampled<'a> {
    names: &'a [String],
    rows: Vec<Vec<f64>>,
}

impl Resampled<'_> {
    fn col(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn summarize(label: &str, grid: &[f64], r: &Resampled<'_>) -> ModelSummary {
    let heading_deflection_deg = r.col("heading_deg").map(|h| h[h.len() - 1] - h[0]);
    let max_perimeter_drift = match (r.col("a"), r.col("b")) {
        (Some(a), Some(b)) => {
            let p: Option<Vec<f64>> = a.iter().zip(&b).map(|(&a, &b)| perimeter(a, b).ok()).collect();
            p.map(|p| p.iter().map(|v| ((v - p[0]) / p[0]).abs()).fold(0.0, f64::max))
        }
        _ => None,
    };
    let f_n = r.col("f_n");
    ModelSummary {
        label: label.to_owned(),
        heading_deflection_deg,
        max_perimeter_drift,
        grf_min: f_n.as_ref().map(|f| f.iter().copied().fold(f64::INFINITY, f64::min)),
        contact_loss_time: f_n.and_then(|f| f.iter().position(|&v| v <= 0.0).map(|k| grid[k])),
    }
}

/// Compares two traces on the overlap of their spans, sampled on the
/// coarser of the two grids. Both traces must carry the same channels.
pub fn compare_traces(
    (label_a, a): (&str, &Trace<f64>),
    (label_b, b): (&str, &Trace<f64>),
) -> Result<ComparisonReport, HarnessError> {
    if a.names() != b.names() {
        return Err(HarnessError::ChannelMismatch(format!(
            "{label_a} has [{}], {label_b} has [{}]",
            a.names().join(","),
            b.names().join(",")
        )));
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(HarnessError::ChannelMismatch("traces need at least two samples".into()));
    }
    let t0 = a.times()[0].max(b.times()[0]);
    let t1 = a.times()[a.len() - 1].min(b.times()[b.len() - 1]);
    if !(t1 > t0) {
        return Err(HarnessError::ChannelMismatch(format!("time spans of {label_a} and {label_b} do not overlap")));
    }
    let dt = mean_spacing(a).max(mean_spacing(b));
    let grid = uniform_grid(t0, t1, dt);
    let ra = Resampled { names: a.names(), rows: grid.iter().map(|&t| a.sample(t)).collect() };
    let rb = Resampled { names: b.names(), rows: grid.iter().map(|&t| b.sample(t)).collect() };

    let channel_rmse: BTreeMap<String, f64> = a
        .names()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let ms = time_mean(&grid, |k| (ra.rows[k][i] - rb.rows[k][i]).powi(2));
            (n.clone(), ms.sqrt())
        })
        .collect();

    let com_path_rmse = {
        let cols: Option<Vec<usize>> =
            ["com_x", "com_y", "com_z"].iter().map(|c| a.names().iter().position(|n| n == c)).collect();
        cols.map(|cols| {
            time_mean(&grid, |k| cols.iter().map(|&i| (ra.rows[k][i] - rb.rows[k][i]).powi(2)).sum::<f64>()).sqrt()
        })
    };

    Ok(ComparisonReport {
        t_start: t0,
        t_end: t1,
        dt,
        samples: grid.len(),
        heading_rmse_deg: channel_rmse.get("heading_deg").copied(),
        com_path_rmse,
        v_tumble_rmse: channel_rmse.get("v_tumble").copied(),
        models: [summarize(label_a, &grid, &ra), summarize(label_b, &grid, &rb)],
        channel_rmse,
    })
}

fn opt(v: Option<f64>, unit: &str) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.6e} {unit}").trim_end().to_owned())
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "window           {:.6} .. {:.6} s, dt {:.6} s, {} samples", self.t_start, self.t_end, self.dt, self.samples);
        let _ = writeln!(s, "heading RMSE     {}", opt(self.heading_rmse_deg, "deg"));
        let _ = writeln!(s, "CoM path RMSE    {}", opt(self.com_path_rmse, "m"));
        let _ = writeln!(s, "v_tumble RMSE    {}", opt(self.v_tumble_rmse, "m/s"));
        for m in &self.models {
            let _ = writeln!(s, "[{}]", m.label);
            let _ = writeln!(s, "  heading deflection  {}", opt(m.heading_deflection_deg, "deg"));
            let _ = writeln!(s, "  perimeter drift     {}", opt(m.max_perimeter_drift, ""));
            let _ = writeln!(s, "  GRF minimum         {}", opt(m.grf_min, "N"));
            let _ = writeln!(
                s,
                "  contact loss        {}",
                m.contact_loss_time.map_or_else(|| "none".to_owned(), |t| format!("t = {t:.6} s"))
            );
        }
        let _ = writeln!(s, "per-channel RMSE");
        for (k, v) in &self.channel_rmse {
            let _ = writeln!(s, "  {k:<12} {v:.6e}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{TraceBuilder, TraceMetadata};
    use std::f64::consts::TAU;

    fn trace(dt: f64, f: impl Fn(f64) -> Vec<f64>) -> Trace<f64> {
        let mut b = TraceBuilder::new(["heading_deg", "v_tumble", "f_n"]);
        for t in uniform_grid(0.0, 4.0, dt) {
            b.push(t, f(t)).unwrap();
        }
        b.finish(TraceMetadata::default())
    }

    #[test]
    fn identical_traces_have_zero_error() {
        let tr = trace(0.01, |t| vec![t.sin(), t, 1.0 + t]);
        let r = compare_traces(("a", &tr), ("b", &tr)).unwrap();
        assert!(r.channel_rmse.values().all(|&v| v == 0.0));
        assert_eq!(r.heading_rmse_deg, Some(0.0));
        assert_eq!(r.com_path_rmse, None);
        assert_eq!(r.models[0].grf_min, Some(1.0));
        assert_eq!(r.models[0].contact_loss_time, None);
    }

    #[test]
    fn constant_offset_is_recovered() {
        let a = trace(0.01, |t| vec![t.cos(), 0.0, 1.0]);
        let b = trace(0.01, |t| vec![t.cos() + 3.5, 0.0, 1.0]);
        let r = compare_traces(("a", &a), ("b", &b)).unwrap();
        approx::assert_abs_diff_eq!(r.heading_rmse_deg.unwrap(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn sinusoid_rms_is_amplitude_over_root_two() {
        let amp = 2.5;
        let a = trace(0.001, |t| vec![amp * (TAU * t).sin(), 0.0, 1.0]);
        let b = trace(0.004, |_| vec![0.0, 0.0, 1.0]);
        let r = compare_traces(("a", &a), ("b", &b)).unwrap();
        assert_eq!(r.dt, 0.004);
        approx::assert_abs_diff_eq!(r.heading_rmse_deg.unwrap(), amp / 2f64.sqrt(), epsilon = 1e-9);
        let swapped = compare_traces(("b", &b), ("a", &a)).unwrap();
        assert_eq!(swapped.channel_rmse, r.channel_rmse);
    }

    #[test]
    fn contact_loss_and_mismatch() {
        let a = trace(0.01, |t| vec![0.0, 0.0, 1.0 - t]);
        let r = compare_traces(("a", &a), ("b", &a)).unwrap();
        approx::assert_abs_diff_eq!(r.models[1].contact_loss_time.unwrap(), 1.0, epsilon = 0.011);
        let mut bld = TraceBuilder::new(["heading_deg"]);
        bld.push(0.0, vec![0.0]).unwrap();
        bld.push(1.0, vec![0.0]).unwrap();
        let other = bld.finish(TraceMetadata::default());
        assert!(matches!(compare_traces(("a", &a), ("o", &other)), Err(HarnessError::ChannelMismatch(_))));
    }
}
