//! Benchmark report: throughput series, injected events, summary
//! statistics, and a static SVG plot.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::challenge::ChallengeName;
use crate::cost::CostModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    /// Window start, milliseconds from the start of measurement.
    pub t_ms: u64,
    pub ops_per_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    CacheClear,
    MarkDelete,
    Flush,
    Forcemerge,
    CleansingStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchEvent {
    pub kind: EventKind,
    pub start_ms: u64,
    pub end_ms: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ops: usize,
    pub duration_ms: u64,
    pub mean_ops_per_sec: f64,
    pub median_window: f64,
    pub min_window: f64,
    pub max_window: f64,
    /// Coefficient of variation over window throughputs.
    pub window_cv: f64,
    /// Host wall-clock throughput of the measured phase; informational.
    pub wall_ops_per_sec: f64,
}

impl Summary {
    pub fn from_series(
        ops: usize,
        duration_ms: u64,
        series: &[WindowSample],
        wall_ops_per_sec: f64,
    ) -> Summary {
        if ops == 0 || series.is_empty() {
            return Summary {
                wall_ops_per_sec,
                ..Summary::default()
            };
        }
        let mut v: Vec<f64> = series.iter().map(|w| w.ops_per_sec).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        Summary {
            ops,
            duration_ms,
            mean_ops_per_sec: if duration_ms == 0 {
                0.0
            } else {
                ops as f64 * 1000.0 / duration_ms as f64
            },
            median_window: v[v.len() / 2],
            min_window: v[0],
            max_window: v[v.len() - 1],
            window_cv: if mean > 0.0 { var.sqrt() / mean } else { 0.0 },
            wall_ops_per_sec,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactSummary {
    pub baseline_ops_per_sec: f64,
    pub trough_ops_per_sec: f64,
    /// `trough / baseline`.
    pub trough_ratio: f64,
    /// From the first injected event to the end of the first window back
    /// within 10% of baseline; `None` if it never recovers.
    pub recovery_ms: Option<u64>,
    /// Mean throughput from the first event to the end of the run, over baseline.
    pub post_event_mean_ratio: f64,
    pub deleted_docs: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub receipt_ids: Vec<String>,
    /// Residue scan of the deleted selector after the run, for cleansing runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residue_clean: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub ops_per_sec: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub challenge: ChallengeName,
    pub track_size: usize,
    pub track_seed: u64,
    pub workers: usize,
    pub warmup: usize,
    pub window_ms: u64,
    pub series: Vec<WindowSample>,
    pub events: Vec<BenchEvent>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<ImpactSummary>,
    pub reference: Reference,
    pub cost_model: CostModel,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Throughput-versus-time line plot with injected events shaded.
    pub fn render_svg(&self, width: u32, height: u32) -> String {
        let (w, h) = (width as f64, height as f64);
        let (left, right, top, bottom) = (60.0, 20.0, 30.0, 40.0);
        let pw = w - left - right;
        let ph = h - top - bottom;
        let t_max = self.summary.duration_ms.max(1) as f64;
        let y_max = self
            .series
            .iter()
            .map(|s| s.ops_per_sec)
            .fold(1.0, f64::max)
            * 1.1;
        let x = |t: f64| left + pw * t / t_max;
        let y = |v: f64| top + ph * (1.0 - v / y_max);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(
            s,
            r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="18" font-family="sans-serif" font-size="13">{} throughput (ops/s, {} ms windows)</text>"#,
            self.challenge, self.window_ms
        );
        for e in &self.events {
            let (x0, x1) = (
                x(e.start_ms as f64),
                x(e.end_ms as f64).max(x(e.start_ms as f64) + 1.0),
            );
            let _ = writeln!(
                s,
                r##"<rect x="{x0:.1}" y="{top}" width="{:.1}" height="{ph:.1}" fill="#f4a261" fill-opacity="0.35"><title>{:?} {}</title></rect>"##,
                x1 - x0,
                e.kind,
                e.detail
            );
        }
        let pts: Vec<String> = self
            .series
            .iter()
            .map(|p| {
                format!(
                    "{:.1},{:.1}",
                    x(p.t_ms as f64 + self.window_ms as f64 / 2.0),
                    y(p.ops_per_sec)
                )
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline fill="none" stroke="#264653" stroke-width="1.5" points="{}"/>"##,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#000"/>"##,
            top + ph,
            left + pw,
            top + ph
        );
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="#000"/>"##,
            top + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{:.1}" font-family="sans-serif" font-size="11">0</text><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{:.1} s</text>"#,
            h - 12.0,
            left + pw,
            h - 12.0,
            t_max / 1000.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{:.0}</text>"#,
            left - 4.0,
            top + 4.0,
            y_max
        );
        s.push_str("</svg>\n");
        s
    }
}
