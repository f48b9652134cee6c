//! Category counts, task distribution and the treemap export.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::model::{Category, EnforcementCase, RtbfTask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub total_cases: usize,
    pub uncategorized: usize,
    /// Every category, zero counts included.
    pub category_counts: BTreeMap<Category, usize>,
    /// Cases citing at least one failure in each task.
    pub task_cases: BTreeMap<RtbfTask, usize>,
    /// `task_cases` as a percentage of all cases.
    pub task_share_pct: BTreeMap<RtbfTask, f64>,
    /// Number of cases by how many categories they cite.
    pub reasons_histogram: BTreeMap<usize, usize>,
    pub treemap: Vec<TreemapCell>,
}

impl CorpusSummary {
    pub fn count(&self, c: Category) -> usize {
        self.category_counts.get(&c).copied().unwrap_or(0)
    }
}

/// One rectangle of the treemap, in a unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreemapCell {
    pub category: Category,
    pub task: RtbfTask,
    pub count: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

pub fn summarize(corpus: &[EnforcementCase]) -> CorpusSummary {
    let mut category_counts: BTreeMap<Category, usize> =
        Category::ALL.iter().map(|c| (*c, 0)).collect();
    let mut task_cases: BTreeMap<RtbfTask, usize> = RtbfTask::ALL.iter().map(|t| (*t, 0)).collect();
    let mut reasons_histogram = BTreeMap::new();
    let mut uncategorized = 0;
    for case in corpus {
        if case.uncategorized || case.categories.is_empty() {
            uncategorized += 1;
        }
        for c in &case.categories {
            *category_counts.get_mut(c).expect("all categories present") += 1;
        }
        for t in case.tasks() {
            *task_cases.get_mut(&t).expect("all tasks present") += 1;
        }
        *reasons_histogram.entry(case.categories.len()).or_insert(0) += 1;
    }
    let total = corpus.len();
    let task_share_pct = task_cases
        .iter()
        .map(|(t, n)| {
            (
                *t,
                if total == 0 {
                    0.0
                } else {
                    100.0 * *n as f64 / total as f64
                },
            )
        })
        .collect();
    let treemap = layout(&category_counts);
    CorpusSummary {
        total_cases: total,
        uncategorized,
        category_counts,
        task_cases,
        task_share_pct,
        reasons_histogram,
        treemap,
    }
}

/// Squarified layout: cell areas are proportional to counts and sum to 1.
/// Empty categories get no cell.
pub fn layout(counts: &BTreeMap<Category, usize>) -> Vec<TreemapCell> {
    let mut items: Vec<(Category, usize)> = counts
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(c, n)| (*c, *n))
        .collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let total: usize = items.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Vec::new();
    }
    let areas: Vec<f64> = items
        .iter()
        .map(|(_, n)| *n as f64 / total as f64)
        .collect();
    let mut rects = Vec::with_capacity(items.len());
    squarify(
        &areas,
        Rect {
            x: 0.0,
            y: 0.0,
            w: 1.0,
            h: 1.0,
        },
        &mut rects,
    );
    items
        .into_iter()
        .zip(rects)
        .map(|((category, count), r)| TreemapCell {
            category,
            task: category.task(),
            count,
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

fn worst(row: &[f64], side: f64) -> f64 {
    let s: f64 = row.iter().sum();
    let (mx, mn) = row
        .iter()
        .fold((f64::MIN, f64::MAX), |(a, b), &r| (a.max(r), b.min(r)));
    let s2 = s * s;
    let side2 = side * side;
    (side2 * mx / s2).max(s2 / (side2 * mn))
}

fn squarify(areas: &[f64], mut free: Rect, out: &mut Vec<Rect>) {
    let mut i = 0;
    while i < areas.len() {
        let side = free.w.min(free.h);
        let mut end = i + 1;
        while end < areas.len() && worst(&areas[i..=end], side) <= worst(&areas[i..end], side) {
            end += 1;
        }
        let row = &areas[i..end];
        let sum: f64 = row.iter().sum();
        if free.w >= free.h {
            let col_w = sum / free.h;
            let mut y = free.y;
            for a in row {
                let h = a / col_w;
                out.push(Rect {
                    x: free.x,
                    y,
                    w: col_w,
                    h,
                });
                y += h;
            }
            free = Rect {
                x: free.x + col_w,
                y: free.y,
                w: free.w - col_w,
                h: free.h,
            };
        } else {
            let row_h = sum / free.w;
            let mut x = free.x;
            for a in row {
                let w = a / row_h;
                out.push(Rect {
                    x,
                    y: free.y,
                    w,
                    h: row_h,
                });
                x += w;
            }
            free = Rect {
                x: free.x,
                y: free.y + row_h,
                w: free.w,
                h: free.h - row_h,
            };
        }
        i = end;
    }
}

/// Static SVG rendering of the treemap, colored by task.
pub fn render_svg(cells: &[TreemapCell], width: u32, height: u32) -> String {
    let (w, h) = (width as f64, height as f64);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    for c in cells {
        let (x, y, cw, ch) = (c.x * w, c.y * h, c.w * w, c.h * h);
        let _ = writeln!(
            s,
            r##"<g><title>{name} ({task}): {count}</title><rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}" stroke="#ffffff" stroke-width="2"/><text x="{tx:.2}" y="{ty:.2}" font-family="sans-serif" font-size="12" fill="#ffffff">{name} {count}</text></g>"##,
            name = c.category.name(),
            task = c.task.describe(),
            count = c.count,
            fill = c.task.color(),
            tx = x + 4.0,
            ty = y + 16.0,
        );
    }
    s.push_str("</svg>\n");
    s
}
