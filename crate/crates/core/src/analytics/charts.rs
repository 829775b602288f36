//! Minimal SVG chart rendering for the three aggregate views.
//!
//! Output is plain SVG assembled by hand: byte-stable for identical inputs,
//! no font or raster dependencies. The numbers belong to the CSV tables;
//! these files exist for visual inspection.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{AnalyticsError, Histogram, JournalStats, YearlyTrend};

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const BAR_FILL: &str = "#4878a8";
const LINE_STROKE: &str = "#a85448";
const AXIS_STROKE: &str = "#333333";
const GRID_STROKE: &str = "#dddddd";

struct Canvas {
    svg: String,
}

impl Canvas {
    fn new(title: &str) -> Self {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
             <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
             <text x=\"{x}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{title}</text>",
            x = WIDTH / 2.0,
            title = escape(title),
        );
        Canvas { svg }
    }

    fn plot_width(&self) -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_height(&self) -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    /// y pixel for a value in [0, max].
    fn y_at(&self, value: f64, max: f64) -> f64 {
        let frac = if max > 0.0 { value / max } else { 0.0 };
        MARGIN_TOP + self.plot_height() * (1.0 - frac)
    }

    fn axes(&mut self) {
        let x0 = MARGIN_LEFT;
        let y0 = MARGIN_TOP + self.plot_height();
        let x1 = MARGIN_LEFT + self.plot_width();
        let _ = writeln!(
            self.svg,
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"{AXIS_STROKE}\"/>\n\
             <line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"{AXIS_STROKE}\"/>",
        );
    }

    fn y_grid(&mut self, max: f64, ticks: usize) {
        for i in 0..=ticks {
            let value = max * i as f64 / ticks as f64;
            let y = self.y_at(value, max);
            let x1 = MARGIN_LEFT + self.plot_width();
            let _ = writeln!(
                self.svg,
                "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\" stroke=\"{GRID_STROKE}\"/>\n\
                 <text x=\"{x}\" y=\"{ty:.2}\" font-size=\"11\" text-anchor=\"end\">{label}</text>",
                x = MARGIN_LEFT - 6.0,
                ty = y + 4.0,
                label = trim_float(value),
            );
        }
    }

    fn bar(&mut self, x: f64, width: f64, value: f64, max: f64) {
        let y = self.y_at(value, max);
        let h = MARGIN_TOP + self.plot_height() - y;
        let _ = writeln!(
            self.svg,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{width:.2}\" height=\"{h:.2}\" fill=\"{BAR_FILL}\"/>",
        );
    }

    fn x_label(&mut self, x: f64, text: &str, rotate: bool) {
        let y = MARGIN_TOP + self.plot_height() + 16.0;
        if rotate {
            let _ = writeln!(
                self.svg,
                "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"10\" text-anchor=\"end\" \
                 transform=\"rotate(-40 {x:.2} {y:.2})\">{t}</text>",
                t = escape(text),
            );
        } else {
            let _ = writeln!(
                self.svg,
                "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"10\" text-anchor=\"middle\">{t}</text>",
                t = escape(text),
            );
        }
    }

    fn caption(&mut self, text: &str) {
        let _ = writeln!(
            self.svg,
            "<text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"middle\">{t}</text>",
            x = WIDTH / 2.0,
            y = HEIGHT - 10.0,
            t = escape(text),
        );
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn trim_float(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 && v.abs() < 1e12 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

fn histogram_svg(histogram: &Histogram) -> String {
    let mut canvas = Canvas::new("Distribution of sentiment scores");
    let max = histogram.counts.iter().copied().max().unwrap_or(0) as f64;
    canvas.y_grid(max.max(1.0), 5);
    let n = histogram.counts.len();
    let slot = canvas.plot_width() / n as f64;
    for (i, &count) in histogram.counts.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + 1.0;
        canvas.bar(x, slot - 2.0, count as f64, max.max(1.0));
        if i % 2 == 0 {
            canvas.x_label(
                MARGIN_LEFT + slot * i as f64,
                &trim_float(histogram.bin_edges[i]),
                false,
            );
        }
    }
    canvas.x_label(MARGIN_LEFT + canvas.plot_width(), "1", false);
    canvas.axes();
    canvas.caption("normalized score (bin lower edge) vs abstract count");
    canvas.finish()
}

fn trend_svg(trend: &YearlyTrend) -> String {
    let mut canvas = Canvas::new("Average sentiment score by year");
    canvas.y_grid(1.0, 5);
    let n = trend.entries.len();
    let step = if n > 1 {
        canvas.plot_width() / (n - 1) as f64
    } else {
        0.0
    };
    let mut points = String::new();
    for (i, entry) in trend.entries.iter().enumerate() {
        let x = if n > 1 {
            MARGIN_LEFT + step * i as f64
        } else {
            MARGIN_LEFT + canvas.plot_width() / 2.0
        };
        if let Some(mean) = entry.mean_score {
            let y = canvas.y_at(mean, 1.0);
            let _ = writeln!(points, "{x:.2},{y:.2} ");
            let _ = writeln!(
                canvas.svg,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{LINE_STROKE}\"/>",
            );
        }
        let sparse = n > 12 && i % 2 == 1;
        if !sparse {
            canvas.x_label(x, &entry.year.to_string(), false);
        }
    }
    if !points.trim().is_empty() {
        let _ = writeln!(
            canvas.svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{LINE_STROKE}\" stroke-width=\"2\"/>",
            points.trim(),
        );
    }
    canvas.axes();
    canvas.caption("mean normalized score per publication year (empty years omitted from the line)");
    canvas.finish()
}

fn journals_svg(stats: &JournalStats) -> String {
    let mut canvas = Canvas::new("Average sentiment score by journal");
    canvas.y_grid(1.0, 5);
    let n = stats.entries.len().max(1);
    let slot = canvas.plot_width() / n as f64;
    for (i, entry) in stats.entries.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + 2.0;
        canvas.bar(x, (slot - 4.0).max(1.0), entry.mean_score, 1.0);
        let label = if entry.journal.chars().count() > 18 {
            let cut: String = entry.journal.chars().take(17).collect();
            format!("{cut}…")
        } else {
            entry.journal.clone()
        };
        canvas.x_label(x + slot / 2.0, &label, true);
    }
    canvas.axes();
    canvas.caption("journals ranked by abstract count; bar height is the mean normalized score");
    canvas.finish()
}

/// Write the three SVG charts. Returns the paths written.
pub fn render_svg_charts(
    histogram: &Histogram,
    trend: &YearlyTrend,
    stats: &JournalStats,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, AnalyticsError> {
    std::fs::create_dir_all(out_dir).map_err(|source| AnalyticsError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;
    let outputs = [
        ("histogram.svg", histogram_svg(histogram)),
        ("trend.svg", trend_svg(trend)),
        ("journals.svg", journals_svg(stats)),
    ];
    let mut paths = Vec::with_capacity(outputs.len());
    for (name, svg) in outputs {
        let path = out_dir.join(name);
        std::fs::write(&path, svg).map_err(|source| AnalyticsError::Write {
            path: path.display().to_string(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}
