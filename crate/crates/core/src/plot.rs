//! Self-contained SVG charts for experiment summaries, written by hand so
//! the output carries no external references and is byte-stable.
//!
//! Buffer sizes sit on a categorical x-axis. The scatter chart overlays
//! the mean estimate and the mean true coverage per size; the error-bar
//! chart shows the mean (estimate - true) difference with vertical bars
//! spanning one sample standard deviation either side.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::experiment::SummaryRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    ErrorBars,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown plot kind {0:?} (expected \"scatter\" or \"error_bars\")")]
pub struct UnknownPlotKind(String);

impl FromStr for PlotKind {
    type Err = UnknownPlotKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scatter" => Ok(Self::Scatter),
            "error_bars" => Ok(Self::ErrorBars),
            other => Err(UnknownPlotKind(other.to_string())),
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;

const ESTIMATE_COLOR: &str = "#2b6cb0";
const TRUTH_COLOR: &str = "#c05621";

/// Render a summary as a standalone SVG document.
pub fn render(summary: &[SummaryRow], kind: PlotKind) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let (title, y_label, values) = match kind {
        PlotKind::Scatter => (
            "Mean estimated vs. mean true coverage per buffer size",
            "coverage",
            scatter_values(summary),
        ),
        PlotKind::ErrorBars => (
            "Mean (estimate - true coverage) per buffer size; \
             vertical bars span \u{b1}1 sample standard deviation",
            "estimate - true coverage",
            error_bar_values(summary),
        ),
    };
    let (y_min, y_max) = value_range(&values, kind);
    let y_scale = move |v: f64| MARGIN_TOP + (y_max - v) / (y_max - y_min) * plot_h;
    let x_center =
        move |i: usize| MARGIN_LEFT + (i as f64 + 0.5) * plot_w / summary.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<title>{title}</title>\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // Y gridlines, ticks, labels.
    for tick in nice_ticks(y_min, y_max) {
        let y = y_scale(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            short_number(tick),
        );
    }

    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{b:.2}\" x2=\"{r}\" y2=\"{b:.2}\" stroke=\"black\"/>",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
        r = MARGIN_LEFT + plot_w,
    );

    // Categorical x labels.
    for (i, row) in summary.iter().enumerate() {
        let x = x_center(i);
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
             font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            MARGIN_TOP + plot_h + 20.0,
            row.buffer_size,
        );
    }

    // Axis titles.
    let _ = writeln!(
        svg,
        "<text x=\"{xx:.2}\" y=\"{xy:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">buffer size</text>\n\
         <text x=\"{yx:.2}\" y=\"{yy:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\" transform=\"rotate(-90 {yx:.2} {yy:.2})\">{y_label}</text>",
        xx = MARGIN_LEFT + plot_w / 2.0,
        xy = HEIGHT - 18.0,
        yx = 18.0,
        yy = MARGIN_TOP + plot_h / 2.0,
    );

    match kind {
        PlotKind::Scatter => {
            for (i, row) in summary.iter().enumerate() {
                let x = x_center(i);
                if let Some(estimate) = row.mean_estimate {
                    let _ = writeln!(
                        svg,
                        "<circle class=\"mean-estimate\" cx=\"{x:.2}\" cy=\"{:.2}\" r=\"5\" \
                         fill=\"{ESTIMATE_COLOR}\"/>",
                        y_scale(estimate),
                    );
                }
                if let Some(truth) = row.mean_true_coverage {
                    let y = y_scale(truth);
                    let _ = writeln!(
                        svg,
                        "<rect class=\"mean-true\" x=\"{:.2}\" y=\"{:.2}\" width=\"9\" \
                         height=\"9\" fill=\"none\" stroke=\"{TRUTH_COLOR}\" \
                         stroke-width=\"2\"/>",
                        x - 4.5,
                        y - 4.5,
                    );
                }
            }
            let legend_x = MARGIN_LEFT + 12.0;
            let _ = writeln!(
                svg,
                "<circle cx=\"{legend_x}\" cy=\"{ly}\" r=\"5\" fill=\"{ESTIMATE_COLOR}\"/>\n\
                 <text x=\"{tx}\" y=\"{ty1}\" font-family=\"sans-serif\" font-size=\"12\"\
                 >mean estimate</text>\n\
                 <rect x=\"{rx:.2}\" y=\"{ry:.2}\" width=\"9\" height=\"9\" fill=\"none\" \
                 stroke=\"{TRUTH_COLOR}\" stroke-width=\"2\"/>\n\
                 <text x=\"{tx}\" y=\"{ty2}\" font-family=\"sans-serif\" font-size=\"12\"\
                 >mean true coverage</text>",
                ly = MARGIN_TOP + 14.0,
                tx = legend_x + 12.0,
                ty1 = MARGIN_TOP + 18.0,
                rx = legend_x - 4.5,
                ry = MARGIN_TOP + 33.5 - 4.5,
                ty2 = MARGIN_TOP + 38.0,
            );
        }
        PlotKind::ErrorBars => {
            // Zero reference line.
            let zero_y = y_scale(0.0);
            let _ = writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{zero_y:.2}\" x2=\"{}\" y2=\"{zero_y:.2}\" \
                 stroke=\"#888888\" stroke-dasharray=\"4 3\"/>",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w,
            );
            for (i, row) in summary.iter().enumerate() {
                let Some(mean) = row.mean_difference else {
                    continue;
                };
                let x = x_center(i);
                let sd = row.sd_difference.unwrap_or(0.0);
                let y_mid = y_scale(mean);
                let y_top = y_scale(mean + sd);
                let y_bot = y_scale(mean - sd);
                let _ = writeln!(
                    svg,
                    "<g class=\"errbar\">\
                     <line x1=\"{x:.2}\" y1=\"{y_top:.2}\" x2=\"{x:.2}\" y2=\"{y_bot:.2}\" \
                     stroke=\"{ESTIMATE_COLOR}\" stroke-width=\"2\"/>\
                     <line x1=\"{x0:.2}\" y1=\"{y_top:.2}\" x2=\"{x1:.2}\" y2=\"{y_top:.2}\" \
                     stroke=\"{ESTIMATE_COLOR}\" stroke-width=\"2\"/>\
                     <line x1=\"{x0:.2}\" y1=\"{y_bot:.2}\" x2=\"{x1:.2}\" y2=\"{y_bot:.2}\" \
                     stroke=\"{ESTIMATE_COLOR}\" stroke-width=\"2\"/>\
                     <circle cx=\"{x:.2}\" cy=\"{y_mid:.2}\" r=\"4\" \
                     fill=\"{ESTIMATE_COLOR}\"/>\
                     </g>",
                    x0 = x - 6.0,
                    x1 = x + 6.0,
                );
            }
        }
    }

    svg.push_str("</svg>");
    svg
}

fn scatter_values(summary: &[SummaryRow]) -> Vec<f64> {
    summary
        .iter()
        .flat_map(|row| [row.mean_estimate, row.mean_true_coverage])
        .flatten()
        .collect()
}

fn error_bar_values(summary: &[SummaryRow]) -> Vec<f64> {
    summary
        .iter()
        .filter_map(|row| {
            let mean = row.mean_difference?;
            let sd = row.sd_difference.unwrap_or(0.0);
            Some([mean - sd, mean + sd])
        })
        .flatten()
        .collect()
}

fn value_range(values: &[f64], kind: PlotKind) -> (f64, f64) {
    let mut min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if kind == PlotKind::ErrorBars {
        // Keep the zero line in frame.
        min = min.min(0.0);
        max = max.max(0.0);
    }
    let pad = ((max - min) * 0.1).max(1e-9);
    (min - pad, max + pad)
}

/// Round ticks at a 1/2/5 step covering the range.
fn nice_ticks(min: f64, max: f64) -> Vec<f64> {
    let span = max - min;
    let raw_step = span / 5.0;
    let magnitude = 10f64.powf(raw_step.abs().log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| s >= raw_step)
        .unwrap_or(magnitude);
    let mut tick = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    while tick <= max + step * 1e-9 {
        // Snap near-zero accumulation error.
        ticks.push(if tick.abs() < step * 1e-9 { 0.0 } else { tick });
        tick += step;
    }
    ticks
}

fn short_number(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{value:.4}");
    let trimmed = formatted.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() || trimmed == "-" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}
