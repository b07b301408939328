//! Curve post-processing: merging the two stage curves onto one step axis
//! and rendering simple SVG line plots (no plotting dependency).

use std::fs;
use std::path::Path;

use crate::ppo::LearningCurve;

use super::PipelineError;

/// One learning-curve row as stored in the curve CSV files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub env_steps: u64,
    pub mean_return: f64,
    pub normalized_return: f64,
    pub episodes: u64,
    pub approx_kl: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

pub fn curve_rows(curve: &LearningCurve) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|p| CurveRow {
            env_steps: p.env_steps,
            mean_return: p.mean_return,
            normalized_return: p.normalized_return,
            episodes: p.episodes,
            approx_kl: p.approx_kl,
            policy_loss: p.policy_loss,
            value_loss: p.value_loss,
        })
        .collect()
}

/// Read back a CSV written by `LearningCurve::save_csv`.
pub fn load_curve_csv(path: &Path) -> Result<Vec<CurveRow>, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::runtime(&format!("curve: read {}", path.display()), e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "env_steps,mean_return,normalized_return,episodes,approx_kl,policy_loss,value_loss" {
        return Err(PipelineError::Runtime(format!(
            "curve {}: unexpected header `{header}`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(PipelineError::Runtime(format!(
                "curve {}: line {}: expected 7 fields, got {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let err = |what: &str| {
            PipelineError::Runtime(format!(
                "curve {}: line {}: bad {what}",
                path.display(),
                i + 2
            ))
        };
        rows.push(CurveRow {
            env_steps: fields[0].parse().map_err(|_| err("env_steps"))?,
            mean_return: fields[1].parse().map_err(|_| err("mean_return"))?,
            normalized_return: fields[2].parse().map_err(|_| err("normalized_return"))?,
            episodes: fields[3].parse().map_err(|_| err("episodes"))?,
            approx_kl: fields[4].parse().map_err(|_| err("approx_kl"))?,
            policy_loss: fields[5].parse().map_err(|_| err("policy_loss"))?,
            value_loss: fields[6].parse().map_err(|_| err("value_loss"))?,
        });
    }
    Ok(rows)
}

/// A stage-labelled row on the shared (concatenated) step axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedRow {
    pub stage: String,
    /// Steps within the stage's own run.
    pub stage_env_steps: u64,
    /// Steps on the shared axis: stage 2 starts where stage 1's budget ends.
    pub total_env_steps: u64,
    pub mean_return: f64,
    /// Normalized against the stage's *own* environment maximum.
    pub normalized_return: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergedCurve {
    pub rows: Vec<MergedRow>,
}

impl MergedCurve {
    pub fn write_csv(&self, path: &Path) -> Result<(), PipelineError> {
        let mut out =
            String::from("stage,stage_env_steps,total_env_steps,mean_return,normalized_return\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.stage, r.stage_env_steps, r.total_env_steps, r.mean_return, r.normalized_return
            ));
        }
        fs::write(path, out).map_err(|e| PipelineError::runtime("merged curve: write", e))
    }
}

/// Concatenate the planning and imitation curves on a shared step axis. Each
/// stage keeps its own normalization; the imitation axis is offset by the
/// planning budget.
pub fn merge_two_stage(
    plan: &[CurveRow],
    imitation: &[CurveRow],
    planning_budget: u64,
) -> MergedCurve {
    let mut rows = Vec::with_capacity(plan.len() + imitation.len());
    for r in plan {
        rows.push(MergedRow {
            stage: "planning".to_string(),
            stage_env_steps: r.env_steps,
            total_env_steps: r.env_steps,
            mean_return: r.mean_return,
            normalized_return: r.normalized_return,
        });
    }
    for r in imitation {
        rows.push(MergedRow {
            stage: "imitation".to_string(),
            stage_env_steps: r.env_steps,
            total_env_steps: planning_budget + r.env_steps,
            mean_return: r.mean_return,
            normalized_return: r.normalized_return,
        });
    }
    MergedCurve { rows }
}

/// One polyline on the plot.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgSeries {
    pub label: String,
    /// Any SVG color string.
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

const PLOT_W: f64 = 860.0;
const PLOT_H: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 52.0;

/// Render line series into a self-contained SVG file. Output is a pure
/// function of the inputs, so identical runs plot byte-identically.
pub fn write_curves_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[SvgSeries],
) -> Result<(), PipelineError> {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let x_max = xs.fold(0.0_f64, f64::max);
    let (mut y_min, mut y_max) = ys.fold((0.0_f64, 0.0_f64), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if y_max - y_min < 1e-9 {
        y_max = y_min + 1.0;
    }
    // A little headroom so curves do not hug the frame.
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    let x_span = x_max.max(1e-9);
    let inner_w = PLOT_W - MARGIN_L - MARGIN_R;
    let inner_h = PLOT_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + x / x_span * inner_w;
    let py = |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * inner_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        PLOT_W / 2.0,
        xml_escape(title)
    ));

    // Horizontal gridlines with y tick labels.
    for i in 0..=4 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let yy = py(y);
        out.push_str(&format!(
            "<line x1=\"{MARGIN_L:.1}\" y1=\"{yy:.1}\" x2=\"{:.1}\" y2=\"{yy:.1}\" \
             stroke=\"#ddd\"/>\n",
            PLOT_W - MARGIN_R
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{y:.2}</text>\n",
            MARGIN_L - 8.0,
            yy + 4.0
        ));
    }
    // X tick labels.
    for i in 0..=4 {
        let x = x_span * i as f64 / 4.0;
        let xx = px(x);
        out.push_str(&format!(
            "<text x=\"{xx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>\n",
            PLOT_H - MARGIN_B + 20.0,
            x
        ));
    }
    // Frame and axis labels.
    out.push_str(&format!(
        "<rect x=\"{MARGIN_L:.1}\" y=\"{MARGIN_T:.1}\" width=\"{inner_w:.1}\" \
         height=\"{inner_h:.1}\" fill=\"none\" stroke=\"#333\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + inner_w / 2.0,
        PLOT_H - 12.0,
        xml_escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MARGIN_T + inner_h / 2.0,
        MARGIN_T + inner_h / 2.0,
        xml_escape(y_label)
    ));

    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
            s.color,
            pts.join(" ")
        ));
        // Legend swatches stacked top-right.
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"3\"/>\n",
            PLOT_W - MARGIN_R - 150.0,
            PLOT_W - MARGIN_R - 122.0,
            s.color
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            PLOT_W - MARGIN_R - 114.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    fs::write(path, out).map_err(|e| PipelineError::runtime("svg: write", e))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
