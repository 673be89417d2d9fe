//! SVG figures: a time-series sheet of actuators and states, and the X-Y
//! trajectory with the obstacle line.

use std::path::Path;

use ftvc_core::sim::RunLog;
use plotters::prelude::*;

use crate::error::{Error, Result};

const COLORS: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];
const OBSTACLE: RGBColor = RGBColor(227, 119, 194);

struct Panel {
    title: &'static str,
    /// Series label and samples.
    lines: Vec<(String, Vec<(f64, f64)>)>,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo <= hi) {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9 + 1e-6 * hi.abs().max(lo.abs()));
    (lo - pad, hi + pad)
}

fn plot_err(path: &Path) -> impl Fn(String) -> Error + '_ {
    move |message| Error::Plot { path: path.into(), message }
}

fn draw_panel<DB: DrawingBackend>(area: &DrawingArea<DB, plotters::coord::Shift>, panel: &Panel) -> std::result::Result<(), String> {
    let (x0, x1) = range(panel.lines.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)));
    let (y0, y1) = range(panel.lines.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)));
    let mut chart = ChartBuilder::on(area)
        .caption(panel.title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(28)
        .y_label_area_size(56)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| e.to_string())?;
    chart.configure_mesh().x_desc("t (s)").draw().map_err(|e| e.to_string())?;
    for (i, (label, pts)) in panel.lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(1)))
            .map_err(|e| e.to_string())?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    if panel.lines.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Samples every `stride`-th record so large logs stay light.
fn series(log: &RunLog, f: impl Fn(&ftvc_core::sim::Record) -> f64) -> Vec<(f64, f64)> {
    let stride = (log.records.len() / 2000).max(1);
    log.records.iter().step_by(stride).map(|r| (r.t, f(r))).collect()
}

/// Eight panels: steering, wheel torques, suspension forces, side slip,
/// longitudinal speed, yaw rate against its reference, roll and pitch.
pub fn time_series(log: &RunLog, path: &Path) -> Result<()> {
    let corners = ["fl", "fr", "rl", "rr"];
    let group = |title, offset: usize, scale: f64| Panel {
        title,
        lines: (0..4)
            .map(|c| (corners[c].to_string(), series(log, |r| r.commanded.0[offset + c] * scale)))
            .collect(),
    };
    let single = |title, label: &str, f: &dyn Fn(&ftvc_core::sim::Record) -> f64| Panel {
        title,
        lines: vec![(label.to_string(), series(log, f))],
    };
    let deg = 180.0 / std::f64::consts::PI;
    let panels = [
        group("steering (deg)", 0, deg),
        group("wheel torque (N m)", 4, 1.0),
        group("suspension force (N)", 8, 1.0),
        single("side slip (deg)", "beta", &|r| r.side_slip * deg),
        single("longitudinal speed (m/s)", "Vx", &|r| r.state.vx),
        Panel {
            title: "yaw rate (rad/s)",
            lines: vec![
                ("r".into(), series(log, |r| r.state.yaw_rate)),
                ("r_ref".into(), series(log, |r| r.yaw_rate_ref)),
            ],
        },
        single("roll (deg)", "phi", &|r| r.state.roll * deg),
        single("pitch (deg)", "theta", &|r| r.state.pitch * deg),
    ];
    let root = SVGBackend::new(path, (1200, 1400)).into_drawing_area();
    let err = plot_err(path);
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    for (area, panel) in root.split_evenly((4, 2)).iter().zip(&panels) {
        draw_panel(area, panel).map_err(&err)?;
    }
    root.present().map_err(|e| err(e.to_string()))
}

/// X-Y paths of one or more labelled runs, with the obstacle drawn as a
/// dash-dotted line at `x = obstacle_x`.
pub fn trajectory(runs: &[(&str, &RunLog)], obstacle_x: f64, path: &Path) -> Result<()> {
    let paths: Vec<(&str, Vec<(f64, f64)>)> = runs
        .iter()
        .map(|(label, log)| {
            let stride = (log.records.len() / 4000).max(1);
            (*label, log.records.iter().step_by(stride).map(|r| (r.state.x, r.state.y)).collect())
        })
        .collect();
    let (x0, x1) = range(paths.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).chain([obstacle_x]));
    let (y0, y1) = range(paths.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let err = plot_err(path);
    let root = SVGBackend::new(path, (1000, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("trajectory", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(32)
        .y_label_area_size(56)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(e.to_string()))?;
    chart.configure_mesh().x_desc("X (m)").y_desc("Y (m)").draw().map_err(|e| err(e.to_string()))?;
    for (i, (label, pts)) in paths.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(e.to_string()))?
            .label(*label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    // Dash-dot pattern along the obstacle line: long dash, gap, dot, gap.
    let span = y1 - y0;
    let pattern = [0.06, 0.03, 0.01, 0.03];
    let mut y = y0;
    let mut k = 0;
    let mut dashes = Vec::new();
    while y < y1 {
        let len = pattern[k % 4] * span;
        if k % 2 == 0 {
            dashes.push(vec![(obstacle_x, y), (obstacle_x, (y + len).min(y1))]);
        }
        y += len;
        k += 1;
    }
    chart
        .draw_series(dashes.into_iter().map(|seg| PathElement::new(seg, OBSTACLE.stroke_width(2))))
        .map_err(|e| err(e.to_string()))?
        .label("obstacle")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], OBSTACLE));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(e.to_string()))?;
    root.present().map_err(|e| err(e.to_string()))
}
