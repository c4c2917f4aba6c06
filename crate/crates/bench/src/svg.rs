//! Deterministic SVG figures: fixed canvas, fixed palette, elements in input order and
//! coordinates printed with two decimals, so equal inputs give byte-identical documents.

use std::fmt::Write;

use sir_core::mapping::SpectrumMap;
use sir_core::rf_env::{MappingDataset, PuNode};

use crate::error::{BenchError, Result};
use crate::result::BenchResult;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per method over the numeric sweep values, with a legend entry each.
/// Sweeps spanning a factor of 8 or more of positive values use a log2 axis.
pub fn render_line_plot(result: &BenchResult, title: &str) -> Result<String> {
    let points: Vec<(f64, &str, f64)> = result
        .rows
        .iter()
        .filter_map(|r| Some((r.sweep_value()?, r.method.as_str(), r.value?)))
        .collect();
    if points.is_empty() {
        return Err(BenchError::Render("no numeric points to plot".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let (xmin, xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let log_x = xmin > 0.0 && xmax / xmin >= 8.0;
    let tx = |x: f64| if log_x { x.log2() } else { x };
    let (lo, hi) = (tx(xmin), tx(xmax));
    let span_x = if hi > lo { hi - lo } else { 1.0 };
    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (mut ymin, mut ymax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if ymin >= 0.0 && ymax <= 1.0 {
        (ymin, ymax) = (0.0, 1.0);
    } else if ymax <= ymin {
        (ymin, ymax) = (ymin - 1.0, ymax + 1.0);
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (tx(x) - lo) / span_x * plot_w;
    let py = |y: f64| TOP + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let mut ticks: Vec<f64> = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in &ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            px(*t),
            TOP + plot_h + 16.0,
            t
        );
    }
    for i in 0..=4 {
        let y = ymin + (ymax - ymin) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.2}</text>"#,
            LEFT - 6.0,
            py(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&result.sweep_name)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&result.metric_name)
    );
    for (i, method) in result.methods().into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .filter(|p| p.1 == method)
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.2)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-method="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(method),
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(method)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Map of the area: sensing locations (coloured by their true busy channels), true PU
/// disks as solid circles and estimated coverage as dashed circles.
pub fn render_map(map: &SpectrumMap, truth: &[PuNode], dataset: Option<&MappingDataset>) -> Result<String> {
    let (w, h) = map.area_km;
    if !(w > 0.0 && h > 0.0) {
        return Err(BenchError::Render("map area must be positive".into()));
    }
    let scale = 480.0 / w.max(h);
    let pad = 20.0;
    let cw = w * scale + 2.0 * pad;
    let ch = h * scale + 2.0 * pad;
    let px = |x: f64| pad + x * scale;
    let py = |y: f64| pad + (h - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{cw:.2}" height="{ch:.2}" viewBox="0 0 {cw:.2} {ch:.2}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{cw:.2}" height="{ch:.2}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{pad:.2}" y="{pad:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        w * scale,
        h * scale
    );
    if let Some(ds) = dataset {
        let _ = writeln!(s, r#"<g class="samples">"#);
        for (sample, bits) in ds.samples() {
            let color = bits.iter().position(|&b| b).map_or("#bbbbbb", |c| PALETTE[c % PALETTE.len()]);
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{color}"/>"#,
                px(sample.location.x),
                py(sample.location.y)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    for pu in truth {
        let color = PALETTE[pu.channel % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<circle class="truth" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            px(pu.position.0),
            py(pu.position.1),
            pu.coverage_radius * scale
        );
    }
    for c in &map.circles {
        let _ = writeln!(
            s,
            r#"<circle class="estimate" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="blue" stroke-width="2" stroke-dasharray="8 5"/>"#,
            px(c.center[0]),
            py(c.center[1]),
            c.radius * scale
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
