//! Static SVG scatter plot of a 2-D embedding.

use std::collections::BTreeSet;
use std::fmt::Write;

use npcluster_core::{EmbeddingMatrix, LabelVector};

use crate::error::{CliError, Result};

/// Categorical palette (Tableau 20); labels cycle through it.
pub const PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

const PLOT_SIZE: f64 = 600.0;
const LEGEND_WIDTH: f64 = 140.0;
const MARGIN: f64 = 0.05;
const UNLABELLED: &str = "#4c72b0";

/// Renders one circle per point; the inner plot's viewBox is the data
/// bounding box grown by 5% on every side, with y pointing up.
pub fn render_svg(y: &EmbeddingMatrix, labels: Option<&LabelVector>) -> Result<String> {
    if y.p() != 2 {
        return Err(CliError::precondition(format!("plot requires p=2, the embedding has p={}", y.p())));
    }
    if let Some(l) = labels {
        if l.len() != y.n() {
            return Err(CliError::precondition(format!(
                "label count {} does not match the {} embedded points",
                l.len(),
                y.n()
            )));
        }
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in y.rows() {
        x0 = x0.min(r[0]);
        x1 = x1.max(r[0]);
        y0 = y0.min(r[1]);
        y1 = y1.max(r[1]);
    }
    let span = (x1 - x0).max(y1 - y0);
    let (w, h) = (if x1 > x0 { x1 - x0 } else { span.max(1.0) }, if y1 > y0 { y1 - y0 } else { span.max(1.0) });
    let (mx, my) = (MARGIN * w, MARGIN * h);
    let (vx, vy, vw, vh) = (x0 - mx, -(y1 + my), w + 2.0 * mx, h + 2.0 * my);
    let radius = 0.004 * vw.max(vh);

    let classes: Vec<u32> =
        labels.map(|l| l.as_slice().iter().copied().collect::<BTreeSet<_>>().into_iter().collect()).unwrap_or_default();
    let color = |label: u32| {
        let pos = classes.binary_search(&label).unwrap_or(0);
        PALETTE[pos % PALETTE.len()]
    };

    let total_w = PLOT_SIZE + if classes.is_empty() { 0.0 } else { LEGEND_WIDTH };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{PLOT_SIZE}" viewBox="0 0 {total_w} {PLOT_SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{total_w}" height="{PLOT_SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<svg x="0" y="0" width="{PLOT_SIZE}" height="{PLOT_SIZE}" viewBox="{vx:.6} {vy:.6} {vw:.6} {vh:.6}" preserveAspectRatio="none">"#
    );
    for (i, r) in y.rows().enumerate() {
        let fill = labels.map_or(UNLABELLED, |l| color(l[i]));
        let _ = writeln!(
            s,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{radius:.6}" fill="{fill}" fill-opacity="0.8"/>"#,
            r[0], -r[1]
        );
    }
    s.push_str("</svg>\n");
    if !classes.is_empty() {
        let _ = writeln!(s, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
        for (row, &c) in classes.iter().enumerate() {
            let top = 20.0 + 18.0 * row as f64;
            let _ = writeln!(
                s,
                r#"<g class="legend-entry"><rect x="{}" y="{top}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{c}</text></g>"#,
                PLOT_SIZE + 10.0,
                PALETTE[row % PALETTE.len()],
                PLOT_SIZE + 28.0,
                top + 10.0
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
