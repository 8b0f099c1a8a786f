use std::fmt::Write as _;
use std::path::Path;

use crate::aero::SolveOutcome;
use crate::geometry::Airfoil;
use crate::nn::Tensor;
use crate::{Error, Result};

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// Scatter of 2-D points coloured by label, with a colour-bar legend.
pub fn scatter_svg(points: &Tensor, labels: &[f64]) -> Result<String> {
    let n = points.rows();
    if n == 0 || points.cols() != 2 || labels.len() != n {
        return Err(Error::InvalidParameter(format!(
            "scatter needs N x 2 points and N labels, got {:?} and {}",
            points.shape(),
            labels.len()
        )));
    }
    let (w, h, m, legend) = (640.0, 480.0, 40.0, 120.0);
    let (x0, x1) = bounds((0..n).map(|i| points.get(i, 0)));
    let (y0, y1) = bounds((0..n).map(|i| points.get(i, 1)));
    let (l0, l1) = bounds(labels.iter().copied());
    let plot_w = w - 2.0 * m - legend;
    let plot_h = h - 2.0 * m;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..n {
        let cx = m + (points.get(i, 0) - x0) / (x1 - x0) * plot_w;
        let cy = h - m - (points.get(i, 1) - y0) / (y1 - y0) * plot_h;
        let _ = writeln!(
            s,
            r#"<circle class="marker" cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{}"/>"#,
            colour((labels[i] - l0) / (l1 - l0))
        );
    }
    let lx = w - legend + 10.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    let _ = writeln!(s, r#"<text x="{lx}" y="{}" font-size="12">C_L</text>"#, m - 10.0);
    let steps = 20;
    let bar_h = plot_h / steps as f64;
    for k in 0..steps {
        let t = 1.0 - k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            m + k as f64 * bar_h,
            bar_h + 0.5,
            colour(t)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{l1:.3}</text>"#, lx + 22.0, m + 10.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{l0:.3}</text>"#, lx + 22.0, h - m);
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

/// Grid of airfoil outlines, blue when the solver converged and red
/// otherwise.
pub fn airfoil_grid_svg(shapes: &[Airfoil], outcomes: &[SolveOutcome]) -> Result<String> {
    if shapes.is_empty() || shapes.len() != outcomes.len() {
        return Err(Error::InvalidParameter(format!(
            "airfoil grid needs matching non-empty inputs, got {} shapes and {} outcomes",
            shapes.len(),
            outcomes.len()
        )));
    }
    let cols = (shapes.len() as f64).sqrt().ceil() as usize;
    let rows = shapes.len().div_ceil(cols);
    let (cell_w, cell_h) = (160.0, 80.0);
    let (w, h) = (cols as f64 * cell_w, rows as f64 * cell_h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (k, (shape, outcome)) in shapes.iter().zip(outcomes).enumerate() {
        let (ox, oy) = ((k % cols) as f64 * cell_w, (k / cols) as f64 * cell_h);
        let pts = shape.points();
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let scale = ((cell_w - 20.0) / (x1 - x0)).min((cell_h - 20.0) / (y1 - y0));
        let (mx, my) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let px = ox + 0.5 * cell_w + (x - mx) * scale;
            let py = oy + 0.5 * cell_h - (y - my) * scale;
            let _ = write!(d, "{}{px:.2},{py:.2}", if i == 0 { "M" } else { " L" });
        }
        d.push_str(" Z");
        let stroke = if outcome.is_converged() { "blue" } else { "red" };
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="1"/>"#);
        if let Some(l) = shape.label() {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="10">{l:.2}</text>"#,
                ox + 4.0,
                oy + 12.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_scatter_svg(points: &Tensor, labels: &[f64], path: &Path) -> Result<()> {
    let svg = scatter_svg(points, labels)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

pub fn emit_airfoil_grid_svg(shapes: &[Airfoil], outcomes: &[SolveOutcome], path: &Path) -> Result<()> {
    let svg = airfoil_grid_svg(shapes, outcomes)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
