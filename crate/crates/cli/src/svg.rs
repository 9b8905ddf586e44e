//! Minimal line-chart writer.
//!
//! Plots are rendered from CSV text only, with fixed-precision coordinates,
//! so re-rendering an artifact's CSV reproduces its SVG byte for byte.

use std::fmt::Write as _;

use hybrid_qsd::io::parse_csv;
use hybrid_qsd::Result;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 36.0;
const MAX_POINTS: usize = 600;
const PALETTE: [&str; 8] = [
    "#d62728", "#2ca02c", "#000000", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#17becf",
];

struct Series {
    label: String,
    values: Vec<f64>,
}

struct Panel {
    title: String,
    times: Vec<f64>,
    series: Vec<Series>,
}

/// Magnitudes `|re + i·im|` of every `re_X, im_X` column pair.
fn magnitudes(csv: &str, keep: impl Fn(&str) -> bool) -> Result<(Vec<f64>, Vec<Series>)> {
    let table = parse_csv(csv)?;
    let times = table.column("t").unwrap_or_default();
    let mut series = Vec::new();
    for name in &table.header {
        let Some(stem) = name.strip_prefix("re_") else { continue };
        if !keep(stem) {
            continue;
        }
        let (Some(re), Some(im)) = (table.column(name), table.column(&format!("im_{stem}"))) else {
            continue;
        };
        series.push(Series {
            label: format!("|{stem}|"),
            values: re.iter().zip(&im).map(|(a, b)| a.hypot(*b)).collect(),
        });
    }
    Ok((times, series))
}

/// Density-matrix panel: diagonal and upper-triangle elements only.
fn upper_triangle(stem: &str) -> bool {
    let mut idx = stem.trim_start_matches("rho_").split('_').filter_map(|s| s.parse::<usize>().ok());
    matches!((idx.next(), idx.next()), (Some(i), Some(j)) if i <= j)
}

/// Two stacked panels: `|ρ_ij(t)|` and `|coefficient(t)|`.
pub fn render(trajectory_csv: &str, coefficients_csv: &str) -> Result<String> {
    let (t1, s1) = magnitudes(trajectory_csv, upper_triangle)?;
    let (t2, s2) = magnitudes(coefficients_csv, |_| true)?;
    let panels = [
        Panel {
            title: "density matrix".into(),
            times: t1,
            series: s1,
        },
        Panel {
            title: "coefficients".into(),
            times: t2,
            series: s2,
        },
    ];
    let height = panels.len() as f64 * PANEL_HEIGHT;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, k as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn draw_panel(out: &mut String, p: &Panel, y0: f64) {
    let x_lo = MARGIN_LEFT;
    let x_hi = WIDTH - MARGIN_RIGHT;
    let y_lo = y0 + PANEL_HEIGHT - MARGIN_BOTTOM;
    let y_hi = y0 + MARGIN_TOP;

    let t_min = p.times.first().copied().unwrap_or(0.0);
    let t_max = p.times.last().copied().unwrap_or(1.0);
    let t_span = if t_max > t_min { t_max - t_min } else { 1.0 };
    let v_max = p
        .series
        .iter()
        .flat_map(|s| s.values.iter())
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let v_max = if v_max > 0.0 { v_max * 1.05 } else { 1.0 };
    let sx = |t: f64| x_lo + (t - t_min) / t_span * (x_hi - x_lo);
    let sy = |v: f64| y_lo - v / v_max * (y_lo - y_hi);

    let _ = writeln!(out, r#"<g>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-weight="bold">{}</text>"#,
        x_lo,
        y_hi - 10.0,
        p.title
    );
    let _ = writeln!(
        out,
        r#"<path d="M{x_lo:.2},{y_hi:.2} L{x_lo:.2},{y_lo:.2} L{x_hi:.2},{y_lo:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (tx, vy) = (t_min + f * t_span, f * v_max);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(tx),
            y_lo + 16.0,
            tick(tx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x_lo - 6.0,
            sy(vy) + 4.0,
            tick(vy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        0.5 * (x_lo + x_hi),
        y_lo + 30.0
    );

    let n = p.times.len();
    let stride = n.div_ceil(MAX_POINTS).max(1);
    for (k, s) in p.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        if n > 0 && idx.last() != Some(&(n - 1)) {
            idx.push(n - 1);
        }
        for i in idx {
            let v = s.values[i];
            if !v.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(d, "{cmd}{:.2},{:.2} ", sx(p.times[i]), sy(v));
            pen_down = true;
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let ly = y_hi + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<path d="M{:.2},{ly:.2} L{:.2},{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x_hi + 12.0,
            x_hi + 32.0,
            x_hi + 38.0,
            ly + 4.0,
            s.label
        );
    }
    let _ = writeln!(out, "</g>");
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}
