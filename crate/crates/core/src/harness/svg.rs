use std::fmt::Write;

use super::fit::DecayFit;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Static log-log plot of mean error against `ρ`, one polyline per group.
pub fn decay_plot(fits: &[DecayFit]) -> String {
    let pts: Vec<(f64, f64)> = fits
        .iter()
        .flat_map(|f| f.points.iter().map(|&(rho, e)| ((rho as f64).log2(), e.log2())))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">log2 rho</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">log2 err</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, fit) in fits.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let line: Vec<String> = fit
            .points
            .iter()
            .map(|&(rho, e)| ((rho as f64).log2(), e.log2()))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="2"/>"#,
            line.join(" ")
        );
        let slope = fit.slope.map(|s| format!("{s:.2}")).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{} r={} eta={} slope {slope}</text>"#,
            WIDTH - MARGIN - 200.0,
            MARGIN + 16.0 * i as f64,
            fit.scheme,
            fit.r,
            fit.eta
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
