//! Static SVG plots of rate regions, axes in bits.

use std::fmt::Write as _;

use superpos::geom::Region2D;

const SIZE: f64 = 520.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn tick_step(extent: f64) -> f64 {
    [0.1, 0.2, 0.25, 0.5, 1.0, 2.0].into_iter().find(|s| extent / s <= 8.0).unwrap_or(5.0)
}

/// One filled outline per part, overlaid, with a legend.
pub fn render(title: &str, regions: &[(&str, &Region2D)]) -> String {
    let reach = regions.iter().flat_map(|(_, r)| r.vertices()).fold(0.0_f64, |m, v| m.max(v.0).max(v.1));
    let reach = reach.max(1.0) * 1.05;
    let step = tick_step(reach);
    let extent = (reach / step).ceil() * step;
    let plot = SIZE - 2.0 * MARGIN;
    let sx = |r1: f64| MARGIN + r1 / extent * plot;
    let sy = |r2: f64| SIZE - MARGIN - r2 / extent * plot;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#, SIZE / 2.0, escape(title));

    for (k, (name, region)) in regions.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g id="region-{k}" fill="{color}" fill-opacity="0.2" stroke="{color}" stroke-width="2">"#);
        let _ = writeln!(s, "<title>{}</title>", escape(name));
        for part in region.parts() {
            let pts: Vec<String> = part.vertices().iter().map(|v| format!("{:.3},{:.3}", sx(v.0), sy(v.1))).collect();
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" "));
        }
        s.push_str("</g>\n");
    }

    // axes and ticks
    let (x0, y0) = (sx(0.0), sy(0.0));
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{:.3}" y2="{y0:.3}"/>"#, sx(extent));
    let _ = writeln!(s, r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x0:.3}" y2="{:.3}"/>"#, sy(extent));
    let ticks = (extent / step).round() as usize;
    for i in 0..=ticks {
        let t = i as f64 * step;
        let _ = writeln!(s, r#"<line x1="{:.3}" y1="{y0:.3}" x2="{:.3}" y2="{:.3}"/>"#, sx(t), sx(t), y0 + 5.0);
        let _ = writeln!(s, r#"<line x1="{x0:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, sy(t), x0 - 5.0, sy(t));
    }
    s.push_str("</g>\n");
    for i in 0..=ticks {
        let t = i as f64 * step;
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{t:.2}</text>"#, sx(t), y0 + 20.0);
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{t:.2}</text>"#, x0 - 8.0, sy(t) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">R1 (bits)</text>"#, SIZE / 2.0, SIZE - 18.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.3}" text-anchor="middle" transform="rotate(-90 18 {:.3})">R2 (bits)</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );

    for (k, (name, _)) in regions.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let y = MARGIN + 4.0 + 18.0 * k as f64;
        let x = SIZE - MARGIN - 150.0;
        let _ = writeln!(s, r#"<rect x="{x:.3}" y="{:.3}" width="12" height="12" fill="{color}" fill-opacity="0.5" stroke="{color}"/>"#, y - 10.0);
        let _ = writeln!(s, r#"<text x="{:.3}" y="{y:.3}">{}</text>"#, x + 18.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
