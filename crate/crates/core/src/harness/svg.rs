//! Minimal hand-written SVG output.

use std::fmt::Write as _;

use crate::field::{Cell, FieldRaster};

use super::record::RunRecord;
use super::sweep::Band;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of band means with shaded min/max envelopes.
pub fn band_plot(bands: &[Band], xlabel: &str, ylabel: &str) -> String {
    let (w, h, pad) = (720.0, 420.0, 56.0);
    let len = bands.iter().map(|b| b.mean.len()).max().unwrap_or(0).max(2);
    let ymax =
        bands.iter().flat_map(|b| b.max.iter().copied()).filter(|v| v.is_finite()).fold(0.0_f64, f64::max).max(1e-12);
    let ymin = bands.iter().flat_map(|b| b.min.iter().copied()).filter(|v| v.is_finite()).fold(0.0_f64, f64::min);
    let x = |n: usize| pad + (w - 2.0 * pad) * n as f64 / (len - 1) as f64;
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - ymin) / (ymax - ymin);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{pad},{pad} V{} H{}" fill="none" stroke="black"/>"#, h - pad, w - pad);
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{xlabel}</text>"#, w / 2.0, h - 14.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{ylabel}</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{ymax:.3}</text>"#, pad - 4.0, pad + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{ymin:.3}</text>"#, pad - 4.0, h - pad);
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{len}</text>"#, w - pad, h - pad + 16.0);

    for (k, b) in bands.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if b.mean.is_empty() {
            continue;
        }
        let mut area = String::new();
        for (n, v) in b.max.iter().enumerate() {
            let _ = write!(area, "{}{:.2},{:.2} ", if n == 0 { "M" } else { "L" }, x(n), y(*v));
        }
        for (n, v) in b.min.iter().enumerate().rev() {
            let _ = write!(area, "L{:.2},{:.2} ", x(n), y(*v));
        }
        let _ = writeln!(s, r#"<path d="{area}Z" fill="{color}" fill-opacity="0.18" stroke="none"/>"#);
        let mut line = String::new();
        for (n, v) in b.mean.iter().enumerate() {
            let _ = write!(line, "{}{:.2},{:.2} ", if n == 0 { "M" } else { "L" }, x(n), y(*v));
        }
        let _ = writeln!(s, r#"<path d="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
            w - pad - 120.0,
            pad + 16.0 * (k as f64 + 1.0),
            b.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Field heat map with flags, robots and their covering discs.
pub fn final_configuration(field: &FieldRaster, record: &RunRecord, delta: f64) -> String {
    let g = field.grid();
    let px = (640.0 / g as f64).max(4.0);
    let side = px * g as f64;
    let vmax = field.values().iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" viewBox="0 0 {side} {side}">"#
    );
    // y grows upward in the world, downward in SVG
    let top = |c: Cell| (g - 1 - c.y) as f64 * px;
    for k in 0..g * g {
        let c = Cell::from_index(k, g);
        let t = (field.values()[k] / vmax).clamp(0.0, 1.0);
        let shade = (255.0 * (1.0 - t)).round() as u8;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{px:.2}" height="{px:.2}" fill="rgb(255,{shade},{shade})"/>"#,
            c.x as f64 * px,
            top(c)
        );
    }
    for (i, flags) in record.flags.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &c in flags {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{color}" fill-opacity="0.35"/>"#,
                (c.x as f64 + 0.5) * px,
                top(c) + 0.5 * px,
                0.15 * px
            );
        }
    }
    for (i, &c) in record.final_positions().iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let (cx, cy) = ((c.x as f64 + 0.5) * px, top(c) + 0.5 * px);
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            (delta + 0.5) * px
        );
        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="{color}"/>"#, 0.4 * px);
    }
    s.push_str("</svg>\n");
    s
}
