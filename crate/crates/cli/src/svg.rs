//! Self-contained SVG heatmap with a linear color bar.

use std::fmt::Write;

use crate::output::fmt_f64;

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    /// A single placeholder entry for 1-D sweeps.
    pub ys: &'a [f64],
    /// Row-major with `x` varying fastest.
    pub values: &'a [f64],
}

// Viridis control points.
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

fn color(t: f64) -> String {
    if !t.is_finite() {
        return "#bbbbbb".into();
    }
    let t = t.clamp(0.0, 1.0);
    let k = STOPS.windows(2).position(|w| t <= w[1].0).unwrap_or(STOPS.len() - 2);
    let ((t0, c0), (t1, c1)) = (STOPS[k], STOPS[k + 1]);
    let f = (t - t0) / (t1 - t0);
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]))
}

fn short(x: f64) -> String {
    if x.is_finite() && x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) {
        format!("{x:.3e}")
    } else if x.is_finite() {
        let s = format!("{x:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    } else {
        fmt_f64(x)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        assert_eq!(nx * ny, self.values.len(), "grid shape mismatch");
        let (left, top, plot_w, plot_h) = (80.0, 40.0, 480.0, if ny > 1 { 360.0 } else { 60.0 });
        let (bar_x, bar_w) = (left + plot_w + 30.0, 18.0);
        let width = bar_x + bar_w + 90.0;
        let height = top + plot_h + 60.0;

        let finite: Vec<f64> = self.values.iter().copied().filter(|v| v.is_finite()).collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + plot_w / 2.0, escape(self.title));

        let (cw, ch) = (plot_w / nx as f64, plot_h / ny as f64);
        for j in 0..ny {
            for i in 0..nx {
                let v = self.values[j * nx + i];
                let t = if hi > lo { (v - lo) / span } else { 0.5 };
                // y grows upward.
                let y = top + plot_h - (j + 1) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}" shape-rendering="crispEdges"/>"#,
                    left + i as f64 * cw,
                    y,
                    cw + 0.01,
                    ch + 0.01,
                    color(if v.is_finite() { t } else { f64::NAN })
                );
            }
        }
        let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

        let x_ticks = [0, nx / 2, nx - 1];
        for &i in x_ticks.iter() {
            let x = left + (i as f64 + 0.5) * cw;
            let _ = writeln!(s, r#"<line x1="{x:.3}" y1="{}" x2="{x:.3}" y2="{}" stroke="black"/>"#, top + plot_h, top + plot_h + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.3}" y="{}" text-anchor="middle">{}</text>"#, top + plot_h + 18.0, short(self.xs[i]));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + plot_w / 2.0, top + plot_h + 40.0, escape(self.x_label));
        if ny > 1 {
            for &j in [0, ny / 2, ny - 1].iter() {
                let y = top + plot_h - (j as f64 + 0.5) * ch;
                let _ = writeln!(s, r#"<line x1="{}" y1="{y:.3}" x2="{left}" y2="{y:.3}" stroke="black"/>"#, left - 5.0);
                let _ = writeln!(s, r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#, left - 8.0, y + 4.0, short(self.ys[j]));
            }
            let (yx, yy) = (20.0, top + plot_h / 2.0);
            let _ = writeln!(s, r#"<text x="{yx}" y="{yy}" text-anchor="middle" transform="rotate(-90 {yx} {yy})">{}</text>"#, escape(self.y_label));
        }

        let steps = 64;
        for k in 0..steps {
            let t = k as f64 / (steps - 1) as f64;
            let y = top + plot_h - (k + 1) as f64 * plot_h / steps as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{bar_x}" y="{y:.3}" width="{bar_w}" height="{:.3}" fill="{}" shape-rendering="crispEdges"/>"#,
                plot_h / steps as f64 + 0.01,
                color(t)
            );
        }
        let _ = writeln!(s, r#"<rect x="{bar_x}" y="{top}" width="{bar_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
        let (min_label, max_label) = if finite.is_empty() { ("n/a".to_string(), "n/a".to_string()) } else { (short(lo), short(hi)) };
        let _ = writeln!(s, r#"<text x="{}" y="{}">max {max_label}</text>"#, bar_x + bar_w + 6.0, top + 10.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">min {min_label}</text>"#, bar_x + bar_w + 6.0, top + plot_h);
        s.push_str("</svg>\n");
        s
    }
}
