//! Minimal self-rendered SVG charts.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.to_string(),
            points: points.into_iter().filter(|(x, y)| x.is_finite() && y.is_finite()).collect(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

/// Round tick spacing covering `[lo, hi]` with about `n` intervals.
fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (lo.abs() + hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Line chart of one or more series sharing the axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (mut y0, mut y1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;
    let mut out = String::new();
    header(&mut out, title);
    for t in ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{TOP}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#e0e0e0\"/>\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            TOP + ph,
            TOP + ph + 16.0,
            label(t)
        );
    }
    for t in ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#e0e0e0\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
        LEFT + pw / 2.0,
        H - 14.0,
        escape(x_label),
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>",
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Polar cut: each series holds `(θ in radians, value in dB)`, clipped at `floor`.
pub fn polar_chart(title: &str, series: &[Series], floor: f64) -> String {
    let top = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold(f64::NEG_INFINITY, f64::max);
    let top = if top.is_finite() { (top / 5.0).ceil() * 5.0 } else { 0.0 };
    let (cx, cy) = ((W - RIGHT) / 2.0 + 20.0, H / 2.0 + 12.0);
    let r_max = H / 2.0 - 50.0;
    let radius = |db: f64| ((db.max(floor) - floor) / (top - floor).max(1e-9)) * r_max;
    let mut out = String::new();
    header(&mut out, title);
    let mut db = floor;
    while db <= top + 1e-9 {
        let r = radius(db);
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{r:.1}\" fill=\"none\" stroke=\"#d0d0d0\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"#666\">{} dB</text>",
            cx + 3.0,
            cy - r - 2.0,
            label(db)
        );
        db += 10.0;
    }
    for deg in (0..360).step_by(30) {
        let a = (deg as f64).to_radians();
        let (x, y) = (cx + r_max * a.sin(), cy - r_max * a.cos());
        let _ = writeln!(
            out,
            "<line x1=\"{cx:.1}\" y1=\"{cy:.1}\" x2=\"{x:.1}\" y2=\"{y:.1}\" stroke=\"#e6e6e6\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{deg}°</text>",
            cx + (r_max + 14.0) * a.sin(),
            cy - (r_max + 14.0) * a.cos() + 4.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(t, v)| {
                let r = radius(v);
                format!("{:.2},{:.2}", cx + r * t.sin(), cy - r * t.cos())
            })
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>",
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bar histogram of `(bin_lo, bin_hi, count)`.
pub fn histogram(title: &str, x_label: &str, bins: &[(f64, f64, u64)]) -> String {
    let x0 = bins.first().map_or(0.0, |b| b.0);
    let x1 = bins.last().map_or(1.0, |b| b.1);
    let cmax = bins.iter().map(|b| b.2).max().unwrap_or(0).max(1) as f64;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0).max(1e-300) * pw;
    let sy = |c: f64| TOP + (1.0 - c / (cmax * 1.05)) * ph;
    let mut out = String::new();
    header(&mut out, title);
    for &(lo, hi, c) in bins {
        let (xa, xb) = (sx(lo), sx(hi));
        let _ = writeln!(
            out,
            "<rect x=\"{xa:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4878a8\" stroke=\"white\" stroke-width=\"0.5\"/>",
            sy(c as f64),
            (xb - xa).max(0.5),
            TOP + ph - sy(c as f64)
        );
    }
    for t in ticks(x0, x1, 8) {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            sx(t),
            TOP + ph + 16.0,
            label(t)
        );
    }
    for t in ticks(0.0, cmax * 1.05, 5) {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            sy(t) + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">modes per bin</text>",
        LEFT + pw / 2.0,
        H - 14.0,
        escape(x_label),
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    out.push_str("</svg>\n");
    out
}

fn ramp(t: f64) -> String {
    // Dark blue through teal to yellow.
    let stops = [(0.0, [48.0, 18.0, 59.0]), (0.5, [33.0, 145.0, 140.0]), (1.0, [253.0, 231.0, 37.0])];
    let t = t.clamp(0.0, 1.0);
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let f = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + f * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heat map of `values[iu * nv + iv]` on the rectilinear cell edges `u`, `v`
/// (`nu + 1` and `nv + 1` coordinates). Signed data use a symmetric scale.
pub fn heatmap(title: &str, u: &[f64], v: &[f64], values: &[f64]) -> String {
    let (nu, nv) = (u.len().saturating_sub(1), v.len().saturating_sub(1));
    let vmax = values.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let signed = values.iter().any(|&x| x < 0.0);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let (u0, u1) = (u.first().copied().unwrap_or(0.0), u.last().copied().unwrap_or(1.0));
    let (v0, v1) = (v.first().copied().unwrap_or(0.0), v.last().copied().unwrap_or(1.0));
    let sx = |x: f64| LEFT + (x - u0) / (u1 - u0).max(1e-300) * pw;
    let sy = |y: f64| TOP + (v1 - y) / (v1 - v0).max(1e-300) * ph;
    let mut out = String::new();
    header(&mut out, title);
    for iu in 0..nu {
        for iv in 0..nv {
            let x = values[iu * nv + iv];
            let t = if signed { 0.5 + 0.5 * x / vmax } else { x / vmax };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                sx(u[iu]),
                sy(v[iv + 1]),
                (sx(u[iu + 1]) - sx(u[iu])).max(0.3),
                (sy(v[iv]) - sy(v[iv + 1])).max(0.3),
                ramp(t)
            );
        }
    }
    let bar_x = LEFT + pw + 24.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let _ = writeln!(
            out,
            "<rect x=\"{bar_x:.1}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>",
            TOP + (1.0 - t) * ph - ph / 50.0,
            ph / 50.0 + 0.5,
            ramp(t)
        );
    }
    let lo = if signed { -vmax } else { 0.0 };
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\">{}</text><text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n\
         <rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\"/>",
        bar_x + 20.0,
        TOP + 8.0,
        label(vmax),
        bar_x + 20.0,
        TOP + ph,
        label(lo)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_spacing_is_round() {
        assert_eq!(ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(27e9, 29e9, 8);
        assert!(t.len() >= 5 && t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn charts_are_well_formed() {
        let s = [Series::new("a", vec![(1.0, -3.0), (2.0, -20.0), (3.0, f64::NAN)])];
        for svg in [
            line_chart("t", "x", "y", &s),
            polar_chart("p", &[Series::new("cut", vec![(0.0, 0.0), (90f64.to_radians(), -10.0)])], -30.0),
            histogram("h", "f", &[(0.0, 1.0, 3), (1.0, 2.0, 5)]),
            heatmap("m", &[0.0, 1.0, 2.0], &[0.0, 1.0], &[1.0, -1.0]),
        ] {
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("NaN"));
        }
    }
}
