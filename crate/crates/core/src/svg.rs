//! Minimal static SVG charts: line, bar and scatter. The CSV outputs carry the data;
//! these exist for a quick look.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_B - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        WIDTH / 2.0,
        escape(title),
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel),
    );
    s
}

fn axes(s: &mut String, f: &Frame, y_tick_label: impl Fn(f64) -> String) {
    let _ = writeln!(
        s,
        "<path d=\"M{:.4} {:.4} V{:.4} H{:.4}\" stroke=\"black\" fill=\"none\"/>",
        MARGIN_L,
        MARGIN_T,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R
    );
    for i in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.4}\" y=\"{:.4}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 4.0,
            f.y(v) + 4.0,
            y_tick_label(v)
        );
    }
    for i in 0..=4 {
        let v = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.4}\" y=\"{:.4}\" text-anchor=\"middle\">{}</text>",
            f.x(v),
            HEIGHT - MARGIN_B + 16.0,
            short(v)
        );
    }
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Polyline of `(x, y)` points with optional dashed vertical markers. With `log_y`
/// the y axis is `log10`, and non-positive values are clamped to the smallest positive one.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], markers: &[f64], log_y: bool) -> String {
    let floor = points
        .iter()
        .map(|p| p.1)
        .filter(|&y| y > 0.0)
        .fold(f64::INFINITY, f64::min);
    let ty = |y: f64| if log_y { y.max(floor).log10() } else { y };
    let ys: Vec<f64> = points.iter().map(|p| ty(p.1)).filter(|y| y.is_finite()).collect();
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let (x0, x1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let f = if points.is_empty() || ys.is_empty() {
        Frame::new(0.0, 1.0, 0.0, 1.0)
    } else {
        Frame::new(x0, x1, y0, y1)
    };
    let mut s = open(title, xlabel, ylabel);
    axes(&mut s, &f, |v| if log_y { format!("1e{v:.1}") } else { short(v) });
    for &m in markers {
        let _ = writeln!(
            s,
            "<line x1=\"{x:.4}\" y1=\"{:.4}\" x2=\"{x:.4}\" y2=\"{:.4}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
            MARGIN_T,
            HEIGHT - MARGIN_B,
            x = f.x(m)
        );
    }
    let mut d = String::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        let yy = ty(y);
        if !yy.is_finite() {
            continue;
        }
        let _ = write!(d, "{}{:.4} {:.4}", if i == 0 { "M" } else { " L" }, f.x(x), f.y(yy));
    }
    let _ = writeln!(s, "<path d=\"{d}\" stroke=\"{}\" fill=\"none\" stroke-width=\"1.2\"/>", PALETTE[0]);
    s.push_str("</svg>\n");
    s
}

/// Vertical bars with labels under each bar, on a fixed y range.
pub fn bar_chart(title: &str, ylabel: &str, bars: &[(String, f64)], y_range: (f64, f64)) -> String {
    let f = Frame::new(0.0, bars.len().max(1) as f64, y_range.0, y_range.1);
    let mut s = open(title, "", ylabel);
    let _ = writeln!(
        s,
        "<path d=\"M{:.4} {:.4} V{:.4} H{:.4}\" stroke=\"black\" fill=\"none\"/>",
        MARGIN_L,
        MARGIN_T,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R
    );
    for i in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.4}\" y=\"{:.4}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 4.0,
            f.y(v) + 4.0,
            short(v)
        );
    }
    let zero = f.y(0.0_f64.clamp(f.y0, f.y1));
    for (i, (label, v)) in bars.iter().enumerate() {
        let v = v.clamp(f.y0, f.y1);
        let (x, w) = (f.x(i as f64 + 0.15), f.x(i as f64 + 0.85) - f.x(i as f64 + 0.15));
        let (top, h) = (f.y(v).min(zero), (f.y(v) - zero).abs());
        let _ = writeln!(
            s,
            "<rect x=\"{x:.4}\" y=\"{top:.4}\" width=\"{w:.4}\" height=\"{h:.4}\" fill=\"{}\"/>",
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.4}\" y=\"{:.4}\" text-anchor=\"middle\">{}</text>",
            f.x(i as f64 + 0.5),
            HEIGHT - MARGIN_B + 16.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Points `(x, y, class)` coloured by class.
pub fn scatter_chart(title: &str, points: &[(f64, f64, usize)]) -> String {
    let bound = points
        .iter()
        .fold(0.0_f64, |m, p| m.max(p.0.abs()).max(p.1.abs()))
        .max(1e-12)
        * 1.1;
    let f = Frame::new(-bound, bound, -bound, bound);
    let mut s = open(title, "x", "y");
    axes(&mut s, &f, short);
    for &(x, y, c) in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            f.x(x),
            f.y(y),
            PALETTE[c % PALETTE.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_well_formed() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 / 10.0, (i * i) as f64)).collect();
        let s = line_chart("a < b", "nu", "norm", &pts, &[0.5], true);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<path").count(), 2);
        assert_eq!(s, line_chart("a < b", "nu", "norm", &pts, &[0.5], true));
    }

    #[test]
    fn bar_and_scatter_counts() {
        let s = bar_chart("k", "kappa", &[("linear".into(), 50.0), ("mlp".into(), -10.0)], (-10.0, 100.0));
        assert_eq!(s.matches("<rect").count(), 3);
        let s = scatter_chart("p", &[(0.0, 1.0, 0), (1.0, 0.0, 1)]);
        assert_eq!(s.matches("<circle").count(), 2);
    }

    #[test]
    fn empty_inputs_do_not_panic() {
        line_chart("e", "", "", &[], &[], false);
        bar_chart("e", "", &[], (0.0, 1.0));
        scatter_chart("e", &[]);
    }
}
