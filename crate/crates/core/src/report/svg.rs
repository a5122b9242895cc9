//! Minimal dependency-free SVG charts. Output is a pure function of the
//! inputs.

use std::fmt::Write;

/// White to dark blue; every channel is non-increasing in `t ∈ [0, 1]`.
pub fn color_ramp(t: f64) -> (u8, u8, u8) {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

const UNDEFINED_FILL: &str = "#d9d9d9";

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(w: f64, h: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{:.1}\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        w / 2.0,
        esc(title)
    )
}

/// Matrix heatmap over the value range `[lo, hi]`. `None` cells are grey.
pub fn heatmap(title: &str, values: &[Vec<Option<f64>>], labels: &[String], lo: f64, hi: f64) -> String {
    let n_rows = values.len();
    let n_cols = values.first().map_or(0, Vec::len);
    let cell = 36.0;
    let (left, top) = (80.0, 30.0);
    let legend_x = left + cell * n_cols as f64 + 20.0;
    let width = legend_x + 70.0;
    let height = top + cell * n_rows as f64 + 40.0;
    let mut s = header(width, height.max(160.0), title);
    let span = if hi > lo { hi - lo } else { 1.0 };
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let (fill, text) = match v {
                Some(v) => (hex(color_ramp((v - lo) / span)), format!("{v:.2}")),
                None => (UNDEFINED_FILL.to_string(), "n/a".to_string()),
            };
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            let _ = writeln!(
                s,
                "<rect class=\"cell\" data-row=\"{i}\" data-col=\"{j}\" x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{fill}\" stroke=\"white\"/>"
            );
            let ink = if v.is_some_and(|v| (v - lo) / span > 0.55) { "white" } else { "black" };
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{ink}\" font-size=\"9\">{text}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 3.0
            );
        }
    }
    for (i, l) in labels.iter().enumerate().take(n_rows) {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            left - 4.0,
            top + cell * i as f64 + cell / 2.0 + 4.0,
            esc(l)
        );
    }
    for (j, l) in labels.iter().enumerate().take(n_cols) {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            left + cell * j as f64 + cell / 2.0,
            top + cell * n_rows as f64 + 14.0,
            esc(l)
        );
    }
    // legend
    let steps = 10;
    for k in 0..steps {
        let t = 1.0 - k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            s,
            "<rect class=\"legend\" x=\"{legend_x:.1}\" y=\"{:.1}\" width=\"14\" height=\"10\" fill=\"{}\"/>",
            top + 10.0 * k as f64,
            hex(color_ramp(t))
        );
    }
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{hi:.2}</text>", legend_x + 18.0, top + 9.0);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{lo:.2}</text>", legend_x + 18.0, top + 10.0 * steps as f64);
    s.push_str("</svg>\n");
    s
}

struct Frame {
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
        Self {
            left: 55.0,
            top: 30.0,
            w: 420.0,
            h: 260.0,
            x: pad(x),
            y: pad(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.h - (y - self.y.0) / (self.y.1 - self.y.0) * self.h
    }

    fn axes(&self, s: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.w, self.h);
        let _ = writeln!(
            s,
            "<path d=\"M{l:.1} {t:.1} V{:.1} H{:.1}\" fill=\"none\" stroke=\"black\"/>",
            t + h,
            l + w
        );
        for (v, anchor_y) in [(self.y.0, t + h), (self.y.1, t)] {
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>", l - 4.0, anchor_y + 4.0);
        }
        for (v, anchor_x) in [(self.x.0, l), (self.x.1, l + w)] {
            let _ = writeln!(s, "<text x=\"{anchor_x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v:.3}</text>", t + h + 14.0);
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", l + w / 2.0, t + h + 30.0, esc(x_label));
        let _ = writeln!(
            s,
            "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
            t + h / 2.0,
            t + h / 2.0,
            esc(y_label)
        );
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// One polyline per named series of `(x, y)` points.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xs = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let ys = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let frame = Frame::new(if xs.0.is_finite() { xs } else { (0.0, 1.0) }, if ys.0.is_finite() { ys } else { (0.0, 1.0) });
    let mut s = header(frame.left + frame.w + 120.0, frame.top + frame.h + 40.0, title);
    frame.axes(&mut s, x_label, y_label);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>", d.join(" "));
        let ly = frame.top + 14.0 * k as f64;
        let lx = frame.left + frame.w + 10.0;
        let _ = writeln!(s, "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"10\" height=\"3\" fill=\"{color}\"/>", ly + 4.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", lx + 14.0, ly + 8.0, esc(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Labelled points coloured by class.
pub fn scatter(title: &str, points: &[[f64; 2]], labels: &[usize], class_names: &[String]) -> String {
    let frame = Frame::new(range(points.iter().map(|p| p[0])), range(points.iter().map(|p| p[1])));
    let mut s = header(frame.left + frame.w + 120.0, frame.top + frame.h + 40.0, title);
    frame.axes(&mut s, "t-SNE 1", "t-SNE 2");
    for (p, &l) in points.iter().zip(labels) {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.8\"/>",
            frame.px(p[0]),
            frame.py(p[1]),
            PALETTE[l % PALETTE.len()]
        );
    }
    for (k, name) in class_names.iter().enumerate() {
        let ly = frame.top + 14.0 * k as f64;
        let lx = frame.left + frame.w + 10.0;
        let _ = writeln!(s, "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{}\"/>", lx + 4.0, ly + 4.0, PALETTE[k % PALETTE.len()]);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", lx + 12.0, ly + 8.0, esc(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Vertical bars, one per label.
pub fn bar_chart(title: &str, y_label: &str, labels: &[String], values: &[f64]) -> String {
    let (lo, hi) = range(values.iter().copied());
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi.max(0.0)) } else { (0.0, 1.0) };
    let frame = Frame::new((0.0, values.len().max(1) as f64), (lo, hi));
    let mut s = header(frame.left + frame.w + 30.0, frame.top + frame.h + 40.0, title);
    frame.axes(&mut s, "", y_label);
    let bw = frame.w / values.len().max(1) as f64;
    for (i, (&v, l)) in values.iter().zip(labels).enumerate() {
        let (y0, y1) = (frame.py(0.0), frame.py(v));
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            frame.left + bw * i as f64 + bw * 0.1,
            y0.min(y1),
            bw * 0.8,
            (y1 - y0).abs(),
            if v >= 0.0 { PALETTE[0] } else { PALETTE[1] }
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\">{}</text>",
            frame.left + bw * (i as f64 + 0.5),
            frame.top + frame.h + 24.0,
            esc(l)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn luminance((r, g, b): (u8, u8, u8)) -> f64 {
        0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64
    }

    #[test]
    fn ramp_is_monotone() {
        let mut prev = color_ramp(0.0);
        for k in 1..=100 {
            let c = color_ramp(k as f64 / 100.0);
            assert!(c.0 <= prev.0 && c.1 <= prev.1 && c.2 <= prev.2);
            assert!(luminance(c) <= luminance(prev));
            prev = c;
        }
    }

    #[test]
    fn heatmap_cells_follow_values() {
        let vals = vec![
            vec![Some(1.0), Some(-0.5), Some(0.25)],
            vec![Some(-0.5), Some(1.0), Some(-1.0)],
            vec![Some(0.25), Some(-1.0), Some(1.0)],
        ];
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let svg = heatmap("m", &vals, &names, -1.0, 1.0);
        let mut cells: Vec<(f64, (u8, u8, u8))> = Vec::new();
        for line in svg.lines().filter(|l| l.contains("class=\"cell\"")) {
            let attr = |k: &str| {
                let start = line.find(&format!("{k}=\"")).unwrap() + k.len() + 2;
                line[start..start + line[start..].find('"').unwrap()].to_string()
            };
            let (i, j): (usize, usize) = (attr("data-row").parse().unwrap(), attr("data-col").parse().unwrap());
            let f = attr("fill");
            let c = |k: usize| u8::from_str_radix(&f[1 + 2 * k..3 + 2 * k], 16).unwrap();
            cells.push((vals[i][j].unwrap(), (c(0), c(1), c(2))));
        }
        assert_eq!(cells.len(), 9);
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in cells.windows(2) {
            assert!(luminance(w[1].1) <= luminance(w[0].1));
        }
        assert_eq!(svg, heatmap("m", &vals, &names, -1.0, 1.0));
    }

    #[test]
    fn charts_are_well_formed() {
        let l = line_chart("loss", "epoch", "loss", &[("train".into(), vec![(1.0, 0.5), (2.0, 0.3)])]);
        assert!(l.starts_with("<svg") && l.trim_end().ends_with("</svg>"));
        let s = scatter("e", &[[0.0, 0.0], [1.0, 1.0]], &[0, 1], &["a".into(), "b<".into()]);
        assert!(s.contains("b&lt;"));
        let b = bar_chart("a", "score", &["x".into()], &[-0.2]);
        assert!(b.contains(PALETTE[1]));
    }
}
