//! Static SVG renderings of views, parallel-coordinates plots and small line charts.
//!
//! Glyphs: data `○` (`+` outside the focus rows), first-side sample `□`,
//! second-side sample `△`, highlighted rows in orange.

use std::collections::HashSet;
use std::fmt::Write;

use crate::ingestion::DataMatrix;
use crate::selection::AttributeReport;
use crate::session::{Coords, ViewState};

const W: f64 = 640.0;
const H: f64 = 520.0;
const PAD: f64 = 70.0;

const DATA: &str = "#000000";
const SAMPLE1: &str = "#1b9e3a";
const SAMPLE2: &str = "#2060c0";
const HIGHLIGHT: &str = "#ff7f00";

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut f = Frame { x0: f64::INFINITY, x1: f64::NEG_INFINITY, y0: f64::INFINITY, y1: f64::NEG_INFINITY };
        for (x, y) in points {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            return Frame { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        }
        let (dx, dy) = ((f.x1 - f.x0).max(1e-9) * 0.05, (f.y1 - f.y0).max(1e-9) * 0.05);
        Frame { x0: f.x0 - dx, x1: f.x1 + dx, y0: f.y0 - dy, y1: f.y1 + dy }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String) {
    let _ = writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
}

fn glyph(out: &mut String, kind: char, x: f64, y: f64, color: &str) {
    let _ = match kind {
        'o' => writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"none\" stroke=\"{color}\"/>"),
        '+' => writeln!(
            out,
            "<path d=\"M{:.2} {y:.2}H{:.2}M{x:.2} {:.2}V{:.2}\" stroke=\"{color}\"/>",
            x - 3.0,
            x + 3.0,
            y - 3.0,
            y + 3.0
        ),
        's' => writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"5\" height=\"5\" fill=\"none\" stroke=\"{color}\"/>",
            x - 2.5,
            y - 2.5
        ),
        _ => writeln!(
            out,
            "<path d=\"M{x:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}Z\" fill=\"none\" stroke=\"{color}\"/>",
            y - 3.5,
            x + 3.0,
            y + 2.5,
            x - 3.0,
            y + 2.5
        ),
    };
}

fn xy(c: &Coords, i: usize) -> (f64, f64) {
    (c.get(i, 0), if c.cols > 1 { c.get(i, 1) } else { 0.0 })
}

fn axis_label(view: &ViewState, k: usize) -> String {
    view.axis_labels
        .get(k)
        .map(|ls| ls.iter().map(|l| format!("{:+.2} {}", l.value, l.name)).collect::<Vec<_>>().join("  "))
        .unwrap_or_default()
}

/// Scatterplot of a view with its sample overlays.
pub fn scatter_svg(view: &ViewState, highlight: &[usize], title: &str) -> String {
    let all = std::iter::once(&view.coords_data).chain(&view.coords_sample_h1).chain(&view.coords_sample_h2);
    let frame = Frame::fit(all.flat_map(|c| (0..c.rows).map(move |i| xy(c, i))));
    let mut out = String::new();
    header(&mut out, &format!("{title} (gain {:.3}{})", view.gain, if view.degenerate { ", degenerate" } else { "" }));
    axes(&mut out);
    for (samples, kind, color) in [(&view.coords_sample_h1, 's', SAMPLE1), (&view.coords_sample_h2, 't', SAMPLE2)] {
        for c in samples {
            for i in 0..c.rows {
                let (x, y) = xy(c, i);
                glyph(&mut out, kind, frame.px(x), frame.py(y), color);
            }
        }
    }
    let marked: HashSet<usize> = highlight.iter().copied().collect();
    for pass in [false, true] {
        for i in (0..view.coords_data.rows).filter(|i| marked.contains(i) == pass) {
            let (x, y) = xy(&view.coords_data, i);
            let kind = if view.outside_focus[i] { '+' } else { 'o' };
            glyph(&mut out, kind, frame.px(x), frame.py(y), if pass { HIGHLIGHT } else { DATA });
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - PAD + 30.0,
        escape(&axis_label(view, 0))
    );
    let _ = writeln!(
        out,
        "<text transform=\"translate({}, {}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        PAD - 30.0,
        H / 2.0,
        escape(&axis_label(view, 1))
    );
    out.push_str("</svg>\n");
    out
}

/// Parallel coordinates: every row in grey, `rows` in red, std ratios in the labels.
pub fn pcp_svg(data: &DataMatrix, rows: &[usize], report: &AttributeReport, title: &str) -> String {
    let (n, m) = data.shape();
    let x = data.values();
    let frame = Frame::fit(x.iter().map(|&v| (0.0, v)));
    let step = if m > 1 { (W - 2.0 * PAD) / (m - 1) as f64 } else { 0.0 };
    let px = |j: usize| PAD + j as f64 * step;
    let line = |out: &mut String, i: usize, color: &str, opacity: f64| {
        let mut d = String::new();
        for j in 0..m {
            let _ = write!(d, "{}{:.2} {:.2}", if j == 0 { "M" } else { "L" }, px(j), frame.py(x[(i, j)]));
        }
        let _ = writeln!(out, "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-opacity=\"{opacity}\"/>");
    };
    let mut out = String::new();
    header(&mut out, title);
    let marked: HashSet<usize> = rows.iter().copied().collect();
    for i in (0..n).filter(|i| !marked.contains(i)) {
        line(&mut out, i, "#777", 0.25);
    }
    for &i in rows {
        line(&mut out, i, "#d62728", 0.8);
    }
    for (j, c) in report.columns.iter().enumerate() {
        let ratio = if c.ratio.is_finite() { format!("{:.2}", c.ratio) } else { "inf".into() };
        let _ = writeln!(
            out,
            "<text transform=\"translate({:.2}, {}) rotate(60)\">{} ({ratio})</text>",
            px(j),
            H - PAD + 8.0,
            escape(&c.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One polyline per series over shared x values.
pub fn line_svg(title: &str, x_label: &str, y_label: &str, xs: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|(_, ys)| xs.iter().copied().zip(ys.iter().copied())));
    let palette = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out);
    for (s, (name, ys)) in series.iter().enumerate() {
        let color = palette[s % palette.len()];
        let mut d = String::new();
        for (k, (x, y)) in xs.iter().zip(ys).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if k == 0 { "M" } else { "L" }, frame.px(*x), frame.py(*y));
            glyph(&mut out, 'o', frame.px(*x), frame.py(*y), color);
        }
        let _ = writeln!(out, "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            W - PAD + 5.0,
            PAD + 14.0 * s as f64,
            escape(name)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - PAD + 30.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text transform=\"translate({}, {}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        PAD - 40.0,
        H / 2.0,
        escape(y_label)
    );
    let _ = writeln!(out, "<text x=\"{PAD}\" y=\"{}\">{:.3}</text>", H - PAD + 14.0, frame.x0);
    let _ =
        writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", W - PAD, H - PAD + 14.0, frame.x1);
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", PAD - 4.0, H - PAD, frame.y0);
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", PAD - 4.0, PAD + 4.0, frame.y1);
    out.push_str("</svg>\n");
    out
}
