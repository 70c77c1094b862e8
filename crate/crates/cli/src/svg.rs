//! Static SVG figures: the graph of `f*` and the box-counting fit.

use std::fmt::Write;

use fif_core::dimension::EmpiricalEstimate;

pub const WIDTH: f64 = 1000.0;
pub const HEIGHT: f64 = 700.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 60.0;
const BOTTOM: f64 = 70.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        return (c - 1.0, c + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x: padded(x0, x1), y: padded(y0, y1) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"32\" font-size=\"20\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
    for t in 0..=5 {
        let u = t as f64 / 5.0;
        let xv = f.x.0 + u * (f.x.1 - f.x.0);
        let yv = f.y.0 + u * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(out, "<line x1=\"{px:.2}\" y1=\"{y1}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y1 + 6.0);
        let _ = writeln!(out, "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>", y1 + 22.0, tick(xv));
        let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\"/>", x0 - 6.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"end\">{}</text>", x0 - 10.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"15\" text-anchor=\"middle\">{}</text>", (x0 + x1) / 2.0, HEIGHT - 22.0, escape(xlabel));
    let _ = writeln!(
        out,
        "<text x=\"22\" y=\"{:.2}\" font-size=\"15\" text-anchor=\"middle\" transform=\"rotate(-90 22 {:.2})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn legend(out: &mut String, items: &[(&str, String, bool)]) {
    let x = WIDTH - RIGHT + 20.0;
    for (i, (color, label, dashed)) in items.iter().enumerate() {
        let y = TOP + 20.0 + 24.0 * i as f64;
        let dash = if *dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(out, "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2.5\"{dash}/>", x + 28.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>", x + 36.0, y + 4.0, escape(label));
    }
}

/// Blue to red through white-ish.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 215.0 * t) as u8;
    let g = (70.0 + 120.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8;
    let b = (255.0 - 215.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Graph of an interval function as a polyline through sorted samples.
pub fn graph_interval(points: &[(f64, f64)], data: &[(f64, f64)], title: &str) -> String {
    let f = Frame::new(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "x", "f*(x)");
    let mut path = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, f.px(*x), f.py(*y));
    }
    let _ = writeln!(out, "<polyline points=\"{path}\" fill=\"none\" stroke=\"#1f4e99\" stroke-width=\"1\"/>");
    for (x, y) in data {
        let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#c0392b\"/>", f.px(*x), f.py(*y));
    }
    legend(&mut out, &[("#1f4e99", "f* on V_k".into(), false), ("#c0392b", "interpolation data".into(), false)]);
    out.push_str("</svg>\n");
    out
}

/// Graph over a planar domain as a point cloud shaded by value.
pub fn graph_planar(points: &[(f64, f64, f64)], title: &str) -> String {
    let f = Frame::new(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let (zmin, zmax) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.2), b.max(p.2)));
    let zspan = if zmax > zmin { zmax - zmin } else { 1.0 };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "x1", "x2");
    let r = (2.0 * 600.0 / (points.len() as f64).sqrt()).clamp(0.8, 6.0);
    for (x, y, z) in points {
        let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r:.2}\" fill=\"{}\"/>", f.px(*x), f.py(*y), shade((z - zmin) / zspan));
    }
    // Colour bar.
    let x = WIDTH - RIGHT + 30.0;
    let (top, h) = (TOP + 20.0, 300.0);
    for i in 0..50 {
        let t = 1.0 - i as f64 / 49.0;
        let _ = writeln!(out, "<rect x=\"{x}\" y=\"{:.2}\" width=\"24\" height=\"{:.2}\" fill=\"{}\"/>", top + h * i as f64 / 50.0, h / 50.0 + 0.5, shade(t));
    }
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"13\">f* = {}</text>", x + 32.0, top + 10.0, tick(zmax));
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"13\">f* = {}</text>", x + 32.0, top + h, tick(zmin));
    out.push_str("</svg>\n");
    out
}

/// `log N_δ` against `log(1/δ)` with the fitted line and lines of the
/// bounding slopes through the centroid of the series.
pub fn loglog(est: &EmpiricalEstimate, lower: Option<f64>, upper: Option<f64>, title: &str) -> String {
    let pts: Vec<(f64, f64)> = est.series.iter().map(|p| ((1.0 / p.delta).ln(), (p.count as f64).ln())).collect();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (xa, xb) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let mut lines: Vec<(&str, String, bool, f64)> = vec![("#1f4e99", format!("fit, slope {:.4}", est.slope), false, est.slope)];
    let same = matches!((lower, upper), (Some(l), Some(u)) if (l - u).abs() < 1e-12);
    if let Some(l) = lower {
        lines.push(("#27ae60", format!("{} {l:.4}", if same { "exact" } else { "lower" }), true, l));
    }
    if let (Some(u), false) = (upper, same) {
        lines.push(("#c0392b", format!("upper {u:.4}"), true, u));
    }
    let ys = lines.iter().flat_map(|l| [cy + l.3 * (xa - cx), cy + l.3 * (xb - cx)]).chain(pts.iter().map(|p| p.1)).collect::<Vec<_>>();
    let f = Frame::new(pts.iter().map(|p| p.0), ys.iter().copied());
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "log(1/δ)", "log N_δ");
    for (color, _, dashed, slope) in &lines {
        let (ya, yb) = if *color == "#1f4e99" {
            (est.intercept + slope * xa, est.intercept + slope * xb)
        } else {
            (cy + slope * (xa - cx), cy + slope * (xb - cx))
        };
        let dash = if *dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            f.px(xa),
            f.py(ya),
            f.px(xb),
            f.py(yb)
        );
    }
    for (x, y) in &pts {
        let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"black\"/>", f.px(*x), f.py(*y));
    }
    let items: Vec<(&str, String, bool)> = lines.iter().map(|l| (l.0, l.1.clone(), l.2)).collect();
    legend(&mut out, &items);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canvas_and_content() {
        let pts: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 / 10.0, (i as f64).sin())).collect();
        let s = graph_interval(&pts, &[(0.0, 0.0)], "t<1>");
        assert!(s.starts_with("<svg") && s.contains("width=\"1000\" height=\"700\""));
        assert!(s.contains("<polyline") && s.contains("t&lt;1&gt;"));
        let s = graph_planar(&[(0.0, 0.0, 1.0), (1.0, 0.0, 2.0)], "p");
        assert!(s.matches("<circle").count() >= 2);
        assert!(graph_interval(&[(0.0, 1.0)], &[], "flat").contains("<polyline"));
    }
}
