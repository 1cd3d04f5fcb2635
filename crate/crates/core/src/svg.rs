//! Minimal SVG 1.1 chart writer used for report figures.

use std::fmt::Write;

pub const WIDTH: f64 = 480.0;
pub const HEIGHT: f64 = 320.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' && c != '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Fixed two-decimal coordinates, with trailing zeros dropped.
pub fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// About `n` round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || n == 0 {
        return vec![lo];
    }
    let raw = (hi - lo) / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

pub struct Chart {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Chart {
    /// Data ranges are widened when degenerate.
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
        Chart { x: widen(x), y: widen(y), body: String::new() }
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            num(a.min(b)),
            num(c.min(d)),
            num((b - a).abs()),
            num((d - c).abs())
        );
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="0.6"/>"#,
            num(self.px(x)),
            num(self.py(y)),
            num(r)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{},{}", num(self.px(x)), num(self.py(y)))).collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#, pts.join(" "));
    }

    /// Text at pixel coordinates.
    pub fn label(&mut self, px: f64, py: f64, text: &str, anchor: &str, size: u32) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            num(px),
            num(py),
            escape(text)
        );
    }

    pub fn no_data(&mut self) {
        self.label(LEFT + (WIDTH - LEFT - RIGHT) / 2.0, TOP + (HEIGHT - TOP - BOTTOM) / 2.0, "no data", "middle", 14);
    }

    /// Frame, ticks and axis labels. `x_fmt`/`y_fmt` render tick values.
    pub fn finish(
        mut self,
        title: &str,
        x_label: &str,
        y_label: &str,
        x_fmt: impl Fn(f64) -> String,
        y_fmt: impl Fn(f64) -> String,
    ) -> String {
        let mut axes = String::new();
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(axes, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, num(x0), num(y0), num(x1 - x0), num(y1 - y0));
        for t in ticks(self.x.0, self.x.1, 6) {
            let p = self.px(t);
            let _ = writeln!(axes, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#, num(p), num(y1), num(y1 + 4.0));
            let _ = writeln!(axes, r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, num(p), num(y1 + 16.0), escape(&x_fmt(t)));
        }
        for t in ticks(self.y.0, self.y.1, 5) {
            let p = self.py(t);
            let _ = writeln!(axes, r#"<line x1="{}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>"#, num(x0 - 4.0), num(p), num(x0));
            let _ = writeln!(axes, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#, num(x0 - 6.0), num(p + 3.0), escape(&y_fmt(t)));
        }
        self.label(WIDTH / 2.0, 20.0, title, "middle", 13);
        self.label((x0 + x1) / 2.0, HEIGHT - 10.0, x_label, "middle", 11);
        let _ = writeln!(
            self.body,
            r#"<text x="14" y="{0}" text-anchor="middle" font-size="11" transform="rotate(-90 14 {0})">{1}</text>"#,
            num((y0 + y1) / 2.0),
            escape(y_label)
        );
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{axes}{body}</svg>\n",
            w = WIDTH,
            h = HEIGHT,
            body = self.body
        )
    }
}

pub fn plain(v: f64) -> String {
    num(v)
}

/// Tick label for a log10 axis value.
pub fn pow10(v: f64) -> String {
    num(10f64.powf(v))
}
