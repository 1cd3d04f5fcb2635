use serde::Serialize;

use super::AssessmentReport;
use crate::svg::{num, plain, pow10, Chart, HEIGHT};

const BAR: &str = "#4a7ab5";
const PALETTE: [&str; 2] = ["#c2524a", "#4a7ab5"];

/// The four report figures as standalone SVG documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportPanels {
    pub transitions: String,
    pub duration_vs_fto: String,
    pub rank_frequency: String,
    pub samples: String,
}

impl ReportPanels {
    /// `(file name, document)` pairs in panel order A–D.
    pub fn files(&self) -> [(&'static str, &str); 4] {
        [
            ("panel_a_transitions.svg", &self.transitions),
            ("panel_b_duration_vs_fto.svg", &self.duration_vs_fto),
            ("panel_c_rank_frequency.svg", &self.rank_frequency),
            ("panel_d_samples.svg", &self.samples),
        ]
    }
}

pub fn render_report_svg(report: &AssessmentReport) -> ReportPanels {
    ReportPanels {
        transitions: transitions_panel(report),
        duration_vs_fto: scatter_panel(report),
        rank_frequency: rank_panel(report),
        samples: samples_panel(report),
    }
}

fn transitions_panel(r: &AssessmentReport) -> String {
    let h = &r.transition_histogram;
    let title = format!("Turn transitions (n = {})", h.total());
    let (x_label, y_label) = ("floor transfer offset (ms)", "count");
    if h.counts.is_empty() {
        let mut c = Chart::new((-2000.0, 2000.0), (0.0, 1.0));
        c.no_data();
        return c.finish(&title, x_label, y_label, plain, plain);
    }
    let lo = h.bin_start(*h.counts.keys().next().unwrap()) as f64;
    let hi = h.bin_start(*h.counts.keys().last().unwrap() + 1) as f64;
    let peak = *h.counts.values().max().unwrap() as f64;
    let mut c = Chart::new((lo, hi), (0.0, peak));
    for (&bin, &count) in &h.counts {
        c.rect(h.bin_start(bin) as f64, h.bin_start(bin + 1) as f64, 0.0, count as f64, BAR);
    }
    c.finish(&title, x_label, y_label, plain, plain)
}

fn scatter_panel(r: &AssessmentReport) -> String {
    let pts = &r.duration_vs_fto;
    let title = "Turn duration by transition offset";
    let (x_label, y_label) = ("floor transfer offset (ms)", "next turn duration (ms)");
    if pts.is_empty() {
        let mut c = Chart::new((-2000.0, 2000.0), (0.0, 1.0));
        c.no_data();
        return c.finish(title, x_label, y_label, plain, plain);
    }
    let (xmin, xmax) = pts.iter().fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let ymax = pts.iter().map(|p| p.1).max().unwrap();
    let mut c = Chart::new((xmin as f64, xmax as f64), (0.0, ymax as f64));
    for &(x, y) in pts {
        c.circle(x as f64, y as f64, 2.5, BAR);
    }
    c.finish(title, x_label, y_label, plain, plain)
}

fn rank_panel(r: &AssessmentReport) -> String {
    let title = match r.zipf_slope {
        Some(s) => format!("Rank/frequency (slope {})", num(s)),
        None => "Rank/frequency".to_string(),
    };
    let (x_label, y_label) = ("rank", "count");
    if r.rank_frequency.is_empty() {
        let mut c = Chart::new((0.0, 1.0), (0.0, 1.0));
        c.no_data();
        return c.finish(&title, x_label, y_label, pow10, pow10);
    }
    let pts: Vec<(f64, f64)> =
        r.rank_frequency.iter().map(|e| ((e.rank as f64).log10(), (e.count as f64).log10())).collect();
    let xmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let ymax = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut c = Chart::new((0.0, xmax), (0.0, ymax));
    for &(x, y) in &pts {
        c.circle(x, y, 2.0, BAR);
    }
    c.finish(&title, x_label, y_label, pow10, pow10)
}

fn samples_panel(r: &AssessmentReport) -> String {
    let title = format!("Sampled dyadic stretches (seed {})", r.seed);
    let (x_label, y_label) = ("time in window (s)", "");
    let window = r.samples.first().map_or(10_000, |s| s.end_ms - s.start_ms) as f64;
    let rows = r.samples.len().max(1) as f64;
    let mut c = Chart::new((0.0, window / 1000.0), (0.0, rows * 3.0));
    if r.samples.is_empty() {
        c.no_data();
    }
    for (i, s) in r.samples.iter().enumerate() {
        let base = (rows - 1.0 - i as f64) * 3.0;
        for t in &s.turns {
            let lane = s.participants.iter().position(|p| *p == t.participant).unwrap_or(0);
            let b = (t.begin_ms.max(s.start_ms) - s.start_ms) as f64 / 1000.0;
            let e = (t.end_ms.min(s.end_ms) - s.start_ms) as f64 / 1000.0;
            let y = base + 1.6 - lane as f64 * 1.2;
            c.rect(b, e.max(b + 0.02), y, y + 0.9, PALETTE[lane % 2]);
        }
        let label = format!("{} @ {} s: {}", s.source, num(s.start_ms as f64 / 1000.0), s.participants.join(" / "));
        let py = c.py(base + 2.85);
        c.label(c.px(0.0) + 4.0, py.min(HEIGHT), &label, "start", 9);
    }
    c.finish(&title, x_label, y_label, plain, |_| String::new())
}
