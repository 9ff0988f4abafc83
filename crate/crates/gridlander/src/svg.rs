//! Static SVG plots: the training reward curve and trajectory projections.
//!
//! Output is a single self-contained file with fixed-precision coordinates,
//! so identical inputs give identical bytes.

use std::fmt::Write;
use std::path::Path;

use gridlander_core::dqn::{EpisodeTrace, RewardTrace};
use gridlander_core::env::EnvConfig;

use crate::error::{Error, Result};

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Rectangular plotting area with data ranges mapped onto it.
struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(
            out,
            r##"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##
        );
        for v in ticks(self.x.0, self.x.1) {
            let x = self.px(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                t + h,
                t + h + 5.0,
                t + h + 18.0,
                tick_label(v)
            );
        }
        for v in ticks(self.y.0, self.y.1) {
            let y = self.py(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{l:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                l - 5.0,
                l - 8.0,
                y + 4.0,
                tick_label(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-weight="bold">{}</text>"#,
            l + w / 2.0,
            t - 12.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 40.0,
            escape(x_label)
        );
        let (yx, yy) = (l - 52.0, t + h / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{yx:.1}" y="{yy:.1}" text-anchor="middle" transform="rotate(-90 {yx:.1} {yy:.1})">{}</text>"#,
            escape(y_label)
        );
    }

    fn polyline(&self, out: &mut String, points: &[(f64, f64)], color: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        out.push_str(r#"<polyline fill="none" stroke=""#);
        out.push_str(color);
        let _ = write!(out, r#"" stroke-width="{width:.1}" points=""#);
        for (i, (x, y)) in points.iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(out, "{sep}{:.2},{:.2}", self.px(*x), self.py(*y));
        }
        out.push_str("\"/>\n");
    }
}

/// Round tick values covering `[lo, hi]`, at most eight of them.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 7.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn legend(out: &mut String, x: f64, y: f64, entries: &[(&str, &str)]) {
    for (i, (color, label)) in entries.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 20.0,
            x + 25.0,
            yy + 4.0,
            escape(label)
        );
    }
}

/// Per-episode return and its trailing moving average over `window`.
pub fn reward_curve(trace: &RewardTrace, window: usize) -> String {
    let (w, h) = (800.0, 450.0);
    let returns = trace.returns();
    let avg = trace.moving_average(window);
    let n = returns.len();
    let lo = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let panel = Panel {
        left: MARGIN_LEFT,
        top: MARGIN_TOP,
        width: w - MARGIN_LEFT - MARGIN_RIGHT,
        height: h - MARGIN_TOP - MARGIN_BOTTOM,
        x: (0.0, (n.max(2) - 1) as f64),
        y: padded(lo, hi),
    };
    let mut body = String::new();
    panel.axes(&mut body, "Training reward", "Episode", "Return (reward units)");
    let pts = |v: &[f64]| v.iter().enumerate().map(|(i, r)| (i as f64, *r)).collect::<Vec<_>>();
    panel.polyline(&mut body, &pts(&returns), "#9ecae1", 1.0);
    panel.polyline(&mut body, &pts(&avg), "#08519c", 2.0);
    let label = format!("Moving average ({window} episodes)");
    legend(
        &mut body,
        panel.left + 12.0,
        panel.top + 14.0,
        &[("#9ecae1", "Episode return"), ("#08519c", &label)],
    );
    document(w, h, &body)
}

/// Side-by-side x-y and x-z projections of each episode's path, starting at
/// its first state and ending at its final one.
pub fn trajectories(traces: &[EpisodeTrace], env: &EnvConfig) -> String {
    let (w, h) = (1000.0, 480.0);
    let pw = (w - 2.0 * (MARGIN_LEFT + MARGIN_RIGHT)) / 2.0;
    let ph = h - MARGIN_TOP - MARGIN_BOTTOM;
    let xy = Panel {
        left: MARGIN_LEFT,
        top: MARGIN_TOP,
        width: pw,
        height: ph,
        x: padded(env.x_range.0, env.x_range.1),
        y: padded(env.y_range.0, env.y_range.1),
    };
    let xz = Panel {
        left: 2.0 * MARGIN_LEFT + MARGIN_RIGHT + pw,
        top: MARGIN_TOP,
        width: pw,
        height: ph,
        x: padded(env.x_range.0, env.x_range.1),
        y: padded(env.z_range.0, env.z_range.1),
    };
    let mut body = String::new();
    xy.axes(&mut body, "Top view (x-y)", "x offset from pad (m)", "y offset from pad (m)");
    xz.axes(&mut body, "Side view (x-z)", "x offset from pad (m)", "altitude (m)");

    // Landing zone disc and pad marker.
    let r = env.landing_zone_radius;
    let _ = writeln!(
        body,
        r##"<ellipse cx="{:.2}" cy="{:.2}" rx="{:.2}" ry="{:.2}" fill="#d9f0d3" stroke="#1b7837"/>"##,
        xy.px(0.0),
        xy.py(0.0),
        xy.px(r) - xy.px(0.0),
        xy.py(0.0) - xy.py(r)
    );
    let _ = writeln!(
        body,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1b7837" stroke-width="4"/>"##,
        xz.px(-r),
        xz.py(env.z_range.0),
        xz.px(r),
        xz.py(env.z_range.0)
    );

    for (i, t) in traces.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path: Vec<[f64; 3]> = Vec::with_capacity(t.steps.len() + 1);
        if let Some(first) = t.steps.first() {
            path.push([first.state.dx, first.state.dy, first.state.dz]);
        }
        path.extend(t.steps.iter().map(|s| [s.next.dx, s.next.dy, s.next.dz]));
        let pxy: Vec<(f64, f64)> = path.iter().map(|p| (p[0], p[1])).collect();
        let pxz: Vec<(f64, f64)> = path.iter().map(|p| (p[0], p[2])).collect();
        xy.polyline(&mut body, &pxy, color, 1.5);
        xz.polyline(&mut body, &pxz, color, 1.5);
        if let (Some(s), Some(e)) = (path.first(), path.last()) {
            for (panel, a, b) in [(&xy, (s[0], s[1]), (e[0], e[1])), (&xz, (s[0], s[2]), (e[0], e[2]))] {
                let _ = writeln!(
                    body,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/><rect x="{:.2}" y="{:.2}" width="6" height="6" fill="{color}"/>"#,
                    panel.px(a.0),
                    panel.py(a.1),
                    panel.px(b.0) - 3.0,
                    panel.py(b.1) - 3.0
                );
            }
        }
    }
    legend(
        &mut body,
        xy.left + 10.0,
        h - 8.0,
        &[("#555", "circle: start, square: final position")],
    );
    document(w, h, &body)
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
