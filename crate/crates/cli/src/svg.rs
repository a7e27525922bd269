//! Minimal SVG line and scatter charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub log_x: bool,
    pub log_y: bool,
    pub scatter: bool,
    pub title: String,
    pub x_label: String,
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Some(Axis { lo, hi, log })
    }

    /// Position in `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Five evenly spaced ticks, or powers of ten on log axes.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|e| 10f64.powi(e)).collect();
            }
            return vec![10f64.powf(self.lo), 10f64.powf(self.hi)];
        }
        (0..5).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Draws `series` on shared axes. Non-finite points, and non-positive ones on
/// log axes, are dropped. `None` when nothing is left to draw.
pub fn render(series: &[Series], opts: &PlotOptions) -> Option<String> {
    let keep = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (!opts.log_x || x > 0.0) && (!opts.log_y || y > 0.0)
    };
    let series: Vec<(&str, Vec<(f64, f64)>)> =
        series.iter().map(|s| (s.name.as_str(), s.points.iter().copied().filter(keep).collect())).collect();
    let all = || series.iter().flat_map(|(_, p)| p.iter().copied());
    let xa = Axis::fit(all().map(|p| p.0), opts.log_x)?;
    let ya = Axis::fit(all().map(|p| p.1), opts.log_y)?;

    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let px = |x: f64| ml + xa.unit(x) * pw;
    let py = |y: f64| mt + (1.0 - ya.unit(y)) * ph;

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(&opts.title));
    let _ = writeln!(w, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, mt + ph, mt + ph + 5.0);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, mt + ph + 18.0, label(t));
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(w, r#"<line x1="{}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/>"#, ml - 5.0);
        let _ = writeln!(w, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, HEIGHT - 10.0, escape(&opts.x_label));

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if opts.scatter {
            for &(x, y) in pts {
                let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, px(x), py(y));
            }
        } else if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(w, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        let ly = mt + 14.0 + 14.0 * i as f64;
        let _ = writeln!(w, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, ml + pw - 130.0, ly - 9.0);
        let _ = writeln!(w, r#"<text x="{}" y="{ly}">{}</text>"#, ml + pw - 115.0, escape(name));
    }
    let _ = writeln!(w, "</svg>");
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_lines_and_drops_bad_points() {
        let s = Series { name: "a<b".into(), points: vec![(1.0, 1.0), (10.0, 100.0), (0.0, 5.0), (f64::NAN, 1.0)] };
        let svg = render(&[s], &PlotOptions { log_x: true, log_y: true, ..Default::default() }).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("a&lt;b"));
        // Two kept points in the polyline.
        let line = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        assert_eq!(line.split("points=\"").nth(1).unwrap().split(' ').count(), 2);
    }

    #[test]
    fn nothing_to_draw() {
        let s = Series { name: "a".into(), points: vec![(-1.0, 1.0)] };
        assert!(render(&[s], &PlotOptions { log_x: true, ..Default::default() }).is_none());
    }

    #[test]
    fn flat_series_gets_a_range() {
        let s = Series { name: "a".into(), points: vec![(0.0, 2.0), (1.0, 2.0)] };
        let svg = render(&[s], &PlotOptions { scatter: true, ..Default::default() }).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
