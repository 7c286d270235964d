//! Small dependency-free SVG line charts.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: &str, color: &str, x: &[f64], y: &[f64]) -> Self {
        Self {
            name: name.into(),
            color: color.into(),
            points: x.iter().copied().zip(y.iter().copied()).collect(),
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// Shaded region between two curves sharing the same x values.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub color: String,
    pub x: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    pub width: f64,
    pub height: f64,
}

const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= n as f64).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: vec![],
            bands: vec![],
            width: 720.0,
            height: 360.0,
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(self.bands.iter().flat_map(|b| b.x.iter().copied()));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.bands.iter().flat_map(|b| b.low.iter().chain(&b.high).copied()));
        let fold = |it: &mut dyn Iterator<Item = f64>| {
            it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        };
        let (x0, x1) = fold(&mut xs.into_iter());
        let (y0, y1) = fold(&mut ys.into_iter());
        let (x0, x1) = if x0.is_finite() { (x0, if x1 > x0 { x1 } else { x0 + 1.0 }) } else { (0.0, 1.0) };
        let (y0, y1) = if y0.is_finite() {
            let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.5 * y0.abs().max(1.0) };
            (y0 - pad, y1 + pad)
        } else {
            (0.0, 1.0)
        };
        (x0, x1, y0, y1)
    }

    /// Renders the chart. Output depends only on the chart contents.
    pub fn to_svg(&self) -> String {
        let (l, r, t, b) = MARGIN;
        let (w, h) = (self.width, self.height);
        let (pw, ph) = (w - l - r, h - t - b);
        let (x0, x1, y0, y1) = self.bounds();
        let sx = |x: f64| l + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| t + ph - (y - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        );
        for tx in nice_ticks(x0, x1, 8) {
            let x = sx(tx);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{t:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/>"##, t + ph);
            let _ =
                writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, t + ph + 15.0, label(tx));
        }
        for ty in nice_ticks(y0, y1, 6) {
            let y = sy(ty);
            let _ = writeln!(s, r##"<line x1="{l:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, l + pw);
            let _ =
                writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 5.0, y + 4.0, label(ty));
        }
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            l + pw / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            t + ph / 2.0,
            t + ph / 2.0,
            escape(&self.y_label)
        );
        for band in &self.bands {
            let mut d = String::new();
            for (i, (x, y)) in band.x.iter().zip(&band.high).enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(*y));
            }
            for (x, y) in band.x.iter().zip(&band.low).rev() {
                let _ = write!(d, "L{:.2},{:.2} ", sx(*x), sy(*y));
            }
            let _ = writeln!(s, r#"<path d="{}Z" fill="{}" fill-opacity="0.25" stroke="none"/>"#, d, band.color);
        }
        for series in &self.series {
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if series.dashed { r#" stroke-dasharray="6 3""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.join(" "),
                series.color
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let y = t + 14.0 + 14.0 * i as f64;
            let x = l + pw - 150.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
                y - 4.0,
                x + 20.0,
                y - 4.0,
                series.color
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 25.0, escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let mut c = Chart::new("P_im <truth>", "t [s]", "Pa");
        c.series.push(Series::new("truth", "black", &x, &y));
        c.series.push(Series::new("pred", "red", &x, &y.iter().map(|v| v * 0.9).collect::<Vec<_>>()).dashed());
        c.bands.push(Band {
            color: "red".into(),
            x: x.clone(),
            low: y.iter().map(|v| v - 0.1).collect(),
            high: y.iter().map(|v| v + 0.1).collect(),
        });
        c
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = chart().to_svg();
        assert_eq!(a, chart().to_svg());
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("&lt;truth&gt;"));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert!(nice_ticks(101300.0, 250000.0, 6).iter().all(|t| t % 10000.0 == 0.0));
    }

    #[test]
    fn empty_chart_renders() {
        let c = Chart::new("empty", "x", "y");
        assert!(c.to_svg().contains("</svg>"));
    }
}
