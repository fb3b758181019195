//! Self-contained SVG line charts (inline styles, fixed 800×500 view box).

use std::fmt::Write;

use crate::becbsc::SweepRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

/// One polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

/// A chart with shared axes.
#[derive(Clone, Debug, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Range padded so a flat series still gets a visible band.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5 * lo.abs().max(1e-3), hi + 0.5 * hi.abs().max(1e-3));
    }
    (lo, hi)
}

impl LineChart {
    pub fn render(&self) -> String {
        let (x0, x1) = range(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let (mut y0, y1) = range(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        if y0 > 0.0 {
            y0 = 0.0;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="13">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        for i in 0..=TICKS {
            let f = i as f64 / TICKS as f64;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (px, py) = (sx(xv), sy(yv));
            let _ = writeln!(
                out,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"##,
                TOP + ph,
                TOP + ph + 20.0
            );
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.4}</text>"##,
                LEFT + pw,
                LEFT - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 20.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="15" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if s.dashed {
                r#" stroke-dasharray="8 5""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
                escape(&s.color),
                pts.join(" ")
            );
            let ly = TOP + 20.0 + 20.0 * k as f64;
            let lx = LEFT + pw - 190.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 30.0,
                escape(&s.color),
                lx + 38.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Inner and outer eavesdropper distortion against `p`.
pub fn curve_chart(rows: &[SweepRow], alpha: f64, beta: f64) -> String {
    LineChart {
        title: format!("Eavesdropper distortion, α = {alpha}, β = {beta}"),
        x_label: "p".into(),
        y_label: "D_w".into(),
        series: vec![
            Series {
                name: "inner bound".into(),
                color: "#1f5fbf".into(),
                dashed: false,
                points: rows.iter().map(|r| (r.p, r.inner_dw)).collect(),
            },
            Series {
                name: "outer bound".into(),
                color: "#c0392b".into(),
                dashed: true,
                points: rows.iter().map(|r| (r.p, r.outer_dw)).collect(),
            },
        ],
    }
    .render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_view_box_and_labels() {
        let chart = LineChart {
            title: "t <1>".into(),
            x_label: "p".into(),
            y_label: "D_w".into(),
            series: vec![Series {
                name: "a".into(),
                color: "black".into(),
                dashed: false,
                points: vec![(0.0, 0.0), (0.5, 0.1), (1.0, 0.0)],
            }],
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"viewBox="0 0 800 500""#));
        assert!(svg.contains(">p</text>") && svg.contains(">D_w</text>"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn flat_and_empty_series_render() {
        let flat = LineChart {
            title: String::new(),
            x_label: "p".into(),
            y_label: "D_w".into(),
            series: vec![Series {
                name: "zero".into(),
                color: "red".into(),
                dashed: true,
                points: vec![(0.0, 0.0), (1.0, 0.0)],
            }],
        };
        assert!(!flat.render().contains("NaN"));
        let empty = LineChart {
            series: vec![],
            ..flat
        };
        assert!(empty.render().ends_with("</svg>\n"));
    }
}
