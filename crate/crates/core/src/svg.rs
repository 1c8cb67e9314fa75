//! Minimal SVG heatmaps with a diverging color scale centered at zero.

use std::fmt::Write;

const CELL: f64 = 28.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const LEGEND_WIDTH: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_ticks: Vec<f64>,
    pub y_ticks: Vec<f64>,
    /// `values[row][col]`, rows follow `y_ticks`.
    pub values: Vec<Vec<f64>>,
}

/// Blue for negative, white at zero, red for positive.
pub fn diverging_color(value: f64, max_abs: f64) -> String {
    let t = if max_abs > 0.0 && value.is_finite() {
        (value / max_abs).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
    let (r, g, b) = if t >= 0.0 {
        (255, fade(t), fade(t))
    } else {
        (fade(t), fade(t), 255)
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl Heatmap {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn render(&self) -> String {
        let cols = self.x_ticks.len();
        let rows = self.y_ticks.len();
        let plot_w = cols as f64 * CELL;
        let plot_h = rows as f64 * CELL;
        let width = LEFT + plot_w + 110.0;
        let height = TOP + plot_h + 60.0;
        let max_abs = self.max_abs();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" font-size="13">{}</text>"#,
            LEFT,
            escape(&self.title)
        );
        for (i, row) in self.values.iter().enumerate() {
            // largest y tick at the top
            let y = TOP + (rows - 1 - i) as f64 * CELL;
            for (j, v) in row.iter().enumerate() {
                let x = LEFT + j as f64 * CELL;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>{}</title></rect>"#,
                    diverging_color(*v, max_abs),
                    crate::io::fmt_num(*v)
                );
            }
        }
        for (j, t) in self.x_ticks.iter().enumerate() {
            let x = LEFT + (j as f64 + 0.5) * CELL;
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
                TOP + plot_h + 14.0,
                tick(*t)
            );
        }
        for (i, t) in self.y_ticks.iter().enumerate() {
            let y = TOP + (rows - 1 - i) as f64 * CELL + CELL / 2.0 + 3.0;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                tick(*t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            TOP + plot_h + 34.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );
        self.legend(&mut s, LEFT + plot_w + 20.0, plot_h.max(CELL * 3.0), max_abs);
        s.push_str("</svg>\n");
        s
    }

    fn legend(&self, s: &mut String, x: f64, h: f64, max_abs: f64) {
        let steps = 20;
        let step_h = h / steps as f64;
        for k in 0..steps {
            let v = max_abs * (1.0 - 2.0 * (k as f64 + 0.5) / steps as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{}" width="{LEGEND_WIDTH}" height="{step_h}" fill="{}"/>"#,
                TOP + k as f64 * step_h,
                diverging_color(v, max_abs)
            );
        }
        let lx = x + LEGEND_WIDTH + 4.0;
        for (y, v) in [(TOP + 8.0, max_abs), (TOP + h / 2.0 + 3.0, 0.0), (TOP + h, -max_abs)] {
            let _ = writeln!(s, r#"<text x="{lx}" y="{y}">{}</text>"#, legend_label(v));
        }
    }
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn legend_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors_center_on_white() {
        assert_eq!(diverging_color(0.0, 1.0), "#ffffff");
        assert_eq!(diverging_color(1.0, 1.0), "#ff0000");
        assert_eq!(diverging_color(-2.0, 1.0), "#0000ff");
        assert_eq!(diverging_color(0.5, 0.0), "#ffffff");
    }

    #[test]
    fn renders_grid_and_legend() {
        let map = Heatmap {
            title: "gap <set 1>".into(),
            x_label: "loading".into(),
            y_label: "variables per factor".into(),
            x_ticks: vec![0.25, 0.5],
            y_ticks: vec![2.0, 3.0, 4.0],
            values: vec![vec![0.1, -0.1], vec![0.0, 0.2], vec![-0.2, 0.05]],
        };
        let svg = map.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<title>").count(), 6);
        assert!(svg.contains("gap &lt;set 1&gt;"));
        assert!(svg.contains(">2.00e-1<") && svg.contains(">-2.00e-1<"));
        assert_eq!(svg, map.render());
    }
}
