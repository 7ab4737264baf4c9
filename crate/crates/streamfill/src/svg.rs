//! Hand-rolled SVG line charts for run reports: skill-vs-rate curves and
//! per-station infill overlays.

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const AXIS_COLOR: &str = "#333333";
const GRID_COLOR: &str = "#e6e6e6";

/// Stable palette; series beyond it cycle.
const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

/// One polyline with a legend entry. Gaps (`None`) break the line.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, Option<f64>)>,
    /// Palette index; `None` picks by series position.
    pub color: Option<usize>,
}

/// Markers drawn as small circles, e.g. the hidden evaluation cells.
pub struct Markers {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a line chart with a right-hand legend.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    markers: Option<&Markers>,
) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            if let Some(y) = y {
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if let Some(m) = markers {
        for &(x, y) in &m.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let y_pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - y_pad, y_max + y_pad);

    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    ));
    svg.push_str(&format!(r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#));
    svg.push_str(&format!(
        r#"<text x="{}" y="28" text-anchor="middle" font-family="sans-serif" font-size="17" font-weight="bold" fill="{AXIS_COLOR}">{}</text>"#,
        WIDTH / 2.0,
        escape_xml(title)
    ));

    // horizontal grid and y ticks
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let y_val = y_min + frac * (y_max - y_min);
        let y = sy(y_val);
        svg.push_str(&format!(
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{GRID_COLOR}" stroke-width="1"/>"#,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11" fill="{AXIS_COLOR}">{}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            fmt_tick(y_val)
        ));
    }
    // x ticks
    for i in 0..=6 {
        let frac = i as f64 / 6.0;
        let x_val = x_min + frac * (x_max - x_min);
        let x = sx(x_val);
        svg.push_str(&format!(
            r#"<text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11" fill="{AXIS_COLOR}">{}</text>"#,
            MARGIN_TOP + plot_h + 20.0,
            fmt_tick(x_val)
        ));
    }

    // axes
    svg.push_str(&format!(
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{AXIS_COLOR}" stroke-width="1.5"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{AXIS_COLOR}" stroke-width="1.5"/>"#,
        MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" fill="{AXIS_COLOR}">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape_xml(x_label)
    ));
    svg.push_str(&format!(
        r#"<text x="20" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" fill="{AXIS_COLOR}" transform="rotate(-90 20 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape_xml(y_label)
    ));

    // series
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[s.color.unwrap_or(i) % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            match y {
                Some(y) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    d.push_str(&format!("{cmd}{:.2},{:.2} ", sx(x), sy(y)));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if !d.is_empty() {
            svg.push_str(&format!(
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                d.trim_end()
            ));
        }
        // legend row
        let ly = MARGIN_TOP + 14.0 + i as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w + 14.0;
        svg.push_str(&format!(
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2.5"/>"#,
            lx + 22.0
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{AXIS_COLOR}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape_xml(&s.name)
        ));
    }

    if let Some(m) = markers {
        for &(x, y) in &m.points {
            svg.push_str(&format!(
                r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="none" stroke="#555555" stroke-width="0.8"/>"##,
                sx(x),
                sy(y)
            ));
        }
        let ly = MARGIN_TOP + 14.0 + series.len() as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w + 14.0;
        svg.push_str(&format!(
            r##"<circle cx="{}" cy="{ly}" r="2.2" fill="none" stroke="#555555" stroke-width="0.8"/>"##,
            lx + 11.0
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{AXIS_COLOR}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape_xml(&m.name)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
