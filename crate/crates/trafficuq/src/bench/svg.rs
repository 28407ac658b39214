//! Minimal self-contained SVG charts: interval bands, calibration curves
//! and box plots. No external plotting dependency.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

struct Scale {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, lo_px: f64, hi_px: f64) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            min = 0.0;
            max = 1.0;
        }
        if max - min < 1e-12 {
            max = min + 1.0;
        }
        Self {
            min,
            max,
            lo_px,
            hi_px,
        }
    }

    fn fixed(min: f64, max: f64, lo_px: f64, hi_px: f64) -> Self {
        Self {
            min,
            max,
            lo_px,
            hi_px,
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.lo_px + (v - self.min) / (self.max - self.min) * (self.hi_px - self.lo_px)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(x: &Scale, y: &Scale, x_label: &str, y_label: &str) -> String {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let mut out = format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x.min + f * (x.max - x.min);
        let yv = y.min + f * (y.max - y.min);
        let xp = x.px(xv);
        let yp = y.px(yv);
        out.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{y0}\" x2=\"{xp}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{xv:.3}</text>\n\
             <line x1=\"{x0}\" y1=\"{yp}\" x2=\"{}\" y2=\"{yp}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{yv:.3}</text>\n",
            y0 + 5.0,
            y0 + 20.0,
            x0 - 5.0,
            x0 - 8.0,
            yp + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    ));
    out
}

fn polyline(points: &[(f64, f64)], color: &str, dash: Option<&str>) -> String {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = dash.map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>\n",
        pts.join(" ")
    )
}

/// Interval-band chart: shaded [lower, upper] band, forecast line and
/// observed points over a sample index axis.
pub fn band_chart(
    title: &str,
    y_true: &[f64],
    y_hat: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> String {
    let n = y_true.len();
    let x = Scale::fixed(0.0, (n.max(2) - 1) as f64, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Scale::new(
        y_true
            .iter()
            .chain(lower)
            .chain(upper)
            .chain(y_hat)
            .copied(),
        HEIGHT - MARGIN_BOTTOM,
        MARGIN_TOP,
    );
    let mut svg = header(title);
    svg.push_str(&axes(&x, &y, "sample", "flow (veh/h)"));

    let mut band: Vec<String> = Vec::with_capacity(2 * n);
    for (i, u) in upper.iter().enumerate() {
        band.push(format!("{:.2},{:.2}", x.px(i as f64), y.px(*u)));
    }
    for (i, l) in lower.iter().enumerate().rev() {
        band.push(format!("{:.2},{:.2}", x.px(i as f64), y.px(*l)));
    }
    svg.push_str(&format!(
        "<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n",
        band.join(" ")
    ));
    let line_pts = |vals: &[f64]| -> Vec<(f64, f64)> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| (x.px(i as f64), y.px(*v)))
            .collect()
    };
    svg.push_str(&polyline(&line_pts(y_hat), "#08519c", None));
    for (i, v) in y_true.iter().enumerate() {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.8\" fill=\"#d62728\"/>\n",
            x.px(i as f64),
            y.px(*v)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Calibration chart: observed coverage against nominal confidence, with
/// the identity as reference.
pub fn calibration_chart(title: &str, confidence: &[f64], coverage: &[f64]) -> String {
    let x = Scale::fixed(0.0, 1.0, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Scale::fixed(0.0, 1.0, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let mut svg = header(title);
    svg.push_str(&axes(&x, &y, "nominal confidence", "observed coverage"));
    svg.push_str(&polyline(
        &[(x.px(0.0), y.px(0.0)), (x.px(1.0), y.px(1.0))],
        "#999999",
        Some("4 4"),
    ));
    let pts: Vec<(f64, f64)> = confidence
        .iter()
        .zip(coverage)
        .map(|(c, cov)| (x.px(*c), y.px(*cov)))
        .collect();
    svg.push_str(&polyline(&pts, "#08519c", None));
    for (px, py) in &pts {
        svg.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"#08519c\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let q = |f: f64| {
        let idx = ((f * sorted.len() as f64).ceil() as usize).max(1) - 1;
        sorted[idx.min(sorted.len() - 1)]
    };
    (q(0.25), q(0.5), q(0.75))
}

/// Box plot over labeled groups (median, quartile box, min/max whiskers).
pub fn box_plot(title: &str, y_label: &str, groups: &[(String, Vec<f64>)]) -> String {
    let y = Scale::new(
        groups.iter().flat_map(|(_, v)| v.iter().copied()),
        HEIGHT - MARGIN_BOTTOM,
        MARGIN_TOP,
    );
    let x = Scale::fixed(
        0.0,
        groups.len() as f64,
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );
    let mut svg = header(title);
    svg.push_str(&axes(&x, &y, "", y_label));
    let half_width = ((x.px(1.0) - x.px(0.0)) * 0.3).min(40.0);
    for (k, (label, values)) in groups.iter().enumerate() {
        if values.is_empty() {
            continue;
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let (q1, q2, q3) = quartiles(&sorted);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let cx = x.px(k as f64 + 0.5);
        svg.push_str(&format!(
            "<line x1=\"{cx}\" y1=\"{:.2}\" x2=\"{cx}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
             <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#9ecae1\" stroke=\"black\"/>\n\
             <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"2\"/>\n\
             <text x=\"{cx}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            y.px(lo),
            y.px(hi),
            cx - half_width,
            y.px(q3),
            2.0 * half_width,
            (y.px(q1) - y.px(q3)).abs().max(1.0),
            cx - half_width,
            y.px(q2),
            cx + half_width,
            y.px(q2),
            HEIGHT - MARGIN_BOTTOM + 20.0,
            escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
