//! Minimal SVG chart emission: precision/recall line charts and grouped
//! histograms with kernel-density overlays. Plain text output keeps the
//! plots diffable.

use std::fmt::Write as _;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 52.0;

struct Frame {
    width: f64,
    height: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (self.width - MARGIN_L - MARGIN_R)
    }
    fn py(&self, y: f64) -> f64 {
        self.height
            - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (self.height - MARGIN_T - MARGIN_B)
    }
}

fn axes(svg: &mut String, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    let (w, h) = (frame.width, frame.height);
    let _ = write!(
        svg,
        "<rect x='0' y='0' width='{w}' height='{h}' fill='white'/>\
         <text x='{tx}' y='24' font-size='15' text-anchor='middle' font-family='sans-serif'>{title}</text>",
        tx = MARGIN_L + (w - MARGIN_L - MARGIN_R) / 2.0,
    );
    // Axis lines.
    let _ = write!(
        svg,
        "<line x1='{l}' y1='{b}' x2='{r}' y2='{b}' stroke='black'/>\
         <line x1='{l}' y1='{t}' x2='{l}' y2='{b}' stroke='black'/>",
        l = MARGIN_L,
        r = w - MARGIN_R,
        t = MARGIN_T,
        b = h - MARGIN_B,
    );
    // Ticks.
    for i in 0..=5 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / 5.0;
        let fy = frame.y_min + (frame.y_max - frame.y_min) * i as f64 / 5.0;
        let (px, py) = (frame.px(fx), frame.py(fy));
        let _ = write!(
            svg,
            "<line x1='{px}' y1='{b}' x2='{px}' y2='{b2}' stroke='black'/>\
             <text x='{px}' y='{ty}' font-size='11' text-anchor='middle' font-family='sans-serif'>{fx:.1}</text>\
             <line x1='{l}' y1='{py}' x2='{l2}' y2='{py}' stroke='black'/>\
             <text x='{lx}' y='{lyy}' font-size='11' text-anchor='end' font-family='sans-serif'>{fy:.1}</text>",
            b = frame.height - MARGIN_B,
            b2 = frame.height - MARGIN_B + 5.0,
            ty = frame.height - MARGIN_B + 18.0,
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            lx = MARGIN_L - 8.0,
            lyy = py + 4.0,
        );
    }
    let _ = write!(
        svg,
        "<text x='{cx}' y='{by}' font-size='12' text-anchor='middle' font-family='sans-serif'>{x_label}</text>\
         <text x='16' y='{cy}' font-size='12' text-anchor='middle' font-family='sans-serif' transform='rotate(-90 16 {cy})'>{y_label}</text>",
        cx = MARGIN_L + (w - MARGIN_L - MARGIN_R) / 2.0,
        by = h - 14.0,
        cy = MARGIN_T + (h - MARGIN_T - MARGIN_B) / 2.0,
    );
}

fn legend(svg: &mut String, frame: &Frame, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 8.0 + i as f64 * 17.0;
        let x = frame.width - MARGIN_R + 12.0;
        let _ = write!(
            svg,
            "<line x1='{x}' y1='{y}' x2='{x2}' y2='{y}' stroke='{color}' stroke-width='2'/>\
             <text x='{tx}' y='{ty}' font-size='11' font-family='sans-serif'>{name}</text>",
            x2 = x + 18.0,
            tx = x + 24.0,
            ty = y + 4.0,
        );
    }
}

/// Multi-series line chart (e.g. one precision/recall curve per class).
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let frame = Frame {
        width: 720.0,
        height: 460.0,
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut svg = format!(
        "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 {} {}'>",
        frame.width, frame.height
    );
    axes(&mut svg, &frame, title, x_label, y_label);
    for (i, (_, points)) in series.iter().enumerate() {
        if points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if j == 0 { "M" } else { "L" },
                frame.px(x.clamp(0.0, 1.0)),
                frame.py(y.clamp(0.0, 1.0))
            );
        }
        let _ = write!(
            svg,
            "<path d='{}' fill='none' stroke='{color}' stroke-width='1.6'/>",
            d.trim_end()
        );
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    legend(&mut svg, &frame, &names);
    svg.push_str("</svg>\n");
    svg
}

/// Gaussian KDE with Silverman's bandwidth, evaluated on a uniform grid.
fn kde(values: &[f64], x_min: f64, x_max: f64, points: usize) -> Vec<(f64, f64)> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let h = (1.06 * sd * n.powf(-0.2)).max(1e-6);
    (0..points)
        .map(|i| {
            let x = x_min + (x_max - x_min) * i as f64 / (points - 1) as f64;
            let density = values
                .iter()
                .map(|&v| {
                    let u = (x - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                / (n * h * (2.0 * std::f64::consts::PI).sqrt());
            (x, density)
        })
        .collect()
}

/// One overlaid histogram panel per group, with KDE curves, as an SVG
/// `<g>` fragment offset to `ox`.
fn histogram_panel(
    svg: &mut String,
    ox: f64,
    title: &str,
    x_label: &str,
    groups: &[(String, Vec<f64>)],
    bin_width: f64,
) -> Option<()> {
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    if all.is_empty() {
        return None;
    }
    let x_min = 0.0f64;
    let x_max_raw = all.iter().cloned().fold(f64::MIN, f64::max);
    let n_bins = ((x_max_raw / bin_width).floor() as usize + 1).max(1);
    let x_max = n_bins as f64 * bin_width;

    let mut binned: Vec<Vec<usize>> = Vec::new();
    let mut peak = 0usize;
    for (_, values) in groups {
        let mut bins = vec![0usize; n_bins];
        for &v in values {
            let b = ((v / bin_width) as usize).min(n_bins - 1);
            bins[b] += 1;
        }
        peak = peak.max(bins.iter().copied().max().unwrap_or(0));
        binned.push(bins);
    }

    let frame = Frame {
        width: 720.0,
        height: 460.0,
        x_min,
        x_max,
        y_min: 0.0,
        y_max: peak.max(1) as f64 * 1.12,
    };
    let _ = write!(svg, "<g transform='translate({ox} 0)'>");
    axes(svg, &frame, title, x_label, "count");
    for (gi, bins) in binned.iter().enumerate() {
        let color = PALETTE[gi % PALETTE.len()];
        for (bi, &count) in bins.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let x0 = frame.px(bi as f64 * bin_width);
            let x1 = frame.px((bi + 1) as f64 * bin_width);
            let y = frame.py(count as f64);
            let _ = write!(
                svg,
                "<rect x='{x0:.2}' y='{y:.2}' width='{w:.2}' height='{h:.2}' fill='{color}' fill-opacity='0.35'/>",
                w = x1 - x0,
                h = frame.py(0.0) - y,
            );
        }
        // KDE overlay scaled to histogram counts (density * n * bin_width).
        let values = &groups[gi].1;
        if values.len() > 1 {
            let curve = kde(values, x_min, x_max, 160);
            let scale = values.len() as f64 * bin_width;
            let mut d = String::new();
            for (j, &(x, density)) in curve.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2} ",
                    if j == 0 { "M" } else { "L" },
                    frame.px(x),
                    frame.py((density * scale).min(frame.y_max))
                );
            }
            let _ = write!(
                svg,
                "<path d='{}' fill='none' stroke='{color}' stroke-width='2'/>",
                d.trim_end()
            );
        }
    }
    let names: Vec<&str> = groups.iter().map(|(n, _)| n.as_str()).collect();
    legend(svg, &frame, &names);
    svg.push_str("</g>");
    Some(())
}

/// One distribution panel: title, x label, bin width, per-group values.
pub type DistPanel = (String, String, f64, Vec<(String, Vec<f64>)>);

/// Two-panel distribution figure: one histogram panel per metric, each
/// split by group (e.g. gender), with KDE curves.
pub fn distribution_figure(panels: &[DistPanel]) -> String {
    let panel_w = 720.0;
    let mut svg = format!(
        "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 {} 460'>",
        panel_w * panels.len() as f64
    );
    for (i, (title, x_label, bin_width, groups)) in panels.iter().enumerate() {
        histogram_panel(&mut svg, i as f64 * panel_w, title, x_label, groups, *bin_width);
    }
    svg.push_str("</svg>\n");
    svg
}
