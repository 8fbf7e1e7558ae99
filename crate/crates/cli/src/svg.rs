//! Minimal native SVG histograms. Bars, axes, and tick labels are
//! emitted as plain SVG primitives so the toolchain carries no plotting
//! dependency; the numbers behind every figure are always written to a
//! CSV alongside, so the SVG is presentation only.

const WIDTH: u32 = 640;
const HEIGHT: u32 = 400;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 58.0;
const BAR_FILL: &str = "#4878a8";
const AXIS_STROKE: &str = "#333333";

/// Histogram an unsorted value list into `bins` uniform bins and render
/// it. Fails on an empty list, a non-finite value, or `bins == 0`.
pub fn histogram_from_values(
    title: &str,
    x_label: &str,
    values: &[f64],
    bins: usize,
) -> Result<String, String> {
    if values.is_empty() {
        return Err("histogram needs at least one value".into());
    }
    if bins == 0 {
        return Err("histogram needs at least one bin".into());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("histogram values must all be finite".into());
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let mut counts = vec![0u64; bins];
    let width = hi - lo;
    for &v in values {
        let idx = (((v - lo) / width) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(histogram_from_counts(title, x_label, lo, hi, &counts))
}

/// Render an already-binned histogram over the range `[lo, hi]`.
pub fn histogram_from_counts(
    title: &str,
    x_label: &str,
    lo: f64,
    hi: f64,
    counts: &[u64],
) -> String {
    let plot_w = WIDTH as f64 - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT as f64 - MARGIN_TOP - MARGIN_BOTTOM;
    let x0 = MARGIN_LEFT;
    let y1 = MARGIN_TOP + plot_h;
    let max_count = counts.iter().copied().max().unwrap_or(0).max(1);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"13\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH as f64 / 2.0,
        escape(title)
    ));

    let n = counts.len();
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let bw = plot_w / n as f64;
        let bx = x0 + i as f64 * bw;
        let bh = plot_h * c as f64 / max_count as f64;
        out.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
            bx,
            y1 - bh,
            bw,
            bh,
            BAR_FILL
        ));
    }

    out.push_str(&format!(
        "  <line x1=\"{x0:.1}\" y1=\"{y1:.1}\" x2=\"{:.1}\" y2=\"{y1:.1}\" stroke=\"{AXIS_STROKE}\"/>\n",
        x0 + plot_w
    ));
    out.push_str(&format!(
        "  <line x1=\"{x0:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"{AXIS_STROKE}\"/>\n"
    ));

    for (frac, v) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
        let tx = x0 + frac * plot_w;
        out.push_str(&format!(
            "  <line x1=\"{tx:.1}\" y1=\"{y1:.1}\" x2=\"{tx:.1}\" y2=\"{:.1}\" stroke=\"{AXIS_STROKE}\"/>\n",
            y1 + 5.0
        ));
        out.push_str(&format!(
            "  <text x=\"{tx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v:.4}</text>\n",
            y1 + 22.0
        ));
    }

    for (frac, c) in [(0.0, 0u64), (1.0, max_count)] {
        let ty = y1 - frac * plot_h;
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{c}</text>\n",
            x0 - 8.0,
            ty + 4.0
        ));
    }

    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        x0 + plot_w / 2.0,
        HEIGHT as f64 - 14.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "  <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">count</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
