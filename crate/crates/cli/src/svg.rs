//! Minimal SVG line rendering: axes, up to two polyline curves, a caption.
//! Data files are the primary artifact; this is just for a quick look.

/// Render one or two curves against a shared x-axis.
pub fn render_curves(
    title: &str,
    x_label: &str,
    series: &[(&str, &[(f64, f64)])],
) -> Result<String, String> {
    if series.is_empty() || series.len() > 2 {
        return Err("svg rendering supports one or two curves".into());
    }
    let (w, h) = (800.0, 500.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if pts.len() < 2 {
        return Err("nothing to plot".into());
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let sx = (w - ml - mr) / (x1 - x0);
    let sy = (h - mt - mb) / (y1 - y0);
    let px = |x: f64| ml + (x - x0) * sx;
    let py = |y: f64| h - mb - (y - y0) * sy;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        escape(title)
    ));
    // axes
    out.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    // zero line when visible
    if y0 < 0.0 && y1 > 0.0 {
        out.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#bbbbbb\" \
             stroke-dasharray=\"4 3\"/>\n",
            py(0.0),
            w - mr
        ));
    }
    // ticks
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{:.4}</text>\n",
            px(x),
            h - mb + 18.0,
            x
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{:.4}</text>\n",
            ml - 6.0,
            py(y) + 4.0,
            y
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        h - 14.0,
        escape(x_label)
    ));
    let colors = ["#c03030", "#3050c0"];
    for (k, (name, pts)) in series.iter().enumerate() {
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            path.join(" "),
            colors[k]
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{}\">{}</text>\n",
            ml + 10.0,
            mt + 18.0 + 16.0 * k as f64,
            colors[k],
            escape(name)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
