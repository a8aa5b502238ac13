//! Self-contained SVG 1.1 rendering of a styled layout.

use std::fmt::Write;

use pednet_core::layout::LayoutNodeKind;
use pednet_core::PedigreeNet;
use pednet_service::LayoutView;

const MARGIN: f64 = 40.0;
const EDGE_STROKE: &str = "#9E9E9E";
const LEGEND_ROW: f64 = 18.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Edges as polylines through their dummy points, lines as circles titled
/// with the display name, legend swatches top right.
pub fn render(view: &LayoutView, net: &PedigreeNet) -> String {
    let xs = view.nodes.iter().map(|n| n.x);
    let ys = view.nodes.iter().map(|n| n.y);
    let (min_x, max_x) = xs.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (min_y, max_y) = ys.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let legend_width = if view.legend.is_empty() { 0.0 } else { 200.0 };
    let width = max_x - min_x + 2.0 * MARGIN + legend_width;
    let height = (max_y - min_y + 2.0 * MARGIN).max(view.legend.len() as f64 * LEGEND_ROW + 2.0 * MARGIN);
    let (ox, oy) = (MARGIN - min_x, MARGIN - min_y);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(s, r#"<g class="edges" fill="none" stroke="{EDGE_STROKE}" stroke-width="1">"#);
    for e in &view.edges {
        let points: Vec<String> = e
            .points
            .iter()
            .map(|[x, y]| format!("{:.2},{:.2}", x + ox, y + oy))
            .collect();
        let _ = writeln!(s, r#"<polyline id="{}" points="{}"/>"#, escape(&e.id), points.join(" "));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g class="lines" stroke="#424242" stroke-width="0.5">"##);
    for n in &view.nodes {
        let LayoutNodeKind::Line { line } = &n.kind else {
            continue;
        };
        let name = net.line(line).map_or(line.as_str(), |l| l.name.as_str());
        let fill = n.color.map(|c| c.to_string()).unwrap_or_default();
        let stroke = if n.highlight { r##" stroke="#000000" stroke-width="2""## } else { "" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{fill}"{stroke}><title>{}</title></circle>"#,
            n.x + ox,
            n.y + oy,
            n.size.unwrap_or(0.0),
            escape(name)
        );
    }
    let _ = writeln!(s, "</g>");
    if !view.legend.is_empty() {
        let lx = max_x - min_x + 2.0 * MARGIN;
        let _ = writeln!(s, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
        for (i, entry) in view.legend.iter().enumerate() {
            let y = MARGIN + i as f64 * LEGEND_ROW;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.2}" y="{y:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                entry.color,
                lx + 18.0,
                y + 10.0,
                escape(&entry.label)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
