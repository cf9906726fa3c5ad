use std::fmt::Write;

use super::{Geometry, Point};
use crate::tagset::UNLABELED;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

fn points(ps: &[Point]) -> String {
    ps.iter()
        .map(|(x, y)| format!("{},{}", num(*x), num(*y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the geometry as a standalone SVG document. Every token, node
/// label, edge label and link label is exactly one `<text>` element.
/// Output depends only on the geometry.
pub fn render_svg(geo: &Geometry) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = num(geo.width),
        h = num(geo.height)
    );
    out.push_str("<g class=\"edges\" fill=\"none\" stroke=\"black\">\n");
    for e in &geo.edges {
        let _ = writeln!(
            out,
            r#"<polyline class="edge" data-parent="{}" data-child="{}" points="{}"/>"#,
            e.parent,
            e.child,
            points(&e.points)
        );
    }
    out.push_str("</g>\n");

    out.push_str(
        "<g class=\"links\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\">\n",
    );
    for l in &geo.links {
        let _ = writeln!(
            out,
            r#"<polyline class="secondary" data-source="{}" data-target="{}" points="{}"/>"#,
            l.source,
            l.target,
            points(&l.points)
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"nodes\">\n");
    for n in &geo.nodes {
        let _ = writeln!(
            out,
            r#"<rect class="node" data-id="{}" x="{}" y="{}" width="40.0" height="20.0" rx="4.0" fill="white" stroke="black"/>"#,
            n.id,
            num(n.x - 20.0),
            num(n.y - 10.0)
        );
        if n.childless {
            // warning triangle next to the node
            let (x, y) = (n.x + 24.0, n.y - 8.0);
            let _ = writeln!(
                out,
                r#"<polygon class="warning" points="{},{} {},{} {},{}" fill="orange" stroke="red"/>"#,
                num(x),
                num(y + 16.0),
                num(x + 8.0),
                num(y),
                num(x + 16.0),
                num(y + 16.0)
            );
        }
        let _ = writeln!(
            out,
            r#"<text class="node-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(n.x),
            num(n.y + 4.0),
            escape(&n.category)
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"labels\">\n");
    for e in &geo.edges {
        let class = if e.function == UNLABELED {
            "edge-label unlabeled"
        } else {
            "edge-label"
        };
        let _ = writeln!(
            out,
            r#"<text class="{class}" x="{}" y="{}" text-anchor="start">{}</text>"#,
            num(e.label.0 + 3.0),
            num(e.label.1),
            escape(&e.function)
        );
    }
    for l in &geo.links {
        let _ = writeln!(
            out,
            r#"<text class="link-label" x="{}" y="{}" text-anchor="middle" fill="gray">{}</text>"#,
            num(l.label.0),
            num(l.label.1 - 4.0),
            escape(&l.function)
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"tokens\">\n");
    for t in &geo.tokens {
        let _ = writeln!(
            out,
            r#"<text class="token" data-position="{}" x="{x}" y="{}" text-anchor="middle">{}<tspan class="pos" x="{x}" dy="16">{}</tspan></text>"#,
            t.position,
            num(t.y + 16.0),
            escape(&t.form),
            escape(&t.pos),
            x = num(t.x),
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
