//! Static plot of the γ-polygons over the invariant partition.

use std::fmt::Write as _;

use reach_core::engine::ReachResult;
use reach_core::geometry::Polytope;
use reach_core::model::LhaModel;

const WIDTH: f64 = 800.0;
const PALETTE: [&str; 6] = ["#dbe9f6", "#fde2c8", "#d9f0d3", "#f3d4e7", "#fff2b3", "#e0e0e0"];

pub fn render(model: &LhaModel, result: &ReachResult) -> String {
    let b = model.state_box();
    let (x0, y0) = (b.lower()[0], b.lower()[1]);
    let (w, h) = (b.upper()[0] - x0, b.upper()[1] - y0);
    let scale = WIDTH / w;
    let height = h * scale;
    // SVG y grows downward.
    let tx = |x: f64, y: f64| ((x - x0) * scale, (b.upper()[1] - y) * scale);
    let points = |p: &Polytope| {
        p.vertices()
            .iter()
            .map(|v| {
                let (x, y) = tx(v.x, v.y);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height:.3}" viewBox="0 0 {WIDTH} {height:.3}">"#
    );
    for (i, loc) in model.locations().iter().enumerate() {
        let fill = PALETTE[i % PALETTE.len()];
        for &c in &loc.invariant_cells {
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="{fill}" stroke="#888" stroke-width="1"><title>{}</title></polygon>"##,
                points(&model.cells()[c].polytope),
                loc.name
            );
        }
    }
    let _ = writeln!(s, r##"<g fill="none" stroke="#c0392b" stroke-width="0.6">"##);
    for step in &result.steps {
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, points(&step.d_hat_gamma));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g fill="#1f4e79" stroke="none">"##);
    for tr in result.transitions() {
        let c = tr.j_hat.vertex_mean();
        let (x, y) = tx(c.x, c.y);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3"><title>jump {}</title></circle>"#, tr.jump);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
