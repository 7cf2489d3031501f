use std::fmt::Write;

use crate::runtime::{Phase, RunRecord};
use crate::world::{Scene, Shape};

const PHASES: [(Phase, &str, &str); 4] = [
    (Phase::Unshielded, "unshielded", "#1f77b4"),
    (Phase::Shielded, "shielded", "#ff7f0e"),
    (Phase::Fallback, "fallback", "#d62728"),
    (Phase::PostLoop, "post_loop", "#9467bd"),
];

fn region_fill(name: &str, is_goal: bool) -> &'static str {
    let lower = name.to_ascii_lowercase();
    if is_goal {
        "#ffd92f"
    } else if lower.contains("charger") {
        "#2ca02c"
    } else if lower.contains("forbidden") {
        "#e41a1c"
    } else {
        "#80b1d3"
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Render map, regions and the trajectory. Map meters scale by `scale`
/// pixels with the y axis pointing up. Each phase present in the record
/// yields exactly one polyline.
pub fn render_svg(scene: &Scene, record: &RunRecord, scale: f64) -> String {
    let map = scene.map();
    let (w, h) = map.extent();
    let px = |x: f64| x * scale;
    let py = |y: f64| (h - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.1} {:.1}">"#,
        px(w),
        h * scale,
        px(w),
        h * scale
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{:.1}" height="{:.1}" fill="#ffffff"/>"##,
        px(w),
        h * scale
    );

    let res = map.resolution();
    s.push_str("<g id=\"occupancy\" fill=\"#404040\">\n");
    for row in 0..map.height() {
        for col in 0..map.width() {
            if map.is_occupied(col, row) {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                    px(col as f64 * res),
                    py((row + 1) as f64 * res),
                    res * scale,
                    res * scale
                );
            }
        }
    }
    s.push_str("</g>\n<g id=\"regions\" fill-opacity=\"0.45\">\n");
    let goal = &scene.goal().name;
    for r in scene.regions() {
        let fill = region_fill(&r.name, &r.name == goal);
        let name = escape(&r.name);
        match r.shape {
            Shape::Circle { center, radius } => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{fill}"><title>{name}</title></circle>"#,
                    px(center[0]),
                    py(center[1]),
                    radius * scale
                );
            }
            Shape::Rect { min, max } => {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"><title>{name}</title></rect>"#,
                    px(min[0]),
                    py(max[1]),
                    (max[0] - min[0]) * scale,
                    (max[1] - min[1]) * scale
                );
            }
        }
    }
    s.push_str("</g>\n<g id=\"trajectory\" fill=\"none\" stroke-width=\"3\" stroke-linejoin=\"round\">\n");
    let traj = &record.trajectory;
    for (phase, label, color) in PHASES {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (i, p) in record.phases.iter().enumerate() {
            if *p != phase || i + 1 >= traj.len() {
                continue;
            }
            let a = traj[i].position();
            if pts.last() != Some(&a) {
                pts.push(a);
            }
            pts.push(traj[i + 1].position());
        }
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{label}" stroke="{color}" points="{}"/>"#,
            coords.join(" ")
        );
    }
    s.push_str("</g>\n");
    if let (Some(first), Some(last)) = (traj.first(), traj.last()) {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="#000000"><title>start</title></circle>"##,
            px(first.x),
            py(first.y),
            0.06 * scale
        );
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#000000"><title>end</title></rect>"##,
            px(last.x) - 0.06 * scale,
            py(last.y) - 0.06 * scale,
            0.12 * scale,
            0.12 * scale
        );
    }
    s.push_str("</svg>\n");
    s
}
