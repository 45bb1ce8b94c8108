//! Minimal SVG rendering of performance profiles: axes, step curves and a
//! legend.

use std::fmt::Write as _;

use dnn_approx::metrics::PerfProfileCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Right end of the x axis: a little past the largest finite ratio.
pub fn x_extent(curves: &[PerfProfileCurve]) -> f64 {
    let max = curves
        .iter()
        .flat_map(|c| c.ratios.iter().copied())
        .fold(1.0_f64, f64::max);
    (max * 1.1).max(2.0)
}

pub fn render_profile(curves: &[PerfProfileCurve], title: &str) -> String {
    let x_max = x_extent(curves);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - 1.0) / (x_max - 1.0) * plot_w;
    let py = |y: f64| TOP + (1.0 - y) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let y = f64::from(i) / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{LEFT}" y2="{:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
            LEFT - 4.0,
            py(y),
            py(y),
            LEFT - 7.0,
            py(y) + 4.0
        );
    }
    for i in 0..=5 {
        let x = 1.0 + (x_max - 1.0) * f64::from(i) / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.2}</text>"#,
            px(x),
            TOP + plot_h,
            px(x),
            TOP + plot_h + 4.0,
            px(x),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">at most x times the best</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">fraction of problems</text>"#,
        TOP + plot_h / 2.0
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let steps = curve.steps();
        let mut d = String::new();
        let _ = write!(d, "M{:.2},{:.2}", px(1.0), py(steps[0].1));
        for &(x, y) in &steps[1..] {
            let _ = write!(d, " H{:.2} V{:.2}", px(x), py(y));
        }
        let _ = write!(d, " H{:.2}", px(x_max));
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            escape(&curve.solver)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Step corners as `solver,x,y` rows.
pub fn profile_csv(curves: &[PerfProfileCurve]) -> String {
    let mut s = String::from("solver,x,y\n");
    for c in curves {
        for (x, y) in c.steps() {
            let _ = writeln!(s, "{},{x},{y}", c.solver);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use dnn_approx::metrics::performance_profile;

    #[test]
    fn one_path_per_solver_and_escaped_names() {
        let names = vec!["a<b".to_string(), "c".to_string()];
        let curves = performance_profile(&names, &[vec![Some(1.0), Some(4.0)], vec![Some(2.0), None]]).unwrap();
        let svg = render_profile(&curves, "t");
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn csv_lists_step_corners() {
        let names = vec!["a".to_string(), "b".to_string()];
        let curves = performance_profile(&names, &[vec![Some(1.0), Some(2.0)], vec![Some(2.0), Some(1.0)]]).unwrap();
        assert_eq!(profile_csv(&curves), "solver,x,y\na,1,0.5\na,2,1\nb,1,0.5\nb,2,1\n");
    }
}
