//! Hand-rolled SVG rendering of sweep results: one mean-ROC-AUC
//! heatmap per method with contour lines at 0.75 and 0.95, plus a
//! final panel showing the best method per cell. Smoothing grows
//! upward, cluster size to the right.

use wardsel::SweepResult;

const CELL: f64 = 44.0;
const LEFT: f64 = 64.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 46.0;
const GAP: f64 = 26.0;
const CONTOUR_LEVELS: [f64; 2] = [0.75, 0.95];
const METHOD_COLORS: [&str; 5] = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2"];

pub fn render_sweep(result: &SweepResult) -> String {
    let n_c = result.cluster_sizes.len();
    let n_s = result.smoothings.len();
    let panel_w = LEFT + n_c as f64 * CELL + 10.0;
    let legend_h = result.methods.len() as f64 * 18.0 + 12.0;
    let panel_h = TOP + n_s as f64 * CELL + BOTTOM;
    let total_w = (result.methods.len() + 1) as f64 * (panel_w + GAP);
    let total_h = panel_h + legend_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w:.0}\" height=\"{total_h:.0}\" \
         viewBox=\"0 0 {total_w:.1} {total_h:.1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{total_w:.1}\" height=\"{total_h:.1}\" fill=\"white\"/>\n"
    ));

    for (mi, &method) in result.methods.iter().enumerate() {
        let x0 = mi as f64 * (panel_w + GAP);
        let values: Vec<Vec<f64>> = result
            .smoothings
            .iter()
            .map(|&s| {
                result
                    .cluster_sizes
                    .iter()
                    .map(|&c| result.cell(c, s, method).map_or(f64::NAN, |cell| cell.mean_auc_roc))
                    .collect()
            })
            .collect();
        heat_panel(&mut svg, result, x0, method.as_str(), &values, mi == 0);
    }

    let x0 = result.methods.len() as f64 * (panel_w + GAP);
    best_panel(&mut svg, result, x0, panel_h);

    svg.push_str("</svg>\n");
    svg
}

fn heat_panel(
    svg: &mut String,
    result: &SweepResult,
    x0: f64,
    title: &str,
    values: &[Vec<f64>],
    label_y_axis: bool,
) {
    let n_s = result.smoothings.len();
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"18\" font-weight=\"bold\">{title}</text>\n",
        x0 + LEFT
    ));
    for (si, row) in values.iter().enumerate() {
        for (ci, &v) in row.iter().enumerate() {
            let x = x0 + LEFT + ci as f64 * CELL;
            let y = TOP + (n_s - 1 - si) as f64 * CELL;
            svg.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{CELL:.1}\" height=\"{CELL:.1}\" \
                 fill=\"{}\" stroke=\"white\" stroke-width=\"0.5\">\
                 <title>c={} sigma={}: {v:.3}</title></rect>\n",
                auc_color(v),
                result.cluster_sizes[ci],
                result.smoothings[si],
            ));
        }
    }
    for (level, dash) in CONTOUR_LEVELS.iter().zip(["4 3", "none"]) {
        for ((ax, ay), (bx, by)) in contour_segments(values, *level) {
            let to_px = |gx: f64, gy: f64| {
                (x0 + LEFT + gx * CELL, TOP + (n_s as f64 - gy) * CELL)
            };
            let (x1, y1) = to_px(ax, ay);
            let (x2, y2) = to_px(bx, by);
            let dash_attr = if dash == "none" {
                String::new()
            } else {
                format!(" stroke-dasharray=\"{dash}\"")
            };
            svg.push_str(&format!(
                "<line data-level=\"{level}\" x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" \
                 y2=\"{y2:.1}\" stroke=\"white\" stroke-width=\"2\"{dash_attr}/>\n"
            ));
        }
    }
    axes(svg, result, x0, label_y_axis);
}

fn best_panel(svg: &mut String, result: &SweepResult, x0: f64, panel_h: f64) {
    let n_s = result.smoothings.len();
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"18\" font-weight=\"bold\">best method</text>\n",
        x0 + LEFT
    ));
    for best in &result.best {
        let ci = result.cluster_sizes.iter().position(|&c| c == best.cluster_size).unwrap();
        let si = result.smoothings.iter().position(|&s| s == best.smoothing).unwrap();
        let mi = result.methods.iter().position(|&m| m == best.method).unwrap();
        let x = x0 + LEFT + ci as f64 * CELL;
        let y = TOP + (n_s - 1 - si) as f64 * CELL;
        svg.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{CELL:.1}\" height=\"{CELL:.1}\" \
             fill=\"{}\" stroke=\"white\" stroke-width=\"0.5\">\
             <title>c={} sigma={}: {} ({:.3})</title></rect>\n",
            method_color(mi),
            best.cluster_size,
            best.smoothing,
            best.method,
            best.mean_auc_roc,
        ));
    }
    axes(svg, result, x0, false);
    for (mi, method) in result.methods.iter().enumerate() {
        let y = panel_h + mi as f64 * 18.0;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{y:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            x0 + LEFT,
            method_color(mi)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{method}</text>\n",
            x0 + LEFT + 18.0,
            y + 10.0
        ));
    }
}

fn axes(svg: &mut String, result: &SweepResult, x0: f64, label_y_axis: bool) {
    let n_c = result.cluster_sizes.len();
    let n_s = result.smoothings.len();
    let base = TOP + n_s as f64 * CELL;
    for (ci, c) in result.cluster_sizes.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{c}</text>\n",
            x0 + LEFT + (ci as f64 + 0.5) * CELL,
            base + 16.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#555\">cluster size</text>\n",
        x0 + LEFT + n_c as f64 * CELL / 2.0,
        base + 34.0
    ));
    for (si, s) in result.smoothings.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{s}</text>\n",
            x0 + LEFT - 8.0,
            TOP + (n_s - 1 - si) as f64 * CELL + CELL / 2.0 + 4.0
        ));
    }
    if label_y_axis {
        let y_mid = TOP + n_s as f64 * CELL / 2.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y_mid:.1}\" text-anchor=\"middle\" fill=\"#555\" \
             transform=\"rotate(-90 {:.1} {y_mid:.1})\">smoothing</text>\n",
            x0 + 14.0,
            x0 + 14.0
        ));
    }
}

/// Crossing segments of the `level` isoline on the cell-center lattice,
/// in grid units (cell `[si][ci]` has its center at `(ci + 0.5, si + 0.5)`).
fn contour_segments(values: &[Vec<f64>], level: f64) -> Vec<((f64, f64), (f64, f64))> {
    let rows = values.len();
    let cols = if rows > 0 { values[0].len() } else { 0 };
    let mut segments = Vec::new();
    if rows < 2 || cols < 2 {
        return segments;
    }
    let cross = |pa: (f64, f64), va: f64, pb: (f64, f64), vb: f64| {
        let t = if (vb - va).abs() < 1e-12 { 0.5 } else { (level - va) / (vb - va) };
        (pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1))
    };
    for i in 0..rows - 1 {
        for j in 0..cols - 1 {
            let (va, vb) = (values[i][j], values[i][j + 1]);
            let (vc, vd) = (values[i + 1][j + 1], values[i + 1][j]);
            if !(va.is_finite() && vb.is_finite() && vc.is_finite() && vd.is_finite()) {
                continue;
            }
            let pa = (j as f64 + 0.5, i as f64 + 0.5);
            let pb = (j as f64 + 1.5, i as f64 + 0.5);
            let pc = (j as f64 + 1.5, i as f64 + 1.5);
            let pd = (j as f64 + 0.5, i as f64 + 1.5);
            let case = usize::from(va >= level)
                | usize::from(vb >= level) << 1
                | usize::from(vc >= level) << 2
                | usize::from(vd >= level) << 3;
            let ab = || cross(pa, va, pb, vb);
            let bc = || cross(pb, vb, pc, vc);
            let cd = || cross(pc, vc, pd, vd);
            let da = || cross(pd, vd, pa, va);
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((ab(), da())),
                2 | 13 => segments.push((ab(), bc())),
                3 | 12 => segments.push((bc(), da())),
                4 | 11 => segments.push((bc(), cd())),
                6 | 9 => segments.push((ab(), cd())),
                7 | 8 => segments.push((cd(), da())),
                5 | 10 => {
                    // saddle: split by the center average
                    let center_high = (va + vb + vc + vd) / 4.0 >= level;
                    if (case == 5) == center_high {
                        segments.push((ab(), bc()));
                        segments.push((cd(), da()));
                    } else {
                        segments.push((ab(), da()));
                        segments.push((bc(), cd()));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segments
}

fn auc_color(v: f64) -> String {
    if !v.is_finite() {
        return "#cccccc".to_string();
    }
    let stops = [(48.0, 18.0, 59.0), (33.0, 144.0, 141.0), (253.0, 231.0, 37.0)];
    let t = v.clamp(0.0, 1.0) * 2.0;
    let (lo, hi, f) = if t <= 1.0 {
        (stops[0], stops[1], t)
    } else {
        (stops[1], stops[2], t - 1.0)
    };
    let ch = |a: f64, b: f64| (a + f * (b - a)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(lo.0, hi.0), ch(lo.1, hi.1), ch(lo.2, hi.2))
}

fn method_color(mi: usize) -> &'static str {
    METHOD_COLORS[mi % METHOD_COLORS.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_crosses_a_vertical_gradient_horizontally() {
        let values = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let segs = contour_segments(&values, 0.5);
        assert_eq!(segs.len(), 1);
        let ((x1, y1), (x2, y2)) = segs[0];
        assert_eq!(y1, 1.0);
        assert_eq!(y2, 1.0);
        assert_ne!(x1, x2);
    }

    #[test]
    fn constant_field_has_no_contour() {
        let values = vec![vec![0.8; 3]; 3];
        assert!(contour_segments(&values, 0.5).is_empty());
        assert!(contour_segments(&values, 0.95).is_empty());
    }

    #[test]
    fn colors_span_the_map() {
        assert_eq!(auc_color(0.0), "#30123b");
        assert_eq!(auc_color(1.0), "#fde725");
        assert_eq!(auc_color(f64::NAN), "#cccccc");
    }
}
