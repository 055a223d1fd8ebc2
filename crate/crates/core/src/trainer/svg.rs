use std::collections::BTreeMap;
use std::fmt::Write;

use super::GridRow;
use crate::bounds::asymptotic_width;

const CELL: f64 = 64.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const LEGEND: f64 = 120.0;

/// Colour stops from low to high error.
const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Horizontal position of width `w`, linear in `log w` between columns.
fn x_of(widths: &[usize], w: f64) -> f64 {
    let centre = |i: usize| LEFT + (i as f64 + 0.5) * CELL;
    if widths.len() == 1 {
        return centre(0);
    }
    let logs: Vec<f64> = widths.iter().map(|&v| (v as f64).ln()).collect();
    let lw = w.ln();
    let seg = logs
        .windows(2)
        .position(|p| lw <= p[1])
        .unwrap_or(logs.len() - 2);
    let (a, b) = (logs[seg], logs[seg + 1]);
    let x = centre(seg) + (lw - a) / (b - a) * CELL;
    x.clamp(LEFT, LEFT + widths.len() as f64 * CELL)
}

/// Depth × width heatmap of the median log₁₀ test error over seeds, with
/// the curve `w = n^{(k−1)/k} 2^{n^{1/k}}` drawn on top.
pub fn heatmap_svg(rows: &[GridRow]) -> String {
    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.test_err.is_finite() && r.test_err > 0.0) {
        cells.entry((r.depth, r.width)).or_default().push(r.test_err.log10());
    }
    let mut depths: Vec<usize> = rows.iter().map(|r| r.depth).collect();
    let mut widths: Vec<usize> = rows.iter().map(|r| r.width).collect();
    depths.sort_unstable();
    depths.dedup();
    widths.sort_unstable();
    widths.dedup();
    let n = rows.first().map_or(1, |r| r.n);

    let medians: BTreeMap<(usize, usize), f64> =
        cells.into_iter().map(|(k, v)| (k, median(v))).collect();
    let lo = medians.values().copied().fold(f64::INFINITY, f64::min);
    let hi = medians.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let plot_w = widths.len() as f64 * CELL;
    let plot_h = depths.len() as f64 * CELL;
    let total_w = LEFT + plot_w + LEGEND;
    let total_h = TOP + plot_h + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="20">median log10 test error, product of {n} inputs</text>"#
    );
    // Depth 1 at the bottom.
    let y_of = |row: usize| TOP + (depths.len() - 1 - row) as f64 * CELL;
    for (di, &d) in depths.iter().enumerate() {
        for (wi, &w) in widths.iter().enumerate() {
            let x = LEFT + wi as f64 * CELL;
            let y = y_of(di);
            match medians.get(&(d, w)) {
                Some(&m) => {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>depth {d}, width {w}: {m:.3}</title></rect>"#,
                        colour((m - lo) / span)
                    );
                    let _ = writeln!(
                        s,
                        r##"<text x="{}" y="{}" text-anchor="middle" fill="#ffffff">{m:.2}</text>"##,
                        x + CELL / 2.0,
                        y + CELL / 2.0 + 4.0
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#cccccc"/>"##
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{d}</text>"#,
            LEFT - 8.0,
            y_of(di) + CELL / 2.0 + 4.0
        );
    }
    for (wi, &w) in widths.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{w}</text>"#,
            LEFT + (wi as f64 + 0.5) * CELL,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">width</text>"#,
        LEFT + plot_w / 2.0,
        TOP + plot_h + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">depth</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let points: Vec<String> = depths
        .iter()
        .enumerate()
        .map(|(di, &d)| {
            let w = asymptotic_width(n as u64, d as u32);
            format!("{:.2},{:.2}", x_of(&widths, w), y_of(di) + CELL / 2.0)
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#000000" stroke-width="2"/>"##,
        points.join(" ")
    );

    let lx = LEFT + plot_w + 20.0;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            TOP + (1.0 - t) * plot_h * 10.0 / 11.0,
            plot_h / 11.0,
            colour(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{hi:.2}</text>"#,
        lx + 22.0,
        TOP + 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{lo:.2}</text>"#,
        lx + 22.0,
        TOP + plot_h
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(depth: usize, width: usize, err: f64) -> GridRow {
        GridRow {
            n: 6,
            depth,
            width,
            seed: 0,
            steps: 1,
            activation: "tanh".into(),
            train_err: err,
            test_err: err,
            theory_width: asymptotic_width(6, depth as u32),
            wallclock_s: 0.0,
            error: None,
        }
    }

    #[test]
    fn one_rect_per_cell_and_a_curve() {
        let rows = vec![row(1, 5, 0.5), row(1, 10, 0.2), row(2, 5, 0.1), row(2, 10, 0.05)];
        let svg = heatmap_svg(&rows);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<title>").count(), 4);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn ramp_ends() {
        assert_eq!(colour(0.0), "#440154");
        assert_eq!(colour(1.0), "#fde725");
    }
}
