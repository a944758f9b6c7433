//! Static SVG boxplots.

use std::fmt::Write;

/// Linear-interpolation quantile of sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

const WIDTH_PER_BOX: f64 = 70.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One box per group: quartiles, whiskers to the furthest point within 1.5
/// IQR, points beyond drawn individually. Non-finite values are dropped.
pub fn boxplot(title: &str, y_label: &str, groups: &[(String, Vec<f64>)]) -> String {
    let cleaned: Vec<(&str, Vec<f64>)> = groups
        .iter()
        .map(|(name, v)| {
            let mut v: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
            v.sort_by(f64::total_cmp);
            (name.as_str(), v)
        })
        .collect();
    let all: Vec<f64> = cleaned.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let (mut lo, mut hi) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let width = 2.0 * MARGIN + WIDTH_PER_BOX * cleaned.len().max(1) as f64;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{h}" font-family="sans-serif" font-size="11">"#,
        h = HEIGHT + 40.0
    );
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * f64::from(k) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 4.0,
            y(v) + 4.0,
            v
        );
    }
    for (i, (name, v)) in cleaned.iter().enumerate() {
        let cx = MARGIN + WIDTH_PER_BOX * (i as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{cx}" y="{}" text-anchor="end" transform="rotate(-35 {cx} {})">{}</text>"#,
            HEIGHT - MARGIN + 14.0,
            HEIGHT - MARGIN + 14.0,
            escape(name)
        );
        if v.is_empty() {
            continue;
        }
        let (q1, q2, q3) = (quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75));
        let iqr = q3 - q1;
        let low = v.iter().copied().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let high = v.iter().rev().copied().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let half = WIDTH_PER_BOX * 0.3;
        let _ = writeln!(
            svg,
            r#"<line x1="{cx}" y1="{:.1}" x2="{cx}" y2="{:.1}" stroke="black"/>"#,
            y(high),
            y(low)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="black"/>"##,
            cx - half,
            y(q3),
            2.0 * half,
            (y(q1) - y(q3)).max(0.5)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            y(q2),
            cx + half,
            y(q2)
        );
        for &x in v.iter().filter(|&&x| x < low || x > high) {
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{:.1}" r="2" fill="none" stroke="black"/>"#, y(x));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(median(&[3.0, f64::NAN, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn svg_has_one_box_per_nonempty_group() {
        let svg = boxplot("t", "m", &[("a".into(), vec![1.0, 2.0, 3.0]), ("b<".into(), vec![]), ("c".into(), vec![2.0; 5])]);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains("b&lt;"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
