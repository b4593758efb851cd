//! CSV and SVG renderings of a sweep series.

use std::fmt::Write as _;

use rarity_core::binomtail::SweepSeries;

/// Significant digits of each CSV value.
pub const CSV_DIGITS: usize = 15;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 100.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

/// `n,log10_p` with one row per point. Exact zeros are written as `-inf`.
pub fn sweep_csv(series: &SweepSeries) -> String {
    let mut out = String::with_capacity(series.len() * 24 + 16);
    out.push_str("n,log10_p\n");
    for (n, m) in &series.points {
        let value = match m.log10() {
            Some(v) => v.to_plain_string(CSV_DIGITS),
            None => "-inf".to_string(),
        };
        let _ = writeln!(out, "{n},{value}");
    }
    out
}

/// A 1-2-5 step near `raw`.
fn nice_step(raw: f64) -> f64 {
    if !(raw > 0.0) || !raw.is_finite() {
        return 1.0;
    }
    let scale = 10f64.powf(raw.log10().floor());
    let f = raw / scale;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * scale
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step((hi - lo) / 6.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// A standalone SVG 1.1 line chart of `log10 P` against `n`, with a dashed
/// horizontal line at `threshold` when it falls inside the value range.
/// `stamp` goes into a leading comment.
pub fn sweep_svg(series: &SweepSeries, title: &str, threshold: Option<f64>, stamp: &str) -> String {
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter_map(|(n, m)| m.log10().map(|v| (*n as f64, v.to_f64())))
        .collect();

    let (mut x_lo, mut x_hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    let (mut y_lo, mut y_hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    if pts.is_empty() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, -1.0, 0.0);
    }
    if let Some(t) = threshold {
        if t >= y_lo.min(-1.0) && t <= y_hi.max(0.0) {
            y_lo = y_lo.min(t);
            y_hi = y_hi.max(t);
        }
    }
    if x_hi - x_lo < 1.0 {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let pad = (y_hi - y_lo) * 0.04;
    y_lo -= pad;
    y_hi += pad;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<!-- {} -->", escape(stamp).replace("--", "- -"));
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        LEFT + pw / 2.0,
        escape(title)
    );

    // Axes and grid.
    let _ = writeln!(
        s,
        "<g stroke=\"black\" stroke-width=\"1\"><line x1=\"{LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/><line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{:.2}\"/></g>",
        TOP + ph,
        LEFT + pw,
        TOP + ph,
        TOP + ph
    );
    s.push_str("<g stroke=\"#dddddd\" stroke-width=\"1\">\n");
    let xt = ticks(x_lo, x_hi);
    let yt = ticks(y_lo, y_hi);
    for &t in &xt {
        let _ = writeln!(
            s,
            "<line x1=\"{0:.2}\" y1=\"{TOP}\" x2=\"{0:.2}\" y2=\"{1:.2}\"/>",
            sx(t),
            TOP + ph
        );
    }
    for &t in &yt {
        let _ = writeln!(
            s,
            "<line x1=\"{LEFT}\" y1=\"{0:.2}\" x2=\"{1:.2}\" y2=\"{0:.2}\"/>",
            sy(t),
            LEFT + pw
        );
    }
    s.push_str("</g>\n<g fill=\"black\">\n");
    for &t in &xt {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            sx(t),
            TOP + ph + 20.0,
            label(t)
        );
    }
    for &t in &yt {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 8.0,
            sy(t) + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">n</text>",
        LEFT + pw / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        "<text x=\"24\" y=\"{0:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 24 {0:.2})\">log10 probability</text>",
        TOP + ph / 2.0
    );
    s.push_str("</g>\n");

    if let Some(t) = threshold {
        if t >= y_lo && t <= y_hi {
            let y = sy(t);
            let _ = writeln!(
                s,
                "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>",
                LEFT + pw
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#c0392b\">log10 = {}</text>",
                LEFT + pw - 4.0,
                y - 6.0,
                label(t)
            );
        }
    }

    match pts.as_slice() {
        [] => {}
        [(x, y)] => {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f4e9c\"/>",
                sx(*x),
                sy(*y)
            );
        }
        _ => {
            s.push_str("<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"");
            for (i, (x, y)) in pts.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{:.2},{:.2}", sx(*x), sy(*y));
            }
            s.push_str("\"/>\n");
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rarity_core::binomtail::Direction;
    use rarity_core::xprec::{LogMagnitude, Precision, XReal};

    fn series(values: &[(u64, f64)]) -> SweepSeries {
        let prec = Precision::default();
        SweepSeries {
            direction: Direction::Upper,
            points: values
                .iter()
                .map(|&(n, v)| {
                    (
                        n,
                        LogMagnitude::from_log10(XReal::from_f64(v, prec).unwrap()),
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = sweep_csv(&series(&[(2, -0.5), (3, -1.25)]));
        assert_eq!(csv, "n,log10_p\n2,-0.5\n3,-1.25\n");
    }

    #[test]
    fn single_point_gets_a_marker() {
        let svg = sweep_svg(&series(&[(5, -3.0)]), "t", Some(-80.0), "stamp");
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn threshold_line_is_dashed_and_one_polyline() {
        let svg = sweep_svg(
            &series(&[(2, -1.0), (3, -90.0), (4, -200.0)]),
            "t",
            Some(-80.0),
            "s",
        );
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("viewBox=\"0 0 960 600\""));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn tick_steps() {
        assert_eq!(nice_step(3.0), 5.0);
        assert_eq!(nice_step(0.15), 0.2);
        assert_eq!(ticks(0.0, 10.0).first(), Some(&0.0));
    }
}
