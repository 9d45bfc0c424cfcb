//! Standalone SVG figures with exact element-count contracts.
//!
//! Each figure kind maps its records one-to-one onto SVG elements:
//! trajectories and mean curves draw exactly one `<polyline>` per
//! sequence, scatters exactly one `<circle>` per point, bar charts
//! exactly one `<rect>` per score. Axes and labels use `<line>` and
//! `<text>` only, so the counts stay exact. Output is a pure function
//! of the input: rendering the same data twice gives identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Color of cluster i is `PALETTE[i % 10]`.
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

/// Figure payloads accepted by [`render_svg`].
pub enum SvgData<'a> {
    /// One polyline per row; x is the timestep index, colors follow the
    /// optional cluster assignment.
    Trajectories { rows: &'a [Vec<f64>], clusters: Option<&'a [usize]> },
    /// One polyline per curve; curve i is colored as cluster i.
    MeanCurves { curves: &'a [Vec<f64>] },
    /// One circle per point, colored by the optional cluster assignment.
    EmbeddingScatter { points: &'a [(f64, f64)], clusters: Option<&'a [usize]> },
    /// One bar per (k, score) pair, in input order.
    ChBars { scores: &'a [(usize, f64)] },
}

/// Data-to-pixel mapping with padding for degenerate spans.
struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(mut x_min: f64, mut x_max: f64, mut y_min: f64, mut y_max: f64) -> Frame {
        if x_max <= x_min {
            x_min -= 0.5;
            x_max += 0.5;
        }
        if y_max <= y_min {
            y_min -= 0.5;
            y_max += 0.5;
        }
        Frame { x_min, x_max, y_min, y_max }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn color(clusters: Option<&[usize]>, i: usize) -> &'static str {
    PALETTE[clusters.map(|c| c[i]).unwrap_or(0) % PALETTE.len()]
}

fn check_clusters(clusters: Option<&[usize]>, n: usize) -> Result<()> {
    if let Some(clusters) = clusters {
        if clusters.len() != n {
            return Err(Error::SizeMismatch { a: clusters.len(), b: n });
        }
    }
    Ok(())
}

/// Rows must be non-empty, rectangular, and finite; returns (T, min, max).
fn row_bounds(rows: &[Vec<f64>]) -> Result<(usize, f64, f64)> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptyData);
    }
    let t = rows[0].len();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for row in rows {
        if row.len() != t {
            return Err(Error::ShapeMismatch(format!(
                "figure rows must have equal length: {} vs {t}",
                row.len()
            )));
        }
        for &v in row {
            if !v.is_finite() {
                return Err(Error::InvalidConfig("non-finite value in figure data".to_string()));
            }
            min = min.min(v);
            max = max.max(v);
        }
    }
    Ok((t, min, max))
}

fn axes(out: &mut String, frame: &Frame) {
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    writeln!(
        out,
        r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="#333333" stroke-width="1"/>"##
    )
    .unwrap();
    writeln!(
        out,
        r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="#333333" stroke-width="1"/>"##
    )
    .unwrap();
    let labels = [
        (x0, y0 + 16.0, "middle", frame.x_min),
        (x1, y0 + 16.0, "middle", frame.x_max),
        (x0 - 8.0, y0, "end", frame.y_min),
        (x0 - 8.0, y1, "end", frame.y_max),
    ];
    for (x, y, anchor, value) in labels {
        writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{value:.2}</text>"#
        )
        .unwrap();
    }
}

fn header() -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    )
}

fn curves_svg(rows: &[Vec<f64>], clusters: Option<&[usize]>, by_index: bool) -> Result<String> {
    check_clusters(clusters, rows.len())?;
    let (t, y_min, y_max) = row_bounds(rows)?;
    let frame = Frame::new(0.0, (t - 1) as f64, y_min, y_max);
    let mut out = header();
    axes(&mut out, &frame);
    for (i, row) in rows.iter().enumerate() {
        let stroke = if by_index { PALETTE[i % PALETTE.len()] } else { color(clusters, i) };
        let mut points = String::new();
        for (j, &v) in row.iter().enumerate() {
            if j > 0 {
                points.push(' ');
            }
            write!(points, "{:.2},{:.2}", frame.x(j as f64), frame.y(v)).unwrap();
        }
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="1.5" points="{points}"/>"#
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn scatter_svg(points: &[(f64, f64)], clusters: Option<&[usize]>) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyData);
    }
    check_clusters(clusters, points.len())?;
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidConfig("non-finite value in figure data".to_string()));
        }
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let frame = Frame::new(x_min, x_max, y_min, y_max);
    let mut out = header();
    axes(&mut out, &frame);
    for (i, &(x, y)) in points.iter().enumerate() {
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
            frame.x(x),
            frame.y(y),
            color(clusters, i)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn bars_svg(scores: &[(usize, f64)]) -> Result<String> {
    if scores.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut y_min: f64 = 0.0;
    let mut y_max: f64 = 0.0;
    for &(_, s) in scores {
        if !s.is_finite() {
            return Err(Error::InvalidConfig("non-finite value in figure data".to_string()));
        }
        y_min = y_min.min(s);
        y_max = y_max.max(s);
    }
    let n = scores.len();
    let frame = Frame::new(0.0, n as f64, y_min, y_max);
    let mut out = header();
    axes(&mut out, &frame);
    let slot = (WIDTH - 2.0 * MARGIN) / n as f64;
    let bar_width = 0.6 * slot;
    let y_zero = frame.y(0.0);
    for (i, &(k, score)) in scores.iter().enumerate() {
        let center = MARGIN + (i as f64 + 0.5) * slot;
        let y_score = frame.y(score);
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{bar_width:.2}" height="{:.2}" fill="{}"/>"#,
            center - bar_width / 2.0,
            y_zero.min(y_score),
            (y_zero - y_score).abs(),
            PALETTE[0]
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{center:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#,
            HEIGHT - MARGIN + 32.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Render a figure to an SVG string.
pub fn svg_string(data: &SvgData) -> Result<String> {
    match data {
        SvgData::Trajectories { rows, clusters } => curves_svg(rows, *clusters, false),
        SvgData::MeanCurves { curves } => curves_svg(curves, None, true),
        SvgData::EmbeddingScatter { points, clusters } => scatter_svg(points, *clusters),
        SvgData::ChBars { scores } => bars_svg(scores),
    }
}

/// Render a figure and write it to `path`.
pub fn render_svg(data: &SvgData, path: &Path) -> Result<()> {
    let text = svg_string(data)?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(haystack: &str, needle: &str) -> usize {
        haystack.matches(needle).count()
    }

    #[test]
    fn one_polyline_per_trajectory() {
        let rows = vec![vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]];
        let svg = svg_string(&SvgData::Trajectories { rows: &rows, clusters: None }).unwrap();
        assert_eq!(count(&svg, "<polyline"), 3);
        assert_eq!(count(&svg, "<rect"), 0);
        assert_eq!(count(&svg, "<circle"), 0);
    }

    #[test]
    fn one_polyline_per_mean_curve() {
        let curves = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let svg = svg_string(&SvgData::MeanCurves { curves: &curves }).unwrap();
        assert_eq!(count(&svg, "<polyline"), 2);
        assert!(svg.contains(PALETTE[0]) && svg.contains(PALETTE[1]));
    }

    #[test]
    fn one_circle_per_point() {
        let points = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5), (0.5, 2.0)];
        let clusters = vec![0, 1, 0, 1];
        let svg = svg_string(&SvgData::EmbeddingScatter {
            points: &points,
            clusters: Some(&clusters),
        })
        .unwrap();
        assert_eq!(count(&svg, "<circle"), 4);
        assert_eq!(count(&svg, &format!("fill=\"{}\"", PALETTE[0])), 2);
        assert_eq!(count(&svg, &format!("fill=\"{}\"", PALETTE[1])), 2);
    }

    #[test]
    fn one_rect_per_bar_and_no_others() {
        let scores = vec![(2, 120.0), (3, 200.0), (4, 90.0)];
        let svg = svg_string(&SvgData::ChBars { scores: &scores }).unwrap();
        assert_eq!(count(&svg, "<rect"), 3);
        assert_eq!(count(&svg, "<polyline"), 0);
    }

    #[test]
    fn rendering_twice_is_byte_identical() {
        let rows = vec![vec![0.25, 0.5], vec![0.75, 0.125]];
        let clusters = vec![0, 1];
        let data = SvgData::Trajectories { rows: &rows, clusters: Some(&clusters) };
        assert_eq!(svg_string(&data).unwrap(), svg_string(&data).unwrap());

        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.svg");
        let b = dir.path().join("b.svg");
        render_svg(&data, &a).unwrap();
        render_svg(&data, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn empty_data_is_rejected() {
        assert!(matches!(
            svg_string(&SvgData::Trajectories { rows: &[], clusters: None }),
            Err(Error::EmptyData)
        ));
        assert!(matches!(
            svg_string(&SvgData::EmbeddingScatter { points: &[], clusters: None }),
            Err(Error::EmptyData)
        ));
        assert!(matches!(svg_string(&SvgData::ChBars { scores: &[] }), Err(Error::EmptyData)));
    }

    #[test]
    fn cluster_length_must_match() {
        let rows = vec![vec![0.0, 1.0]];
        let clusters = vec![0, 1];
        assert!(matches!(
            svg_string(&SvgData::Trajectories { rows: &rows, clusters: Some(&clusters) }),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let rows = vec![vec![0.0, f64::NAN]];
        assert!(svg_string(&SvgData::Trajectories { rows: &rows, clusters: None }).is_err());
        let scores = vec![(2, f64::INFINITY)];
        assert!(svg_string(&SvgData::ChBars { scores: &scores }).is_err());
    }

    #[test]
    fn coordinates_use_two_decimals() {
        let rows = vec![vec![1.0 / 3.0, 2.0 / 7.0, 0.123456]];
        let svg = svg_string(&SvgData::Trajectories { rows: &rows, clusters: None }).unwrap();
        let points = svg
            .split("points=\"")
            .nth(1)
            .and_then(|rest| rest.split('"').next())
            .unwrap();
        for token in points.split([' ', ',']) {
            let (_, frac) = token.split_once('.').expect("coordinate without decimals");
            assert_eq!(frac.len(), 2, "token `{token}`");
        }
    }

    #[test]
    fn constant_data_still_renders() {
        let rows = vec![vec![5.0, 5.0, 5.0]];
        let svg = svg_string(&SvgData::Trajectories { rows: &rows, clusters: None }).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        assert!(svg.starts_with("<?xml"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn palette_wraps_past_ten_clusters() {
        let points = vec![(0.0, 0.0), (1.0, 1.0)];
        let clusters = vec![0, 10];
        let svg = svg_string(&SvgData::EmbeddingScatter {
            points: &points,
            clusters: Some(&clusters),
        })
        .unwrap();
        assert_eq!(count(&svg, &format!("fill=\"{}\"", PALETTE[0])), 2);
    }
}
