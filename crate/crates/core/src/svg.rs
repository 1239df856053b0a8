//! SVG output: a case with an optional plan drawn over it, and the
//! area-versus-cuts chart of a sweep.
//!
//! Case drawings use millimetres as user units with y pointing up: the
//! ideal in green, the deformed curve in red, the placed pieces in blue,
//! red squares at the cuts and blue circles at the clamps.

use std::fmt::Write;

use crate::error::Result;
use crate::format::{Case, PlanFile, SweepRecord};
use crate::geometry::Point2;
use crate::solver::render_pieces;

pub const IDEAL_COLOR: &str = "green";
pub const DEFORMED_COLOR: &str = "red";
pub const RESULT_COLOR: &str = "blue";

struct Frame {
    min: Point2,
    max: Point2,
}

impl Frame {
    fn around<'a>(pts: impl Iterator<Item = &'a Point2>) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        let span = (max.x - min.x).max(max.y - min.y).max(1e-9);
        let pad = 0.05 * span;
        Frame {
            min: Point2::new(min.x - pad, min.y - pad),
            max: Point2::new(max.x + pad, max.y + pad),
        }
    }

    fn size(&self) -> f64 {
        (self.max.x - self.min.x).max(self.max.y - self.min.y)
    }
}

/// Fixed-precision number without trailing zeros, so output is stable.
fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn points_attr(pts: &[Point2]) -> String {
    pts.iter()
        .map(|p| format!("{},{}", num(p.x), num(-p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn polyline(out: &mut String, class: &str, color: &str, width: f64, pts: &[Point2]) {
    writeln!(
        out,
        r#"  <polyline class="{class}" fill="none" stroke="{color}" stroke-width="{}" stroke-linejoin="round" points="{}"/>"#,
        num(width),
        points_attr(pts)
    )
    .unwrap();
}

/// The case, and with a plan the placed pieces and markers.
pub fn plan_svg(case: &Case, plan: Option<&PlanFile>) -> Result<String> {
    let pieces = match plan {
        Some(p) => {
            p.validate_for(case)?;
            let inst = case.instance(&p.params)?;
            render_pieces(&inst, &p.to_refit_plan())?
        }
        None => Vec::new(),
    };
    let frame = Frame::around(
        case.deformed
            .points()
            .iter()
            .chain(case.ideal.points())
            .chain(pieces.iter().flat_map(|p| p.points())),
    );
    let (w, h) = (frame.max.x - frame.min.x, frame.max.y - frame.min.y);
    let stroke = frame.size() / 250.0;
    let marker = frame.size() / 100.0;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}mm" height="{}mm" viewBox="{} {} {} {}">"#,
        num(w),
        num(h),
        num(frame.min.x),
        num(-frame.max.y),
        num(w),
        num(h)
    )
    .unwrap();
    polyline(&mut out, "ideal", IDEAL_COLOR, stroke, case.ideal.points());
    polyline(
        &mut out,
        "deformed",
        DEFORMED_COLOR,
        stroke,
        case.deformed.points(),
    );
    for piece in &pieces {
        polyline(&mut out, "result", RESULT_COLOR, stroke, piece.points());
    }
    if let Some(p) = plan {
        for c in &p.cut_points {
            writeln!(
                out,
                r#"  <rect class="cut" fill="{DEFORMED_COLOR}" x="{}" y="{}" width="{}" height="{}"/>"#,
                num(c.x - marker / 2.0),
                num(-c.y - marker / 2.0),
                num(marker),
                num(marker)
            )
            .unwrap();
        }
        for (l, r) in &p.clamp_points {
            for c in [l, r] {
                writeln!(
                    out,
                    r#"  <circle class="clamp" fill="none" stroke="{RESULT_COLOR}" stroke-width="{}" cx="{}" cy="{}" r="{}"/>"#,
                    num(stroke),
                    num(c.x),
                    num(-c.y),
                    num(marker / 2.0)
                )
                .unwrap();
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Area left between result and ideal against the number of cuts, with
/// the best value using at most that many cuts as a dashed line.
pub fn sweep_chart_svg(rows: &[SweepRecord]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;

    let area = |r: &SweepRecord| r.plan.as_ref().map(|p| p.piece_costs.iter().sum::<f64>());
    let kmax = rows.iter().map(|r| r.k).max().unwrap_or(0).max(1) as f64;
    let ymax = rows
        .iter()
        .filter_map(area)
        .chain(rows.iter().filter_map(|r| r.best_at_most))
        .fold(0.0f64, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let sx = |k: f64| LEFT + k / kmax * (W - LEFT - RIGHT);
    let sy = |v: f64| H - BOTTOM - v / ymax * (H - TOP - BOTTOM);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"  <path class="axes" fill="none" stroke="black" d="M{} {} V{} H{}"/>"#,
        num(LEFT),
        num(TOP),
        num(H - BOTTOM),
        num(W - RIGHT)
    )
    .unwrap();
    for r in rows {
        let x = sx(r.k as f64);
        writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(x),
            num(H - BOTTOM + 16.0),
            r.k
        )
        .unwrap();
    }
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(LEFT - 6.0),
            num(sy(v) + 4.0),
            num((v * 100.0).round() / 100.0)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"  <text x="{}" y="{}" text-anchor="middle">Number of cuts</text>"#,
        num((LEFT + W - RIGHT) / 2.0),
        num(H - 12.0)
    )
    .unwrap();
    writeln!(
        out,
        r#"  <text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">Area below curve (mm²)</text>"#,
        num((TOP + H - BOTTOM) / 2.0),
        num((TOP + H - BOTTOM) / 2.0)
    )
    .unwrap();

    let series = |f: &dyn Fn(&SweepRecord) -> Option<f64>| -> Vec<(usize, f64)> {
        rows.iter().filter_map(|r| f(r).map(|v| (r.k, v))).collect()
    };
    let best = series(&|r| r.best_at_most);
    let line = |pts: &[(usize, f64)]| {
        pts.iter()
            .map(|&(k, v)| format!("{},{}", num(sx(k as f64)), num(sy(v))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(
        out,
        r#"  <polyline class="best" fill="none" stroke="gray" stroke-dasharray="4 3" points="{}"/>"#,
        line(&best)
    )
    .unwrap();
    let exact = series(&area);
    writeln!(
        out,
        r#"  <polyline class="area" fill="none" stroke="{RESULT_COLOR}" points="{}"/>"#,
        line(&exact)
    )
    .unwrap();
    for (k, v) in exact {
        writeln!(
            out,
            r#"  <circle class="point" data-k="{k}" fill="{RESULT_COLOR}" cx="{}" cy="{}" r="3"/>"#,
            num(sx(k as f64)),
            num(sy(v))
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
