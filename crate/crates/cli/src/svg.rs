//! Minimal SVG plot: per-round LER (log y) against rejection rate, with the
//! Wilson band.

use std::fmt::Write;

use forced_gap::harness::CurvePoint;
use forced_gap::stats::per_round_ler;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

pub fn render_curve(points: &[CurvePoint], rounds: usize) -> String {
    let rows: Vec<(f64, f64, f64, f64)> = points
        .iter()
        .filter(|p| p.n_accepted > 0)
        .map(|p| {
            (
                p.ps_rate,
                p.ler_per_round,
                per_round_ler(p.ci_low, rounds),
                per_round_ler(p.ci_high, rounds),
            )
        })
        .collect();
    let positive = rows
        .iter()
        .flat_map(|r| [r.1, r.2, r.3])
        .filter(|v| *v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (dmin, dmax) = if lo.is_finite() {
        (lo.log10().floor(), hi.log10().ceil().max(lo.log10().floor() + 1.0))
    } else {
        (-6.0, 0.0)
    };
    let xmax = rows.iter().map(|r| r.0).fold(0.0, f64::max).max(1e-3) * 1.05;

    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let x = |v: f64| LEFT + pw * v / xmax;
    let y = |v: f64| {
        let d = if v > 0.0 { v.log10().clamp(dmin, dmax) } else { dmin };
        TOP + ph * (dmax - d) / (dmax - dmin)
    };

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for d in (dmin as i32)..=(dmax as i32) {
        let yy = y(10f64.powi(d));
        writeln!(s, r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/>"##, LEFT + pw).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            yy + 4.0
        )
        .unwrap();
    }
    for i in 0..=4 {
        let v = xmax * i as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{v:.3}</text>"#,
            x(v),
            TOP + ph + 18.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">rejection rate</text>"#,
        LEFT + pw / 2.0,
        H - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">logical error rate per round</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    )
    .unwrap();

    if !rows.is_empty() {
        let upper = rows.iter().map(|r| format!("{:.2},{:.2}", x(r.0), y(r.3)));
        let lower = rows.iter().rev().map(|r| format!("{:.2},{:.2}", x(r.0), y(r.2)));
        let band: Vec<String> = upper.chain(lower).collect();
        writeln!(s, r##"<polygon points="{}" fill="#4a7bd0" fill-opacity="0.2" stroke="none"/>"##, band.join(" ")).unwrap();
        let line: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", x(r.0), y(r.1))).collect();
        writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f4fa0" stroke-width="1.5"/>"##, line.join(" ")).unwrap();
        for r in &rows {
            writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f4fa0"/>"##, x(r.0), y(r.1)).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(ps: f64, ler: f64, n: usize) -> CurvePoint {
        CurvePoint {
            threshold: 0.0,
            ps_rate: ps,
            ler,
            ler_per_round: ler,
            ci_low: ler * 0.5,
            ci_high: ler * 2.0,
            n_accepted: n,
        }
    }

    #[test]
    fn renders_band_and_line() {
        let svg = render_curve(&[point(0.0, 1e-2, 100), point(0.1, 1e-3, 90)], 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<polygon"));
        assert!(svg.contains("1e-4") && svg.contains("1e-1"));
    }

    #[test]
    fn skips_empty_points() {
        let svg = render_curve(&[point(1.0, 0.0, 0)], 1);
        assert!(!svg.contains("<polyline"));
    }
}
