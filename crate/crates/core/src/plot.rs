//! Static SVG figures of sweep results.
//!
//! Output is a pure function of the rows and the plot spec: series are
//! ordered by key and every coordinate is printed with fixed precision.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{read_rows, Method, SweepRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlotKind {
    /// One curve per (method, eps) against SNR.
    BerVsSnr,
    /// One curve per method against eps, at the given SNR.
    BerVsEps { snr_db: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
}

struct Series {
    label: String,
    method: Method,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

/// Reads `csv_path` and writes the SVG to `out_path`.
pub fn emit_plot(
    csv_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
    spec: &PlotSpec,
) -> Result<()> {
    let rows = read_rows(csv_path)?;
    let svg = render_svg(&rows, spec)?;
    let out = out_path.as_ref();
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}

/// Renders rows to an SVG document.
pub fn render_svg(rows: &[SweepRow], spec: &PlotSpec) -> Result<String> {
    let series = collect_series(rows, spec.kind);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();

    let (mut x0, mut x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    if pts.is_empty() {
        (x0, x1) = (0.0, 1.0);
    } else if x1 - x0 < 1e-12 {
        let pad = if x0.abs() > 1.0 { 1.0 } else { 0.01 };
        (x0, x1) = (x0 - pad, x1 + pad);
    }
    let (ymin, ymax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    let (mut d0, mut d1) = if pts.is_empty() {
        (-5, 0)
    } else {
        (ymin.log10().floor() as i32, ymax.log10().ceil() as i32)
    };
    if d1 <= d0 {
        d0 -= 1;
        d1 += 1;
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (d1 as f64 - y.log10()) / (d1 - d0) as f64 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    );

    // grid and ticks
    for d in d0..=d1 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let xv = x0 + (x1 - x0) * i as f64 / 5.0;
        let x = sx(xv);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##,
            TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            tick_label(xv, x1 - x0)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let xlabel = match spec.kind {
        PlotKind::BerVsSnr => "SNR (dB)",
        PlotKind::BerVsEps { .. } => "normalized CFO",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">BER</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    if pts.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no data</text>"#,
            LEFT + pw / 2.0,
            TOP + ph / 2.0
        );
    }

    for (i, ser) in series.iter().enumerate() {
        let dash = match ser.method {
            Method::Sim | Method::Oma => "",
            Method::Mc => r#" stroke-dasharray="2 3""#,
            _ => r#" stroke-dasharray="6 4""#,
        };
        if ser.points.len() > 1 {
            let path: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                path.join(" "),
                ser.color
            );
        }
        if ser.method.is_simulation() || ser.points.len() == 1 {
            let shape = if ser.method == Method::Oma {
                "rect"
            } else {
                "circle"
            };
            for &(x, y) in &ser.points {
                let (cx, cy) = (sx(x), sy(y));
                if shape == "circle" {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="none" stroke="{}"/>"#,
                        ser.color
                    );
                } else {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="{}"/>"#,
                        cx - 3.5,
                        cy - 3.5,
                        ser.color
                    );
                }
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.5"{dash}/>"#,
            lx + 24.0,
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn collect_series(rows: &[SweepRow], kind: PlotKind) -> Vec<Series> {
    // BTreeMap keys give a stable series order; eps is keyed by its bits
    // after the sign-aware mapping below so negative values sort first.
    let mut map: BTreeMap<(Method, i64), Vec<(f64, f64)>> = BTreeMap::new();
    let mut eps_keys: BTreeMap<i64, usize> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.ber > 0.0 && r.ber.is_finite()) {
        match kind {
            PlotKind::BerVsSnr => {
                let k = order_key(r.eps);
                eps_keys.entry(k).or_insert(0);
                map.entry((r.method, k))
                    .or_default()
                    .push((r.snr_db, r.ber));
            }
            PlotKind::BerVsEps { snr_db } => {
                if (r.snr_db - snr_db).abs() < 1e-9 {
                    map.entry((r.method, 0)).or_default().push((r.eps, r.ber));
                }
            }
        }
    }
    for (i, v) in eps_keys.values_mut().enumerate() {
        *v = i;
    }
    let methods: Vec<Method> = {
        let mut m: Vec<Method> = map.keys().map(|k| k.0).collect();
        m.dedup();
        m
    };
    map.into_iter()
        .map(|((method, k), mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (label, color) = match kind {
                PlotKind::BerVsSnr => {
                    let eps = from_order_key(k);
                    (
                        format!("{method} eps={eps}"),
                        PALETTE[eps_keys[&k] % PALETTE.len()],
                    )
                }
                PlotKind::BerVsEps { .. } => {
                    let i = methods.iter().position(|m| *m == method).unwrap_or(0);
                    (method.to_string(), PALETTE[i % PALETTE.len()])
                }
            };
            Series {
                label,
                method,
                color,
                points,
            }
        })
        .collect()
}

fn order_key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

fn from_order_key(k: i64) -> f64 {
    let b = if k < 0 { k ^ i64::MAX } else { k };
    f64::from_bits(b as u64)
}

fn tick_label(v: f64, span: f64) -> String {
    if span >= 5.0 {
        format!("{v:.0}")
    } else if span >= 0.5 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
