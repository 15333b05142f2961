//! SVG output: point-field heatmaps and bandwidth scan curves.

use std::fmt::Write as _;

use crate::engine::ScanResult;
use crate::error::{Error, Result};

const PLOT: f64 = 480.0;
const MARGIN: f64 = 20.0;
const LEGEND_W: f64 = 90.0;

/// A value per point plus how to color it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    /// Colors of the field minimum and maximum.
    pub low: [u8; 3],
    pub high: [u8; 3],
    pub title: String,
}

impl HeatmapSpec {
    /// Blue-to-red ramp.
    pub fn new(ids: Vec<String>, coords: Vec<[f64; 2]>, values: Vec<f64>) -> Self {
        HeatmapSpec {
            ids,
            coords,
            values,
            low: [49, 54, 149],
            high: [215, 48, 39],
            title: String::new(),
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }
}

/// Color at position `t` in `[0, 1]` of the linear ramp.
pub fn ramp(low: [u8; 3], high: [u8; 3], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let mut c = [0u8; 3];
    for k in 0..3 {
        let v = low[k] as f64 + t * (high[k] as f64 - low[k] as f64);
        c[k] = v.round() as u8;
    }
    c
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Smallest positive gap between sorted distinct values, or 1.
fn spacing(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let gap = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 0.0)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        gap
    } else {
        1.0
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// One square cell per point, colored on a linear ramp between the field
/// minimum and maximum, with a legend showing both endpoints.
pub fn render_heatmap(spec: &HeatmapSpec) -> Result<String> {
    let n = spec.values.len();
    if n == 0 {
        return Err(Error::InvalidArgument("heatmap needs at least one value".into()));
    }
    if spec.coords.len() != n || spec.ids.len() != n {
        return Err(Error::InvalidArgument(format!(
            "heatmap has {n} values, {} coords and {} ids",
            spec.coords.len(),
            spec.ids.len()
        )));
    }
    let bad: Vec<&str> = spec
        .values
        .iter()
        .zip(&spec.ids)
        .filter(|(v, _)| !v.is_finite())
        .map(|(_, id)| id.as_str())
        .collect();
    if !bad.is_empty() {
        return Err(Error::NonFinite(bad.join(",")));
    }
    if let Some(i) = spec.coords.iter().position(|c| !(c[0].is_finite() && c[1].is_finite())) {
        return Err(Error::NonFinite(spec.ids[i].clone()));
    }

    let (vmin, vmax) = bounds(spec.values.iter().copied());
    let (xmin, xmax) = bounds(spec.coords.iter().map(|c| c[0]));
    let (ymin, ymax) = bounds(spec.coords.iter().map(|c| c[1]));
    let dx = spacing(spec.coords.iter().map(|c| c[0]).collect());
    let dy = spacing(spec.coords.iter().map(|c| c[1]).collect());
    let span_x = xmax - xmin + dx;
    let span_y = ymax - ymin + dy;
    let scale = PLOT / span_x.max(span_y);
    let (cw, ch) = (dx * scale, dy * scale);
    let width = MARGIN * 2.0 + span_x * scale + LEGEND_W;
    let height = MARGIN * 2.0 + span_y * scale + 20.0;
    let top = MARGIN + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.1}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN + 4.0,
        escape(&spec.title)
    );
    let _ = writeln!(s, r#"<g class="cells">"#);
    for i in 0..n {
        let [cx, cy] = spec.coords[i];
        let t = if vmax > vmin {
            (spec.values[i] - vmin) / (vmax - vmin)
        } else {
            0.0
        };
        let x = MARGIN + (cx - xmin) * scale;
        // larger y is drawn higher
        let y = top + (ymax - cy) * scale;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}" data-id="{}" data-value="{}"/>"#,
            hex(ramp(spec.low, spec.high, t)),
            escape(&spec.ids[i]),
            spec.values[i]
        );
    }
    let _ = writeln!(s, "</g>");

    let lx = MARGIN * 2.0 + span_x * scale;
    let bar_h = (span_y * scale).min(240.0);
    let _ = writeln!(
        s,
        r#"<defs><linearGradient id="ramp" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        hex(spec.low),
        hex(spec.high)
    );
    let _ = writeln!(
        s,
        r#"<g class="legend"><rect x="{lx:.1}" y="{top:.1}" width="16" height="{bar_h:.1}" fill="url(#ramp)"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text class="legend-max" x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{vmax:.4}</text>"#,
        lx + 22.0,
        top + 10.0
    );
    let _ = writeln!(
        s,
        r#"<text class="legend-min" x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{vmin:.4}</text></g>"#,
        lx + 22.0,
        top + bar_h
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// LOO R² against bandwidth, one panel per kernel kind × bandwidth mode.
pub fn render_scan_curves(scans: &[ScanResult]) -> Result<String> {
    if scans.is_empty() {
        return Err(Error::InvalidArgument("no scan results to plot".into()));
    }
    let (pw, ph) = (260.0, 180.0);
    let mut kinds = Vec::new();
    let mut modes = Vec::new();
    for sc in scans {
        if !kinds.contains(&sc.kind) {
            kinds.push(sc.kind);
        }
        if !modes.contains(&sc.mode) {
            modes.push(sc.mode);
        }
    }
    let r2s = scans.iter().flat_map(|sc| sc.points.iter().filter_map(|p| p.loo_r2));
    let (mut lo, mut hi) = bounds(r2s);
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = modes.len() as f64 * (pw + 60.0) + 20.0;
    let height = kinds.len() as f64 * (ph + 50.0) + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    for sc in scans {
        let col = modes.iter().position(|&m| m == sc.mode).unwrap_or(0) as f64;
        let row = kinds.iter().position(|&k| k == sc.kind).unwrap_or(0) as f64;
        let ox = 50.0 + col * (pw + 60.0);
        let oy = 30.0 + row * (ph + 50.0);
        let (bmin, bmax) = bounds(sc.points.iter().map(|p| p.bandwidth));
        let bx = |b: f64| {
            if bmax > bmin {
                ox + (b - bmin) / (bmax - bmin) * pw
            } else {
                ox + pw / 2.0
            }
        };
        let by = |r: f64| oy + ph - (r - lo) / (hi - lo) * ph;
        let _ = writeln!(
            s,
            r#"<g class="panel" data-kind="{}" data-mode="{}">"#,
            sc.kind, sc.mode
        );
        let _ = writeln!(
            s,
            r##"<rect x="{ox:.1}" y="{oy:.1}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{ox:.1}" y="{:.1}">{} / {}</text>"#,
            oy - 6.0,
            sc.kind,
            sc.mode
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{hi:.3}</text>"#, ox - 45.0, oy + 8.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{lo:.3}</text>"#, ox - 45.0, oy + ph);
        let _ = writeln!(s, r#"<text x="{ox:.1}" y="{:.1}">{bmin}</text>"#, oy + ph + 14.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{bmax}</text>"#,
            ox + pw,
            oy + ph + 14.0
        );
        let pts: Vec<String> = sc
            .points
            .iter()
            .filter_map(|p| p.loo_r2.map(|r| format!("{:.2},{:.2}", bx(p.bandwidth), by(r))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="curve" points="{}" fill="none" stroke="#2166ac" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
        if let Some(r) = sc.chosen_r2() {
            let _ = writeln!(
                s,
                r##"<circle class="chosen" cx="{:.2}" cy="{:.2}" r="3.5" fill="#b2182b" data-bandwidth="{}"/>"##,
                bx(sc.chosen),
                by(r),
                sc.chosen
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
