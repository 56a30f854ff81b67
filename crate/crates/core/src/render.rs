//! SVG and CSV export of traced balls and half-plane v-ball curves.
//!
//! Output is a pure function of the inputs: fixed decimals, no timestamps.

use std::fmt::Write;

use crate::balls::BallTrace;
use crate::geom::Domain;
use crate::halfspace::VBallCurve;

const DECIMALS: usize = 6;
const PADDING: f64 = 0.05;
const WIDTH: f64 = 800.0;
const COLORS: [&str; 6] = [
    "#1f4e9c", "#b8411d", "#2b7a3b", "#7a2b73", "#8a6d0b", "#2b6f7a",
];

/// A planar polyline to draw, with breaks where the trace was truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub points: Vec<[f64; 2]>,
    /// Indices that must not be joined to their successor.
    pub breaks: Vec<usize>,
    pub closed: bool,
    pub label: String,
    pub dashed: bool,
}

impl Path {
    pub fn from_trace(trace: &BallTrace) -> Self {
        Path {
            points: trace.planar(),
            breaks: trace.truncated_rays.clone(),
            closed: trace.is_bounded(),
            label: format!("{} r={}", trace.metric, trace.radius),
            dashed: false,
        }
    }

    pub fn from_curve(curve: &VBallCurve, offset: [f64; 2], scale: f64) -> Self {
        Path {
            points: curve
                .polyline
                .iter()
                .map(|p| [offset[0] + scale * p[0], scale * p[1]])
                .collect(),
            breaks: Vec::new(),
            closed: true,
            label: format!("closed form r={}", curve.r),
            dashed: true,
        }
    }

    fn drawable(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.breaks.contains(i))
            .map(|(_, p)| p)
    }

    /// Runs of consecutive drawable points, wrapping around for closed paths.
    fn runs(&self) -> Vec<Vec<[f64; 2]>> {
        let n = self.points.len();
        if self.breaks.is_empty() {
            return vec![self.points.clone()];
        }
        // start right after a break so no run straddles the seam
        let start = (self.breaks[0] + 1) % n;
        let mut runs = Vec::new();
        let mut cur = Vec::new();
        for k in 0..n {
            let i = (start + k) % n;
            if self.breaks.contains(&i) {
                if cur.len() > 1 {
                    runs.push(std::mem::take(&mut cur));
                }
                cur.clear();
            } else {
                cur.push(self.points[i]);
            }
        }
        if cur.len() > 1 {
            runs.push(cur);
        }
        runs
    }
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.DECIMALS$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn bbox<'a>(points: impl Iterator<Item = &'a [f64; 2]>) -> Option<[f64; 4]> {
    let mut b = [
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    ];
    let mut any = false;
    for p in points.filter(|p| p[0].is_finite() && p[1].is_finite()) {
        any = true;
        b = [
            b[0].min(p[0]),
            b[1].min(p[1]),
            b[2].max(p[0]),
            b[3].max(p[1]),
        ];
    }
    any.then_some(b)
}

/// Renders paths over the domain boundary. Only planar domains have their
/// boundary drawn; obstacles appear as crosses.
pub fn svg(domain: &Domain, paths: &[Path]) -> String {
    let [x0, y0, x1, y1] =
        bbox(paths.iter().flat_map(|p| p.drawable())).unwrap_or([-1.0, -1.0, 1.0, 1.0]);
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let pad = PADDING * span;
    let (vx, vy) = (x0 - pad, -(y1 + pad));
    let (vw, vh) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let height = (WIDTH * vh / vw).round().max(1.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="{} {} {} {}">"#,
        fmt(vx),
        fmt(vy),
        fmt(vw),
        fmt(vh)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#,
        fmt(vx),
        fmt(vy),
        fmt(vw),
        fmt(vh)
    );
    let stroke = r#"fill="none" stroke-width="1.5" vector-effect="non-scaling-stroke""#;
    if domain.dim() == 2 {
        let _ = writeln!(s, r##"<g class="domain" stroke="#555555" {stroke}>"##);
        match domain {
            Domain::HalfSpace { .. } => {
                let _ = writeln!(
                    s,
                    r#"<line x1="{}" y1="0" x2="{}" y2="0"/>"#,
                    fmt(vx),
                    fmt(vx + vw)
                );
            }
            Domain::UnitBall { .. } => {
                let _ = writeln!(s, r#"<circle cx="0" cy="0" r="1"/>"#);
            }
            Domain::Polygon(poly) => {
                let pts: Vec<String> = poly
                    .vertices()
                    .iter()
                    .map(|v| format!("{},{}", fmt(v[0]), fmt(-v[1])))
                    .collect();
                let _ = writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" "));
            }
            Domain::PuncturedSpace { obstacles } => {
                let h = 0.015 * vw.max(vh);
                for o in obstacles {
                    let (cx, cy) = (o[0], -o[1]);
                    let _ = writeln!(
                        s,
                        r#"<path class="obstacle" d="M{} {}L{} {}M{} {}L{} {}"/>"#,
                        fmt(cx - h),
                        fmt(cy - h),
                        fmt(cx + h),
                        fmt(cy + h),
                        fmt(cx - h),
                        fmt(cy + h),
                        fmt(cx + h),
                        fmt(cy - h)
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }
    for (k, path) in paths.iter().enumerate() {
        let mut d = String::new();
        for run in path.runs() {
            for (i, p) in run.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{} {}",
                    if i == 0 { 'M' } else { 'L' },
                    fmt(p[0]),
                    fmt(-p[1])
                );
            }
            if path.closed {
                d.push('Z');
            }
        }
        let dash = if path.dashed {
            r#" stroke-dasharray="4 3""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<path class="trace" stroke="{}"{dash} {stroke} d="{d}"><title>{}</title></path>"#,
            COLORS[k % COLORS.len()],
            path.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One `radius,x,y,residual` row per trace point, in plane coordinates.
pub fn traces_csv(traces: &[BallTrace]) -> String {
    let mut s = String::from("radius,x,y,residual\n");
    for t in traces {
        for (p, res) in t.planar().iter().zip(&t.residuals) {
            let _ = writeln!(s, "{},{},{},{}", t.radius, p[0], p[1], res);
        }
    }
    s
}

/// One `r,y1,y2` row per curve sample.
pub fn curves_csv(curves: &[VBallCurve]) -> String {
    let mut s = String::from("r,y1,y2\n");
    for c in curves {
        for p in &c.polyline {
            let _ = writeln!(s, "{},{},{}", c.r, p[0], p[1]);
        }
    }
    s
}
