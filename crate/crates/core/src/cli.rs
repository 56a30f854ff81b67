//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verified claim failed, 2 domain or range error,
//! 3 parse error.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::balls::{
    convexity_check, convexity_sections, convexity_threshold_scan, trace_ball, BallTrace,
    ConvexityReport, DEFAULT_CONVEXITY_TOL,
};
use crate::error::{Error, Result};
use crate::geom::{angle_at_slice, Domain, Point, Window};
use crate::halfspace::{horocycle_centers, v_halfplane, vball_curve};
use crate::inclusions::{
    best_radius, halfspace_inclusion_suite, p_triangle_experiment, punctured_suite, InclusionReport,
};
use crate::metrics::{evaluate, sup_oracle, MetricKind};
use crate::render::{self, Path};

const DEFAULT_TOL: f64 = 1e-9;
const TOL_ENV: &str = "HYPMETRICS_TOL";

#[derive(Parser, Debug)]
#[command(
    name = "hypmetrics",
    version,
    about = "Hyperbolic-type metrics: evaluation, balls and inclusion checks"
)]
struct Cli {
    /// Solver and inclusion tolerance [env: HYPMETRICS_TOL, default 1e-9].
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a metric at a pair of points.
    Eval(EvalArgs),
    /// Trace metric balls and write them as SVG, CSV or JSON.
    Ball(BallArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Sharp inclusion radii t(r) as CSV.
    Table(TableArgs),
    /// Horocycle centers and visual angle of a pair in the upper half-plane.
    Horocycle(HorocycleArgs),
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    metric: MetricKind,
    /// Domain JSON, inline or a path to a file.
    #[arg(long)]
    domain: String,
    #[arg(long, allow_hyphen_values = true)]
    x: Point,
    #[arg(long, allow_hyphen_values = true)]
    y: Point,
    /// Also compute the boundary supremum numerically and print the discrepancy.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct BallArgs {
    #[arg(long)]
    metric: MetricKind,
    #[arg(long)]
    domain: String,
    #[arg(long, allow_hyphen_values = true)]
    center: Point,
    /// Comma separated radii, overlaid in one output.
    #[arg(long, value_delimiter = ',', required = true)]
    radius: Vec<f64>,
    #[arg(long, default_value_t = 720)]
    rays: usize,
    #[arg(long, value_enum, default_value_t = Format::Svg)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overlay the closed-form v-ball boundary (v metric in the half-plane).
    #[arg(long)]
    closed_form: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    metric: Option<MetricKind>,
    #[arg(long, allow_hyphen_values = true)]
    center: Option<Point>,
    /// Base point of the half-space suite.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<Point>,
    #[arg(long, value_delimiter = ',')]
    radius: Vec<f64>,
    /// Radius grid `start:stop:step`, both ends included.
    #[arg(long, value_parser = parse_grid)]
    r_grid: Option<Grid>,
    #[arg(long, value_delimiter = ',')]
    x_norms: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 720)]
    rays: usize,
    #[arg(long, default_value_t = 200_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, value_delimiter = ',', default_value = "s,j,k,euclidean,q,p")]
    metrics: Vec<MetricKind>,
    #[arg(long, value_parser = parse_grid)]
    r_grid: Option<Grid>,
    #[arg(long, default_value_t = 1.0)]
    x_norm: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HorocycleArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: Point,
    #[arg(long, allow_hyphen_values = true)]
    y: Point,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Svg,
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Suite {
    Punctured,
    Halfspace,
    Convexity,
    ConjectureP,
    PTriangle,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [a, b, step] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    if !(a.is_finite() && b.is_finite() && step > 0.0 && a <= b) {
        return Err("need start <= stop and step > 0".into());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok(Grid((0..=n).map(|k| a + step * k as f64).collect()))
}

/// Outcome of a command: text for stdout (or the output file) and whether every
/// checked claim held.
struct Outcome {
    text: String,
    passed: bool,
    summary: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome {
            text,
            passed: true,
            summary: None,
        }
    }
}

/// Runs the CLI on the process arguments and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(out) => {
            if let Some(s) = out.summary {
                eprintln!("{s}");
            }
            if out.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_parse_error() {
                3
            } else {
                2
            }
        }
    }
}

fn tolerance(flag: Option<f64>) -> Result<f64> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{TOL_ENV}={v:?} is not a number")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(Error::Range(format!("tolerance {tol} must be positive")))
    }
}

fn load_domain(arg: &str) -> Result<Domain> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::InvalidDomain(format!("{arg}: {e}")))?
    };
    Domain::from_json(&text)
}

fn execute(cli: Cli) -> Result<Outcome> {
    let tol = tolerance(cli.tol)?;
    let (out, path) = match cli.command {
        Command::Eval(a) => (cmd_eval(&a)?, None),
        Command::Ball(a) => (cmd_ball(&a, tol)?, a.output),
        Command::Verify(a) => (cmd_verify(&a, tol)?, a.output),
        Command::Table(a) => (cmd_table(&a)?, a.output),
        Command::Horocycle(a) => (cmd_horocycle(&a)?, None),
    };
    match path {
        Some(p) => std::fs::write(&p, &out.text)
            .map_err(|e| Error::Unsupported(format!("{}: {e}", p.display())))?,
        None => print!("{}", out.text),
    }
    Ok(out)
}

/// Twelve decimals with trailing zeros removed.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<Outcome> {
    let g = load_domain(&a.domain)?;
    let value = evaluate(a.metric, &g, &a.x, &a.y)?;
    let mut text = format!("{}\n", format_value(value));
    if a.oracle {
        let o = oracle_value(a.metric, &g, &a.x, &a.y)?;
        text.push_str(&format!(
            "oracle {}\ndiscrepancy {:.3e}\n",
            format_value(o),
            (o - value).abs()
        ));
    }
    Ok(Outcome::ok(text))
}

/// The s and v metrics as plain boundary suprema.
fn oracle_value(metric: MetricKind, g: &Domain, x: &Point, y: &Point) -> Result<f64> {
    if x.dist(y) == 0.0 {
        return Ok(0.0);
    }
    let (xs, ys) = (x.coords(), y.coords());
    let window = match g {
        Domain::HalfSpace { .. } => {
            let w = 10.0 * (x.last().max(y.last()) + x.dist(y));
            Some(Window::new(xs[0].min(ys[0]) - w, xs[0].max(ys[0]) + w)?)
        }
        _ => None,
    };
    let d = x.dist(y);
    let res = match metric {
        MetricKind::S => sup_oracle(
            g,
            |z| d / (crate::geom::vec::dist(xs, z) + crate::geom::vec::dist(z, ys)),
            1e-14,
            window.as_ref(),
        )?,
        MetricKind::V => sup_oracle(
            g,
            |z| angle_at_slice(xs, z, ys).unwrap_or(0.0),
            1e-14,
            window.as_ref(),
        )?,
        m => return Err(Error::UnsupportedMetric(m)),
    };
    Ok(res.value)
}

fn cmd_ball(a: &BallArgs, tol: f64) -> Result<Outcome> {
    let g = load_domain(&a.domain)?;
    let traces: Vec<BallTrace> = a
        .radius
        .iter()
        .map(|&r| trace_ball(&g, a.metric, &a.center, r, a.rays, tol))
        .collect::<Result<_>>()?;
    let text = match a.format {
        Format::Csv => render::traces_csv(&traces),
        Format::Json => to_json(&traces),
        Format::Svg => {
            let mut paths: Vec<Path> = traces.iter().map(Path::from_trace).collect();
            if a.closed_form {
                if a.metric != MetricKind::V || !matches!(g, Domain::HalfSpace { dim: 2 }) {
                    return Err(Error::Unsupported(
                        "closed form needs the v metric in the half-plane".into(),
                    ));
                }
                for &r in &a.radius {
                    let curve = vball_curve(r, a.rays.max(8))?;
                    paths.push(Path::from_curve(&curve, [a.center[0], 0.0], a.center[1]));
                }
            }
            render::svg(&g, &paths)
        }
    };
    let truncated: usize = traces.iter().map(|t| t.truncated_rays.len()).sum();
    let mut out = Outcome::ok(text);
    if truncated > 0 {
        out.summary = Some(format!("{truncated} rays truncated at the escape bound"));
    }
    Ok(out)
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn grid_or(grid: &Option<Grid>, default: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    grid.as_ref().map_or_else(default, |g| g.0.clone())
}

fn inclusion_csv(reports: &[InclusionReport]) -> String {
    let mut s = String::from("metric,r,t,min_margin,sharpness_gap,holds,label\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},\"{}\"\n",
            r.inner.0, r.outer.1, r.inner.1, r.min_margin, r.sharpness_gap, r.holds, r.label
        ));
    }
    s
}

fn inclusion_outcome(suite: &str, reports: Vec<InclusionReport>, format: Format) -> Outcome {
    let failed = reports.iter().filter(|r| !r.holds).count();
    let passed = failed == 0;
    let text = match format {
        Format::Csv => inclusion_csv(&reports),
        _ => to_json(
            &json!({ "suite": suite, "passed": passed, "failed": failed, "reports": reports }),
        ),
    };
    Outcome {
        text,
        passed,
        summary: Some(format!(
            "{suite}: {} checks, {failed} failed",
            reports.len()
        )),
    }
}

fn cmd_verify(a: &VerifyArgs, tol: f64) -> Result<Outcome> {
    match a.suite {
        Suite::Punctured => {
            let metrics = match a.metric {
                Some(m) => vec![m],
                None => vec![
                    MetricKind::S,
                    MetricKind::J,
                    MetricKind::K,
                    MetricKind::Euclidean,
                    MetricKind::Q,
                    MetricKind::P,
                ],
            };
            let grid = grid_or(&a.r_grid, || {
                (1..=30).map(|k| PI * k as f64 / 30.0).collect()
            });
            let norms = if a.x_norms.is_empty() {
                vec![0.1, 1.0, 10.0]
            } else {
                a.x_norms.clone()
            };
            let reports = punctured_suite(&metrics, &grid, &norms, a.samples, tol)?;
            Ok(inclusion_outcome("punctured", reports, a.format))
        }
        Suite::Halfspace => {
            let x = a.x.clone().unwrap_or_else(|| Point::xy(0.0, 1.0));
            let grid = grid_or(&a.r_grid, || {
                (0..20)
                    .map(|k| 0.05 + 1.45 * (k as f64 + 0.5) / 20.0)
                    .collect()
            });
            let mut reports = Vec::new();
            for r in grid {
                reports.extend(halfspace_inclusion_suite(&x, r, a.samples, tol)?);
            }
            Ok(inclusion_outcome("halfspace", reports, a.format))
        }
        Suite::Convexity => {
            let g = match &a.domain {
                Some(d) => load_domain(d)?,
                None => Domain::punctured_origin(2),
            };
            let metric = a.metric.unwrap_or(MetricKind::S);
            let center = a.center.clone().unwrap_or_else(|| Point::basis(g.dim(), 0));
            if a.radius.is_empty() {
                return Err(Error::Range(
                    "--radius is required for the convexity suite".into(),
                ));
            }
            let mut rows: Vec<(f64, ConvexityReport)> = Vec::new();
            for &r in &a.radius {
                if g.dim() == 2 {
                    let trace = trace_ball(&g, metric, &center, r, a.rays, tol)?;
                    rows.push((r, convexity_check(&trace, DEFAULT_CONVEXITY_TOL)?));
                } else {
                    for rep in convexity_sections(&g, metric, &center, r, 4, a.rays, tol, a.seed)? {
                        rows.push((r, rep));
                    }
                }
            }
            let passed = rows.iter().all(|(_, rep)| rep.convex);
            let text = match a.format {
                Format::Csv => {
                    let mut s = String::from("metric,r,convex,max_deviation,tol,starlike\n");
                    for (r, rep) in &rows {
                        s.push_str(&format!(
                            "{metric},{r},{},{},{},{}\n",
                            rep.convex, rep.max_deviation, rep.tol, rep.starlike
                        ));
                    }
                    s
                }
                _ => to_json(&json!({
                    "suite": "convexity",
                    "metric": metric,
                    "passed": passed,
                    "reports": rows.iter().map(|(r, rep)| json!({ "r": r, "report": rep })).collect::<Vec<_>>(),
                })),
            };
            let nonconvex = rows.iter().filter(|(_, rep)| !rep.convex).count();
            Ok(Outcome {
                text,
                passed,
                summary: Some(format!(
                    "convexity: {} sections, {nonconvex} nonconvex",
                    rows.len()
                )),
            })
        }
        Suite::ConjectureP => {
            let g = Domain::punctured_origin(2);
            let grid = grid_or(&a.r_grid, || {
                (0..=30).map(|k| 0.35 + 0.005 * k as f64).collect()
            });
            let center = a.center.clone().unwrap_or_else(|| Point::xy(1.0, 0.0));
            let scan = convexity_threshold_scan(&g, MetricKind::P, &center, &grid, a.rays, tol)?;
            let target = 2f64.sqrt() - 1.0;
            let contains = scan.contains(target);
            let text = match a.format {
                Format::Csv => {
                    let mut s = String::from("r,convex,deviation_over_tol\n");
                    for (r, c, d) in &scan.verdicts {
                        s.push_str(&format!("{r},{c},{d}\n"));
                    }
                    s
                }
                _ => to_json(&json!({
                    "suite": "conjecture-p",
                    "scan": scan,
                    "width": scan.width(),
                    "contains_sqrt2_minus_1": contains,
                })),
            };
            // an experiment, not a claim: it never fails the run
            Ok(Outcome {
                text,
                passed: true,
                summary: Some(format!(
                    "conjecture-p: bracket [{:?}, {:?}], contains sqrt(2)-1: {contains}",
                    scan.last_convex, scan.first_nonconvex
                )),
            })
        }
        Suite::PTriangle => {
            let g = match &a.domain {
                Some(d) => load_domain(d)?,
                None => Domain::unit_ball(2)?,
            };
            let hit = p_triangle_experiment(&g, a.trials, a.seed)?;
            let text = match (a.format, &hit) {
                (Format::Csv, Some(v)) => format!(
                    "x,y,z,direct,via\n\"{}\",\"{}\",\"{}\",{},{}\n",
                    v.x, v.y, v.z, v.direct, v.via
                ),
                (Format::Csv, None) => "x,y,z,direct,via\n".into(),
                _ => to_json(
                    &json!({ "suite": "p-triangle", "trials": a.trials, "seed": a.seed, "violation": hit }),
                ),
            };
            Ok(Outcome {
                text,
                passed: true,
                summary: Some(match &hit {
                    Some(v) => format!("p-triangle: violation p(x,z) = {} > {}", v.direct, v.via),
                    None => format!("p-triangle: no violation in {} trials", a.trials),
                }),
            })
        }
    }
}

fn cmd_table(a: &TableArgs) -> Result<Outcome> {
    let grid = grid_or(&a.r_grid, || {
        (1..=30).map(|k| PI * k as f64 / 30.0).collect()
    });
    let mut s = String::from("metric,r,t\n");
    for &m in &a.metrics {
        for &r in &grid {
            s.push_str(&format!("{m},{r},{}\n", best_radius(m, a.x_norm, r)?));
        }
    }
    Ok(Outcome::ok(s))
}

fn cmd_horocycle(a: &HorocycleArgs) -> Result<Outcome> {
    let h = horocycle_centers(&a.x, &a.y)?;
    let v = v_halfplane(&a.x, &a.y)?;
    let mut s = format!(
        "z_plus {}\nz_minus {}\nv {}\n",
        h.z_plus,
        h.z_minus,
        format_value(v)
    );
    if h.degenerate {
        s.push_str("degenerate equal heights\n");
    }
    Ok(Outcome::ok(s))
}
