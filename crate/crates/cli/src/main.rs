mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ars2lab::catalog::{self, BuiltinParams, Surface};
use ars2lab::frames::{classify_point, trace_singular_locus, Chart};
use ars2lab::geodesics::{distance_to_z, integrate_geodesic, normalize_covector, DistanceOptions};
use ars2lab::integrals::{
    box_boundary_limit, extrapolate, surface_integral, tangency_divergence_experiment, three_scale_integral,
    Delta2, DivergenceOptions, LimitSchedule, Rect,
};
use ars2lab::topology::topology_report;
use ars2lab::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use output::{emit, Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "ars2lab", version, about = "Numerics for two-dimensional almost-Riemannian structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SurfaceArgs {
    /// Built-in surface name or path to a surface JSON file.
    #[arg(long, default_value = "tangency-plane")]
    surface: String,
    /// Torus amplitude for `torus-tangency`.
    #[arg(long)]
    a: Option<f64>,
    /// Orientation sign of the planar models.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<i8>,
    /// Chart name (defaults to the first chart).
    #[arg(long)]
    chart: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// CSV output path; a `<out>.json` sidecar records the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ScheduleArgs {
    /// Decreasing ε values (`a,b,c` or `start:stop:step`).
    #[arg(long, default_value = "4e-3,2e-3,1e-3,5e-4")]
    eps: String,
    /// Decreasing box-height factors c, with δ2 = c ψ_q δ1².
    #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
    delta2: String,
    /// Take `--delta2` as absolute heights.
    #[arg(long)]
    delta2_absolute: bool,
    #[arg(long, default_value = "0.6,0.5,0.4,0.3")]
    delta1: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ordinary / Grushin / tangency classification on a grid.
    Classify {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Polylines of the singular locus Z.
    TraceZ {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Gaussian curvature and side of Z on a grid.
    CurvatureMap {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Normal geodesic from (x, y) with covector direction (px, py).
    Geodesic {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        px: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        py: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Distance to Z at given or random points.
    Distance {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Point `x,y`; repeatable.
        #[arg(long = "point", allow_hyphen_values = true)]
        points: Vec<String>,
        /// Number of random points in the chart.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 720)]
        fan: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// ∫ K dA_s over the surface minus ε-bands (and boxes at fixed δ1, δ2).
    Integrate {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Three-scale integral against 2π e(E) or 2π(χ(M⁺) − χ(M⁻)).
    GaussBonnet {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Scaled difference of front curvature integrals near a tangency point.
    DivergenceExperiment {
        #[arg(long, default_value_t = 0.1)]
        a: f64,
        #[arg(long, default_value = "0.01:0.04:0.0025")]
        eps: String,
        /// RK4 steps per shot.
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Box-boundary limit at the origin of a chart in F3 form.
    BoxLimit {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tangency signs, indices, Euler characteristics and the integer identity.
    Topology {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sampled check of the genericity assumptions.
    Validate {
        #[command(flatten)]
        surface: SurfaceArgs,
    },
}

fn load_surface(args: &SurfaceArgs) -> Result<Surface> {
    let path = Path::new(&args.surface);
    if path.is_file() {
        return catalog::load(path);
    }
    catalog::builtin(
        &args.surface,
        BuiltinParams {
            a: args.a,
            alpha: args.alpha,
        },
    )
}

fn pick_chart<'s>(surface: &'s Surface, args: &SurfaceArgs) -> Result<&'s Chart> {
    match &args.chart {
        Some(name) => surface
            .chart(name)
            .ok_or_else(|| Error::Precondition(format!("surface `{}` has no chart `{name}`", surface.name))),
        None => Ok(&surface.charts[0]),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Precondition(format!("cannot parse number list `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step != 0.0 && (stop - start) / step >= 0.0) {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + step * k as f64).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn schedule(args: &ScheduleArgs) -> Result<LimitSchedule> {
    let d2 = parse_list(&args.delta2)?;
    let s = LimitSchedule {
        eps: parse_list(&args.eps)?,
        delta2: if args.delta2_absolute {
            Delta2::Absolute(d2)
        } else {
            Delta2::Relative(d2)
        },
        delta1: parse_list(&args.delta1)?,
        ..Default::default()
    };
    s.validate()?;
    Ok(s)
}

fn grid_points(chart: &Chart, n: usize) -> Vec<[f64; 2]> {
    let [x0, x1, y0, y1] = chart.domain;
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            pts.push([
                x0 + (x1 - x0) * i as f64 / n as f64,
                y0 + (y1 - y0) * j as f64 / n as f64,
            ]);
        }
    }
    pts
}

fn sidecar(command: &str, config: Value, summary: Value) -> Value {
    json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "config": config, "summary": summary })
}

fn print_json(v: &Value) {
    use std::io::Write;
    // a closed pipe is not an error for a summary
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("serializable summary"));
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify { surface, grid, out } => {
            let s = load_surface(&surface)?;
            let chart = pick_chart(&s, &surface)?;
            let mut t = Table::new(vec!["x", "y", "class"]);
            for p in grid_points(chart, grid) {
                let class = match classify_point(chart, p) {
                    Ok(c) => c.name().to_string(),
                    Err(Error::RankIndeterminate { .. }) => "indeterminate".into(),
                    Err(e) => return Err(e),
                };
                t.push(vec![p[0].into(), p[1].into(), class.into()]);
            }
            let config = json!({ "surface": s.name, "chart": chart.name, "grid": grid });
            emit(&t, out.out.as_deref(), &sidecar("classify", config, Value::Null))?;
        }
        Command::TraceZ { surface, grid, out } => {
            let s = load_surface(&surface)?;
            let chart = match &surface.chart {
                Some(_) => pick_chart(&s, &surface)?,
                None => s.topology_chart(),
            };
            let n = grid.unwrap_or(s.grid);
            let curves = trace_singular_locus(chart, n)?;
            let mut t = Table::new(vec!["curve", "index", "x", "y", "closed"]);
            for (i, c) in curves.iter().enumerate() {
                for (k, p) in c.points.iter().enumerate() {
                    t.push(vec![i.into(), k.into(), p[0].into(), p[1].into(), (c.closed as i64).into()]);
                }
            }
            let config = json!({ "surface": s.name, "chart": chart.name, "grid": n });
            let summary = json!({ "components": curves.len() });
            emit(&t, out.out.as_deref(), &sidecar("trace-z", config, summary))?;
        }
        Command::CurvatureMap { surface, grid, out } => {
            let s = load_surface(&surface)?;
            let chart = pick_chart(&s, &surface)?;
            let k = chart.frame.curvature();
            let mut t = Table::new(vec!["x", "y", "det", "K"]);
            for p in grid_points(chart, grid) {
                let d = chart.frame.det_at(p)?;
                let kv = if d == 0.0 { f64::NAN } else { k.eval(p[0], p[1]).unwrap_or(f64::NAN) };
                t.push(vec![p[0].into(), p[1].into(), d.into(), kv.into()]);
            }
            let config = json!({ "surface": s.name, "chart": chart.name, "grid": grid });
            emit(&t, out.out.as_deref(), &sidecar("curvature-map", config, Value::Null))?;
        }
        Command::Geodesic { surface, x, y, px, py, length, step, out } => {
            let s = load_surface(&surface)?;
            let chart = pick_chart(&s, &surface)?;
            let p0 = normalize_covector(&chart.frame, [x, y], [px, py])?;
            let path = integrate_geodesic(chart, [x, y], p0, length, step)?;
            let mut t = Table::new(vec!["t", "x", "y", "p_x", "p_y", "h"]);
            for st in &path.states {
                t.push(vec![st.t.into(), st.q[0].into(), st.q[1].into(), st.p[0].into(), st.p[1].into(), st.h.into()]);
            }
            let config = json!({ "surface": s.name, "chart": chart.name, "x": x, "y": y, "p": p0, "length": length, "step": step });
            let drift = path.states.iter().map(|s| (s.h - 0.5).abs()).fold(0.0, f64::max);
            emit(&t, out.out.as_deref(), &sidecar("geodesic", config, json!({ "max_hamiltonian_drift": drift })))?;
        }
        Command::Distance { surface, points, random, seed, fan, out } => {
            let s = load_surface(&surface)?;
            let chart = pick_chart(&s, &surface)?;
            let mut pts = points
                .iter()
                .map(|p| {
                    let v = parse_list(p)?;
                    match v.as_slice() {
                        [x, y] => Ok([*x, *y]),
                        _ => Err(Error::Precondition(format!("a point is `x,y`, got `{p}`"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let [x0, x1, y0, y1] = chart.domain;
            for _ in 0..random {
                pts.push([rng.gen_range(x0..x1), rng.gen_range(y0..y1)]);
            }
            let opts = DistanceOptions {
                fan,
                ..Default::default()
            };
            let mut t = Table::new(vec!["x", "y", "distance"]);
            for p in &pts {
                t.push(vec![p[0].into(), p[1].into(), distance_to_z(chart, *p, opts)?.into()]);
            }
            let config = json!({ "surface": s.name, "chart": chart.name, "points": points, "random": random, "seed": seed, "fan": fan });
            emit(&t, out.out.as_deref(), &sidecar("distance", config, Value::Null))?;
        }
        Command::Integrate { surface, schedule: sargs, out } => {
            let s = load_surface(&surface)?;
            let sched = schedule(&sargs)?;
            let sites = ars2lab::integrals::box_sites(&s)?;
            // boxes at the largest scales of the schedule
            let mut boxes: Vec<Vec<Rect>> = vec![Vec::new(); s.charts.len()];
            let d1 = sched.delta1[0];
            for site in &sites {
                let d2 = sched.delta2.height(0, d1, site.psi);
                boxes[site.chart].push(ars2lab::integrals::tangency_box(&s.charts[site.chart], site.location, d1, d2)?);
            }
            let values = sched
                .eps
                .iter()
                .map(|&e| surface_integral(&s, e, &boxes, None))
                .collect::<Result<Vec<_>>>()?;
            let fit = extrapolate(&sched.eps, &values)?;
            let mut t = Table::new(vec!["eps", "value"]);
            for (e, v) in sched.eps.iter().zip(&values) {
                t.push(vec![(*e).into(), (*v).into()]);
            }
            let d2 = if sites.is_empty() { Value::Null } else { json!(sched.delta2.values()[0]) };
            let config = json!({ "surface": s.name, "schedule": sched, "delta1": if sites.is_empty() { Value::Null } else { json!(d1) }, "delta2": d2 });
            let summary = json!({ "limit": fit.limit, "fit": fit, "tangency_points": sites.len() });
            emit(&t, out.out.as_deref(), &sidecar("integrate", config, summary.clone()))?;
            if out.out.is_some() {
                print_json(&summary);
            }
        }
        Command::GaussBonnet { surface, schedule: sargs, out } => {
            let s = load_surface(&surface)?;
            let sched = schedule(&sargs)?;
            let r = three_scale_integral(&s, &sched)?;
            let (expected, source) = match s.e_e {
                Some(e) => (2.0 * std::f64::consts::PI * e as f64, "2*pi*e(E)"),
                None => {
                    let chi = ars2lab::topology::euler_char(&s, 1)? - ars2lab::topology::euler_char(&s, -1)?;
                    (2.0 * std::f64::consts::PI * chi as f64, "2*pi*(chi(M+)-chi(M-))")
                }
            };
            let mut t = Table::new(vec![
                "level", "delta1", "delta2", "eps", "value", "limit", "b", "p", "residual",
            ]);
            for l in &r.eps_levels {
                for (e, v) in l.fit.h.iter().zip(&l.fit.values) {
                    t.push(vec![
                        "eps".into(), l.delta1.into(), l.delta2.into(), (*e).into(), (*v).into(),
                        l.fit.limit.into(), l.fit.b.into(), l.fit.p.into(), l.fit.residual.into(),
                    ]);
                }
            }
            for l in &r.delta2_levels {
                for (d2, v) in l.fit.h.iter().zip(&l.fit.values) {
                    t.push(vec![
                        "delta2".into(), l.delta1.into(), (*d2).into(), f64::NAN.into(), (*v).into(),
                        l.fit.limit.into(), l.fit.b.into(), l.fit.p.into(), l.fit.residual.into(),
                    ]);
                }
            }
            if let Some(f) = &r.delta1_fit {
                for (d1, v) in f.h.iter().zip(&f.values) {
                    t.push(vec![
                        "delta1".into(), (*d1).into(), f64::NAN.into(), f64::NAN.into(), (*v).into(),
                        f.limit.into(), f.b.into(), f.p.into(), f.residual.into(),
                    ]);
                }
            }
            let summary = json!({
                "surface": s.name,
                "integral": r.value,
                "expected": expected,
                "expected_from": source,
                "residual": (r.value - expected).abs(),
                "tangency_points": r.sites.len(),
            });
            let config = json!({ "surface": s.name, "schedule": sched });
            if out.out.is_some() {
                emit(&t, out.out.as_deref(), &sidecar("gauss-bonnet", config, summary.clone()))?;
            }
            print_json(&summary);
        }
        Command::DivergenceExperiment { a, eps, steps, out } => {
            let eps_list = parse_list(&eps)?;
            let opts = DivergenceOptions {
                steps,
                ..Default::default()
            };
            let rows = tangency_divergence_experiment(a, &eps_list, &opts)?;
            let mut t = Table::new(vec!["eps", "scaled_kg_difference", "kg_plus", "kg_minus"]);
            for r in &rows {
                t.push(vec![r.eps.into(), r.value.into(), r.plus.front_kg.into(), r.minus.front_kg.into()]);
            }
            let config = json!({ "a": a, "eps": eps_list, "steps": steps });
            emit(&t, out.out.as_deref(), &sidecar("divergence-experiment", config, Value::Null))?;
        }
        Command::BoxLimit { surface, schedule: sargs, out } => {
            let s = load_surface(&surface)?;
            let chart = pick_chart(&s, &surface)?;
            let sched = schedule(&sargs)?;
            let r = box_boundary_limit(chart, &sched)?;
            let mut t = Table::new(vec!["delta1", "delta2", "corner_sum", "edges", "total"]);
            for row in &r.rows {
                t.push(vec![row.delta1.into(), row.delta2.into(), row.corner_sum.into(), row.edges.into(), row.total.into()]);
            }
            let summary = json!({
                "value": r.value,
                "tau_q": r.tau_q,
                "expected": r.expected,
                "relative_error": ((r.value - r.expected) / r.expected).abs(),
                "delta1_fit": r.delta1_fit,
            });
            let config = json!({ "surface": s.name, "chart": chart.name, "schedule": sched });
            if out.out.is_some() {
                emit(&t, out.out.as_deref(), &sidecar("box-limit", config, summary.clone()))?;
            }
            print_json(&summary);
        }
        Command::Topology { surface, out } => {
            let s = load_surface(&surface)?;
            let r = topology_report(&s)?;
            let mut t = Table::new(vec!["x", "y", "tau_q", "index_sigma", "curve"]);
            for rec in &r.tangencies {
                t.push(vec![
                    rec.location[0].into(),
                    rec.location[1].into(),
                    (rec.tau_q as i64).into(),
                    rec.index_sigma.map_or(Cell::Text(String::new()), Cell::Int),
                    rec.curve.into(),
                ]);
            }
            let summary = json!({ "surface": s.name, "report": r });
            if out.out.is_some() {
                emit(&t, out.out.as_deref(), &sidecar("topology", json!({ "surface": s.name }), summary.clone()))?;
            }
            print_json(&summary);
            if let Some(res) = r.residual {
                if res != 0 {
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Validate { surface } => {
            let s = load_surface(&surface)?;
            let r = catalog::validate(&s)?;
            print_json(&json!({ "surface": s.name, "passed": r.passed(), "report": r }));
            if !r.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::Eval(_) => "eval",
        Error::RankIndeterminate { .. } => "rank_indeterminate",
        Error::H0Violation { .. } => "h0_violation",
        Error::Precondition(_) => "precondition",
        Error::NonTransversal { .. } => "non_transversal",
        Error::UnresolvedTangency { .. } => "unresolved_tangency",
        Error::ExitedDomain { .. } => "exited_domain",
        Error::Transversality { .. } => "transversality",
        Error::NoHit { .. } => "no_hit",
        Error::OnSingularLocus { .. } => "on_singular_locus",
        Error::Unconverged(_) => "unconverged",
        Error::LimitOrder(_) => "limit_order",
        Error::UnstableSign { .. } => "unstable_sign",
        Error::Resolution(_) => "resolution",
        Error::EulerMismatch { .. } => "euler_mismatch",
        Error::Schema(_) => "schema",
        Error::UnknownSurface(_) => "unknown_surface",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("ARS2LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore the error if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let err = json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{err}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
