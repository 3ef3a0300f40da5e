//! Task pipelines. Each returns the in-run checks and writes its artifacts
//! through the `Sink`.

use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::PathBuf;

use qpwh::continuation::{classify_circle_point, CircleClass, Continuator, Formula};
use qpwh::crossing::{chebyshev_cut_params, reconstruct_v, s_terms, shore_lattice};
use qpwh::field::{FieldEvaluator, Window};
use qpwh::quad::LineRule;
use qpwh::spectral::{polar_term, solve_strip_with_rule, u_from_w, FunctionId, SolveReport, SpectralGrid, StripSolution};
use qpwh::uniqueness::{self, CurveShape, SectorCurve};
use qpwh::wh1d::{continue_along, continue_brute_force, solve_wh1d, LoopGeometry, LoopWord, Wh1dProblem};
use qpwh::{Params, SheetTag, WhError, C64};

use crate::config::{ConfigError, Function, ScenarioConfig, Shape, Task};
use crate::manifest::Sink;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when value < threshold.
    pub fn below(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, passed: value < threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, passed: value >= threshold }
    }
}

#[derive(Debug)]
pub enum TaskError {
    Config(ConfigError),
    Numerical(WhError),
    Io(String),
}

impl std::fmt::Display for TaskError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaskError::Config(e) => write!(f, "{e}"),
            TaskError::Numerical(e) => write!(f, "numerical failure: {e}"),
            TaskError::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl From<WhError> for TaskError {
    fn from(e: WhError) -> Self {
        TaskError::Numerical(e)
    }
}

impl From<ConfigError> for TaskError {
    fn from(e: ConfigError) -> Self {
        TaskError::Config(e)
    }
}

pub type TaskResult = Result<Vec<Check>, TaskError>;

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn c(v: &[f64]) -> C64 {
    C64::new(v[0], v[1])
}

pub fn run_task(task: Task, cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> TaskResult {
    match task {
        Task::Solve => solve(cfg, p, sink),
        Task::Continue => continuation(cfg, p, sink),
        Task::Crossing => crossing(cfg, p, sink),
        Task::Field => field(cfg, p, sink),
        Task::Wh1d => wh1d(cfg, p, sink),
        Task::Uniqueness => uniqueness(cfg, sink),
        Task::SingularMap => singular_map(cfg, sink),
    }
}

/// Solves the strip, or reloads a grid written by an earlier solve.
fn strip(cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> Result<StripSolution, TaskError> {
    let g = &cfg.grid;
    let Some(path) = &g.input else {
        let rule = LineRule::with_nodes(g.nodes)?;
        let sol = solve_strip_with_rule(p, rule, g.tol, g.max_iter, None)?;
        sink.note("strip", json!({ "source": "solved", "report": sol.report }));
        return Ok(sol);
    };
    let bad = |reason: String| TaskError::Config(ConfigError { field: "grid.input".into(), reason });
    let f = std::fs::File::open(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let grid = SpectralGrid::read_csv(f, FunctionId::W, *p).map_err(|e| bad(e.to_string()))?;
    let n = grid.z1.len();
    let rule = LineRule::with_nodes(n).map_err(|e| bad(e.to_string()))?;
    let k = p.kappa;
    let fits = grid.z2.len() == n
        && rule.x.iter().zip(&grid.z1).all(|(x, z)| (x - z.re).abs() <= 1e-12 * (1.0 + x.abs()) && (z.im - k).abs() <= 1e-12)
        && rule.x.iter().zip(&grid.z2).all(|(x, z)| (x - z.re).abs() <= 1e-12 * (1.0 + x.abs()) && (z.im + k).abs() <= 1e-12);
    if !fits {
        return Err(bad("grid nodes do not match the strip of these params".into()));
    }
    // the solve history travels next to the grid when available
    let hist = path.with_file_name("history.json");
    let report = std::fs::read_to_string(&hist)
        .ok()
        .and_then(|s| serde_json::from_str::<Value>(&s).ok())
        .and_then(|v| serde_json::from_value::<SolveReport>(v["report"].clone()).ok())
        .unwrap_or(SolveReport {
            n_nodes: n,
            iterations: 0,
            history: vec![],
            residual_first: f64::NAN,
            residual_second: f64::NAN,
            residual28_initial: f64::NAN,
            residual29_initial: f64::NAN,
            converged: false,
            tol: g.tol,
        });
    sink.note("strip", json!({ "source": path.display().to_string(), "report": report }));
    Ok(StripSolution::from_values(p, rule, grid.values, report)?)
}

fn solve(cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> TaskResult {
    let sol = strip(cfg, p, sink)?;
    let mut buf = Vec::new();
    sol.grid.write_csv(&mut buf).map_err(|e| TaskError::Io(e.to_string()))?;
    sink.write("grid.csv", &buf)?;
    let mut side = sol.sidecar_json();
    side["config_hash"] = json!(sink.config_hash());
    sink.write_json("grid.json", &side)?;
    sink.write_json("history.json", &json!({ "config_hash": sink.config_hash(), "report": sol.report }))?;
    let (h_first, h_second) = sol.heldout_residuals(5, 10)?;
    let tol = cfg.grid.tol;
    let ho = cfg.grid.heldout_factor * tol;
    Ok(vec![
        Check::below("residual_first", sol.report.residual_first, tol),
        Check::below("heldout_first", h_first, ho),
        Check::below("heldout_second", h_second, ho),
    ])
}

fn continuation(cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> TaskResult {
    let sol = strip(cfg, p, sink)?;
    let cont = Continuator::new(&sol)?;
    let b = &cfg.continuation;
    let k = p.kappa;
    let mut rows = Vec::new();
    let mut overlap = 0.0f64;
    let mut n_overlap = 0;
    for pt in &b.points {
        let (z1, z2) = (c(&pt[..2]), c(&pt[2..]));
        let v = match b.function {
            Function::W => cont.continue_w(z1, z2, Formula::Auto)?,
            Function::U | Function::UPrime => {
                let u = if z1.im < 0.0 && z2.im < 0.0 {
                    cont.continue_u(z1, z2)?
                } else {
                    u_from_w(p, z1, z2, cont.continue_w(z1, z2, Formula::Auto)?)
                };
                if b.function == Function::UPrime {
                    u - polar_term(p, z1, z2)
                } else {
                    u
                }
            }
        };
        if !finite(v) {
            return Err(WhError::SingularityOnContour(z1).into());
        }
        // both continuation surfaces cover the common strip
        if -k < z1.im && z1.im < 0.0 && 0.0 < z2.im && z2.im < k {
            let a = cont.continue_w(z1, z2, Formula::RealPlane)?;
            let bb = cont.continue_w(z1, z2, Formula::RealP)?;
            overlap = overlap.max((a - bb).norm() / a.norm());
            n_overlap += 1;
        }
        rows.push((z1, z2, v));
    }
    let id = match b.function {
        Function::W => FunctionId::W,
        Function::U => FunctionId::U,
        Function::UPrime => FunctionId::UPrime,
    };
    let mut buf = Vec::new();
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        wr.write_record(qpwh::spectral::CSV_HEADER).map_err(|e| TaskError::Io(e.to_string()))?;
        for (a, bb, v) in &rows {
            let t = SheetTag::PHYSICAL;
            wr.write_record(&[
                format!("{:e}", a.re),
                format!("{:e}", a.im),
                format!("{:e}", bb.re),
                format!("{:e}", bb.im),
                format!("{:e}", v.re),
                format!("{:e}", v.im),
                format!("{}:{}:{}", t.plus_k, t.minus_k, t.outer),
            ])
            .map_err(|e| TaskError::Io(e.to_string()))?;
        }
        wr.flush().map_err(|e| TaskError::Io(e.to_string()))?;
    }
    sink.write("continued.csv", &buf)?;
    sink.note("continue", json!({ "function": id, "points": rows.len(), "overlap_points": n_overlap }));
    let mut checks = vec![Check::below("non_finite_values", 0.0, 0.5)];
    if n_overlap > 0 {
        checks.push(Check::below("overlap_mismatch", overlap, b.overlap_tol));
    }
    Ok(checks)
}

fn crossing(cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> TaskResult {
    let sol = strip(cfg, p, sink)?;
    let cont = Continuator::new(&sol)?;
    let b = &cfg.crossing;
    let tab = |a: &[C64], bb: &[C64]| cont.u_prime_table(a, bb);
    let ts = chebyshev_cut_params(p, b.lattice);
    let lat = shore_lattice(p, &tab, &ts, &ts, b.offset, true)?;
    let (h_first, h_second) = sol.heldout_residuals(16, 16)?;
    let scale = lat.iter().map(|s| s.scale()).fold(0.0, f64::max);
    let floor = h_first.max(h_second) * scale;
    let worst = lat.iter().map(|s| s.residual()).fold(0.0, f64::max);
    let mut buf = Vec::new();
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        wr.write_record(["t1", "t2", "residual", "scale"]).map_err(|e| TaskError::Io(e.to_string()))?;
        for s in &lat {
            wr.serialize((s.t1, s.t2, s.residual(), s.scale())).map_err(|e| TaskError::Io(e.to_string()))?;
        }
        wr.flush().map_err(|e| TaskError::Io(e.to_string()))?;
    }
    sink.write("crossing.csv", &buf)?;
    let xs: Vec<(f64, f64)> = b.points.iter().map(|x| (x[0], x[1])).collect();
    let mut checks = vec![Check::below("crossing_vs_noise_floor", worst, floor)];
    let mut report = json!({ "max_residual": worst, "noise_floor": floor, "scale": scale });
    if !xs.is_empty() {
        let v = reconstruct_v(p, &tab, &xs)?;
        let st = s_terms(p, &tab, xs[0].0, xs[0].1)?;
        let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        report["v_q1"] = json!(v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
        report["s_terms"] = json!(st);
        checks.push(Check::below("v_on_q1", vmax, 1e-6));
    }
    sink.write_json("crossing.json", &report)?;
    Ok(checks)
}

fn field(cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> TaskResult {
    let sol = strip(cfg, p, sink)?;
    let b = &cfg.field;
    let x3min = b.check_points.iter().map(|x| x[2].abs() - qpwh::field::FD_STEP).fold(b.x3, f64::min);
    let xmax = b
        .check_points
        .iter()
        .map(|x| (x[0] * x[0] + x[1] * x[1]).sqrt() + qpwh::field::FD_STEP)
        .fold(b.extent * 2f64.sqrt(), f64::max);
    let ev = FieldEvaluator::for_region(&sol, xmax, x3min, Window::NONE)?;
    let m = b.samples;
    let at = |i: usize| -b.extent + 2.0 * b.extent * i as f64 / (m - 1) as f64;
    let pts: Vec<(f64, f64, f64)> = (0..m).flat_map(|i| (0..m).map(move |j| (at(i), at(j), b.x3))).collect();
    let mut buf = Vec::new();
    ev.write_slice(&mut buf, &pts).map_err(|e| TaskError::Io(e.to_string()))?;
    sink.write("field.csv", &buf)?;
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for x in &b.check_points {
        let (r, u) = ev.helmholtz_residual(x[0], x[1], x[2]);
        worst = worst.max(r / u);
        rows.push(json!({ "x": x, "residual": r, "abs_u": u }));
    }
    sink.write_json("field.json", &json!({ "helmholtz": rows, "rule_nodes": [ev.a1.len(), ev.a2.len()] }))?;
    Ok(vec![Check::below("helmholtz_relative", worst, b.helmholtz_tol)])
}

fn wh1d(cfg: &ScenarioConfig, p: &Params, sink: &mut Sink) -> TaskResult {
    let b = &cfg.wh1d;
    let sol = solve_wh1d(&Wh1dProblem::default_for(p.k, p.k1))?;
    let geo = LoopGeometry::default();
    let mut buf = Vec::new();
    let mut worst = 0.0f64;
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| TaskError::Io(e.to_string());
        wr.write_record(["word", "re_xi", "im_xi", "re_val", "im_val", "re_check", "im_check"]).map_err(io)?;
        for w in &b.words {
            let word = LoopWord::parse(w)?;
            for x in &b.points {
                let xi = c(x);
                let v = continue_along(&sol, &word, xi)?;
                let o = continue_brute_force(&sol, &word, xi, geo)?;
                worst = worst.max((v - o).norm() / sol.w_plus(xi).norm());
                wr.serialize((word.label(), xi.re, xi.im, v.re, v.im, o.re, o.im)).map_err(|e| TaskError::Io(e.to_string()))?;
            }
        }
        wr.flush().map_err(|e| TaskError::Io(e.to_string()))?;
    }
    sink.write("wh1d.csv", &buf)?;
    let resid = (0..100).map(|i| sol.residual(C64::new(-5.0 + 0.1 * i as f64, 0.0))).fold(0.0, f64::max);
    Ok(vec![Check::below("wh1d_residual", resid, 1e-10), Check::below("loop_word_mismatch", worst, b.tol)])
}

fn uniqueness(cfg: &ScenarioConfig, sink: &mut Sink) -> TaskResult {
    let b = &cfg.uniqueness;
    let mid = 0.5 * (b.beta1 + b.beta2);
    let shape = match b.shape {
        Shape::Ray => CurveShape::Ray { angle: mid },
        Shape::Arc => CurveShape::Arc { angle: mid, bend: b.bend },
    };
    let curve = SectorCurve::new(b.beta1, b.beta2, shape)?;
    let f = uniqueness::synthetic::f(b.synthetic_angle);
    let y = uniqueness::synthetic::y(b.synthetic_angle);
    let rep = uniqueness::uniqueness_demo_1d(&curve, &f, Some(&y))?;
    let zero = |_: C64| C64::new(0.0, 0.0);
    let rep0 = uniqueness::uniqueness_demo_1d(&curve, &zero, None)?;
    sink.write_json("uniqueness.json", &json!({ "synthetic": rep, "zero": rep0, "curve": curve }))?;
    let err = rep.exact_error.unwrap_or(f64::INFINITY).max(rep.reconstruction_error);
    Ok(vec![
        Check::below("reconstruction_error", err, b.tol),
        Check::below("zero_control", rep0.max_transform_on_s.max(rep0.max_f_on_l), 1e-300),
    ])
}

fn singular_map(cfg: &ScenarioConfig, sink: &mut Sink) -> TaskResult {
    let m = cfg.singular_map.samples;
    let mut buf = Vec::new();
    let mut wrong = 0usize;
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        wr.write_record(["phi", "class", "normal_1", "normal_2"]).map_err(|e| TaskError::Io(e.to_string()))?;
        for i in 0..m {
            let phi = -PI + 2.0 * PI * i as f64 / (m - 1) as f64;
            let l = classify_circle_point(phi);
            let allowed = l.class == CircleClass::SingularAllowed;
            if allowed != (phi > -PI && phi < -PI / 2.0) {
                wrong += 1;
            }
            let name = if allowed { "singular_allowed" } else { "analytic_forced" };
            wr.serialize((phi, name, l.normal.0, l.normal.1)).map_err(|e| TaskError::Io(e.to_string()))?;
        }
        wr.flush().map_err(|e| TaskError::Io(e.to_string()))?;
    }
    sink.write("singular_map.csv", &buf)?;
    Ok(vec![Check::below("misclassified", wrong as f64, 0.5)])
}

/// The grid of a finished run, for tests and `compare`.
pub fn grid_path(dir: &std::path::Path) -> PathBuf {
    dir.join("grid.csv")
}
