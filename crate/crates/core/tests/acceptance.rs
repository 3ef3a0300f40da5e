//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Thresholds and time limits are pinned below. Failing criteria are reported,
//! not hidden; the process exits non-zero on a FAIL only when
//! QPWH_ACCEPTANCE_STRICT is set, so that known gaps do not mask regressions
//! elsewhere in `cargo test`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpwh::complexcore::{classify_point, gamma, kernel, sqrt_upper, DomainLabel, I};
use qpwh::continuation::{circle_integral_nodes, classify_circle_point, residues, CircleClass, Continuator, RESIDUE_RADIUS_FRAC};
use qpwh::crossing::{
    chebyshev_cut_params, pointwise, puiseux_admissible, puiseux_phase_defect, reconstruct_v, s_terms, shore_lattice, synthetic,
    PuiseuxTerm, LATTICE,
};
use qpwh::field::{
    decay_check, dirichlet_contrast, edge_evaluator, edge_exponent, log_radii, neumann_contrast, vertex_evaluator, vertex_exponent,
    FieldEvaluator, Quantity, Window, MOLLIFIER,
};
use qpwh::linalg::CMat;
use qpwh::quad::LineRule;
use qpwh::spectral::{solve_strip_with_rule, StripSolution, MAX_ITER};
use qpwh::sumsplit::{cauchy_split, Axis, Sign, StripFunction};
use qpwh::uniqueness::{self, SectorCurve};
use qpwh::wh1d::{continue_along, continue_brute_force, solve_wh1d, LoopGeometry, LoopWord, Wh1dProblem};
use qpwh::{Params, SheetTag, C64};

const SEED: u64 = 20240917;

// criterion thresholds
const FACTOR_TOL: f64 = 1e-12;
const WH1D_TOL: f64 = 1e-10;
const SPLIT_TOL: f64 = 1e-10;
const SOLVE_TOL: f64 = 1e-6;
const HELDOUT_TOL: f64 = 1e-5;
const REFINE_TOL: f64 = 5e-6;
const RESIDUE_REL: f64 = 0.01;
const OVERLAP_TOL: f64 = 1e-5;
const SEPARATION: f64 = 1e3;
const V_RATIO: f64 = 1e-3;
/// accuracy of the P-contour and residue-circle rules
const S_TOL: f64 = 1e-8;
const S12_CONTROL: f64 = 1e2;
const HELMHOLTZ_REL: f64 = 1e-2;
const CONTRAST_TOL: f64 = 1e-3;
const EDGE: (f64, f64) = (0.4, 0.6);
const VERTEX_MIN: f64 = -0.5;
const DECAY_FACTOR: f64 = 3.2;
const KNOWN_Y_TOL: f64 = 1e-5;
const ZERO_SEPARATION: f64 = 1e4;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Line {
    id: usize,
    name: &'static str,
    out: Outcome,
    elapsed: Duration,
    limit: Duration,
}

fn timed(id: usize, name: &'static str, limit_s: f64, f: impl FnOnce() -> Outcome) -> Line {
    let t = Instant::now();
    let out = f();
    let elapsed = t.elapsed();
    let line = Line { id, name, out, elapsed, limit: Duration::from_secs_f64(limit_s) };
    print_line(&line);
    line
}

fn print_line(l: &Line) {
    let in_time = l.elapsed <= l.limit;
    let ok = l.out.passed && in_time;
    println!(
        "{} [{:2}] {}: {} ({:.2} s, limit {:.0} s{})",
        if ok { "PASS" } else { "FAIL" },
        l.id,
        l.name,
        l.out.detail,
        l.elapsed.as_secs_f64(),
        l.limit.as_secs_f64(),
        if in_time { "" } else { ", over time" }
    );
}

fn desk() -> Params {
    Params::new(2.0, C64::new(0.3, 0.8), C64::new(0.3, 0.8)).unwrap()
}

fn max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn c1_factorization(p: &Params) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let t = SheetTag::PHYSICAL;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let a = C64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-p.kappa..p.kappa));
        let b = C64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-p.kappa..p.kappa));
        let k = kernel(p, a, b, t).unwrap();
        // both orderings
        let d1 = (gamma(p, a, b, t).unwrap() * gamma(p, a, -b, t).unwrap() * k - 1.0).norm();
        let d2 = (gamma(p, b, a, t).unwrap() * gamma(p, b, -a, t).unwrap() * k - 1.0).norm();
        worst = worst.max(d1).max(d2);
    }
    outcome(worst < FACTOR_TOL, format!("max defect {worst:.2e} over 10^4 strip points (< {FACTOR_TOL:.0e})"))
}

fn c2_mapping(p: &Params) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut n, mut bad, mut drawn) = (0, 0, 0);
    while n < 1000 {
        drawn += 1;
        let xi = C64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let l = classify_point(p, xi);
        if !(l.contains(&DomainLabel::HPlus) || l.contains(&DomainLabel::HMinus)) {
            continue;
        }
        n += 1;
        let s = sqrt_upper(p, xi, SheetTag::PHYSICAL).unwrap();
        if !classify_point(p, s).contains(&DomainLabel::HPlus) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} violations among {n} points of H+ u H- ({drawn} drawn)"))
}

fn c3_wh1d(p: &Params) -> Outcome {
    let sol = solve_wh1d(&Wh1dProblem::default_for(p.k, p.k1)).unwrap();
    let resid = max((0..100).map(|i| sol.residual(C64::new(-10.0 + 0.2 * i as f64 + 0.05, 0.0))));
    let one = LoopWord::parse("-").unwrap();
    let two = LoopWord::parse("- -").unwrap();
    let geo = LoopGeometry::default();
    let (mut flip, mut back, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    for xi in [C64::new(0.1, 0.3), C64::new(-0.4, 0.2), C64::new(0.6, 0.5), C64::new(0.0, 1.0)] {
        let w0 = sol.w_plus(xi);
        let w1 = continue_along(&sol, &one, xi).unwrap();
        flip = flip.max((w1 / w0 + 1.0).norm());
        back = back.max((continue_along(&sol, &two, xi).unwrap() / w0 - 1.0).norm());
        oracle = oracle.max((continue_brute_force(&sol, &one, xi, geo).unwrap() - w1).norm() / w0.norm());
    }
    let ok = resid < WH1D_TOL && flip < WH1D_TOL && back < WH1D_TOL && oracle < WH1D_TOL;
    outcome(
        ok,
        format!("residual {resid:.1e}, single-loop ratio+1 {flip:.1e}, double-loop ratio-1 {back:.1e}, path-stepping oracle {oracle:.1e} (< {WH1D_TOL:.0e})"),
    )
}

fn c4_sumsplit(p: &Params) -> Outcome {
    let kap = p.kappa;
    let (k1, k2sq) = (p.k1, p.k2sq());
    let funcs: Vec<(&str, Axis, StripFunction)> = vec![
        ("1/(x^2+4)", Axis::First, StripFunction::one(|x| Ok(1.0 / (x * x + 4.0)), kap, 2.0)),
        ("1/((x+2i)(x-3i))", Axis::First, StripFunction::one(|x| Ok(1.0 / ((x + 2.0 * I) * (x - 3.0 * I))), kap, 2.0)),
        ("1/sqrt(x^2+4)", Axis::First, StripFunction::one(|x| Ok(1.0 / (x * x + 4.0).sqrt()), kap, 1.0)),
        (
            "cos(0.3a)/((b-2i)(b+1-1.5i))",
            Axis::Second,
            StripFunction::new(|a, b| Ok((a * 0.3).cos() / ((b - 2.0 * I) * (b + 1.0 - 1.5 * I))), kap, 2.0),
        ),
        (
            "gamma(a,-b)/((a+k1)(b+k2))",
            Axis::Second,
            StripFunction::new(move |a, b| Ok(qpwh::complexcore::gamma_phys(k2sq, a, -b) / ((a + k1) * (b + k1))), kap, 0.5),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let pts: Vec<(C64, C64)> = (0..100)
        .map(|_| {
            let a = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-0.75 * kap..0.75 * kap));
            let b = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-0.75 * kap..0.75 * kap));
            (a, b)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut oracle = 0.0f64;
    let mut parts = Vec::new();
    for (name, axis, f) in &funcs {
        let mut w = 0.0f64;
        for &(a, b) in &pts {
            let plus = cauchy_split(f, *axis, Sign::Plus, (a, b), 1e-12).unwrap();
            let minus = cauchy_split(f, *axis, Sign::Minus, (a, b), 1e-12).unwrap();
            w = w.max((plus + minus - f.eval(a, b).unwrap()).norm());
            if *name == "1/(x^2+4)" {
                oracle = oracle.max((plus - I / (4.0 * (a + 2.0 * I))).norm());
            }
        }
        parts.push(format!("{name} {w:.0e}"));
        worst = worst.max(w);
    }
    outcome(
        worst < SPLIT_TOL && oracle < SPLIT_TOL,
        format!("max |[f]+ + [f]- - f| {worst:.1e}, rational oracle {oracle:.1e} (< {SPLIT_TOL:.0e}); {}", parts.join(", ")),
    )
}

struct Solves {
    s64: StripSolution,
    s128: Option<StripSolution>,
}

fn c5_solve(p: &Params) -> (Outcome, Solves) {
    let s64 = solve_strip_with_rule(p, LineRule::with_nodes(64).unwrap(), SOLVE_TOL, MAX_ITER, None).unwrap();
    let r_first = s64.report.residual_first;
    let (h_first, h_second) = s64.heldout_residuals(5, 10).unwrap();
    // refinement, warm-started from the coarse Nystrom interpolant
    let rule = LineRule::with_nodes(128).unwrap();
    let za: Vec<C64> = rule.x.iter().map(|&x| C64::new(x, p.kappa)).collect();
    let zb: Vec<C64> = rule.x.iter().map(|&x| C64::new(x, -p.kappa)).collect();
    let guess = s64.eval_first(&za, &zb).unwrap();
    let s128 = solve_strip_with_rule(p, rule, SOLVE_TOL, MAX_ITER, Some(&guess)).ok();
    let refine = match &s128 {
        Some(s) => {
            // compare both interpolants on common strip points
            let xs: Vec<f64> = (0..12).map(|i| -1.4 + 2.8 * i as f64 / 11.0 + 0.013).collect();
            let z1: Vec<C64> = xs.iter().map(|&x| C64::new(x, p.kappa)).collect();
            let z2: Vec<C64> = xs.iter().map(|&x| C64::new(x, -p.kappa)).collect();
            let a = s64.eval_first(&z1, &z2).unwrap();
            let b = s.eval_first(&z1, &z2).unwrap();
            a.sub(&b).max_abs() / b.max_abs()
        }
        None => f64::INFINITY,
    };
    let r128 = s128.as_ref().map(|s| s.report.residual_first).unwrap_or(f64::NAN);
    let ok = r_first < SOLVE_TOL && h_second < HELDOUT_TOL && refine < REFINE_TOL;
    let o = outcome(
        ok,
        format!(
            "64^2 node residual {r_first:.2e} (< {SOLVE_TOL:.0e}), held-out 50 pts: first {h_first:.2e} second {h_second:.2e} (< {HELDOUT_TOL:.0e}), \
             64->128 change {refine:.2e} (< {REFINE_TOL:.0e}; 128^2 residual {r128:.2e})"
        ),
    );
    (o, Solves { s64, s128 })
}

/// Residue by the trapezoidal rule on a tabulated circle.
fn residues_from_table(tab: &CMat, w: &[C64], along_rows: bool) -> Vec<C64> {
    let (n_circ, n_sweep) = if along_rows { (tab.rows, tab.cols) } else { (tab.cols, tab.rows) };
    (0..n_sweep)
        .map(|j| (0..n_circ).map(|i| w[i] * if along_rows { tab.at(i, j) } else { tab.at(j, i) }).sum::<C64>() / (2.0 * PI * I))
        .collect()
}

fn c6_residues(sol: &StripSolution, cont: &Continuator) -> Outcome {
    let p = &sol.params;
    let rad = RESIDUE_RADIUS_FRAC * p.k.norm();
    let c1 = circle_integral_nodes(-p.k1, rad, 64);
    let c2 = circle_integral_nodes(-p.k2, rad, 64);
    let sweep = |im: f64| -> Vec<C64> { (0..20).map(|i| C64::new(-1.5 + 3.0 * i as f64 / 19.0, im)).collect() };
    let up = sweep(0.3);
    let down = sweep(-0.3);
    let rel = |num: &[C64], want: &dyn Fn(C64) -> C64, pts: &[C64]| max(num.iter().zip(pts).map(|(r, &z)| (r - want(z)).norm() / want(z).norm()));
    let res_w1 = residues_from_table(&sol.eval_first(&c1.z, &up).unwrap(), &c1.w, true);
    let err_w1 = rel(&res_w1, &|z| residues::w_first(p, z), &up);
    let res_w2 = residues_from_table(&sol.eval_second(&up, &c2.z).unwrap(), &c2.w, false);
    let err_w2 = rel(&res_w2, &|z| residues::w_second(p, z), &up);
    let res_u1 = residues_from_table(&cont.u_table(&c1.z, &down).unwrap(), &c1.w, true);
    let err_u1 = rel(&res_u1, &|z| residues::u_first(p, z), &down);
    let res_u2 = residues_from_table(&cont.u_table(&down, &c2.z).unwrap(), &c2.w, false);
    let err_u2 = rel(&res_u2, &|z| residues::u_second(p, z), &down);
    let worst = err_w1.max(err_w2).max(err_u1).max(err_u2);
    outcome(
        worst < RESIDUE_REL,
        format!("max relative deviation over 20 sweep points: W at -k1 {err_w1:.1e}, W at -k2 {err_w2:.1e}, U at -k1 {err_u1:.1e}, U at -k2 {err_u2:.1e} (< {RESIDUE_REL})"),
    )
}

fn c7_overlap(sol: &StripSolution, cont: &Continuator) -> Outcome {
    let k = sol.params.kappa;
    let mut worst_formula = 0.0f64;
    let mut worst_grid = 0.0f64;
    for i in 0..20 {
        let a = -1.2 + 2.4 * (i as f64) / 19.0;
        let b = 0.9 - 1.7 * ((i * 7 % 20) as f64) / 19.0;
        let z1 = C64::new(a, -k * (0.25 + 0.5 * ((i % 3) as f64) / 2.0));
        let z2 = C64::new(b, k * (0.25 + 0.5 * ((i % 4) as f64) / 3.0));
        let g = sol.eval_first(&[z1], &[z2]).unwrap().at(0, 0);
        let w_rr = cont.w_real_plane(z1, z2).unwrap();
        let w_rp = cont.w_real_p(z1, z2).unwrap();
        worst_formula = worst_formula.max((w_rr - w_rp).norm() / w_rr.norm());
        worst_grid = worst_grid.max(((w_rr - g).norm() / g.norm()).max((w_rp - g).norm() / g.norm()));
    }
    outcome(
        worst_formula < OVERLAP_TOL && worst_grid < OVERLAP_TOL,
        format!("R x R vs R x P relative {worst_formula:.2e}, continued vs strip values {worst_grid:.2e} at 20 points (< {OVERLAP_TOL:.0e})"),
    )
}

fn c8_classifier() -> Outcome {
    let mut wrong = 0;
    let mut phis: Vec<f64> = (0..1000).map(|i| -PI + 2.0 * PI * i as f64 / 999.0).collect();
    phis.extend([-PI, -PI / 2.0, PI, -PI + 1e-9, -PI / 2.0 - 1e-9]);
    for &phi in &phis {
        let allowed = classify_circle_point(phi).class == CircleClass::SingularAllowed;
        if allowed != (phi > -PI && phi < -PI / 2.0) {
            wrong += 1;
        }
    }
    let ends = classify_circle_point(-PI).class == CircleClass::AnalyticForced && classify_circle_point(-PI / 2.0).class == CircleClass::AnalyticForced;
    outcome(wrong == 0 && ends, format!("{wrong} mismatches over {} angles, endpoints excluded: {ends}", phis.len()))
}

fn c9_crossing(sol: &StripSolution, cont: &Continuator) -> Outcome {
    let p = &sol.params;
    let mut table_bad = 0;
    for n1 in -8..=8 {
        for n2 in -8..=8 {
            let t = PuiseuxTerm { n1, m1: 2, n2, m2: 2 };
            // factorized form (1 - e1)(1 - e2) = 0, evaluated from the phases
            let factorized = puiseux_phase_defect(t) < 1e-12;
            if puiseux_admissible(t).unwrap() != factorized || factorized != (n1 % 2 == 0 || n2 % 2 == 0) {
                table_bad += 1;
            }
        }
    }
    let ts = chebyshev_cut_params(p, LATTICE);
    let tab = |a: &[C64], b: &[C64]| cont.u_prime_table(a, b);
    let lat = shore_lattice(p, &tab, &ts, &ts, qpwh::contours::SHORE_OFFSET, true).unwrap();
    let resid = max(lat.iter().map(|s| s.residual()));
    let scale = max(lat.iter().map(|s| s.scale()));
    let (h_first, h_second) = sol.heldout_residuals(16, 16).unwrap();
    let floor = h_first.max(h_second) * scale;
    let add = pointwise(synthetic::additive(p));
    let prod = pointwise(synthetic::product(p));
    let pos = max(shore_lattice(p, &add, &ts, &ts, qpwh::contours::SHORE_OFFSET, true).unwrap().iter().map(|s| s.residual() / s.scale()));
    let neg = shore_lattice(p, &prod, &ts, &ts, qpwh::contours::SHORE_OFFSET, true)
        .unwrap()
        .iter()
        .map(|s| s.residual() / s.scale())
        .fold(f64::INFINITY, f64::min);
    let sep = neg / pos.max(f64::MIN_POSITIVE);
    outcome(
        table_bad == 0 && resid < floor && sep >= SEPARATION,
        format!(
            "Puiseux table mismatches {table_bad}/289; solved U' on {LATTICE}^2 shores: {resid:.2e} vs noise floor {floor:.2e}; \
             controls: additive {pos:.1e}, product {neg:.1e}, separation {sep:.1e} (>= {SEPARATION:.0e})"
        ),
    )
}

fn c10_boundary(sol: &StripSolution, cont: &Continuator) -> Outcome {
    let p = &sol.params;
    let xs = [(0.5, 0.5), (1.0, 1.0), (1.5, 0.5), (0.5, 1.5), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0), (0.7, 1.3), (1.3, 0.7), (1.5, 1.5)];
    let tab = |a: &[C64], b: &[C64]| cont.u_prime_table(a, b);
    let v = reconstruct_v(p, &tab, &xs).unwrap();
    let ev = FieldEvaluator::for_region(sol, 3.0, 0.0, Window::both(MOLLIFIER)).unwrap();
    let mut worst = 0.0f64;
    for (&(a, b), vq1) in xs.iter().zip(&v) {
        let q3 = ev.transform(Quantity::UPrime, -a, -b, 0.0, Window::both(MOLLIFIER)).norm();
        worst = worst.max(vq1.norm() / q3);
    }
    let tabu = |a: &[C64], b: &[C64]| cont.u_table(a, b);
    let mut s_max = 0.0f64;
    let mut control = f64::INFINITY;
    for &(a, b) in &[(1.0, 1.0), (0.5, 1.5)] {
        let st = s_terms(p, &tab, a, b).unwrap();
        s_max = s_max.max(st.s1.norm()).max(st.s2.norm()).max(st.s12.norm());
        // without the compensating explicit term
        control = control.min(s_terms(p, &tabu, a, b).unwrap().s12.norm());
    }
    let ratio = control / s_max.max(S_TOL);
    outcome(
        worst < V_RATIO && s_max < S_TOL && ratio >= S12_CONTROL,
        format!(
            "max |v(Q1)|/|v(Q3)| {worst:.1e} at 10 points (< {V_RATIO:.0e}); S1,S2,S12 max {s_max:.1e} (< {S_TOL:.0e}); \
             S12 control {control:.2e}, {ratio:.1e}x the tolerance (>= {S12_CONTROL:.0e})"
        ),
    )
}

fn c11_field(sol: &StripSolution) -> Outcome {
    let h = qpwh::field::FD_STEP;
    let ev = FieldEvaluator::for_region(sol, 2.6, 0.5 - h, Window::NONE).unwrap();
    let pts = [
        (1.0, 1.0, 1.0),
        (-1.0, 0.5, 0.5),
        (0.3, -1.2, 0.7),
        (-1.5, -1.5, 0.8),
        (2.0, 0.2, 0.6),
        (0.5, 2.0, 1.2),
        (-0.4, -0.3, 0.5),
        (1.2, -0.8, -0.6),
        (-1.8, 0.9, -1.0),
        (0.0, 0.0, 0.9),
    ];
    let helm = max(pts.iter().map(|&(a, b, c)| {
        let (r, u) = ev.helmholtz_residual(a, b, c);
        r / u
    }));
    let evm = FieldEvaluator::for_region(sol, 2.0, 0.0, Window::both(MOLLIFIER)).unwrap();
    let q1 = [(1.0, 1.0), (2.0, 0.5), (0.5, 0.5), (1.5, 1.5)];
    let dir = max(q1.iter().map(|&(a, b)| dirichlet_contrast(&evm, a, b, MOLLIFIER)));
    let neu = max(q1.iter().map(|&(a, b)| neumann_contrast(&evm, a, b, MOLLIFIER)));
    let rs = log_radii(0.01, 0.1, 6);
    let edge = edge_exponent(&edge_evaluator(sol, 1.0, 0.01).unwrap(), 1.0, &rs).unwrap();
    let vert = vertex_exponent(&vertex_evaluator(sol, 0.01).unwrap(), &rs).unwrap();
    let evd = FieldEvaluator::for_region(sol, 10.0, 0.0, Window::both(MOLLIFIER)).unwrap();
    let radii: Vec<f64> = (2..=10).map(|r| r as f64).collect();
    let decay = decay_check(&evd, &[1.25 * PI], &radii, MOLLIFIER);
    let rate = decay.iter().map(|d| d.rate).fold(f64::INFINITY, f64::min);
    let need = DECAY_FACTOR * sol.params.kappa;
    let e = edge.fit.exponent;
    let ok = helm < HELMHOLTZ_REL
        && dir < CONTRAST_TOL
        && neu < CONTRAST_TOL
        && edge.accepted
        && e > EDGE.0
        && e < EDGE.1
        && vert.accepted
        && vert.fit.exponent > VERTEX_MIN
        && rate >= need;
    outcome(
        ok,
        format!(
            "Helmholtz {helm:.1e}|u| (< {HELMHOLTZ_REL:.0e}); Dirichlet {dir:.1e}, Neumann {neu:.1e} (< {CONTRAST_TOL:.0e}); \
             edge {e:.3} (range {:.1}); vertex {:.3} (> {VERTEX_MIN}); decay {rate:.3} (>= {need:.2})",
            edge.dynamic_range, vert.fit.exponent
        ),
    )
}

fn c12_uniqueness() -> Outcome {
    let curve = SectorCurve::bisector(0.2, 2.4).unwrap();
    let f = uniqueness::synthetic::f(1.3);
    let y = uniqueness::synthetic::y(1.3);
    let r = uniqueness::uniqueness_demo_1d(&curve, &f, Some(&y)).unwrap();
    let known = r.exact_error.unwrap().max(r.reconstruction_error);
    let zero = |_: C64| C64::new(0.0, 0.0);
    let r0 = uniqueness::uniqueness_demo_1d(&curve, &zero, None).unwrap();
    let z0 = r0.max_transform_on_s.max(r0.max_f_on_l).max(r0.reconstruction_error);
    let sep = r.max_transform_on_s / z0.max(f64::MIN_POSITIVE);
    let g = |z: C64| (I * z).exp() / (z + C64::new(1.0, 1.0));
    let f2 = |a: C64, b: C64| f(a) * g(b);
    let r2 = uniqueness::uniqueness_demo_2d(&curve, &f2, Some((&f, &g))).unwrap();
    let zero2 = |_: C64, _: C64| C64::new(0.0, 0.0);
    let r2_zero = uniqueness::uniqueness_demo_2d(&curve, &zero2, None).unwrap();
    let sep_err = r2.separable_error.unwrap();
    let z2 = r2_zero.max_transform.max(r2_zero.max_g).max(r2_zero.layer1_max).max(r2_zero.layer2_max);
    let ok = known < KNOWN_Y_TOL && sep >= ZERO_SEPARATION && sep_err < KNOWN_Y_TOL && r2.max_g > 0.0 && z2 == 0.0;
    outcome(
        ok,
        format!(
            "known-y error {known:.1e} (< {KNOWN_Y_TOL:.0e}); f=0 vs f!=0 separation {sep:.1e} (>= {ZERO_SEPARATION:.0e}); \
             2D separable error {sep_err:.1e}, 2D zero case max {z2:.0e}"
        ),
    )
}

fn main() {
    let p = desk();
    let mut lines = Vec::new();
    lines.push(timed(1, "factorization identity", 1.0, || c1_factorization(&p)));
    lines.push(timed(2, "half-plane mapping", 1.0, || c2_mapping(&p)));
    lines.push(timed(3, "1D Wiener-Hopf and loop continuation", 5.0, || c3_wh1d(&p)));
    lines.push(timed(4, "sum-split operators", 5.0, || c4_sumsplit(&p)));
    let t = Instant::now();
    let (o5, solves) = c5_solve(&p);
    let l5 = Line { id: 5, name: "strip solve", out: o5, elapsed: t.elapsed(), limit: Duration::from_secs(600) };
    print_line(&l5);
    lines.push(l5);
    let sol = &solves.s64;
    let _ = &solves.s128;
    // shared continuation setup is charged to the first criterion that uses it
    let t = Instant::now();
    let cont = Continuator::new(sol).unwrap();
    let setup = t.elapsed();
    let mut l6 = timed(6, "residue identities", 120.0, || c6_residues(sol, &cont));
    l6.elapsed += setup;
    lines.push(l6);
    lines.push(timed(7, "overlap consistency", 120.0, || c7_overlap(sol, &cont)));
    lines.push(timed(8, "singularity-locus classifier", 1.0, c8_classifier));
    lines.push(timed(9, "additive crossing", 600.0, || c9_crossing(sol, &cont)));
    lines.push(timed(10, "boundary recovery", 600.0, || c10_boundary(sol, &cont)));
    lines.push(timed(11, "field checks", 900.0, || c11_field(sol)));
    lines.push(timed(12, "uniqueness demos", 300.0, c12_uniqueness));
    let failed: Vec<usize> = lines.iter().filter(|l| !(l.out.passed && l.elapsed <= l.limit)).map(|l| l.id).collect();
    println!("acceptance: {}/{} criteria pass; failing: {:?}", lines.len() - failed.len(), lines.len(), failed);
    if !failed.is_empty() && std::env::var_os("QPWH_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
