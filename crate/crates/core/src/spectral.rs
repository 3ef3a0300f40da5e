//! The spectral function W on the physical strip.
//!
//! W is sampled on S_A = (R + i kappa) x (R - i kappa). The two strip
//! relations
//!   W = g_first + T_first W,   W = g_second + T_second W
//! are discretised by the Nystrom method with boundary-value Cauchy matrices
//! and solved jointly in the least-squares sense (each relation alone leaves
//! near-null directions). The second relation lives naturally on
//! S_B = (R - i kappa) x (R + i kappa); moved onto S_A it picks up the
//! residue terms of the crossed poles:
//!   I_second = iint G/((t1-x1)(t2-x2)) - 2 pi i int G(t1, x2)/(t1-x1)
//!         + 2 pi i int G(x1, t2)/(t2-x2) + 4 pi^2 G(x1, x2),
//! with G(t1, t2) = gamma(x2, -t1) K(t1, t2) W(t1, t2).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexcore::{gamma_phys, kernel_phys, Params, SheetTag, C64, I};
use crate::contours::{make_shifted_line, Contour};
use crate::error::{Result, WhError};
use crate::linalg::{lsqr, CMat};
use crate::quad::LineRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionId {
    W,
    U,
    UPrime,
}

/// Sampled values of a spectral function on a tensor product of node sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub function: FunctionId,
    pub params: Params,
    pub z1: Vec<C64>,
    pub z2: Vec<C64>,
    /// values[i][j] at (z1[i], z2[j])
    pub values: CMat,
    pub sheet: SheetTag,
}

pub const CSV_HEADER: [&str; 7] = ["re_xi1", "im_xi1", "re_xi2", "im_xi2", "re_val", "im_val", "sheet_tag"];

fn tag_str(t: &SheetTag) -> String {
    format!("{}:{}:{}", t.plus_k, t.minus_k, t.outer)
}

fn parse_tag(s: &str) -> Option<SheetTag> {
    let v: Vec<i32> = s.split(':').map(|x| x.parse().ok()).collect::<Option<Vec<_>>>()?;
    if v.len() != 3 {
        return None;
    }
    Some(SheetTag { plus_k: v[0], minus_k: v[1], outer: v[2] })
}

impl SpectralGrid {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER)?;
        let tag = tag_str(&self.sheet);
        for (i, a) in self.z1.iter().enumerate() {
            for (j, b) in self.z2.iter().enumerate() {
                let v = self.values.at(i, j);
                wr.write_record(&[
                    format!("{:e}", a.re),
                    format!("{:e}", a.im),
                    format!("{:e}", b.re),
                    format!("{:e}", b.im),
                    format!("{:e}", v.re),
                    format!("{:e}", v.im),
                    tag.clone(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a grid back; the node sets are recovered from the row order.
    pub fn read_csv<R: std::io::Read>(r: R, function: FunctionId, params: Params) -> Result<Self> {
        let bad = |m: String| WhError::InvalidParameter { field: "grid csv".into(), reason: m };
        let mut rd = csv::Reader::from_reader(r);
        let hdr = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
        if hdr.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(bad("unexpected header".into()));
        }
        let mut rows: Vec<(C64, C64, C64, SheetTag)> = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let f = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(e.to_string()));
            let tag = parse_tag(&rec[6]).ok_or_else(|| bad("bad sheet tag".into()))?;
            rows.push((C64::new(f(0)?, f(1)?), C64::new(f(2)?, f(3)?), C64::new(f(4)?, f(5)?), tag));
        }
        if rows.is_empty() {
            return Err(bad("empty grid".into()));
        }
        let m2 = rows.iter().position(|r| r.0 != rows[0].0).unwrap_or(rows.len());
        if rows.len() % m2 != 0 {
            return Err(bad("ragged grid".into()));
        }
        let m1 = rows.len() / m2;
        let z1: Vec<C64> = (0..m1).map(|i| rows[i * m2].0).collect();
        let z2: Vec<C64> = (0..m2).map(|j| rows[j].1).collect();
        let values = CMat::from_fn(m1, m2, |i, j| rows[i * m2 + j].2);
        Ok(SpectralGrid { function, params, z1, z2, values, sheet: rows[0].3 })
    }
}

/// Node operators on S_A for the solve.
pub struct NodeOps {
    pub n: usize,
    c1: CMat,
    c1h: CMat,
    c2t: CMat,
    c2c: CMat,
    ka: CMat,
    g28o: CMat,
    g28i: CMat,
    gyx: CMat,
    g29o: CMat,
    pub g_first: CMat,
    pub g_second: CMat,
}

fn explicit_first(p: &Params, a: C64, b: C64) -> C64 {
    let k2sq = p.k2sq();
    I * gamma_phys(k2sq, a, b) * gamma_phys(k2sq, a, p.k2) / ((a + p.k1) * (b + p.k2))
}

fn explicit_second(p: &Params, a: C64, b: C64) -> C64 {
    let k2sq = p.k2sq();
    I * gamma_phys(k2sq, b, a) * gamma_phys(k2sq, b, p.k1) / ((a + p.k1) * (b + p.k2))
}

impl NodeOps {
    pub fn new(p: &Params, rule: &LineRule) -> Self {
        let n = rule.len();
        let k2sq = p.k2sq();
        let kap = p.kappa;
        let x: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, kap)).collect();
        let y: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, -kap)).collect();
        let c1 = rule.cauchy_on(-1.0);
        let c2 = rule.cauchy_on(1.0);
        let pi2 = 4.0 * PI * PI;
        NodeOps {
            n,
            c1h: c1.adjoint(),
            c2t: c2.transpose(),
            c2c: c2.conj(),
            c1,
            ka: CMat::from_fn(n, n, |i, j| kernel_phys(k2sq, x[i], y[j])),
            g28o: CMat::from_fn(n, n, |i, j| gamma_phys(k2sq, x[i], y[j]) / pi2),
            g28i: CMat::from_fn(n, n, |i, j| gamma_phys(k2sq, x[i], -y[j])),
            gyx: CMat::from_fn(n, n, |i, j| gamma_phys(k2sq, y[j], -x[i])),
            g29o: CMat::from_fn(n, n, |i, j| gamma_phys(k2sq, y[j], x[i]) / pi2),
            g_first: CMat::from_fn(n, n, |i, j| explicit_first(p, x[i], y[j])),
            g_second: CMat::from_fn(n, n, |i, j| explicit_second(p, x[i], y[j])),
        }
    }

    pub fn t_first(&self, w: &CMat) -> CMat {
        let f = self.ka.hadamard(w);
        self.g28o.hadamard(&self.g28i.hadamard(&self.c1.matmul(&f)).matmul(&self.c2t))
    }

    pub fn t28h(&self, r: &CMat) -> CMat {
        let a = self.g28o.conj().hadamard(r).matmul(&self.c2c);
        self.ka.conj().hadamard(&self.c1h.matmul(&self.g28i.conj().hadamard(&a)))
    }

    pub fn t_second(&self, w: &CMat) -> CMat {
        let f = self.ka.hadamard(w);
        let q = f.matmul(&self.c2t);
        let tpi = 2.0 * PI * I;
        // R1 (Gyx o (Q - 2 pi i f)) + Gyx o (2 pi i Q + 4 pi^2 f)
        let inner = self.gyx.hadamard(&q.sub(&f.scale(tpi)));
        let a = self.c1.matmul(&inner);
        let b = self.gyx.hadamard(&q.scale(tpi).add(&f.scale(C64::new(4.0 * PI * PI, 0.0))));
        self.g29o.hadamard(&a.add(&b))
    }

    pub fn t29h(&self, r: &CMat) -> CMat {
        let tpi = 2.0 * PI * I;
        let rp = self.g29o.conj().hadamard(r);
        let gc = self.gyx.conj();
        let c1r = gc.hadamard(&self.c1h.matmul(&rp));
        // terms through Q = f C2^T
        let via_q = c1r.add(&gc.hadamard(&rp).scale(tpi.conj())).matmul(&self.c2c);
        // terms through f directly
        let direct = c1r.scale(-tpi.conj()).add(&gc.hadamard(&rp).scale(C64::new(4.0 * PI * PI, 0.0)));
        self.ka.conj().hadamard(&via_q.add(&direct))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub n_nodes: usize,
    pub iterations: usize,
    /// least-squares relative residual after every tenth iteration
    pub history: Vec<f64>,
    /// max |W - T_first W - g_first| / max |g_first| at the collocation nodes
    pub residual_first: f64,
    pub residual_second: f64,
    /// the same for the initial guess W = g_first
    pub residual28_initial: f64,
    pub residual29_initial: f64,
    pub converged: bool,
    pub tol: f64,
}

/// Solved strip data and the evaluators built on it.
pub struct StripSolution {
    pub params: Params,
    pub rule: LineRule,
    /// W on S_A
    pub grid: SpectralGrid,
    /// W on S_B, from the first relation
    pub w_b: CMat,
    pub report: SolveReport,
}

fn max_abs_ratio(r: &CMat, g: &CMat) -> f64 {
    r.max_abs() / g.max_abs()
}

/// Default iteration cap for the least-squares solve.
pub const MAX_ITER: usize = 20_000;

pub fn solve_strip(p: &Params, n_nodes: usize, tol: f64) -> Result<StripSolution> {
    let rule = LineRule::with_nodes(n_nodes)?;
    solve_strip_with_rule(p, rule, tol, MAX_ITER, None)
}

/// `guess` optionally supplies W on S_A (else the explicit term of the first
/// relation is used).
pub fn solve_strip_with_rule(
    p: &Params,
    rule: LineRule,
    tol: f64,
    max_iter: usize,
    guess: Option<&CMat>,
) -> Result<StripSolution> {
    let ops = NodeOps::new(p, &rule);
    let n = ops.n;
    let nn = n * n;
    let to_mat = |v: &[C64]| CMat { rows: n, cols: n, data: v.to_vec() };
    let op = |v: &[C64]| -> Vec<C64> {
        let w = to_mat(v);
        let mut out = w.sub(&ops.t_first(&w)).data;
        out.extend(w.sub(&ops.t_second(&w)).data);
        out
    };
    let adj = |u: &[C64]| -> Vec<C64> {
        let r1 = to_mat(&u[..nn]);
        let r2 = to_mat(&u[nn..]);
        r1.sub(&ops.t28h(&r1)).add(&r2.sub(&ops.t29h(&r2))).data
    };
    let mut b = ops.g_first.data.clone();
    b.extend(ops.g_second.data.iter());
    let x0 = guess.map(|g| g.data.clone()).unwrap_or_else(|| ops.g_first.data.clone());
    let res = |w: &CMat| {
        (
            max_abs_ratio(&w.sub(&ops.t_first(w)).sub(&ops.g_first), &ops.g_first),
            max_abs_ratio(&w.sub(&ops.t_second(w)).sub(&ops.g_second), &ops.g_second),
        )
    };
    let (r28_0, r29_0) = res(&ops.g_first);
    let (x, rep) = lsqr(op, adj, &b, &x0, tol * 1e-3, max_iter);
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(WhError::NoConvergence { evals: rep.iterations, estimate: f64::NAN });
    }
    let w = to_mat(&x);
    let (r_first, r_second) = res(&w);
    if r_first > r28_0 {
        return Err(WhError::NoConvergence { evals: rep.iterations, estimate: r_first });
    }
    let report = SolveReport {
        n_nodes: n,
        iterations: rep.iterations,
        history: rep.history,
        residual_first: r_first,
        residual_second: r_second,
        residual28_initial: r28_0,
        residual29_initial: r29_0,
        converged: r_first < tol,
        tol,
    };
    StripSolution::from_values(p, rule, w, report)
}

impl StripSolution {
    /// Rebuilds the evaluators from W on S_A (for instance a stored grid).
    pub fn from_values(p: &Params, rule: LineRule, w: CMat, report: SolveReport) -> Result<StripSolution> {
        let kap = p.kappa;
        let z1: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, kap)).collect();
        let z2: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, -kap)).collect();
        let grid = SpectralGrid { function: FunctionId::W, params: *p, z1, z2, values: w, sheet: SheetTag::PHYSICAL };
        let mut sol = StripSolution { params: *p, rule, grid, w_b: CMat::zeros(0, 0), report };
        let xb: Vec<C64> = sol.rule.x.iter().map(|&g| C64::new(g, -kap)).collect();
        let yb: Vec<C64> = sol.rule.x.iter().map(|&g| C64::new(g, kap)).collect();
        sol.w_b = sol.eval_first(&xb, &yb)?;
        Ok(sol)
    }
}

/// The first relation with W given on L1 x L2 = (R + i o1) x (R + i o2),
/// evaluated on the tensor product of targets (Im z1 < o1, Im z2 > o2, or on
/// the lines as the corresponding limits).
pub fn apply_first(p: &Params, rule: &LineRule, o1: f64, o2: f64, w: &CMat, z1: &[C64], z2: &[C64]) -> Result<CMat> {
    for &a in z1 {
        for &b in z2 {
            if a.im > o1 + 1e-14 || b.im < o2 - 1e-14 {
                return Err(WhError::RegionMismatch(a, b, "first relation needs Im xi1 <= line 1, Im xi2 >= line 2".into()));
            }
        }
    }
    let k2sq = p.k2sq();
    let n = rule.len();
    let x: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, o1)).collect();
    let y: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, o2)).collect();
    let f = CMat::from_fn(n, n, |a, b| kernel_phys(k2sq, x[a], y[b]) * w.at(a, b));
    let t1: Vec<C64> = z1.iter().map(|z| z - C64::new(0.0, o1)).collect();
    let t2: Vec<C64> = z2.iter().map(|z| z - C64::new(0.0, o2)).collect();
    let r1 = rule.cauchy_at(&t1, -1.0);
    let r2t = rule.cauchy_at(&t2, 1.0).transpose();
    let m = r1.matmul(&f);
    let gi = CMat::from_fn(z1.len(), n, |i, b| gamma_phys(k2sq, z1[i], -y[b]));
    let s = gi.hadamard(&m).matmul(&r2t);
    let pi2 = 4.0 * PI * PI;
    Ok(CMat::from_fn(z1.len(), z2.len(), |i, j| {
        gamma_phys(k2sq, z1[i], z2[j]) / pi2 * s.at(i, j) + explicit_first(p, z1[i], z2[j])
    }))
}

/// The second relation with W given on L1 x L2 = (R + i o1) x (R + i o2),
/// evaluated for Im z1 > o1, Im z2 < o2 (tensor product of targets).
pub fn apply_second(p: &Params, rule: &LineRule, o1: f64, o2: f64, w: &CMat, z1: &[C64], z2: &[C64]) -> Result<CMat> {
    for &a in z1 {
        for &b in z2 {
            if a.im < o1 - 1e-14 || b.im > o2 + 1e-14 {
                return Err(WhError::RegionMismatch(a, b, "second relation needs Im xi1 >= line 1, Im xi2 <= line 2".into()));
            }
        }
    }
    let k2sq = p.k2sq();
    let n = rule.len();
    let x: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, o1)).collect();
    let y: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, o2)).collect();
    let f = CMat::from_fn(n, n, |a, b| kernel_phys(k2sq, x[a], y[b]) * w.at(a, b));
    let t1: Vec<C64> = z1.iter().map(|z| z - C64::new(0.0, o1)).collect();
    let t2: Vec<C64> = z2.iter().map(|z| z - C64::new(0.0, o2)).collect();
    let r1 = rule.cauchy_at(&t1, 1.0);
    let r2t = rule.cauchy_at(&t2, -1.0).transpose();
    let q = f.matmul(&r2t);
    let gm = CMat::from_fn(n, z2.len(), |a, j| gamma_phys(k2sq, z2[j], -x[a]));
    let s = r1.matmul(&gm.hadamard(&q));
    let pi2 = 4.0 * PI * PI;
    Ok(CMat::from_fn(z1.len(), z2.len(), |i, j| {
        gamma_phys(k2sq, z2[j], z1[i]) / pi2 * s.at(i, j) + explicit_second(p, z1[i], z2[j])
    }))
}

impl StripSolution {
    pub fn kappa(&self) -> f64 {
        self.params.kappa
    }

    /// W by the first relation from the S_A samples (Im z1 <= kappa, Im z2 >= -kappa).
    pub fn eval_first(&self, z1: &[C64], z2: &[C64]) -> Result<CMat> {
        let k = self.kappa();
        apply_first(&self.params, &self.rule, k, -k, &self.grid.values, z1, z2)
    }

    /// W by the second relation from the S_B samples (Im z1 >= -kappa, Im z2 <= kappa).
    pub fn eval_second(&self, z1: &[C64], z2: &[C64]) -> Result<CMat> {
        let k = self.kappa();
        apply_second(&self.params, &self.rule, -k, k, &self.w_b, z1, z2)
    }

    /// W at a point reachable by either strip relation.
    pub fn w_at(&self, z1: C64, z2: C64) -> Result<C64> {
        let k = self.kappa();
        if z1.im <= k && z2.im >= -k {
            Ok(self.eval_first(&[z1], &[z2])?.at(0, 0))
        } else if z1.im >= -k && z2.im <= k {
            Ok(self.eval_second(&[z1], &[z2])?.at(0, 0))
        } else {
            Err(WhError::RegionMismatch(z1, z2, "outside both strip relations; use continuation".into()))
        }
    }

    /// Held-out residuals of both relations on S_A at `m1 x m2` on-line points
    /// placed between collocation nodes of the central panels. Returns
    /// max |W - RHS| / max |explicit term| for each relation.
    pub fn heldout_residuals(&self, m1: usize, m2: usize) -> Result<(f64, f64)> {
        let p = &self.params;
        let k2sq = p.k2sq();
        let kap = self.kappa();
        let pick = |m: usize, shift: usize| -> Vec<f64> {
            let cands: Vec<f64> = self
                .rule
                .x
                .windows(2)
                .filter(|w| w[0].abs() < self.rule.l && w[1].abs() < self.rule.l)
                .map(|w| 0.5 * (w[0] + w[1]))
                .collect();
            let step = (cands.len() / m).max(1);
            (0..m).map(|i| cands[(i * step + shift) % cands.len()]).collect()
        };
        let h1 = pick(m1, 0);
        let h2 = pick(m2, 1);
        let z1: Vec<C64> = h1.iter().map(|&g| C64::new(g, kap)).collect();
        let z2: Vec<C64> = h2.iter().map(|&g| C64::new(g, -kap)).collect();
        let n = self.rule.len();
        let w = &self.grid.values;
        // interpolated W at held-out points and at mixed node/held-out pairs
        let p1 = CMat::from_fn(m1, n, |i, a| self.rule.interp_weights(C64::new(h1[i], 0.0))[a]);
        let p2 = CMat::from_fn(m2, n, |j, b| self.rule.interp_weights(C64::new(h2[j], 0.0))[b]);
        let w_hh = p1.matmul(w).matmul(&p2.transpose());
        // first relation: straight evaluation of its right-hand side
        let rhs_first = self.eval_first(&z1, &z2)?;
        let g_first = CMat::from_fn(m1, m2, |i, j| explicit_first(p, z1[i], z2[j]));
        let r_first = max_abs_ratio(&w_hh.sub(&rhs_first), &g_first);
        // second relation on S_A with its residue terms
        let x: Vec<C64> = self.rule.x.iter().map(|&g| C64::new(g, kap)).collect();
        let y: Vec<C64> = self.rule.x.iter().map(|&g| C64::new(g, -kap)).collect();
        let f = CMat::from_fn(n, n, |a, b| kernel_phys(k2sq, x[a], y[b]) * w.at(a, b));
        let r1 = self.rule.cauchy_at(&h1.iter().map(|&g| C64::new(g, 0.0)).collect::<Vec<_>>(), -1.0);
        let r2t = self.rule.cauchy_at(&h2.iter().map(|&g| C64::new(g, 0.0)).collect::<Vec<_>>(), 1.0).transpose();
        let q = f.matmul(&r2t); // n x m2
        let gam = CMat::from_fn(n, m2, |a, j| gamma_phys(k2sq, z2[j], -x[a]));
        let a_term = r1.matmul(&gam.hadamard(&q));
        // f(x_a, z2_j) through interpolation in the second variable
        let w_nh = w.matmul(&p2.transpose());
        let f_nh = CMat::from_fn(n, m2, |a, j| kernel_phys(k2sq, x[a], z2[j]) * w_nh.at(a, j));
        let b_term = r1.matmul(&gam.hadamard(&f_nh)).scale(-2.0 * PI * I);
        let w_hn = p1.matmul(w);
        let f_hn = CMat::from_fn(m1, n, |i, b| kernel_phys(k2sq, z1[i], y[b]) * w_hn.at(i, b));
        let c_in = f_hn.matmul(&r2t);
        let pi2 = 4.0 * PI * PI;
        let mut rhs_second = CMat::zeros(m1, m2);
        for i in 0..m1 {
            for j in 0..m2 {
                let gyx = gamma_phys(k2sq, z2[j], -z1[i]);
                let c = 2.0 * PI * I * gyx * c_in.at(i, j);
                let d = pi2 * gyx * kernel_phys(k2sq, z1[i], z2[j]) * w_hh.at(i, j);
                let tot = a_term.at(i, j) + b_term.at(i, j) + c + d;
                *rhs_second.at_mut(i, j) = gamma_phys(k2sq, z2[j], z1[i]) / pi2 * tot + explicit_second(p, z1[i], z2[j]);
            }
        }
        let g_second = CMat::from_fn(m1, m2, |i, j| explicit_second(p, z1[i], z2[j]));
        let r_second = max_abs_ratio(&w_hh.sub(&rhs_second), &g_second);
        Ok((r_first, r_second))
    }

    /// U = -i K W.
    pub fn u_tilde(&self, z1: C64, z2: C64) -> Result<C64> {
        Ok(u_from_w(&self.params, z1, z2, self.w_at(z1, z2)?))
    }

    /// U' = U - 1/((xi1 + k1)(xi2 + k2)).
    pub fn u_prime(&self, z1: C64, z2: C64) -> Result<C64> {
        Ok(self.u_tilde(z1, z2)? - polar_term(&self.params, z1, z2))
    }

    /// Contours of the sampled grid, for the sidecar.
    pub fn contours(&self) -> (Contour, Contour) {
        let k = self.kappa();
        (make_shifted_line(C64::new(0.0, k)), make_shifted_line(C64::new(0.0, -k)))
    }

    pub fn sidecar_json(&self) -> serde_json::Value {
        let (c1, c2) = self.contours();
        serde_json::json!({
            "params": self.params,
            "function": self.grid.function,
            "contours": [c1, c2],
            "line_rule": { "nodes": self.rule.len(), "central_half_width": self.rule.l },
            "solver": {
                "method": "joint least squares of both strip relations (LSQR)",
                "initial_guess": "explicit term of the first relation",
            },
            "report": self.report,
        })
    }
}

/// The second relation restricted to a fixed xi2: O(n) work per xi1.
pub struct SliceSecond<'a> {
    sol: &'a StripSolution,
    z2: C64,
    gq: Vec<C64>,
}

impl StripSolution {
    pub fn slice_second(&self, z2: C64) -> Result<SliceSecond<'_>> {
        let k = self.kappa();
        if z2.im > k {
            return Err(WhError::RegionMismatch(C64::new(0.0, 0.0), z2, "second relation needs Im xi2 <= kappa".into()));
        }
        let k2sq = self.params.k2sq();
        let n = self.rule.len();
        let x: Vec<C64> = self.rule.x.iter().map(|&g| C64::new(g, -k)).collect();
        let y: Vec<C64> = self.rule.x.iter().map(|&g| C64::new(g, k)).collect();
        let r2 = self.rule.cauchy_at(&[z2 - C64::new(0.0, k)], -1.0);
        let gq = (0..n)
            .map(|a| {
                let q: C64 = (0..n).map(|b| kernel_phys(k2sq, x[a], y[b]) * self.w_b.at(a, b) * r2.at(0, b)).sum();
                gamma_phys(k2sq, z2, -x[a]) * q
            })
            .collect();
        Ok(SliceSecond { sol: self, z2, gq })
    }
}

impl SliceSecond<'_> {
    pub fn eval(&self, z1: C64) -> Result<C64> {
        let sol = self.sol;
        let k = sol.kappa();
        if z1.im < -k {
            return Err(WhError::RegionMismatch(z1, self.z2, "second relation needs Im xi1 >= -kappa".into()));
        }
        let r1 = sol.rule.cauchy_at(&[z1 + C64::new(0.0, k)], 1.0);
        let s: C64 = (0..self.gq.len()).map(|a| r1.at(0, a) * self.gq[a]).sum();
        let k2sq = sol.params.k2sq();
        Ok(gamma_phys(k2sq, self.z2, z1) / (4.0 * PI * PI) * s + explicit_second(&sol.params, z1, self.z2))
    }
}

pub fn polar_term(p: &Params, z1: C64, z2: C64) -> C64 {
    1.0 / ((z1 + p.k1) * (z2 + p.k2))
}

pub fn u_from_w(p: &Params, z1: C64, z2: C64, w: C64) -> C64 {
    -I * kernel_phys(p.k2sq(), z1, z2) * w
}

/// Direction parameters of a radial sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DirectionParam {
    pub beta: f64,
    pub psi1: f64,
    pub psi2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    /// rms deviation of log|f| from the fitted line
    pub fit_residual: f64,
}

/// Least-squares fit of log|f| against log(lambda).
pub fn fit_power(lams: &[f64], vals: &[f64]) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = lams
        .iter()
        .zip(vals)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(l, v)| (l.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(WhError::FitFailed("fewer than three usable samples".into()));
    }
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    if xmax - xmin < 0.5 {
        return Err(WhError::FitFailed("insufficient dynamic range".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let res = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(GrowthFit { exponent: slope, fit_residual: res })
}

/// Fitted growth exponent of |f| along xi1 = L e^{i psi1} cos(beta),
/// xi2 = L e^{i psi2} sin(beta) for L in `lams`.
pub fn estimate_growth(f: &dyn Fn(C64, C64) -> Result<C64>, d: DirectionParam, lams: &[f64]) -> Result<GrowthFit> {
    let mut vals = Vec::with_capacity(lams.len());
    for &l in lams {
        let z1 = C64::from_polar(l * d.beta.cos(), d.psi1);
        let z2 = C64::from_polar(l * d.beta.sin(), d.psi2);
        vals.push(f(z1, z2)?.norm());
    }
    fit_power(lams, &vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desk() -> Params {
        Params::new(2.0, C64::new(0.3, 0.8), C64::new(0.3, 0.8)).unwrap()
    }

    #[test]
    fn adjoints_are_consistent() {
        let p = desk();
        let rule = LineRule::with_nodes(32).unwrap();
        let ops = NodeOps::new(&p, &rule);
        let n = ops.n;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rnd = || CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let (v, u) = (rnd(), rnd());
        let ip = |a: &CMat, b: &CMat| -> C64 { a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum() };
        let l = ip(&u, &ops.t_first(&v));
        let r = ip(&ops.t28h(&u), &v);
        assert!((l - r).norm() < 1e-10 * l.norm());
        let l = ip(&u, &ops.t_second(&v));
        let r = ip(&ops.t29h(&u), &v);
        assert!((l - r).norm() < 1e-10 * l.norm());
    }

    #[test]
    fn apply28_at_nodes_reproduces_operator() {
        let p = desk();
        let rule = LineRule::with_nodes(32).unwrap();
        let ops = NodeOps::new(&p, &rule);
        let w = ops.g_first.clone();
        let k = p.kappa;
        let x: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, k)).collect();
        let y: Vec<C64> = rule.x.iter().map(|&g| C64::new(g, -k)).collect();
        let a = apply_first(&p, &rule, k, -k, &w, &x, &y).unwrap();
        let b = ops.t_first(&w).add(&ops.g_first);
        assert!(a.sub(&b).max_abs() < 1e-12 * b.max_abs());
    }

    #[test]
    fn csv_roundtrip_and_fit() {
        let p = desk();
        let g = SpectralGrid {
            function: FunctionId::W,
            params: p,
            z1: vec![C64::new(0.0, 0.1), C64::new(1.0, 0.1)],
            z2: vec![C64::new(0.5, -0.1), C64::new(2.0, -0.1), C64::new(3.0, -0.1)],
            values: CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64 * 0.25)),
            sheet: SheetTag::PHYSICAL,
        };
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("re_xi1,im_xi1,re_xi2,im_xi2,re_val,im_val,sheet_tag"));
        let h = SpectralGrid::read_csv(&buf[..], FunctionId::W, p).unwrap();
        assert_eq!(g, h);
        // pure polar term decays like L^-2 along a radial sweep
        let d = DirectionParam { beta: 0.6, psi1: 1.0, psi2: 1.3 };
        let lams: Vec<f64> = (0..10).map(|i| 10f64.powf(2.0 + 0.2 * i as f64)).collect();
        let fit = estimate_growth(&|a, b| Ok(polar_term(&p, a, b)), d, &lams).unwrap();
        assert!((fit.exponent + 2.0).abs() < 0.02, "{fit:?}");
    }
}
