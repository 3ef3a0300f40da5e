//! Additive crossing of the branch lines xi1 = -k and xi2 = -k (cuts h-),
//! and the reconstruction of the boundary field from values on P x P.
//!
//! Shore points: a cut parameter t is arc length along h- from -k; the right
//! shore is displaced by +offset * i * tangent, the left by -offset. Shore
//! values are limits, so they are extrapolated linearly from offsets d and
//! d/2 (2 f(d/2) - f(d)), which removes the O(d) bias of a fixed offset.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexcore::{h_minus_tangent, h_plus, s_phys, Params, C64, I};
use crate::continuation::circle_integral_nodes;
use crate::contours::{make_hook, ContourRule, SHORE_OFFSET};
use crate::error::{Result, WhError};
use crate::linalg::CMat;
use crate::quad::{adaptive, gauss_legendre};

/// Cuts are truncated at this arc length, in units of |k|.
pub const CUT_LENGTH: f64 = 20.0;
/// Shore lattice size per cut.
pub const LATTICE: usize = 16;
/// Panels per shore of the P rule, and their order.
pub const P_PANELS: usize = 16;
pub const P_ORDER: usize = 16;

/// Batched evaluator: values on the tensor product of two point lists.
pub type Table<'a> = &'a (dyn Fn(&[C64], &[C64]) -> Result<CMat> + Sync);

/// A pointwise function presented as a table.
pub fn pointwise(f: impl Fn(C64, C64) -> Result<C64>) -> impl Fn(&[C64], &[C64]) -> Result<CMat> {
    move |a: &[C64], b: &[C64]| {
        let mut m = CMat::zeros(a.len(), b.len());
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                *m.at_mut(i, j) = f(x, y)?;
            }
        }
        Ok(m)
    }
}

/// Arc length of h- between -k and parameter tau.
pub fn arc_length(p: &Params, tau: f64) -> f64 {
    let k2sq = p.k2sq();
    // |d/dtau sqrt(k^2 - tau^2)| = tau / |sqrt(k^2 - tau^2)|
    let mut f = |t: f64| Ok(C64::new(t / (k2sq - t * t).sqrt().norm(), 0.0));
    adaptive(&mut f, 0.0, tau, 1e-13, 100_000).map(|r| r.value.re).unwrap_or(f64::NAN)
}

/// Inverse of `arc_length` by bisection.
pub fn tau_at_arc(p: &Params, t: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while arc_length(p, hi) < t {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if arc_length(p, m) < t {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// (left, right) shore points at arc length t.
pub fn shore_pair(p: &Params, t: f64, offset: f64) -> (C64, C64) {
    let tau = tau_at_arc(p, t);
    let h = -h_plus(p, tau);
    let nrm = I * h_minus_tangent(p, tau);
    (h - offset * nrm, h + offset * nrm)
}

/// Cut parameters clustered toward -k: t_j = T (1 - cos(pi (j + 1/2) / 2m)).
pub fn chebyshev_cut_params(p: &Params, m: usize) -> Vec<f64> {
    let tt = CUT_LENGTH * p.k.norm();
    (0..m).map(|j| tt * (1.0 - (PI * (j as f64 + 0.5) / (2.0 * m as f64)).cos())).collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShoreSample {
    pub t1: f64,
    pub t2: f64,
    pub ll: C64,
    pub lr: C64,
    pub rl: C64,
    pub rr: C64,
    pub offset: f64,
}

impl ShoreSample {
    pub fn residual(&self) -> f64 {
        (self.ll + self.rr - self.lr - self.rl).norm()
    }

    pub fn scale(&self) -> f64 {
        [self.ll, self.lr, self.rl, self.rr].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Shore samples on the lattice ts1 x ts2. With `extrapolate`, values are
/// the limits 2 f(d/2) - f(d); otherwise raw values at offset d.
pub fn shore_lattice(
    p: &Params,
    f: Table,
    ts1: &[f64],
    ts2: &[f64],
    offset: f64,
    extrapolate: bool,
) -> Result<Vec<ShoreSample>> {
    let offs: Vec<f64> = if extrapolate { vec![offset, 0.5 * offset] } else { vec![offset] };
    // points ordered [t][offset][side]
    let pts = |ts: &[f64]| -> Vec<C64> {
        let mut v = Vec::new();
        for &t in ts {
            for &o in &offs {
                let (l, r) = shore_pair(p, t, o);
                v.push(l);
                v.push(r);
            }
        }
        v
    };
    let z1 = pts(ts1);
    let z2 = pts(ts2);
    let tab = f(&z1, &z2)?;
    let no = offs.len();
    let val = |i: usize, s1: usize, j: usize, s2: usize| -> C64 {
        let at = |o1: usize, o2: usize| tab.at((i * no + o1) * 2 + s1, (j * no + o2) * 2 + s2);
        if extrapolate {
            // both points move together as the offset shrinks
            2.0 * at(1, 1) - at(0, 0)
        } else {
            at(0, 0)
        }
    };
    let mut out = Vec::with_capacity(ts1.len() * ts2.len());
    for (i, &t1) in ts1.iter().enumerate() {
        for (j, &t2) in ts2.iter().enumerate() {
            let s = ShoreSample {
                t1,
                t2,
                ll: val(i, 0, j, 0),
                lr: val(i, 0, j, 1),
                rl: val(i, 1, j, 0),
                rr: val(i, 1, j, 1),
                offset,
            };
            if ![s.ll, s.lr, s.rl, s.rr].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(WhError::InnerFailure {
                    node: C64::new(t1, t2),
                    source: Box::new(WhError::SingularityOnContour(C64::new(t1, t2))),
                });
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// |f(l,l) + f(r,r) - f(l,r) - f(r,l)| at one lattice point (default offset,
/// extrapolated).
pub fn crossing_residual(p: &Params, f: Table, t1: f64, t2: f64) -> Result<f64> {
    Ok(shore_lattice(p, f, &[t1], &[t2], SHORE_OFFSET, true)?[0].residual())
}

/// Synthetic functions with cuts on h-: s(xi) = i sqrt(xi^2 - k^2) flips sign
/// across h- and behaves like sqrt(xi + k) at -k.
pub mod synthetic {
    use super::*;

    /// s(xi1) + s(xi2): crosses additively.
    pub fn additive(p: &Params) -> impl Fn(C64, C64) -> Result<C64> {
        let k2sq = p.k2sq();
        move |a, b| Ok(s_phys(k2sq, a) + s_phys(k2sq, b))
    }

    /// s(xi1) s(xi2): four-term residual 4 |s(xi1) s(xi2)|.
    pub fn product(p: &Params) -> impl Fn(C64, C64) -> Result<C64> {
        let k2sq = p.k2sq();
        move |a, b| Ok(s_phys(k2sq, a) * s_phys(k2sq, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuiseuxTerm {
    pub n1: i64,
    pub m1: u32,
    pub n2: i64,
    pub m2: u32,
}

/// A term eta1^(n1/m1) eta2^(n2/m2) crosses additively iff
/// (1 - e^{2 pi i n1/m1})(1 - e^{2 pi i n2/m2}) = 0, i.e. iff it does not
/// branch about at least one of the lines. Decided in exact arithmetic.
pub fn puiseux_admissible(t: PuiseuxTerm) -> Result<bool> {
    if t.m1 == 0 || t.m2 == 0 {
        return Err(WhError::InvalidParameter { field: "m".into(), reason: "branch orders must be positive".into() });
    }
    Ok(t.n1.rem_euclid(t.m1 as i64) == 0 || t.n2.rem_euclid(t.m2 as i64) == 0)
}

/// The same criterion evaluated numerically from the four shore phases
/// 1 + e1 e2 = e1 + e2 (used to cross-check the exact rule).
pub fn puiseux_phase_defect(t: PuiseuxTerm) -> f64 {
    let e1 = C64::from_polar(1.0, 2.0 * PI * t.n1 as f64 / t.m1 as f64);
    let e2 = C64::from_polar(1.0, 2.0 * PI * t.n2 as f64 / t.m2 as f64);
    (1.0 + e1 * e2 - e1 - e2).norm()
}

/// Quadrature rule on P (the real axis pushed onto h-), truncated at arc
/// length CUT_LENGTH |k|.
pub fn p_rule(p: &Params) -> ContourRule {
    let tau_max = tau_at_arc(p, CUT_LENGTH * p.k.norm());
    ContourRule::new(&make_hook(p, SHORE_OFFSET, tau_max).reversed(), P_PANELS, P_ORDER)
}

fn fourier_sum(tab: &CMat, r1: &ContourRule, r2: &ContourRule, x1: f64, x2: f64) -> C64 {
    let e1: Vec<C64> = r1.z.iter().zip(&r1.w).map(|(z, w)| (-I * z * x1).exp() * w).collect();
    let e2: Vec<C64> = r2.z.iter().zip(&r2.w).map(|(z, w)| (-I * z * x2).exp() * w).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (i, a) in e1.iter().enumerate() {
        let row: C64 = e2.iter().enumerate().map(|(j, b)| tab.at(i, j) * b).sum();
        acc += a * row;
    }
    acc / (4.0 * PI * PI)
}

/// v(x) = (4 pi^2)^-1 iint_{P x P} U'(xi) e^{-i xi.x} for x in Q1; one
/// table serves all points.
pub fn reconstruct_v(p: &Params, f: Table, xs: &[(f64, f64)]) -> Result<Vec<C64>> {
    for &(a, b) in xs {
        if a <= 0.0 || b <= 0.0 {
            return Err(WhError::InvalidParameter { field: "x".into(), reason: "reconstruction needs x1, x2 > 0".into() });
        }
    }
    let r = p_rule(p);
    let tab = f(&r.z, &r.z)?;
    Ok(xs.iter().map(|&(a, b)| fourier_sum(&tab, &r, &r, a, b)).collect())
}

/// The same integral written on h- x h- with the four-shore combination
/// U'(l,l) + U'(r,r) - U'(l,r) - U'(r,l) (extrapolated shore values).
pub fn reconstruct_v_shores(p: &Params, f: Table, xs: &[(f64, f64)]) -> Result<Vec<C64>> {
    let tmax = CUT_LENGTH * p.k.norm();
    let tau_max = tau_at_arc(p, tmax);
    let (gx, gw) = gauss_legendre(P_ORDER);
    // Gauss nodes in tau on equal panels, as cut parameters
    let mut taus = Vec::new();
    let mut wts = Vec::new();
    for pi in 0..P_PANELS {
        let a = tau_max * pi as f64 / P_PANELS as f64;
        let h = 0.5 * tau_max / P_PANELS as f64;
        for (x, w) in gx.iter().zip(&gw) {
            taus.push(a + h * (x + 1.0));
            wts.push(h * w);
        }
    }
    let ts: Vec<f64> = taus.iter().map(|&t| arc_length(p, t)).collect();
    let samples = shore_lattice(p, f, &ts, &ts, SHORE_OFFSET, true)?;
    let k2sq = p.k2sq();
    // d xi = d(-sqrt(k^2 - tau^2)) = tau / sqrt(k^2 - tau^2) d tau
    let dxi: Vec<C64> = taus.iter().zip(&wts).map(|(&t, &w)| C64::new(t, 0.0) / (k2sq - t * t).sqrt() * w).collect();
    let pts: Vec<C64> = taus.iter().map(|&t| -h_plus(p, t)).collect();
    let m = taus.len();
    let mut out = Vec::new();
    for &(x1, x2) in xs {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let s = &samples[i * m + j];
                let comb = s.ll + s.rr - s.lr - s.rl;
                acc += comb * (-I * (pts[i] * x1 + pts[j] * x2)).exp() * dxi[i] * dxi[j];
            }
        }
        out.push(acc / (4.0 * PI * PI));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct STerms {
    pub s1: C64,
    pub s2: C64,
    pub s12: C64,
}

/// Pole-loop contributions: loops of radius 0.05|k| about -k1 and -k2
/// (counter-clockwise) combined with P.
pub fn s_terms(p: &Params, f: Table, x1: f64, x2: f64) -> Result<STerms> {
    let r = p_rule(p);
    let rad = crate::continuation::RESIDUE_RADIUS_FRAC * p.k.norm();
    let c1 = circle_integral_nodes(-p.k1, rad, 64);
    let c2 = circle_integral_nodes(-p.k2, rad, 64);
    let t1p = f(&c1.z, &r.z)?;
    let tp2 = f(&r.z, &c2.z)?;
    let t12 = f(&c1.z, &c2.z)?;
    Ok(STerms {
        s1: -fourier_sum(&t1p, &c1, &r, x1, x2),
        s2: -fourier_sum(&tp2, &r, &c2, x1, x2),
        s12: fourier_sum(&t12, &c1, &c2, x1, x2),
    })
}
