//! Analytic continuation of W and U off the physical strip.
//!
//! * first relation moved to R x R: Im xi1 <= 0, Im xi2 >= 0 (and beyond,
//!   H- x H^+ away from -k1);
//! * R x P surface: -kappa < Im xi1 < 0, 0 < Im xi2 < kappa;
//! * U = -i K W on H- x H- through the R x P surface.
//!
//! P here is the real axis pushed down onto h-: up the left shore, round -k,
//! down the right shore (clockwise about the cut; the opposite of the
//! boundary pass of H-). It hugs the cut, where the integrand is nearly
//! singular, so it is replaced by a wide hook at distance `offset` from h-;
//! targets between the hook and the cut pick up the residue of the Cauchy
//! factor:
//!   int_P = int_wide + 2 pi i G(xi2),
//!   G(xi2) = int_R gamma(xi1, -xi2) K(t, xi2) W(t, xi2) / (t - xi1) dt.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexcore::{distance_to_h, gamma_phys, kernel_phys, s_phys, Params, C64, I};
use crate::contours::{make_hook, ContourRule};
use crate::error::{Result, WhError};
use crate::linalg::CMat;
use crate::quad::{adaptive, gauss_legendre};
use crate::spectral::{apply_first, polar_term, StripSolution};

/// Distances of the wide hooks from h-; the first one that keeps a margin
/// from the target is used.
pub const WIDE_OFFSETS: [f64; 2] = [0.3, 0.45];
/// Panels per hook segment and their order.
pub const WIDE_PANELS: usize = 8;
pub const WIDE_ORDER: usize = 16;
/// Residue circles, relative to |k|.
pub const RESIDUE_RADIUS_FRAC: f64 = 0.05;
/// Gauss order and number of geometric levels of the graded real-line rule.
pub const GRADED_ORDER: usize = 16;
pub const GRADED_LEVELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Strip,
    HMinusHatHPlus,
    HatHPlusHMinus,
    HMinusHMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formula {
    /// first strip relation from the S_A samples
    StripFirst,
    /// second strip relation from the S_B samples
    StripSecond,
    /// first relation on R x R
    RealPlane,
    /// R x P surface
    RealP,
    /// whatever fits the region
    Auto,
}

struct Hook {
    offset: f64,
    rule: ContourRule,
    /// K W on R x hook
    f: CMat,
}

/// Precomputed surfaces for continuation from one strip solution.
pub struct Continuator<'a> {
    pub sol: &'a StripSolution,
    /// W on R x R at the line-rule nodes
    pub w_rr: CMat,
    hooks: Vec<Hook>,
}

fn pole_radius(p: &Params) -> f64 {
    RESIDUE_RADIUS_FRAC * p.k.norm()
}

impl<'a> Continuator<'a> {
    pub fn new(sol: &'a StripSolution) -> Result<Self> {
        let p = &sol.params;
        let k2sq = p.k2sq();
        let g: Vec<C64> = sol.rule.x.iter().map(|&x| C64::new(x, 0.0)).collect();
        let w_rr = sol.eval_first(&g, &g)?;
        let mut hooks = Vec::new();
        for &offset in &WIDE_OFFSETS {
            // the hook must pass above neither the strip nor the pole -k2
            if -p.k.im + offset >= -p.kappa || distance_to_h(p, -p.k2, -1.0).0 <= offset + pole_radius(p) {
                continue;
            }
            let rule = ContourRule::new(&make_hook(p, offset, f64::INFINITY).reversed(), WIDE_PANELS, WIDE_ORDER);
            let w = sol.eval_second(&g, &rule.z)?;
            let f = CMat::from_fn(g.len(), rule.len(), |a, b| kernel_phys(k2sq, g[a], rule.z[b]) * w.at(a, b));
            hooks.push(Hook { offset, rule, f });
        }
        if hooks.is_empty() {
            return Err(WhError::InvalidParameter {
                field: "k2".into(),
                reason: "no admissible hook around h-: the pole -k2 or the strip is too close to the cut".into(),
            });
        }
        Ok(Continuator { sol, w_rr, hooks })
    }

    fn params(&self) -> &Params {
        &self.sol.params
    }

    fn check_poles(&self, z1: C64, z2: C64) -> Result<()> {
        let p = self.params();
        let r = pole_radius(p);
        if (z1 + p.k1).norm() < 1e-3 * r {
            return Err(WhError::PoleProximity(z1, (z1 + p.k1).norm()));
        }
        if (z2 + p.k2).norm() < 1e-3 * r {
            return Err(WhError::PoleProximity(z2, (z2 + p.k2).norm()));
        }
        Ok(())
    }

    /// First relation with the integration surface R x R.
    pub fn w_real_plane(&self, z1: C64, z2: C64) -> Result<C64> {
        self.check_poles(z1, z2)?;
        if z1.im > 0.0 || z2.im < 0.0 {
            return Err(WhError::RegionMismatch(z1, z2, "R x R surface needs Im xi1 <= 0, Im xi2 >= 0".into()));
        }
        Ok(apply_first(self.params(), &self.sol.rule, 0.0, 0.0, &self.w_rr, &[z1], &[z2])?.at(0, 0))
    }

    /// The double integral over R x hook for one target.
    fn j_wide(&self, hook: &Hook, z1: C64, z2: C64) -> C64 {
        let k2sq = self.params().k2sq();
        let r1 = self.sol.rule.cauchy_at(&[z1], -1.0);
        let m = r1.matmul(&hook.f);
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..hook.rule.len() {
            let t2 = hook.rule.z[b];
            acc += hook.rule.w[b] / (t2 - z2) * gamma_phys(k2sq, z1, -t2) * m.at(0, b);
        }
        acc
    }

    /// Picks the hook with the largest margin from z2; reports whether z2 lies
    /// between the hook and the cut.
    fn pick_hook_index(&self, z2: C64) -> (usize, bool) {
        let d = distance_to_h(self.params(), z2, -1.0).0;
        let margin = |h: &Hook| (d - h.offset).abs();
        let i = (0..self.hooks.len())
            .max_by(|&a, &b| margin(&self.hooks[a]).partial_cmp(&margin(&self.hooks[b])).unwrap())
            .unwrap();
        (i, d < self.hooks[i].offset)
    }

    fn pick_hook(&self, z2: C64) -> (&Hook, bool) {
        let (i, inside) = self.pick_hook_index(z2);
        (&self.hooks[i], inside)
    }

    /// The double integral over R x P for xi1 in H-, xi2 in H- or the strip.
    pub fn j_integral(&self, z1: C64, z2: C64) -> Result<C64> {
        let (hook, inside) = self.pick_hook(z2);
        let mut j = self.j_wide(hook, z1, z2);
        if inside {
            j += 2.0 * PI * I * self.correction(z1, z2)?;
        }
        Ok(j)
    }

    /// K W on the graded real-line rule for a fixed xi2: the data of G.
    pub fn correction_data(&self, z2: C64) -> Result<CorrectionData> {
        let k2sq = self.params().k2sq();
        let slice = self.sol.slice_second(z2)?;
        let (t, w) = graded_real_rule(s_phys(k2sq, z2).re.abs());
        let mut fw = Vec::with_capacity(t.len());
        for (&tt, &ww) in t.iter().zip(&w) {
            let tc = C64::new(tt, 0.0);
            fw.push(kernel_phys(k2sq, tc, z2) * slice.eval(tc)? * ww);
        }
        Ok(CorrectionData { z2, t, fw })
    }

    /// G(xi1, xi2) of the module notes.
    pub fn correction(&self, z1: C64, z2: C64) -> Result<C64> {
        Ok(self.correction_data(z2)?.eval(self.params(), z1))
    }

    /// W on the R x P surface (strip targets).
    pub fn w_real_p(&self, z1: C64, z2: C64) -> Result<C64> {
        self.check_poles(z1, z2)?;
        let p = self.params();
        if !(z1.im > -p.kappa && z1.im <= 0.0 && z2.im >= 0.0 && z2.im < p.kappa) {
            return Err(WhError::RegionMismatch(z1, z2, "R x P surface needs -kappa < Im xi1 <= 0 <= Im xi2 < kappa".into()));
        }
        let k2sq = p.k2sq();
        let j = self.j_integral(z1, z2)?;
        let explicit = I * gamma_phys(k2sq, z1, z2) * gamma_phys(k2sq, z1, p.k2) * gamma_phys(k2sq, p.k2, p.k1)
            / ((z1 + p.k1) * (z2 + p.k2) * gamma_phys(k2sq, p.k2, -z1));
        Ok(gamma_phys(k2sq, z1, z2) / (4.0 * PI * PI) * j + explicit)
    }

    /// Continued W.
    pub fn continue_w(&self, z1: C64, z2: C64, formula: Formula) -> Result<C64> {
        let p = self.params();
        let k = p.kappa;
        match formula {
            Formula::StripFirst => {
                self.check_poles(z1, z2)?;
                if z1.im > k || z2.im < -k {
                    return Err(WhError::RegionMismatch(z1, z2, "first strip relation".into()));
                }
                Ok(self.sol.eval_first(&[z1], &[z2])?.at(0, 0))
            }
            Formula::StripSecond => {
                self.check_poles(z1, z2)?;
                if z1.im < -k || z2.im > k {
                    return Err(WhError::RegionMismatch(z1, z2, "second strip relation".into()));
                }
                Ok(self.sol.eval_second(&[z1], &[z2])?.at(0, 0))
            }
            Formula::RealPlane => self.w_real_plane(z1, z2),
            Formula::RealP => self.w_real_p(z1, z2),
            Formula::Auto => {
                if z1.im <= k && z2.im >= -k {
                    self.continue_w(z1, z2, Formula::StripFirst)
                } else if z1.im >= -k && z2.im <= k {
                    self.continue_w(z1, z2, Formula::StripSecond)
                } else {
                    Err(WhError::RegionMismatch(z1, z2, "W is continued to H- x H- through U only".into()))
                }
            }
        }
    }

    /// U = -i K W on H- x H- (both coordinates with Im < 0, off the poles).
    pub fn continue_u(&self, z1: C64, z2: C64) -> Result<C64> {
        Ok(self.u_table(&[z1], &[z2])?.at(0, 0))
    }

    /// U on the tensor product of two point lists in H-. Work per pair is
    /// O(hook nodes + graded nodes); columns run in parallel.
    pub fn u_table(&self, z1s: &[C64], z2s: &[C64]) -> Result<CMat> {
        for &z1 in z1s {
            for &z2 in z2s {
                self.check_poles(z1, z2)?;
                if z1.im >= 0.0 || z2.im >= 0.0 {
                    return Err(WhError::RegionMismatch(z1, z2, "U continuation needs both points in H-".into()));
                }
            }
        }
        let p = *self.params();
        let k2sq = p.k2sq();
        let r1 = self.sol.rule.cauchy_at(z1s, -1.0);
        // per hook: M = R1 F and gamma(z1, -t2) w_b
        let pre: Vec<(CMat, CMat)> = self
            .hooks
            .iter()
            .map(|h| {
                let m = r1.matmul(&h.f);
                let g = CMat::from_fn(z1s.len(), h.rule.len(), |i, b| gamma_phys(k2sq, z1s[i], -h.rule.z[b]) * h.rule.w[b]);
                (m, g)
            })
            .collect();
        let cols: Vec<Result<Vec<C64>>> = z2s
            .par_iter()
            .map(|&z2| {
                let (hi, inside) = self.pick_hook_index(z2);
                let hook = &self.hooks[hi];
                let (m, g) = &pre[hi];
                let corr = if inside { Some(self.correction_data(z2)?) } else { None };
                let cauchy: Vec<C64> = hook.rule.z.iter().map(|t2| 1.0 / (t2 - z2)).collect();
                let mut col = Vec::with_capacity(z1s.len());
                for (i, &z1) in z1s.iter().enumerate() {
                    let mut j: C64 = (0..hook.rule.len()).map(|b| cauchy[b] * g.at(i, b) * m.at(i, b)).sum();
                    if let Some(c) = &corr {
                        j += 2.0 * PI * I * c.eval(&p, z1);
                    }
                    let gm = gamma_phys(k2sq, z1, -z2);
                    let explicit = gamma_phys(k2sq, z1, p.k2) * gamma_phys(k2sq, p.k2, p.k1)
                        / ((z1 + p.k1) * (z2 + p.k2) * gamma_phys(k2sq, p.k2, -z1) * gm);
                    col.push(j / (4.0 * PI * PI * I * gm) + explicit);
                }
                Ok(col)
            })
            .collect();
        let mut out = CMat::zeros(z1s.len(), z2s.len());
        for (jj, col) in cols.into_iter().enumerate() {
            for (i, v) in col?.into_iter().enumerate() {
                *out.at_mut(i, jj) = v;
            }
        }
        Ok(out)
    }

    /// U' = U - 1/((xi1 + k1)(xi2 + k2)) on a tensor product in H- x H-.
    pub fn u_prime_table(&self, z1s: &[C64], z2s: &[C64]) -> Result<CMat> {
        let mut t = self.u_table(z1s, z2s)?;
        for (i, &a) in z1s.iter().enumerate() {
            for (j, &b) in z2s.iter().enumerate() {
                *t.at_mut(i, j) -= polar_term(self.params(), a, b);
            }
        }
        Ok(t)
    }

    pub fn continue_u_prime(&self, z1: C64, z2: C64) -> Result<C64> {
        Ok(self.continue_u(z1, z2)? - polar_term(self.params(), z1, z2))
    }
}

/// Weighted samples of K(t, xi2) W(t, xi2) on the graded rule.
pub struct CorrectionData {
    pub z2: C64,
    t: Vec<f64>,
    fw: Vec<C64>,
}

impl CorrectionData {
    pub fn eval(&self, p: &Params, z1: C64) -> C64 {
        let s: C64 = self.t.iter().zip(&self.fw).map(|(&t, &f)| f / (C64::new(t, 0.0) - z1)).sum();
        gamma_phys(p.k2sq(), z1, -self.z2) * s
    }
}

/// int_R f by adaptive quadrature, split at -b, 0, b with square-root
/// substitutions at +-b (b >= 0) and mapped infinite tails.
pub fn real_line_split(f: &dyn Fn(f64) -> Result<C64>, b: f64, tol: f64) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    let mut piece = |g: &mut dyn FnMut(f64) -> Result<C64>| -> Result<()> {
        total += adaptive(g, 0.0, 1.0, tol, 400_000)?.value;
        Ok(())
    };
    // tails: x = +-(b + u^2/(1-u)^2)
    for sgn in [1.0, -1.0] {
        piece(&mut |s: f64| {
            if s >= 1.0 {
                return Ok(C64::new(0.0, 0.0));
            }
            let v = s / (1.0 - s);
            let x = sgn * (b + v * v);
            let dx = 2.0 * v / ((1.0 - s) * (1.0 - s));
            Ok(f(x)? * dx)
        })?;
    }
    if b > 0.0 {
        // [0, b] and [-b, 0] with x = +-b(1 - s^2)
        for sgn in [1.0, -1.0] {
            piece(&mut |s: f64| Ok(f(sgn * b * (1.0 - s * s))? * (2.0 * b * s)))?;
        }
    }
    Ok(total)
}

/// Fixed rule on R for integrands nearly singular (inverse square root) at
/// t = +-b: square-root substitutions about +-b, geometric panels in the
/// substitution variable, mapped tails.
pub fn graded_real_rule(b: f64) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(GRADED_ORDER);
    let mut edges: Vec<f64> = (0..=GRADED_LEVELS).rev().map(|i| 0.5f64.powi(i as i32)).collect();
    edges.insert(0, 0.0);
    let mut tail_edges = edges.clone();
    tail_edges.pop();
    tail_edges.extend([0.7, 0.85, 0.95, 1.0]);
    let mut t = Vec::new();
    let mut w = Vec::new();
    let mut piece = |edges: &[f64], map: &dyn Fn(f64) -> (f64, f64)| {
        for e in edges.windows(2) {
            let h = 0.5 * (e[1] - e[0]);
            for (x, wx) in gx.iter().zip(&gw) {
                let s = e[0] + h * (x + 1.0);
                let (tt, dt) = map(s);
                t.push(tt);
                w.push(dt * h * wx);
            }
        }
    };
    for sgn in [1.0, -1.0] {
        piece(&tail_edges, &|s: f64| {
            let v = s / (1.0 - s);
            (sgn * (b + v * v), 2.0 * v / ((1.0 - s) * (1.0 - s)))
        });
        if b > 0.0 {
            piece(&edges, &|s: f64| (sgn * b * (1.0 - s * s), 2.0 * b * s));
        }
    }
    (t, w)
}

/// Trapezoidal nodes and weights (dz) on a counter-clockwise circle.
pub fn circle_integral_nodes(center: C64, radius: f64, m: usize) -> ContourRule {
    let mut z = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    for j in 0..m {
        let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        z.push(center + radius * e);
        w.push(I * e * radius * (2.0 * PI / m as f64));
    }
    ContourRule { z, w }
}

/// (2 pi i)^-1 times the integral of f around the circle, by the
/// trapezoidal rule on `m` points.
pub fn circle_integral(f: &dyn Fn(C64) -> Result<C64>, center: C64, radius: f64, m: usize) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..m {
        let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        // dz = i r e dtheta
        acc += f(center + radius * e)? * e * radius;
    }
    Ok(acc / m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WhichPole {
    /// xi1 = -k1
    First,
    /// xi2 = -k2
    Second,
}

/// Numeric residue of f at the chosen polar line with the other coordinate
/// fixed, on a circle of radius 0.05|k|.
pub fn residue_numeric(
    p: &Params,
    f: &dyn Fn(C64, C64) -> Result<C64>,
    which: WhichPole,
    other: C64,
) -> Result<C64> {
    let r = pole_radius(p);
    match which {
        WhichPole::First => circle_integral(&|z| f(z, other), -p.k1, r, 64),
        WhichPole::Second => circle_integral(&|z| f(other, z), -p.k2, r, 64),
    }
}

/// Closed-form residues.
pub mod residues {
    use super::*;

    /// W at xi1 = -k1.
    pub fn w_first(p: &Params, xi2: C64) -> C64 {
        let k2sq = p.k2sq();
        I * gamma_phys(k2sq, p.k1, xi2) * gamma_phys(k2sq, p.k1, p.k2) / (xi2 + p.k2)
    }

    /// W at xi2 = -k2.
    pub fn w_second(p: &Params, xi1: C64) -> C64 {
        let k2sq = p.k2sq();
        I * gamma_phys(k2sq, p.k2, xi1) * gamma_phys(k2sq, p.k2, p.k1) / (xi1 + p.k1)
    }

    /// U at xi1 = -k1.
    pub fn u_first(p: &Params, xi2: C64) -> C64 {
        let k2sq = p.k2sq();
        gamma_phys(k2sq, p.k1, p.k2) / (gamma_phys(k2sq, p.k1, -xi2) * (xi2 + p.k2))
    }

    /// U at xi2 = -k2.
    pub fn u_second(p: &Params, xi1: C64) -> C64 {
        let k2sq = p.k2sq();
        gamma_phys(k2sq, p.k2, p.k1) / (gamma_phys(k2sq, p.k2, -xi1) * (xi1 + p.k1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircleClass {
    SingularAllowed,
    AnalyticForced,
}

/// Line of admissible (Im mu1, Im mu2) near the point (cos phi, sin phi) of
/// the circle xi1^2 + xi2^2 = 1 + i eps, to first order:
///   cos(phi) a + sin(phi) b = eps / 2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CircleLine {
    pub phi: f64,
    /// normal vector (cos phi, sin phi)
    pub normal: (f64, f64),
    pub class: CircleClass,
}

/// A point of the real circle may carry a singularity only if the line above
/// misses the open quadrant a > 0, b > 0, i.e. both components of the
/// normal are negative. Components within 1e-12 of zero count as zero, so the
/// endpoints phi = -pi/2 and phi = pi are analytic-forced.
pub fn classify_circle_point(phi: f64) -> CircleLine {
    let (s, c) = phi.sin_cos();
    let neg = |x: f64| x < -1e-12;
    let class = if neg(c) && neg(s) { CircleClass::SingularAllowed } else { CircleClass::AnalyticForced };
    CircleLine { phi, normal: (c, s), class }
}

/// One lattice sample of a pole scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanSample {
    pub xi1: C64,
    pub modulus: f64,
    /// |f| |xi1 + k1|
    pub reduced: f64,
}

/// Scans |f(., xi2)| on a lattice of H- around -k1 and returns the samples
/// where the modulus exceeds `factor` times the lattice median.
pub fn pole_scan(p: &Params, f: &dyn Fn(C64) -> Result<C64>, lattice: &[C64], factor: f64) -> Result<Vec<ScanSample>> {
    let mut samples = Vec::with_capacity(lattice.len());
    for &z in lattice {
        let v = f(z)?.norm();
        samples.push(ScanSample { xi1: z, modulus: v, reduced: v * (z + p.k1).norm() });
    }
    let mut mods: Vec<f64> = samples.iter().map(|s| s.modulus).collect();
    mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = mods[mods.len() / 2];
    Ok(samples.into_iter().filter(|s| s.modulus > factor * med).collect())
}
