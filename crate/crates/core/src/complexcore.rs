//! Branch-tracked elementary functions, the kernel, the gamma factor and the
//! point-set predicates for the cut half-planes.
//!
//! On the physical sheet
//!   s(xi)        = sqrt(k^2 - xi^2) with Im s > 0 for real xi,
//!   gamma(a, b)  = sqrt(s(a) + b) with the principal outer root,
//!   K(xi1, xi2)  = (k^2 - xi1^2 - xi2^2)^(-1/2), close to real positive
//!                  inside the unit disc of the real plane.
//! `s` is evaluated as `i * sqrt(xi^2 - k^2)` with the principal root, so its
//! cut is exactly h+ and h-.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Result, WhError};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Branch-point proximity tolerance, relative to |k|.
pub const BRANCH_TOL: f64 = 1e-8;
/// Distance below which a point is labelled as lying on h+ or h-.
pub const CURVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub k: C64,
    pub eps: f64,
    pub k1: C64,
    pub k2: C64,
    pub kappa: f64,
}

impl Params {
    /// Builds the parameter set; `k` and `kappa` are derived, never given.
    pub fn new(eps: f64, k1: C64, k2: C64) -> Result<Self> {
        let bad = |field: &str, reason: &str| WhError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        };
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(bad("eps", "must be a finite positive real"));
        }
        for (name, v) in [("k1", k1), ("k2", k2)] {
            if !(v.re > 0.0 && v.im > 0.0) || !v.re.is_finite() || !v.im.is_finite() {
                return Err(bad(name, "real and imaginary parts must be positive"));
            }
        }
        let k = C64::new(1.0, eps).sqrt();
        let kappa = 0.25 * (eps / 2.0).min(k1.im).min(k2.im);
        Ok(Params { k, eps, k1, k2, kappa })
    }

    pub fn k2sq(&self) -> C64 {
        self.k * self.k
    }
}

/// Sign-flip bookkeeping relative to the arithmetic branches. Each count is a
/// winding number; only its parity changes a square-root value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SheetTag {
    /// windings of the first argument around +k
    pub plus_k: i32,
    /// windings of the first argument around -k
    pub minus_k: i32,
    /// windings around the zero set of the outer radicand of gamma
    pub outer: i32,
}

impl SheetTag {
    pub const PHYSICAL: SheetTag = SheetTag { plus_k: 0, minus_k: 0, outer: 0 };

    pub fn inner_sign(&self) -> f64 {
        if (self.plus_k + self.minus_k).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn outer_sign(&self) -> f64 {
        if self.outer.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_physical(&self) -> bool {
        (self.plus_k + self.minus_k).rem_euclid(2) == 0 && self.outer.rem_euclid(2) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DomainLabel {
    /// upper half-plane cut along h+
    HPlus,
    /// lower half-plane cut along h-
    HMinus,
    /// uncut upper half-plane
    HatHPlus,
    /// the curve sqrt(k^2 - tau^2)
    CurvePlus,
    /// the curve -sqrt(k^2 - tau^2)
    CurveMinus,
    /// the two-shore pass along h-
    P,
    Real,
}

/// s(xi) on the physical sheet, no checks.
#[inline]
pub fn s_phys(k2sq: C64, xi: C64) -> C64 {
    I * (xi * xi - k2sq).sqrt()
}

/// gamma(a, b) on the physical sheet, no checks.
#[inline]
pub fn gamma_phys(k2sq: C64, a: C64, b: C64) -> C64 {
    (s_phys(k2sq, a) + b).sqrt()
}

/// K(a, b) = 1/r with r^2 = k^2 - a^2 - b^2 and Im r >= 0, no checks.
#[inline]
pub fn kernel_phys(k2sq: C64, a: C64, b: C64) -> C64 {
    1.0 / (I * (a * a + b * b - k2sq).sqrt())
}

/// sqrt(k^2 - xi^2) on the sheet labelled by `tag`.
pub fn sqrt_upper(p: &Params, xi: C64, tag: SheetTag) -> Result<C64> {
    let tol = BRANCH_TOL * p.k.norm();
    if (xi - p.k).norm() < tol || (xi + p.k).norm() < tol {
        return Err(WhError::BranchPointHit(xi));
    }
    Ok(s_phys(p.k2sq(), xi) * tag.inner_sign())
}

/// gamma(xi1, xi2) = sqrt(sqrt(k^2 - xi1^2) + xi2) on the sheet labelled by `tag`.
pub fn gamma(p: &Params, xi1: C64, xi2: C64, tag: SheetTag) -> Result<C64> {
    let s = sqrt_upper(p, xi1, tag)?;
    let rad = s + xi2;
    if rad.norm() < BRANCH_TOL * p.k.norm() {
        return Err(WhError::BranchPointHit(xi2));
    }
    Ok(rad.sqrt() * tag.outer_sign())
}

/// The kernel (k^2 - xi1^2 - xi2^2)^(-1/2). `tag.outer` flips the branch.
pub fn kernel(p: &Params, xi1: C64, xi2: C64, tag: SheetTag) -> Result<C64> {
    let d = p.k2sq() - xi1 * xi1 - xi2 * xi2;
    if d.norm() < BRANCH_TOL * p.k2sq().norm() {
        return Err(WhError::SingularLocus(xi1, xi2));
    }
    Ok(kernel_phys(p.k2sq(), xi1, xi2) * tag.outer_sign())
}

/// Point of h+ at parameter tau >= 0 (h- is its negative).
pub fn h_plus(p: &Params, tau: f64) -> C64 {
    (p.k2sq() - tau * tau).sqrt()
}

/// Unit tangent of h- in the direction of increasing tau (from -k towards -i inf).
pub fn h_minus_tangent(p: &Params, tau: f64) -> C64 {
    let t = tau.max(1e-12);
    let d = C64::new(t, 0.0) / h_plus(p, t);
    d / d.norm()
}

/// Minimum distance from `xi` to h+ (sign = +1) or h- (sign = -1), together
/// with the minimising tau.
pub fn distance_to_h(p: &Params, xi: C64, sign: f64) -> (f64, f64) {
    let dist = |tau: f64| (xi - sign * h_plus(p, tau)).norm();
    // coarse scan in u, tau = u / (1 - u)
    let n = 4000;
    let mut best = (f64::INFINITY, 0.0);
    let mut best_i: usize = 0;
    for i in 0..n {
        let u = i as f64 / n as f64;
        let tau = u / (1.0 - u);
        let d = dist(tau);
        if d < best.0 {
            best = (d, tau);
            best_i = i;
        }
    }
    // golden-section refinement on the neighbouring cells
    let ua = (best_i.saturating_sub(1)) as f64 / n as f64;
    let ub = ((best_i + 1).min(n - 1)) as f64 / n as f64;
    let f = |u: f64| dist(u / (1.0 - u));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (ua, ub);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..80 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let u = 0.5 * (a + b);
    let refined = (f(u), u / (1.0 - u));
    if refined.0 < best.0 {
        refined
    } else {
        best
    }
}

/// All domain labels whose predicate holds at `xi`.
pub fn classify_point(p: &Params, xi: C64) -> BTreeSet<DomainLabel> {
    let mut out = BTreeSet::new();
    // h+ and h- lie on Im xi^2 = Im k^2; within distance d of them
    // |Im(xi^2 - k^2)| <= 2 (|xi| + d) d + d^2, so most points skip the scan
    let d = CURVE_TOL;
    let near = (xi * xi - p.k2sq()).im.abs() <= 2.0 * (xi.norm() + d) * d + d * d;
    let on_plus = near && distance_to_h(p, xi, 1.0).0 < CURVE_TOL;
    let on_minus = near && distance_to_h(p, xi, -1.0).0 < CURVE_TOL;
    if xi.im.abs() < CURVE_TOL {
        out.insert(DomainLabel::Real);
    }
    if xi.im > 0.0 {
        out.insert(DomainLabel::HatHPlus);
        if !on_plus {
            out.insert(DomainLabel::HPlus);
        }
    }
    if xi.im < 0.0 && !on_minus {
        out.insert(DomainLabel::HMinus);
    }
    if on_plus {
        out.insert(DomainLabel::CurvePlus);
    }
    if on_minus {
        out.insert(DomainLabel::CurveMinus);
        out.insert(DomainLabel::P);
    }
    out
}

/// Continues a square root `w(t) = sqrt(g(z(t)))` along the path `z` for
/// t in [0, 1], starting from `w0` (with `w0^2 = g(z(0))`). At each step the
/// root nearer to the previous value is chosen; the step is halved whenever
/// the choice is not clear-cut.
pub fn continue_sqrt(
    g: impl Fn(C64) -> C64,
    z: impl Fn(f64) -> C64,
    w0: C64,
) -> Result<C64> {
    let mut t = 0.0;
    let mut w = w0;
    let mut h = 1.0 / 256.0;
    let mut guard = 0usize;
    while t < 1.0 {
        guard += 1;
        if guard > 10_000_000 {
            return Err(WhError::NoConvergence { evals: guard, estimate: h });
        }
        let tn = (t + h).min(1.0);
        let r = g(z(tn)).sqrt();
        let (a, b) = ((r - w).norm(), (r + w).norm());
        let near = if a <= b { r } else { -r };
        let sep = a.min(b) / a.max(b).max(1e-300);
        if r.norm() < 1e-14 {
            return Err(WhError::BranchPointHit(z(tn)));
        }
        if sep > 0.2 && h > 1e-12 {
            h *= 0.5;
            continue;
        }
        w = near;
        t = tn;
        if sep < 0.05 {
            h = (h * 1.5).min(1.0 / 64.0);
        }
    }
    Ok(w)
}
