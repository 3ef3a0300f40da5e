//! Contours in the complex plane and adaptive quadrature along them.
//!
//! Infinite pieces are integrated through the algebraic map u = (t/(1-t))^2, so
//! no truncation radius is needed for integrands decaying faster than 1/|z|.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexcore::{h_minus_tangent, Params, C64, I};
use crate::error::{Result, WhError};
use crate::quad::{adaptive, gauss_legendre, QuadratureResult};

/// Default distance of the shores of P from the cut.
pub const SHORE_OFFSET: f64 = 1e-4;
/// Default evaluation budget per segment.
pub const MAX_EVALS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Line { a: C64, b: C64 },
    /// start + dir * u, u from 0 to infinity (or back when `inward`)
    Ray { start: C64, dir: C64, inward: bool },
    Arc { center: C64, radius: f64, theta0: f64, theta1: f64 },
    /// the curve -sqrt(k^2 - tau^2) displaced by `offset` along i * tangent,
    /// tau running from tau0 to tau1, or from tau0 to infinity when tau1 is
    /// None (reversed when `inward`)
    Shore { k2sq: C64, offset: f64, tau0: f64, tau1: Option<f64>, inward: bool },
}

/// u = (s/(1-s))^2 maps [0, 1) onto [0, inf); integrands decaying like
/// u^(-p) with p > 1 stay integrable in s, and bounded for p >= 3/2.
fn tail_map(s: f64) -> (f64, f64) {
    let v = s / (1.0 - s);
    (v * v, 2.0 * v / ((1.0 - s) * (1.0 - s)))
}

/// Point of the displaced curve and its tau-derivative.
fn shore_point(k2sq: C64, offset: f64, tau: f64) -> (C64, C64) {
    let r = (k2sq - tau * tau).sqrt();
    let t = tau.max(1e-12);
    let rt = (k2sq - t * t).sqrt();
    let d = C64::new(t, 0.0) / rt;
    let dd = k2sq / (rt * rt * rt);
    let nd = d.norm();
    let u = d / nd;
    let du = dd / nd - d * (d.conj() * dd).re / (nd * nd * nd);
    (-r + offset * I * u, C64::new(tau, 0.0) / r + offset * I * du)
}

impl Segment {
    /// Point and derivative at t in [0, 1].
    pub fn eval(&self, t: f64) -> (C64, C64) {
        match *self {
            Segment::Line { a, b } => (a + (b - a) * t, b - a),
            Segment::Ray { start, dir, inward } => {
                let (u, du) = tail_map(if inward { 1.0 - t } else { t });
                (start + dir * u, if inward { -dir * du } else { dir * du })
            }
            Segment::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + (theta1 - theta0) * t;
                let e = C64::from_polar(radius, th);
                (center + e, I * e * (theta1 - theta0))
            }
            Segment::Shore { k2sq, offset, tau0, tau1, inward } => {
                let (tau, dtau) = if let Some(tau1) = tau1 {
                    (tau0 + (tau1 - tau0) * t, tau1 - tau0)
                } else {
                    let (u, du) = tail_map(if inward { 1.0 - t } else { t });
                    (tau0 + u, if inward { -du } else { du })
                };
                let (z, d) = shore_point(k2sq, offset, tau);
                (z, d * dtau)
            }
        }
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { a, b } => Segment::Line { a: b, b: a },
            Segment::Ray { start, dir, inward } => Segment::Ray { start, dir, inward: !inward },
            Segment::Arc { center, radius, theta0, theta1 } => {
                Segment::Arc { center, radius, theta0: theta1, theta1: theta0 }
            }
            Segment::Shore { k2sq, offset, tau0, tau1, inward } => {
                if let Some(t1) = tau1 {
                    Segment::Shore { k2sq, offset, tau0: t1, tau1: Some(tau0), inward }
                } else {
                    Segment::Shore { k2sq, offset, tau0, tau1, inward: !inward }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub segments: Vec<Segment>,
    /// expected algebraic decay exponent of integrands along the infinite ends
    pub decay_exponent: f64,
}

impl Contour {
    pub fn new(segments: Vec<Segment>) -> Self {
        Contour { segments, decay_exponent: 1.0 }
    }

    pub fn reversed(&self) -> Contour {
        Contour {
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
            decay_exponent: self.decay_exponent,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("contour serialises")
    }

    pub fn from_json(s: &str) -> std::result::Result<Contour, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Horizontal line R + offset, left to right.
pub fn make_shifted_line(offset: C64) -> Contour {
    let one = C64::new(1.0, 0.0);
    Contour::new(vec![
        Segment::Ray { start: offset - one, dir: -one, inward: true },
        Segment::Line { a: offset - one, b: offset + one },
        Segment::Ray { start: offset + one, dir: one, inward: false },
    ])
}

/// Two-shore pass around the cut h-: from -i inf to -k along the right
/// shore, round -k on a small arc, and back along the left shore. The shores
/// sit at distance `offset`; `tau_max` truncates them (infinite by default).
pub fn make_hook(p: &Params, offset: f64, tau_max: f64) -> Contour {
    let k2sq = p.k2sq();
    let t0 = h_minus_tangent(p, 0.0);
    let th0 = (I * t0).arg();
    let (right, left) = if tau_max.is_finite() {
        (
            Segment::Shore { k2sq, offset, tau0: tau_max, tau1: Some(0.0), inward: false },
            Segment::Shore { k2sq, offset: -offset, tau0: 0.0, tau1: Some(tau_max), inward: false },
        )
    } else {
        (
            Segment::Shore { k2sq, offset, tau0: 0.0, tau1: None, inward: true },
            Segment::Shore { k2sq, offset: -offset, tau0: 0.0, tau1: None, inward: false },
        )
    };
    Contour::new(vec![
        right,
        Segment::Arc { center: -p.k, radius: offset, theta0: th0, theta1: th0 + PI },
        left,
    ])
}

/// The pass P with the default shore offset.
pub fn make_p(p: &Params) -> Contour {
    make_hook(p, SHORE_OFFSET, f64::INFINITY)
}

/// Closed circle, counter-clockwise.
pub fn make_circle(center: C64, radius: f64) -> Contour {
    Contour::new(vec![Segment::Arc { center, radius, theta0: -PI, theta1: PI }])
}

/// Loop based at `base`: spur to the circle about `center`, one turn
/// (counter-clockwise if `ccw`), spur back.
pub fn make_loop(base: C64, center: C64, radius: f64, ccw: bool) -> Contour {
    let d = base - center;
    let start = center + radius * d / d.norm();
    let th = d.arg();
    let turn = if ccw { 2.0 * PI } else { -2.0 * PI };
    Contour::new(vec![
        Segment::Line { a: base, b: start },
        Segment::Arc { center, radius, theta0: th, theta1: th + turn },
        Segment::Line { a: start, b: base },
    ])
}

/// Adaptive integral of f along the contour to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(C64) -> Result<C64>, c: &Contour, tol: f64) -> Result<QuadratureResult> {
    let ns = c.segments.len().max(1) as f64;
    let mut total = QuadratureResult { value: C64::new(0.0, 0.0), error_estimate: 0.0, nodes_used: 0 };
    for seg in &c.segments {
        let mut g = |t: f64| -> Result<C64> {
            let (z, dz) = seg.eval(t);
            if dz.norm() == 0.0 || !dz.norm().is_finite() {
                return Ok(C64::new(0.0, 0.0));
            }
            let v = f(z)? * dz;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(WhError::SingularityOnContour(z));
            }
            Ok(v)
        };
        let r = adaptive(&mut g, 0.0, 1.0, tol / ns, MAX_EVALS).map_err(|e| match e {
            WhError::SingularityOnContour(t) if t.im == 0.0 && (0.0..=1.0).contains(&t.re) => {
                WhError::SingularityOnContour(seg.eval(t.re).0)
            }
            e => e,
        })?;
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.nodes_used += r.nodes_used;
    }
    Ok(total)
}

/// Iterated integral: inner over `c1` (first argument), outer over `c2`.
pub fn integrate_product(
    f: &dyn Fn(C64, C64) -> Result<C64>,
    c1: &Contour,
    c2: &Contour,
    tol: f64,
) -> Result<QuadratureResult> {
    let inner_tol = 0.1 * tol;
    let inner_nodes = std::cell::Cell::new(0usize);
    let outer = |z2: C64| -> Result<C64> {
        let r = integrate(&|z1| f(z1, z2), c1, inner_tol)
            .map_err(|e| WhError::InnerFailure { node: z2, source: Box::new(e) })?;
        inner_nodes.set(inner_nodes.get() + r.nodes_used);
        Ok(r.value)
    };
    let mut r = integrate(&outer, c2, tol)?;
    r.nodes_used += inner_nodes.get();
    Ok(r)
}

/// Fixed composite Gauss-Legendre rule on a contour: `panels` equal panels of
/// order `q` in the parameter of every segment. Weights include dz/dt.
#[derive(Debug, Clone)]
pub struct ContourRule {
    pub z: Vec<C64>,
    pub w: Vec<C64>,
}

impl ContourRule {
    pub fn new(c: &Contour, panels: usize, q: usize) -> Self {
        let (x, wx) = gauss_legendre(q);
        let mut z = Vec::new();
        let mut w = Vec::new();
        for seg in &c.segments {
            for pi in 0..panels {
                let a = pi as f64 / panels as f64;
                let h = 1.0 / panels as f64;
                for (xi, wi) in x.iter().zip(&wx) {
                    let t = a + 0.5 * h * (xi + 1.0);
                    let (p, d) = seg.eval(t);
                    z.push(p);
                    w.push(d * (0.5 * h * wi));
                }
            }
        }
        ContourRule { z, w }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(C64) -> C64) -> C64 {
        self.z.iter().zip(&self.w).map(|(z, w)| f(*z) * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::new(1e-2, C64::new(0.6, 0.05), C64::new(0.5, 0.05)).unwrap()
    }

    #[test]
    fn line_integrals_match_residues() {
        let l = make_shifted_line(C64::new(0.0, 0.0));
        // oscillatory algebraic tails limit the attainable tolerance
        let r = integrate(&|z| Ok((I * z).exp() / (z * z + 1.0)), &l, 1e-5).unwrap();
        assert!((r.value - PI / 1f64.exp()).norm() < 1e-5);
        let r = integrate(&|z| Ok(1.0 / ((z - 2.0 * I) * (z + I))), &l, 1e-10).unwrap();
        assert!((r.value - 2.0 * PI / 3.0).norm() < 1e-9);
        // shifting across no singularity changes nothing
        let l2 = make_shifted_line(C64::new(0.0, 0.5));
        let r2 = integrate(&|z| Ok(1.0 / ((z - 2.0 * I) * (z + I))), &l2, 1e-10).unwrap();
        assert!((r2.value - r.value).norm() < 1e-8);
    }

    #[test]
    fn reversal_negates() {
        let p = params();
        let c = make_p(&p);
        let f = |z: C64| Ok((-I * z).exp() * (z + 2.0).sqrt());
        let a = integrate(&f, &c, 1e-10).unwrap().value;
        let b = integrate(&f, &c.reversed(), 1e-10).unwrap().value;
        assert!((a + b).norm() < 1e-9);
    }

    #[test]
    fn pole_on_contour_detected() {
        let c = Contour::new(vec![Segment::Line { a: C64::new(-1.0, 0.0), b: C64::new(1.0, 0.0) }]);
        let e = integrate(&|z| Ok(1.0 / (z - 0.3)), &c, 1e-10).unwrap_err();
        match e {
            WhError::SingularityOnContour(z) => assert!((z - 0.3).norm() < 1e-6),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn p_of_analytic_functions_vanishes() {
        let p = params();
        let c = make_p(&p);
        let r = integrate(&|z| Ok((-I * z).exp()), &c, 1e-11).unwrap();
        assert!(r.value.norm() < 1e-9);
        let k2 = p.k2;
        let r = integrate(&|z| Ok((-I * z).exp() / (z + k2)), &c, 1e-11).unwrap();
        assert!(r.value.norm() < 1e-9, "{}", r.value);
    }

    #[test]
    fn p_of_jump_function_equals_shore_difference() {
        let p = params();
        let k2sq = p.k2sq();
        let f = |z: C64| Ok(I * (z * z - k2sq).sqrt() * (-I * z).exp());
        let c = make_hook(&p, 1e-7, f64::INFINITY);
        let lhs = integrate(&f, &c, 1e-10).unwrap().value;
        // oracle: int over tau of (f_left - f_right) dc/dtau, shore values
        // taken at distance 1e-11
        let cut = Contour::new(vec![Segment::Shore { k2sq, offset: 0.0, tau0: 0.0, tau1: None, inward: false }]);
        let jump = |z: C64| {
            let tau = (z * z - k2sq).sqrt().norm();
            let t = h_minus_tangent(&p, tau);
            let (zl, zr) = (z - 1e-11 * I * t, z + 1e-11 * I * t);
            Ok(f(zl)? - f(zr)?)
        };
        let rhs = integrate(&jump, &cut, 1e-10).unwrap().value;
        assert!((lhs - rhs).norm() < 1e-6, "{lhs} {rhs}");
        assert!(rhs.norm() > 0.1);
    }

    #[test]
    fn separable_product() {
        let l1 = make_shifted_line(C64::new(0.0, 0.2));
        let l2 = make_shifted_line(C64::new(0.0, -0.2));
        let (a, b) = (C64::new(0.3, -0.5), C64::new(-0.2, 0.7));
        let r = integrate_product(&|x, y| Ok(1.0 / ((x - a) * (x - 2.0 * I) * (y - b) * (y + 2.0 * I))), &l1, &l2, 1e-9)
            .unwrap();
        // residues: inner closes up (pole 2i), outer closes down (pole -2i)
        let inner = 2.0 * PI * I / (2.0 * I - a);
        let outer = -2.0 * PI * I / (-2.0 * I - b);
        assert!((r.value - inner * outer).norm() < 1e-8, "{} {}", r.value, inner * outer);
    }

    #[test]
    fn serde_roundtrip() {
        let c = make_p(&params());
        let c2 = Contour::from_json(&c.to_json()).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn fixed_rule_on_hook() {
        // 1/(z - z0)^2 with z0 off the hook integrates to zero along it
        let p = Params::new(2.0, C64::new(0.3, 0.8), C64::new(0.3, 0.8)).unwrap();
        let r = ContourRule::new(&make_hook(&p, 0.3, f64::INFINITY), 8, 16);
        let z0 = C64::new(0.2, 0.5);
        let v = r.integrate(|z| 1.0 / ((z - z0) * (z - z0)));
        assert!(v.norm() < 1e-10, "{v}");
        // a pole enclosed by the hook contributes 2 pi i
        let inside = -p.k - 0.1 * I * h_minus_tangent(&p, 0.0);
        let v = r.integrate(|z| 1.0 / ((z - inside) * (z - z0)));
        let want = 2.0 * PI * I / (inside - z0);
        assert!((v - want).norm() < 1e-8, "{v} {want}");
    }
}
