//! Numerical demonstration of the Laplace-like uniqueness theorems: a curve L
//! from the origin to infinity inside a sector b1 < Arg z < b2 (b2 - b1 < pi),
//! the transform F(s) = int_L f e^{isz} dz, the Sokhotsky function
//! y = (i / 2pi) int_L f(z') / (z' - z) dz' with jump y_r - y_l = f, ray
//! transforms Y1, Y2 and their Mellin (inverse Laplace) reconstruction.
//!
//! Transforms along a ray of angle a converge for Im(s e^{ia}) > 0. Rotating
//! the ray without crossing L continues Y analytically, so every transform is
//! taken along the best-conditioned admissible ray of the requested side.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::complexcore::{C64, I};
use crate::error::{Result, WhError};
use crate::quad::gauss_legendre;

/// Closest admissible distance from L for a Cauchy integral.
pub const MIN_DISTANCE: f64 = 1e-15;
/// Shore offset of the jump check.
pub const SHORE: f64 = 1e-4;
/// Rays of a side keep this angular distance from L.
const RAY_MARGIN: f64 = 0.15;
/// Spacing of the admissible ray angles.
const RAY_STEP: f64 = 0.25;
/// Ray grid: geometric from TAU_MIN to TAU_MAX with this ratio.
const TAU_MIN: f64 = 1e-9;
const TAU_MAX: f64 = 600.0;
const TAU_RATIO: f64 = 1.1;
/// Largest tilt of the Mellin contour legs beyond the convergence sector.
const LEG_TILT: f64 = 0.5;
const ARC_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveShape {
    Ray { angle: f64 },
    /// z(t) = t exp(i (angle + bend t / (1 + t)))
    Arc { angle: f64, bend: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SectorCurve {
    pub beta1: f64,
    pub beta2: f64,
    pub shape: CurveShape,
    /// length within r1 <= |z| <= r2 is at most simplicity * (r2 - r1)
    pub simplicity: f64,
}

impl SectorCurve {
    pub fn new(beta1: f64, beta2: f64, shape: CurveShape) -> Result<Self> {
        if !(beta2 > beta1 && beta2 - beta1 < PI) {
            return Err(WhError::InvalidParameter { field: "beta".into(), reason: "need 0 < beta2 - beta1 < pi".into() });
        }
        let simplicity = match shape {
            CurveShape::Ray { .. } => 1.0,
            CurveShape::Arc { bend, .. } => (1.0 + bend * bend / 16.0).sqrt(),
        };
        let c = SectorCurve { beta1, beta2, shape, simplicity };
        let (a, b) = c.arg_range();
        if a <= beta1 || b >= beta2 {
            return Err(WhError::InvalidParameter { field: "shape".into(), reason: "curve leaves the sector".into() });
        }
        Ok(c)
    }

    /// Straight ray on the bisector.
    pub fn bisector(beta1: f64, beta2: f64) -> Result<Self> {
        Self::new(beta1, beta2, CurveShape::Ray { angle: 0.5 * (beta1 + beta2) })
    }

    fn theta(&self, t: f64) -> (f64, f64) {
        match self.shape {
            CurveShape::Ray { angle } => (angle, 0.0),
            CurveShape::Arc { angle, bend } => (angle + bend * t / (1.0 + t), bend / ((1.0 + t) * (1.0 + t))),
        }
    }

    /// Point at parameter t; |z(t)| = t.
    pub fn z(&self, t: f64) -> C64 {
        C64::from_polar(t, self.theta(t).0)
    }

    pub fn dz(&self, t: f64) -> C64 {
        let (th, dth) = self.theta(t);
        C64::from_polar(1.0, th) * (1.0 + I * t * dth)
    }

    pub fn arg_range(&self) -> (f64, f64) {
        match self.shape {
            CurveShape::Ray { angle } => (angle, angle),
            CurveShape::Arc { angle, bend } => (angle.min(angle + bend), angle.max(angle + bend)),
        }
    }

    /// The common sector S of Y1 and Y2: -b1 < Arg s < pi - b2.
    pub fn sector_s(&self) -> (f64, f64) {
        (-self.beta1, PI - self.beta2)
    }

    pub fn in_s(&self, s: C64) -> bool {
        let (a, b) = self.sector_s();
        let g = s.arg();
        s.norm() > 0.0 && g > a && g < b
    }

    /// Nearest parameter in [ta, tb] and the distance.
    pub fn nearest(&self, z: C64, ta: f64, tb: f64) -> (f64, f64) {
        if let CurveShape::Ray { angle } = self.shape {
            let t = (z * C64::from_polar(1.0, -angle)).re.clamp(ta, tb);
            return (t, (self.z(t) - z).norm());
        }
        let hi = tb.min(z.norm() * 4.0 + 10.0);
        let m = 400;
        let mut best = (ta, (self.z(ta) - z).norm());
        let mut k = 0;
        for j in 0..=m {
            let t = ta + (hi - ta) * (j as f64 / m as f64).powi(2);
            let d = (self.z(t) - z).norm();
            if d < best.1 {
                best = (t, d);
                k = j;
            }
        }
        let at = |j: usize| ta + (hi - ta) * (j.min(m) as f64 / m as f64).powi(2);
        let (mut a, mut b) = (at(k.saturating_sub(1)), at(k + 1));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if (self.z(c) - z).norm() < (self.z(d) - z).norm() {
                b = d;
            } else {
                a = c;
            }
        }
        let t = 0.5 * (a + b);
        let d = (self.z(t) - z).norm();
        if d < best.1 {
            (t, d)
        } else {
            best
        }
    }

    /// Length of L within r1 <= |z| <= r2.
    pub fn length_in_annulus(&self, r1: f64, r2: f64) -> f64 {
        let (gx, gw) = gauss_legendre(32);
        let (c, h) = (0.5 * (r1 + r2), 0.5 * (r2 - r1));
        gx.iter().zip(&gw).map(|(x, w)| self.dz(c + h * x).norm() * h * w).sum()
    }

    /// Largest length ratio over the given annuli.
    pub fn simplicity_ratio(&self, annuli: &[(f64, f64)]) -> f64 {
        annuli.iter().map(|&(a, b)| self.length_in_annulus(a, b) / (b - a)).fold(0.0, f64::max)
    }
}

fn composite(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut x = Vec::new();
    let mut w = Vec::new();
    for ab in breaks.windows(2) {
        let (c, h) = (0.5 * (ab[0] + ab[1]), 0.5 * (ab[1] - ab[0]));
        if h <= 0.0 {
            continue;
        }
        for (t, wt) in gx.iter().zip(&gw) {
            x.push(c + h * t);
            w.push(h * wt);
        }
    }
    (x, w)
}

fn geometric_breaks(t0: f64, t1: f64, ratio: f64) -> Vec<f64> {
    let mut b = vec![0.0, t0];
    while *b.last().unwrap() < t1 {
        let n = b.last().unwrap() * ratio;
        b.push(n.min(t1));
    }
    b
}

/// int over parameters [ta, tb] (tb = None: to infinity) of
/// f(z(t)) z'(t) / (z(t) - z) dt, graded towards the nearest point of L.
pub fn cauchy_on_curve(c: &SectorCurve, f: &dyn Fn(C64) -> C64, z: C64, ta: f64, tb: Option<f64>) -> Result<C64> {
    let (t0, d) = c.nearest(z, ta, tb.unwrap_or(f64::INFINITY));
    if d < MIN_DISTANCE {
        return Err(WhError::InvalidParameter { field: "z".into(), reason: format!("point at distance {d:e} from L") });
    }
    let big = tb.unwrap_or((4.0 * t0 + 8.0).max(64.0));
    let h = 0.25 * d;
    let mut br = vec![ta, big, t0.clamp(ta, big)];
    let mut s = h;
    while t0 - s > ta || t0 + s < big {
        br.push((t0 - s).clamp(ta, big));
        br.push((t0 + s).clamp(ta, big));
        s *= 2.0;
    }
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup();
    let (ts, ws) = composite(&br, 16);
    let mut acc = C64::new(0.0, 0.0);
    for (&t, &w) in ts.iter().zip(&ws) {
        acc += f(c.z(t)) * c.dz(t) / (c.z(t) - z) * w;
    }
    if tb.is_none() {
        // t = big / v
        let (vs, vw) = composite(&[0.0, 0.25, 0.5, 0.75, 1.0], 16);
        for (&v, &w) in vs.iter().zip(&vw) {
            let t = big / v;
            acc += f(c.z(t)) * c.dz(t) / (c.z(t) - z) * (w * big / (v * v));
        }
    }
    Ok(acc)
}

/// y(z) = (i / 2pi) int_L f(z') / (z' - z) dz'.
pub fn sokhotsky_y(c: &SectorCurve, f: &dyn Fn(C64) -> C64, z: C64) -> Result<C64> {
    Ok(I / (2.0 * PI) * cauchy_on_curve(c, f, z, 0.0, None)?)
}

/// (y_r - y_l) at parameter t, shore values extrapolated from offsets
/// SHORE and SHORE / 2.
pub fn sokhotsky_jump(c: &SectorCurve, f: &dyn Fn(C64) -> C64, t: f64) -> Result<C64> {
    let z = c.z(t);
    let tan = c.dz(t) / c.dz(t).norm();
    let jump = |d: f64| -> Result<C64> { Ok(sokhotsky_y(c, f, z - I * d * tan)? - sokhotsky_y(c, f, z + I * d * tan)?) };
    Ok(2.0 * jump(0.5 * SHORE)? - jump(SHORE)?)
}

/// F(s) = int_L f(z) e^{isz} dz for -b1 < Arg s < pi - b2.
pub fn forward_f(c: &SectorCurve, f: &dyn Fn(C64) -> C64, s: C64) -> Result<C64> {
    if !c.in_s(s) {
        return Err(WhError::InvalidParameter { field: "s".into(), reason: format!("Arg s = {} outside the convergence sector", s.arg()) });
    }
    let (a, b) = c.arg_range();
    let rate = s.norm() * (s.arg() + a).sin().min((s.arg() + b).sin());
    let tmax = (40.0 / rate).max(1.0);
    let (ts, ws) = composite(&geometric_breaks(TAU_MIN, tmax, TAU_RATIO), 16);
    Ok(ts.iter().zip(&ws).map(|(&t, &w)| f(c.z(t)) * (I * s * c.z(t)).exp() * c.dz(t) * w).sum())
}

struct RayData {
    alpha: f64,
    tau: Vec<f64>,
    w: Vec<C64>,
    y: Vec<C64>,
}

impl RayData {
    fn new(c: &SectorCurve, f: &dyn Fn(C64) -> C64, alpha: f64) -> Result<Self> {
        let (tau, w) = composite(&geometric_breaks(TAU_MIN, TAU_MAX, TAU_RATIO), 16);
        let e = C64::from_polar(1.0, alpha);
        let y = tau.iter().map(|&t| sokhotsky_y(c, f, t * e)).collect::<Result<Vec<_>>>()?;
        let w = w.iter().map(|&x| e * x).collect();
        Ok(RayData { alpha, tau, w, y })
    }

    /// sin of the angle by which s e^{i alpha} lies inside the upper half-plane.
    fn margin(&self, s: C64) -> f64 {
        (s * C64::from_polar(1.0, self.alpha)).im / s.norm()
    }

    fn transform(&self, s: C64) -> C64 {
        let q = I * s * C64::from_polar(1.0, self.alpha);
        self.tau.iter().zip(&self.w).zip(&self.y).map(|((&t, &w), &y)| y * (q * t).exp() * w).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// rays reached from b1 without crossing L (transform Y1)
    Right,
    /// rays reached from b2 (transform Y2)
    Left,
}

/// Lazily built ray transforms of the Sokhotsky function.
pub struct Transforms<'a> {
    curve: SectorCurve,
    f: &'a dyn Fn(C64) -> C64,
    cache: RefCell<HashMap<i64, std::rc::Rc<RayData>>>,
}

impl<'a> Transforms<'a> {
    pub fn new(curve: SectorCurve, f: &'a dyn Fn(C64) -> C64) -> Self {
        Transforms { curve, f, cache: RefCell::new(HashMap::new()) }
    }

    fn interval(&self, side: Side) -> (f64, f64) {
        let (a, b) = self.curve.arg_range();
        match side {
            Side::Right => (b - 2.0 * PI + RAY_MARGIN, a - RAY_MARGIN),
            Side::Left => (b + RAY_MARGIN, a + 2.0 * PI - RAY_MARGIN),
        }
    }

    fn ray(&self, alpha: f64) -> Result<std::rc::Rc<RayData>> {
        let key = (alpha * 1e9).round() as i64;
        if let Some(r) = self.cache.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = std::rc::Rc::new(RayData::new(&self.curve, self.f, alpha)?);
        self.cache.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    /// Transform along the ray at exactly `alpha` (the definition of Y1, Y2
    /// for alpha = b1, b2).
    pub fn along(&self, alpha: f64, s: C64) -> Result<C64> {
        let r = self.ray(alpha)?;
        if r.margin(s) <= 0.0 {
            return Err(WhError::InvalidParameter { field: "s".into(), reason: "transform diverges on this ray".into() });
        }
        Ok(r.transform(s))
    }

    /// Y of the given side at s, continued through rotated rays; `phi` is
    /// the argument of s lifted continuously along the path of continuation
    /// (the principal argument for points of S).
    pub fn eval(&self, side: Side, s: C64, phi: f64) -> Result<C64> {
        let (lo, hi) = self.interval(side);
        let m = ((hi - lo) / RAY_STEP).ceil() as f64;
        let want = (0.5 * PI - phi).clamp(lo, hi);
        let alpha = lo + (hi - lo) * ((want - lo) / (hi - lo) * m).round() / m;
        if (phi + alpha).sin() < 0.2 {
            return Err(WhError::InvalidParameter { field: "s".into(), reason: "no well-conditioned ray on this side".into() });
        }
        Ok(self.ray(alpha)?.transform(s))
    }

    /// Mellin reconstruction at points z: (1/2pi) int_G Y(s) e^{-isz} ds,
    /// where G enters along Arg s = up, turns clockwise on |s| = ARC_RADIUS
    /// and leaves along Arg s = down. Y is taken from `upper` for
    /// Arg s >= split and from `lower` below.
    pub fn mellin(&self, zs: &[C64], up: f64, down: f64, upper: Side, lower: Side, split: f64) -> Result<Vec<C64>> {
        // slowest exponential decay of e^{-isz} along the legs
        let decay = zs
            .iter()
            .map(|z| (-(C64::from_polar(1.0, up) * z).im).min(-(C64::from_polar(1.0, down) * z).im))
            .fold(f64::INFINITY, f64::min);
        if decay <= 0.0 {
            return Err(WhError::InvalidParameter { field: "z".into(), reason: "point outside the reconstruction sector".into() });
        }
        let smax = 40.0 / decay;
        let (rs, rw) = composite(&geometric_breaks(ARC_RADIUS, smax, 2.0)[1..], 16);
        let mut nodes: Vec<(C64, C64, Side, f64)> = Vec::new();
        // incoming leg: s from infinity to ARC_RADIUS
        let eu = C64::from_polar(1.0, up);
        for (&r, &w) in rs.iter().zip(&rw) {
            nodes.push((r * eu, -eu * w, upper, up));
        }
        let (ph, pw) = composite(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], 16);
        for (&u, &w) in ph.iter().zip(&pw) {
            let phi = up + (down - up) * u;
            let s = C64::from_polar(ARC_RADIUS, phi);
            let side = if phi >= split { upper } else { lower };
            nodes.push((s, I * s * (down - up) * w, side, phi));
        }
        let ed = C64::from_polar(1.0, down);
        for (&r, &w) in rs.iter().zip(&rw) {
            nodes.push((r * ed, ed * w, lower, down));
        }
        let ys = nodes.iter().map(|&(s, _, side, phi)| self.eval(side, s, phi)).collect::<Result<Vec<_>>>()?;
        Ok(zs.iter()
            .map(|&z| nodes.iter().zip(&ys).map(|(&(s, ds, _, _), &y)| y * (-I * s * z).exp() * ds).sum::<C64>() / (2.0 * PI))
            .collect())
    }

    /// Reconstruction on the ray b1 from Y1, or on b2 from Y2.
    pub fn reconstruct_on_ray(&self, side: Side, taus: &[f64]) -> Result<Vec<C64>> {
        let theta = match side {
            Side::Right => self.curve.beta1,
            Side::Left => self.curve.beta2,
        };
        let zs: Vec<C64> = taus.iter().map(|&t| C64::from_polar(t, theta)).collect();
        // room between the ray and L limits how far the legs can turn
        let (a, b) = self.curve.arg_range();
        let room = match side {
            Side::Right => a - theta,
            Side::Left => theta - b,
        } - RAY_MARGIN
            - 0.3;
        let tilt = LEG_TILT.min(room);
        if tilt < 0.05 {
            return Err(WhError::InvalidParameter { field: "beta".into(), reason: "ray too close to L for the inversion".into() });
        }
        self.mellin(&zs, PI - theta + tilt, -theta - tilt, side, side, 0.0)
    }

    /// Reconstruction at interior points over the common contour, joining Y1
    /// (upper part) and Y2 (lower part) in the middle of S.
    pub fn reconstruct_interior(&self, zs: &[C64]) -> Result<Vec<C64>> {
        let (a, b) = self.curve.sector_s();
        let tilt = 0.2;
        self.mellin(zs, PI - self.curve.beta1 - tilt, -self.curve.beta2 + tilt, Side::Right, Side::Left, 0.5 * (a + b))
    }
}

/// Sample points of S used by the demos.
pub fn s_samples(c: &SectorCurve) -> Vec<C64> {
    let (a, b) = c.sector_s();
    let mut v = Vec::new();
    for j in 1..=3 {
        let g = a + (b - a) * j as f64 / 4.0;
        for r in [0.5, 1.0, 2.0, 4.0] {
            v.push(C64::from_polar(r, g));
        }
    }
    v
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report1d {
    pub max_f_on_l: f64,
    /// max |F| on samples of S
    pub max_transform_on_s: f64,
    /// max |Y1 - Y2 - F| on S: the two Cauchy steps combined
    pub cauchy_step_error: f64,
    /// max |Y1 - Y2| on S: mismatch of the two continuations
    pub continuation_mismatch: f64,
    /// |y_r - y_l - f| at mid-curve
    pub jump_error: f64,
    /// max |y_rec - y| on both rays (Mellin inversion of Y1, Y2)
    pub reconstruction_error: f64,
    /// max |y_c - y| at interior points on both sides of L
    pub common_contour_mismatch: f64,
    /// against a known closed form, when supplied
    pub exact_error: Option<f64>,
}

/// Points on the two rays where reconstructions are compared.
pub const RAY_POINTS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

pub fn uniqueness_demo_1d(c: &SectorCurve, f: &dyn Fn(C64) -> C64, exact: Option<&dyn Fn(C64) -> C64>) -> Result<Report1d> {
    check_decay(c, f)?;
    let max_f_on_l = [0.0, 0.5, 1.0, 2.0, 5.0].iter().map(|&t| f(c.z(t)).norm()).fold(0.0, f64::max);
    let tr = Transforms::new(*c, f);
    let (mut mf, mut cs, mut cm) = (0.0f64, 0.0f64, 0.0f64);
    for s in s_samples(c) {
        let ff = forward_f(c, f, s)?;
        let y1 = tr.along(c.beta1, s)?;
        let y2 = tr.along(c.beta2, s)?;
        mf = mf.max(ff.norm());
        cs = cs.max((y1 - y2 - ff).norm());
        cm = cm.max((y1 - y2).norm());
    }
    let jump_error = (sokhotsky_jump(c, f, 1.0)? - f(c.z(1.0))).norm();
    let mut rec = 0.0f64;
    let mut ex = 0.0f64;
    for (side, th) in [(Side::Right, c.beta1), (Side::Left, c.beta2)] {
        let r = tr.reconstruct_on_ray(side, &RAY_POINTS)?;
        for (&t, v) in RAY_POINTS.iter().zip(&r) {
            let z = C64::from_polar(t, th);
            let y = sokhotsky_y(c, f, z)?;
            rec = rec.max((v - y).norm());
            if let Some(e) = exact {
                ex = ex.max((v - e(z)).norm()).max((y - e(z)).norm());
            }
        }
    }
    let (a, b) = c.arg_range();
    let inner: Vec<C64> = [1.0, 2.0]
        .iter()
        .flat_map(|&r| [C64::from_polar(r, a - 0.3), C64::from_polar(r, b + 0.3)])
        .collect();
    let yc = tr.reconstruct_interior(&inner)?;
    let mut ccm = 0.0f64;
    for (z, v) in inner.iter().zip(&yc) {
        ccm = ccm.max((v - sokhotsky_y(c, f, *z)?).norm());
    }
    Ok(Report1d {
        max_f_on_l,
        max_transform_on_s: mf,
        cauchy_step_error: cs,
        continuation_mismatch: cm,
        jump_error,
        reconstruction_error: rec,
        common_contour_mismatch: ccm,
        exact_error: exact.map(|_| ex),
    })
}

/// f must decay along L: |f| at t = 1e4 below half its value at 1e3.
fn check_decay(c: &SectorCurve, f: &dyn Fn(C64) -> C64) -> Result<()> {
    let a = f(c.z(1e3)).norm();
    let b = f(c.z(1e4)).norm();
    if !(b <= 0.5 * a || (a == 0.0 && b == 0.0)) {
        return Err(WhError::InvalidParameter { field: "f".into(), reason: "f does not decay along L".into() });
    }
    Ok(())
}

/// The closed-form synthetic on a straight ray L of angle b: with
/// w = z e^{-ib}, f = 1 / (w + 1) and y = -(i / 2pi) log(-w) / (w + 1).
pub mod synthetic {
    use super::*;

    pub fn f(angle: f64) -> impl Fn(C64) -> C64 {
        move |z| 1.0 / (z * C64::from_polar(1.0, -angle) + 1.0)
    }

    pub fn y(angle: f64) -> impl Fn(C64) -> C64 {
        move |z| {
            let w = z * C64::from_polar(1.0, -angle);
            -I / (2.0 * PI) * (-w).ln() / (w + 1.0)
        }
    }

    /// Shore values of y on L at parameter t: (right, left).
    pub fn shores(t: f64) -> (C64, C64) {
        let l = t.ln();
        let k = -I / (2.0 * PI) / (t + 1.0);
        (k * (l + I * PI), k * (l - I * PI))
    }

    /// Cauchy transform of the indicator of the parameter range [a, b] on a
    /// straight ray.
    pub fn segment_y(angle: f64, a: f64, b: f64, z: C64) -> C64 {
        let e = C64::from_polar(1.0, angle);
        I / (2.0 * PI) * ((b * e - z) / (a * e - z)).ln()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report2d {
    /// max |F(s1, s2)| on S x S samples
    pub max_transform: f64,
    /// max |g(z2)| = |int_L f(z1, z2) e^{i s1 z1} dz1| over s1 samples
    pub max_g: f64,
    /// max over s1 of the largest |int_L g e^{i s2 z2}| (first layer)
    pub layer1_max: f64,
    /// max over z2 samples of the largest 1D transform of f(., z2)
    pub layer2_max: f64,
    /// separable case: max |g - F1(s1) f2| (None otherwise)
    pub separable_error: Option<f64>,
}

/// Two-variable demo on L x L, layered as in the proof: g(z2) for fixed s1,
/// then the one-variable transform of g, then of f(., z2).
pub fn uniqueness_demo_2d(
    c: &SectorCurve,
    f: &dyn Fn(C64, C64) -> C64,
    separable: Option<(&dyn Fn(C64) -> C64, &dyn Fn(C64) -> C64)>,
) -> Result<Report2d> {
    for z in [C64::new(0.5, 0.0), c.z(1.0)] {
        let zz = c.z(z.norm());
        check_decay(c, &|w| f(w, zz))?;
        check_decay(c, &|w| f(zz, w))?;
    }
    let ss: Vec<C64> = s_samples(c).into_iter().step_by(2).collect();
    let rate = |s: C64| {
        let (a, b) = c.arg_range();
        s.norm() * (s.arg() + a).sin().min((s.arg() + b).sin())
    };
    let tmax = ss.iter().map(|&s| 40.0 / rate(s)).fold(1.0, f64::max);
    let (ts, ws) = composite(&geometric_breaks(1e-4, tmax, 1.2), 16);
    let zs: Vec<C64> = ts.iter().map(|&t| c.z(t)).collect();
    let dz: Vec<C64> = ts.iter().zip(&ws).map(|(&t, &w)| c.dz(t) * w).collect();
    let zsample = [0.5, 1.0, 2.0];
    let (mut mt, mut mg, mut l1, mut l2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut sep = 0.0f64;
    for &s1 in &ss {
        let e1: Vec<C64> = zs.iter().zip(&dz).map(|(z, d)| (I * s1 * z).exp() * d).collect();
        // g on the nodes of L
        let g: Vec<C64> = zs.iter().map(|&z2| zs.iter().zip(&e1).map(|(&z1, e)| f(z1, z2) * e).sum()).collect();
        mg = mg.max(g.iter().map(|v| v.norm()).fold(0.0, f64::max));
        for &s2 in &ss {
            let v: C64 = g.iter().zip(zs.iter().zip(&dz)).map(|(gv, (z, d))| gv * (I * s2 * z).exp() * d).sum();
            mt = mt.max(v.norm());
            l1 = l1.max(v.norm());
        }
        if let Some((f1, f2)) = separable {
            let f1s = forward_f(c, f1, s1)?;
            for &t in &zsample {
                // g interpolated by a direct quadrature at z2 = z(t)
                let z2 = c.z(t);
                let gv: C64 = zs.iter().zip(&e1).map(|(&z1, e)| f(z1, z2) * e).sum();
                sep = sep.max((gv - f1s * f2(z2)).norm());
            }
        }
    }
    for &t in &zsample {
        let z2 = c.z(t);
        for &s1 in &ss {
            l2 = l2.max(forward_f(c, &|z1| f(z1, z2), s1)?.norm());
        }
    }
    Ok(Report2d {
        max_transform: mt,
        max_g: mg,
        layer1_max: l1,
        layer2_max: l2,
        separable_error: separable.map(|_| sep),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_closed_form_and_sector() {
        let c = SectorCurve::new(-0.3, 0.3, CurveShape::Ray { angle: 0.0 }).unwrap();
        let f = |z: C64| (-z).exp();
        let v = forward_f(&c, &f, I).unwrap();
        assert!((v - 0.5).norm() < 1e-12, "{v}");
        assert_eq!(forward_f(&c, &|_| C64::new(0.0, 0.0), I).unwrap(), C64::new(0.0, 0.0));
        assert!(forward_f(&c, &f, C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn sokhotsky_closed_forms() {
        let c = SectorCurve::bisector(0.2, 2.4).unwrap();
        let ang = 1.3;
        let f = synthetic::f(ang);
        let y = synthetic::y(ang);
        for z in [C64::new(1.0, 0.3), C64::new(-0.4, -0.2), C64::from_polar(2.0, 1.25), C64::from_polar(0.01, 0.2)] {
            let v = sokhotsky_y(&c, &f, z).unwrap();
            assert!((v - y(z)).norm() < 1e-10, "{z} {v} {}", y(z));
        }
        let j = sokhotsky_jump(&c, &f, 1.0).unwrap();
        assert!((j - f(c.z(1.0))).norm() < 1e-6);
        let (r, l) = synthetic::shores(1.0);
        assert!((r - l - f(c.z(1.0))).norm() < 1e-14);
        // indicator of [1, 2]
        let one = |z: C64| {
            let t = z.norm();
            if (1.0..=2.0).contains(&t) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        };
        let z = C64::new(0.3, 1.7);
        let v = I / (2.0 * PI) * cauchy_on_curve(&c, &one, z, 1.0, Some(2.0)).unwrap();
        assert!((v - synthetic::segment_y(ang, 1.0, 2.0, z)).norm() < 1e-12);
        assert!(sokhotsky_y(&c, &f, c.z(1.0)).is_err());
    }

    #[test]
    fn simplicity_and_sectors() {
        let c = SectorCurve::new(0.2, 2.4, CurveShape::Arc { angle: 1.0, bend: 0.6 }).unwrap();
        let ann: Vec<(f64, f64)> = (0..50).map(|i| (0.1 * i as f64, 0.1 * i as f64 + 0.05 + 0.37 * i as f64)).collect();
        let r = c.simplicity_ratio(&ann);
        assert!(r <= c.simplicity + 1e-12 && r >= 1.0);
        assert_eq!(c.sector_s(), (-0.2, PI - 2.4));
        assert!(SectorCurve::new(0.0, 3.5, CurveShape::Ray { angle: 1.0 }).is_err());
        assert!(SectorCurve::new(0.2, 1.0, CurveShape::Ray { angle: 1.5 }).is_err());
    }

    #[test]
    fn cauchy_steps_on_synthetic() {
        let c = SectorCurve::bisector(0.2, 2.4).unwrap();
        let f = synthetic::f(1.3);
        let tr = Transforms::new(c, &f);
        let (ts, ws) = composite(&geometric_breaks(TAU_MIN, 200.0, TAU_RATIO), 16);
        for s in s_samples(&c).into_iter().step_by(3) {
            let mut r = C64::new(0.0, 0.0);
            let mut l = C64::new(0.0, 0.0);
            for (&t, &w) in ts.iter().zip(&ws) {
                let (yr, yl) = synthetic::shores(t);
                let e = (I * s * c.z(t)).exp() * c.dz(t) * w;
                r += yr * e;
                l += yl * e;
            }
            assert!((r - tr.along(c.beta1, s).unwrap()).norm() < 1e-6);
            assert!((l - tr.along(c.beta2, s).unwrap()).norm() < 1e-6);
        }
    }
}
