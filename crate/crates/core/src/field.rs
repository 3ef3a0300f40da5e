//! Physical-space field from the solved spectral data:
//!   u(x1, x2, x3) = -i F^-1[K W exp(i |x3| / K)](x1, x2)
//! by tensor Gauss quadrature over the real plane, and the checks of the
//! boundary-value problem (Helmholtz, Dirichlet on the quarter-plane, Neumann
//! off it, edge and vertex growth, decay).
//!
//! Transforms at x3 = 0 do not converge absolutely; they are taken with a
//! Gaussian window exp(-d1 xi1^2 - d2 xi2^2), i.e. convolved with a narrow
//! Gaussian in x. A window in xi1 alone smooths along x1 only, which keeps
//! the local behaviour at the edge x2 = 0 intact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexcore::{kernel_phys, Params, C64, I};
use crate::error::{Result, WhError};
use crate::linalg::CMat;
use crate::quad::gauss_legendre;
use crate::spectral::{fit_power, GrowthFit, StripSolution};

/// Finite-difference step of the Helmholtz check.
pub const FD_STEP: f64 = 1e-2;
/// Default mollifier width for x3 = 0 transforms.
pub const MOLLIFIER: f64 = 0.01;
/// exp(-TAIL) is the neglected weight at the end of a truncated axis.
pub const TAIL: f64 = 16.0;

/// One-dimensional Gauss rule on a truncated axis.
#[derive(Debug, Clone)]
pub struct AxisRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl AxisRule {
    fn from_breaks(breaks: &[f64], order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut x = Vec::new();
        let mut w = Vec::new();
        for ab in breaks.windows(2) {
            let (c, h) = (0.5 * (ab[0] + ab[1]), 0.5 * (ab[1] - ab[0]));
            for (t, wt) in gx.iter().zip(&gw) {
                x.push(c + h * t);
                w.push(h * wt);
            }
        }
        AxisRule { x, w }
    }

    /// Equal panels of about `width` on [-l, l].
    pub fn uniform(l: f64, width: f64, order: usize) -> Self {
        let m = ((2.0 * l / width).ceil() as usize).max(1);
        let b: Vec<f64> = (0..=m).map(|i| -l + 2.0 * l * i as f64 / m as f64).collect();
        Self::from_breaks(&b, order)
    }

    /// Panels of width `h0` near the origin, doubling outwards up to l.
    pub fn graded(l: f64, h0: f64, order: usize) -> Self {
        let mut pos = vec![0.0];
        let mut h = h0;
        while *pos.last().unwrap() < l {
            let next = (pos.last().unwrap() + h).min(l);
            pos.push(next);
            if next >= 2.0 * h {
                h *= 2.0;
            }
        }
        let mut b: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
        b.extend_from_slice(&pos[1..]);
        Self::from_breaks(&b, order)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    /// the scattered field, at height x3
    U,
    /// du/dx3 at height x3 >= 0
    DuDx3,
    /// F^-1[U'] at x3 = 0: equals u + exp(i(k1 x1 + k2 x2)) on the first
    /// quadrant and u elsewhere
    UPrime,
    /// F^-1[W] = du/dx3 at x3 = 0+
    W,
}

/// Gaussian window exp(-d1 xi1^2 - d2 xi2^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub d1: f64,
    pub d2: f64,
}

impl Window {
    pub const NONE: Window = Window { d1: 0.0, d2: 0.0 };

    pub fn both(d: f64) -> Self {
        Window { d1: d, d2: d }
    }

    /// The same smoothing applied to exp(i(k1 x1 + k2 x2)).
    pub fn plane_wave_factor(&self, p: &Params) -> C64 {
        (-self.d1 * p.k1 * p.k1 - self.d2 * p.k2 * p.k2).exp()
    }
}

/// W, K and sqrt(k^2 - xi^2) tabulated on a tensor real-plane rule.
pub struct FieldEvaluator {
    pub params: Params,
    pub a1: AxisRule,
    pub a2: AxisRule,
    w: CMat,
    kern: CMat,
    root: CMat,
}

impl FieldEvaluator {
    pub fn new(sol: &StripSolution, a1: AxisRule, a2: AxisRule) -> Result<Self> {
        let p = sol.params;
        let z1: Vec<C64> = a1.x.iter().map(|&x| C64::new(x, 0.0)).collect();
        let z2: Vec<C64> = a2.x.iter().map(|&x| C64::new(x, 0.0)).collect();
        let w = sol.eval_first(&z1, &z2)?;
        let k2sq = p.k2sq();
        let kern = CMat::from_fn(z1.len(), z2.len(), |i, j| kernel_phys(k2sq, z1[i], z2[j]));
        let root = CMat::from_fn(z1.len(), z2.len(), |i, j| 1.0 / kern.at(i, j));
        Ok(FieldEvaluator { params: p, a1, a2, w, kern, root })
    }

    /// Rule sized for points with |x| <= xmax at heights >= x3min (x3min = 0
    /// needs a window).
    pub fn for_region(sol: &StripSolution, xmax: f64, x3min: f64, win: Window) -> Result<Self> {
        let axis = |d: f64| {
            let mut l = f64::INFINITY;
            if x3min > 0.0 {
                l = TAIL / x3min;
            }
            if d > 0.0 {
                l = l.min((TAIL / d).sqrt());
            }
            if !l.is_finite() {
                return Err(WhError::InvalidParameter { field: "x3".into(), reason: "x3 = 0 needs a window".into() });
            }
            // about 6 nodes per wavelength of exp(-i xi x)
            let width = (2.0 * PI / xmax.max(0.5)).min(2.0);
            Ok(if xmax <= 0.5 { AxisRule::graded(l, 0.5, 16) } else { AxisRule::uniform(l, width * 16.0 / 6.0 / 2.0, 16) })
        };
        Self::new(sol, axis(win.d1)?, axis(win.d2)?)
    }

    /// -i F^-1 of the chosen spectral quantity at (x1, x2, x3).
    pub fn transform(&self, q: Quantity, x1: f64, x2: f64, x3: f64, win: Window) -> C64 {
        let p = &self.params;
        let x3a = x3.abs();
        let e1: Vec<C64> = self
            .a1
            .x
            .iter()
            .zip(&self.a1.w)
            .map(|(&t, &w)| (-I * t * x1).exp() * (w * (-win.d1 * t * t).exp()))
            .collect();
        let e2: Vec<C64> = self
            .a2
            .x
            .iter()
            .zip(&self.a2.w)
            .map(|(&t, &w)| (-I * t * x2).exp() * (w * (-win.d2 * t * t).exp()))
            .collect();
        let n2 = self.a2.len();
        let acc: C64 = (0..self.a1.len())
            .into_par_iter()
            .map(|i| {
                let a = C64::new(self.a1.x[i], 0.0);
                let mut row = C64::new(0.0, 0.0);
                for j in 0..n2 {
                    let (w, k, r) = (self.w.at(i, j), self.kern.at(i, j), self.root.at(i, j));
                    let v = match q {
                        Quantity::U => -I * k * w * (I * x3a * r).exp(),
                        Quantity::DuDx3 => w * (I * x3a * r).exp(),
                        Quantity::W => w,
                        Quantity::UPrime => {
                            let b = C64::new(self.a2.x[j], 0.0);
                            -I * k * w - 1.0 / ((a + p.k1) * (b + p.k2))
                        }
                    };
                    row += v * e2[j];
                }
                row * e1[i]
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        acc / (4.0 * PI * PI)
    }

    pub fn u(&self, x1: f64, x2: f64, x3: f64, win: Window) -> C64 {
        self.transform(Quantity::U, x1, x2, x3, win)
    }

    /// Total field u + u_in under the same window.
    pub fn u_total(&self, x1: f64, x2: f64, x3: f64, win: Window) -> C64 {
        self.u(x1, x2, x3, win) + incident(&self.params, x1, x2, x3) * win.plane_wave_factor(&self.params)
    }

    /// |Laplacian u + k^2 u| by the 7-point stencil, and |u|.
    pub fn helmholtz_residual(&self, x1: f64, x2: f64, x3: f64) -> (f64, f64) {
        let h = FD_STEP;
        let f = |a: f64, b: f64, c: f64| self.u(a, b, c, Window::NONE);
        let u0 = f(x1, x2, x3);
        let lap = f(x1 + h, x2, x3) + f(x1 - h, x2, x3) + f(x1, x2 + h, x3) + f(x1, x2 - h, x3) + f(x1, x2, x3 + h)
            + f(x1, x2, x3 - h)
            - 6.0 * u0;
        ((lap / (h * h) + self.params.k2sq() * u0).norm(), u0.norm())
    }

    /// Rows of the CSV field slice `x1,x2,x3,re_u,im_u`.
    pub fn write_slice<W: std::io::Write>(&self, out: W, pts: &[(f64, f64, f64)]) -> std::result::Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["x1", "x2", "x3", "re_u", "im_u"])?;
        for &(a, b, c) in pts {
            let u = self.u(a, b, c, Window::NONE);
            wr.serialize((a, b, c, u.re, u.im))?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn incident(p: &Params, x1: f64, x2: f64, x3: f64) -> C64 {
    let k3 = (p.k2sq() - p.k1 * p.k1 - p.k2 * p.k2).sqrt();
    (I * (p.k1 * x1 + p.k2 * x2 - k3 * x3)).exp()
}

pub fn reconstruct_u(sol: &StripSolution, x1: f64, x2: f64, x3: f64) -> Result<C64> {
    if x3 == 0.0 {
        return Err(WhError::InvalidParameter { field: "x3".into(), reason: "use a windowed transform at x3 = 0".into() });
    }
    let r = (x1 * x1 + x2 * x2).sqrt();
    Ok(FieldEvaluator::for_region(sol, r, x3.abs(), Window::NONE)?.u(x1, x2, x3, Window::NONE))
}

/// |F^-1_d[U'](x1, x2)| / |exp(i(k1 x1 + k2 x2))| at a point of the first
/// quadrant: the windowed Dirichlet defect.
pub fn dirichlet_contrast(ev: &FieldEvaluator, x1: f64, x2: f64, d: f64) -> f64 {
    let p = &ev.params;
    let v = ev.transform(Quantity::UPrime, x1, x2, 0.0, Window::both(d));
    v.norm() / (I * (p.k1 * x1 + p.k2 * x2)).exp().norm()
}

/// |F^-1_d[W](x)| / |F^-1_d[W](-x)|, x in the first quadrant: the normal
/// derivative off the scatterer against its size on it.
pub fn neumann_contrast(ev: &FieldEvaluator, x1: f64, x2: f64, d: f64) -> f64 {
    let off = ev.transform(Quantity::W, -x1, -x2, 0.0, Window::both(d));
    let on = ev.transform(Quantity::W, x1, x2, 0.0, Window::both(d));
    off.norm() / on.norm()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub fit: GrowthFit,
    /// max |u| / min |u| over the sweep
    pub dynamic_range: f64,
    pub accepted: bool,
}

/// Minimum max/min ratio over a decade sweep for a power-law fit to count.
pub const MIN_DYNAMIC_RANGE: f64 = 1.5;
/// Largest rms log-residual of an accepted fit.
pub const MAX_FIT_RESIDUAL: f64 = 0.05;

fn power_fit(rs: &[f64], vals: &[f64]) -> Result<ExponentFit> {
    let fit = fit_power(rs, vals)?;
    let mx = vals.iter().cloned().fold(0.0, f64::max);
    let mn = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let dynamic_range = mx / mn;
    let accepted = dynamic_range >= MIN_DYNAMIC_RANGE && fit.fit_residual <= MAX_FIT_RESIDUAL;
    Ok(ExponentFit { fit, dynamic_range, accepted })
}

pub fn log_radii(r0: f64, r1: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| r0 * (r1 / r0).powf(i as f64 / (m - 1) as f64)).collect()
}

/// Evaluator for points straight above the edge x2 = 0 (fixed x1), distance
/// rho in [r0, ...]: window along x1 only, xi2 graded to TAIL / r0.
pub fn edge_evaluator(sol: &StripSolution, x1: f64, r0: f64) -> Result<FieldEvaluator> {
    let d1 = MOLLIFIER;
    let a1 = AxisRule::uniform((TAIL / d1).sqrt(), (2.0 * PI / x1.abs().max(0.5)).min(2.0) * 16.0 / 12.0, 16);
    let a2 = AxisRule::graded(TAIL / r0, 0.5, 16);
    FieldEvaluator::new(sol, a1, a2)
}

/// Fitted exponent of |u_t| ~ rho^p above the edge x2 = 0 at the given x1.
pub fn edge_exponent(ev: &FieldEvaluator, x1: f64, rs: &[f64]) -> Result<ExponentFit> {
    let win = Window { d1: MOLLIFIER, d2: 0.0 };
    let vals: Vec<f64> = rs.iter().map(|&r| ev.u_total(x1, 0.0, r, win).norm()).collect();
    power_fit(rs, &vals)
}

/// Exponent of an arbitrary radial profile (used for controls).
pub fn profile_exponent(f: &dyn Fn(f64) -> C64, rs: &[f64]) -> Result<ExponentFit> {
    let vals: Vec<f64> = rs.iter().map(|&r| f(r).norm()).collect();
    power_fit(rs, &vals)
}

/// Evaluator for points above the vertex.
pub fn vertex_evaluator(sol: &StripSolution, r0: f64) -> Result<FieldEvaluator> {
    let l = TAIL / r0;
    FieldEvaluator::new(sol, AxisRule::graded(l, 0.5, 16), AxisRule::graded(l, 0.5, 16))
}

/// Fitted exponent of |u_t| ~ r^lambda along the axis above the vertex.
pub fn vertex_exponent(ev: &FieldEvaluator, rs: &[f64]) -> Result<ExponentFit> {
    let vals: Vec<f64> = rs.iter().map(|&r| ev.u_total(0.0, 0.0, r, Window::NONE).norm()).collect();
    power_fit(rs, &vals)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub phi: f64,
    pub radii: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub rate: f64,
    pub required: f64,
    pub ok: bool,
}

/// Least-squares slope of log|f| against r.
pub fn decay_rate(rs: &[f64], mags: &[f64]) -> f64 {
    let n = rs.len() as f64;
    let mx = rs.iter().sum::<f64>() / n;
    let ly: Vec<f64> = mags.iter().map(|m| m.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = rs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = rs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

/// Samples |u(r cos phi, r sin phi, 0+)| (windowed) along each ray and
/// requires a log-linear decay rate of at least 4 kappa (1 - 0.2).
pub fn decay_check(ev: &FieldEvaluator, phis: &[f64], radii: &[f64], d: f64) -> Vec<DecayReport> {
    let required = 4.0 * ev.params.kappa * 0.8;
    phis.iter()
        .map(|&phi| {
            let mags: Vec<f64> = radii
                .iter()
                .map(|&r| ev.transform(Quantity::UPrime, r * phi.cos(), r * phi.sin(), 0.0, Window::both(d)).norm())
                .collect();
            let rate = decay_rate(radii, &mags);
            DecayReport { phi, radii: radii.to_vec(), magnitudes: mags, rate, required, ok: rate >= required }
        })
        .collect()
}
