//! One-variable Wiener-Hopf demonstrator: K W+ + U- = T with an algebraic
//! kernel, its closed-form solution, and continuation of W+ along words of
//! loops around the branch points.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexcore::{continue_sqrt, C64};
use crate::error::{Result, WhError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    /// (k^2 - xi^2)^(-1/2)
    InverseSqrt,
    /// (k^2 - xi^2)^(1/2)
    Sqrt,
    /// any other algebraic kernel, named; no factorisation is registered
    Other(String),
}

impl KernelSpec {
    fn alpha(&self) -> Result<f64> {
        match self {
            KernelSpec::InverseSqrt => Ok(-0.5),
            KernelSpec::Sqrt => Ok(0.5),
            KernelSpec::Other(name) => Err(WhError::UnfactorizableKernel(name.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wh1dProblem {
    pub k: C64,
    pub kernel: KernelSpec,
    /// T(xi) = sum of a / (xi - p) over (a, p)
    pub rhs: Vec<(C64, C64)>,
}

impl Wh1dProblem {
    /// Kernel (k^2 - xi^2)^(-1/2), T = 1/(xi + k1).
    pub fn default_for(k: C64, k1: C64) -> Self {
        Wh1dProblem { k, kernel: KernelSpec::InverseSqrt, rhs: vec![(C64::new(1.0, 0.0), -k1)] }
    }

    pub fn branch_points(&self) -> [C64; 2] {
        [self.k, -self.k]
    }

    pub fn t(&self, xi: C64) -> C64 {
        self.rhs.iter().map(|(a, p)| a / (xi - p)).sum()
    }
}

/// Closed-form solution; evaluators are valid on the physical sheet.
#[derive(Debug, Clone)]
pub struct Wh1dSolution {
    pub problem: Wh1dProblem,
    alpha: f64,
    /// (a / K-(p), p) for the poles of T in the lower half-plane
    plus_terms: Vec<(C64, C64)>,
}

pub fn solve_wh1d(p: &Wh1dProblem) -> Result<Wh1dSolution> {
    let alpha = p.kernel.alpha()?;
    let k = p.k;
    let plus_terms = p
        .rhs
        .iter()
        .filter(|(_, q)| q.im < 0.0)
        .map(|&(a, q)| (a / (k - q).powf(alpha), q))
        .collect();
    Ok(Wh1dSolution { problem: p.clone(), alpha, plus_terms })
}

impl Wh1dSolution {
    /// K(xi) = K+(xi) K-(xi); on the real axis this is the physical branch
    /// (Im sqrt(k^2 - xi^2) > 0), with the cuts running horizontally away from
    /// the strip.
    pub fn kernel(&self, xi: C64) -> C64 {
        self.k_plus(xi) * self.k_minus(xi)
    }

    /// K+(xi) = (k + xi)^alpha, analytic in the upper half-plane.
    pub fn k_plus(&self, xi: C64) -> C64 {
        (self.problem.k + xi).powf(self.alpha)
    }

    /// K-(xi) = (k - xi)^alpha, analytic in the lower half-plane.
    pub fn k_minus(&self, xi: C64) -> C64 {
        (self.problem.k - xi).powf(self.alpha)
    }

    fn plus_sum(&self, xi: C64) -> C64 {
        self.plus_terms.iter().map(|(c, q)| c / (xi - q)).sum()
    }

    pub fn w_plus(&self, xi: C64) -> C64 {
        self.plus_sum(xi) / self.k_plus(xi)
    }

    pub fn u_minus(&self, xi: C64) -> C64 {
        self.problem.t(xi) - self.k_minus(xi) * self.plus_sum(xi)
    }

    pub fn residual(&self, xi: C64) -> f64 {
        (self.kernel(xi) * self.w_plus(xi) + self.u_minus(xi) - self.problem.t(xi)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Half {
    /// loop in the upper half-plane around +k
    Upper,
    /// loop in the lower half-plane around -k
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    pub half: Half,
    /// +1 counter-clockwise, -1 clockwise; |turns| > 1 repeats the loop
    pub turns: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopWord {
    pub loops: Vec<Loop>,
}

impl LoopWord {
    pub fn parse(s: &str) -> Result<LoopWord> {
        // tokens like "-", "+", "-'", separated by spaces: '-' lower, '+' upper,
        // trailing '\'' for clockwise
        let mut loops = Vec::new();
        for tok in s.split_whitespace() {
            let (half, rest) = match tok.chars().next() {
                Some('-') => (Half::Lower, &tok[1..]),
                Some('+') => (Half::Upper, &tok[1..]),
                _ => {
                    return Err(WhError::InvalidParameter {
                        field: "word".into(),
                        reason: format!("bad loop token {tok:?}"),
                    })
                }
            };
            let turns = match rest {
                "" => 1,
                "'" => -1,
                _ => {
                    return Err(WhError::InvalidParameter {
                        field: "word".into(),
                        reason: format!("bad loop token {tok:?}"),
                    })
                }
            };
            loops.push(Loop { half, turns });
        }
        Ok(LoopWord { loops })
    }

    pub fn label(&self) -> String {
        self.loops
            .iter()
            .map(|l| {
                let h = if l.half == Half::Lower { "-" } else { "+" };
                let d = if l.turns < 0 { "'" } else { "" };
                format!("{h}{d}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Geometry of the loops: circles of radius `radius_frac * |k|` about the
/// branch points joined to the base point by straight spurs.
#[derive(Debug, Clone, Copy)]
pub struct LoopGeometry {
    pub radius_frac: f64,
}

impl Default for LoopGeometry {
    fn default() -> Self {
        LoopGeometry { radius_frac: 0.3 }
    }
}

/// Point at t in [0, 1] along the concatenated loop path based at `base`.
pub fn loop_path(k: C64, base: C64, loops: &[Loop], geo: LoopGeometry) -> impl Fn(f64) -> C64 + '_ {
    let r = geo.radius_frac * k.norm();
    let n = loops.len().max(1) as f64;
    move |t: f64| {
        if loops.is_empty() {
            return base;
        }
        let i = ((t * n).floor() as usize).min(loops.len() - 1);
        let s = t * n - i as f64;
        let l = loops[i];
        let c = if l.half == Half::Upper { k } else { -k };
        let d = base - c;
        let start = c + r * d / d.norm();
        let th = d.arg();
        let turn = 2.0 * PI * l.turns as f64;
        if s < 0.2 {
            base + (start - base) * (s / 0.2)
        } else if s < 0.8 {
            c + r * C64::from_polar(1.0, th + turn * (s - 0.2) / 0.6)
        } else {
            start + (base - start) * ((s - 0.8) / 0.2)
        }
    }
}

impl Wh1dSolution {
    /// K(xi; path): the kernel continued from its physical value at `xi`
    /// along the loops, by path-stepping its radicand.
    pub fn kernel_along(&self, xi: C64, loops: &[Loop], geo: LoopGeometry) -> Result<C64> {
        let k = self.problem.k;
        let k2 = k * k;
        let r0 = C64::new(0.0, 1.0) * (xi * xi - k2).sqrt();
        let path = loop_path(k, xi, loops, geo);
        let r = continue_sqrt(|z| k2 - z * z, path, r0)?;
        Ok(r.powf(2.0 * self.alpha))
    }
}

/// W+ continued along `word` from the physical sheet at `xi`.
///
/// W is carried as W+*(xi) times a product of kernel branches K(xi; path)^e.
/// A lower loop l at accumulated path s keeps K W = T - U- fixed (U- is
/// single valued in the lower half-plane), so it multiplies by
/// K(s) / K(s l). An upper loop keeps W+* and continues every kernel factor
/// along l.
pub fn continue_along(sol: &Wh1dSolution, word: &LoopWord, xi: C64) -> Result<C64> {
    continue_along_with(sol, word, xi, LoopGeometry::default())
}

pub fn continue_along_with(sol: &Wh1dSolution, word: &LoopWord, xi: C64, geo: LoopGeometry) -> Result<C64> {
    let mut factors: Vec<(Vec<Loop>, i32)> = Vec::new();
    let mut prefix: Vec<Loop> = Vec::new();
    for &l in &word.loops {
        match l.half {
            Half::Lower => {
                let mut with = prefix.clone();
                with.push(l);
                factors.push((prefix.clone(), 1));
                factors.push((with, -1));
            }
            Half::Upper => {
                for f in factors.iter_mut() {
                    f.0.push(l);
                }
            }
        }
        prefix.push(l);
    }
    let mut w = sol.w_plus(xi);
    for (path, e) in &factors {
        w *= sol.kernel_along(xi, path, geo)?.powi(*e);
    }
    Ok(w)
}

/// Independent oracle: path-steps the square root inside the closed form of
/// W+ directly along the loop path.
pub fn continue_brute_force(sol: &Wh1dSolution, word: &LoopWord, xi: C64, geo: LoopGeometry) -> Result<C64> {
    let k = sol.problem.k;
    let path = loop_path(k, xi, &word.loops, geo);
    let r0 = (k + xi).sqrt();
    let r = continue_sqrt(|z| k + z, path, r0)?;
    // W+ = (k + xi)^(-alpha) * rational
    let rational = sol.w_plus(xi) * sol.k_plus(xi);
    Ok(rational * r.powf(-2.0 * sol.alpha))
}
