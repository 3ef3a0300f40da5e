//! Cauchy sum-split operators on a strip |Im xi| < kappa and the pole-removal
//! split.
//!
//! For one variable
//!   [f]+(xi) =  1/(2 pi i) int_{R - i kappa} f(t) / (t - xi) dt,
//!   [f]-(xi) = -1/(2 pi i) int_{R + i kappa} f(t) / (t - xi) dt,
//! so that [f]+ is analytic above the strip, [f]- below, and their sum is f
//! inside the strip.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::complexcore::{C64, I};
use crate::contours::{integrate, make_shifted_line};
use crate::error::{Result, WhError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

pub type Eval2 = Arc<dyn Fn(C64, C64) -> Result<C64> + Send + Sync>;

/// A function of two variables analytic in a product of strips of half-width
/// `kappa`, decaying like |xi|^(-decay) along lines.
#[derive(Clone)]
pub struct StripFunction {
    pub f: Eval2,
    pub kappa: f64,
    pub decay: f64,
}

/// Slowest decay accepted by the split operators.
pub const MIN_DECAY: f64 = 0.5;

impl StripFunction {
    pub fn new(f: impl Fn(C64, C64) -> Result<C64> + Send + Sync + 'static, kappa: f64, decay: f64) -> Self {
        StripFunction { f: Arc::new(f), kappa, decay }
    }

    /// A function of one variable, carried as a function of the first.
    pub fn one(f: impl Fn(C64) -> Result<C64> + Send + Sync + 'static, kappa: f64, decay: f64) -> Self {
        Self::new(move |a, _| f(a), kappa, decay)
    }

    pub fn eval(&self, a: C64, b: C64) -> Result<C64> {
        (self.f)(a, b)
    }
}

/// One sum-split part evaluated at `at`, integrating to absolute `tol`.
pub fn cauchy_split(f: &StripFunction, axis: Axis, sign: Sign, at: (C64, C64), tol: f64) -> Result<C64> {
    if f.decay < MIN_DECAY {
        return Err(WhError::InvalidParameter {
            field: "decay".into(),
            reason: format!("decay exponent {} below {MIN_DECAY}", f.decay),
        });
    }
    let (shift, pre) = match sign {
        Sign::Plus => (-f.kappa, 1.0),
        Sign::Minus => (f.kappa, -1.0),
    };
    let line = make_shifted_line(C64::new(0.0, shift));
    let xi = if axis == Axis::First { at.0 } else { at.1 };
    let g = |t: C64| -> Result<C64> {
        let v = match axis {
            Axis::First => f.eval(t, at.1)?,
            Axis::Second => f.eval(at.0, t)?,
        };
        Ok(v / (t - xi))
    };
    let r = integrate(&g, &line, tol)?;
    Ok(pre * r.value / (2.0 * PI * I))
}

/// Memoising wrapper that presents one split part as a new function.
pub struct SplitEvaluator {
    pub source: StripFunction,
    pub axis: Axis,
    pub sign: Sign,
    pub tol: f64,
    cache: Mutex<HashMap<[u64; 4], C64>>,
}

impl SplitEvaluator {
    pub fn new(source: StripFunction, axis: Axis, sign: Sign, tol: f64) -> Self {
        SplitEvaluator { source, axis, sign, tol, cache: Mutex::new(HashMap::new()) }
    }

    pub fn eval(&self, a: C64, b: C64) -> Result<C64> {
        let key = [a.re.to_bits(), a.im.to_bits(), b.re.to_bits(), b.im.to_bits()];
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = cauchy_split(&self.source, self.axis, self.sign, (a, b), self.tol)?;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

/// Result of splitting h(xi)/(xi - p): the regular part
/// (h(xi) - h(p))/(xi - p) and the explicit pole part h(p)/(xi - p).
pub struct PoleSplit {
    pub p: C64,
    pub hp: C64,
    h: Arc<dyn Fn(C64) -> Result<C64> + Send + Sync>,
}

impl PoleSplit {
    pub fn regular(&self, xi: C64) -> Result<C64> {
        Ok(((self.h)(xi)? - self.hp) / (xi - self.p))
    }

    pub fn pole(&self, xi: C64) -> C64 {
        self.hp / (xi - self.p)
    }

    /// The half-plane of analyticity of the pole part.
    pub fn pole_sign(&self) -> Sign {
        if self.p.im < 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Pole removal for f = h/(xi - p) with `p` outside the strip of half-width
/// `kappa`.
pub fn pole_removal_split(
    h: impl Fn(C64) -> Result<C64> + Send + Sync + 'static,
    p: C64,
    kappa: f64,
) -> Result<PoleSplit> {
    if p.im.abs() <= kappa {
        return Err(WhError::PoleProximity(p, kappa - p.im.abs()));
    }
    let hp = h(p)?;
    Ok(PoleSplit { p, hp, h: Arc::new(h) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexcore::{gamma_phys, Params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rational_oracle() {
        let f = StripFunction::one(|x| Ok(1.0 / (x * x + 4.0)), 0.5, 2.0);
        for xi in [C64::new(0.3, 0.1), C64::new(-1.2, -0.3)] {
            let p = cauchy_split(&f, Axis::First, Sign::Plus, (xi, C64::new(0.0, 0.0)), 1e-12).unwrap();
            assert!((p - I / (4.0 * (xi + 2.0 * I))).norm() < 1e-10);
            let m = cauchy_split(&f, Axis::First, Sign::Minus, (xi, C64::new(0.0, 0.0)), 1e-12).unwrap();
            assert!((p + m - f.eval(xi, xi).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn idempotence_and_memo() {
        // already a plus function: pole below the strip only
        let f = StripFunction::one(|x| Ok(1.0 / ((x + 2.0 * I) * (x + 3.0 * I))), 0.5, 2.0);
        let e = SplitEvaluator::new(f, Axis::First, Sign::Minus, 1e-12);
        let z = C64::new(0.4, 0.2);
        assert!(e.eval(z, z).unwrap().norm() < 1e-11);
        e.eval(z, z).unwrap();
        assert_eq!(e.cached(), 1);
    }

    #[test]
    fn second_axis_and_random_points() {
        let f = StripFunction::new(|a, b| Ok((a * 0.3).cos() / ((b - 2.0 * I) * (b + 1.0 - I * 1.5))), 0.4, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let a = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
            let b = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
            let p = cauchy_split(&f, Axis::Second, Sign::Plus, (a, b), 1e-12).unwrap();
            let m = cauchy_split(&f, Axis::Second, Sign::Minus, (a, b), 1e-12).unwrap();
            assert!((p + m - f.eval(a, b).unwrap()).norm() < 1e-10);
            // partial fractions: the pole at -1 + 1.5i lies above, at 2i above too,
            // so the plus part vanishes
            assert!(p.norm() < 1e-10);
        }
    }

    #[test]
    fn pole_removal_instance() {
        let pr = Params::new(2.0, C64::new(0.3, 0.8), C64::new(0.3, 0.8)).unwrap();
        let (k1, k2, kap, k2sq) = (pr.k1, pr.k2, pr.kappa, pr.k2sq());
        let xi1 = C64::new(0.4, 0.05);
        // 1 / (K_o-(xi) (xi1 + k1)(xi2 + k2)), K_o- = 1/gamma(xi1, -xi2)
        let h = move |x2: C64| Ok(gamma_phys(k2sq, xi1, -x2) / (xi1 + k1));
        let split = pole_removal_split(h, -k2, kap).unwrap();
        assert!((split.hp - gamma_phys(k2sq, xi1, k2) / (xi1 + k1)).norm() < 1e-14);
        assert_eq!(split.pole_sign(), Sign::Plus);
        let f = StripFunction::new(move |a, b| Ok(gamma_phys(k2sq, a, -b) / ((a + k1) * (b + k2))), kap, 0.5);
        for x2 in [C64::new(0.2, 0.1), C64::new(-0.5, -0.1)] {
            let p = cauchy_split(&f, Axis::Second, Sign::Plus, (xi1, x2), 1e-10).unwrap();
            let m = cauchy_split(&f, Axis::Second, Sign::Minus, (xi1, x2), 1e-10).unwrap();
            assert!((p - split.pole(x2)).norm() < 1e-8, "{p} {}", split.pole(x2));
            assert!((m - split.regular(x2).unwrap()).norm() < 1e-8);
        }
        // an entire h has no pole part
        let s = pole_removal_split(|_| Ok(C64::new(0.0, 0.0)), -k2, kap).unwrap();
        assert_eq!(s.pole(C64::new(0.1, 0.0)), C64::new(0.0, 0.0));
        assert!(pole_removal_split(|_| Ok(C64::new(1.0, 0.0)), C64::new(0.0, 0.01), kap).is_err());
    }
}
