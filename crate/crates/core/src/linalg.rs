//! Small dense complex matrices and a matrix-free LSQR.

use crate::complexcore::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn conj(&self) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// self * other. Rows are computed in parallel; each entry is summed in
    /// a fixed order, so the result does not depend on the thread count.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let (n, m) = (self.cols, other.cols);
        let mut out = CMat::zeros(self.rows, m);
        out.data.par_chunks_mut(m).enumerate().for_each(|(i, orow)| {
            let arow = &self.data[i * n..(i + 1) * n];
            for (k, a) in arow.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * m..(k + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        });
        out
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frob(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LsqrReport {
    pub iterations: usize,
    /// ||A x - b|| / ||b|| after each iteration, subsampled
    pub history: Vec<f64>,
    pub rel_residual: f64,
    pub converged: bool,
}

/// LSQR for min ||A x - b|| with A given by `op` and its adjoint `adj`.
/// Stops when the normal-equation residual estimate drops below `atol` relative
/// to ||A|| ||r||, or after `max_iter` iterations.
pub const STALL_WINDOW: usize = 500;
pub const STALL_GAIN: f64 = 0.005;

pub fn lsqr(
    op: impl Fn(&[C64]) -> Vec<C64>,
    adj: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    x0: &[C64],
    atol: f64,
    max_iter: usize,
) -> (Vec<C64>, LsqrReport) {
    let nb = norm(b);
    let mut x = x0.to_vec();
    let ax0 = op(&x);
    let mut u: Vec<C64> = b.iter().zip(&ax0).map(|(a, c)| a - c).collect();
    let mut beta = norm(&u);
    let mut history = vec![beta / nb];
    if beta == 0.0 {
        return (x, LsqrReport { iterations: 0, history, rel_residual: 0.0, converged: true });
    }
    u.iter_mut().for_each(|z| *z /= beta);
    let mut v = adj(&u);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        let rr = beta / nb;
        return (x, LsqrReport { iterations: 0, history, rel_residual: rr, converged: true });
    }
    v.iter_mut().for_each(|z| *z /= alpha);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm2 = 0.0;
    let mut converged = false;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let av = op(&v);
        u = av.iter().zip(&u).map(|(a, c)| a - alpha * c).collect();
        beta = norm(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|z| *z /= beta);
        }
        anorm2 += alpha * alpha + beta * beta;
        let ahu = adj(&u);
        v = ahu.iter().zip(&v).map(|(a, c)| a - beta * c).collect();
        alpha = norm(&v);
        if alpha > 0.0 {
            v.iter_mut().for_each(|z| *z /= alpha);
        }
        let rho = (rhobar * rhobar + beta * beta).sqrt();
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += (phi / rho) * wi;
        }
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = vi - (theta / rho) * *wi;
        }
        // ||A^H r|| = phibar * alpha * |c|
        let arnorm = phibar * alpha * c.abs();
        if it % 10 == 0 {
            history.push(phibar / nb);
            // stop on a plateau: under STALL_GAIN relative gain over STALL_WINDOW iterations
            let h = history.len();
            let back = STALL_WINDOW / 10;
            if h > back && history[h - 1] > (1.0 - STALL_GAIN) * history[h - 1 - back] {
                break;
            }
        }
        if arnorm <= atol * anorm2.sqrt() * phibar || phibar <= atol * nb {
            converged = true;
            break;
        }
    }
    let r: Vec<C64> = op(&x).iter().zip(b).map(|(a, c)| a - c).collect();
    let rel = norm(&r) / nb;
    history.push(rel);
    (x, LsqrReport { iterations: it, history, rel_residual: rel, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsqr_matches_normal_equations() {
        // overdetermined 3x2 system with a known least-squares solution
        let a = CMat::from_fn(3, 2, |i, j| C64::new((i + 2 * j) as f64 + 1.0, (i * j) as f64));
        let b = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(2.0, -1.0)];
        let ah = a.adjoint();
        let (x, rep) = lsqr(|v| a.matvec(v), |u| ah.matvec(u), &b, &[C64::new(0.0, 0.0); 2], 1e-14, 100);
        assert!(rep.converged);
        // normal equations residual
        let r: Vec<C64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        let g = ah.matvec(&r);
        assert!(norm(&g) < 1e-10);
    }

    #[test]
    fn matmul_small() {
        let a = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64));
        let b = CMat::from_fn(3, 2, |i, j| C64::new(1.0, (i + j) as f64));
        let c = a.matmul(&b);
        for i in 0..2 {
            for j in 0..2 {
                let e: C64 = (0..3).map(|k| a.at(i, k) * b.at(k, j)).sum();
                assert!((c.at(i, j) - e).norm() < 1e-14);
            }
        }
    }
}
