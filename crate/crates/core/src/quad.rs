//! Quadrature building blocks: adaptive Gauss-Kronrod on intervals, composite
//! Gauss-Legendre rules for the real line, panel interpolation and Cauchy
//! (Nystrom) matrices for principal-value and boundary-value integrals.

use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::complexcore::{C64, I};
use crate::error::{Result, WhError};
use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: C64,
    pub error_estimate: f64,
    pub nodes_used: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> Result<C64>, a: f64, b: f64) -> Result<(C64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        rk += s * WGK[j];
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    Ok((rk * h, ((rk - rg) * h).norm()))
}

struct Seg {
    a: f64,
    b: f64,
    val: C64,
    err: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive GK15 on [a, b]. Stops when the summed error estimate is
/// below `tol` (absolute). Fails with `NoConvergence` after `max_evals`
/// integrand evaluations; a failure that localises on a vanishing interval is
/// reported as `SingularityOnContour` at the parameter value (as a real point).
pub fn adaptive(
    f: &mut dyn FnMut(f64) -> Result<C64>,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<QuadratureResult> {
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(f, a, b)?;
    let mut evals = 15;
    heap.push(Seg { a, b, val: v, err: e });
    let (mut total, mut err) = (v, e);
    while err > tol {
        if evals + 30 > max_evals {
            let worst = heap.peek().unwrap();
            if (worst.b - worst.a).abs() < 1e-10 * (b - a).abs().max(1.0) {
                return Err(WhError::SingularityOnContour(C64::new(0.5 * (worst.a + worst.b), 0.0)));
            }
            return Err(WhError::NoConvergence { evals, estimate: err });
        }
        let s = heap.pop().unwrap();
        let m = 0.5 * (s.a + s.b);
        if (s.b - s.a).abs() < 1e-13 * (b - a).abs().max(1.0) {
            return Err(WhError::SingularityOnContour(C64::new(m, 0.0)));
        }
        let (v1, e1) = gk15(f, s.a, m)?;
        let (v2, e2) = gk15(f, m, s.b)?;
        evals += 30;
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Seg { a: s.a, b: m, val: v1, err: e1 });
        heap.push(Seg { a: m, b: s.b, val: v2, err: e2 });
        // refresh sums now and then against drift
        if evals % 3000 < 30 {
            total = heap.iter().map(|s| s.val).sum();
            err = heap.iter().map(|s| s.err).sum();
        }
    }
    let total: C64 = heap.iter().map(|s| s.val).sum();
    let err: f64 = heap.iter().map(|s| s.err).sum();
    Ok(QuadratureResult { value: total, error_estimate: err, nodes_used: evals })
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("rule order must be positive"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn barycentric_weights(t: &[f64]) -> Vec<f64> {
    (0..t.len())
        .map(|j| {
            let p: f64 = (0..t.len()).filter(|&m| m != j).map(|m| t[j] - t[m]).product();
            1.0 / p
        })
        .collect()
}

/// Differentiation matrix of the interpolant through nodes `t`.
pub fn diff_matrix(t: &[f64]) -> Vec<Vec<f64>> {
    let n = t.len();
    let w = barycentric_weights(t);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if i != j {
                d[i][j] = (w[j] / w[i]) / (t[i] - t[j]);
                s += d[i][j];
            }
        }
        d[i][i] = -s;
    }
    d
}

/// Lagrange basis values at complex `z` for nodes `t`.
pub fn lagrange_basis(t: &[f64], bw: &[f64], z: C64) -> Vec<C64> {
    if let Some(j) = t.iter().position(|&tj| (z - tj).norm() < 1e-15) {
        let mut out = vec![C64::new(0.0, 0.0); t.len()];
        out[j] = C64::new(1.0, 0.0);
        return out;
    }
    let terms: Vec<C64> = t.iter().zip(bw).map(|(&tj, &wj)| wj / (z - tj)).collect();
    let s: C64 = terms.iter().sum();
    terms.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PanelKind {
    /// x in [a, b]
    Central { a: f64, b: f64 },
    /// x = -l / tau^2, tau in [ta, tb]
    LeftTail { ta: f64, tb: f64 },
    /// x = l / tau^2, tau in [ta, tb]
    RightTail { ta: f64, tb: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub kind: PanelKind,
    pub start: usize,
    pub len: usize,
    /// x-range covered (lo, hi); tails extend to +-infinity
    pub lo: f64,
    pub hi: f64,
}

/// Composite Gauss-Legendre discretisation of the real line: central panels
/// plus algebraically mapped tails x = +-l/tau^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub panels: Vec<Panel>,
    pub l: f64,
    q: usize,
    qt: usize,
}

impl LineRule {
    /// `breaks` runs from -l to l; `ntail` tail panels of order `qt` per side,
    /// geometrically graded towards infinity when `geo` is in (0, 1).
    pub fn new(breaks: &[f64], q: usize, ntail: usize, qt: usize, geo: f64) -> Self {
        let l = *breaks.last().unwrap();
        let mut tb: Vec<f64> = (0..=ntail).map(|i| i as f64 / ntail as f64).collect();
        if geo > 0.0 && geo < 1.0 && ntail > 1 {
            tb = std::iter::once(0.0)
                .chain((0..ntail).rev().map(|i| geo.powi(i as i32)))
                .collect();
        }
        let (tt, wt) = gauss_legendre(qt);
        let (tc, wc) = gauss_legendre(q);
        let mut x = Vec::new();
        let mut w = Vec::new();
        let mut panels = Vec::new();
        for i in 0..ntail {
            let (ta, tb_) = (tb[i], tb[i + 1]);
            let start = x.len();
            for (t, wt) in tt.iter().zip(&wt) {
                let tau = ta + (tb_ - ta) * (t + 1.0) / 2.0;
                x.push(-l / (tau * tau));
                w.push(wt * 2.0 * l / tau.powi(3) * (tb_ - ta) / 2.0);
            }
            panels.push(Panel {
                kind: PanelKind::LeftTail { ta, tb: tb_ },
                start,
                len: qt,
                lo: if ta == 0.0 { f64::NEG_INFINITY } else { -l / (ta * ta) },
                hi: -l / (tb_ * tb_),
            });
        }
        for i in 0..breaks.len() - 1 {
            let (a, b) = (breaks[i], breaks[i + 1]);
            let start = x.len();
            for (t, wq) in tc.iter().zip(&wc) {
                x.push(a + (b - a) * (t + 1.0) / 2.0);
                w.push(wq * (b - a) / 2.0);
            }
            panels.push(Panel { kind: PanelKind::Central { a, b }, start, len: q, lo: a, hi: b });
        }
        for i in (0..ntail).rev() {
            let (ta, tb_) = (tb[i], tb[i + 1]);
            let start = x.len();
            // reversed so that x increases
            for (t, wt) in tt.iter().rev().zip(wt.iter().rev()) {
                let tau = ta + (tb_ - ta) * (t + 1.0) / 2.0;
                x.push(l / (tau * tau));
                w.push(wt * 2.0 * l / tau.powi(3) * (tb_ - ta) / 2.0);
            }
            panels.push(Panel {
                kind: PanelKind::RightTail { ta, tb: tb_ },
                start,
                len: qt,
                lo: l / (tb_ * tb_),
                hi: if ta == 0.0 { f64::INFINITY } else { l / (ta * ta) },
            });
        }
        LineRule { x, w, panels, l, q, qt }
    }

    /// Desk presets by total node count (a multiple of 16, at least 32):
    /// order-16 central panels of unit width, order-8 tails.
    pub fn with_nodes(n: usize) -> Result<Self> {
        if n < 32 || n % 16 != 0 {
            return Err(WhError::InvalidParameter {
                field: "n_nodes".into(),
                reason: "must be a multiple of 16 and at least 32".into(),
            });
        }
        let ntail = if n <= 96 { 1 } else { 2 };
        let ncent = (n - 16 * ntail) / 16;
        let l = ncent as f64 / 2.0;
        let breaks: Vec<f64> = (0..=ncent).map(|i| -l + i as f64).collect();
        Ok(Self::new(&breaks, 16, ntail, 8, 0.25))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn panel_ref_nodes(&self, p: &Panel) -> Vec<f64> {
        gauss_legendre(if matches!(p.kind, PanelKind::Central { .. }) { self.q } else { self.qt }).0
    }

    /// Panel whose x-range contains `re`.
    pub fn panel_of(&self, re: f64) -> &Panel {
        self.panels
            .iter()
            .find(|p| re >= p.lo && re <= p.hi)
            .unwrap_or_else(|| if re < 0.0 { &self.panels[0] } else { self.panels.last().unwrap() })
    }

    /// Local reference coordinate of complex `z` in panel `p`, and the node
    /// ordering matching the stored x (tails on the right are reversed).
    fn to_ref(&self, p: &Panel, z: C64) -> (C64, bool) {
        match p.kind {
            PanelKind::Central { a, b } => ((2.0 * z - a - b) / (b - a), false),
            PanelKind::LeftTail { ta, tb } => {
                let tau = (-self.l / z).sqrt();
                ((2.0 * tau - ta - tb) / (tb - ta), false)
            }
            PanelKind::RightTail { ta, tb } => {
                let tau = (self.l / z).sqrt();
                ((2.0 * tau - ta - tb) / (tb - ta), true)
            }
        }
    }

    /// Interpolation weights (panel-local, full length n) for the value at
    /// complex `z` near the line (the coordinate along the line, unshifted).
    pub fn interp_weights(&self, z: C64) -> Vec<C64> {
        let p = self.panel_of(z.re);
        let t = self.panel_ref_nodes(p);
        let bw = barycentric_weights(&t);
        let (zr, rev) = self.to_ref(p, z);
        let lb = lagrange_basis(&t, &bw, zr);
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        for j in 0..p.len {
            let jj = if rev { p.len - 1 - j } else { j };
            out[p.start + jj] = lb[j];
        }
        out
    }

    /// d/dx weights at node c (within its panel).
    fn deriv_row(&self, c: usize) -> Vec<(usize, f64)> {
        let p = self.panels.iter().find(|p| c >= p.start && c < p.start + p.len).unwrap();
        let t = self.panel_ref_nodes(p);
        let d = diff_matrix(&t);
        let rev = matches!(p.kind, PanelKind::RightTail { .. });
        let loc = |j: usize| if rev { p.len - 1 - j } else { j };
        let ic = loc(c - p.start);
        // dx/dt at the node
        let dxdt = match p.kind {
            PanelKind::Central { a, b } => (b - a) / 2.0,
            PanelKind::LeftTail { ta, tb } | PanelKind::RightTail { ta, tb } => {
                let tau = ta + (tb - ta) * (t[ic] + 1.0) / 2.0;
                let s = if matches!(p.kind, PanelKind::LeftTail { .. }) { 1.0 } else { -1.0 };
                s * 2.0 * self.l / tau.powi(3) * (tb - ta) / 2.0
            }
        };
        (0..p.len).map(|j| (p.start + loc(j), d[ic][j] / dxdt)).collect()
    }

    /// Matrix whose row c gives the boundary value, at node c, of
    /// int f(x') / (x' - z) dx' as z approaches node c from `side` (+1 above).
    pub fn cauchy_on(&self, side: f64) -> CMat {
        let n = self.len();
        let mut m = CMat::zeros(n, n);
        for c in 0..n {
            let xc = self.x[c];
            let p = xc + side * I * (1.0 + xc.abs());
            let mut diag = C64::new(0.0, 0.0);
            for a in 0..n {
                if a == c {
                    continue;
                }
                let r = self.w[a] / (self.x[a] - xc);
                *m.at_mut(c, a) += r;
                diag -= r * (xc - p) / (self.x[a] - p);
            }
            for (j, d) in self.deriv_row(c) {
                *m.at_mut(c, j) += self.w[c] * d;
            }
            diag += self.w[c] / (xc - p);
            *m.at_mut(c, c) += diag;
        }
        m
    }

    /// Rows give int f(x') / (x' - z) dx' at arbitrary complex targets `z`
    /// (in the line's own coordinate). Targets on the line take the limit from
    /// `side`. Near targets use singularity subtraction with panel interpolation.
    pub fn cauchy_at(&self, targets: &[C64], side: f64) -> CMat {
        let n = self.len();
        let mut m = CMat::zeros(targets.len(), n);
        for (r, &z) in targets.iter().enumerate() {
            if z.im == 0.0 {
                if let Some(c) = self.x.iter().position(|&x| (x - z.re).abs() < 1e-14 * (1.0 + x.abs())) {
                    // exactly a node: reuse the on-line row
                    let row = self.cauchy_on_row(c, side);
                    for a in 0..n {
                        *m.at_mut(r, a) = row[a];
                    }
                    continue;
                }
            }
            let s = if z.im != 0.0 { z.im.signum() } else { side };
            let pan = self.panel_of(z.re);
            let width = match pan.kind {
                PanelKind::Central { a, b } => b - a,
                _ => z.re.abs().max(self.l),
            };
            if z.im.abs() > 0.5 * width {
                for a in 0..n {
                    *m.at_mut(r, a) = self.w[a] / (self.x[a] - z);
                }
                continue;
            }
            let p = z.re + s * I * (1.0 + z.re.abs());
            let mut corr = C64::new(0.0, 0.0);
            for a in 0..n {
                let d = self.x[a] - z;
                *m.at_mut(r, a) = self.w[a] / d;
                corr += self.w[a] * (z - p) / ((self.x[a] - p) * d);
            }
            let lw = self.interp_weights(z);
            for a in pan.start..pan.start + pan.len {
                *m.at_mut(r, a) -= lw[a] * corr;
            }
        }
        m
    }

    fn cauchy_on_row(&self, c: usize, side: f64) -> Vec<C64> {
        let n = self.len();
        let mut row = vec![C64::new(0.0, 0.0); n];
        let xc = self.x[c];
        let p = xc + side * I * (1.0 + xc.abs());
        let mut diag = C64::new(0.0, 0.0);
        for a in 0..n {
            if a == c {
                continue;
            }
            let r = self.w[a] / (self.x[a] - xc);
            row[a] += r;
            diag -= r * (xc - p) / (self.x[a] - p);
        }
        for (j, d) in self.deriv_row(c) {
            row[j] += self.w[c] * d;
        }
        diag += self.w[c] / (xc - p);
        row[c] += diag;
        row
    }
}
