//! Node-wise comparison of two grid CSVs.
//!
//! Grids on the same nodes are differenced directly. Grids on the same pair
//! of contours but different line rules (a refinement) are compared at the
//! nodes of the first grid, the second being interpolated panel-wise on its
//! own rule. Anything else is incompatible.

use serde::{Deserialize, Serialize};
use std::path::Path;

use qpwh::linalg::CMat;
use qpwh::quad::LineRule;
use qpwh::spectral::{FunctionId, SpectralGrid};
use qpwh::{Params, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub points: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// max_abs / max |a|
    pub max_rel: f64,
    pub interpolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompareError {
    Io(String),
    Incompatible(String),
}

impl std::fmt::Display for CompareError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompareError::Io(m) => write!(f, "cannot read grid: {m}"),
            CompareError::Incompatible(m) => write!(f, "incompatible grids: {m}"),
        }
    }
}

impl std::error::Error for CompareError {}

fn read(path: &Path) -> Result<SpectralGrid, CompareError> {
    let f = std::fs::File::open(path).map_err(|e| CompareError::Io(format!("{}: {e}", path.display())))?;
    // params do not affect a node-wise comparison
    let p = Params::new(1.0, C64::new(1.0, 1.0), C64::new(1.0, 1.0)).expect("fixed params are valid");
    SpectralGrid::read_csv(f, FunctionId::W, p).map_err(|e| CompareError::Io(format!("{}: {e}", path.display())))
}

pub fn compare_files(a: &Path, b: &Path) -> Result<DiffReport, CompareError> {
    compare(&read(a)?, &read(b)?)
}

/// Common imaginary part of a node set, if there is one.
fn level(z: &[C64]) -> Option<f64> {
    let y = z.first()?.im;
    z.iter().all(|v| (v.im - y).abs() <= 1e-12 * (1.0 + y.abs())).then_some(y)
}

/// The preset line rule reproducing these real parts, if any.
fn rule_for(z: &[C64]) -> Option<LineRule> {
    let r = LineRule::with_nodes(z.len()).ok()?;
    r.x.iter().zip(z).all(|(x, v)| (x - v.re).abs() <= 1e-12 * (1.0 + x.abs())).then_some(r)
}

pub fn compare(a: &SpectralGrid, b: &SpectralGrid) -> Result<DiffReport, CompareError> {
    if a.sheet != b.sheet {
        return Err(CompareError::Incompatible("different sheet tags".into()));
    }
    let same = a.z1 == b.z1 && a.z2 == b.z2;
    let vb = if same {
        b.values.clone()
    } else {
        let (la1, la2, lb1, lb2) = (level(&a.z1), level(&a.z2), level(&b.z1), level(&b.z2));
        let on_lines = matches!((la1, lb1), (Some(x), Some(y)) if (x - y).abs() <= 1e-12)
            && matches!((la2, lb2), (Some(x), Some(y)) if (x - y).abs() <= 1e-12);
        if !on_lines {
            return Err(CompareError::Incompatible("the grids lie on different contours".into()));
        }
        let (r1, r2) = match (rule_for(&b.z1), rule_for(&b.z2)) {
            (Some(r1), Some(r2)) => (r1, r2),
            _ => return Err(CompareError::Incompatible("second grid is not on a known line rule".into())),
        };
        let p1 = CMat::from_fn(a.z1.len(), r1.len(), |i, m| r1.interp_weights(C64::new(a.z1[i].re, 0.0))[m]);
        let p2 = CMat::from_fn(a.z2.len(), r2.len(), |j, m| r2.interp_weights(C64::new(a.z2[j].re, 0.0))[m]);
        p1.matmul(&b.values).matmul(&p2.transpose())
    };
    let d = a.values.sub(&vb);
    let n = d.data.len();
    let max_abs = d.max_abs();
    let mean_abs = d.data.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
    let scale = a.values.max_abs();
    Ok(DiffReport {
        points: n,
        max_abs,
        mean_abs,
        max_rel: if scale > 0.0 { max_abs / scale } else { max_abs },
        interpolated: !same,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, im2: f64, f: impl Fn(f64, f64) -> C64) -> SpectralGrid {
        let r = LineRule::with_nodes(n).unwrap();
        let z1: Vec<C64> = r.x.iter().map(|&x| C64::new(x, 0.2)).collect();
        let z2: Vec<C64> = r.x.iter().map(|&x| C64::new(x, im2)).collect();
        let values = CMat::from_fn(n, n, |i, j| f(z1[i].re, z2[j].re));
        let p = Params::new(2.0, C64::new(0.3, 0.8), C64::new(0.3, 0.8)).unwrap();
        SpectralGrid { function: FunctionId::W, params: p, z1, z2, values, sheet: qpwh::SheetTag::PHYSICAL }
    }

    #[test]
    fn identical_refined_and_incompatible() {
        let f = |a: f64, b: f64| C64::new(1.0 / (1.0 + a * a), b / (4.0 + b * b));
        let a = grid(64, -0.2, f);
        let r = compare(&a, &a.clone()).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert!(!r.interpolated);
        let b = grid(128, -0.2, f);
        let r = compare(&a, &b).unwrap();
        assert!(r.interpolated && r.max_rel < 1e-6, "{r:?}");
        assert!(matches!(compare(&a, &grid(64, -0.3, f)), Err(CompareError::Incompatible(_))));
    }
}
