//! Lower-bound estimates of exceptional-set measures.
//!
//! Each mode asks whether some `A′ ⊆ A` with many cells has a small projection.
//! The quantifier over `A′` is replaced by an adversary restricted to unions of
//! fibres of the projection: points are grouped by the dyadic cell of their
//! projection and whole fibres are taken, richest first, until `A′` is large
//! enough. The projected grid is shifted by `adversary_budget` random offsets
//! (plus the unshifted grid) and the best outcome is kept. A subspace flagged
//! exceptional is certainly exceptional for the dyadic proxies; one not flagged
//! may still be, so the returned fraction is a lower bound.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use super::dyadic::{cell_at, pixelize, Cell, PointCloud};
use crate::error::{Error, Result};
use crate::grassmannian::Subspace;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExceptionalMode {
    /// `N(A′) ≥ δ^ε N(A)` and `N(π_{∥V} A′) < δ^τ N(A)^{dim V^⊥/d}`.
    SubP { eps: f64, tau: f64 },
    /// `N(A′) ≥ δ^ε N(A)` and `N(π_V A′) < δ^{−α dim V − ε}`.
    BigO { alpha: f64, eps: f64 },
    /// `N(A′) ≥ δ^τ N(A)` and `N(π_{∥V} A′) < δ^{−α dim V^⊥ − τ}`.
    BigE { alpha: f64, tau: f64 },
}

impl ExceptionalMode {
    fn validate(&self) -> Result<()> {
        let (a, b) = match *self {
            Self::SubP { eps, tau } => (eps, tau),
            Self::BigO { alpha, eps } => (alpha, eps),
            Self::BigE { alpha, tau } => (alpha, tau),
        };
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::InvalidParameter(format!("{self:?}: parameters must be non-negative")));
        }
        Ok(())
    }

    /// Exponent `s` in the size requirement `N(A′) ≥ δ^s N(A)`.
    fn size_exponent(&self) -> f64 {
        match *self {
            Self::SubP { eps, .. } | Self::BigO { eps, .. } => eps,
            Self::BigE { tau, .. } => tau,
        }
    }

    /// Target subspace of the projection (`V` or `V^⊥`) and the threshold.
    fn target(&self, v: &Subspace<f64>, delta: f64, n_a: usize) -> (Subspace<f64>, f64) {
        let d = v.ambient_dim() as f64;
        let perp = v.orth_complement();
        match *self {
            Self::SubP { tau, .. } => {
                let t = delta.powf(tau) * (n_a as f64).powf(perp.dim() as f64 / d);
                (perp, t)
            }
            Self::BigO { alpha, eps } => (v.clone(), delta.powf(-alpha * v.dim() as f64 - eps)),
            Self::BigE { alpha, tau } => {
                let t = delta.powf(-alpha * perp.dim() as f64 - tau);
                (perp, t)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalParams {
    pub mode: ExceptionalMode,
    pub delta: f64,
    /// Random offsets of the projected grid tried by the adversary.
    pub adversary_budget: usize,
    pub seed: u64,
}

/// Smallest number of projected cells covering a fibre union with at least
/// `need` cells of `A`.
fn adversary(cells: &[Cell], proj: &[DVector<f64>], level: u32, need: usize, offset: &[f64]) -> usize {
    let mut fibres: BTreeMap<Cell, HashSet<usize>> = BTreeMap::new();
    for (i, p) in proj.iter().enumerate() {
        let shifted: Vec<f64> = p.iter().zip(offset).map(|(x, o)| x + o).collect();
        fibres.entry(cell_at(&shifted, level)).or_default().insert(i);
    }
    let mut fs: Vec<(usize, &Cell, Vec<&Cell>)> = fibres
        .iter()
        .map(|(k, pts)| {
            let cs: HashSet<&Cell> = pts.iter().map(|&i| &cells[i]).collect();
            (cs.len(), k, cs.into_iter().collect())
        })
        .collect();
    fs.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let mut got: HashSet<&Cell> = HashSet::new();
    for (used, (_, _, cs)) in fs.iter().enumerate() {
        if got.len() >= need {
            return used;
        }
        got.extend(cs.iter().copied());
    }
    fs.len()
}

/// Whether the adversary finds a witness `A′` for `v`.
pub fn is_exceptional(a: &PointCloud, v: &Subspace<f64>, params: &ExceptionalParams, trial: u64) -> Result<bool> {
    params.mode.validate()?;
    if v.ambient_dim() != a.dim() {
        return Err(Error::AmbientMismatch(v.ambient_dim(), a.dim()));
    }
    if a.is_empty() {
        return Ok(false);
    }
    let level = pixelize(params.delta)?;
    let cells: Vec<Cell> = a.points().iter().map(|p| cell_at(p.as_slice(), level)).collect();
    let n_a = cells.iter().collect::<HashSet<_>>().len();
    let need = (params.delta.powf(params.mode.size_exponent()) * n_a as f64).ceil().max(1.0) as usize;
    let (target, threshold) = params.mode.target(v, params.delta, n_a);
    let ft = target.frame().transpose();
    let proj: Vec<DVector<f64>> = a.points().iter().map(|p| &ft * p).collect();
    let k = target.dim();
    let side = (-(level as f64)).exp2();
    let mut r = rng::trial_rng(params.seed, trial);
    let mut best = adversary(&cells, &proj, level, need, &vec![0.0; k]);
    for _ in 0..params.adversary_budget {
        let off: Vec<f64> = (0..k).map(|_| r.random::<f64>() * side).collect();
        best = best.min(adversary(&cells, &proj, level, need, &off));
    }
    Ok((best as f64) < threshold)
}

/// Fraction of `samples` flagged exceptional; a lower bound on the true measure.
pub fn exceptional_set_estimate(a: &PointCloud, samples: &[Subspace<f64>], params: &ExceptionalParams) -> Result<f64> {
    params.mode.validate()?;
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ = {} must lie in (0, 1)", params.delta)));
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let flags = samples
        .par_iter()
        .enumerate()
        .map(|(t, v)| is_exceptional(a, v, params, t as u64))
        .collect::<Result<Vec<bool>>>()?;
    Ok(flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid16() -> PointCloud {
        let rows: Vec<Vec<f64>> =
            (0..16).flat_map(|i| (0..16).map(move |j| vec![i as f64 / 16.0, j as f64 / 16.0])).collect();
        PointCloud::from_rows(2, &rows).unwrap()
    }

    fn params(mode: ExceptionalMode) -> ExceptionalParams {
        ExceptionalParams { mode, delta: 1.0 / 16.0, adversary_budget: 4, seed: 0 }
    }

    /// Columns of the grid: the best `A′` uses `⌈16^{1−s}⌉` of them.
    fn grid_oracle(alpha: f64, eps: f64) -> bool {
        let cols = (16f64.powf(1.0 - eps) * 16.0).ceil() / 16.0;
        cols.ceil() < 16f64.powf(alpha + eps)
    }

    #[test]
    fn product_grid_coordinate_axes() {
        let a = grid16();
        let axes = vec![Subspace::coordinate(2, &[0]), Subspace::coordinate(2, &[1])];
        for (alpha, eps) in [(0.5, 0.1), (0.5, 0.3), (1.0, 0.1), (0.25, 0.0)] {
            let f = exceptional_set_estimate(&a, &axes, &params(ExceptionalMode::BigO { alpha, eps })).unwrap();
            let expect = if grid_oracle(alpha, eps) { 1.0 } else { 0.0 };
            assert_eq!(f, expect, "α={alpha} ε={eps}");
        }
        assert_eq!(exceptional_set_estimate(&a, &axes, &params(ExceptionalMode::BigO { alpha: 0.5, eps: 0.1 })).unwrap(), 0.0);
    }

    #[test]
    fn alpha_zero_is_never_exceptional() {
        let a = grid16();
        let mut r = rng::rng(1);
        let vs: Vec<Subspace<f64>> = (0..20).map(|_| Subspace::random(2, 1, &mut r)).collect();
        let f = exceptional_set_estimate(&a, &vs, &params(ExceptionalMode::BigO { alpha: 0.0, eps: 0.0 })).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn guards() {
        let a = grid16();
        let v = vec![Subspace::coordinate(2, &[0])];
        assert!(exceptional_set_estimate(&a, &v, &params(ExceptionalMode::BigE { alpha: 0.5, tau: -0.1 })).is_err());
        assert!(exceptional_set_estimate(&a, &[], &params(ExceptionalMode::BigE { alpha: 0.5, tau: 0.1 })).is_err());
    }

    #[test]
    fn subp_and_big_e_on_the_grid() {
        let a = grid16();
        let v = vec![Subspace::coordinate(2, &[0])];
        // Parallel to e₁ means projecting onto e₂: 16 rows of 16 cells.
        // SubP threshold δ^τ·256^{1/2} = 16^{1−τ}; the adversary needs ⌈16^{1−ε}⌉ rows.
        let f = exceptional_set_estimate(&a, &v, &params(ExceptionalMode::SubP { eps: 0.5, tau: 0.1 })).unwrap();
        assert_eq!(f, 1.0);
        let f = exceptional_set_estimate(&a, &v, &params(ExceptionalMode::SubP { eps: 0.05, tau: 0.1 })).unwrap();
        assert_eq!(f, 0.0);
        let f = exceptional_set_estimate(&a, &v, &params(ExceptionalMode::BigE { alpha: 0.5, tau: 0.1 })).unwrap();
        assert_eq!(f, 0.0);
    }
}
