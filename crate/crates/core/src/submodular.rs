//! Generic intersection dimensions `deg_W(V) = min_g dim(gV ∩ W)` for linear
//! group actions, estimated by sampling `g`.
//!
//! The minimum is attained on a Zariski-dense open set, so any absolutely
//! continuous sampler hits it almost surely. Sampled minima are estimates, not
//! certificates.
//!
//! Two representations are built in: the adjoint action of a real Lie group on
//! its algebra (in orthonormal coordinates), and `SL(d₁,ℂ)×SL(d₂,ℂ)` acting on
//! `ℂ^{d₁}⊗ℂ^{d₂}`, realified as `ℝ^{2d₁d₂}` with `z ↦ (Re z, Im z)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grassmannian::{intersect_dim, intersect_dim_info, intersection, sum, Subspace};
use crate::lie::LieAlgebraSpec;
use crate::linalg::expm;
use crate::rng;

/// Rank decisions with `σ_r/σ_{r+1}` below this are redrawn.
pub const MIN_GAP_RATIO: f64 = 1e3;
const MAX_REDRAWS: usize = 8;

/// Group element of a [`RepAction`].
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    /// Matrix of the defining representation.
    Matrix(DMatrix<f64>),
    /// Pair `(a, b)` acting as `a ⊗ b`.
    Pair(DMatrix<Complex64>, DMatrix<Complex64>),
}

impl GroupElement {
    /// Group product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Matrix(a), Self::Matrix(b)) => Ok(Self::Matrix(a * b)),
            (Self::Pair(a1, b1), Self::Pair(a2, b2)) => Ok(Self::Pair(a1 * a2, b1 * b2)),
            _ => Err(Error::InvalidParameter("group elements of different kinds".into())),
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Adjoint(Box<LieAlgebraSpec<f64>>),
    Tensor { d1: usize, d2: usize },
}

/// A linear action on a real space `ℋ`.
#[derive(Clone, Debug)]
pub struct RepAction {
    kind: Kind,
    dim: usize,
}

/// `[[Re A, −Im A], [Im A, Re A]]`.
pub fn realify(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i + r, j + c)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
        }
    }
    out
}

/// Multiplication by `i` on the realified space `ℝ^{2n}`.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k + n, k)] = 1.0;
        j[(k, k + n)] = -1.0;
    }
    j
}

fn random_sl_complex<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    (0..3).fold(DMatrix::identity(d, d), |acc, _| {
        let mut x = DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let tr = x.trace() / Complex64::from(d as f64);
        for k in 0..d {
            x[(k, k)] -= tr;
        }
        let n = x.norm();
        if n > 1.5 {
            x *= Complex64::from(1.5 / n);
        }
        acc * expm(&x)
    })
}

impl RepAction {
    /// Adjoint action of the group of `spec` on its algebra.
    pub fn adjoint(spec: LieAlgebraSpec<f64>) -> Self {
        let dim = spec.algebra_dim();
        Self { kind: Kind::Adjoint(Box::new(spec)), dim }
    }

    /// `SL(d₁,ℂ)×SL(d₂,ℂ)` on `ℂ^{d₁}⊗ℂ^{d₂}`, realified.
    pub fn tensor(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidParameter("tensor factors must be non-zero".into()));
        }
        Ok(Self { kind: Kind::Tensor { d1, d2 }, dim: 2 * d1 * d2 })
    }

    /// Real dimension of `ℋ`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> Option<&LieAlgebraSpec<f64>> {
        match &self.kind {
            Kind::Adjoint(s) => Some(s),
            Kind::Tensor { .. } => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            Kind::Adjoint(s) => {
                let n = s.ambient_dim();
                GroupElement::Matrix(DMatrix::identity(n, n))
            }
            &Kind::Tensor { d1, d2 } => GroupElement::Pair(DMatrix::identity(d1, d1), DMatrix::identity(d2, d2)),
        }
    }

    /// Product of three exponentials of clamped Gaussian algebra elements.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match &self.kind {
            Kind::Adjoint(s) => GroupElement::Matrix(s.random_group_element(rng)),
            &Kind::Tensor { d1, d2 } => GroupElement::Pair(random_sl_complex(d1, rng), random_sl_complex(d2, rng)),
        }
    }

    /// Matrix of `g` acting on `ℋ`.
    pub fn operator(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        match (&self.kind, g) {
            (Kind::Adjoint(s), GroupElement::Matrix(m)) => s.adjoint_operator(m),
            (&Kind::Tensor { d1, d2 }, GroupElement::Pair(a, b)) if a.nrows() == d1 && b.nrows() == d2 => {
                Ok(realify(&a.kronecker(b)))
            }
            _ => Err(Error::InvalidParameter("group element does not match the representation".into())),
        }
    }

    pub fn act(&self, g: &GroupElement, v: &Subspace<f64>) -> Result<Subspace<f64>> {
        if v.ambient_dim() != self.dim {
            return Err(Error::AmbientMismatch(v.ambient_dim(), self.dim));
        }
        Ok(v.image(&self.operator(g)?))
    }

    /// `dim(gV ∩ W)` for one sampled `g`, redrawing `g` while the rank gap is poor.
    fn sampled_dim<R: Rng + ?Sized>(&self, v: &Subspace<f64>, w: &Subspace<f64>, rng: &mut R) -> Result<usize> {
        let mut last = None;
        for attempt in 0..MAX_REDRAWS {
            let gv = self.act(&self.sample(rng), v)?;
            let (d, info) = intersect_dim_info(&gv, w)?;
            log::trace!("intersection dim {d}, gap ratio {:.3e}", info.gap_ratio);
            if info.gap_ratio >= MIN_GAP_RATIO {
                return Ok(d);
            }
            log::debug!("gap ratio {:.3e} below threshold, redraw {}", info.gap_ratio, attempt + 1);
            last = Some(d);
        }
        log::warn!("no well-separated rank decision after {MAX_REDRAWS} draws");
        Ok(last.expect("at least one draw"))
    }
}

/// Subspace of `𝔤` spanned by the given matrices, in orthonormal coordinates.
pub fn algebra_subspace(spec: &LieAlgebraSpec<f64>, elems: &[DMatrix<f64>]) -> Result<Subspace<f64>> {
    let vs = elems.iter().map(|x| spec.coords(x)).collect::<Result<Vec<DVector<f64>>>>()?;
    Ok(Subspace::from_vectors(spec.algebra_dim(), &vs))
}

fn unit(d: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(i, j)] = 1.0;
    m
}

/// Upper-triangular traceless matrices in `sl(3,ℝ)`.
pub fn borel_sl3(spec: &LieAlgebraSpec<f64>) -> Subspace<f64> {
    let mut elems = vec![unit(3, 0, 1), unit(3, 0, 2), unit(3, 1, 2)];
    elems.push(unit(3, 0, 0) - unit(3, 1, 1));
    elems.push(unit(3, 1, 1) - unit(3, 2, 2));
    algebra_subspace(spec, &elems).expect("sl(3) elements")
}

/// `{diag(t, t, −2t)} + span(E₃₁, E₃₂)` in `sl(3,ℝ)`; every conjugate of the
/// Borel subalgebra meets it.
pub fn counterexample_w_sl3(spec: &LieAlgebraSpec<f64>) -> Subspace<f64> {
    let h = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.0, -2.0]));
    algebra_subspace(spec, &[h, unit(3, 2, 0), unit(3, 2, 1)]).expect("sl(3) elements")
}

/// Sampled `min_g dim(gV ∩ W)`. Sample `s` uses the seed `derive(seed, s)`, so
/// the result is a running minimum in `samples`.
pub fn generic_intersection_dim(
    rep: &RepAction,
    v: &Subspace<f64>,
    w: &Subspace<f64>,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be ≥ 1".into()));
    }
    if w.ambient_dim() != rep.dim() {
        return Err(Error::AmbientMismatch(w.ambient_dim(), rep.dim()));
    }
    let dims = (0..samples as u64)
        .into_par_iter()
        .map(|s| rep.sampled_dim(v, w, &mut rng::trial_rng(seed, s)))
        .collect::<Result<Vec<usize>>>()?;
    Ok(dims.into_iter().min().expect("samples ≥ 1"))
}

/// Both sides of `deg_W(V) ≤ dim V · dim W / dim ℋ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubmodularReport {
    pub holds: bool,
    pub lhs: usize,
    pub rhs: Rational64,
}

pub fn verify_submodular(
    rep: &RepAction,
    v: &Subspace<f64>,
    w: &Subspace<f64>,
    samples: usize,
    seed: u64,
) -> Result<SubmodularReport> {
    let lhs = generic_intersection_dim(rep, v, w, samples, seed)?;
    let rhs = Rational64::new((v.dim() * w.dim()) as i64, rep.dim() as i64);
    Ok(SubmodularReport { holds: Rational64::from(lhs as i64) <= rhs, lhs, rhs })
}

/// `deg_W(V₁) + deg_W(V₂) ≤ deg_W(V₁∩V₂) + deg_W(V₁+V₂)`.
pub fn supermodularity_check(
    rep: &RepAction,
    v1: &Subspace<f64>,
    v2: &Subspace<f64>,
    w: &Subspace<f64>,
    samples: usize,
    seed: u64,
) -> Result<bool> {
    let deg = |v: &Subspace<f64>| generic_intersection_dim(rep, v, w, samples, seed);
    let lhs = deg(v1)? + deg(v2)?;
    let rhs = deg(&intersection(v1, v2)?)? + deg(&sum(v1, v2)?)?;
    log::debug!("supermodularity: {lhs} ≤ {rhs}");
    Ok(lhs <= rhs)
}

/// Outcome of the tensor equality-case experiment. Dimensions are complex.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualityReport {
    /// `dim V · dim W / dim ℋ`.
    pub expected: Rational64,
    /// `dim_ℂ(gV ∩ W)` per sampled `g`.
    pub dims: Vec<usize>,
    /// Every sampled dimension equals `expected`.
    pub equality_everywhere: bool,
    /// `gV = (gV ∩ W′) ⊕ (gV ∩ W″)` for every sample.
    pub splitting_holds: bool,
    /// Sampled operators commute with the complex structure.
    pub complex_structure_ok: bool,
}

/// Realified coordinate subspace `span_ℂ{e_i ⊗ e_j : i ∈ rows, j ∈ cols}`.
fn tensor_coordinate(d1: usize, d2: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Subspace<f64> {
    let n = d1 * d2;
    let idx: Vec<usize> =
        rows.flat_map(|i| cols.clone().map(move |j| i * d2 + j)).flat_map(|k| [k, k + n]).collect();
    Subspace::coordinate(2 * n, &idx)
}

/// `V = ℋ₁⊗E₂`, `W = E₁⊗ℋ₂` with coordinate `E₁, E₂`, and `W″ = E₁^⊥⊗ℋ₂`
/// completing `W′ = W` to a splitting of `ℋ`.
pub fn equality_case_tensor(
    dim1: usize,
    dim2: usize,
    e1_dim: usize,
    e2_dim: usize,
    samples: usize,
    seed: u64,
) -> Result<EqualityReport> {
    if e1_dim == 0 || e2_dim == 0 || e1_dim > dim1 || e2_dim > dim2 || samples == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ e₁ ≤ {dim1}, 1 ≤ e₂ ≤ {dim2} and samples ≥ 1"
        )));
    }
    let rep = RepAction::tensor(dim1, dim2)?;
    let v = tensor_coordinate(dim1, dim2, 0..dim1, 0..e2_dim);
    let w = tensor_coordinate(dim1, dim2, 0..e1_dim, 0..dim2);
    let w2 = tensor_coordinate(dim1, dim2, e1_dim..dim1, 0..dim2);
    let j = complex_structure(dim1 * dim2);
    let rows = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<(usize, bool, bool)> {
            let g = rep.sample(&mut rng::trial_rng(seed, s));
            let op = rep.operator(&g)?;
            let commutes = (&op * &j - &j * &op).norm() <= 1e-10 * op.norm();
            let gv = v.image(&op);
            let a = intersection(&gv, &w)?;
            let b = intersection(&gv, &w2)?;
            let split = a.dim() + b.dim() == gv.dim() && intersect_dim(&sum(&a, &b)?, &gv)? == gv.dim();
            Ok((intersect_dim(&gv, &w)? / 2, split, commutes))
        })
        .collect::<Result<Vec<_>>>()?;
    let expected = Rational64::new((dim1 * e2_dim * e1_dim * dim2) as i64, (dim1 * dim2) as i64);
    let dims: Vec<usize> = rows.iter().map(|r| r.0).collect();
    Ok(EqualityReport {
        expected,
        equality_everywhere: dims.iter().all(|&d| Rational64::from(d as i64) == expected),
        dims,
        splitting_holds: rows.iter().all(|r| r.1),
        complex_structure_ok: rows.iter().all(|r| r.2),
    })
}
