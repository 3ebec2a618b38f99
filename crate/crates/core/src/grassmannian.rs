//! # Subspaces of a Euclidean space
//!
//! A [`Subspace`] is stored as an orthonormal column frame `F` (`D×k`, `FᵀF = I`).
//! All metric quantities reduce to singular values of small products of frames.
//!
//! ## Angle functional
//! For `V, W` with `dim V + dim W ≤ D`, `angle(V, W) = ‖v̲∧w̲‖/(‖v̲‖‖w̲‖)`, where
//! `v̲, w̲` are the wedge products of bases. With orthonormal frames this is the
//! square root of the Gram determinant of `[F_V | F_W]`, which equals
//! ```text
//! angle(V, W) = Π_i sin θ_i
//! ```
//! over the principal angles `θ_i` of the smaller space against the larger.
//! Zero-dimensional arguments give `0`, as do pairs with `dim V + dim W > D`.
//!
//! ## Distances
//! ```text
//! dist(V → W) = ‖(I − P_W) F_V‖_op          (largest sine of principal angles)
//! dist(V, W)  = max(dist(V → W), dist(W → V)),   1 if dim V ≠ dim W
//! ```
//! with `dist({0} → W) = 0` and `dist(V → {0}) = 1` for `V ≠ {0}`.
//!
//! ## Boxes
//! A flag `V₁ ⊊ … ⊊ V_{m+1} = ℝ^D` and exponents `r₁ < … < r_{m+1}` carry the box
//! `Σ_i B^{V_i}(δ^{r_i})`. Membership is decided blockwise on the orthogonal
//! increments `U_i = V_i ⊖ V_{i−1}`: `‖P_{U_i}(x − c)‖ ≤ (m+1)·δ^{r_i}`. This set
//! contains the true box and is contained in its `(m+1)`-fold dilate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, RankInfo};
use crate::scalar::Real;

/// A linear subspace of `ℝ^D` held as an orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T: Real = f64> {
    ambient_dim: usize,
    frame: DMatrix<T>,
    tol: T,
}

impl<T: Real> Subspace<T> {
    /// Column space of `m`, with rank decided at the default tolerance.
    pub fn from_spanning(m: &DMatrix<T>) -> Self {
        Self::from_spanning_tol(m, T::default_tol())
    }

    pub fn from_spanning_tol(m: &DMatrix<T>, tol: T) -> Self {
        Self { ambient_dim: m.nrows(), frame: linalg::column_space(m, tol), tol }
    }

    pub fn from_vectors(d: usize, vs: &[DVector<T>]) -> Self {
        if vs.is_empty() {
            return Self::zero(d);
        }
        Self::from_spanning(&DMatrix::from_columns(vs))
    }

    /// Wraps a frame already known to be orthonormal.
    pub fn from_orthonormal(frame: DMatrix<T>) -> Self {
        Self { ambient_dim: frame.nrows(), frame, tol: T::default_tol() }
    }

    pub fn zero(d: usize) -> Self {
        Self::from_orthonormal(DMatrix::zeros(d, 0))
    }

    pub fn whole(d: usize) -> Self {
        Self::from_orthonormal(DMatrix::identity(d, d))
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(d: usize, idx: &[usize]) -> Self {
        let mut f = DMatrix::zeros(d, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            f[(i, j)] = T::one();
        }
        Self::from_spanning(&f)
    }

    /// Uniformly distributed `k`-plane (span of Gaussian vectors).
    pub fn random<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Self {
        Self::from_spanning(&gaussian_matrix(d, k, rng))
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn frame(&self) -> &DMatrix<T> {
        &self.frame
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.frame * self.frame.transpose()
    }

    pub fn orth_complement(&self) -> Self {
        Self { ambient_dim: self.ambient_dim, frame: linalg::complement(&self.frame), tol: self.tol }
    }

    /// Image under a linear map of `ℝ^D`.
    pub fn image(&self, m: &DMatrix<T>) -> Self {
        Self::from_spanning_tol(&(m * &self.frame), self.tol)
    }

    /// Coordinates of the orthogonal projection of `x` in this frame.
    pub fn coords(&self, x: &DVector<T>) -> DVector<T> {
        self.frame.transpose() * x
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        let r = x - &self.frame * self.coords(x);
        r.norm() <= self.tol * x.norm().max(T::one())
    }
}

pub(crate) fn gaussian_matrix<T: Real, R: Rng + ?Sized>(r: usize, c: usize, rng: &mut R) -> DMatrix<T> {
    DMatrix::from_fn(r, c, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

fn check_ambient<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<()> {
    if v.ambient_dim != w.ambient_dim {
        return Err(Error::AmbientMismatch(v.ambient_dim, w.ambient_dim));
    }
    Ok(())
}

/// Sines of the principal angles of `V` against `W`, descending. Requires
/// `dim V ≤ dim W` for the values to be the principal angles proper.
fn sines_against<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Vec<T> {
    let resid = &v.frame - &w.frame * (w.frame.transpose() * &v.frame);
    linalg::singular_values(&resid)
}

/// Sines of the `min(dim V, dim W)` principal angles, ascending.
pub fn principal_sines<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<Vec<T>> {
    check_ambient(v, w)?;
    let (a, b) = if v.dim() <= w.dim() { (v, w) } else { (w, v) };
    let mut s = sines_against(a, b);
    s.iter_mut().for_each(|x| *x = x.min(T::one()));
    s.reverse();
    Ok(s)
}

pub fn angle<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<T> {
    check_ambient(v, w)?;
    if v.dim() == 0 || w.dim() == 0 || v.dim() + w.dim() > v.ambient_dim {
        return Ok(T::zero());
    }
    let s = principal_sines(v, w)?;
    Ok(s.into_iter().fold(T::one(), |acc, x| acc * x))
}

pub fn dist_to<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<T> {
    check_ambient(v, w)?;
    if v.dim() == 0 {
        return Ok(T::zero());
    }
    if w.dim() == 0 {
        return Ok(T::one());
    }
    let s = sines_against(v, w);
    Ok(s.first().copied().unwrap_or_else(T::zero).min(T::one()))
}

pub fn grass_dist<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<T> {
    check_ambient(v, w)?;
    if v.dim() != w.dim() {
        return Ok(T::one());
    }
    Ok(dist_to(v, w)?.max(dist_to(w, v)?))
}

pub fn sum<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<Subspace<T>> {
    check_ambient(v, w)?;
    let mut m = DMatrix::zeros(v.ambient_dim, v.dim() + w.dim());
    m.columns_mut(0, v.dim()).copy_from(&v.frame);
    m.columns_mut(v.dim(), w.dim()).copy_from(&w.frame);
    Ok(Subspace::from_spanning_tol(&m, v.tol))
}

/// `V ∩ W = (V^⊥ + W^⊥)^⊥`.
pub fn intersection<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<Subspace<T>> {
    Ok(sum(&v.orth_complement(), &w.orth_complement())?.orth_complement())
}

/// `dim V + dim W − rank[F_V | F_W]`, with the spectral gap of the rank decision.
pub fn intersect_dim_info<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<(usize, RankInfo)> {
    check_ambient(v, w)?;
    let mut m = DMatrix::zeros(v.ambient_dim, v.dim() + w.dim());
    m.columns_mut(0, v.dim()).copy_from(&v.frame);
    m.columns_mut(v.dim(), w.dim()).copy_from(&w.frame);
    let info = linalg::numerical_rank(&m, v.tol);
    Ok((v.dim() + w.dim() - info.rank, info))
}

pub fn intersect_dim<T: Real>(v: &Subspace<T>, w: &Subspace<T>) -> Result<usize> {
    Ok(intersect_dim_info(v, w)?.0)
}

/// Geodesic perturbation of `W` by a random tangent direction, with largest
/// principal angle exactly `u`.
pub fn perturb<T: Real, R: Rng + ?Sized>(w: &Subspace<T>, u: T, rng: &mut R) -> Subspace<T> {
    let (d, k) = (w.ambient_dim, w.dim());
    if k == 0 || k == d || u == T::zero() {
        return w.clone();
    }
    let g: DMatrix<T> = gaussian_matrix(d, k, rng);
    let tangent = &g - &w.frame * (w.frame.transpose() * &g);
    let svd = tangent.svd(true, true);
    let (uu, vt) = (svd.u.expect("u"), svd.v_t.expect("v"));
    let smax = svd.singular_values.max();
    if smax <= T::zero() {
        return w.clone();
    }
    let theta: Vec<T> = svd.singular_values.iter().map(|&s| u * s / smax).collect();
    let base = &w.frame * vt.transpose();
    let mut f = DMatrix::zeros(d, k);
    for j in 0..k {
        let col = base.column(j) * theta[j].cos() + uu.column(j) * theta[j].sin();
        f.set_column(j, &col);
    }
    Subspace::from_spanning_tol(&f, w.tol)
}

/// Monte-Carlo test for `L ∈ 𝒫_ρ^W`: some `W′ ∈ B_ρ(W)` with
/// `dim π_L W′ < (dim L / D)·dim W`. `W` itself is always tried first.
pub fn pencil_membership<T: Real, R: Rng + ?Sized>(
    l: &Subspace<T>,
    w: &Subspace<T>,
    rho: T,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    check_ambient(l, w)?;
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::InvalidRho(rho.as_f64()));
    }
    let d = l.ambient_dim;
    let l_perp = l.orth_complement();
    let dropped = |wp: &Subspace<T>| -> Result<bool> {
        let proj_dim = wp.dim() - intersect_dim(wp, &l_perp)?;
        Ok(proj_dim * d < l.dim() * w.dim())
    };
    if dropped(w)? {
        return Ok(true);
    }
    for _ in 0..samples {
        let u = rho * T::lit(rng.random::<f64>());
        if dropped(&perturb(w, u, rng))? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Partial flag `V₁ ⊊ … ⊊ V_{m+1} = ℝ^D`.
#[derive(Clone, Debug)]
pub struct Flag<T: Real = f64> {
    spaces: Vec<Subspace<T>>,
    jumps: Vec<usize>,
}

impl<T: Real> Flag<T> {
    pub fn new(spaces: Vec<Subspace<T>>) -> Result<Self> {
        let last = spaces.last().ok_or_else(|| Error::BadFlag("empty flag".into()))?;
        let d = last.ambient_dim;
        if last.dim() != d {
            return Err(Error::BadFlag("last space is not the ambient space".into()));
        }
        let mut jumps = Vec::with_capacity(spaces.len());
        let mut prev: Option<&Subspace<T>> = None;
        for s in &spaces {
            if s.ambient_dim != d {
                return Err(Error::AmbientMismatch(s.ambient_dim, d));
            }
            if let Some(p) = prev {
                if p.dim() >= s.dim() {
                    return Err(Error::BadFlag("dimensions not strictly increasing".into()));
                }
                let slack = dist_to(p, s)?;
                if slack > T::lit(1e3) * s.tol {
                    return Err(Error::BadFlag(format!("not nested (dist {:.2e})", slack.as_f64())));
                }
            } else if s.dim() == 0 {
                return Err(Error::BadFlag("first space is zero".into()));
            }
            jumps.push(s.dim() - prev.map_or(0, |p| p.dim()));
            prev = Some(s);
        }
        Ok(Self { spaces, jumps })
    }

    pub fn spaces(&self) -> &[Subspace<T>] {
        &self.spaces
    }

    pub fn jumps(&self) -> &[usize] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.spaces[0].ambient_dim
    }

    /// Orthonormal frames of the increments `V_i ⊖ V_{i−1}`.
    pub fn increments(&self) -> Vec<DMatrix<T>> {
        let mut out = Vec::with_capacity(self.spaces.len());
        let mut prev = DMatrix::<T>::zeros(self.ambient_dim(), 0);
        for s in &self.spaces {
            let resid = s.frame() - &prev * (prev.transpose() * s.frame());
            let inc = linalg::column_space(&resid, T::lit(1e-6));
            out.push(inc);
            prev = s.frame().clone();
        }
        out
    }
}

fn check_exponents<T: Real>(r: &[T], m1: usize) -> Result<()> {
    if r.len() != m1 {
        return Err(Error::BadExponents(format!("expected {m1} exponents, got {}", r.len())));
    }
    let in_range = r.iter().all(|&x| x > T::zero() && x <= T::one());
    let increasing = r.windows(2).all(|p| p[0] < p[1]);
    if !in_range || !increasing {
        return Err(Error::BadExponents("must be strictly increasing in (0, 1]".into()));
    }
    Ok(())
}

/// Blockwise membership of `x` in `center + Σ_i B^{V_i}(δ^{r_i})` with slack `m+1`.
pub fn box_membership<T: Real>(
    x: &DVector<T>,
    center: &DVector<T>,
    flag: &Flag<T>,
    r: &[T],
    delta: T,
) -> Result<bool> {
    check_exponents(r, flag.len())?;
    Ok(BoxTest::new(flag, r, delta, T::lit(flag.len() as f64)).contains(&(x - center)))
}

/// Precomputed blockwise box test, reusable across many points.
#[derive(Clone, Debug)]
pub struct BoxTest<T: Real = f64> {
    blocks: Vec<(DMatrix<T>, T)>,
}

impl<T: Real> BoxTest<T> {
    pub fn new(flag: &Flag<T>, r: &[T], delta: T, slack: T) -> Self {
        let blocks = flag
            .increments()
            .into_iter()
            .zip(r)
            .map(|(u, &ri)| (u.transpose(), slack * delta.powf(ri)))
            .collect();
        Self { blocks }
    }

    pub fn contains(&self, y: &DVector<T>) -> bool {
        self.blocks.iter().all(|(ut, radius)| (ut * y).norm() <= *radius)
    }
}
