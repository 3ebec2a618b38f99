//! Concrete semisimple Lie algebras: `sl(d,ℝ)`, `so(p,1)` and the split model of
//! `so(q)` from the non-transversality construction.
//!
//! Elements are matrices. Computations happen in coordinates with respect to an
//! orthonormal basis for `⟨X, Y⟩ = −Kill(X, ϑY) = c·tr(X Yᵀ)` where `c` is the
//! Killing scale of the family and `ϑX = −Xᵀ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grassmannian::Subspace;
use crate::linalg::{self, expm};
use crate::scalar::Real;
use crate::so_transversality::appendix_basis;

/// Family and parameter of a built-in algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `sl(d, ℝ)`.
    SlReal(usize),
    /// `so(p, 1)`, preserving `x₁² + … + x_p² − x_{p+1}²`.
    SoP1(usize),
    /// `so(q)` on `2n` coordinates with `q(x) = Σ x_k x_{n+k}`.
    SoQComplex(usize),
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::SlReal(d) => write!(f, "sl({d})"),
            Family::SoP1(p) => write!(f, "so({p},1)"),
            Family::SoQComplex(n) => write!(f, "so(q,{n})"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    /// Parses `sl2`, `sl(3)`, `so(3,1)`, `so31`-style names, and `soq4`.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !matches!(c, '(' | ')' | ' ' | '_')).collect();
        let t = t.to_ascii_lowercase();
        let num = |x: &str| x.parse::<usize>().map_err(|_| Error::Parse(format!("bad algebra name '{s}'")));
        if let Some(rest) = t.strip_prefix("soq") {
            return Ok(Family::SoQComplex(num(rest.trim_start_matches(','))?));
        }
        if let Some(rest) = t.strip_prefix("sl") {
            return Ok(Family::SlReal(num(rest)?));
        }
        if let Some(rest) = t.strip_prefix("so") {
            let p = rest.strip_suffix(",1").or_else(|| rest.strip_suffix('1')).unwrap_or("");
            return Ok(Family::SoP1(num(p)?));
        }
        Err(Error::Parse(format!("bad algebra name '{s}'")))
    }
}

/// A restricted root `α` with its root space.
#[derive(Clone, Debug)]
pub struct RestrictedRoot<T: Real = f64> {
    /// Values `α(A_b)` on the orthonormal basis `(A_b)` of `𝔞`.
    pub functional: Vec<T>,
    pub multiplicity: usize,
    /// Root space, in algebra coordinates.
    pub root_space: Subspace<T>,
}

impl<T: Real> RestrictedRoot<T> {
    /// `α(H)` for `H` given by its `𝔞`-coordinates.
    pub fn eval(&self, h: &[T]) -> T {
        self.functional.iter().zip(h).fold(T::zero(), |acc, (&a, &x)| acc + a * x)
    }
}

/// Restricted root space decomposition `𝔤 = 𝔤₀ ⊕ ⊕_α 𝔤_α`.
#[derive(Clone, Debug)]
pub struct RootDecomposition<T: Real = f64> {
    /// All roots, ordered by decreasing value on the reference regular element.
    pub roots: Vec<RestrictedRoot<T>>,
    pub centralizer: Subspace<T>,
}

#[derive(Clone, Debug)]
pub struct LieAlgebraSpec<T: Real = f64> {
    family: Family,
    ambient_dim: usize,
    basis: Vec<DMatrix<T>>,
    onb: Vec<DMatrix<T>>,
    /// Rows are the vectorised `onb` elements scaled by the Killing scale.
    coord_map: DMatrix<T>,
    killing_scale: T,
    killing_gram: DMatrix<T>,
    form: Option<DMatrix<T>>,
    cartan_basis: Vec<DMatrix<T>>,
    cartan_subspace: Subspace<T>,
    reference: DMatrix<T>,
    roots: RootDecomposition<T>,
    tol: T,
}

fn unit<T: Real>(n: usize, i: usize, j: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = T::one();
    m
}

fn vec_of<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

pub fn bracket<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>) -> DMatrix<T> {
    x * y - y * x
}

/// Builds one of the built-in algebras.
pub fn build_algebra<T: Real>(family: Family) -> Result<LieAlgebraSpec<T>> {
    LieAlgebraSpec::new(family)
}

impl<T: Real> LieAlgebraSpec<T> {
    pub fn new(family: Family) -> Result<Self> {
        let (n, basis, form, scale, cartan, reference) = match family {
            Family::SlReal(d) => {
                if d < 2 {
                    return Err(Error::ParamTooSmall(format!("sl needs d ≥ 2, got {d}")));
                }
                let mut b = Vec::new();
                for i in 0..d {
                    for j in i + 1..d {
                        b.push(unit(d, i, j));
                    }
                }
                let mut cartan = Vec::new();
                for k in 0..d - 1 {
                    let h = unit::<T>(d, k, k) - unit(d, k + 1, k + 1);
                    cartan.push(h.clone());
                    b.push(h);
                }
                for i in 0..d {
                    for j in 0..i {
                        b.push(unit(d, i, j));
                    }
                }
                let mean = T::lit((d - 1) as f64 / 2.0);
                let reference =
                    DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| T::lit((d - 1 - i) as f64) - mean));
                (d, b, None, T::lit(2.0 * d as f64), cartan, reference)
            }
            Family::SoP1(p) => {
                if p < 2 {
                    return Err(Error::ParamTooSmall(format!("so(p,1) needs p ≥ 2, got {p}")));
                }
                let nn = p + 1;
                let mut b = Vec::new();
                for i in 0..p {
                    b.push(unit::<T>(nn, i, p) + unit(nn, p, i));
                }
                for i in 0..p {
                    for j in i + 1..p {
                        b.push(unit::<T>(nn, i, j) - unit(nn, j, i));
                    }
                }
                let mut q = DMatrix::identity(nn, nn);
                q[(p, p)] = -T::one();
                let boost = b[p - 1].clone();
                (nn, b, Some(q), T::lit((nn - 2) as f64), vec![boost.clone()], boost)
            }
            Family::SoQComplex(n) => {
                if n < 2 {
                    return Err(Error::ParamTooSmall(format!("so(q) needs n ≥ 2, got {n}")));
                }
                let b: Vec<DMatrix<T>> = appendix_basis::<T>(n).into_iter().map(|(_, m)| m).collect();
                let q = crate::so_transversality::form_matrix::<T>(n);
                let cartan: Vec<DMatrix<T>> = b[..n].to_vec();
                let reference = cartan
                    .iter()
                    .enumerate()
                    .fold(DMatrix::zeros(2 * n, 2 * n), |acc, (k, h)| acc + h * T::lit((n - k) as f64));
                (2 * n, b, Some(q), T::lit((2 * n - 2) as f64), cartan, reference)
            }
        };
        let onb = gram_schmidt(&basis, scale);
        let mut coord_map = DMatrix::zeros(onb.len(), n * n);
        for (i, e) in onb.iter().enumerate() {
            coord_map.set_row(i, &(vec_of(e) * scale).transpose());
        }
        let cartan_basis = gram_schmidt(&cartan, scale);
        let mut spec = Self {
            family,
            ambient_dim: n,
            killing_gram: DMatrix::zeros(basis.len(), basis.len()),
            basis,
            onb,
            coord_map,
            killing_scale: scale,
            form,
            cartan_subspace: Subspace::zero(0),
            cartan_basis,
            reference,
            roots: RootDecomposition { roots: Vec::new(), centralizer: Subspace::zero(0) },
            tol: T::default_tol(),
        };
        let ads: Vec<DMatrix<T>> = spec.basis.iter().map(|x| spec.ad_unchecked(x)).collect();
        spec.killing_gram = DMatrix::from_fn(ads.len(), ads.len(), |i, j| (&ads[i] * &ads[j]).trace());
        let cart_coords: Vec<DVector<T>> = spec.cartan_basis.iter().map(|a| spec.coords_unchecked(a)).collect();
        spec.cartan_subspace = Subspace::from_vectors(spec.algebra_dim(), &cart_coords);
        spec.roots = spec.compute_roots()?;
        Ok(spec)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DMatrix<T>] {
        &self.basis
    }

    /// Basis orthonormal for `−Kill(·, ϑ·)`; coordinates refer to this basis.
    pub fn orthonormal_basis(&self) -> &[DMatrix<T>] {
        &self.onb
    }

    pub fn killing_gram(&self) -> &DMatrix<T> {
        &self.killing_gram
    }

    /// `c` with `Kill(X, Y) = c·tr(XY)`.
    pub fn killing_scale(&self) -> T {
        self.killing_scale
    }

    /// Defining quadratic form of the orthogonal families.
    pub fn form(&self) -> Option<&DMatrix<T>> {
        self.form.as_ref()
    }

    pub fn cartan_subspace(&self) -> &Subspace<T> {
        &self.cartan_subspace
    }

    /// Orthonormal basis `(A_b)` of `𝔞` as matrices.
    pub fn cartan_basis(&self) -> &[DMatrix<T>] {
        &self.cartan_basis
    }

    /// Regular element of `𝔞` defining positivity.
    pub fn reference_element(&self) -> &DMatrix<T> {
        &self.reference
    }

    pub fn roots(&self) -> &RootDecomposition<T> {
        &self.roots
    }

    pub fn positive_roots(&self) -> impl Iterator<Item = &RestrictedRoot<T>> {
        let h = self.cartan_coords(&self.reference);
        self.roots.roots.iter().filter(move |r| r.eval(&h) > T::zero())
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn inner(&self, x: &DMatrix<T>, y: &DMatrix<T>) -> T {
        linalg::frobenius(x, y) * self.killing_scale
    }

    /// `Kill(X, Y)` by the trace formula.
    pub fn killing(&self, x: &DMatrix<T>, y: &DMatrix<T>) -> T {
        (x * y).trace() * self.killing_scale
    }

    fn coords_unchecked(&self, x: &DMatrix<T>) -> DVector<T> {
        &self.coord_map * vec_of(x)
    }

    /// Coordinates in the orthonormal basis; fails if `x ∉ 𝔤`.
    pub fn coords(&self, x: &DMatrix<T>) -> Result<DVector<T>> {
        if x.nrows() != self.ambient_dim || x.ncols() != self.ambient_dim {
            return Err(Error::AmbientMismatch(x.nrows(), self.ambient_dim));
        }
        let c = self.coords_unchecked(x);
        let resid = (x - self.element(&c)).norm();
        let scale = x.norm();
        if resid > self.tol * scale.max(T::one()) {
            return Err(Error::NotInAlgebra((resid / scale.max(T::one())).as_f64()));
        }
        Ok(c)
    }

    pub fn element(&self, coords: &DVector<T>) -> DMatrix<T> {
        let n = self.ambient_dim;
        self.onb.iter().zip(coords.iter()).fold(DMatrix::zeros(n, n), |acc, (e, &c)| acc + e * c)
    }

    /// `𝔞`-coordinates of an element of `𝔞` (projection for general input).
    pub fn cartan_coords(&self, h: &DMatrix<T>) -> Vec<T> {
        self.cartan_basis.iter().map(|a| self.inner(a, h)).collect()
    }

    pub fn cartan_element(&self, coords: &[T]) -> DMatrix<T> {
        let n = self.ambient_dim;
        self.cartan_basis.iter().zip(coords).fold(DMatrix::zeros(n, n), |acc, (a, &c)| acc + a * c)
    }

    fn ad_unchecked(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let cols: Vec<DVector<T>> = self.onb.iter().map(|e| self.coords_unchecked(&bracket(x, e))).collect();
        DMatrix::from_columns(&cols)
    }

    /// Matrix of `ad X` in algebra coordinates.
    pub fn ad(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.coords(x)?;
        Ok(self.ad_unchecked(x))
    }

    pub fn cartan_involution(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.coords(x)?;
        Ok(-x.transpose())
    }

    /// Relative defect of the group membership test.
    pub fn group_defect(&self, g: &DMatrix<T>) -> T {
        let scale = g.norm().max(T::one());
        match &self.form {
            None => (g.determinant() - T::one()).abs() / scale.powi(self.ambient_dim as i32),
            Some(q) => {
                let gram = (g.transpose() * q * g - q).norm() / (scale * scale);
                let det = (g.determinant() - T::one()).abs() / scale.powi(self.ambient_dim as i32);
                gram.max(det)
            }
        }
    }

    pub fn check_group(&self, g: &DMatrix<T>) -> Result<()> {
        if g.nrows() != self.ambient_dim || g.ncols() != self.ambient_dim {
            return Err(Error::AmbientMismatch(g.nrows(), self.ambient_dim));
        }
        let d = self.group_defect(g);
        if !(d <= self.tol) {
            return Err(Error::NotInGroup(d.as_f64()));
        }
        Ok(())
    }

    /// Group inverse; uses the form identity `g⁻¹ = Q⁻¹ gᵀ Q` when available.
    pub fn group_inverse(&self, g: &DMatrix<T>) -> DMatrix<T> {
        match (&self.form, self.family) {
            (Some(q), Family::SoP1(_)) => q * g.transpose() * q,
            (Some(q), _) => {
                let qi = q.clone().try_inverse().expect("form is invertible");
                qi * g.transpose() * q
            }
            (None, _) => g.clone().try_inverse().expect("det-one matrix is invertible"),
        }
    }

    /// Matrix of `Ad(g)` in algebra coordinates.
    pub fn adjoint_operator(&self, g: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_group(g)?;
        Ok(self.adjoint_unchecked(g))
    }

    pub(crate) fn adjoint_unchecked(&self, g: &DMatrix<T>) -> DMatrix<T> {
        let gi = self.group_inverse(g);
        let cols: Vec<DVector<T>> = self.onb.iter().map(|e| self.coords_unchecked(&(g * e * &gi))).collect();
        DMatrix::from_columns(&cols)
    }

    /// Gaussian algebra element with coordinate norm clamped to `clamp`.
    pub fn random_element<R: Rng + ?Sized>(&self, clamp: T, rng: &mut R) -> DMatrix<T> {
        let mut c = DVector::from_fn(self.algebra_dim(), |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        let norm = c.norm();
        if norm > clamp {
            c *= clamp / norm;
        }
        self.element(&c)
    }

    /// `exp(X₁)exp(X₂)exp(X₃)` with clamped Gaussian `X_j`.
    pub fn random_group_element<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<T> {
        let n = self.ambient_dim;
        (0..3).fold(DMatrix::identity(n, n), |acc, _| acc * expm(&self.random_element(T::lit(1.5), rng)))
    }

    fn compute_roots(&self) -> Result<RootDecomposition<T>> {
        let dim = self.algebra_dim();
        let weights: Vec<T> = (0..self.cartan_basis.len()).map(|b| T::lit(1.0 + (b as f64 + 2.0).sqrt() / 3.0)).collect();
        let generic = self.cartan_element(&weights);
        let ad_gen = self.ad_unchecked(&generic);
        let sym = (&ad_gen + ad_gen.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
        let spread = eig.eigenvalues.iter().fold(T::zero(), |m, &x| m.max(x.abs())).max(T::one());
        let gap = T::default_tol() * T::lit(100.0) * spread;
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            match clusters.last_mut() {
                Some(c) if eig.eigenvalues[*c.last().expect("nonempty")] - eig.eigenvalues[i] <= gap => c.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        let ad_basis: Vec<DMatrix<T>> = self.cartan_basis.iter().map(|a| self.ad_unchecked(a)).collect();
        let mut roots = Vec::new();
        let mut centralizer = None;
        for c in clusters {
            let cols: Vec<DVector<T>> = c.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
            let frame = DMatrix::from_columns(&cols);
            let k = T::lit(c.len() as f64);
            let mut functional = Vec::with_capacity(ad_basis.len());
            for ad_a in &ad_basis {
                let image = ad_a * &frame;
                let alpha = (frame.transpose() * &image).trace() / k;
                let resid = (&image - &frame * alpha).norm();
                if resid > T::default_tol() * T::lit(10.0) * ad_a.norm().max(T::one()) {
                    return Err(Error::DegenerateCartan(format!("eigen-relation residual {:.2e}", resid.as_f64())));
                }
                functional.push(alpha);
            }
            let space = Subspace::from_orthonormal(frame);
            if functional.iter().all(|a| a.abs() <= T::default_tol() * T::lit(10.0) * spread) {
                if centralizer.is_some() {
                    return Err(Error::DegenerateCartan("zero weight appears twice".into()));
                }
                centralizer = Some(space);
            } else {
                roots.push(RestrictedRoot { functional, multiplicity: c.len(), root_space: space });
            }
        }
        let centralizer = centralizer.ok_or_else(|| Error::DegenerateCartan("no centralizer".into()))?;
        let href = self.cartan_coords(&self.reference);
        roots.sort_by(|a, b| b.eval(&href).partial_cmp(&a.eval(&href)).unwrap_or(std::cmp::Ordering::Equal));
        Ok(RootDecomposition { roots, centralizer })
    }
}

/// Orthonormalises matrices for `c·tr(X Yᵀ)`, preserving order.
fn gram_schmidt<T: Real>(mats: &[DMatrix<T>], scale: T) -> Vec<DMatrix<T>> {
    let mut out: Vec<DMatrix<T>> = Vec::with_capacity(mats.len());
    for m in mats {
        let mut v = m.clone();
        for _ in 0..2 {
            for e in &out {
                let p = linalg::frobenius(e, &v) * scale;
                v -= e * p;
            }
        }
        let norm = (linalg::frobenius(&v, &v) * scale).sqrt();
        out.push(v / norm);
    }
    out
}

/// Root data recomputed from scratch.
pub fn restricted_root_decomposition<T: Real>(spec: &LieAlgebraSpec<T>) -> Result<RootDecomposition<T>> {
    spec.compute_roots()
}
