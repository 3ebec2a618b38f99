//! The split orthogonal model `so(q)` on `ℂ^{2n}`, `q(x) = Σ_k x_k x_{n+k}`, and the
//! certificate that four translates of the highest weight space `V₁` are never in
//! direct sum when `d = 2n − 1`.
//!
//! With `Q = ½[[0, I], [I, 0]]` and `⟨x, y⟩_q = xᵀQy` (bilinear, no conjugation):
//! ```text
//! H_k = E_kk − E_{n+k,n+k}
//! Y_kl = E_kl − E_{n+l,n+k}            (k ≠ l)
//! Z_kl = E_{k,n+l} − E_{l,n+k}, Z_klᵀ  (k < l)
//! V₁ = span{Y_1l, Z_1l : 2 ≤ l ≤ n}
//! ```
//! For `w ⊥ e₁, e_{n+1}` the element `M_w v = −⟨w,v⟩_q e₁ + ⟨e₁,v⟩_q w` lies in `V₁`
//! and `2 M_w e_{n+1} = w`.

use std::fmt;
use std::ops::Neg;

use nalgebra::{Complex, DMatrix, DVector, Scalar};
use num_rational::Ratio;
use num_traits::{Num, One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grassmannian::Subspace;
use crate::lie::LieAlgebraSpec;
use crate::linalg::{self, expm};

pub type C64 = Complex<f64>;

/// Label of an element of the standard basis, 1-based as in the formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisLabel {
    H(usize),
    Y(usize, usize),
    Z(usize, usize),
    Zt(usize, usize),
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::H(k) => write!(f, "H_{k}"),
            BasisLabel::Y(k, l) => write!(f, "Y_{k},{l}"),
            BasisLabel::Z(k, l) => write!(f, "Z_{k},{l}"),
            BasisLabel::Zt(k, l) => write!(f, "Zt_{k},{l}"),
        }
    }
}

fn e<T: Scalar + Num + Neg<Output = T>>(dim: usize, entries: &[(usize, usize, bool)]) -> DMatrix<T> {
    let mut m = DMatrix::from_element(dim, dim, T::zero());
    for &(i, j, plus) in entries {
        m[(i, j)] = if plus { T::one() } else { -T::one() };
    }
    m
}

/// Basis `{H_k} ∪ {Y_kl} ∪ {Z_kl} ∪ {Z_klᵀ}` over any numeric type.
pub fn appendix_basis<T: Scalar + Num + Neg<Output = T>>(n: usize) -> Vec<(BasisLabel, DMatrix<T>)> {
    let d = 2 * n;
    let mut out = Vec::with_capacity(n * (2 * n - 1));
    for k in 0..n {
        out.push((BasisLabel::H(k + 1), e(d, &[(k, k, true), (n + k, n + k, false)])));
    }
    for k in 0..n {
        for l in 0..n {
            if k != l {
                out.push((BasisLabel::Y(k + 1, l + 1), e(d, &[(k, l, true), (n + l, n + k, false)])));
            }
        }
    }
    for k in 0..n {
        for l in k + 1..n {
            out.push((BasisLabel::Z(k + 1, l + 1), e(d, &[(k, n + l, true), (l, n + k, false)])));
        }
    }
    for k in 0..n {
        for l in k + 1..n {
            out.push((BasisLabel::Zt(k + 1, l + 1), e(d, &[(n + l, k, true), (n + k, l, false)])));
        }
    }
    out
}

/// `V₁` basis `Y_{1,2..n}` followed by `Z_{1,2..n}`.
pub fn v1_basis<T: Scalar + Num + Neg<Output = T>>(n: usize) -> Vec<(BasisLabel, DMatrix<T>)> {
    let d = 2 * n;
    let ys = (1..n).map(|l| (BasisLabel::Y(1, l + 1), e(d, &[(0, l, true), (n + l, n, false)])));
    let zs = (1..n).map(|l| (BasisLabel::Z(1, l + 1), e(d, &[(0, n + l, true), (l, n, false)])));
    ys.chain(zs).collect()
}

/// `Q = ½[[0, I], [I, 0]]`.
pub fn form_matrix<T: Scalar + Num>(n: usize) -> DMatrix<T> {
    let half = T::one() / (T::one() + T::one());
    let mut q = DMatrix::from_element(2 * n, 2 * n, T::zero());
    for k in 0..n {
        q[(k, n + k)] = half.clone();
        q[(n + k, k)] = half.clone();
    }
    q
}

/// Exact rational verification of the structural identities of the basis.
pub fn verify_basis_exact(n: usize) -> std::result::Result<(), String> {
    type Q = Ratio<i64>;
    let d = 2 * n;
    let q = form_matrix::<Q>(n);
    let basis = appendix_basis::<Q>(n);
    if basis.len() != n * (2 * n - 1) {
        return Err(format!("basis has {} elements", basis.len()));
    }
    for (label, m) in &basis {
        let lhs = m.transpose() * &q + &q * m;
        if lhs.iter().any(|x| !x.is_zero()) {
            return Err(format!("{label} violates MᵀQ + QM = 0"));
        }
        let a = m.view((0, 0), (n, n));
        let b = m.view((0, n), (n, n));
        let c = m.view((n, 0), (n, n));
        let dd = m.view((n, n), (n, n));
        if a.transpose() != -dd.into_owned() || b.transpose() != -b.into_owned() || c.transpose() != -c.into_owned() {
            return Err(format!("{label} violates the block relations"));
        }
    }
    let rows: Vec<Vec<Q>> = basis.iter().map(|(_, m)| m.iter().cloned().collect()).collect();
    if exact_rank(rows) != basis.len() {
        return Err("basis is linearly dependent".into());
    }
    let h1 = &basis[0].1;
    let v1 = v1_basis::<Q>(n);
    if v1.len() != 2 * (n - 1) {
        return Err("dim V₁ ≠ 2(n − 1)".into());
    }
    for (label, m) in &v1 {
        if &(h1 * m - m * h1) != m {
            return Err(format!("[H_1, {label}] ≠ {label}"));
        }
        if !basis.iter().any(|(l, b)| l == label && b == m) {
            return Err(format!("{label} missing from the basis"));
        }
    }
    let _ = d;
    Ok(())
}

/// Rank over ℚ by fraction-exact Gaussian elimination.
pub fn exact_rank(mut rows: Vec<Vec<Ratio<i64>>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank][c];
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = rows[r][c] / pivot;
                for k in c..cols {
                    let sub = rows[rank][k] * f;
                    rows[r][k] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Outcome of [`SoqModel::find_relation`].
#[derive(Clone, Debug)]
pub struct Relation {
    /// Symmetric `4×4` coefficient matrix, unit Frobenius norm.
    pub lambda: DMatrix<C64>,
    pub w: Vec<DVector<C64>>,
    /// `‖Σ_a Ad(h_a) M_{w_a}‖_F`.
    pub residual: f64,
    /// Dimension of the space of admissible `λ`.
    pub solution_dim: usize,
    /// `‖S·c‖` for the stacked translate basis `S` and the coefficients of the `w_a`.
    pub kernel_residual: f64,
    /// Largest defect of the bilinear identity over random test vectors.
    pub identity_residual: f64,
}

/// Complex model of `so(q)` with its distinguished subspace `V₁`.
#[derive(Clone, Debug)]
pub struct SoqModel {
    n: usize,
    q: DMatrix<C64>,
    q_inv: DMatrix<C64>,
    basis: Vec<DMatrix<C64>>,
    v1: Vec<DMatrix<C64>>,
    tol: f64,
}

impl SoqModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::ParamTooSmall(format!("so(q) needs n ≥ 2, got {n}")));
        }
        let q = form_matrix::<C64>(n);
        let q_inv = q.clone() * C64::new(4.0, 0.0);
        Ok(Self {
            n,
            q,
            q_inv,
            basis: appendix_basis::<C64>(n).into_iter().map(|(_, m)| m).collect(),
            v1: v1_basis::<C64>(n).into_iter().map(|(_, m)| m).collect(),
            tol: 1e-8,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `d = 2n − 1`.
    pub fn d(&self) -> usize {
        2 * self.n - 1
    }

    pub fn form(&self) -> &DMatrix<C64> {
        &self.q
    }

    pub fn basis(&self) -> &[DMatrix<C64>] {
        &self.basis
    }

    pub fn v1(&self) -> &[DMatrix<C64>] {
        &self.v1
    }

    pub fn q_form(&self, x: &DVector<C64>, y: &DVector<C64>) -> C64 {
        (x.transpose() * &self.q * y)[(0, 0)]
    }

    fn unit(&self, i: usize) -> DVector<C64> {
        let mut v = DVector::zeros(2 * self.n);
        v[i] = C64::one();
        v
    }

    /// The unique `M ∈ V₁` with `2 M e_{n+1} = w`.
    pub fn m_w(&self, w: &DVector<C64>) -> Result<DMatrix<C64>> {
        let n = self.n;
        let bad = w[0].norm().max(w[n].norm());
        if bad > self.tol * w.norm().max(1.0) {
            return Err(Error::NotOrthogonal(bad));
        }
        let mut w = w.clone();
        w[0] = C64::zero();
        w[n] = C64::zero();
        let qw = &self.q * &w;
        let e1 = self.unit(0);
        let en1 = self.unit(n);
        Ok(-(&e1 * qw.transpose()) + &w * en1.transpose() * C64::new(0.5, 0.0))
    }

    pub fn inverse(&self, h: &DMatrix<C64>) -> DMatrix<C64> {
        &self.q_inv * h.transpose() * &self.q
    }

    pub fn check_group(&self, h: &DMatrix<C64>) -> Result<()> {
        let scale = h.norm().max(1.0);
        let defect = (h.transpose() * &self.q * h - &self.q).norm() / (scale * scale);
        if defect > 1e-9 {
            return Err(Error::NotInGroup(defect));
        }
        Ok(())
    }

    /// Complex Gaussian element of `so(q)` with Frobenius norm at most `bound`.
    pub fn random_algebra_element<R: Rng + ?Sized>(&self, bound: f64, rng: &mut R) -> DMatrix<C64> {
        let d = 2 * self.n;
        let mut x = self.basis.iter().fold(DMatrix::zeros(d, d), |acc, b| {
            let c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            acc + b * c
        });
        let norm = x.norm();
        if norm > bound {
            x *= C64::new(bound / norm, 0.0);
        }
        x
    }

    /// `exp(X₁)exp(X₂)` with `‖X_i‖ ≤ 1`.
    pub fn random_group_element<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<C64> {
        let x1 = self.random_algebra_element(1.0, rng);
        let x2 = self.random_algebra_element(1.0, rng);
        expm(&x1) * expm(&x2)
    }

    fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
        DVector::from_column_slice(m.as_slice())
    }

    /// Columns `vec(h M h⁻¹)` for `h` in `hs` and `M` in the `V₁` basis.
    pub fn stacked_translates(&self, hs: &[DMatrix<C64>]) -> DMatrix<C64> {
        let cols: Vec<DVector<C64>> = hs
            .iter()
            .flat_map(|h| {
                let hi = self.inverse(h);
                self.v1.iter().map(move |m| Self::vectorize(&(h * m * &hi)))
            })
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// `k·dim V₁ − dim Σ Ad(h_i)V₁`.
    pub fn direct_sum_defect(&self, hs: &[DMatrix<C64>]) -> Result<usize> {
        for h in hs {
            self.check_group(h)?;
        }
        let s = self.stacked_translates(hs);
        let rank = complex_rank(&s, self.tol);
        Ok(s.ncols() - rank)
    }

    /// Explicit linear relation among four translates of `V₁`.
    pub fn find_relation<R: Rng + ?Sized>(&self, hs: &[DMatrix<C64>; 4], rng: &mut R) -> Result<Relation> {
        let n = self.n;
        for h in hs {
            self.check_group(h)?;
        }
        let u: Vec<DVector<C64>> = hs.iter().map(|h| h.column(0).into_owned()).collect();
        if complex_rank(&DMatrix::from_columns(&u), self.tol) < 4 {
            return Err(Error::DegenerateConfiguration("h_a e₁ are linearly dependent".into()));
        }
        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|a| (a..4).map(move |b| (a, b))).collect();
        // Rows: for each a, pairing of h_a e₁ and h_a e_{n+1} against Σ_b λ_ab h_b e₁.
        let mut cmat = DMatrix::<C64>::zeros(10, 10);
        for a in 0..4 {
            for (t, target) in [0usize, n].into_iter().enumerate() {
                let hv = hs[a].column(target).into_owned();
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    let b = if i == a {
                        j
                    } else if j == a {
                        i
                    } else {
                        continue;
                    };
                    cmat[(2 * a + t, p)] = self.q_form(&hv, &u[b]);
                }
            }
        }
        let svd = cmat.svd(false, true);
        let vt = svd.v_t.expect("v requested");
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].partial_cmp(&svd.singular_values[x]).expect("finite"));
        let smax = svd.singular_values[order[0]];
        let solution_dim = order.iter().filter(|&&i| svd.singular_values[i] <= self.tol * smax).count();
        if solution_dim < 2 {
            return Err(Error::DegenerateConfiguration(format!("solution space has dimension {solution_dim}")));
        }
        let last = order[9];
        let mut x: DVector<C64> = vt.row(last).transpose().map(|z| z.conj());
        let pivot = x.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite")).expect("nonempty");
        x *= pivot.conj() / pivot.norm();
        let mut lambda = DMatrix::<C64>::zeros(4, 4);
        for (p, &(i, j)) in pairs.iter().enumerate() {
            lambda[(i, j)] = x[p];
            lambda[(j, i)] = x[p];
        }
        lambda /= C64::new(lambda.norm(), 0.0);
        let mut w = Vec::with_capacity(4);
        for a in 0..4 {
            let s = (0..4).fold(DVector::zeros(2 * n), |acc, b| acc + &u[b] * lambda[(a, b)]);
            w.push(self.inverse(&hs[a]) * s);
        }
        if w.iter().all(|v| v.norm() <= self.tol) {
            return Err(Error::DegenerateConfiguration("all w_a vanish".into()));
        }
        let d = 2 * n;
        let mut total = DMatrix::<C64>::zeros(d, d);
        let mut coeffs = Vec::with_capacity(4 * (2 * n - 2));
        for (h, wa) in hs.iter().zip(&w) {
            let m = self.m_w(wa)?;
            total += h * m * self.inverse(h);
            // M_{e_{n+l}} = −½ Y_1l and M_{e_l} = −½ Z_1l.
            coeffs.extend((1..n).map(|l| wa[n + l] * -0.5));
            coeffs.extend((1..n).map(|l| wa[l] * -0.5));
        }
        let kernel_residual = (self.stacked_translates(hs) * DVector::from_vec(coeffs)).norm();
        let mut identity_residual: f64 = 0.0;
        for _ in 0..4 {
            let v = DVector::from_fn(d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            let mut lhs = DVector::zeros(d);
            for (h, wa) in hs.iter().zip(&w) {
                let he1 = h.column(0).into_owned();
                let hw = h * wa;
                lhs += &hw * self.q_form(&he1, &v) - &he1 * self.q_form(&hw, &v);
            }
            identity_residual = identity_residual.max(lhs.norm());
        }
        Ok(Relation { lambda, w, residual: total.norm(), solution_dim, kernel_residual, identity_residual })
    }
}

/// Rank of a complex matrix at relative threshold `tol`.
pub fn complex_rank(m: &DMatrix<C64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().svd(false, false).singular_values;
    let smax = s.max();
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// `k·dim V − dim Σ Ad(g_i)V` for real group elements of a built-in algebra.
pub fn real_defect(spec: &LieAlgebraSpec<f64>, v: &Subspace<f64>, gs: &[DMatrix<f64>]) -> Result<usize> {
    let mut cols = Vec::with_capacity(gs.len() * v.dim());
    for g in gs {
        let ad = spec.adjoint_operator(g)?;
        let img = &ad * v.frame();
        cols.extend(img.column_iter().map(|c| c.into_owned()));
    }
    let m = DMatrix::from_columns(&cols);
    Ok(cols.len() - linalg::numerical_rank(&m, spec.tol()).rank)
}
