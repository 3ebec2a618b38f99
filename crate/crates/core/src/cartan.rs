//! Cartan decomposition `g = θ·exp(κ)·θ′`, random walks, Lyapunov data and the
//! Monte-Carlo probes built on them.
//!
//! For `SL(d,ℝ)` the factors come from an SVD. Products of many random matrices
//! are accumulated as `Q·T` (orthogonal times triangular) and the SVD of `T` is
//! taken by one-sided Jacobi, which keeps the small singular values accurate to
//! full relative precision; `g` itself would be numerically rank one.
//! For `SO(p,1)` the factors come from the hyperbolic geometry of the last column:
//! `g e_N = (sinh t · u, cosh t)`.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grassmannian::{angle, intersect_dim, perturb, sum, Flag, Subspace};
use crate::lie::{Family, LieAlgebraSpec};
use crate::linalg::jacobi_svd;
use crate::rng;
use crate::scalar::Real;

/// `g = θ·exp(κ)·θ′` with `κ ∈ 𝔞⁺`.
#[derive(Clone, Debug)]
pub struct CartanTriple<T: Real = f64> {
    pub theta: DMatrix<T>,
    /// Cartan projection as an element of `𝔞`.
    pub kappa: DMatrix<T>,
    pub theta_prime: DMatrix<T>,
    /// Logarithms of the singular values of `g`, descending.
    pub log_singular_values: Vec<T>,
    /// Set when singular values collide and the compact factors are not unique.
    pub non_unique: bool,
}

impl<T: Real> CartanTriple<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.theta * crate::linalg::expm(&self.kappa) * &self.theta_prime
    }
}

pub fn cartan_decompose<T: Real>(spec: &LieAlgebraSpec<T>, g: &DMatrix<T>) -> Result<CartanTriple<T>> {
    spec.check_group(g)?;
    decompose_unchecked(spec, g)
}

fn decompose_unchecked<T: Real>(spec: &LieAlgebraSpec<T>, g: &DMatrix<T>) -> Result<CartanTriple<T>> {
    match spec.family() {
        Family::SlReal(d) => Ok(sl_from_qt(&DMatrix::identity(d, d), g, spec.tol())),
        Family::SoP1(p) => Ok(so_p1_kak(g, p, spec.tol())),
        f => Err(Error::UnsupportedFamily(format!("Cartan decomposition for {f}"))),
    }
}

/// Decomposition of `g_k ⋯ g_1` without forming the product directly.
pub fn cartan_decompose_product<T: Real>(spec: &LieAlgebraSpec<T>, factors: &[&DMatrix<T>]) -> Result<CartanTriple<T>> {
    let n = spec.ambient_dim();
    match spec.family() {
        Family::SlReal(_) => {
            let mut q = DMatrix::<T>::identity(n, n);
            let mut t = DMatrix::<T>::identity(n, n);
            for g in factors {
                let qr = (*g * &q).qr();
                q = qr.q();
                t = qr.r() * t;
            }
            Ok(sl_from_qt(&q, &t, spec.tol()))
        }
        _ => {
            let g = factors.iter().fold(DMatrix::<T>::identity(n, n), |acc, f| *f * acc);
            decompose_unchecked(spec, &g)
        }
    }
}

fn sl_from_qt<T: Real>(q: &DMatrix<T>, t: &DMatrix<T>, tol: T) -> CartanTriple<T> {
    let d = t.nrows();
    // t = V Σ Uᵀ from the Jacobi SVD tᵀ = U Σ Vᵀ.
    let (u, s, v) = jacobi_svd(&t.transpose());
    let mut theta = q * v;
    let mut theta_prime = u.transpose();
    if theta.determinant() < T::zero() {
        let last = d - 1;
        theta.column_mut(last).neg_mut();
        theta_prime.row_mut(last).neg_mut();
    }
    let logs: Vec<T> = s.iter().map(|x| x.ln()).collect();
    let non_unique = logs.windows(2).any(|w| (w[0] - w[1]).abs() <= tol);
    let kappa = DMatrix::from_diagonal(&DVector::from_vec(logs.clone()));
    CartanTriple { theta, kappa, theta_prime, log_singular_values: logs, non_unique }
}

/// Boost generator along the last spatial axis.
fn boost<T: Real>(p: usize, t: T) -> DMatrix<T> {
    let mut a = DMatrix::identity(p + 1, p + 1);
    a[(p - 1, p - 1)] = t.cosh();
    a[(p, p)] = t.cosh();
    a[(p - 1, p)] = t.sinh();
    a[(p, p - 1)] = t.sinh();
    a
}

fn so_p1_kak<T: Real>(g: &DMatrix<T>, p: usize, tol: T) -> CartanTriple<T> {
    let nn = p + 1;
    // Move into the component with g_NN > 0 by an element of K.
    let mut s = DMatrix::<T>::identity(nn, nn);
    if g[(p, p)] < T::zero() {
        s[(p - 1, p - 1)] = -T::one();
        s[(p, p)] = -T::one();
    }
    let gp = &s * g;
    let x = gp.view((0, p), (p, 1)).into_owned();
    let r = x.norm();
    let t = r.asinh();
    let mut k1 = DMatrix::<T>::identity(nn, nn);
    let non_unique = t <= tol;
    if !non_unique {
        let u = x / r;
        let mut v = -u;
        v[p - 1] += T::one();
        let vn = v.norm();
        if vn > T::default_epsilon() {
            v /= vn;
            // Householder swapping e_{p-1} and u, composed with a reflection of
            // e_0 to land in SO(p).
            let mut h = DMatrix::<T>::identity(p, p) - (&v * v.transpose()) * T::lit(2.0);
            h.column_mut(0).neg_mut();
            k1.view_mut((0, 0), (p, p)).copy_from(&h);
        }
    }
    let theta = &s * &k1;
    let theta_prime = boost(p, -t) * k1.transpose() * gp;
    let mut kappa = DMatrix::zeros(nn, nn);
    kappa[(p - 1, p)] = t;
    kappa[(p, p - 1)] = t;
    let mut logs = vec![T::zero(); nn];
    logs[0] = t;
    logs[nn - 1] = -t;
    CartanTriple { theta, kappa, theta_prime, log_singular_values: logs, non_unique }
}

/// Finitely supported probability measure on the group.
#[derive(Clone, Debug)]
pub struct WalkMeasure {
    atoms: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl WalkMeasure {
    pub fn new(spec: &LieAlgebraSpec<f64>, atoms: Vec<DMatrix<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidParameter("atoms and weights must be non-empty and of equal length".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights must be a probability vector (sum {total})")));
        }
        for a in &atoms {
            spec.check_group(a)?;
        }
        let sampler = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self { atoms, weights, sampler })
    }

    pub fn uniform(spec: &LieAlgebraSpec<f64>, atoms: Vec<DMatrix<f64>>) -> Result<Self> {
        let w = vec![1.0 / atoms.len() as f64; atoms.len()];
        Self::new(spec, atoms, w)
    }

    pub fn dirac(spec: &LieAlgebraSpec<f64>, g: DMatrix<f64>) -> Result<Self> {
        Self::new(spec, vec![g], vec![1.0])
    }

    /// Atoms together with their inverses, uniformly weighted.
    pub fn symmetric(spec: &LieAlgebraSpec<f64>, gens: &[DMatrix<f64>]) -> Result<Self> {
        let atoms = gens.iter().flat_map(|g| [g.clone(), spec.group_inverse(g)]).collect();
        Self::uniform(spec, atoms)
    }

    pub fn atoms(&self) -> &[DMatrix<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices of `n` i.i.d. steps, first step first.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.sampler.sample(rng)).collect()
    }
}

/// `g_n ⋯ g_1` with `g_k` i.i.d. from `μ`.
pub fn sample_walk(mu: &WalkMeasure, n: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::rng(seed);
    let d = mu.atoms[0].nrows();
    mu.sample_indices(n, &mut r).into_iter().fold(DMatrix::identity(d, d), |acc, i| &mu.atoms[i] * acc)
}

/// Cartan decomposition of one walk sample, computed stably.
pub fn sample_walk_kak(spec: &LieAlgebraSpec<f64>, mu: &WalkMeasure, n: usize, seed: u64) -> Result<CartanTriple<f64>> {
    let mut r = rng::rng(seed);
    let idx = mu.sample_indices(n, &mut r);
    let factors: Vec<&DMatrix<f64>> = idx.iter().map(|&i| &mu.atoms[i]).collect();
    cartan_decompose_product(spec, &factors)
}

/// Eigenvalues of `ad(κ)` for `κ ∈ 𝔞`, with multiplicity, descending.
pub fn ad_spectrum(spec: &LieAlgebraSpec<f64>, kappa: &DMatrix<f64>) -> Vec<f64> {
    let h = spec.cartan_coords(kappa);
    let rd = spec.roots();
    let mut out: Vec<f64> = rd
        .roots
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.eval(&h), r.multiplicity))
        .chain(std::iter::repeat_n(0.0, rd.centralizer.dim()))
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Clustered spectrum of `ad(κ̂_μ)`.
#[derive(Clone, Debug)]
pub struct LyapunovData {
    pub lambdas: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub kappa_mu_hat: DMatrix<f64>,
    /// Standard error of each clustered value across trials.
    pub lambda_se: Vec<f64>,
    /// Some gap between clusters is below twice the estimation noise.
    pub ambiguous: bool,
    pub n_used: usize,
    pub trials_used: usize,
}

impl LyapunovData {
    /// `Σ λ_i j_i`.
    pub fn weighted_sum(&self) -> f64 {
        self.lambdas.iter().zip(&self.multiplicities).map(|(l, &j)| l * j as f64).sum()
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn estimate_lyapunov(
    spec: &LieAlgebraSpec<f64>,
    mu: &WalkMeasure,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovData> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter("n and trials must be positive".into()));
    }
    let kappas: Vec<DMatrix<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| sample_walk_kak(spec, mu, n, rng::derive(seed, t)).map(|k| k.kappa / n as f64))
        .collect::<Result<_>>()?;
    let d = spec.ambient_dim();
    let kappa_mu_hat = kappas.iter().fold(DMatrix::zeros(d, d), |acc, k| acc + k) / trials as f64;
    let spectra: Vec<Vec<f64>> = kappas.iter().map(|k| ad_spectrum(spec, k)).collect();
    let spectrum = ad_spectrum(spec, &kappa_mu_hat);
    let dim = spectrum.len();
    let noise = (0..dim)
        .map(|i| mean_se(&spectra.iter().map(|s| s[i]).collect::<Vec<_>>()).1)
        .fold(0.0, f64::max);
    let lambda1 = spectrum[0];
    let merge = (0.05 * lambda1).max(3.0 * noise);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..dim {
        match groups.last_mut() {
            Some(g) if spectrum[*g.last().expect("nonempty")] - spectrum[i] < merge => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut lambdas = Vec::new();
    let mut multiplicities = Vec::new();
    let mut lambda_se = Vec::new();
    for g in &groups {
        lambdas.push(g.iter().map(|&i| spectrum[i]).sum::<f64>() / g.len() as f64);
        multiplicities.push(g.len());
        let per_trial: Vec<f64> = spectra.iter().map(|s| g.iter().map(|&i| s[i]).sum::<f64>() / g.len() as f64).collect();
        lambda_se.push(mean_se(&per_trial).1);
    }
    let ambiguous = lambdas.windows(2).any(|w| w[0] - w[1] < 2.0 * noise);
    if ambiguous {
        log::warn!("Lyapunov clusters closer than twice the estimation noise ({noise:.3e})");
    }
    Ok(LyapunovData { lambdas, multiplicities, kappa_mu_hat, lambda_se, ambiguous, n_used: n, trials_used: trials })
}

/// The flags `V_i = ⊕{𝔤_α : α(κ̂) ≥ λ_i}` and `W_i = ⊕{𝔤_α : α(κ̂) ≤ λ_{m+2−i}}`.
pub fn lyapunov_flags(spec: &LieAlgebraSpec<f64>, lyap: &LyapunovData) -> Result<(Flag<f64>, Flag<f64>)> {
    let h = spec.cartan_coords(&lyap.kappa_mu_hat);
    let rd = spec.roots();
    let nearest = |x: f64| {
        (0..lyap.lambdas.len())
            .min_by(|&a, &b| (lyap.lambdas[a] - x).abs().total_cmp(&(lyap.lambdas[b] - x).abs()))
            .expect("at least one cluster")
    };
    let m1 = lyap.lambdas.len();
    let mut pieces: Vec<Subspace<f64>> = vec![Subspace::zero(spec.algebra_dim()); m1];
    for r in &rd.roots {
        let c = nearest(r.eval(&h));
        pieces[c] = sum(&pieces[c], &r.root_space)?;
    }
    let c0 = nearest(0.0);
    pieces[c0] = sum(&pieces[c0], &rd.centralizer)?;
    let dims: Vec<usize> = pieces.iter().map(|p| p.dim()).collect();
    if dims != lyap.multiplicities {
        let gap = lyap.lambdas.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        let noise = lyap.lambda_se.iter().copied().fold(0.0, f64::max);
        return Err(Error::ClusterAmbiguity { gap, noise });
    }
    let mut v = Vec::with_capacity(m1);
    let mut w = Vec::with_capacity(m1);
    let (mut acc_v, mut acc_w) = (Subspace::zero(spec.algebra_dim()), Subspace::zero(spec.algebra_dim()));
    for i in 0..m1 {
        acc_v = sum(&acc_v, &pieces[i])?;
        acc_w = sum(&acc_w, &pieces[m1 - 1 - i])?;
        v.push(acc_v.clone());
        w.push(acc_w.clone());
    }
    Ok((Flag::new(v)?, Flag::new(w)?))
}

/// Per-trial comparison of `log σ(Ad(g))` with `n·λ_i`.
#[derive(Clone, Debug)]
pub struct BoxReport {
    /// `trials` rows of `algebra_dim` log singular values of `Ad(g)`, descending.
    pub log_singular_values: Vec<Vec<f64>>,
    pub in_band: Vec<bool>,
    pub fraction: f64,
}

/// Singular values of `Ad(g)` are `exp α(κ(g))` over roots with multiplicity and
/// `1` on the centralizer, since `Ad(θ)` is orthogonal for `θ ∈ K`.
pub fn box_model_check(
    spec: &LieAlgebraSpec<f64>,
    mu: &WalkMeasure,
    lyap: &LyapunovData,
    n: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<BoxReport> {
    if n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidParameter("n ≥ 1 and ε > 0 required".into()));
    }
    let expected: Vec<f64> = lyap
        .lambdas
        .iter()
        .zip(&lyap.multiplicities)
        .flat_map(|(&l, &j)| std::iter::repeat_n(l * n as f64, j))
        .collect();
    let rows: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| sample_walk_kak(spec, mu, n, rng::derive(seed, t)).map(|k| ad_spectrum(spec, &k.kappa)))
        .collect::<Result<_>>()?;
    let band = eps * n as f64;
    let in_band: Vec<bool> =
        rows.iter().map(|r| r.iter().zip(&expected).all(|(a, b)| (a - b).abs() <= band)).collect();
    let fraction = in_band.iter().filter(|&&b| b).count() as f64 / trials.max(1) as f64;
    Ok(BoxReport { log_singular_values: rows, in_band, fraction })
}

/// Parameters shared by the flag probes.
#[derive(Clone, Debug)]
pub struct ProbeSetup<'a> {
    pub spec: &'a LieAlgebraSpec<f64>,
    pub mu: &'a WalkMeasure,
    pub lyap: &'a LyapunovData,
    pub n: usize,
    /// 1-based flag index.
    pub i: usize,
    pub trials: usize,
    pub seed: u64,
}

impl ProbeSetup<'_> {
    fn flag_space(&self) -> Result<Subspace<f64>> {
        let (v, _) = lyapunov_flags(self.spec, self.lyap)?;
        if self.i == 0 || self.i >= v.len() {
            return Err(Error::InvalidParameter(format!("flag index must lie in 1..{}", v.len() - 1)));
        }
        Ok(v.spaces()[self.i - 1].clone())
    }

    /// `Ad(θ_g)V_i` for each trial.
    fn rotated(&self, vi: &Subspace<f64>) -> Result<Vec<Subspace<f64>>> {
        (0..self.trials as u64)
            .into_par_iter()
            .map(|t| {
                let k = sample_walk_kak(self.spec, self.mu, self.n, rng::derive(self.seed, t))?;
                Ok(vi.image(&self.spec.adjoint_unchecked(&k.theta)))
            })
            .collect()
    }
}

/// Threshold below which the sup-angle hypothesis counts as failed.
pub const ANGLE_HYPOTHESIS_EPS: f64 = 1e-3;

/// Empirical `P[angle(Ad(θ_g)V_i, W) ≤ ρ]` on a grid.
pub fn angle_law_probe(setup: &ProbeSetup<'_>, w: &Subspace<f64>, rho_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let vi = setup.flag_space()?;
    let mut r = rng::rng(rng::derive(setup.seed, u64::MAX));
    let sup = (0..256)
        .map(|_| {
            let g = setup.spec.random_group_element(&mut r);
            angle(&vi.image(&setup.spec.adjoint_unchecked(&g)), w)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if sup <= ANGLE_HYPOTHESIS_EPS {
        return Err(Error::HypothesisFail(sup));
    }
    let angles: Vec<f64> =
        setup.rotated(&vi)?.iter().map(|v| angle(v, w)).collect::<Result<_>>()?;
    Ok(rho_grid
        .iter()
        .map(|&rho| (rho, angles.iter().filter(|&&a| a <= rho).count() as f64 / angles.len().max(1) as f64))
        .collect())
}

/// Perturbations of `W` tried per trial in the submodularity probe.
pub const PROBE_PERTURBATIONS: usize = 16;

/// Frequency of `g` with `max_{W′} dim(Ad(θ_g)V_i ∩ W′)/dim W′ < dim V_i/dim 𝔤`.
pub fn probabilistic_submodularity_probe(setup: &ProbeSetup<'_>, w: &Subspace<f64>, rho: f64) -> Result<f64> {
    let dim = setup.spec.algebra_dim();
    if w.dim() == 0 || w.dim() == dim {
        return Err(Error::InvalidParameter("W must be non-zero and proper".into()));
    }
    let vi = setup.flag_space()?;
    if vi.dim() == dim {
        return Err(Error::InvalidParameter("V_i is the whole algebra".into()));
    }
    let rotated = setup.rotated(&vi)?;
    let good = rotated
        .par_iter()
        .enumerate()
        .map(|(t, v)| -> Result<bool> {
            let mut r = rng::rng(rng::derive(rng::derive(setup.seed, t as u64), 1));
            let mut candidates = vec![w.clone()];
            for _ in 0..PROBE_PERTURBATIONS {
                let u = rho * r.random::<f64>();
                candidates.push(perturb(w, u, &mut r));
            }
            for wp in &candidates {
                if intersect_dim(v, wp)? * dim >= vi.dim() * wp.dim() {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(good.iter().filter(|&&g| g).count() as f64 / good.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::build_algebra;
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn sanov(spec: &LieAlgebraSpec<f64>) -> WalkMeasure {
        WalkMeasure::symmetric(spec, &[m2(1.0, 2.0, 0.0, 1.0), m2(1.0, 0.0, 2.0, 1.0)]).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let s = build_algebra::<f64>(Family::SlReal(2)).unwrap();
        let k = cartan_decompose(&s, &m2(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert_relative_eq!(k.log_singular_values[0], 2f64.ln(), epsilon = 1e-14);
        let k = cartan_decompose(&s, &m2(1.0, 1.0, 0.0, 1.0)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((k.log_singular_values[0] - phi.ln()).abs() <= 1e-10);
        let c = 0.3f64.cos();
        let sn = 0.3f64.sin();
        let k = cartan_decompose(&s, &m2(c, -sn, sn, c)).unwrap();
        assert!(k.kappa.norm() < 1e-14);
        assert!(k.non_unique);
    }

    #[test]
    fn reconstruction_and_duality() {
        let mut r = rng::rng(21);
        for fam in [Family::SlReal(2), Family::SlReal(3), Family::SoP1(3), Family::SoP1(7)] {
            let s = build_algebra::<f64>(fam).unwrap();
            for _ in 0..100 {
                let g = s.random_group_element(&mut r);
                let k = cartan_decompose(&s, &g).unwrap();
                assert!((k.reconstruct() - &g).norm() <= 1e-8 * g.norm(), "{fam}");
                assert!(k.log_singular_values.windows(2).all(|w| w[0] >= w[1]));
                let ki = cartan_decompose(&s, &s.group_inverse(&g)).unwrap();
                for (a, b) in k.log_singular_values.iter().zip(ki.log_singular_values.iter().rev()) {
                    assert!((a + b).abs() <= 1e-10);
                }
                s.check_group(&k.theta).unwrap();
            }
        }
    }

    #[test]
    fn so_p1_other_component() {
        let s = build_algebra::<f64>(Family::SoP1(3)).unwrap();
        let mut r = rng::rng(2);
        let g = s.random_group_element(&mut r);
        let flip = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0, 1.0, -1.0]));
        let g2 = &flip * g;
        let k = cartan_decompose(&s, &g2).unwrap();
        assert!((k.reconstruct() - &g2).norm() <= 1e-8 * g2.norm());
    }

    #[test]
    fn walk_basics() {
        let s = build_algebra::<f64>(Family::SlReal(2)).unwrap();
        let mu = sanov(&s);
        assert_eq!(sample_walk(&mu, 0, 3), DMatrix::identity(2, 2));
        let g = m2(2.0, 1.0, 1.0, 1.0);
        let dirac = WalkMeasure::dirac(&s, g.clone()).unwrap();
        let g5 = (0..5).fold(DMatrix::identity(2, 2), |acc, _| &g * acc);
        assert_eq!(sample_walk(&dirac, 5, 0), g5);
        assert!(WalkMeasure::new(&s, vec![g.clone()], vec![0.5]).is_err());
        assert!(WalkMeasure::dirac(&s, m2(2.0, 0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn walk_golden_value() {
        let s = build_algebra::<f64>(Family::SlReal(2)).unwrap();
        let mu = sanov(&s);
        let g = sample_walk(&mu, 12, 42);
        // Oracle: replay the step indices in exact integer arithmetic.
        let atoms: [[i64; 4]; 4] = [[1, 2, 0, 1], [1, -2, 0, 1], [1, 0, 2, 1], [1, 0, -2, 1]];
        let idx = mu.sample_indices(12, &mut rng::rng(42));
        let mut acc = [1i64, 0, 0, 1];
        for i in idx {
            let a = atoms[i];
            acc = [
                a[0] * acc[0] + a[1] * acc[2],
                a[0] * acc[1] + a[1] * acc[3],
                a[2] * acc[0] + a[3] * acc[2],
                a[2] * acc[1] + a[3] * acc[3],
            ];
        }
        let exact: Vec<f64> = acc.iter().map(|&x| x as f64).collect();
        assert_eq!(g.transpose().as_slice(), exact.as_slice());
        assert_eq!(acc, GOLDEN_42, "{acc:?}");
    }

    const GOLDEN_42: [i64; 4] = [25, -34, 14, -19];

    #[test]
    fn stable_product_matches_direct() {
        let s = build_algebra::<f64>(Family::SlReal(3)).unwrap();
        let mut r = rng::rng(30);
        let gs: Vec<DMatrix<f64>> = (0..6).map(|_| s.random_group_element(&mut r)).collect();
        let refs: Vec<&DMatrix<f64>> = gs.iter().collect();
        let direct = gs.iter().fold(DMatrix::identity(3, 3), |acc, g| g * acc);
        let a = cartan_decompose_product(&s, &refs).unwrap();
        let b = cartan_decompose(&s, &direct).unwrap();
        for (x, y) in a.log_singular_values.iter().zip(&b.log_singular_values) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((a.reconstruct() - &direct).norm() <= 1e-8 * direct.norm());
    }

    #[test]
    fn long_products_keep_determinant() {
        let s = build_algebra::<f64>(Family::SlReal(3)).unwrap();
        let mut r = rng::rng(31);
        let gens: Vec<DMatrix<f64>> = (0..2).map(|_| s.random_group_element(&mut r)).collect();
        let mu = WalkMeasure::symmetric(&s, &gens).unwrap();
        let k = sample_walk_kak(&s, &mu, 300, 5).unwrap();
        let total: f64 = k.log_singular_values.iter().sum();
        assert!(total.abs() < 1e-8 * k.log_singular_values[0].abs().max(1.0), "sum {total}");
    }

    #[test]
    fn deterministic_lyapunov() {
        let s = build_algebra::<f64>(Family::SlReal(2)).unwrap();
        let mu = WalkMeasure::dirac(&s, m2(2.0, 0.0, 0.0, 0.5)).unwrap();
        let l = estimate_lyapunov(&s, &mu, 7, 3, 1).unwrap();
        let t = 2f64.ln();
        assert_eq!(l.multiplicities, vec![1, 1, 1]);
        for (a, b) in l.lambdas.iter().zip([2.0 * t, 0.0, -2.0 * t]) {
            assert!((a - b).abs() <= 1e-9);
        }
        let (v, w) = lyapunov_flags(&s, &l).unwrap();
        assert_eq!(v.jumps(), &[1, 1, 1]);
        let e = Subspace::coordinate(3, &[0]);
        let f = Subspace::coordinate(3, &[2]);
        assert!(crate::grassmannian::grass_dist(&v.spaces()[0], &e).unwrap() < 1e-9);
        assert!(crate::grassmannian::grass_dist(&w.spaces()[0], &f).unwrap() < 1e-9);
        assert!(crate::grassmannian::grass_dist(&w.spaces()[0], &v.spaces()[1].orth_complement()).unwrap() < 1e-9);
        let rep = box_model_check(&s, &mu, &l, 5, 0.01, 4, 0).unwrap();
        assert_eq!(rep.fraction, 1.0);
        assert_eq!(rep.log_singular_values.len(), 4);
        assert!(rep.log_singular_values.iter().all(|r| r.len() == 3));
    }

    #[test]
    fn deterministic_lyapunov_is_n_independent() {
        let s = build_algebra::<f64>(Family::SlReal(3)).unwrap();
        let g = DMatrix::from_diagonal(&DVector::from_row_slice(&[3.0, 0.5, 2.0 / 3.0]));
        let mu = WalkMeasure::dirac(&s, g).unwrap();
        let a = estimate_lyapunov(&s, &mu, 3, 1, 0).unwrap();
        let b = estimate_lyapunov(&s, &mu, 40, 1, 0).unwrap();
        assert!((a.kappa_mu_hat - b.kappa_mu_hat).norm() <= 1e-9);
    }

    #[test]
    fn so31_multiplicities() {
        let s = build_algebra::<f64>(Family::SoP1(3)).unwrap();
        let mut r = rng::rng(4);
        let gens: Vec<DMatrix<f64>> = (0..2).map(|_| s.random_group_element(&mut r)).collect();
        let mu = WalkMeasure::symmetric(&s, &gens).unwrap();
        let l = estimate_lyapunov(&s, &mu, 60, 40, 9).unwrap();
        assert_eq!(l.multiplicities, vec![2, 2, 2]);
        let (v, w) = lyapunov_flags(&s, &l).unwrap();
        assert_eq!(v.spaces()[0].dim(), 2);
        for i in 0..v.len() - 1 {
            let a = &w.spaces()[i];
            let b = v.spaces()[v.len() - 2 - i].orth_complement();
            assert!(crate::grassmannian::grass_dist(a, &b).unwrap() < 1e-8);
        }
    }

    #[test]
    fn sanov_walk_symmetric_spectrum() {
        let s = build_algebra::<f64>(Family::SlReal(2)).unwrap();
        let mu = sanov(&s);
        let l = estimate_lyapunov(&s, &mu, 200, 200, 42).unwrap();
        assert!(l.lambdas[0] > 0.0);
        assert!((l.lambdas[0] + l.lambdas[2]).abs() <= 0.05 * l.lambdas[0]);
    }

    #[test]
    fn angle_law_monotone() {
        let s = build_algebra::<f64>(Family::SlReal(2)).unwrap();
        let mu = sanov(&s);
        let l = estimate_lyapunov(&s, &mu, 100, 100, 1).unwrap();
        let setup = ProbeSetup { spec: &s, mu: &mu, lyap: &l, n: 100, i: 1, trials: 2000, seed: 3 };
        let f = Subspace::coordinate(3, &[2]);
        let grid = [0.001, 0.01, 0.1, 0.5, 1.0];
        let rows = angle_law_probe(&setup, &f, &grid).unwrap();
        assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(rows.last().unwrap().1, 1.0);
    }

    #[test]
    fn submodularity_probe_sl3() {
        let s = build_algebra::<f64>(Family::SlReal(3)).unwrap();
        let mut r = rng::rng(8);
        let gens: Vec<DMatrix<f64>> = (0..2).map(|_| s.random_group_element(&mut r)).collect();
        let mu = WalkMeasure::symmetric(&s, &gens).unwrap();
        let l = estimate_lyapunov(&s, &mu, 30, 60, 2).unwrap();
        let setup = ProbeSetup { spec: &s, mu: &mu, lyap: &l, n: 30, i: 1, trials: 100, seed: 5 };
        let b = crate::submodular::borel_sl3(&s);
        let f_small = probabilistic_submodularity_probe(&setup, &b, 1e-3).unwrap();
        let f_big = probabilistic_submodularity_probe(&setup, &b, 0.5).unwrap();
        assert!(f_small >= 0.95);
        assert!(f_big <= f_small);
        assert!(probabilistic_submodularity_probe(&setup, &Subspace::whole(8), 0.1).is_err());
    }
}
