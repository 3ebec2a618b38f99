//! Small-instance checks of the visual inequality
//! `N_δ(A) ≤ C δ^{−β} α^{−d} Π_j N_δ(π_{L_j} A)^{q_j}` for perceptive data.

use rand::Rng;

use super::dyadic::{covering_number, projected_covering_number, PointCloud};
use crate::error::{Error, Result};
use crate::grassmannian::{intersect_dim, perturb, sum, Subspace};
use crate::rng;

/// Projections `π_{L_j}` with exponents `q_j`, `Σ q_j dim L_j = d`.
#[derive(Clone, Debug)]
pub struct ProjectionDatum {
    spaces: Vec<Subspace<f64>>,
    weights: Vec<f64>,
    perps: Vec<Subspace<f64>>,
}

impl ProjectionDatum {
    pub fn new(spaces: Vec<Subspace<f64>>, weights: Vec<f64>) -> Result<Self> {
        let d = spaces.first().ok_or_else(|| Error::InvalidParameter("empty datum".into()))?.ambient_dim();
        if spaces.len() != weights.len() {
            return Err(Error::InvalidParameter("one weight per subspace".into()));
        }
        if spaces.iter().any(|l| l.ambient_dim() != d || l.dim() == 0) || weights.iter().any(|&q| !(q > 0.0)) {
            return Err(Error::InvalidParameter("subspaces must be non-zero and weights positive".into()));
        }
        let total: f64 = spaces.iter().zip(&weights).map(|(l, q)| q * l.dim() as f64).sum();
        if (total - d as f64).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("Σ q_j dim L_j = {total}, expected {d}")));
        }
        let perps = spaces.iter().map(|l| l.orth_complement()).collect();
        Ok(Self { spaces, weights, perps })
    }

    /// `J` copies of `d/(kJ)` on `k`-planes.
    pub fn equal_weights(spaces: Vec<Subspace<f64>>) -> Result<Self> {
        let d = spaces.first().map_or(0, |l| l.ambient_dim()) as f64;
        let w = spaces.iter().map(|l| d / (l.dim() as f64 * spaces.len() as f64)).collect();
        Self::new(spaces, w)
    }

    pub fn ambient_dim(&self) -> usize {
        self.spaces[0].ambient_dim()
    }

    pub fn spaces(&self) -> &[Subspace<f64>] {
        &self.spaces
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Explicit constant `e^{d(1+Σq)} (1+Σq)^{β/2} Π q_j^{−q_j dim L_j/2}`.
    pub fn constant(&self, beta: f64) -> f64 {
        let d = self.ambient_dim() as f64;
        let sq: f64 = self.weights.iter().sum();
        let log = d * (1.0 + sq)
            + 0.5 * beta * (1.0 + sq).ln()
            - self.spaces.iter().zip(&self.weights).map(|(l, q)| 0.5 * q * l.dim() as f64 * q.ln()).sum::<f64>();
        log.exp()
    }

    /// Both sides of the perceptivity inequality at `W`, maximising over `W`
    /// and `perturbations` random elements of `B_α(W)`.
    fn perceptivity_at<R: Rng + ?Sized>(
        &self,
        w: &Subspace<f64>,
        alpha: f64,
        beta: f64,
        perturbations: usize,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        let d = self.ambient_dim() as f64;
        let k = w.dim() as f64;
        let mut candidates = vec![w.clone()];
        for _ in 0..perturbations {
            let u = (alpha * rng.random::<f64>()).min(1.0).asin();
            candidates.push(perturb(w, u, rng));
        }
        let mut lhs = 0.0;
        for (perp, q) in self.perps.iter().zip(&self.weights) {
            let best = candidates.iter().map(|c| intersect_dim(perp, c)).collect::<Result<Vec<_>>>()?;
            lhs += q * *best.iter().max().expect("non-empty") as f64 / k;
        }
        let rhs = beta / k + self.perps.iter().zip(&self.weights).map(|(p, q)| q * p.dim() as f64 / d).sum::<f64>();
        Ok((lhs, rhs))
    }

    /// Sampled perceptivity test. Candidate `W` are the whole space, each `L_j`,
    /// each `L_j^⊥`, pairwise sums of the `L_j^⊥`, and `samples` random subspaces
    /// of every dimension. Returns the most violated `(lhs, rhs)`.
    pub fn check_perceptive(&self, alpha: f64, beta: f64, samples: usize, seed: u64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= 1.0) || !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("need α ∈ (0, 1], β ≥ 0; got {alpha}, {beta}")));
        }
        let mut r = rng::rng(seed);
        let d = self.ambient_dim();
        let mut ws: Vec<Subspace<f64>> = vec![Subspace::whole(d)];
        ws.extend(self.spaces.iter().cloned());
        ws.extend(self.perps.iter().filter(|p| p.dim() > 0).cloned());
        for (i, a) in self.perps.iter().enumerate() {
            for b in &self.perps[i + 1..] {
                ws.push(sum(a, b)?);
            }
        }
        for k in 1..=d {
            for _ in 0..samples {
                ws.push(Subspace::random(d, k, &mut r));
            }
        }
        let mut worst: Option<(f64, f64)> = None;
        for w in ws.iter().filter(|w| w.dim() > 0) {
            let (lhs, rhs) = self.perceptivity_at(w, alpha, beta, 4, &mut r)?;
            if lhs > rhs + 1e-12 && worst.is_none_or(|(l, r)| lhs - rhs > l - r) {
                worst = Some((lhs, rhs));
            }
        }
        match worst {
            Some((lhs, rhs)) => Err(Error::NotPerceptive { lhs, rhs }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisualReport {
    /// `N̂_δ(A)`.
    pub lhs: usize,
    pub rhs: f64,
    pub holds: bool,
    pub constant: f64,
    /// `N̂_δ(π_{L_j} A)`.
    pub projected: Vec<usize>,
}

/// Checks perceptivity by sampling, then compares both sides with dyadic
/// covering numbers. The constant is ours, not a certified one.
pub fn visual_inequality_check(
    a: &PointCloud,
    datum: &ProjectionDatum,
    delta: f64,
    alpha: f64,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<VisualReport> {
    if a.dim() != datum.ambient_dim() {
        return Err(Error::AmbientMismatch(a.dim(), datum.ambient_dim()));
    }
    datum.check_perceptive(alpha, beta, samples, seed)?;
    let lhs = covering_number(a, delta)?;
    let projected =
        datum.spaces.iter().map(|l| projected_covering_number(a, l, delta)).collect::<Result<Vec<usize>>>()?;
    let constant = datum.constant(beta);
    let d = datum.ambient_dim() as i32;
    let rhs = constant
        * delta.powf(-beta)
        * alpha.powi(-d)
        * projected.iter().zip(&datum.weights).map(|(&n, q)| (n as f64).powf(*q)).product::<f64>();
    Ok(VisualReport { lhs, rhs, holds: lhs as f64 <= rhs, constant, projected })
}
