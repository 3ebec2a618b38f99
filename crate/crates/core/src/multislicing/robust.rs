//! Greedy search for a decomposition `ν = ν₁ + ν₂` with `ν₁(B) ≤ leb(B)^α` on a
//! family of balls and `ν₂` of small mass.
//!
//! Masses are exact rationals. Ball bounds `leb(B)^α` are evaluated in `f64`
//! and then compared exactly as the rational value of that float.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::dyadic::PointCloud;
use crate::error::{Error, Result};

/// Open balls `B(x_i, r)` centred at cloud points, for each radius.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily {
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustWitness {
    /// Points carrying `ν₁`.
    pub nu1_indices: Vec<usize>,
    /// Points moved to `ν₂`.
    pub nu2_indices: Vec<usize>,
    pub alpha: f64,
    pub tau: f64,
    pub balls: BallFamily,
    /// `ν₂(X)`, rounded.
    pub nu2_mass: f64,
}

/// Weighted point cloud with exact non-negative masses.
#[derive(Clone, Debug)]
pub struct WeightedCloud {
    pub cloud: PointCloud,
    pub masses: Vec<BigRational>,
}

impl WeightedCloud {
    pub fn new(cloud: PointCloud, masses: Vec<BigRational>) -> Result<Self> {
        if masses.len() != cloud.len() {
            return Err(Error::InvalidParameter(format!("{} masses for {} points", masses.len(), cloud.len())));
        }
        if masses.iter().any(|m| *m < BigRational::zero()) {
            return Err(Error::InvalidParameter("negative mass".into()));
        }
        Ok(Self { cloud, masses })
    }

    /// Equal masses `1/|A|`.
    pub fn uniform(cloud: PointCloud) -> Self {
        let n = cloud.len().max(1);
        let m = BigRational::new(BigInt::from(1), BigInt::from(n));
        let masses = vec![m; cloud.len()];
        Self { cloud, masses }
    }
}

/// Volume of the Euclidean unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_d = ω_{d−2}·2π/d
    let mut w = [1.0, 2.0];
    for k in 2..=d {
        w[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    w[d % 2]
}

fn ball_bound(d: usize, r: f64, alpha: f64) -> BigRational {
    let leb = unit_ball_volume(d) * r.powi(d as i32);
    BigRational::from_float(leb.powf(alpha)).expect("finite bound")
}

/// For each (radius, centre) the indices of points in the open ball.
fn ball_members(a: &PointCloud, radii: &[f64]) -> Vec<Vec<usize>> {
    let pts = a.points();
    radii
        .iter()
        .flat_map(|&r| {
            pts.iter().map(move |c| (0..pts.len()).filter(|&j| (&pts[j] - c).norm() < r).collect::<Vec<_>>())
        })
        .collect()
}

fn check_params(alpha: f64, radii: &[f64], tau: f64) -> Result<()> {
    if !(alpha >= 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("α = {alpha}, τ = {tau} must be non-negative")));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    Ok(())
}

/// Repeatedly moves the heaviest `ν₁` point of the most violated ball into `ν₂`.
/// Fails with [`Error::Infeasible`] once `ν₂(X) > τ`; the partial witness is attached.
pub fn robust_decompose(nu: &WeightedCloud, alpha: f64, radii: &[f64], tau: f64) -> Result<RobustWitness> {
    check_params(alpha, radii, tau)?;
    let n = nu.cloud.len();
    let d = nu.cloud.dim();
    let members = ball_members(&nu.cloud, radii);
    let bounds: Vec<BigRational> = radii.iter().map(|&r| ball_bound(d, r, alpha)).collect();
    let tau_q = BigRational::from_float(tau).expect("finite τ");
    let mut in_nu1 = vec![true; n];
    let mut nu2 = BigRational::zero();
    let witness = |in_nu1: &[bool], nu2: &BigRational| RobustWitness {
        nu1_indices: (0..n).filter(|&i| in_nu1[i]).collect(),
        nu2_indices: (0..n).filter(|&i| !in_nu1[i]).collect(),
        alpha,
        tau,
        balls: BallFamily { radii: radii.to_vec() },
        nu2_mass: nu2.to_f64().unwrap_or(f64::NAN),
    };
    loop {
        let mut worst: Option<(BigRational, usize)> = None;
        for (b, ms) in members.iter().enumerate() {
            let mass: BigRational = ms.iter().filter(|&&j| in_nu1[j]).map(|&j| &nu.masses[j]).sum();
            let excess = mass - &bounds[b / n];
            if excess > BigRational::zero() && worst.as_ref().is_none_or(|(e, _)| excess > *e) {
                worst = Some((excess, b));
            }
        }
        let Some((_, b)) = worst else {
            return Ok(witness(&in_nu1, &nu2));
        };
        let heaviest = members[b]
            .iter()
            .copied()
            .filter(|&j| in_nu1[j])
            .max_by(|&i, &j| nu.masses[i].cmp(&nu.masses[j]).then(j.cmp(&i)))
            .expect("violated ball has ν₁ mass");
        in_nu1[heaviest] = false;
        nu2 += &nu.masses[heaviest];
        if nu2 > tau_q {
            return Err(Error::Infeasible(Box::new(witness(&in_nu1, &nu2))));
        }
    }
}

/// Independent re-check of a witness in exact arithmetic.
pub fn verify_witness(nu: &WeightedCloud, w: &RobustWitness) -> bool {
    let n = nu.cloud.len();
    let mut seen = vec![0u8; n];
    for &i in w.nu1_indices.iter().chain(&w.nu2_indices) {
        if i >= n {
            return false;
        }
        seen[i] += 1;
    }
    if seen.iter().any(|&s| s != 1) {
        return false;
    }
    let nu2: BigRational = w.nu2_indices.iter().map(|&i| &nu.masses[i]).sum();
    if nu2 > BigRational::from_float(w.tau).expect("finite τ") {
        return false;
    }
    let pts = nu.cloud.points();
    let d = nu.cloud.dim();
    w.balls.radii.iter().all(|&r| {
        let bound = ball_bound(d, r, w.alpha);
        pts.iter().all(|c| {
            let mass: BigRational =
                w.nu1_indices.iter().filter(|&&j| (&pts[j] - c).norm() < r).map(|&j| &nu.masses[j]).sum();
            mass <= bound
        })
    })
}
