//! The modular surface `X = SL(2,ℝ)/SL(2,ℤ)`.
//!
//! A point is a unimodular lattice `rep·ℤ²`; the right `SL(2,ℤ)` action changes
//! the basis. The base point in the upper half-plane is `z = rep⁻¹·i`, so that
//! `Im z = 1/|b₁|²` and `Re z = −⟨b₁,b₂⟩/|b₁|²` for the columns `b₁, b₂` of `rep`.
//! A Gauss–Lagrange reduced basis therefore puts `z` in the standard fundamental
//! domain `{|Re z| ≤ ½, |z| ≥ 1}`. The frame angle is the direction of `b₁`
//! modulo `π`.
//!
//! Random walks act on the left, `rep ↦ g·rep`, and reduce after every step.

use std::f64::consts::{FRAC_PI_3, PI};
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rayon::prelude::*;

use crate::cartan::WalkMeasure;
use crate::error::{Error, Result};
use crate::rng;

const DET_TOL: f64 = 1e-9;
/// Width of the band near the boundary of the domain where ties are resolved.
const BOUNDARY_BAND: f64 = 1e-9;
const ANGLE_TIE: f64 = 1e-9;

/// Reduced representative of a point of `X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticePoint {
    rep: Matrix2<f64>,
    frame_angle: f64,
}

impl LatticePoint {
    /// The standard lattice `ℤ²`.
    pub fn identity() -> Self {
        Self { rep: Matrix2::identity(), frame_angle: 0.0 }
    }

    pub fn rep(&self) -> &Matrix2<f64> {
        &self.rep
    }

    /// Direction of the shortest basis vector, in `[0, π)`.
    pub fn frame_angle(&self) -> f64 {
        self.frame_angle
    }

    /// `(Re z, Im z)` for `z = rep⁻¹·i`.
    pub fn base_point(&self) -> (f64, f64) {
        base_point(&self.rep)
    }
}

fn base_point(rep: &Matrix2<f64>) -> (f64, f64) {
    let (b1, b2) = (rep.column(0), rep.column(1));
    let n1 = b1.norm_squared();
    (-b1.dot(&b2) / n1, rep.determinant() / n1)
}

fn frame_angle(rep: &Matrix2<f64>) -> f64 {
    let t = rep[(1, 0)].atan2(rep[(0, 0)]).rem_euclid(PI);
    if t >= PI { 0.0 } else { t }
}

/// Negates `rep` unless its first non-zero entry (row-major) is positive.
fn canonical_sign(rep: Matrix2<f64>) -> Matrix2<f64> {
    let first = [rep[(0, 0)], rep[(0, 1)], rep[(1, 0)], rep[(1, 1)]].into_iter().find(|&v| v != 0.0);
    if first.is_some_and(|v| v < 0.0) { -rep } else { rep }
}

/// `⟨b₁,b₂⟩/|b₁|²`, `|b₁|²`, `|b₂|²`.
fn gram(rep: &Matrix2<f64>) -> (f64, f64, f64) {
    let (b1, b2) = (rep.column(0), rep.column(1));
    let n1 = b1.norm_squared();
    (b1.dot(&b2) / n1, n1, b2.norm_squared())
}

/// Slack in the reduction conditions; the Gauss loop and the boundary
/// candidates use the same test, which makes reduction idempotent.
const REDUCED_TOL: f64 = 1e-11;

fn needs_translation(mu: f64) -> bool {
    mu.abs() > 0.5 + REDUCED_TOL
}

fn needs_swap(n1: f64, n2: f64) -> bool {
    n2 < n1 * (1.0 - REDUCED_TOL)
}

fn is_reduced(rep: &Matrix2<f64>) -> bool {
    let (mu, n1, n2) = gram(rep);
    !needs_translation(mu) && !needs_swap(n1, n2)
}

/// Gauss–Lagrange reduction of the columns by right `SL(2,ℤ)` moves.
fn gauss(mut rep: Matrix2<f64>) -> Matrix2<f64> {
    for _ in 0..10_000 {
        let (mu, n1, n2) = gram(&rep);
        if needs_translation(mu) {
            let b1 = rep.column(0).into_owned();
            rep.column_mut(1).axpy(-mu.round_ties_even(), &b1, 1.0);
        } else if needs_swap(n1, n2) {
            // rep·S with S = [[0,−1],[1,0]]: (b₁, b₂) ↦ (b₂, −b₁).
            rep = Matrix2::new(rep[(0, 1)], -rep[(0, 0)], rep[(1, 1)], -rep[(1, 0)]);
        } else {
            break;
        }
    }
    rep
}

/// Words of length at most 3 in `T, T⁻¹, S`, identity first, distinct up to sign.
fn short_words() -> &'static [Matrix2<f64>] {
    static WORDS: OnceLock<Vec<Matrix2<f64>>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let gens = [Matrix2::new(1.0, 1.0, 0.0, 1.0), Matrix2::new(1.0, -1.0, 0.0, 1.0), Matrix2::new(0.0, -1.0, 1.0, 0.0)];
        let mut words = vec![Matrix2::identity()];
        let mut frontier = words.clone();
        for _ in 0..3 {
            let mut next = Vec::new();
            for w in &frontier {
                for g in &gens {
                    let c = w * g;
                    if !words.iter().any(|u| *u == c || *u == -c) {
                        words.push(c);
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        words
    })
}

/// Among reduced bases of the same lattice, prefers the smallest frame angle,
/// then the smallest `Re z`, then the earliest word.
fn resolve_boundary(rep: Matrix2<f64>) -> Matrix2<f64> {
    let (mu, n1, n2) = gram(&rep);
    if mu.abs() < 0.5 - BOUNDARY_BAND && n2 > n1 * (1.0 + BOUNDARY_BAND) {
        return rep;
    }
    let mut best = (rep, frame_angle(&rep), -mu);
    for w in &short_words()[1..] {
        let c = canonical_sign(rep * w);
        if !is_reduced(&c) {
            continue;
        }
        let (t, x) = (frame_angle(&c), base_point(&c).0);
        let better = if (t - best.1).abs() > ANGLE_TIE { t < best.1 } else { x < best.2 - 0.25 };
        if better {
            best = (c, t, x);
        }
    }
    best.0
}

fn reduce_unchecked(g: Matrix2<f64>) -> LatticePoint {
    let rep = resolve_boundary(canonical_sign(gauss(g)));
    LatticePoint { rep, frame_angle: frame_angle(&rep) }
}

/// Reduced representative `g·γ` of the lattice `g·ℤ²`.
///
/// Idempotent bit for bit, and right `SL(2,ℤ)`-invariant up to rounding. On the
/// boundary of the domain, ties are broken by frame angle, then by `Re z`.
pub fn reduce(g: &Matrix2<f64>) -> Result<LatticePoint> {
    let det = g.determinant();
    if !g.iter().all(|v| v.is_finite()) || (det - 1.0).abs() > DET_TOL * g.norm_squared().max(1.0) {
        return Err(Error::NotUnimodular(det));
    }
    Ok(reduce_unchecked(normalize(*g)))
}

/// Rescales to determinant 1 once the drift exceeds `1e-12`, so that reduced
/// points are left untouched.
fn normalize(g: Matrix2<f64>) -> Matrix2<f64> {
    let det = g.determinant();
    if (det - 1.0).abs() > 1e-12 { g / det.sqrt() } else { g }
}

/// Length of the shortest non-zero vector of `rep·ℤ²`, by exhaustive search.
///
/// With `λ` this length, the injectivity radius at the point is comparable to
/// `min(1, λ²)`: in the cusp `Im z = 1/λ²` and the closed horocycle through `z`
/// has length `λ²`.
pub fn injectivity_proxy(x: &LatticePoint) -> f64 {
    let rep = &x.rep;
    let mut best = rep.column(0).norm().min(rep.column(1).norm());
    // A vector of length ≤ best has coefficients bounded by ‖rep⁻¹‖_F·best = ‖rep‖_F·best.
    let bound = (rep.norm() * best).ceil() as i64;
    for m in -bound..=bound {
        for n in 0..=bound {
            if n == 0 && m <= 0 {
                continue;
            }
            let v = rep.column(0) * m as f64 + rep.column(1) * n as f64;
            best = best.min(v.norm());
        }
    }
    best
}

fn haar_point<R: Rng + ?Sized>(r: &mut R) -> LatticePoint {
    let y0 = 3f64.sqrt() / 2.0;
    let (x, y) = loop {
        let x = r.random::<f64>() - 0.5;
        let u = 1.0 - r.random::<f64>();
        let y = y0 / u;
        if x * x + y * y >= 1.0 {
            break (x, y);
        }
    };
    let theta = r.random::<f64>() * PI;
    let (s, c) = theta.sin_cos();
    let n = Matrix2::new(1.0, x, 0.0, 1.0);
    let a = Matrix2::new(y.sqrt(), 0.0, 0.0, 1.0 / y.sqrt());
    let k = Matrix2::new(c, s, -s, c);
    let g = n * a * k;
    let inv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]);
    reduce_unchecked(inv)
}

/// `count` Haar-distributed points; sample `j` uses its own derived stream.
///
/// The base point has density `dx dy/y²` on the domain (area `π/3`), drawn by
/// rejection from the strip above `Im z = √3/2`, and the frame angle is uniform.
pub fn haar_sample(count: usize, seed: u64) -> Result<Vec<LatticePoint>> {
    if count == 0 {
        return Err(Error::EmptySample);
    }
    Ok((0..count as u64).into_par_iter().map(|j| haar_point(&mut rng::trial_rng(seed, j))).collect())
}

/// Area of the fundamental domain for `dx dy/y²`.
pub const DOMAIN_AREA: f64 = FRAC_PI_3;

fn atoms2(mu: &WalkMeasure) -> Result<Vec<Matrix2<f64>>> {
    mu.atoms()
        .iter()
        .map(|a: &DMatrix<f64>| {
            if a.shape() != (2, 2) {
                return Err(Error::AmbientMismatch(a.nrows(), 2));
            }
            let m = Matrix2::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
            let det = m.determinant();
            if (det - 1.0).abs() > DET_TOL * m.norm_squared().max(1.0) {
                return Err(Error::NotUnimodular(det));
            }
            Ok(m)
        })
        .collect()
}

/// Samples of `g_n ⋯ g_1·x₀` for every `n` in `n_list`, from the same paths.
/// Path `j` uses its own derived stream, so the result for a given `n` does not
/// depend on the other entries of `n_list`.
pub fn walk_snapshots(
    mu: &WalkMeasure,
    x0: &LatticePoint,
    n_list: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<LatticePoint>>> {
    let atoms = atoms2(mu)?;
    let n_max = n_list.iter().copied().max().unwrap_or(0);
    let paths: Vec<Vec<LatticePoint>> = (0..count as u64)
        .into_par_iter()
        .map(|j| {
            let mut r = rng::trial_rng(seed, j);
            let steps = mu.sample_indices(n_max, &mut r);
            let mut x = *x0;
            let mut out = Vec::with_capacity(n_list.len());
            let mut at = |k: usize, x: &LatticePoint| {
                out.extend(n_list.iter().filter(|&&n| n == k).map(|_| *x));
            };
            at(0, &x);
            for (k, &i) in steps.iter().enumerate() {
                x = reduce_unchecked(normalize(atoms[i] * x.rep));
                at(k + 1, &x);
            }
            // Restore the order of n_list.
            let mut order: Vec<usize> = (0..n_list.len()).collect();
            order.sort_by_key(|&i| n_list[i]);
            let mut sorted = vec![LatticePoint::identity(); n_list.len()];
            for (slot, p) in order.into_iter().zip(out) {
                sorted[slot] = p;
            }
            sorted
        })
        .collect();
    Ok((0..n_list.len()).map(|i| paths.iter().map(|p| p[i]).collect()).collect())
}

/// `count` independent samples of the `n`-step distribution started at `x0`.
pub fn walk_distribution(mu: &WalkMeasure, x0: &LatticePoint, n: usize, count: usize, seed: u64) -> Result<Vec<LatticePoint>> {
    Ok(walk_snapshots(mu, x0, &[n], count, seed)?.pop().expect("one snapshot"))
}

/// `reduce([[1, φ], [0, 1]])` with `φ` the golden ratio: a horocycle point with
/// quadratic-irrational coordinate.
pub fn generic_start() -> LatticePoint {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    reduce_unchecked(Matrix2::new(1.0, phi, 0.0, 1.0))
}

/// Fraction of points whose injectivity proxy is below `r`.
pub fn inj_fraction_below(sample: &[LatticePoint], r: f64) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    sample.iter().filter(|x| injectivity_proxy(x) < r).count() as f64 / sample.len() as f64
}

/// Rows indexed like `samples`, columns like `radii`.
pub fn recurrence_table(samples: &[Vec<LatticePoint>], radii: &[f64]) -> Vec<Vec<f64>> {
    samples
        .iter()
        .map(|s| {
            let proxies: Vec<f64> = s.iter().map(injectivity_proxy).collect();
            radii
                .iter()
                .map(|&r| proxies.iter().filter(|&&p| p < r).count() as f64 / proxies.len().max(1) as f64)
                .collect()
        })
        .collect()
}

fn mobius(g: &Matrix2<f64>, (x, y): (f64, f64)) -> (f64, f64) {
    // (a z + b)/(c z + d) with z = x + iy.
    let (cr, ci) = (g[(1, 0)] * x + g[(1, 1)], g[(1, 0)] * y);
    let (nr, ni) = (g[(0, 0)] * x + g[(0, 1)], g[(0, 0)] * y);
    let den = cr * cr + ci * ci;
    ((nr * cr + ni * ci) / den, (ni * cr - nr * ci) / den)
}

/// `√2·d_hyp(z, w)`, the distance induced on the upper half-plane by the
/// Killing-normalised metric on `SL(2,ℝ)`.
pub fn distance(z: (f64, f64), w: (f64, f64)) -> f64 {
    let q = ((z.0 - w.0).powi(2) + (z.1 - w.1).powi(2)) / (2.0 * z.1 * w.1);
    std::f64::consts::SQRT_2 * acosh_or_zero(1.0 + q)
}

fn acosh_or_zero(v: f64) -> f64 {
    if v <= 1.0 { 0.0 } else { v.acosh() }
}

/// Images of a base point under the short words, as candidates for the
/// quotient distance.
fn translates(c: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in short_words() {
        let p = mobius(w, c);
        if !out.iter().any(|q| (q.0 - p.0).abs() < 1e-12 && (q.1 - p.1).abs() < 1e-12) {
            out.push(p);
        }
    }
    out
}

/// Distance on the quotient, approximated by the minimum over short words.
fn quotient_distance(translates: &[(f64, f64)], z: (f64, f64)) -> f64 {
    let q = translates
        .iter()
        .map(|c| ((z.0 - c.0).powi(2) + (z.1 - c.1).powi(2)) / (2.0 * z.1 * c.1))
        .fold(f64::INFINITY, f64::min);
    std::f64::consts::SQRT_2 * acosh_or_zero(1.0 + q)
}

#[derive(Clone, Debug)]
enum TestFunction {
    /// `1 − 2·min(1, d(c, z)/r)^β` with `r^β ≥ 2`.
    Bump { translates: Vec<(f64, f64)>, radius: f64 },
    /// `scale·(y^{−s} − mid)`, with oscillation and Lipschitz constant at most 1.
    Cusp { s: f64, scale: f64, mid: f64 },
    /// Half a base-point bump plus half an angular bump around `theta0`.
    Frame { translates: Vec<(f64, f64)>, radius: f64, theta0: f64 },
}

fn bump(t: f64, beta: f64) -> f64 {
    1.0 - 2.0 * t.min(1.0).powf(beta)
}

impl TestFunction {
    fn eval(&self, beta: f64, x: &LatticePoint) -> f64 {
        let z = x.base_point();
        match self {
            Self::Bump { translates, radius } => bump(quotient_distance(translates, z) / radius, beta),
            Self::Cusp { s, scale, mid } => scale * (z.1.powf(-s) - mid),
            Self::Frame { translates, radius, theta0 } => {
                let dt = (x.frame_angle - theta0).rem_euclid(PI);
                let dt = dt.min(PI - dt);
                0.5 * bump(quotient_distance(translates, z) / radius, beta) + 0.5 * bump(dt / radius, beta)
            }
        }
    }

    fn cusp(s: f64) -> Self {
        let y0: f64 = 3f64.sqrt() / 2.0;
        let top = y0.powf(-s);
        // |Δ log y| ≤ d_hyp = d/√2 and |d(y^{−s})/d(log y)| ≤ s·y^{−s}.
        let lip = s * top / std::f64::consts::SQRT_2;
        Self::Cusp { s, scale: 1.0 / top.max(lip), mid: top / 2.0 }
    }
}

/// Fixed, seeded family of test functions with `C^{0,β}` norm at most 1 for
/// the quotient distance (plus angular distance for frame functions).
#[derive(Clone, Debug)]
pub struct Dictionary {
    beta: f64,
    functions: Vec<TestFunction>,
}

/// Size used by the experiments.
pub const DEFAULT_DICTIONARY_SIZE: usize = 256;

impl Dictionary {
    /// Bumps at `i`, `ρ`, `2i`; cusp functions `y^{−s}` for `s ∈ {½, 1, 2}`; then
    /// bumps at Haar-random centres with radii in `[r₀, 2r₀)`, `r₀ = 2^{1/β}`.
    pub fn new(beta: f64, size: usize, seed: u64) -> Result<Self> {
        Self::build(beta, size, seed, false)
    }

    /// As [`Dictionary::new`], with every other random bump also depending on
    /// the frame angle.
    pub fn with_frame_functions(beta: f64, size: usize, seed: u64) -> Result<Self> {
        Self::build(beta, size, seed, true)
    }

    fn build(beta: f64, size: usize, seed: u64, frame: bool) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("β = {beta} must lie in (0, 1]")));
        }
        if size == 0 {
            return Err(Error::InvalidParameter("empty dictionary".into()));
        }
        let r0 = 2f64.powf(1.0 / beta);
        let rho = (0.5, 3f64.sqrt() / 2.0);
        let mut fs: Vec<TestFunction> = [(0.0, 1.0), rho, (0.0, 2.0)]
            .into_iter()
            .map(|c| TestFunction::Bump { translates: translates(c), radius: r0 })
            .collect();
        fs.extend([0.5, 1.0, 2.0].map(TestFunction::cusp));
        fs.truncate(size);
        let extra = size - fs.len();
        if extra > 0 {
            let centres = haar_sample(extra, rng::derive(seed, 0))?;
            let mut r = rng::trial_rng(seed, 1);
            for (k, c) in centres.iter().enumerate() {
                let radius = r0 * (1.0 + r.random::<f64>());
                let translates = translates(c.base_point());
                fs.push(if frame && k % 2 == 1 {
                    TestFunction::Frame { translates, radius, theta0: c.frame_angle }
                } else {
                    TestFunction::Bump { translates, radius }
                });
            }
        }
        Ok(Self { beta, functions: fs })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, k: usize, x: &LatticePoint) -> f64 {
        self.functions[k].eval(self.beta, x)
    }

    /// Mean of every function over `sample`, summed in sample order.
    pub fn means(&self, sample: &[LatticePoint]) -> Result<Vec<f64>> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = sample.len() as f64;
        Ok(self.functions.par_iter().map(|f| sample.iter().map(|x| f.eval(self.beta, x)).sum::<f64>() / n).collect())
    }

    /// `max_k |a_k − b_k|` over precomputed means.
    pub fn compare(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscrepancyReport {
    pub n_steps: usize,
    pub n_samples: usize,
    /// Lower bound on the `W_β` distance: a maximum over the dictionary only.
    pub value: f64,
    pub dictionary_size: usize,
    pub beta: f64,
}

/// Dictionary discrepancy between two samples; `n_steps` is left at 0.
pub fn discrepancy(a: &[LatticePoint], b: &[LatticePoint], beta: f64, dictionary_size: usize, seed: u64) -> Result<DiscrepancyReport> {
    let dict = Dictionary::new(beta, dictionary_size, seed)?;
    discrepancy_with(&dict, a, b)
}

pub fn discrepancy_with(dict: &Dictionary, a: &[LatticePoint], b: &[LatticePoint]) -> Result<DiscrepancyReport> {
    let value = dict.compare(&dict.means(a)?, &dict.means(b)?);
    Ok(DiscrepancyReport { n_steps: 0, n_samples: a.len().min(b.len()), value, dictionary_size: dict.len(), beta: dict.beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{Family, LieAlgebraSpec};
    use proptest::prelude::*;
    use rand::Rng;

    fn sl2() -> LieAlgebraSpec<f64> {
        LieAlgebraSpec::new(Family::SlReal(2)).unwrap()
    }

    fn dm(m: [f64; 4]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &m)
    }

    fn integer_measure() -> WalkMeasure {
        WalkMeasure::symmetric(&sl2(), &[dm([1.0, 2.0, 0.0, 1.0]), dm([1.0, 0.0, 2.0, 1.0])]).unwrap()
    }

    fn random_sl2<R: Rng>(r: &mut R) -> Matrix2<f64> {
        let m: Matrix2<f64> = Matrix2::from_fn(|_, _| r.random_range(-2.0..2.0));
        let d = m.determinant();
        if d.abs() < 0.1 {
            return random_sl2(r);
        }
        let m: Matrix2<f64> = if d < 0.0 { Matrix2::new(m[(0, 1)], m[(0, 0)], m[(1, 1)], m[(1, 0)]) } else { m };
        m / m.determinant().sqrt()
    }

    fn random_gamma<R: Rng>(r: &mut R, len: usize) -> Matrix2<f64> {
        let gens = [Matrix2::new(1.0, 1.0, 0.0, 1.0), Matrix2::new(1.0, -1.0, 0.0, 1.0), Matrix2::new(0.0, -1.0, 1.0, 0.0)];
        (0..len).fold(Matrix2::identity(), |acc, _| acc * gens[r.random_range(0..3)])
    }

    fn in_domain(x: &LatticePoint) -> bool {
        let (re, im) = x.base_point();
        re.abs() <= 0.5 + 1e-10 && re * re + im * im >= 1.0 - 1e-10 && (x.rep.determinant() - 1.0).abs() < 1e-12
    }

    #[test]
    fn reduce_examples() {
        let x = reduce(&Matrix2::identity()).unwrap();
        assert_eq!(x, LatticePoint::identity());
        assert_eq!(x.base_point(), (0.0, 1.0));
        // z = rep⁻¹·i = i − 1 for rep = [[1,1],[0,1]]; one translation returns to i.
        let y = reduce(&Matrix2::new(1.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!(y.base_point(), (0.0, 1.0));
        assert_eq!(y, x);
        assert!(matches!(reduce(&Matrix2::new(2.0, 0.0, 0.0, 1.0)), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn stabilizer_ties() {
        // The order-3 point ρ: the hexagonal lattice, any of its six rotations.
        let s = 3f64.sqrt();
        let hex = Matrix2::new(1.0, 0.5, 0.0, s / 2.0) * (2.0 / s).sqrt();
        let base = reduce(&hex).unwrap();
        for k in 0..6 {
            let (sn, cs) = (k as f64 * PI / 3.0).sin_cos();
            let rot = Matrix2::new(cs, -sn, sn, cs);
            let x = reduce(&(rot * hex)).unwrap();
            assert!(in_domain(&x));
            let (re, im) = x.base_point();
            assert!((re.abs() - 0.5).abs() < 1e-12 && (im - s / 2.0).abs() < 1e-12);
            assert!(x.frame_angle() < PI / 3.0 + 1e-9);
            assert_eq!(reduce(x.rep()).unwrap(), x);
        }
        assert!(base.frame_angle() < 1e-12);
    }

    #[test]
    fn idempotent_bitwise() {
        let mut r = rng::rng(3);
        for _ in 0..1000 {
            let g = random_sl2(&mut r) * random_gamma(&mut r, 6);
            let x = reduce(&g).unwrap();
            assert!(in_domain(&x), "{x:?}");
            assert_eq!(reduce(x.rep()).unwrap(), x);
        }
    }

    #[test]
    fn right_translates_agree() {
        let mut r = rng::rng(4);
        for _ in 0..1000 {
            let g = random_sl2(&mut r);
            let x = reduce(&g).unwrap();
            let y = reduce(&(g * random_gamma(&mut r, 8))).unwrap();
            assert!((x.rep - y.rep).norm() < 1e-9 * x.rep.norm(), "{x:?} {y:?}");
        }
    }

    #[test]
    fn injectivity_examples() {
        assert_eq!(injectivity_proxy(&LatticePoint::identity()), 1.0);
        let x = reduce(&Matrix2::new(10.0, 0.0, 0.0, 0.1)).unwrap();
        assert!((injectivity_proxy(&x) - 0.1).abs() < 1e-15);
        // Oracle: brute force over a wide box of coefficients.
        let mut r = rng::rng(5);
        for _ in 0..200 {
            let x = reduce(&random_sl2(&mut r)).unwrap();
            let brute = (-20i32..=20)
                .flat_map(|m| (-20i32..=20).map(move |n| (m, n)))
                .filter(|&k| k != (0, 0))
                .map(|(m, n)| (x.rep.column(0) * m as f64 + x.rep.column(1) * n as f64).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(injectivity_proxy(&x), brute);
            let (_, im) = x.base_point();
            assert!((injectivity_proxy(&x).powi(2) * im - 1.0).abs() < 1e-12);
        }
    }

    /// `∫_F y^{−3} dx dy / (π/3)` by nested Simpson rules, with `t = 1/y`.
    fn mean_inverse_y_oracle() -> f64 {
        fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
            let h = (b - a) / n as f64;
            let s: f64 = (0..=n).map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * f(a + k as f64 * h)
            }).sum();
            s * h / 3.0
        }
        let inner = |x: f64| simpson(|t| t, 0.0, 1.0 / (1.0 - x * x).sqrt(), 64);
        simpson(inner, -0.5, 0.5, 2000) / DOMAIN_AREA
    }

    #[test]
    fn haar_inverse_y_mean() {
        let oracle = mean_inverse_y_oracle();
        assert!((oracle - 3.0 * 3f64.ln() / (2.0 * PI)).abs() < 1e-9);
        let xs = haar_sample(100_000, 9).unwrap();
        assert!(xs.iter().all(in_domain));
        let v: Vec<f64> = xs.iter().map(|x| 1.0 / x.base_point().1).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        assert!((m - oracle).abs() < 3.0 * sd / (v.len() as f64).sqrt(), "{m} vs {oracle}");
        assert_eq!(haar_sample(10, 9).unwrap()[..], xs[..10]);
    }

    #[test]
    fn haar_self_consistency() {
        let a = haar_sample(100_000, 1).unwrap();
        let b = haar_sample(100_000, 2).unwrap();
        let rep = discrepancy(&a, &b, 1.0, DEFAULT_DICTIONARY_SIZE, 0).unwrap();
        assert!(rep.value <= 0.05, "{rep:?}");
    }

    #[test]
    fn walk_trivial_cases() {
        let mu = integer_measure();
        let x0 = generic_start();
        assert_eq!(walk_distribution(&mu, &x0, 0, 5, 1).unwrap(), vec![x0; 5]);
        let dirac = WalkMeasure::dirac(&sl2(), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(walk_distribution(&dirac, &x0, 30, 5, 1).unwrap(), vec![x0; 5]);
        let trapped = walk_distribution(&mu, &LatticePoint::identity(), 40, 200, 1).unwrap();
        assert!(trapped.iter().all(|x| *x == LatticePoint::identity()));
    }

    #[test]
    fn snapshots_match_single_runs() {
        let mu = integer_measure();
        let x0 = generic_start();
        let snaps = walk_snapshots(&mu, &x0, &[7, 3, 7], 50, 11).unwrap();
        assert_eq!(snaps[0], walk_distribution(&mu, &x0, 7, 50, 11).unwrap());
        assert_eq!(snaps[1], walk_distribution(&mu, &x0, 3, 50, 11).unwrap());
        assert_eq!(snaps[0], snaps[2]);
        assert!(snaps.iter().flatten().all(|x| in_domain(x) && injectivity_proxy(x) > 0.0));
    }

    #[test]
    fn discrepancy_basics() {
        let a = haar_sample(500, 1).unwrap();
        let b = haar_sample(500, 2).unwrap();
        assert_eq!(discrepancy(&a, &a, 0.7, 64, 0).unwrap().value, 0.0);
        let ab = discrepancy(&a, &b, 0.7, 64, 0).unwrap().value;
        assert_eq!(ab, discrepancy(&b, &a, 0.7, 64, 0).unwrap().value);
        assert!(matches!(discrepancy(&[], &a, 1.0, 8, 0), Err(Error::EmptySample)));
        assert!(Dictionary::new(0.0, 8, 0).is_err());
    }

    #[test]
    fn dirac_pairs_respect_holder_bound() {
        let pts = haar_sample(60, 8).unwrap();
        for beta in [0.3, 0.7, 1.0] {
            let dict = Dictionary::new(beta, 64, 1).unwrap();
            for p in pts.windows(2) {
                let d = quotient_distance(&translates(p[0].base_point()), p[1].base_point());
                let v = discrepancy_with(&dict, &p[..1], &p[1..]).unwrap().value;
                assert!(v <= 2f64.min(d.powf(beta)) + 1e-12, "{v} > {d}^{beta}");
            }
        }
    }

    #[test]
    fn trapped_versus_generic() {
        let mu = integer_measure();
        let haar = haar_sample(20_000, 5).unwrap();
        let dict = Dictionary::new(1.0, DEFAULT_DICTIONARY_SIZE, 0).unwrap();
        let h = dict.means(&haar).unwrap();
        let trapped = walk_distribution(&mu, &LatticePoint::identity(), 25, 100, 6).unwrap();
        assert!(dict.compare(&dict.means(&trapped).unwrap(), &h) >= 0.9);
        let snaps = walk_snapshots(&mu, &generic_start(), &[2, 50], 20_000, 6).unwrap();
        let d: Vec<f64> = snaps.iter().map(|s| dict.compare(&dict.means(s).unwrap(), &h)).collect();
        assert!(d[1] < d[0] && d[1] <= 0.1, "{d:?}");
    }

    #[test]
    fn recurrence_table_is_monotone_in_r() {
        let mu = integer_measure();
        let snaps = walk_snapshots(&mu, &generic_start(), &[5, 20], 2000, 2).unwrap();
        let radii = [0.2, 0.4, 0.6, 0.8, 1.0, 1.1];
        for row in recurrence_table(&snaps, &radii) {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn frame_dictionary() {
        let a = haar_sample(300, 3).unwrap();
        let dict = Dictionary::with_frame_functions(1.0, 40, 2).unwrap();
        assert_eq!(dict.len(), 40);
        let m = dict.means(&a).unwrap();
        assert!(m.iter().all(|v| v.abs() <= 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_invariants(seed in any::<u64>(), len in 0usize..12) {
            let mut r = rng::rng(seed);
            let g = random_sl2(&mut r);
            let x = reduce(&g).unwrap();
            prop_assert!(in_domain(&x));
            let y = reduce(&(g * random_gamma(&mut r, len))).unwrap();
            prop_assert!((x.rep - y.rep).norm() < 1e-9 * x.rep.norm());
        }

        #[test]
        fn discrepancy_triangle(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
            let dict = Dictionary::new(0.8, 32, 4).unwrap();
            let m: Vec<Vec<f64>> = [s1, s2, s3].iter().map(|&s| dict.means(&haar_sample(50, s).unwrap()).unwrap()).collect();
            let (ab, bc, ac) = (dict.compare(&m[0], &m[1]), dict.compare(&m[1], &m[2]), dict.compare(&m[0], &m[2]));
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!((0.0..=2.0).contains(&ab));
        }
    }
}
