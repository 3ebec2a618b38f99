//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use walklab::cartan::{self, cartan_decompose, WalkMeasure};
use walklab::grassmannian::{dist_to, grass_dist, intersect_dim, sum, Subspace};
use walklab::lie::{Family, LieAlgebraSpec};
use walklab::modular::{self, Dictionary, LatticePoint};
use walklab::multislicing::{self, chernoff_bound, ProjectionDatum, PointCloud};
use walklab::so_transversality::{real_defect, SoqModel};
use walklab::submodular::{borel_sl3, counterexample_w_sl3, generic_intersection_dim, verify_submodular, RepAction};
use walklab::rng;

type Check = Result<String, String>;

fn spec(f: Family) -> LieAlgebraSpec<f64> {
    LieAlgebraSpec::new(f).expect("built-in algebra")
}

fn groups() -> Vec<LieAlgebraSpec<f64>> {
    [Family::SlReal(2), Family::SlReal(3), Family::SoP1(3), Family::SoP1(7)].into_iter().map(spec).collect()
}

fn test_subspace<R: Rng>(dim: usize, r: &mut R) -> Subspace<f64> {
    let k = r.random_range(1..dim);
    if r.random_bool(0.5) {
        let mut idx: Vec<usize> = (0..dim).collect();
        for i in 0..k {
            let j = r.random_range(i..dim);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx.sort_unstable();
        Subspace::coordinate(dim, &idx)
    } else {
        Subspace::random(dim, k, r)
    }
}

fn c1_submodular() -> Check {
    let start = Instant::now();
    let mut summary = Vec::new();
    for s in groups() {
        let name = s.family().to_string();
        let rep = RepAction::adjoint(s);
        let dim = rep.dim();
        let fails: usize = (0..1000u64)
            .into_par_iter()
            .map(|k| {
                let mut r = rng::trial_rng(100, k);
                let v = test_subspace(dim, &mut r);
                let w = test_subspace(dim, &mut r);
                verify_submodular(&rep, &v, &w, 4, rng::derive(101, k)).map(|x| usize::from(!x.holds))
            })
            .collect::<walklab::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .sum();
        if fails > 0 {
            return Err(format!("{name}: {fails}/1000 pairs violate the bound"));
        }
        summary.push(format!("{name} 1000/1000"));
    }
    let t = start.elapsed();
    if t > Duration::from_secs(300) {
        return Err(format!("runtime {t:?} above 5 min"));
    }
    Ok(format!("{} in {:.1}s", summary.join(", "), t.as_secs_f64()))
}

fn c2_sl3_counterexample() -> Check {
    let s = spec(Family::SlReal(3));
    let b = borel_sl3(&s);
    let w = counterexample_w_sl3(&s);
    let rep = RepAction::adjoint(s);
    let low = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let g = rep.sample(&mut rng::trial_rng(200, k));
            intersect_dim(&rep.act(&g, &b)?, &w)
        })
        .collect::<walklab::Result<Vec<usize>>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|&d| d < 1)
        .count();
    let generic = generic_intersection_dim(&rep, &b, &w, 1000, 201).map_err(|e| e.to_string())?;
    if low > 0 || generic != 1 {
        return Err(format!("{low} samples with trivial intersection, generic dim {generic}"));
    }
    Ok(format!("dim ≥ 1 for 1000/1000 g, generic dim = 1, bound {}", w.dim() * b.dim() / 8))
}

fn c3_certificate() -> Check {
    let model = SoqModel::new(4).map_err(|e| e.to_string())?;
    let rows = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::trial_rng(300, k);
            let hs: [DMatrix<_>; 4] = std::array::from_fn(|_| model.random_group_element(&mut r));
            let defect = model.direct_sum_defect(&hs)?;
            let rel = model.find_relation(&hs, &mut r)?;
            Ok((defect, rel.residual, rel.solution_dim))
        })
        .collect::<walklab::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let bad_defect = rows.iter().filter(|r| r.0 < 1).count();
    let bad_res = rows.iter().filter(|r| r.1 > 1e-8).count();
    let bad_dim = rows.iter().filter(|r| r.2 < 2).count();
    let max_res = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let so31 = spec(Family::SoP1(3));
    let v = so31.positive_roots().next().expect("so(3,1) has roots").root_space.clone();
    let zero = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::trial_rng(301, k);
            let gs: Vec<DMatrix<f64>> = (0..3).map(|_| so31.random_group_element(&mut r)).collect();
            real_defect(&so31, &v, &gs)
        })
        .collect::<walklab::Result<Vec<usize>>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|&d| d == 0)
        .count();
    let detail = format!(
        "defect ≥ 1: {}/1000, residual ≤ 1e-8: {}/1000 (max {max_res:.1e}), solution dim ≥ 2: {}/1000, so(3,1) defect 0: {zero}/1000",
        1000 - bad_defect,
        1000 - bad_res,
        1000 - bad_dim
    );
    if bad_defect + bad_res + bad_dim == 0 && zero >= 990 { Ok(detail) } else { Err(detail) }
}

/// `E = C ⊕ A`, `F = C ⊕ B` with a shared random `C`, so that intersections are
/// often non-trivial.
fn overlapping_pair<R: Rng>(d: usize, r: &mut R) -> (Subspace<f64>, Subspace<f64>) {
    let c = r.random_range(0..d);
    let shared = Subspace::random(d, c, r);
    let a = Subspace::random(d, r.random_range(0..=d - c), r);
    let b = Subspace::random(d, r.random_range(0..=d - c), r);
    (sum(&shared, &a).unwrap(), sum(&shared, &b).unwrap())
}

fn c4_grassmannian() -> Check {
    let mut r = rng::rng(400);
    let mut dev: f64 = 0.0;
    for _ in 0..1000 {
        let d = r.random_range(2..=8);
        let k = r.random_range(1..d);
        let v = Subspace::random(d, k, &mut r);
        let w = Subspace::random(d, k, &mut r);
        let lhs: f64 = grass_dist(&v, &w).map_err(|e| e.to_string())?;
        let rhs = grass_dist(&v.orth_complement(), &w.orth_complement()).map_err(|e| e.to_string())?;
        dev = dev.max((lhs - rhs).abs());
        let kw = r.random_range(k..d);
        let w2 = Subspace::random(d, kw, &mut r);
        let a: f64 = dist_to(&v, &w2).map_err(|e| e.to_string())?;
        let b = dist_to(&w2.orth_complement(), &v.orth_complement()).map_err(|e| e.to_string())?;
        dev = dev.max((a - b).abs());
    }
    let mut agree = 0;
    for _ in 0..1000 {
        let d = r.random_range(2..=8);
        let (e, f) = overlapping_pair(d, &mut r);
        let s = intersect_dim(&e, &f).map_err(|x| x.to_string())?;
        let sp = intersect_dim(&e.orth_complement(), &f.orth_complement()).map_err(|x| x.to_string())?;
        let direct = e.dim() * f.dim() >= d * s;
        let dual = (d - e.dim()) * (d - f.dim()) >= d * sp;
        agree += usize::from(direct == dual);
    }
    let detail = format!("max deviation {dev:.2e}, truth values agree {agree}/1000");
    if dev <= 1e-9 && agree == 1000 { Ok(detail) } else { Err(detail) }
}

fn c5_equidistribution() -> Check {
    let start = Instant::now();
    let s2 = spec(Family::SlReal(2));
    let m = |a: [f64; 4]| DMatrix::from_row_slice(2, 2, &a);
    let mu = WalkMeasure::symmetric(&s2, &[m([1.0, 2.0, 0.0, 1.0]), m([1.0, 0.0, 2.0, 1.0])]).map_err(|e| e.to_string())?;
    let count = 100_000;
    let n_list = [10, 25, 50];
    let dict = Dictionary::new(1.0, modular::DEFAULT_DICTIONARY_SIZE, 500).map_err(|e| e.to_string())?;
    let haar = modular::haar_sample(count, 501).map_err(|e| e.to_string())?;
    let h = dict.means(&haar).map_err(|e| e.to_string())?;
    let disc = |x0: &LatticePoint, seed| -> walklab::Result<Vec<f64>> {
        modular::walk_snapshots(&mu, x0, &n_list, count, seed)?
            .iter()
            .map(|s| Ok(dict.compare(&dict.means(s)?, &h)))
            .collect()
    };
    let trapped = disc(&LatticePoint::identity(), 502).map_err(|e| e.to_string())?;
    let generic = disc(&modular::generic_start(), 503).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let detail = format!(
        "trapped {:?}, generic {:?} at n = {n_list:?}, {:.1}s",
        trapped.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
        generic.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
        t.as_secs_f64()
    );
    if trapped.iter().all(|&x| x >= 0.9) && generic[2] <= 0.1 && t <= Duration::from_secs(600) { Ok(detail) } else { Err(detail) }
}

fn c6_lyapunov() -> Check {
    let s = spec(Family::SlReal(3));
    let mut r = rng::rng(600);
    let gens: Vec<DMatrix<f64>> = (0..2).map(|_| s.random_group_element(&mut r)).collect();
    let mu = WalkMeasure::symmetric(&s, &gens).map_err(|e| e.to_string())?;
    let lyap = cartan::estimate_lyapunov(&s, &mu, 400, 200, 601).map_err(|e| e.to_string())?;
    let m = lyap.lambdas.len();
    let l1 = lyap.lambdas[0];
    let sym = (0..m).map(|i| (lyap.lambdas[i] + lyap.lambdas[m - 1 - i]).abs()).fold(0.0, f64::max);
    let mult_sym = (0..m).all(|i| lyap.multiplicities[i] == lyap.multiplicities[m - 1 - i]);
    let sigma = lyap.lambda_se.iter().zip(&lyap.multiplicities).map(|(e, &j)| (e * j as f64).powi(2)).sum::<f64>().sqrt();
    let ws = lyap.weighted_sum();
    let fractions = [50, 100, 200]
        .iter()
        .map(|&n| cartan::box_model_check(&s, &mu, &lyap, n, 0.1, 200, 602).map(|b| b.fraction))
        .collect::<walklab::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?;
    let monotone = fractions.windows(2).all(|w| w[0] <= w[1]);
    let detail = format!(
        "λ = {:?} × {:?}, |λ_i + λ_(m+1−i)| ≤ {:.2e} (5% of λ₁ = {:.2e}), Σλj = {ws:.1e} (3σ = {:.1e}), band fractions {fractions:?}",
        lyap.lambdas.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
        lyap.multiplicities,
        sym,
        0.05 * l1,
        3.0 * sigma
    );
    if sym <= 0.05 * l1 && mult_sym && ws.abs() <= 3.0 * sigma + 1e-12 && monotone { Ok(detail) } else { Err(detail) }
}

fn c7_regularization() -> Check {
    let results: Vec<Result<(), String>> = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::trial_rng(700, k);
            let d = r.random_range(1..=3);
            let n = r.random_range(1..400);
            let pts: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(d, |_, _| r.random::<f64>().powi(3))).collect();
            let a = PointCloud::new(d, pts, 0.0).map_err(|e| e.to_string())?;
            let mut levels: Vec<u32> = (1..=10).filter(|_| r.random_bool(0.4)).collect();
            while levels.len() < 2 {
                levels = (1..=10).filter(|_| r.random_bool(0.4)).collect();
            }
            let eps = r.random_range(0.02..0.5);
            let out = multislicing::regularize(&a, &levels, eps).map_err(|e| e.to_string())?;
            let fine = *levels.last().expect("two levels");
            for p in &out.pieces {
                if !multislicing::is_regular(p, &levels) || !multislicing::is_equidistributed(p, fine) {
                    return Err(format!("cloud {k}: a piece fails the checks"));
                }
            }
            let total: usize = out.pieces.iter().map(PointCloud::len).sum::<usize>() + out.bad.len();
            if total != n || out.bad.len() as f64 > (-(fine as f64) * eps).exp2() * n as f64 {
                return Err(format!("cloud {k}: bad part {} of {n}", out.bad.len()));
            }
            Ok(())
        })
        .collect();
    let errs: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    if errs.is_empty() { Ok("1000/1000 clouds: pieces regular and equidistributed, bad mass ≤ δ^ε".into()) } else { Err(errs[0].clone()) }
}

fn exact_tail(p: f64, t: f64, j: u32) -> BigRational {
    let pq = BigRational::from_float(p).expect("finite");
    let qq = BigRational::one() - &pq;
    let k = (t * j as f64).ceil() as u32;
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for i in 0..=j {
        if i >= k {
            total += BigRational::from(binom.clone()) * num_traits::pow(pq.clone(), i as usize) * num_traits::pow(qq.clone(), (j - i) as usize);
        }
        binom = binom * BigInt::from(j - i) / BigInt::from(i + 1);
    }
    total
}

fn c8_chernoff() -> Check {
    let mut checked = 0;
    for a in 1..=10 {
        for b in 0..10 {
            let p = a as f64 / 11.0;
            let t = b as f64 / 10.0 + 0.05;
            for j in 1..=20 {
                let bound = chernoff_bound(p, t, j).map_err(|e| e.to_string())?;
                let exact = exact_tail(p, t, j);
                if BigRational::from_float(bound).expect("finite") < exact {
                    return Err(format!("bound {bound} below the exact tail at p = {p}, t = {t}, J = {j}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (p, t, J) cases, 100-point grid, J ≤ 20"))
}

fn c9_cartan() -> Check {
    let mut worst: f64 = 0.0;
    for s in groups() {
        let errs = (0..1000u64)
            .into_par_iter()
            .map(|k| {
                let g = s.random_group_element(&mut rng::trial_rng(900, k));
                let c = cartan_decompose(&s, &g)?;
                Ok((c.reconstruct() - &g).norm() / g.norm())
            })
            .collect::<walklab::Result<Vec<f64>>>()
            .map_err(|e| e.to_string())?;
        worst = worst.max(errs.into_iter().fold(0.0, f64::max));
    }
    let s2 = spec(Family::SlReal(2));
    let u = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let k = cartan_decompose(&s2, &u).map_err(|e| e.to_string())?.kappa[(0, 0)];
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let detail = format!("max relative reconstruction error {worst:.1e}, κ₁ − log φ = {:.1e}", k - phi.ln());
    if worst <= 1e-8 && (k - phi.ln()).abs() <= 1e-10 { Ok(detail) } else { Err(detail) }
}

fn random_datum<R: Rng>(d: usize, r: &mut R) -> ProjectionDatum {
    let k = if d == 3 && r.random_bool(0.5) { 2 } else { 1 };
    let j = r.random_range(d / k + 1..=d / k + 2).max(2);
    ProjectionDatum::equal_weights((0..j).map(|_| Subspace::random(d, k, r)).collect()).expect("valid weights")
}

fn random_cloud<R: Rng>(d: usize, r: &mut R) -> PointCloud {
    let n = r.random_range(20..300);
    let pts = if r.random_bool(0.5) {
        (0..n).map(|_| DVector::from_fn(d, |_, _| r.random::<f64>())).collect()
    } else {
        // Points near a random line through the cube.
        let dir = DVector::from_fn(d, |_, _| r.random::<f64>());
        (0..n).map(|_| (&dir * r.random::<f64>() / (dir.max() + 1e-9)).map(|x| x.clamp(0.0, 0.999))).collect()
    };
    PointCloud::new(d, pts, 0.0).expect("cloud in the unit cube")
}

fn c10_visual() -> Check {
    let mut r = rng::rng(1000);
    let mut done = [0usize; 2];
    let mut rejected = 0;
    while done.iter().sum::<usize>() < 100 {
        let d = if done[0] < 50 { 2 } else { 3 };
        let datum = random_datum(d, &mut r);
        let (alpha, beta) = (0.5, 0.0);
        if datum.check_perceptive(alpha, beta, 8, r.random()).is_err() {
            rejected += 1;
            continue;
        }
        let a = random_cloud(d, &mut r);
        let delta = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0][r.random_range(0..3)];
        let rep = multislicing::visual_inequality_check(&a, &datum, delta, alpha, beta, 8, r.random()).map_err(|e| e.to_string())?;
        if !rep.holds {
            return Err(format!("ℝ^{d}: N = {} > {:.3e}", rep.lhs, rep.rhs));
        }
        done[d - 2] += 1;
    }
    Ok(format!("{} in ℝ², {} in ℝ³ hold ({rejected} candidates not perceptive)", done[0], done[1]))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("submodular inequality", c1_submodular),
        ("SL3 counterexample", c2_sl3_counterexample),
        ("so(q) certificate", c3_certificate),
        ("Grassmannian identities", c4_grassmannian),
        ("equidistribution dichotomy", c5_equidistribution),
        ("Lyapunov structure", c6_lyapunov),
        ("regularization", c7_regularization),
        ("Chernoff domination", c8_chernoff),
        ("Cartan decomposition", c9_cartan),
        ("visual inequality", c10_visual),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
