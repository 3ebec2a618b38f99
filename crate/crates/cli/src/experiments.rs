use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde_json::Value;

use walklab::cartan::{self, ProbeSetup, WalkMeasure};
use walklab::grassmannian::Subspace;
use walklab::lie::{Family, LieAlgebraSpec};
use walklab::modular::{self, Dictionary, LatticePoint};
use walklab::multislicing::{self, ExceptionalMode, ExceptionalParams, PointCloud};
use walklab::so_transversality::SoqModel;
use walklab::submodular::{verify_submodular, RepAction};
use walklab::rng;

use crate::config::*;
use crate::error::CliError;
use crate::output::Table;

/// Parameters echoed in the header, the input file contents that feed the hash,
/// and the result table.
pub struct Outcome {
    pub resolved: Value,
    pub inputs: Vec<Vec<u8>>,
    pub table: Table,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed;
    match cfg.experiment {
        Experiment::WalkEquidistribute => {
            let (p, resolved) = cfg.resolve::<WalkParams>()?;
            Ok(Outcome { resolved, inputs: vec![], table: walk_equidistribute(&p, seed)? })
        }
        Experiment::SubmodularScan => {
            let (p, resolved) = cfg.resolve::<SubmodularParams>()?;
            Ok(Outcome { resolved, inputs: vec![], table: submodular_scan(&p, seed)? })
        }
        Experiment::TransversalityScan => {
            let (p, resolved) = cfg.resolve::<TransversalityParams>()?;
            Ok(Outcome { resolved, inputs: vec![], table: transversality_scan(&p, seed)? })
        }
        Experiment::MultisliceDemo => {
            let (p, resolved) = cfg.resolve::<MultisliceParams>()?;
            let inputs = match &p.input {
                Some(path) => vec![std::fs::read(path)?],
                None => vec![],
            };
            Ok(Outcome { resolved, inputs, table: multislice_demo(&p, seed)? })
        }
        Experiment::LyapunovEstimate => {
            let (p, resolved) = cfg.resolve::<LyapunovParams>()?;
            Ok(Outcome { resolved, inputs: vec![], table: lyapunov_estimate(&p, seed)? })
        }
        Experiment::AngleLaw => {
            let (p, resolved) = cfg.resolve::<AngleLawParams>()?;
            Ok(Outcome { resolved, inputs: vec![], table: angle_law(&p, seed)? })
        }
        Experiment::BoxModel => {
            let (p, resolved) = cfg.resolve::<BoxModelParams>()?;
            Ok(Outcome { resolved, inputs: vec![], table: box_model(&p, seed)? })
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn algebra(name: &str) -> Result<LieAlgebraSpec<f64>, CliError> {
    let family: Family = name.parse()?;
    Ok(LieAlgebraSpec::new(family)?)
}

/// Explicit generators with uniform weights, or seeded random generators
/// together with their inverses.
fn measure(
    spec: &LieAlgebraSpec<f64>,
    generators: &Option<Vec<MatrixSpec>>,
    random: usize,
    seed: u64,
) -> Result<WalkMeasure, CliError> {
    match generators {
        Some(gs) => {
            let atoms = gs.iter().map(MatrixSpec::to_matrix).collect::<Result<Vec<_>, _>>()?;
            Ok(WalkMeasure::uniform(spec, atoms)?)
        }
        None => {
            if random == 0 {
                return Err(CliError::Config("random_generators must be ≥ 1".into()));
            }
            let mut r = rng::trial_rng(seed, 0);
            let gens: Vec<DMatrix<f64>> = (0..random).map(|_| spec.random_group_element(&mut r)).collect();
            Ok(WalkMeasure::symmetric(spec, &gens)?)
        }
    }
}

fn walk_equidistribute(p: &WalkParams, seed: u64) -> Result<Table, CliError> {
    if p.count == 0 || p.n_list.is_empty() {
        return Err(CliError::Config("count and n_list must be non-empty".into()));
    }
    let spec = algebra("sl2")?;
    let atoms = p.atoms.iter().map(MatrixSpec::to_matrix).collect::<Result<Vec<_>, _>>()?;
    let mu = match &p.weights {
        Some(w) => WalkMeasure::new(&spec, atoms, w.clone())?,
        None => WalkMeasure::uniform(&spec, atoms)?,
    };
    let x0 = match &p.start {
        StartSpec::Identity => LatticePoint::identity(),
        StartSpec::Generic => modular::generic_start(),
        StartSpec::Matrix(m) => {
            let m = m.to_matrix()?;
            if m.shape() != (2, 2) {
                return Err(CliError::Config("start must be 2×2".into()));
            }
            modular::reduce(&nalgebra::Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))?
        }
    };
    let dict = Dictionary::new(p.beta, p.dictionary_size, rng::derive(seed, 2))?;
    let haar = modular::haar_sample(p.count, rng::derive(seed, 1))?;
    let reference = dict.means(&haar)?;
    let snaps = modular::walk_snapshots(&mu, &x0, &p.n_list, p.count, rng::derive(seed, 0))?;
    let mut t = Table::new(&["n", "discrepancy", "inj_fraction_below_r"]);
    for (n, s) in p.n_list.iter().zip(&snaps) {
        let d = dict.compare(&dict.means(s)?, &reference);
        t.check((0.0..=2.0).contains(&d), || format!("discrepancy {d} at n = {n} outside [0, 2]"));
        t.check(s.iter().all(|x| modular::injectivity_proxy(x) > 0.0), || format!("zero systole at n = {n}"));
        t.push(vec![n.to_string(), fmt(d), fmt(modular::inj_fraction_below(s, p.r))]);
    }
    Ok(t)
}

/// Coordinate subspace on a random index set (half the time) or a random
/// subspace, of random dimension in `1..dim`.
fn random_test_subspace<R: Rng>(dim: usize, r: &mut R) -> Subspace<f64> {
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

fn submodular_scan(p: &SubmodularParams, seed: u64) -> Result<Table, CliError> {
    let spec = algebra(&p.algebra)?;
    let rep = RepAction::adjoint(spec);
    let dim = rep.dim();
    let rows = (0..p.pairs as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::trial_rng(seed, k);
            let v = random_test_subspace(dim, &mut r);
            let w = random_test_subspace(dim, &mut r);
            let rpt = verify_submodular(&rep, &v, &w, p.samples, rng::derive(seed, k ^ (1 << 63)))?;
            Ok((k, v.dim(), w.dim(), rpt))
        })
        .collect::<walklab::Result<Vec<_>>>()?;
    let mut t = Table::new(&["pair", "dim_v", "dim_w", "deg", "bound", "holds"]);
    for (k, dv, dw, rpt) in rows {
        t.check(rpt.holds, || format!("pair {k}: deg {} > {}", rpt.lhs, rpt.rhs));
        t.push(vec![k.to_string(), dv.to_string(), dw.to_string(), rpt.lhs.to_string(), rpt.rhs.to_string(), rpt.holds.to_string()]);
    }
    Ok(t)
}

fn transversality_scan(p: &TransversalityParams, seed: u64) -> Result<Table, CliError> {
    let model = SoqModel::new(p.n)?;
    let rows = (0..p.trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::trial_rng(seed, k);
            let hs: [DMatrix<_>; 4] = std::array::from_fn(|_| model.random_group_element(&mut r));
            let defect = model.direct_sum_defect(&hs)?;
            let rel = model.find_relation(&hs, &mut r)?;
            Ok((k, defect, rel.residual, rel.solution_dim))
        })
        .collect::<walklab::Result<Vec<_>>>()?;
    let mut t = Table::new(&["trial", "defect", "relation_residual", "solution_dim"]);
    for (k, defect, res, sol) in rows {
        t.check(defect >= 1, || format!("trial {k}: translates in direct sum"));
        t.check(res <= 1e-8, || format!("trial {k}: relation residual {res:.3e}"));
        t.check(sol >= 2, || format!("trial {k}: solution space of dimension {sol}"));
        t.push(vec![k.to_string(), defect.to_string(), fmt(res), sol.to_string()]);
    }
    Ok(t)
}

/// Random points whose base-4 digits lie in `{0, 3}` in every coordinate.
fn cantor_cloud<R: Rng>(dim: usize, count: usize, r: &mut R) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| {
            DVector::from_fn(dim, |_, _| {
                (1..=10).map(|k| if r.random_bool(0.5) { 3.0 * 4f64.powi(-k) } else { 0.0 }).sum()
            })
        })
        .collect()
}

fn point_cloud(p: &MultisliceParams, seed: u64) -> Result<PointCloud, CliError> {
    if let Some(path) = &p.input {
        return Ok(PointCloud::read_csv(std::fs::File::open(path)?)?);
    }
    let mut r = rng::rng(seed);
    let pts: Vec<DVector<f64>> = match p.kind {
        CloudKind::Uniform => (0..p.points).map(|_| DVector::from_fn(p.dim, |_, _| r.random::<f64>())).collect(),
        CloudKind::Cantor => cantor_cloud(p.dim, p.points, &mut r),
        CloudKind::Grid => {
            let side = (p.points as f64).powf(1.0 / p.dim as f64).round().max(1.0) as usize;
            (0..side.pow(p.dim as u32))
                .map(|mut i| {
                    DVector::from_fn(p.dim, |_, _| {
                        let c = i % side;
                        i /= side;
                        c as f64 / side as f64
                    })
                })
                .collect()
        }
    };
    Ok(PointCloud::new(p.dim, pts, 0.0)?)
}

fn multislice_demo(p: &MultisliceParams, seed: u64) -> Result<Table, CliError> {
    let a = point_cloud(p, rng::derive(seed, 0))?;
    let fine = *p.levels.last().ok_or_else(|| CliError::Config("levels must be non-empty".into()))?;
    let reg = multislicing::regularize(&a, &p.levels, p.eps)?;
    let regular = reg.pieces.iter().all(|q| multislicing::is_regular(q, &p.levels));
    let equi = reg.pieces.iter().all(|q| multislicing::is_equidistributed(q, fine));
    let bound = (-(fine as f64) * p.eps).exp2() * a.len() as f64;
    let mut t = Table::new(&["quantity", "value"]);
    t.check(regular, || "a piece fails the regularity identity".into());
    t.check(equi, || "a piece is not equidistributed".into());
    t.check(reg.bad.len() as f64 <= bound, || format!("bad part has {} points, bound {bound}", reg.bad.len()));
    let mut row = |k: &str, v: String| t.push(vec![k.to_string(), v]);
    row("points", a.len().to_string());
    row("dim", a.dim().to_string());
    row("covering_number", multislicing::covering_number(&a, p.delta)?.to_string());
    row("pieces", reg.pieces.len().to_string());
    row("largest_piece", reg.pieces.iter().map(PointCloud::len).max().unwrap_or(0).to_string());
    row("bad_points", reg.bad.len().to_string());
    row("bad_bound", fmt(bound));
    row("pieces_regular", regular.to_string());
    row("pieces_equidistributed", equi.to_string());
    if a.dim() >= 2 && p.subspaces > 0 {
        let mut r = rng::trial_rng(seed, 1);
        let vs: Vec<Subspace<f64>> =
            (0..p.subspaces).map(|_| Subspace::random(a.dim(), r.random_range(1..a.dim()), &mut r)).collect();
        let params = ExceptionalParams {
            mode: ExceptionalMode::BigO { alpha: p.alpha, eps: p.eps },
            delta: p.delta,
            adversary_budget: p.adversary_budget,
            seed: rng::derive(seed, 2),
        };
        row("exceptional_fraction_lower_bound", fmt(multislicing::exceptional_set_estimate(&a, &vs, &params)?));
    }
    Ok(t)
}

fn lyapunov_estimate(p: &LyapunovParams, seed: u64) -> Result<Table, CliError> {
    let spec = algebra(&p.algebra)?;
    let mu = measure(&spec, &p.generators, p.random_generators, rng::derive(seed, 0))?;
    let lyap = cartan::estimate_lyapunov(&spec, &mu, p.n, p.trials, rng::derive(seed, 1))?;
    let m = lyap.lambdas.len();
    let l1 = lyap.lambdas[0];
    let mut t = Table::new(&["index", "lambda", "multiplicity", "std_error"]);
    for i in 0..m {
        let (a, b) = (lyap.lambdas[i], lyap.lambdas[m - 1 - i]);
        t.check((a + b).abs() <= 0.05 * l1.abs(), || format!("λ_{} = {a} is not −λ_{} = {}", i + 1, m - i, -b));
        t.check(lyap.multiplicities[i] == lyap.multiplicities[m - 1 - i], || format!("multiplicity {} not symmetric", i + 1));
    }
    let sigma = lyap.lambda_se.iter().zip(&lyap.multiplicities).map(|(s, &j)| (s * j as f64).powi(2)).sum::<f64>().sqrt();
    let ws = lyap.weighted_sum();
    t.check(ws.abs() <= 3.0 * sigma + 1e-12, || format!("Σλj = {ws:.3e} exceeds 3σ = {:.3e}", 3.0 * sigma));
    t.check(!lyap.ambiguous, || "Lyapunov clusters are ambiguous".into());
    for i in 0..m {
        t.push(vec![(i + 1).to_string(), fmt(lyap.lambdas[i]), lyap.multiplicities[i].to_string(), fmt(lyap.lambda_se[i])]);
    }
    Ok(t)
}

fn angle_law(p: &AngleLawParams, seed: u64) -> Result<Table, CliError> {
    let spec = algebra(&p.algebra)?;
    let mu = measure(&spec, &p.generators, p.random_generators, rng::derive(seed, 0))?;
    let lyap = cartan::estimate_lyapunov(&spec, &mu, p.n, p.lyapunov_trials, rng::derive(seed, 1))?;
    let (flag, _) = cartan::lyapunov_flags(&spec, &lyap)?;
    if p.flag_index == 0 || p.flag_index >= flag.len() {
        return Err(CliError::Config(format!("flag_index must lie in 1..{}", flag.len() - 1)));
    }
    let dim = spec.algebra_dim();
    let w_dim = p.w_dim.unwrap_or(dim - flag.spaces()[p.flag_index - 1].dim());
    if w_dim == 0 || w_dim >= dim {
        return Err(CliError::Config(format!("w_dim must lie in 1..{dim}")));
    }
    let w = Subspace::random(dim, w_dim, &mut rng::trial_rng(seed, 3));
    let setup = ProbeSetup { spec: &spec, mu: &mu, lyap: &lyap, n: p.n, i: p.flag_index, trials: p.trials, seed: rng::derive(seed, 2) };
    let mut grid = p.rho_grid.clone();
    grid.sort_by(f64::total_cmp);
    let law = cartan::angle_law_probe(&setup, &w, &grid)?;
    let mut t = Table::new(&["rho", "probability"]);
    t.check(law.windows(2).all(|w| w[0].1 <= w[1].1), || "empirical law is not monotone in ρ".into());
    for (rho, prob) in law {
        t.push(vec![fmt(rho), fmt(prob)]);
    }
    Ok(t)
}

fn box_model(p: &BoxModelParams, seed: u64) -> Result<Table, CliError> {
    let spec = algebra(&p.algebra)?;
    let mu = measure(&spec, &p.generators, p.random_generators, rng::derive(seed, 0))?;
    let lyap = cartan::estimate_lyapunov(&spec, &mu, p.lyapunov_n, p.lyapunov_trials, rng::derive(seed, 1))?;
    let mut t = Table::new(&["n", "fraction_in_band", "trials"]);
    let mut prev: Option<f64> = None;
    for &n in &p.n_list {
        let rpt = cartan::box_model_check(&spec, &mu, &lyap, n, p.eps, p.trials, rng::derive(seed, 2))?;
        if let Some(q) = prev {
            t.check(rpt.fraction >= q, || format!("band fraction drops to {} at n = {n}", rpt.fraction));
        }
        prev = Some(rpt.fraction);
        t.push(vec![n.to_string(), fmt(rpt.fraction), p.trials.to_string()]);
    }
    Ok(t)
}
