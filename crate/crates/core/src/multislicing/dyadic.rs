//! Dyadic cells, point clouds and covering numbers.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grassmannian::{BoxTest, Flag, Subspace};

/// Finest supported level; `x · 2^k` stays exact in binary floating point.
pub const MAX_LEVEL: u32 = 40;

/// Integer coordinates of a dyadic cell.
pub type Cell = Vec<i64>;

/// The partition of `ℝ^D` into cubes `2^{−k}(z + [0,1)^D)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicPartition {
    ambient_dim: usize,
    level: u32,
}

impl DyadicPartition {
    pub fn new(ambient_dim: usize, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelMismatch(format!("level {level} exceeds {MAX_LEVEL}")));
        }
        Ok(Self { ambient_dim, level })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn cell_of(&self, x: &[f64]) -> Cell {
        cell_at(x, self.level)
    }

    /// Number of cells meeting the cloud.
    pub fn count(&self, cloud: &PointCloud) -> usize {
        count_cells(cloud.points().iter().map(|p| p.as_slice()), self.level)
    }
}

pub(crate) fn cell_at(x: &[f64], level: u32) -> Cell {
    let scale = (level as f64).exp2();
    x.iter().map(|&c| (c * scale).floor() as i64).collect()
}

pub(crate) fn count_cells<'a>(points: impl Iterator<Item = &'a [f64]>, level: u32) -> usize {
    points.map(|p| cell_at(p, level)).collect::<HashSet<_>>().len()
}

/// The level `k` with `2^{−k−1} < η ≤ 2^{−k}`.
pub fn pixelize(eta: f64) -> Result<u32> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidEta(eta));
    }
    let mut k = 0u32;
    while eta <= (-(k as f64 + 1.0)).exp2() {
        k += 1;
        if k > MAX_LEVEL {
            return Err(Error::InvalidEta(eta));
        }
    }
    Ok(k)
}

/// Finite subset of `[0,1)^D`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<DVector<f64>>,
    separation: f64,
}

/// Largest cloud for which a declared separation is verified.
pub const SEPARATION_CHECK_LIMIT: usize = 100_000;

impl PointCloud {
    /// `separation = 0` means unknown. A positive separation is verified.
    pub fn new(dim: usize, points: Vec<DVector<f64>>, separation: f64) -> Result<Self> {
        for p in &points {
            if p.len() != dim {
                return Err(Error::AmbientMismatch(p.len(), dim));
            }
            if let Some(&c) = p.iter().find(|&&c| !(0.0..1.0).contains(&c)) {
                return Err(Error::InvalidParameter(format!("coordinate {c} outside [0, 1)")));
            }
        }
        if !(separation >= 0.0) {
            return Err(Error::InvalidParameter(format!("separation {separation} is negative")));
        }
        let cloud = Self { dim, points, separation };
        if separation > 0.0 && cloud.len() <= SEPARATION_CHECK_LIMIT {
            let found = cloud.min_separation_below(separation);
            if let Some(d) = found {
                return Err(Error::InvalidParameter(format!("points at distance {d} < separation {separation}")));
            }
        }
        Ok(cloud)
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(dim, rows.iter().map(|r| DVector::from_row_slice(r)).collect(), 0.0)
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new(), separation: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Sub-cloud with the given point indices.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self { dim: self.dim, points: idx.iter().map(|&i| self.points[i].clone()).collect(), separation: self.separation }
    }

    /// Some pairwise distance below `s`, found by hashing into cells of side ≥ s.
    fn min_separation_below(&self, s: f64) -> Option<f64> {
        let level = pixelize(s.min(1.0)).unwrap_or(MAX_LEVEL);
        let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (i, p) in self.points.iter().enumerate() {
            grid.entry(cell_at(p.as_slice(), level)).or_default().push(i);
        }
        let offsets = neighbour_offsets(self.dim);
        for (i, p) in self.points.iter().enumerate() {
            let c = cell_at(p.as_slice(), level);
            for off in &offsets {
                let key: Cell = c.iter().zip(off).map(|(a, b)| a + b).collect();
                for &j in grid.get(&key).into_iter().flatten() {
                    if j > i {
                        let d = (p - &self.points[j]).norm();
                        if d < s {
                            return Some(d);
                        }
                    }
                }
            }
        }
        None
    }

    /// One row per point, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record((0..self.dim).map(|i| format!("x{i}")))?;
        for p in &self.points {
            wr.write_record(p.iter().map(|c| format!("{c:.16e}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let dim = rd.headers()?.len();
        let mut points = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            points.push(DVector::from_vec(row));
        }
        Self::new(dim, points, 0.0)
    }
}

fn neighbour_offsets(d: usize) -> Vec<Vec<i64>> {
    (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect()
}

/// Dyadic proxy `N̂_δ(A)`: cells of side `2^{−k}` meeting `A`, `k = pixelize(δ)`.
///
/// Any `δ`-ball meets at most `3^D` such cells and a cell holds a bounded number
/// of `δ`-separated points, so `N̂_δ` and `N_δ` agree up to factors depending on `D` only.
pub fn covering_number(a: &PointCloud, delta: f64) -> Result<usize> {
    let level = pixelize(delta.min(1.0))?;
    Ok(count_cells(a.points().iter().map(|p| p.as_slice()), level))
}

fn lex_order(a: &PointCloud) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| {
        a.points[i].iter().zip(a.points[j].iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

/// Greedy cover by closed `δ`-balls centred at points, in lexicographic order.
pub fn greedy_ball_cover(a: &PointCloud, delta: f64) -> usize {
    let order = lex_order(a);
    let mut covered = vec![false; a.len()];
    let mut count = 0;
    for &i in &order {
        if covered[i] {
            continue;
        }
        count += 1;
        for &j in &order {
            if !covered[j] && (&a.points[j] - &a.points[i]).norm() <= delta {
                covered[j] = true;
            }
        }
    }
    count
}

/// Greedy cover by translates of `Σ_i B^{V_i}(δ^{r_i})`, with blockwise membership.
pub fn covering_number_box(a: &PointCloud, flag: &Flag<f64>, r: &[f64], delta: f64) -> Result<usize> {
    if flag.ambient_dim() != a.dim() {
        return Err(Error::AmbientMismatch(flag.ambient_dim(), a.dim()));
    }
    if r.len() != flag.len() || r.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || r.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadExponents(format!("{r:?} for a flag of length {}", flag.len())));
    }
    let test = BoxTest::new(flag, r, delta, flag.len() as f64);
    let order = lex_order(a);
    let mut covered = vec![false; a.len()];
    let mut count = 0;
    for &i in &order {
        if covered[i] {
            continue;
        }
        count += 1;
        for &j in &order {
            if !covered[j] && test.contains(&(&a.points[j] - &a.points[i])) {
                covered[j] = true;
            }
        }
    }
    Ok(count)
}

/// Coordinates of the orthogonal projection onto `l` in its frame.
pub(crate) fn project(a: &PointCloud, l: &Subspace<f64>) -> Vec<DVector<f64>> {
    let ft = l.frame().transpose();
    a.points().iter().map(|p| &ft * p).collect()
}

/// `N̂_δ(π_L A)`, counted in the orthonormal coordinates of `L`.
pub fn projected_covering_number(a: &PointCloud, l: &Subspace<f64>, delta: f64) -> Result<usize> {
    if l.ambient_dim() != a.dim() {
        return Err(Error::AmbientMismatch(l.ambient_dim(), a.dim()));
    }
    let level = pixelize(delta.min(1.0))?;
    let proj = project(a, l);
    Ok(count_cells(proj.iter().map(|p| p.as_slice()), level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_cloud(d: usize, n: usize, seed: u64) -> PointCloud {
        let mut r = rng::rng(seed);
        let pts = (0..n).map(|_| DVector::from_fn(d, |_, _| r.random::<f64>())).collect();
        PointCloud::new(d, pts, 0.0).unwrap()
    }

    #[test]
    fn pixelize_examples() {
        assert_eq!(pixelize(0.3).unwrap(), 1);
        assert_eq!(pixelize(0.5).unwrap(), 1);
        assert_eq!(pixelize(1.0).unwrap(), 0);
        assert_eq!(pixelize(0.25).unwrap(), 2);
        assert!(matches!(pixelize(0.0), Err(Error::InvalidEta(_))));
        assert!(matches!(pixelize(1.5), Err(Error::InvalidEta(_))));
        assert!(pixelize(1e-15).is_err());
    }

    #[test]
    fn pixelize_double_inequality() {
        let mut r = rng::rng(0);
        for _ in 0..10_000 {
            let eta: f64 = (-r.random_range(0.0..39.0f64)).exp2() * r.random_range(0.5..1.0);
            let k = pixelize(eta).unwrap() as f64;
            assert!((-k - 1.0).exp2() < eta && eta <= (-k).exp2());
        }
    }

    #[test]
    fn covering_examples() {
        let equi = PointCloud::from_rows(1, &(0..16).map(|k| vec![k as f64 / 16.0]).collect::<Vec<_>>()).unwrap();
        assert_eq!(covering_number(&equi, 1.0 / 16.0).unwrap(), 16);
        let single = PointCloud::from_rows(2, &[vec![0.3, 0.7]]).unwrap();
        for delta in [1.0, 0.1, 1e-6] {
            assert_eq!(covering_number(&single, delta).unwrap(), 1);
        }
        assert_eq!(covering_number(&PointCloud::empty(2), 0.1).unwrap(), 0);
    }

    #[test]
    fn dyadic_proxy_vs_greedy() {
        for (d, seed) in [(2usize, 1u64), (3, 2), (2, 3), (3, 4)] {
            let a = random_cloud(d, 100, seed);
            for delta in [0.3, 0.1, 0.05] {
                let nhat = covering_number(&a, delta).unwrap() as f64;
                let g = greedy_ball_cover(&a, delta) as f64;
                let c = 3f64.powi(d as i32);
                assert!(nhat <= c * g && g <= c * nhat, "d={d} δ={delta}: {nhat} vs {g}");
            }
        }
    }

    #[test]
    fn isotropic_box_is_a_ball() {
        let a = random_cloud(2, 150, 9);
        let flag = Flag::new(vec![Subspace::whole(2)]).unwrap();
        for delta in [0.2, 0.05] {
            assert_eq!(covering_number_box(&a, &flag, &[1.0], delta).unwrap(), greedy_ball_cover(&a, delta));
        }
    }

    #[test]
    fn product_grid_box_cover() {
        let rows: Vec<Vec<f64>> =
            (0..16).flat_map(|i| (0..4).map(move |j| vec![i as f64 / 16.0, j as f64 / 4.0])).collect();
        let a = PointCloud::from_rows(2, &rows).unwrap();
        let flag = Flag::new(vec![Subspace::coordinate(2, &[0]), Subspace::whole(2)]).unwrap();
        let got = covering_number_box(&a, &flag, &[0.5, 1.0], 1.0 / 16.0).unwrap();
        // Oracle: blocks decouple; each row is covered greedily by intervals of
        // half-width 2·δ^{1/2} in x, and rows are 1/4 > 2·δ apart in y.
        let half = 2.0 * (1.0f64 / 16.0).sqrt();
        let per_row = {
            let (mut n, mut start) = (0, None::<f64>);
            for i in 0..16 {
                let x = i as f64 / 16.0;
                if start.is_none_or(|s| x - s > half) {
                    n += 1;
                    start = Some(x);
                }
            }
            n
        };
        assert_eq!(got, 4 * per_row);
        assert_eq!(got, 8);
        assert!(covering_number_box(&a, &flag, &[1.0, 0.5], 1.0 / 16.0).is_err());
        assert_eq!(covering_number_box(&PointCloud::empty(2), &flag, &[0.5, 1.0], 0.1).unwrap(), 0);
    }

    #[test]
    fn separation_is_verified() {
        let rows = vec![vec![0.1, 0.1], vec![0.1, 0.15]];
        let pts: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_row_slice(r)).collect();
        assert!(PointCloud::new(2, pts.clone(), 0.1).is_err());
        assert!(PointCloud::new(2, pts, 0.04).is_ok());
        assert!(PointCloud::from_rows(1, &[vec![1.0]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let a = random_cloud(3, 20, 5);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let b = PointCloud::read_csv(buf.as_slice()).unwrap();
        assert_eq!(a.points(), b.points());
    }

    proptest! {
        #[test]
        fn covering_is_monotone(seed in any::<u64>(), n in 1usize..60, k in 1usize..60) {
            let a = random_cloud(2, n + k, seed);
            let sub = a.select(&(0..n).collect::<Vec<_>>());
            for delta in [0.5, 0.1, 0.02] {
                prop_assert!(covering_number(&sub, delta).unwrap() <= covering_number(&a, delta).unwrap());
            }
            prop_assert!(covering_number(&a, 0.2).unwrap() <= covering_number(&a, 0.05).unwrap());
        }
    }
}
