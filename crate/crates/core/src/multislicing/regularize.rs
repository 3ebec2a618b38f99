//! Decomposition of a point cloud into pieces regular for a dyadic filtration.
//!
//! A set `A` is regular for `𝒬 ≺ ℛ` if every `𝒬`-cell `Q` meeting `A` satisfies
//! `N_ℛ(A ∩ Q) = N_ℛ(A) / N_𝒬(A)`. For dyadic levels `l_1 < … < l_b` this says
//! that in the tree of cells meeting `A`, all nodes at a given depth have the
//! same number of children.
//!
//! The measure is uniform on the points. Fine cells are first binned by mass
//! (`2^{−j−1} < ν(R) ≤ 2^{−j}`), so cells inside one piece have masses within a
//! factor 2 of each other. Within a bin, pieces are extracted bottom-up: nodes
//! are grouped by `⌊log₂(#children)⌋` and truncated to exactly `2^k` children,
//! keeping the heaviest children and breaking ties by cell index. Truncated
//! material is re-processed until the leftover mass is at most `δ^ε`, with
//! `δ = 2^{−l_b}`; what remains is the bad part.

use std::collections::{BTreeMap, HashSet};

use super::dyadic::{cell_at, Cell, PointCloud, MAX_LEVEL};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Regularized {
    pub pieces: Vec<PointCloud>,
    pub bad: PointCloud,
}

fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::LevelMismatch("need at least two levels".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::LevelMismatch(format!("levels {levels:?} are not strictly increasing")));
    }
    if levels[levels.len() - 1] > MAX_LEVEL {
        return Err(Error::LevelMismatch(format!("final level exceeds {MAX_LEVEL}")));
    }
    Ok(())
}

/// Ancestor of a fine cell at a coarser level.
fn ancestor(c: &Cell, shift: u32) -> Cell {
    c.iter().map(|&x| x >> shift).collect()
}

/// A fine cell with its mass (point count) and its path of ancestors.
#[derive(Clone, Debug)]
struct Leaf {
    path: Vec<Cell>,
    count: usize,
}

/// One extraction pass over a set of leaves. Returns the pieces (as leaf index
/// sets) and the leftover leaf indices.
fn extract(leaves: &[Leaf], active: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let depth = leaves.first().map_or(0, |l| l.path.len());
    let mut pieces = Vec::new();
    let mut leftover = Vec::new();
    // Groups of leaves whose nodes at `d` and below are already regular, keyed
    // by the node at depth `d` (the parent of the next level up).
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(depth - 1, active.to_vec())];
    while let Some((d, group)) = stack.pop() {
        if d == 0 {
            pieces.push(group);
            continue;
        }
        // Children of nodes at depth d−1 are nodes at depth d.
        let mut by_parent: BTreeMap<&Cell, BTreeMap<&Cell, Vec<usize>>> = BTreeMap::new();
        for &i in &group {
            let p = &leaves[i].path;
            by_parent.entry(&p[d - 1]).or_default().entry(&p[d]).or_default().push(i);
        }
        let mut bins: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for children in by_parent.into_values() {
            let c = children.len();
            let k = usize::BITS - 1 - c.leading_zeros();
            let mut kids: Vec<(usize, &Cell, Vec<usize>)> = children
                .into_iter()
                .map(|(cell, ls)| (ls.iter().map(|&i| leaves[i].count).sum::<usize>(), cell, ls))
                .collect();
            kids.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            for (n, (_, _, ls)) in kids.into_iter().enumerate() {
                if n < 1 << k {
                    bins.entry(k).or_default().extend(ls);
                } else {
                    leftover.extend(ls);
                }
            }
        }
        stack.extend(bins.into_values().map(|g| (d - 1, g)));
    }
    (pieces, leftover)
}

/// Mass bin `j` with `2^{−j−1} < c/n ≤ 2^{−j}`.
fn mass_bin(c: usize, n: usize) -> u32 {
    let mut j = 0;
    while (c as u128) << (j + 1) <= n as u128 {
        j += 1;
    }
    j
}

pub fn regularize(a: &PointCloud, levels: &[u32], eps: f64) -> Result<Regularized> {
    check_levels(levels)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must be positive")));
    }
    let fine = *levels.last().expect("checked");
    let total = a.len();
    let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    for (i, p) in a.points().iter().enumerate() {
        cells.entry(cell_at(p.as_slice(), fine)).or_default().push(i);
    }
    let leaves: Vec<Leaf> = cells
        .iter()
        .map(|(c, pts)| Leaf { path: levels.iter().map(|&l| ancestor(c, fine - l)).collect(), count: pts.len() })
        .collect();
    let point_sets: Vec<&Vec<usize>> = cells.values().collect();

    let mut bins: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, l) in leaves.iter().enumerate() {
        bins.entry(mass_bin(l.count, total)).or_default().push(i);
    }
    let allowed_bad = (-(fine as f64) * eps).exp2() * total as f64;
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    let mut remaining: Vec<Vec<usize>> = bins.into_values().collect();
    loop {
        let left: usize = remaining.iter().flatten().map(|&i| leaves[i].count).sum();
        if left == 0 || left as f64 <= allowed_bad {
            break;
        }
        let mut next = Vec::new();
        for group in remaining {
            if group.is_empty() {
                continue;
            }
            let (ps, rest) = extract(&leaves, &group);
            pieces.extend(ps);
            next.push(rest);
        }
        remaining = next;
    }
    let to_cloud = |ls: &[usize]| {
        let mut idx: Vec<usize> = ls.iter().flat_map(|&l| point_sets[l].iter().copied()).collect();
        idx.sort_unstable();
        a.select(&idx)
    };
    let bad: Vec<usize> = remaining.into_iter().flatten().collect();
    Ok(Regularized { pieces: pieces.iter().map(|p| to_cloud(p)).collect(), bad: to_cloud(&bad) })
}

/// Exact check of `N_ℛ(A ∩ Q) = N_ℛ(A)/N_𝒬(A)` for every consecutive pair of levels.
pub fn is_regular(a: &PointCloud, levels: &[u32]) -> bool {
    levels.windows(2).all(|w| {
        let mut children: BTreeMap<Cell, HashSet<Cell>> = BTreeMap::new();
        for p in a.points() {
            children.entry(cell_at(p.as_slice(), w[0])).or_default().insert(cell_at(p.as_slice(), w[1]));
        }
        let n_coarse = children.len();
        let n_fine: usize = children.values().map(|s| s.len()).sum();
        children.values().all(|s| s.len() * n_coarse == n_fine)
    })
}

/// `ν(A_k)/(2N) ≤ ν(R) ≤ 2ν(A_k)/N` for each fine cell `R` of the piece, with
/// `ν` uniform on the points; compared in integers.
pub fn is_equidistributed(piece: &PointCloud, fine_level: u32) -> bool {
    let mut counts: BTreeMap<Cell, usize> = BTreeMap::new();
    for p in piece.points() {
        *counts.entry(cell_at(p.as_slice(), fine_level)).or_default() += 1;
    }
    let n = counts.len();
    let mass = piece.len();
    counts.values().all(|&c| mass <= 2 * c * n && c * n <= 2 * mass)
}
