//! Maximal codimension (`s = d + 1`): multisets of `d + 1` points affinely
//! spanning `F_2^r`, up to the affine group `AGL(r, F_2)`.
//!
//! Points are stored as integers `Σ x_j 2^j`. The canonical form is the
//! lexicographically least sorted point sequence in the orbit, found by a
//! search that fixes a base point and then assigns basis images in
//! increasing order.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::algebra::{DegreeMatrix, NefPartition, TorsionRow, WeightVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanningMultiset {
    r: usize,
    points: Vec<u32>,
}

impl SpanningMultiset {
    pub fn new(r: usize, mut points: Vec<u32>) -> Result<Self> {
        if r > 16 {
            return Err(Error::Argument(format!("dimension {r} too large")));
        }
        if points.is_empty() {
            return Err(Error::structural("empty multiset"));
        }
        if let Some(p) = points.iter().find(|&&p| p >> r != 0) {
            return Err(Error::structural(format!("point {p} outside F_2^{r}")));
        }
        points.sort_unstable();
        if affine_rank(&points) != r {
            return Err(Error::contract(format!("points {points:?} do not affinely span F_2^{r}")));
        }
        Ok(SpanningMultiset { r, points })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }
}

fn affine_rank(points: &[u32]) -> usize {
    let mut basis: Vec<u32> = Vec::new();
    for &p in points {
        let mut x = p ^ points[0];
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Partial linear map over F_2, kept in echelon form on the source side.
#[derive(Clone, Default)]
struct PartialMap {
    rows: Vec<(u32, u32)>,
}

impl PartialMap {
    /// Image of `x` if it lies in the current span.
    fn image(&self, mut x: u32) -> Option<u32> {
        let mut img = 0;
        for &(v, i) in &self.rows {
            if x ^ v < x {
                x ^= v;
                img ^= i;
            }
        }
        (x == 0).then_some(img)
    }

    fn extend(&mut self, mut x: u32, mut img: u32) {
        for &(v, i) in &self.rows {
            if x ^ v < x {
                x ^= v;
                img ^= i;
            }
        }
        self.rows.push((x, img));
        self.rows.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    }
}

fn search(pts: &[u32], map: &PartialMap, k: usize, prefix: &mut Vec<u32>, best: &mut Option<Vec<u32>>) {
    let outside: BTreeSet<u32> = pts.iter().copied().filter(|&x| map.image(x).is_none()).collect();
    if outside.is_empty() {
        if best.as_ref().is_none_or(|b| *prefix < *b) {
            *best = Some(prefix.clone());
        }
        return;
    }
    for &x in &outside {
        let mut m2 = map.clone();
        m2.extend(x, 1 << k);
        let mut block: Vec<u32> =
            pts.iter().filter(|&&y| map.image(y).is_none()).filter_map(|&y| m2.image(y)).collect();
        block.sort_unstable();
        let len = prefix.len();
        prefix.extend_from_slice(&block);
        let keep = match best {
            Some(b) => prefix[..] <= b[..prefix.len()],
            None => true,
        };
        if keep {
            search(pts, &m2, k + 1, prefix, best);
        }
        prefix.truncate(len);
    }
}

/// Least sorted point sequence in the `AGL(r, F_2)`-orbit of `points`.
pub fn canonical_points(points: &[u32]) -> Vec<u32> {
    let distinct: BTreeSet<u32> = points.iter().copied().collect();
    let mult = |p: u32| points.iter().filter(|&&q| q == p).count();
    let top = distinct.iter().map(|&p| mult(p)).max().unwrap_or(0);
    let mut best: Option<Vec<u32>> = None;
    for &p0 in distinct.iter().filter(|&&p| mult(p) == top) {
        let shifted: Vec<u32> = points.iter().map(|&q| q ^ p0).collect();
        let mut prefix = vec![0; top];
        search(&shifted, &PartialMap::default(), 0, &mut prefix, &mut best);
    }
    best.unwrap_or_default()
}

/// Canonical representative of the orbit of `m`.
pub fn canonical_orbit(m: &SpanningMultiset) -> SpanningMultiset {
    SpanningMultiset { r: m.r, points: canonical_points(&m.points) }
}

/// Canonical representatives of all orbits of `d + 1` points spanning
/// `F_2^r`, sorted.
pub fn orbits(d: usize, r: usize) -> Vec<SpanningMultiset> {
    if r > d {
        return Vec::new();
    }
    let size = 1u32 << r;
    let mut level: BTreeSet<Vec<u32>> = BTreeSet::from([vec![0]]);
    for _ in 1..=d {
        let next: Vec<Vec<u32>> = level
            .par_iter()
            .flat_map_iter(|m| {
                (0..size).map(move |p| {
                    let mut v = m.clone();
                    v.push(p);
                    canonical_points(&v)
                })
            })
            .collect();
        level = next.into_iter().collect();
    }
    level.into_iter().filter(|v| affine_rank(v) == r).map(|points| SpanningMultiset { r, points }).collect()
}

/// Orbit counts for `r = 0..=d` and their total.
pub fn count(d: usize) -> Result<(Vec<usize>, usize)> {
    if d == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    let per: Vec<usize> = (0..=d).into_par_iter().map(|r| orbits(d, r).len()).collect();
    let total = per.iter().sum();
    Ok((per, total))
}

/// Degree matrix `[1 1; A A]` with all torsion orders 2, where column `i` of
/// `A` is the `i`-th point, and the partition pairing column `i` with `i + s`.
pub fn to_degree_matrix(m: &SpanningMultiset) -> Result<(DegreeMatrix, NefPartition)> {
    let s = m.points.len();
    let w = WeightVector::new(vec![1; 2 * s])?;
    let rows = (0..m.r)
        .map(|j| {
            let half: Vec<u64> = m.points.iter().map(|&p| u64::from(p >> j & 1)).collect();
            TorsionRow::new(2, [half.clone(), half].concat())
        })
        .collect::<Result<Vec<_>>>()?;
    let q = DegreeMatrix::new(w, rows)?;
    let p = NefPartition::new((0..s).map(|i| vec![i, i + s]).collect())?;
    Ok((q, p))
}

/// All elements `(M, v)` of `AGL(r, F_2)` acting by `x ↦ Mx + v`, with `M`
/// given by its column images. Exponential; for tests.
pub fn agl_brute_force(r: usize) -> Vec<(Vec<u32>, u32)> {
    let size = 1u32 << r;
    let mut gl: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::new();
        for cols in &gl {
            for c in 1..size {
                let mut v = cols.clone();
                v.push(c);
                if affine_rank(&[&[0][..], &v[..]].concat()) == v.len() {
                    next.push(v);
                }
            }
        }
        gl = next;
    }
    gl.into_iter().flat_map(|m| (0..size).map(move |v| (m.clone(), v))).collect()
}

/// Image of a point under `x ↦ Mx + v`.
pub fn agl_apply(m: &[u32], v: u32, x: u32) -> u32 {
    m.iter().enumerate().filter(|(j, _)| x >> j & 1 == 1).fold(v, |acc, (_, &c)| acc ^ c)
}
