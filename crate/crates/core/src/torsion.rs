//! Torsion rows compatible with an s-nef weight vector, and their
//! combination into degree matrices with larger torsion.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use crate::algebra::{
    is_almost_free, kernel_lattice, nef_with_data, picard_data, DegreeMatrix, NefPartition, TorsionRow, WeightVector,
};
use crate::arith::{divisors, gcd, gcd_all, mod_inverse, units};
use crate::error::{Error, Result};
use crate::iso::{canonical_degree_matrix, lattice_key};

/// A subset of the nef-partitions of a weight vector, by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionSet(Vec<u64>);

impl PartitionSet {
    pub fn new() -> Self {
        PartitionSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        let mut s = PartitionSet::new();
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        let (w, b) = (i / 64, i % 64);
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn intersect(&self, other: &PartitionSet) -> PartitionSet {
        let mut v: Vec<u64> = self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        PartitionSet(v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(wi, &w)| (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| wi * 64 + b))
    }
}

/// A minimal torsion row together with the nef-partitions it admits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorsionPair {
    pub row: TorsionRow,
    pub partitions: PartitionSet,
}

/// Shears `t ≡ t0 (mod step)` still allowed after fixing earlier columns.
/// Applies unit `u` to entry `e` of weight `wi`, returns the smallest value
/// reachable and narrows the progression to the shears attaining it.
fn shear_min(u: u64, e: u64, wi: u64, mu: u64, t0: &mut u64, step: &mut u64) -> u64 {
    let wi = wi % mu;
    let c = ((u as u128 * e as u128 + *t0 as u128 * wi as u128) % mu as u128) as u64;
    let a = ((*step as u128 * wi as u128) % mu as u128) as u64;
    let g = gcd(a, mu);
    let low = c % g;
    if g < mu {
        let m = mu / g;
        let delta = (low + mu - c) % mu;
        let inv = if m == 1 { 0 } else { mod_inverse((a / g) % m, m).expect("coprime") };
        let k0 = ((delta / g) as u128 * inv as u128 % m as u128) as u64;
        *t0 = ((*t0 as u128 + *step as u128 * k0 as u128) % mu as u128) as u64;
        *step = gcd(((*step as u128 * m as u128) % mu as u128) as u64, mu);
    }
    low
}

/// Lexicographically smallest row in the orbit of `η` under
/// `η ↦ uη + t·w (mod μ)` with `u` a unit.
pub fn torsion_orbit_canonical(row: &TorsionRow, w: &WeightVector) -> Result<TorsionRow> {
    let mu = row.order();
    let w = w.as_slice();
    if w.len() != row.len() {
        return Err(Error::structural(format!("row of length {} against {} weights", row.len(), w.len())));
    }
    let eta = row.entries();
    let mut best: Option<Vec<u64>> = None;
    let mut cur = vec![0u64; eta.len()];
    for u in units(mu) {
        let (mut t0, mut step) = (0u64, 1u64);
        let mut worse = false;
        let mut better = best.is_none();
        for i in 0..eta.len() {
            cur[i] = shear_min(u, eta[i], w[i], mu, &mut t0, &mut step);
            if !better {
                let b = best.as_ref().expect("set");
                if cur[i] > b[i] {
                    worse = true;
                    break;
                }
                better = cur[i] < b[i];
            }
        }
        if !worse && better {
            best = Some(cur.clone());
        }
    }
    TorsionRow::new(mu, best.unwrap_or_else(|| eta.to_vec()))
}

/// True iff no element of the group maps the prefix `eta` (against the same
/// prefix of `w`) to a lexicographically smaller one.
fn prefix_is_minimal(eta: &[u64], w: &[u64], mu: u64, units: &[u64]) -> bool {
    for &u in units {
        let (mut t0, mut step) = (0u64, 1u64);
        for i in 0..eta.len() {
            let low = shear_min(u, eta[i], w[i], mu, &mut t0, &mut step);
            if low < eta[i] {
                return false;
            }
            if low > eta[i] {
                break;
            }
        }
    }
    true
}

/// Possible orders `μ` of a cyclic torsion row: every such order divides all
/// block sums of some nef-partition. Capped by `mu_max`.
pub fn mu_candidates(w: &WeightVector, partitions: &[NefPartition], mu_max: u64) -> Vec<u64> {
    let ws = w.as_slice();
    let mut out = std::collections::BTreeSet::new();
    for p in partitions {
        let g = gcd_all(p.blocks().iter().map(|b| b.iter().map(|&i| ws[i]).sum::<u64>()));
        for d in divisors(g) {
            if d >= 2 && d <= mu_max {
                out.insert(d);
            }
        }
    }
    out.into_iter().collect()
}

/// Nef-partitions (by index) admitted by `[w; η]`.
pub(crate) fn admitted(q: &DegreeMatrix, partitions: &[NefPartition]) -> Result<PartitionSet> {
    let (l, ms) = picard_data(q)?;
    let mut set = PartitionSet::new();
    for (i, p) in partitions.iter().enumerate() {
        if nef_with_data(q, p, l, &ms) {
            set.insert(i);
        }
    }
    Ok(set)
}

/// All minimal torsion rows of order `mu` such that `[w; η]` is almost-free
/// and admits at least one of `partitions`, sorted by row.
pub fn enumerate_torsion_pairs(w: &WeightVector, partitions: &[NefPartition], mu: u64) -> Result<Vec<TorsionPair>> {
    if mu < 2 {
        return Err(Error::Argument(format!("torsion order must be at least 2, got {mu}")));
    }
    let ws = w.as_slice();
    let n1 = ws.len();
    let l = w.lcm()?;
    let us = units(mu);
    let mut raw: HashSet<Vec<u64>> = HashSet::new();
    for p in partitions {
        if p.num_indices() != n1 {
            return Err(Error::structural(format!("partition {p} does not fit {n1} columns")));
        }
        let sums: Vec<u64> = p.blocks().iter().map(|b| b.iter().map(|&i| ws[i]).sum()).collect();
        // an admitted partition has Cartier blocks, whose degrees μ divides
        if sums.iter().any(|s| s % l != 0 || s % mu != 0) {
            continue;
        }
        let mp = gcd_all(sums.iter().map(|s| s / l));
        let h = mu / gcd(mu, mp);
        let mut search = RowSearch {
            w: ws,
            mu,
            units: &us,
            step: ws.iter().map(|&wi| h / gcd(h, l / wi)).collect(),
            block_of: vec![0; n1],
            closes: vec![false; n1],
            acc: vec![0; p.num_blocks()],
            eta: vec![0; n1],
            out: &mut raw,
        };
        for (b, block) in p.blocks().iter().enumerate() {
            for &i in block {
                search.block_of[i] = b;
            }
            search.closes[*block.iter().max().expect("nonempty block")] = true;
        }
        search.run(0);
    }
    let mut rows: Vec<Vec<u64>> = raw.into_iter().collect();
    rows.sort();
    let mut out = Vec::new();
    for e in rows {
        let row = TorsionRow::new(mu, e)?;
        let q = DegreeMatrix::new(w.clone(), vec![row.clone()])?;
        if !is_almost_free(&q)? {
            continue;
        }
        let set = admitted(&q, partitions)?;
        if !set.is_empty() {
            out.push(TorsionPair { row, partitions: set });
        }
    }
    Ok(out)
}

/// Column-by-column search for rows with zero block sums and entries on
/// the `step` lattice, keeping only orbit-minimal prefixes.
struct RowSearch<'a> {
    w: &'a [u64],
    mu: u64,
    units: &'a [u64],
    step: Vec<u64>,
    block_of: Vec<usize>,
    /// column is the largest index of its block
    closes: Vec<bool>,
    acc: Vec<u64>,
    eta: Vec<u64>,
    out: &'a mut HashSet<Vec<u64>>,
}

impl RowSearch<'_> {
    fn run(&mut self, i: usize) {
        if i == self.eta.len() {
            self.out.insert(self.eta.clone());
            return;
        }
        let b = self.block_of[i];
        if self.closes[i] {
            let v = (self.mu - self.acc[b] % self.mu) % self.mu;
            if v.is_multiple_of(self.step[i]) {
                self.visit(i, b, v);
            }
            return;
        }
        let mut v = 0;
        while v < self.mu {
            self.visit(i, b, v);
            v += self.step[i];
        }
    }

    fn visit(&mut self, i: usize, b: usize, v: u64) {
        self.eta[i] = v;
        if !prefix_is_minimal(&self.eta[..=i], &self.w[..=i], self.mu, self.units) {
            return;
        }
        self.acc[b] += v;
        self.run(i + 1);
        self.acc[b] -= v;
    }
}

/// Every degree matrix obtained by stacking minimal rows of decreasing,
/// dividing orders that stays almost-free and keeps a common nef-partition.
/// Equal-order rows are taken in list order. Duplicated lattices are kept.
pub fn combine_torsion_rows(w: &WeightVector, pairs: &[TorsionPair]) -> Result<Vec<(DegreeMatrix, PartitionSet)>> {
    let mut out = Vec::new();
    let base = DegreeMatrix::torsion_free(w.clone());
    for (i, p) in pairs.iter().enumerate() {
        let q = base.with_row(p.row.clone())?;
        combine_dfs(pairs, i, q, p.partitions.clone(), &mut out)?;
    }
    Ok(out)
}

fn combine_dfs(
    pairs: &[TorsionPair],
    last: usize,
    q: DegreeMatrix,
    set: PartitionSet,
    out: &mut Vec<(DegreeMatrix, PartitionSet)>,
) -> Result<()> {
    let mu_last = pairs[last].row.order();
    for (j, p) in pairs.iter().enumerate() {
        let mu = p.row.order();
        if !mu_last.is_multiple_of(mu) || (mu == mu_last && j <= last) {
            continue;
        }
        let s = set.intersect(&p.partitions);
        if s.is_empty() {
            continue;
        }
        let q2 = q.with_row(p.row.clone())?;
        if is_almost_free(&q2)? {
            combine_dfs(pairs, j, q2, s, out)?;
        }
    }
    out.push((q, set));
    Ok(())
}

/// Distinct kernel lattices reachable by stacking rows, one representative
/// each (in fixed-column normal form), with their admitted nef-partitions.
pub fn torsion_lattices(w: &WeightVector, pairs: &[TorsionPair]) -> Result<Vec<(DegreeMatrix, PartitionSet)>> {
    let base = DegreeMatrix::torsion_free(w.clone());
    let mut level: Vec<(DegreeMatrix, PartitionSet)> = Vec::new();
    let mut seen: HashSet<DegreeMatrix> = HashSet::new();
    for p in pairs {
        let q = base.with_row(p.row.clone())?;
        let key = lattice_key(&q);
        if seen.insert(key.clone()) {
            level.push((key, p.partitions.clone()));
        }
    }
    let mut all = level.clone();
    while !level.is_empty() {
        let cand: Vec<Result<Vec<(DegreeMatrix, PartitionSet)>>> = level
            .par_iter()
            .map(|(q, set)| {
                let mu_last = q.torsion_rows().last().map(TorsionRow::order).unwrap_or(0);
                let mut v = Vec::new();
                for p in pairs {
                    if mu_last % p.row.order() != 0 {
                        continue;
                    }
                    let s = set.intersect(&p.partitions);
                    if s.is_empty() {
                        continue;
                    }
                    let q2 = q.with_row(p.row.clone())?;
                    if is_almost_free(&q2)? {
                        v.push((lattice_key(&q2), s));
                    }
                }
                Ok(v)
            })
            .collect();
        let mut next = Vec::new();
        for c in cand {
            for (key, s) in c? {
                if seen.insert(key.clone()) {
                    next.push((key, s));
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    Ok(all)
}
/// Canonical form of `q` with its partition set carried along the
/// canonicalizing column permutation.
fn canonical_with_set(
    q: &DegreeMatrix,
    set: &PartitionSet,
    partitions: &[NefPartition],
    index: &HashMap<NefPartition, usize>,
) -> Result<(DegreeMatrix, PartitionSet)> {
    let (canon, perm) = canonical_degree_matrix(q)?;
    let mut inv = vec![0; perm.len()];
    for (j, &i) in perm.iter().enumerate() {
        inv[i] = j;
    }
    let mut moved = PartitionSet::new();
    for pi in set.iter() {
        let image = partitions[pi].relabel(&inv);
        let k = index.get(&image).ok_or_else(|| Error::contract(format!("partition {image} not in the list")))?;
        moved.insert(*k);
    }
    Ok((canon, moved))
}

/// Isomorphism classes of degree matrices with nontrivial torsion reachable by
/// stacking rows, in canonical form, with their admitted nef-partitions (as
/// indices into `partitions`, relative to the canonical column order).
///
/// `partitions` must be closed under permutations of equal-weight columns.
pub fn torsion_classes(
    w: &WeightVector,
    partitions: &[NefPartition],
    pairs: &[TorsionPair],
) -> Result<Vec<(DegreeMatrix, PartitionSet)>> {
    let index: HashMap<NefPartition, usize> = partitions.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let base = DegreeMatrix::torsion_free(w.clone());
    let mut classes: BTreeMap<DegreeMatrix, PartitionSet> = BTreeMap::new();
    let mut level = Vec::new();
    for p in pairs {
        let q = base.with_row(p.row.clone())?;
        let (c, set) = canonical_with_set(&q, &p.partitions, partitions, &index)?;
        if !classes.contains_key(&c) {
            classes.insert(c.clone(), set.clone());
            level.push((c, set));
        }
    }
    let mut seen_keys: HashSet<Vec<Vec<i64>>> = HashSet::new();
    while !level.is_empty() {
        let cand: Vec<Result<Vec<(Vec<Vec<i64>>, DegreeMatrix, PartitionSet)>>> = level
            .par_iter()
            .map(|(q, set)| {
                let mu_last = q.torsion_rows().last().map(TorsionRow::order).unwrap_or(0);
                let mut local: HashSet<Vec<Vec<i64>>> = HashSet::new();
                let mut v = Vec::new();
                for p in pairs {
                    if mu_last % p.row.order() != 0 {
                        continue;
                    }
                    let s = set.intersect(&p.partitions);
                    if s.is_empty() {
                        continue;
                    }
                    let q2 = q.with_row(p.row.clone())?;
                    if !is_almost_free(&q2)? {
                        continue;
                    }
                    // same kernel iff related by an automorphism fixing the weights
                    let key = kernel_lattice(&q2)?;
                    if local.insert(key.clone()) {
                        v.push((key, q2, s));
                    }
                }
                Ok(v)
            })
            .collect();
        let mut fresh = Vec::new();
        for c in cand {
            for (key, q2, s) in c? {
                if seen_keys.insert(key) {
                    fresh.push((q2, s));
                }
            }
        }
        let canon: Vec<Result<(DegreeMatrix, PartitionSet)>> =
            fresh.par_iter().map(|(q2, s)| canonical_with_set(q2, s, partitions, &index)).collect();
        let mut next = Vec::new();
        for c in canon {
            let (c, set) = c?;
            if !classes.contains_key(&c) {
                classes.insert(c.clone(), set.clone());
                next.push((c, set));
            }
        }
        level = next;
    }
    Ok(classes.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::expand_partitions;

    fn wv(v: &[u64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn orbit_canonical_examples() {
        let w = wv(&[1, 1, 1]);
        let r = torsion_orbit_canonical(&TorsionRow::new(3, vec![2, 0, 1]).unwrap(), &w).unwrap();
        assert_eq!(r.entries(), &[0, 1, 2]);
        let w = wv(&[1, 1, 1, 1]);
        let r = torsion_orbit_canonical(&TorsionRow::new(2, vec![1, 1, 0, 0]).unwrap(), &w).unwrap();
        assert_eq!(r.entries(), &[0, 0, 1, 1]);
    }

    #[test]
    fn orbit_canonical_matches_brute_force() {
        let w = wv(&[1, 2, 2, 3, 4, 6]);
        for mu in [2u64, 3, 4, 6, 8, 9, 12] {
            for seed in 0..200u64 {
                let e: Vec<u64> = (0..6).map(|i| (seed * 7 + i * seed * seed + i) % mu).collect();
                let mut best = e.clone();
                for u in units(mu) {
                    for t in 0..mu {
                        let c: Vec<u64> = e.iter().zip(w.as_slice()).map(|(&x, &wi)| (u * x + t * wi) % mu).collect();
                        best = best.min(c);
                    }
                }
                let r = torsion_orbit_canonical(&TorsionRow::new(mu, e).unwrap(), &w).unwrap();
                assert_eq!(r.entries(), &best[..]);
            }
        }
    }

    #[test]
    fn spec_examples() {
        let w = wv(&[1, 1, 1]);
        let p = expand_partitions(&w, 1).unwrap();
        let pairs = enumerate_torsion_pairs(&w, &p, 3).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].row.entries(), &[0, 1, 2]);
        assert!(enumerate_torsion_pairs(&w, &p, 2).unwrap().is_empty());

        let w = wv(&[1, 1, 1, 1]);
        let p = expand_partitions(&w, 2).unwrap();
        let pairs = enumerate_torsion_pairs(&w, &p, 2).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|t| t.partitions.len() == 1));
    }

    #[test]
    fn partition_set_ops() {
        let mut a = PartitionSet::new();
        a.insert(3);
        a.insert(70);
        let b = PartitionSet::full(71);
        assert_eq!(a.intersect(&b), a);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![3, 70]);
        assert!(a.intersect(&PartitionSet::full(3)).is_empty());
        assert_eq!(b.len(), 71);
    }
}
