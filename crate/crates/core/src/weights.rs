//! Enumeration of s-nef weight vectors together with their nef-partitions.
//!
//! Blocks of a nef-partition are rescaled primitive weight systems `c_i W_i`
//! where each `W_i` has `lcm | sum`. Weight systems of length `k` are in
//! bijection with unit-fraction decompositions `1 = Σ 1/q_i` via
//! `w_i = S / q_i`, which is how they are enumerated here.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::algebra::{NefPartition, WeightVector};
use crate::arith::{self, divisors, gcd};
use crate::error::{Error, Result};

/// Primitive non-decreasing tuple whose lcm divides its sum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightSystem(Vec<u64>);

impl WeightSystem {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.len() < 2 || entries.windows(2).any(|w| w[0] > w[1]) || entries[0] == 0 {
            return Err(Error::structural(format!("{entries:?} is not a non-decreasing positive tuple")));
        }
        if arith::gcd_all(entries.iter().copied()) != 1 {
            return Err(Error::structural(format!("{entries:?} is not primitive")));
        }
        let l = arith::lcm_all(entries.iter().copied())?;
        if entries.iter().sum::<u64>() % l != 0 {
            return Err(Error::structural(format!("lcm of {entries:?} does not divide the sum")));
        }
        Ok(WeightSystem(entries))
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn lcm(&self) -> u64 {
        // validated at construction, cannot overflow past the sum
        arith::lcm_all(self.0.iter().copied()).expect("lcm divides the sum")
    }

    pub fn max(&self) -> u64 {
        *self.0.last().expect("non-empty")
    }
}

/// An s-nef weight vector with all of its nef-partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightPair {
    pub weights: WeightVector,
    pub partitions: Vec<NefPartition>,
}

fn unit_fractions(k_left: usize, min_q: u128, num: u128, den: u128, qs: &mut Vec<u128>, out: &mut Vec<Vec<u128>>) {
    if k_left == 1 {
        if den.is_multiple_of(num) && den / num >= min_q {
            qs.push(den / num);
            out.push(qs.clone());
            qs.pop();
        }
        return;
    }
    // 1/q < num/den strictly (more terms follow), and 1/q >= num/(den*k_left)
    let lo = min_q.max(den / num + 1);
    let hi = (k_left as u128 * den) / num;
    for q in lo..=hi {
        let n2 = num * q - den;
        let d2 = den * q;
        let g = num_integer::gcd(n2, d2);
        qs.push(q);
        unit_fractions(k_left - 1, q, n2 / g, d2 / g, qs, out);
        qs.pop();
    }
}

/// All weight systems of length `k`, lexicographically sorted.
pub fn enumerate_weight_systems(k: usize) -> Result<Vec<WeightSystem>> {
    if k < 2 {
        return Err(Error::Argument(format!("weight systems need k >= 2, got {k}")));
    }
    let mut sols = Vec::new();
    unit_fractions(k, 1, 1, 1, &mut Vec::with_capacity(k), &mut sols);
    let mut out = Vec::with_capacity(sols.len());
    for qs in sols {
        let l = qs.iter().try_fold(1u128, |acc, &q| {
            (acc / num_integer::gcd(acc, q)).checked_mul(q).ok_or(Error::Overflow("unit fraction lcm"))
        })?;
        let mut w: Vec<u64> = qs
            .iter()
            .map(|&q| u64::try_from(l / q).map_err(|_| Error::Overflow("weight system entry")))
            .collect::<Result<_>>()?;
        w.sort_unstable();
        out.push(WeightSystem(w));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Non-increasing tuples `d_1 ≥ … ≥ d_s ≥ 2` with `Σ d_i = n + 1`.
pub fn enumerate_block_size_tuples(n: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let hi = max.min(left.saturating_sub(2 * (parts - 1)));
        for d in (2..=hi).rev() {
            cur.push(d);
            rec(left - d, parts - 1, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if s == 0 || n + 1 < 2 * s {
        return out;
    }
    rec(n + 1, s, n + 1, &mut Vec::new(), &mut out);
    out
}

/// Primitive scalings `(c_1, …, c_s)` making `c_1 W_1 ∪ … ∪ c_s W_s` a nef-partitioned
/// weight vector: `c_1 | lcm(S_2..S_s)`, `c_i L_i | c_j S_j`, `c_i S_i > c_j m_j`.
pub fn enumerate_scalings(ws: &[WeightSystem]) -> Result<Vec<Vec<u64>>> {
    let s = ws.len();
    if s == 0 {
        return Ok(Vec::new());
    }
    let l: Vec<u64> = ws.iter().map(WeightSystem::lcm).collect();
    let sum: Vec<u64> = ws.iter().map(WeightSystem::sum).collect();
    let max: Vec<u64> = ws.iter().map(WeightSystem::max).collect();
    let lcm_rest = arith::lcm_all(sum[1..].iter().copied())?;
    let mut out = Vec::new();
    for c1 in divisors(lcm_rest) {
        let c1l1 = arith::mul(c1, l[0])?;
        let c1s1 = arith::mul(c1, sum[0])?;
        // candidates for c_i, i >= 2
        let mut cands: Vec<Vec<u64>> = Vec::with_capacity(s - 1);
        for i in 1..s {
            if c1s1 % l[i] != 0 {
                cands.clear();
                break;
            }
            let bound = c1s1 / l[i];
            let step = c1l1 / gcd(c1l1, sum[i]);
            if !bound.is_multiple_of(step) {
                cands.clear();
                break;
            }
            cands.push(divisors(bound / step).into_iter().map(|d| d * step).collect());
        }
        if cands.len() != s - 1 {
            continue;
        }
        let mut c = vec![c1];
        product(&cands, &mut c, &mut |c: &[u64]| {
            if scaling_ok(c, &l, &sum, &max) {
                out.push(c.to_vec());
            }
        });
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn product(cands: &[Vec<u64>], cur: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
    if cands.is_empty() {
        f(cur);
        return;
    }
    for &c in &cands[0] {
        cur.push(c);
        product(&cands[1..], cur, f);
        cur.pop();
    }
}

pub(crate) fn scaling_ok(c: &[u64], l: &[u64], sum: &[u64], max: &[u64]) -> bool {
    let s = c.len();
    if arith::gcd_all(c.iter().copied()) != 1 {
        return false;
    }
    if s > 1 {
        let Ok(lcm_rest) = arith::lcm_all(sum[1..].iter().copied()) else { return false };
        if lcm_rest % c[0] != 0 {
            return false;
        }
    } else if c[0] != 1 {
        return false;
    }
    for i in 0..s {
        for j in 0..s {
            let a = c[i] as u128 * l[i] as u128;
            let b = c[j] as u128 * sum[j] as u128;
            if !b.is_multiple_of(a) {
                return false;
            }
            if c[i] as u128 * sum[i] as u128 <= c[j] as u128 * max[j] as u128 {
                return false;
            }
        }
    }
    true
}

/// All s-nef weight vectors of length `n + 1` with every nef-partition
/// (closed under permutations of equal weights), sorted by weight vector.
///
/// Empty when the complete intersection would have non-positive dimension.
pub fn assemble_weight_pairs(n: usize, s: usize) -> Result<Vec<WeightPair>> {
    if s == 0 || n <= s {
        return Ok(Vec::new());
    }
    let tuples = enumerate_block_size_tuples(n, s);
    let mut tables: BTreeMap<usize, Vec<WeightSystem>> = BTreeMap::new();
    for &k in tuples.iter().flatten() {
        if let std::collections::btree_map::Entry::Vacant(e) = tables.entry(k) {
            e.insert(enumerate_weight_systems(k)?);
        }
    }
    // work items: one per ordered choice of weight systems
    let mut items: Vec<Vec<&WeightSystem>> = Vec::new();
    for sizes in &tuples {
        let mut cur = Vec::new();
        choose_systems(sizes, &tables, usize::MAX, &mut cur, &mut items);
    }
    let found: Vec<Vec<u64>> = items
        .par_iter()
        .map(|ws| -> Result<Vec<Vec<u64>>> {
            let owned: Vec<WeightSystem> = ws.iter().map(|w| (*w).clone()).collect();
            let mut out = Vec::new();
            for c in enumerate_scalings(&owned)? {
                let mut w: Vec<u64> = Vec::with_capacity(n + 1);
                for (ci, wi) in c.iter().zip(&owned) {
                    for &x in wi.entries() {
                        w.push(arith::mul(*ci, x)?);
                    }
                }
                w.sort_unstable();
                out.push(w);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let distinct: BTreeSet<Vec<u64>> = found.into_iter().collect();
    distinct
        .into_par_iter()
        .map(|w| {
            let weights = WeightVector::new(w)?;
            let partitions = expand_partitions(&weights, s)?;
            Ok(WeightPair { weights, partitions })
        })
        .collect()
}

fn choose_systems<'a>(
    sizes: &[usize],
    tables: &'a BTreeMap<usize, Vec<WeightSystem>>,
    prev_idx: usize,
    cur: &mut Vec<&'a WeightSystem>,
    out: &mut Vec<Vec<&'a WeightSystem>>,
) {
    let i = cur.len();
    if i == sizes.len() {
        out.push(cur.clone());
        return;
    }
    let table = &tables[&sizes[i]];
    // equal block sizes: W_i >=lex W_{i+1}, tables are sorted ascending
    let hi = if i > 0 && sizes[i - 1] == sizes[i] { prev_idx + 1 } else { table.len() };
    for idx in 0..hi.min(table.len()) {
        cur.push(&table[idx]);
        choose_systems(sizes, tables, idx, cur, out);
        cur.pop();
    }
}

/// Every index partition of `{0..n}` into `s` blocks of size ≥ 2 that is nef
/// for the torsion-free matrix `[w]`, with each block degree exceeding every weight.
pub fn expand_partitions(w: &WeightVector, s: usize) -> Result<Vec<NefPartition>> {
    let l = w.lcm()?;
    let ws = w.as_slice();
    let wmax = *ws.last().expect("non-empty");
    let n1 = ws.len();
    let mut out = Vec::new();
    let mut assign = vec![0usize; n1];
    let mut sums: Vec<u64> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();

    struct Ctx<'a> {
        ws: &'a [u64],
        s: usize,
        l: u64,
        wmax: u64,
    }

    fn rec(
        ctx: &Ctx,
        i: usize,
        assign: &mut [usize],
        sums: &mut Vec<u64>,
        sizes: &mut Vec<usize>,
        out: &mut Vec<NefPartition>,
    ) {
        let n1 = ctx.ws.len();
        let left = n1 - i;
        let missing: usize = sizes.iter().map(|&z| 2usize.saturating_sub(z)).sum::<usize>() + 2 * (ctx.s - sizes.len());
        if missing > left {
            return;
        }
        if i == n1 {
            if sizes.len() == ctx.s && sums.iter().all(|&x| x % ctx.l == 0 && x > ctx.wmax) {
                let mut blocks = vec![Vec::new(); ctx.s];
                for (idx, &b) in assign.iter().enumerate() {
                    blocks[b].push(idx);
                }
                out.push(NefPartition::normalized(blocks));
            }
            return;
        }
        for b in 0..sizes.len() {
            assign[i] = b;
            sums[b] += ctx.ws[i];
            sizes[b] += 1;
            rec(ctx, i + 1, assign, sums, sizes, out);
            sums[b] -= ctx.ws[i];
            sizes[b] -= 1;
        }
        if sizes.len() < ctx.s {
            assign[i] = sizes.len();
            sums.push(ctx.ws[i]);
            sizes.push(1);
            rec(ctx, i + 1, assign, sums, sizes, out);
            sums.pop();
            sizes.pop();
        }
    }

    let ctx = Ctx { ws, s, l, wmax };
    if s >= 1 {
        rec(&ctx, 0, &mut assign, &mut sums, &mut sizes, &mut out);
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{is_nef_partition, DegreeMatrix};

    fn systems(k: usize) -> Vec<Vec<u64>> {
        enumerate_weight_systems(k).unwrap().into_iter().map(|w| w.0).collect()
    }

    #[test]
    fn small_weight_systems() {
        assert_eq!(systems(2), vec![vec![1, 1]]);
        assert_eq!(systems(3), vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 3]]);
        assert_eq!(systems(4).len(), 14);
        assert!(enumerate_weight_systems(1).is_err());
    }

    #[test]
    fn weight_systems_satisfy_invariants() {
        for k in 2..=5 {
            for w in enumerate_weight_systems(k).unwrap() {
                assert!(WeightSystem::new(w.0.clone()).is_ok(), "{:?}", w);
            }
        }
    }

    #[test]
    fn block_sizes() {
        assert_eq!(enumerate_block_size_tuples(3, 2), vec![vec![2, 2]]);
        assert_eq!(enumerate_block_size_tuples(5, 2), vec![vec![4, 2], vec![3, 3]]);
        assert_eq!(enumerate_block_size_tuples(6, 3), vec![vec![3, 2, 2]]);
        assert!(enumerate_block_size_tuples(4, 3).is_empty());
    }

    #[test]
    fn scalings_examples() {
        let one_one = WeightSystem::new(vec![1, 1]).unwrap();
        assert_eq!(enumerate_scalings(&[one_one.clone(), one_one.clone()]).unwrap(), vec![vec![1, 1]]);
        let p2 = WeightSystem::new(vec![1, 1, 1]).unwrap();
        assert_eq!(enumerate_scalings(&[p2]).unwrap(), vec![vec![1]]);
    }

    #[test]
    fn scalings_against_brute_force() {
        let tables: Vec<WeightSystem> = (2..=4).flat_map(|k| enumerate_weight_systems(k).unwrap()).collect();
        for a in &tables {
            for b in &tables {
                let ws = [a.clone(), b.clone()];
                let got = enumerate_scalings(&ws).unwrap();
                let bound = a.sum() * b.sum();
                let l = [a.lcm(), b.lcm()];
                let sum = [a.sum(), b.sum()];
                let max = [a.max(), b.max()];
                let mut want = Vec::new();
                for c1 in 1..=bound {
                    for c2 in 1..=bound {
                        if scaling_ok(&[c1, c2], &l, &sum, &max) {
                            want.push(vec![c1, c2]);
                        }
                    }
                }
                assert_eq!(got, want, "{:?} {:?}", a, b);
            }
        }
    }

    #[test]
    fn assembled_pairs_examples() {
        let pairs = assemble_weight_pairs(2, 1).unwrap();
        let ws: Vec<Vec<u64>> = pairs.iter().map(|p| p.weights.as_slice().to_vec()).collect();
        assert_eq!(ws, vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 3]]);
        assert!(pairs.iter().all(|p| p.partitions.len() == 1));

        let pairs = assemble_weight_pairs(3, 2).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].weights.as_slice(), &[1, 1, 1, 1]);

        assert!(assemble_weight_pairs(1, 1).unwrap().is_empty());
    }

    #[test]
    fn expand_partitions_examples() {
        let w = WeightVector::new(vec![1, 1, 1, 1]).unwrap();
        let ps = expand_partitions(&w, 2).unwrap();
        let shown: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, vec!["{0,1|2,3}", "{0,2|1,3}", "{0,3|1,2}"]);
        assert_eq!(expand_partitions(&WeightVector::new(vec![1, 1, 1]).unwrap(), 1).unwrap().len(), 1);
    }

    fn all_set_partitions(n1: usize, s: usize) -> Vec<Vec<Vec<usize>>> {
        // restricted growth strings
        let mut out = Vec::new();
        let mut a = vec![0usize; n1];
        fn rec(i: usize, maxb: usize, s: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i == a.len() {
                if maxb == s {
                    let mut blocks = vec![Vec::new(); s];
                    for (idx, &b) in a.iter().enumerate() {
                        blocks[b].push(idx);
                    }
                    out.push(blocks);
                }
                return;
            }
            for b in 0..=maxb.min(s - 1) {
                a[i] = b;
                rec(i + 1, maxb.max(b + 1), s, a, out);
            }
        }
        rec(0, 0, s, &mut a, &mut out);
        out
    }

    #[test]
    fn expand_partitions_against_brute_force() {
        let w = WeightVector::new(vec![1, 1, 2, 2, 3, 3]).unwrap();
        let q = DegreeMatrix::torsion_free(w.clone());
        for s in 1..=3 {
            let got = expand_partitions(&w, s).unwrap();
            let mut want: Vec<NefPartition> = all_set_partitions(6, s)
                .into_iter()
                .map(|b| NefPartition::new(b).unwrap())
                .filter(|p| is_nef_partition(&q, p).unwrap())
                .collect();
            want.sort();
            assert_eq!(got, want, "s = {s}");
        }
    }
}
