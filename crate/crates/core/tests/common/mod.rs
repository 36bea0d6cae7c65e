//! Independent oracles shared by the test suites and the acceptance harness.
//! Each check returns how many cases it compared and how many disagreed.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cyci::algebra::{cartier_oracle, gale_dual, is_almost_free, is_nef_partition, picard_generator};
use cyci::arith::{divisors, gcd_all, units};
use cyci::autgroup::TorsionGroup;
use cyci::classify::{classify, ClassifyOptions};
use cyci::iso::{canonical_degree_matrix, lattice_key};
use cyci::maxcodim::{agl_apply, agl_brute_force, canonical_points};
use cyci::torsion::{combine_torsion_rows, enumerate_torsion_pairs, mu_candidates, torsion_classes, torsion_lattices};
use cyci::weights::{assemble_weight_pairs, enumerate_weight_systems};
use cyci::{ClassElement, DegreeMatrix, NefPartition, TorsionRow};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub checked: u64,
    pub violations: u64,
}

impl Tally {
    fn check(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
        }
    }
}

/// Every canonical matrix from `classify(d, s)` with `d ≤ d_max`.
pub fn corpus(d_max: usize) -> Vec<DegreeMatrix> {
    let mut set = BTreeSet::new();
    for d in 1..=d_max {
        for s in 1..=d + 1 {
            for r in classify(d, s, &ClassifyOptions::default()).unwrap() {
                set.insert(r.matrix);
            }
        }
    }
    set.into_iter().collect()
}

/// `(h, 0)` is Cartier iff `LM | h`, for `h ≤ 3·LM`, on the `d ≤ d_max` corpus.
pub fn picard_vs_cartier(d_max: usize) -> Tally {
    let mut t = Tally::default();
    for q in corpus(d_max) {
        let lm = picard_generator(&q).unwrap();
        let p = gale_dual(&q).unwrap();
        let zero = vec![0; q.torsion_rows().len()];
        for h in 1..=3 * lm {
            let c = ClassElement::new(h as i64, zero.clone());
            t.check(cartier_oracle(&p, &c, &q).unwrap() == (h % lm == 0));
        }
    }
    t
}

/// Sorted primitive `k`-tuples of divisors of `S` summing to `S`, for `S ≤ s_max`.
pub fn brute_weight_systems(k: usize, s_max: u64) -> BTreeSet<Vec<u64>> {
    fn rec(divs: &[u64], k: usize, left: u64, max: u64, cur: &mut Vec<u64>, out: &mut BTreeSet<Vec<u64>>) {
        if k == 0 {
            if left == 0 && gcd_all(cur.iter().copied()) == 1 {
                let mut v = cur.clone();
                v.sort_unstable();
                out.insert(v);
            }
            return;
        }
        for &x in divs.iter().filter(|&&x| x <= max && x <= left) {
            cur.push(x);
            rec(divs, k - 1, left - x, x, cur, out);
            cur.pop();
        }
    }
    let mut out = BTreeSet::new();
    for s in 1..=s_max {
        rec(&divisors(s), k, s, s, &mut Vec::new(), &mut out);
    }
    out
}

/// Weight systems for `k ≤ 5` against brute force up to the largest possible sum.
pub fn weight_systems_vs_brute_force() -> Tally {
    let mut t = Tally::default();
    for (k, bound) in [(2, 2), (3, 6), (4, 42), (5, 1806)] {
        let fast: BTreeSet<Vec<u64>> =
            enumerate_weight_systems(k).unwrap().into_iter().map(|w| w.entries().to_vec()).collect();
        let brute = brute_weight_systems(k, bound);
        for w in fast.union(&brute) {
            t.check(fast.contains(w) && brute.contains(w));
        }
    }
    t
}

fn brute_orbit_min(e: &[u64], w: &[u64], mu: u64) -> Vec<u64> {
    let mut best = e.to_vec();
    for u in units(mu) {
        for t in 0..mu {
            let c: Vec<u64> = e.iter().zip(w).map(|(&x, &wi)| (u * x + t * wi) % mu).collect();
            best = best.min(c);
        }
    }
    best
}

/// Torsion pairs against a scan of all `μ^{n+1}` rows, `μ ≤ 6`, `n + 1 ≤ 6`.
/// At most `per_cell` weight pairs per `(n, s)`, sampled with `seed`.
pub fn torsion_pairs_vs_brute_force(per_cell: usize, seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for n in 2..=5 {
        for s in 1..=n / 2 {
            let mut pairs = assemble_weight_pairs(n, s).unwrap();
            if pairs.len() > per_cell {
                pairs.shuffle(&mut rng);
                pairs.truncate(per_cell);
            }
            for pair in pairs {
                let w = pair.weights.as_slice();
                let n1 = w.len();
                for mu in 2..=6u64 {
                    let mut brute: BTreeMap<Vec<u64>, BTreeSet<usize>> = BTreeMap::new();
                    for code in 0..mu.pow(n1 as u32) {
                        let mut c = code;
                        let e: Vec<u64> = (0..n1)
                            .map(|_| {
                                let x = c % mu;
                                c /= mu;
                                x
                            })
                            .collect();
                        if brute_orbit_min(&e, w, mu) != e {
                            continue;
                        }
                        let row = TorsionRow::new(mu, e.clone()).unwrap();
                        let q = DegreeMatrix::new(pair.weights.clone(), vec![row]).unwrap();
                        if !is_almost_free(&q).unwrap() {
                            continue;
                        }
                        let ps: BTreeSet<usize> = (0..pair.partitions.len())
                            .filter(|&i| is_nef_partition(&q, &pair.partitions[i]).unwrap())
                            .collect();
                        if !ps.is_empty() {
                            brute.insert(e, ps);
                        }
                    }
                    let fast: BTreeMap<Vec<u64>, BTreeSet<usize>> =
                        enumerate_torsion_pairs(&pair.weights, &pair.partitions, mu)
                            .unwrap()
                            .into_iter()
                            .map(|p| (p.row.entries().to_vec(), p.partitions.iter().collect()))
                            .collect();
                    t.check(fast == brute);
                    if !brute.is_empty() {
                        t.check(mu_candidates(&pair.weights, &pair.partitions, 100).contains(&mu));
                    }
                }
            }
        }
    }
    t
}

/// Literal row combination, labelled-lattice search and class search agree.
/// Weight pairs whose row lists exceed `max_rows` are skipped by the
/// exponential literal search.
pub fn row_combination_vs_class_search(max_rows: usize) -> Tally {
    let mut t = Tally::default();
    for (n, s) in [(2, 1), (3, 1), (4, 1), (4, 2), (5, 2)] {
        for pair in assemble_weight_pairs(n, s).unwrap() {
            let w = &pair.weights;
            let parts = &pair.partitions;
            let mut rows = Vec::new();
            for mu in mu_candidates(w, parts, w.sum()) {
                rows.extend(enumerate_torsion_pairs(w, parts, mu).unwrap());
            }
            let bfs = torsion_lattices(w, &rows).unwrap();
            if rows.len() <= max_rows {
                let literal: BTreeMap<DegreeMatrix, _> = combine_torsion_rows(w, &rows)
                    .unwrap()
                    .into_iter()
                    .map(|(q, set)| (lattice_key(&q), set))
                    .collect();
                let labelled: BTreeMap<DegreeMatrix, _> = bfs.iter().cloned().collect();
                t.check(literal == labelled);
            }
            let mut from_lattices: BTreeMap<DegreeMatrix, BTreeSet<NefPartition>> = BTreeMap::new();
            for (q, set) in &bfs {
                let (c, perm) = canonical_degree_matrix(q).unwrap();
                let mut inv = vec![0; perm.len()];
                for (j, &i) in perm.iter().enumerate() {
                    inv[i] = j;
                }
                from_lattices.entry(c).or_default().extend(set.iter().map(|i| parts[i].relabel(&inv)));
            }
            let classes: BTreeMap<DegreeMatrix, BTreeSet<NefPartition>> = torsion_classes(w, parts, &rows)
                .unwrap()
                .into_iter()
                .map(|(c, set)| (c, set.iter().map(|i| parts[i].clone()).collect()))
                .collect();
            t.check(classes == from_lattices);
        }
    }
    t
}

/// Applies a column permutation, automorphism rows and shears to `q`.
pub fn act(q: &DegreeMatrix, perm: &[usize], aut: &[Vec<u64>], shear: &[u64]) -> DegreeMatrix {
    let q = q.permute_columns(perm).unwrap();
    let orders: Vec<u64> = q.torsion_rows().iter().map(TorsionRow::order).collect();
    let g = TorsionGroup::new(&orders);
    let w = q.weights().as_slice();
    let cols: Vec<Vec<u64>> = (0..w.len()).map(|i| q.torsion_rows().iter().map(|r| r.entries()[i]).collect()).collect();
    let rows: Vec<TorsionRow> = orders
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let e = cols.iter().zip(w).map(|(c, &wi)| (g.apply_row(k, &aut[k], c) + shear[k] * (wi % m)) % m).collect();
            TorsionRow::new(m, e).unwrap()
        })
        .collect();
    DegreeMatrix::new(q.weights().clone(), rows).unwrap()
}

/// A uniformly random permutation within each run of equal weights.
pub fn random_perm(w: &[u64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..w.len()).collect();
    let mut start = 0;
    for i in 1..=w.len() {
        if i == w.len() || w[i] != w[start] {
            perm[start..i].shuffle(rng);
            start = i;
        }
    }
    perm
}

/// Idempotence and orbit constancy of the canonical form, plus invariance of
/// weights, shape, Picard generator and nef block-degree multisets. Every
/// automorphism and shear is used when `|T| ≤ 8`, 100 samples otherwise.
pub fn canonical_form_orbit_constancy(qs: &[DegreeMatrix], seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for q in qs {
        let (c, perm) = canonical_degree_matrix(q).unwrap();
        t.check(canonical_degree_matrix(&c).unwrap().0 == c);
        let w = q.weights().as_slice();
        t.check(perm.iter().enumerate().all(|(j, &i)| w[i] == w[j]));
        let orders: Vec<u64> = q.torsion_rows().iter().map(TorsionRow::order).collect();
        if orders.is_empty() {
            continue;
        }
        let g = TorsionGroup::new(&orders);
        let auts = g.automorphisms();
        let all_shears: Vec<Vec<u64>> = orders.iter().fold(vec![vec![]], |acc, &m| {
            acc.iter().flat_map(|v| (0..m).map(move |x| [v.clone(), vec![x]].concat())).collect()
        });
        let elements: Vec<(Vec<Vec<u64>>, Vec<u64>)> = if g.size() <= 8 {
            auts.iter().flat_map(|a| all_shears.iter().map(move |s| (a.clone(), s.clone()))).collect()
        } else {
            (0..100)
                .map(|_| {
                    (auts.choose(&mut rng).unwrap().clone(), orders.iter().map(|&m| rng.gen_range(0..m)).collect())
                })
                .collect()
        };
        let lm = picard_generator(q).unwrap();
        for (a, s) in elements {
            let perm = random_perm(w, &mut rng);
            let q2 = act(q, &perm, &a, &s);
            t.check(canonical_degree_matrix(&q2).unwrap().0 == c);
            t.check(q2.shape() == q.shape() && q2.weights() == q.weights());
            t.check(picard_generator(&q2).unwrap() == lm);
        }
    }
    t
}

/// The fixed-column key is constant under automorphisms and shears.
pub fn lattice_key_constancy(qs: &[DegreeMatrix], seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for q in qs {
        let orders: Vec<u64> = q.torsion_rows().iter().map(TorsionRow::order).collect();
        if orders.is_empty() {
            continue;
        }
        let auts = TorsionGroup::new(&orders).automorphisms();
        let id: Vec<usize> = (0..q.columns()).collect();
        for _ in 0..20 {
            let s: Vec<u64> = orders.iter().map(|&m| rng.gen_range(0..m)).collect();
            let q2 = act(q, &id, auts.choose(&mut rng).unwrap(), &s);
            t.check(lattice_key(&q2) == lattice_key(q));
        }
    }
    t
}

fn brute_agl_min(points: &[u32], group: &[(Vec<u32>, u32)]) -> Vec<u32> {
    group
        .iter()
        .map(|(m, v)| {
            let mut img: Vec<u32> = points.iter().map(|&x| agl_apply(m, *v, x)).collect();
            img.sort_unstable();
            img
        })
        .min()
        .unwrap()
}

/// Affine canonical form against the full group: exhaustive over all
/// multisets of up to 5 points for `r ≤ 3`, sampled for `r = 4`, and random
/// group elements for `r = 5`.
pub fn agl_canonical_vs_brute_force(seed: u64) -> Tally {
    let mut t = Tally::default();
    for r in 0..=3usize {
        let group = agl_brute_force(r);
        let size = 1u32 << r;
        for len in 1..=5usize {
            let mut idx = vec![0u32; len];
            loop {
                let fast = canonical_points(&idx);
                t.check(fast == brute_agl_min(&idx, &group));
                t.check(canonical_points(&fast) == fast);
                let mut i = len;
                while i > 0 && idx[i - 1] == size - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                let v = idx[i - 1];
                for x in &mut idx[i..] {
                    *x = v;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g4 = agl_brute_force(4);
    for _ in 0..40 {
        let pts: Vec<u32> = (0..6).map(|_| rng.gen_range(0..16)).collect();
        t.check(canonical_points(&pts) == brute_agl_min(&pts, &g4));
    }
    for _ in 0..20 {
        let pts: Vec<u32> = (0..6).map(|_| rng.gen_range(0..32)).collect();
        let c = canonical_points(&pts);
        for _ in 0..100 {
            let m = random_invertible(5, &mut rng);
            let v = rng.gen_range(0..32);
            let img: Vec<u32> = pts.iter().map(|&x| agl_apply(&m, v, x)).collect();
            t.check(canonical_points(&img) == c);
        }
    }
    t
}

fn random_invertible(r: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    loop {
        let m: Vec<u32> = (0..r).map(|_| rng.gen_range(1..1u32 << r)).collect();
        let mut basis: Vec<u32> = Vec::new();
        for &x in &m {
            let mut y = x;
            for &b in &basis {
                y = y.min(y ^ b);
            }
            if y != 0 {
                basis.push(y);
                basis.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        if basis.len() == r {
            return m;
        }
    }
}
