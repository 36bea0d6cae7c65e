//! Canonical forms of degree matrices under class-group automorphisms and
//! permutations of columns with equal weight.
//!
//! The canonical representative is the row-major lexicographic minimum over
//! the orbit. It is found row by row: at level `k` every surviving partial
//! automorphism is extended by each admissible hom `T → Z/μ_k` together with a
//! shear `t·w`, and only the candidates attaining the smallest row survive.

use std::collections::BTreeSet;

use crate::algebra::{DegreeMatrix, TorsionRow};
use crate::autgroup::TorsionGroup;
use crate::error::Result;

#[derive(Clone)]
struct Node {
    prefix: Vec<Vec<u64>>,
    vals: Vec<Vec<u64>>,
    order: Vec<usize>,
    groups: Vec<(usize, usize)>,
}

fn lex_min(q: &DegreeMatrix, sort_columns: bool) -> (DegreeMatrix, Vec<usize>) {
    let w = q.weights().as_slice();
    let n1 = w.len();
    let rows = q.torsion_rows();
    if rows.is_empty() {
        return (q.clone(), (0..n1).collect());
    }
    let orders: Vec<u64> = rows.iter().map(TorsionRow::order).collect();
    let group = TorsionGroup::new(&orders);
    let cols: Vec<Vec<u64>> = (0..n1).map(|i| rows.iter().map(|r| r.entries()[i]).collect()).collect();

    let groups = if sort_columns {
        let mut g = Vec::new();
        let mut start = 0;
        for i in 1..=n1 {
            if i == n1 || w[i] != w[start] {
                g.push((start, i));
                start = i;
            }
        }
        g
    } else {
        (0..n1).map(|i| (i, i + 1)).collect()
    };
    let mut nodes = vec![Node { prefix: Vec::new(), vals: vec![Vec::new(); n1], order: (0..n1).collect(), groups }];

    let mut base = vec![0u64; n1];
    let mut v = vec![0u64; n1];
    let mut row = Vec::with_capacity(n1);
    let mut scratch: Vec<u64> = Vec::with_capacity(n1);
    for (k, &mk) in orders.iter().enumerate() {
        let wk: Vec<u64> = w.iter().map(|&x| x % mk).collect();
        let mut best: Option<Vec<u64>> = None;
        let mut survivors: Vec<(usize, Vec<u64>, u64)> = Vec::new();
        for (ni, node) in nodes.iter().enumerate() {
            for chi in group.children(&node.prefix).iter() {
                for i in 0..n1 {
                    base[i] = group.apply_row(k, chi, &cols[i]);
                }
                for t in 0..mk {
                    for i in 0..n1 {
                        v[i] = (base[i] + t * wk[i]) % mk;
                    }
                    row.clear();
                    for &(a, b) in &node.groups {
                        scratch.clear();
                        scratch.extend(node.order[a..b].iter().map(|&i| v[i]));
                        scratch.sort_unstable();
                        row.extend_from_slice(&scratch);
                    }
                    match &best {
                        Some(b) if row > *b => continue,
                        Some(b) if row == *b => {}
                        _ => {
                            best = Some(row.clone());
                            survivors.clear();
                        }
                    }
                    survivors.push((ni, chi.clone(), t));
                }
            }
        }
        let mut next = Vec::with_capacity(survivors.len());
        for (ni, chi, t) in survivors {
            let node = &nodes[ni];
            let mut prefix = node.prefix.clone();
            prefix.push(chi.clone());
            let mut vals = node.vals.clone();
            for i in 0..n1 {
                let x = (group.apply_row(k, &chi, &cols[i]) + t * wk[i]) % mk;
                vals[i].push(x);
            }
            let mut order = node.order.clone();
            let mut groups = Vec::with_capacity(node.groups.len());
            for &(a, b) in &node.groups {
                order[a..b].sort_by_key(|&i| vals[i][k]);
                let mut start = a;
                for i in a + 1..=b {
                    if i == b || vals[order[i]][k] != vals[order[start]][k] {
                        groups.push((start, i));
                        start = i;
                    }
                }
            }
            next.push(Node { prefix, vals, order, groups });
        }
        nodes = next;
    }
    let node = &nodes[0];
    let perm = node.order.clone();
    let torsion: Vec<TorsionRow> = orders
        .iter()
        .enumerate()
        .map(|(k, &m)| TorsionRow::new(m, perm.iter().map(|&i| node.vals[i][k]).collect()).expect("reduced row"))
        .collect();
    (DegreeMatrix::from_parts_unchecked(q.weights().clone(), torsion), perm)
}

/// Canonical representative of the isomorphism class of `q`, together with
/// the column permutation used: column `j` of the result comes from column
/// `perm[j]` of `q` (always within a run of equal weights).
pub fn canonical_degree_matrix(q: &DegreeMatrix) -> Result<(DegreeMatrix, Vec<usize>)> {
    Ok(lex_min(q, true))
}

/// Normal form of `q` under automorphisms only, with columns kept in place.
/// Two matrices share this key iff they have the same kernel lattice.
pub fn lattice_key(q: &DegreeMatrix) -> DegreeMatrix {
    lex_min(q, false).0
}

/// Whether two degree matrices define isomorphic fake weighted projective spaces.
pub fn are_isomorphic(a: &DegreeMatrix, b: &DegreeMatrix) -> Result<bool> {
    if a.weights() != b.weights() || a.shape() != b.shape() {
        return Ok(false);
    }
    Ok(canonical_degree_matrix(a)?.0 == canonical_degree_matrix(b)?.0)
}

/// Canonical representatives of the distinct isomorphism classes, sorted.
pub fn dedup_isomorphic(qs: &[DegreeMatrix]) -> Result<Vec<DegreeMatrix>> {
    let mut set = BTreeSet::new();
    for q in qs {
        set.insert(canonical_degree_matrix(q)?.0);
    }
    Ok(set.into_iter().collect())
}
