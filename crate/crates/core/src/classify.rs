//! End-to-end classification: weight pairs, torsion rows, row combinations,
//! isomorphism classes, and grouping of nef-partitions by multidegree.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::algebra::{block_degrees, ClassGroupShape, DegreeMatrix, NefPartition, TorsionRow, WeightVector};
use crate::error::{Error, Result};
use crate::tables::reference_count;
use crate::torsion::{enumerate_torsion_pairs, mu_candidates, torsion_classes, PartitionSet};
use crate::weights::{assemble_weight_pairs, WeightPair};

/// One Calabi–Yau complete intersection family.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CyciRecord {
    pub d: usize,
    pub s: usize,
    pub matrix: DegreeMatrix,
    pub degrees: Vec<u64>,
    pub partition: NefPartition,
    pub partition_count: usize,
}

impl CyciRecord {
    pub fn shape(&self) -> ClassGroupShape {
        self.matrix.shape()
    }
}

/// Largest cyclic torsion order searched for a weight vector `w`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MuBound {
    /// `Σ w_i`.
    #[default]
    Auto,
    /// `k · Σ w_i`.
    Scaled(u64),
    /// A fixed number.
    Fixed(u64),
}

impl MuBound {
    pub fn for_weights(&self, w: &WeightVector) -> u64 {
        match *self {
            MuBound::Auto => w.sum(),
            MuBound::Scaled(k) => k.saturating_mul(w.sum()),
            MuBound::Fixed(m) => m,
        }
    }
}

impl fmt::Display for MuBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuBound::Auto => write!(f, "auto"),
            MuBound::Scaled(k) => write!(f, "{k}x"),
            MuBound::Fixed(m) => write!(f, "{m}"),
        }
    }
}

/// Accepts `auto`, `<k>x` (multiple of the weight sum) or a number.
impl FromStr for MuBound {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("torsion bound {s:?} is not `auto`, `<k>x` or a number"));
        let s = s.trim();
        if s == "auto" {
            return Ok(MuBound::Auto);
        }
        match s.strip_suffix('x') {
            Some(k) => Ok(MuBound::Scaled(k.parse().map_err(|_| bad())?)),
            None => Ok(MuBound::Fixed(s.parse().map_err(|_| bad())?)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ClassifyOptions {
    pub mu_bound: MuBound,
}

/// All records arising from one weight pair, sorted.
pub fn classify_weight_pair(pair: &WeightPair, opts: &ClassifyOptions) -> Result<Vec<CyciRecord>> {
    let w = &pair.weights;
    let parts = &pair.partitions;
    if parts.is_empty() {
        return Ok(Vec::new());
    }
    let s = parts[0].num_blocks();
    let d = w.len() - 1 - s;
    let mu_max = opts.mu_bound.for_weights(w);
    let mut pairs = Vec::new();
    for mu in mu_candidates(w, parts, mu_max) {
        pairs.extend(enumerate_torsion_pairs(w, parts, mu)?);
    }
    let mut classes = vec![(DegreeMatrix::torsion_free(w.clone()), PartitionSet::full(parts.len()))];
    classes.extend(torsion_classes(w, parts, &pairs)?);

    let mut out = Vec::new();
    for (matrix, ps) in classes {
        let mut by_degree: BTreeMap<Vec<u64>, (NefPartition, usize)> = BTreeMap::new();
        for pi in ps.iter() {
            let p = &parts[pi];
            let deg = block_degrees(w, p);
            match by_degree.get_mut(&deg) {
                Some(e) => {
                    e.0 = e.0.clone().min(p.clone());
                    e.1 += 1;
                }
                None => {
                    by_degree.insert(deg, (p.clone(), 1));
                }
            }
        }
        for (degrees, (partition, partition_count)) in by_degree {
            out.push(CyciRecord { d, s, matrix: matrix.clone(), degrees, partition, partition_count });
        }
    }
    Ok(out)
}

/// The complete list of `d`-dimensional families of codimension `s`, sorted
/// by weights, canonical matrix and multidegree.
pub fn classify(d: usize, s: usize, opts: &ClassifyOptions) -> Result<Vec<CyciRecord>> {
    if d == 0 || s == 0 {
        return Err(Error::Argument(format!("need d >= 1 and s >= 1, got d={d}, s={s}")));
    }
    let pairs = assemble_weight_pairs(d + s, s)?;
    let chunks: Vec<Vec<CyciRecord>> =
        pairs.par_iter().map(|p| classify_weight_pair(p, opts)).collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Number of records of `classify(d, s)`.
pub fn count(d: usize, s: usize, opts: &ClassifyOptions) -> Result<u64> {
    let pairs = assemble_weight_pairs(d + s, s)?;
    pairs.par_iter().map(|p| classify_weight_pair(p, opts).map(|r| r.len() as u64)).try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Counts for `1 ≤ d ≤ d_max`, `1 ≤ s ≤ s_max`, indexed `[s-1][d-1]`.
/// With `verify`, any cell differing from the reference table is an error.
pub fn count_table(d_max: usize, s_max: usize, opts: &ClassifyOptions, verify: bool) -> Result<Vec<Vec<u64>>> {
    let mut table = vec![vec![0; d_max]; s_max];
    let mut bad = Vec::new();
    for s in 1..=s_max {
        for d in 1..=d_max {
            let c = if s > d + 1 { 0 } else { count(d, s, opts)? };
            table[s - 1][d - 1] = c;
            if verify {
                if let Some(r) = reference_count(d, s) {
                    if r != c {
                        bad.push(format!("(d={d}, s={s}): computed {c}, expected {r}"));
                    }
                }
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::Verification(bad.join("; ")));
    }
    Ok(table)
}

/// Torsion orders of a record as a plain list.
pub fn torsion_orders(q: &DegreeMatrix) -> Vec<u64> {
    q.torsion_rows().iter().map(TorsionRow::order).collect()
}
