//! Class groups, degree matrices and the predicates built on them:
//! almost-freeness, the Picard generator, nef-partitions and multidegrees.

use std::fmt;

use crate::arith::{self, gcd};
use crate::error::{Error, Result};
use crate::lattice::{self, IntMatrix};

/// Torsion part of `Cl(Z) = Z ⊕ Z/μ_1 ⊕ … ⊕ Z/μ_r` in invariant factor form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassGroupShape {
    torsion_orders: Vec<u64>,
}

impl ClassGroupShape {
    pub fn new(torsion_orders: Vec<u64>) -> Result<Self> {
        if torsion_orders.iter().any(|&m| m < 2) {
            return Err(Error::structural("torsion orders must be at least 2"));
        }
        if torsion_orders.windows(2).any(|w| w[0] % w[1] != 0) {
            return Err(Error::structural(format!(
                "torsion orders {torsion_orders:?} do not form a divisibility chain"
            )));
        }
        Ok(ClassGroupShape { torsion_orders })
    }

    pub fn free() -> Self {
        ClassGroupShape::default()
    }

    pub fn torsion_orders(&self) -> &[u64] {
        &self.torsion_orders
    }

    pub fn rank(&self) -> usize {
        self.torsion_orders.len()
    }

    /// Order of the torsion subgroup.
    pub fn torsion_size(&self) -> u64 {
        self.torsion_orders.iter().product()
    }
}

/// An element `(free, torsion)` of the class group; torsion residues are reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassElement {
    pub free: i64,
    pub torsion: Vec<u64>,
}

impl ClassElement {
    pub fn new(free: i64, torsion: Vec<u64>) -> Self {
        ClassElement { free, torsion }
    }
}

impl fmt::Display for ClassElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.free)?;
        for t in &self.torsion {
            write!(f, ",{t}")?;
        }
        write!(f, ")")
    }
}

/// Non-decreasing, primitive vector of positive weights.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightVector(Vec<u64>);

impl WeightVector {
    pub fn new(weights: Vec<u64>) -> Result<Self> {
        if weights.is_empty() || weights[0] == 0 {
            return Err(Error::structural("weights must be positive and non-empty"));
        }
        if weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::structural("weights must be non-decreasing"));
        }
        if arith::gcd_all(weights.iter().copied()) != 1 {
            return Err(Error::structural(format!("weight vector {weights:?} is not primitive")));
        }
        Ok(WeightVector(weights))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lcm(&self) -> Result<u64> {
        arith::lcm_all(self.0.iter().copied())
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// One torsion row of a degree matrix, residues stored in `[0, order)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsionRow {
    order: u64,
    entries: Vec<u64>,
}

impl TorsionRow {
    pub fn new(order: u64, entries: Vec<u64>) -> Result<Self> {
        if order < 2 {
            return Err(Error::structural("torsion order must be at least 2"));
        }
        Ok(TorsionRow { order, entries: entries.into_iter().map(|e| e % order).collect() })
    }

    /// Reduces signed representatives into `[0, order)`.
    pub fn from_signed(order: u64, entries: &[i64]) -> Result<Self> {
        if order < 2 {
            return Err(Error::structural("torsion order must be at least 2"));
        }
        let m = order as i64;
        Ok(TorsionRow { order, entries: entries.iter().map(|&e| e.rem_euclid(m) as u64).collect() })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Weight row plus torsion rows; column `i` is the class `ω_i = (w_i, η_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeMatrix {
    weights: WeightVector,
    torsion: Vec<TorsionRow>,
}

impl DegreeMatrix {
    pub fn new(weights: WeightVector, torsion: Vec<TorsionRow>) -> Result<Self> {
        let n1 = weights.len();
        if let Some(row) = torsion.iter().find(|r| r.len() != n1) {
            return Err(Error::structural(format!(
                "torsion row of length {} does not match {} columns",
                row.len(),
                n1
            )));
        }
        ClassGroupShape::new(torsion.iter().map(TorsionRow::order).collect())?;
        Ok(DegreeMatrix { weights, torsion })
    }

    pub fn torsion_free(weights: WeightVector) -> Self {
        DegreeMatrix { weights, torsion: Vec::new() }
    }

    /// Convenience constructor from raw rows; entries of torsion rows are reduced.
    pub fn from_rows(weights: &[u64], torsion: &[(u64, Vec<i64>)]) -> Result<Self> {
        let w = WeightVector::new(weights.to_vec())?;
        let rows = torsion.iter().map(|(m, e)| TorsionRow::from_signed(*m, e)).collect::<Result<Vec<_>>>()?;
        DegreeMatrix::new(w, rows)
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn torsion_rows(&self) -> &[TorsionRow] {
        &self.torsion
    }

    pub fn shape(&self) -> ClassGroupShape {
        ClassGroupShape { torsion_orders: self.torsion.iter().map(TorsionRow::order).collect() }
    }

    /// Number of columns, `n + 1`.
    pub fn columns(&self) -> usize {
        self.weights.len()
    }

    /// Dimension `n` of the ambient space.
    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn column(&self, i: usize) -> ClassElement {
        ClassElement { free: self.weights.0[i] as i64, torsion: self.torsion.iter().map(|r| r.entries[i]).collect() }
    }

    /// Appends a torsion row; the order must divide the last one.
    pub fn with_row(&self, row: TorsionRow) -> Result<Self> {
        let mut torsion = self.torsion.clone();
        torsion.push(row);
        DegreeMatrix::new(self.weights.clone(), torsion)
    }

    /// Lifted integer rows (weights, then torsion representatives).
    pub fn integer_rows(&self) -> Vec<Vec<i64>> {
        let mut rows = vec![self.weights.0.iter().map(|&w| w as i64).collect::<Vec<_>>()];
        rows.extend(self.torsion.iter().map(|r| r.entries.iter().map(|&e| e as i64).collect()));
        rows
    }

    /// Columns permuted so that new column `j` is old column `perm[j]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let w: Vec<u64> = perm.iter().map(|&i| self.weights.0[i]).collect();
        let rows = self
            .torsion
            .iter()
            .map(|r| TorsionRow { order: r.order, entries: perm.iter().map(|&i| r.entries[i]).collect() })
            .collect();
        DegreeMatrix::new(WeightVector::new(w)?, rows)
    }

    pub(crate) fn from_parts_unchecked(weights: WeightVector, torsion: Vec<TorsionRow>) -> Self {
        DegreeMatrix { weights, torsion }
    }
}

impl fmt::Display for DegreeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.weights)?;
        for r in &self.torsion {
            write!(f, " /Z{}:{:?}", r.order, r.entries)?;
        }
        Ok(())
    }
}

/// A set partition of the column indices `{0, …, n}`.
///
/// Stored normalized: blocks sorted internally and then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NefPartition {
    blocks: Vec<Vec<usize>>,
}

impl NefPartition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let total: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; total];
        for &i in blocks.iter().flatten() {
            if i >= total || seen[i] {
                return Err(Error::structural(format!("blocks {blocks:?} are not a set partition of 0..{total}")));
            }
            seen[i] = true;
        }
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::structural("empty block"));
        }
        Ok(Self::normalized(blocks))
    }

    pub(crate) fn normalized(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort();
        NefPartition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_indices(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Relabels indices: index `i` becomes `map[i]`.
    pub fn relabel(&self, map: &[usize]) -> Self {
        Self::normalized(self.blocks.iter().map(|b| b.iter().map(|&i| map[i]).collect()).collect())
    }
}

impl fmt::Display for NefPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.blocks.iter().map(|b| b.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")).collect();
        write!(f, "{{{}}}", parts.join("|"))
    }
}

/// `n × (n+1)` integer matrix whose columns are the primitive ray generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexMatrix(pub IntMatrix);

impl VertexMatrix {
    pub fn matrix(&self) -> &IntMatrix {
        &self.0
    }

    pub fn vertex(&self, i: usize) -> Vec<i64> {
        self.0.column(i)
    }
}

/// Relation matrix `[Q | 0; diag(μ)]` whose column span is the preimage of zero.
fn relation_matrix(q: &DegreeMatrix, drop: Option<usize>) -> Result<IntMatrix> {
    let r = q.torsion.len();
    let rows = q.integer_rows();
    let keep: Vec<usize> = (0..q.columns()).filter(|&j| Some(j) != drop).collect();
    let mut out = Vec::with_capacity(r + 1);
    for (k, row) in rows.iter().enumerate() {
        let mut line: Vec<i64> = keep.iter().map(|&j| row[j]).collect();
        for l in 0..r {
            line.push(if k == l + 1 { q.torsion[l].order as i64 } else { 0 });
        }
        out.push(line);
    }
    IntMatrix::from_rows(&out)
}

/// True iff every `n` of the `n+1` columns generate `Z ⊕ ⊕ Z/μ_k`.
pub fn is_almost_free(q: &DegreeMatrix) -> Result<bool> {
    let w = q.weights.as_slice();
    let n1 = w.len();
    match q.torsion.len() {
        0 => Ok((0..n1).all(|i| arith::gcd_all((0..n1).filter(|&j| j != i).map(|j| w[j])) == 1)),
        1 => {
            // generated iff the 2x2 minors of [w; η | 0; μ] have gcd 1
            let row = &q.torsion[0];
            let mu = row.order as i128;
            let eta = &row.entries;
            'drop: for i in 0..n1 {
                let mut g: i128 = 0;
                for a in 0..n1 {
                    if a == i {
                        continue;
                    }
                    g = gcd_i128(g, w[a] as i128 * mu);
                    if g == 1 {
                        continue 'drop;
                    }
                    for b in a + 1..n1 {
                        if b == i {
                            continue;
                        }
                        let minor = w[a] as i128 * eta[b] as i128 - w[b] as i128 * eta[a] as i128;
                        g = gcd_i128(g, minor);
                        if g == 1 {
                            continue 'drop;
                        }
                    }
                }
                if g != 1 {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        r => {
            for i in 0..n1 {
                let m = relation_matrix(q, Some(i))?;
                let f = lattice::invariant_factors(&m)?;
                if f.len() != r + 1 || f.iter().any(|&x| x != 1) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The numbers `L = lcm(w)` and `M_k` entering the Picard generator.
pub(crate) fn picard_data(q: &DegreeMatrix) -> Result<(u64, Vec<u64>)> {
    let l = q.weights.lcm()?;
    let w = q.weights.as_slice();
    let ms = q
        .torsion
        .iter()
        .map(|row| {
            let mu = row.order;
            let g = w.iter().zip(&row.entries).fold(mu, |g, (&wi, &e)| {
                let u = (l / wi) % mu;
                gcd(g, ((u as u128 * e as u128) % mu as u128) as u64)
            });
            mu / g
        })
        .collect();
    Ok((l, ms))
}

/// `LM` with `Pic(Z) = ⟨(LM, 0)⟩`.
pub fn picard_generator(q: &DegreeMatrix) -> Result<u64> {
    let (l, ms) = picard_data(q)?;
    arith::mul(l, arith::lcm_all(ms)?)
}

fn check_partition_range(q: &DegreeMatrix, p: &NefPartition) -> Result<()> {
    if p.num_indices() != q.columns() {
        return Err(Error::structural(format!(
            "partition covers {} indices but the matrix has {} columns",
            p.num_indices(),
            q.columns()
        )));
    }
    Ok(())
}

/// Nef-partition test: divisibility conditions on the free part, vanishing
/// torsion block sums, and no block class equal to a single column class.
pub fn is_nef_partition(q: &DegreeMatrix, p: &NefPartition) -> Result<bool> {
    check_partition_range(q, p)?;
    let (l, ms) = picard_data(q)?;
    Ok(nef_with_data(q, p, l, &ms))
}

pub(crate) fn nef_with_data(q: &DegreeMatrix, p: &NefPartition, l: u64, ms: &[u64]) -> bool {
    let w = q.weights.as_slice();
    for block in &p.blocks {
        if block.len() < 2 {
            return false;
        }
        let s: u64 = block.iter().map(|&i| w[i]).sum();
        if !s.is_multiple_of(l) {
            return false;
        }
        if ms.iter().any(|&m| !(s / l).is_multiple_of(m)) {
            return false;
        }
        for row in &q.torsion {
            let t: u64 = block.iter().map(|&i| row.entries[i]).sum();
            if !t.is_multiple_of(row.order) {
                return false;
            }
        }
        // the block class (s, 0) must differ from every column class
        let hits_column = (0..w.len()).any(|i| w[i] == s && q.torsion.iter().all(|row| row.entries[i] == 0));
        if hits_column {
            return false;
        }
    }
    true
}

/// Block classes `ω_{p_j}`, sorted by free degree then torsion.
pub fn multidegree(q: &DegreeMatrix, p: &NefPartition) -> Result<Vec<ClassElement>> {
    check_partition_range(q, p)?;
    if !is_nef_partition(q, p)? {
        return Err(Error::contract(format!("{p} is not a nef-partition of {q}")));
    }
    let mut degs: Vec<ClassElement> = p.blocks.iter().map(|b| block_class(q, b)).collect();
    degs.sort();
    Ok(degs)
}

pub(crate) fn block_class(q: &DegreeMatrix, block: &[usize]) -> ClassElement {
    ClassElement {
        free: block.iter().map(|&i| q.weights.0[i] as i64).sum(),
        torsion: q.torsion.iter().map(|row| block.iter().map(|&i| row.entries[i]).sum::<u64>() % row.order).collect(),
    }
}

/// Free block degrees of a nef-partition, sorted ascending.
pub fn block_degrees(w: &WeightVector, p: &NefPartition) -> Vec<u64> {
    let mut d: Vec<u64> = p.blocks.iter().map(|b| b.iter().map(|&i| w.0[i]).sum()).collect();
    d.sort_unstable();
    d
}

/// Kernel lattice of `Q : Z^{n+1} → Cl`, as a Hermite-reduced row basis.
pub fn kernel_lattice(q: &DegreeMatrix) -> Result<Vec<Vec<i64>>> {
    let m = relation_matrix(q, None)?;
    let n1 = q.columns();
    let ker = lattice::integer_kernel(&m)?;
    let proj: Vec<Vec<i64>> = ker.into_iter().map(|v| v[..n1].to_vec()).collect();
    lattice::hermite_rows(&proj)
}

/// Vertex matrix `P` with `Q ∘ Pᵀ = 0`, from the Hermite-reduced kernel basis.
pub fn gale_dual(q: &DegreeMatrix) -> Result<VertexMatrix> {
    let basis = kernel_lattice(q)?;
    if basis.len() != q.dim() {
        return Err(Error::structural(format!(
            "kernel has rank {} but the matrix has dimension {}",
            basis.len(),
            q.dim()
        )));
    }
    Ok(VertexMatrix(IntMatrix::from_rows(&basis)?))
}

/// Brute-force Cartier test on the fan of `P`: the class `c` is Cartier iff a
/// lift `D = Σ a_i D_i` is principal on every maximal cone.
///
/// Slow; intended for cross-checking [`picard_generator`].
pub fn cartier_oracle(p: &VertexMatrix, c: &ClassElement, q: &DegreeMatrix) -> Result<bool> {
    let r = q.torsion.len();
    if c.torsion.len() != r {
        return Err(Error::structural("class element does not match the class group rank"));
    }
    let rel = relation_matrix(q, None)?;
    let mut rhs = vec![c.free];
    rhs.extend(c.torsion.iter().map(|&t| t as i64));
    let lift = lattice::solve_integer(&rel, &rhs)?.ok_or_else(|| Error::contract("class has no integral lift"))?;
    let a = &lift[..q.columns()];
    let pm = p.matrix();
    let n = pm.rows();
    for skip in 0..q.columns() {
        let cone: Vec<usize> = (0..q.columns()).filter(|&j| j != skip).collect();
        // rows of the system are the cone's rays: <m, v_j> = -a_j
        let sys: Vec<Vec<i64>> = cone.iter().map(|&j| (0..n).map(|k| pm.get(k, j)).collect()).collect();
        let b: Vec<i64> = cone.iter().map(|&j| -a[j]).collect();
        if lattice::solve_integer(&IntMatrix::from_rows(&sys)?, &b)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}
