//! Exact integer linear algebra: Smith invariant factors, column echelon
//! forms with unimodular transforms, integer kernels and integral solves.
//!
//! All arithmetic is checked; overflow surfaces as [`Error::Overflow`].

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

fn ck(v: Option<i64>) -> Result<i64> {
    v.ok_or(Error::Overflow("integer matrix reduction"))
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::structural("ragged matrix rows"));
        }
        Ok(IntMatrix { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::structural("matrix-vector dimension mismatch"));
        }
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .try_fold(0i64, |acc, (&a, &b)| ck(a.checked_mul(b).and_then(|p| acc.checked_add(p))))
            })
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: i64) -> Result<()> {
        for c in 0..self.cols {
            let v = ck(self.get(src, c).checked_mul(k).and_then(|p| p.checked_add(self.get(dst, c))))?;
            self.set(dst, c, v);
        }
        Ok(())
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: i64) -> Result<()> {
        for r in 0..self.rows {
            let v = ck(self.get(r, src).checked_mul(k).and_then(|p| p.checked_add(self.get(r, dst))))?;
            self.set(r, dst, v);
        }
        Ok(())
    }
}

/// Nonzero invariant factors (Smith normal form diagonal), ascending under divisibility.
pub fn invariant_factors(m: &IntMatrix) -> Result<Vec<i64>> {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        // pivot: smallest nonzero absolute value in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let v = a.get(i, j);
                if v != 0 && best.is_none_or(|(bi, bj)| v.unsigned_abs() < a.get(bi, bj).unsigned_abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap_rows(t, pi);
        a.swap_cols(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                let q = a.get(i, t) / a.get(t, t);
                if q != 0 {
                    a.add_row(i, t, ck(q.checked_neg())?)?;
                }
                if a.get(i, t) != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = a.get(t, j) / a.get(t, t);
                if q != 0 {
                    a.add_col(j, t, ck(q.checked_neg())?)?;
                }
                if a.get(t, j) != 0 {
                    clean = false;
                }
            }
            if !clean {
                // move the smallest remainder in the pivot row/column onto the pivot
                let mut best = (t, t);
                for i in t + 1..rows {
                    let v = a.get(i, t);
                    if v != 0 && v.unsigned_abs() < a.get(best.0, best.1).unsigned_abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    let v = a.get(t, j);
                    if v != 0 && v.unsigned_abs() < a.get(best.0, best.1).unsigned_abs() {
                        best = (t, j);
                    }
                }
                a.swap_rows(t, best.0);
                a.swap_cols(t, best.1);
                continue;
            }
            let p = a.get(t, t);
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a.get(i, j) % p != 0));
            match bad {
                Some(i) => a.add_row(t, i, 1)?,
                None => break,
            }
        }
        diag.push(a.get(t, t).abs());
    }
    Ok(diag)
}

/// Column echelon form `H = A * U` with `U` unimodular.
pub struct ColumnEchelon {
    pub h: IntMatrix,
    pub u: IntMatrix,
    /// `(pivot_row, pivot_col)` pairs, pivot columns are `0..rank`.
    pub pivots: Vec<(usize, usize)>,
}

impl ColumnEchelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn column_echelon(a: &IntMatrix) -> Result<ColumnEchelon> {
    let mut h = a.clone();
    let mut u = IntMatrix::identity(a.cols);
    let mut pivots = Vec::new();
    let mut pc = 0;
    for row in 0..h.rows {
        if pc == h.cols {
            break;
        }
        // Euclidean reduction on the row, smallest entry as pivot
        loop {
            let Some(j) = (pc..h.cols).filter(|&j| h.get(row, j) != 0).min_by_key(|&j| h.get(row, j).unsigned_abs())
            else {
                break;
            };
            h.swap_cols(pc, j);
            u.swap_cols(pc, j);
            let piv = h.get(row, pc);
            let mut done = true;
            for j in pc + 1..h.cols {
                let q = h.get(row, j) / piv;
                if q != 0 {
                    h.add_col(j, pc, -q)?;
                    u.add_col(j, pc, -q)?;
                }
                done &= h.get(row, j) == 0;
            }
            if done {
                break;
            }
        }
        if h.get(row, pc) != 0 {
            if h.get(row, pc) < 0 {
                for r in 0..h.rows {
                    h.set(r, pc, -h.get(r, pc));
                }
                for r in 0..u.rows {
                    u.set(r, pc, -u.get(r, pc));
                }
            }
            pivots.push((row, pc));
            pc += 1;
        }
    }
    Ok(ColumnEchelon { h, u, pivots })
}

/// A basis of the integer kernel `{x : A x = 0}`.
pub fn integer_kernel(a: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    let ech = column_echelon(a)?;
    Ok((ech.rank()..a.cols).map(|c| ech.u.column(c)).collect())
}

/// Some integral `x` with `A x = b`, or `None` when no integral solution exists.
pub fn solve_integer(a: &IntMatrix, b: &[i64]) -> Result<Option<Vec<i64>>> {
    if b.len() != a.rows {
        return Err(Error::structural("right-hand side length mismatch"));
    }
    let ech = column_echelon(a)?;
    let mut z = vec![0i64; a.cols];
    for &(prow, pcol) in &ech.pivots {
        let mut rest = b[prow] as i128;
        for c in 0..pcol {
            rest -= ech.h.get(prow, c) as i128 * z[c] as i128;
        }
        let piv = ech.h.get(prow, pcol) as i128;
        if rest % piv != 0 {
            return Ok(None);
        }
        z[pcol] = i64::try_from(rest / piv).map_err(|_| Error::Overflow("integer solve"))?;
    }
    let hz = ech.h.mul_vec(&z)?;
    if hz != b {
        return Ok(None);
    }
    Ok(Some(ech.u.mul_vec(&z)?))
}

/// Row Hermite normal form of the lattice spanned by `rows` (zero rows dropped).
pub fn hermite_rows(rows: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let mut m = IntMatrix::from_rows(rows)?;
    let mut pr = 0;
    for col in 0..m.cols {
        if pr == m.rows {
            break;
        }
        // Euclidean reduction of the column below row `pr`
        loop {
            let Some(i) = (pr..m.rows).filter(|&i| m.get(i, col) != 0).min_by_key(|&i| m.get(i, col).unsigned_abs())
            else {
                break;
            };
            m.swap_rows(pr, i);
            let piv = m.get(pr, col);
            let mut done = true;
            for i in pr + 1..m.rows {
                let q = m.get(i, col) / piv;
                if q != 0 {
                    m.add_row(i, pr, -q)?;
                }
                done &= m.get(i, col) == 0;
            }
            if done {
                break;
            }
        }
        let p = m.get(pr, col);
        if p == 0 {
            continue;
        }
        if p < 0 {
            for c in 0..m.cols {
                m.set(pr, c, -m.get(pr, c));
            }
        }
        let p = m.get(pr, col);
        for i in 0..pr {
            let q = m.get(i, col).div_euclid(p);
            if q != 0 {
                m.add_row(i, pr, -q)?;
            }
        }
        pr += 1;
    }
    Ok(m.to_rows().into_iter().take(pr).collect())
}
