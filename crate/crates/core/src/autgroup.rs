//! Automorphisms of a finite abelian group `T = Z/μ_1 ⊕ … ⊕ Z/μ_r` in
//! invariant factor form, described row by row.
//!
//! Row `k` of an automorphism is a homomorphism `T → Z/μ_k`, stored as its
//! coefficient vector `a` with `a_l · μ_l ≡ 0 (mod μ_k)`. A prefix of rows
//! extends to a full automorphism iff the dual characters it defines generate
//! a subgroup of the right order that is pure in the dual group.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::arith::{factorize, gcd};

/// Torsion subgroup of the class group, with invariant factors `orders`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorsionGroup {
    orders: Vec<u64>,
}

thread_local! {
    static CHILDREN: RefCell<HashMap<(Vec<u64>, Vec<Vec<u64>>), Rc<Vec<Vec<u64>>>>> =
        RefCell::new(HashMap::new());
}

impl TorsionGroup {
    pub fn new(orders: &[u64]) -> Self {
        TorsionGroup { orders: orders.to_vec() }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn size(&self) -> u64 {
        self.orders.iter().product()
    }

    /// All homomorphisms `T → Z/μ_k` as coefficient vectors, lexicographic.
    pub fn hom_rows(&self, k: usize) -> Vec<Vec<u64>> {
        let mk = self.orders[k];
        let steps: Vec<u64> = self.orders.iter().map(|&ml| mk / gcd(mk, ml)).collect();
        let mut out = vec![Vec::new()];
        for &step in &steps {
            let mut next = Vec::with_capacity(out.len() * (mk / step) as usize);
            for prefix in &out {
                let mut a = 0;
                while a < mk {
                    let mut v = prefix.clone();
                    v.push(a);
                    next.push(v);
                    a += step;
                }
            }
            out = next;
        }
        out
    }

    /// Value of the row `coeffs` (a hom into `Z/μ_k`) on the element `x`.
    #[inline]
    pub fn apply_row(&self, k: usize, coeffs: &[u64], x: &[u64]) -> u64 {
        let mk = self.orders[k] as u128;
        let mut acc: u128 = 0;
        for (&a, &e) in coeffs.iter().zip(x) {
            acc += a as u128 * e as u128;
        }
        (acc % mk) as u64
    }

    /// Dual character of a row, in coordinates of `⊕ Z/μ_l`.
    fn dual(&self, k: usize, coeffs: &[u64]) -> Vec<u64> {
        let mk = self.orders[k] as u128;
        coeffs.iter().zip(&self.orders).map(|(&a, &ml)| ((a as u128 * ml as u128 / mk) % ml as u128) as u64).collect()
    }

    fn encode(&self, x: &[u64]) -> usize {
        let mut idx = 0usize;
        for (&v, &m) in x.iter().zip(&self.orders) {
            idx = idx * m as usize + v as usize;
        }
        idx
    }

    fn decode(&self, mut idx: usize) -> Vec<u64> {
        let mut x = vec![0; self.orders.len()];
        for l in (0..self.orders.len()).rev() {
            let m = self.orders[l] as usize;
            x[l] = (idx % m) as u64;
            idx /= m;
        }
        x
    }

    fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).zip(&self.orders).map(|((&x, &y), &m)| (x + y) % m).collect()
    }

    fn scale(&self, a: &[u64], c: u64) -> Vec<u64> {
        a.iter().zip(&self.orders).map(|(&x, &m)| ((x as u128 * c as u128) % m as u128) as u64).collect()
    }

    /// Whether the rows of `prefix` are the first rows of some automorphism.
    pub fn extends(&self, prefix: &[Vec<u64>]) -> bool {
        let size = self.size() as usize;
        let gens: Vec<Vec<u64>> = prefix.iter().enumerate().map(|(k, a)| self.dual(k, a)).collect();
        // subgroup generated by the dual characters
        let mut member = vec![false; size];
        let zero = vec![0u64; self.orders.len()];
        member[self.encode(&zero)] = true;
        let mut elems = vec![zero];
        for g in &gens {
            let mut i = 0;
            while i < elems.len() {
                let y = self.add(&elems[i], g);
                let code = self.encode(&y);
                if !member[code] {
                    member[code] = true;
                    elems.push(y);
                }
                i += 1;
            }
        }
        let want: u64 = self.orders[..prefix.len()].iter().product();
        if elems.len() as u64 != want {
            return false;
        }
        // purity: H ∩ p^e G = p^e H for every prime power dividing the exponent
        let exponent = self.orders.first().copied().unwrap_or(1);
        for (p, e) in factorize(exponent) {
            let mut m = 1u64;
            for _ in 0..e {
                m *= p;
                let mut in_mh = vec![false; size];
                let mut mh = 0usize;
                for h in &elems {
                    let c = self.encode(&self.scale(h, m));
                    if !in_mh[c] {
                        in_mh[c] = true;
                        mh += 1;
                    }
                }
                let mut in_mg = vec![false; size];
                let mut cap = 0usize;
                for idx in 0..size {
                    let c = self.encode(&self.scale(&self.decode(idx), m));
                    if !in_mg[c] {
                        in_mg[c] = true;
                        if member[c] {
                            cap += 1;
                        }
                    }
                }
                if cap != mh {
                    return false;
                }
            }
        }
        true
    }

    /// Rows that may follow `prefix` in some automorphism (memoized per thread).
    pub fn children(&self, prefix: &[Vec<u64>]) -> Rc<Vec<Vec<u64>>> {
        let key = (self.orders.clone(), prefix.to_vec());
        if let Some(hit) = CHILDREN.with(|c| c.borrow().get(&key).cloned()) {
            return hit;
        }
        let k = prefix.len();
        let mut cur = prefix.to_vec();
        let rows: Vec<Vec<u64>> = self
            .hom_rows(k)
            .into_iter()
            .filter(|row| {
                cur.push(row.clone());
                let ok = self.extends(&cur);
                cur.pop();
                ok
            })
            .collect();
        let rows = Rc::new(rows);
        CHILDREN.with(|c| c.borrow_mut().insert(key, rows.clone()));
        rows
    }

    /// Image of `x` under the automorphism with the given rows.
    pub fn apply(&self, rows: &[Vec<u64>], x: &[u64]) -> Vec<u64> {
        rows.iter().enumerate().map(|(k, a)| self.apply_row(k, a, x)).collect()
    }

    /// Every automorphism, by exhaustive search over hom rows with a final
    /// bijectivity check. Exponential; meant for small groups and tests.
    pub fn automorphisms_brute_force(&self) -> Vec<Vec<Vec<u64>>> {
        let r = self.orders.len();
        let size = self.size() as usize;
        let all: Vec<Vec<u64>> = (0..size).map(|i| self.decode(i)).collect();
        let homs: Vec<Vec<Vec<u64>>> = (0..r).map(|k| self.hom_rows(k)).collect();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(
            g: &TorsionGroup,
            homs: &[Vec<Vec<u64>>],
            all: &[Vec<u64>],
            cur: &mut Vec<Vec<u64>>,
            out: &mut Vec<Vec<Vec<u64>>>,
        ) {
            if cur.len() == homs.len() {
                let mut seen = vec![false; all.len()];
                for x in all {
                    let c = g.encode(&g.apply(cur, x));
                    if seen[c] {
                        return;
                    }
                    seen[c] = true;
                }
                out.push(cur.clone());
                return;
            }
            for row in &homs[cur.len()] {
                cur.push(row.clone());
                rec(g, homs, all, cur, out);
                cur.pop();
            }
        }
        rec(self, &homs, &all, &mut cur, &mut out);
        out
    }

    /// All automorphisms, built from the extendability test.
    pub fn automorphisms(&self) -> Vec<Vec<Vec<u64>>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(g: &TorsionGroup, cur: &mut Vec<Vec<u64>>, out: &mut Vec<Vec<Vec<u64>>>) {
            if cur.len() == g.orders.len() {
                out.push(cur.clone());
                return;
            }
            for row in g.children(cur).iter() {
                cur.push(row.clone());
                rec(g, cur, out);
                cur.pop();
            }
        }
        rec(self, &mut cur, &mut out);
        out
    }

    /// All elements of the group, in mixed-radix order.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        (0..self.size() as usize).map(|i| self.decode(i)).collect()
    }
}
