//! Reference counts of Calabi–Yau complete intersections and Hodge-pair data.

/// `(d, s, count)` for every nonzero cell with `d ≤ 5`.
pub const COUNT_TABLE: &[(usize, usize, u64)] = &[
    (1, 1, 5),
    (1, 2, 2),
    (2, 1, 48),
    (2, 2, 10),
    (2, 3, 3),
    (3, 1, 1561),
    (3, 2, 164),
    (3, 3, 21),
    (3, 4, 6),
    (4, 1, 220_794),
    (4, 2, 6045),
    (4, 3, 425),
    (4, 4, 43),
    (4, 5, 9),
    (5, 1, 309_019_970),
    (5, 2, 1_042_424),
    (5, 3, 20647),
    (5, 4, 1134),
    (5, 5, 95),
    (5, 6, 18),
];

/// Reference count for a cell; zero outside `1 ≤ s ≤ d + 1`, `None` beyond the table.
pub fn reference_count(d: usize, s: usize) -> Option<u64> {
    if d == 0 || d > 5 {
        return None;
    }
    if s == 0 || s > d + 1 {
        return Some(0);
    }
    COUNT_TABLE.iter().find(|&&(a, b, _)| a == d && b == s).map(|&(_, _, c)| c)
}

/// Distinct Hodge pairs of threefolds per codimension 1..=4.
pub const HODGE_PAIR_COUNTS: [(usize, usize); 4] = [(1, 716), (2, 121), (3, 19), (4, 6)];

/// Hodge pairs of higher-codimension threefolds absent from the hypersurface
/// list, with the codimensions realizing them. The list has 19 entries.
pub const NEW_HODGE_PAIRS: &[(u32, u32, &[usize])] = &[
    (1, 25, &[2]),
    (1, 33, &[4]),
    (1, 37, &[2]),
    (1, 61, &[2]),
    (1, 65, &[4]),
    (1, 73, &[2, 3]),
    (1, 77, &[4]),
    (1, 89, &[2]),
    (2, 30, &[3]),
    (2, 56, &[2]),
    (2, 58, &[2, 3, 4]),
    (2, 68, &[2]),
    (3, 27, &[2]),
    (3, 39, &[2]),
    (3, 55, &[3]),
    (4, 38, &[2]),
    (6, 14, &[3]),
    (7, 7, &[2]),
    (11, 11, &[2]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        assert_eq!(reference_count(3, 4), Some(6));
        assert_eq!(reference_count(2, 9), Some(0));
        assert_eq!(reference_count(6, 1), None);
        assert_eq!(NEW_HODGE_PAIRS.len(), 19);
    }
}
