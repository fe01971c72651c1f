//! Holland-Leinhardt triad census.

use std::sync::OnceLock;

use crate::error::{invalid, Result};
use crate::graph::DiGraph;

/// Triad classes in the conventional MAN order.
pub const TRIAD_NAMES: [&str; 16] = [
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D", "120U", "120C", "210",
    "300",
];

/// Bit layout of a triad code over vertices (a, b, c):
/// ab=1, ba=2, ac=4, ca=8, bc=16, cb=32.
#[inline]
pub fn triad_code(g: &DiGraph, a: usize, b: usize, c: usize) -> usize {
    (g.has_edge(a, b) as usize)
        | (g.has_edge(b, a) as usize) << 1
        | (g.has_edge(a, c) as usize) << 2
        | (g.has_edge(c, a) as usize) << 3
        | (g.has_edge(b, c) as usize) << 4
        | (g.has_edge(c, b) as usize) << 5
}

fn edge_in_code(code: usize, from: usize, to: usize) -> bool {
    let bit = match (from, to) {
        (0, 1) => 0,
        (1, 0) => 1,
        (0, 2) => 2,
        (2, 0) => 3,
        (1, 2) => 4,
        (2, 1) => 5,
        _ => unreachable!(),
    };
    code >> bit & 1 == 1
}

/// Classify a code by dyad counts plus in/out degree patterns inside the triad.
fn classify(code: usize) -> usize {
    let e = |x: usize, y: usize| edge_in_code(code, x, y);
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut mutual = 0;
    let mut asym = 0;
    for &(x, y) in &pairs {
        match (e(x, y), e(y, x)) {
            (true, true) => mutual += 1,
            (false, false) => {}
            _ => asym += 1,
        }
    }
    let outdeg = |v: usize| (0..3).filter(|&u| u != v && e(v, u)).count();
    let indeg = |v: usize| (0..3).filter(|&u| u != v && e(u, v)).count();
    let asym_out = |v: usize| (0..3).filter(|&u| u != v && e(v, u) && !e(u, v)).count();
    let asym_in = |v: usize| (0..3).filter(|&u| u != v && e(u, v) && !e(v, u)).count();
    match (mutual, asym) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 0) => 2,
        (0, 2) => {
            if (0..3).any(|v| outdeg(v) == 2) {
                3
            } else if (0..3).any(|v| indeg(v) == 2) {
                4
            } else {
                5
            }
        }
        (1, 1) => {
            // The asymmetric edge touches a vertex of the mutual dyad:
            // pointing into it is 111D, out of it is 111U.
            let in_mutual = |v: usize| (0..3).any(|u| u != v && e(u, v) && e(v, u));
            if (0..3).any(|v| in_mutual(v) && asym_in(v) == 1) {
                6
            } else {
                7
            }
        }
        (0, 3) => {
            if (0..3).all(|v| outdeg(v) == 1) {
                9
            } else {
                8
            }
        }
        (2, 0) => 10,
        (1, 2) => {
            if (0..3).any(|v| asym_out(v) == 2) {
                11
            } else if (0..3).any(|v| asym_in(v) == 2) {
                12
            } else {
                13
            }
        }
        (2, 1) => 14,
        (3, 0) => 15,
        _ => unreachable!("three dyads"),
    }
}

fn class_table() -> &'static [u8; 64] {
    static TABLE: OnceLock<[u8; 64]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u8; 64];
        for (code, slot) in t.iter_mut().enumerate() {
            *slot = classify(code) as u8;
        }
        t
    })
}

/// Class index (into [`TRIAD_NAMES`]) of a triad code.
pub fn triad_class(code: usize) -> usize {
    class_table()[code & 63] as usize
}

/// Raw counts of the sixteen triad classes.
pub fn triad_counts(g: &DiGraph) -> Result<[u64; 16]> {
    let n = g.n();
    if n < 3 {
        return invalid(format!("triad census needs at least 3 vertices, got {n}"));
    }
    let table = class_table();
    let mut counts = [0u64; 16];
    for a in 0..n {
        for b in a + 1..n {
            let ab = (g.has_edge(a, b) as usize) | (g.has_edge(b, a) as usize) << 1;
            for c in b + 1..n {
                let code = ab
                    | (g.has_edge(a, c) as usize) << 2
                    | (g.has_edge(c, a) as usize) << 3
                    | (g.has_edge(b, c) as usize) << 4
                    | (g.has_edge(c, b) as usize) << 5;
                counts[table[code] as usize] += 1;
            }
        }
    }
    Ok(counts)
}

/// Triad class fractions, normalised by `C(n, 3)`.
pub fn triad_census(g: &DiGraph) -> Result<[f64; 16]> {
    let counts = triad_counts(g)?;
    let n = g.n() as f64;
    let total = n * (n - 1.0) * (n - 2.0) / 6.0;
    Ok(counts.map(|c| c as f64 / total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let e = triad_census(&DiGraph::empty(6)).unwrap();
        assert_eq!(e[0], 1.0);
        assert!(e[1..].iter().all(|&x| x == 0.0));
        let c = triad_census(&DiGraph::complete(6)).unwrap();
        assert_eq!(c[15], 1.0);
        assert!(c[..15].iter().all(|&x| x == 0.0));
        assert!(triad_census(&DiGraph::empty(2)).is_err());
    }

    #[test]
    fn named_examples() {
        // A=0, B=1, C=2 in the usual textbook drawings.
        let cases: [(&str, &[(usize, usize)]); 16] = [
            ("003", &[]),
            ("012", &[(0, 1)]),
            ("102", &[(0, 1), (1, 0)]),
            ("021D", &[(1, 0), (1, 2)]),
            ("021U", &[(0, 1), (2, 1)]),
            ("021C", &[(0, 1), (1, 2)]),
            ("111D", &[(0, 1), (1, 0), (2, 1)]),
            ("111U", &[(0, 1), (1, 0), (1, 2)]),
            ("030T", &[(0, 1), (2, 1), (0, 2)]),
            ("030C", &[(1, 0), (2, 1), (0, 2)]),
            ("201", &[(0, 1), (1, 0), (1, 2), (2, 1)]),
            ("120D", &[(1, 0), (1, 2), (0, 2), (2, 0)]),
            ("120U", &[(0, 1), (2, 1), (0, 2), (2, 0)]),
            ("120C", &[(0, 1), (1, 2), (0, 2), (2, 0)]),
            ("210", &[(0, 1), (1, 2), (2, 1), (0, 2), (2, 0)]),
            ("300", &[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]),
        ];
        for (name, edges) in cases {
            let g = DiGraph::from_edges(3, edges.iter().copied()).unwrap();
            let counts = triad_counts(&g).unwrap();
            let idx = TRIAD_NAMES.iter().position(|&t| t == name).unwrap();
            assert_eq!(counts[idx], 1, "{name}");
        }
    }
}
