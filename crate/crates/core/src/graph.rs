//! Loopless directed graphs and valued edge lists.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

const WORD: usize = 64;

/// A loopless digraph on `n` vertices.
///
/// Both the out-rows and in-columns of the adjacency matrix are kept as packed
/// bitsets so that shared-partner counts reduce to a word-wise AND + popcount.
/// Degree caches are maintained on every mutation.
#[derive(Clone, PartialEq, Eq)]
pub struct DiGraph {
    n: usize,
    words: usize,
    out_bits: Vec<u64>,
    in_bits: Vec<u64>,
    outdeg: Vec<u32>,
    indeg: Vec<u32>,
    edges: usize,
}

impl std::fmt::Debug for DiGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiGraph").field("n", &self.n).field("edges", &self.edges().collect::<Vec<_>>()).finish()
    }
}

impl DiGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(WORD).max(1);
        Self {
            n,
            words,
            out_bits: vec![0; n * words],
            in_bits: vec![0; n * words],
            outdeg: vec![0; n],
            indeg: vec![0; n],
            edges: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.set_unchecked(i, j, true);
                }
            }
        }
        g
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n);
        for (i, j) in edges {
            g.set_edge(i, j, true)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.out_bits[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> usize {
        self.outdeg[i] as usize
    }

    #[inline]
    pub fn in_degree(&self, i: usize) -> usize {
        self.indeg[i] as usize
    }

    pub fn out_degrees(&self) -> &[u32] {
        &self.outdeg
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.indeg
    }

    /// Out-neighbourhood of `i` as packed bits.
    #[inline]
    pub fn out_row(&self, i: usize) -> &[u64] {
        &self.out_bits[i * self.words..(i + 1) * self.words]
    }

    /// In-neighbourhood of `j` as packed bits.
    #[inline]
    pub fn in_row(&self, j: usize) -> &[u64] {
        &self.in_bits[j * self.words..(j + 1) * self.words]
    }

    /// Number of `k` with `k -> i` and `k -> j`.
    ///
    /// `k = i` and `k = j` never contribute since self-loops are absent.
    #[inline]
    pub fn shared_in_partners(&self, i: usize, j: usize) -> usize {
        if self.words == 1 {
            return (self.in_bits[i] & self.in_bits[j]).count_ones() as usize;
        }
        let a = self.in_row(i);
        let b = self.in_row(j);
        a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
    }

    /// Set the state of edge `(i, j)`. Returns whether the graph changed.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) -> Result<bool> {
        if i >= self.n || j >= self.n {
            return invalid(format!("vertex out of range: ({i}, {j}) with n = {}", self.n));
        }
        if i == j {
            return invalid(format!("self-loop ({i}, {i}) is not allowed"));
        }
        Ok(self.set_unchecked(i, j, present))
    }

    /// Caller guarantees `i != j` and both in range.
    #[inline]
    pub(crate) fn set_unchecked(&mut self, i: usize, j: usize, present: bool) -> bool {
        // Branch-free: this sits in the sampler's inner loop where `present`
        // is a coin flip.
        let w = self.words;
        let out_idx = i * w + j / WORD;
        let in_idx = j * w + i / WORD;
        let (jb, ib) = (j % WORD, i % WORD);
        let old = self.out_bits[out_idx];
        let was = (old >> jb) & 1;
        let now = present as u64;
        self.out_bits[out_idx] = (old & !(1 << jb)) | (now << jb);
        let inn = self.in_bits[in_idx];
        self.in_bits[in_idx] = (inn & !(1 << ib)) | (now << ib);
        let delta = now as i64 - was as i64;
        self.outdeg[i] = (self.outdeg[i] as i64 + delta) as u32;
        self.indeg[j] = (self.indeg[j] as i64 + delta) as u32;
        self.edges = (self.edges as i64 + delta) as usize;
        delta != 0
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.out_neighbors(i).map(move |j| (i, j)))
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.out_row(i))
    }

    pub fn in_neighbors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.in_row(j))
    }

    /// Image of the graph under the vertex map `v -> perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return invalid("permutation length differs from graph order");
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return invalid("not a permutation");
            }
        }
        let mut g = Self::empty(self.n);
        for (i, j) in self.edges() {
            g.set_unchecked(perm[i], perm[j], true);
        }
        Ok(g)
    }

    /// Recount degrees and edge total from the bitsets and compare with the caches.
    pub fn degrees_consistent(&self) -> bool {
        let mut total = 0;
        for v in 0..self.n {
            let out: u32 = self.out_row(v).iter().map(|w| w.count_ones()).sum();
            let inn: u32 = self.in_row(v).iter().map(|w| w.count_ones()).sum();
            if out != self.outdeg[v] || inn != self.indeg[v] || self.has_edge_raw(v, v) {
                return false;
            }
            total += out as usize;
        }
        let transposed = self.edges().all(|(i, j)| self.in_row(j)[i / WORD] >> (i % WORD) & 1 == 1);
        total == self.edges && transposed
    }

    fn has_edge_raw(&self, i: usize, j: usize) -> bool {
        self.out_bits[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    /// Dense 0/1 adjacency matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for (i, j) in self.edges() {
            a[i * self.n + j] = 1.0;
        }
        a
    }

    /// Binary edge list with every strength equal to 1.
    pub fn to_edge_list(&self) -> ValuedEdgeList {
        ValuedEdgeList { n: self.n, levels: 1, entries: self.edges().map(|(i, j)| (i, j, 1)).collect() }
    }
}

fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * WORD + bit)
            }
        })
    })
}

/// Directed edges carrying an ordinal strength level in `1..=levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuedEdgeList {
    n: usize,
    levels: u32,
    entries: Vec<(usize, usize, u32)>,
}

impl ValuedEdgeList {
    /// Build a list, validating loops, ranges and duplicate pairs.
    /// `levels` of `None` takes the largest strength present (at least 1).
    pub fn new(n: usize, levels: Option<u32>, mut entries: Vec<(usize, usize, u32)>) -> Result<Self> {
        let observed = entries.iter().map(|e| e.2).max().unwrap_or(1).max(1);
        let levels = levels.unwrap_or(observed);
        for &(i, j, s) in &entries {
            if i >= n || j >= n {
                return invalid(format!("vertex out of range in ({i}, {j})"));
            }
            if i == j {
                return invalid(format!("self-loop at vertex {i}"));
            }
            if s == 0 || s > levels {
                return invalid(format!("strength {s} outside 1..={levels}"));
            }
        }
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return invalid(format!("duplicate pair ({}, {})", w[0].0, w[0].1));
        }
        Ok(Self { n, levels, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Entries sorted by `(i, j)`.
    pub fn entries(&self) -> &[(usize, usize, u32)] {
        &self.entries
    }

    /// Binary graph with an edge wherever the strength is at least `level`.
    pub fn threshold(&self, level: u32) -> Result<DiGraph> {
        if level == 0 || level > self.levels {
            return invalid(format!("threshold {level} outside 1..={}", self.levels));
        }
        let mut g = DiGraph::empty(self.n);
        for &(i, j, s) in &self.entries {
            if s >= level {
                g.set_unchecked(i, j, true);
            }
        }
        Ok(g)
    }

    /// Parse the edge-list text format.
    ///
    /// ```text
    /// # comment
    /// 3
    /// 0 1 3
    /// 1 2 1
    /// ```
    ///
    /// The first non-comment line is the vertex count; each following line
    /// is `i j strength` (a missing strength means 1).
    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let Some(order) = n else {
                if fields.len() != 1 {
                    return Err(err(format!("expected vertex count, got {line:?}")));
                }
                let v: usize = fields[0].parse().map_err(|_| err(format!("bad vertex count {:?}", fields[0])))?;
                n = Some(v);
                continue;
            };
            if fields.len() != 2 && fields.len() != 3 {
                return Err(err(format!("expected `i j strength`, got {line:?}")));
            }
            let num =
                |s: &str, what: &str| -> Result<u64> { s.parse::<u64>().map_err(|_| err(format!("bad {what} {s:?}"))) };
            let i = num(fields[0], "vertex")? as usize;
            let j = num(fields[1], "vertex")? as usize;
            let s = match fields.get(2) {
                Some(f) => num(f, "strength")?,
                None => 1,
            };
            if i >= order || j >= order {
                return Err(err(format!("vertex out of range 0..{order}")));
            }
            if i == j {
                return Err(err(format!("self-loop at vertex {i}")));
            }
            if s == 0 || s > u32::MAX as u64 {
                return Err(err(format!("strength {s} must be a positive integer")));
            }
            if !seen.insert((i, j)) {
                return Err(err(format!("duplicate pair ({i}, {j})")));
            }
            entries.push((i, j, s as u32));
        }
        let n = n.ok_or(Error::Parse { line: 0, message: "missing vertex count".into() })?;
        Self::new(n, None, entries)
    }

    /// Canonical text: count line followed by entries sorted by `(i, j)`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.entries.len() * 12);
        let _ = writeln!(out, "{}", self.n);
        for &(i, j, s) in &self.entries {
            let _ = writeln!(out, "{i} {j} {s}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_edge_bookkeeping() {
        let mut g = DiGraph::empty(3);
        assert!(g.set_edge(0, 1, true).unwrap());
        assert_eq!(g.out_degree(0), 1);
        assert_eq!(g.in_degree(1), 1);
        let snapshot = g.clone();
        assert!(!g.set_edge(0, 1, true).unwrap());
        assert_eq!(g, snapshot);
    }

    #[test]
    fn rejects_loops_and_range() {
        let mut g = DiGraph::empty(3);
        assert!(matches!(g.set_edge(1, 1, true), Err(Error::InvalidArgument(_))));
        assert!(matches!(g.set_edge(0, 3, true), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn random_toggles_keep_caches() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [10usize, 70, 130] {
            let mut g = DiGraph::empty(n);
            for _ in 0..1000 {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                if i != j {
                    g.set_edge(i, j, rng.gen()).unwrap();
                }
            }
            assert!(g.degrees_consistent());
            for v in 0..n {
                let out = (0..n).filter(|&u| g.has_edge(v, u)).count();
                let inn = (0..n).filter(|&u| g.has_edge(u, v)).count();
                assert_eq!(out, g.out_degree(v));
                assert_eq!(inn, g.in_degree(v));
            }
        }
    }

    #[test]
    fn shared_partners_wide_graph() {
        let mut g = DiGraph::empty(200);
        for k in [5usize, 70, 150, 199] {
            g.set_edge(k, 0, true).unwrap();
            g.set_edge(k, 1, true).unwrap();
        }
        g.set_edge(3, 0, true).unwrap();
        assert_eq!(g.shared_in_partners(0, 1), 4);
        assert_eq!(g.in_neighbors(0).collect::<Vec<_>>(), vec![3, 5, 70, 150, 199]);
    }

    #[test]
    fn threshold_examples() {
        let v = ValuedEdgeList::new(3, None, vec![(0, 1, 3), (1, 2, 1)]).unwrap();
        let g2 = v.threshold(2).unwrap();
        assert_eq!(g2.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        let g1 = v.threshold(1).unwrap();
        assert_eq!(g1.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(v.threshold(0).is_err());
        assert!(v.threshold(4).is_err());
    }

    #[test]
    fn parse_examples() {
        let v = ValuedEdgeList::parse("3\n0 1 3\n1 2 1\n").unwrap();
        assert_eq!(v.n(), 3);
        assert_eq!(v.entries().len(), 2);
        assert_eq!(v.levels(), 3);

        let with_comments = "# header\n\n3\n# edge\n1 2\n";
        assert_eq!(ValuedEdgeList::parse(with_comments).unwrap().entries(), &[(1, 2, 1)]);

        match ValuedEdgeList::parse("3\n0 0 2\n") {
            Err(Error::Parse { line: 2, message }) => assert!(message.contains("self-loop")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(ValuedEdgeList::parse("3\n0 1 1\n0 1 2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(ValuedEdgeList::parse("3\n0 x 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ValuedEdgeList::parse("3\n0 1 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(ValuedEdgeList::parse("# nothing\n"), Err(Error::Parse { .. })));
    }

    fn arb_list() -> impl Strategy<Value = ValuedEdgeList> {
        (2usize..12).prop_flat_map(|n| {
            proptest::collection::btree_map((0..n, 0..n), 1u32..6, 0..40).prop_map(move |m| {
                let entries = m.into_iter().filter(|((i, j), _)| i != j).map(|((i, j), s)| (i, j, s)).collect();
                ValuedEdgeList::new(n, Some(5), entries).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(v in arb_list()) {
            let text = v.to_text();
            let back = ValuedEdgeList::parse(&text).unwrap();
            prop_assert_eq!(back.entries(), v.entries());
            prop_assert_eq!(back.to_text(), text);
        }

        #[test]
        fn thresholds_nest(v in arb_list()) {
            for s in 1..5 {
                let lo = v.threshold(s).unwrap();
                let hi = v.threshold(s + 1).unwrap();
                prop_assert!(hi.edges().all(|(i, j)| lo.has_edge(i, j)));
            }
        }
    }
}
