//! Undirected simple graphs on `p` labelled nodes.
//!
//! Nodes are 0-based inside the library. The edge-list text format used for
//! persistence is 1-based (see [`Graph::to_edge_list`]).

use std::fmt;

use crate::error::{Error, Result};

/// An unordered node pair stored canonically with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    i: usize,
    j: usize,
}

impl Edge {
    /// Builds the canonical pair for `{a, b}`. Self-loops are rejected.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        Ok(Self { i: a.min(b), j: a.max(b) })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Position of the pair in the row-major enumeration of the upper triangle.
    pub fn index(&self, p: usize) -> usize {
        self.i * (2 * p - self.i - 1) / 2 + (self.j - self.i - 1)
    }

    /// Inverse of [`Edge::index`].
    pub fn from_index(index: usize, p: usize) -> Self {
        let mut i = 0;
        let mut start = 0;
        loop {
            let row = p - i - 1;
            if index < start + row {
                return Self { i, j: i + 1 + (index - start) };
            }
            start += row;
            i += 1;
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i + 1, self.j + 1)
    }
}

/// Whether the second graph of a comparison gained or lost an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeChange {
    Added,
    Removed,
}

/// Number of unordered pairs on `p` nodes.
pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Iterator over every pair `(i, j)`, `i < j`, in canonical order.
pub fn all_pairs(p: usize) -> impl Iterator<Item = Edge> {
    (0..p).flat_map(move |i| ((i + 1)..p).map(move |j| Edge { i, j }))
}

/// Dense adjacency stored as one bit row per node.
///
/// Rows are kept symmetric so neighbour enumeration of any node is a single
/// row scan.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    p: usize,
    words: usize,
    bits: Vec<u64>,
    edges: usize,
}

impl Graph {
    /// The empty graph on `p` nodes.
    pub fn new(p: usize) -> Self {
        let words = p.div_ceil(64).max(1);
        Self { p, words, bits: vec![0; words * p], edges: 0 }
    }

    pub fn complete(p: usize) -> Self {
        let mut g = Self::new(p);
        for e in all_pairs(p) {
            g.insert(e);
        }
        g
    }

    /// Builds a graph from 0-based node pairs.
    pub fn from_pairs<I>(p: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(p);
        for (a, b) in pairs {
            let e = g.edge(a, b)?;
            g.insert(e);
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Validated canonical edge for `{a, b}` on this graph's node set.
    pub fn edge(&self, a: usize, b: usize) -> Result<Edge> {
        for &x in &[a, b] {
            if x >= self.p {
                return Err(Error::NodeOutOfRange { index: x, p: self.p });
            }
        }
        Edge::new(a, b)
    }

    pub fn check_edge(&self, e: Edge) -> Result<()> {
        if e.j >= self.p {
            return Err(Error::NodeOutOfRange { index: e.j, p: self.p });
        }
        Ok(())
    }

    #[inline]
    fn bit(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, a: usize, b: usize, on: bool) {
        let w = &mut self.bits[a * self.words + b / 64];
        if on {
            *w |= 1 << (b % 64);
        } else {
            *w &= !(1 << (b % 64));
        }
    }

    /// Membership test; symmetric in its arguments. Out-of-range or equal
    /// indices are never adjacent.
    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && a < self.p && b < self.p && self.bit(a, b)
    }

    #[inline]
    pub fn contains(&self, e: Edge) -> bool {
        self.has_edge(e.i, e.j)
    }

    /// Inserts in place; returns `false` if the edge was already present.
    pub fn insert(&mut self, e: Edge) -> bool {
        if self.contains(e) {
            return false;
        }
        self.set_bit(e.i, e.j, true);
        self.set_bit(e.j, e.i, true);
        self.edges += 1;
        true
    }

    /// Removes in place; returns `false` if the edge was absent.
    pub fn remove(&mut self, e: Edge) -> bool {
        if !self.contains(e) {
            return false;
        }
        self.set_bit(e.i, e.j, false);
        self.set_bit(e.j, e.i, false);
        self.edges -= 1;
        true
    }

    /// Flips membership of `e`; returns whether it is present afterwards.
    pub fn toggle(&mut self, e: Edge) -> bool {
        if self.contains(e) {
            self.remove(e);
            false
        } else {
            self.insert(e);
            true
        }
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.p).flat_map(move |i| {
            self.neighbor_iter(i).filter(move |&j| j > i).map(move |j| Edge { i, j })
        })
    }

    /// Neighbours of `j` in increasing order, without range checking.
    pub fn neighbor_iter(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.bits[j * self.words..(j + 1) * self.words];
        row.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let t = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + t)
            })
        })
    }

    /// Neighbours of node `j`.
    pub fn neighbors(&self, j: usize) -> Result<Vec<usize>> {
        if j >= self.p {
            return Err(Error::NodeOutOfRange { index: j, p: self.p });
        }
        Ok(self.neighbor_iter(j).collect())
    }

    pub fn degree(&self, j: usize) -> usize {
        self.bits[j * self.words..(j + 1) * self.words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// `|E| / (p(p-1)/2)`; undefined for fewer than two nodes.
    pub fn density(&self) -> Result<f64> {
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!(
                "density needs at least two nodes, got p = {}",
                self.p
            )));
        }
        Ok(self.edges as f64 / pair_count(self.p) as f64)
    }

    /// Relabels nodes: node `v` of `self` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.p);
        let mut g = Self::new(self.p);
        for e in self.edges() {
            g.insert(Edge::new(perm[e.i], perm[e.j]).expect("permutation is a bijection"));
        }
        g
    }

    /// Serialises as `p=<count>` followed by one 1-based `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("p={}\n", self.p);
        for e in self.edges() {
            out.push_str(&format!("{} {}\n", e.i + 1, e.j + 1));
        }
        out
    }

    /// Parses the format written by [`Graph::to_edge_list`]. Blank lines and
    /// `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut graph: Option<Graph> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: lineno + 1, message };
            match graph.as_mut() {
                None => {
                    let count = line
                        .strip_prefix("p=")
                        .ok_or_else(|| parse_err(format!("expected header `p=<count>`, found `{line}`")))?;
                    let p = count
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad node count: {e}")))?;
                    graph = Some(Graph::new(p));
                }
                Some(g) => {
                    let mut it = line.split_whitespace();
                    let mut next = || -> Result<usize> {
                        let tok = it.next().ok_or_else(|| parse_err("expected two node indices".into()))?;
                        let v = tok.parse::<usize>().map_err(|e| parse_err(format!("bad node `{tok}`: {e}")))?;
                        if v == 0 {
                            return Err(parse_err("node indices are 1-based".into()));
                        }
                        Ok(v - 1)
                    };
                    let (a, b) = (next()?, next()?);
                    let e = g.edge(a, b).map_err(|e| parse_err(e.to_string()))?;
                    g.insert(e);
                }
            }
        }
        graph.ok_or_else(|| Error::Parse { line: 0, message: "missing `p=<count>` header".into() })
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(p={}, {{", self.p)?;
        for (k, e) in self.edges().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}})")
    }
}

/// Copy of `g` with `{a, b}` present.
pub fn add_edge(g: &Graph, a: usize, b: usize) -> Result<Graph> {
    let e = g.edge(a, b)?;
    let mut out = g.clone();
    out.insert(e);
    Ok(out)
}

/// Copy of `g` with `{a, b}` absent.
pub fn remove_edge(g: &Graph, a: usize, b: usize) -> Result<Graph> {
    let e = g.edge(a, b)?;
    let mut out = g.clone();
    out.remove(e);
    Ok(out)
}

/// If the edge sets differ in exactly one pair, that pair and whether `g2`
/// gained or lost it.
pub fn single_edge_difference(g1: &Graph, g2: &Graph) -> Result<Option<(Edge, EdgeChange)>> {
    if g1.p != g2.p {
        return Err(Error::DimensionMismatch { expected: g1.p, found: g2.p });
    }
    let mut found = None;
    for i in 0..g1.p {
        let r1 = &g1.bits[i * g1.words..(i + 1) * g1.words];
        let r2 = &g2.bits[i * g2.words..(i + 1) * g2.words];
        for (w, (&a, &b)) in r1.iter().zip(r2).enumerate() {
            let mut diff = a ^ b;
            while diff != 0 {
                let j = w * 64 + diff.trailing_zeros() as usize;
                diff &= diff - 1;
                if j <= i {
                    continue;
                }
                if found.is_some() {
                    return Ok(None);
                }
                let change = if g2.has_edge(i, j) { EdgeChange::Added } else { EdgeChange::Removed };
                found = Some((Edge { i, j }, change));
            }
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn add_edge_canonicalises_and_rejects_loops() {
        let g = Graph::new(3);
        let a = add_edge(&g, 0, 1).unwrap();
        let b = add_edge(&g, 1, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges().collect::<Vec<_>>(), vec![Edge::new(0, 1).unwrap()]);
        assert_eq!(add_edge(&g, 0, 0), Err(Error::SelfLoop(0)));
        assert!(matches!(add_edge(&g, 0, 3), Err(Error::NodeOutOfRange { index: 3, p: 3 })));
        assert_eq!(g.edge_count(), 0, "input must be untouched");
    }

    #[test]
    fn remove_edge_cases() {
        let g = Graph::from_pairs(3, [(0, 1)]).unwrap();
        assert_eq!(remove_edge(&g, 0, 1).unwrap().edge_count(), 0);
        assert_eq!(remove_edge(&Graph::new(3), 0, 1).unwrap().edge_count(), 0);
        let g = Graph::from_pairs(3, [(0, 2)]).unwrap();
        assert_eq!(remove_edge(&g, 2, 0).unwrap().edge_count(), 0);
    }

    #[test]
    fn density_values() {
        assert_eq!(Graph::complete(4).density().unwrap(), 1.0);
        assert_eq!(Graph::new(4).density().unwrap(), 0.0);
        let g = Graph::from_pairs(5, [(0, 1), (2, 3)]).unwrap();
        assert!((g.density().unwrap() - 0.2).abs() < 1e-15);
        assert!(Graph::new(1).density().is_err());
    }

    #[test]
    fn neighbors_examples() {
        let g = Graph::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.neighbors(1).unwrap(), vec![0, 2]);
        let g = Graph::from_pairs(3, [(0, 1)]).unwrap();
        assert!(g.neighbors(2).unwrap().is_empty());
        assert_eq!(Graph::complete(4).neighbors(0).unwrap(), vec![1, 2, 3]);
        assert!(g.neighbors(3).is_err());
    }

    #[test]
    fn neighbors_cross_word_boundary() {
        let g = Graph::from_pairs(130, [(0, 64), (0, 129), (63, 64)]).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), vec![64, 129]);
        assert_eq!(g.neighbors(64).unwrap(), vec![0, 63]);
        assert_eq!(g.degree(64), 2);
    }

    #[test]
    fn single_edge_difference_examples() {
        let g1 = Graph::from_pairs(3, [(0, 1)]).unwrap();
        let g2 = Graph::from_pairs(3, [(0, 1), (0, 2)]).unwrap();
        assert_eq!(
            single_edge_difference(&g1, &g2).unwrap(),
            Some((Edge::new(0, 2).unwrap(), EdgeChange::Added))
        );
        assert_eq!(
            single_edge_difference(&g2, &g1).unwrap(),
            Some((Edge::new(0, 2).unwrap(), EdgeChange::Removed))
        );
        assert_eq!(single_edge_difference(&g1, &g1).unwrap(), None);
        let g3 = Graph::from_pairs(3, [(1, 2)]).unwrap();
        assert_eq!(single_edge_difference(&g1, &g3).unwrap(), None);
        assert!(single_edge_difference(&g1, &Graph::new(4)).is_err());
    }

    #[test]
    fn pair_index_roundtrip() {
        let p = 7;
        for (k, e) in all_pairs(p).enumerate() {
            assert_eq!(e.index(p), k);
            assert_eq!(Edge::from_index(k, p), e);
        }
    }

    #[test]
    fn edge_list_format() {
        let g = Graph::from_pairs(4, [(0, 3), (1, 2)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "p=4\n1 4\n2 3\n");
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        assert!(matches!(Graph::parse_edge_list("p=3\n1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Graph::parse_edge_list("1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Graph::parse_edge_list("p=3\n0 2\n"), Err(Error::Parse { line: 2, .. })));
    }

    fn arb_graph(max_p: usize) -> impl Strategy<Value = Graph> {
        (2..=max_p).prop_flat_map(|p| {
            proptest::collection::vec(any::<bool>(), pair_count(p)).prop_map(move |bits| {
                let mut g = Graph::new(p);
                for (k, on) in bits.into_iter().enumerate() {
                    if on {
                        g.insert(Edge::from_index(k, p));
                    }
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn add_then_remove_is_identity(g in arb_graph(9), pick in any::<prop::sample::Index>()) {
            let missing: Vec<Edge> = all_pairs(g.p()).filter(|e| !g.contains(*e)).collect();
            prop_assume!(!missing.is_empty());
            let e = missing[pick.index(missing.len())];
            let (a, b) = (e.j(), e.i());
            let added = add_edge(&g, a, b).unwrap();
            prop_assert_eq!(remove_edge(&added, a, b).unwrap(), g.clone());
            prop_assert!(added.density().unwrap() >= g.density().unwrap());
            prop_assert_eq!(single_edge_difference(&g, &added).unwrap(), Some((e, EdgeChange::Added)));
        }

        #[test]
        fn membership_is_symmetric(g in arb_graph(9)) {
            for a in 0..g.p() {
                for b in 0..g.p() {
                    prop_assert_eq!(g.has_edge(a, b), g.has_edge(b, a));
                }
            }
            prop_assert!(g.edge_count() <= pair_count(g.p()));
            prop_assert_eq!(g.edges().count(), g.edge_count());
        }
    }
}
