//! Simple graphs, edge-colored graph families, and the neighborhood
//! operators the embedding machinery is phrased in.
//!
//! A [`GraphFamily`] is a list of `t` simple graphs on one shared vertex set
//! `{0, .., n-1}`; color `i` (0-based here and in every serialized array;
//! 1-based only in prose) refers to the `i`-th member graph. A
//! [`ColoredVertexSet`] is a set of (vertex, color) pairs — the sets `X`
//! ranged over by the goodness residual — and [`AuxiliaryBipartite`] is the
//! bipartite view with left class `V x [t]` and right class `V`, where
//! `(u, i) ~ v` exactly when `u ~ v` in member graph `i`.

use crate::bitset::BitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from graph and family construction or queries.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex id {v} out of range for {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("self-loop at vertex {v} is not allowed")]
    SelfLoop { v: usize },
    #[error("color {color} out of range for {t} colors")]
    ColorOutOfRange { color: usize, t: usize },
    #[error("a family needs at least one member graph")]
    EmptyFamily,
    #[error("member graph {index} has {found} vertices, expected {expected}")]
    MemberSizeMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("cannot restrict a family to an empty vertex set")]
    EmptyRestriction,
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

/// A simple undirected graph on vertices `{0, .., n-1}`, stored as one
/// bit row per vertex so neighborhood unions are word-parallel.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Graph {
    n: usize,
    rows: Vec<BitSet>,
    num_edges: usize,
}

impl Graph {
    /// The edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            rows: vec![BitSet::new(n); n],
            num_edges: 0,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Inserts the edge `uv` (idempotent).
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        if u >= self.n {
            return Err(GraphError::VertexOutOfRange { v: u, n: self.n });
        }
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange { v, n: self.n });
        }
        if u == v {
            return Err(GraphError::SelfLoop { v });
        }
        if self.rows[u].insert(v) {
            self.rows[v].insert(u);
            self.num_edges += 1;
        }
        Ok(())
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v).expect("complete graph edges are valid");
            }
        }
        g
    }

    /// The cycle `C_n` (empty for `n < 3`).
    pub fn cycle(n: usize) -> Self {
        let mut g = Graph::empty(n);
        if n >= 3 {
            for u in 0..n {
                g.add_edge(u, (u + 1) % n).expect("cycle edges are valid");
            }
        }
        g
    }

    /// The path `P_n` on `n` vertices (`n-1` edges).
    pub fn path(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 1..n {
            g.add_edge(u - 1, u).expect("path edges are valid");
        }
        g
    }

    /// A seeded Erdős–Rényi draw `G(n, p)`: each pair is an edge
    /// independently with probability `p`. The same `(n, p, seed)` always
    /// yields the same graph (pairs are visited in lexicographic order with
    /// a fixed-algorithm generator).
    pub fn random(n: usize, p: f64, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen::<f64>() < p {
                    g.add_edge(u, v).expect("random graph edges are valid");
                }
            }
        }
        g
    }

    /// `K_n` minus the perfect matching `{2i, 2i+1}`; requires even `n`.
    pub fn complete_minus_perfect_matching(n: usize) -> Self {
        assert!(n % 2 == 0, "perfect matching needs an even vertex count");
        let mut g = Graph::complete(n);
        for i in 0..n / 2 {
            g.remove_edge(2 * i, 2 * i + 1);
        }
        g
    }

    fn remove_edge(&mut self, u: usize, v: usize) {
        if self.rows[u].remove(v) {
            self.rows[v].remove(u);
            self.num_edges -= 1;
        }
    }

    /// Vertex count.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of (unordered) edges.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.rows[u].contains(v)
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].len()
    }

    /// The neighborhood of `v` as a bit row.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.rows[v]
    }

    /// Sorted list of edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges);
        for u in 0..self.n {
            for v in self.rows[u].iter() {
                if v > u {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        if self.n == 0 {
            return Some(0);
        }
        let d = self.degree(0);
        (1..self.n).all(|v| self.degree(v) == d).then_some(d)
    }

    /// Ordered-pair edge count `|{(x, y) in X x Y : xy in E}|`; an edge with
    /// both ends in `X ∩ Y` counts twice.
    pub fn edge_count(&self, x: &BitSet, y: &BitSet) -> u64 {
        assert_eq!(x.nbits(), self.n, "X universe mismatch");
        assert_eq!(y.nbits(), self.n, "Y universe mismatch");
        x.iter()
            .map(|u| self.rows[u].intersection_len(y) as u64)
            .sum()
    }

    /// [`Graph::edge_count`] over plain id slices, validating ranges.
    pub fn edge_count_ids(&self, xs: &[usize], ys: &[usize]) -> Result<u64, GraphError> {
        let check = |ids: &[usize]| {
            ids.iter()
                .find(|&&v| v >= self.n)
                .map(|&v| GraphError::VertexOutOfRange { v, n: self.n })
        };
        if let Some(e) = check(xs).or_else(|| check(ys)) {
            return Err(e);
        }
        let x = BitSet::from_indices(self.n, xs.iter().copied());
        let y = BitSet::from_indices(self.n, ys.iter().copied());
        Ok(self.edge_count(&x, &y))
    }
}

// ---------------------------------------------------------------------------
// ColoredVertexSet
// ---------------------------------------------------------------------------

/// A set of (vertex, color) pairs — a subset of `V x [t]`, the domain the
/// residual function ranges over. Stored as one bit set per color.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColoredVertexSet {
    n: usize,
    per_color: Vec<BitSet>,
    len: usize,
}

impl ColoredVertexSet {
    /// The empty set over `n` vertices and `t` colors.
    pub fn new(n: usize, t: usize) -> Self {
        ColoredVertexSet {
            n,
            per_color: vec![BitSet::new(n); t],
            len: 0,
        }
    }

    /// Builds from explicit pairs, validating ranges and ignoring duplicates.
    pub fn from_pairs(
        n: usize,
        t: usize,
        pairs: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut s = ColoredVertexSet::new(n, t);
        for &(v, c) in pairs {
            s.try_insert(v, c)?;
        }
        Ok(s)
    }

    pub fn try_insert(&mut self, v: usize, color: usize) -> Result<bool, GraphError> {
        if color >= self.per_color.len() {
            return Err(GraphError::ColorOutOfRange {
                color,
                t: self.per_color.len(),
            });
        }
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange { v, n: self.n });
        }
        Ok(self.insert(v, color))
    }

    /// Inserts `(v, color)`; returns whether it was newly added.
    #[inline]
    pub fn insert(&mut self, v: usize, color: usize) -> bool {
        let added = self.per_color[color].insert(v);
        if added {
            self.len += 1;
        }
        added
    }

    /// Removes `(v, color)`; returns whether it was present.
    #[inline]
    pub fn remove(&mut self, v: usize, color: usize) -> bool {
        let removed = self.per_color[color].remove(v);
        if removed {
            self.len -= 1;
        }
        removed
    }

    #[inline]
    pub fn contains(&self, v: usize, color: usize) -> bool {
        color < self.per_color.len() && self.per_color[color].contains(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.per_color.len()
    }

    /// The color-`c` slice of the set.
    #[inline]
    pub fn color_slice(&self, c: usize) -> &BitSet {
        &self.per_color[c]
    }

    /// The projection `X|_V = {v : (v, i) in X for some i}`.
    pub fn projection(&self) -> BitSet {
        let mut out = BitSet::new(self.n);
        for slice in &self.per_color {
            out.union_with(slice);
        }
        out
    }

    /// Pairs in (color, vertex)-ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.per_color
            .iter()
            .enumerate()
            .flat_map(|(c, s)| s.iter().map(move |v| (v, c)))
    }

    /// Pairs sorted by (vertex, color) — the interchange ordering.
    pub fn to_sorted_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<_> = self.iter().collect();
        pairs.sort_unstable();
        pairs
    }

    pub fn clear(&mut self) {
        for s in &mut self.per_color {
            s.clear();
        }
        self.len = 0;
    }
}

// ---------------------------------------------------------------------------
// GraphFamily
// ---------------------------------------------------------------------------

/// A relabeling produced by [`GraphFamily::restrict`]: old ids to new
/// contiguous ids and back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    old_to_new: Vec<Option<usize>>,
    new_to_old: Vec<usize>,
}

impl Relabeling {
    /// Identity relabeling on `n` vertices.
    pub fn identity(n: usize) -> Self {
        Relabeling {
            old_to_new: (0..n).map(Some).collect(),
            new_to_old: (0..n).collect(),
        }
    }

    #[inline]
    pub fn to_new(&self, old: usize) -> Option<usize> {
        self.old_to_new.get(old).copied().flatten()
    }

    #[inline]
    pub fn to_old(&self, new: usize) -> usize {
        self.new_to_old[new]
    }

    /// Number of surviving vertices.
    pub fn new_len(&self) -> usize {
        self.new_to_old.len()
    }
}

/// `t` simple graphs on one shared vertex set — the host structure.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GraphFamily {
    n: usize,
    graphs: Vec<Graph>,
}

impl GraphFamily {
    /// Wraps member graphs, requiring `t >= 1` and equal vertex counts.
    pub fn new(graphs: Vec<Graph>) -> Result<Self, GraphError> {
        let first = graphs.first().ok_or(GraphError::EmptyFamily)?;
        let n = first.n();
        for (index, g) in graphs.iter().enumerate() {
            if g.n() != n {
                return Err(GraphError::MemberSizeMismatch {
                    index,
                    found: g.n(),
                    expected: n,
                });
            }
        }
        Ok(GraphFamily { n, graphs })
    }

    /// A single-graph family (t = 1).
    pub fn single(g: Graph) -> Self {
        GraphFamily {
            n: g.n(),
            graphs: vec![g],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.graphs.len()
    }

    #[inline]
    pub fn graph(&self, color: usize) -> &Graph {
        &self.graphs[color]
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    /// Number of (vertex, color) pairs `n * t` — the left universe size.
    #[inline]
    pub fn pair_count(&self) -> usize {
        self.n * self.graphs.len()
    }

    /// Flat id of the pair `(v, color)` in color-major order.
    #[inline]
    pub fn pair_id(&self, v: usize, color: usize) -> usize {
        color * self.n + v
    }

    /// Inverse of [`GraphFamily::pair_id`].
    #[inline]
    pub fn pair_from_id(&self, id: usize) -> (usize, usize) {
        (id % self.n, id / self.n)
    }

    /// The family neighborhood `Γ(X) = ⋃_{(v,i) in X} Γ_{G_i}(v)`.
    pub fn family_neighborhood(&self, x: &ColoredVertexSet) -> BitSet {
        let mut out = BitSet::new(self.n);
        self.family_neighborhood_into(x, &mut out);
        out
    }

    /// As [`GraphFamily::family_neighborhood`], reusing `out`.
    pub fn family_neighborhood_into(&self, x: &ColoredVertexSet, out: &mut BitSet) {
        assert_eq!(x.n(), self.n, "X universe mismatch");
        assert_eq!(x.t(), self.t(), "X color count mismatch");
        out.clear();
        for (v, c) in x.iter() {
            out.union_with(self.graphs[c].neighbors(v));
        }
    }

    /// The external neighborhood `N*(X, Y) = (Γ(X) ∩ Y) ∖ X|_V`.
    pub fn external_family_neighborhood(&self, x: &ColoredVertexSet, y: &BitSet) -> BitSet {
        assert_eq!(y.nbits(), self.n, "Y universe mismatch");
        let mut out = self.family_neighborhood(x);
        out.intersect_with(y);
        out.difference_with(&x.projection());
        out
    }

    /// Materializes the auxiliary bipartite graph.
    pub fn build_auxiliary(&self) -> AuxiliaryBipartite {
        let t = self.t();
        let mut rows = Vec::with_capacity(self.n * t);
        for c in 0..t {
            for v in 0..self.n {
                rows.push(self.graphs[c].neighbors(v).clone());
            }
        }
        AuxiliaryBipartite { n: self.n, t, rows }
    }

    /// Induced subfamily on `keep`, with contiguous re-indexing; the
    /// relabeling map is returned for round-tripping. Errors on empty `keep`.
    pub fn restrict(&self, keep: &BitSet) -> Result<(GraphFamily, Relabeling), GraphError> {
        assert_eq!(keep.nbits(), self.n, "restriction universe mismatch");
        if keep.is_empty() {
            return Err(GraphError::EmptyRestriction);
        }
        let new_to_old: Vec<usize> = keep.iter().collect();
        let mut old_to_new = vec![None; self.n];
        for (new, &old) in new_to_old.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        let m = new_to_old.len();
        let graphs = self
            .graphs
            .iter()
            .map(|g| {
                let mut h = Graph::empty(m);
                for (new_u, &old_u) in new_to_old.iter().enumerate() {
                    for old_v in g.neighbors(old_u).iter() {
                        if old_v > old_u {
                            if let Some(new_v) = old_to_new[old_v] {
                                h.add_edge(new_u, new_v)
                                    .expect("restricted edges are valid");
                            }
                        }
                    }
                }
                h
            })
            .collect();
        Ok((
            GraphFamily { n: m, graphs },
            Relabeling {
                old_to_new,
                new_to_old,
            },
        ))
    }
}

// ---------------------------------------------------------------------------
// AuxiliaryBipartite
// ---------------------------------------------------------------------------

/// The auxiliary bipartite graph: left class `V x [t]` (flat ids in
/// color-major order), right class `V`, with `(u, i) ~ v` iff `u ~ v` in
/// member graph `i`.
#[derive(Clone, Debug)]
pub struct AuxiliaryBipartite {
    n: usize,
    t: usize,
    rows: Vec<BitSet>,
}

impl AuxiliaryBipartite {
    #[inline]
    pub fn left_len(&self) -> usize {
        self.n * self.t
    }

    #[inline]
    pub fn right_len(&self) -> usize {
        self.n
    }

    /// Flat left id for `(v, color)`.
    #[inline]
    pub fn left_id(&self, v: usize, color: usize) -> usize {
        color * self.n + v
    }

    /// `(v, color)` for a flat left id.
    #[inline]
    pub fn left_pair(&self, id: usize) -> (usize, usize) {
        (id % self.n, id / self.n)
    }

    #[inline]
    pub fn has_edge(&self, left: usize, right: usize) -> bool {
        self.rows[left].contains(right)
    }

    #[inline]
    pub fn left_degree(&self, left: usize) -> usize {
        self.rows[left].len()
    }

    /// Right-side neighborhood of a left vertex.
    #[inline]
    pub fn left_row(&self, left: usize) -> &BitSet {
        &self.rows[left]
    }

    /// Total number of bipartite edges `Σ_i 2|E(G_i)| / ... ` — each member
    /// edge `uv` of `G_i` yields the two bipartite edges `(u,i)~v, (v,i)~u`.
    pub fn edge_total(&self) -> usize {
        self.rows.iter().map(BitSet::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_plus_edge_family() -> GraphFamily {
        // G_1 = triangle on {0,1,2}; G_2 = the single edge 01.
        let g1 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let g2 = Graph::from_edges(3, &[(0, 1)]).unwrap();
        GraphFamily::new(vec![g1, g2]).unwrap()
    }

    #[test]
    fn edge_count_ordered_pairs() {
        let k3 = Graph::complete(3);
        assert_eq!(k3.edge_count_ids(&[0], &[1, 2]).unwrap(), 2);
        assert_eq!(k3.edge_count_ids(&[0, 1], &[0, 1]).unwrap(), 2);
        let e = Graph::empty(4);
        assert_eq!(e.edge_count_ids(&[0, 1, 2], &[1, 2, 3]).unwrap(), 0);
        assert_eq!(
            k3.edge_count_ids(&[5], &[0]),
            Err(GraphError::VertexOutOfRange { v: 5, n: 3 })
        );
    }

    #[test]
    fn edge_count_symmetric_in_arguments() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let x = BitSet::from_indices(5, [0, 1, 3]);
        let y = BitSet::from_indices(5, [1, 2, 4]);
        assert_eq!(g.edge_count(&x, &y), g.edge_count(&y, &x));
    }

    #[test]
    fn family_neighborhood_examples() {
        let f = triangle_plus_edge_family();
        let x = ColoredVertexSet::from_pairs(3, 2, &[(0, 0)]).unwrap();
        assert_eq!(f.family_neighborhood(&x).to_vec(), vec![1, 2]);
        // Vertex 2 is isolated in G_2, so adding (2, color 2) changes nothing.
        let x2 = ColoredVertexSet::from_pairs(3, 2, &[(0, 0), (2, 1)]).unwrap();
        assert_eq!(f.family_neighborhood(&x2).to_vec(), vec![1, 2]);
        let empty = ColoredVertexSet::new(3, 2);
        assert!(f.family_neighborhood(&empty).is_empty());
    }

    #[test]
    fn external_neighborhood_examples() {
        let f = GraphFamily::single(Graph::complete(3));
        let y = BitSet::full(3);
        let x = ColoredVertexSet::from_pairs(3, 1, &[(0, 0)]).unwrap();
        assert_eq!(f.external_family_neighborhood(&x, &y).to_vec(), vec![1, 2]);
        let x2 = ColoredVertexSet::from_pairs(3, 1, &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(f.external_family_neighborhood(&x2, &y).to_vec(), vec![2]);
        let empty = ColoredVertexSet::new(3, 1);
        assert!(f.external_family_neighborhood(&empty, &y).is_empty());
    }

    #[test]
    fn neighborhood_union_rule_and_monotonicity() {
        let f = triangle_plus_edge_family();
        let x = ColoredVertexSet::from_pairs(3, 2, &[(0, 0), (1, 1)]).unwrap();
        let y = ColoredVertexSet::from_pairs(3, 2, &[(2, 0)]).unwrap();
        let mut xy = x.clone();
        for (v, c) in y.iter() {
            xy.insert(v, c);
        }
        let mut union = f.family_neighborhood(&x);
        union.union_with(&f.family_neighborhood(&y));
        assert_eq!(f.family_neighborhood(&xy), union);
        assert!(f.family_neighborhood(&x).is_subset(&f.family_neighborhood(&xy)));
    }

    #[test]
    fn auxiliary_consistency() {
        let f = triangle_plus_edge_family();
        let aux = f.build_auxiliary();
        assert_eq!(aux.left_len(), 6);
        assert_eq!(aux.right_len(), 3);
        for c in 0..f.t() {
            for u in 0..f.n() {
                let left = aux.left_id(u, c);
                assert_eq!(aux.left_pair(left), (u, c));
                assert_eq!(aux.left_degree(left), f.graph(c).degree(u));
                for v in 0..f.n() {
                    assert_eq!(aux.has_edge(left, v), f.graph(c).has_edge(u, v));
                }
            }
        }
        // (2, color 2) is isolated on the left.
        assert_eq!(aux.left_degree(aux.left_id(2, 1)), 0);
        let expected_total: usize = f.graphs().iter().map(|g| 2 * g.num_edges()).sum();
        assert_eq!(aux.edge_total(), expected_total);
    }

    #[test]
    fn restrict_family_examples() {
        let f = GraphFamily::single(Graph::complete(4));
        let keep = BitSet::from_indices(4, [0, 2, 3]);
        let (sub, map) = f.restrict(&keep).unwrap();
        assert_eq!(sub.n(), 3);
        assert_eq!(sub.graph(0).num_edges(), 3); // K_3
        assert_eq!(map.to_new(2), Some(1));
        assert_eq!(map.to_new(1), None);
        assert_eq!(map.to_old(2), 3);

        let all = BitSet::full(4);
        let (same, ident) = f.restrict(&all).unwrap();
        assert_eq!(same, f);
        assert_eq!(ident, Relabeling::identity(4));

        assert_eq!(
            f.restrict(&BitSet::new(4)).unwrap_err(),
            GraphError::EmptyRestriction
        );
    }

    #[test]
    fn colored_vertex_set_basics() {
        let mut x = ColoredVertexSet::new(5, 2);
        assert!(x.insert(3, 1));
        assert!(!x.insert(3, 1));
        assert!(x.insert(3, 0));
        assert!(x.insert(0, 1));
        assert_eq!(x.len(), 3);
        assert_eq!(x.to_sorted_pairs(), vec![(0, 1), (3, 0), (3, 1)]);
        assert_eq!(x.projection().to_vec(), vec![0, 3]);
        assert!(x.remove(3, 0));
        assert_eq!(x.len(), 2);
        assert!(ColoredVertexSet::from_pairs(5, 2, &[(0, 2)]).is_err());
        assert!(ColoredVertexSet::from_pairs(5, 2, &[(5, 0)]).is_err());
    }

    #[test]
    fn family_construction_errors() {
        assert_eq!(
            GraphFamily::new(vec![]).unwrap_err(),
            GraphError::EmptyFamily
        );
        let err = GraphFamily::new(vec![Graph::empty(3), Graph::empty(4)]).unwrap_err();
        assert_eq!(
            err,
            GraphError::MemberSizeMismatch {
                index: 1,
                found: 4,
                expected: 3
            }
        );
    }
}
