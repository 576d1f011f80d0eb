//! Brute-force oracles and seeded instance generators shared by the
//! integration suites.
//!
//! Everything here recomputes values straight from the definitions, in plain
//! set arithmetic, sharing none of the library's incremental bookkeeping —
//! the suites compare the two sides.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rollback::engine::{Embedding, EngineConfig, GoodnessParams, VerifyMode};
use rollback::graph::{Graph, GraphFamily};
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------------------
// Oracle view of an embedding
// ---------------------------------------------------------------------------

/// A frozen, explicit description of an embedding: target slots, their host
/// images, root flags, parent links, and the colored target edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleState {
    /// target slot → host vertex.
    pub map: BTreeMap<usize, usize>,
    /// slots labeled as roots.
    pub roots: BTreeSet<usize>,
    /// non-root slot → (parent slot, edge color).
    pub parent: BTreeMap<usize, (usize, usize)>,
    /// colored target edges (u, v, color).
    pub edges: Vec<(usize, usize, usize)>,
}

impl OracleState {
    /// Snapshots a live embedding through its public read API.
    pub fn read_back(emb: &Embedding) -> Self {
        let target = emb.target();
        let mut st = OracleState {
            map: BTreeMap::new(),
            roots: BTreeSet::new(),
            parent: BTreeMap::new(),
            edges: target.edges(),
        };
        for v in target.alive_ids() {
            st.map.insert(v, emb.map_of(v).expect("alive slots are mapped"));
            if target.is_root(v) {
                st.roots.insert(v);
            } else {
                st.parent
                    .insert(v, target.parent(v).expect("non-roots have parents"));
            }
        }
        st
    }

    /// The embedding extended by one new leaf on slot `new_slot`, attached to
    /// `w` by a color-`r` edge and mapped to host vertex `a`.
    pub fn extended(&self, w: usize, r: usize, a: usize, new_slot: usize) -> Self {
        assert!(!self.map.contains_key(&new_slot), "slot must be fresh");
        assert!(
            !self.map.values().any(|&h| h == a),
            "host vertex must be fresh"
        );
        let mut next = self.clone();
        next.map.insert(new_slot, a);
        next.parent.insert(new_slot, (w, r));
        next.edges.push((w, new_slot, r));
        next
    }

    /// Degree of slot `v` in color `c`, counted from the edge list.
    pub fn deg_color(&self, v: usize, c: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b, ec)| ec == c && (a == v || b == v))
            .count()
    }

    /// The parent-pair set: `(host image of h, color to parent)` over
    /// non-root slots.
    pub fn parent_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.parent
            .iter()
            .map(|(&h, &(_, c))| (self.map[&h], c))
            .collect()
    }

    /// Slots whose removal the definition allows: non-roots of degree one,
    /// and roots of degree zero.
    pub fn removable(&self) -> Vec<usize> {
        self.map
            .keys()
            .copied()
            .filter(|&v| {
                let deg: usize = self
                    .edges
                    .iter()
                    .filter(|&&(a, b, _)| a == v || b == v)
                    .count();
                if self.roots.contains(&v) {
                    deg == 0
                } else {
                    deg == 1
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Residual oracle
// ---------------------------------------------------------------------------

/// Union of open neighborhoods of the pairs in `x`, as a plain vertex set.
pub fn oracle_gamma(f: &GraphFamily, x: &[(usize, usize)]) -> BTreeSet<usize> {
    let mut gamma = BTreeSet::new();
    for &(v, c) in x {
        for w in 0..f.n() {
            if f.graph(c).has_edge(v, w) {
                gamma.insert(w);
            }
        }
    }
    gamma
}

/// The residual of the pair set `x` against the embedding `st`, computed
/// term by term from the definition:
///
/// * the vertices of the joint neighborhood of `x` not yet used as images,
/// * minus the degree deficiencies `D − deg_color(preimage)` of the pairs
///   (the full budget `D` when the host vertex has no preimage),
/// * minus the number of pairs that are parent pairs of the embedding.
pub fn oracle_residual(
    f: &GraphFamily,
    st: &OracleState,
    d_budget: usize,
    x: &[(usize, usize)],
) -> i64 {
    let x: BTreeSet<(usize, usize)> = x.iter().copied().collect();
    let image: BTreeSet<usize> = st.map.values().copied().collect();
    let inverse: BTreeMap<usize, usize> = st.map.iter().map(|(&t, &h)| (h, t)).collect();

    let uncovered = oracle_gamma(f, &x.iter().copied().collect::<Vec<_>>())
        .iter()
        .filter(|v| !image.contains(v))
        .count() as i64;

    let mut deficiency = 0i64;
    for &(v, c) in &x {
        deficiency += match inverse.get(&v) {
            Some(&slot) => d_budget as i64 - st.deg_color(slot, c) as i64,
            None => d_budget as i64,
        };
    }

    let ppairs = st.parent_pairs();
    let pmatch = x.iter().filter(|pair| ppairs.contains(pair)).count() as i64;

    uncovered - deficiency - pmatch
}

/// The predicted residual change for extending onto host vertex `a` through
/// the image `w_host` by color `r`: one if `(w_host, r)` lies in `x`, minus
/// one if `a` lies in the joint neighborhood of `x`.
pub fn oracle_indicator_delta(
    f: &GraphFamily,
    w_host: usize,
    r: usize,
    a: usize,
    x: &[(usize, usize)],
) -> i64 {
    let xset: BTreeSet<(usize, usize)> = x.iter().copied().collect();
    let hit_parent = xset.contains(&(w_host, r)) as i64;
    let hit_gamma = x.iter().any(|&(v, c)| f.graph(c).has_edge(v, a)) as i64;
    hit_parent - hit_gamma
}

/// Exhaustive goodness from the definition: every pair set of size at most
/// `bound` has nonnegative residual. Returns a violating set if any.
pub fn oracle_verify_good(
    f: &GraphFamily,
    st: &OracleState,
    d_budget: usize,
    bound: usize,
) -> Option<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..f.n())
        .flat_map(|v| (0..f.t()).map(move |c| (v, c)))
        .collect();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    fn visit(
        f: &GraphFamily,
        st: &OracleState,
        d: usize,
        bound: usize,
        pairs: &[(usize, usize)],
        from: usize,
        stack: &mut Vec<(usize, usize)>,
    ) -> Option<Vec<(usize, usize)>> {
        if !stack.is_empty() && oracle_residual(f, st, d, stack) < 0 {
            return Some(stack.clone());
        }
        if stack.len() == bound {
            return None;
        }
        for i in from..pairs.len() {
            stack.push(pairs[i]);
            if let Some(w) = visit(f, st, d, bound, pairs, i + 1, stack) {
                return Some(w);
            }
            stack.pop();
        }
        None
    }
    visit(f, st, d_budget, bound, &pairs, 0, &mut stack)
}

// ---------------------------------------------------------------------------
// Joinedness oracle
// ---------------------------------------------------------------------------

/// Whether every set of exactly `s` (vertex, color) pairs leaves fewer than
/// `s` vertices outside its joint neighborhood. Plain recursive combination
/// scan; no pruning, no early witness ordering.
pub fn oracle_is_joined(f: &GraphFamily, s: usize) -> bool {
    let pairs: Vec<(usize, usize)> = (0..f.n())
        .flat_map(|v| (0..f.t()).map(move |c| (v, c)))
        .collect();
    if s == 0 || s > pairs.len() {
        return false;
    }
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    fn visit(
        f: &GraphFamily,
        pairs: &[(usize, usize)],
        s: usize,
        from: usize,
        chosen: &mut Vec<(usize, usize)>,
    ) -> bool {
        if chosen.len() == s {
            let gamma = oracle_gamma(f, chosen);
            return f.n() - gamma.len() < s;
        }
        for i in from..pairs.len() {
            chosen.push(pairs[i]);
            let ok = visit(f, pairs, s, i + 1, chosen);
            chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    visit(f, &pairs, s, 0, &mut chosen)
}

/// Smallest scale at which the family is joined, up to `cap` inclusive.
pub fn oracle_min_joined(f: &GraphFamily, cap: usize) -> Option<usize> {
    (1..=cap).find(|&s| oracle_is_joined(f, s))
}

// ---------------------------------------------------------------------------
// Jumbledness oracle
// ---------------------------------------------------------------------------

/// The exact worst deviation `|e(X, Y) − p·|X|·|Y|| / sqrt(|X|·|Y|)` over all
/// nonempty `X ⊆ V×[t]`, `Y ⊆ V`, where `e(X, Y)` counts the bipartite
/// adjacencies between pairs and vertices. Plain double subset loop; only
/// usable for small families.
pub fn oracle_beta(f: &GraphFamily, p: f64) -> f64 {
    let n = f.n();
    let nt = f.n() * f.t();
    assert!(nt < 24 && n < 24, "oracle beta is for tiny families only");
    let pairs: Vec<(usize, usize)> = (0..nt).map(|id| f.pair_from_id(id)).collect();
    let mut worst: f64 = 0.0;
    for y_mask in 1u32..(1u32 << n) {
        let y: Vec<usize> = (0..n).filter(|&v| y_mask & (1 << v) != 0).collect();
        // Bipartite degree of each pair into Y.
        let h: Vec<i64> = pairs
            .iter()
            .map(|&(v, c)| y.iter().filter(|&&w| f.graph(c).has_edge(v, w)).count() as i64)
            .collect();
        for x_mask in 1u32..(1u32 << nt) {
            let mut e = 0i64;
            let mut cx = 0usize;
            for (id, hv) in h.iter().enumerate() {
                if x_mask & (1 << id) != 0 {
                    e += hv;
                    cx += 1;
                }
            }
            let dev = (e as f64 - p * (cx as f64) * (y.len() as f64)).abs()
                / ((cx as f64) * (y.len() as f64)).sqrt();
            worst = worst.max(dev);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Finite-field sphere oracle
// ---------------------------------------------------------------------------

/// Decodes the little-endian base-`q` digits of `id`.
pub fn oracle_point(q: u64, d: usize, mut id: u64) -> Vec<u64> {
    let mut coords = Vec::with_capacity(d);
    for _ in 0..d {
        coords.push(id % q);
        id /= q;
    }
    coords
}

/// The squared distance between two decoded points, mod q.
pub fn oracle_norm(q: u64, x: &[u64], y: &[u64]) -> u64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let diff = (a + q - b) % q;
            diff * diff % q
        })
        .sum::<u64>()
        % q
}

/// Counts, by full enumeration, the points at distance exactly `r` from the
/// point with id `center`.
pub fn oracle_sphere_size(q: u64, d: usize, r: u64, center: u64) -> usize {
    let n = q.pow(d as u32);
    let c = oracle_point(q, d, center);
    (0..n)
        .filter(|&id| oracle_norm(q, &c, &oracle_point(q, d, id)) == r)
        .count()
}

// ---------------------------------------------------------------------------
// Seeded instance generators
// ---------------------------------------------------------------------------

/// A random host family: `t` independent draws of G(n, p).
pub fn random_family(rng: &mut StdRng, n: usize, t: usize, p: f64) -> GraphFamily {
    let graphs: Vec<Graph> = (0..t).map(|_| Graph::random(n, p, rng.gen())).collect();
    GraphFamily::new(graphs).expect("same order by construction")
}

/// Grows a random embedding inside `f`: a couple of roots, then random
/// best-effort leaf extensions and occasional extra edges, stopping at
/// `max_vertices` or when the engine runs out of moves. Returns the live
/// embedding, or nothing when not even the roots could be placed.
pub fn random_embedding<'h>(
    f: &'h GraphFamily,
    rng: &mut StdRng,
    max_vertices: usize,
    s: usize,
    d_budget: usize,
) -> Option<Embedding<'h>> {
    let cfg = EngineConfig {
        params: GoodnessParams::new(s, d_budget).expect("valid parameters"),
        mode: VerifyMode::BestEffort,
        shuffle_seed: Some(rng.gen()),
        ..EngineConfig::exact(s, d_budget).expect("valid parameters")
    };
    let mut emb = Embedding::new(f);
    let root_count = 1 + rng.gen_range(0..2usize.min(max_vertices));
    let mut placed = 0;
    for _ in 0..root_count {
        let v = rng.gen_range(0..f.n());
        if emb.inverse_of(v).is_none() && emb.place_root(None, v, &cfg).is_ok() {
            placed += 1;
        }
    }
    if placed == 0 {
        return None;
    }
    for _ in 0..max_vertices * 4 {
        let alive = emb.target().alive_ids();
        if alive.len() >= max_vertices {
            break;
        }
        let w = alive[rng.gen_range(0..alive.len())];
        let r = rng.gen_range(0..f.t());
        if emb.target().deg_color(w, r) >= d_budget {
            continue;
        }
        let _ = emb.extend_vertex(w, r, None, &cfg);
    }
    // Occasionally add an edge between two embedded slots whose images are
    // adjacent, turning interior structure into roots.
    for _ in 0..2 {
        let alive = emb.target().alive_ids();
        if alive.len() < 2 || !rng.gen_bool(0.5) {
            continue;
        }
        let a = alive[rng.gen_range(0..alive.len())];
        let b = alive[rng.gen_range(0..alive.len())];
        let r = rng.gen_range(0..f.t());
        if a == b || emb.target().has_edge(a, b) {
            continue;
        }
        if emb.target().deg_color(a, r) >= d_budget || emb.target().deg_color(b, r) >= d_budget {
            continue;
        }
        let (ha, hb) = (emb.map_of(a).unwrap(), emb.map_of(b).unwrap());
        if f.graph(r).has_edge(ha, hb) {
            let _ = emb.add_edge(a, b, r, &cfg);
        }
    }
    Some(emb)
}

/// A uniformly random pair set of size at most `max_size` (possibly empty).
pub fn random_pair_set(
    rng: &mut StdRng,
    n: usize,
    t: usize,
    max_size: usize,
) -> Vec<(usize, usize)> {
    let size = rng.gen_range(0..=max_size.min(n * t));
    let mut set = BTreeSet::new();
    while set.len() < size {
        set.insert((rng.gen_range(0..n), rng.gen_range(0..t)));
    }
    set.into_iter().collect()
}

/// A random legal leaf extension of the live embedding: an embedded slot
/// with spare degree in some color, and an unused host neighbor of its image
/// in that color. Returns `(slot, color, host_vertex)`.
pub fn random_legal_extension(
    f: &GraphFamily,
    emb: &Embedding,
    rng: &mut StdRng,
    d_budget: usize,
) -> Option<(usize, usize, usize)> {
    let mut options: Vec<(usize, usize, usize)> = Vec::new();
    for w in emb.target().alive_ids() {
        let hw = emb.map_of(w).unwrap();
        for r in 0..f.t() {
            if emb.target().deg_color(w, r) >= d_budget {
                continue;
            }
            for a in 0..f.n() {
                if f.graph(r).has_edge(hw, a) && emb.inverse_of(a).is_none() {
                    options.push((w, r, a));
                }
            }
        }
    }
    if options.is_empty() {
        None
    } else {
        Some(options[rng.gen_range(0..options.len())])
    }
}

/// A deterministic generator for the numbered instance suites.
pub fn seeded_rng(suite: u64, index: u64) -> StdRng {
    StdRng::seed_from_u64(suite.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index)
}
