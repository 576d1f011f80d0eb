//! The embedding engine: maintains `(s,D)`-good partial embeddings of
//! edge-colored rooted targets into graph families, and implements the
//! roll-back operations — residual evaluation, goodness verification,
//! vertex/forest extension, edge connection with root promotion, leaf
//! removal, and scaffolded path connection.
//!
//! The residual of a colored host set `X` under an embedding `φ` is
//!
//! ```text
//! R(X, φ) = |Γ(X) ∖ φ(H)| − Σ_{(v,i) ∈ X} (D − deg_{H_i}(φ⁻¹(v))) − |P_φ(H) ∩ X|
//! ```
//!
//! with `deg(∅) = 0` for host vertices outside the image, and `P_φ(H)` the
//! set of pairs `(φ(h), color of h's parent edge)` over non-root target
//! vertices `h`. The embedding is `(s,D)`-good when `R(X, φ) ≥ 0` for every
//! `X` with `|X| ≤ s`; the engine maintains `(2s,D)`-goodness so that its
//! verification bound is `2s` throughout.

use crate::bitset::BitSet;
use crate::graph::{ColoredVertexSet, GraphFamily};
use crate::target::{
    tree_height, EdgeColoredRootedGraph, PathConstructibleDecomposition, PathPattern,
    TargetError,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub use crate::certify::Verdict;

/// Errors from engine operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("host vertex {v} out of range for {n} vertices")]
    HostVertexOutOfRange { v: usize, n: usize },
    #[error("target vertex {v} is not part of the live target")]
    TargetVertexUnknown { v: usize },
    #[error("target slot {slot} is unavailable (occupied or out of range)")]
    SlotUnavailable { slot: usize },
    #[error("host vertex {v} is already the image of a target vertex")]
    HostVertexAlreadyUsed { v: usize },
    #[error("target color space ({target_t}) exceeds the host's ({host_t})")]
    ColorSpaceMismatch { target_t: usize, host_t: usize },
    #[error("vertex {w} already has degree {d} in color {color}; extensions need deg < D")]
    DegreeFull { w: usize, color: usize, d: usize },
    #[error("illegal extension: {reason}")]
    IllegalExtension { reason: String },
    #[error("no extension candidates: every color-{color} host neighbor of the image of {w} is used or excluded (the embedding was not good, or the hypotheses are violated)")]
    CandidatesEmpty { w: usize, color: usize },
    #[error("no extension candidate for {w} in color {color} passed {mode:?} verification; caller may backtrack")]
    NoCandidatePasses { w: usize, color: usize, mode: VerifyMode },
    #[error("internal inconsistency in {context}: exact-mode candidate search exhausted under supposedly satisfied hypotheses (bug or uncertified host). state dump:\n{dump}")]
    InternalInconsistency { context: String, dump: String },
    #[error("embedding is not good: witness X = {witness:?} has negative residual")]
    NotGood { witness: Vec<(usize, usize)> },
    #[error("exact enumeration needs {needed} sets, above the cap {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("images of {h} and {h2} are not adjacent in color {color}")]
    ImagesNotAdjacent { h: usize, h2: usize, color: usize },
    #[error("target vertices {h} and {h2} are already adjacent")]
    TargetAlreadyAdjacent { h: usize, h2: usize },
    #[error("cannot remove target vertex {v}: {reason}")]
    RemovalIllegal { v: usize, reason: String },
    #[error("path pattern has {len} edges but the connection method needs at least {required}")]
    PatternTooShort { len: usize, required: usize },
    #[error("no crossing edge in color {color} between host sets {a_side:?} and {b_side:?}: the host family is not s-joined enough for this connection")]
    NoCrossingEdge {
        color: usize,
        a_side: Vec<usize>,
        b_side: Vec<usize>,
    },
    #[error("size hypothesis violated in {context}: working target would have {have} vertices, allowed at most {allowed}")]
    SizeHypothesisViolated {
        have: usize,
        allowed: i64,
        context: &'static str,
    },
    #[error("decomposition invalid at clause {clause}: {detail}")]
    DecompositionInvalid { clause: String, detail: String },
    #[error("no anchor supplied for base component representative {vertex}")]
    AnchorMissing { vertex: usize },
    #[error("base subgraph is not a forest: {detail}")]
    BaseNotForest { detail: String },
    #[error("anchored tree embedding needs exactly one root, found {roots}")]
    TreeNotSinglyRooted { roots: usize },
    #[error("expected {expected} interior slots, got {got}")]
    InteriorSlotMismatch { expected: usize, got: usize },
}

/// The `(s, D)` of goodness: residuals are checked on sets of size up to
/// `2s`, and `D` is the degree budget per color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodnessParams {
    pub s: usize,
    pub d: usize,
}

impl GoodnessParams {
    /// Validates `s ≥ 1` and `D ≥ 1` (path connection additionally needs
    /// `D ≥ 3`, checked there).
    pub fn new(s: usize, d: usize) -> Result<Self, EngineError> {
        if s == 0 || d == 0 {
            return Err(EngineError::IllegalExtension {
                reason: format!("goodness parameters need s >= 1 and D >= 1, got s={s}, D={d}"),
            });
        }
        Ok(GoodnessParams { s, d })
    }
}

/// How goodness is assured. `Exact` enumerates every set up to the bound and
/// is a proof; `Incremental` maintains a cache of near-tight sets plus
/// singleton/pair rescans (evidence); `BestEffort` runs a greedy violator
/// search (evidence). Reports always label their mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    Exact,
    Incremental,
    BestEffort,
}

/// Whether path connection insists on the guaranteed minimum length
/// (`Strict`) or clamps the scaffolding-tree height to fit a shorter path
/// (`Clamped`, degrading the crossing guarantee; failures stay honest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectPolicy {
    Strict,
    Clamped,
}

/// Whether the size hypotheses (`|V| ≤ n − 2sD − 3s` for extensions,
/// `≤ n − 4sD − 5s` for connections, `≤ n − 6sD` for path-constructible
/// targets) abort on breach or are recorded as advisories. The hypotheses
/// are tied to a certified `s`; with an uncertified or assumed `s` the
/// advisory form keeps runs honest without refusing them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisEnforcement {
    Strict,
    Advisory,
}

/// Resource caps for engine verification. The library never reads the
/// environment; the CLI maps variable overrides onto this struct.
#[derive(Debug, Clone, Copy)]
pub struct EngineCaps {
    /// Max number of sets an exact enumeration may visit.
    pub exact_sets: u128,
}

impl Default for EngineCaps {
    fn default() -> Self {
        EngineCaps {
            exact_sets: 100_000_000,
        }
    }
}

/// Everything an operation needs to know about how to behave.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub params: GoodnessParams,
    pub mode: VerifyMode,
    pub connect_policy: ConnectPolicy,
    pub enforcement: HypothesisEnforcement,
    /// When set, extension candidates are shuffled with this seed instead of
    /// scanned in ascending host order.
    pub shuffle_seed: Option<u64>,
    pub caps: EngineCaps,
}

impl EngineConfig {
    /// Exact verification, strict connection lengths, advisory size checks
    /// (the hypotheses bind only once `s` is certified — pipelines flip this
    /// to `Strict` when it is).
    pub fn exact(s: usize, d: usize) -> Result<Self, EngineError> {
        Ok(EngineConfig {
            params: GoodnessParams::new(s, d)?,
            mode: VerifyMode::Exact,
            connect_policy: ConnectPolicy::Strict,
            enforcement: HypothesisEnforcement::Advisory,
            shuffle_seed: None,
            caps: EngineCaps::default(),
        })
    }

    pub fn with_mode(mut self, mode: VerifyMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_enforcement(mut self, enforcement: HypothesisEnforcement) -> Self {
        self.enforcement = enforcement;
        self
    }

    pub fn with_connect_policy(mut self, policy: ConnectPolicy) -> Self {
        self.connect_policy = policy;
        self
    }
}

/// Verdict of a goodness check, labeled with the mode that produced it.
/// `fail` always carries a witness that re-evaluates to a negative residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub verdict: Verdict,
    pub mode: VerifyMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<(usize, usize)>>,
}

impl GoodnessReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// One replayable engine event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    PlaceRoot {
        target: usize,
        host: usize,
    },
    Extend {
        target: usize,
        parent: usize,
        color: usize,
        host: usize,
    },
    AddEdge {
        a: usize,
        b: usize,
        color: usize,
        promoted: Vec<usize>,
    },
    RemoveLeaf {
        target: usize,
        host: usize,
    },
    Rename {
        from: usize,
        to: usize,
    },
}

// ---------------------------------------------------------------------------
// WorkTarget
// ---------------------------------------------------------------------------

/// The live, mutable target: slots may be reserved ahead of time (so a
/// requested target's vertex ids survive into the final embedding),
/// activated, deactivated by roll-back, and renamed from scaffolding ids
/// into reserved ones.
#[derive(Debug, Clone)]
pub struct WorkTarget {
    t: usize,
    /// adj[v][c] = sorted color-c neighbor list of v.
    adj: Vec<Vec<Vec<usize>>>,
    alive: Vec<bool>,
    root: Vec<bool>,
    parent: Vec<Option<(usize, usize)>>,
    alive_count: usize,
}

impl WorkTarget {
    fn with_reserved(t: usize, reserved: usize) -> Self {
        WorkTarget {
            t,
            adj: vec![vec![Vec::new(); t]; reserved],
            alive: vec![false; reserved],
            root: vec![false; reserved],
            parent: vec![None; reserved],
            alive_count: 0,
        }
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.t
    }

    /// Total slot count (alive or not).
    #[inline]
    pub fn slots(&self) -> usize {
        self.alive.len()
    }

    #[inline]
    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    #[inline]
    pub fn is_alive(&self, v: usize) -> bool {
        v < self.alive.len() && self.alive[v]
    }

    #[inline]
    pub fn is_root(&self, v: usize) -> bool {
        self.root[v]
    }

    #[inline]
    pub fn parent(&self, v: usize) -> Option<(usize, usize)> {
        self.parent[v]
    }

    #[inline]
    pub fn deg_color(&self, v: usize, c: usize) -> usize {
        self.adj[v][c].len()
    }

    pub fn total_degree(&self, v: usize) -> usize {
        self.adj[v].iter().map(|l| l.len()).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].iter().any(|l| l.binary_search(&v).is_ok())
    }

    pub fn has_edge_color(&self, u: usize, v: usize, c: usize) -> bool {
        self.adj[u][c].binary_search(&v).is_ok()
    }

    pub fn alive_ids(&self) -> Vec<usize> {
        (0..self.alive.len()).filter(|&v| self.alive[v]).collect()
    }

    /// Live edges as `(u, v, color)`, `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.adj.len() {
            if !self.alive[u] {
                continue;
            }
            for (c, list) in self.adj[u].iter().enumerate() {
                for &v in list {
                    if v > u {
                        out.push((u, v, c));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn color_neighbors(&self, v: usize, c: usize) -> &[usize] {
        &self.adj[v][c]
    }

    fn activate(&mut self, slot: Option<usize>) -> Result<usize, EngineError> {
        let id = match slot {
            Some(s) => {
                if s >= self.alive.len() || self.alive[s] {
                    return Err(EngineError::SlotUnavailable { slot: s });
                }
                s
            }
            None => {
                self.adj.push(vec![Vec::new(); self.t]);
                self.alive.push(false);
                self.root.push(false);
                self.parent.push(None);
                self.alive.len() - 1
            }
        };
        self.alive[id] = true;
        self.root[id] = false;
        self.parent[id] = None;
        self.alive_count += 1;
        Ok(id)
    }

    fn deactivate(&mut self, v: usize) {
        debug_assert!(self.alive[v] && self.total_degree(v) == 0);
        self.alive[v] = false;
        self.root[v] = false;
        self.parent[v] = None;
        self.alive_count -= 1;
    }

    fn add_edge_raw(&mut self, u: usize, v: usize, c: usize) {
        debug_assert!(self.alive[u] && self.alive[v] && u != v && !self.has_edge(u, v));
        let pos = self.adj[u][c].binary_search(&v).unwrap_err();
        self.adj[u][c].insert(pos, v);
        let pos = self.adj[v][c].binary_search(&u).unwrap_err();
        self.adj[v][c].insert(pos, u);
    }

    fn remove_edge_raw(&mut self, u: usize, v: usize, c: usize) {
        let pos = self.adj[u][c].binary_search(&v).expect("edge present");
        self.adj[u][c].remove(pos);
        let pos = self.adj[v][c].binary_search(&u).expect("edge present");
        self.adj[v][c].remove(pos);
    }

    fn set_root(&mut self, v: usize) {
        self.root[v] = true;
        self.parent[v] = None;
    }

    fn set_parent(&mut self, v: usize, p: usize, c: usize) {
        debug_assert!(!self.root[v]);
        self.parent[v] = Some((p, c));
    }

    fn rename(&mut self, from: usize, to: usize) -> Result<(), EngineError> {
        if !self.is_alive(from) {
            return Err(EngineError::TargetVertexUnknown { v: from });
        }
        if to >= self.alive.len() || self.alive[to] || self.total_degree(to) != 0 {
            return Err(EngineError::SlotUnavailable { slot: to });
        }
        // Move adjacency and fix back-references.
        let lists = std::mem::take(&mut self.adj[from]);
        for (c, list) in lists.iter().enumerate() {
            for &u in list {
                let pos = self.adj[u][c].binary_search(&from).expect("back edge");
                self.adj[u][c].remove(pos);
                let pos = self.adj[u][c].binary_search(&to).unwrap_err();
                self.adj[u][c].insert(pos, to);
            }
        }
        self.adj[to] = lists;
        self.adj[from] = vec![Vec::new(); self.t];
        // Fix parent pointers of children of `from`.
        for v in 0..self.parent.len() {
            if let Some((p, c)) = self.parent[v] {
                if p == from {
                    self.parent[v] = Some((to, c));
                }
            }
        }
        self.alive[to] = true;
        self.alive[from] = false;
        self.root[to] = self.root[from];
        self.root[from] = false;
        self.parent[to] = self.parent[from];
        self.parent[from] = None;
        Ok(())
    }

    /// The live-state invariant: within every connected component of the
    /// live target, the root set induces a connected subgraph. Holds
    /// inductively for engine-built states because edge insertion promotes
    /// both endpoints' ancestor chains.
    pub fn roots_connected(&self) -> bool {
        let m = self.alive.len();
        let mut comp = vec![usize::MAX; m];
        let mut next = 0;
        for start in 0..m {
            if !self.alive[start] || comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = vec![start];
            while let Some(v) = queue.pop() {
                for list in &self.adj[v] {
                    for &w in list {
                        if comp[w] == usize::MAX {
                            comp[w] = next;
                            queue.push(w);
                        }
                    }
                }
            }
            next += 1;
        }
        for c in 0..next {
            let roots: Vec<usize> = (0..m)
                .filter(|&v| self.alive[v] && self.root[v] && comp[v] == c)
                .collect();
            if roots.len() <= 1 {
                continue;
            }
            let mut reached = vec![false; m];
            reached[roots[0]] = true;
            let mut queue = vec![roots[0]];
            let mut count = 1;
            while let Some(v) = queue.pop() {
                for list in &self.adj[v] {
                    for &w in list {
                        if self.root[w] && !reached[w] {
                            reached[w] = true;
                            count += 1;
                            queue.push(w);
                        }
                    }
                }
            }
            if count != roots.len() {
                return false;
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

/// A live embedding of a working target into a host family, with the cached
/// parent-pair set `P_φ(H)`, the step log, and (in incremental mode) the
/// near-tight residual cache.
///
/// Cloning snapshots the full state (the host stays shared), which is how
/// search code explores alternatives without undo bookkeeping.
#[derive(Clone)]
pub struct Embedding<'h> {
    host: &'h GraphFamily,
    target: WorkTarget,
    /// target slot → host vertex.
    map: Vec<Option<usize>>,
    /// host vertex → target slot.
    inv: Vec<Option<usize>>,
    image: BitSet,
    ppairs: ColoredVertexSet,
    /// Host vertices candidate searches must skip (beyond the image).
    excluded: BitSet,
    steps: Vec<Step>,
    /// Incremental-mode cache: sorted (vertex, color) pair list → maintained
    /// residual. Populated with every set observed at `R ≤ 2`.
    cache: BTreeMap<Vec<(usize, usize)>, i64>,
    advisories: Vec<String>,
}

impl std::fmt::Debug for Embedding<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedding")
            .field("host_n", &self.host.n())
            .field("host_t", &self.host.t())
            .field("alive", &self.target.alive_count())
            .field("steps", &self.steps.len())
            .finish()
    }
}

impl<'h> Embedding<'h> {
    pub fn new(host: &'h GraphFamily) -> Self {
        Self::with_reserved(host, 0)
    }

    /// Starts an empty embedding with target slots `0..reserved` held for a
    /// requested target's vertex ids; engine-created scaffolding always gets
    /// fresh ids at or beyond `reserved`.
    pub fn with_reserved(host: &'h GraphFamily, reserved: usize) -> Self {
        Embedding {
            host,
            target: WorkTarget::with_reserved(host.t(), reserved),
            map: vec![None; reserved],
            inv: vec![None; host.n()],
            image: BitSet::new(host.n()),
            ppairs: ColoredVertexSet::new(host.n(), host.t()),
            excluded: BitSet::new(host.n()),
            steps: Vec::new(),
            cache: BTreeMap::new(),
            advisories: Vec::new(),
        }
    }

    #[inline]
    pub fn host(&self) -> &'h GraphFamily {
        self.host
    }

    #[inline]
    pub fn target(&self) -> &WorkTarget {
        &self.target
    }

    #[inline]
    pub fn image(&self) -> &BitSet {
        &self.image
    }

    #[inline]
    pub fn parent_pairs(&self) -> &ColoredVertexSet {
        &self.ppairs
    }

    #[inline]
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    #[inline]
    pub fn advisories(&self) -> &[String] {
        &self.advisories
    }

    /// Records an advisory note from a caller-side hypothesis check, so the
    /// embedding carries the full honesty trail of the run that made it.
    pub fn push_advisory(&mut self, note: String) {
        self.advisories.push(note);
    }

    pub fn map_of(&self, v: usize) -> Option<usize> {
        self.map.get(v).copied().flatten()
    }

    pub fn inverse_of(&self, host_v: usize) -> Option<usize> {
        self.inv.get(host_v).copied().flatten()
    }

    /// Marks a host vertex as off-limits for future candidate searches
    /// (used for high-degree vertices whose budget is spent).
    pub fn exclude_host(&mut self, v: usize) {
        self.excluded.insert(v);
    }

    pub fn excluded(&self) -> &BitSet {
        &self.excluded
    }

    /// `D − deg_{H_c}(φ⁻¹(v))` as a (possibly negative) integer, with the
    /// degree of a host vertex outside the image taken as 0.
    #[inline]
    fn deficiency(&self, d: i64, host_v: usize, c: usize) -> i64 {
        match self.inv[host_v] {
            Some(tv) => d - self.target.deg_color(tv, c) as i64,
            None => d,
        }
    }

    /// Whether `a` lies in the family neighborhood of the pair list `x`.
    fn gamma_has(&self, x: &[(usize, usize)], a: usize) -> bool {
        x.iter().any(|&(v, c)| self.host.graph(c).has_edge(v, a))
    }

    /// The residual `R(X, φ)`.
    pub fn residual(&self, d: usize, x: &ColoredVertexSet) -> i64 {
        let gamma = self.host.family_neighborhood(x);
        let uncovered = gamma.difference_len(&self.image) as i64;
        let mut deficiency = 0i64;
        let mut pmatch = 0i64;
        for (v, c) in x.iter() {
            deficiency += self.deficiency(d as i64, v, c);
            if self.ppairs.contains(v, c) {
                pmatch += 1;
            }
        }
        uncovered - deficiency - pmatch
    }

    fn residual_pairs(&self, d: i64, pairs: &[(usize, usize)]) -> i64 {
        let mut gamma = BitSet::new(self.host.n());
        let mut deficiency = 0i64;
        let mut pmatch = 0i64;
        for &(v, c) in pairs {
            gamma.union_with(self.host.graph(c).neighbors(v));
            deficiency += self.deficiency(d, v, c);
            if self.ppairs.contains(v, c) {
                pmatch += 1;
            }
        }
        gamma.difference_len(&self.image) as i64 - deficiency - pmatch
    }

    /// The exact residual change `R(X, φ_a) − R(X, φ)` for the legal
    /// extension of `w` by color `r` onto host vertex `a`:
    /// `1[(φ(w), r) ∈ X] − 1[a ∈ Γ(X)]`.
    pub fn delta_residual(
        &self,
        w: usize,
        r: usize,
        a: usize,
        d: usize,
        x: &ColoredVertexSet,
    ) -> Result<i64, EngineError> {
        if !self.target.is_alive(w) {
            return Err(EngineError::TargetVertexUnknown { v: w });
        }
        let phi_w = self.map[w].ok_or(EngineError::TargetVertexUnknown { v: w })?;
        if a >= self.host.n() {
            return Err(EngineError::HostVertexOutOfRange {
                v: a,
                n: self.host.n(),
            });
        }
        if self.image.contains(a) {
            return Err(EngineError::IllegalExtension {
                reason: format!("host vertex {a} is already in the image"),
            });
        }
        if !self.host.graph(r).has_edge(phi_w, a) {
            return Err(EngineError::IllegalExtension {
                reason: format!("host vertex {a} is not a color-{r} neighbor of the image of {w}"),
            });
        }
        if self.target.deg_color(w, r) >= d {
            return Err(EngineError::DegreeFull { w, color: r, d });
        }
        let ind_pair = x.contains(phi_w, r) as i64;
        let mut ind_gamma = 0i64;
        for (v, c) in x.iter() {
            if self.host.graph(c).has_edge(v, a) {
                ind_gamma = 1;
                break;
            }
        }
        Ok(ind_pair - ind_gamma)
    }

    // -- exhaustive scanning ------------------------------------------------

    fn exact_set_count(&self, bound: usize) -> u128 {
        let nt = self.host.pair_count();
        let mut total: u128 = 0;
        let mut binom: u128 = 1;
        for j in 1..=bound.min(nt) {
            binom = binom.saturating_mul((nt - j + 1) as u128) / j as u128;
            total = total.saturating_add(binom);
        }
        total
    }

    /// Visits every nonempty colored host set `X` with `|X| ≤ bound` in
    /// lexicographic pair order (pair id = color·n + vertex), handing the
    /// visitor the pair-id stack, `Γ(X)`, and `R(X)`. The visitor returns
    /// `false` to abort the scan.
    fn scan_all<F>(&self, d: i64, bound: usize, visit: &mut F) -> bool
    where
        F: FnMut(&[usize], &BitSet, i64) -> bool,
    {
        if bound == 0 {
            return true;
        }
        let n = self.host.n();
        let mut gammas: Vec<BitSet> = (0..=bound).map(|_| BitSet::new(n)).collect();
        let mut stack: Vec<usize> = Vec::with_capacity(bound);
        self.scan_rec(d, bound, 0, 0, 0, &mut gammas, &mut stack, visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn scan_rec<F>(
        &self,
        d: i64,
        bound: usize,
        start: usize,
        defsum: i64,
        pcount: i64,
        gammas: &mut Vec<BitSet>,
        stack: &mut Vec<usize>,
        visit: &mut F,
    ) -> bool
    where
        F: FnMut(&[usize], &BitSet, i64) -> bool,
    {
        let depth = stack.len();
        let nt = self.host.pair_count();
        for pid in start..nt {
            let (v, c) = self.host.pair_from_id(pid);
            let def = self.deficiency(d, v, c);
            let pm = self.ppairs.contains(v, c) as i64;
            {
                let (lo, hi) = gammas.split_at_mut(depth + 1);
                hi[0].copy_from(&lo[depth]);
                hi[0].union_with(self.host.graph(c).neighbors(v));
            }
            let r = gammas[depth + 1].difference_len(&self.image) as i64
                - (defsum + def)
                - (pcount + pm);
            stack.push(pid);
            if !visit(stack, &gammas[depth + 1], r) {
                stack.pop();
                return false;
            }
            if depth + 1 < bound
                && !self.scan_rec(
                    d,
                    bound,
                    pid + 1,
                    defsum + def,
                    pcount + pm,
                    gammas,
                    stack,
                    visit,
                )
            {
                stack.pop();
                return false;
            }
            stack.pop();
        }
        true
    }

    fn pairs_of_stack(&self, stack: &[usize]) -> Vec<(usize, usize)> {
        stack.iter().map(|&id| self.host.pair_from_id(id)).collect()
    }

    /// Greedy violator search: restart from every singleton, repeatedly add
    /// the pair minimizing the residual (ties to the smallest pair id), up
    /// to `bound` elements; report the first negative residual found.
    fn greedy_search(&self, d: i64, bound: usize) -> Option<(Vec<(usize, usize)>, i64)> {
        if bound == 0 {
            return None;
        }
        let n = self.host.n();
        let nt = self.host.pair_count();
        let mut gamma = BitSet::new(n);
        let mut scratch = BitSet::new(n);
        for p0 in 0..nt {
            let (v0, c0) = self.host.pair_from_id(p0);
            gamma.copy_from(self.host.graph(c0).neighbors(v0));
            let mut members = vec![p0];
            let mut defsum = self.deficiency(d, v0, c0);
            let mut pcount = self.ppairs.contains(v0, c0) as i64;
            let mut r = gamma.difference_len(&self.image) as i64 - defsum - pcount;
            if r < 0 {
                return Some((self.pairs_of_stack(&members), r));
            }
            while members.len() < bound {
                let mut best: Option<(usize, i64)> = None;
                for q in 0..nt {
                    if members.contains(&q) {
                        continue;
                    }
                    let (v, c) = self.host.pair_from_id(q);
                    scratch.copy_from(&gamma);
                    scratch.union_with(self.host.graph(c).neighbors(v));
                    let rq = scratch.difference_len(&self.image) as i64
                        - (defsum + self.deficiency(d, v, c))
                        - (pcount + self.ppairs.contains(v, c) as i64);
                    if best.map_or(true, |(_, br)| rq < br) {
                        best = Some((q, rq));
                    }
                }
                let Some((q, rq)) = best else { break };
                let (v, c) = self.host.pair_from_id(q);
                gamma.union_with(self.host.graph(c).neighbors(v));
                defsum += self.deficiency(d, v, c);
                pcount += self.ppairs.contains(v, c) as i64;
                members.push(q);
                r = rq;
                if r < 0 {
                    return Some((self.pairs_of_stack(&members), r));
                }
            }
        }
        None
    }

    /// Checks `(bound, D)`-goodness under the requested mode. Exact mode is
    /// a proof (and errors if the enumeration exceeds the cap); the other
    /// modes produce labeled evidence.
    pub fn verify_good_bounded(
        &self,
        d: usize,
        bound: usize,
        mode: VerifyMode,
        caps: &EngineCaps,
    ) -> Result<GoodnessReport, EngineError> {
        let di = d as i64;
        let witness = match mode {
            VerifyMode::Exact => {
                let needed = self.exact_set_count(bound);
                if needed > caps.exact_sets {
                    return Err(EngineError::CapExceeded {
                        needed,
                        cap: caps.exact_sets,
                    });
                }
                let mut witness: Option<Vec<(usize, usize)>> = None;
                self.scan_all(di, bound, &mut |stack, _gamma, r| {
                    if r < 0 {
                        witness = Some(self.pairs_of_stack(stack));
                        false
                    } else {
                        true
                    }
                });
                witness
            }
            VerifyMode::Incremental => {
                let mut witness: Option<Vec<(usize, usize)>> = None;
                for pairs in self.cache.keys() {
                    if pairs.len() <= bound && self.residual_pairs(di, pairs) < 0 {
                        witness = Some(pairs.clone());
                        break;
                    }
                }
                if witness.is_none() {
                    witness = self.scan_small_violator(di, bound.min(2));
                }
                witness
            }
            VerifyMode::BestEffort => self.greedy_search(di, bound).map(|(x, _)| x),
        };
        Ok(GoodnessReport {
            verdict: if witness.is_none() {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            mode,
            witness,
        })
    }

    /// Convenience: `(2s, D)`-goodness, the bound the engine maintains.
    pub fn verify_good(
        &self,
        cfg: &EngineConfig,
    ) -> Result<GoodnessReport, EngineError> {
        self.verify_good_bounded(cfg.params.d, 2 * cfg.params.s, cfg.mode, &cfg.caps)
    }

    /// First singleton or pair with negative residual, if any.
    fn scan_small_violator(&self, d: i64, bound: usize) -> Option<Vec<(usize, usize)>> {
        let n = self.host.n();
        let nt = self.host.pair_count();
        if bound == 0 {
            return None;
        }
        let mut gamma = BitSet::new(n);
        for p in 0..nt {
            let (v, c) = self.host.pair_from_id(p);
            gamma.copy_from(self.host.graph(c).neighbors(v));
            let def = self.deficiency(d, v, c);
            let pm = self.ppairs.contains(v, c) as i64;
            if gamma.difference_len(&self.image) as i64 - def - pm < 0 {
                return Some(vec![self.host.pair_from_id(p)]);
            }
            if bound < 2 {
                continue;
            }
            let mut scratch = BitSet::new(n);
            for q in p + 1..nt {
                let (v2, c2) = self.host.pair_from_id(q);
                scratch.copy_from(&gamma);
                scratch.union_with(self.host.graph(c2).neighbors(v2));
                let r = scratch.difference_len(&self.image) as i64
                    - def
                    - self.deficiency(d, v2, c2)
                    - pm
                    - self.ppairs.contains(v2, c2) as i64;
                if r < 0 {
                    return Some(vec![self.host.pair_from_id(p), self.host.pair_from_id(q)]);
                }
            }
        }
        None
    }

    // -- incremental cache maintenance ---------------------------------------

    /// Applies an exact per-set residual delta to every cached entry.
    fn cache_shift<F: Fn(&Embedding<'_>, &[(usize, usize)]) -> i64>(&mut self, delta: F) {
        let mut cache = std::mem::take(&mut self.cache);
        for (pairs, r) in cache.iter_mut() {
            *r += delta(self, pairs);
        }
        self.cache = cache;
    }

    /// Rescans all singletons and pairs; absorbs every set seen at `R ≤ 2`
    /// (and refreshes the stored residual of those already cached).
    fn cache_rescan(&mut self, d: i64) {
        let n = self.host.n();
        let nt = self.host.pair_count();
        let mut additions: Vec<(Vec<(usize, usize)>, i64)> = Vec::new();
        let mut gamma = BitSet::new(n);
        let mut scratch = BitSet::new(n);
        for p in 0..nt {
            let (v, c) = self.host.pair_from_id(p);
            gamma.copy_from(self.host.graph(c).neighbors(v));
            let def = self.deficiency(d, v, c);
            let pm = self.ppairs.contains(v, c) as i64;
            let r1 = gamma.difference_len(&self.image) as i64 - def - pm;
            if r1 <= 2 {
                additions.push((vec![(v, c)], r1));
            }
            for q in p + 1..nt {
                let (v2, c2) = self.host.pair_from_id(q);
                scratch.copy_from(&gamma);
                scratch.union_with(self.host.graph(c2).neighbors(v2));
                let r2 = scratch.difference_len(&self.image) as i64
                    - def
                    - self.deficiency(d, v2, c2)
                    - pm
                    - self.ppairs.contains(v2, c2) as i64;
                if r2 <= 2 {
                    let mut key = vec![(v, c), (v2, c2)];
                    key.sort_unstable();
                    additions.push((key, r2));
                }
            }
        }
        for (key, r) in additions {
            self.cache.insert(key, r);
        }
    }

    fn maintain_cache<F: Fn(&Embedding<'_>, &[(usize, usize)]) -> i64>(
        &mut self,
        cfg: &EngineConfig,
        delta: F,
    ) {
        if cfg.mode == VerifyMode::Incremental {
            self.cache_shift(delta);
            self.cache_rescan(cfg.params.d as i64);
        }
    }

    // -- size hypotheses ------------------------------------------------------

    fn size_check(
        &mut self,
        cfg: &EngineConfig,
        resulting: usize,
        budget_terms: (usize, usize),
        context: &'static str,
    ) -> Result<(), EngineError> {
        let (sd_mult, s_mult) = budget_terms;
        let s = cfg.params.s as i64;
        let d = cfg.params.d as i64;
        let allowed = self.host.n() as i64 - (sd_mult as i64) * s * d - (s_mult as i64) * s;
        if (resulting as i64) > allowed {
            match cfg.enforcement {
                HypothesisEnforcement::Strict => {
                    return Err(EngineError::SizeHypothesisViolated {
                        have: resulting,
                        allowed,
                        context,
                    })
                }
                HypothesisEnforcement::Advisory => {
                    self.advisories.push(format!(
                        "size hypothesis for {context} not met: working target would have {resulting} vertices, guaranteed regime allows {allowed}"
                    ));
                }
            }
        }
        Ok(())
    }

    // -- primitive operations -------------------------------------------------

    /// Places an isolated root at `host_v`, optionally into a reserved slot.
    /// Goodness after placement is the caller's obligation (pipelines derive
    /// it from host structure and verify at their checkpoints).
    pub fn place_root(
        &mut self,
        slot: Option<usize>,
        host_v: usize,
        cfg: &EngineConfig,
    ) -> Result<usize, EngineError> {
        if host_v >= self.host.n() {
            return Err(EngineError::HostVertexOutOfRange {
                v: host_v,
                n: self.host.n(),
            });
        }
        if self.image.contains(host_v) {
            return Err(EngineError::HostVertexAlreadyUsed { v: host_v });
        }
        let id = self.target.activate(slot)?;
        self.target.set_root(id);
        if id >= self.map.len() {
            self.map.resize(id + 1, None);
        }
        self.map[id] = Some(host_v);
        self.inv[host_v] = Some(id);
        self.image.insert(host_v);
        self.steps.push(Step::PlaceRoot {
            target: id,
            host: host_v,
        });
        self.maintain_cache(cfg, |e, x| -(e.gamma_has(x, host_v) as i64));
        Ok(id)
    }

    fn apply_extension(&mut self, slot: Option<usize>, w: usize, r: usize, a: usize) -> usize {
        let id = self.target.activate(slot).expect("validated slot");
        self.target.add_edge_raw(w, id, r);
        self.target.set_parent(id, w, r);
        if id >= self.map.len() {
            self.map.resize(id + 1, None);
        }
        self.map[id] = Some(a);
        self.inv[a] = Some(id);
        self.image.insert(a);
        self.ppairs.insert(a, r);
        self.steps.push(Step::Extend {
            target: id,
            parent: w,
            color: r,
            host: a,
        });
        id
    }

    /// Reverses an extension without legality checks (used to back out a
    /// best-effort candidate).
    fn unapply_extension(&mut self, id: usize, w: usize, r: usize, a: usize) {
        self.target.remove_edge_raw(w, id, r);
        self.ppairs.remove(a, r);
        self.map[id] = None;
        self.inv[a] = None;
        self.image.remove(a);
        self.target.deactivate(id);
        debug_assert!(matches!(self.steps.pop(), Some(Step::Extend { .. })));
    }

    fn candidate_order(&self, a_set: &BitSet, cfg: &EngineConfig) -> Vec<usize> {
        let mut order = a_set.to_vec();
        if let Some(seed) = cfg.shuffle_seed {
            let mut rng =
                ChaCha20Rng::seed_from_u64(seed.wrapping_add(self.steps.len() as u64));
            order.shuffle(&mut rng);
        }
        order
    }

    fn state_dump(&self) -> String {
        format!(
            "map: {:?}\nroots: {:?}\nppairs: {:?}\nexcluded: {:?}\nsteps: {} entries\nlast steps: {:?}",
            self.map,
            self.target
                .alive_ids()
                .iter()
                .filter(|&&v| self.target.is_root(v))
                .collect::<Vec<_>>(),
            self.ppairs.to_sorted_pairs(),
            self.excluded.to_vec(),
            self.steps.len(),
            self.steps.iter().rev().take(8).collect::<Vec<_>>()
        )
    }

    /// Extends the embedding by one new non-root child of `w`, joined by a
    /// color-`r` edge, choosing the host image among
    /// `A = Γ_{G_r}(φ(w)) ∖ (φ(H) ∪ excluded)` so the embedding stays
    /// `(2s, D)`-good under the active mode. `slot` optionally names the
    /// reserved target id for the new vertex.
    pub fn extend_vertex(
        &mut self,
        w: usize,
        r: usize,
        slot: Option<usize>,
        cfg: &EngineConfig,
    ) -> Result<usize, EngineError> {
        if !self.target.is_alive(w) {
            return Err(EngineError::TargetVertexUnknown { v: w });
        }
        let phi_w = self.map[w].ok_or(EngineError::TargetVertexUnknown { v: w })?;
        if r >= self.host.t() {
            return Err(EngineError::ColorSpaceMismatch {
                target_t: r + 1,
                host_t: self.host.t(),
            });
        }
        let d = cfg.params.d;
        if self.target.deg_color(w, r) >= d {
            return Err(EngineError::DegreeFull { w, color: r, d });
        }
        self.size_check(cfg, self.target.alive_count() + 1, (2, 3), "vertex extension")?;
        // Validate slot availability before doing any verification work.
        if let Some(s) = slot {
            if s >= self.target.slots() || self.target.is_alive(s) {
                return Err(EngineError::SlotUnavailable { slot: s });
            }
        }

        let mut a_set = self.host.graph(r).neighbors(phi_w).clone();
        a_set.difference_with(&self.image);
        a_set.difference_with(&self.excluded);
        if a_set.is_empty() {
            return Err(EngineError::CandidatesEmpty { w, color: r });
        }

        let bound = 2 * cfg.params.s;
        let di = d as i64;
        let wpair_id = self.host.pair_id(phi_w, r);

        match cfg.mode {
            VerifyMode::Exact => {
                let needed = self.exact_set_count(bound);
                if needed > cfg.caps.exact_sets {
                    return Err(EngineError::CapExceeded {
                        needed,
                        cap: cfg.caps.exact_sets,
                    });
                }
                // One scan both verifies current goodness and accumulates the
                // union of Γ(X) over tight sets X (R = 0) not containing
                // (φ(w), r): any candidate outside that union keeps every
                // residual nonnegative, because the extension delta is
                // 1[(φ(w),r) ∈ X] − 1[a ∈ Γ(X)] ≥ −1 and only tight sets can
                // go negative.
                let mut bad = BitSet::new(self.host.n());
                let mut violation: Option<Vec<(usize, usize)>> = None;
                self.scan_all(di, bound, &mut |stack, gamma, res| {
                    if res < 0 {
                        violation = Some(self.pairs_of_stack(stack));
                        return false;
                    }
                    if res == 0 && !stack.contains(&wpair_id) {
                        bad.union_with(gamma);
                    }
                    true
                });
                if let Some(witness) = violation {
                    return Err(EngineError::NotGood { witness });
                }
                let order = self.candidate_order(&a_set, cfg);
                let Some(&a) = order.iter().find(|&&a| !bad.contains(a)) else {
                    return Err(EngineError::InternalInconsistency {
                        context: format!("extend_vertex(w={w}, r={r})"),
                        dump: self.state_dump(),
                    });
                };
                let id = self.apply_extension(slot, w, r, a);
                Ok(id)
            }
            VerifyMode::Incremental => {
                // Evidence-grade bad set from the cache plus a fresh
                // singleton/pair sweep.
                let mut bad = BitSet::new(self.host.n());
                let cache = std::mem::take(&mut self.cache);
                for (pairs, &res) in cache.iter() {
                    if res == 0
                        && pairs.len() <= bound
                        && !pairs.contains(&(phi_w, r))
                        && self.residual_pairs(di, pairs) == 0
                    {
                        for &(v, c) in pairs {
                            bad.union_with(self.host.graph(c).neighbors(v));
                        }
                    }
                }
                self.cache = cache;
                self.collect_small_tight(di, bound.min(2), (phi_w, r), &mut bad);
                let order = self.candidate_order(&a_set, cfg);
                let Some(&a) = order.iter().find(|&&a| !bad.contains(a)) else {
                    return Err(EngineError::NoCandidatePasses {
                        w,
                        color: r,
                        mode: cfg.mode,
                    });
                };
                let id = self.apply_extension(slot, w, r, a);
                self.maintain_cache(cfg, move |e, x| {
                    let has_wpair = x.binary_search(&(phi_w, r)).is_ok() as i64;
                    has_wpair - e.gamma_has(x, a) as i64
                });
                Ok(id)
            }
            VerifyMode::BestEffort => {
                let order = self.candidate_order(&a_set, cfg);
                for &a in &order {
                    let id = self.apply_extension(slot, w, r, a);
                    if self.greedy_search(di, bound).is_none() {
                        return Ok(id);
                    }
                    self.unapply_extension(id, w, r, a);
                }
                Err(EngineError::NoCandidatePasses {
                    w,
                    color: r,
                    mode: cfg.mode,
                })
            }
        }
    }

    /// Unions `Γ(X)` over freshly scanned singletons and pairs that are
    /// tight (`R = 0`) and avoid `wpair`.
    fn collect_small_tight(
        &self,
        d: i64,
        bound: usize,
        wpair: (usize, usize),
        bad: &mut BitSet,
    ) {
        if bound == 0 {
            return;
        }
        let n = self.host.n();
        let nt = self.host.pair_count();
        let mut gamma = BitSet::new(n);
        let mut scratch = BitSet::new(n);
        for p in 0..nt {
            let pv = self.host.pair_from_id(p);
            gamma.copy_from(self.host.graph(pv.1).neighbors(pv.0));
            let def = self.deficiency(d, pv.0, pv.1);
            let pm = self.ppairs.contains(pv.0, pv.1) as i64;
            if pv != wpair && gamma.difference_len(&self.image) as i64 - def - pm == 0 {
                bad.union_with(&gamma);
            }
            if bound < 2 {
                continue;
            }
            for q in p + 1..nt {
                let qv = self.host.pair_from_id(q);
                if pv == wpair || qv == wpair {
                    continue;
                }
                scratch.copy_from(&gamma);
                scratch.union_with(self.host.graph(qv.1).neighbors(qv.0));
                let r = scratch.difference_len(&self.image) as i64
                    - def
                    - self.deficiency(d, qv.0, qv.1)
                    - pm
                    - self.ppairs.contains(qv.0, qv.1) as i64;
                if r == 0 {
                    bad.union_with(&scratch);
                }
            }
        }
    }

    /// Adds the color-`r` target edge between `h` and `h2` (whose images
    /// must already be adjacent in `G_r`) and promotes both endpoints and
    /// all their ancestors to roots, shrinking `P_φ(H)`. Residuals never
    /// decrease.
    pub fn add_edge(
        &mut self,
        h: usize,
        h2: usize,
        r: usize,
        cfg: &EngineConfig,
    ) -> Result<(), EngineError> {
        if !self.target.is_alive(h) {
            return Err(EngineError::TargetVertexUnknown { v: h });
        }
        if !self.target.is_alive(h2) {
            return Err(EngineError::TargetVertexUnknown { v: h2 });
        }
        if h == h2 {
            return Err(EngineError::IllegalExtension {
                reason: "cannot join a vertex to itself".into(),
            });
        }
        if self.target.has_edge(h, h2) {
            return Err(EngineError::TargetAlreadyAdjacent { h, h2 });
        }
        let pa = self.map[h].ok_or(EngineError::TargetVertexUnknown { v: h })?;
        let pb = self.map[h2].ok_or(EngineError::TargetVertexUnknown { v: h2 })?;
        if !self.host.graph(r).has_edge(pa, pb) {
            return Err(EngineError::ImagesNotAdjacent { h, h2, color: r });
        }
        self.target.add_edge_raw(h, h2, r);
        let mut promoted = Vec::new();
        let mut removed_ppairs: Vec<(usize, usize)> = Vec::new();
        for start in [h, h2] {
            let mut cur = start;
            while !self.target.is_root(cur) {
                let (p, c) = self.target.parent(cur).expect("non-root has a parent");
                let host_cur = self.map[cur].expect("mapped");
                self.ppairs.remove(host_cur, c);
                removed_ppairs.push((host_cur, c));
                self.target.set_root(cur);
                promoted.push(cur);
                cur = p;
            }
        }
        self.steps.push(Step::AddEdge {
            a: h,
            b: h2,
            color: r,
            promoted,
        });
        self.maintain_cache(cfg, move |_e, x| {
            let mut delta = x.binary_search(&(pa, r)).is_ok() as i64
                + x.binary_search(&(pb, r)).is_ok() as i64;
            for &(v, c) in &removed_ppairs {
                delta += x.binary_search(&(v, c)).is_ok() as i64;
            }
            delta
        });
        debug_assert!(self.target.roots_connected());
        Ok(())
    }

    /// Removes a non-root vertex of total degree 1, or an isolated root.
    /// Goodness is preserved in both cases.
    pub fn remove_leaf(&mut self, u: usize, cfg: &EngineConfig) -> Result<(), EngineError> {
        if !self.target.is_alive(u) {
            return Err(EngineError::TargetVertexUnknown { v: u });
        }
        let a = self.map[u].ok_or(EngineError::TargetVertexUnknown { v: u })?;
        let degree = self.target.total_degree(u);
        if self.target.is_root(u) {
            if degree != 0 {
                return Err(EngineError::RemovalIllegal {
                    v: u,
                    reason: format!("root of positive degree {degree}"),
                });
            }
            self.map[u] = None;
            self.inv[a] = None;
            self.image.remove(a);
            self.target.deactivate(u);
            self.steps.push(Step::RemoveLeaf { target: u, host: a });
            self.maintain_cache(cfg, |e, x| e.gamma_has(x, a) as i64);
        } else {
            if degree != 1 {
                return Err(EngineError::RemovalIllegal {
                    v: u,
                    reason: format!("non-root of total degree {degree}, need exactly 1"),
                });
            }
            let (p, c) = self.target.parent(u).expect("non-root has a parent");
            debug_assert!(self.target.has_edge_color(u, p, c));
            let phi_p = self.map[p].expect("parent mapped");
            self.target.remove_edge_raw(u, p, c);
            self.ppairs.remove(a, c);
            self.map[u] = None;
            self.inv[a] = None;
            self.image.remove(a);
            self.target.deactivate(u);
            self.steps.push(Step::RemoveLeaf { target: u, host: a });
            self.maintain_cache(cfg, move |e, x| {
                e.gamma_has(x, a) as i64 - x.binary_search(&(phi_p, c)).is_ok() as i64
            });
        }
        Ok(())
    }

    /// Renames a live target vertex into a dead reserved slot, keeping the
    /// host side untouched.
    pub fn rename(&mut self, from: usize, to: usize) -> Result<(), EngineError> {
        let host_v = self.map[from].ok_or(EngineError::TargetVertexUnknown { v: from })?;
        self.target.rename(from, to)?;
        if to >= self.map.len() {
            self.map.resize(to + 1, None);
        }
        self.map[from] = None;
        self.map[to] = Some(host_v);
        self.inv[host_v] = Some(to);
        self.steps.push(Step::Rename { from, to });
        Ok(())
    }

    /// Grows a forest of new non-root vertices below existing ones,
    /// breadth-first over the delta (so parents always precede children).
    /// Returns the target id assigned to each delta node.
    pub fn extend_forest(
        &mut self,
        delta: &ForestDelta,
        cfg: &EngineConfig,
    ) -> Result<Vec<usize>, EngineError> {
        self.size_check(
            cfg,
            self.target.alive_count() + delta.nodes.len(),
            (2, 3),
            "forest extension",
        )?;
        // Depth of each node over the existing embedding; errors on cycles.
        let m = delta.nodes.len();
        let mut depth = vec![usize::MAX; m];
        fn depth_of(
            nodes: &[DeltaNode],
            depth: &mut Vec<usize>,
            i: usize,
            visiting: &mut Vec<bool>,
        ) -> Result<usize, EngineError> {
            if depth[i] != usize::MAX {
                return Ok(depth[i]);
            }
            if visiting[i] {
                return Err(EngineError::IllegalExtension {
                    reason: "delta forest contains a parent cycle".into(),
                });
            }
            visiting[i] = true;
            let d = match nodes[i].parent {
                DeltaParent::Existing(_) => 0,
                DeltaParent::New(j) => {
                    if j >= nodes.len() {
                        return Err(EngineError::IllegalExtension {
                            reason: format!("delta node {i} hangs below unknown node {j}"),
                        });
                    }
                    depth_of(nodes, depth, j, visiting)? + 1
                }
            };
            visiting[i] = false;
            depth[i] = d;
            Ok(d)
        }
        let mut visiting = vec![false; m];
        for i in 0..m {
            depth_of(&delta.nodes, &mut depth, i, &mut visiting)?;
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&i| (depth[i], i));

        let mut assigned = vec![usize::MAX; m];
        for &i in &order {
            let node = &delta.nodes[i];
            let parent_id = match node.parent {
                DeltaParent::Existing(v) => v,
                DeltaParent::New(j) => assigned[j],
            };
            assigned[i] = self.extend_vertex(parent_id, node.color, node.slot, cfg)?;
        }
        Ok(assigned)
    }

    /// Connects `a` and `b` by a path realizing `pattern`, using the
    /// scaffolded search: grow a subpath and two complete `(D−1)`-ary trees,
    /// find a crossing host edge between the leaf images, join it, and roll
    /// the unused scaffolding back in reverse construction order. With
    /// 0-based edge positions `0..ℓ−1`: the subpath covers positions
    /// `0..=ℓ−2k−4`, the a-side attachment plus tree layers cover
    /// `ℓ−2k−3..=ℓ−k−3`, the crossing edge sits at `ℓ−k−2`, and the b-side
    /// layers cover `ℓ−k−1..=ℓ−1` in reverse. `interior` optionally names
    /// the reserved target ids for the `ℓ−1` surviving interior vertices in
    /// a→b order. Returns the path's target ids from `a` to `b`.
    pub fn connect_path(
        &mut self,
        a: usize,
        b: usize,
        pattern: &PathPattern,
        interior: Option<&[usize]>,
        cfg: &EngineConfig,
    ) -> Result<Vec<usize>, EngineError> {
        let s = cfg.params.s;
        let d = cfg.params.d;
        if d < 3 {
            return Err(EngineError::Target(TargetError::DegreeBudgetTooSmall { d }));
        }
        if a == b {
            return Err(EngineError::IllegalExtension {
                reason: "path endpoints must be distinct".into(),
            });
        }
        let ell = pattern.len();
        let k_full = tree_height(s, d)?;
        let required = 2 * k_full + 3;
        let k = match cfg.connect_policy {
            ConnectPolicy::Strict => {
                if ell < required {
                    return Err(EngineError::PatternTooShort {
                        len: ell,
                        required,
                    });
                }
                k_full
            }
            ConnectPolicy::Clamped => {
                if ell < 3 {
                    return Err(EngineError::PatternTooShort {
                        len: ell,
                        required: 3,
                    });
                }
                let k_eff = k_full.min((ell - 3) / 2);
                if k_eff < k_full {
                    self.advisories.push(format!(
                        "path of length {ell} is below the guaranteed minimum {required}; scaffolding height clamped from {k_full} to {k_eff}, crossing guarantee degraded"
                    ));
                }
                k_eff
            }
        };
        if let Some(slots) = interior {
            if slots.len() != ell - 1 {
                return Err(EngineError::InteriorSlotMismatch {
                    expected: ell - 1,
                    got: slots.len(),
                });
            }
        }
        for (end, color) in [(a, pattern.colors[0]), (b, pattern.colors[ell - 1])] {
            if !self.target.is_alive(end) || self.map_of(end).is_none() {
                return Err(EngineError::TargetVertexUnknown { v: end });
            }
            if self.target.deg_color(end, color) >= d {
                return Err(EngineError::DegreeFull {
                    w: end,
                    color,
                    d,
                });
            }
        }
        self.size_check(
            cfg,
            self.target.alive_count() + (ell - 1),
            (4, 5),
            "path connection",
        )?;

        let mut built: Vec<usize> = Vec::new();

        // (1) Subpath Q from a, covering pattern positions 0..=ℓ−2k−4.
        let q_edges = ell - 2 * k - 3;
        let mut a0 = a;
        for e in 0..q_edges {
            a0 = self.extend_vertex(a0, pattern.colors[e], None, cfg)?;
            built.push(a0);
        }

        // (2) Attachment edges and complete (D−1)-ary trees of height k.
        let tau_a = self.extend_vertex(a0, pattern.colors[ell - 2 * k - 3], None, cfg)?;
        built.push(tau_a);
        let mut a_layer = vec![tau_a];
        for j in 1..=k {
            let color = pattern.colors[ell - 2 * k - 3 + j];
            let mut next_layer = Vec::with_capacity(a_layer.len() * (d - 1));
            for &p in &a_layer {
                for _ in 0..d - 1 {
                    let c = self.extend_vertex(p, color, None, cfg)?;
                    built.push(c);
                    next_layer.push(c);
                }
            }
            a_layer = next_layer;
        }
        let tau_b = self.extend_vertex(b, pattern.colors[ell - 1], None, cfg)?;
        built.push(tau_b);
        let mut b_layer = vec![tau_b];
        for j in 1..=k {
            let color = pattern.colors[ell - 1 - j];
            let mut next_layer = Vec::with_capacity(b_layer.len() * (d - 1));
            for &p in &b_layer {
                for _ in 0..d - 1 {
                    let c = self.extend_vertex(p, color, None, cfg)?;
                    built.push(c);
                    next_layer.push(c);
                }
            }
            b_layer = next_layer;
        }

        // (3) Crossing edge in the middle color, scanned in ascending host
        // order on both sides for determinism.
        let crossing_color = pattern.colors[ell - k - 2];
        let mut a_leaves: Vec<(usize, usize)> = a_layer
            .iter()
            .map(|&tid| (self.map[tid].expect("mapped"), tid))
            .collect();
        a_leaves.sort_unstable();
        let mut b_leaves: Vec<(usize, usize)> = b_layer
            .iter()
            .map(|&tid| (self.map[tid].expect("mapped"), tid))
            .collect();
        b_leaves.sort_unstable();
        let mut crossing: Option<(usize, usize)> = None;
        'scan: for &(ha, ta) in &a_leaves {
            for &(hb, tb) in &b_leaves {
                if self.host.graph(crossing_color).has_edge(ha, hb) {
                    crossing = Some((ta, tb));
                    break 'scan;
                }
            }
        }
        let Some((x_t, y_t)) = crossing else {
            return Err(EngineError::NoCrossingEdge {
                color: crossing_color,
                a_side: a_leaves.iter().map(|&(h, _)| h).collect(),
                b_side: b_leaves.iter().map(|&(h, _)| h).collect(),
            });
        };

        // Record the used chains before promotion erases the parent links.
        let chain_to = |emb: &Embedding<'_>, from: usize, stop: usize| -> Vec<usize> {
            let mut chain = vec![from];
            let mut cur = from;
            while cur != stop {
                let (p, _) = emb.target.parent(cur).expect("scaffolding chain");
                chain.push(p);
                cur = p;
            }
            chain
        };
        let chain_x = chain_to(self, x_t, a);
        let chain_y = chain_to(self, y_t, b);

        // (4) Join and promote.
        self.add_edge(x_t, y_t, crossing_color, cfg)?;

        // (5) Roll back every unused scaffolding vertex, children first.
        for &v in built.iter().rev() {
            if self.target.is_alive(v) && !self.target.is_root(v) {
                self.remove_leaf(v, cfg)?;
            }
        }

        let mut seq: Vec<usize> = chain_x.iter().rev().copied().collect();
        seq.extend(chain_y.iter().copied());
        debug_assert_eq!(seq.len(), ell + 1);
        if let Some(slots) = interior {
            for (i, slot) in slots.iter().enumerate() {
                let v = seq[i + 1];
                if v != *slot {
                    self.rename(v, *slot)?;
                    seq[i + 1] = *slot;
                }
            }
        }
        // The surviving path must carry exactly the prescribed pattern.
        debug_assert!(seq
            .windows(2)
            .zip(&pattern.colors)
            .all(|(w, &c)| self.target.has_edge_color(w[0], w[1], c)));
        Ok(seq)
    }

    /// Full consistency revalidation: injectivity, color adjacency of every
    /// live target edge, and agreement of the cached image/inverse/parent
    /// pairs with a recomputation.
    pub fn revalidate(&self) -> Result<(), String> {
        let mut seen = BitSet::new(self.host.n());
        let mut count = 0usize;
        for v in self.target.alive_ids() {
            let Some(h) = self.map_of(v) else {
                return Err(format!("live target vertex {v} has no image"));
            };
            if !seen.insert(h) {
                return Err(format!("host vertex {h} is the image of two target vertices"));
            }
            if self.inv[h] != Some(v) {
                return Err(format!("inverse map disagrees at host {h}"));
            }
            count += 1;
        }
        if count != self.target.alive_count() {
            return Err("alive count drifted".into());
        }
        for w in seen.iter() {
            if !self.image.contains(w) {
                return Err(format!("image set is missing host {w}"));
            }
        }
        if self.image.len() != count {
            return Err("image set has stale entries".into());
        }
        for (u, v, c) in self.target.edges() {
            let (hu, hv) = (self.map[u].unwrap(), self.map[v].unwrap());
            if !self.host.graph(c).has_edge(hu, hv) {
                return Err(format!(
                    "target edge ({u}, {v}, color {c}) maps to non-adjacent hosts ({hu}, {hv})"
                ));
            }
        }
        let mut recomputed = ColoredVertexSet::new(self.host.n(), self.host.t());
        for v in self.target.alive_ids() {
            if !self.target.is_root(v) {
                let Some((p, c)) = self.target.parent(v) else {
                    return Err(format!("non-root {v} has no parent entry"));
                };
                if !self.target.has_edge_color(v, p, c) {
                    return Err(format!("parent edge of {v} is missing"));
                }
                recomputed.insert(self.map[v].unwrap(), c);
            }
        }
        if recomputed.to_sorted_pairs() != self.ppairs.to_sorted_pairs() {
            return Err("cached parent pairs disagree with recomputation".into());
        }
        Ok(())
    }
}

/// One new vertex of a forest extension: where it hangs, the edge color,
/// and optionally the reserved target slot it should occupy.
#[derive(Debug, Clone)]
pub struct DeltaNode {
    pub parent: DeltaParent,
    pub color: usize,
    pub slot: Option<usize>,
}

/// A delta node hangs below an existing target vertex or below another new
/// node (by its index in the delta).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaParent {
    Existing(usize),
    New(usize),
}

/// A forest of new non-root vertices to hang below the current embedding.
#[derive(Debug, Clone, Default)]
pub struct ForestDelta {
    pub nodes: Vec<DeltaNode>,
}

impl ForestDelta {
    /// A chain of `colors.len()` vertices hanging below `anchor`, with the
    /// given edge colors and optional reserved slots (one per vertex).
    pub fn chain(anchor: usize, colors: &[usize], slots: Option<&[usize]>) -> Self {
        let nodes = colors
            .iter()
            .enumerate()
            .map(|(i, &color)| DeltaNode {
                parent: if i == 0 {
                    DeltaParent::Existing(anchor)
                } else {
                    DeltaParent::New(i - 1)
                },
                color,
                slot: slots.map(|s| s[i]),
            })
            .collect();
        ForestDelta { nodes }
    }
}

/// Embeds a singly-rooted colored tree with its root pinned at `v0`,
/// growing the remaining vertices by repeated extension in breadth-first
/// order. The returned embedding's target ids equal the tree's.
pub fn embed_tree_anchored<'h>(
    host: &'h GraphFamily,
    tree: &EdgeColoredRootedGraph,
    v0: usize,
    cfg: &EngineConfig,
) -> Result<Embedding<'h>, EngineError> {
    tree.validate()?;
    if tree.t() > host.t() {
        return Err(EngineError::ColorSpaceMismatch {
            target_t: tree.t(),
            host_t: host.t(),
        });
    }
    let roots: Vec<usize> = tree.roots().iter().collect();
    if roots.len() != 1 {
        return Err(EngineError::TreeNotSinglyRooted { roots: roots.len() });
    }
    let h0 = roots[0];
    let mut emb = Embedding::with_reserved(host, tree.m());
    emb.size_check(cfg, tree.m(), (2, 3), "anchored tree embedding")?;
    emb.place_root(Some(h0), v0, cfg)?;
    let report = emb.verify_good(cfg)?;
    if !report.passed() {
        return Err(EngineError::NotGood {
            witness: report.witness.unwrap_or_default(),
        });
    }
    // Children lists from the parent structure, grown breadth-first.
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); tree.m()];
    for v in 0..tree.m() {
        if let Some((p, c)) = tree.parent(v) {
            children[p].push((v, c));
        }
    }
    let mut queue = std::collections::VecDeque::from([h0]);
    while let Some(v) = queue.pop_front() {
        for &(child, color) in &children[v] {
            emb.extend_vertex(v, color, Some(child), cfg)?;
            queue.push_back(child);
        }
    }
    debug_assert_eq!(emb.target().alive_count(), tree.m());
    debug_assert!(emb.revalidate().is_ok());
    Ok(emb)
}

/// Embeds a path-constructible target: the base forest is anchored at the
/// given host vertices (one anchor per base component, keyed by the
/// component's smallest vertex id), then the decomposition's paths are
/// realized in order — grown as a chain when one endpoint is new, connected
/// through scaffolding when both ends are already embedded. All validation
/// happens before the first placement.
pub fn embed_path_constructible<'h>(
    host: &'h GraphFamily,
    h: &EdgeColoredRootedGraph,
    decomposition: &PathConstructibleDecomposition,
    anchors: &BTreeMap<usize, usize>,
    cfg: &EngineConfig,
) -> Result<Embedding<'h>, EngineError> {
    use crate::target::{validate_path_constructible, PathConstructibleCheck};
    if h.t() > host.t() {
        return Err(EngineError::ColorSpaceMismatch {
            target_t: h.t(),
            host_t: host.t(),
        });
    }
    match validate_path_constructible(h, decomposition) {
        PathConstructibleCheck::Pass => {}
        PathConstructibleCheck::Fail {
            clause,
            path_index,
            detail,
        } => {
            return Err(EngineError::DecompositionInvalid {
                clause: clause.to_string(),
                detail: match path_index {
                    Some(i) => format!("path {i}: {detail}"),
                    None => detail,
                },
            })
        }
    }

    // Base components and their representatives; acyclicity check.
    let m = h.m();
    let mut base_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for &(u, v, c) in &decomposition.base_edges {
        base_adj[u].push((v, c));
        base_adj[v].push((u, c));
    }
    for lists in base_adj.iter_mut() {
        lists.sort_unstable();
    }
    let mut base_vertices = decomposition.base_vertices.clone();
    base_vertices.sort_unstable();
    base_vertices.dedup();
    let mut component = vec![usize::MAX; m];
    let mut reps: Vec<usize> = Vec::new();
    for &v in &base_vertices {
        if component[v] != usize::MAX {
            continue;
        }
        let rep = v; // ascending iteration makes the first visit the minimum
        let comp_id = reps.len();
        reps.push(rep);
        let mut queue = vec![v];
        component[v] = comp_id;
        let mut vertex_count = 1usize;
        let mut edge_ends = 0usize;
        while let Some(u) = queue.pop() {
            edge_ends += base_adj[u].len();
            for &(w, _) in &base_adj[u] {
                if component[w] == usize::MAX {
                    component[w] = comp_id;
                    vertex_count += 1;
                    queue.push(w);
                }
            }
        }
        if edge_ends != 2 * (vertex_count - 1) {
            return Err(EngineError::BaseNotForest {
                detail: format!(
                    "component of vertex {rep} has {vertex_count} vertices and {} edges",
                    edge_ends / 2
                ),
            });
        }
    }
    for &rep in &reps {
        if !anchors.contains_key(&rep) {
            return Err(EngineError::AnchorMissing { vertex: rep });
        }
    }
    {
        let mut used: Vec<usize> = reps.iter().map(|r| anchors[r]).collect();
        used.sort_unstable();
        let before = used.len();
        used.dedup();
        if used.len() != before {
            return Err(EngineError::IllegalExtension {
                reason: "anchor host vertices must be distinct".into(),
            });
        }
    }

    // Dry-run the path order to pre-validate connection lengths.
    {
        let mut placed = vec![false; m];
        for &v in &base_vertices {
            placed[v] = true;
        }
        let k_full = tree_height(cfg.params.s, cfg.params.d)?;
        let required = 2 * k_full + 3;
        for seq in &decomposition.paths {
            let (x0, x1) = (seq[0], *seq.last().unwrap());
            if placed[x0] && placed[x1] {
                let ell = seq.len() - 1;
                let minimum = match cfg.connect_policy {
                    ConnectPolicy::Strict => required,
                    ConnectPolicy::Clamped => 3,
                };
                if ell < minimum {
                    return Err(EngineError::PatternTooShort {
                        len: ell,
                        required: minimum,
                    });
                }
            }
            for &v in seq {
                placed[v] = true;
            }
        }
    }

    let mut emb = Embedding::with_reserved(host, m);
    emb.size_check(cfg, m, (6, 0), "path-constructible embedding")?;

    // Embed the base forest: anchor each representative, grow the rest.
    for (comp_id, &rep) in reps.iter().enumerate() {
        emb.place_root(Some(rep), anchors[&rep], cfg)?;
        let mut queue = std::collections::VecDeque::from([rep]);
        let mut seen = vec![false; m];
        seen[rep] = true;
        while let Some(u) = queue.pop_front() {
            for &(w, color) in &base_adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    debug_assert_eq!(component[w], comp_id);
                    emb.extend_vertex(u, color, Some(w), cfg)?;
                    queue.push_back(w);
                }
            }
        }
    }

    // Realize the paths in decomposition order.
    for seq in &decomposition.paths {
        let (x0, x1) = (seq[0], *seq.last().unwrap());
        let placed0 = emb.map_of(x0).is_some();
        let placed1 = emb.map_of(x1).is_some();
        let colors: Vec<usize> = seq
            .windows(2)
            .map(|w| h.edge_color(w[0], w[1]).expect("validated path edge"))
            .collect();
        match (placed0, placed1) {
            (true, true) => {
                let pattern = PathPattern { colors };
                let interior: Vec<usize> = seq[1..seq.len() - 1].to_vec();
                emb.connect_path(x0, x1, &pattern, Some(&interior), cfg)?;
            }
            (true, false) => {
                let slots: Vec<usize> = seq[1..].to_vec();
                emb.extend_forest(&ForestDelta::chain(x0, &colors, Some(&slots)), cfg)?;
            }
            (false, true) => {
                let rev_colors: Vec<usize> = colors.iter().rev().copied().collect();
                let slots: Vec<usize> = seq[..seq.len() - 1].iter().rev().copied().collect();
                emb.extend_forest(&ForestDelta::chain(x1, &rev_colors, Some(&slots)), cfg)?;
            }
            (false, false) => {
                return Err(EngineError::DecompositionInvalid {
                    clause: "(iii)".into(),
                    detail: "a path with no embedded endpoint survived validation".into(),
                })
            }
        }
    }
    debug_assert_eq!(emb.target().alive_count(), m);
    debug_assert!(emb.revalidate().is_ok());
    Ok(emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn k(n: usize) -> GraphFamily {
        GraphFamily::single(Graph::complete(n))
    }

    fn cvs(n: usize, t: usize, pairs: &[(usize, usize)]) -> ColoredVertexSet {
        ColoredVertexSet::from_pairs(n, t, pairs).unwrap()
    }

    #[test]
    fn residual_spec_examples() {
        let host = k(4);
        // K_4 is roomy enough to *build* the two-vertex state at (s, D) =
        // (1, 1); the residual examples themselves are then evaluated at
        // D = 2 (the residual is a pure function of the state and D).
        let cfg = EngineConfig::exact(1, 1).unwrap();

        // Empty target.
        let emb = Embedding::new(&host);
        assert_eq!(emb.residual(2, &cvs(4, 1, &[(0, 0)])), 1);

        // One root at host 0.
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &cfg).unwrap();
        assert_eq!(emb.residual(2, &cvs(4, 1, &[(0, 0)])), 1);

        // Root at 0 with a child at 1 through the single color.
        let w = emb.extend_vertex(0, 0, None, &cfg).unwrap();
        assert_eq!(emb.map_of(w), Some(1));
        assert_eq!(emb.residual(2, &cvs(4, 1, &[(1, 0)])), 0);
    }

    #[test]
    fn verify_good_spec_examples() {
        let caps = EngineCaps::default();
        let host = k(4);
        let emb = Embedding::new(&host);
        let report = emb.verify_good_bounded(2, 2, VerifyMode::Exact, &caps).unwrap();
        assert!(report.passed());

        // A host with an isolated vertex fails at bound 1 with that witness.
        let mut g = Graph::complete(4);
        g = {
            let mut edges = g.edges();
            edges.retain(|&(u, v)| u != 4 && v != 4);
            Graph::from_edges(5, &edges).unwrap()
        };
        let host2 = GraphFamily::single(g);
        let emb2 = Embedding::new(&host2);
        let report = emb2
            .verify_good_bounded(1, 1, VerifyMode::Exact, &caps)
            .unwrap();
        assert!(!report.passed());
        assert_eq!(report.witness.unwrap(), vec![(4, 0)]);

        // Bound 0 is vacuous.
        let report = emb2
            .verify_good_bounded(1, 0, VerifyMode::Exact, &caps)
            .unwrap();
        assert!(report.passed());
    }

    #[test]
    fn delta_residual_matches_recomputation() {
        let host = k(12);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &cfg).unwrap();

        // Indicator arithmetic cases. Extending 0 by host 1.
        let x_plus = cvs(12, 1, &[(0, 0)]); // contains (φ(w), r); 1 ∈ Γ(X) though
        assert_eq!(emb.delta_residual(0, 0, 1, 3, &x_plus).unwrap(), 0);
        let x_far = cvs(12, 1, &[(1, 0)]); // misses (φ(w),r)=(0,0); is 1 ∈ Γ({1})? no (no loop)
        assert_eq!(emb.delta_residual(0, 0, 1, 3, &x_far).unwrap(), 0);
        let x_hit = cvs(12, 1, &[(2, 0)]); // 1 ~ 2, so a ∈ Γ(X), and (0,0) ∉ X
        assert_eq!(emb.delta_residual(0, 0, 1, 3, &x_hit).unwrap(), -1);

        // Equality against recomputation for every X of size ≤ 2.
        let deltas: Vec<(ColoredVertexSet, i64)> = {
            let mut v = Vec::new();
            for i in 0..12 {
                for j in i..12 {
                    let x = if i == j {
                        cvs(12, 1, &[(i, 0)])
                    } else {
                        cvs(12, 1, &[(i, 0), (j, 0)])
                    };
                    let d = emb.delta_residual(0, 0, 1, 3, &x).unwrap();
                    let predicted = emb.residual(3, &x) + d;
                    v.push((x, predicted));
                }
            }
            v
        };
        emb.extend_vertex(0, 0, None, &cfg).unwrap();
        assert_eq!(emb.map_of(1), Some(1));
        for (x, predicted) in deltas {
            assert_eq!(emb.residual(3, &x), predicted);
        }
    }

    #[test]
    fn extend_vertex_examples() {
        let host = k(10);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::with_reserved(&host, 2);
        emb.place_root(Some(0), 0, &cfg).unwrap();
        let id = emb.extend_vertex(0, 0, Some(1), &cfg).unwrap();
        assert_eq!(id, 1);
        assert_eq!(emb.map_of(1), Some(1)); // ascending candidate order
        assert!(emb.verify_good(&cfg).unwrap().passed());
        assert!(!emb.target().is_root(1));
        assert_eq!(emb.target().parent(1), Some((0, 0)));
        assert!(emb.parent_pairs().contains(1, 0));

        // Degree saturation.
        let cfg_d1 = EngineConfig::exact(1, 1).unwrap();
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &cfg_d1).unwrap();
        emb.extend_vertex(0, 0, None, &cfg_d1).unwrap();
        assert_eq!(
            emb.extend_vertex(0, 0, None, &cfg_d1).unwrap_err(),
            EngineError::DegreeFull {
                w: 0,
                color: 0,
                d: 1
            }
        );

        // All neighbors used: path host 0-1-2, images fill Γ(1).
        let path_host = GraphFamily::single(Graph::path(3));
        let mut emb = Embedding::new(&path_host);
        emb.place_root(None, 0, &cfg).unwrap();
        emb.place_root(None, 2, &cfg).unwrap();
        emb.place_root(None, 1, &cfg).unwrap();
        assert_eq!(
            emb.extend_vertex(2, 0, None, &cfg).unwrap_err(),
            EngineError::CandidatesEmpty { w: 2, color: 0 }
        );
    }

    #[test]
    fn excluded_hosts_are_skipped() {
        let host = k(10);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &cfg).unwrap();
        emb.exclude_host(1);
        emb.exclude_host(2);
        let id = emb.extend_vertex(0, 0, None, &cfg).unwrap();
        assert_eq!(emb.map_of(id), Some(3));
    }

    #[test]
    fn extend_forest_shapes() {
        let host = k(20);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &cfg).unwrap();

        // A path of 4 below the root.
        let ids = emb
            .extend_forest(&ForestDelta::chain(0, &[0, 0, 0, 0], None), &cfg)
            .unwrap();
        assert_eq!(ids.len(), 4);
        assert!(emb.verify_good(&cfg).unwrap().passed());

        // A complete (D−1)-ary tree of height 2 below the root: 2 + 4 nodes.
        let mut nodes = Vec::new();
        for _ in 0..2 {
            nodes.push(DeltaNode {
                parent: DeltaParent::Existing(0),
                color: 0,
                slot: None,
            });
        }
        for parent in 0..2 {
            for _ in 0..2 {
                nodes.push(DeltaNode {
                    parent: DeltaParent::New(parent),
                    color: 0,
                    slot: None,
                });
            }
        }
        let ids = emb.extend_forest(&ForestDelta { nodes }, &cfg).unwrap();
        assert_eq!(ids.len(), 6);
        assert!(emb.verify_good(&cfg).unwrap().passed());
        assert_eq!(emb.target().alive_count(), 1 + 4 + 6);

        // Size bound enforced under Strict.
        let strict = EngineConfig::exact(1, 3)
            .unwrap()
            .with_enforcement(HypothesisEnforcement::Strict);
        let small_host = k(10);
        let mut emb = Embedding::new(&small_host);
        emb.place_root(None, 0, &strict).unwrap();
        let err = emb
            .extend_forest(&ForestDelta::chain(0, &[0; 5], None), &strict)
            .unwrap_err();
        assert!(matches!(err, EngineError::SizeHypothesisViolated { .. }));
    }

    #[test]
    fn add_edge_promotion() {
        let host = k(12);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        let r0 = emb.place_root(None, 0, &cfg).unwrap();
        let r1 = emb.place_root(None, 5, &cfg).unwrap();

        // Two adjacent roots: no relabeling.
        emb.add_edge(r0, r1, 0, &cfg).unwrap();
        match emb.steps().last().unwrap() {
            Step::AddEdge { promoted, .. } => assert!(promoted.is_empty()),
            other => panic!("unexpected step {other:?}"),
        }

        // Two chains whose leaf images are adjacent: both chains promote.
        let a1 = emb.extend_vertex(r0, 0, None, &cfg).unwrap();
        let a2 = emb.extend_vertex(a1, 0, None, &cfg).unwrap();
        let b1 = emb.extend_vertex(r1, 0, None, &cfg).unwrap();
        let p_before = emb.parent_pairs().len();
        assert_eq!(p_before, 3);
        emb.add_edge(a2, b1, 0, &cfg).unwrap();
        assert_eq!(emb.parent_pairs().len(), 0);
        assert!(emb.target().is_root(a1) && emb.target().is_root(a2) && emb.target().is_root(b1));
        assert!(emb.target().roots_connected());
        assert!(emb.revalidate().is_ok());

        // Non-adjacent images.
        let path_host = GraphFamily::single(Graph::path(4));
        let mut emb = Embedding::new(&path_host);
        let x = emb.place_root(None, 0, &cfg).unwrap();
        let y = emb.place_root(None, 2, &cfg).unwrap();
        assert_eq!(
            emb.add_edge(x, y, 0, &cfg).unwrap_err(),
            EngineError::ImagesNotAdjacent {
                h: x,
                h2: y,
                color: 0
            }
        );
    }

    #[test]
    fn add_edge_never_decreases_residuals() {
        let host = k(40);
        let cfg = EngineConfig::exact(2, 3).unwrap();
        let mut emb = Embedding::new(&host);
        let r0 = emb.place_root(None, 0, &cfg).unwrap();
        let r1 = emb.place_root(None, 20, &cfg).unwrap();
        let a1 = emb.extend_vertex(r0, 0, None, &cfg).unwrap();
        let b1 = emb.extend_vertex(r1, 0, None, &cfg).unwrap();
        let mut sets = Vec::new();
        for i in 0..40 {
            sets.push(cvs(40, 1, &[(i, 0)]));
            for j in i + 1..40 {
                sets.push(cvs(40, 1, &[(i, 0), (j, 0)]));
            }
        }
        let before: Vec<i64> = sets.iter().map(|x| emb.residual(3, x)).collect();
        emb.add_edge(a1, b1, 0, &cfg).unwrap();
        for (x, &rb) in sets.iter().zip(&before) {
            assert!(emb.residual(3, x) >= rb);
        }
    }

    #[test]
    fn remove_leaf_examples() {
        let host = k(10);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &cfg).unwrap();
        let before = emb.verify_good(&cfg).unwrap();
        let leaf = emb.extend_vertex(0, 0, None, &cfg).unwrap();
        let host_img = emb.map_of(leaf).unwrap();
        emb.remove_leaf(leaf, &cfg).unwrap();
        let after = emb.verify_good(&cfg).unwrap();
        assert_eq!(before, after);
        assert_eq!(emb.target().alive_count(), 1);
        assert!(!emb.image().contains(host_img));
        assert!(emb.revalidate().is_ok());

        // Degree-2 internal vertex is not removable.
        let mid = emb.extend_vertex(0, 0, None, &cfg).unwrap();
        let _tip = emb.extend_vertex(mid, 0, None, &cfg).unwrap();
        assert!(matches!(
            emb.remove_leaf(mid, &cfg).unwrap_err(),
            EngineError::RemovalIllegal { .. }
        ));

        // Isolated root removal is allowed.
        let lone = emb.place_root(None, 9, &cfg).unwrap();
        emb.remove_leaf(lone, &cfg).unwrap();

        // A root with positive degree is not removable.
        assert!(matches!(
            emb.remove_leaf(0, &cfg).unwrap_err(),
            EngineError::RemovalIllegal { .. }
        ));
    }

    #[test]
    fn connect_path_k10() {
        let host = k(10);
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        let a = emb.place_root(None, 0, &cfg).unwrap();
        let b = emb.place_root(None, 5, &cfg).unwrap();
        let seq = emb
            .connect_path(a, b, &PathPattern::constant(0, 3), None, &cfg)
            .unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq[0], a);
        assert_eq!(seq[3], b);
        assert_eq!(emb.target().alive_count(), 4);
        assert_eq!(emb.target().edges().len(), 3);
        assert!(emb.verify_good(&cfg).unwrap().passed());
        assert!(emb.revalidate().is_ok());
        assert!(emb.target().roots_connected());

        // Too short.
        let mut emb = Embedding::new(&host);
        let a = emb.place_root(None, 0, &cfg).unwrap();
        let b = emb.place_root(None, 5, &cfg).unwrap();
        assert_eq!(
            emb.connect_path(a, b, &PathPattern::constant(0, 2), None, &cfg)
                .unwrap_err(),
            EngineError::PatternTooShort {
                len: 2,
                required: 3
            }
        );
    }

    #[test]
    fn connect_path_with_scaffolding_trees() {
        // s = 2, D = 3 → k = 1, required length 5; leaf sets have 2 = s
        // elements and at most 4 crossing pairs are scanned.
        let host = k(40);
        let cfg = EngineConfig::exact(2, 3).unwrap();
        let mut emb = Embedding::new(&host);
        let a = emb.place_root(None, 0, &cfg).unwrap();
        let b = emb.place_root(None, 20, &cfg).unwrap();
        let seq = emb
            .connect_path(a, b, &PathPattern::constant(0, 5), None, &cfg)
            .unwrap();
        assert_eq!(seq.len(), 6);
        assert_eq!(emb.target().alive_count(), 6);
        assert_eq!(emb.target().edges().len(), 5);
        assert!(emb.verify_good(&cfg).unwrap().passed());
        assert!(emb.revalidate().is_ok());

        // Strict policy rejects a length below 2k+3; clamped accepts and
        // degrades the scaffolding height.
        let mut strict_emb = Embedding::new(&host);
        let a = strict_emb.place_root(None, 0, &cfg).unwrap();
        let b = strict_emb.place_root(None, 20, &cfg).unwrap();
        assert_eq!(
            strict_emb
                .connect_path(a, b, &PathPattern::constant(0, 3), None, &cfg)
                .unwrap_err(),
            EngineError::PatternTooShort {
                len: 3,
                required: 5
            }
        );
        let clamped = EngineConfig::exact(2, 3)
            .unwrap()
            .with_connect_policy(ConnectPolicy::Clamped);
        let seq = strict_emb
            .connect_path(a, b, &PathPattern::constant(0, 3), None, &clamped)
            .unwrap();
        assert_eq!(seq.len(), 4);
        assert!(!strict_emb.advisories().is_empty());
        assert!(strict_emb.verify_good(&clamped).unwrap().passed());
    }

    #[test]
    fn connect_path_pattern_is_respected() {
        let host = GraphFamily::new(vec![Graph::complete(12), Graph::complete(12)]).unwrap();
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        let a = emb.place_root(None, 0, &cfg).unwrap();
        let b = emb.place_root(None, 6, &cfg).unwrap();
        let pattern = PathPattern {
            colors: vec![0, 1, 0, 1],
        };
        let seq = emb.connect_path(a, b, &pattern, None, &cfg).unwrap();
        assert_eq!(seq.len(), 5);
        for (w, &c) in seq.windows(2).zip(&pattern.colors) {
            assert!(emb.target().has_edge_color(w[0], w[1], c));
        }
        assert!(emb.verify_good(&cfg).unwrap().passed());
    }

    #[test]
    fn connect_path_reports_missing_crossing() {
        // Color 0 is complete; color 1 is complete minus the one edge the
        // deterministic construction will ask for as the crossing. With
        // s = 1 the scaffolding is a single vertex per side: roots at hosts
        // 0 and 6 attach τ_a ↦ 1 and τ_b ↦ 2 (lowest free candidates), and
        // the crossing needs the missing color-1 edge {1, 2}.
        let mut edges = Graph::complete(12).edges();
        edges.retain(|&e| e != (1, 2));
        let g1 = Graph::from_edges(12, &edges).unwrap();
        let host = GraphFamily::new(vec![Graph::complete(12), g1]).unwrap();
        let cfg = EngineConfig::exact(1, 3).unwrap();
        let mut emb = Embedding::new(&host);
        let a = emb.place_root(None, 0, &cfg).unwrap();
        let b = emb.place_root(None, 6, &cfg).unwrap();
        let pattern = PathPattern {
            colors: vec![0, 1, 0],
        };
        match emb.connect_path(a, b, &pattern, None, &cfg).unwrap_err() {
            EngineError::NoCrossingEdge {
                color,
                a_side,
                b_side,
            } => {
                assert_eq!(color, 1);
                assert_eq!(a_side, vec![1]);
                assert_eq!(b_side, vec![2]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn embed_tree_anchored_examples() {
        let host = k(10);
        let cfg = EngineConfig::exact(1, 3).unwrap();

        // A single-vertex tree.
        let mut tree = EdgeColoredRootedGraph::new(1, 1);
        tree.set_root(0);
        let emb = embed_tree_anchored(&host, &tree, 7, &cfg).unwrap();
        assert_eq!(emb.map_of(0), Some(7));

        // A rooted path of 3.
        let mut tree = EdgeColoredRootedGraph::new(3, 1);
        tree.add_edge(0, 1, 0).unwrap();
        tree.add_edge(1, 2, 0).unwrap();
        tree.set_root(0);
        tree.set_parent(1, 0, 0);
        tree.set_parent(2, 1, 0);
        let emb = embed_tree_anchored(&host, &tree, 0, &cfg).unwrap();
        assert_eq!(emb.map_of(0), Some(0));
        assert_eq!(emb.target().alive_count(), 3);
        assert!(emb.verify_good(&cfg).unwrap().passed());

        // Strict sizing rejects a tree beyond the bound.
        let strict = EngineConfig::exact(1, 3)
            .unwrap()
            .with_enforcement(HypothesisEnforcement::Strict);
        let err = embed_tree_anchored(&host, &tree, 0, &strict).unwrap_err();
        assert!(matches!(err, EngineError::SizeHypothesisViolated { .. }));
    }

    #[test]
    fn embed_path_constructible_subdivision() {
        use crate::target::{build_subdivision, PatternSource};
        let host = k(30);
        let cfg = EngineConfig::exact(1, 3)
            .unwrap()
            .with_enforcement(HypothesisEnforcement::Strict);
        let built = build_subdivision(3, &[3, 3, 3], &PatternSource::default()).unwrap();
        let anchors = BTreeMap::from([(0, 0), (1, 1), (2, 2)]);
        let emb =
            embed_path_constructible(&host, &built.graph, &built.decomposition, &anchors, &cfg)
                .unwrap();
        assert_eq!(emb.target().alive_count(), 9);
        for v in 0..9 {
            assert!(emb.map_of(v).is_some());
        }
        // The realized target edges match the requested ones.
        assert_eq!(emb.target().edges(), built.graph.edges());
        assert!(emb.verify_good(&cfg).unwrap().passed());
        assert!(emb.revalidate().is_ok());
        assert!(emb.advisories().is_empty());

        // An invalid decomposition errors before any placement.
        let mut broken = built.decomposition.clone();
        broken.paths.pop();
        let err = embed_path_constructible(&host, &built.graph, &broken, &anchors, &cfg)
            .unwrap_err();
        assert!(matches!(err, EngineError::DecompositionInvalid { .. }));

        // Too-small host under strict sizing.
        let tiny = k(20);
        let err =
            embed_path_constructible(&tiny, &built.graph, &built.decomposition, &anchors, &cfg)
                .unwrap_err();
        assert!(matches!(err, EngineError::SizeHypothesisViolated { .. }));
    }

    #[test]
    fn incremental_mode_tracks_exact_on_small_hosts() {
        let host = k(12);
        let exact = EngineConfig::exact(1, 3).unwrap();
        let incr = EngineConfig::exact(1, 3)
            .unwrap()
            .with_mode(VerifyMode::Incremental);
        let mut emb = Embedding::new(&host);
        emb.place_root(None, 0, &incr).unwrap();
        emb.place_root(None, 6, &incr).unwrap();
        for _ in 0..3 {
            emb.extend_vertex(0, 0, None, &incr).unwrap();
        }
        assert!(emb.verify_good(&incr).unwrap().passed());
        // Cross-check with a full exact verification.
        assert!(emb.verify_good(&exact).unwrap().passed());
    }

    #[test]
    fn best_effort_mode_embeds_and_verifies() {
        let host = k(12);
        let cfg = EngineConfig::exact(1, 3)
            .unwrap()
            .with_mode(VerifyMode::BestEffort);
        let mut emb = Embedding::new(&host);
        let a = emb.place_root(None, 0, &cfg).unwrap();
        let b = emb.place_root(None, 5, &cfg).unwrap();
        emb.connect_path(a, b, &PathPattern::constant(0, 3), None, &cfg)
            .unwrap();
        assert!(emb.verify_good(&cfg).unwrap().passed());
        let exact = EngineConfig::exact(1, 3).unwrap();
        assert!(emb.verify_good(&exact).unwrap().passed());
    }

    #[test]
    fn seeded_shuffle_changes_candidate_order_deterministically() {
        let host = k(10);
        let mut cfg = EngineConfig::exact(1, 3).unwrap();
        cfg.shuffle_seed = Some(7);
        let run = |cfg: &EngineConfig| {
            let mut emb = Embedding::new(&host);
            emb.place_root(None, 0, cfg).unwrap();
            let id = emb.extend_vertex(0, 0, None, cfg).unwrap();
            emb.map_of(id).unwrap()
        };
        let first = run(&cfg);
        assert_eq!(first, run(&cfg), "same seed must reproduce");
    }
}
