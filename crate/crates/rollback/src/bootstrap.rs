//! Bootstrapping an embedding: carving the host into regions where a fresh
//! embedding is automatically good, and the end-to-end pipelines built on
//! top of the carving.
//!
//! The engine ([`crate::engine`]) keeps an embedding `(2s, D)`-good *once it
//! is good*; nothing there explains why the very first placements are safe.
//! This module supplies that start:
//!
//! 1. [`find_blocker`] absorbs every low-expansion colored set into a
//!    blocker `U_0` of at most `s` pairs (or proves the host is not
//!    `s`-joined by exhibiting an oversized blocker with its trace).
//! 2. [`carve_regions`] removes the blocker and a reserve block `Y_0`,
//!    leaving a free region `W` where any small all-roots placement is good
//!    for the restricted family on `V' = V \ U_0|_V`.
//! 3. [`embed_star_forest`] and [`embed_rooted_forest_anchored`] perform the
//!    two initial placements the drivers need, and
//!    [`embed_subdivision_joined`], [`embed_expansion_joined`],
//!    [`embed_subdivision_jumbled`] run complete pipelines that return a
//!    [`PipelineRun`] in *original* host ids.
//!
//! Throughout, the real-valued hypotheses of the jumbled route use
//! `s_real = 2 sqrt(t) beta / p` while every integer use (set sizes, region
//! sizes, scaffolding height) takes `s = max(1, floor(s_real))`: residual
//! sets are counted by `floor`, and goodness only strengthens as `s` grows,
//! so rounding down is the sound direction.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bitset::BitSet;
use crate::certify::JumbledParams;
use crate::engine::{
    embed_path_constructible, Embedding, EngineCaps, EngineConfig, EngineError, GoodnessParams,
    GoodnessReport, HypothesisEnforcement, Step, VerifyMode,
};
use crate::graph::{ColoredVertexSet, GraphError, GraphFamily, Relabeling};
use crate::target::{
    tree_height, BuiltExpansion, BuiltSubdivision, EdgeColoredRootedGraph,
    PathConstructibleDecomposition, PathPattern, TargetError,
};

/// Errors from region carving and the bootstrap pipelines.
#[derive(Debug, Error, PartialEq)]
pub enum BootstrapError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Target(#[from] TargetError),
    /// The candidate block is smaller than the `3sD + 4s` the blocker
    /// argument needs. Advisory enforcement downgrades this to a note.
    #[error("candidate block Y_0 has {got} vertices, the blocker argument needs 3sD + 4s = {need}")]
    Y0TooSmall { got: usize, need: usize },
    /// More than `s` pairs had to be absorbed: the host is not `s`-joined at
    /// these parameters. The trace lists each absorbed violator in order.
    #[error("blocker grew to {size} colored pairs, past the budget s = {s}; the host is not s-joined at these parameters (absorbed {} violators)", trace.len())]
    BlockerTooLarge {
        s: usize,
        size: usize,
        trace: Vec<Vec<(usize, usize)>>,
    },
    #[error("blocker search visited more than {cap} sets")]
    BlockerCapExceeded { cap: u128 },
    #[error("host with {n} vertices cannot carve regions: needs {need} vertices outside the avoided set")]
    HostTooSmallToCarve { n: usize, need: usize },
    /// A named hypothesis of the current operation fails. Under advisory
    /// enforcement the same text is recorded instead of returned.
    #[error("hypothesis `{name}` fails: {detail}")]
    InequalityFailed { name: &'static str, detail: String },
    /// No vertex clears the minimum monochromatic degree threshold. `best`
    /// is the largest min-over-colors degree any vertex achieves and
    /// `per_color_max` the best degree seen in each color separately.
    #[error("no vertex has monochromatic degree >= {threshold:.3} in every color: best min-over-colors degree is {best}, per-color maxima {per_color_max:?}")]
    NoMinMonoDegreeVertex {
        threshold: f64,
        best: usize,
        per_color_max: Vec<usize>,
    },
    #[error("component {index} is not a star: {detail}")]
    NotAStarForest { index: usize, detail: String },
    #[error("star {star} still needs {needed} leaves of color {color} but only {found} candidate hosts remain")]
    InsufficientLeafNeighbors {
        star: usize,
        color: usize,
        needed: usize,
        found: usize,
    },
    #[error("anchor host {anchor} lies outside the free region W")]
    AnchorOutsideW { anchor: usize },
    #[error("anchor host {anchor} is assigned to more than one root")]
    DuplicateAnchor { anchor: usize },
    #[error("target has monochromatic degree {found}, above the degree budget D = {d}")]
    MonoDegreeTooLarge { found: usize, d: usize },
    #[error("need {need} anchor vertices in W but only {have} are available")]
    NotEnoughAnchorRoom { need: usize, have: usize },
    /// A connection routed through already-placed path neighbors has inner
    /// length `l - 2`; strict policy insists it is at least `2k + 3`.
    #[error("inner connection length {inner} is below the guaranteed minimum {required}")]
    InnerPathTooShort { inner: usize, required: usize },
    #[error("embedding failed revalidation after the pipeline: {detail}")]
    Inconsistent { detail: String },
}

/// The four regions of a carved host, all in *original* vertex ids: the
/// blocker `U_0` (at most `s` colored pairs), `V' = V` minus the blocker's
/// vertex projection, the reserve block `Y_0` (exactly `3sD + 4s` vertices
/// of `V'`), and the free region `W = V' \ Y_0`.
#[derive(Debug, Clone)]
pub struct CarvedRegions {
    pub blocker: ColoredVertexSet,
    pub v_prime: BitSet,
    pub w: BitSet,
    pub y0: BitSet,
}

/// A carved host: the regions plus the family restricted to `V'`, the
/// relabeling between original and restricted ids, and `W` translated into
/// restricted ids. Embeddings made by this module run over `family` (so an
/// exact verification certifies goodness for the restricted family, which is
/// the claim the carving supports) and are translated back to original ids
/// when a pipeline finishes.
#[derive(Debug)]
pub struct Carved {
    pub regions: CarvedRegions,
    pub family: GraphFamily,
    pub relabeling: Relabeling,
    /// `W` in restricted ids.
    pub w_local: BitSet,
    /// Original host size (the `n` of the real-valued hypotheses).
    pub n_original: usize,
    /// The violators absorbed while building the blocker, in order.
    pub blocker_trace: Vec<Vec<(usize, usize)>>,
    pub advisories: Vec<String>,
}

/// Result of [`find_blocker`]: the blocker, the violators absorbed into it
/// in order, and any advisory notes.
#[derive(Debug, Clone)]
pub struct BlockerReport {
    pub blocker: ColoredVertexSet,
    pub trace: Vec<Vec<(usize, usize)>>,
    pub advisories: Vec<String>,
}

/// A finished pipeline, entirely in original host ids.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    /// Blocker pairs `(vertex, color)`, sorted.
    pub blocker: Vec<(usize, usize)>,
    pub v_prime: Vec<usize>,
    pub w: Vec<usize>,
    pub y0: Vec<usize>,
    pub params: GoodnessParams,
    pub mode: VerifyMode,
    /// `map[target_id] = Some(original_host_id)` for every live target id.
    pub map: Vec<Option<usize>>,
    /// The audited step log with host ids translated to original ids.
    pub steps: Vec<Step>,
    pub roots: Vec<usize>,
    /// `(vertex, parent, color)` for every non-root live target vertex.
    pub parents: Vec<(usize, usize, usize)>,
    /// Realized target edges `(u, v, color)` with `u < v`.
    pub edges: Vec<(usize, usize, usize)>,
    /// Final goodness verification of the finished embedding.
    pub report: GoodnessReport,
    pub advisories: Vec<String>,
    pub provenance: Vec<String>,
}

/// Enforcement-aware hypothesis check: strict returns the error, advisory
/// records the same text and continues.
fn check_hypothesis(
    ok: bool,
    name: &'static str,
    detail: String,
    enforcement: HypothesisEnforcement,
    advisories: &mut Vec<String>,
) -> Result<(), BootstrapError> {
    if ok {
        return Ok(());
    }
    match enforcement {
        HypothesisEnforcement::Strict => Err(BootstrapError::InequalityFailed { name, detail }),
        HypothesisEnforcement::Advisory => {
            advisories.push(format!("hypothesis `{name}` fails: {detail}"));
            Ok(())
        }
    }
}

/// Depth-first search for a violating colored set of one fixed size:
/// `X` disjoint from the blocker with `|N*(X)| < D |X|`, where
/// `N*(X) = Gamma(X) intersect yprime`. Candidate pairs are scanned in
/// ascending pair-id order, so the first hit is lexicographically least
/// within its size. Because `N*` only grows along a branch, any partial set
/// that already reaches `D * size` neighbors is pruned.
struct ViolatorScan<'a> {
    f: &'a GraphFamily,
    blocker: &'a ColoredVertexSet,
    yprime: &'a BitSet,
    d: usize,
    cap: u128,
    visited: &'a mut u128,
}

impl ViolatorScan<'_> {
    fn run(&mut self, size: usize) -> Result<Option<Vec<(usize, usize)>>, BootstrapError> {
        let n = self.f.n();
        let mut nstar: Vec<BitSet> = (0..=size).map(|_| BitSet::new(n)).collect();
        let mut stack: Vec<usize> = Vec::with_capacity(size);
        if self.rec(size, 0, &mut nstar, &mut stack)? {
            return Ok(Some(
                stack.iter().map(|&p| self.f.pair_from_id(p)).collect(),
            ));
        }
        Ok(None)
    }

    fn rec(
        &mut self,
        size: usize,
        start: usize,
        nstar: &mut [BitSet],
        stack: &mut Vec<usize>,
    ) -> Result<bool, BootstrapError> {
        let depth = stack.len();
        for pid in start..self.f.pair_count() {
            let (v, c) = self.f.pair_from_id(pid);
            if self.blocker.contains(v, c) {
                continue;
            }
            *self.visited += 1;
            if *self.visited > self.cap {
                return Err(BootstrapError::BlockerCapExceeded { cap: self.cap });
            }
            {
                let (lo, hi) = nstar.split_at_mut(depth + 1);
                hi[0].copy_from(&lo[depth]);
                hi[0].union_with(self.f.graph(c).neighbors(v));
                hi[0].intersect_with(self.yprime);
            }
            let reach = nstar[depth + 1].len();
            stack.push(pid);
            if depth + 1 == size {
                if reach < self.d * size {
                    return Ok(true);
                }
            } else if reach < self.d * size {
                // Only branches that could still fall short are worth
                // extending; N* is monotone in X.
                if self.rec(size, pid + 1, nstar, stack)? {
                    return Ok(true);
                }
            }
            stack.pop();
        }
        Ok(false)
    }
}

/// Finds the least violating set, trying sizes `1..=max_size` in order (lex
/// within each size). Size-ordered search matters: absorbing a minimal
/// violator first keeps the blocker small, while a mixed-size lexicographic
/// scan would absorb a large superset of a small violator and can blow the
/// budget on hosts that are in fact fine.
fn find_violator(
    f: &GraphFamily,
    blocker: &ColoredVertexSet,
    yprime: &BitSet,
    d: usize,
    max_size: usize,
    caps: &EngineCaps,
    visited: &mut u128,
) -> Result<Option<Vec<(usize, usize)>>, BootstrapError> {
    let mut scan = ViolatorScan {
        f,
        blocker,
        yprime,
        d,
        cap: caps.exact_sets,
        visited,
    };
    for size in 1..=max_size.min(f.pair_count()) {
        if let Some(x) = scan.run(size)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Builds the blocker `U_0` for the block `Y_0` by iterated absorption:
/// while some colored set `X` with at most `2s` pairs, disjoint from the
/// current blocker, has `|Gamma(X) intersect (Y_0 \ U|_V)| < D |X|`, absorb
/// it. Ends with a blocker of at most `s` pairs outside which every small
/// set expands properly into the remaining block, or fails with
/// [`BootstrapError::BlockerTooLarge`] carrying the absorption trace.
///
/// `|Y_0| >= 3sD + 4s` is required for the downstream goodness argument;
/// under advisory enforcement a smaller block is accepted with a note (the
/// absorption itself is well-defined for any block).
pub fn find_blocker(
    f: &GraphFamily,
    y0: &BitSet,
    params: GoodnessParams,
    enforcement: HypothesisEnforcement,
    caps: &EngineCaps,
) -> Result<BlockerReport, BootstrapError> {
    let s = params.s;
    let d = params.d;
    let need = 3 * s * d + 4 * s;
    let mut advisories = Vec::new();
    if y0.len() < need {
        match enforcement {
            HypothesisEnforcement::Strict => {
                return Err(BootstrapError::Y0TooSmall {
                    got: y0.len(),
                    need,
                })
            }
            HypothesisEnforcement::Advisory => advisories.push(format!(
                "block Y_0 has {} vertices, below the 3sD + 4s = {} the goodness argument needs",
                y0.len(),
                need
            )),
        }
    }
    let mut blocker = ColoredVertexSet::new(f.n(), f.t());
    let mut trace: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut visited: u128 = 0;
    loop {
        let mut yprime = y0.clone();
        yprime.difference_with(&blocker.projection());
        match find_violator(f, &blocker, &yprime, d, 2 * s, caps, &mut visited)? {
            None => break,
            Some(x) => {
                for &(v, c) in &x {
                    blocker.insert(v, c);
                }
                trace.push(x);
                if blocker.len() > s {
                    return Err(BootstrapError::BlockerTooLarge {
                        s,
                        size: blocker.len(),
                        trace,
                    });
                }
            }
        }
    }
    Ok(BlockerReport {
        blocker,
        trace,
        advisories,
    })
}

/// Re-runs the exhaustive violator search against a finished blocker:
/// `true` means no colored set of at most `2s` pairs outside the blocker
/// under-expands into `Y_0` minus the blocker's vertices — the property
/// [`find_blocker`] is supposed to establish.
pub fn verify_blocker(
    f: &GraphFamily,
    y0: &BitSet,
    blocker: &ColoredVertexSet,
    params: GoodnessParams,
    caps: &EngineCaps,
) -> Result<bool, BootstrapError> {
    let mut yprime = y0.clone();
    yprime.difference_with(&blocker.projection());
    let mut visited = 0u128;
    Ok(
        find_violator(f, blocker, &yprime, params.d, 2 * params.s, caps, &mut visited)?
            .is_none(),
    )
}

/// Carves the host into regions: picks `Y_0` as the `3sD + 4s`
/// lowest-indexed vertices outside `avoid`, builds its blocker, restricts
/// the family to `V'`, and returns the carving with the exact guarantees
/// `|V'| >= n - s` and `|W| >= n - 3sD - 5s` (checked, not assumed).
/// Vertices in `avoid` are kept out of `Y_0` so they stay available in `W`
/// as anchors.
pub fn carve_regions(
    f: &GraphFamily,
    avoid: &[usize],
    params: GoodnessParams,
    enforcement: HypothesisEnforcement,
    caps: &EngineCaps,
) -> Result<Carved, BootstrapError> {
    let n = f.n();
    let s = params.s;
    let d = params.d;
    let y0_size = 3 * s * d + 4 * s;
    let avoid_set = BitSet::from_indices(n, avoid.iter().copied().filter(|&v| v < n));
    let mut y0 = BitSet::new(n);
    let mut count = 0;
    for v in 0..n {
        if count == y0_size {
            break;
        }
        if !avoid_set.contains(v) {
            y0.insert(v);
            count += 1;
        }
    }
    if count < y0_size {
        return Err(BootstrapError::HostTooSmallToCarve {
            n,
            need: y0_size + avoid_set.len(),
        });
    }

    let report = find_blocker(f, &y0, params, enforcement, caps)?;
    let projection = report.blocker.projection();
    let mut v_prime = BitSet::full(n);
    v_prime.difference_with(&projection);
    let mut w = v_prime.clone();
    w.difference_with(&y0);

    // Exact region guarantees; |U_0| <= s makes both identities, not bounds.
    assert!(v_prime.len() + s >= n, "|V'| >= n - s must hold");
    assert!(
        w.len() + 3 * s * d + 5 * s >= n,
        "|W| >= n - 3sD - 5s must hold"
    );

    let (family, relabeling) = f.restrict(&v_prime)?;
    let mut w_local = BitSet::new(family.n());
    for v in w.iter() {
        if let Some(local) = relabeling.to_new(v) {
            w_local.insert(local);
        }
    }
    Ok(Carved {
        regions: CarvedRegions {
            blocker: report.blocker,
            v_prime,
            w,
            y0,
        },
        family,
        relabeling,
        w_local,
        n_original: n,
        blocker_trace: report.trace,
        advisories: report.advisories,
    })
}

/// Scans `allowed` in ascending order for a vertex whose degree *within*
/// `allowed` is at least `(1 - c) * p * |allowed|` in every color. On
/// failure, reports the threshold, the best min-over-colors degree any
/// allowed vertex achieves, and the best degree per color.
fn mono_scan(
    f: &GraphFamily,
    allowed: &BitSet,
    c: f64,
    jp: &JumbledParams,
) -> Result<usize, BootstrapError> {
    let threshold = (1.0 - c) * jp.p * allowed.len() as f64;
    let mut best = 0usize;
    let mut per_color_max = vec![0usize; f.t()];
    for v in allowed.iter() {
        let mut min_degree = usize::MAX;
        for color in 0..f.t() {
            let degree = f.graph(color).neighbors(v).intersection_len(allowed);
            per_color_max[color] = per_color_max[color].max(degree);
            min_degree = min_degree.min(degree);
        }
        if min_degree as f64 >= threshold {
            return Ok(v);
        }
        best = best.max(min_degree);
    }
    Err(BootstrapError::NoMinMonoDegreeVertex {
        threshold,
        best,
        per_color_max,
    })
}

/// Finds the lowest-indexed vertex whose degree is at least `(1 - c) p n`
/// in *every* color of the family. Requires `0 < c < 1` and
/// `n >= sqrt(t) beta / (c p)` (the regime where a `(p, beta)`-jumbled
/// family must contain such a vertex); the failure diagnostics name the
/// threshold and the per-color degree maxima.
pub fn min_mono_degree_vertex(
    f: &GraphFamily,
    c: f64,
    jp: &JumbledParams,
) -> Result<usize, BootstrapError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(BootstrapError::InequalityFailed {
            name: "0 < c < 1",
            detail: format!("got c = {c}"),
        });
    }
    let need = (f.t() as f64).sqrt() * jp.beta / (c * jp.p);
    if (f.n() as f64) < need {
        return Err(BootstrapError::InequalityFailed {
            name: "n >= sqrt(t) beta / (c p)",
            detail: format!("n = {}, required {:.3}", f.n(), need),
        });
    }
    let full = BitSet::full(f.n());
    mono_scan(f, &full, c, jp)
}

/// The jumbled route's goodness budget: `s_real = 2 sqrt(t) beta / p` for
/// the real-valued hypotheses and `max(1, floor(s_real))` for every integer
/// use. (With `beta >= 1 > p` the floor is always at least 2; the clamp to
/// 1 is defensive.)
pub fn star_params(t: usize, jp: &JumbledParams) -> (f64, usize) {
    let s_real = 2.0 * (t as f64).sqrt() * jp.beta / jp.p;
    let s_int = (s_real.floor() as usize).max(1);
    (s_real, s_int)
}

/// One star to place: the target id of its center and, per leaf, the target
/// id and required edge color.
#[derive(Debug, Clone)]
pub struct StarPlan {
    pub center: usize,
    pub leaves: Vec<(usize, usize)>,
}

/// Decomposes a star forest into placement plans, one per component, in
/// ascending order of the component's least vertex. Each component must be
/// a star: a center adjacent to every other vertex, all others of total
/// degree 1 (isolated vertices count as centers with no leaves).
fn plans_from_forest(forest: &EdgeColoredRootedGraph) -> Result<Vec<StarPlan>, BootstrapError> {
    forest.validate()?;
    let m = forest.m();
    let mut seen = vec![false; m];
    let mut plans = Vec::new();
    for v in 0..m {
        if seen[v] {
            continue;
        }
        // Collect the component by breadth-first search.
        let mut component = vec![v];
        seen[v] = true;
        let mut head = 0;
        while head < component.len() {
            let u = component[head];
            head += 1;
            for x in forest.neighbors(u).iter() {
                if !seen[x] {
                    seen[x] = true;
                    component.push(x);
                }
            }
        }
        let index = plans.len();
        let center = component
            .iter()
            .copied()
            .max_by_key(|&u| (forest.total_degree(u), std::cmp::Reverse(u)))
            .unwrap();
        let mut leaves = Vec::new();
        for &u in &component {
            if u == center {
                continue;
            }
            if forest.total_degree(u) != 1 {
                return Err(BootstrapError::NotAStarForest {
                    index,
                    detail: format!("vertex {u} has degree {}", forest.total_degree(u)),
                });
            }
            match forest.edge_color(center, u) {
                Some(color) => leaves.push((u, color)),
                None => {
                    return Err(BootstrapError::NotAStarForest {
                        index,
                        detail: format!("vertex {u} is not adjacent to the center {center}"),
                    })
                }
            }
        }
        leaves.sort_unstable();
        plans.push(StarPlan { center, leaves });
    }
    Ok(plans)
}

/// Places the planned stars inside `W`: every star center is found by the
/// minimum-monochromatic-degree rule at parameter `c/2` over the not yet
/// used part of `W`, and its leaves take the lowest-indexed unused neighbors
/// in the required colors. All placed vertices are roots; edges between two
/// roots promote nothing, so the parent-pair ledger stays empty and the
/// resulting embedding is exactly the all-roots claim the region carving
/// supports.
#[allow(clippy::too_many_arguments)]
fn place_stars(
    emb: &mut Embedding<'_>,
    w_local: &BitSet,
    plans: &[StarPlan],
    c: f64,
    jp: &JumbledParams,
    s_real: f64,
    n_original: usize,
    cfg: &EngineConfig,
    advisories: &mut Vec<String>,
    provenance: &mut Vec<String>,
) -> Result<(), BootstrapError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(BootstrapError::InequalityFailed {
            name: "0 < c < 1",
            detail: format!("got c = {c}"),
        });
    }
    let d = cfg.params.d;
    let max_degree = plans.iter().map(|p| p.leaves.len()).max().unwrap_or(0);
    let forest_size: usize = plans.iter().map(|p| 1 + p.leaves.len()).sum();
    let n = n_original as f64;
    check_hypothesis(
        (max_degree as f64) <= (1.0 - c) * jp.p * n,
        "Delta(F) <= (1 - c) p n",
        format!(
            "Delta(F) = {max_degree}, bound = {:.3}",
            (1.0 - c) * jp.p * n
        ),
        cfg.enforcement,
        advisories,
    )?;
    check_hypothesis(
        (forest_size as f64) + 5.0 * s_real * (d as f64) < c * n / 2.0,
        "|V(F)| + 5 s D < c n / 2",
        format!(
            "|V(F)| = {forest_size}, 5 s D = {:.3}, c n / 2 = {:.3}",
            5.0 * s_real * d as f64,
            c * n / 2.0
        ),
        cfg.enforcement,
        advisories,
    )?;

    let t = emb.host().t() as f64;
    let mut allowed = w_local.clone();
    allowed.difference_with(emb.image());
    for (star_index, plan) in plans.iter().enumerate() {
        // The center search runs at parameter c/2 on what is left of W;
        // these are the two hypotheses that keep that invocation valid.
        let invocation_need = 2.0 * t.sqrt() * jp.beta / (c * jp.p);
        check_hypothesis(
            allowed.len() as f64 >= invocation_need,
            "|allowed| >= sqrt(t) beta / ((c/2) p)",
            format!(
                "star {star_index}: |allowed| = {}, required {:.3}",
                allowed.len(),
                invocation_need
            ),
            cfg.enforcement,
            advisories,
        )?;
        check_hypothesis(
            allowed.len() as f64 > (2.0 / c) * s_real,
            "|allowed| > (2/c) s",
            format!(
                "star {star_index}: |allowed| = {}, required > {:.3}",
                allowed.len(),
                (2.0 / c) * s_real
            ),
            cfg.enforcement,
            advisories,
        )?;
        let center_host = mono_scan(emb.host(), &allowed, c / 2.0, jp)?;
        emb.place_root(Some(plan.center), center_host, cfg)?;
        allowed.remove(center_host);

        for (leaf_index, &(leaf_slot, color)) in plan.leaves.iter().enumerate() {
            let mut candidates = emb.host().graph(color).neighbors(center_host).clone();
            candidates.intersect_with(&allowed);
            let Some(leaf_host) = candidates.min() else {
                let needed = plan.leaves[leaf_index..]
                    .iter()
                    .filter(|&&(_, cc)| cc == color)
                    .count();
                return Err(BootstrapError::InsufficientLeafNeighbors {
                    star: star_index,
                    color,
                    needed,
                    found: 0,
                });
            };
            emb.place_root(Some(leaf_slot), leaf_host, cfg)?;
            emb.add_edge(plan.center, leaf_slot, color, cfg)?;
            allowed.remove(leaf_host);
        }
        provenance.push(format!(
            "star {star_index}: center target {} at host {center_host}, {} leaves",
            plan.center,
            plan.leaves.len()
        ));
    }
    Ok(())
}

/// Embeds a star forest into the free region `W` of a carved host: centers
/// by the minimum-monochromatic-degree rule at `c/2` over the unused part of
/// `W`, leaves greedily to the lowest unused neighbors. The finished
/// embedding is verified at bound `2s` in the configured mode before being
/// returned. Target ids keep the forest's numbering; host ids are in the
/// restricted (`V'`) space — translate through `carved.relabeling` if the
/// original ids are needed.
pub fn embed_star_forest<'c>(
    carved: &'c Carved,
    forest: &EdgeColoredRootedGraph,
    c: f64,
    jp: &JumbledParams,
    cfg: &EngineConfig,
) -> Result<Embedding<'c>, BootstrapError> {
    if forest.t() > carved.family.t() {
        return Err(BootstrapError::Engine(EngineError::ColorSpaceMismatch {
            target_t: forest.t(),
            host_t: carved.family.t(),
        }));
    }
    let plans = plans_from_forest(forest)?;
    let (s_real, _) = star_params(carved.family.t(), jp);
    let mut emb = Embedding::with_reserved(&carved.family, forest.m());
    let mut advisories = Vec::new();
    let mut provenance = Vec::new();
    place_stars(
        &mut emb,
        &carved.w_local,
        &plans,
        c,
        jp,
        s_real,
        carved.n_original,
        cfg,
        &mut advisories,
        &mut provenance,
    )?;
    for note in advisories {
        emb.push_advisory(note);
    }
    let report = emb.verify_good(cfg)?;
    if !report.passed() {
        return Err(BootstrapError::Engine(EngineError::NotGood {
            witness: report.witness.unwrap_or_default(),
        }));
    }
    Ok(emb)
}

/// Embeds a path-constructible target into a carved host with its base
/// roots pinned to prescribed vertices of `W` (given in *original* ids,
/// keyed by base-component representative). This is the anchored initial
/// placement the joined pipelines build on.
pub fn embed_rooted_forest_anchored<'c>(
    carved: &'c Carved,
    h: &EdgeColoredRootedGraph,
    decomposition: &PathConstructibleDecomposition,
    anchors: &BTreeMap<usize, usize>,
    cfg: &EngineConfig,
) -> Result<Embedding<'c>, BootstrapError> {
    let mut used = BitSet::new(carved.n_original);
    let mut local = BTreeMap::new();
    for (&rep, &anchor) in anchors {
        if anchor >= carved.n_original || !carved.regions.w.contains(anchor) {
            return Err(BootstrapError::AnchorOutsideW { anchor });
        }
        if used.contains(anchor) {
            return Err(BootstrapError::DuplicateAnchor { anchor });
        }
        used.insert(anchor);
        let local_id = carved
            .relabeling
            .to_new(anchor)
            .expect("W is inside V', so every anchor has a restricted id");
        local.insert(rep, local_id);
    }
    Ok(embed_path_constructible(
        &carved.family,
        h,
        decomposition,
        &local,
        cfg,
    )?)
}

/// Representative (least id) of each base component, ascending.
fn base_representatives(m: usize, decomposition: &PathConstructibleDecomposition) -> Vec<usize> {
    let mut in_base = vec![false; m];
    for &v in &decomposition.base_vertices {
        if v < m {
            in_base[v] = true;
        }
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(u, v, _) in &decomposition.base_edges {
        if u < m && v < m {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
    }
    let mut seen = vec![false; m];
    let mut reps = Vec::new();
    for v in 0..m {
        if !in_base[v] || seen[v] {
            continue;
        }
        reps.push(v);
        let mut queue = vec![v];
        seen[v] = true;
        while let Some(u) = queue.pop() {
            for &x in &adjacency[u] {
                if !seen[x] {
                    seen[x] = true;
                    queue.push(x);
                }
            }
        }
    }
    reps
}

/// Verifies, revalidates, and translates a finished embedding back to
/// original host ids.
fn finish_run(
    carved: &Carved,
    emb: &Embedding<'_>,
    cfg: &EngineConfig,
    mut advisories: Vec<String>,
    mut provenance: Vec<String>,
) -> Result<PipelineRun, BootstrapError> {
    if let Err(detail) = emb.revalidate() {
        return Err(BootstrapError::Inconsistent { detail });
    }
    let report = emb.verify_good(cfg)?;
    provenance.push(format!(
        "verified goodness at bound {}: verdict {:?} in {:?} mode",
        2 * cfg.params.s,
        report.verdict,
        report.mode
    ));

    let to_old = |v: usize| carved.relabeling.to_old(v);
    let target = emb.target();
    let mut map = vec![None; target.slots()];
    let mut roots = Vec::new();
    let mut parents = Vec::new();
    for v in target.alive_ids() {
        map[v] = emb.map_of(v).map(to_old);
        if target.is_root(v) {
            roots.push(v);
        } else if let Some((parent, color)) = target.parent(v) {
            parents.push((v, parent, color));
        }
    }
    let steps = emb
        .steps()
        .iter()
        .cloned()
        .map(|step| match step {
            Step::PlaceRoot { target, host } => Step::PlaceRoot {
                target,
                host: to_old(host),
            },
            Step::Extend {
                target,
                parent,
                color,
                host,
            } => Step::Extend {
                target,
                parent,
                color,
                host: to_old(host),
            },
            Step::RemoveLeaf { target, host } => Step::RemoveLeaf {
                target,
                host: to_old(host),
            },
            other => other,
        })
        .collect();

    advisories.extend(carved.advisories.iter().cloned());
    advisories.extend(emb.advisories().iter().cloned());

    Ok(PipelineRun {
        blocker: carved.regions.blocker.to_sorted_pairs(),
        v_prime: carved.regions.v_prime.to_vec(),
        w: carved.regions.w.to_vec(),
        y0: carved.regions.y0.to_vec(),
        params: cfg.params,
        mode: cfg.mode,
        map,
        steps,
        roots,
        parents,
        edges: target.edges(),
        report,
        advisories,
        provenance,
    })
}

/// Joined-route pipeline for any path-constructible target: carve, anchor
/// the base components at the lowest vertices of `W`, then hand the whole
/// decomposition to the engine. `kind` labels the provenance log (the
/// subdivision and expansion entry points pass their own names).
pub fn embed_constructible_joined(
    f: &GraphFamily,
    h: &EdgeColoredRootedGraph,
    decomposition: &PathConstructibleDecomposition,
    cfg: &EngineConfig,
    kind: &str,
) -> Result<PipelineRun, BootstrapError> {
    let mut advisories = Vec::new();
    let mut provenance = Vec::new();
    let s = cfg.params.s;
    let d = cfg.params.d;

    let mono = h.mono_max_degree();
    if mono > d {
        return Err(BootstrapError::MonoDegreeTooLarge { found: mono, d });
    }
    check_hypothesis(
        h.m() as i64 <= f.n() as i64 - (6 * s * d) as i64,
        "|V(H)| <= n - 6 s D",
        format!("|V(H)| = {}, n - 6sD = {}", h.m(), f.n() as i64 - (6 * s * d) as i64),
        cfg.enforcement,
        &mut advisories,
    )?;

    let carved = carve_regions(f, &[], cfg.params, cfg.enforcement, &cfg.caps)?;
    provenance.push(format!(
        "carved regions for the {kind}: |U_0| = {}, |V'| = {}, |Y_0| = {}, |W| = {}",
        carved.regions.blocker.len(),
        carved.regions.v_prime.len(),
        carved.regions.y0.len(),
        carved.regions.w.len()
    ));

    let reps = base_representatives(h.m(), decomposition);
    let w_list: Vec<usize> = carved.regions.w.iter().take(reps.len()).collect();
    if w_list.len() < reps.len() {
        return Err(BootstrapError::NotEnoughAnchorRoom {
            need: reps.len(),
            have: w_list.len(),
        });
    }
    let anchors: BTreeMap<usize, usize> = reps.iter().copied().zip(w_list.iter().copied()).collect();
    provenance.push(format!(
        "anchored {} base roots at W vertices {:?}",
        reps.len(),
        w_list
    ));

    let emb = embed_rooted_forest_anchored(&carved, h, decomposition, &anchors, cfg)?;
    provenance.push(format!(
        "embedded the {kind}: {} target vertices over {} steps",
        h.m(),
        emb.steps().len()
    ));
    finish_run(&carved, &emb, cfg, advisories, provenance)
}

/// Full joined-route pipeline for a subdivision target: requires the
/// monochromatic degree within the budget `D` and (per enforcement) the size
/// hypothesis `|V(H)| <= n - 6sD`, carves, anchors branch vertices in `W`,
/// and embeds every subdivision path.
pub fn embed_subdivision_joined(
    f: &GraphFamily,
    built: &BuiltSubdivision,
    cfg: &EngineConfig,
) -> Result<PipelineRun, BootstrapError> {
    embed_constructible_joined(f, &built.graph, &built.decomposition, cfg, "subdivision")
}

/// Full joined-route pipeline for an expansion target: the branch trees are
/// the base forest (anchored component-by-component in `W`), the connector
/// paths are embedded by the roll-back connection.
pub fn embed_expansion_joined(
    f: &GraphFamily,
    built: &BuiltExpansion,
    cfg: &EngineConfig,
) -> Result<PipelineRun, BootstrapError> {
    embed_constructible_joined(f, &built.graph, &built.decomposition, cfg, "expansion")
}

/// Star plans for a subdivision: one star per branch vertex whose leaves
/// are the *first* interior of every incident path, colored by that path's
/// first edge.
fn subdivision_star_plans(built: &BuiltSubdivision) -> Vec<StarPlan> {
    let h = &built.graph;
    built
        .branch_vertices
        .iter()
        .map(|&b| {
            let mut leaves = Vec::new();
            for seq in &built.decomposition.paths {
                let len = seq.len();
                if seq[0] == b {
                    let leaf = seq[1];
                    let color = h.edge_color(b, leaf).expect("path edge exists");
                    leaves.push((leaf, color));
                }
                if seq[len - 1] == b {
                    let leaf = seq[len - 2];
                    let color = h.edge_color(b, leaf).expect("path edge exists");
                    leaves.push((leaf, color));
                }
            }
            StarPlan { center: b, leaves }
        })
        .collect()
}

/// Full jumbled-route pipeline for a subdivision target. Derives the
/// goodness budget from the jumbledness certificate (`s_real = 2 sqrt(t)
/// beta / p`, integer uses floored, `D = max(mono degree, 3)`), checks the
/// route's hypotheses (`8/l < c`, the star-stage bounds, the size
/// hypothesis), carves, embeds a star at every branch vertex with centers
/// chosen by minimum monochromatic degree, marks the centers exhausted, and
/// connects the stars leaf-to-leaf along each path's *inner* colors. The
/// given config supplies mode, connect policy, seed, caps, and enforcement;
/// its goodness parameters are replaced by the derived ones.
pub fn embed_subdivision_jumbled(
    f: &GraphFamily,
    built: &BuiltSubdivision,
    c: f64,
    jp: &JumbledParams,
    cfg_in: &EngineConfig,
) -> Result<PipelineRun, BootstrapError> {
    let h = &built.graph;
    let (s_real, s_int) = star_params(f.t(), jp);
    let d = h.mono_max_degree().max(3);
    let params = GoodnessParams::new(s_int, d)?;
    let cfg = EngineConfig {
        params,
        ..cfg_in.clone()
    };
    let mut advisories = Vec::new();
    let mut provenance = Vec::new();
    provenance.push(format!(
        "jumbled route: s_real = {s_real:.4}, s = {s_int}, D = {d} (p = {}, beta = {})",
        jp.p, jp.beta
    ));

    if !(c > 0.0 && c < 1.0) {
        return Err(BootstrapError::InequalityFailed {
            name: "0 < c < 1",
            detail: format!("got c = {c}"),
        });
    }
    let min_length = built
        .decomposition
        .paths
        .iter()
        .map(|seq| seq.len() - 1)
        .min()
        .unwrap_or(0);
    check_hypothesis(
        min_length > 0 && c > 8.0 / min_length as f64,
        "8/l < c",
        format!("shortest path length l = {min_length}, 8/l = {:.3}, c = {c}",
            if min_length > 0 { 8.0 / min_length as f64 } else { f64::INFINITY }),
        cfg.enforcement,
        &mut advisories,
    )?;
    check_hypothesis(
        (h.m() as f64) <= f.n() as f64 - 6.0 * s_real * d as f64,
        "|V(H)| <= n - 6 s D",
        format!(
            "|V(H)| = {}, n - 6 s D = {:.3}",
            h.m(),
            f.n() as f64 - 6.0 * s_real * d as f64
        ),
        cfg.enforcement,
        &mut advisories,
    )?;

    // Inner connections run between already-placed star leaves, so their
    // guaranteed length budget is the path length minus the two attachment
    // edges.
    let k = tree_height(s_int, d)?;
    let required_inner = 2 * k + 3;
    for seq in &built.decomposition.paths {
        let inner = seq.len() - 1 - 2;
        if inner < 3 {
            return Err(BootstrapError::InnerPathTooShort {
                inner,
                required: 3,
            });
        }
        if inner < required_inner {
            match cfg.connect_policy {
                crate::engine::ConnectPolicy::Strict => {
                    return Err(BootstrapError::InnerPathTooShort {
                        inner,
                        required: required_inner,
                    })
                }
                crate::engine::ConnectPolicy::Clamped => advisories.push(format!(
                    "inner connection of length {inner} is below the guaranteed {required_inner}; scaffolding height clamped"
                )),
            }
        }
    }

    let carved = carve_regions(f, &[], params, cfg.enforcement, &cfg.caps)?;
    provenance.push(format!(
        "carved regions: |U_0| = {}, |V'| = {}, |Y_0| = {}, |W| = {}",
        carved.regions.blocker.len(),
        carved.regions.v_prime.len(),
        carved.regions.y0.len(),
        carved.regions.w.len()
    ));

    let plans = subdivision_star_plans(built);
    let mut emb = Embedding::with_reserved(&carved.family, h.m());
    place_stars(
        &mut emb,
        &carved.w_local,
        &plans,
        c,
        jp,
        s_real,
        carved.n_original,
        &cfg,
        &mut advisories,
        &mut provenance,
    )?;

    // Branch centers have reached their full target degree; freezing them
    // out of the candidate pool keeps every later extension away from them.
    for plan in &plans {
        let host = emb
            .map_of(plan.center)
            .expect("center was placed by the star stage");
        emb.exclude_host(host);
    }
    provenance.push(format!("marked {} branch centers exhausted", plans.len()));

    for (path_index, seq) in built.decomposition.paths.iter().enumerate() {
        let len = seq.len();
        let a = seq[1];
        let b = seq[len - 2];
        let colors: Vec<usize> = seq
            .windows(2)
            .map(|w| h.edge_color(w[0], w[1]).expect("path edge exists"))
            .collect();
        let inner = PathPattern {
            colors: colors[1..colors.len() - 1].to_vec(),
        };
        let interior: Vec<usize> = seq[2..len - 2].to_vec();
        emb.connect_path(a, b, &inner, Some(&interior), &cfg)?;
        provenance.push(format!(
            "connected path {path_index} between leaves {a} and {b} ({} inner edges)",
            inner.colors.len()
        ));
    }

    finish_run(&carved, &emb, &cfg, advisories, provenance)
}
