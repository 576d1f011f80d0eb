//! Certification of the pseudo-randomness hypotheses: `s`-joinedness
//! (exactly, by exhaustive scan with a complement criterion) and
//! `(p, β)`-jumbledness (exhaustively on small hosts, spectrally for regular
//! graphs, by sampling otherwise).
//!
//! Both properties are evaluated on the auxiliary bipartite view of a family:
//! left sets `X ⊆ V x [t]`, right sets `Y ⊆ V`, and
//! `e(X, Y) = Σ_{(v,i) in X} |Γ_{G_i}(v) ∩ Y|` (ordered pairs).

use crate::bitset::BitSet;
use crate::graph::{ColoredVertexSet, Graph, GraphFamily};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from certification routines.
#[derive(Debug, Error, PartialEq)]
pub enum CertifyError {
    #[error("joinedness needs 1 <= s <= n, got s = {s} with n = {n}")]
    JoinedOutOfRange { s: usize, n: usize },
    #[error("exhaustive joinedness scan would visit {combinations} size-{s} sets, over the cap {cap}")]
    JoinedCapExceeded {
        s: usize,
        combinations: u128,
        cap: u128,
    },
    #[error("min_joined cap {cap} must satisfy 1 <= cap <= n = {n}")]
    MinJoinedCapOutOfRange { cap: usize, n: usize },
    #[error(
        "exhaustive jumbledness needs n*t <= {left_cap} and n <= {right_cap}, got n*t = {nt}, n = {n}"
    )]
    JumbledLimitExceeded {
        nt: usize,
        n: usize,
        left_cap: usize,
        right_cap: usize,
    },
    #[error("spectral certification requires a regular graph; degrees range from {min_deg} to {max_deg}")]
    NonRegular { min_deg: usize, max_deg: usize },
    #[error("spectral certification is capped at {cap} vertices, got {n}")]
    SpectralTooLarge { n: usize, cap: usize },
    #[error("edge density p = {p} is outside (0, 1); the jumbledness parameters are undefined")]
    DegenerateDensity { p: f64 },
    #[error("jumbledness parameters need 0 < p < 1 <= beta, got p = {p}, beta = {beta}")]
    InvalidParams { p: f64, beta: f64 },
    #[error("family combination requires one common p: members report p = {p_first} and p = {p_other} (tolerance 1e-12)")]
    MismatchedDensities { p_first: f64, p_other: f64 },
}

/// The `(p, β)` pair of the jumbledness inequality, with `0 < p < 1 <= β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumbledParams {
    pub p: f64,
    pub beta: f64,
}

impl JumbledParams {
    /// Validates `0 < p < 1 <= beta`.
    pub fn new(p: f64, beta: f64) -> Result<Self, CertifyError> {
        if !(p > 0.0 && p < 1.0 && beta >= 1.0) {
            return Err(CertifyError::InvalidParams { p, beta });
        }
        Ok(JumbledParams { p, beta })
    }
}

/// Verdict of a certification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// A concrete violating pair: `x` is a set of (vertex, color) pairs, `y` a
/// vertex set; for jumbledness failures the ordered-pair count and the
/// normalized deficit are included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<(usize, usize)>,
    pub y: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deficit: Option<f64>,
}

/// Outcome of a certification run. `method` records how the verdict was
/// obtained (`"exhaustive"`, `"sampled"`, `"spectral"`); sampled runs are
/// evidence, not proofs. An exhaustive failure always carries a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub verdict: Verdict,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Resource caps for the exhaustive and spectral routes. The CLI layer maps
/// environment-variable overrides onto this struct; the library itself never
/// reads the environment.
#[derive(Debug, Clone, Copy)]
pub struct CertifyCaps {
    /// Max number of size-`s` left sets an exhaustive joinedness scan may visit.
    pub joined_subsets: u128,
    /// Max left universe (`n*t`) for exhaustive jumbledness.
    pub jumbled_left_bits: usize,
    /// Max right universe (`n`) for exhaustive jumbledness.
    pub jumbled_right_bits: usize,
    /// Max vertex count for dense spectral certification.
    pub spectral_max_n: usize,
}

impl Default for CertifyCaps {
    fn default() -> Self {
        CertifyCaps {
            joined_subsets: 100_000_000,
            jumbled_left_bits: 14,
            jumbled_right_bits: 14,
            spectral_max_n: 5000,
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc == u128::MAX {
            return u128::MAX;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Joinedness
// ---------------------------------------------------------------------------

/// Decides whether the family is `s`-joined: every `X ⊆ V x [t]` with
/// `|X| = s` must satisfy `|V ∖ Γ(X)| < s`. Equivalent to requiring
/// `e(X, Y) > 0` for all `|X|, |Y| >= s` on the auxiliary bipartite graph,
/// since `e(X, Y) = 0` forces `Y ⊆ V ∖ Γ(X)`.
///
/// On pass, `measured` is the largest `|V ∖ Γ(X)|` over the scan; on fail the
/// witness is the lexicographically first violating `X` (flat color-major
/// pair order) together with `Y = V ∖ Γ(X)`.
pub fn is_joined(f: &GraphFamily, s: usize, caps: &CertifyCaps) -> Result<CertReport, CertifyError> {
    let n = f.n();
    let nt = f.pair_count();
    if s == 0 || s > n {
        return Err(CertifyError::JoinedOutOfRange { s, n });
    }
    let combos = binomial(nt, s);
    if combos > caps.joined_subsets {
        return Err(CertifyError::JoinedCapExceeded {
            s,
            combinations: combos,
            cap: caps.joined_subsets,
        });
    }

    // Row lookup per flat pair id (color-major).
    let rows: Vec<&BitSet> = (0..nt)
        .map(|id| {
            let (v, c) = f.pair_from_id(id);
            f.graph(c).neighbors(v)
        })
        .collect();

    // Depth-first lexicographic enumeration of size-s subsets with an
    // incremental union of neighborhood rows per level.
    let mut stack_union: Vec<BitSet> = vec![BitSet::new(n); s + 1];
    let mut chosen: Vec<usize> = Vec::with_capacity(s);
    let mut worst: usize = 0;

    fn visit(
        rows: &[&BitSet],
        nt: usize,
        s: usize,
        start: usize,
        depth: usize,
        stack_union: &mut [BitSet],
        chosen: &mut Vec<usize>,
        worst: &mut usize,
    ) -> Option<Vec<usize>> {
        if depth == s {
            let miss = stack_union[depth].nbits() - stack_union[depth].len();
            if miss > *worst {
                *worst = miss;
            }
            if miss >= s {
                return Some(chosen.clone());
            }
            return None;
        }
        // Need nt - id >= s - depth remaining ids.
        let last = nt - (s - depth);
        for id in start..=last {
            let (head, tail) = stack_union.split_at_mut(depth + 1);
            tail[0].clone_from(&head[depth]);
            tail[0].union_with(rows[id]);
            chosen.push(id);
            if let Some(w) = visit(rows, nt, s, id + 1, depth + 1, stack_union, chosen, worst) {
                return Some(w);
            }
            chosen.pop();
        }
        None
    }

    let witness_ids = visit(
        &rows,
        nt,
        s,
        0,
        0,
        &mut stack_union,
        &mut chosen,
        &mut worst,
    );

    match witness_ids {
        None => Ok(CertReport {
            verdict: Verdict::Pass,
            method: "exhaustive".into(),
            measured: Some(worst as f64),
            witness: None,
        }),
        Some(ids) => {
            let mut x = ColoredVertexSet::new(n, f.t());
            for id in &ids {
                let (v, c) = f.pair_from_id(*id);
                x.insert(v, c);
            }
            let mut gamma = f.family_neighborhood(&x);
            gamma.complement();
            let y = gamma.to_vec();
            let miss = y.len();
            Ok(CertReport {
                verdict: Verdict::Fail,
                method: "exhaustive".into(),
                measured: Some(miss as f64),
                witness: Some(Witness {
                    x: x.to_sorted_pairs(),
                    y,
                    e: None,
                    deficit: None,
                }),
            })
        }
    }
}

/// Result of [`min_joined`]: either the smallest passing `s`, or the
/// information that every `s <= cap` fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinJoined {
    Value(usize),
    ExceedsCap { cap: usize },
}

/// Smallest `s <= cap` for which [`is_joined`] passes. Joinedness is monotone
/// in `s` (a superset of a size-`s` set covers at least as much), so a linear
/// scan from 1 finds the minimum.
pub fn min_joined(
    f: &GraphFamily,
    cap: usize,
    caps: &CertifyCaps,
) -> Result<MinJoined, CertifyError> {
    if cap == 0 || cap > f.n() {
        return Err(CertifyError::MinJoinedCapOutOfRange { cap, n: f.n() });
    }
    for s in 1..=cap {
        if is_joined(f, s, caps)?.passed() {
            return Ok(MinJoined::Value(s));
        }
    }
    Ok(MinJoined::ExceedsCap { cap })
}

// ---------------------------------------------------------------------------
// Jumbledness
// ---------------------------------------------------------------------------

/// How [`jumbled_check`] explores the pair space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumbledMode {
    /// Every nonempty pair `(X, Y)` — a proof, capped by [`CertifyCaps`].
    Exhaustive,
    /// Seeded random pairs — evidence only.
    Sampled { samples: u64, seed: u64 },
}

/// Per-(|X|,|Y|) extremes of the ordered-pair count over the scan.
struct PairExtremes {
    max_nt: usize,
    max_n: usize,
    min_e: Vec<i64>,
    max_e: Vec<i64>,
}

impl PairExtremes {
    fn new(max_nt: usize, max_n: usize) -> Self {
        let cells = (max_nt + 1) * (max_n + 1);
        PairExtremes {
            max_nt,
            max_n,
            min_e: vec![i64::MAX; cells],
            max_e: vec![i64::MIN; cells],
        }
    }

    #[inline]
    fn idx(&self, cx: usize, cy: usize) -> usize {
        cx * (self.max_n + 1) + cy
    }

    #[inline]
    fn update(&mut self, cx: usize, cy: usize, e: i64) {
        let i = cx * (self.max_n + 1) + cy;
        if e < self.min_e[i] {
            self.min_e[i] = e;
        }
        if e > self.max_e[i] {
            self.max_e[i] = e;
        }
    }

    /// Maximum normalized deficit `|e - p cx cy| / sqrt(cx cy)` over all
    /// visited cells.
    fn max_deficit(&self, p: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for cx in 1..=self.max_nt {
            for cy in 1..=self.max_n {
                let i = self.idx(cx, cy);
                if self.min_e[i] == i64::MAX {
                    continue;
                }
                let expected = p * (cx as f64) * (cy as f64);
                let norm = ((cx * cy) as f64).sqrt();
                let lo = (self.min_e[i] as f64 - expected).abs() / norm;
                let hi = (self.max_e[i] as f64 - expected).abs() / norm;
                worst = worst.max(lo).max(hi);
            }
        }
        worst
    }
}

/// Checks the jumbledness inequality `|e(X,Y) - p|X||Y|| <= β sqrt(|X||Y|)`
/// over the auxiliary bipartite view. Exhaustive mode scans every nonempty
/// pair and is a proof; sampled mode is labeled evidence. Empty `X` or `Y`
/// satisfy the inequality trivially and are excluded. `measured` always
/// carries the maximum normalized deficit seen.
pub fn jumbled_check(
    f: &GraphFamily,
    params: JumbledParams,
    mode: JumbledMode,
    caps: &CertifyCaps,
) -> Result<CertReport, CertifyError> {
    JumbledParams::new(params.p, params.beta)?;
    match mode {
        JumbledMode::Exhaustive => jumbled_exhaustive(f, params, caps),
        JumbledMode::Sampled { samples, seed } => Ok(jumbled_sampled(f, params, samples, seed)),
    }
}

fn jumbled_exhaustive(
    f: &GraphFamily,
    params: JumbledParams,
    caps: &CertifyCaps,
) -> Result<CertReport, CertifyError> {
    let n = f.n();
    let nt = f.pair_count();
    if nt > caps.jumbled_left_bits || n > caps.jumbled_right_bits || nt >= 64 || n >= 64 {
        return Err(CertifyError::JumbledLimitExceeded {
            nt,
            n,
            left_cap: caps.jumbled_left_bits.min(63),
            right_cap: caps.jumbled_right_bits.min(63),
        });
    }

    // Row masks per flat pair id, as single words (n < 64).
    let row_mask: Vec<u64> = (0..nt)
        .map(|id| {
            let (v, c) = f.pair_from_id(id);
            let mut m = 0u64;
            for w in f.graph(c).neighbors(v).iter() {
                m |= 1 << w;
            }
            m
        })
        .collect();

    let mut extremes = PairExtremes::new(nt, n);
    let mut h = vec![0i64; nt];
    for y_mask in 1u64..(1u64 << n) {
        let cy = y_mask.count_ones() as usize;
        for (id, hm) in h.iter_mut().enumerate() {
            *hm = (row_mask[id] & y_mask).count_ones() as i64;
        }
        // Gray-code walk over X masks: step i toggles bit tz(i).
        let mut e: i64 = 0;
        let mut cx: usize = 0;
        let mut gray_prev: u64 = 0;
        for i in 1u64..(1u64 << nt) {
            let gray = i ^ (i >> 1);
            let toggled = (gray ^ gray_prev).trailing_zeros() as usize;
            if gray & (1 << toggled) != 0 {
                e += h[toggled];
                cx += 1;
            } else {
                e -= h[toggled];
                cx -= 1;
            }
            gray_prev = gray;
            extremes.update(cx, cy, e);
        }
    }

    let measured = extremes.max_deficit(params.p);
    if measured <= params.beta {
        return Ok(CertReport {
            verdict: Verdict::Pass,
            method: "exhaustive".into(),
            measured: Some(measured),
            witness: None,
        });
    }

    // Second deterministic pass to extract the first violating pair in
    // (Y ascending, Gray-order X) order.
    for y_mask in 1u64..(1u64 << n) {
        let cy = y_mask.count_ones() as usize;
        for (id, hm) in h.iter_mut().enumerate() {
            *hm = (row_mask[id] & y_mask).count_ones() as i64;
        }
        let mut e: i64 = 0;
        let mut cx: usize = 0;
        let mut gray_prev: u64 = 0;
        for i in 1u64..(1u64 << nt) {
            let gray = i ^ (i >> 1);
            let toggled = (gray ^ gray_prev).trailing_zeros() as usize;
            if gray & (1 << toggled) != 0 {
                e += h[toggled];
                cx += 1;
            } else {
                e -= h[toggled];
                cx -= 1;
            }
            gray_prev = gray;
            if cx == 0 {
                continue;
            }
            let expected = params.p * (cx as f64) * (cy as f64);
            let deficit = (e as f64 - expected).abs() / ((cx * cy) as f64).sqrt();
            if deficit > params.beta {
                let x_pairs: Vec<(usize, usize)> = (0..nt)
                    .filter(|&b| gray & (1 << b) != 0)
                    .map(|b| {
                        let (v, c) = f.pair_from_id(b);
                        (v, c)
                    })
                    .collect();
                let mut x_sorted = x_pairs;
                x_sorted.sort_unstable();
                let y: Vec<usize> = (0..n).filter(|&w| y_mask & (1 << w) != 0).collect();
                return Ok(CertReport {
                    verdict: Verdict::Fail,
                    method: "exhaustive".into(),
                    measured: Some(measured),
                    witness: Some(Witness {
                        x: x_sorted,
                        y,
                        e: Some(e as u64),
                        deficit: Some(deficit),
                    }),
                });
            }
        }
    }
    unreachable!("measured deficit exceeded beta but no violating pair was found");
}

fn jumbled_sampled(f: &GraphFamily, params: JumbledParams, samples: u64, seed: u64) -> CertReport {
    let n = f.n();
    let nt = f.pair_count();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pair_ids: Vec<usize> = (0..nt).collect();
    let vert_ids: Vec<usize> = (0..n).collect();

    let mut worst: f64 = 0.0;
    let mut worst_witness: Option<Witness> = None;
    let mut x = ColoredVertexSet::new(n, f.t());
    let mut y = BitSet::new(n);
    let mut scratch_pairs = pair_ids.clone();
    let mut scratch_verts = vert_ids;

    for _ in 0..samples {
        let cx = rng.gen_range(1..=nt);
        let cy = rng.gen_range(1..=n);
        scratch_pairs.shuffle(&mut rng);
        scratch_verts.shuffle(&mut rng);
        x.clear();
        for &id in &scratch_pairs[..cx] {
            let (v, c) = f.pair_from_id(id);
            x.insert(v, c);
        }
        y.clear();
        for &v in &scratch_verts[..cy] {
            y.insert(v);
        }
        let mut e: u64 = 0;
        for (v, c) in x.iter() {
            e += f.graph(c).neighbors(v).intersection_len(&y) as u64;
        }
        let expected = params.p * (cx as f64) * (cy as f64);
        let deficit = (e as f64 - expected).abs() / ((cx * cy) as f64).sqrt();
        if deficit > worst {
            worst = deficit;
            if deficit > params.beta {
                worst_witness = Some(Witness {
                    x: x.to_sorted_pairs(),
                    y: y.to_vec(),
                    e: Some(e),
                    deficit: Some(deficit),
                });
            }
        }
    }

    CertReport {
        verdict: if worst <= params.beta {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        method: "sampled".into(),
        measured: Some(worst),
        witness: worst_witness,
    }
}

// ---------------------------------------------------------------------------
// Spectral route
// ---------------------------------------------------------------------------

/// Jumbledness parameters of a regular graph from its adjacency spectrum:
/// `p = d/n` and `β = max(λ, 1)` where `λ` is the largest absolute
/// nontrivial eigenvalue (the top eigenvalue `d` is removed once). Dense
/// symmetric eigendecomposition; documented tolerance `1e-9`.
pub fn spectral_jumbled(g: &Graph, caps: &CertifyCaps) -> Result<JumbledParams, CertifyError> {
    let n = g.n();
    if n > caps.spectral_max_n {
        return Err(CertifyError::SpectralTooLarge {
            n,
            cap: caps.spectral_max_n,
        });
    }
    let d = g.regular_degree().ok_or_else(|| {
        let degs: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
        CertifyError::NonRegular {
            min_deg: degs.iter().copied().min().unwrap_or(0),
            max_deg: degs.iter().copied().max().unwrap_or(0),
        }
    })?;
    let p = d as f64 / n as f64;
    if !(p > 0.0 && p < 1.0) {
        return Err(CertifyError::DegenerateDensity { p });
    }

    let mut eigs = adjacency_spectrum(g);
    // Remove one copy of the trivial eigenvalue d (the largest).
    eigs.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    debug_assert!((eigs[0] - d as f64).abs() <= 1e-9 * (1.0 + d as f64));
    let lambda = eigs[1..]
        .iter()
        .fold(0.0f64, |acc, &ev| acc.max(ev.abs()));
    Ok(JumbledParams {
        p,
        beta: lambda.max(1.0),
    })
}

/// Eigenvalues of the adjacency matrix, unsorted (dense symmetric solver).
pub fn adjacency_spectrum(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in g.neighbors(u).iter() {
            m[(u, v)] = 1.0;
        }
    }
    let eig = m.symmetric_eigen();
    eig.eigenvalues.iter().copied().collect()
}

// ---------------------------------------------------------------------------
// Family combination and the joined/jumbled bridge
// ---------------------------------------------------------------------------

/// Combines per-member jumbledness parameters into family-level parameters
/// `(p, β_max · sqrt(t))`. All members must report one common `p` (within
/// `1e-12`): mixing densities has no supporting argument, so it is rejected.
pub fn family_jumbled(params_per_graph: &[JumbledParams]) -> Result<JumbledParams, CertifyError> {
    let first = params_per_graph
        .first()
        .ok_or(CertifyError::InvalidParams { p: 0.0, beta: 0.0 })?;
    JumbledParams::new(first.p, first.beta)?;
    for member in &params_per_graph[1..] {
        JumbledParams::new(member.p, member.beta)?;
        if (member.p - first.p).abs() > 1e-12 {
            return Err(CertifyError::MismatchedDensities {
                p_first: first.p,
                p_other: member.p,
            });
        }
    }
    let beta_max = params_per_graph
        .iter()
        .fold(0.0f64, |acc, q| acc.max(q.beta));
    let t = params_per_graph.len() as f64;
    Ok(JumbledParams {
        p: first.p,
        beta: beta_max * t.sqrt(),
    })
}

/// The smallest `s` for which a `(p, β)`-jumbled family is guaranteed
/// `s`-joined: any integer `s > β/p`, i.e. `⌊β/p⌋ + 1`.
pub fn joined_from_jumbled(params: JumbledParams) -> usize {
    (params.beta / params.p).floor() as usize + 1
}
