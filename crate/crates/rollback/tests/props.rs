//! Property tests: seeded random instances compared against the brute-force
//! oracles in `common`, plus structural invariants of the engine and the
//! certifiers.

mod common;

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rollback::certify::{
    is_joined, jumbled_check, min_joined, spectral_jumbled, CertifyCaps, JumbledMode,
    JumbledParams, MinJoined, Verdict,
};
use rollback::engine::{Embedding, EngineCaps, EngineConfig, VerifyMode};
use rollback::graph::{ColoredVertexSet, Graph, GraphFamily};
use std::collections::BTreeSet;

/// A random instance for the residual properties: a host family, a live
/// engine embedding grown inside it, and the degree budget used.
fn arbitrary_instance(
    seed: u64,
) -> Option<(GraphFamily, usize, usize, StdRng)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(6..=14);
    let t = rng.gen_range(1..=3);
    let p = rng.gen_range(0.4..0.95);
    let f = random_family(&mut rng, n, t, p);
    let d = rng.gen_range(2..=4);
    let s = rng.gen_range(1..=2);
    Some((f, s, d, rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// The engine's maintained residual equals the definition, term by term.
    #[test]
    fn engine_residual_matches_the_definition(seed in any::<u64>()) {
        let (f, s, d, mut rng) = arbitrary_instance(seed).unwrap();
        let Some(emb) = random_embedding(&f, &mut rng, 8, s, d) else { return Ok(()) };
        let st = OracleState::read_back(&emb);
        for _ in 0..12 {
            let x = random_pair_set(&mut rng, f.n(), f.t(), 6);
            let cvs = ColoredVertexSet::from_pairs(f.n(), f.t(), &x).unwrap();
            prop_assert_eq!(emb.residual(d, &cvs), oracle_residual(&f, &st, d, &x));
        }
    }

    /// Extending one leaf changes every residual by exactly
    /// `1[(φ(w), r) ∈ X] − 1[a ∈ Γ(X)]`: the oracle recomputation, the
    /// engine's predicted delta, and the raw indicator arithmetic agree.
    #[test]
    fn extension_delta_is_the_two_indicator_formula(seed in any::<u64>()) {
        let (f, s, d, mut rng) = arbitrary_instance(seed).unwrap();
        let Some(emb) = random_embedding(&f, &mut rng, 8, s, d) else { return Ok(()) };
        let st = OracleState::read_back(&emb);
        let Some((w, r, a)) = random_legal_extension(&f, &emb, &mut rng, d) else { return Ok(()) };
        let w_host = emb.map_of(w).unwrap();
        let fresh = st.map.keys().max().unwrap() + 1;
        let after = st.extended(w, r, a, fresh);
        for _ in 0..12 {
            let x = random_pair_set(&mut rng, f.n(), f.t(), 6);
            let formula = oracle_indicator_delta(&f, w_host, r, a, &x);
            let recomputed =
                oracle_residual(&f, &after, d, &x) - oracle_residual(&f, &st, d, &x);
            prop_assert_eq!(recomputed, formula);
            let cvs = ColoredVertexSet::from_pairs(f.n(), f.t(), &x).unwrap();
            prop_assert_eq!(emb.delta_residual(w, r, a, d, &cvs).unwrap(), formula);
        }
    }

    /// `R(X ∪ Y) + R(X ∩ Y) ≤ R(X) + R(Y)`: neighborhoods are submodular and
    /// the linear terms split exactly.
    #[test]
    fn residuals_are_submodular(seed in any::<u64>()) {
        let (f, s, d, mut rng) = arbitrary_instance(seed).unwrap();
        let Some(emb) = random_embedding(&f, &mut rng, 8, s, d) else { return Ok(()) };
        let st = OracleState::read_back(&emb);
        for _ in 0..8 {
            let x: BTreeSet<(usize, usize)> =
                random_pair_set(&mut rng, f.n(), f.t(), 6).into_iter().collect();
            let y: BTreeSet<(usize, usize)> =
                random_pair_set(&mut rng, f.n(), f.t(), 6).into_iter().collect();
            let union: Vec<_> = x.union(&y).copied().collect();
            let inter: Vec<_> = x.intersection(&y).copied().collect();
            let x: Vec<_> = x.into_iter().collect();
            let y: Vec<_> = y.into_iter().collect();
            let r = |set: &[(usize, usize)]| oracle_residual(&f, &st, d, set);
            prop_assert!(r(&union) + r(&inter) <= r(&x) + r(&y));
            let e = |set: &[(usize, usize)]| {
                emb.residual(d, &ColoredVertexSet::from_pairs(f.n(), f.t(), set).unwrap())
            };
            prop_assert!(e(&union) + e(&inter) <= e(&x) + e(&y));
        }
    }

    /// Adding a target edge between already-embedded slots never decreases
    /// any residual: degrees rise and parent pairs retire, both help.
    #[test]
    fn adding_edges_never_decreases_residuals(seed in any::<u64>()) {
        let (f, s, d, mut rng) = arbitrary_instance(seed).unwrap();
        let Some(mut emb) = random_embedding(&f, &mut rng, 8, s, d) else { return Ok(()) };
        let cfg = EngineConfig::exact(s, d).unwrap().with_mode(VerifyMode::BestEffort);
        let alive = emb.target().alive_ids();
        // Find a legal extra edge.
        let mut choice = None;
        'outer: for &a in &alive {
            for &b in &alive {
                for r in 0..f.t() {
                    if a < b
                        && !emb.target().has_edge(a, b)
                        && emb.target().deg_color(a, r) < d
                        && emb.target().deg_color(b, r) < d
                        && f.graph(r).has_edge(emb.map_of(a).unwrap(), emb.map_of(b).unwrap())
                    {
                        choice = Some((a, b, r));
                        break 'outer;
                    }
                }
            }
        }
        let Some((a, b, r)) = choice else { return Ok(()) };
        let sets: Vec<Vec<(usize, usize)>> = (0..10)
            .map(|_| random_pair_set(&mut rng, f.n(), f.t(), 6))
            .collect();
        let before: Vec<i64> = sets
            .iter()
            .map(|x| emb.residual(d, &ColoredVertexSet::from_pairs(f.n(), f.t(), x).unwrap()))
            .collect();
        emb.add_edge(a, b, r, &cfg).unwrap();
        let st = OracleState::read_back(&emb);
        for (x, before_r) in sets.iter().zip(before) {
            let after_e =
                emb.residual(d, &ColoredVertexSet::from_pairs(f.n(), f.t(), x).unwrap());
            prop_assert!(after_e >= before_r);
            prop_assert_eq!(after_e, oracle_residual(&f, &st, d, x));
        }
    }

    /// Removing any removable leaf from a bounded-good embedding keeps it
    /// bounded-good, and the engine state still matches the oracle.
    #[test]
    fn leaf_removal_preserves_bounded_goodness(seed in any::<u64>()) {
        let (f, s, d, mut rng) = arbitrary_instance(seed).unwrap();
        let Some(emb) = random_embedding(&f, &mut rng, 8, s, d) else { return Ok(()) };
        let caps = EngineCaps::default();
        let bound = 2 * s;
        if !emb.verify_good_bounded(d, bound, VerifyMode::Exact, &caps).unwrap().passed() {
            return Ok(());
        }
        let cfg = EngineConfig::exact(s, d).unwrap();
        let st = OracleState::read_back(&emb);
        for leaf in st.removable() {
            let mut trial = emb.clone();
            trial.remove_leaf(leaf, &cfg).unwrap();
            prop_assert!(
                trial.verify_good_bounded(d, bound, VerifyMode::Exact, &caps).unwrap().passed(),
                "removing leaf {} broke goodness", leaf
            );
            let t_st = OracleState::read_back(&trial);
            prop_assert!(oracle_verify_good(&f, &t_st, d, bound.min(2)).is_none());
        }
    }

    /// The engine's exact goodness scan agrees with the brute-force scan
    /// from the definition, pass or fail, on small instances.
    #[test]
    fn exact_goodness_scan_matches_the_oracle(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(5..=10);
        let t = rng.gen_range(1..=2);
        let p = rng.gen_range(0.3..0.9);
        let f = random_family(&mut rng, n, t, p);
        let d = rng.gen_range(2..=3);
        let Some(emb) = random_embedding(&f, &mut rng, 6, 1, d) else { return Ok(()) };
        let st = OracleState::read_back(&emb);
        let bound = 2;
        let report = emb
            .verify_good_bounded(d, bound, VerifyMode::Exact, &EngineCaps::default())
            .unwrap();
        let oracle = oracle_verify_good(&f, &st, d, bound);
        prop_assert_eq!(report.passed(), oracle.is_none());
        if let Some(witness) = report.witness {
            // The engine's witness really violates the definition.
            prop_assert!(oracle_residual(&f, &st, d, &witness) < 0);
        }
    }

    /// Exact-mode extensions only ever produce embeddings that stay good at
    /// bound 2s.
    #[test]
    fn exact_mode_extensions_stay_good(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(8..=14);
        let t = rng.gen_range(1..=2);
        let p = rng.gen_range(0.6..0.95);
        let f = random_family(&mut rng, n, t, p);
        let s = 1;
        let d = 3;
        let cfg = EngineConfig::exact(s, d).unwrap();
        let mut emb = Embedding::new(&f);
        if emb.place_root(None, rng.gen_range(0..n), &cfg).is_err() {
            return Ok(());
        }
        for _ in 0..6 {
            let alive = emb.target().alive_ids();
            let w = alive[rng.gen_range(0..alive.len())];
            let r = rng.gen_range(0..t);
            if emb.target().deg_color(w, r) >= d {
                continue;
            }
            if emb.extend_vertex(w, r, None, &cfg).is_ok() {
                prop_assert!(emb
                    .verify_good_bounded(d, 2 * s, VerifyMode::Exact, &EngineCaps::default())
                    .unwrap()
                    .passed());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The joinedness certifier agrees with the plain combination scan, and
    /// failing reports carry a witness that really has a large missed set.
    #[test]
    fn joinedness_agrees_with_the_oracle(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(3..=6);
        let t = rng.gen_range(1..=2);
        let p_host = rng.gen_range(0.2..0.9);
        let f = random_family(&mut rng, n, t, p_host);
        let caps = CertifyCaps::default();
        for s in 1..=3usize.min(n * t) {
            let report = is_joined(&f, s, &caps).unwrap();
            let expected = oracle_is_joined(&f, s);
            prop_assert_eq!(report.passed(), expected, "s = {}", s);
            if let Some(w) = report.witness {
                prop_assert_eq!(w.x.len(), s);
                let gamma = oracle_gamma(&f, &w.x);
                let missed: Vec<usize> = (0..n).filter(|v| !gamma.contains(v)).collect();
                prop_assert!(missed.len() >= s, "witness misses too little");
                prop_assert_eq!(w.y, missed);
            }
        }
    }

    /// Joinedness is monotone in the scale, and the reported minimum is the
    /// exact threshold.
    #[test]
    fn min_joined_is_the_exact_threshold(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(3..=6);
        let t = rng.gen_range(1..=2);
        let p_host = rng.gen_range(0.2..0.9);
        let f = random_family(&mut rng, n, t, p_host);
        let caps = CertifyCaps::default();
        // Scales beyond the vertex count are vacuous; the library rejects
        // caps above n.
        let cap = 4usize.min(n);
        match min_joined(&f, cap, &caps).unwrap() {
            MinJoined::Value(s0) => {
                prop_assert_eq!(Some(s0), oracle_min_joined(&f, cap));
                for s in 1..s0 {
                    prop_assert!(!is_joined(&f, s, &caps).unwrap().passed());
                }
                // Monotone above the threshold (within the pair universe).
                for s in s0..=cap {
                    prop_assert!(is_joined(&f, s, &caps).unwrap().passed());
                }
            }
            MinJoined::ExceedsCap { cap: c } => {
                prop_assert_eq!(c, cap);
                prop_assert_eq!(oracle_min_joined(&f, cap), None);
            }
        }
    }

    /// The exhaustive jumbledness measurement equals the plain double subset
    /// scan, and verdicts follow the threshold.
    #[test]
    fn exhaustive_jumbledness_matches_the_oracle(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(3..=5);
        let t = rng.gen_range(1..=2);
        let p_host = rng.gen_range(0.2..0.9);
        let f = random_family(&mut rng, n, t, p_host);
        let p = rng.gen_range(0.05..0.95);
        let expected = oracle_beta(&f, p);
        let caps = CertifyCaps::default();
        // Claimed parameters always have beta >= 1.
        let loose = jumbled_check(
            &f,
            JumbledParams::new(p, (expected + 1e-6).max(1.0)).unwrap(),
            JumbledMode::Exhaustive,
            &caps,
        )
        .unwrap();
        prop_assert_eq!(loose.verdict, Verdict::Pass);
        prop_assert!((loose.measured.unwrap() - expected).abs() < 1e-9);
        if expected - 1e-6 >= 1.0 {
            let tight = jumbled_check(
                &f,
                JumbledParams::new(p, expected - 1e-6).unwrap(),
                JumbledMode::Exhaustive,
                &caps,
            )
            .unwrap();
            prop_assert_eq!(tight.verdict, Verdict::Fail);
            let w = tight.witness.unwrap();
            prop_assert!(w.deficit.unwrap() > expected - 1e-6);
        }
    }

    /// Spectrally measured parameters are never refuted by the exhaustive
    /// check (the mixing bound is sound) on regular graphs.
    #[test]
    fn spectral_parameters_survive_the_exhaustive_check(
        shape in 0..3usize,
        n in 4..=10usize,
    ) {
        let g = match shape {
            0 => Graph::cycle(n),
            1 => Graph::complete(n),
            _ => {
                // Circulant with offsets ±1, ±2: 4-regular once n ≥ 5.
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|v| [(v, (v + 1) % n), (v, (v + 2) % n)])
                    .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                Graph::from_edges(n, &edges).unwrap()
            }
        };
        let caps = CertifyCaps::default();
        let params = spectral_jumbled(&g, &caps).unwrap();
        let f = GraphFamily::single(g);
        let report = jumbled_check(&f, params, JumbledMode::Exhaustive, &caps).unwrap();
        prop_assert_eq!(report.verdict, Verdict::Pass, "measured {:?}", report.measured);
    }
}
