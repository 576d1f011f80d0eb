//! Probe: criterion 7 manual drive, criterion 8 oracle boundary cost,
//! criterion 9 spot exactness.
use rollback::certify::CertifyCaps;
use rollback::engine::{Embedding, EngineConfig, VerifyMode};
use rollback::ffdist::{build_distance_graph, thresholds, DistanceGraphSpec};
use rollback::graph::{Graph, GraphFamily};
use rollback::target::{build_subdivision, PathPattern, PatternSource};
use std::collections::BTreeSet;
use std::time::Instant;

fn oracle_gamma(f: &GraphFamily, x: &[(usize, usize)]) -> BTreeSet<usize> {
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

fn oracle_is_joined(f: &GraphFamily, s: usize) -> bool {
    let pairs: Vec<(usize, usize)> = (0..f.n())
        .flat_map(|v| (0..f.t()).map(move |c| (v, c)))
        .collect();
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
    visit(f, &pairs, s, 0, &mut Vec::new())
}

fn main() {
    // --- criterion 7 manual drive ---
    let f = GraphFamily::new(vec![Graph::random(40, 0.99, 1), Graph::random(40, 0.99, 2)])
        .unwrap();
    let alt = PathPattern {
        colors: vec![0, 1, 0, 1, 0],
    };
    let built = build_subdivision(
        3,
        &[5, 5, 5],
        &PatternSource::Explicit(vec![alt.clone(), alt.clone(), alt.clone()]),
    )
    .unwrap();
    let cfg = EngineConfig::exact(2, 3).unwrap();
    let t0 = Instant::now();
    let mut emb = Embedding::with_reserved(&f, built.graph.m());
    for (i, &b) in built.decomposition.base_vertices.iter().enumerate() {
        emb.place_root(Some(b), i, &cfg).unwrap();
        let rep = emb
            .verify_good_bounded(3, 4, VerifyMode::Exact, &cfg.caps)
            .unwrap();
        assert!(rep.passed());
    }
    for seq in &built.decomposition.paths {
        let colors: Vec<usize> = seq
            .windows(2)
            .map(|w| built.graph.edge_color(w[0], w[1]).unwrap())
            .collect();
        let interior: Vec<usize> = seq[1..seq.len() - 1].to_vec();
        emb.connect_path(
            seq[0],
            *seq.last().unwrap(),
            &PathPattern { colors },
            Some(&interior),
            &cfg,
        )
        .unwrap();
        let rep = emb
            .verify_good_bounded(3, 4, VerifyMode::Exact, &cfg.caps)
            .unwrap();
        assert!(rep.passed());
    }
    emb.revalidate().unwrap();
    println!(
        "c7 drive ok ({:?}): {} live, {} steps",
        t0.elapsed(),
        emb.target().alive_count(),
        emb.steps().len()
    );

    // --- criterion 8 oracle boundary ---
    let g = build_distance_graph(5, 2, 1).unwrap();
    let df = GraphFamily::single(g.graph.clone());
    let t0 = Instant::now();
    let j10 = oracle_is_joined(&df, 10);
    let t10 = t0.elapsed();
    let t0 = Instant::now();
    let j11 = oracle_is_joined(&df, 11);
    let t11 = t0.elapsed();
    println!("c8 oracle: joined(10)={j10} ({t10:?}), joined(11)={j11} ({t11:?})");

    // --- criterion 9 spot ---
    let spec = DistanceGraphSpec::new(3, 3, vec![1]).unwrap();
    let rep = thresholds(&spec, 0.5, &CertifyCaps::default()).unwrap();
    println!(
        "c9 spot: c_small = {:?} (== 648: {}), ell_small = {}, ell_large = {}, c_large = {:?}",
        rep.c_small,
        rep.c_small == 648.0,
        rep.ell_small,
        rep.ell_large,
        rep.c_large
    );
}
