//! Colorful roll-back embedding of edge-colored graphs into families of
//! pseudo-random graphs.
//!
//! The library is organized around one workflow:
//!
//! 1. **Hosts** — [`graph`] represents simple graphs, families of graphs on a
//!    shared vertex set, and the auxiliary bipartite view used by every
//!    neighborhood argument.
//! 2. **Certification** — [`certify`] decides the pseudo-randomness
//!    hypotheses: `s`-joinedness (exactly) and `(p, β)`-jumbledness
//!    (exhaustively, spectrally for regular graphs, or by sampling).
//! 3. **Targets** — [`target`] builds the edge-colored rooted graphs to be
//!    embedded: trees, subdivisions and expansions of complete graphs, and
//!    path-constructible graphs.
//! 4. **Engine** — [`engine`] maintains an injective partial embedding
//!    together with the residual function `R(X, φ)` and extends or rolls it
//!    back one audited step at a time, keeping the embedding `(2s, D)`-good.
//! 5. **Bootstrap** — [`bootstrap`] finds the regions of the host where an
//!    initial embedding is automatically good, and drives the end-to-end
//!    pipelines (rooted forests, subdivisions, expansions, star forests).
//! 6. **Finite fields** — [`ffdist`] realizes distance graphs over `F_q^d`
//!    as a concrete host backend, with an independent character-sum route to
//!    their spectra.
//! 7. **Interchange** — [`io`] defines the JSON and DOT interchange formats
//!    shared with the CLI.

pub mod bitset;
pub mod bootstrap;
pub mod certify;
pub mod engine;
pub mod ffdist;
pub mod graph;
pub mod io;
pub mod target;

pub use bitset::BitSet;
pub use graph::{ColoredVertexSet, Graph, GraphFamily};
