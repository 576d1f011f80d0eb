//! JSON and DOT interchange for families, targets, pipeline runs, and
//! distance embeddings.
//!
//! Formats:
//! - Family JSON: `{"n": int, "t": int, "edges": [[[u,v], ...] per color]}`.
//!   Colors are 0-based in the arrays.
//! - Target JSON: `{"m": int, "edges": [[u,v,c], ...], "roots": [..],
//!   "parent": {v: [u,c]}}`, plus two round-trip extensions: `"t"` (the
//!   color-space size, inferred from the largest edge color when absent) and
//!   `"decomposition"` (the path-constructible decomposition, when the
//!   target was generated with one).
//! - Run JSON: the embedding document `{"map": {target_v: host_v},
//!   "steps": [...]}` augmented with roots, parents, edges, the bootstrap
//!   regions, parameters, the goodness report, advisories, and provenance —
//!   everything needed to replay or audit the run.
//! - Distance embedding JSON: the run document plus point coordinates and
//!   per-edge realized distances.
//! - Certification reports serialize directly (their shape is already the
//!   interchange shape).
//! - DOT: one plain graph per color plus a merged graph with `color`
//!   attributes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bootstrap::PipelineRun;
use crate::certify::CertReport;
use crate::engine::{GoodnessParams, GoodnessReport, Step, VerifyMode};
use crate::ffdist::DistanceEmbedding;
use crate::graph::{Graph, GraphError, GraphFamily};
use crate::target::{EdgeColoredRootedGraph, PathConstructibleDecomposition, TargetError};

/// Errors raised while reading interchange files.
#[derive(Debug, Error, PartialEq)]
pub enum IoError {
    #[error("malformed JSON: {detail}")]
    Json { detail: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("document violates the schema: {detail}")]
    Schema { detail: String },
}

impl From<serde_json::Error> for IoError {
    fn from(err: serde_json::Error) -> Self {
        IoError::Json {
            detail: err.to_string(),
        }
    }
}

/// JSON object keys are strings, so integer-keyed maps serialize as
/// `{"0": ...}`. Direct deserialization converts them back automatically,
/// but `#[serde(flatten)]` routes fields through an internal buffer that
/// presents keys verbatim as strings; this helper accepts both spellings.
fn vertex_keyed_map<'de, D, V>(deserializer: D) -> Result<BTreeMap<usize, V>, D::Error>
where
    D: serde::Deserializer<'de>,
    V: Deserialize<'de>,
{
    let raw = BTreeMap::<String, V>::deserialize(deserializer)?;
    raw.into_iter()
        .map(|(k, v)| match k.parse::<usize>() {
            Ok(key) => Ok((key, v)),
            Err(_) => Err(serde::de::Error::custom(format!(
                "map key {k:?} is not a vertex id"
            ))),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Family JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FamilyDoc {
    n: usize,
    t: usize,
    edges: Vec<Vec<(usize, usize)>>,
}

/// Renders a family as its interchange JSON.
pub fn family_to_json(f: &GraphFamily) -> String {
    let doc = FamilyDoc {
        n: f.n(),
        t: f.t(),
        edges: (0..f.t()).map(|c| f.graph(c).edges()).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("family document serializes")
}

/// Parses a family from its interchange JSON.
pub fn family_from_json(text: &str) -> Result<GraphFamily, IoError> {
    let doc: FamilyDoc = serde_json::from_str(text)?;
    if doc.edges.len() != doc.t {
        return Err(IoError::Schema {
            detail: format!(
                "family declares t = {} colors but carries {} edge lists",
                doc.t,
                doc.edges.len()
            ),
        });
    }
    let graphs = doc
        .edges
        .iter()
        .map(|edges| Graph::from_edges(doc.n, edges))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GraphFamily::new(graphs)?)
}

// ---------------------------------------------------------------------------
// Target JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TargetDoc {
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    edges: Vec<(usize, usize, usize)>,
    roots: Vec<usize>,
    parent: BTreeMap<usize, (usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decomposition: Option<PathConstructibleDecomposition>,
}

/// Renders a target (optionally with its decomposition) as interchange JSON.
pub fn target_to_json(
    g: &EdgeColoredRootedGraph,
    decomposition: Option<&PathConstructibleDecomposition>,
) -> String {
    let mut edges = Vec::with_capacity(g.num_edges());
    for u in 0..g.m() {
        for v in g.neighbors(u).iter().filter(|&v| v > u) {
            edges.push((u, v, g.edge_color(u, v).expect("listed edge")));
        }
    }
    let mut parent = BTreeMap::new();
    for v in 0..g.m() {
        if let Some((p, c)) = g.parent(v) {
            parent.insert(v, (p, c));
        }
    }
    let doc = TargetDoc {
        m: g.m(),
        t: Some(g.t()),
        edges,
        roots: g.roots().to_vec(),
        parent,
        decomposition: decomposition.cloned(),
    };
    serde_json::to_string_pretty(&doc).expect("target document serializes")
}

/// Parses a target from its interchange JSON. Without an explicit `t`, the
/// color space is inferred from the largest edge color.
pub fn target_from_json(
    text: &str,
) -> Result<(EdgeColoredRootedGraph, Option<PathConstructibleDecomposition>), IoError> {
    let doc: TargetDoc = serde_json::from_str(text)?;
    let t = match doc.t {
        Some(t) if t >= 1 => t,
        Some(t) => {
            return Err(IoError::Schema {
                detail: format!("target declares t = {t}, need at least one color"),
            })
        }
        None => doc
            .edges
            .iter()
            .map(|&(_, _, c)| c + 1)
            .max()
            .unwrap_or(1),
    };
    let mut g = EdgeColoredRootedGraph::new(doc.m, t);
    for &(u, v, c) in &doc.edges {
        g.add_edge(u, v, c)?;
    }
    for &v in &doc.roots {
        if v >= doc.m {
            return Err(IoError::Schema {
                detail: format!("root {v} out of range for m = {}", doc.m),
            });
        }
        g.set_root(v);
    }
    for (&v, &(p, c)) in &doc.parent {
        if v >= doc.m || p >= doc.m {
            return Err(IoError::Schema {
                detail: format!("parent entry ({v}: [{p}, {c}]) out of range for m = {}", doc.m),
            });
        }
        if doc.roots.contains(&v) {
            return Err(IoError::Schema {
                detail: format!("vertex {v} is a root and cannot carry a parent entry"),
            });
        }
        g.set_parent(v, p, c);
    }
    Ok((g, doc.decomposition))
}

// ---------------------------------------------------------------------------
// Run JSON
// ---------------------------------------------------------------------------

/// The serialized form of a pipeline run: the embedding document (`map` as
/// an object keyed by live target vertex, plus the replayable step log)
/// augmented with the structural context of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    #[serde(deserialize_with = "vertex_keyed_map")]
    pub map: BTreeMap<usize, usize>,
    pub steps: Vec<Step>,
    pub roots: Vec<usize>,
    /// `(vertex, parent, color)` per non-root live vertex.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<(usize, usize, usize)>,
    /// Realized target edges `(u, v, color)`.
    pub edges: Vec<(usize, usize, usize)>,
    pub params: GoodnessParams,
    pub mode: VerifyMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocker: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v_prime: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub y0: Vec<usize>,
    pub report: GoodnessReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub advisories: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

impl From<&PipelineRun> for RunDocument {
    fn from(run: &PipelineRun) -> Self {
        let map = run
            .map
            .iter()
            .enumerate()
            .filter_map(|(v, slot)| slot.map(|h| (v, h)))
            .collect();
        RunDocument {
            map,
            steps: run.steps.clone(),
            roots: run.roots.clone(),
            parents: run.parents.clone(),
            edges: run.edges.clone(),
            params: run.params,
            mode: run.mode,
            blocker: run.blocker.clone(),
            v_prime: run.v_prime.clone(),
            w: run.w.clone(),
            y0: run.y0.clone(),
            report: run.report.clone(),
            advisories: run.advisories.clone(),
            provenance: run.provenance.clone(),
        }
    }
}

/// Renders a pipeline run as interchange JSON.
pub fn run_to_json(run: &PipelineRun) -> String {
    serde_json::to_string_pretty(&RunDocument::from(run)).expect("run document serializes")
}

/// Parses a run document from interchange JSON.
pub fn run_from_json(text: &str) -> Result<RunDocument, IoError> {
    Ok(serde_json::from_str(text)?)
}

// ---------------------------------------------------------------------------
// Distance embedding JSON
// ---------------------------------------------------------------------------

/// A distance embedding: the run document plus the realized geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceDocument {
    #[serde(flatten)]
    pub run: RunDocument,
    pub q: u64,
    pub d: usize,
    /// `distances[color]` is the distance carried by each color.
    pub distances: Vec<u64>,
    /// Realized coordinates per live target vertex.
    #[serde(deserialize_with = "vertex_keyed_map")]
    pub points: BTreeMap<usize, Vec<u64>>,
    /// `(u, v, realized distance)` per target edge, independently
    /// revalidated before the document was produced.
    pub realized: Vec<(usize, usize, u64)>,
    pub s_working: usize,
    pub s_certified: bool,
    pub certified_pipeline: bool,
}

impl From<&DistanceEmbedding> for DistanceDocument {
    fn from(emb: &DistanceEmbedding) -> Self {
        let points = emb
            .points
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.as_ref().map(|p| (v, p.coords.clone())))
            .collect();
        DistanceDocument {
            run: RunDocument::from(&emb.run),
            q: emb.q,
            d: emb.d,
            distances: emb.distances.clone(),
            points,
            realized: emb.edges_realized.clone(),
            s_working: emb.s_working,
            s_certified: emb.s_certified,
            certified_pipeline: emb.certified_pipeline,
        }
    }
}

/// Renders a distance embedding as interchange JSON.
pub fn distance_to_json(emb: &DistanceEmbedding) -> String {
    serde_json::to_string_pretty(&DistanceDocument::from(emb))
        .expect("distance document serializes")
}

/// Parses a distance document from interchange JSON.
pub fn distance_from_json(text: &str) -> Result<DistanceDocument, IoError> {
    Ok(serde_json::from_str(text)?)
}

// ---------------------------------------------------------------------------
// Certification reports
// ---------------------------------------------------------------------------

/// Renders a certification report as interchange JSON.
pub fn report_to_json(report: &CertReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Parses a certification report from interchange JSON.
pub fn report_from_json(text: &str) -> Result<CertReport, IoError> {
    Ok(serde_json::from_str(text)?)
}

// ---------------------------------------------------------------------------
// DOT export
// ---------------------------------------------------------------------------

/// Renders one color of a family as a plain DOT graph.
pub fn family_to_dot_color(f: &GraphFamily, color: usize) -> String {
    let mut out = format!("graph color_{color} {{\n");
    for (u, v) in f.graph(color).edges() {
        out.push_str(&format!("  {u} -- {v};\n"));
    }
    out.push_str("}\n");
    out
}

/// Renders every color of a family as its own DOT graph, in color order.
pub fn family_to_dot(f: &GraphFamily) -> Vec<String> {
    (0..f.t()).map(|c| family_to_dot_color(f, c)).collect()
}

/// Renders the whole family as one merged DOT graph with `color` attributes
/// on the edges.
pub fn family_to_dot_merged(f: &GraphFamily) -> String {
    let mut out = String::from("graph family {\n");
    for c in 0..f.t() {
        for (u, v) in f.graph(c).edges() {
            out.push_str(&format!("  {u} -- {v} [color={c}];\n"));
        }
    }
    out.push_str("}\n");
    out
}
