//! Batch command-line interface: generate hosts, certify pseudo-randomness,
//! build targets, run embedding pipelines, verify outputs, and export DOT.
//!
//! Exit codes are a contract and never conflated:
//! - `0` — success (including a pass verdict),
//! - `1` — negative result with a report (fail verdict, search failure,
//!   named precondition failure, violated verification check),
//! - `2` — usage or parse error (bad flags, malformed files, inapplicable
//!   method, exceeded resource cap).
//!
//! All randomness flows from the single `--seed` flag (default 0); the seed
//! is logged and recorded in output provenance, and outputs are
//! byte-identical across runs with the same seed. `--threads` parallelizes
//! verification scans; results are independent of the thread count.
//! Environment variables override resource caps only (`ROLLBACK_CAP_*`);
//! the library itself never reads the environment.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rollback::bootstrap::{embed_constructible_joined, BootstrapError};
use rollback::certify::{
    family_jumbled, is_joined, joined_from_jumbled, jumbled_check, min_joined, spectral_jumbled,
    CertifyCaps, CertifyError, JumbledMode, JumbledParams, MinJoined, Verdict,
};
use rollback::engine::{
    Embedding, EngineCaps, EngineConfig, EngineError, GoodnessParams, GoodnessReport,
    HypothesisEnforcement, VerifyMode,
};
use rollback::ffdist::{
    build_distance_family, embed_distance_subdivision, ff_norm, id_to_point, parse_point_set,
    vertex_count, DistanceGraphSpec, FfError, FieldPoint,
};
use rollback::graph::{Graph, GraphFamily};
use rollback::io::{
    distance_from_json, family_from_json, family_to_dot_color, family_to_dot_merged,
    family_to_json, report_to_json, run_from_json, target_from_json, target_to_json, IoError,
    RunDocument,
};
use rollback::target::{
    build_expansion, build_subdivision, required_path_length, BuiltSubdivision, ColoredTreeSpec,
    ExpansionPathSpec, PathConstructibleDecomposition, PatternSource,
};

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "rollback",
    version,
    about = "Roll-back embedding of edge-colored graphs into pseudo-random families"
)]
struct Cli {
    /// Seed for every random choice this invocation makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for verification scans (never changes results).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a host family file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Certify a pseudo-randomness hypothesis of a family file.
    #[command(subcommand)]
    Certify(CertifyCommand),
    /// Build a target file (subdivision or expansion).
    #[command(subcommand)]
    Target(TargetCommand),
    /// Run an embedding pipeline and write the run document.
    Embed(EmbedArgs),
    /// Re-validate a run document against its family and target.
    Verify(VerifyArgs),
    /// Export a family file to DOT (one graph per color plus a merged one).
    Export(ExportArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Distance graphs over F_q^d, one color per distance.
    Ffdist {
        /// Field size; must be an odd prime.
        #[arg(long)]
        q: u64,
        /// Dimension d >= 2.
        #[arg(long)]
        dim: usize,
        /// Comma-separated distances (the set R), e.g. "1" or "1,2".
        #[arg(long, default_value = "1")]
        distances: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// The complete graph K_n as a one-color family.
    Complete {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// K_n minus the perfect matching {2i, 2i+1}; n must be even.
    CompleteMinusMatching {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// t independent seeded G(n, p) draws (color i uses seed + i).
    Random {
        #[arg(long)]
        n: usize,
        /// Edge probability in (0, 1).
        #[arg(long)]
        p: f64,
        /// Number of colors.
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CertifyCommand {
    /// Exhaustive s-joinedness check.
    Joined {
        family: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Smallest passing s up to a cap.
    MinJoined {
        family: PathBuf,
        #[arg(long)]
        cap: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Jumbledness: exhaustive/sampled check a given (p, beta), or measure
    /// spectrally (regular graphs only).
    Jumbled {
        family: PathBuf,
        #[arg(long, value_enum)]
        method: JumbledMethodArg,
        /// Claimed density p (required for exhaustive/sampled).
        #[arg(long)]
        p: Option<f64>,
        /// Claimed beta (required for exhaustive/sampled).
        #[arg(long)]
        beta: Option<f64>,
        /// Sample count for the sampled method.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TargetCommand {
    /// Subdivision of K_D: every edge replaced by a path.
    Subdivision {
        /// Number of branch vertices D (>= 3).
        #[arg(long)]
        branches: usize,
        /// One length for every path (edges per path).
        #[arg(long)]
        length: Option<usize>,
        /// Comma-separated per-pair lengths (lexicographic pair order),
        /// overriding --length.
        #[arg(long)]
        lengths: Option<String>,
        /// Path color pattern: "constant:C", or "uniform:T" for seeded
        /// uniform draws over T colors.
        #[arg(long, default_value = "constant:0")]
        pattern: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Expansion of K_D from a JSON spec file
    /// {"trees": [{size, edges}], "paths": [{tree_a, tree_b, end_a, end_b, pattern}]}.
    Expansion {
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EmbedArgs {
    /// Target file (must carry its path decomposition).
    #[arg(long)]
    target: PathBuf,
    /// Host family file (joined route).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Distance-host field size (distance route; with --dim/--distances).
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated distances for the distance route.
    #[arg(long, default_value = "1")]
    distances: String,
    /// Point-set file restricting the distance host (default: all of F_q^d).
    #[arg(long)]
    points: Option<PathBuf>,
    /// Joinedness scale (joined route; the distance route measures its own).
    #[arg(long)]
    s: Option<usize>,
    /// Degree budget D per color (joined route).
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = ConnectArg::Strict)]
    connect: ConnectArg,
    #[arg(long, value_enum, default_value_t = EnforceArg::Advisory)]
    enforcement: EnforceArg,
    /// Shuffle extension candidates (seeded by --seed) instead of scanning
    /// in ascending host order.
    #[arg(long)]
    shuffle: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run document to re-validate.
    run: PathBuf,
    /// Host family file (enables adjacency and goodness checks).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Target file to cross-check structure against.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Re-verify goodness of the embedded image (needs --family).
    #[arg(long)]
    goodness: bool,
    /// Goodness set-size bound (default: 2s from the run parameters).
    #[arg(long)]
    bound: Option<usize>,
    /// Goodness verification mode (default: the run's own mode).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    family: PathBuf,
    /// Base path: writes BASE.color{i}.dot and BASE.merged.dot. Without it,
    /// the merged graph goes to stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Incremental,
    BestEffort,
}

impl From<ModeArg> for VerifyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => VerifyMode::Exact,
            ModeArg::Incremental => VerifyMode::Incremental,
            ModeArg::BestEffort => VerifyMode::BestEffort,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConnectArg {
    Strict,
    Clamped,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnforceArg {
    Strict,
    Advisory,
}

#[derive(Clone, Copy, ValueEnum)]
enum JumbledMethodArg {
    Exhaustive,
    Sampled,
    Spectral,
}

// ---------------------------------------------------------------------------
// Error-to-exit-code mapping
// ---------------------------------------------------------------------------

/// A classified failure: usage/parse errors exit 2, negative results exit 1.
enum CliError {
    Usage(String),
    Negative(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
    fn negative(e: impl std::fmt::Display) -> Self {
        CliError::Negative(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::usage(e)
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        // Every certify error is an applicability or resource problem, not
        // a negative verdict (those are reported through CertReport).
        CliError::usage(e)
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::CapExceeded { .. } => CliError::usage(e),
            other => CliError::negative(other),
        }
    }
}

impl From<BootstrapError> for CliError {
    fn from(e: BootstrapError) -> Self {
        match e {
            BootstrapError::Engine(inner) => inner.into(),
            BootstrapError::BlockerCapExceeded { .. } => CliError::usage(e),
            BootstrapError::Graph(_) | BootstrapError::Target(_) => CliError::usage(e),
            other => CliError::negative(other),
        }
    }
}

impl From<FfError> for CliError {
    fn from(e: FfError) -> Self {
        match e {
            FfError::NoFeasibleScale { .. }
            | FfError::TargetNotFound { .. }
            | FfError::DistanceFidelity { .. }
            | FfError::BetaExceedsNominal { .. } => CliError::negative(e),
            FfError::Bootstrap(inner) => inner.into(),
            other => CliError::usage(other),
        }
    }
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("cannot parse {what} entry {tok:?}")))
        })
        .collect()
}

fn env_override<T: std::str::FromStr>(name: &str, slot: &mut T) -> Result<(), CliError> {
    if let Ok(raw) = std::env::var(name) {
        *slot = raw
            .parse::<T>()
            .map_err(|_| CliError::Usage(format!("environment override {name}={raw} is not a number")))?;
    }
    Ok(())
}

/// Certification caps: defaults, then `ROLLBACK_CAP_*` overrides.
fn certify_caps() -> Result<CertifyCaps, CliError> {
    let mut caps = CertifyCaps::default();
    env_override("ROLLBACK_CAP_JOINED_SUBSETS", &mut caps.joined_subsets)?;
    env_override("ROLLBACK_CAP_JUMBLED_LEFT_BITS", &mut caps.jumbled_left_bits)?;
    env_override("ROLLBACK_CAP_JUMBLED_RIGHT_BITS", &mut caps.jumbled_right_bits)?;
    env_override("ROLLBACK_CAP_SPECTRAL_MAX_N", &mut caps.spectral_max_n)?;
    Ok(caps)
}

/// Engine caps: defaults, then `ROLLBACK_CAP_EXACT_SETS` override.
fn engine_caps() -> Result<EngineCaps, CliError> {
    let mut caps = EngineCaps::default();
    env_override("ROLLBACK_CAP_EXACT_SETS", &mut caps.exact_sets)?;
    Ok(caps)
}

/// Runs `f` over `items`, split across up to `threads` workers, and returns
/// the first violation in index order — identical for every thread count.
fn first_violation<T, F>(threads: usize, items: &[T], f: F) -> Option<String>
where
    T: Sync,
    F: Fn(usize, &T) -> Option<String> + Sync,
{
    let workers = threads.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().enumerate().find_map(|(i, item)| f(i, item));
    }
    let chunk = items.len().div_ceil(workers);
    let results: Vec<Option<String>> = std::thread::scope(|scope| {
        let f = &f;
        let mut handles = Vec::new();
        for w in 0..workers {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(items.len());
            handles.push(scope.spawn(move || {
                (lo..hi).map(|i| f(i, &items[i])).collect::<Vec<_>>()
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("verification worker panicked"))
            .collect()
    });
    results.into_iter().flatten().next()
}

fn load_family(path: &PathBuf) -> Result<GraphFamily, CliError> {
    Ok(family_from_json(&read_file(path)?)?)
}

fn load_target(
    path: &PathBuf,
) -> Result<
    (
        rollback::target::EdgeColoredRootedGraph,
        Option<PathConstructibleDecomposition>,
    ),
    CliError,
> {
    Ok(target_from_json(&read_file(path)?)?)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_gen(cmd: GenCommand, seed: u64) -> Result<i32, CliError> {
    match cmd {
        GenCommand::Ffdist {
            q,
            dim,
            distances,
            out,
        } => {
            let distances: Vec<u64> = parse_list(&distances, "distance")?;
            let spec = DistanceGraphSpec::new(q, dim, distances)?;
            let fam = build_distance_family(&spec)?;
            write_text(&out, &family_to_json(&fam.family))?;
            Ok(0)
        }
        GenCommand::Complete { n, out } => {
            let f = GraphFamily::new(vec![Graph::complete(n)]).map_err(CliError::usage)?;
            write_text(&out, &family_to_json(&f))?;
            Ok(0)
        }
        GenCommand::CompleteMinusMatching { n, out } => {
            if n == 0 || n % 2 != 0 {
                return Err(CliError::Usage(format!(
                    "a perfect matching needs a positive even vertex count, got n = {n}"
                )));
            }
            let f = GraphFamily::new(vec![Graph::complete_minus_perfect_matching(n)])
                .map_err(CliError::usage)?;
            write_text(&out, &family_to_json(&f))?;
            Ok(0)
        }
        GenCommand::Random { n, p, t, out } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(CliError::Usage(format!(
                    "edge probability must lie in (0, 1), got p = {p}"
                )));
            }
            if t == 0 {
                return Err(CliError::Usage("need at least one color".into()));
            }
            let graphs = (0..t)
                .map(|c| Graph::random(n, p, seed + c as u64))
                .collect();
            let f = GraphFamily::new(graphs).map_err(CliError::usage)?;
            write_text(&out, &family_to_json(&f))?;
            Ok(0)
        }
    }
}

fn cmd_certify(cmd: CertifyCommand, seed: u64) -> Result<i32, CliError> {
    let caps = certify_caps()?;
    match cmd {
        CertifyCommand::Joined { family, s, out } => {
            let f = load_family(&family)?;
            let report = is_joined(&f, s, &caps)?;
            write_text(&out, &report_to_json(&report))?;
            Ok(if report.verdict == Verdict::Pass { 0 } else { 1 })
        }
        CertifyCommand::MinJoined { family, cap, out } => {
            let f = load_family(&family)?;
            let result = min_joined(&f, cap, &caps)?;
            write_text(
                &out,
                &serde_json::to_string_pretty(&result).expect("result serializes"),
            )?;
            Ok(match result {
                MinJoined::Value(_) => 0,
                MinJoined::ExceedsCap { .. } => 1,
            })
        }
        CertifyCommand::Jumbled {
            family,
            method,
            p,
            beta,
            samples,
            out,
        } => {
            let f = load_family(&family)?;
            match method {
                JumbledMethodArg::Spectral => {
                    let per_color = (0..f.t())
                        .map(|c| spectral_jumbled(f.graph(c), &caps))
                        .collect::<Result<Vec<_>, _>>()?;
                    let combined = family_jumbled(&per_color)?;
                    let payload = serde_json::json!({
                        "method": "spectral",
                        "p": combined.p,
                        "beta": combined.beta,
                        "per_color_beta": per_color.iter().map(|jp| jp.beta).collect::<Vec<_>>(),
                        "s_sufficient": joined_from_jumbled(combined),
                    });
                    write_text(
                        &out,
                        &serde_json::to_string_pretty(&payload).expect("payload serializes"),
                    )?;
                    Ok(0)
                }
                JumbledMethodArg::Exhaustive | JumbledMethodArg::Sampled => {
                    let (p, beta) = match (p, beta) {
                        (Some(p), Some(beta)) => (p, beta),
                        _ => {
                            return Err(CliError::Usage(
                                "the exhaustive and sampled methods need --p and --beta".into(),
                            ))
                        }
                    };
                    let params = JumbledParams::new(p, beta)?;
                    let mode = match method {
                        JumbledMethodArg::Exhaustive => JumbledMode::Exhaustive,
                        _ => JumbledMode::Sampled { samples, seed },
                    };
                    let report = jumbled_check(&f, params, mode, &caps)?;
                    write_text(&out, &report_to_json(&report))?;
                    Ok(if report.verdict == Verdict::Pass { 0 } else { 1 })
                }
            }
        }
    }
}

fn cmd_target(cmd: TargetCommand, seed: u64) -> Result<i32, CliError> {
    match cmd {
        TargetCommand::Subdivision {
            branches,
            length,
            lengths,
            pattern,
            out,
        } => {
            let pairs = branches.saturating_mul(branches.saturating_sub(1)) / 2;
            let lengths: Vec<usize> = match (lengths, length) {
                (Some(csv), _) => parse_list(&csv, "length")?,
                (None, Some(l)) => vec![l; pairs],
                (None, None) => {
                    return Err(CliError::Usage(
                        "subdivision needs --length or --lengths".into(),
                    ))
                }
            };
            let source = parse_pattern(&pattern, seed)?;
            let built = build_subdivision(branches, &lengths, &source).map_err(CliError::usage)?;
            write_text(&out, &target_to_json(&built.graph, Some(&built.decomposition)))?;
            Ok(0)
        }
        TargetCommand::Expansion { spec, out } => {
            #[derive(Deserialize)]
            struct ExpansionSpecFile {
                trees: Vec<ColoredTreeSpec>,
                paths: Vec<ExpansionPathSpec>,
            }
            let parsed: ExpansionSpecFile = serde_json::from_str(&read_file(&spec)?)
                .map_err(|e| CliError::Usage(format!("malformed expansion spec: {e}")))?;
            let built = build_expansion(&parsed.trees, &parsed.paths).map_err(CliError::usage)?;
            write_text(&out, &target_to_json(&built.graph, Some(&built.decomposition)))?;
            Ok(0)
        }
    }
}

/// Parses "constant:C" or "uniform:T" into a pattern source.
fn parse_pattern(text: &str, seed: u64) -> Result<PatternSource, CliError> {
    let mut parts = text.splitn(2, ':');
    let kind = parts.next().unwrap_or("");
    let arg = parts.next();
    match (kind, arg) {
        ("constant", Some(c)) => Ok(PatternSource::Constant(c.parse().map_err(|_| {
            CliError::Usage(format!("constant pattern color {c:?} is not a number"))
        })?)),
        ("constant", None) => Ok(PatternSource::Constant(0)),
        ("uniform", Some(t)) => {
            let t: usize = t
                .parse()
                .map_err(|_| CliError::Usage(format!("uniform pattern colors {t:?} is not a number")))?;
            if t == 0 {
                return Err(CliError::Usage("uniform pattern needs at least one color".into()));
            }
            Ok(PatternSource::Uniform { t, seed })
        }
        _ => Err(CliError::Usage(format!(
            "unknown pattern {text:?}; use constant:C or uniform:T"
        ))),
    }
}

fn cmd_embed(args: EmbedArgs, seed: u64) -> Result<i32, CliError> {
    let (target_graph, decomposition) = load_target(&args.target)?;
    let decomposition = decomposition.ok_or_else(|| {
        CliError::Usage(
            "the target file lacks a path decomposition; build it with `rollback target`".into(),
        )
    })?;
    let mode: VerifyMode = args.mode.into();
    let ccaps = certify_caps()?;

    match (&args.family, args.q) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--family and --q are mutually exclusive; pick the joined or the distance route".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "embed needs a host: --family FILE (joined route) or --q/--dim/--distances (distance route)".into(),
        )),
        (Some(family), None) => {
            let f = load_family(family)?;
            let (s, degree) = match (args.s, args.degree) {
                (Some(s), Some(d)) => (s, d),
                _ => {
                    return Err(CliError::Usage(
                        "the joined route needs --s and --degree".into(),
                    ))
                }
            };
            // Named precondition: every path must reach the guaranteed
            // connection length.
            let required = required_path_length(s, degree).map_err(CliError::usage)?;
            if let Some(short) = decomposition
                .paths
                .iter()
                .map(|p| p.len().saturating_sub(1))
                .find(|&l| l < required)
            {
                return Err(CliError::Negative(format!(
                    "path length {short} is below required_path_length(s = {s}, D = {degree}) = {required}"
                )));
            }
            let cfg = EngineConfig {
                params: GoodnessParams::new(s, degree).map_err(CliError::usage)?,
                mode,
                connect_policy: match args.connect {
                    ConnectArg::Strict => rollback::engine::ConnectPolicy::Strict,
                    ConnectArg::Clamped => rollback::engine::ConnectPolicy::Clamped,
                },
                enforcement: match args.enforcement {
                    EnforceArg::Strict => HypothesisEnforcement::Strict,
                    EnforceArg::Advisory => HypothesisEnforcement::Advisory,
                },
                shuffle_seed: args.shuffle.then_some(seed),
                caps: engine_caps()?,
            };
            let kind = if decomposition.base_edges.is_empty() {
                "subdivision"
            } else {
                "expansion"
            };
            let run = embed_constructible_joined(&f, &target_graph, &decomposition, &cfg, kind)?;
            let mut doc = RunDocument::from(&run);
            doc.provenance.push(format!("cli: seed = {seed}"));
            write_text(
                &args.out,
                &serde_json::to_string_pretty(&doc).expect("run document serializes"),
            )?;
            Ok(0)
        }
        (None, Some(q)) => {
            let dim = args.dim.ok_or_else(|| {
                CliError::Usage("the distance route needs --dim alongside --q".into())
            })?;
            let distances: Vec<u64> = parse_list(&args.distances, "distance")?;
            let spec = DistanceGraphSpec::new(q, dim, distances)?;
            let points: Vec<FieldPoint> = match &args.points {
                Some(path) => {
                    let (pq, pd, pts) = parse_point_set(&read_file(path)?)?;
                    if pq != q || pd != dim {
                        return Err(CliError::Usage(format!(
                            "point file is over F_{pq}^{pd}, the requested host is F_{q}^{dim}"
                        )));
                    }
                    pts
                }
                None => {
                    let total = vertex_count(q, dim)? as usize;
                    (0..total).map(|id| id_to_point(q, dim, id)).collect()
                }
            };
            let built = BuiltSubdivision {
                branch_vertices: decomposition.base_vertices.clone(),
                graph: target_graph,
                decomposition,
            };
            let emb = embed_distance_subdivision(&points, &spec, &built, mode, &ccaps)?;
            let mut doc = rollback::io::DistanceDocument::from(&emb);
            doc.run.provenance.push(format!("cli: seed = {seed}"));
            write_text(
                &args.out,
                &serde_json::to_string_pretty(&doc).expect("distance document serializes"),
            )?;
            Ok(0)
        }
    }
}

fn cmd_verify(args: VerifyArgs, threads: usize) -> Result<i32, CliError> {
    let text = read_file(&args.run)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed run document: {e}")))?;
    let distance_doc = if value.get("q").is_some() {
        Some(distance_from_json(&text)?)
    } else {
        None
    };
    let run: RunDocument = match &distance_doc {
        Some(doc) => doc.run.clone(),
        None => run_from_json(&text)?,
    };
    let family = match &args.family {
        Some(path) => Some(load_family(path)?),
        None => None,
    };

    let mut checks: Vec<String> = Vec::new();
    let mut violation: Option<String> = None;
    let mut goodness: Option<GoodnessReport> = None;
    let mut usage_failure: Option<CliError> = None;

    // Injectivity.
    {
        let mut by_host: std::collections::BTreeMap<usize, usize> = Default::default();
        for (&v, &h) in &run.map {
            if let Some(&other) = by_host.get(&h) {
                violation = Some(format!(
                    "map is not injective: target vertices {other} and {v} share host {h}"
                ));
                break;
            }
            by_host.insert(h, v);
        }
        checks.push(format!("injectivity over {} mapped vertices", run.map.len()));
    }

    // Every recorded edge must connect mapped vertices.
    if violation.is_none() {
        violation = run.edges.iter().find_map(|&(u, v, c)| {
            if run.map.contains_key(&u) && run.map.contains_key(&v) {
                None
            } else {
                Some(format!(
                    "edge ({u}, {v}) in color {c} references an unmapped target vertex"
                ))
            }
        });
        checks.push(format!("{} edges reference mapped vertices", run.edges.len()));
    }

    // Structural cross-check against the declared target.
    if violation.is_none() {
        if let Some(path) = &args.target {
            let (tg, _) = load_target(path)?;
            violation = cross_check_target(&run, &tg);
            checks.push("structure matches the target file".into());
        }
    }

    // Host adjacency in the right color, parallel over edges.
    if violation.is_none() {
        if let Some(f) = &family {
            violation = first_violation(threads, &run.edges, |_, &(u, v, c)| {
                let hu = run.map[&u];
                let hv = run.map[&v];
                if c >= f.t() {
                    return Some(format!(
                        "edge ({u}, {v}) carries color {c}, but the family has t = {} colors",
                        f.t()
                    ));
                }
                if hu >= f.n() || hv >= f.n() || !f.graph(c).has_edge(hu, hv) {
                    return Some(format!(
                        "edge ({u}, {v}) in color {c} is violated: hosts {hu} and {hv} are not adjacent in that color"
                    ));
                }
                None
            });
            checks.push(format!(
                "{} edges realized as host edges of the right color",
                run.edges.len()
            ));
        }
    }

    // Distance documents: recorded coordinates must be the coordinates of
    // the mapped host points.
    if violation.is_none() {
        if let Some(doc) = &distance_doc {
            let total = vertex_count(doc.q, doc.d).map_err(CliError::usage)?;
            for (&v, &h) in &run.map {
                if h >= total {
                    violation = Some(format!(
                        "target vertex {v} maps to host {h}, outside F_{}^{}",
                        doc.q, doc.d
                    ));
                    break;
                }
                let expected = id_to_point(doc.q, doc.d, h);
                match doc.points.get(&v) {
                    Some(coords) if *coords == expected.coords => {}
                    Some(coords) => {
                        violation = Some(format!(
                            "target vertex {v} records coordinates {coords:?} but maps to host {h} = {:?}",
                            expected.coords
                        ));
                        break;
                    }
                    None => {
                        violation = Some(format!(
                            "target vertex {v} is mapped but has no recorded coordinates"
                        ));
                        break;
                    }
                }
            }
            checks.push("coordinates agree with the mapped host points".into());
        }
    }

    // Distance fidelity from the recorded coordinates.
    if violation.is_none() {
        if let Some(doc) = &distance_doc {
            let edges: Vec<(usize, usize, usize)> = run.edges.clone();
            violation = first_violation(threads, &edges, |_, &(u, v, c)| {
                let want = match doc.distances.get(c) {
                    Some(&w) => w,
                    None => {
                        return Some(format!(
                            "edge ({u}, {v}) carries color {c}, outside the distance list"
                        ))
                    }
                };
                let (pu, pv) = match (doc.points.get(&u), doc.points.get(&v)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Some(format!(
                            "edge ({u}, {v}) lacks recorded coordinates for fidelity checking"
                        ))
                    }
                };
                let fp = |coords: &Vec<u64>| FieldPoint::new(doc.q, doc.d, coords.clone());
                match (fp(pu), fp(pv)) {
                    (Ok(a), Ok(b)) => match ff_norm(&a, &b) {
                        Ok(got) if got == want => None,
                        Ok(got) => Some(format!(
                            "edge ({u}, {v}) in color {c} is violated: realized distance {got}, required {want}"
                        )),
                        Err(e) => Some(format!("edge ({u}, {v}): {e}")),
                    },
                    _ => Some(format!(
                        "edge ({u}, {v}) has coordinates outside F_{}^{}",
                        doc.q, doc.d
                    )),
                }
            });
            checks.push(format!(
                "{} edges revalidated against field distances",
                run.edges.len()
            ));
        }
    }

    // Goodness replay.
    if violation.is_none() && args.goodness {
        match &family {
            None => {
                usage_failure = Some(CliError::Usage(
                    "--goodness needs --family to rebuild the host".into(),
                ));
            }
            Some(f) => {
                let bound = args.bound.unwrap_or(2 * run.params.s);
                let mode: VerifyMode = args.mode.map(Into::into).unwrap_or(run.mode);
                match replay_goodness(f, &run, bound, mode) {
                    Ok(report) => {
                        if !report.passed() {
                            violation = Some(format!(
                                "goodness fails at bound {bound} in {mode:?} mode: witness {:?}",
                                report.witness
                            ));
                        }
                        checks.push(format!("goodness at bound {bound} in {mode:?} mode"));
                        goodness = Some(report);
                    }
                    Err(e) => usage_failure = Some(e),
                }
            }
        }
    }

    if let Some(failure) = usage_failure {
        return Err(failure);
    }

    let verdict = if violation.is_none() { "pass" } else { "fail" };
    let payload = serde_json::json!({
        "verdict": verdict,
        "checks": checks,
        "violation": violation,
        "goodness": goodness,
    });
    write_text(
        &args.out,
        &serde_json::to_string_pretty(&payload).expect("report serializes"),
    )?;
    match violation {
        None => Ok(0),
        Some(msg) => {
            eprintln!("rollback: verification failed: {msg}");
            Ok(1)
        }
    }
}

/// Compares a run document against the declared target: full vertex
/// coverage, identical edge sets with identical colors, root containment,
/// and parent-link agreement.
fn cross_check_target(
    run: &RunDocument,
    tg: &rollback::target::EdgeColoredRootedGraph,
) -> Option<String> {
    for v in 0..tg.m() {
        if !run.map.contains_key(&v) {
            return Some(format!("target vertex {v} is missing from the map"));
        }
    }
    let mut target_edges: Vec<(usize, usize, usize)> = Vec::with_capacity(tg.num_edges());
    for u in 0..tg.m() {
        for v in tg.neighbors(u).iter().filter(|&v| v > u) {
            target_edges.push((u, v, tg.edge_color(u, v).expect("listed edge")));
        }
    }
    let mut run_edges = run.edges.clone();
    run_edges.sort_unstable();
    target_edges.sort_unstable();
    if run_edges != target_edges {
        let missing = target_edges.iter().find(|e| !run_edges.contains(e));
        let extra = run_edges.iter().find(|e| !target_edges.contains(e));
        return Some(format!(
            "realized edges differ from the target: missing {missing:?}, unexpected {extra:?}"
        ));
    }
    for root in tg.roots().iter() {
        if !run.roots.contains(&root) {
            return Some(format!("target root {root} is not a root of the run"));
        }
    }
    for &(v, p, c) in &run.parents {
        if tg.parent(v) != Some((p, c)) {
            return Some(format!(
                "parent link of vertex {v} disagrees with the target: run says ({p}, {c}), target says {:?}",
                tg.parent(v)
            ));
        }
    }
    None
}

/// Rebuilds the finished embedding (roots + realized edges reproduce the
/// image, degrees, and an empty pending-path set — exactly the final state's
/// residual inputs) and re-runs the goodness check.
fn replay_goodness(
    f: &GraphFamily,
    run: &RunDocument,
    bound: usize,
    mode: VerifyMode,
) -> Result<GoodnessReport, CliError> {
    let reserved = run
        .map
        .keys()
        .copied()
        .max()
        .map_or(0, |m| m + 1)
        .max(run.edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0));
    let cfg = EngineConfig {
        params: run.params,
        mode,
        connect_policy: rollback::engine::ConnectPolicy::Strict,
        enforcement: HypothesisEnforcement::Advisory,
        shuffle_seed: None,
        caps: engine_caps()?,
    };
    let mut emb = Embedding::with_reserved(f, reserved);
    for (&v, &h) in &run.map {
        emb.place_root(Some(v), h, &cfg).map_err(CliError::from)?;
    }
    for &(u, v, c) in &run.edges {
        emb.add_edge(u, v, c, &cfg).map_err(CliError::from)?;
    }
    emb.verify_good_bounded(run.params.d, bound, mode, &cfg.caps)
        .map_err(CliError::from)
}

fn cmd_export(args: ExportArgs) -> Result<i32, CliError> {
    let f = load_family(&args.family)?;
    match &args.out {
        None => {
            println!("{}", family_to_dot_merged(&f));
            Ok(0)
        }
        Some(base) => {
            let base_str = base.display();
            for c in 0..f.t() {
                let path = PathBuf::from(format!("{base_str}.color{c}.dot"));
                fs::write(&path, family_to_dot_color(&f, c))
                    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
                println!("{}", path.display());
            }
            let merged = PathBuf::from(format!("{base_str}.merged.dot"));
            fs::write(&merged, family_to_dot_merged(&f))
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", merged.display())))?;
            println!("{}", merged.display());
            Ok(0)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    eprintln!("rollback: seed = {}, threads = {}", cli.seed, cli.threads);
    let outcome = match cli.command {
        Command::Gen(cmd) => cmd_gen(cmd, cli.seed),
        Command::Certify(cmd) => cmd_certify(cmd, cli.seed),
        Command::Target(cmd) => cmd_target(cmd, cli.seed),
        Command::Embed(args) => cmd_embed(args, cli.seed),
        Command::Verify(args) => cmd_verify(args, cli.threads),
        Command::Export(args) => cmd_export(args),
    };
    std::process::exit(match outcome {
        Ok(code) => code,
        Err(CliError::Negative(msg)) => {
            eprintln!("rollback: {msg}");
            1
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("rollback: {msg}");
            2
        }
    });
}
