//! Command-line front end: `build`, `node` and `analyze`.

use crate::error::{Error, Result};
use crate::export::{self, MeshFormat, VertexScalar};
use crate::graph::{load_graph, GraphFormat, LatticeGraph};
use crate::metrics::{self, OriginalNodeOracle, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::par::{with_threads, Parallelism};
use crate::pipeline::{self, Keep, NodeOutput, Settings};
use crate::presets::{self, RegularNode};
use crate::subdiv;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "lattice-film", version, about = "Watertight meshes of strut lattices")]
pub struct Cli {
    /// More log output (repeat for debug level).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a lattice mesh from a graph file.
    Build(BuildArgs),
    /// Build a single node from a preset or a direction file.
    Node(NodeArgs),
    /// Report deviation and curvature for a node or a mesh file.
    Analyze(AnalyzeArgs),
}

/// Options shared by all commands. Unset flags fall back to the config file,
/// then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Cut enlargement factor, in (0, 0.5).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Subdivision iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Upsampling layers before fairing.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Override every strut radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Seed for all sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output mesh format: obj, stl or ply.
    #[arg(long)]
    pub format: Option<String>,
    /// Longitudinal segments per strut sleeve.
    #[arg(long)]
    pub segments: Option<usize>,
    /// JSON file with default values for these options.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Write every node's cut records as JSON.
    #[arg(long)]
    pub dump_cuts: bool,
    /// Write every node's film geometry as OBJ.
    #[arg(long)]
    pub dump_film: bool,
    /// Write every node's faired control mesh as OBJ.
    #[arg(long)]
    pub dump_faired: bool,
    /// Write every node's level-K subdivision as OBJ.
    #[arg(long, value_name = "K")]
    pub dump_subdiv: Option<usize>,
    /// Directory for dump files (default: next to the output).
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Lattice graph (JSON).
    pub graph: PathBuf,
    /// Output mesh path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-node timing CSV.
    #[arg(long)]
    pub timing_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub dump: DumpArgs,
}

#[derive(Debug, Args)]
pub struct NodeArgs {
    /// regular6, regular12, regular20, or a file of directions (one "x y z"
    /// per line).
    pub spec: String,
    /// Output patch mesh path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Deviation report CSV (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Deviation samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub dump: DumpArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// A node spec (as for `node`) or a mesh file (.obj, .stl, .ply).
    pub input: String,
    /// Curvature-annotated PLY output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Report CSV (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Deviation samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Resolved run configuration; also the schema of `--config` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub iterations: usize,
    pub layers: usize,
    pub radius: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Mesh format; inferred from the output extension when unset.
    pub format: Option<String>,
    pub segments: usize,
    pub samples: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let s = Settings::default();
        PipelineConfig {
            lambda: s.lambda,
            iterations: s.iterations,
            layers: s.layers,
            radius: None,
            seed: DEFAULT_SEED,
            threads: None,
            format: None,
            segments: s.segments,
            samples: DEFAULT_SAMPLES,
        }
    }
}

impl PipelineConfig {
    /// Defaults, overlaid by the config file, overlaid by flags.
    pub fn resolve(common: &CommonArgs, samples: Option<usize>) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(v) = common.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = common.iters {
            cfg.iterations = v;
        }
        if let Some(v) = common.layers {
            cfg.layers = v;
        }
        if common.radius.is_some() {
            cfg.radius = common.radius;
        }
        if let Some(v) = common.seed {
            cfg.seed = v;
        }
        if common.threads.is_some() {
            cfg.threads = common.threads;
        }
        if common.format.is_some() {
            cfg.format = common.format.clone();
        }
        if let Some(v) = common.segments {
            cfg.segments = v;
        }
        if let Some(v) = samples {
            cfg.samples = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.settings().validate()?;
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        self.mesh_format(None)?;
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        Settings {
            lambda: self.lambda,
            iterations: self.iterations,
            layers: self.layers,
            segments: self.segments,
            parallelism: if self.threads == Some(1) {
                Parallelism::Sequential
            } else {
                Parallelism::Parallel
            },
        }
    }

    /// Explicit format, else the one implied by `output`, else OBJ.
    pub fn mesh_format(&self, output: Option<&Path>) -> Result<MeshFormat> {
        match &self.format {
            Some(f) => f.parse(),
            None => Ok(output.and_then(MeshFormat::from_path).unwrap_or(MeshFormat::Obj)),
        }
    }
}

/// Writes a file atomically: contents go to a temporary file in the target
/// directory, which is renamed into place only on success.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn error_json(e: &Error) -> String {
    let mut v = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
    });
    if let Some(n) = e.node_id() {
        v["node"] = n.into();
    }
    if let Some(n) = e.edge_id() {
        v["edge"] = n.into();
    }
    v.to_string()
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 on success, 1 for user errors, 2 for internal failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

/// Runs one parsed command, writing human-facing output to `out`.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    let mut buf = Vec::new();
    match command {
        Command::Build(a) => {
            let cfg = PipelineConfig::resolve(&a.common, None)?;
            with_threads(cfg.threads, || cmd_build(a, &cfg, &mut buf))?;
        }
        Command::Node(a) => {
            let cfg = PipelineConfig::resolve(&a.common, a.samples)?;
            with_threads(cfg.threads, || cmd_node(a, &cfg, &mut buf))?;
        }
        Command::Analyze(a) => {
            let cfg = PipelineConfig::resolve(&a.common, a.samples)?;
            with_threads(cfg.threads, || cmd_analyze(a, &cfg, &mut buf))?;
        }
    }
    Ok(out.write_all(&buf)?)
}

fn read_graph(path: &Path, cfg: &PipelineConfig) -> Result<LatticeGraph> {
    let file = std::fs::File::open(path)?;
    let graph = load_graph(std::io::BufReader::new(file), GraphFormat::Json)?;
    match cfg.radius {
        Some(r) => graph.with_radius(r),
        None => Ok(graph),
    }
}

fn wants_stages(d: &DumpArgs) -> bool {
    d.dump_film || d.dump_faired || d.dump_subdiv.is_some()
}

fn dump_stages(
    graph: &LatticeGraph,
    nodes: &[NodeOutput],
    dump: &DumpArgs,
    dir: &Path,
) -> Result<()> {
    if dump.dump_cuts {
        let cuts: Vec<_> = nodes.iter().flat_map(|n| n.cuts.iter()).collect();
        write_atomic(&dir.join("cuts.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &cuts).map_err(|e| Error::Io(e.into()))?;
            Ok(writeln!(w)?)
        })?;
    }
    for n in nodes {
        if let (true, Some(film)) = (dump.dump_film, &n.film) {
            write_atomic(&dir.join(format!("node_{}_film.obj", n.node_id)), |w| {
                Ok(film.write_obj(w)?)
            })?;
        }
        if let (true, Some(faired)) = (dump.dump_faired, &n.faired) {
            write_atomic(&dir.join(format!("node_{}_faired.obj", n.node_id)), |w| {
                Ok(faired.write_obj(w)?)
            })?;
        }
        if let (Some(k), Some(faired)) = (dump.dump_subdiv, &n.faired) {
            let star = graph.node_star(n.node_id)?;
            let level = subdiv::subdivide(faired, &star, k)?;
            write_atomic(&dir.join(format!("node_{}_subdiv{k}.obj", n.node_id)), |w| {
                Ok(level.write_obj(w)?)
            })?;
        }
    }
    Ok(())
}

fn dump_dir(dump: &DumpArgs, output: Option<&Path>) -> PathBuf {
    dump.dump_dir.clone().unwrap_or_else(|| {
        output
            .and_then(|p| p.parent())
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    })
}

fn cmd_build(a: &BuildArgs, cfg: &PipelineConfig, out: &mut Vec<u8>) -> Result<()> {
    let graph = read_graph(&a.graph, cfg)?;
    let format = cfg.mesh_format(a.output.as_deref())?;
    let keep = if wants_stages(&a.dump) { Keep::ALL } else { Keep::PATCH };
    let built = pipeline::build(&graph, &cfg.settings(), keep)?;
    for row in &built.timing.rows {
        log::debug!(
            "node {} (valence {}): smoothing {:.3} ms, total {:.3} ms",
            row.node_id,
            row.valence,
            row.smoothing_ms,
            row.total_ms
        );
    }
    let output = a
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("lattice.{}", format.extension())));
    write_atomic(&output, |w| export::export(&built.mesh, format, w))?;
    if let Some(path) = &a.timing_csv {
        write_atomic(path, |w| Ok(w.write_all(built.timing.nodes_csv().as_bytes())?))?;
    }
    dump_stages(&graph, &built.nodes, &a.dump, &dump_dir(&a.dump, Some(&output)))?;
    let summary = serde_json::json!({
        "output": output.display().to_string(),
        "vertices": built.mesh.positions.len(),
        "triangles": built.mesh.triangles.len(),
        "census": built.mesh.census,
        "timing": {
            "edges": built.timing.edges,
            "nodes": built.timing.nodes,
            "max_degree": built.timing.max_degree,
            "smoothing_ms": built.timing.smoothing,
            "construction_ms": built.timing.construction,
        },
    });
    writeln!(out, "{summary}")?;
    Ok(())
}

/// Direction set named by a node spec: a preset name or a direction file.
fn spec_directions(spec: &str) -> Result<Vec<crate::geom::Vector>> {
    match spec.parse::<RegularNode>() {
        Ok(node) => Ok(node.directions()),
        Err(_) => {
            let text = std::fs::read_to_string(spec)?;
            presets::parse_directions(&text)
        }
    }
}

fn single_node(spec: &str, cfg: &PipelineConfig, keep: Keep) -> Result<(LatticeGraph, NodeOutput)> {
    let dirs = spec_directions(spec)?;
    let graph = presets::star_graph(&dirs, cfg.radius.unwrap_or(1.0))?;
    let star = graph.node_star(0)?;
    if star.valence() < 2 {
        return Err(Error::InvalidArgument(
            "a node needs at least two strut directions".into(),
        ));
    }
    let node = pipeline::process_star(&star, &cfg.settings(), keep)?;
    Ok((graph, node))
}

fn write_report(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, |w| Ok(w.write_all(text.as_bytes())?)),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn cmd_node(a: &NodeArgs, cfg: &PipelineConfig, out: &mut Vec<u8>) -> Result<()> {
    let format = cfg.mesh_format(a.output.as_deref())?;
    let keep = if wants_stages(&a.dump) { Keep::ALL } else { Keep::PATCH };
    let (graph, node) = single_node(&a.spec, cfg, keep)?;
    let star = graph.node_star(0)?;
    let patch = node.patch.as_ref().expect("patch kept");
    let report = metrics::deviation(
        &patch.positions(),
        &patch.triangles,
        &OriginalNodeOracle::from_star(&star),
        cfg.samples,
        cfg.seed,
        cfg.settings().parallelism,
    );
    let output = a
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("node.{}", format.extension())));
    let mesh = crate::assemble::LatticeMesh {
        positions: patch.positions(),
        triangles: patch.triangles.clone(),
        provenance: vec![crate::assemble::FaceSource::Node(0); patch.triangles.len()],
        census: Default::default(),
    };
    write_atomic(&output, |w| export::export(&mesh, format, w))?;
    dump_stages(&graph, std::slice::from_ref(&node), &a.dump, &dump_dir(&a.dump, Some(&output)))?;
    let csv = format!(
        "node,valence,{},seam_normal_deg,total_ms\n{},{},{},{},{}\n",
        metrics::DeviationReport::csv_header(),
        a.spec,
        node.valence,
        report.csv_row(),
        subdiv::seam_normal_deviation(patch),
        node.timing.total_ms
    );
    write_report(a.report.as_deref(), &csv, out)
}

struct CurvatureSummary {
    count: usize,
    min: f64,
    max: f64,
    mean: f64,
}

fn summarize(h: &[Option<f64>]) -> CurvatureSummary {
    let vals: Vec<f64> = h.iter().flatten().copied().collect();
    let stats = metrics::Stats::of(vals.iter().copied());
    CurvatureSummary {
        count: vals.len(),
        min: stats.map_or(f64::NAN, |s| s.min),
        max: stats.map_or(f64::NAN, |s| s.max),
        mean: stats.map_or(f64::NAN, |s| s.avg),
    }
}

fn cmd_analyze(a: &AnalyzeArgs, cfg: &PipelineConfig, out: &mut Vec<u8>) -> Result<()> {
    let as_mesh = a.input.parse::<RegularNode>().is_err()
        && MeshFormat::from_path(Path::new(&a.input)).is_some();
    let mut csv = String::new();
    let (positions, triangles, deviation_field) = if as_mesh {
        let path = Path::new(&a.input);
        let format = MeshFormat::from_path(path).expect("checked above");
        let mesh = export::read_mesh(std::fs::File::open(path)?, format)?;
        (mesh.positions, mesh.triangles, None)
    } else {
        let (graph, node) = single_node(&a.input, cfg, Keep::PATCH)?;
        let star = graph.node_star(0)?;
        let oracle = OriginalNodeOracle::from_star(&star);
        let patch = node.patch.expect("patch kept");
        let report = metrics::deviation(
            &patch.positions(),
            &patch.triangles,
            &oracle,
            cfg.samples,
            cfg.seed,
            cfg.settings().parallelism,
        );
        let _ = writeln!(csv, "{}", metrics::DeviationReport::csv_header());
        let _ = writeln!(csv, "{}", report.csv_row());
        let field: Vec<f64> = patch
            .vertices
            .iter()
            .map(|v| metrics::oracle_distance(&oracle, &v.position))
            .collect();
        (patch.positions(), patch.triangles, Some(field))
    };
    let h = metrics::mean_curvature(&positions, &triangles);
    let s = summarize(&h);
    let _ = writeln!(csv, "curvature_vertices,curvature_min,curvature_max,curvature_mean");
    let _ = writeln!(csv, "{},{},{},{}", s.count, s.min, s.max, s.mean);
    if let Some(path) = &a.output {
        let curvature: Vec<f64> = h.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
        let mut scalars = vec![VertexScalar {
            name: "mean_curvature",
            values: &curvature,
        }];
        if let Some(field) = &deviation_field {
            scalars.push(VertexScalar {
                name: "deviation",
                values: field,
            });
        }
        write_atomic(path, |w| export::write_ply(&positions, &triangles, None, &scalars, w))?;
    }
    write_report(a.report.as_deref(), &csv, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("lattice-film").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, r#"{"lambda": 0.2, "iterations": 1, "seed": 5}"#).unwrap();
        let cli = parse(&[
            "build",
            "g.json",
            "--config",
            cfg_path.to_str().unwrap(),
            "--iters",
            "2",
        ]);
        let Command::Build(a) = cli.command else { panic!() };
        let cfg = PipelineConfig::resolve(&a.common, None).unwrap();
        assert_eq!(cfg.lambda, 0.2);
        assert_eq!(cfg.iterations, 2);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.layers, 3);
    }

    #[test]
    fn out_of_range_values_rejected_at_parse_time() {
        let cli = parse(&["build", "g.json", "--lambda", "0.7"]);
        let Command::Build(a) = cli.command else { panic!() };
        assert!(PipelineConfig::resolve(&a.common, None).unwrap_err().is_user_error());
        let cli = parse(&["node", "regular6", "--format", "step"]);
        let Command::Node(a) = cli.command else { panic!() };
        assert!(PipelineConfig::resolve(&a.common, None).is_err());
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.obj");
        let r = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(Error::NothingToExport)
        });
        assert!(r.is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn error_json_names_ids() {
        let e = Error::InvalidCut {
            edge: 4,
            node: 2,
            cut_length: 1.3,
            available: 1.0,
        };
        let v: serde_json::Value = serde_json::from_str(&error_json(&e)).unwrap();
        assert_eq!(v["edge"], 4);
        assert_eq!(v["node"], 2);
    }
}
