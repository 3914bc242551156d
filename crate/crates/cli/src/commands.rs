use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;

use scene_settle::constraints::ConstraintError;
use scene_settle::geometry::{io as mesh_io, GeometryError, SdfField, SdfMode};
use scene_settle::optimizer::{settle as run_settle, OptimizerConfig, OptimizerError};
use scene_settle::relation_graph::{map_to_constraints, merge_ensemble, FineRelationGraph, MappingOptions, RelationError};
use scene_settle::scene_io::{
    load_scene, read_json, to_json_string, validate_metrics, write_json, write_scene, LoadOptions, SceneError,
    Thresholds, EXIT_IO, EXIT_OK, EXIT_SCHEMA, EXIT_VALIDATION_FAILED,
};
use scene_settle::transforms::{
    icp, select_best_candidate, umeyama, CorrespondedPointSets, IcpConfig, SimilarityTransform, TransformCandidate,
    TransformError,
};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn schema(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SCHEMA,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        Self {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        let code = match e {
            GeometryError::Io { .. } => EXIT_IO,
            _ => EXIT_SCHEMA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        Self::schema(e.to_string())
    }
}

impl From<RelationError> for CliError {
    fn from(e: RelationError) -> Self {
        Self::schema(e.to_string())
    }
}

impl From<ConstraintError> for CliError {
    fn from(e: ConstraintError) -> Self {
        SceneError::from(e).into()
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::Constraint(c) => c.into(),
            OptimizerError::Trace(io) => Self {
                code: EXIT_IO,
                message: io.to_string(),
            },
            OptimizerError::InvalidConfig(m) => Self::schema(m),
        }
    }
}

fn print_json(value: &serde_json::Value) {
    print!("{}", to_json_string(value));
}

fn transform_json(t: &SimilarityTransform) -> serde_json::Value {
    serde_json::to_value(t).expect("transform serializes")
}

pub fn settle(
    scene: &Path,
    out: &Path,
    iters: Option<usize>,
    samples: Option<usize>,
    sigma: Option<f64>,
    trace: Option<&Path>,
    report: Option<&Path>,
) -> Result<i32, CliError> {
    let opts = LoadOptions {
        samples,
        flat_sigma: sigma,
        ..Default::default()
    };
    let loaded = load_scene(scene, &opts)?;
    let mut cfg = OptimizerConfig {
        seed: loaded.file.sampling.seed,
        ..Default::default()
    };
    if let Some(n) = iters {
        cfg.max_iters = n;
    }
    let (settled, tr) = run_settle(&loaded.scene, &loaded.graph, &cfg)?;
    write_scene(&loaded, &settled, out)?;
    if let Some(path) = trace {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(f);
        tr.write_jsonl(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    let r = validate_metrics(&settled, &loaded.graph, &Thresholds::for_scene(&settled))?;
    if let Some(path) = report {
        write_json(&r, path)?;
    }
    let last = tr.last().expect("trace has the initial record");
    log::info!(
        "{} iterations, cost {:.3e} -> {:.3e}, validation {}",
        tr.len() - 1,
        tr.records[0].total,
        last.total,
        if r.pass { "passed" } else { "failed" }
    );
    Ok(if r.pass { EXIT_OK } else { EXIT_VALIDATION_FAILED })
}

fn load_pair(source: &Path, target: &Path) -> Result<CorrespondedPointSets, CliError> {
    Ok(CorrespondedPointSets::new(
        mesh_io::load_points(source)?,
        mesh_io::load_points(target)?,
    )?)
}

pub fn align_umeyama(source: &Path, target: &Path, with_scale: bool) -> Result<i32, CliError> {
    let pairs = load_pair(source, target)?;
    let t = umeyama(&pairs, with_scale)?;
    print_json(&json!({
        "transform": transform_json(&t),
        "residual": pairs.rms_residual(&t),
    }));
    Ok(EXIT_OK)
}

pub fn align_icp(source: &Path, target: &Path, max_iters: usize, bbox_normalize: bool) -> Result<i32, CliError> {
    let cfg = IcpConfig {
        max_iters,
        bbox_normalize,
        ..Default::default()
    };
    let r = icp(&mesh_io::load_points(source)?, &mesh_io::load_points(target)?, &cfg)?;
    print_json(&json!({
        "transform": transform_json(&r.transform),
        "residual": r.residual,
        "iterations": r.iterations,
    }));
    Ok(EXIT_OK)
}

/// `(name, src, dst)` for every complete `<name>_src.*` / `<name>_dst.*` pair, sorted by name.
fn candidate_pairs(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut out = Vec::new();
    for src in &files {
        let Some(stem) = src.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some(name) = stem.strip_suffix("_src") else {
            continue;
        };
        let ext = src.extension().and_then(|e| e.to_str()).unwrap_or("");
        let dst = src.with_file_name(format!("{name}_dst.{ext}"));
        if dst.is_file() {
            out.push((name.to_string(), src.clone(), dst));
        } else {
            log::warn!("{} has no matching _dst file; skipped", src.display());
        }
    }
    if out.is_empty() {
        return Err(CliError::schema(format!("{}: no <name>_src/<name>_dst pairs found", dir.display())));
    }
    Ok(out)
}

pub fn align_select(dir: &Path, with_scale: bool) -> Result<i32, CliError> {
    let pairs = candidate_pairs(dir)?;
    let sets = pairs
        .iter()
        .map(|(_, s, d)| load_pair(s, d))
        .collect::<Result<Vec<_>, _>>()?;
    let (index, best) = if with_scale {
        select_best_candidate(&sets)?
    } else {
        // Same selection rule with rigid fits: lowest residual, first on ties.
        let mut best: Option<(usize, TransformCandidate)> = None;
        for (i, s) in sets.iter().enumerate() {
            let Ok(c) = TransformCandidate::fit(s, false) else { continue };
            if best.as_ref().map_or(true, |b| c.residual < b.1.residual) {
                best = Some((i, c));
            }
        }
        best.ok_or(TransformError::NoValidCandidate)?
    };
    print_json(&json!({
        "index": index,
        "name": pairs[index].0,
        "transform": transform_json(&best.transform),
        "residual": best.residual,
    }));
    Ok(EXIT_OK)
}

pub fn graph_map(fine: &Path, out: &Path, flat_labels: Vec<String>) -> Result<i32, CliError> {
    let g: FineRelationGraph = read_json(fine)?;
    let mut opts = MappingOptions::default();
    if !flat_labels.is_empty() {
        opts.flat_labels = flat_labels;
    }
    write_json(&map_to_constraints(&g, &opts)?, out)?;
    Ok(EXIT_OK)
}

pub fn graph_merge(trials: &[PathBuf], threshold: f64, out: &Path) -> Result<i32, CliError> {
    let graphs = trials
        .iter()
        .map(|p| read_json::<FineRelationGraph>(p))
        .collect::<Result<Vec<_>, _>>()?;
    write_json(&merge_ensemble(&graphs, threshold)?, out)?;
    Ok(EXIT_OK)
}

pub fn validate(scene: &Path, pen: Option<f64>, gap: Option<f64>) -> Result<i32, CliError> {
    let loaded = load_scene(scene, &LoadOptions::default())?;
    let mut th = Thresholds::for_scene(&loaded.scene);
    if let Some(p) = pen {
        th.penetration = p;
    }
    if let Some(g) = gap {
        th.gap = g;
    }
    let r = validate_metrics(&loaded.scene, &loaded.graph, &th)?;
    print!("{}", to_json_string(&r));
    Ok(if r.pass { EXIT_OK } else { EXIT_VALIDATION_FAILED })
}

pub fn sdf_query(mesh: &Path, points: &Path, grid: bool, resolution: Option<usize>) -> Result<i32, CliError> {
    let m = Arc::new(mesh_io::load_mesh(mesh)?);
    let mode = if grid { SdfMode::Grid } else { SdfMode::Exact };
    let field = SdfField::build(m, mode, resolution)?;
    let stdout = std::io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    let io_err = |e| CliError::io(Path::new("<stdout>"), e);
    writeln!(w, "distance,gx,gy,gz").map_err(io_err)?;
    for p in mesh_io::load_points(points)? {
        let s = field.query(&p);
        writeln!(w, "{},{},{},{}", s.distance, s.gradient.x, s.gradient.y, s.gradient.z).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}
