//! End-to-end segmentation: superpoints, overlaps, affinities, clustering,
//! then labeled instances.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::affinity::{self, attach_labels, build_affinities, vote_labels, Affinities, AffinityError};
use crate::config::{ClusteringMode, ConfigError, PipelineConfig};
use crate::evalkit::{average_precision, EvalError, EvalReport, GroundTruthInstance, Prediction};
use crate::output::{point_map, write_instances, write_point_map, InstancesFile};
use crate::pcio::{self, Dataset, PcioError};
use crate::project::{build_overlap_table, write_overlap_jsonl, OverlapTable};
use crate::semantics::{
    assign_labels, build_scene_vocab, instance_embedding, point_features, Instance3D,
    SemanticsError,
};
use crate::spectral::{hierarchical_cluster, spectral_cluster, ClusterResult, SpectralError};
use crate::superpoint::{oversegment, sample_fps, write_superpoint_cache, Superpoint, SuperpointError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset has no embedding table")]
    MissingEmbeddingTable,

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Pcio(#[from] PcioError),

    #[error(transparent)]
    Superpoint(#[from] SuperpointError),

    #[error(transparent)]
    Affinity(#[from] AffinityError),

    #[error(transparent)]
    Spectral(#[from] SpectralError),

    #[error(transparent)]
    Semantics(#[from] SemanticsError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PipelineError {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::MissingEmbeddingTable => "MissingEmbeddingTable",
            PipelineError::Config(ConfigError::UnknownKey(_)) => "UnknownConfigKey",
            PipelineError::Config(_) => "InvalidConfig",
            PipelineError::Pcio(e) => e.code(),
            PipelineError::Superpoint(SuperpointError::BadCache(_)) => "BadCache",
            PipelineError::Superpoint(_) => "InvalidParameter",
            PipelineError::Affinity(AffinityError::UnknownLabel(_)) => "UnknownLabel",
            PipelineError::Affinity(AffinityError::SizeMismatch { .. }) => "SizeMismatch",
            PipelineError::Spectral(SpectralError::ZeroDegree(_)) => "ZeroDegree",
            PipelineError::Spectral(SpectralError::ConvergenceFailure) => "ConvergenceFailure",
            PipelineError::Spectral(SpectralError::InvalidParameter(_)) => "InvalidParameter",
            PipelineError::Semantics(SemanticsError::DimMismatch { .. }) => "DimMismatch",
            PipelineError::Semantics(SemanticsError::UnknownLabel(_)) => "UnknownLabel",
            PipelineError::Semantics(SemanticsError::InvalidParameter(_)) => "InvalidParameter",
            PipelineError::Eval(EvalError::UnknownLabel(_)) => "UnknownLabel",
            PipelineError::Eval(EvalError::BothEmpty) => "BothEmpty",
        }
    }

    /// 2 for bad input, 1 for failures of the computation itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Spectral(SpectralError::ConvergenceFailure | SpectralError::ZeroDegree(_))
            | PipelineError::Affinity(AffinityError::SizeMismatch { .. }) => 1,
            PipelineError::Pcio(PcioError::Io { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Wall time of one stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

/// Everything produced by [`run_segment`], intermediates included.
#[derive(Debug, Clone)]
pub struct SegmentOutput {
    pub superpoints: Vec<Superpoint>,
    pub overlaps: OverlapTable,
    pub affinities: Affinities,
    pub clusters: ClusterResult,
    /// Labels instances may receive.
    pub vocabulary: Vec<String>,
    pub instances: Vec<Instance3D>,
    pub timings: Vec<StageTiming>,
    pub degenerate_normals: usize,
}

impl SegmentOutput {
    pub fn total_time(&self) -> Duration {
        Duration::from_secs_f64(self.timings.iter().map(|t| t.seconds).sum())
    }
}

struct Timer {
    start: Instant,
    out: Vec<StageTiming>,
}

impl Timer {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            out: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.out.push(StageTiming {
            stage,
            seconds: (now - self.start).as_secs_f64(),
        });
        self.start = now;
    }
}

/// Runs the whole pipeline on a loaded dataset.
///
/// `vocabulary` replaces the scene vocabulary (open-vocabulary mode);
/// `superpoints` skips oversegmentation (FPS samples are recomputed when
/// missing).
pub fn run_segment(
    dataset: &Dataset,
    config: &PipelineConfig,
    vocabulary: Option<&[String]>,
    superpoints: Option<Vec<Superpoint>>,
) -> Result<SegmentOutput> {
    config.validate()?;
    let table = dataset
        .table
        .as_ref()
        .ok_or(PipelineError::MissingEmbeddingTable)?;
    let cloud = &dataset.cloud;
    let mut timer = Timer::new();

    let (mut sps, degenerate_normals) = match superpoints {
        Some(mut sps) => {
            for sp in &mut sps {
                if sp.fps_samples.is_empty() {
                    sp.fps_samples = sample_fps(sp, cloud, config.k_fps);
                }
            }
            (sps, 0)
        }
        None => {
            let o = oversegment(cloud, &config.superpoint, config.k_fps)?;
            (o.superpoints, o.degenerate_normals.len())
        }
    };
    timer.lap("superpoints");

    let overlaps = build_overlap_table(&sps, &dataset.frames, cloud, &config.project_params());
    timer.lap("overlaps");

    let labels = vote_labels(&overlaps, config.top_k_masks);
    attach_labels(&mut sps, &labels, table)?;
    let affinities = build_affinities(
        &sps,
        &overlaps,
        &labels,
        table,
        cloud,
        config.tau_iou,
        config.tau_sim,
    )?;
    timer.lap("affinity");

    let clusters = match config.clustering {
        ClusteringMode::Flat => spectral_cluster(&affinities.combined, &config.spectral_params())?,
        ClusteringMode::Hierarchical => hierarchical_cluster(
            &sps,
            &affinities.combined,
            &config.hierarchical_params(),
            &config.spectral_params(),
        )?,
    };
    timer.lap("clustering");

    let vocabulary = match vocabulary {
        Some(v) => {
            let mut v = v.to_vec();
            v.sort();
            v.dedup();
            v
        }
        None => build_scene_vocab(&dataset.frames).labels,
    };
    let features = point_features(cloud.len(), &sps, dataset.features.as_ref(), table.dim())?;
    let members: Vec<Vec<u32>> = clusters
        .clusters()
        .into_iter()
        .map(|ids| {
            let mut pts: Vec<u32> = ids
                .iter()
                .flat_map(|&i| sps[i].point_indices.iter().copied())
                .collect();
            pts.sort_unstable();
            pts
        })
        .collect();
    let embeddings: Vec<Option<Vec<f64>>> = members
        .iter()
        .map(|pts| instance_embedding(pts, &features))
        .collect();
    let assigned = assign_labels(&embeddings, &vocabulary, table)?;
    let instances = members
        .into_iter()
        .zip(embeddings)
        .zip(assigned)
        .enumerate()
        .map(|(id, ((point_indices, emb), (label, confidence)))| Instance3D {
            id,
            point_indices,
            label,
            confidence,
            embedding: emb.unwrap_or_else(|| vec![0.0; table.dim()]),
        })
        .collect();
    timer.lap("semantics");

    Ok(SegmentOutput {
        superpoints: sps,
        overlaps,
        affinities,
        clusters,
        vocabulary,
        instances,
        timings: timer.out,
        degenerate_normals,
    })
}

/// File names written by [`write_segment_output`].
pub mod files {
    pub const INSTANCES: &str = "instances.json";
    pub const POINT_MAP: &str = "point_map.pvim";
    pub const SUPERPOINTS: &str = "superpoints.json";
    pub const OVERLAPS: &str = "overlaps.jsonl";
    pub const AFFINITY: &str = "affinity.jsonl";
}

/// Writes instances and the point map; with `debug`, also the superpoints,
/// overlap table and combined affinity.
pub fn write_segment_output(out: &SegmentOutput, num_points: usize, dir: &Path, debug: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(pcio::io_err(dir))?;
    write_instances(
        &dir.join(files::INSTANCES),
        &InstancesFile::new(out.vocabulary.clone(), &out.instances),
    )?;
    write_point_map(&dir.join(files::POINT_MAP), &point_map(num_points, &out.instances))?;
    if debug {
        write_superpoint_cache(&dir.join(files::SUPERPOINTS), &out.superpoints)?;
        write_overlap_jsonl(&dir.join(files::OVERLAPS), &out.overlaps)?;
        affinity::write_affinity_jsonl(&dir.join(files::AFFINITY), &out.affinities.combined)?;
    }
    Ok(())
}

/// Scores a segmentation against ground truth with the configured label
/// threshold.
pub fn evaluate(
    instances: &[Instance3D],
    gts: &[GroundTruthInstance],
    dataset: &Dataset,
    config: &PipelineConfig,
) -> Result<EvalReport> {
    let table = dataset
        .table
        .as_ref()
        .ok_or(PipelineError::MissingEmbeddingTable)?;
    let preds: Vec<Prediction> = instances.iter().map(Prediction::from).collect();
    Ok(average_precision(&preds, gts, table, config.tau_bert, None)?)
}

/// Hyperparameters that can be swept by [`ablation_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationParam {
    TauIou,
    TauSim,
}

impl AblationParam {
    pub fn key(self) -> &'static str {
        match self {
            AblationParam::TauIou => "tau_iou",
            AblationParam::TauSim => "tau_sim",
        }
    }
}

impl std::str::FromStr for AblationParam {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, ConfigError> {
        match s {
            "tau_iou" => Ok(AblationParam::TauIou),
            "tau_sim" => Ok(AblationParam::TauSim),
            other => Err(ConfigError::Invalid(format!(
                "cannot ablate {other:?}; expected tau_iou or tau_sim"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub value: f64,
    pub ap: f64,
    pub ap50: f64,
}

/// Segments and evaluates once per value; superpoints are computed once and
/// reused, since neither swept parameter affects them.
pub fn ablation_sweep(
    dataset: &Dataset,
    gts: &[GroundTruthInstance],
    config: &PipelineConfig,
    param: AblationParam,
    values: &[f64],
) -> Result<Vec<AblationRow>> {
    if values.is_empty() {
        return Err(ConfigError::Invalid("no ablation values given".into()).into());
    }
    let configs: Vec<PipelineConfig> = values
        .iter()
        .map(|v| config.with_overrides(&[format!("{}={v}", param.key())]))
        .collect::<std::result::Result<_, _>>()?;
    let base = oversegment(&dataset.cloud, &config.superpoint, config.k_fps)?.superpoints;
    let mut rows = Vec::with_capacity(values.len());
    for (&value, cfg) in values.iter().zip(&configs) {
        let out = run_segment(dataset, cfg, None, Some(base.clone()))?;
        let report = evaluate(&out.instances, gts, dataset, cfg)?;
        rows.push(AblationRow {
            value,
            ap: report.ap,
            ap50: report.ap50,
        });
    }
    Ok(rows)
}

/// `value,ap,ap50` with a header line.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("value,ap,ap50\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.value, r.ap, r.ap50));
    }
    s
}
