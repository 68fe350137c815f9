//! The batch pipeline: refine, assign frames, assemble patches, tessellate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{extraordinary_defects, extraordinary_fans, AnalysisError, Mode};
use crate::frames::{assign_frames, set_frame_params, FrameError, FrameOptions, FrameSet};
use crate::geom::{vec3, Vec3};
use crate::kernels::KernelError;
use crate::mesh::{doo_sabin_refine, HalfEdgeMesh, MeshError, Owner};
use crate::patch::{build_patches, check_boundary_conditions, AssemblyError, PatchSet};
use crate::tessellate::{tessellate, TessOptions, TessStats, Tessellation, TessellationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Tessellation(#[from] TessellationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("ConfigError: {0}")]
    Config(String),
}

impl PipelineError {
    /// Process exit code: mesh validation codes pass through, everything else is 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Mesh(e) => e.exit_code(),
            _ => 1,
        }
    }
}

/// Frame parameter change for one owner, applied after frame assignment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameOverride {
    pub owner: Owner,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub offset: [f64; 3],
}

fn one() -> f64 {
    1.0
}

impl FrameOverride {
    pub fn identity(owner: Owner) -> Self {
        Self { owner, scale: 1.0, rotation: 0.0, offset: [0.0; 3] }
    }

    /// Apply `self` and then `next` (same owner).
    pub fn then(&self, next: &FrameOverride) -> FrameOverride {
        let o = vec3(self.offset) + vec3(next.offset);
        FrameOverride { owner: self.owner, scale: self.scale * next.scale, rotation: self.rotation + next.rotation, offset: [o.x, o.y, o.z] }
    }

    pub fn offset(&self) -> Vec3 {
        vec3(self.offset)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Doo-Sabin passes that produce the frames; `n` means `n - 1` refinements
    /// of the input before frames are taken from the last one.
    pub ds_iterations: usize,
    pub dual_iterations: usize,
    pub max_depth: u32,
    pub leaf_resolution: usize,
    pub mode: Mode,
    /// At most one entry per owner, kept sorted by owner.
    pub overrides: Vec<FrameOverride>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { ds_iterations: 1, dual_iterations: 0, max_depth: 4, leaf_resolution: 5, mode: Mode::Modified, overrides: Vec::new() }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.ds_iterations == 0 {
            return Err(PipelineError::Config("ds_iterations must be at least 1".into()));
        }
        if !self.dual_iterations.is_multiple_of(2) {
            return Err(PipelineError::Config(format!("dual_iterations must be even, got {}", self.dual_iterations)));
        }
        for w in self.overrides.windows(2) {
            if w[0].owner >= w[1].owner {
                return Err(PipelineError::Config("overrides must be sorted with one entry per owner".into()));
            }
        }
        self.tess_options().validate()?;
        Ok(())
    }

    pub fn tess_options(&self) -> TessOptions {
        TessOptions { max_depth: self.max_depth, resolution: self.leaf_resolution }
    }

    pub fn frame_options(&self) -> FrameOptions {
        FrameOptions { dual_iterations: self.dual_iterations, ..FrameOptions::default() }
    }

    /// Compose `change` into the stored override for its owner.
    pub fn add_override(&mut self, change: FrameOverride) {
        match self.overrides.binary_search_by(|o| o.owner.cmp(&change.owner)) {
            Ok(i) => self.overrides[i] = self.overrides[i].then(&change),
            Err(i) => self.overrides.insert(i, change),
        }
    }
}

/// Mesh the frames are taken from: the input after `ds_iterations - 1` refinements.
pub fn prepare_mesh(input: &HalfEdgeMesh, config: &PipelineConfig) -> Result<HalfEdgeMesh, PipelineError> {
    input.validate()?;
    let mut mesh = input.clone();
    for _ in 1..config.ds_iterations {
        mesh = doo_sabin_refine(&mesh)?.mesh;
    }
    Ok(mesh)
}

pub fn apply_overrides(frames: &mut FrameSet, overrides: &[FrameOverride]) -> Result<(), PipelineError> {
    for o in overrides {
        let Some(frame) = frames.get(o.owner) else {
            return Err(PipelineError::Config(format!("override for {:?}, which is not in the mesh", o.owner)));
        };
        let edited = set_frame_params(frame, o.scale, o.rotation, o.offset())?;
        let i = frames.index(o.owner);
        frames.frames[i] = edited;
    }
    Ok(())
}

/// Frames of `mesh` (already prepared) with the configured overrides applied.
pub fn build_frames(mesh: &HalfEdgeMesh, config: &PipelineConfig) -> Result<FrameSet, PipelineError> {
    let mut frames = assign_frames(mesh, &config.frame_options())?;
    apply_overrides(&mut frames, &config.overrides)?;
    Ok(frames)
}

/// Worst defects of the finished surface, normalized as in [`crate::analysis`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DefectSummary {
    pub extraordinary_corners: usize,
    pub c1: f64,
    pub g1: f64,
    pub normal_spread: f64,
    pub unbroken_line: f64,
    /// Largest assembly residual relative to the model diagonal.
    pub assembly_residual: f64,
}

pub fn defect_summary(set: &PatchSet, frames: &FrameSet, config: &PipelineConfig) -> DefectSummary {
    let row = extraordinary_defects(set, &config.mode.table(), config.max_depth);
    let report = check_boundary_conditions(set);
    DefectSummary {
        extraordinary_corners: extraordinary_fans(set).len(),
        c1: row.c1,
        g1: row.g1,
        normal_spread: row.normal_spread,
        unbroken_line: row.unbroken_line,
        assembly_residual: report.max() / frames.diagonal.max(f64::MIN_POSITIVE),
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Mesh the frames belong to.
    pub mesh: HalfEdgeMesh,
    pub frames: FrameSet,
    pub patches: PatchSet,
    pub tessellation: Tessellation,
    pub summary: DefectSummary,
}

impl PipelineOutput {
    pub fn stats(&self) -> &TessStats {
        &self.tessellation.stats
    }

    pub fn stats_json(&self) -> serde_json::Value {
        let s = self.stats();
        serde_json::json!({
            "patches": s.patches,
            "leaves": s.leaves,
            "subdivisions": s.subdivisions,
            "max_depth_reached": s.max_depth_reached,
            "triangles": s.triangles,
            "vertices": s.vertices,
            "euler_characteristic": self.tessellation.welded.mesh.euler_characteristic(),
            "defect_summary": self.summary,
        })
    }
}

/// Run every stage on `input`.
pub fn run_pipeline(input: &HalfEdgeMesh, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let mesh = prepare_mesh(input, config)?;
    let frames = build_frames(&mesh, config)?;
    run_with_frames(mesh, frames, config)
}

/// Later stages on an already prepared mesh and its frames, e.g. frames loaded from disk.
pub fn run_with_frames(mesh: HalfEdgeMesh, frames: FrameSet, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let patches = build_patches(&mesh, &frames)?;
    let tessellation = tessellate(&patches, &config.mode.table(), &config.tess_options())?;
    let summary = defect_summary(&patches, &frames, config);
    Ok(PipelineOutput { mesh, frames, patches, tessellation, summary })
}
