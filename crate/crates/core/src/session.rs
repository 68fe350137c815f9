//! Interactive editing session with incremental retessellation.
//!
//! Geometric edits (vertex moves, frame parameters) recompute the frames,
//! compare them bitwise with the previous ones and rebuild only the patches
//! in the fans of frames that changed. Topology and configuration edits
//! rebuild everything. Either way the state equals a from-scratch pipeline
//! run on the current mesh and configuration.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{compare_modes, rows_to_csv, Mode, ALL_METRICS};
use crate::frames::FrameSet;
use crate::geom::{arr3, vec3};
use crate::mesh::{load_obj, save_obj, CornerRef, EdgeId, HalfEdgeMesh, MeshError, Owner, VertexId};
use crate::patch::{build_patches, PatchSet};
use crate::pipeline::{build_frames, defect_summary, prepare_mesh, DefectSummary, FrameOverride, PipelineConfig, PipelineError};
use crate::tessellate::{assemble_tessellation, export_obj, tessellate_patches, TessStats, Tessellation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("ConflictError: edit is based on revision {expected}, session is at {current}")]
    Conflict { expected: u64, current: u64 },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("EditError: {0}")]
    Edit(String),
    #[error("BufferError: {0}")]
    Buffer(String),
}

impl From<MeshError> for SessionError {
    fn from(e: MeshError) -> Self {
        SessionError::Pipeline(e.into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    MoveVertex {
        id: VertexId,
        position: [f64; 3],
    },
    InsertEdge {
        c1: CornerRef,
        c2: CornerRef,
    },
    DeleteEdge {
        id: EdgeId,
    },
    /// Composed with any earlier parameters of the same owner.
    SetFrame {
        owner: Owner,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        rotation: f64,
        #[serde(default)]
        offset: [f64; 3],
    },
    SetConfig {
        #[serde(default)]
        ds_iterations: Option<usize>,
        #[serde(default)]
        dual_iterations: Option<usize>,
        #[serde(default)]
        max_depth: Option<u32>,
        #[serde(default)]
        leaf_resolution: Option<usize>,
        #[serde(default)]
        mode: Option<Mode>,
    },
}

fn one() -> f64 {
    1.0
}

/// Client request: an edit against the revision the client last saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditMessage {
    pub revision: u64,
    #[serde(flatten)]
    pub op: EditOp,
}

/// Control mesh as the client sees it, for picking vertices, corners and edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlMesh {
    pub positions: Vec<[f64; 3]>,
    pub faces: Vec<Vec<VertexId>>,
    /// Endpoints of edge `e`, indexed by edge id.
    pub edges: Vec<[VertexId; 2]>,
}

impl ControlMesh {
    pub fn of(mesh: &HalfEdgeMesh) -> Self {
        Self {
            positions: mesh.positions().iter().map(arr3).collect(),
            faces: mesh.polygons(),
            edges: (0..mesh.num_edges()).map(|e| mesh.edge_vertices(e).into()).collect(),
        }
    }
}

/// Server reply. The tessellation buffers travel separately as binary (see [`encode_buffers`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateMessage {
    pub revision: u64,
    /// Buffers cover every patch and replace everything the client holds.
    pub full: bool,
    pub changed_patches: Vec<usize>,
    pub patch_count: usize,
    pub euler_characteristic: i64,
    pub defect_summary: DefectSummary,
    pub stats: TessStats,
    /// Present when the control mesh may have changed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlMesh>,
    #[serde(skip)]
    pub buffers: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct Session {
    input: HalfEdgeMesh,
    config: PipelineConfig,
    revision: u64,
    /// Prepared mesh the frames belong to.
    mesh: HalfEdgeMesh,
    frames: FrameSet,
    patches: PatchSet,
    tessellation: Tessellation,
    summary: DefectSummary,
}

struct Rebuilt {
    state: Session,
    changed: Vec<usize>,
    full: bool,
}

impl Session {
    pub fn new(input: HalfEdgeMesh, config: PipelineConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let mesh = prepare_mesh(&input, &config)?;
        let frames = build_frames(&mesh, &config)?;
        let patches = build_patches(&mesh, &frames).map_err(PipelineError::from)?;
        let all: Vec<usize> = (0..patches.len()).collect();
        let chunks = tessellate_patches(&patches, &config.mode.table(), &config.tess_options(), &all);
        let tessellation = assemble_tessellation(chunks).map_err(PipelineError::from)?;
        let summary = defect_summary(&patches, &frames, &config);
        Ok(Self { input, config, revision: 0, mesh, frames, patches, tessellation, summary })
    }

    pub fn from_obj(bytes: &[u8], config: PipelineConfig) -> Result<Self, SessionError> {
        Self::new(load_obj(bytes)?, config)
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// The edited control mesh.
    pub fn input(&self) -> &HalfEdgeMesh {
        &self.input
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Mesh the frames belong to (the input after the configured refinements).
    pub fn frame_mesh(&self) -> &HalfEdgeMesh {
        &self.mesh
    }

    pub fn frames(&self) -> &FrameSet {
        &self.frames
    }

    pub fn patches(&self) -> &PatchSet {
        &self.patches
    }

    pub fn tessellation(&self) -> &Tessellation {
        &self.tessellation
    }

    pub fn summary(&self) -> &DefectSummary {
        &self.summary
    }

    /// Apply `edit` if it targets the current revision. On any error the session is unchanged.
    pub fn apply_edit(&mut self, edit: &EditMessage) -> Result<UpdateMessage, SessionError> {
        if edit.revision != self.revision {
            return Err(SessionError::Conflict { expected: edit.revision, current: self.revision });
        }
        let Rebuilt { mut state, changed, full } = self.edited(&edit.op)?;
        state.revision = self.revision + 1;
        *self = state;
        Ok(self.update(changed, full))
    }

    /// Every patch at the current revision.
    pub fn full_sync(&self) -> UpdateMessage {
        self.update((0..self.patches.len()).collect(), true)
    }

    fn update(&self, changed: Vec<usize>, full: bool) -> UpdateMessage {
        UpdateMessage {
            revision: self.revision,
            full,
            buffers: encode_buffers(&self.tessellation, &changed),
            changed_patches: changed,
            patch_count: self.patches.len(),
            euler_characteristic: self.tessellation.welded.mesh.euler_characteristic(),
            defect_summary: self.summary,
            stats: self.tessellation.stats.clone(),
            control: full.then(|| ControlMesh::of(&self.input)),
        }
    }

    fn edited(&self, op: &EditOp) -> Result<Rebuilt, SessionError> {
        match *op {
            EditOp::MoveVertex { id, position } => {
                if id >= self.input.num_vertices() {
                    return Err(SessionError::Edit(format!("vertex {id} does not exist")));
                }
                if !position.iter().all(|x| x.is_finite()) {
                    return Err(SessionError::Edit("position must be finite".into()));
                }
                let mut input = self.input.clone();
                input.set_position(id, vec3(position));
                self.refresh_geometry(input, self.config.clone())
            }
            EditOp::SetFrame { owner, scale, rotation, offset } => {
                if self.frames.get(owner).is_none() {
                    return Err(SessionError::Edit(format!("{owner:?} has no frame")));
                }
                let mut config = self.config.clone();
                config.add_override(FrameOverride { owner, scale, rotation, offset });
                self.refresh_geometry(self.input.clone(), config)
            }
            EditOp::InsertEdge { c1, c2 } => {
                let mut input = self.input.clone();
                input.insert_edge(c1, c2)?;
                // Owner ids are renumbered by topology edits, so stored frame edits are dropped.
                let config = PipelineConfig { overrides: Vec::new(), ..self.config.clone() };
                self.rebuild_all(input, config)
            }
            EditOp::DeleteEdge { id } => {
                let mut input = self.input.clone();
                input.delete_edge(id)?;
                let config = PipelineConfig { overrides: Vec::new(), ..self.config.clone() };
                self.rebuild_all(input, config)
            }
            EditOp::SetConfig { ds_iterations, dual_iterations, max_depth, leaf_resolution, mode } => {
                let mut config = self.config.clone();
                if let Some(n) = ds_iterations {
                    if n != config.ds_iterations {
                        config.overrides.clear();
                    }
                    config.ds_iterations = n;
                }
                config.dual_iterations = dual_iterations.unwrap_or(config.dual_iterations);
                config.max_depth = max_depth.unwrap_or(config.max_depth);
                config.leaf_resolution = leaf_resolution.unwrap_or(config.leaf_resolution);
                config.mode = mode.unwrap_or(config.mode);
                self.rebuild_all(self.input.clone(), config)
            }
        }
    }

    fn rebuild_all(&self, input: HalfEdgeMesh, config: PipelineConfig) -> Result<Rebuilt, SessionError> {
        let state = Session::new(input, config)?;
        let changed = (0..state.patches.len()).collect();
        Ok(Rebuilt { state, changed, full: true })
    }

    /// Same connectivity, new positions or frame parameters.
    fn refresh_geometry(&self, input: HalfEdgeMesh, config: PipelineConfig) -> Result<Rebuilt, SessionError> {
        config.validate()?;
        let mesh = prepare_mesh(&input, &config)?;
        let frames = build_frames(&mesh, &config)?;
        let mut dirty = BTreeSet::new();
        for (i, (old, new)) in self.frames.frames.iter().zip(&frames.frames).enumerate() {
            if old != new {
                dirty.extend(self.patches.fans[i].iter().map(|&(p, _)| p));
            }
        }
        let dirty: Vec<usize> = dirty.into_iter().collect();
        let mut patches = self.patches.clone();
        patches.rebuild(&mesh, &frames, &dirty).map_err(PipelineError::from)?;
        let fresh = tessellate_patches(&patches, &config.mode.table(), &config.tess_options(), &dirty);
        let mut chunks = self.tessellation.chunks.clone();
        for (&p, chunk) in dirty.iter().zip(fresh) {
            chunks[p] = chunk;
        }
        let tessellation = assemble_tessellation(chunks).map_err(PipelineError::from)?;
        let summary = defect_summary(&patches, &frames, &config);
        let state = Session { input, config, revision: self.revision, mesh, frames, patches, tessellation, summary };
        Ok(Rebuilt { state, changed: dirty, full: false })
    }

    pub fn export_obj(&self) -> Vec<u8> {
        export_obj(&self.tessellation.welded.mesh)
    }

    /// The edited control mesh as OBJ.
    pub fn control_obj(&self) -> Vec<u8> {
        save_obj(&self.input)
    }

    /// Standard versus modified defects for depths `1..=max_depth`.
    pub fn defects_csv(&self) -> String {
        let depths: Vec<u32> = (1..=self.config.max_depth.max(1)).collect();
        rows_to_csv(&compare_modes(&self.patches, &depths), &ALL_METRICS)
    }
}

const MAGIC: &[u8; 4] = b"PSB1";

/// Binary buffers for the listed patches, all little-endian:
///
/// `"PSB1"`, block count `u32`, then per patch: patch id,
/// vertex count `n`, triangle count `m` (all `u32`), `3n` f32 positions,
/// `3n` f32 normals, `3m` u32 local indices and `n` u32 ids of the vertices in
/// the welded mesh.
/// The revision travels in the accompanying [`UpdateMessage`], so equal
/// geometry always encodes to equal bytes.
pub fn encode_buffers(tess: &Tessellation, patches: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(patches.len() as u32).to_le_bytes());
    let mesh = &tess.welded.mesh;
    for &p in patches {
        let chunk = &tess.chunks[p];
        let ids = &tess.welded.vertex_ids[p];
        for n in [p, ids.len(), chunk.triangles.len()] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for field in [&mesh.positions, &mesh.normals] {
            for &id in ids {
                for x in field[id as usize].iter() {
                    out.extend_from_slice(&(*x as f32).to_le_bytes());
                }
            }
        }
        for i in chunk.triangles.iter().flatten().chain(ids) {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchBuffer {
    pub patch: usize,
    pub positions: Vec<[f32; 3]>,
    pub normals: Vec<[f32; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub vertex_ids: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedBuffers {
    pub patches: Vec<PatchBuffer>,
}

impl DecodedBuffers {
    /// Euler characteristic of the union of the blocks, glued by welded vertex id.
    pub fn euler_characteristic(&self) -> i64 {
        let mut vertices = HashSet::new();
        let mut edges = HashSet::new();
        let mut faces = 0i64;
        for b in &self.patches {
            vertices.extend(b.vertex_ids.iter().copied());
            for t in &b.triangles {
                let g = t.map(|i| b.vertex_ids[i as usize]);
                for k in 0..3 {
                    let (a, c) = (g[k], g[(k + 1) % 3]);
                    edges.insert((a.min(c), a.max(c)));
                }
                faces += 1;
            }
        }
        vertices.len() as i64 - edges.len() as i64 + faces
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SessionError> {
        let end = self.at + N;
        let slice = self.bytes.get(self.at..end).ok_or_else(|| SessionError::Buffer("truncated buffer".into()))?;
        self.at = end;
        Ok(slice.try_into().expect("slice has length N"))
    }

    fn u32(&mut self) -> Result<u32, SessionError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn f32x3(&mut self) -> Result<[f32; 3], SessionError> {
        Ok([f32::from_le_bytes(self.take()?), f32::from_le_bytes(self.take()?), f32::from_le_bytes(self.take()?)])
    }
}

pub fn decode_buffers(bytes: &[u8]) -> Result<DecodedBuffers, SessionError> {
    let mut r = Reader { bytes, at: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(SessionError::Buffer("bad magic".into()));
    }
    let count = r.u32()?;
    let mut patches = Vec::new();
    for _ in 0..count {
        let patch = r.u32()? as usize;
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        let positions = (0..n).map(|_| r.f32x3()).collect::<Result<_, _>>()?;
        let normals = (0..n).map(|_| r.f32x3()).collect::<Result<_, _>>()?;
        let triangles: Vec<[u32; 3]> = (0..m).map(|_| Ok([r.u32()?, r.u32()?, r.u32()?])).collect::<Result<_, SessionError>>()?;
        let vertex_ids = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
        if triangles.iter().flatten().any(|&i| i as usize >= n) {
            return Err(SessionError::Buffer(format!("index out of range in patch {patch}")));
        }
        patches.push(PatchBuffer { patch, positions, normals, triangles, vertex_ids });
    }
    if r.at != bytes.len() {
        return Err(SessionError::Buffer("trailing bytes".into()));
    }
    Ok(DecodedBuffers { patches })
}
