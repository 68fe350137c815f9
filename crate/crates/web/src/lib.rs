//! In-browser modeler: a [`Demo`] session with three operations, exported to
//! JavaScript through wasm-bindgen as [`Modeler`].

use patchsmith::analysis::Mode;
use patchsmith::corpus;
use patchsmith::mesh::{CornerRef, HalfEdgeMesh, Owner};
use patchsmith::pipeline::PipelineConfig;
use patchsmith::session::{EditMessage, EditOp, Session};
use wasm_bindgen::prelude::*;

/// Two corners on faces that share no vertex, joined to open a handle.
fn handle_corners(mesh: &HalfEdgeMesh) -> Option<(CornerRef, CornerRef)> {
    for f in 0..mesh.num_faces() {
        let a = mesh.face_vertices(f);
        for g in f + 1..mesh.num_faces() {
            let b = mesh.face_vertices(g);
            if a.iter().all(|v| !b.contains(v)) {
                return Some((CornerRef::new(f, a[0]), CornerRef::new(g, b[0])));
            }
        }
    }
    None
}

/// Session plus the demo's own view of what has been done to it.
pub struct Demo {
    session: Session,
    face_scale: f64,
    /// Edge added by [`Demo::toggle_handle`], if the handle is open.
    handle_edge: Option<usize>,
}

impl Demo {
    pub fn new(model: &str, max_depth: u32) -> Result<Demo, String> {
        let mesh = corpus::by_name(model).ok_or_else(|| format!("unknown model {model:?}"))?;
        let config = PipelineConfig { max_depth, leaf_resolution: 3, ..PipelineConfig::default() };
        let session = Session::new(mesh, config).map_err(|e| e.to_string())?;
        Ok(Demo { session, face_scale: 1.0, handle_edge: None })
    }

    pub fn models() -> Vec<String> {
        corpus::corpus().into_iter().map(|(n, _)| n.to_owned()).collect()
    }

    fn edit(&mut self, op: EditOp) -> Result<(), String> {
        let msg = EditMessage { revision: self.session.revision(), op };
        self.session.apply_edit(&msg).map(|_| ()).map_err(|e| e.to_string())
    }

    pub fn set_modified(&mut self, modified: bool) -> Result<(), String> {
        let mode = if modified { Mode::Modified } else { Mode::Standard };
        self.edit(EditOp::SetConfig { ds_iterations: None, dual_iterations: None, max_depth: None, leaf_resolution: None, mode: Some(mode) })
    }

    pub fn modified(&self) -> bool {
        self.session.config().mode == Mode::Modified
    }

    /// Scale every face frame to `scale` times its assigned size.
    pub fn set_face_scale(&mut self, scale: f64) -> Result<(), String> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err("scale must be a positive number".into());
        }
        let step = scale / self.face_scale;
        for f in 0..self.session.frame_mesh().num_faces() {
            self.edit(EditOp::SetFrame { owner: Owner::Face(f), scale: step, rotation: 0.0, offset: [0.0; 3] })?;
        }
        self.face_scale = scale;
        Ok(())
    }

    pub fn face_scale(&self) -> f64 {
        self.face_scale
    }

    /// Insert an edge between two disjoint faces, or remove it again.
    /// Topology edits reset frame parameters, so the face scale returns to 1.
    pub fn toggle_handle(&mut self) -> Result<(), String> {
        match self.handle_edge {
            Some(e) => self.edit(EditOp::DeleteEdge { id: e })?,
            None => {
                let (c1, c2) = handle_corners(self.session.input()).ok_or("no two disjoint faces")?;
                self.edit(EditOp::InsertEdge { c1, c2 })?;
            }
        }
        self.handle_edge = match self.handle_edge {
            Some(_) => None,
            None => Some(self.session.input().num_edges() - 1),
        };
        self.face_scale = 1.0;
        Ok(())
    }

    pub fn handle_open(&self) -> bool {
        self.handle_edge.is_some()
    }

    pub fn positions(&self) -> Vec<f32> {
        self.session.tessellation().welded.mesh.positions.iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect()
    }

    pub fn normals(&self) -> Vec<f32> {
        self.session.tessellation().welded.mesh.normals.iter().flat_map(|n| {
            let n = n.normalize();
            [n.x as f32, n.y as f32, n.z as f32]
        }).collect()
    }

    pub fn indices(&self) -> Vec<u32> {
        self.session.tessellation().welded.mesh.triangles.iter().flatten().copied().collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.session.tessellation().welded.mesh.euler_characteristic()
    }

    pub fn stats_json(&self) -> String {
        serde_json::json!({
            "revision": self.session.revision(),
            "mode": self.session.config().mode,
            "patches": self.session.patches().len(),
            "triangles": self.session.tessellation().stats.triangles,
            "genus": (2 - self.euler_characteristic()) / 2,
            "defect_summary": self.session.summary(),
        })
        .to_string()
    }
}

/// JavaScript face of [`Demo`].
#[wasm_bindgen]
pub struct Modeler(Demo);

#[wasm_bindgen]
impl Modeler {
    #[wasm_bindgen(constructor)]
    pub fn new(model: &str, max_depth: u32) -> Result<Modeler, JsError> {
        Demo::new(model, max_depth).map(Modeler).map_err(|e| JsError::new(&e))
    }

    pub fn models() -> Vec<String> {
        Demo::models()
    }

    #[wasm_bindgen(js_name = setModified)]
    pub fn set_modified(&mut self, modified: bool) -> Result<(), JsError> {
        self.0.set_modified(modified).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = setFaceScale)]
    pub fn set_face_scale(&mut self, scale: f64) -> Result<(), JsError> {
        self.0.set_face_scale(scale).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = toggleHandle)]
    pub fn toggle_handle(&mut self) -> Result<(), JsError> {
        self.0.toggle_handle().map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = handleOpen)]
    pub fn handle_open(&self) -> bool {
        self.0.handle_open()
    }

    pub fn positions(&self) -> Vec<f32> {
        self.0.positions()
    }

    pub fn normals(&self) -> Vec<f32> {
        self.0.normals()
    }

    pub fn indices(&self) -> Vec<u32> {
        self.0.indices()
    }

    #[wasm_bindgen(js_name = statsJson)]
    pub fn stats_json(&self) -> String {
        self.0.stats_json()
    }
}
