//! Half-edge polygon meshes, OBJ I/O and the refinement schemes used by the pipeline.

mod halfedge;
mod obj;
mod refine;

pub use halfedge::{CornerRef, EdgeId, FaceId, HalfEdge, HalfEdgeId, HalfEdgeMesh, VertexId};
pub use obj::{load_obj, save_obj};
pub use refine::{
    all_owners, doo_sabin_point, doo_sabin_points, doo_sabin_refine, dual_mesh, owner_halfedges, quad_neighbor,
    vertex_insertion_remesh, DooSabin, Owner, QuadRemesh,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("ManifoldError: {0}")]
    Manifold(String),
    #[error("OrientationError: {0}")]
    Orientation(String),
    #[error("BoundaryError: {0}")]
    Boundary(String),
    #[error("CornerError: {0}")]
    Corner(String),
    #[error("TopologyError: {0}")]
    Topology(String),
    #[error("ParseError at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl MeshError {
    /// Process exit code used by the validator: 2 non-manifold, 3 non-orientable,
    /// 4 open boundary, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            MeshError::Manifold(_) => 2,
            MeshError::Orientation(_) => 3,
            MeshError::Boundary(_) => 4,
            _ => 1,
        }
    }
}
