use serde::{Deserialize, Serialize};

use super::halfedge::RawLoop;
use super::{HalfEdgeId, HalfEdgeMesh};
use super::MeshError;
use crate::geom::Vec3;

/// An element of an original mesh that a refined element came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Owner {
    Face(usize),
    Vertex(usize),
    Edge(usize),
}

/// Result of the vertex-insertion (Catmull-Clark style) quad remesh.
///
/// Quad `h` belongs to original half-edge `h`, i.e. to the corner at
/// `origin(h)` inside `face(h)`. Its loop is `F, E(prev h), V, E(h)`, and
/// its `k`-th side is reachable as `face_halfedges(h)[k]`.
#[derive(Clone, Debug)]
pub struct QuadRemesh {
    pub mesh: HalfEdgeMesh,
    /// Origin of every new vertex: vertices first, then edges, then faces.
    pub vertex_owner: Vec<Owner>,
}

impl QuadRemesh {
    pub fn edge_point(m: &HalfEdgeMesh, e: usize) -> usize {
        m.num_vertices() + e
    }

    pub fn face_point(m: &HalfEdgeMesh, f: usize) -> usize {
        m.num_vertices() + m.num_edges() + f
    }
}

/// Quad neighbor across side `k` of quad `h`: (neighbor quad, neighbor side).
pub fn quad_neighbor(m: &HalfEdgeMesh, h: HalfEdgeId, k: usize) -> (HalfEdgeId, usize) {
    match k {
        0 => (m.prev(h), 3),
        1 => (m.twin(m.prev(h)), 2),
        2 => (m.next(m.twin(h)), 1),
        3 => (m.next(h), 0),
        _ => panic!("quad side {k} out of range"),
    }
}

/// Insert a point on every face and edge and connect them into one quad per
/// face corner. Positions are the usual placeholders (centroids, midpoints).
pub fn vertex_insertion_remesh(m: &HalfEdgeMesh) -> QuadRemesh {
    let mut positions = m.positions().to_vec();
    let mut vertex_owner: Vec<Owner> = (0..m.num_vertices()).map(Owner::Vertex).collect();
    for e in 0..m.num_edges() {
        positions.push(m.edge_midpoint(e));
        vertex_owner.push(Owner::Edge(e));
    }
    for f in 0..m.num_faces() {
        positions.push(m.face_centroid(f));
        vertex_owner.push(Owner::Face(f));
    }
    let loops: Vec<RawLoop> = (0..m.num_halfedges())
        .map(|h| RawLoop {
            origins: vec![
                QuadRemesh::face_point(m, m.face(h)),
                QuadRemesh::edge_point(m, m.edge(m.prev(h))),
                m.origin(h),
                QuadRemesh::edge_point(m, m.edge(h)),
            ],
            twins: (0..4).map(|k| quad_neighbor(m, h, k)).collect(),
        })
        .collect();
    let mesh = HalfEdgeMesh::from_raw(positions, &loops).expect("quad remesh of a valid mesh is valid");
    QuadRemesh { mesh, vertex_owner }
}

/// Doo-Sabin point for the corner of `face(h)` at `origin(h)`: the mean of the
/// vertex, the midpoints of the two face edges at that corner and the face centroid.
pub fn doo_sabin_point(m: &HalfEdgeMesh, h: HalfEdgeId, centroid: &Vec3) -> Vec3 {
    let v = m.position(m.origin(h));
    let a = m.edge_midpoint(m.edge(h));
    let b = m.edge_midpoint(m.edge(m.prev(h)));
    (v + a + b + centroid) * 0.25
}

/// One Doo-Sabin refinement step.
///
/// New vertex `h` is the Doo-Sabin point of original half-edge `h`. Faces are
/// ordered: one per original face, then one per vertex, then one per edge.
#[derive(Clone, Debug)]
pub struct DooSabin {
    pub mesh: HalfEdgeMesh,
    pub face_owner: Vec<Owner>,
    /// For every new face, the original half-edge behind each of its corners.
    pub corner_halfedges: Vec<Vec<HalfEdgeId>>,
}

/// Original half-edges whose Doo-Sabin points form the polygon of `owner`, in CCW order.
pub fn owner_halfedges(m: &HalfEdgeMesh, owner: Owner) -> Vec<HalfEdgeId> {
    match owner {
        Owner::Face(f) => m.face_halfedges(f),
        Owner::Vertex(v) => m.vertex_outgoing(v),
        Owner::Edge(e) => {
            let h = 2 * e;
            let t = h + 1;
            vec![h, m.next(t), t, m.next(h)]
        }
    }
}

/// Every owner of `m` in canonical order: faces, vertices, edges.
pub fn all_owners(m: &HalfEdgeMesh) -> Vec<Owner> {
    (0..m.num_faces())
        .map(Owner::Face)
        .chain((0..m.num_vertices()).map(Owner::Vertex))
        .chain((0..m.num_edges()).map(Owner::Edge))
        .collect()
}

pub fn doo_sabin_points(m: &HalfEdgeMesh) -> Vec<Vec3> {
    let centroids: Vec<Vec3> = (0..m.num_faces()).map(|f| m.face_centroid(f)).collect();
    (0..m.num_halfedges()).map(|h| doo_sabin_point(m, h, &centroids[m.face(h)])).collect()
}

pub fn doo_sabin_refine(m: &HalfEdgeMesh) -> Result<DooSabin, MeshError> {
    let positions = doo_sabin_points(m);
    let face_owner = all_owners(m);
    let corner_halfedges: Vec<Vec<HalfEdgeId>> = face_owner.iter().map(|&o| owner_halfedges(m, o)).collect();
    // Valence-two vertices yield two-sided faces, which are rejected here.
    let mesh = HalfEdgeMesh::from_polygons(positions, &corner_halfedges)?;
    Ok(DooSabin { mesh, face_owner, corner_halfedges })
}

/// Dual mesh: one vertex per face (at its centroid), one face per vertex.
pub fn dual_mesh(m: &HalfEdgeMesh) -> Result<HalfEdgeMesh, MeshError> {
    let positions: Vec<Vec3> = (0..m.num_faces()).map(|f| m.face_centroid(f)).collect();
    let fans: Vec<Vec<HalfEdgeId>> = (0..m.num_vertices()).map(|v| m.vertex_outgoing(v)).collect();
    // Dual half-edge k of fan v runs face(h_k) -> face(h_{k+1}) and crosses the edge of h_{k+1}.
    let mut slot = vec![(0, 0); m.num_halfedges()];
    for (v, fan) in fans.iter().enumerate() {
        for k in 0..fan.len() {
            slot[fan[(k + 1) % fan.len()]] = (v, k);
        }
    }
    let loops: Vec<RawLoop> = fans
        .iter()
        .map(|fan| RawLoop {
            origins: fan.iter().map(|&h| m.face(h)).collect(),
            twins: (0..fan.len()).map(|k| slot[m.twin(fan[(k + 1) % fan.len()])]).collect(),
        })
        .collect();
    HalfEdgeMesh::from_raw(positions, &loops)
}
