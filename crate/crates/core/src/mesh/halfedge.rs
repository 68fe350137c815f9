use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MeshError;
use crate::geom::{mean, Vec3};

pub type VertexId = usize;
pub type HalfEdgeId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

/// Half-edges are stored in twin pairs: edge `e` owns half-edges `2e` and `2e + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfEdge {
    pub origin: VertexId,
    pub next: HalfEdgeId,
    pub prev: HalfEdgeId,
    pub face: FaceId,
}

/// Closed orientable two-manifold polygon mesh.
///
/// Faces are counter-clockwise when seen from outside; the face lies to the
/// left of each of its half-edges. A face loop may visit the same vertex (and
/// both halves of the same edge) more than once, which is how handles created
/// by [`HalfEdgeMesh::insert_edge`] are represented.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfEdgeMesh {
    positions: Vec<Vec3>,
    halfedges: Vec<HalfEdge>,
    vertex_out: Vec<HalfEdgeId>,
    face_start: Vec<HalfEdgeId>,
}

/// A corner of a face: the `occurrence`-th visit of `vertex` along the loop of `face`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CornerRef {
    pub face: FaceId,
    pub vertex: VertexId,
    #[serde(default)]
    pub occurrence: usize,
}

impl CornerRef {
    pub fn new(face: FaceId, vertex: VertexId) -> Self {
        Self { face, vertex, occurrence: 0 }
    }
}

/// One face loop given as origin vertices plus, for each half-edge, the
/// (loop, position) of its twin.
pub(crate) struct RawLoop {
    pub origins: Vec<VertexId>,
    pub twins: Vec<(usize, usize)>,
}

impl HalfEdgeMesh {
    /// Build from consistently wound polygons (vertex indices).
    pub fn from_polygons(positions: Vec<Vec3>, faces: &[Vec<VertexId>]) -> Result<Self, MeshError> {
        let nv = positions.len();
        let mut directed: HashMap<(VertexId, VertexId), (usize, usize)> = HashMap::new();
        let mut undirected: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        for (fi, face) in faces.iter().enumerate() {
            if face.len() < 3 {
                return Err(MeshError::Topology(format!("face {fi} has {} sides", face.len())));
            }
            for (k, &a) in face.iter().enumerate() {
                let b = face[(k + 1) % face.len()];
                if a >= nv || b >= nv {
                    return Err(MeshError::Parse { line: 0, message: format!("face {fi} references missing vertex") });
                }
                if a == b {
                    return Err(MeshError::Topology(format!("face {fi} has a degenerate edge at vertex {a}")));
                }
                *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
                if directed.insert((a, b), (fi, k)).is_some() {
                    // Both uses of the edge run the same way, or the edge is used more than twice.
                    if undirected[&(a.min(b), a.max(b))] > 2 {
                        return Err(MeshError::Manifold(format!("edge ({a}, {b}) has more than two incident faces")));
                    }
                    return Err(MeshError::Orientation(format!("edge ({a}, {b}) is traversed twice in the same direction")));
                }
            }
        }
        for (&(a, b), &count) in &undirected {
            if count > 2 {
                return Err(MeshError::Manifold(format!("edge ({a}, {b}) has {count} incident faces")));
            }
            if count == 1 {
                return Err(MeshError::Boundary(format!("edge ({a}, {b}) has a single incident face")));
            }
        }
        let loops = faces
            .iter()
            .map(|face| {
                let n = face.len();
                RawLoop {
                    origins: face.clone(),
                    twins: (0..n).map(|k| directed[&(face[(k + 1) % n], face[k])]).collect(),
                }
            })
            .collect::<Vec<_>>();
        Self::from_raw(positions, &loops)
    }

    pub(crate) fn from_raw(positions: Vec<Vec3>, loops: &[RawLoop]) -> Result<Self, MeshError> {
        let nv = positions.len();
        let mut offset = Vec::with_capacity(loops.len());
        let mut total = 0;
        for l in loops {
            offset.push(total);
            total += l.origins.len();
        }
        // Assign twin pairs in order of first appearance.
        let mut slot = vec![usize::MAX; total];
        let mut next_pair = 0;
        for (li, l) in loops.iter().enumerate() {
            for k in 0..l.origins.len() {
                let t = offset[li] + k;
                if slot[t] != usize::MAX {
                    continue;
                }
                let (tl, tk) = l.twins[k];
                let tt = offset[tl] + tk;
                if tt == t || slot[tt] != usize::MAX {
                    return Err(MeshError::Manifold("inconsistent twin assignment".into()));
                }
                slot[t] = 2 * next_pair;
                slot[tt] = 2 * next_pair + 1;
                next_pair += 1;
            }
        }
        let placeholder = HalfEdge { origin: 0, next: 0, prev: 0, face: 0 };
        let mut halfedges = vec![placeholder; total];
        let mut face_start = Vec::with_capacity(loops.len());
        for (li, l) in loops.iter().enumerate() {
            let n = l.origins.len();
            for k in 0..n {
                let h = slot[offset[li] + k];
                halfedges[h] = HalfEdge {
                    origin: l.origins[k],
                    next: slot[offset[li] + (k + 1) % n],
                    prev: slot[offset[li] + (k + n - 1) % n],
                    face: li,
                };
            }
            face_start.push(slot[offset[li]]);
        }
        let mut vertex_out = vec![usize::MAX; nv];
        for (h, he) in halfedges.iter().enumerate() {
            if vertex_out[he.origin] == usize::MAX {
                vertex_out[he.origin] = h;
            }
        }
        if let Some(v) = vertex_out.iter().position(|&h| h == usize::MAX) {
            return Err(MeshError::Manifold(format!("vertex {v} is isolated")));
        }
        let mesh = Self { positions, halfedges, vertex_out, face_start };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.halfedges.len() / 2
    }

    pub fn num_halfedges(&self) -> usize {
        self.halfedges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.face_start.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.num_vertices()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in 0..self.num_edges() {
            let a = find(&mut parent, self.origin(2 * e));
            let b = find(&mut parent, self.origin(2 * e + 1));
            if a != b {
                parent[a] = b;
            }
        }
        (0..self.num_vertices()).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// Total genus, summed over components.
    pub fn genus(&self) -> i64 {
        (2 * self.components() as i64 - self.euler_characteristic()) / 2
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, v: VertexId) -> Vec3 {
        self.positions[v]
    }

    pub fn set_position(&mut self, v: VertexId, p: Vec3) {
        self.positions[v] = p;
    }

    pub fn halfedge(&self, h: HalfEdgeId) -> &HalfEdge {
        &self.halfedges[h]
    }

    pub fn origin(&self, h: HalfEdgeId) -> VertexId {
        self.halfedges[h].origin
    }

    pub fn dest(&self, h: HalfEdgeId) -> VertexId {
        self.halfedges[h ^ 1].origin
    }

    pub fn twin(&self, h: HalfEdgeId) -> HalfEdgeId {
        h ^ 1
    }

    pub fn next(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.halfedges[h].next
    }

    pub fn prev(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.halfedges[h].prev
    }

    pub fn face(&self, h: HalfEdgeId) -> FaceId {
        self.halfedges[h].face
    }

    pub fn edge(&self, h: HalfEdgeId) -> EdgeId {
        h / 2
    }

    pub fn edge_vertices(&self, e: EdgeId) -> (VertexId, VertexId) {
        (self.origin(2 * e), self.origin(2 * e + 1))
    }

    pub fn face_halfedge(&self, f: FaceId) -> HalfEdgeId {
        self.face_start[f]
    }

    /// Half-edges of a face in loop order, starting at the face's first half-edge.
    pub fn face_halfedges(&self, f: FaceId) -> Vec<HalfEdgeId> {
        let start = self.face_start[f];
        let mut out = vec![start];
        let mut h = self.next(start);
        while h != start {
            out.push(h);
            h = self.next(h);
        }
        out
    }

    pub fn face_vertices(&self, f: FaceId) -> Vec<VertexId> {
        self.face_halfedges(f).into_iter().map(|h| self.origin(h)).collect()
    }

    pub fn face_len(&self, f: FaceId) -> usize {
        self.face_halfedges(f).len()
    }

    pub fn face_centroid(&self, f: FaceId) -> Vec3 {
        let pts: Vec<Vec3> = self.face_vertices(f).into_iter().map(|v| self.positions[v]).collect();
        mean(&pts)
    }

    /// Outgoing half-edges of `v` in counter-clockwise order seen from outside.
    pub fn vertex_outgoing(&self, v: VertexId) -> Vec<HalfEdgeId> {
        let start = self.vertex_out[v];
        let mut out = vec![start];
        let mut h = self.twin(self.prev(start));
        while h != start {
            out.push(h);
            h = self.twin(self.prev(h));
            if out.len() > self.halfedges.len() {
                break;
            }
        }
        out
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.vertex_outgoing(v).len()
    }

    pub fn edge_midpoint(&self, e: EdgeId) -> Vec3 {
        let (a, b) = self.edge_vertices(e);
        crate::geom::midpoint(&self.positions[a], &self.positions[b])
    }

    /// Resolve a corner to the half-edge leaving that corner along the face loop.
    pub fn corner_halfedge(&self, c: CornerRef) -> Result<HalfEdgeId, MeshError> {
        if c.face >= self.num_faces() {
            return Err(MeshError::Corner(format!("face {} does not exist", c.face)));
        }
        self.face_halfedges(c.face)
            .into_iter()
            .filter(|&h| self.origin(h) == c.vertex)
            .nth(c.occurrence)
            .ok_or_else(|| {
                MeshError::Corner(format!(
                    "vertex {} (occurrence {}) is not a corner of face {}",
                    c.vertex, c.occurrence, c.face
                ))
            })
    }

    /// Structural validation: pairing, loops, closedness and vertex manifoldness.
    pub fn validate(&self) -> Result<(), MeshError> {
        let nh = self.halfedges.len();
        if !nh.is_multiple_of(2) {
            return Err(MeshError::Manifold("odd number of half-edges".into()));
        }
        for (h, he) in self.halfedges.iter().enumerate() {
            if he.next >= nh || he.prev >= nh || he.face >= self.num_faces() || he.origin >= self.num_vertices() {
                return Err(MeshError::Manifold(format!("half-edge {h} has a dangling reference")));
            }
            if self.halfedges[he.next].prev != h || self.halfedges[he.prev].next != h {
                return Err(MeshError::Manifold(format!("half-edge {h} breaks next/prev consistency")));
            }
            if self.halfedges[he.next].face != he.face {
                return Err(MeshError::Manifold(format!("half-edge {h} leaves its face loop")));
            }
            // Orientability: twins run in opposite directions.
            if self.origin(he.next) != self.origin(h ^ 1) {
                return Err(MeshError::Orientation(format!("half-edge {h} and its twin do not oppose")));
            }
        }
        let mut seen = vec![false; nh];
        for f in 0..self.num_faces() {
            let start = self.face_start[f];
            if self.halfedges[start].face != f {
                return Err(MeshError::Manifold(format!("face {f} start is not in its loop")));
            }
            let mut h = start;
            let mut n = 0;
            loop {
                if seen[h] {
                    return Err(MeshError::Manifold(format!("half-edge {h} is in two loops")));
                }
                seen[h] = true;
                n += 1;
                h = self.next(h);
                if h == start {
                    break;
                }
            }
            if n < 3 {
                return Err(MeshError::Topology(format!("face {f} has {n} sides")));
            }
        }
        if let Some(h) = seen.iter().position(|s| !s) {
            return Err(MeshError::Boundary(format!("half-edge {h} belongs to no face")));
        }
        let mut out_count = vec![0usize; self.num_vertices()];
        for he in &self.halfedges {
            out_count[he.origin] += 1;
        }
        for v in 0..self.num_vertices() {
            let h = self.vertex_out[v];
            if h >= nh || self.origin(h) != v {
                return Err(MeshError::Manifold(format!("vertex {v} has no valid outgoing half-edge")));
            }
            let fan = self.vertex_outgoing(v).len();
            if fan != out_count[v] {
                return Err(MeshError::Manifold(format!(
                    "vertex {v} is non-manifold: fan of {fan} but {} outgoing half-edges",
                    out_count[v]
                )));
            }
        }
        Ok(())
    }

    /// Insert an edge between two corners.
    ///
    /// Corners on the same face split it in two; corners on different faces
    /// merge those faces into one, adding a handle (or joining components).
    pub fn insert_edge(&mut self, c1: CornerRef, c2: CornerRef) -> Result<EdgeId, MeshError> {
        let h1 = self.corner_halfedge(c1)?;
        let h2 = self.corner_halfedge(c2)?;
        if h1 == h2 {
            return Err(MeshError::Corner("both corners are the same".into()));
        }
        let v1 = self.origin(h1);
        let v2 = self.origin(h2);
        if v1 == v2 {
            return Err(MeshError::Topology("an edge from a vertex to itself is not allowed".into()));
        }
        let f1 = self.face(h1);
        let f2 = self.face(h2);
        if f1 == f2 && (self.next(h1) == h2 || self.next(h2) == h1) {
            return Err(MeshError::Topology("splitting between adjacent corners would create a two-sided face".into()));
        }
        let p1 = self.prev(h1);
        let p2 = self.prev(h2);
        let e = self.num_edges();
        let a = 2 * e;
        let b = a + 1;
        self.halfedges.push(HalfEdge { origin: v1, next: h2, prev: p1, face: f1 });
        self.halfedges.push(HalfEdge { origin: v2, next: h1, prev: p2, face: f1 });
        self.halfedges[p1].next = a;
        self.halfedges[h2].prev = a;
        self.halfedges[p2].next = b;
        self.halfedges[h1].prev = b;
        if f1 == f2 {
            let nf = self.face_start.len();
            self.face_start.push(b);
            self.face_start[f1] = a;
            let mut h = b;
            loop {
                self.halfedges[h].face = nf;
                h = self.next(h);
                if h == b {
                    break;
                }
            }
        } else {
            let mut h = a;
            loop {
                self.halfedges[h].face = f1;
                h = self.next(h);
                if h == a {
                    break;
                }
            }
            self.face_start[f1] = a;
            self.remove_face(f2);
        }
        debug_assert!(self.validate().is_ok(), "{:?}", self.validate());
        Ok(e)
    }

    /// Remove an edge; the exact inverse of [`HalfEdgeMesh::insert_edge`].
    pub fn delete_edge(&mut self, e: EdgeId) -> Result<(), MeshError> {
        if e >= self.num_edges() {
            return Err(MeshError::Topology(format!("edge {e} does not exist")));
        }
        let h = 2 * e;
        let t = h + 1;
        let fh = self.face(h);
        let ft = self.face(t);
        let (a, b) = (self.origin(h), self.origin(t));
        if self.next(h) == t || self.next(t) == h {
            return Err(MeshError::Topology(format!("deleting edge {e} would leave a dangling vertex")));
        }
        if self.valence(a) < 3 || self.valence(b) < 3 {
            return Err(MeshError::Topology(format!("deleting edge {e} would leave a dangling vertex")));
        }
        let (nh, pt, nt, ph) = (self.next(h), self.prev(t), self.next(t), self.prev(h));
        if fh != ft {
            if self.face_len(fh) + self.face_len(ft) - 2 < 3 {
                return Err(MeshError::Topology(format!("deleting edge {e} would leave a face with fewer than three sides")));
            }
            self.halfedges[ph].next = nt;
            self.halfedges[nt].prev = ph;
            self.halfedges[pt].next = nh;
            self.halfedges[nh].prev = pt;
            let mut x = nh;
            loop {
                self.halfedges[x].face = fh;
                x = self.next(x);
                if x == nh {
                    break;
                }
            }
            self.face_start[fh] = nh;
            self.vertex_out[a] = nt;
            self.vertex_out[b] = nh;
            self.remove_pair(e);
            self.remove_face(ft);
        } else {
            let len_a = self.loop_len_between(nh, t);
            let len_b = self.loop_len_between(nt, h);
            if len_a < 3 || len_b < 3 {
                return Err(MeshError::Topology(format!("deleting edge {e} would leave a face with fewer than three sides")));
            }
            self.halfedges[pt].next = nh;
            self.halfedges[nh].prev = pt;
            self.halfedges[ph].next = nt;
            self.halfedges[nt].prev = ph;
            self.face_start[fh] = nh;
            let nf = self.face_start.len();
            self.face_start.push(nt);
            let mut x = nt;
            loop {
                self.halfedges[x].face = nf;
                x = self.next(x);
                if x == nt {
                    break;
                }
            }
            self.vertex_out[a] = nt;
            self.vertex_out[b] = nh;
            self.remove_pair(e);
        }
        debug_assert!(self.validate().is_ok(), "{:?}", self.validate());
        Ok(())
    }

    /// Number of half-edges from `from` (inclusive) up to `stop` (exclusive) along `next`.
    fn loop_len_between(&self, from: HalfEdgeId, stop: HalfEdgeId) -> usize {
        let mut n = 0;
        let mut x = from;
        while x != stop {
            n += 1;
            x = self.next(x);
            if n > self.halfedges.len() {
                break;
            }
        }
        n
    }

    /// Drop edge `e`'s half-edges (already unlinked) by moving the last pair into its slot.
    fn remove_pair(&mut self, e: EdgeId) {
        let last = self.num_edges() - 1;
        if e != last {
            let remap = |x: HalfEdgeId| if x / 2 == last { 2 * e + (x & 1) } else { x };
            for k in 0..2 {
                self.halfedges[2 * e + k] = self.halfedges[2 * last + k];
            }
            for he in self.halfedges.iter_mut() {
                he.next = remap(he.next);
                he.prev = remap(he.prev);
            }
            for h in self.vertex_out.iter_mut() {
                *h = remap(*h);
            }
            for h in self.face_start.iter_mut() {
                *h = remap(*h);
            }
        }
        self.halfedges.truncate(2 * last);
    }

    /// Drop face `f` (no half-edge may still reference it) by moving the last face into its slot.
    fn remove_face(&mut self, f: FaceId) {
        let last = self.face_start.len() - 1;
        if f != last {
            self.face_start[f] = self.face_start[last];
            for he in self.halfedges.iter_mut() {
                if he.face == last {
                    he.face = f;
                }
            }
        }
        self.face_start.pop();
    }

    /// Faces as vertex index loops, in face order.
    pub fn polygons(&self) -> Vec<Vec<VertexId>> {
        (0..self.num_faces()).map(|f| self.face_vertices(f)).collect()
    }

    /// Combinatorial isomorphism test that maps vertex `i` to vertex `i`
    /// and matches faces as cyclic vertex sequences.
    pub fn same_connectivity(&self, other: &HalfEdgeMesh) -> bool {
        if self.num_vertices() != other.num_vertices()
            || self.num_edges() != other.num_edges()
            || self.num_faces() != other.num_faces()
        {
            return false;
        }
        let canon = |m: &HalfEdgeMesh| {
            let mut faces: Vec<Vec<VertexId>> = m
                .polygons()
                .into_iter()
                .map(|p| {
                    let k = (0..p.len()).min_by_key(|&i| (p[i], p[(i + 1) % p.len()])).unwrap_or(0);
                    let mut r = p.clone();
                    r.rotate_left(k);
                    r
                })
                .collect();
            faces.sort();
            faces
        };
        canon(self) == canon(other)
    }
}
