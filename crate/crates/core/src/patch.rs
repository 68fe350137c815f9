//! Bicubic Bezier nets assembled from polygon frames.
//!
//! Patch `h` belongs to original half-edge `h` (one per face corner). Its
//! corners are, in order, the frame of `face(h)`, the frame of
//! `edge(prev h)`, the frame of `origin(h)` and the frame of `edge(h)`, placed
//! at net positions (0,0), (3,0), (3,3) and (0,3). Side `k` runs from corner
//! `k` to corner `k + 1`; neighbors traverse shared sides in reverse.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{corner_slots, CornerSlots, FrameSet};
use crate::geom::{arr3, fit_plane, midpoint, vec3, Vec3};
use crate::kernels::{subdivide_net, KernelTable, Net};
use crate::mesh::{quad_neighbor, HalfEdgeMesh, Owner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("AssemblyError: {0}")]
    Assembly(String),
}

/// Net position of each patch corner.
pub const CORNER_POS: [(usize, usize); 4] = [(0, 0), (3, 0), (3, 3), (0, 3)];

/// Net index of the point `s` steps along side `k` and `d` steps inward.
///
/// With `k` read as a corner, `(s, d)` walks along the corner's outgoing side
/// and its incoming side respectively, which gives a corner-local view of the net.
pub fn side_index(k: usize, s: usize, d: usize) -> (usize, usize) {
    match k {
        0 => (s, d),
        1 => (3 - d, s),
        2 => (3 - s, 3 - d),
        3 => (d, 3 - s),
        _ => panic!("side {k} out of range"),
    }
}

/// Patch parameters of the point at `t` along side `k` and `s` inward.
pub fn side_param(k: usize, t: f64, s: f64) -> (f64, f64) {
    match k {
        0 => (t, s),
        1 => (1.0 - s, t),
        2 => (1.0 - t, 1.0 - s),
        3 => (s, 1.0 - t),
        _ => panic!("side {k} out of range"),
    }
}

/// Corner `c` of the net seen from that corner, see [`side_index`].
pub fn corner_view(net: &Net, c: usize, a: usize, b: usize) -> Vec3 {
    let (i, j) = side_index(c, a, b);
    net[i][j]
}

/// Quadrant of a subdivision that contains patch corner `c`.
pub fn corner_quadrant(c: usize) -> usize {
    let (i, j) = CORNER_POS[c];
    2 * (i / 3) + j / 3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerMeta {
    pub valence: usize,
    pub extraordinary: bool,
    /// Frame owning this corner; `None` for corners created by subdivision.
    pub frame: Option<Owner>,
    /// Index of this patch's sector in the frame.
    pub slot: Option<usize>,
    /// Frame plane normal (zero when there is no frame).
    #[serde(with = "vec3_serde")]
    pub normal: Vec3,
}

impl CornerMeta {
    pub fn regular() -> Self {
        Self { valence: 4, extraordinary: false, frame: None, slot: None, normal: Vec3::zeros() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborLink {
    pub patch: usize,
    /// Side index in the neighbor.
    pub side: usize,
    /// Whether the neighbor walks the shared side in the opposite direction.
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BezierPatch {
    pub net: Net,
    pub corners: [CornerMeta; 4],
    pub neighbors: [NeighborLink; 4],
}

impl BezierPatch {
    pub fn is_extraordinary(&self) -> bool {
        self.corners.iter().any(|c| c.extraordinary)
    }

    /// Points of side `k` in traversal order.
    pub fn side_points(&self, k: usize) -> [Vec3; 4] {
        std::array::from_fn(|s| {
            let (i, j) = side_index(k, s, 0);
            self.net[i][j]
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchClass {
    Regular,
    Extraordinary,
}

pub fn classify_patch(patch: &BezierPatch) -> PatchClass {
    if patch.is_extraordinary() {
        PatchClass::Extraordinary
    } else {
        PatchClass::Regular
    }
}

/// A side shared by two patches, listed once with `a < b` in (patch, side) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SharedBoundary {
    pub a: (usize, usize),
    pub b: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    pub patches: Vec<BezierPatch>,
    pub boundaries: Vec<SharedBoundary>,
    /// For every frame (in [`FrameSet`] order) its (patch, corner) fan, sorted by slot.
    pub fans: Vec<Vec<(usize, usize)>>,
    /// Id of the refined-mesh vertex at each patch corner.
    pub corner_vertex: Vec<[usize; 4]>,
}

/// Frame owner, and the original half-edge whose slot selects the sector, for corner `c` of patch `h`.
fn corner_owner(mesh: &HalfEdgeMesh, h: usize, c: usize) -> Owner {
    match c {
        0 => Owner::Face(mesh.face(h)),
        1 => Owner::Edge(mesh.edge(mesh.prev(h))),
        2 => Owner::Vertex(mesh.origin(h)),
        _ => Owner::Edge(mesh.edge(h)),
    }
}

/// Id of the refined-mesh vertex for corner `c` of patch `h` (vertices, then edges, then faces).
fn corner_vertex(mesh: &HalfEdgeMesh, h: usize, c: usize) -> usize {
    let (nv, ne) = (mesh.num_vertices(), mesh.num_edges());
    match c {
        0 => nv + ne + mesh.face(h),
        1 => nv + mesh.edge(mesh.prev(h)),
        2 => mesh.origin(h),
        _ => nv + mesh.edge(h),
    }
}

fn slot_of(slots: &[CornerSlots], h: usize, c: usize) -> usize {
    match c {
        0 => slots[h].face,
        1 => slots[h].prev_edge,
        2 => slots[h].vertex,
        _ => slots[h].edge,
    }
}

/// Net, corner metadata and neighbor links of patch `h`.
fn assemble_patch(mesh: &HalfEdgeMesh, frames: &FrameSet, slots: &[CornerSlots], h: usize) -> Result<BezierPatch, AssemblyError> {
    let mut net = [[Vec3::zeros(); 4]; 4];
    let mut corners = [CornerMeta::regular(); 4];
    let mut neighbors = [NeighborLink { patch: 0, side: 0, reversed: true }; 4];
    for c in 0..4 {
        let owner = corner_owner(mesh, h, c);
        let frame = frames.get(owner).ok_or_else(|| AssemblyError::Assembly(format!("missing frame {owner:?}")))?;
        let k = frame.k();
        let s = slot_of(slots, h, c);
        if frame.halfedges.get(s) != Some(&h) {
            return Err(AssemblyError::Assembly(format!("sector {s} of {owner:?} is not patch {h}")));
        }
        // Sectors of the two neighbors that share this corner's sides.
        let (hn, kn) = quad_neighbor(mesh, h, c);
        let s_out = slot_of(slots, hn, (kn + 1) % 4);
        let (hp, kp) = quad_neighbor(mesh, h, (c + 3) % 4);
        let s_in = slot_of(slots, hp, kp);
        if corner_owner(mesh, hn, (kn + 1) % 4) != owner || corner_owner(mesh, hp, kp) != owner {
            return Err(AssemblyError::Assembly(format!("neighbor sectors of patch {h} disagree on {owner:?}")));
        }
        let adjacent = |t: usize| t == (s + 1) % k || (t + 1) % k == s;
        if !adjacent(s_out) || !adjacent(s_in) || (k > 2 && s_out == s_in) {
            return Err(AssemblyError::Assembly(format!("sectors of {owner:?} around patch {h} are not adjacent")));
        }
        let cs = frame.corners[s];
        let mut set = |a: usize, b: usize, p: Vec3| {
            let (i, j) = side_index(c, a, b);
            net[i][j] = p;
        };
        set(0, 0, frame.centroid);
        set(1, 0, midpoint(&cs, &frame.corners[s_out]));
        set(0, 1, midpoint(&cs, &frame.corners[s_in]));
        set(1, 1, cs);
        corners[c] = CornerMeta { valence: k, extraordinary: k != 4, frame: Some(owner), slot: Some(s), normal: frame.normal };
        neighbors[c] = NeighborLink { patch: hn, side: kn, reversed: true };
    }
    Ok(BezierPatch { net, corners, neighbors })
}

fn check_coverage(mesh: &HalfEdgeMesh, frames: &FrameSet) -> Result<(), AssemblyError> {
    let total = mesh.num_faces() + mesh.num_vertices() + mesh.num_edges();
    if frames.num_faces() != mesh.num_faces() || frames.num_vertices() != mesh.num_vertices() || frames.len() != total {
        return Err(AssemblyError::Assembly("frame set does not cover the mesh".into()));
    }
    Ok(())
}

/// Assemble one net per face corner of `mesh` from `frames`.
pub fn build_patches(mesh: &HalfEdgeMesh, frames: &FrameSet) -> Result<PatchSet, AssemblyError> {
    check_coverage(mesh, frames)?;
    let slots = corner_slots(mesh);
    let n = mesh.num_halfedges();
    let build = |h: usize| assemble_patch(mesh, frames, &slots, h);
    #[cfg(feature = "parallel")]
    let patches: Result<Vec<BezierPatch>, AssemblyError> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let patches: Result<Vec<BezierPatch>, AssemblyError> = (0..n).map(build).collect();
    let patches = patches?;

    let mut boundaries = Vec::with_capacity(n * 2);
    for (p, patch) in patches.iter().enumerate() {
        for (k, link) in patch.neighbors.iter().enumerate() {
            if (p, k) < (link.patch, link.side) {
                boundaries.push(SharedBoundary { a: (p, k), b: (link.patch, link.side) });
            }
        }
    }
    let mut fans: Vec<Vec<(usize, usize)>> = frames.frames.iter().map(|f| Vec::with_capacity(f.k())).collect();
    for (p, patch) in patches.iter().enumerate() {
        for (c, meta) in patch.corners.iter().enumerate() {
            let owner = meta.frame.expect("assembled corners carry frames");
            fans[frames.index(owner)].push((p, c));
        }
    }
    for (fan, frame) in fans.iter_mut().zip(&frames.frames) {
        fan.sort_by_key(|&(p, c)| patches[p].corners[c].slot);
        if fan.len() != frame.k() {
            return Err(AssemblyError::Assembly(format!("fan of {:?} has {} patches for K = {}", frame.owner, fan.len(), frame.k())));
        }
    }
    let corner_vertex = (0..n).map(|h| std::array::from_fn(|c| corner_vertex(mesh, h, c))).collect();
    Ok(PatchSet { patches, boundaries, fans, corner_vertex })
}

impl PatchSet {
    /// Reassemble only the listed patches after a geometric change of `frames`
    /// (same mesh connectivity as when the set was built).
    pub fn rebuild(&mut self, mesh: &HalfEdgeMesh, frames: &FrameSet, dirty: &[usize]) -> Result<(), AssemblyError> {
        check_coverage(mesh, frames)?;
        if mesh.num_halfedges() != self.patches.len() {
            return Err(AssemblyError::Assembly("mesh connectivity changed; rebuild the whole set".into()));
        }
        let slots = corner_slots(mesh);
        for &h in dirty {
            self.patches[h] = assemble_patch(mesh, frames, &slots, h)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Fan of a corner in rotational order: each patch's outgoing side is the
    /// next patch's incoming side.
    pub fn ordered_fan(&self, start: (usize, usize)) -> Vec<(usize, usize)> {
        let mut fan = vec![start];
        let (mut p, mut c) = start;
        loop {
            let link = self.patches[p].neighbors[c];
            (p, c) = (link.patch, (link.side + 1) % 4);
            if (p, c) == start || fan.len() > self.patches.len() * 4 {
                break;
            }
            fan.push((p, c));
        }
        fan
    }

    pub fn to_json(&self) -> serde_json::Value {
        let patches: Vec<serde_json::Value> = self
            .patches
            .iter()
            .map(|p| {
                let points: Vec<[f64; 3]> = p.net.iter().flat_map(|row| row.iter().map(arr3)).collect();
                serde_json::json!({ "P": points, "corners": p.corners, "neighbors": p.neighbors })
            })
            .collect();
        serde_json::json!({ "patches": patches, "boundaries": self.boundaries })
    }
}

/// Residuals of the shared-boundary conditions of an assembled patch set.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AssemblyReport {
    /// Per shared boundary: max point gap between the two copies of the boundary row.
    pub position_gap: Vec<f64>,
    /// Per shared boundary: max `|(A_i1 - A_i0) + (B_i1 - B_i0)|` over rows whose end corner is 4-valent or interior.
    pub tangent_residual: Vec<f64>,
    /// Per frame fan: max tangent residual at the corner's two neighbor rows.
    pub corner_residual: Vec<f64>,
    /// Per frame fan with K != 4: max distance of first-order points to the frame plane.
    pub coplanarity: Vec<Option<f64>>,
}

impl AssemblyReport {
    pub fn max(&self) -> f64 {
        let opt = self.coplanarity.iter().flatten();
        self.position_gap.iter().chain(&self.tangent_residual).chain(&self.corner_residual).chain(opt).fold(0.0, |a, &b| a.max(b))
    }
}

/// Check position and first-derivative agreement of every shared boundary.
pub fn check_boundary_conditions(set: &PatchSet) -> AssemblyReport {
    let mut report = AssemblyReport::default();
    for b in &set.boundaries {
        let (pa, ka) = b.a;
        let (pb, kb) = b.b;
        let (na, nb) = (&set.patches[pa].net, &set.patches[pb].net);
        let at = |net: &Net, k: usize, s: usize, d: usize| {
            let (i, j) = side_index(k, s, d);
            net[i][j]
        };
        let mut gap: f64 = 0.0;
        let mut tangent: f64 = 0.0;
        for s in 0..4 {
            let (a0, b0) = (at(na, ka, s, 0), at(nb, kb, 3 - s, 0));
            gap = gap.max((a0 - b0).norm());
            // Rows 0 and 3 sit on corners; there the condition holds only for valence 4.
            let corner = match s {
                0 => Some(ka),
                3 => Some((ka + 1) % 4),
                _ => None,
            };
            if corner.is_some_and(|c| set.patches[pa].corners[c].valence != 4) {
                continue;
            }
            let r = (at(na, ka, s, 1) - a0) + (at(nb, kb, 3 - s, 1) - b0);
            tangent = tangent.max(r.norm());
        }
        report.position_gap.push(gap);
        report.tangent_residual.push(tangent);
    }
    for fan in &set.fans {
        let mut residual: f64 = 0.0;
        let mut points = Vec::with_capacity(2 * fan.len() + 1);
        for &(p, c) in fan {
            let net = &set.patches[p].net;
            let link = set.patches[p].neighbors[c];
            let other = &set.patches[link.patch].net;
            let corner = corner_view(net, c, 0, 0);
            let blue = corner_view(net, c, 1, 0);
            // The neighbor sees the same sector boundary as its incoming side.
            let cn = (link.side + 1) % 4;
            let r = (corner_view(net, c, 1, 1) - blue) + (corner_view(other, cn, 1, 1) - corner_view(other, cn, 0, 1));
            residual = residual.max(r.norm());
            points.extend([corner, blue, corner_view(net, c, 1, 1)]);
        }
        report.corner_residual.push(residual);
        let meta = fan.first().map(|&(p, c)| set.patches[p].corners[c]);
        report.coplanarity.push(match meta {
            Some(m) if m.valence != 4 => {
                let origin = points[0];
                Some(points.iter().map(|q| (q - origin).dot(&m.normal).abs()).fold(0.0, f64::max))
            }
            _ => None,
        });
    }
    report
}

/// Max distance of the points to their least-squares plane.
pub fn planarity_residual(points: &[Vec3]) -> f64 {
    let (c, n, _) = fit_plane(points);
    points.iter().map(|p| (p - c).dot(&n).abs()).fold(0.0, f64::max)
}

/// Four children of a patch in quadrant order 00, 01, 10, 11.
///
/// The child in the quadrant of parent corner `c` keeps that corner's metadata;
/// the other child corners are new 4-valent corners.
pub fn subdivide_patch(net: &Net, corners: &[CornerMeta; 4], table: &KernelTable) -> [(Net, [CornerMeta; 4]); 4] {
    let nets = subdivide_net(net, table);
    std::array::from_fn(|q| {
        let mut meta = [CornerMeta::regular(); 4];
        for (c, m) in corners.iter().enumerate() {
            if corner_quadrant(c) == q {
                meta[c] = *m;
            }
        }
        (nets[q], meta)
    })
}

mod vec3_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> Result<S::Ok, S::Error> {
        arr3(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec3, D::Error> {
        <[f64; 3]>::deserialize(d).map(vec3)
    }
}
