//! K-sided polygon frames for every face, vertex and edge of a mesh.
//!
//! Corner `k` of a frame is the Doo-Sabin point of one original half-edge, so
//! every half-edge contributes one corner to exactly four frames: its face,
//! its origin vertex, its own edge and the edge of its predecessor.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{arr3, bbox_diagonal, fit_plane, mean, rotate_about, vec3, vector_area, Vec3};
use crate::mesh::{all_owners, doo_sabin_points, owner_halfedges, HalfEdgeId, HalfEdgeMesh, Owner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("DegenerateFrameError: {0}")]
    Degenerate(String),
    #[error("ParamError: {0}")]
    Param(String),
    #[error("FrameCoverageError: {0}")]
    Coverage(String),
}

/// Planar tolerance relative to the model's bounding-box diagonal.
pub const PLANE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PolygonFrame {
    pub owner: Owner,
    pub corners: Vec<Vec3>,
    /// Mean of the corners.
    pub centroid: Vec3,
    /// Unit normal, oriented like the polygon's vector area.
    pub normal: Vec3,
    pub scale: f64,
    pub rotation: f64,
    pub offset: Vec3,
    /// Original half-edge behind each corner.
    pub halfedges: Vec<HalfEdgeId>,
}

impl PolygonFrame {
    pub fn new(owner: Owner, corners: Vec<Vec3>, halfedges: Vec<HalfEdgeId>) -> Self {
        let mut f = Self {
            owner,
            corners,
            centroid: Vec3::zeros(),
            normal: Vec3::z(),
            scale: 1.0,
            rotation: 0.0,
            offset: Vec3::zeros(),
            halfedges,
        };
        f.refresh();
        f
    }

    pub fn k(&self) -> usize {
        self.corners.len()
    }

    /// `V_k = c_k - centroid`.
    pub fn v(&self, k: usize) -> Vec3 {
        self.corners[k] - self.centroid
    }

    /// Recompute the cached centroid and normal from the corners.
    fn refresh(&mut self) {
        self.centroid = mean(&self.corners);
        let area = vector_area(&self.corners);
        let n = if self.k() == 4 {
            area
        } else {
            let (_, n, _) = fit_plane(&self.corners);
            if n.dot(&area) < 0.0 {
                -n
            } else {
                n
            }
        };
        let len = n.norm();
        if len > 0.0 {
            self.normal = n / len;
        }
    }

    fn mean_radius(&self) -> f64 {
        self.corners.iter().map(|c| (c - self.centroid).norm()).sum::<f64>() / self.k() as f64
    }
}

/// Orthogonal projection of the corners onto their least-squares plane.
pub fn planarize(frame: &PolygonFrame) -> Result<PolygonFrame, FrameError> {
    if frame.k() < 3 {
        return Err(FrameError::Degenerate(format!("{:?} has {} corners", frame.owner, frame.k())));
    }
    let (c, n, ev) = fit_plane(&frame.corners);
    if ev[2] <= 0.0 || ev[1] <= 1e-20 * ev[2] {
        return Err(FrameError::Degenerate(format!("{:?} has collinear corners", frame.owner)));
    }
    let dist: Vec<f64> = frame.corners.iter().map(|p| n.dot(&(p - c))).collect();
    let radius = frame.mean_radius();
    if dist.iter().all(|d| d.abs() <= 1e-15 * radius) {
        return Ok(frame.clone());
    }
    let mut out = frame.clone();
    for (p, d) in out.corners.iter_mut().zip(&dist) {
        *p -= n * *d;
    }
    out.refresh();
    Ok(out)
}

/// Apply the midpoint-polygon map `iterations` times, then restore the mean
/// corner radius. Corner `k` stays attached to the same half-edge.
pub fn regularize_dual(frame: &PolygonFrame, iterations: usize) -> Result<PolygonFrame, FrameError> {
    if iterations == 0 || !iterations.is_multiple_of(2) {
        return Err(FrameError::Param(format!("dual iterations must be even and positive, got {iterations}")));
    }
    let k = frame.k();
    let c = frame.centroid;
    let mut v: Vec<Vec3> = frame.corners.iter().map(|p| p - c).collect();
    let before: f64 = v.iter().map(|x| x.norm()).sum::<f64>() / k as f64;
    for _ in 0..iterations {
        v = (0..k).map(|i| (v[i] + v[(i + 1) % k]) * 0.5).collect();
    }
    // After 2j steps point i is centered on original corner i + j.
    v.rotate_right((iterations / 2) % k);
    let after: f64 = v.iter().map(|x| x.norm()).sum::<f64>() / k as f64;
    if after <= 0.0 {
        return Err(FrameError::Degenerate(format!("{:?} collapsed under the dual map", frame.owner)));
    }
    let s = before / after;
    let mut out = frame.clone();
    out.corners = v.iter().map(|x| c + x * s).collect();
    out.refresh();
    Ok(out)
}

/// Scale about the centroid, rotate about the plane normal, then translate.
pub fn set_frame_params(frame: &PolygonFrame, scale: f64, rotation: f64, offset: Vec3) -> Result<PolygonFrame, FrameError> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(FrameError::Param(format!("scale must be positive, got {scale}")));
    }
    if !rotation.is_finite() || !offset.iter().all(|x| x.is_finite()) {
        return Err(FrameError::Param("rotation and offset must be finite".into()));
    }
    if scale == 1.0 && rotation == 0.0 && offset == Vec3::zeros() {
        return Ok(frame.clone());
    }
    let c = frame.centroid;
    let n = frame.normal;
    let mut out = frame.clone();
    out.corners = frame
        .corners
        .iter()
        .map(|p| c + offset + rotate_about(&((p - c) * scale), &n, rotation))
        .collect();
    out.scale = frame.scale * scale;
    out.rotation = frame.rotation + rotation;
    out.offset = frame.offset + offset;
    out.refresh();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameQuality {
    /// Largest distance of a corner from the least-squares plane.
    pub planarity: f64,
    pub convex: bool,
    pub star: bool,
    /// Largest deviation of a turning angle about the centroid from `2*pi/K`.
    pub angle_residual: f64,
    /// Largest deviation of a corner radius from the mean radius.
    pub radius_residual: f64,
}

/// Signed angles from `V_k` to `V_{k+1}` about the frame normal.
fn turning_angles(frame: &PolygonFrame) -> Vec<f64> {
    let k = frame.k();
    let n = frame.normal;
    (0..k)
        .map(|i| {
            let a = frame.v(i);
            let b = frame.v((i + 1) % k);
            n.dot(&a.cross(&b)).atan2(a.dot(&b))
        })
        .collect()
}

pub fn frame_quality(frame: &PolygonFrame) -> FrameQuality {
    let k = frame.k();
    let (pc, pn, _) = fit_plane(&frame.corners);
    let planarity = frame.corners.iter().map(|p| pn.dot(&(p - pc)).abs()).fold(0.0, f64::max);
    let turns = turning_angles(frame);
    let total: f64 = turns.iter().sum();
    let star = turns.iter().all(|&a| a > 0.0) && (total - TAU).abs() < 1e-9;
    let n = frame.normal;
    let convex = star
        && (0..k).all(|i| {
            let a = frame.corners[i];
            let b = frame.corners[(i + 1) % k];
            let c = frame.corners[(i + 2) % k];
            n.dot(&(b - a).cross(&(c - b))) > 0.0
        });
    let ideal = TAU / k as f64;
    let angle_residual = turns.iter().map(|a| (a - ideal).abs()).fold(0.0, f64::max);
    let r = frame.mean_radius();
    let radius_residual = (0..k).map(|i| (frame.v(i).norm() - r).abs()).fold(0.0, f64::max);
    FrameQuality { planarity, convex, star, angle_residual, radius_residual }
}

/// Frame assignment options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameOptions {
    /// Even number of dual-map iterations applied to every non-quad frame; 0 disables.
    pub dual_iterations: usize,
    /// Maximum number of `regularize_dual(2)` rounds used to repair non-star frames.
    pub star_repair_rounds: usize,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { dual_iterations: 0, star_repair_rounds: 16 }
    }
}

/// One frame per face, vertex and edge, stored in that owner order.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSet {
    pub frames: Vec<PolygonFrame>,
    num_faces: usize,
    num_vertices: usize,
    /// Model bounding-box diagonal, the reference length for tolerances.
    pub diagonal: f64,
    /// Frames that needed a star repair during assignment.
    pub repairs: Vec<(Owner, StarRepair)>,
}

impl FrameSet {
    pub fn index(&self, owner: Owner) -> usize {
        match owner {
            Owner::Face(f) => f,
            Owner::Vertex(v) => self.num_faces + v,
            Owner::Edge(e) => self.num_faces + self.num_vertices + e,
        }
    }

    pub fn get(&self, owner: Owner) -> Option<&PolygonFrame> {
        self.frames.get(self.index(owner)).filter(|f| f.owner == owner)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn num_faces(&self) -> usize {
        self.num_faces
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn plane_tolerance(&self) -> f64 {
        PLANE_TOL * self.diagonal
    }

    pub fn to_json(&self) -> serde_json::Value {
        let records: Vec<FrameRecord> = self
            .frames
            .iter()
            .map(|f| FrameRecord {
                owner: f.owner,
                corners: f.corners.iter().map(arr3).collect(),
                scale: f.scale,
                rotation: f.rotation,
            })
            .collect();
        serde_json::json!({ "frames": records })
    }

    /// Load frames previously written by [`FrameSet::to_json`] for the same mesh.
    pub fn from_json(mesh: &HalfEdgeMesh, value: &serde_json::Value) -> Result<FrameSet, FrameError> {
        #[derive(Deserialize)]
        struct Doc {
            frames: Vec<FrameRecord>,
        }
        let doc: Doc = serde_json::from_value(value.clone()).map_err(|e| FrameError::Coverage(e.to_string()))?;
        let mut set = empty_set(mesh);
        let mut seen = vec![false; set.frames.len()];
        for r in doc.frames {
            let i = set.index(r.owner);
            let slot = set.frames.get_mut(i).filter(|f| f.owner == r.owner);
            let Some(slot) = slot else {
                return Err(FrameError::Coverage(format!("{:?} is not an element of the mesh", r.owner)));
            };
            if r.corners.len() != slot.halfedges.len() {
                return Err(FrameError::Coverage(format!(
                    "{:?} needs {} corners, got {}",
                    r.owner,
                    slot.halfedges.len(),
                    r.corners.len()
                )));
            }
            slot.corners = r.corners.iter().map(|c| vec3(*c)).collect();
            slot.scale = r.scale;
            slot.rotation = r.rotation;
            slot.refresh();
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(FrameError::Coverage(format!("no frame for {:?}", set.frames[i].owner)));
        }
        Ok(set)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FrameRecord {
    owner: Owner,
    corners: Vec<[f64; 3]>,
    scale: f64,
    rotation: f64,
}

fn empty_set(mesh: &HalfEdgeMesh) -> FrameSet {
    let frames = all_owners(mesh)
        .into_iter()
        .map(|o| {
            let hs = owner_halfedges(mesh, o);
            PolygonFrame::new(o, vec![Vec3::zeros(); hs.len()], hs)
        })
        .collect();
    FrameSet {
        frames,
        num_faces: mesh.num_faces(),
        num_vertices: mesh.num_vertices(),
        diagonal: bbox_diagonal(mesh.positions()),
        repairs: Vec::new(),
    }
}

/// Place the corners on a regular K-gon in the frame plane with the same
/// centroid and mean radius, starting in the direction of corner 0.
///
/// This is the last-resort repair for planarized frames that wind around
/// their centroid zero times (for instance a face made of two opposite cube
/// faces), where no number of dual steps produces a star polygon.
pub fn regular_reembed(frame: &PolygonFrame) -> Result<PolygonFrame, FrameError> {
    let n = frame.normal;
    let r = frame.mean_radius();
    let mut x = frame.v(0) - n * n.dot(&frame.v(0));
    if x.norm() <= 1e-12 * r {
        x = n.cross(&Vec3::x());
        if x.norm() < 0.5 {
            x = n.cross(&Vec3::y());
        }
    }
    if r.is_nan() || r <= 0.0 {
        return Err(FrameError::Degenerate(format!("{:?} has zero radius", frame.owner)));
    }
    let x = x.normalize();
    let y = n.cross(&x);
    let k = frame.k();
    let mut out = frame.clone();
    out.corners = (0..k)
        .map(|i| {
            let a = TAU * i as f64 / k as f64;
            frame.centroid + (x * a.cos() + y * a.sin()) * r
        })
        .collect();
    out.refresh();
    // Keep the chosen orientation even though the refreshed normal is now unambiguous.
    out.normal = n;
    Ok(out)
}

/// How a frame was modified after planarization to make it a star polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "repair", content = "rounds", rename_all = "snake_case")]
pub enum StarRepair {
    Dual(usize),
    RegularReembed,
}

fn check_rank(frame: &PolygonFrame) -> Result<(), FrameError> {
    let (_, _, ev) = fit_plane(&frame.corners);
    if ev[2] <= 0.0 || ev[1] <= 1e-20 * ev[2] {
        return Err(FrameError::Degenerate(format!("{:?} has zero area", frame.owner)));
    }
    Ok(())
}

/// Frames from one Doo-Sabin refinement; non-quad frames are planarized,
/// optionally dual-regularized, and repaired if they fail the star test.
pub fn assign_frames(mesh: &HalfEdgeMesh, opts: &FrameOptions) -> Result<FrameSet, FrameError> {
    let ds = doo_sabin_points(mesh);
    let mut set = empty_set(mesh);
    for frame in set.frames.iter_mut() {
        frame.corners = frame.halfedges.iter().map(|&h| ds[h]).collect();
        frame.refresh();
        check_rank(frame)?;
        if frame.k() == 4 {
            continue;
        }
        let mut f = planarize(frame)?;
        if opts.dual_iterations > 0 {
            f = regularize_dual(&f, opts.dual_iterations)?;
        }
        if !frame_quality(&f).star {
            let mut g = f.clone();
            let mut rounds = 0;
            while !frame_quality(&g).star && rounds < opts.star_repair_rounds {
                g = regularize_dual(&g, 2)?;
                rounds += 1;
            }
            if frame_quality(&g).star {
                set.repairs.push((frame.owner, StarRepair::Dual(rounds)));
                f = g;
            } else if opts.star_repair_rounds > 0 {
                set.repairs.push((frame.owner, StarRepair::RegularReembed));
                f = regular_reembed(&f)?;
            }
        }
        *frame = f;
    }
    Ok(set)
}

/// Frame corner index of half-edge `h` in each of the four frames it feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CornerSlots {
    pub face: usize,
    pub vertex: usize,
    /// Slot in the frame of `edge(h)`: 0 when `h` is even, 2 when odd.
    pub edge: usize,
    /// Slot in the frame of `edge(prev h)`: 3 or 1.
    pub prev_edge: usize,
}

/// Corner slots of every half-edge, consistent with [`owner_halfedges`].
pub fn corner_slots(mesh: &HalfEdgeMesh) -> Vec<CornerSlots> {
    let mut slots = vec![CornerSlots { face: 0, vertex: 0, edge: 0, prev_edge: 0 }; mesh.num_halfedges()];
    for f in 0..mesh.num_faces() {
        for (k, h) in mesh.face_halfedges(f).into_iter().enumerate() {
            slots[h].face = k;
        }
    }
    for v in 0..mesh.num_vertices() {
        for (k, h) in mesh.vertex_outgoing(v).into_iter().enumerate() {
            slots[h].vertex = k;
        }
    }
    for (h, s) in slots.iter_mut().enumerate() {
        s.edge = if h % 2 == 0 { 0 } else { 2 };
        // next(e) sits at slot 3 of e's frame and next(t) at slot 1.
        s.prev_edge = if mesh.prev(h).is_multiple_of(2) { 3 } else { 1 };
    }
    slots
}

#[cfg(test)]
mod tests;
